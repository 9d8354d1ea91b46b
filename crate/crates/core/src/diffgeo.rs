//! Finite-difference Levi-Civita calculus on `M`.
//!
//! Everything is computed in ambient coordinates: a tangent vector field is a
//! map from surface points to ambient vectors, and `∇_v X` is the tangential
//! part of the ambient derivative of `X` along a curve with velocity `v`.
//! Derivatives use central differences along [`tangent_curve`].

use crate::error::{Error, Result};
use crate::isoparametric::{tangent_curve, IsoparametricFamily, SurfacePoint};
use crate::linalg::{self, Matrix, Vector};
use crate::report::VerificationReport;
use crate::shape::{principal_projectors, DistributionData};
use crate::tolerances;

/// Central difference `(F(γ(h)) − F(γ(−h)))/2h` of a matrix-valued function
/// along the curve with `γ'(0) = v`. Not projected.
pub fn ambient_derivative<F>(family: &IsoparametricFamily, point: &SurfacePoint, v: &Vector, h: f64, f: F) -> Result<Matrix>
where
    F: Fn(&SurfacePoint) -> Result<Matrix>,
{
    let plus = tangent_curve(family, point, v, h)?;
    let minus = tangent_curve(family, point, v, -h)?;
    Ok((f(&plus)? - f(&minus)?) / (2.0 * h))
}

fn as_matrix(v: Vector) -> Matrix {
    let n = v.len();
    Matrix::from_column_slice(n, 1, v.as_slice())
}

/// `∇_v X` for a tangent vector field `X`.
pub fn covariant_derivative<F>(
    family: &IsoparametricFamily,
    point: &SurfacePoint,
    field: F,
    direction: &Vector,
    h: f64,
) -> Result<Vector>
where
    F: Fn(&SurfacePoint) -> Result<Vector>,
{
    if direction.iter().all(|c| *c == 0.0) {
        return Ok(Vector::zeros(point.ambient_dim()));
    }
    let d = ambient_derivative(family, point, direction, h, |p| field(p).map(as_matrix))?;
    Ok(point.project_tangent(&d.column(0).into_owned()))
}

/// The extension `y ↦ Π_{T_yM} u` of a fixed ambient vector.
pub fn projected_constant(u: &Vector) -> impl Fn(&SurfacePoint) -> Result<Vector> + '_ {
    move |p: &SurfacePoint| Ok(p.project_tangent(u))
}

/// A smooth orthonormal frame near a base point, adapted to `D_1..D_4`.
/// At a nearby point each block is the Löwdin orthonormalisation of the
/// projection of the base block onto the corresponding eigenspace, which is
/// also its Procrustes alignment to the base block.
#[derive(Debug, Clone)]
pub struct LocalFrameField {
    base: SurfacePoint,
    blocks: [Matrix; 4],
}

impl LocalFrameField {
    /// `blocks[k]` must be an orthonormal basis of `D_{k+1}` at `base`.
    pub fn new(base: SurfacePoint, blocks: [Matrix; 4]) -> Self {
        LocalFrameField { base, blocks }
    }

    pub fn principal(base: &SurfacePoint, data: &DistributionData) -> Self {
        Self::new(base.clone(), data.bases.clone())
    }

    pub fn base(&self) -> &SurfacePoint {
        &self.base
    }

    /// Frame at the base point, blocks concatenated.
    pub fn base_frame(&self) -> Matrix {
        let n = self.base.ambient_dim();
        linalg::hstack(n, &self.blocks.iter().collect::<Vec<_>>())
    }

    /// Distribution index (0-based) of every frame vector.
    pub fn labels(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(k, b)| std::iter::repeat_n(k, b.ncols()))
            .collect()
    }

    pub fn eval(&self, family: &IsoparametricFamily, point: &SurfacePoint) -> Matrix {
        if point.x == self.base.x {
            return self.base_frame();
        }
        let proj = principal_projectors(family, point);
        let n = point.ambient_dim();
        let blocks: Vec<Matrix> = (0..4)
            .map(|k| linalg::polar_orthonormal(&(&proj[k] * &self.blocks[k])))
            .collect();
        linalg::hstack(n, &blocks.iter().collect::<Vec<_>>())
    }
}

/// `ω_ijk = ⟨∇_{e_k} e_i, e_j⟩` at the base point of a frame field.
#[derive(Debug, Clone)]
pub struct ConnectionCoefficients {
    pub frame: Matrix,
    pub labels: Vec<usize>,
    dim: usize,
    omega: Vec<f64>,
    /// `∇_{e_k} e_i` as ambient vectors, indexed `[k]` with columns `i`.
    derivatives: Vec<Matrix>,
}

impl ConnectionCoefficients {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self, i: usize, j: usize, k: usize) -> f64 {
        self.omega[(i * self.dim + j) * self.dim + k]
    }

    /// `∇_{e_k} e_i`.
    pub fn nabla(&self, k: usize, i: usize) -> Vector {
        self.derivatives[k].column(i).into_owned()
    }

    /// `max |ω_ijk + ω_jik|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.omega(i, j, k) + self.omega(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// `max |(λ_i − λ_j)ω_ijk − (λ_i − λ_k)ω_ikj|` over all triples, and the
    /// largest `|ω_ijk|` with `λ_i = λ_k ≠ λ_j`.
    pub fn codazzi_residuals(&self, lambda: [f64; 4]) -> (f64, f64) {
        let n = self.dim;
        let lam = |i: usize| lambda[self.labels[i]];
        let mut general = 0.0f64;
        let mut special = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let r = (lam(i) - lam(j)) * self.omega(i, j, k) - (lam(i) - lam(k)) * self.omega(i, k, j);
                    general = general.max(r.abs());
                    if self.labels[i] == self.labels[k] && self.labels[i] != self.labels[j] {
                        special = special.max(self.omega(i, j, k).abs());
                    }
                }
            }
        }
        (general, special)
    }
}

pub fn connection_coefficients(
    family: &IsoparametricFamily,
    field: &LocalFrameField,
    h: f64,
) -> Result<ConnectionCoefficients> {
    let point = field.base();
    let frame = field.base_frame();
    let dim = frame.ncols();
    let proj = point.tangent_projector();
    let mut derivatives = Vec::with_capacity(dim);
    for k in 0..dim {
        let v = frame.column(k).into_owned();
        let d = ambient_derivative(family, point, &v, h, |p| Ok(field.eval(family, p)))?;
        derivatives.push(&proj * d);
    }
    let mut omega = vec![0.0; dim * dim * dim];
    for (k, d) in derivatives.iter().enumerate() {
        let coords = frame.transpose() * d;
        for i in 0..dim {
            for j in 0..dim {
                omega[(i * dim + j) * dim + k] = coords[(j, i)];
            }
        }
    }
    Ok(ConnectionCoefficients {
        frame,
        labels: field.labels(),
        dim,
        omega,
        derivatives,
    })
}

/// `[X, Y] = D_X Y − D_Y X`, projected onto `T_xM`.
pub fn lie_bracket<F, G>(family: &IsoparametricFamily, point: &SurfacePoint, x_field: F, y_field: G, h: f64) -> Result<Vector>
where
    F: Fn(&SurfacePoint) -> Result<Vector>,
    G: Fn(&SurfacePoint) -> Result<Vector>,
{
    let x = x_field(point)?;
    let y = y_field(point)?;
    let dxy = covariant_derivative(family, point, &y_field, &x, h)?;
    let dyx = covariant_derivative(family, point, &x_field, &y, h)?;
    Ok(dxy - dyx)
}

/// `(∇_v J)u = ∇_v(J ũ) − J ∇_v ũ` with `ũ` the projected-constant
/// extension of `u`.
pub fn covariant_derivative_of_j<J>(
    family: &IsoparametricFamily,
    point: &SurfacePoint,
    j_field: &J,
    v: &Vector,
    u: &Vector,
    h: f64,
) -> Result<Vector>
where
    J: Fn(&SurfacePoint) -> Result<Matrix>,
{
    let ju = covariant_derivative(family, point, |p| Ok(j_field(p)? * p.project_tangent(u)), v, h)?;
    let du = covariant_derivative(family, point, projected_constant(u), v, h)?;
    Ok(ju - j_field(point)? * du)
}

/// `N(X, Y)` evaluated twice.
#[derive(Debug, Clone)]
pub struct NijenhuisValue {
    /// `[JX, JY] − J[JX, Y] − J[X, JY] − [X, Y]` with projected-constant
    /// extensions.
    pub direct: Vector,
    /// `(∇_{JX}J)Y − (∇_{JY}J)X − J(∇_X J)Y + J(∇_Y J)X`.
    pub via_connection: Vector,
}

impl NijenhuisValue {
    pub fn discrepancy(&self) -> f64 {
        linalg::max_abs_vec(&(&self.direct - &self.via_connection))
    }
}

pub fn nijenhuis<J>(
    family: &IsoparametricFamily,
    point: &SurfacePoint,
    j_field: &J,
    x: &Vector,
    y: &Vector,
    h: f64,
) -> Result<NijenhuisValue>
where
    J: Fn(&SurfacePoint) -> Result<Matrix>,
{
    let j0 = j_field(point)?;
    let xt = projected_constant(x);
    let yt = projected_constant(y);
    let jx = |p: &SurfacePoint| Ok(j_field(p)? * p.project_tangent(x));
    let jy = |p: &SurfacePoint| Ok(j_field(p)? * p.project_tangent(y));

    let direct = lie_bracket(family, point, &jx, &jy, h)?
        - &j0 * lie_bracket(family, point, &jx, &yt, h)?
        - &j0 * lie_bracket(family, point, &xt, &jy, h)?
        - lie_bracket(family, point, &xt, &yt, h)?;

    let jxv = &j0 * x;
    let jyv = &j0 * y;
    let via_connection = covariant_derivative_of_j(family, point, j_field, &jxv, y, h)?
        - covariant_derivative_of_j(family, point, j_field, &jyv, x, h)?
        - &j0 * covariant_derivative_of_j(family, point, j_field, x, y, h)?
        + &j0 * covariant_derivative_of_j(family, point, j_field, y, x, h)?;

    let value = NijenhuisValue { direct, via_connection };
    let discrepancy = value.discrepancy();
    if discrepancy > tolerances::FD_CROSS_CHECK {
        return Err(Error::NumericalIntegrity {
            check: "nijenhuis.two_methods".into(),
            discrepancy,
            tolerance: tolerances::FD_CROSS_CHECK,
        });
    }
    Ok(value)
}

/// Metric compatibility and Codazzi at the base point of a frame field.
pub fn verify_connection(family: &IsoparametricFamily, field: &LocalFrameField, h: f64) -> Result<VerificationReport> {
    let coeffs = connection_coefficients(family, field, h)?;
    let (codazzi, special) = coeffs.codazzi_residuals(family.lambdas());
    let mut report = VerificationReport::new();
    report.below(
        "diffgeo.connection_antisymmetry",
        "ω_ijk = −ω_jik",
        coeffs.antisymmetry_residual(),
        tolerances::CONNECTION_ANTISYMMETRY,
    );
    report.below(
        "diffgeo.codazzi",
        "(λ_i−λ_j)ω_ijk = (λ_i−λ_k)ω_ikj",
        codazzi,
        tolerances::CODAZZI,
    );
    report.below(
        "diffgeo.codazzi_equal_curvature",
        "ω_ijk = 0 for λ_i = λ_k ≠ λ_j",
        special,
        tolerances::CODAZZI,
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{build_clifford_system, build_full_square_system, split_dual_subsystems, FullSquareFlavor};
    use crate::isoparametric::{normal_differential, sample_point};
    use crate::shape::{ambient_shape_operator, principal_decomposition, tangent_basis};
    use crate::tolerances::FD_STEP;

    fn family(m: usize, k: usize, theta: f64) -> IsoparametricFamily {
        IsoparametricFamily::new(build_clifford_system(m, k).unwrap(), theta).unwrap()
    }

    #[test]
    fn derivative_of_normal_is_minus_shape_operator() {
        let fam = family(3, 2, 0.3);
        let p = sample_point(&fam, 1).unwrap();
        let a = ambient_shape_operator(&fam, &p);
        let tb = tangent_basis(&p);
        for j in [0, 5, 13] {
            let v = tb.vectors.column(j).into_owned();
            let d = covariant_derivative(&fam, &p, |q: &SurfacePoint| Ok(q.xi.clone()), &v, FD_STEP).unwrap();
            assert!((d + &a * &v).amax() < 1e-6);
        }
    }

    #[test]
    fn projected_constant_matches_exact_formula() {
        // ∇_v(Π_T u) = −⟨u, x⟩ v − ⟨u, ξ⟩ dξ(v), tangential part.
        let fam = family(2, 2, 0.4);
        let p = sample_point(&fam, 2).unwrap();
        let tb = tangent_basis(&p);
        let u = Vector::from_fn(p.ambient_dim(), |i, _| (i as f64 * 0.7).sin());
        let v = tb.vectors.column(3).into_owned();
        let d = covariant_derivative(&fam, &p, projected_constant(&u), &v, FD_STEP).unwrap();
        let exact = p.project_tangent(&(-&v * u.dot(&p.x) - normal_differential(&fam, &p.x, &v) * u.dot(&p.xi)));
        assert!((d - exact).amax() < 1e-6);
    }

    #[test]
    fn zero_direction_gives_zero() {
        let fam = family(1, 3, 0.3);
        let p = sample_point(&fam, 0).unwrap();
        let d = covariant_derivative(&fam, &p, |q: &SurfacePoint| Ok(q.xi.clone()), &Vector::zeros(p.ambient_dim()), FD_STEP).unwrap();
        assert_eq!(d, Vector::zeros(p.ambient_dim()));
    }

    #[test]
    fn second_order_convergence() {
        let fam = family(3, 2, 0.3);
        let p = sample_point(&fam, 3).unwrap();
        let a = ambient_shape_operator(&fam, &p);
        let v = tangent_basis(&p).vectors.column(2).into_owned();
        let err = |h: f64| {
            let d = covariant_derivative(&fam, &p, |q: &SurfacePoint| Ok(q.xi.clone()), &v, h).unwrap();
            (d + &a * &v).amax()
        };
        let ratio = err(2e-2) / err(1e-2);
        assert!(ratio > 3.0, "ratio {ratio}");
    }

    #[test]
    fn frame_field_is_exact_at_base_and_continuous() {
        let fam = family(3, 2, 0.3);
        let p = sample_point(&fam, 4).unwrap();
        let d = principal_decomposition(&fam, &p).unwrap();
        let field = LocalFrameField::principal(&p, &d);
        assert_eq!(field.eval(&fam, &p), field.base_frame());
        let v = field.base_frame().column(0).into_owned();
        let dev = |h: f64| {
            let q = tangent_curve(&fam, &p, &v, h).unwrap();
            linalg::max_abs(&(field.eval(&fam, &q) - field.base_frame()))
        };
        let (a, b) = (dev(1e-3), dev(5e-4));
        assert!(a < 1e-2 && b < a && a / b > 1.5);
        let q = tangent_curve(&fam, &p, &v, 1e-3).unwrap();
        assert!(linalg::gram_residual(&field.eval(&fam, &q)) < 1e-12);
    }

    #[test]
    fn connection_identities() {
        for (m, k, theta) in [(3, 2, 0.3), (1, 3, 0.5), (2, 2, 0.2)] {
            let fam = family(m, k, theta);
            let p = sample_point(&fam, 5).unwrap();
            let d = principal_decomposition(&fam, &p).unwrap();
            let field = LocalFrameField::principal(&p, &d);
            let rep = verify_connection(&fam, &field, FD_STEP).unwrap();
            for c in &rep.checks {
                assert!(c.passed(), "m={m}: {} = {:e}", c.name, c.value);
            }
        }
    }

    #[test]
    fn bracket_identities() {
        let fam = family(3, 2, 0.3);
        let p = sample_point(&fam, 6).unwrap();
        let tb = tangent_basis(&p);
        let x = tb.vectors.column(1).into_owned();
        let y = tb.vectors.column(7).into_owned() + tb.vectors.column(2).into_owned() * 0.5;
        let xt = projected_constant(&x);
        let yt = projected_constant(&y);
        let xx = lie_bracket(&fam, &p, &xt, &xt, FD_STEP).unwrap();
        assert!(xx.amax() < 1e-8);
        let xy = lie_bracket(&fam, &p, &xt, &yt, FD_STEP).unwrap();
        let yx = lie_bracket(&fam, &p, &yt, &xt, FD_STEP).unwrap();
        assert!((&xy + &yx).amax() < 1e-8);

        // Torsion-free: the unprojected bracket has no normal part.
        let raw = ambient_derivative(&fam, &p, &x, FD_STEP, |q| Ok(as_matrix(q.project_tangent(&y))))
            .unwrap()
            .column(0)
            .into_owned()
            - ambient_derivative(&fam, &p, &y, FD_STEP, |q| Ok(as_matrix(q.project_tangent(&x))))
                .unwrap()
                .column(0)
                .into_owned();
        assert!(p.normal_component(&raw) < 5e-6);
        assert!((p.project_tangent(&raw) - xy).amax() < 5e-6);
    }

    #[test]
    fn nijenhuis_agrees_two_ways() {
        let full = build_full_square_system(FullSquareFlavor::NineOn16d).unwrap();
        let (sys, dual) = split_dual_subsystems(&full, 3).unwrap();
        let fam = IsoparametricFamily::new(sys, 0.3).unwrap();
        let p = sample_point(&fam, 8).unwrap();
        let c2 = (2.0 * fam.theta()).cos();
        let j_field = |q: &SurfacePoint| -> Result<Matrix> {
            let pr = principal_projectors(&fam, q);
            let qop = dual.combine(&dual.quadratic_forms(&q.x)) / c2;
            let r0 = &q.p_op;
            Ok(-(r0 * &pr[0]) - &qop * &pr[1] + r0 * &pr[2] + &qop * &pr[3])
        };
        let j0 = j_field(&p).unwrap();
        let proj = p.tangent_projector();
        assert!(linalg::max_abs(&(&j0 * &j0 + &proj)) < 1e-10);
        let tb = tangent_basis(&p);
        let x = tb.vectors.column(0).into_owned();
        let y = tb.vectors.column(4).into_owned();
        let n = nijenhuis(&fam, &p, &j_field, &x, &y, FD_STEP).unwrap();
        assert!(n.discrepancy() < 1e-4);
        let nxx = nijenhuis(&fam, &p, &j_field, &x, &x, FD_STEP).unwrap();
        assert!(nxx.direct.amax() < 1e-6);
        let nyx = nijenhuis(&fam, &p, &j_field, &y, &x, FD_STEP).unwrap();
        assert!((&n.direct + &nyx.direct).amax() < 1e-6);
    }
}
