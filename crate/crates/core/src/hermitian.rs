//! Almost complex structures that swap `D_1 ↔ D_3` and `D_2 ↔ D_4`, their
//! fundamental forms, the nearly Kähler test and the Nijenhuis witness.

use crate::bundleiso::DualPair;
use crate::diffgeo::{self, connection_coefficients, LocalFrameField};
use crate::error::{Error, Result};
use crate::isoparametric::{IsoparametricFamily, SurfacePoint};
use crate::linalg::{self, max_abs, Matrix, Vector};
use crate::report::VerificationReport;
use crate::shape::{self, principal_projectors, DistributionData};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSwapMode {
    /// `−R_0` on `D_1`, `−Q` on `D_2`, `R_0` on `D_3`, `Q` on `D_4`.
    ClosedForm,
    /// Arbitrary fiber isometries `u: D_1 → D_3`, `w: D_2 → D_4`.
    GenericBlocks,
}

/// `J` at one point as an ambient operator that vanishes on `x` and `ξ`.
#[derive(Debug, Clone)]
pub struct PairSwapJ {
    pub mode: PairSwapMode,
    pub matrix: Matrix,
}

/// `Φ(X, Y) = ⟨JX, Y⟩` in a tangent basis.
#[derive(Debug, Clone)]
pub struct FundamentalForm {
    pub matrix: Matrix,
}

pub fn fundamental_form(j: &Matrix, basis: &Matrix) -> FundamentalForm {
    FundamentalForm {
        matrix: (j * basis).transpose() * basis,
    }
}

/// The closed-form structure of a full-square split, optionally with the
/// `D_1 ⊕ D_3` block rescaled: `J e_a = μ e_ā`, `J e_ā = −e_a/μ` where
/// `e_ā = −R_0 e_a`. With `μ = 1` this is the pair-swapping structure.
pub struct ClosedFormJ<'a> {
    pair: &'a DualPair,
    mu: f64,
}

impl<'a> ClosedFormJ<'a> {
    pub fn new(pair: &'a DualPair) -> Self {
        ClosedFormJ { pair, mu: 1.0 }
    }

    pub fn with_mu(pair: &'a DualPair, mu: f64) -> Result<Self> {
        if mu == 0.0 || !mu.is_finite() {
            return Err(Error::Domain(format!("μ must be a nonzero real, got {mu}")));
        }
        Ok(ClosedFormJ { pair, mu })
    }

    pub fn family(&self) -> &IsoparametricFamily {
        &self.pair.family
    }

    pub fn at(&self, point: &SurfacePoint) -> Matrix {
        let pr = principal_projectors(&self.pair.family, point);
        let q = self.pair.q_operator(&point.x);
        let r0 = &point.p_op;
        -(r0 * &pr[0]) * self.mu + r0 * &pr[2] / self.mu - &q * &pr[1] + &q * &pr[3]
    }

    pub fn field(&self) -> impl Fn(&SurfacePoint) -> Result<Matrix> + '_ {
        move |p: &SurfacePoint| Ok(self.at(p))
    }
}

pub fn build_closed_form_j(pair: &DualPair, point: &SurfacePoint) -> PairSwapJ {
    PairSwapJ {
        mode: PairSwapMode::ClosedForm,
        matrix: ClosedFormJ::new(pair).at(point),
    }
}

/// `J = B_3 u B_1ᵀ − B_1 uᵀ B_3ᵀ + B_4 w B_2ᵀ − B_2 wᵀ B_4ᵀ`, with `u` and `w`
/// given in the coordinates of the distribution bases.
pub fn build_generic_pairswap_j(data: &DistributionData, u: &Matrix, w: &Matrix) -> Result<PairSwapJ> {
    for (name, m, dim) in [("u", u, data.bases[0].ncols()), ("w", w, data.bases[1].ncols())] {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::Precondition(format!(
                "{name} is {}×{}, expected {dim}×{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        let res = linalg::gram_residual(m);
        if res > tolerances::GRAM {
            return Err(Error::Precondition(format!("{name} is not an isometry: residual {res:e}")));
        }
    }
    let [b1, b2, b3, b4] = &data.bases;
    let matrix = b3 * u * b1.transpose() - b1 * u.transpose() * b3.transpose() + b4 * w * b2.transpose()
        - b2 * w.transpose() * b4.transpose();
    Ok(PairSwapJ {
        mode: PairSwapMode::GenericBlocks,
        matrix,
    })
}

/// Coordinates `target_basisᵀ · M · source_basis` of an ambient operator.
pub fn fiber_coordinates(matrix: &Matrix, source: &Matrix, target: &Matrix) -> Matrix {
    target.transpose() * matrix * source
}

/// `J² = −1`, orthogonality, the distribution swap and the fundamental form
/// identities.
pub fn pair_swap_invariants(point: &SurfacePoint, data: &DistributionData, j: &Matrix) -> VerificationReport {
    let basis = shape::tangent_basis(point).vectors;
    let jb = j * &basis;
    let mut report = VerificationReport::new();
    report.below(
        "pairswap.square",
        "J² = −Id",
        max_abs(&(j * &jb + &basis)),
        tolerances::GRAM,
    );
    report.below(
        "pairswap.orthogonal",
        "⟨Ju, Jv⟩ = ⟨u, v⟩",
        max_abs(&(jb.transpose() * &jb - Matrix::identity(basis.ncols(), basis.ncols()))),
        tolerances::GRAM,
    );
    let swap = (0..4)
        .map(|k| {
            let image = linalg::span_basis(&(j * &data.bases[k]), 1e-8);
            linalg::subspace_distance(&image, &data.bases[(k + 2) % 4])
        })
        .fold(0.0, f64::max);
    report.below("pairswap.swap", "J(D_k) = D_{k+2}", swap, tolerances::SUBSPACE);
    let phi = fundamental_form(j, &basis);
    report.below(
        "pairswap.form_skew",
        "Φ + Φᵀ = 0",
        max_abs(&(&phi.matrix + phi.matrix.transpose())),
        tolerances::GRAM,
    );
    let jc = basis.transpose() * &jb;
    report.below(
        "pairswap.form_invariant",
        "Φ(JX, JY) = Φ(X, Y)",
        max_abs(&(jc.transpose() * &phi.matrix * &jc - &phi.matrix)),
        tolerances::GRAM,
    );
    report
}

/// `G_ijk = (∇_{e_i}Φ)(e_j, e_k)` in an orthonormal frame adapted to the
/// principal distributions, computed two ways.
#[derive(Debug, Clone)]
pub struct NearlyKahlerData {
    /// From connection coefficients and the derivative of `Φ(e_j, e_k)`;
    /// indexed `(i * n + j) * n + k`.
    pub g: Vec<f64>,
    /// `G_iij = ⟨(∇_{e_i}J)e_i, e_j⟩` with projected-constant extensions;
    /// indexed `i * n + j`.
    pub g_iij_direct: Vec<f64>,
    pub dim: usize,
    pub codazzi: f64,
}

impl NearlyKahlerData {
    pub fn g(&self, i: usize, j: usize, k: usize) -> f64 {
        self.g[(i * self.dim + j) * self.dim + k]
    }

    pub fn max_g_iij(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.g(i, i, j).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_g_iij_direct(&self) -> f64 {
        self.g_iij_direct.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `max |G_ijk + G_jik|`.
    pub fn skew_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.g(i, j, k) + self.g(j, i, k)).abs());
                }
            }
        }
        worst
    }

    pub fn method_discrepancy(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (self.g(i, i, j) - self.g_iij_direct[i * n + j]).abs())
            .fold(0.0, f64::max)
    }
}

pub fn nearly_kahler_data<J>(
    family: &IsoparametricFamily,
    point: &SurfacePoint,
    data: &DistributionData,
    j_field: &J,
    h: f64,
) -> Result<NearlyKahlerData>
where
    J: Fn(&SurfacePoint) -> Result<Matrix>,
{
    let field = LocalFrameField::principal(point, data);
    let coeffs = connection_coefficients(family, &field, h)?;
    let (codazzi, _) = coeffs.codazzi_residuals(family.lambdas());
    let frame = field.base_frame();
    let n = frame.ncols();
    let j0 = j_field(point)?;

    let mut g = vec![0.0; n * n * n];
    for i in 0..n {
        let ei = frame.column(i).into_owned();
        let dphi = diffgeo::ambient_derivative(family, point, &ei, h, |q| {
            let f = field.eval(family, q);
            Ok((j_field(q)? * &f).transpose() * &f)
        })?;
        let nabla: Vec<Vector> = (0..n).map(|j| coeffs.nabla(i, j)).collect();
        for j in 0..n {
            let j_nabla_j = &j0 * &nabla[j];
            let j_ej = &j0 * frame.column(j);
            for k in 0..n {
                let ek = frame.column(k);
                let value = dphi[(j, k)] - j_nabla_j.dot(&ek) - j_ej.dot(&nabla[k]);
                g[(i * n + j) * n + k] = value;
            }
        }
    }

    let mut g_iij_direct = vec![0.0; n * n];
    for i in 0..n {
        let ei = frame.column(i).into_owned();
        let d = diffgeo::covariant_derivative_of_j(family, point, j_field, &ei, &ei, h)?;
        for j in 0..n {
            g_iij_direct[i * n + j] = d.dot(&frame.column(j));
        }
    }

    let out = NearlyKahlerData {
        g,
        g_iij_direct,
        dim: n,
        codazzi,
    };
    let discrepancy = out.method_discrepancy();
    if discrepancy > tolerances::FD_CROSS_CHECK {
        return Err(Error::NumericalIntegrity {
            check: "nearly_kahler.two_methods".into(),
            discrepancy,
            tolerance: tolerances::FD_CROSS_CHECK,
        });
    }
    Ok(out)
}

/// `(∇_X Φ)(X, Y) = 0` for all `X, Y`.
pub fn nearly_kahler_check<J>(
    family: &IsoparametricFamily,
    point: &SurfacePoint,
    data: &DistributionData,
    j_field: &J,
    h: f64,
) -> Result<VerificationReport>
where
    J: Fn(&SurfacePoint) -> Result<Matrix>,
{
    let nk = nearly_kahler_data(family, point, data, j_field, h)?;
    let tol = tolerances::NEARLY_KAHLER;
    let mut report = VerificationReport::new();
    report.below("nearly_kahler.g_iij", "(∇_{e_i}Φ)(e_i, e_j) = 0", nk.max_g_iij(), tol);
    report.below(
        "nearly_kahler.g_iij_direct",
        "⟨(∇_{e_i}J)e_i, e_j⟩ = 0",
        nk.max_g_iij_direct(),
        tol,
    );
    report.below(
        "nearly_kahler.total_skew",
        "G_ijk + G_jik = 0",
        nk.skew_defect(),
        tol,
    );
    report.below(
        "nearly_kahler.methods_agree",
        "two computations of G_iij",
        nk.method_discrepancy(),
        tolerances::FD_CROSS_CHECK,
    );
    report.below(
        "nearly_kahler.codazzi",
        "(λ_i−λ_j)ω_ijk = (λ_i−λ_k)ω_ikj",
        nk.codazzi,
        tolerances::CODAZZI,
    );
    Ok(report)
}

/// `⟨N(e_1, e_2), e_3⟩` for `e_a = R_a φ_1` on an `m = 3` family.
#[derive(Debug, Clone, Copy)]
pub struct Witness {
    pub numeric: f64,
    pub closed_form: f64,
    /// `⟨R_0R_1R_2R_3 x, x⟩`, which lies in `[−cos 2θ, cos 2θ]`.
    pub factor: f64,
    /// `⟨R_0R_1R_2R_3 φ_1, φ_1⟩`.
    pub factor_at_focal: f64,
}

impl Witness {
    pub fn relative_error(&self) -> f64 {
        (self.numeric - self.closed_form).abs() / self.closed_form.abs().max(f64::MIN_POSITIVE)
    }
}

/// Scale `2/(sin θ cos 2θ)` of the witness.
pub fn witness_scale(theta: f64) -> f64 {
    2.0 / (theta.sin() * (2.0 * theta).cos())
}

/// Closed-form part of the witness; no differentiation.
pub fn witness_closed_form(family: &IsoparametricFamily, point: &SurfacePoint, data: &DistributionData) -> Result<(f64, f64, f64)> {
    if family.system().m() != 3 {
        return Err(Error::Domain(format!(
            "the witness is defined for m = 3, got m = {}",
            family.system().m()
        )));
    }
    let r = &data.frame.r;
    let omega = &r[0] * &r[1] * &r[2] * &r[3];
    let factor = (&omega * &point.x).dot(&point.x);
    let at_focal = (&omega * &point.focal.phi[0]).dot(&point.focal.phi[0]);
    Ok((-witness_scale(family.theta()) * factor, factor, at_focal))
}

pub fn prop31_witness(cf: &ClosedFormJ, point: &SurfacePoint, data: &DistributionData, h: f64) -> Result<Witness> {
    let family = cf.family();
    let (closed_form, factor, factor_at_focal) = witness_closed_form(family, point, data)?;
    let e = shape::gauge_d1(point, &data.frame);
    let e1 = e.column(0).into_owned();
    let e2 = e.column(1).into_owned();
    let e3 = e.column(2).into_owned();
    let n = diffgeo::nijenhuis(family, point, &cf.field(), &e1, &e2, h)?;
    Ok(Witness {
        numeric: n.direct.dot(&e3),
        closed_form,
        factor,
        factor_at_focal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{build_full_square_system, FullSquareFlavor, FullSquareSystem};
    use crate::isoparametric::sample_point;
    use crate::seed::rng_from_seed;
    use crate::shape::principal_decomposition;
    use crate::tolerances::FD_STEP;

    fn pair(flavor: FullSquareFlavor, m: usize, theta: f64) -> DualPair {
        let full: FullSquareSystem = build_full_square_system(flavor).unwrap();
        DualPair::new(&full, m, theta).unwrap()
    }

    fn all_pairs(theta: f64) -> Vec<DualPair> {
        vec![
            pair(FullSquareFlavor::FiveOn8d, 1, theta),
            pair(FullSquareFlavor::NineOn16d, 1, theta),
            pair(FullSquareFlavor::NineOn16d, 2, theta),
            pair(FullSquareFlavor::NineOn16d, 3, theta),
        ]
    }

    fn assert_all(rep: &VerificationReport) {
        for c in &rep.checks {
            assert!(c.passed(), "{} = {:e}", c.name, c.value);
        }
    }

    #[test]
    fn closed_form_is_pair_swapping() {
        for pr in all_pairs(0.3) {
            let p = sample_point(&pr.family, 1).unwrap();
            let d = principal_decomposition(&pr.family, &p).unwrap();
            let j = build_closed_form_j(&pr, &p);
            assert_all(&pair_swap_invariants(&p, &d, &j.matrix));
        }
    }

    #[test]
    fn generic_blocks() {
        let pr = pair(FullSquareFlavor::NineOn16d, 3, 0.3);
        let p = sample_point(&pr.family, 2).unwrap();
        let d = principal_decomposition(&pr.family, &p).unwrap();
        let mut rng = rng_from_seed(1);
        let u = linalg::random_orthogonal(3, &mut rng);
        let w = linalg::random_orthogonal(4, &mut rng);
        let j = build_generic_pairswap_j(&d, &u, &w).unwrap();
        assert_all(&pair_swap_invariants(&p, &d, &j.matrix));

        let u = fiber_coordinates(&p.p_op, &d.bases[0], &d.bases[2]);
        let w = fiber_coordinates(&pr.q_operator(&p.x), &d.bases[1], &d.bases[3]);
        let j = build_generic_pairswap_j(&d, &u, &w).unwrap();
        assert_all(&pair_swap_invariants(&p, &d, &j.matrix));

        let bad = Matrix::identity(4, 4) * 0.5;
        assert!(matches!(
            build_generic_pairswap_j(&d, &u, &bad),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn principal_frame_diagonal_vanishes_for_all_pairs() {
        for pr in all_pairs(0.3) {
            let p = sample_point(&pr.family, 3).unwrap();
            let d = principal_decomposition(&pr.family, &p).unwrap();
            let cf = ClosedFormJ::new(&pr);
            let rep = nearly_kahler_check(&pr.family, &p, &d, &cf.field(), FD_STEP).unwrap();
            for name in [
                "nearly_kahler.g_iij",
                "nearly_kahler.g_iij_direct",
                "nearly_kahler.methods_agree",
                "nearly_kahler.codazzi",
            ] {
                let c = rep.get(name).unwrap();
                assert!(c.passed(), "{name} = {:e}", c.value);
            }
        }
    }

    #[test]
    fn mixed_distribution_terms_do_not_vanish() {
        // G_iij = 0 in a principal frame does not polarise: for X with
        // components in two distributions (∇_X J)X is of order one.
        let pr = pair(FullSquareFlavor::NineOn16d, 3, 0.3);
        let p = sample_point(&pr.family, 3).unwrap();
        let d = principal_decomposition(&pr.family, &p).unwrap();
        let cf = ClosedFormJ::new(&pr);
        let x = (d.bases[0].column(0) + d.bases[1].column(0)) / 2f64.sqrt();
        let v = diffgeo::covariant_derivative_of_j(&pr.family, &p, &cf.field(), &x, &x, FD_STEP).unwrap();
        assert!(v.norm() > 1e-2);
        let nk = nearly_kahler_data(&pr.family, &p, &d, &cf.field(), FD_STEP).unwrap();
        assert!(nk.skew_defect() > 1e-2);
        let rep = nearly_kahler_check(&pr.family, &p, &d, &cf.field(), FD_STEP).unwrap();
        assert!(!rep.get("nearly_kahler.total_skew").unwrap().passed());
    }

    #[test]
    fn witness_matches_closed_form() {
        let pr = pair(FullSquareFlavor::NineOn16d, 3, 0.3);
        for seed in 0..3 {
            let p = sample_point(&pr.family, seed).unwrap();
            let d = principal_decomposition(&pr.family, &p).unwrap();
            let mut values = Vec::new();
            for mu in [0.5, 1.0, 2.0] {
                let cf = ClosedFormJ::with_mu(&pr, mu).unwrap();
                let w = prop31_witness(&cf, &p, &d, FD_STEP).unwrap();
                assert!(w.relative_error() < 1e-3, "seed {seed} μ {mu}: {w:?}");
                values.push(w.numeric);
            }
            assert!((values[0] - values[2]).abs() < 1e-5 * values[1].abs().max(1.0));
            let w = prop31_witness(&ClosedFormJ::new(&pr), &p, &d, FD_STEP).unwrap();
            assert!(w.factor.abs() <= (0.6f64).cos() + 1e-12);
            assert!((w.factor - w.factor_at_focal * (0.6f64).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_zero_mu() {
        let pr = pair(FullSquareFlavor::NineOn16d, 3, 0.3);
        assert!(ClosedFormJ::with_mu(&pr, 0.0).is_err());
    }
}
