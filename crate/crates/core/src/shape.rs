//! Shape operator, principal distributions `D_1..D_4` and the Clifford frame
//! `R_0 = P, R_1, …, R_m`.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::isoparametric::{normal_jacobian, IsoparametricFamily, SurfacePoint};
use crate::linalg::{self, max_abs, Matrix, Vector};
use crate::report::VerificationReport;
use crate::tolerances;

/// Orthonormal basis of `{x, ξ}^⊥`, stored as the columns of an ambient
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBasis {
    pub vectors: Matrix,
}

impl TangentBasis {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Deterministic completion of `{x, ξ}` by pivoted Gram–Schmidt over the
/// standard basis.
pub fn tangent_basis(point: &SurfacePoint) -> TangentBasis {
    let n = point.ambient_dim();
    let normal = linalg::columns(n, &[point.x.clone(), point.xi.clone()]);
    let full = linalg::complete_basis(&normal);
    TangentBasis {
        vectors: full.columns(2, n - 2).into_owned(),
    }
}

/// Shape operator `A_ξ` as an ambient matrix: `−Π_T · Dξ · Π_T`. It vanishes
/// on `x` and `ξ` and is symmetric.
pub fn ambient_shape_operator(family: &IsoparametricFamily, point: &SurfacePoint) -> Matrix {
    let proj = point.tangent_projector();
    -(&proj * normal_jacobian(family, &point.x) * &proj)
}

/// Matrix of `A_ξ` in a tangent basis.
#[derive(Debug, Clone)]
pub struct ShapeOperator {
    pub matrix: Matrix,
}

pub fn shape_operator(family: &IsoparametricFamily, point: &SurfacePoint, basis: &TangentBasis) -> ShapeOperator {
    let b = &basis.vectors;
    let mut matrix = -(b.transpose() * normal_jacobian(family, &point.x) * b);
    // Dξ is symmetric analytically; symmetrise the rounding.
    matrix = (&matrix + matrix.transpose()) * 0.5;
    ShapeOperator { matrix }
}

/// Ambient orthogonal projectors onto `D_1..D_4` from Lagrange interpolation
/// in the shape operator: `Π_k = Π_T ∏_{j≠k} (A − λ_j)/(λ_k − λ_j)`. These are
/// smooth in the point and need no eigensolver.
pub fn principal_projectors(family: &IsoparametricFamily, point: &SurfacePoint) -> [Matrix; 4] {
    let a = ambient_shape_operator(family, point);
    let proj = point.tangent_projector();
    principal_projectors_from(&a, &proj, family.lambdas())
}

pub(crate) fn principal_projectors_from(a: &Matrix, proj: &Matrix, lambda: [f64; 4]) -> [Matrix; 4] {
    let n = a.nrows();
    let id = Matrix::identity(n, n);
    std::array::from_fn(|k| {
        let mut acc = proj.clone();
        for (j, lj) in lambda.iter().enumerate() {
            if j != k {
                acc = acc * (a - &id * *lj) / (lambda[k] - lj);
            }
        }
        acc
    })
}

/// `(R_0, …, R_m) = (P_0, …, P_m) A` with `A ∈ SO(m+1)` and `R_0 = P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordFrame {
    pub a: Matrix,
    pub r: Vec<Matrix>,
}

impl CliffordFrame {
    fn from_rotation(family: &IsoparametricFamily, a: Matrix) -> Self {
        let r = (0..a.ncols())
            .map(|j| family.system().combine(&a.column(j).into_owned()))
            .collect();
        CliffordFrame { a, r }
    }

    /// `‖R_0 − P‖_max`, `max_a ‖R_aR_0 + R_0R_a‖_max` and the Clifford
    /// relations among the `R_a`.
    pub fn residuals(&self, point: &SurfacePoint) -> (f64, f64, f64) {
        let n = point.ambient_dim();
        let id = Matrix::identity(n, n);
        let r0 = max_abs(&(&self.r[0] - &point.p_op));
        let mut anti = 0.0f64;
        let mut rel = 0.0f64;
        for (i, ri) in self.r.iter().enumerate() {
            if i > 0 {
                anti = anti.max(max_abs(&(ri * &self.r[0] + &self.r[0] * ri)));
            }
            rel = rel.max(max_abs(&(ri - ri.transpose())));
            rel = rel.max(max_abs(&(ri * ri - &id)));
        }
        (r0, anti, rel)
    }
}

fn fix_orientation(mut a: Matrix) -> Matrix {
    if a.determinant() < 0.0 {
        let last = a.ncols() - 1;
        let col = -a.column(last);
        a.set_column(last, &col);
    }
    a
}

/// Pointwise frame: the unit coefficient vector of `P` completed by pivoted
/// Gram–Schmidt over the standard basis of `R^{m+1}`.
pub fn clifford_frame(family: &IsoparametricFamily, point: &SurfacePoint) -> CliffordFrame {
    let a0 = &point.coeffs / point.coeffs.norm();
    let a = linalg::complete_basis(&linalg::columns(a0.len(), &[a0]));
    CliffordFrame::from_rotation(family, fix_orientation(a))
}

/// Frame at a nearby point, aligned to a reference rotation by Procrustes so
/// that it varies smoothly along curves.
pub fn aligned_clifford_frame(family: &IsoparametricFamily, point: &SurfacePoint, reference: &Matrix) -> CliffordFrame {
    let k = reference.nrows();
    let a0 = &point.coeffs / point.coeffs.norm();
    let comp = Matrix::identity(k, k) - &a0 * a0.transpose();
    let rest = linalg::polar_orthonormal(&(comp * reference.columns(1, k - 1)));
    let a = linalg::hstack(k, &[&linalg::columns(k, &[a0]), &rest]);
    CliffordFrame::from_rotation(family, a)
}

/// Orthonormal bases of `D_1..D_4`, the computed principal curvatures and
/// the Clifford frame at a point.
#[derive(Debug, Clone)]
pub struct DistributionData {
    pub bases: [Matrix; 4],
    pub eigenvalues: [f64; 4],
    pub frame: CliffordFrame,
}

impl DistributionData {
    pub fn projector(&self, k: usize) -> Matrix {
        linalg::projector(&self.bases[k])
    }
}

/// Eigen-decomposition of the shape operator with nearest-`λ_k` grouping.
pub fn principal_decomposition(family: &IsoparametricFamily, point: &SurfacePoint) -> Result<DistributionData> {
    let basis = tangent_basis(point);
    let shape = shape_operator(family, point, &basis);
    let eig = shape.matrix.symmetric_eigen();
    let lambda = family.lambdas();
    let mut groups: [Vec<usize>; 4] = Default::default();
    let mut sums = [0.0; 4];
    for (idx, &mu) in eig.eigenvalues.iter().enumerate() {
        let (k, dist) = lambda
            .iter()
            .enumerate()
            .map(|(k, l)| (k, (mu - l).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("four principal curvatures");
        if dist > tolerances::CLUSTER_GAP {
            return Err(Error::Degenerate(format!(
                "eigenvalue {mu} is {dist:e} away from the nearest principal curvature {}",
                lambda[k]
            )));
        }
        groups[k].push(idx);
        sums[k] += mu;
    }
    for (k, g) in groups.iter().enumerate() {
        if g.len() != family.distribution_dim(k) {
            return Err(Error::Degenerate(format!(
                "D_{} has {} eigenvectors, expected {}",
                k + 1,
                g.len(),
                family.distribution_dim(k)
            )));
        }
    }
    let n = point.ambient_dim();
    let bases = std::array::from_fn(|k| {
        let cols: Vec<Vector> = groups[k]
            .iter()
            .map(|&i| &basis.vectors * eig.eigenvectors.column(i))
            .collect();
        linalg::orthonormalize(&linalg::columns(n, &cols), 1e-8)
    });
    let eigenvalues = std::array::from_fn(|k| sums[k] / groups[k].len() as f64);
    Ok(DistributionData {
        bases,
        eigenvalues,
        frame: clifford_frame(family, point),
    })
}

/// `e_a = R_a φ_1`, a basis of `D_1`.
pub fn gauge_d1(point: &SurfacePoint, frame: &CliffordFrame) -> Matrix {
    let phi1 = &point.focal.phi[0];
    let cols: Vec<Vector> = frame.r.iter().skip(1).map(|r| r * phi1).collect();
    linalg::columns(point.ambient_dim(), &cols)
}

/// `e_ā = −R_0 e_a = −R_a φ_3`, a basis of `D_3`.
pub fn gauge_d3(point: &SurfacePoint, frame: &CliffordFrame) -> Matrix {
    -(&frame.r[0] * gauge_d1(point, frame))
}

/// `dφ_k(v) = v cos t_k + dξ(v) sin t_k` on the whole tangent space, as an
/// ambient matrix.
fn focal_differential(family: &IsoparametricFamily, point: &SurfacePoint, k: usize) -> Matrix {
    let n = point.ambient_dim();
    let (s, c) = (family.theta() + k as f64 * FRAC_PI_4).sin_cos();
    let proj = point.tangent_projector();
    (Matrix::identity(n, n) * c + normal_jacobian(family, &point.x) * s) * proj
}

/// Normal-space decompositions of the focal submanifolds at `φ_k(x)`:
/// `N_{φ_k(x)} M_± = D_k ⊕ span{ξ_k}` and `T_{φ_k(x)} M_± = ⊕_{j≠k} D_j`.
pub fn verify_lemma21(family: &IsoparametricFamily, point: &SurfacePoint, data: &DistributionData) -> VerificationReport {
    let n = point.ambient_dim();
    let tb = tangent_basis(point);
    let mut report = VerificationReport::new();
    let tol = tolerances::SUBSPACE;
    for k in 0..4 {
        let dk = &data.bases[k];
        let xi_k = &point.focal.xi[k];
        let phi_k = &point.focal.phi[k];
        let others: Vec<&Matrix> = (0..4).filter(|&j| j != k).map(|j| &data.bases[j]).collect();
        let others = linalg::hstack(n, &others);

        let dphi = focal_differential(family, point, k);
        let kernel = linalg::spectral_norm(&(&dphi * dk));
        let image = linalg::span_basis(&(&dphi * &tb.vectors), 1e-6);
        let tangent = linalg::subspace_distance(&image, &others);

        let normal = linalg::hstack(n, &[dk, &linalg::columns(n, &[xi_k.clone()])]);
        let mut orth = linalg::max_abs_vec(&(dk.transpose() * xi_k));
        orth = orth.max(max_abs(&(normal.transpose() * &others)));
        orth = orth.max(linalg::max_abs_vec(&(normal.transpose() * phi_k)));
        let dims = (normal.ncols() + image.ncols() + 1) as f64 - n as f64;

        report.below(&format!("lemma21.d{}_perp_xi{}", k + 1, k + 1), "D_k ⟂ ξ_k", orth, tol);
        report.below(&format!("lemma21.dphi{}_kernel", k + 1), "dφ_k vanishes on D_k", kernel, tol);
        report.below(
            &format!("lemma21.focal_tangent{}", k + 1),
            "T_{φ_k}M_± = ⊕_{j≠k} D_j",
            tangent,
            tol,
        );
        report.below(
            &format!("lemma21.dimension{}", k + 1),
            "dim D_k + 1 + dim T_{φ_k}M_± = 2l",
            dims.abs(),
            0.5,
        );
    }

    // On M_+ the normal space is framed by the Clifford matrices.
    for k in [0usize, 2] {
        let p = &point.focal.phi[k];
        let frame: Vec<Vector> = family.system().matrices().iter().map(|pi| pi * p).collect();
        let frame = linalg::columns(n, &frame);
        let normal = linalg::hstack(n, &[&data.bases[k], &linalg::columns(n, &[point.focal.xi[k].clone()])]);
        report.below(
            &format!("lemma21.clifford_normal_frame{}", k + 1),
            "{P_i φ} orthonormal",
            linalg::gram_residual(&frame),
            tolerances::CLIFFORD,
        );
        report.below(
            &format!("lemma21.clifford_normal_span{}", k + 1),
            "span{P_i φ} = D_k ⊕ span{ξ_k}",
            linalg::subspace_distance(&frame, &normal),
            tol,
        );
    }
    report.below(
        "lemma21.xi1_is_minus_r0_phi1",
        "⟨ξ_1, R_0 φ_1⟩ = −1",
        ((&data.frame.r[0] * &point.focal.phi[0]).dot(&point.focal.xi[0]) + 1.0).abs(),
        tolerances::POINTWISE,
    );
    report
}

/// `(2/sin 2θ)⟨R_a x, v⟩ = (1/sin θ)⟨v, e_a⟩ + (1/cos θ)⟨v, e_ā⟩` with
/// `e_a = R_a φ_1`, `e_ā = −R_0 R_a φ_1`.
pub fn maurer_cartan_check(
    family: &IsoparametricFamily,
    point: &SurfacePoint,
    data: &DistributionData,
    v: &Vector,
) -> VerificationReport {
    let theta = family.theta();
    let e = gauge_d1(point, &data.frame);
    let ebar = gauge_d3(point, &data.frame);
    let mut worst = 0.0f64;
    for a in 1..data.frame.r.len() {
        let lhs = 2.0 / (2.0 * theta).sin() * (&data.frame.r[a] * &point.x).dot(v);
        let rhs = e.column(a - 1).dot(v) / theta.sin() + ebar.column(a - 1).dot(v) / theta.cos();
        worst = worst.max((lhs - rhs).abs());
    }
    let mut report = VerificationReport::new();
    report.below("maurer_cartan.tau_a0", "τ_a0 = ω^a/sinθ + ω^ā/cosθ", worst, 1e-9);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_clifford_system;
    use crate::isoparametric::{normal_differential, sample_point};
    use std::f64::consts::{FRAC_PI_8, SQRT_2};

    fn family(m: usize, k: usize, theta: f64) -> IsoparametricFamily {
        IsoparametricFamily::new(build_clifford_system(m, k).unwrap(), theta).unwrap()
    }

    #[test]
    fn tangent_basis_examples() {
        let fam = family(3, 2, 0.3);
        let p = sample_point(&fam, 0).unwrap();
        let tb = tangent_basis(&p);
        assert_eq!(tb.dim(), 14);
        assert!(linalg::gram_residual(&tb.vectors) < 1e-12);
        assert!(linalg::max_abs_vec(&(tb.vectors.transpose() * &p.x)) < 1e-12);
        assert!(linalg::max_abs_vec(&(tb.vectors.transpose() * &p.xi)) < 1e-12);
        assert_eq!(tangent_basis(&p), tb);
    }

    #[test]
    fn spectrum_at_pi_over_8() {
        let fam = family(3, 2, FRAC_PI_8);
        let p = sample_point(&fam, 4).unwrap();
        let shape = shape_operator(&fam, &p, &tangent_basis(&p));
        assert!(max_abs(&(&shape.matrix - shape.matrix.transpose())) < 1e-12);
        let mut eig: Vec<f64> = shape.matrix.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let expected = [1.0 + SQRT_2, SQRT_2 - 1.0, 1.0 - SQRT_2, -(1.0 + SQRT_2)];
        let mults = [3, 4, 3, 4];
        let mut idx = 0;
        for (value, mult) in expected.iter().zip(mults) {
            for _ in 0..mult {
                assert!((eig[idx] - value).abs() < 1e-8, "{} vs {}", eig[idx], value);
                idx += 1;
            }
        }
    }

    #[test]
    fn decomposition_dims_and_products() {
        let fam = family(3, 2, 0.3);
        let p = sample_point(&fam, 1).unwrap();
        let d = principal_decomposition(&fam, &p).unwrap();
        let dims: Vec<usize> = d.bases.iter().map(|b| b.ncols()).collect();
        assert_eq!(dims, vec![3, 4, 3, 4]);
        assert!((d.eigenvalues[0] * d.eigenvalues[2] + 1.0).abs() < 1e-10);
        assert!((d.eigenvalues[1] * d.eigenvalues[3] + 1.0).abs() < 1e-10);
        let all = linalg::hstack(16, &[&d.bases[0], &d.bases[1], &d.bases[2], &d.bases[3]]);
        assert!(linalg::gram_residual(&all) < 1e-10);
        let a = ambient_shape_operator(&fam, &p);
        for k in 0..4 {
            let res = &a * &d.bases[k] - &d.bases[k] * fam.lambdas()[k];
            assert!(max_abs(&res) < 1e-8);
        }
    }

    #[test]
    fn eigen_and_span_characterisations_agree() {
        let fam = family(3, 2, 0.3);
        for seed in 0..5 {
            let p = sample_point(&fam, seed).unwrap();
            let d = principal_decomposition(&fam, &p).unwrap();
            let e1 = linalg::orthonormalize(&gauge_d1(&p, &d.frame), 1e-10);
            let e3 = linalg::orthonormalize(&gauge_d3(&p, &d.frame), 1e-10);
            assert!(linalg::subspace_distance(&e1, &d.bases[0]) < 1e-8);
            assert!(linalg::subspace_distance(&e3, &d.bases[2]) < 1e-8);
            assert!(linalg::gram_residual(&gauge_d1(&p, &d.frame)) < 1e-10);
        }
    }

    #[test]
    fn lagrange_projectors_match_eigenspaces() {
        let fam = family(2, 2, 0.35);
        let p = sample_point(&fam, 7).unwrap();
        let d = principal_decomposition(&fam, &p).unwrap();
        let proj = principal_projectors(&fam, &p);
        for k in 0..4 {
            assert!(max_abs(&(&proj[k] - d.projector(k))) < 1e-9);
        }
    }

    #[test]
    fn frame_consistency() {
        let fam = family(4, 2, 0.25);
        let p = sample_point(&fam, 3).unwrap();
        let f = clifford_frame(&fam, &p);
        let (r0, anti, rel) = f.residuals(&p);
        assert!(r0 < 1e-12 && anti < 1e-12 && rel < 1e-12, "{r0} {anti} {rel}");
        assert!(linalg::gram_residual(&f.a) < 1e-12);
        assert!((f.a.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lemma21_holds() {
        for (m, k) in [(1, 3), (3, 2), (5, 1)] {
            let fam = family(m, k, 0.3);
            let p = sample_point(&fam, 11).unwrap();
            let d = principal_decomposition(&fam, &p).unwrap();
            let rep = verify_lemma21(&fam, &p, &d);
            for c in &rep.checks {
                assert!(c.passed(), "m={m}: {} = {:e}", c.name, c.value);
            }
            assert_eq!(d.bases[0].ncols() + 1, fam.system().matrices().len());
        }
    }

    #[test]
    fn maurer_cartan_examples() {
        let fam = family(3, 2, 0.3);
        let p = sample_point(&fam, 2).unwrap();
        let d = principal_decomposition(&fam, &p).unwrap();
        let theta = fam.theta();
        let e = gauge_d1(&p, &d.frame);
        let ebar = gauge_d3(&p, &d.frame);
        for a in 1..=3 {
            let lhs = |v: Vector| 2.0 / (2.0 * theta).sin() * (&d.frame.r[a] * &p.x).dot(&v);
            assert!((lhs(e.column(a - 1).into_owned()) - 1.0 / theta.sin()).abs() < 1e-9);
            assert!((lhs(ebar.column(a - 1).into_owned()) - 1.0 / theta.cos()).abs() < 1e-9);
            for j in 0..4 {
                assert!(lhs(d.bases[1].column(j).into_owned()).abs() < 1e-9);
            }
        }
        let tb = tangent_basis(&p);
        for j in 0..tb.dim() {
            let rep = maurer_cartan_check(&fam, &p, &d, &tb.vectors.column(j).into_owned());
            assert!(rep.all_passed());
        }
    }

    #[test]
    fn normal_differential_matches_jacobian() {
        let fam = family(3, 2, 0.3);
        let p = sample_point(&fam, 9).unwrap();
        let tb = tangent_basis(&p);
        let jac = normal_jacobian(&fam, &p.x);
        for j in 0..tb.dim() {
            let v = tb.vectors.column(j).into_owned();
            assert!((normal_differential(&fam, &p.x, &v) - &jac * &v).amax() < 1e-13);
        }
    }
}
