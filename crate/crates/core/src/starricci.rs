//! `*`-Ricci curvature of a hypersurface of the unit sphere with an almost
//! Hermitian structure, and the symmetry / weakly `*`-Einstein criteria.

use crate::error::{Error, Result};
use crate::isoparametric::{IsoparametricFamily, SurfacePoint};
use crate::linalg::{self, max_abs, Matrix, Vector};
use crate::report::{Bound, CheckRecord, Status, VerificationReport};
use crate::shape::{ambient_shape_operator, tangent_basis, DistributionData};
use crate::tolerances;

/// `*Ric` in a tangent basis together with its trace.
#[derive(Debug, Clone)]
pub struct StarRicciForm {
    pub matrix: Matrix,
    pub scalar: f64,
}

impl StarRicciForm {
    fn new(matrix: Matrix) -> Self {
        let scalar = matrix.trace();
        StarRicciForm { matrix, scalar }
    }
}

/// `⟨X, Y⟩ − ⟨J A J A X, Y⟩`.
pub fn star_ricci_closed_form(family: &IsoparametricFamily, point: &SurfacePoint, j: &Matrix, x: &Vector, y: &Vector) -> f64 {
    let a = ambient_shape_operator(family, point);
    x.dot(y) - (j * &a * j * &a * x).dot(y)
}

/// Closed form as a matrix in the columns of `basis`; entry `(a, b)` is
/// `*Ric(e_a, e_b)`.
pub fn star_ricci_matrix(family: &IsoparametricFamily, point: &SurfacePoint, j: &Matrix, basis: &Matrix) -> StarRicciForm {
    let a = ambient_shape_operator(family, point);
    let k = basis.ncols();
    let m = Matrix::identity(k, k) - (basis.transpose() * j * &a * j * &a * basis).transpose();
    StarRicciForm::new(m)
}

/// Orthonormal basis `e_1..e_n, Je_1..Je_n` of the tangent space, built
/// greedily from the columns of `tangent`.
pub fn j_adapted_basis(tangent: &Matrix, j: &Matrix) -> Result<Matrix> {
    let rows = tangent.nrows();
    let dim = tangent.ncols();
    if dim % 2 != 0 {
        return Err(Error::Precondition(format!("odd tangent dimension {dim}")));
    }
    let mut first: Vec<Vector> = Vec::new();
    let mut second: Vec<Vector> = Vec::new();
    let mut used = vec![false; dim];
    for _ in 0..dim / 2 {
        let mut best: Option<(usize, Vector, f64)> = None;
        for (c, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut v = tangent.column(c).into_owned();
            for _ in 0..2 {
                for q in first.iter().chain(second.iter()) {
                    let s = q.dot(&v);
                    v.axpy(-s, q, 1.0);
                }
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|b| norm > b.2 + 1e-14) {
                best = Some((c, v, norm));
            }
        }
        let (c, v, norm) = best.expect("candidates remain");
        used[c] = true;
        let e = v / norm;
        let je = j * &e;
        let defect = (je.norm() - 1.0).abs().max(je.dot(&e).abs()).max(
            first
                .iter()
                .chain(second.iter())
                .map(|q| q.dot(&je).abs())
                .fold(0.0, f64::max),
        );
        if defect > 1e-8 {
            return Err(Error::Precondition(format!(
                "J is not an orthogonal complex structure on the tangent space (defect {defect:e})"
            )));
        }
        first.push(e);
        second.push(je);
    }
    let all: Vec<Vector> = first.into_iter().chain(second).collect();
    Ok(linalg::columns(rows, &all))
}

/// Intrinsic curvature from the Gauss equation in an orthonormal tangent
/// frame `E`: `R_abcd = δ_ac δ_bd − δ_ad δ_bc + S_ac S_bd − S_ad S_bc`
/// with `S = Eᵀ A_ξ E`. Indexed `((a * n + b) * n + c) * n + d`.
pub fn gauss_curvature(family: &IsoparametricFamily, point: &SurfacePoint, frame: &Matrix) -> Vec<f64> {
    let s = frame.transpose() * ambient_shape_operator(family, point) * frame;
    let n = frame.ncols();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut r = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    r[((a * n + b) * n + c) * n + d] = delta(a, c) * delta(b, d) - delta(a, d) * delta(b, c)
                        + s[(a, c)] * s[(b, d)]
                        - s[(a, d)] * s[(b, c)];
                }
            }
        }
    }
    r
}

/// `*Ric(X, Y) = Σ_i R(X, JY, e_i, Je_i)` from the full curvature tensor,
/// returned in the standard tangent basis of the point.
pub fn star_ricci_gauss_oracle(family: &IsoparametricFamily, point: &SurfacePoint, j: &Matrix) -> Result<StarRicciForm> {
    let tb = tangent_basis(point).vectors;
    let e = j_adapted_basis(&tb, j)?;
    let n = e.ncols();
    let half = n / 2;
    let r = gauss_curvature(family, point, &e);
    let jc = e.transpose() * j * &e;
    let mut ric = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                let w = jc[(c, b)];
                if w == 0.0 {
                    continue;
                }
                for i in 0..half {
                    acc += w * r[((a * n + c) * n + i) * n + i + half];
                }
            }
            ric[(a, b)] = acc;
        }
    }
    let t = e.transpose() * &tb;
    Ok(StarRicciForm::new(t.transpose() * ric * t))
}

/// Indicators of `*Ric` symmetry and of `JA_ξJ(E_λ) ⊆ E_λ`.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryOutcome {
    pub asymmetry: f64,
    pub invariance: f64,
    pub status: Status,
}

impl SymmetryOutcome {
    pub fn contradictory(&self) -> bool {
        self.status == Status::Fail
    }
}

pub fn symmetry_outcome(family: &IsoparametricFamily, point: &SurfacePoint, data: &DistributionData, j: &Matrix) -> SymmetryOutcome {
    let tb = tangent_basis(point).vectors;
    let ric = star_ricci_matrix(family, point, j, &tb).matrix;
    let asymmetry = max_abs(&(&ric - ric.transpose()));
    let a = ambient_shape_operator(family, point);
    let jaj = j * &a * j;
    let n = point.ambient_dim();
    let invariance = (0..4)
        .map(|k| max_abs(&((Matrix::identity(n, n) - data.projector(k)) * &jaj * &data.bases[k])))
        .fold(0.0, f64::max);
    let (pass, fail) = (tolerances::IFF_PASS, tolerances::IFF_FAIL);
    let holds = |v: f64| v < pass;
    let fails = |v: f64| v > fail;
    let status = if (holds(asymmetry) && holds(invariance)) || (fails(asymmetry) && fails(invariance)) {
        Status::Pass
    } else if (holds(asymmetry) && fails(invariance)) || (fails(asymmetry) && holds(invariance)) {
        Status::Fail
    } else {
        Status::Inconclusive
    };
    SymmetryOutcome {
        asymmetry,
        invariance,
        status,
    }
}

/// `*Ric` is symmetric iff `JA_ξJ` preserves every principal space.
pub fn symmetry_criterion(family: &IsoparametricFamily, point: &SurfacePoint, data: &DistributionData, j: &Matrix) -> VerificationReport {
    let out = symmetry_outcome(family, point, data, j);
    let mut rec = CheckRecord::new(
        "prop35.symmetry_iff",
        "*Ric symmetric ⟺ JAJ(E_λ) ⊆ E_λ",
        if out.contradictory() { 1.0 } else { 0.0 },
        Bound::Below(0.5),
    );
    rec.status = out.status;
    let mut report = VerificationReport::new();
    report.push(rec);
    report
}

/// Least-squares fit `*Ric ≈ ρ g`.
#[derive(Debug, Clone)]
pub struct WeaklyEinstein {
    pub rho: f64,
    pub residual: f64,
    pub report: VerificationReport,
}

impl WeaklyEinstein {
    pub fn is_weakly_einstein(&self) -> bool {
        self.residual < tolerances::IFF_PASS
    }
}

/// If `*Ric = ρ g` then with `c = 1 − ρ` either some `λ = 0` (`c = 0`) or
/// `J(E_λ) = E_{−c/λ}` with equal multiplicities.
pub fn weakly_star_einstein_check(family: &IsoparametricFamily, point: &SurfacePoint, data: &DistributionData, j: &Matrix) -> WeaklyEinstein {
    let tb = tangent_basis(point).vectors;
    let ric = star_ricci_matrix(family, point, j, &tb).matrix;
    let dim = ric.nrows();
    let rho = ric.trace() / dim as f64;
    let residual = max_abs(&(&ric - Matrix::identity(dim, dim) * rho));
    let mut report = VerificationReport::new();
    if residual >= tolerances::IFF_PASS {
        return WeaklyEinstein { rho, residual, report };
    }
    let c = 1.0 - rho;
    let lambda = data.eigenvalues;
    if c.abs() < tolerances::IFF_PASS {
        let min = lambda.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
        report.below("prop35.zero_curvature", "c = 0 ⟹ some λ = 0", min, tolerances::IFF_PASS);
        return WeaklyEinstein { rho, residual, report };
    }
    let mut curvature = 0.0f64;
    let mut subspace = 0.0f64;
    let mut mult = 0.0f64;
    for k in 0..4 {
        let target = -c / lambda[k];
        let (kk, gap) = lambda
            .iter()
            .enumerate()
            .map(|(i, l)| (i, (l - target).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("four curvatures");
        curvature = curvature.max(gap);
        let image = linalg::span_basis(&(j * &data.bases[k]), 1e-8);
        subspace = subspace.max(linalg::subspace_distance(&image, &data.bases[kk]));
        mult = mult.max((data.bases[k].ncols() as f64 - data.bases[kk].ncols() as f64).abs());
    }
    report.below("prop35.partner_curvature", "−c/λ is a principal curvature", curvature, tolerances::SPECTRUM);
    report.below("prop35.partner_space", "J(E_λ) = E_{−c/λ}", subspace, tolerances::SUBSPACE);
    report.below("prop35.partner_multiplicity", "dim E_λ = dim E_{−c/λ}", mult, 0.5);
    WeaklyEinstein { rho, residual, report }
}

/// `K = det A_ξ = (ρ − 1)^{l−1}` for weakly `*`-Einstein structures.
pub fn gauss_kronecker_check(family: &IsoparametricFamily, point: &SurfacePoint, rho: f64) -> (f64, VerificationReport) {
    let tb = tangent_basis(point).vectors;
    let s = tb.transpose() * ambient_shape_operator(family, point) * &tb;
    let k_det = s.clone().determinant();
    let lambda = family.lambdas();
    let k_eig: f64 = (0..4).map(|k| lambda[k].powi(family.distribution_dim(k) as i32)).product();
    let n = (tb.ncols() / 2) as i32;
    let expected = (rho - 1.0).powi(n);
    let mut report = VerificationReport::new();
    report.below(
        "prop35.kronecker_two_ways",
        "det A = ∏ λ_k^{m_k}",
        (k_det - k_eig).abs() / k_eig.abs(),
        1e-9,
    );
    report.below(
        "prop35.kronecker",
        "K = (ρ − 1)^{l−1}",
        (k_det - expected).abs() / expected.abs(),
        tolerances::GAUSS_KRONECKER,
    );
    (k_det, report)
}

/// `O J_0 Oᵀ` for a Haar-random rotation `O` of the tangent space: an
/// orthogonal complex structure that generically mixes all distributions.
pub fn random_complex_structure<R: rand::Rng + ?Sized>(j0: &Matrix, tangent: &Matrix, rng: &mut R) -> Matrix {
    let o = linalg::random_orthogonal(tangent.ncols(), rng);
    let rot = tangent * o * tangent.transpose();
    &rot * j0 * rot.transpose()
}

/// Swaps `D_1 ↔ D_3` with the orthogonal map `u` and rotates `D_2`, `D_4`
/// inside themselves with the standard complex structures of the given
/// bases. Needs `m_2` even.
pub fn partial_swap_structure(data: &DistributionData, u: &Matrix) -> Result<Matrix> {
    let m2 = data.bases[1].ncols();
    if m2 % 2 != 0 {
        return Err(Error::Domain(format!("D_2 has odd dimension {m2}")));
    }
    let [b1, b2, b3, b4] = &data.bases;
    let mut j0 = Matrix::zeros(m2, m2);
    for i in (0..m2).step_by(2) {
        j0[(i + 1, i)] = 1.0;
        j0[(i, i + 1)] = -1.0;
    }
    Ok(b3 * u * b1.transpose() - b1 * u.transpose() * b3.transpose() + b2 * &j0 * b2.transpose() + b4 * &j0 * b4.transpose())
}
