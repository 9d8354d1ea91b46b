//! Fiberwise isometries between principal distributions: `D_1 → D_3` via
//! `P`, `D_2 → D_4` via the dual operator `Q`, the splitting of `E_±(P)`, and
//! the isomorphism `σ̃ : D_1 ⊕ D_2 → D_1 ⊕ D_4` for odd `m`.

use std::f64::consts::SQRT_2;

use crate::clifford::{split_dual_subsystems, CliffordSystem, FullSquareSystem};
use crate::error::{Error, Result};
use crate::isoparametric::{tangent_curve, IsoparametricFamily, SurfacePoint};
use crate::linalg::{self, max_abs, Matrix, Vector};
use crate::report::VerificationReport;
use crate::shape::{principal_decomposition, principal_projectors, DistributionData};
use crate::tolerances;

/// An ambient operator restricted to a source fiber.
#[derive(Debug, Clone)]
pub struct FiberIsomorphism {
    pub source: String,
    pub target: String,
    pub matrix: Matrix,
    pub source_basis: Matrix,
    pub target_basis: Matrix,
}

impl FiberIsomorphism {
    pub fn image(&self) -> Matrix {
        &self.matrix * &self.source_basis
    }

    /// `‖(MB)ᵀ(MB) − I‖_max` for the orthonormal source basis `B`.
    pub fn gram_residual(&self) -> f64 {
        linalg::gram_residual(&self.image())
    }

    /// Subspace distance between the image and the target fiber.
    pub fn image_residual(&self) -> f64 {
        let image = linalg::span_basis(&self.image(), 1e-8);
        linalg::subspace_distance(&image, &self.target_basis)
    }

    pub fn report(&self, prefix: &str, anchor: &str) -> VerificationReport {
        let mut report = VerificationReport::new();
        report.below(&format!("{prefix}.isometry"), anchor, self.gram_residual(), tolerances::GRAM);
        report.below(&format!("{prefix}.image"), anchor, self.image_residual(), tolerances::SUBSPACE);
        report
    }
}

/// `R_0 = P` restricted to `D_1`.
pub fn iso_d1_d3(data: &DistributionData) -> FiberIsomorphism {
    FiberIsomorphism {
        source: "D1".into(),
        target: "D3".into(),
        matrix: data.frame.r[0].clone(),
        source_basis: data.bases[0].clone(),
        target_basis: data.bases[2].clone(),
    }
}

/// `max_a |R_0 R_a φ_1 − R_a φ_3|`.
pub fn d1_d3_frame_residual(point: &SurfacePoint, data: &DistributionData) -> f64 {
    let r0 = &data.frame.r[0];
    data.frame
        .r
        .iter()
        .skip(1)
        .map(|ra| linalg::max_abs_vec(&(r0 * ra * &point.focal.phi[0] - ra * &point.focal.phi[2])))
        .fold(0.0, f64::max)
}

/// `(1/cos 2θ) Σ ⟨P_j x, x⟩ P_j` over the given matrices.
pub fn dual_operator(system: &CliffordSystem, theta: f64, x: &Vector) -> Matrix {
    system.combine(&system.quadratic_forms(x)) / (2.0 * theta).cos()
}

/// The same sum over the first `count` matrices of the system only.
pub fn truncated_dual_operator(system: &CliffordSystem, theta: f64, x: &Vector, count: usize) -> Matrix {
    let n = x.len();
    let mut acc = Matrix::zeros(n, n);
    for p in system.matrices().iter().take(count) {
        acc += p * (p * x).dot(x);
    }
    acc / (2.0 * theta).cos()
}

/// `Q` for a point of the family built on the first `m + 1` matrices of a
/// full-square system, together with the family of the complementary
/// subsystem at `π/4 − θ`.
pub struct DualPair {
    pub family: IsoparametricFamily,
    pub dual_family: IsoparametricFamily,
}

impl DualPair {
    pub fn new(full: &FullSquareSystem, m: usize, theta: f64) -> Result<Self> {
        let (sys, comp) = split_dual_subsystems(full, m)?;
        let family = IsoparametricFamily::new(sys, theta)?;
        let dual_family = family.dual(comp)?;
        Ok(DualPair { family, dual_family })
    }

    pub fn q_operator(&self, x: &Vector) -> Matrix {
        dual_operator(self.dual_family.system(), self.family.theta(), x)
    }
}

/// `Q` restricted to `D_2`, with the dual-family correspondences.
pub fn iso_d2_d4_dual(pair: &DualPair, point: &SurfacePoint, data: &DistributionData) -> Result<(FiberIsomorphism, VerificationReport)> {
    let x = &point.x;
    let q = pair.q_operator(x);
    let n = x.len();
    let iso = FiberIsomorphism {
        source: "D2".into(),
        target: "D4".into(),
        matrix: q.clone(),
        source_basis: data.bases[1].clone(),
        target_basis: data.bases[3].clone(),
    };
    let mut report = iso.report("cor24.q", "Q: D_2 → D_4");
    report.below(
        "cor24.q_involution",
        "Q² = I",
        max_abs(&(&q * &q - Matrix::identity(n, n))),
        tolerances::GRAM,
    );
    let back = &q * iso.image() - &data.bases[1];
    report.below("cor24.q_roundtrip", "Q ∘ Q = id on D_2", max_abs(&back), tolerances::GRAM);

    let dual = &pair.dual_family;
    report.below(
        "cor24.dual_level",
        "f'(x) = cos 4θ'",
        dual.level_residual(x),
        tolerances::LEVEL,
    );
    let dual_point = SurfacePoint::new(dual, x.clone())?;
    let dual_data = principal_decomposition(dual, &dual_point)?;
    let spectrum = (0..4)
        .map(|k| (data.eigenvalues[k] + dual_data.eigenvalues[3 - k]).abs())
        .fold(0.0, f64::max);
    report.below("cor24.dual_spectrum", "λ_k = −λ'_{5−k}", spectrum, tolerances::SPECTRUM);
    let corr = linalg::subspace_distance(&data.bases[1], &dual_data.bases[2])
        .max(linalg::subspace_distance(&data.bases[3], &dual_data.bases[0]));
    report.below("cor24.dual_distributions", "D_2 = D'_3, D_4 = D'_1", corr, tolerances::SUBSPACE);
    Ok((iso, report))
}

/// Bases of the eigenspaces `E_±(P)` and the summands of their splittings.
#[derive(Debug, Clone)]
pub struct EigenSplit {
    pub plus_projector: Matrix,
    pub minus_projector: Matrix,
    pub plus_basis: Matrix,
    pub minus_basis: Matrix,
}

pub fn eigen_split(point: &SurfacePoint, data: &DistributionData) -> (EigenSplit, VerificationReport) {
    let n = point.ambient_dim();
    let id = Matrix::identity(n, n);
    let p = &data.frame.r[0];
    let plus_projector = (&id + p) * 0.5;
    let minus_projector = (&id - p) * 0.5;
    let eig = p.clone().symmetric_eigen();
    let pick = |sign: f64| {
        let cols: Vec<Vector> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, v)| (*v - sign).abs() < 1e-6)
            .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
            .collect();
        linalg::columns(n, &cols)
    };
    let split = EigenSplit {
        plus_projector,
        minus_projector,
        plus_basis: pick(1.0),
        minus_basis: pick(-1.0),
    };

    let phi = linalg::columns(n, &[point.focal.phi[0].clone()]);
    let mut report = VerificationReport::new();
    let l = n / 2;
    let dims = (split.plus_basis.ncols() as f64 - l as f64)
        .abs()
        .max((split.minus_basis.ncols() as f64 - l as f64).abs());
    report.below("split.dimension", "dim E_±(P) = l", dims, 0.5);
    for (sign, name, target, extra) in [
        (1.0, "plus", &split.plus_basis, &data.bases[1]),
        (-1.0, "minus", &split.minus_basis, &data.bases[3]),
    ] {
        let op = (&id + p * sign) / SQRT_2;
        let summands = [&op * &phi, &op * &data.bases[0], extra.clone()];
        let mut pairwise = 0.0f64;
        for i in 0..3 {
            for j in (i + 1)..3 {
                pairwise = pairwise.max(max_abs(&(summands[i].transpose() * &summands[j])));
            }
        }
        let each = summands.iter().map(linalg::gram_residual).fold(0.0, f64::max);
        let total = linalg::hstack(n, &summands.iter().collect::<Vec<_>>());
        let span = linalg::subspace_distance(&linalg::span_basis(&total, 1e-8), target);
        report.below(&format!("split.{name}_orthogonal"), "summands pairwise orthogonal", pairwise.max(each), tolerances::GRAM);
        report.below(&format!("split.{name}_span"), "E_±(P) = three summands", span, tolerances::SUBSPACE);
    }

    let op = (&id + p) / SQRT_2;
    let d2 = &data.bases[1];
    let inside = max_abs(&((&id - p) * d2));
    let perp = max_abs(&(d2.transpose() * (&op * &data.bases[0]))).max(linalg::max_abs_vec(&(d2.transpose() * (&op * &point.focal.phi[0]))));
    report.below("split.d2_in_e_plus", "D_2 ⊂ E_+(P)", inside, tolerances::SUBSPACE);
    report.below("split.d2_perp", "D_2 ⟂ (I+P)Σ_Pφ_1, (I+P)φ_1", perp, tolerances::SUBSPACE);
    report.below(
        "split.xi2",
        "ξ_2 = −((I+P)/√2)φ_1",
        linalg::max_abs_vec(&(&op * &point.focal.phi[0] + &point.focal.xi[1])),
        tolerances::POINTWISE,
    );
    (split, report)
}

/// Coefficients `V(a) = (−a_1, a_0, −a_3, a_2, …)` of a nowhere-vanishing
/// tangent field on an odd-dimensional sphere.
pub fn sphere_section(a: &Vector) -> Result<Vector> {
    if a.len() % 2 != 0 {
        return Err(Error::Domain(format!(
            "no pairing of {} coordinates: m must be odd",
            a.len()
        )));
    }
    let mut v = Vector::zeros(a.len());
    for i in (0..a.len()).step_by(2) {
        v[i] = -a[i + 1];
        v[i + 1] = a[i];
    }
    Ok(v)
}

/// `R_1 = Σ V_i(a) P_i` with `a` the coefficients of `P(x)`.
pub fn global_section_r1(family: &IsoparametricFamily, point: &SurfacePoint) -> Result<Matrix> {
    let v = sphere_section(&point.coeffs)?;
    Ok(family.system().combine(&v))
}

/// `σ = ρ_−⁻¹ R_1 ρ_+` and its modification `σ̃`, as ambient operators.
#[derive(Debug, Clone)]
pub struct SigmaMaps {
    pub sigma: Matrix,
    pub sigma_tilde: Matrix,
    /// `R_1 φ_1`.
    pub pivot: Vector,
}

/// Builds `σ` and `σ̃` from the ambient projectors onto `D_1, D_2, D_4`.
pub fn sigma_operators(point: &SurfacePoint, projectors: &[Matrix; 4], r1: &Matrix) -> Result<SigmaMaps> {
    let p = &point.p_op;
    let anti = max_abs(&(r1 * p + p * r1));
    if anti > tolerances::CLIFFORD * 10.0 {
        return Err(Error::Precondition(format!(
            "R_1 does not anticommute with P: residual {anti:e}"
        )));
    }
    let n = point.ambient_dim();
    let id = Matrix::identity(n, n);
    let phi = &point.focal.phi[0];
    let pi_s = &projectors[0] + phi * phi.transpose();
    let rho_plus = (&id + p) / SQRT_2 * &pi_s + &projectors[1];
    let rho_minus_inv = &pi_s * SQRT_2 + &projectors[3];
    let sigma = rho_minus_inv * r1 * rho_plus;
    let pivot = r1 * phi;
    let pivot_proj = &pivot * pivot.transpose();
    let sigma_tilde = &sigma * (&projectors[0] - &pivot_proj + &projectors[1]) + &pivot_proj;
    Ok(SigmaMaps { sigma, sigma_tilde, pivot })
}

pub fn sigma_map(point: &SurfacePoint, data: &DistributionData, r1: &Matrix) -> Result<(SigmaMaps, VerificationReport)> {
    let projectors: [Matrix; 4] = std::array::from_fn(|k| data.projector(k));
    let maps = sigma_operators(point, &projectors, r1)?;
    let n = point.ambient_dim();
    let phi = &point.focal.phi[0];
    let mut report = VerificationReport::new();
    report.below(
        "thm13.sigma_phi",
        "σ(φ_1) = R_1φ_1, σ(R_1φ_1) = φ_1",
        linalg::max_abs_vec(&(&maps.sigma * phi - &maps.pivot)).max(linalg::max_abs_vec(&(&maps.sigma * &maps.pivot - phi))),
        tolerances::POINTWISE,
    );
    let source = linalg::hstack(n, &[&data.bases[0], &data.bases[1]]);
    let target = linalg::hstack(n, &[&data.bases[0], &data.bases[3]]);
    let iso = FiberIsomorphism {
        source: "D1+D2".into(),
        target: "D1+D4".into(),
        matrix: maps.sigma_tilde.clone(),
        source_basis: source,
        target_basis: target,
    };
    report.merge(&iso.report("thm13.sigma_tilde", "σ̃: D_1⊕D_2 ≅ D_1⊕D_4"));
    report.below(
        "thm13.sigma_tilde_pivot",
        "σ̃(R_1φ_1) = R_1φ_1",
        linalg::max_abs_vec(&(&maps.sigma_tilde * &maps.pivot - &maps.pivot)),
        tolerances::POINTWISE,
    );
    let d10 = linalg::orthonormalize(
        &((Matrix::identity(n, n) - &maps.pivot * maps.pivot.transpose()) * &data.bases[0]),
        1e-6,
    );
    let rest = linalg::hstack(n, &[&d10, &data.bases[1]]);
    report.below(
        "thm13.sigma_tilde_agrees",
        "σ̃ = σ on D_1⁰ ⊕ D_2",
        max_abs(&((&maps.sigma_tilde - &maps.sigma) * &rest)),
        tolerances::POINTWISE,
    );
    let image = linalg::span_basis(&(&maps.sigma * &rest), 1e-8);
    let target0 = linalg::hstack(n, &[&d10, &data.bases[3]]);
    report.below(
        "thm13.sigma_restricted",
        "σ: D_1⁰⊕D_2 ≅ D_1⁰⊕D_4",
        linalg::subspace_distance(&image, &target0),
        tolerances::SUBSPACE,
    );
    Ok((maps, report))
}

/// Walks `steps` steps of length `dt` from `start`, each along the unit
/// tangential part of `direction`.
pub fn sample_path(family: &IsoparametricFamily, start: &SurfacePoint, direction: &Vector, steps: usize, dt: f64) -> Result<Vec<SurfacePoint>> {
    let mut path = vec![start.clone()];
    for _ in 0..steps {
        let last = path.last().expect("non-empty path");
        let v = last.project_tangent(direction);
        let norm = v.norm();
        if norm < 1e-8 {
            return Err(Error::Degenerate("path direction became normal".into()));
        }
        path.push(tangent_curve(family, last, &(v / norm), dt)?);
    }
    Ok(path)
}

/// Checks that `σ̃` built from the global section varies without jumps
/// along a path: the largest consecutive change is at most ten times the
/// median change, and the fitted Lipschitz constant is reported.
pub fn continuity_check(family: &IsoparametricFamily, path: &[SurfacePoint]) -> Result<VerificationReport> {
    let mut ops = Vec::with_capacity(path.len());
    for p in path {
        let r1 = global_section_r1(family, p)?;
        ops.push(sigma_operators(p, &principal_projectors(family, p), &r1)?.sigma_tilde);
    }
    let mut diffs = Vec::new();
    let mut lipschitz = 0.0f64;
    for i in 1..ops.len() {
        let d = max_abs(&(&ops[i] - &ops[i - 1]));
        let dx = (&path[i].x - &path[i - 1].x).norm();
        if dx > 0.0 {
            lipschitz = lipschitz.max(d / dx);
        }
        diffs.push(d);
    }
    let mut report = VerificationReport::new();
    let (worst, at) = diffs
        .iter()
        .enumerate()
        .fold((0.0f64, 0usize), |acc, (i, d)| if *d > acc.0 { (*d, i) } else { acc });
    let mut sorted = diffs.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.is_empty() { 0.0 } else { sorted[sorted.len() / 2] };
    let jump = if worst == 0.0 { 0.0 } else { worst / median };
    report.below(
        "thm13.continuity_jump_ratio",
        "σ̃ continuous along paths",
        jump,
        10.0 + f64::EPSILON,
    );
    report.below("thm13.continuity_lipschitz", "σ̃ continuous along paths", lipschitz, 1e3);
    if jump > 10.0 {
        report.below(
            &format!("thm13.continuity_jump_at_{}", at + 1),
            "σ̃ continuous along paths",
            jump,
            10.0,
        );
    }
    Ok(report)
}
