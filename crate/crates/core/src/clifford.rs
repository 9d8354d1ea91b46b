//! Symmetric Clifford systems `P_0, …, P_m` on `R^{2l}`.
//!
//! Skew modules of `Cl_{m-1}` are realised by left multiplication in the
//! Cayley–Dickson algebras (complex numbers, quaternions, octonions) and
//! extended past seven generators with the period-8 tensor construction.
//! A skew module `E_1, …, E_{m-1}` on `R^l` is then doubled into the
//! symmetric system
//!
//! ```text
//! P_0(u, v) = (u, -v),   P_1(u, v) = (v, u),   P_{1+i}(u, v) = (E_i v, -E_i u).
//! ```

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, Matrix, Vector};
use crate::report::VerificationReport;
use crate::tolerances;

/// Dimension of the irreducible module of `Cl_{m-1}`.
pub fn delta(m: usize) -> Result<usize> {
    const TABLE: [usize; 8] = [1, 2, 4, 4, 8, 8, 8, 8];
    if m < 1 {
        return Err(Error::Domain(format!("delta(m) needs m >= 1, got {m}")));
    }
    let period = (m - 1) / 8;
    Ok(TABLE[(m - 1) % 8] * 16usize.pow(period as u32))
}

/// Anticommuting skew-symmetric orthogonal matrices `E_1, …, E_n` on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewRepresentation {
    pub dim: usize,
    pub generators: Vec<Matrix>,
}

impl SkewRepresentation {
    pub fn count(&self) -> usize {
        self.generators.len()
    }

    /// `max_{i,j} ‖E_iE_j + E_jE_i + 2δ_ij I‖_max`, together with the
    /// skew-symmetry residual.
    pub fn relation_residual(&self) -> f64 {
        let id = Matrix::identity(self.dim, self.dim);
        let mut worst = 0.0f64;
        for (i, ei) in self.generators.iter().enumerate() {
            worst = worst.max(max_abs(&(ei + ei.transpose())));
            for (j, ej) in self.generators.iter().enumerate().skip(i) {
                let mut ac = ei * ej + ej * ei;
                if i == j {
                    ac += &id * 2.0;
                }
                worst = worst.max(max_abs(&ac));
            }
        }
        worst
    }
}

// Cayley–Dickson product on R^{2^k}: (a, b)(c, d) = (ac - d̄b, da + bc̄).
fn cd_conj(x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().map(|v| -v).collect();
    out[0] = x[0];
    out
}

fn cd_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![x[0] * y[0]];
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let ac = cd_mul(a, c);
    let db = cd_mul(&cd_conj(d), b);
    let da = cd_mul(d, a);
    let bc = cd_mul(b, &cd_conj(c));
    let mut out = Vec::with_capacity(n);
    out.extend(ac.iter().zip(&db).map(|(p, q)| p - q));
    out.extend(da.iter().zip(&bc).map(|(p, q)| p + q));
    out
}

/// Matrix of left multiplication by the basis unit `e_unit` in the
/// Cayley–Dickson algebra of dimension `dim`.
fn left_multiplication(dim: usize, unit: usize) -> Matrix {
    let mut e = vec![0.0; dim];
    e[unit] = 1.0;
    let mut m = Matrix::zeros(dim, dim);
    for j in 0..dim {
        let mut ej = vec![0.0; dim];
        ej[j] = 1.0;
        let prod = cd_mul(&e, &ej);
        for (i, v) in prod.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Doubles a skew module into the symmetric system described in the module
/// docs.
fn double(generators: &[Matrix], l: usize) -> Vec<Matrix> {
    let id = Matrix::identity(l, l);
    let zero = Matrix::zeros(l, l);
    let mut out = Vec::with_capacity(generators.len() + 2);
    out.push(linalg::block_diag(&id, &(-&id)));
    let mut p1 = Matrix::zeros(2 * l, 2 * l);
    p1.view_mut((0, l), (l, l)).copy_from(&id);
    p1.view_mut((l, 0), (l, l)).copy_from(&id);
    out.push(p1);
    for e in generators {
        let mut p = Matrix::zeros(2 * l, 2 * l);
        p.view_mut((0, 0), (l, l)).copy_from(&zero);
        p.view_mut((0, l), (l, l)).copy_from(e);
        p.view_mut((l, 0), (l, l)).copy_from(&(-e));
        out.push(p);
    }
    out
}

/// Eight anticommuting skew generators on `R^16`, `G_i = P_0 P_i` for the
/// octonionic symmetric system.
fn sixteen_dim_generators() -> Vec<Matrix> {
    let oct: Vec<Matrix> = (1..8).map(|u| left_multiplication(8, u)).collect();
    let sym = double(&oct, 8);
    (1..9).map(|i| &sym[0] * &sym[i]).collect()
}

/// Irreducible skew module of `Cl_n`, of dimension `delta(n + 1)`.
fn irreducible_generators(n: usize) -> (usize, Vec<Matrix>) {
    match n {
        0 => (1, Vec::new()),
        1 => (2, vec![left_multiplication(2, 1)]),
        2 | 3 => (4, (1..=n).map(|u| left_multiplication(4, u)).collect()),
        4..=7 => (8, (1..=n).map(|u| left_multiplication(8, u)).collect()),
        _ => {
            let (dim, base) = irreducible_generators(n - 8);
            let g = sixteen_dim_generators();
            let omega = g.iter().skip(1).fold(g[0].clone(), |acc, gi| acc * gi);
            let id = Matrix::identity(dim, dim);
            let mut gens: Vec<Matrix> = base.iter().map(|e| linalg::kron(e, &omega)).collect();
            gens.extend(g.iter().map(|gi| linalg::kron(&id, gi)));
            (16 * dim, gens)
        }
    }
}

/// Skew module with `generator_count` generators on `multiplicity` copies of
/// the irreducible module.
pub fn build_skew_representation(generator_count: usize, multiplicity: usize) -> Result<SkewRepresentation> {
    if multiplicity < 1 {
        return Err(Error::Domain("multiplicity must be at least 1".into()));
    }
    let (dim, base) = irreducible_generators(generator_count);
    let id = Matrix::identity(multiplicity, multiplicity);
    Ok(SkewRepresentation {
        dim: dim * multiplicity,
        generators: base.iter().map(|e| linalg::kron(&id, e)).collect(),
    })
}

/// Symmetric Clifford system `P_0, …, P_m` on `R^{2l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordSystem {
    l: usize,
    matrices: Vec<Matrix>,
}

impl CliffordSystem {
    /// Wraps matrices without validating them; see [`verify_clifford_system`].
    pub fn from_matrices(matrices: Vec<Matrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Domain("a Clifford system needs at least one matrix".into()))?;
        let n = first.nrows();
        if n % 2 != 0 || matrices.iter().any(|p| p.shape() != (n, n)) {
            return Err(Error::Domain("Clifford matrices must be square of equal even size".into()));
        }
        Ok(CliffordSystem { l: n / 2, matrices })
    }

    pub fn m(&self) -> usize {
        self.matrices.len() - 1
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.l
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    /// `(m_1, m_2) = (m, l - m - 1)`; `m_2` may be non-positive for systems
    /// that do not carry an isoparametric family.
    pub fn multiplicities(&self) -> (usize, i64) {
        (self.m(), self.l as i64 - self.m() as i64 - 1)
    }

    /// The values `⟨P_i x, x⟩`.
    pub fn quadratic_forms(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.matrices.len(), self.matrices.iter().map(|p| (p * x).dot(x)))
    }

    /// `Σ_i c_i P_i`.
    pub fn combine(&self, coeffs: &Vector) -> Matrix {
        let n = self.ambient_dim();
        self.matrices
            .iter()
            .zip(coeffs.iter())
            .fold(Matrix::zeros(n, n), |acc, (p, c)| acc + p * *c)
    }
}

/// FKM system for `m` and multiplicity `k`, with `l = k δ(m)`.
pub fn build_clifford_system(m: usize, multiplicity: usize) -> Result<CliffordSystem> {
    let d = delta(m)?;
    if multiplicity < 1 {
        return Err(Error::Domain("multiplicity must be at least 1".into()));
    }
    let l = multiplicity * d;
    let m2 = l as i64 - m as i64 - 1;
    if m2 < 1 {
        let min_multiplicity = (m + 2).div_ceil(d);
        return Err(Error::EmptyFamily {
            m,
            multiplicity,
            m2,
            min_multiplicity,
        });
    }
    let skew = build_skew_representation(m - 1, multiplicity)?;
    CliffordSystem::from_matrices(double(&skew.generators, l))
}

/// Smallest multiplicity `k` with `k δ(m) - m - 1 >= 1`.
pub fn minimal_multiplicity(m: usize) -> Result<usize> {
    Ok((m + 2).div_ceil(delta(m)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FullSquareFlavor {
    /// `P_0, …, P_4` on `R^8`, from the quaternions.
    FiveOn8d,
    /// `P_0, …, P_8` on `R^16`, from the octonions.
    NineOn16d,
}

/// A Clifford system with `Σ_i ⟨P_i x, x⟩^2 = |x|^4`.
#[derive(Debug, Clone)]
pub struct FullSquareSystem {
    pub base: CliffordSystem,
    pub flavor: FullSquareFlavor,
}

/// `|Σ_i ⟨P_i x, x⟩^2 − |x|^4|`.
pub fn sum_of_squares_residual(system: &CliffordSystem, x: &Vector) -> f64 {
    let s: f64 = system.quadratic_forms(x).iter().map(|c| c * c).sum();
    (s - x.norm_squared().powi(2)).abs()
}

pub fn build_full_square_system(flavor: FullSquareFlavor) -> Result<FullSquareSystem> {
    let (generators, l) = match flavor {
        FullSquareFlavor::FiveOn8d => (3, 4),
        FullSquareFlavor::NineOn16d => (7, 8),
    };
    let skew = build_skew_representation(generators, 1)?;
    debug_assert_eq!(skew.dim, l);
    let base = CliffordSystem::from_matrices(double(&skew.generators, l))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f011_5a0a);
    for _ in 0..64 {
        let x = linalg::random_unit_vector(2 * l, &mut rng);
        let r = sum_of_squares_residual(&base, &x);
        if r >= tolerances::FULL_SQUARE {
            return Err(Error::Construction(format!(
                "sum-of-squares identity fails for {flavor:?}: residual {r:e}"
            )));
        }
    }
    Ok(FullSquareSystem { base, flavor })
}

/// Symmetry, orthogonality and anticommutation residuals of a system.
pub fn verify_clifford_system(system: &CliffordSystem, tol: f64) -> VerificationReport {
    let n = system.ambient_dim();
    let id = Matrix::identity(n, n);
    let ps = system.matrices();
    let mut sym = 0.0f64;
    let mut orth = 0.0f64;
    let mut anti = 0.0f64;
    for (i, pi) in ps.iter().enumerate() {
        sym = sym.max(max_abs(&(pi - pi.transpose())));
        orth = orth.max(max_abs(&(pi * pi - &id)));
        for pj in ps.iter().skip(i + 1) {
            anti = anti.max(max_abs(&(pi * pj + pj * pi)));
        }
    }
    let mut report = VerificationReport::new();
    report.below("clifford.symmetry", "P_i = P_i^T", sym, tol);
    report.below("clifford.orthogonality", "P_i^2 = I", orth, tol);
    report.below("clifford.anticommutation", "P_iP_j + P_jP_i = 2δ_ij I", anti, tol);
    report
}

/// Splits a full-square system into `{P_0..P_m}` and `{P_{m+1}..P_last}`.
/// Both halves satisfy the Clifford relations; whether each carries a
/// non-empty isoparametric family is decided when a family is built.
pub fn split_dual_subsystems(full: &FullSquareSystem, m: usize) -> Result<(CliffordSystem, CliffordSystem)> {
    let count = full.base.matrices().len();
    if m < 1 || m + 2 > count {
        return Err(Error::Domain(format!(
            "split index m={m} outside 1..={} for a system of {count} matrices",
            count - 2
        )));
    }
    let (first, second) = full.base.matrices().split_at(m + 1);
    Ok((
        CliffordSystem::from_matrices(first.to_vec())?,
        CliffordSystem::from_matrices(second.to_vec())?,
    ))
}

/// Plain-text matrix dump: a header line, then each `P_i` as `2l` rows of
/// `2l` entries with 17 significant digits.
pub fn dump_system(system: &CliffordSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "clifford m={} l={}", system.m(), system.l());
    for p in system.matrices() {
        for i in 0..p.nrows() {
            let row: Vec<String> = (0..p.ncols()).map(|j| format!("{:.16e}", p[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_dump(text: &str) -> Result<CliffordSystem> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Domain("empty dump".into()))?;
    let parse_field = |key: &str| -> Result<usize> {
        header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix(key))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Domain(format!("malformed header {header:?}")))
    };
    if !header.starts_with("clifford ") {
        return Err(Error::Domain(format!("malformed header {header:?}")));
    }
    let m = parse_field("m=")?;
    let n = 2 * parse_field("l=")?;
    let mut matrices = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            let line = lines.next().ok_or_else(|| Error::Domain("truncated dump".into()))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Domain(format!("bad entry: {e}")))?;
            if vals.len() != n {
                return Err(Error::Domain(format!("row {i} has {} entries, expected {n}", vals.len())));
            }
            for (j, v) in vals.into_iter().enumerate() {
                p[(i, j)] = v;
            }
        }
        matrices.push(p);
    }
    CliffordSystem::from_matrices(matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn delta_table_and_periodicity() {
        let expected = [1, 2, 4, 4, 8, 8, 8, 8];
        for (m, d) in (1..=8).zip(expected) {
            assert_eq!(delta(m).unwrap(), d);
        }
        assert_eq!(delta(1).unwrap(), 1);
        assert_eq!(delta(7).unwrap(), 8);
        assert_eq!(delta(10).unwrap(), 32);
        for m in 1..=24 {
            assert_eq!(delta(m + 8).unwrap(), 16 * delta(m).unwrap());
        }
        assert!(matches!(delta(0), Err(Error::Domain(_))));
    }

    #[test]
    fn cayley_dickson_units_anticommute() {
        for dim in [2, 4, 8] {
            for a in 1..dim {
                let la = left_multiplication(dim, a);
                for b in 1..dim {
                    let lb = left_multiplication(dim, b);
                    let mut ac = &la * &lb + &lb * &la;
                    if a == b {
                        ac += Matrix::identity(dim, dim) * 2.0;
                    }
                    assert_eq!(max_abs(&ac), 0.0, "dim {dim}, units {a},{b}");
                }
            }
        }
    }

    #[test]
    fn skew_representation_examples() {
        let r = build_skew_representation(0, 3).unwrap();
        assert_eq!(r.dim, 3);
        assert!(r.generators.is_empty());

        let r = build_skew_representation(2, 1).unwrap();
        assert_eq!(r.dim, 4);
        assert_eq!(r.count(), 2);
        let (e1, e2) = (&r.generators[0], &r.generators[1]);
        assert!(max_abs(&(e1 * e2 + e2 * e1)) < 1e-14);

        let r = build_skew_representation(7, 1).unwrap();
        assert_eq!(r.dim, 8);
        assert!(r.relation_residual() < 1e-14);
    }

    #[test]
    fn skew_representation_dimension_matches_delta() {
        for n in 0..=12 {
            for k in 1..=2 {
                let r = build_skew_representation(n, k).unwrap();
                assert_eq!(r.dim, k * delta(n + 1).unwrap(), "n={n}");
                assert_eq!(r.count(), n);
                assert!(r.relation_residual() < 1e-12, "n={n}, k={k}");
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let a = build_clifford_system(5, 1).unwrap();
        let b = build_clifford_system(5, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn build_system_examples() {
        let s = build_clifford_system(3, 2).unwrap();
        assert_eq!(s.matrices().len(), 4);
        assert_eq!(s.ambient_dim(), 16);
        assert_eq!(s.multiplicities(), (3, 4));

        match build_clifford_system(1, 1) {
            Err(Error::EmptyFamily { m2, min_multiplicity, .. }) => {
                assert_eq!(m2, -1);
                assert_eq!(min_multiplicity, 3);
            }
            other => panic!("expected empty family, got {other:?}"),
        }
        match build_clifford_system(4, 1) {
            Err(Error::EmptyFamily { m2, min_multiplicity, .. }) => {
                assert_eq!(m2, -1);
                assert_eq!(min_multiplicity, 2);
            }
            other => panic!("expected empty family, got {other:?}"),
        }
    }

    #[test]
    fn verify_reports_broken_system() {
        let s = build_clifford_system(3, 2).unwrap();
        let ok = verify_clifford_system(&s, 1e-12);
        assert!(ok.all_passed());

        let mut ms = s.matrices().to_vec();
        ms[1] = ms[0].clone();
        let broken = CliffordSystem::from_matrices(ms).unwrap();
        let rep = verify_clifford_system(&broken, 1e-12);
        let anti = rep.get("clifford.anticommutation").unwrap();
        assert_eq!(anti.value, 2.0);
        assert!(!anti.passed());

        let strict = verify_clifford_system(&s, 0.0);
        assert!(!strict.all_passed());
        assert!(strict.get("clifford.anticommutation").unwrap().value <= f64::EPSILON);
    }

    #[test]
    fn full_square_systems() {
        let nine = build_full_square_system(FullSquareFlavor::NineOn16d).unwrap();
        assert_eq!(nine.base.matrices().len(), 9);
        assert_eq!(nine.base.ambient_dim(), 16);
        let five = build_full_square_system(FullSquareFlavor::FiveOn8d).unwrap();
        assert_eq!(five.base.matrices().len(), 5);
        assert_eq!(five.base.ambient_dim(), 8);
        for full in [&nine, &five] {
            let mut e0 = Vector::zeros(full.base.ambient_dim());
            e0[0] = 1.0;
            assert!(sum_of_squares_residual(&full.base, &e0) < 1e-14);
            assert!(verify_clifford_system(&full.base, 1e-12).all_passed());
        }
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            let x = linalg::random_unit_vector(16, &mut rng);
            assert!(sum_of_squares_residual(&nine.base, &x) < 1e-12);
        }
    }

    #[test]
    fn split_examples() {
        let nine = build_full_square_system(FullSquareFlavor::NineOn16d).unwrap();
        let (a, b) = split_dual_subsystems(&nine, 3).unwrap();
        assert_eq!((a.matrices().len(), b.matrices().len()), (4, 5));
        let five = build_full_square_system(FullSquareFlavor::FiveOn8d).unwrap();
        let (a, b) = split_dual_subsystems(&five, 1).unwrap();
        assert_eq!((a.matrices().len(), b.matrices().len()), (2, 3));
        assert_eq!(a.multiplicities(), (1, 2));
        assert_eq!(b.multiplicities(), (2, 1));
        assert!(split_dual_subsystems(&nine, 8).is_err());
        assert!(split_dual_subsystems(&nine, 0).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let s = build_clifford_system(2, 2).unwrap();
        let text = dump_system(&s);
        assert!(text.starts_with("clifford m=2 l=4\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 8);
        assert_eq!(parse_dump(&text).unwrap(), s);
    }
}
