//! The verification suites. Each suite expands into independent tasks, one
//! per (configuration, sample), that run on a worker pool and return partial
//! results; the partial results are folded in task order.

use std::collections::BTreeMap;

use fkm_core::bundleiso::{
    continuity_check, d1_d3_frame_residual, eigen_split, global_section_r1, iso_d1_d3, iso_d2_d4_dual, sample_path,
    sigma_map, truncated_dual_operator, DualPair,
};
use fkm_core::clifford::{
    build_clifford_system, build_full_square_system, delta, dump_system, minimal_multiplicity, parse_dump,
    sum_of_squares_residual, verify_clifford_system, CliffordSystem, FullSquareFlavor, FullSquareSystem,
};
use fkm_core::diffgeo::{verify_connection, LocalFrameField};
use fkm_core::hermitian::{
    build_generic_pairswap_j, nearly_kahler_check, pair_swap_invariants, prop31_witness, witness_closed_form,
    witness_scale, ClosedFormJ,
};
use fkm_core::isoparametric::{sample_point, IsoparametricFamily, SurfacePoint};
use fkm_core::linalg::{self, max_abs, Matrix};
use fkm_core::seed::{derive_seed, rng_from_seed};
use fkm_core::shape::{
    gauge_d1, gauge_d3, maurer_cartan_check, principal_decomposition, principal_projectors, shape_operator,
    tangent_basis, verify_lemma21, DistributionData,
};
use fkm_core::starricci::{
    gauss_kronecker_check, partial_swap_structure, random_complex_structure, star_ricci_gauss_oracle,
    star_ricci_matrix, symmetry_criterion, weakly_star_einstein_check,
};
use fkm_core::{tolerances, Bound, CheckRecord, Error, VerificationReport};
use rayon::prelude::*;

use crate::config::{PairTag, RunConfig, Suite};
use crate::RunError;

/// Random pair-swapping structures tried per point in the star-ricci suite.
pub const STRUCTURES_PER_POINT: usize = 10;

/// Closed-form witness evaluations per requested sample.
pub const WITNESS_POINTS_PER_SAMPLE: usize = 25;

/// Steps and step length of the continuity paths.
pub const PATH_STEPS: usize = 100;
pub const PATH_DT: f64 = 1e-3;

/// Configurations of the `D_1 ≅ D_3` checks when no `m` is given.
pub const D13_CONFIGS: [(usize, usize); 4] = [(1, 4), (2, 2), (3, 2), (4, 2)];

/// `|⟨R_0R_1R_2R_3x, x⟩|` above which a point counts as generic for the
/// witness.
pub const WITNESS_GENERIC: f64 = 1e-3;

/// Fraction of points at which a non-pair-swapping control must produce a
/// visible `*Ric`.
pub const CONTROL_POWER: f64 = 0.9;
pub const CONTROL_VISIBLE: f64 = 1e-3;

struct Tally {
    anchor: &'static str,
    min_fraction: f64,
    hits: usize,
    total: usize,
}

struct Maximum {
    anchor: &'static str,
    bound: Bound,
    value: f64,
    points: usize,
}

/// Partial result of a task: checks that fold by max/min, and counters and
/// maxima that become checks only after every task is in.
#[derive(Default)]
pub struct Accumulator {
    pub report: VerificationReport,
    tallies: BTreeMap<String, Tally>,
    maxima: BTreeMap<String, Maximum>,
}

impl Accumulator {
    fn tally(&mut self, name: &str, anchor: &'static str, min_fraction: f64, hit: bool) {
        let t = self.tallies.entry(name.to_string()).or_insert(Tally {
            anchor,
            min_fraction,
            hits: 0,
            total: 0,
        });
        t.hits += hit as usize;
        t.total += 1;
    }

    /// Keeps the largest value seen and tests it against `bound` at the end.
    fn track_max(&mut self, name: &str, anchor: &'static str, bound: Bound, value: f64) {
        let m = self.maxima.entry(name.to_string()).or_insert(Maximum {
            anchor,
            bound,
            value: f64::NEG_INFINITY,
            points: 0,
        });
        m.value = if value.is_nan() { f64::NAN } else { m.value.max(value) };
        m.points += 1;
    }

    fn merge(&mut self, other: Accumulator) {
        self.report.merge(&other.report);
        for (name, t) in other.tallies {
            match self.tallies.get_mut(&name) {
                Some(mine) => {
                    mine.hits += t.hits;
                    mine.total += t.total;
                }
                None => {
                    self.tallies.insert(name, t);
                }
            }
        }
        for (name, m) in other.maxima {
            match self.maxima.get_mut(&name) {
                Some(mine) => {
                    mine.value = if m.value.is_nan() { f64::NAN } else { mine.value.max(m.value) };
                    mine.points += m.points;
                }
                None => {
                    self.maxima.insert(name, m);
                }
            }
        }
    }

    fn prefixed(self, prefix: &str) -> Accumulator {
        let rename = |name: &str| format!("{prefix}{name}");
        let mut report = VerificationReport::new();
        for mut rec in self.report.checks {
            rec.name = rename(&rec.name);
            report.push(rec);
        }
        Accumulator {
            report,
            tallies: self.tallies.into_iter().map(|(k, v)| (rename(&k), v)).collect(),
            maxima: self.maxima.into_iter().map(|(k, v)| (rename(&k), v)).collect(),
        }
    }

    /// Turns the counters and maxima into checks.
    pub fn finish(mut self) -> VerificationReport {
        for (name, t) in &self.tallies {
            let fraction = t.hits as f64 / t.total as f64;
            let mut rec = CheckRecord::new(name.clone(), t.anchor, fraction, Bound::Above(t.min_fraction));
            rec.points = t.total;
            self.report.push(rec);
        }
        for (name, m) in &self.maxima {
            let mut rec = CheckRecord::new(name.clone(), m.anchor, m.value, m.bound);
            rec.points = m.points;
            self.report.push(rec);
        }
        self.report
    }
}

type Task<'a> = Box<dyn Fn() -> Result<Accumulator, Error> + Send + Sync + 'a>;

/// Runs the tasks on the pool and folds their results in task order. The
/// first error in task order wins.
fn run_tasks(pool: &rayon::ThreadPool, tasks: Vec<Task<'_>>) -> Result<Accumulator, RunError> {
    let results: Vec<Result<Accumulator, Error>> = pool.install(|| tasks.par_iter().map(|t| t()).collect());
    let mut acc = Accumulator::default();
    for r in results {
        acc.merge(r?);
    }
    Ok(acc)
}

fn stream(suite: Suite, section: u64, config: usize) -> u64 {
    (suite.id() << 32) | (section << 16) | config as u64
}

/// A sample point with its principal decomposition, or `None` after
/// recording a degenerate sample.
fn sample(acc: &mut Accumulator, family: &IsoparametricFamily, seed: u64) -> Result<Option<(SurfacePoint, DistributionData)>, Error> {
    let attempt = sample_point(family, seed).and_then(|p| principal_decomposition(family, &p).map(|d| (p, d)));
    match attempt {
        Ok(pd) => Ok(Some(pd)),
        Err(e) => absorb_point_error(acc, e).map(|_| None),
    }
}

/// Degenerate or unreachable samples are reported as failures of the point;
/// anything else aborts the run.
fn absorb_point_error(acc: &mut Accumulator, e: Error) -> Result<(), Error> {
    match e {
        Error::Degenerate(_) | Error::Sampling(_) | Error::StalePoint { .. } => {
            acc.report.below("sampling.degenerate_points", "usable sample point", 1.0, 0.5);
            Ok(())
        }
        other => Err(other),
    }
}

fn per_point<F>(family: &IsoparametricFamily, seed: u64, body: F) -> Result<Accumulator, Error>
where
    F: FnOnce(&mut Accumulator, &SurfacePoint, &DistributionData) -> Result<(), Error>,
{
    let mut acc = Accumulator::default();
    if let Some((p, d)) = sample(&mut acc, family, seed)? {
        if let Err(e) = body(&mut acc, &p, &d) {
            absorb_point_error(&mut acc, e)?;
        }
    }
    Ok(acc)
}

fn family(m: usize, k: usize, theta: f64) -> Result<IsoparametricFamily, Error> {
    IsoparametricFamily::new(build_clifford_system(m, k)?, theta)
}

fn full_square(pair: PairTag) -> Result<FullSquareSystem, Error> {
    build_full_square_system(if pair.uses_nine() {
        FullSquareFlavor::NineOn16d
    } else {
        FullSquareFlavor::FiveOn8d
    })
}

fn dual_pair(pair: PairTag, theta: f64) -> Result<DualPair, Error> {
    DualPair::new(&full_square(pair)?, pair.0, theta)
}

fn config_label(m: usize, k: usize) -> String {
    format!("m={m},k={k}")
}

/// `(m, k)` configurations: the given one, or every `m` in `1..=8` at its
/// minimal multiplicity.
fn mk_configs(cfg: &RunConfig) -> Result<Vec<(usize, usize)>, Error> {
    match cfg.m {
        Some(m) => Ok(vec![(m, cfg.k.map_or_else(|| minimal_multiplicity(m), Ok)?)]),
        None => (1..=8).map(|m| Ok((m, minimal_multiplicity(m)?))).collect(),
    }
}

fn pairs(cfg: &RunConfig) -> Vec<PairTag> {
    cfg.pair.map_or_else(|| PairTag::ALL.to_vec(), |p| vec![p])
}

pub(crate) fn run_concrete(suite: Suite, cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<VerificationReport, RunError> {
    let acc = match suite {
        Suite::Clifford => clifford_suite(cfg, pool)?,
        Suite::Geometry => geometry_suite(cfg, pool)?,
        Suite::Isomorphisms => isomorphism_suite(cfg, pool)?,
        Suite::NearlyKahler => nearly_kahler_suite(cfg, pool)?,
        Suite::StarRicci => star_ricci_suite(cfg, pool)?,
        Suite::All => unreachable!("expanded by the caller"),
    };
    Ok(acc.prefixed(&format!("{suite}/")).finish())
}

fn samples(cfg: &RunConfig, suite: Suite) -> usize {
    cfg.samples.unwrap_or(suite.default_samples())
}

fn clifford_suite(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Accumulator, RunError> {
    let systems: Vec<(String, CliffordSystem, usize, usize)> = mk_configs(cfg)?
        .into_iter()
        .map(|(m, k)| Ok((config_label(m, k), build_clifford_system(m, k)?, m, k)))
        .collect::<Result<_, Error>>()?;
    let flavors = match cfg.pair {
        Some(p) if p.uses_nine() => vec![FullSquareFlavor::NineOn16d],
        Some(_) => vec![FullSquareFlavor::FiveOn8d],
        None => vec![FullSquareFlavor::FiveOn8d, FullSquareFlavor::NineOn16d],
    };
    let fulls: Vec<(String, FullSquareSystem)> = flavors
        .into_iter()
        .map(|f| Ok((format!("{f:?}"), build_full_square_system(f)?)))
        .collect::<Result<_, Error>>()?;

    let mut tasks: Vec<Task> = Vec::new();
    for (label, sys, m, k) in &systems {
        tasks.push(Box::new(move || {
            let mut acc = Accumulator::default();
            acc.report.merge(&verify_clifford_system(sys, tolerances::CLIFFORD));
            let expected = k * delta(*m)?;
            acc.report.below(
                "clifford.module_dimension",
                "l = k δ(m)",
                (sys.l() as f64 - expected as f64).abs(),
                0.5,
            );
            let back = parse_dump(&dump_system(sys))?;
            acc.report.below(
                "clifford.dump_roundtrip",
                "dump and parse reproduce the matrices",
                if back == *sys { 0.0 } else { 1.0 },
                0.5,
            );
            Ok(acc.prefixed(&format!("{label}/")))
        }));
    }
    let n = samples(cfg, Suite::Clifford);
    for (fi, (label, full)) in fulls.iter().enumerate() {
        tasks.push(Box::new(move || {
            let rep = verify_clifford_system(&full.base, tolerances::CLIFFORD);
            Ok(Accumulator {
                report: rep,
                ..Default::default()
            }
            .prefixed(&format!("{label}/")))
        }));
        for i in 0..n {
            let seed = derive_seed(cfg.seed, stream(Suite::Clifford, 1, fi), i as u64);
            tasks.push(Box::new(move || {
                let mut rng = rng_from_seed(seed);
                let x = linalg::random_unit_vector(full.base.ambient_dim(), &mut rng);
                let mut acc = Accumulator::default();
                acc.report.below(
                    "full_square.sum_of_squares",
                    "Σ⟨P_i x, x⟩² = |x|⁴",
                    sum_of_squares_residual(&full.base, &x),
                    tolerances::FULL_SQUARE,
                );
                Ok(acc.prefixed(&format!("{label}/")))
            }));
        }
    }
    run_tasks(pool, tasks)
}

fn geometry_point(acc: &mut Accumulator, fam: &IsoparametricFamily, p: &SurfacePoint, d: &DistributionData, seed: u64) -> Result<(), Error> {
    let n = p.ambient_dim();
    let r = &mut acc.report;
    let tb = tangent_basis(p);
    let s = shape_operator(fam, p, &tb);
    let mut eig: Vec<f64> = s.matrix.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let lambda = fam.lambdas();
    let expected: Vec<f64> = (0..4)
        .flat_map(|k| std::iter::repeat_n(lambda[k], fam.distribution_dim(k)))
        .collect();
    let spectrum = if eig.len() == expected.len() {
        eig.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    r.below("spectrum.eigenvalues", "λ_k = cot(θ + (k−1)π/4)", spectrum, tolerances::SPECTRUM);
    let mult = (0..4)
        .map(|k| (d.bases[k].ncols() as f64 - fam.distribution_dim(k) as f64).abs())
        .sum::<f64>();
    r.below("spectrum.multiplicities", "multiplicities (m, l−m−1, m, l−m−1)", mult, 0.5);
    r.below(
        "spectrum.curvature_products",
        "λ_1λ_3 = λ_2λ_4 = −1",
        (lambda[0] * lambda[2] + 1.0).abs().max((lambda[1] * lambda[3] + 1.0).abs()),
        1e-10,
    );
    let projectors = principal_projectors(fam, p);
    let lagrange = (0..4)
        .map(|k| max_abs(&(&projectors[k] - d.projector(k))))
        .fold(0.0, f64::max);
    r.below(
        "spectrum.lagrange_projectors",
        "interpolation projectors = eigenprojectors",
        lagrange,
        tolerances::SUBSPACE,
    );

    r.below("point.level", "f(x) = cos 4θ", fam.level_residual(&p.x), tolerances::LEVEL);
    r.below(
        "point.normal",
        "|ξ| = 1, ⟨x, ξ⟩ = 0",
        (p.xi.norm() - 1.0).abs().max(p.x.dot(&p.xi).abs()),
        tolerances::POINTWISE,
    );
    r.below(
        "point.p_involution",
        "P² = I, |coefficients of P| = 1",
        max_abs(&(&p.p_op * &p.p_op - Matrix::identity(n, n))).max((p.coeffs.norm() - 1.0).abs()),
        tolerances::POINTWISE,
    );
    r.merge(&verify_lemma21(fam, p, d));

    let (r0, anti, rel) = d.frame.residuals(p);
    r.below(
        "frame.clifford_relations",
        "R_0 = P, R_iR_j + R_jR_i = 2δ_ij",
        r0.max(anti).max(rel),
        tolerances::POINTWISE,
    );
    let e1 = linalg::orthonormalize(&gauge_d1(p, &d.frame), 1e-10);
    let e3 = linalg::orthonormalize(&gauge_d3(p, &d.frame), 1e-10);
    r.below(
        "frame.d1_span",
        "D_1 = span{R_a φ_1}",
        linalg::subspace_distance(&e1, &d.bases[0]),
        tolerances::SUBSPACE,
    );
    r.below(
        "frame.d3_span",
        "D_3 = span{R_0 R_a φ_1}",
        linalg::subspace_distance(&e3, &d.bases[2]),
        tolerances::SUBSPACE,
    );
    let mut rng = rng_from_seed(derive_seed(seed, 1, 0));
    let v = p.project_tangent(&linalg::random_unit_vector(n, &mut rng));
    r.merge(&maurer_cartan_check(fam, p, d, &v));
    Ok(())
}

fn geometry_suite(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Accumulator, RunError> {
    let mut families: Vec<(String, IsoparametricFamily)> = Vec::new();
    if let Some(pair) = cfg.pair {
        families.push((pair.label(), dual_pair(pair, cfg.theta)?.family));
    }
    if cfg.pair.is_none() || cfg.m.is_some() {
        for (m, k) in mk_configs(cfg)? {
            families.push((config_label(m, k), family(m, k, cfg.theta)?));
        }
    }
    let n = samples(cfg, Suite::Geometry);
    let mut tasks: Vec<Task> = Vec::new();
    for (ci, (label, fam)) in families.iter().enumerate() {
        for i in 0..n {
            let seed = derive_seed(cfg.seed, stream(Suite::Geometry, 0, ci), i as u64);
            tasks.push(Box::new(move || {
                Ok(per_point(fam, seed, |acc, p, d| geometry_point(acc, fam, p, d, seed))?.prefixed(&format!("{label}/")))
            }));
        }
    }
    run_tasks(pool, tasks)
}

fn isomorphism_suite(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Accumulator, RunError> {
    let n = samples(cfg, Suite::Isomorphisms);
    let theta = cfg.theta;
    let run_mk = cfg.m.is_some() || cfg.pair.is_none();
    let run_pairs = cfg.pair.is_some() || cfg.m.is_none();

    let d13: Vec<(String, IsoparametricFamily)> = if run_mk {
        let configs = match cfg.m {
            Some(_) => mk_configs(cfg)?,
            None => D13_CONFIGS.to_vec(),
        };
        configs
            .into_iter()
            .map(|(m, k)| Ok((config_label(m, k), family(m, k, theta)?)))
            .collect::<Result<_, Error>>()?
    } else {
        Vec::new()
    };
    let odd: Vec<(String, IsoparametricFamily)> = if run_mk {
        let configs: Vec<(usize, usize)> = match cfg.m {
            Some(_) => mk_configs(cfg)?.into_iter().filter(|(m, _)| m % 2 == 1).collect(),
            None => [1, 3, 5, 7]
                .into_iter()
                .map(|m| Ok((m, minimal_multiplicity(m)?)))
                .collect::<Result<_, Error>>()?,
        };
        configs
            .into_iter()
            .map(|(m, k)| Ok((config_label(m, k), family(m, k, theta)?)))
            .collect::<Result<_, Error>>()?
    } else {
        Vec::new()
    };
    let duals: Vec<(PairTag, DualPair)> = if run_pairs {
        pairs(cfg)
            .into_iter()
            .map(|p| Ok((p, dual_pair(p, theta)?)))
            .collect::<Result<_, Error>>()?
    } else {
        Vec::new()
    };

    let mut tasks: Vec<Task> = Vec::new();
    for (ci, (label, fam)) in d13.iter().enumerate() {
        for i in 0..n {
            let seed = derive_seed(cfg.seed, stream(Suite::Isomorphisms, 0, ci), i as u64);
            tasks.push(Box::new(move || {
                let acc = per_point(fam, seed, |acc, p, d| {
                    acc.report.merge(&iso_d1_d3(d).report("cor22.r0", "R_0: D_1 ≅ D_3"));
                    acc.report.below(
                        "cor22.frame",
                        "R_0 R_a φ_1 = R_a φ_3",
                        d1_d3_frame_residual(p, d),
                        tolerances::SUBSPACE,
                    );
                    acc.report.merge(&eigen_split(p, d).1);
                    Ok(())
                })?;
                Ok(acc.prefixed(&format!("{label}/")))
            }));
        }
    }
    for (pi, (tag, pair)) in duals.iter().enumerate() {
        let is_34 = *tag == PairTag(3, 4);
        for i in 0..n {
            let seed = derive_seed(cfg.seed, stream(Suite::Isomorphisms, 1, pi), i as u64);
            tasks.push(Box::new(move || {
                let acc = per_point(&pair.family, seed, |acc, p, d| {
                    acc.report.merge(&iso_d2_d4_dual(pair, p, d)?.1);
                    if is_34 {
                        q_range_comparison(acc, pair, p);
                    }
                    Ok(())
                })?;
                Ok(acc.prefixed(&format!("{}/", tag.label())))
            }));
        }
    }
    for (ci, (label, fam)) in odd.iter().enumerate() {
        let m1 = fam.system().m() == 1;
        for i in 0..n {
            let seed = derive_seed(cfg.seed, stream(Suite::Isomorphisms, 2, ci), i as u64);
            tasks.push(Box::new(move || {
                let acc = per_point(fam, seed, |acc, p, d| {
                    let r1 = global_section_r1(fam, p)?;
                    acc.report.merge(&sigma_map(p, d, &r1)?.1);
                    if m1 {
                        // The circle section a ↦ (−a_1, a_0) with the opposite sign.
                        let (maps, _) = sigma_map(p, d, &(-&r1))?;
                        let pm = fam.system().matrices();
                        let target = &pm[0] * &pm[1] * &d.bases[1];
                        acc.report.below(
                            "thm13.circle_p0p1",
                            "σ|_{D_2} = P_0P_1 for m = 1",
                            max_abs(&(&maps.sigma * &d.bases[1] - target)),
                            tolerances::GRAM,
                        );
                    }
                    Ok(())
                })?;
                Ok(acc.prefixed(&format!("{label}/")))
            }));
        }
        let seed = derive_seed(cfg.seed, stream(Suite::Isomorphisms, 3, ci), 0);
        tasks.push(Box::new(move || {
            let mut acc = Accumulator::default();
            let walk = sample_point(fam, seed).and_then(|start| {
                let mut rng = rng_from_seed(derive_seed(seed, 1, 0));
                let dir = linalg::random_unit_vector(start.ambient_dim(), &mut rng);
                sample_path(fam, &start, &dir, PATH_STEPS, PATH_DT)
            });
            match walk.and_then(|path| continuity_check(fam, &path)) {
                Ok(rep) => acc.report.merge(&rep),
                Err(e) => absorb_point_error(&mut acc, e)?,
            }
            Ok(acc.prefixed(&format!("{label}/")))
        }));
    }
    run_tasks(pool, tasks)
}

/// `Q² − I` for the two index ranges of the (3,4) dual operator. The range
/// `4..7` leaves out `P_8` and misses the identity by `(⟨P_8x,x⟩/cos2θ)²`.
fn q_range_comparison(acc: &mut Accumulator, pair: &DualPair, p: &SurfacePoint) {
    let n = p.ambient_dim();
    let theta = pair.family.theta();
    let dual = pair.dual_family.system();
    let id = Matrix::identity(n, n);
    let full = pair.q_operator(&p.x);
    acc.report.below(
        "cor24.q_range_m+1..8.q_squared",
        "Q² = I with indices m+1..8",
        max_abs(&(&full * &full - &id)),
        tolerances::GRAM,
    );
    let short = truncated_dual_operator(dual, theta, &p.x, dual.matrices().len() - 1);
    let residual = max_abs(&(&short * &short - &id));
    let c8 = dual.quadratic_forms(&p.x)[dual.matrices().len() - 1] / (2.0 * theta).cos();
    acc.track_max(
        "cor24.q_range_4..7.q_squared",
        "Q² ≠ I with indices 4..7",
        Bound::Above(1e-6),
        residual,
    );
    acc.report.below(
        "cor24.q_range_4..7.defect",
        "Q² − I = (⟨P_8x,x⟩/cos2θ)² I with indices 4..7",
        (residual - c8 * c8).abs(),
        tolerances::GRAM,
    );
}

fn nearly_kahler_suite(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Accumulator, RunError> {
    let n = samples(cfg, Suite::NearlyKahler);
    let h = cfg.fd_step;
    let duals: Vec<(PairTag, DualPair)> = pairs(cfg)
        .into_iter()
        .map(|p| Ok((p, dual_pair(p, cfg.theta)?)))
        .collect::<Result<_, Error>>()?;
    let mut tasks: Vec<Task> = Vec::new();
    for (pi, (tag, pair)) in duals.iter().enumerate() {
        let is_34 = *tag == PairTag(3, 4);
        for i in 0..n {
            let seed = derive_seed(cfg.seed, stream(Suite::NearlyKahler, 0, pi), i as u64);
            tasks.push(Box::new(move || {
                let fam = &pair.family;
                let acc = per_point(fam, seed, |acc, p, d| {
                    let cf = ClosedFormJ::new(pair);
                    acc.report.merge(&nearly_kahler_check(fam, p, d, &cf.field(), h)?);
                    acc.report.merge(&pair_swap_invariants(p, d, &cf.at(p)));
                    acc.report.merge(&verify_connection(fam, &LocalFrameField::principal(p, d), h)?);
                    if is_34 {
                        witness_point(acc, pair, p, d, h)?;
                    }
                    Ok(())
                })?;
                Ok(acc.prefixed(&format!("{}/", tag.label())))
            }));
        }
        if is_34 {
            for i in 0..n * WITNESS_POINTS_PER_SAMPLE {
                let seed = derive_seed(cfg.seed, stream(Suite::NearlyKahler, 1, pi), i as u64);
                tasks.push(Box::new(move || {
                    let fam = &pair.family;
                    let bound = (2.0 * fam.theta()).cos();
                    let acc = per_point(fam, seed, |acc, p, d| {
                        let (_, factor, at_focal) = witness_closed_form(fam, p, d)?;
                        acc.tally(
                            "prop31.nonvanishing",
                            "witness above 1e-3 of its scale",
                            0.95,
                            factor.abs() > WITNESS_GENERIC,
                        );
                        acc.report.below(
                            "prop31.factor_range",
                            "⟨R_0R_1R_2R_3x, x⟩ ∈ [−cos2θ, cos2θ]",
                            factor.abs() - bound,
                            1e-6,
                        );
                        acc.report.below(
                            "prop31.factor_focal",
                            "⟨R_0R_1R_2R_3x, x⟩ = cos2θ ⟨R_0R_1R_2R_3φ_1, φ_1⟩",
                            (factor - bound * at_focal).abs(),
                            tolerances::POINTWISE,
                        );
                        Ok(())
                    })?;
                    Ok(acc.prefixed(&format!("{}/", tag.label())))
                }));
            }
        }
    }
    run_tasks(pool, tasks)
}

fn witness_point(acc: &mut Accumulator, pair: &DualPair, p: &SurfacePoint, d: &DistributionData, h: f64) -> Result<(), Error> {
    let w = prop31_witness(&ClosedFormJ::new(pair), p, d, h)?;
    if w.factor.abs() <= WITNESS_GENERIC {
        acc.tally("prop31.generic_points", "witness points away from its zero set", 0.0, false);
        return Ok(());
    }
    acc.tally("prop31.generic_points", "witness points away from its zero set", 0.0, true);
    acc.report.below(
        "prop31.relative_error",
        "⟨N(e_1,e_2),e_3⟩ = −2/(sinθ cos2θ) ⟨R_0R_1R_2R_3x, x⟩",
        w.relative_error(),
        tolerances::WITNESS_RELATIVE,
    );
    let scaled = prop31_witness(&ClosedFormJ::with_mu(pair, 2.0)?, p, d, h)?;
    acc.report.below(
        "prop31.mu_independence",
        "witness unchanged by rescaling J on D_1 ⊕ D_3",
        (scaled.numeric - w.numeric).abs() / witness_scale(pair.family.theta()),
        tolerances::WITNESS_RELATIVE,
    );
    Ok(())
}

fn star_ricci_point(
    acc: &mut Accumulator,
    fam: &IsoparametricFamily,
    pair: Option<&DualPair>,
    p: &SurfacePoint,
    d: &DistributionData,
    seed: u64,
) -> Result<(), Error> {
    let tb = tangent_basis(p).vectors;
    let mut rng = rng_from_seed(derive_seed(seed, 1, 0));
    let mut first = None;
    for _ in 0..STRUCTURES_PER_POINT {
        let u = linalg::random_orthogonal(d.bases[0].ncols(), &mut rng);
        let w = linalg::random_orthogonal(d.bases[1].ncols(), &mut rng);
        let j = build_generic_pairswap_j(d, &u, &w)?.matrix;
        let r = &mut acc.report;
        r.merge(&pair_swap_invariants(p, d, &j));
        let ric = star_ricci_matrix(fam, p, &j, &tb).matrix;
        r.below("prop12.star_ricci", "*Ric = 0 for pair-swapping J", max_abs(&ric), tolerances::STAR_RICCI);
        let oracle = star_ricci_gauss_oracle(fam, p, &j)?.matrix;
        r.below(
            "prop12.oracle_agreement",
            "*Ric from the Gauss equation",
            max_abs(&(&oracle - &ric)),
            tolerances::STAR_RICCI,
        );
        r.merge(&symmetry_criterion(fam, p, d, &j));
        let we = weakly_star_einstein_check(fam, p, d, &j);
        r.below("prop35.rho", "ρ = 0 for pair-swapping J", we.rho.abs(), tolerances::STAR_RICCI);
        r.below("prop35.weakly_einstein", "*Ric = ρ g", we.residual, tolerances::IFF_PASS);
        r.merge(&we.report);
        r.merge(&gauss_kronecker_check(fam, p, we.rho).1);
        first.get_or_insert(j);
    }
    if let Some(pair) = pair {
        let j = ClosedFormJ::new(pair).at(p);
        acc.report.below(
            "prop12.closed_form",
            "*Ric = 0 for the closed-form J",
            max_abs(&star_ricci_matrix(fam, p, &j, &tb).matrix),
            tolerances::STAR_RICCI,
        );
    }

    let j0 = first.expect("at least one structure");
    let mut controls = vec![random_complex_structure(&j0, &tb, &mut rng)];
    if d.bases[1].ncols() % 2 == 0 {
        let u = linalg::random_orthogonal(d.bases[0].ncols(), &mut rng);
        controls.push(partial_swap_structure(d, &u)?);
    }
    for (ci, j) in controls.iter().enumerate() {
        let ric = star_ricci_matrix(fam, p, j, &tb).matrix;
        let oracle = star_ricci_gauss_oracle(fam, p, j)?.matrix;
        acc.report.below(
            "prop12.oracle_agreement_control",
            "*Ric from the Gauss equation, non-pair-swapping J",
            max_abs(&(&oracle - &ric)),
            tolerances::STAR_RICCI,
        );
        acc.report.merge(&symmetry_criterion(fam, p, d, j));
        if ci == 0 {
            acc.tally(
                "prop12.control_power",
                "*Ric visible for a random complex structure",
                CONTROL_POWER,
                max_abs(&ric) > CONTROL_VISIBLE,
            );
        }
    }
    Ok(())
}

fn star_ricci_suite(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Accumulator, RunError> {
    let n = samples(cfg, Suite::StarRicci);
    let mut targets: Vec<(String, IsoparametricFamily, Option<DualPair>)> = Vec::new();
    if cfg.pair.is_some() || cfg.m.is_none() {
        for tag in pairs(cfg) {
            let pair = dual_pair(tag, cfg.theta)?;
            targets.push((tag.label(), pair.family.clone(), Some(pair)));
        }
    }
    if cfg.m.is_some() {
        for (m, k) in mk_configs(cfg)? {
            targets.push((config_label(m, k), family(m, k, cfg.theta)?, None));
        }
    }
    let mut tasks: Vec<Task> = Vec::new();
    for (ci, (label, fam, pair)) in targets.iter().enumerate() {
        for i in 0..n {
            let seed = derive_seed(cfg.seed, stream(Suite::StarRicci, 0, ci), i as u64);
            tasks.push(Box::new(move || {
                let acc = per_point(fam, seed, |acc, p, d| star_ricci_point(acc, fam, pair.as_ref(), p, d, seed))?;
                Ok(acc.prefixed(&format!("{label}/")))
            }));
        }
    }
    run_tasks(pool, tasks)
}
