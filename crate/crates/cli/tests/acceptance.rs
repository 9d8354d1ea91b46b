//! Acceptance criteria, one line each. Runs without the libtest harness so
//! that the lines are printed by a plain `cargo test`.

use std::process::ExitCode;
use std::time::Instant;

use fkm_cli::config::{ConfigInput, Format, PairTag, RunConfig, Suite};
use fkm_cli::{output, run_suite, RunOutcome};
use fkm_core::{Bound, CheckRecord, Status};

fn config(suite: Suite, samples: Option<usize>, workers: usize) -> RunConfig {
    ConfigInput {
        suite: Some(suite),
        theta: Some(0.3),
        samples,
        seed: Some(20240611),
        workers: Some(workers),
        ..Default::default()
    }
    .resolve()
    .expect("valid acceptance config")
}

fn run(suite: Suite, samples: Option<usize>) -> Result<RunOutcome, String> {
    run_suite(&config(suite, samples, 4)).map_err(|e| e.to_string())
}

/// Records ending in `/check` whose name contains `scope`.
fn find<'a>(outcome: &'a RunOutcome, scope: &str, check: &str) -> Vec<&'a CheckRecord> {
    let suffix = format!("/{check}");
    outcome
        .report
        .checks
        .iter()
        .filter(|c| c.name.contains(scope) && c.name.ends_with(&suffix))
        .collect()
}

/// The check exists for `scope`, passed, covered at least `points` samples,
/// and was tested against a threshold at least as strict as `tol`.
fn require(outcome: &RunOutcome, scope: &str, check: &str, tol: Bound, points: usize) -> Result<f64, String> {
    let recs = find(outcome, scope, check);
    if recs.is_empty() {
        return Err(format!("no `{check}` record for {scope}"));
    }
    let mut worst = match tol {
        Bound::Below(_) => f64::NEG_INFINITY,
        Bound::Above(_) => f64::INFINITY,
    };
    for rec in recs {
        let strict_enough = match (tol, rec.bound) {
            (Bound::Below(t), Bound::Below(r)) => r <= t,
            (Bound::Above(t), Bound::Above(r)) => r >= t,
            _ => false,
        };
        if !strict_enough {
            return Err(format!("{} uses {:?}, weaker than {:?}", rec.name, rec.bound, tol));
        }
        if rec.status == Status::Fail {
            return Err(format!("{} = {:e} fails {:?}", rec.name, rec.value, rec.bound));
        }
        if rec.points < points {
            return Err(format!("{} covers {} points, need {points}", rec.name, rec.points));
        }
        worst = match tol {
            Bound::Below(_) => worst.max(rec.value),
            Bound::Above(_) => worst.min(rec.value),
        };
    }
    Ok(worst)
}

fn below(outcome: &RunOutcome, scope: &str, check: &str, tol: f64, points: usize) -> Result<f64, String> {
    require(outcome, scope, check, Bound::Below(tol), points)
}

fn configs(ms: &[(usize, usize)]) -> Vec<String> {
    ms.iter().map(|(m, k)| format!("/m={m},k={k}/")).collect()
}

fn pairs() -> Vec<String> {
    PairTag::ALL.iter().map(|p| format!("/{}/", p.label())).collect()
}

const MINIMAL: [(usize, usize); 8] = [(1, 3), (2, 2), (3, 2), (4, 2), (5, 1), (6, 1), (7, 2), (8, 2)];

fn clifford_validity() -> Result<String, String> {
    let out = run(Suite::Clifford, Some(1000))?;
    let mut worst = 0.0f64;
    for scope in configs(&MINIMAL) {
        for check in ["clifford.anticommutation", "clifford.orthogonality", "clifford.symmetry"] {
            worst = worst.max(below(&out, &scope, check, 1e-12, 1)?);
        }
    }
    let mut sos = 0.0f64;
    for flavor in ["FiveOn8d", "NineOn16d"] {
        sos = sos.max(below(&out, flavor, "full_square.sum_of_squares", 1e-12, 1000)?);
    }
    Ok(format!("max Clifford residual {worst:.1e}, max sum-of-squares residual {sos:.1e}"))
}

fn spectrum() -> Result<String, String> {
    let out = run(Suite::Geometry, Some(100))?;
    let mut eig = 0.0f64;
    let mut prod = 0.0f64;
    for scope in configs(&MINIMAL) {
        eig = eig.max(below(&out, &scope, "spectrum.eigenvalues", 1e-8, 100)?);
        below(&out, &scope, "spectrum.multiplicities", 0.5, 100)?;
        prod = prod.max(below(&out, &scope, "spectrum.curvature_products", 1e-10, 100)?);
    }
    Ok(format!("8 configurations × 100 points, max eigenvalue error {eig:.1e}, max |λλ'+1| {prod:.1e}"))
}

fn cor22(out: &RunOutcome) -> Result<String, String> {
    let (mut dist, mut gram) = (0.0f64, 0.0f64);
    for scope in configs(&[(1, 4), (2, 2), (3, 2), (4, 2)]) {
        dist = dist.max(below(out, &scope, "cor22.r0.image", 1e-8, 100)?);
        gram = gram.max(below(out, &scope, "cor22.r0.isometry", 1e-10, 100)?);
    }
    Ok(format!("max subspace distance {dist:.1e}, max Gram residual {gram:.1e}"))
}

fn cor24(out: &RunOutcome) -> Result<String, String> {
    let mut worst = [0.0f64; 4];
    for scope in pairs() {
        worst[0] = worst[0].max(below(out, &scope, "cor24.q_involution", 1e-10, 50)?);
        worst[1] = worst[1].max(below(out, &scope, "cor24.q.image", 1e-8, 50)?);
        worst[2] = worst[2].max(below(out, &scope, "cor24.dual_spectrum", 1e-8, 50)?);
        worst[3] = worst[3].max(below(out, &scope, "cor24.dual_distributions", 1e-8, 50)?);
    }
    let short = find(out, "/pair=3,4/", "cor24.q_range_4..7.q_squared");
    let short = short.first().ok_or("missing index-range comparison")?;
    Ok(format!(
        "|Q²−I| {:.1e}, image {:.1e}, spectrum {:.1e}, distributions {:.1e}; indices 4..7 give |Q²−I| up to {:.2}",
        worst[0], worst[1], worst[2], worst[3], short.value
    ))
}

fn theorem13(out: &RunOutcome) -> Result<String, String> {
    let (mut gram, mut image, mut jump) = (0.0f64, 0.0f64, 0.0f64);
    for scope in configs(&[(1, 3), (3, 2), (5, 1), (7, 2)]) {
        gram = gram.max(below(out, &scope, "thm13.sigma_tilde.isometry", 1e-10, 100)?);
        image = image.max(below(out, &scope, "thm13.sigma_tilde.image", 1e-8, 100)?);
        jump = jump.max(below(out, &scope, "thm13.continuity_jump_ratio", 10.0 + f64::EPSILON, 1)?);
    }
    let circle = below(out, "/m=1,k=3/", "thm13.circle_p0p1", 1e-10, 100)?;
    Ok(format!(
        "σ̃ Gram {gram:.1e}, image {image:.1e}, worst path jump ratio {jump:.2}, |σ|D2 − P0P1| {circle:.1e}"
    ))
}

fn nearly_kahler(out: &RunOutcome) -> Result<String, String> {
    let (mut g, mut agree, mut codazzi) = (0.0f64, 0.0f64, 0.0f64);
    for scope in pairs() {
        g = g.max(below(out, &scope, "nearly_kahler.g_iij", 1e-4, 20)?);
        agree = agree.max(below(out, &scope, "nearly_kahler.methods_agree", 1e-4, 20)?);
        codazzi = codazzi.max(below(out, &scope, "nearly_kahler.codazzi", 5e-5, 20)?);
    }
    let skew = find(out, "", "nearly_kahler.total_skew")
        .iter()
        .fold(0.0f64, |a, r| a.max(r.value));
    Ok(format!(
        "max |G_iij| {g:.1e}, method gap {agree:.1e}, Codazzi {codazzi:.1e} (mixed-distribution |G_ijk+G_jik| reaches {skew:.2}, outside this criterion)"
    ))
}

fn witness(out: &RunOutcome) -> Result<String, String> {
    let scope = "/pair=3,4/";
    let rel = below(out, scope, "prop31.relative_error", 1e-3, 20)?;
    let frac = require(out, scope, "prop31.nonvanishing", Bound::Above(0.95), 500)?;
    let range = below(out, scope, "prop31.factor_range", 1e-6, 500)?;
    Ok(format!(
        "relative error {rel:.1e} at 20 points, nonzero at {:.1}% of 500, max |factor| − cos2θ = {range:.1e}",
        100.0 * frac
    ))
}

fn star_ricci(out: &RunOutcome) -> Result<String, String> {
    let (mut ric, mut oracle, mut power) = (0.0f64, 0.0f64, 1.0f64);
    for scope in pairs() {
        ric = ric.max(below(out, &scope, "prop12.star_ricci", 1e-10, 1000)?);
        oracle = oracle.max(below(out, &scope, "prop12.oracle_agreement", 1e-10, 1000)?);
        oracle = oracle.max(below(out, &scope, "prop12.oracle_agreement_control", 1e-10, 100)?);
        power = power.min(require(out, &scope, "prop12.control_power", Bound::Above(0.9), 100)?);
    }
    Ok(format!(
        "max |*Ric| {ric:.1e} over 4×100×10 structures, oracle gap {oracle:.1e}, control visible at {:.0}% of points",
        100.0 * power
    ))
}

fn prop35(out: &RunOutcome) -> Result<String, String> {
    let mut trials = 0;
    let mut inconclusive = 0;
    for rec in find(out, "", "prop35.symmetry_iff") {
        if rec.status == Status::Fail {
            return Err(format!("contradictory outcome in {}", rec.name));
        }
        inconclusive += (rec.status == Status::Inconclusive) as usize;
        trials += rec.points;
    }
    if trials < 200 {
        return Err(format!("only {trials} symmetry trials"));
    }
    let (mut rho, mut partner, mut k) = (0.0f64, 0.0f64, 0.0f64);
    for scope in pairs() {
        rho = rho.max(below(out, &scope, "prop35.rho", 1e-10, 1)?);
        partner = partner.max(below(out, &scope, "prop35.partner_space", 1e-8, 1)?);
        k = k.max(below(out, &scope, "prop35.kronecker", 1e-8, 1)?);
    }
    Ok(format!(
        "{trials} (point, J) trials, 0 contradictory, {inconclusive} inconclusive records; |ρ| {rho:.1e}, J(E_λ) gap {partner:.1e}, K rel. error {k:.1e}"
    ))
}

fn determinism() -> Result<String, String> {
    let mut bytes = 0;
    for suite in Suite::CONCRETE {
        let samples = Some(if suite == Suite::Clifford { 50 } else { 3 });
        let mut renders = Vec::new();
        for workers in [1, 4, 1, 4] {
            let out = run_suite(&config(suite, samples, workers)).map_err(|e| e.to_string())?;
            renders.push((output::render(&out, Format::Tree), output::render(&out, Format::Table)));
        }
        if renders.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("{suite}: reports differ between runs"));
        }
        bytes += renders[0].0.len();
    }
    Ok(format!("5 suites × 4 runs (1 and 4 workers) byte-identical, {bytes} bytes of tree output"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Result<String, String>)> = Vec::new();
    results.push((1, "Clifford validity", clifford_validity()));
    results.push((2, "spectrum reproduction", spectrum()));
    match run(Suite::Isomorphisms, Some(100)) {
        Ok(out) => {
            results.push((3, "R_0: D_1 ≅ D_3", cor22(&out)));
            results.push((4, "Q: D_2 ≅ D_4 and the dual family", cor24(&out)));
            results.push((5, "σ̃: D_1⊕D_2 ≅ D_1⊕D_4 for odd m", theorem13(&out)));
        }
        Err(e) => {
            for (n, t) in [(3, "R_0: D_1 ≅ D_3"), (4, "Q: D_2 ≅ D_4"), (5, "σ̃ for odd m")] {
                results.push((n, t, Err(e.clone())));
            }
        }
    }
    match run(Suite::NearlyKahler, Some(20)) {
        Ok(out) => {
            results.push((6, "nearly Kähler diagonal terms", nearly_kahler(&out)));
            results.push((7, "Nijenhuis witness", witness(&out)));
        }
        Err(e) => {
            results.push((6, "nearly Kähler diagonal terms", Err(e.clone())));
            results.push((7, "Nijenhuis witness", Err(e)));
        }
    }
    match run(Suite::StarRicci, Some(100)) {
        Ok(out) => {
            results.push((8, "*Ric = 0 for pair-swapping J", star_ricci(&out)));
            results.push((9, "symmetry criterion and weakly *-Einstein", prop35(&out)));
        }
        Err(e) => {
            results.push((8, "*Ric = 0 for pair-swapping J", Err(e.clone())));
            results.push((9, "symmetry criterion", Err(e)));
        }
    }
    results.push((10, "determinism", determinism()));

    let mut failed = 0;
    for (n, title, result) in &results {
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS  {title}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {title}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
