//! Run configuration: optional values gathered from a key = value file and
//! from command-line flags, resolved into a validated [`RunConfig`].

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fkm_core::tolerances;
use serde::Serialize;

use crate::RunError;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "FKM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Clifford,
    Geometry,
    Isomorphisms,
    NearlyKahler,
    StarRicci,
    All,
}

impl Suite {
    pub const CONCRETE: [Suite; 5] = [
        Suite::Clifford,
        Suite::Geometry,
        Suite::Isomorphisms,
        Suite::NearlyKahler,
        Suite::StarRicci,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Clifford => "clifford",
            Suite::Geometry => "geometry",
            Suite::Isomorphisms => "isomorphisms",
            Suite::NearlyKahler => "nearly-kahler",
            Suite::StarRicci => "star-ricci",
            Suite::All => "all",
        }
    }

    /// Suites that differentiate numerically and need `θ` away from the
    /// ends of `(0, π/4)`.
    pub fn uses_finite_differences(self) -> bool {
        matches!(self, Suite::NearlyKahler | Suite::All)
    }

    pub fn default_samples(self) -> usize {
        match self {
            Suite::Clifford => 1000,
            Suite::Geometry | Suite::Isomorphisms | Suite::StarRicci => 100,
            Suite::NearlyKahler => 20,
            Suite::All => 20,
        }
    }

    pub(crate) fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Suite::All]
            .into_iter()
            .chain(Suite::CONCRETE)
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Tree,
    Table,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tree" => Ok(Format::Tree),
            "table" => Ok(Format::Table),
            _ => Err(format!("unknown format `{s}` (expected tree or table)")),
        }
    }
}

/// Multiplicity pair `(m_1, m_2)` of a family cut out of a full-square
/// system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairTag(pub usize, pub usize);

impl PairTag {
    pub const ALL: [PairTag; 4] = [PairTag(1, 2), PairTag(1, 6), PairTag(2, 5), PairTag(3, 4)];

    /// Whether the pair is cut from the 9-matrix system on `R^16` (as
    /// opposed to the 5-matrix system on `R^8`).
    pub fn uses_nine(self) -> bool {
        self != PairTag(1, 2)
    }

    pub fn label(self) -> String {
        format!("pair={},{}", self.0, self.1)
    }
}

impl FromStr for PairTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("pair `{s}` must look like a,b"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("pair `{s}`: {e}"))
        };
        let tag = PairTag(parse(a)?, parse(b)?);
        if PairTag::ALL.contains(&tag) {
            Ok(tag)
        } else {
            Err(format!("pair `{s}` is not one of 1,2 1,6 2,5 3,4"))
        }
    }
}

impl fmt::Display for PairTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

/// Parses `name=value` into a tolerance override.
pub fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("tolerance `{s}` must look like name=value"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("tolerance `{s}`: {e}"))?;
    if !value.is_finite() {
        return Err(format!("tolerance `{s}` is not finite"));
    }
    Ok((name.trim().to_string(), value))
}

/// Values that may or may not have been given. File values are overlaid by
/// flag values.
#[derive(Debug, Clone, Default)]
pub struct ConfigInput {
    pub suite: Option<Suite>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub pair: Option<PairTag>,
    pub theta: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub fd_step: Option<f64>,
    pub tol: Vec<(String, f64)>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
    pub timing: Option<bool>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("`{key}`: {e}"))
}

impl ConfigInput {
    /// Reads flat `key = value` lines. `#` starts a comment.
    pub fn parse_file_contents(text: &str) -> Result<Self, String> {
        let mut input = ConfigInput::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let value = value.trim();
            let err = |e: String| format!("line {}: {e}", lineno + 1);
            if let Some(name) = key.trim().strip_prefix("tol.") {
                let v: f64 = parse_value(name, value).map_err(err)?;
                input.tol.push((name.to_string(), v));
                continue;
            }
            let key = key.trim().replace('_', "-");
            match key.as_str() {
                "suite" => input.suite = Some(parse_value(&key, value).map_err(err)?),
                "m" => input.m = Some(parse_value(&key, value).map_err(err)?),
                "k" => input.k = Some(parse_value(&key, value).map_err(err)?),
                "pair" => input.pair = Some(parse_value(&key, value).map_err(err)?),
                "theta" => input.theta = Some(parse_value(&key, value).map_err(err)?),
                "samples" => input.samples = Some(parse_value(&key, value).map_err(err)?),
                "seed" => input.seed = Some(parse_value(&key, value).map_err(err)?),
                "fd-step" => input.fd_step = Some(parse_value(&key, value).map_err(err)?),
                "output" => input.output = Some(PathBuf::from(value)),
                "format" => input.format = Some(parse_value(&key, value).map_err(err)?),
                "workers" => input.workers = Some(parse_value(&key, value).map_err(err)?),
                "timing" => input.timing = Some(parse_value(&key, value).map_err(err)?),
                "tol" => input.tol.push(parse_tol(value).map_err(err)?),
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(input)
    }

    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_file_contents(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    }

    /// `self` overridden by every value present in `other`. Tolerance
    /// overrides accumulate, later entries winning.
    pub fn overlay(mut self, other: ConfigInput) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(suite, m, k, pair, theta, samples, seed, fd_step, output, format, workers, timing);
        self.tol.extend(other.tol);
        self
    }

    pub fn resolve(self) -> Result<RunConfig, RunError> {
        let suite = self
            .suite
            .ok_or_else(|| RunError::Config("no suite given".into()))?;
        let theta = self.theta.unwrap_or(0.3);
        if !(theta > 0.0 && theta < FRAC_PI_4) {
            return Err(RunError::Config(format!("theta = {theta} is outside (0, π/4)")));
        }
        let margin = tolerances::FD_THETA_MARGIN;
        if suite.uses_finite_differences() && !(margin..=FRAC_PI_4 - margin).contains(&theta) {
            return Err(RunError::Config(format!(
                "theta = {theta} is outside [{margin}, π/4 − {margin}] required by the {suite} suite"
            )));
        }
        if suite == Suite::NearlyKahler && self.m.is_some() && self.pair.is_none() {
            return Err(RunError::Config(
                "the nearly-kahler suite runs on full-square pairs; use --pair instead of --m".into(),
            ));
        }
        if self.samples == Some(0) {
            return Err(RunError::Config("samples must be at least 1".into()));
        }
        let fd_step = self.fd_step.unwrap_or(tolerances::FD_STEP);
        if !(fd_step > 0.0 && fd_step < 0.1) {
            return Err(RunError::Config(format!("fd-step = {fd_step} is outside (0, 0.1)")));
        }
        if let Some(m) = self.m {
            if m == 0 {
                return Err(RunError::Config("m must be at least 1".into()));
            }
        }
        if self.k.is_some() && self.m.is_none() {
            return Err(RunError::Config("--k needs --m".into()));
        }
        if self.k == Some(0) {
            return Err(RunError::Config("k must be at least 1".into()));
        }
        let workers = match self.workers {
            Some(w) => w,
            None => default_workers()?,
        };
        if workers == 0 {
            return Err(RunError::Config("workers must be at least 1".into()));
        }
        let tol: BTreeMap<String, f64> = self.tol.into_iter().collect();
        Ok(RunConfig {
            suite,
            m: self.m,
            k: self.k,
            pair: self.pair,
            theta,
            samples: self.samples,
            seed: self.seed.unwrap_or(0),
            fd_step,
            tol,
            output: self.output,
            format: self.format.unwrap_or(Format::Tree),
            workers,
            timing: self.timing.unwrap_or(false),
        })
    }
}

fn default_workers() -> Result<usize, RunError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| RunError::Config(format!("{WORKERS_ENV}={v}: {e}"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// A validated run. `workers`, `output` and `timing` do not influence the
/// report body and are left out of its config echo.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub suite: Suite,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub pair: Option<PairTag>,
    pub theta: f64,
    /// `None` uses the per-suite default.
    pub samples: Option<usize>,
    pub seed: u64,
    pub fd_step: f64,
    pub tol: BTreeMap<String, f64>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub format: Format,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub timing: bool,
}

impl RunConfig {
    /// A configuration with defaults for everything but the suite.
    pub fn new(suite: Suite) -> Self {
        ConfigInput {
            suite: Some(suite),
            theta: Some(0.3),
            workers: Some(1),
            ..Default::default()
        }
        .resolve()
        .expect("defaults are valid")
    }
}
