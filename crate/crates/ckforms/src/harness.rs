//! Suite orchestration: metric ingestion, fixture library, check execution,
//! and machine-readable reports.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{self, Expr};
use crate::geometry::Geometry;
use crate::metric::MetricSpec;

pub mod checks;
pub mod fixtures;

/// Which check families to run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Curvature,
    Tractor,
    Prolong,
    Coupled,
    Helicity,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Suite, String> {
        match s {
            "curvature" => Ok(Suite::Curvature),
            "tractor" => Ok(Suite::Tractor),
            "prolong" => Ok(Suite::Prolong),
            "coupled" => Ok(Suite::Coupled),
            "helicity" => Ok(Suite::Helicity),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite `{}`", other)),
        }
    }
}

/// Tolerances: a residual passes when |r| <= atol + rtol * scale.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Tolerance {
        Tolerance {
            atol: 1e-9,
            rtol: 1e-6,
        }
    }
}

impl Tolerance {
    pub fn pass(&self, residual: f64, scale: f64) -> bool {
        residual <= self.atol + self.rtol * scale
    }
    pub fn with_rtol(rtol: f64) -> Tolerance {
        Tolerance { atol: 1e-9, rtol }
    }
}

/// Suite configuration; deterministic given the seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub metric: String,
    pub dim: usize,
    pub signature: String,
    pub k_values: Vec<usize>,
    pub l_values: Vec<usize>,
    pub points: usize,
    pub seed: u64,
    pub atol: f64,
    pub rtol: f64,
    pub jet_order_cap: usize,
    pub suite: Suite,
    /// Check id whose defining constant is perturbed (mutation self-test).
    pub mutate: Option<String>,
}

impl Default for SuiteConfig {
    fn default() -> SuiteConfig {
        SuiteConfig {
            metric: "flat".into(),
            dim: 4,
            signature: "riemannian".into(),
            k_values: vec![1, 2, 3],
            l_values: vec![1, 2],
            points: 10,
            seed: 7,
            atol: 1e-9,
            rtol: 1e-6,
            jet_order_cap: 4,
            suite: Suite::All,
            mutate: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("metric file error: {0}")]
    MetricFile(String),
    #[error(transparent)]
    Metric(#[from] crate::metric::MetricError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeomError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One executed check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub anchor: String,
    pub max_residual: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub points: usize,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Machine-readable verification report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: SuiteConfig,
    pub metric_name: String,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Copy with wall-time fields zeroed, for determinism comparisons.
    pub fn without_walltime(&self) -> Report {
        let mut r = self.clone();
        for c in r.checks.iter_mut() {
            c.wall_ms = 0.0;
        }
        r
    }
}

/// Description of a metric-spec file: expressions as strings.
#[derive(Debug, Serialize, Deserialize)]
pub struct MetricFile {
    pub dim: usize,
    pub coords: Vec<String>,
    #[serde(default = "default_signature")]
    pub signature: String,
    pub g: Vec<Vec<String>>,
    #[serde(default)]
    pub sample_box: Option<Vec<(f64, f64)>>,
}

fn default_signature() -> String {
    "riemannian".into()
}

/// Load a metric from a builtin name (`flat`, `conf_flat`, `sphere`,
/// `schwarzschild`, `random`) or a TOML/JSON file path.
pub fn load_metric(
    name_or_path: &str,
    dim: usize,
    signature: &str,
    seed: u64,
) -> Result<MetricSpec, HarnessError> {
    let lorentzian = matches!(signature, "lorentzian");
    let spec = match name_or_path {
        "flat" => MetricSpec::flat(dim, lorentzian),
        "conf_flat" => {
            let coords: Vec<String> = (1..=dim).map(|i| format!("x{}", i)).collect();
            let ups = expr::parse("(x1 + x2/2)/4 + x1*x2/8", &coords)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            MetricSpec::conf_flat(dim, &ups)
        }
        "sphere" | "sphere_stereographic" => MetricSpec::sphere_stereographic(dim),
        "schwarzschild" => {
            if dim != 4 {
                return Err(HarnessError::Config(
                    "schwarzschild is a 4-dimensional chart".into(),
                ));
            }
            MetricSpec::schwarzschild(1.0)
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            MetricSpec::random_perturbed(dim, 0.05, &mut rng)
        }
        path => {
            let text = std::fs::read_to_string(Path::new(path))?;
            let file: MetricFile = if path.ends_with(".json") {
                serde_json::from_str(&text).map_err(|e| HarnessError::MetricFile(e.to_string()))?
            } else {
                toml::from_str(&text).map_err(|e| HarnessError::MetricFile(e.to_string()))?
            };
            metric_from_file(file)?
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn metric_from_file(file: MetricFile) -> Result<MetricSpec, HarnessError> {
    let n = file.dim;
    if file.coords.len() != n {
        return Err(HarnessError::MetricFile(format!(
            "expected {} coordinate names, found {}",
            n,
            file.coords.len()
        )));
    }
    let mut g = Vec::with_capacity(n);
    for row in &file.g {
        let mut out = Vec::with_capacity(n);
        for src in row {
            out.push(
                expr::parse(src, &file.coords)
                    .map_err(|e| HarnessError::MetricFile(e.to_string()))?,
            );
        }
        g.push(out);
    }
    let signature = match file.signature.as_str() {
        "riemannian" => (n, 0),
        "lorentzian" => (n - 1, 1),
        other => {
            return Err(HarnessError::MetricFile(format!(
                "unknown signature `{}`",
                other
            )))
        }
    };
    Ok(MetricSpec {
        name: "file".into(),
        n,
        coords: file.coords,
        signature,
        g,
        sample_box: file
            .sample_box
            .unwrap_or_else(|| vec![(-1.0, 1.0); n]),
        oriented: true,
    })
}

/// Draw a sample point; points where the metric degenerates are resampled.
pub fn sample_point(metric: &MetricSpec, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let p: Vec<f64> = metric
            .sample_box
            .iter()
            .map(|(lo, hi)| rng.gen_range(*lo..*hi))
            .collect();
        if Geometry::new(metric, &p, 0).is_ok() {
            return p;
        }
    }
}

pub fn sample_points(metric: &MetricSpec, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..count).map(|_| sample_point(metric, rng)).collect()
}

/// A registered check: id, anchor text, and per-suite membership.
pub struct CheckDef {
    pub id: &'static str,
    pub anchor: &'static str,
    pub suite: Suite,
    pub run: fn(&CheckCtx) -> Vec<CheckOutcome>,
}

/// Execution context handed to each check.
pub struct CheckCtx {
    pub cfg: SuiteConfig,
    pub metric: MetricSpec,
    pub points: Vec<Vec<f64>>,
    pub tol: Tolerance,
}

impl CheckCtx {
    pub fn is_mutated(&self, id: &str) -> bool {
        self.cfg.mutate.as_deref() == Some(id)
    }
    pub fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_mul(0x9e3779b9).wrapping_add(salt))
    }
}

/// Raw result of a check run (possibly several variants per check id).
pub struct CheckOutcome {
    pub id: String,
    pub anchor: String,
    pub max_residual: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: Option<String>,
}

impl CheckOutcome {
    pub fn from_residual(
        id: impl Into<String>,
        anchor: &str,
        residual: f64,
        scale: f64,
        tol: Tolerance,
    ) -> CheckOutcome {
        let threshold = tol.atol + tol.rtol * scale.max(1.0);
        CheckOutcome {
            id: id.into(),
            anchor: anchor.to_string(),
            max_residual: residual,
            scale,
            tolerance: threshold,
            pass: residual <= threshold,
            note: None,
        }
    }

    /// A control that must EXCEED the floor to pass (guards vacuous tests).
    pub fn from_control(
        id: impl Into<String>,
        anchor: &str,
        residual: f64,
        floor: f64,
    ) -> CheckOutcome {
        CheckOutcome {
            id: id.into(),
            anchor: anchor.to_string(),
            max_residual: residual,
            scale: floor,
            tolerance: floor,
            pass: residual > floor,
            note: Some("negative control: residual must exceed the floor".into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> CheckOutcome {
        self.note = Some(note.into());
        self
    }
}

/// Run the configured suite and assemble the report.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Report, HarnessError> {
    validate_config(cfg)?;
    let metric = load_metric(&cfg.metric, cfg.dim, &cfg.signature, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points = sample_points(&metric, cfg.points, &mut rng);
    let tol = Tolerance {
        atol: cfg.atol,
        rtol: cfg.rtol,
    };
    let ctx = CheckCtx {
        cfg: cfg.clone(),
        metric: metric.clone(),
        points,
        tol,
    };

    let defs: Vec<&CheckDef> = checks::registry()
        .iter()
        .filter(|d| cfg.suite == Suite::All || d.suite == cfg.suite)
        .collect();

    let timed: Vec<(Vec<CheckOutcome>, f64)> = defs
        .par_iter()
        .map(|d| {
            let t0 = Instant::now();
            let outcomes = (d.run)(&ctx);
            (outcomes, t0.elapsed().as_secs_f64() * 1e3)
        })
        .collect();

    let mut results = Vec::new();
    for ((outcomes, wall), def) in timed.into_iter().zip(defs.iter()) {
        let per = wall / outcomes.len().max(1) as f64;
        let _ = def;
        for o in outcomes {
            results.push(CheckResult {
                id: o.id,
                anchor: o.anchor,
                max_residual: o.max_residual,
                scale: o.scale,
                tolerance: o.tolerance,
                pass: o.pass,
                points: cfg.points,
                wall_ms: per,
                note: o.note,
            });
        }
    }
    results.sort_by(|a, b| a.id.cmp(&b.id));
    let pass = results.iter().all(|c| c.pass);
    Ok(Report {
        version: "1".into(),
        config: cfg.clone(),
        metric_name: metric.name.clone(),
        checks: results,
        pass,
    })
}

fn validate_config(cfg: &SuiteConfig) -> Result<(), HarnessError> {
    if cfg.dim < 3 {
        return Err(HarnessError::Config("dimension must be >= 3".into()));
    }
    if cfg.jet_order_cap > 4 {
        return Err(HarnessError::Config(
            "metric jets are capped at order 4".into(),
        ));
    }
    for &k in &cfg.k_values {
        if k == 0 || k > cfg.dim - 1 {
            return Err(HarnessError::Config(format!(
                "form rank k = {} outside 1..={}",
                k,
                cfg.dim - 1
            )));
        }
    }
    if cfg.points == 0 {
        return Err(HarnessError::Config("need at least one point".into()));
    }
    if let Some(id) = &cfg.mutate {
        if !checks::MUTABLE_CHECKS.contains(&id.as_str()) {
            return Err(HarnessError::Config(format!(
                "check `{}` has no mutation hook (available: {})",
                id,
                checks::MUTABLE_CHECKS.join(", ")
            )));
        }
    }
    Ok(())
}

/// Stable table of check ids and their identity anchors.
pub fn list_checks() -> Vec<(String, String, Suite)> {
    checks::registry()
        .iter()
        .map(|d| (d.id.to_string(), d.anchor.to_string(), d.suite))
        .collect()
}

/// Group residual outcomes by id keeping the worst residual per id.
pub fn worst_by_id(outcomes: Vec<CheckOutcome>) -> Vec<CheckOutcome> {
    let mut map: BTreeMap<String, CheckOutcome> = BTreeMap::new();
    for o in outcomes {
        match map.get_mut(&o.id) {
            Some(prev) => {
                if o.max_residual > prev.max_residual {
                    *prev = o;
                }
            }
            None => {
                map.insert(o.id.clone(), o);
            }
        }
    }
    map.into_values().collect()
}

/// Expression for coordinate names x1..xn.
pub fn coord_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{}", i)).collect()
}

/// Parse an expression over x1..xn, panicking on fixture errors.
pub fn fixture_expr(src: &str, n: usize) -> Expr {
    expr::parse(src, &coord_names(n)).expect("fixture expression")
}
