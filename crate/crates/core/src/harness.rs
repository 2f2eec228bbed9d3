//! Solve reports, benchmark sweeps and CSV output.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geometry::Geometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub t: usize,
    pub f_best: f64,
    pub f_ergodic: Option<f64>,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum Termination {
    GapReached,
    BudgetExhausted,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub geometry: Geometry,
    pub ambiguity: String,
    pub rows: Vec<IterationRow>,
    pub termination: Termination,
    /// Best point found.
    pub x: Vec<f64>,
    /// Infinite when nothing was evaluated; stored as `null` in JSON.
    #[serde(deserialize_with = "null_as_infinity")]
    pub f_best: f64,
    pub lower_bound: Option<f64>,
    pub iterations: usize,
    pub wall_ms: f64,
    /// Stepsizes, estimates, seeds and other settings of the run.
    pub config: BTreeMap<String, serde_json::Value>,
}

fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl SolveReport {
    pub fn new(solver: &str, geometry: Geometry, ambiguity: &str) -> Self {
        SolveReport {
            solver: solver.to_string(),
            geometry,
            ambiguity: ambiguity.to_string(),
            rows: Vec::new(),
            termination: Termination::BudgetExhausted,
            x: Vec::new(),
            f_best: f64::INFINITY,
            lower_bound: None,
            iterations: 0,
            wall_ms: 0.0,
            config: BTreeMap::new(),
        }
    }

    pub fn echo(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.config.insert(key.to_string(), v);
    }

    /// First logged iteration whose best value is within `target` relative gap
    /// of `fstar`, with its wall time in seconds.
    pub fn first_hit(&self, fstar: f64, target: f64) -> Option<(usize, f64)> {
        self.rows
            .iter()
            .find(|r| relative_gap(r.f_best, fstar) <= target)
            .map(|r| (r.t, r.wall_ms / 1000.0))
    }
}

pub fn save_report(report: &SolveReport, path: impl AsRef<std::path::Path>) -> crate::error::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn load_report(path: impl AsRef<std::path::Path>) -> crate::error::Result<SolveReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// `(ub - lb) / max(|lb|, 1e-12)`.
pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    let g = ub - lb;
    if g <= 0.0 {
        return 0.0;
    }
    g / lb.abs().max(1e-12)
}

/// Common stopping rule: a gap target against the reference value when given,
/// otherwise against the certified lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StopRule {
    pub gap_rel: Option<f64>,
    pub gap_abs: Option<f64>,
    pub reference_fstar: Option<f64>,
}

impl StopRule {
    pub fn reached(&self, ub: f64, lb: Option<f64>) -> bool {
        let lower = match (self.reference_fstar, lb) {
            (Some(r), _) => r,
            (None, Some(l)) => l,
            (None, None) => return false,
        };
        if let Some(a) = self.gap_abs {
            if ub - lower <= a {
                return true;
            }
        }
        if let Some(r) = self.gap_rel {
            if relative_gap(ub, lower) <= r {
                return true;
            }
        }
        false
    }
}

/// Wall clock of one solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Clock {
    start: Instant,
    limit_ms: Option<f64>,
}

impl Clock {
    pub(crate) fn start(limit_secs: Option<f64>) -> Self {
        Clock { start: Instant::now(), limit_ms: limit_secs.map(|s| s * 1000.0) }
    }

    pub(crate) fn ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1000.0
    }

    pub(crate) fn expired(&self) -> bool {
        self.limit_ms.is_some_and(|l| self.ms() >= l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Sd,
    Ssl,
    Benders,
    Md,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Sd => "sd",
            SolverKind::Ssl => "ssl",
            SolverKind::Benders => "benders",
            SolverKind::Md => "md",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sd" => Ok(SolverKind::Sd),
            "ssl" => Ok(SolverKind::Ssl),
            "benders" => Ok(SolverKind::Benders),
            "md" | "mirror_descent" => Ok(SolverKind::Md),
            other => Err(format!("unknown solver '{other}' (expected sd, ssl, benders or md)")),
        }
    }
}

/// Budgets and targets shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub stop: StopRule,
    pub max_iters: Option<usize>,
    pub time_limit_secs: Option<f64>,
}

/// Runs one solver with its default options and the given budgets.
pub fn run_solver(
    kind: SolverKind,
    inst: &crate::model::DroInstance,
    geometry: Geometry,
    settings: &RunSettings,
) -> crate::error::Result<SolveReport> {
    use crate::baselines::{benders_solve, mirror_descent_solve, BendersOptions, MirrorDescentOptions};
    use crate::sd::{sd_solve, SdOptions};
    use crate::ssl::{ssl_solve, SslOptions};
    let time = settings.time_limit_secs;
    let stop = settings.stop;
    match kind {
        SolverKind::Sd => {
            let d = SdOptions::default();
            let opts = SdOptions { stop, time_limit_secs: time, max_iters: settings.max_iters.unwrap_or(d.max_iters), ..d };
            sd_solve(inst, geometry, &opts)
        }
        SolverKind::Ssl => {
            let d = SslOptions::default();
            let opts =
                SslOptions { stop, time_limit_secs: time, max_iters: settings.max_iters.unwrap_or(d.max_iters), ..d };
            ssl_solve(inst, geometry, &opts)
        }
        SolverKind::Benders => {
            let d = BendersOptions::default();
            let opts = BendersOptions { stop, time_limit_secs: time, max_iters: settings.max_iters.unwrap_or(d.max_iters) };
            benders_solve(inst, geometry, &opts)
        }
        SolverKind::Md => {
            let d = MirrorDescentOptions::default();
            let opts = MirrorDescentOptions {
                stop,
                time_limit_secs: time,
                max_iters: settings.max_iters.unwrap_or(d.max_iters),
                ..d
            };
            mirror_descent_solve(inst, geometry, &opts)
        }
    }
}

fn default_x_upper() -> f64 {
    crate::model::DEFAULT_X_UPPER
}

/// A benchmark grid, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    pub m: usize,
    pub k_list: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_x_upper")]
    pub x_upper: f64,
    pub ambiguities: Vec<crate::model::AmbiguityTemplate>,
    pub geometries: Vec<Geometry>,
    pub solvers: Vec<SolverKind>,
    /// Relative gap targets, e.g. `[0.1, 0.01, 0.001]`.
    pub targets: Vec<f64>,
    pub time_cap_secs: f64,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

impl BenchConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        use crate::error::{DroError, Violation};
        let mut v = Vec::new();
        let empty = |name: &str, is_empty: bool, v: &mut Vec<Violation>| {
            if is_empty {
                v.push(Violation::new(name, "must not be empty"));
            }
        };
        empty("k_list", self.k_list.is_empty(), &mut v);
        empty("seeds", self.seeds.is_empty(), &mut v);
        empty("ambiguities", self.ambiguities.is_empty(), &mut v);
        empty("geometries", self.geometries.is_empty(), &mut v);
        empty("solvers", self.solvers.is_empty(), &mut v);
        empty("targets", self.targets.is_empty(), &mut v);
        if self.targets.iter().any(|t| !(*t > 0.0)) {
            v.push(Violation::new("targets", "must be positive"));
        }
        if !(self.time_cap_secs > 0.0) {
            v.push(Violation::new("time_cap_secs", "must be positive"));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(DroError::Invalid(v))
        }
    }

    pub fn from_json(text: &str) -> crate::error::Result<Self> {
        let c: BenchConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Outcome of one (cell, solver, target) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BenchResult {
    Hit { iters: usize, secs: f64 },
    /// Target not reached within the time cap or iteration budget.
    Na,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub solver: SolverKind,
    pub geometry: Geometry,
    pub ambiguity: String,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub target: f64,
    pub result: BenchResult,
}

/// Absolute gap of the reference solve.
pub const REFERENCE_GAP: f64 = 1e-3;

/// Reference optimal value: the certified upper bound of an SSL solve to
/// absolute gap [`REFERENCE_GAP`].
pub fn reference_fstar(inst: &crate::model::DroInstance, geometry: Geometry) -> crate::error::Result<f64> {
    let opts = crate::ssl::SslOptions {
        stop: StopRule { gap_abs: Some(REFERENCE_GAP), ..Default::default() },
        max_iters: 1_000_000,
        ..Default::default()
    };
    let r = crate::ssl::ssl_solve(inst, geometry, &opts)?;
    match r.termination {
        Termination::GapReached => Ok(r.f_best),
        Termination::BudgetExhausted => {
            Err(crate::error::DroError::Diagnostic("reference solve did not reach its gap".into()))
        }
        Termination::Error(e) => Err(crate::error::DroError::Diagnostic(format!("reference solve failed: {e}"))),
    }
}

/// Runs every cell of the grid. Errors inside a cell become rows.
pub fn run_benchmark(config: &BenchConfig) -> crate::error::Result<Vec<BenchRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    let tightest = config.targets.iter().cloned().fold(f64::INFINITY, f64::min);
    for &k in &config.k_list {
        for &seed in &config.seeds {
            for template in &config.ambiguities {
                let inst = crate::model::generate_from_template(seed, config.n, config.m, k, config.x_upper, template)
                    .map_err(|e| e.to_string());
                // the reference uses the entropy geometry unless the set needs Euclidean
                let ref_geometry = match template {
                    crate::model::AmbiguityTemplate::ChiSquare { .. } => Geometry::Euclidean,
                    _ => Geometry::Entropy,
                };
                let fstar = inst.as_ref().map_err(|e| e.clone()).and_then(|i| {
                    reference_fstar(i, ref_geometry).map_err(|e| format!("reference: {e}"))
                });
                for &geometry in &config.geometries {
                    for &solver in &config.solvers {
                        let outcome: std::result::Result<SolveReport, String> = match (&inst, &fstar) {
                            (Ok(i), Ok(f)) => run_solver(
                                solver,
                                i,
                                geometry,
                                &RunSettings {
                                    stop: StopRule { gap_rel: Some(tightest), reference_fstar: Some(*f), gap_abs: None },
                                    max_iters: config.max_iters,
                                    time_limit_secs: Some(config.time_cap_secs),
                                },
                            )
                            .map_err(|e| e.to_string()),
                            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                        };
                        for &target in &config.targets {
                            let result = match &outcome {
                                Err(e) => BenchResult::Error(e.clone()),
                                Ok(r) => match (&r.termination, fstar.as_ref().ok()) {
                                    (Termination::Error(e), _) => BenchResult::Error(e.clone()),
                                    (_, Some(&f)) => match r.first_hit(f, target) {
                                        Some((iters, secs)) if secs <= config.time_cap_secs => {
                                            BenchResult::Hit { iters, secs }
                                        }
                                        _ => BenchResult::Na,
                                    },
                                    (_, None) => BenchResult::Na,
                                },
                            };
                            rows.push(BenchRow {
                                solver,
                                geometry,
                                ambiguity: template.kind_name().to_string(),
                                k,
                                n: config.n,
                                m: config.m,
                                seed,
                                target,
                                result,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 10] = ["solver", "geometry", "ambiguity", "K", "n", "m", "seed", "target", "iters", "secs"];

/// Writes rows with `NA` for missed targets and `ERROR` for failed runs.
pub fn write_bench_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> crate::error::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let (iters, secs) = match &r.result {
            BenchResult::Hit { iters, secs } => (iters.to_string(), format!("{secs:.6}")),
            BenchResult::Na => ("NA".to_string(), "NA".to_string()),
            BenchResult::Error(_) => ("ERROR".to_string(), "ERROR".to_string()),
        };
        w.write_record([
            r.solver.name().to_string(),
            r.geometry.name().to_string(),
            r.ambiguity.clone(),
            r.k.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.seed.to_string(),
            r.target.to_string(),
            iters,
            secs,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-iteration log of a report.
pub fn write_report_csv<W: std::io::Write>(report: &SolveReport, out: W) -> crate::error::Result<()> {
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "f_best", "f_ergodic", "lb", "ub", "wall_ms"])?;
    for r in &report.rows {
        w.write_record([
            r.t.to_string(),
            r.f_best.to_string(),
            opt(r.f_ergodic),
            opt(r.lb),
            opt(r.ub),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub solver_a: String,
    pub solver_b: String,
    pub f_a: f64,
    pub f_b: f64,
    /// `|f_a - f_b| / max(|f_a|, |f_b|, 1e-12)`.
    pub rel_diff: f64,
    pub iters_a: usize,
    pub iters_b: usize,
    pub wall_ms_a: f64,
    pub wall_ms_b: f64,
    /// `wall_ms_b / wall_ms_a`.
    pub speedup_a: f64,
}

pub fn compare(a: &SolveReport, b: &SolveReport) -> Comparison {
    Comparison {
        solver_a: a.solver.clone(),
        solver_b: b.solver.clone(),
        f_a: a.f_best,
        f_b: b.f_best,
        rel_diff: (a.f_best - b.f_best).abs() / a.f_best.abs().max(b.f_best.abs()).max(1e-12),
        iters_a: a.iterations,
        iters_b: b.iterations,
        wall_ms_a: a.wall_ms,
        wall_ms_b: b.wall_ms,
        speedup_a: b.wall_ms / a.wall_ms.max(1e-9),
    }
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<10} f = {:.9}  iters = {:>7}  wall = {:.3} ms", self.solver_a, self.f_a, self.iters_a, self.wall_ms_a)?;
        writeln!(f, "{:<10} f = {:.9}  iters = {:>7}  wall = {:.3} ms", self.solver_b, self.f_b, self.iters_b, self.wall_ms_b)?;
        write!(f, "relative difference {:.3e}, time ratio b/a {:.3}", self.rel_diff, self.speedup_a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_gap_basics() {
        assert_eq!(relative_gap(1.0, 1.0), 0.0);
        assert!((relative_gap(1.1, 1.0) - 0.1).abs() < 1e-12);
        assert_eq!(relative_gap(0.9, 1.0), 0.0);
    }

    #[test]
    fn stop_rule_prefers_reference() {
        let s = StopRule { gap_rel: Some(0.01), reference_fstar: Some(100.0), gap_abs: None };
        assert!(s.reached(100.5, Some(0.0)));
        assert!(!s.reached(102.0, Some(101.0)));
    }

    #[test]
    fn config_validation() {
        let c = BenchConfig {
            n: 2,
            m: 2,
            k_list: vec![],
            seeds: vec![1],
            x_upper: 10.0,
            ambiguities: vec![crate::model::AmbiguityTemplate::Simplex],
            geometries: vec![Geometry::Entropy],
            solvers: vec![SolverKind::Sd],
            targets: vec![0.1],
            time_cap_secs: 0.0,
            max_iters: None,
        };
        match c.validate() {
            Err(crate::error::DroError::Invalid(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
