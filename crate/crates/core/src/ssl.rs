//! Sequential smoothing level method.
//!
//! The outer loop runs phases. Inside a phase the level `l`, the smoothing
//! parameter and the radius estimates are fixed, and an accelerated prox-level
//! scheme runs on the smoothed objective until either bound has moved enough or
//! an estimate turns out too small. Estimates only ever double, so the number of
//! enlargement phases is bounded.
//!
//! The localizer keeps the most recent cuts `{s(x) <= l}` plus one half-space
//! through the latest prox point.

use serde::{Deserialize, Serialize};

use crate::error::{DroError, Result};
use crate::geometry::{
    bregman_lenient, compute_constants, h_center, kantorovich_constants, omega_x, Geometry, ProblemConstants,
};
use crate::harness::{Clock, IterationRow, SolveReport, StopRule, Termination};
use crate::linalg::{dot, norm2};
use crate::model::DroInstance;
use crate::oracles::{conjugate_blocks, f_evaluate_at, ConjugateBlock, FEvaluation};
use crate::qplp::{lp_solve, qp_nearest_point, DenseLp, HalfSpace, LpOutcome, NearestPointQp, QpOutcome};
use crate::smoothing::{f_mu_evaluate_at, optimal_params, SmoothedEvaluation, SmoothingParams};
use crate::sd::box_min;

pub const THETA: f64 = 0.5;
pub const DEFAULT_LAMBDA0: f64 = 1.0 / 64.0;
pub const DEFAULT_CUT_MEMORY: usize = 20;
/// Lower clamp for the initial radius estimates.
pub const ESTIMATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SslEstimates {
    /// Dual radius estimate `M_bar^2`.
    pub m_bar_sq: f64,
    /// Distribution radius estimate `Omega_bar^2` (of the joint matrix for Kantorovich sets).
    pub omega_bar_sq: f64,
    pub lambda_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    /// The lower bound moved enough.
    GapLower,
    /// The upper bound moved enough.
    GapUpper,
    PiRadius,
    PRadius,
    Lambda,
    /// Stopped by the caller's target or budget.
    Interrupted,
}

impl PhaseKind {
    pub fn is_gap_reduction(self) -> bool {
        matches!(self, PhaseKind::GapLower | PhaseKind::GapUpper)
    }

    pub fn is_enlargement(self) -> bool {
        matches!(self, PhaseKind::PiRadius | PhaseKind::PRadius | PhaseKind::Lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOutcome {
    pub kind: PhaseKind,
    pub x_u: Vec<f64>,
    pub f_u: f64,
    pub lb: f64,
    pub estimates: SslEstimates,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: usize,
    pub kind: PhaseKind,
    pub iterations: usize,
    /// Iteration bound of the phase for its inputs.
    pub length_bound: f64,
    pub lb_before: f64,
    pub ub_before: f64,
    pub lb_after: f64,
    pub ub_after: f64,
    pub estimates_in: SslEstimates,
    pub estimates_out: SslEstimates,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SslTrace {
    pub phases: Vec<PhaseRecord>,
    pub initial: SslEstimates,
    pub constants: ProblemConstants,
    /// `P_s + P_N` for the requested accuracy, when an absolute accuracy is known.
    pub phase_count_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SslOptions {
    pub stop: StopRule,
    /// Total inner iterations across phases.
    pub max_iters: usize,
    pub max_phases: Option<usize>,
    pub time_limit_secs: Option<f64>,
    pub initial: Option<SslEstimates>,
    pub cut_memory: usize,
}

impl Default for SslOptions {
    fn default() -> Self {
        SslOptions {
            stop: StopRule::default(),
            max_iters: 100_000,
            max_phases: None,
            time_limit_secs: None,
            initial: None,
            cut_memory: DEFAULT_CUT_MEMORY,
        }
    }
}

/// A cut `normal.x + offset`, the linearization of the smoothed objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Cut {
    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) + self.offset
    }

    fn level_halfspace(&self, level: f64) -> HalfSpace {
        HalfSpace { normal: self.normal.clone(), rhs: level - self.offset }
    }
}

/// Problem data and derived constants shared by all phases.
pub struct SslContext<'a> {
    pub inst: &'a DroInstance,
    blocks: Vec<ConjugateBlock<'a>>,
    pub geometry: Geometry,
    /// `C_p`, or `sqrt(K)` for Kantorovich sets.
    pub c_p: f64,
    pub constants: ProblemConstants,
    /// `Omega_P` of the set whose radius line 7 measures (`Omega_H` for Kantorovich).
    pub omega_p_bound: f64,
    kantorovich: bool,
    center: Vec<f64>,
    pub cut_memory: usize,
}

/// Evaluations at one point.
struct Point {
    x: Vec<f64>,
    f: Option<FEvaluation>,
    smooth: SmoothedEvaluation,
}

impl<'a> SslContext<'a> {
    pub fn new(inst: &'a DroInstance, geometry: Geometry) -> Result<Self> {
        let constants = compute_constants(inst, geometry, &inst.box_midpoint(), &inst.p_bar(), None)?;
        let kantorovich = inst.ambiguity.is_kantorovich();
        let p_bar = inst.p_bar();
        let (c_p, omega_p_bound, center) = if kantorovich {
            let kc = kantorovich_constants(&p_bar, geometry);
            (kc.c_tilde, kc.omega_h, h_center(&p_bar))
        } else {
            (constants.c_p, constants.omega_p, p_bar)
        };
        Ok(SslContext {
            inst,
            blocks: conjugate_blocks(inst)?,
            geometry,
            c_p,
            constants,
            omega_p_bound,
            kantorovich,
            center,
            cut_memory: DEFAULT_CUT_MEMORY,
        })
    }

    /// Radius used in the smoothing formulas, after the change of variables for
    /// Kantorovich sets under the Euclidean geometry.
    fn omega_smoothing(&self, omega_bar_sq: f64) -> f64 {
        if self.kantorovich && self.geometry == Geometry::Euclidean {
            (self.inst.k as f64 * omega_bar_sq).sqrt()
        } else {
            omega_bar_sq.sqrt()
        }
    }

    /// Distance of a smoothed maximizer from the smoothing center.
    fn radius(&self, s: &SmoothedEvaluation) -> f64 {
        match &s.h_hat {
            Some(h) => bregman_lenient(self.geometry, &self.center, h),
            None => bregman_lenient(self.geometry, &self.center, &s.p_hat),
        }
    }

    pub fn params(&self, mu: f64, est: &SslEstimates) -> SmoothingParams {
        optimal_params(mu, self.c_p, est.m_bar_sq.sqrt(), self.omega_smoothing(est.omega_bar_sq))
    }

    /// `mu = theta (v_bar0 - l) / (M_bar^2 (1 + sqrt2 Omega_bar C_p)^2 lambda_bar)`.
    pub fn phase_mu(&self, v_bar0: f64, level: f64, est: &SslEstimates) -> f64 {
        let w = 1.0 + std::f64::consts::SQRT_2 * self.omega_smoothing(est.omega_bar_sq) * self.c_p;
        THETA * (v_bar0 - level) / (est.m_bar_sq * w * w * est.lambda_bar)
    }

    /// `4 sqrt2 Omega_X M_T M_bar sqrt(lambda_bar) (1 + sqrt2 C_p Omega_bar) / Delta_0`, with
    /// `Omega_X` measured from the phase's prox center.
    pub fn phase_length_bound(&self, x_center: &[f64], delta0: f64, est: &SslEstimates) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        4.0 * s2
            * omega_x(&self.inst.x_upper, x_center)
            * self.constants.m_t
            * est.m_bar_sq.sqrt()
            * est.lambda_bar.sqrt()
            * (1.0 + s2 * self.c_p * self.omega_smoothing(est.omega_bar_sq))
            / delta0
    }

    /// `P_s + P_N` for absolute accuracy `eps`.
    pub fn phase_count_bound(&self, eps: f64, initial: &SslEstimates) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        let c = &self.constants;
        let m0 = norm2(&self.inst.c);
        let omega_p = self.omega_smoothing(self.omega_p_bound * self.omega_p_bound);
        let scale = 2.0 * c.omega_x * (s2 * m0 + c.m_t * c.m_pi * (s2 + self.c_p * omega_p)) / eps;
        let p_s = if scale > 1.0 { scale.ln() / (4.0f64 / 3.0).ln() } else { 0.0 };
        let lg = |a: f64, b: f64| if a > b { (a / b).log2() } else { 0.0 };
        let p_n = lg(c.m_pi * c.m_pi, initial.m_bar_sq)
            + lg(self.omega_p_bound * self.omega_p_bound, initial.omega_bar_sq)
            + lg(1.0, initial.lambda_bar)
            + 4.0;
        p_s + p_n
    }

    fn evaluate(&self, x: &[f64], params: &SmoothingParams, exact: bool) -> Result<Point> {
        let tx = self.inst.tx_all(x);
        let smooth = f_mu_evaluate_at(self.inst, &self.blocks, &tx, params, self.geometry)?;
        let f = if exact { Some(f_evaluate_at(self.inst, &self.blocks, x, &tx)?) } else { None };
        Ok(Point { x: x.to_vec(), f, smooth })
    }

    fn f_mu(&self, p: &Point) -> f64 {
        dot(&self.inst.c, &p.x) + p.smooth.value
    }

    fn cut_at(&self, p: &Point) -> Cut {
        let normal: Vec<f64> = self.inst.c.iter().zip(&p.smooth.grad_x).map(|(a, b)| a + b).collect();
        Cut { offset: p.smooth.value - dot(&p.smooth.grad_x, &p.x), normal }
    }

    /// Default estimates from the exact maximizers at `x`.
    pub fn default_estimates(&self, fx: &FEvaluation) -> SslEstimates {
        let m_bar_sq = fx.pi_star.iter().map(|p| dot(p, p)).fold(0.0, f64::max);
        let omega_bar_sq = match &fx.h_star {
            Some(h) => bregman_lenient(self.geometry, &self.center, h),
            None => bregman_lenient(self.geometry, &self.center, &fx.p_star),
        };
        SslEstimates {
            m_bar_sq: m_bar_sq.max(ESTIMATE_FLOOR),
            omega_bar_sq: omega_bar_sq.max(ESTIMATE_FLOOR),
            lambda_bar: DEFAULT_LAMBDA0,
        }
    }

    /// One phase from the incumbent `x_bar` (value `f_bar`) and lower bound `lb`.
    ///
    /// `on_iter(t, ub, lb)` is called after every iteration; returning `true`
    /// interrupts the phase.
    pub fn phase(
        &self,
        x_bar: &[f64],
        f_bar: f64,
        lb: f64,
        est: SslEstimates,
        mut on_iter: impl FnMut(f64, f64) -> bool,
    ) -> Result<(PhaseOutcome, f64)> {
        let inst = self.inst;
        let n = inst.n;
        let v_bar0 = f_bar;
        let v_low0 = lb;
        let level = 0.5 * (v_low0 + v_bar0);
        let mu = self.phase_mu(v_bar0, level, &est);
        let params = self.params(mu, &est);
        let x0 = x_bar.to_vec();
        let mut x_u = x_bar.to_vec();
        // incumbent of the accelerated recursion, ranked by the smoothed objective
        let mut x_acc = x_bar.to_vec();
        let mut f_mu_acc = f64::INFINITY;
        let mut v_bar = v_bar0;
        let mut v_low = v_low0;
        let mut x_prev = x0.clone();
        let mut cuts: Vec<Cut> = Vec::new();
        let mut prox_half: Option<HalfSpace> = None;
        let lower = inst.x_lower();
        let done = |kind, x_u: Vec<f64>, f_u, lb, estimates, iterations| {
            Ok((PhaseOutcome { kind, x_u, f_u, lb, estimates, iterations }, mu))
        };
        let mut t = 0usize;
        loop {
            t += 1;
            let alpha = 2.0 / (t as f64 + 1.0);
            let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
                a.iter().zip(b).map(|(u, v)| (1.0 - alpha) * u + alpha * v).collect()
            };
            // lower bound
            let pl = self.evaluate(&mix(&x_acc, &x_prev), &params, false)?;
            let cut = self.cut_at(&pl);
            let mut halfspaces: Vec<HalfSpace> = cuts.iter().map(|c| c.level_halfspace(level)).collect();
            if let Some(h) = &prox_half {
                halfspaces.push(h.clone());
            }
            let mut lp = DenseLp::new(cut.normal.clone(), lower.clone(), inst.x_upper.clone());
            for h in &halfspaces {
                lp.push_row(h.normal.clone(), h.rhs);
            }
            let s_t = match lp_solve(&lp)? {
                LpOutcome::Optimal(sol) => sol.value + cut.offset,
                // an empty localizer certifies f* >= l
                LpOutcome::Infeasible => f64::INFINITY,
                LpOutcome::Unbounded => {
                    return Err(DroError::Diagnostic("localizer LP unbounded over a box".into()))
                }
            };
            v_low = v_low.max(s_t.min(level));
            if v_low >= level - THETA * (level - v_low0) {
                return done(PhaseKind::GapLower, x_u, v_bar, v_low, est, t);
            }
            // prox center
            halfspaces.push(cut.level_halfspace(level));
            let qp = NearestPointQp {
                anchor: x0.clone(),
                lower: lower.clone(),
                upper: inst.x_upper.clone(),
                cuts: halfspaces,
            };
            let x_t = match qp_nearest_point(&qp)? {
                QpOutcome::Optimal(x) => x,
                QpOutcome::Infeasible => {
                    return done(PhaseKind::GapLower, x_u, v_bar, level, est, t);
                }
            };
            // upper bound
            let pm = self.evaluate(&mix(&x_acc, &x_t), &params, true)?;
            let f_md = pm.f.as_ref().expect("exact evaluation").value;
            if f_md < v_bar {
                v_bar = f_md;
                x_u = pm.x.clone();
            }
            let f_mu_md = self.f_mu(&pm);
            if f_mu_md < f_mu_acc {
                f_mu_acc = f_mu_md;
                x_acc = pm.x.clone();
            }
            if v_bar <= level + THETA * (v_bar0 - level) {
                return done(PhaseKind::GapUpper, x_u, v_bar, v_low, est, t);
            }
            if on_iter(v_bar, v_low) {
                return done(PhaseKind::Interrupted, x_u, v_bar, v_low, est, t);
            }
            // pi radius
            let half_sq = |p: &Vec<f64>| 0.5 * dot(p, p);
            let exact_pi = &pm.f.as_ref().expect("exact evaluation").pi_star;
            let m_tilde = pl
                .smooth
                .pi_hat
                .iter()
                .chain(exact_pi.iter())
                .chain(pm.smooth.pi_hat.iter())
                .map(half_sq)
                .fold(0.0, f64::max);
            if m_tilde > est.m_bar_sq {
                return done(PhaseKind::PiRadius, x_u, v_bar, v_low, SslEstimates { m_bar_sq: 2.0 * m_tilde, ..est }, t);
            }
            // p radius
            let omega_tilde = self.radius(&pm.smooth);
            if omega_tilde > est.omega_bar_sq {
                return done(
                    PhaseKind::PRadius,
                    x_u,
                    v_bar,
                    v_low,
                    SslEstimates { omega_bar_sq: 2.0 * omega_tilde, ..est },
                    t,
                );
            }
            // aggressiveness
            if f_mu_md <= level + 0.5 * THETA * (v_bar0 - level) {
                return done(
                    PhaseKind::Lambda,
                    x_u,
                    v_bar,
                    v_low,
                    SslEstimates { lambda_bar: 2.0 * est.lambda_bar, ..est },
                    t,
                );
            }
            // localizer
            cuts.push(cut);
            if cuts.len() > self.cut_memory {
                cuts.remove(0);
            }
            let dir: Vec<f64> = x0.iter().zip(&x_t).map(|(a, b)| a - b).collect();
            prox_half = if dir.iter().any(|&v| v != 0.0) {
                Some(HalfSpace { rhs: dot(&dir, &x_t), normal: dir })
            } else {
                None
            };
            x_prev = x_t;
            debug_assert_eq!(x_prev.len(), n);
        }
    }
}

pub fn ssl_solve(inst: &DroInstance, geometry: Geometry, opts: &SslOptions) -> Result<SolveReport> {
    ssl_solve_traced(inst, geometry, opts).map(|(r, _)| r)
}

/// Kantorovich-only entry point; [`ssl_solve`] dispatches the same way.
pub fn ssl_kantorovich_solve(inst: &DroInstance, geometry: Geometry, opts: &SslOptions) -> Result<SolveReport> {
    if !inst.ambiguity.is_kantorovich() {
        return Err(DroError::Unsupported("joint-matrix SSL needs a Kantorovich ambiguity set".into()));
    }
    ssl_solve(inst, geometry, opts)
}

/// Runs the method and also returns per-phase records.
pub fn ssl_solve_traced(
    inst: &DroInstance,
    geometry: Geometry,
    opts: &SslOptions,
) -> Result<(SolveReport, SslTrace)> {
    let clock = Clock::start(opts.time_limit_secs);
    let mut ctx = SslContext::new(inst, geometry)?;
    ctx.cut_memory = opts.cut_memory.max(1);
    let mut report = SolveReport::new("ssl", geometry, inst.ambiguity.kind_name());

    // one exact cut at the box midpoint
    let x0 = inst.box_midpoint();
    let blocks = &ctx.blocks;
    let f0 = f_evaluate_at(inst, blocks, &x0, &inst.tx_all(&x0))?;
    let mut grad = inst.c.clone();
    for k in 0..inst.k {
        let g = inst.scenarios[k].t.tmul_vec(&f0.pi_star[k]);
        crate::linalg::axpy(f0.p_star[k], &g, &mut grad);
    }
    let x1: Vec<f64> = grad.iter().zip(&inst.x_upper).map(|(&g, &u)| if g < 0.0 { u } else { 0.0 }).collect();
    let mut lb = f0.value - dot(&grad, &x0) + box_min(&grad, &inst.x_upper);
    let f1 = f_evaluate_at(inst, blocks, &x1, &inst.tx_all(&x1))?.value;
    let (mut x_bar, mut ub) = if f1 < f0.value { (x1, f1) } else { (x0.clone(), f0.value) };
    lb = lb.min(ub);

    let initial = opts.initial.unwrap_or_else(|| ctx.default_estimates(&f0));
    let eps = opts.stop.gap_abs.or_else(|| opts.stop.gap_rel.map(|r| r * lb.abs().max(ub.abs()).max(1e-12)));
    let phase_count_bound = eps.map(|e| ctx.phase_count_bound(e, &initial));
    let phase_cap = opts.max_phases.or_else(|| phase_count_bound.map(|p| (10.0 * p.ceil()) as usize));
    report.echo("initial_estimates", initial);
    report.echo("constants", ctx.constants);
    report.echo("cut_memory", ctx.cut_memory);
    report.echo("max_iters", opts.max_iters);

    let mut est = initial;
    let mut total = 0usize;
    let mut phases = Vec::new();
    report.rows.push(IterationRow { t: 0, f_best: ub, f_ergodic: None, lb: Some(lb), ub: Some(ub), wall_ms: clock.ms() });
    report.termination = Termination::BudgetExhausted;
    let mut interrupted_by_target = false;
    loop {
        if opts.stop.reached(ub, Some(lb)) || ub - lb <= 0.0 {
            report.termination = Termination::GapReached;
            break;
        }
        if total >= opts.max_iters || clock.expired() {
            break;
        }
        if let Some(cap) = phase_cap {
            if phases.len() >= cap {
                report.termination = Termination::Error(format!(
                    "gap did not close within {cap} phases (ub {ub}, lb {lb})"
                ));
                break;
            }
        }
        let ub_before = ub;
        let lb_before = lb;
        let bound = ctx.phase_length_bound(&x_bar, ub - lb, &est);
        let rows = &mut report.rows;
        let stop = opts.stop;
        let start_total = total;
        let mut counter = 0usize;
        let phase_result = ctx.phase(&x_bar, ub, lb, est, |u, l| {
            counter += 1;
            let t = start_total + counter;
            rows.push(IterationRow { t, f_best: u, f_ergodic: None, lb: Some(l), ub: Some(u), wall_ms: clock.ms() });
            if stop.reached(u, Some(l)) {
                interrupted_by_target = true;
                return true;
            }
            t >= opts.max_iters || clock.expired()
        });
        let (out, mu) = match phase_result {
            Ok(v) => v,
            Err(e) => {
                report.termination = Termination::Error(e.to_string());
                break;
            }
        };
        total += out.iterations;
        // the exiting iteration is logged here when the callback did not see it
        if counter < out.iterations {
            report.rows.push(IterationRow {
                t: total,
                f_best: out.f_u,
                f_ergodic: None,
                lb: Some(out.lb),
                ub: Some(out.f_u),
                wall_ms: clock.ms(),
            });
        }
        x_bar = out.x_u;
        ub = out.f_u;
        lb = out.lb.max(lb);
        phases.push(PhaseRecord {
            phase: phases.len() + 1,
            kind: out.kind,
            iterations: out.iterations,
            length_bound: bound,
            lb_before,
            ub_before,
            lb_after: lb,
            ub_after: ub,
            estimates_in: est,
            estimates_out: out.estimates,
            mu,
        });
        est = out.estimates;
        if out.kind == PhaseKind::Interrupted && !interrupted_by_target {
            break;
        }
    }
    report.x = x_bar;
    report.f_best = ub;
    report.lower_bound = Some(lb);
    report.iterations = total;
    report.wall_ms = clock.ms();
    report.echo("phases", phases.len());
    report.echo("final_estimates", est);
    let trace = SslTrace { phases, initial, constants: ctx.constants, phase_count_bound };
    Ok((report, trace))
}
