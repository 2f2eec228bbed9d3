//! Sequential dual method: one proximal step per block in the order `pi`, `p`, `x`,
//! with an extrapolated `x` in the `pi` step and a momentum correction in the
//! scores of the `p` step.
//!
//! For Kantorovich sets the `p` step becomes a joint-matrix prox and `p` is read
//! off as its column sums.

use serde::{Deserialize, Serialize};

use crate::error::{DroError, Result, Violation};
use crate::geometry::{compute_constants, h_center, kantorovich_constants, Geometry, ProblemConstants};
use crate::harness::{Clock, IterationRow, SolveReport, StopRule, Termination};
use crate::linalg::{axpy, dot, Matrix};
use crate::model::{AmbiguitySpec, DroInstance};
use crate::oracles::{conjugate_blocks, f_evaluate_at, map_scenarios, ConjugateBlock};
use crate::projections::{prox_ambiguity, prox_kantorovich_q, ProxRequest};
use crate::smoothing::TRANSPORT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdStepsizes {
    pub sigma: f64,
    /// `tau`, or `tau_q` for the joint matrix.
    pub tau: f64,
    pub eta: f64,
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DroError::Stepsize(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `sigma = M_T Omega_X / Omega_Pi`, `tau = M_T M_Pi C_p Omega_X / Omega_P`,
/// `eta = M_T M_Pi C_p Omega_P / Omega_X + M_T Omega_Pi / Omega_X`.
///
/// `Omega_P = 0` (a single scenario) gives `tau = inf`, which freezes `p`.
pub fn sd_default_stepsizes(c: &ProblemConstants) -> Result<SdStepsizes> {
    theorem_stepsizes(c.m_t, c.m_pi, c.c_p, c.omega_x, c.omega_p, c.omega_pi)
}

fn theorem_stepsizes(m_t: f64, m_pi: f64, c_p: f64, om_x: f64, om_p: f64, om_pi: f64) -> Result<SdStepsizes> {
    require_positive("M_T", m_t)?;
    require_positive("M_Pi", m_pi)?;
    require_positive("Omega_X", om_x)?;
    require_positive("Omega_Pi", om_pi)?;
    if !(om_p >= 0.0) {
        return Err(DroError::Stepsize(format!("Omega_P must be nonnegative, got {om_p}")));
    }
    let tau = if om_p == 0.0 { f64::INFINITY } else { m_t * m_pi * c_p * om_x / om_p };
    Ok(SdStepsizes {
        sigma: m_t * om_x / om_pi,
        tau,
        eta: m_t * m_pi * c_p * om_p / om_x + m_t * om_pi / om_x,
    })
}

/// Default stepsizes for the joint-matrix variant, with `tau` holding `tau_q`.
pub fn sd_kantorovich_default_stepsizes(
    c: &ProblemConstants,
    p_bar: &[f64],
    geometry: Geometry,
) -> Result<SdStepsizes> {
    let kc = kantorovich_constants(p_bar, geometry);
    let k = p_bar.len() as f64;
    let mut s = theorem_stepsizes(c.m_t, c.m_pi, kc.c_tilde, c.omega_x, kc.omega_tilde, c.omega_pi)?;
    if geometry == Geometry::Euclidean {
        s.tau *= k;
    }
    Ok(s)
}

/// Checks `eta >= C_p^2 M_T^2 M_Pi^2 / tau + M_T^2 / sigma`, with an extra factor
/// `K` on the first term in the joint-matrix variant.
pub fn check_stepsizes(s: &SdStepsizes, c: &ProblemConstants, kantorovich_k: Option<usize>) -> Result<()> {
    require_positive("sigma", s.sigma)?;
    require_positive("eta", s.eta)?;
    if !(s.tau > 0.0) {
        return Err(DroError::Stepsize(format!("tau must be positive, got {}", s.tau)));
    }
    let factor = kantorovich_k.map_or(1.0, |k| k as f64);
    let need = c.c_p * c.c_p * c.m_t * c.m_t * c.m_pi * c.m_pi * factor / s.tau + c.m_t * c.m_t / s.sigma;
    if s.eta < need * (1.0 - 1e-12) {
        return Err(DroError::Stepsize(format!("eta = {} is below the required {need}", s.eta)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepsizeChoice {
    Auto,
    Fixed(SdStepsizes),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdOptions {
    pub stepsizes: StepsizeChoice,
    pub max_iters: usize,
    pub stop: StopRule,
    pub time_limit_secs: Option<f64>,
    /// Log a row every this many iterations (the last iteration is always logged).
    pub log_every: usize,
}

impl Default for SdOptions {
    fn default() -> Self {
        SdOptions {
            stepsizes: StepsizeChoice::Auto,
            max_iters: 10_000,
            stop: StopRule::default(),
            time_limit_secs: None,
            log_every: 1,
        }
    }
}

struct Transport<'a> {
    d: &'a Matrix,
    delta: f64,
    p_bar: &'a [f64],
}

/// Iterate state. `x_prev` is `x_{t-1}`, `x_cur` is `x_t`.
pub struct SdState<'a> {
    inst: &'a DroInstance,
    blocks: Vec<ConjugateBlock<'a>>,
    transport: Option<Transport<'a>>,
    pub geometry: Geometry,
    pub stepsizes: SdStepsizes,
    pub t: usize,
    pub x_prev: Vec<f64>,
    pub x_cur: Vec<f64>,
    tx_prev: Vec<Vec<f64>>,
    tx_cur: Vec<Vec<f64>>,
    /// Current distribution (column sums of `h` in the joint-matrix variant).
    pub p: Vec<f64>,
    pub h: Option<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    x_sum: Vec<f64>,
    tx_sum: Vec<Vec<f64>>,
    dual_coef_sum: Vec<f64>,
    dual_const_sum: f64,
    /// Lower bound from the last `(p_t, pi_t)`.
    pub lb_current: f64,
}

impl<'a> SdState<'a> {
    /// Starts at the box midpoint, `p_bar` (or `H_bar`), and `pi = 0`.
    pub fn new(inst: &'a DroInstance, geometry: Geometry, stepsizes: SdStepsizes) -> Result<Self> {
        let blocks = conjugate_blocks(inst)?;
        let x0 = inst.box_midpoint();
        let tx0 = inst.tx_all(&x0);
        let p_bar = inst.p_bar();
        let (transport, h) = match &inst.ambiguity {
            AmbiguitySpec::Kantorovich { d, delta, p_bar } => {
                (Some(Transport { d, delta: *delta, p_bar }), Some(h_center(p_bar)))
            }
            _ => (None, None),
        };
        Ok(SdState {
            inst,
            blocks,
            transport,
            geometry,
            stepsizes,
            t: 0,
            x_prev: x0.clone(),
            x_cur: x0,
            tx_prev: tx0.clone(),
            tx_cur: tx0,
            p: p_bar,
            h,
            pi: vec![vec![0.0; inst.m]; inst.k],
            x_sum: vec![0.0; inst.n],
            tx_sum: vec![vec![0.0; inst.m]; inst.k],
            dual_coef_sum: vec![0.0; inst.n],
            dual_const_sum: 0.0,
            lb_current: f64::NEG_INFINITY,
        })
    }

    /// One iteration; afterwards `x_cur` is `x_t`.
    pub fn step(&mut self) -> Result<()> {
        let inst = self.inst;
        let s = self.stepsizes;
        // before the shift: x_cur = x_{t-1}, x_prev = x_{t-2}
        let tx_tilde: Vec<Vec<f64>> = self
            .tx_cur
            .iter()
            .zip(&self.tx_prev)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| 2.0 * u - v).collect())
            .collect();
        let pi_old = &self.pi;
        let blocks = &self.blocks;
        let pi_new = map_scenarios(inst.k, |k| blocks[k].pi_prox_at(&tx_tilde[k], &pi_old[k], s.sigma))?;
        let scores: Vec<f64> = (0..inst.k)
            .map(|k| {
                let d = &inst.scenarios[k].d;
                let lead = dot(&self.tx_cur[k], &pi_new[k]);
                let momentum: f64 = (0..inst.m).map(|i| (self.tx_cur[k][i] - self.tx_prev[k][i]) * pi_old[k][i]).sum();
                lead + momentum - dot(d, &pi_new[k])
            })
            .collect();
        match &self.transport {
            Some(tr) => {
                let prev = self.h.as_ref().expect("joint matrix present");
                let req = ProxRequest { scores: &scores, prev, stepsize: s.tau, geometry: self.geometry };
                let st = prox_kantorovich_q(&req, tr.d, tr.delta, tr.p_bar, TRANSPORT_TOL * (1.0 + tr.delta))?;
                self.p = st.q;
                self.h = Some(st.h);
            }
            None => {
                let req = ProxRequest { scores: &scores, prev: &self.p, stepsize: s.tau, geometry: self.geometry };
                self.p = prox_ambiguity(&inst.ambiguity, &req)?;
            }
        }
        self.pi = pi_new;

        let mut coef = inst.c.clone();
        let mut constant = 0.0;
        for k in 0..inst.k {
            if self.p[k] != 0.0 {
                let g = inst.scenarios[k].t.tmul_vec(&self.pi[k]);
                axpy(self.p[k], &g, &mut coef);
                constant -= self.p[k] * dot(&inst.scenarios[k].d, &self.pi[k]);
            }
        }
        self.lb_current = constant + box_min(&coef, &inst.x_upper);
        axpy(1.0, &coef, &mut self.dual_coef_sum);
        self.dual_const_sum += constant;

        let mut x_new: Vec<f64> = self.x_cur.iter().zip(&coef).map(|(x, g)| x - g / s.eta).collect();
        inst.clip_x(&mut x_new);
        let tx_new = inst.tx_all(&x_new);
        self.x_prev = std::mem::replace(&mut self.x_cur, x_new);
        self.tx_prev = std::mem::replace(&mut self.tx_cur, tx_new);
        axpy(1.0, &self.x_cur, &mut self.x_sum);
        for (acc, v) in self.tx_sum.iter_mut().zip(&self.tx_cur) {
            axpy(1.0, v, acc);
        }
        self.t += 1;
        Ok(())
    }

    pub fn ergodic_x(&self) -> Vec<f64> {
        let n = self.t.max(1) as f64;
        self.x_sum.iter().map(|v| v / n).collect()
    }

    fn ergodic_tx(&self) -> Vec<Vec<f64>> {
        let n = self.t.max(1) as f64;
        self.tx_sum.iter().map(|r| r.iter().map(|v| v / n).collect()).collect()
    }

    /// `min_x` of the averaged Lagrangians `(1/t) sum_s L(x, p_s, pi_s)`, which is the
    /// dual function at the averaged distribution and the `p`-weighted averages of `pi`.
    pub fn lb_ergodic(&self) -> f64 {
        let n = self.t.max(1) as f64;
        let coef: Vec<f64> = self.dual_coef_sum.iter().map(|v| v / n).collect();
        self.dual_const_sum / n + box_min(&coef, &self.inst.x_upper)
    }

    /// Exact objective at `x_t`.
    pub fn f_current(&self) -> Result<f64> {
        Ok(f_evaluate_at(self.inst, &self.blocks, &self.x_cur, &self.tx_cur)?.value)
    }

    /// Exact objective at the ergodic average of `x_1..x_t`.
    pub fn f_ergodic(&self) -> Result<f64> {
        Ok(f_evaluate_at(self.inst, &self.blocks, &self.ergodic_x(), &self.ergodic_tx())?.value)
    }
}

/// `min_{0 <= x <= u} coef.x`.
pub(crate) fn box_min(coef: &[f64], upper: &[f64]) -> f64 {
    coef.iter().zip(upper).map(|(&g, &u)| if g < 0.0 { g * u } else { 0.0 }).sum()
}

/// Constants at the default starting point.
pub fn sd_constants(inst: &DroInstance, geometry: Geometry) -> Result<ProblemConstants> {
    compute_constants(inst, geometry, &inst.box_midpoint(), &inst.p_bar(), None)
}

/// Runs the method; Kantorovich sets use the joint-matrix variant.
pub fn sd_solve(inst: &DroInstance, geometry: Geometry, opts: &SdOptions) -> Result<SolveReport> {
    if inst.ambiguity.is_kantorovich() {
        return sd_kantorovich_solve(inst, geometry, opts);
    }
    let c = sd_constants(inst, geometry)?;
    let steps = match opts.stepsizes {
        StepsizeChoice::Auto => sd_default_stepsizes(&c)?,
        StepsizeChoice::Fixed(s) => s,
    };
    check_stepsizes(&steps, &c, None)?;
    run(inst, geometry, steps, &c, opts)
}

pub fn sd_kantorovich_solve(inst: &DroInstance, geometry: Geometry, opts: &SdOptions) -> Result<SolveReport> {
    if !inst.ambiguity.is_kantorovich() {
        return Err(DroError::Unsupported("joint-matrix SD needs a Kantorovich ambiguity set".into()));
    }
    let c = sd_constants(inst, geometry)?;
    let steps = match opts.stepsizes {
        StepsizeChoice::Auto => sd_kantorovich_default_stepsizes(&c, &inst.p_bar(), geometry)?,
        StepsizeChoice::Fixed(s) => s,
    };
    check_stepsizes(&steps, &c, Some(inst.k))?;
    run(inst, geometry, steps, &c, opts)
}

fn run(
    inst: &DroInstance,
    geometry: Geometry,
    steps: SdStepsizes,
    c: &ProblemConstants,
    opts: &SdOptions,
) -> Result<SolveReport> {
    let clock = Clock::start(opts.time_limit_secs);
    let mut report = SolveReport::new("sd", geometry, inst.ambiguity.kind_name());
    report.echo("stepsizes", steps);
    report.echo("constants", c);
    report.echo("max_iters", opts.max_iters);
    let mut state = SdState::new(inst, geometry, steps)?;
    let mut best_f = f64::INFINITY;
    let mut best_x = state.x_cur.clone();
    let mut lb = f64::NEG_INFINITY;
    let log_every = opts.log_every.max(1);
    report.termination = Termination::BudgetExhausted;
    while state.t < opts.max_iters {
        let evaluated = state.step().and_then(|_| Ok((state.f_current()?, state.f_ergodic()?)));
        let (f_cur, f_erg) = match evaluated {
            Ok(v) => v,
            Err(e) => {
                report.termination = Termination::Error(e.to_string());
                break;
            }
        };
        if f_cur < best_f {
            best_f = f_cur;
            best_x = state.x_cur.clone();
        }
        if f_erg < best_f {
            best_f = f_erg;
            best_x = state.ergodic_x();
        }
        lb = lb.max(state.lb_current).max(state.lb_ergodic());
        let done = opts.stop.reached(best_f, Some(lb));
        let out_of_time = clock.expired();
        if state.t % log_every == 0 || done || out_of_time || state.t == opts.max_iters {
            report.rows.push(IterationRow {
                t: state.t,
                f_best: best_f,
                f_ergodic: Some(f_erg),
                lb: Some(lb),
                ub: Some(best_f),
                wall_ms: clock.ms(),
            });
        }
        if done {
            report.termination = Termination::GapReached;
            break;
        }
        if out_of_time {
            break;
        }
    }
    report.x = best_x;
    report.f_best = best_f;
    report.lower_bound = lb.is_finite().then_some(lb);
    report.iterations = state.t;
    report.wall_ms = clock.ms();
    Ok(report)
}

/// Every combination of `scales` applied to `sigma`, `tau` and `eta` of `base`,
/// in lexicographic order.
pub fn sd_tuning_grid(base: SdStepsizes, scales: &[f64]) -> Vec<SdStepsizes> {
    let mut grid = Vec::with_capacity(scales.len().pow(3));
    for &a in scales {
        for &b in scales {
            for &c in scales {
                grid.push(SdStepsizes { sigma: a * base.sigma, tau: b * base.tau, eta: c * base.eta });
            }
        }
    }
    grid
}

#[derive(Debug, Clone)]
pub struct SdTuning {
    pub best: SdStepsizes,
    pub report: SolveReport,
    /// Each grid point with its iteration count, or the reason it was skipped.
    pub tried: Vec<(SdStepsizes, std::result::Result<usize, String>)>,
}

/// Runs SD at every grid point around the default stepsizes and keeps the run
/// that met the stop rule in the fewest iterations, or else the lowest `f_best`.
/// Points that violate the stepsize condition are skipped.
pub fn sd_tune(inst: &DroInstance, geometry: Geometry, scales: &[f64], opts: &SdOptions) -> Result<SdTuning> {
    if scales.is_empty() || scales.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(DroError::Invalid(vec![Violation::new("scales", "must be a nonempty list of positive numbers")]));
    }
    let c = sd_constants(inst, geometry)?;
    let base = if inst.ambiguity.is_kantorovich() {
        sd_kantorovich_default_stepsizes(&c, &inst.p_bar(), geometry)?
    } else {
        sd_default_stepsizes(&c)?
    };
    let mut tried = Vec::new();
    let mut best: Option<(SdStepsizes, SolveReport)> = None;
    for steps in sd_tuning_grid(base, scales) {
        let run_opts = SdOptions { stepsizes: StepsizeChoice::Fixed(steps), ..opts.clone() };
        let report = match sd_solve(inst, geometry, &run_opts) {
            Ok(r) => r,
            Err(e) => {
                tried.push((steps, Err(e.to_string())));
                continue;
            }
        };
        tried.push((steps, Ok(report.iterations)));
        let better = match &best {
            None => true,
            Some((_, b)) => {
                let (ra, rb) = (report.termination == Termination::GapReached, b.termination == Termination::GapReached);
                match (ra, rb) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => report.iterations < b.iterations,
                    (false, false) => report.f_best < b.f_best,
                }
            }
        };
        if better {
            best = Some((steps, report));
        }
    }
    match best {
        Some((best, report)) => Ok(SdTuning { best, report, tried }),
        None => Err(DroError::Stepsize("no grid point satisfies the stepsize condition".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(m_t: f64, m_pi: f64, c_p: f64, x: f64, p: f64, pi: f64) -> ProblemConstants {
        ProblemConstants { m_t, m_pi, omega_x: x, omega_p: p, omega_pi: pi, c_p }
    }

    #[test]
    fn default_stepsize_example() {
        let s = sd_default_stepsizes(&consts(2.0, 1.0, 1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!((s.sigma, s.tau, s.eta), (2.0, 2.0, 4.0));
    }

    #[test]
    fn doubling_omega_x() {
        let a = sd_default_stepsizes(&consts(1.3, 0.7, 2.0, 1.1, 0.6, 0.9)).unwrap();
        let b = sd_default_stepsizes(&consts(1.3, 0.7, 2.0, 2.2, 0.6, 0.9)).unwrap();
        assert!((b.sigma - 2.0 * a.sigma).abs() < 1e-12);
        assert!((b.tau - 2.0 * a.tau).abs() < 1e-12);
        assert!((b.eta - 0.5 * a.eta).abs() < 1e-12);
    }

    #[test]
    fn zero_radius_rejected() {
        assert!(sd_default_stepsizes(&consts(1.0, 1.0, 1.0, 0.0, 1.0, 1.0)).is_err());
        assert!(sd_default_stepsizes(&consts(1.0, 1.0, 1.0, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn violation_rejected() {
        let c = consts(2.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let s = SdStepsizes { sigma: 2.0, tau: 2.0, eta: 3.9 };
        assert!(check_stepsizes(&s, &c, None).is_err());
        assert!(check_stepsizes(&SdStepsizes { eta: 4.0, ..s }, &c, None).is_ok());
    }
}
