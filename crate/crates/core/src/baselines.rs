//! Reference solvers: Benders decomposition with one cut per scenario plus a risk
//! cut, and projected subgradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{DroError, Result};
use crate::geometry::{omega_x, pi_box_lower, Geometry};
use crate::harness::{Clock, IterationRow, SolveReport, StopRule, Termination};
use crate::linalg::{axpy, dot, norm2};
use crate::model::DroInstance;
use crate::oracles::{conjugate_blocks, f_evaluate_at, FEvaluation};
use crate::projections::linear_maximizer;
use crate::qplp::{lp_solve, DenseLp, LpOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersOptions {
    pub stop: StopRule,
    pub max_iters: usize,
    pub time_limit_secs: Option<f64>,
}

impl Default for BendersOptions {
    fn default() -> Self {
        BendersOptions {
            stop: StopRule { gap_rel: Some(1e-4), ..Default::default() },
            max_iters: 500,
            time_limit_secs: None,
        }
    }
}

/// Bound on `|g_k|` over the box, used for the initial bounds of `Psi` and `v`.
pub fn benders_big_b(inst: &DroInstance) -> Result<f64> {
    let mut b: f64 = 0.0;
    for k in 0..inst.k {
        let lo = pi_box_lower(inst, k)?;
        let s = &inst.scenarios[k];
        let mut total = 0.0;
        for i in 0..inst.m {
            let reach: f64 = (0..inst.n).map(|j| s.t.get(i, j).abs() * inst.x_upper[j]).sum();
            total += lo[i].abs() * (s.d[i].abs() + reach);
        }
        b = b.max(total);
    }
    Ok(1.0 + b)
}

/// Master LP over `(x, Psi, v_1..v_K)`: minimize `c.x + Psi`.
pub struct BendersMaster {
    pub lp: DenseLp,
    pub n: usize,
    pub k: usize,
}

impl BendersMaster {
    pub fn new(inst: &DroInstance, big_b: f64) -> Self {
        let (n, k) = (inst.n, inst.k);
        let mut obj = inst.c.clone();
        obj.push(1.0);
        obj.extend(std::iter::repeat(0.0).take(k));
        let mut lower = vec![0.0; n];
        let mut upper = inst.x_upper.clone();
        lower.extend(std::iter::repeat(-big_b).take(k + 1));
        upper.extend(std::iter::repeat(big_b).take(k + 1));
        BendersMaster { lp: DenseLp::new(obj, lower, upper), n, k }
    }

    /// `sum_k p_k v_k - Psi <= 0`.
    pub fn add_risk_cut(&mut self, p: &[f64]) {
        let mut row = vec![0.0; self.n + 1 + self.k];
        row[self.n] = -1.0;
        row[self.n + 1..].copy_from_slice(p);
        self.lp.push_row(row, 0.0);
    }

    /// `v_k >= g_k + <a, x - x_t>`, stored as `<a, x> - v_k <= <a, x_t> - g_k`.
    pub fn add_scenario_cut(&mut self, k: usize, a: &[f64], x_t: &[f64], g: f64) {
        let mut row = vec![0.0; self.n + 1 + self.k];
        row[..self.n].copy_from_slice(a);
        row[self.n + 1 + k] = -1.0;
        self.lp.push_row(row, dot(a, x_t) - g);
    }
}

pub fn benders_solve(inst: &DroInstance, geometry: Geometry, opts: &BendersOptions) -> Result<SolveReport> {
    let clock = Clock::start(opts.time_limit_secs);
    let blocks = conjugate_blocks(inst)?;
    let big_b = benders_big_b(inst)?;
    let mut master = BendersMaster::new(inst, big_b);
    let mut report = SolveReport::new("benders", geometry, inst.ambiguity.kind_name());
    report.echo("big_b", big_b);
    report.echo("max_iters", opts.max_iters);
    let (n, k) = (inst.n, inst.k);
    let mut best_f = f64::INFINITY;
    let mut best_x = inst.box_midpoint();
    let mut lb = f64::NEG_INFINITY;
    let mut t = 0;
    report.termination = Termination::BudgetExhausted;
    while t < opts.max_iters {
        t += 1;
        let sol = match lp_solve(&master.lp) {
            Ok(LpOutcome::Optimal(s)) => s,
            Ok(other) => {
                report.termination = Termination::Error(format!("master LP returned {other:?}"));
                break;
            }
            Err(e) => {
                report.termination = Termination::Error(e.to_string());
                break;
            }
        };
        lb = lb.max(sol.value);
        let x_t = sol.x[..n].to_vec();
        let v_t = &sol.x[n + 1..];
        let fx: FEvaluation = match f_evaluate_at(inst, &blocks, &x_t, &inst.tx_all(&x_t)) {
            Ok(v) => v,
            Err(e) => {
                report.termination = Termination::Error(e.to_string());
                break;
            }
        };
        if fx.value < best_f {
            best_f = fx.value;
            best_x = x_t.clone();
        }
        let risk = linear_maximizer(&inst.ambiguity, v_t)?;
        master.add_risk_cut(&risk.p);
        for kk in 0..k {
            let a = inst.scenarios[kk].t.tmul_vec(&fx.pi_star[kk]);
            master.add_scenario_cut(kk, &a, &x_t, fx.g[kk]);
        }
        let done = opts.stop.reached(best_f, Some(lb));
        report.rows.push(IterationRow {
            t,
            f_best: best_f,
            f_ergodic: None,
            lb: Some(lb),
            ub: Some(best_f),
            wall_ms: clock.ms(),
        });
        if done {
            report.termination = Termination::GapReached;
            break;
        }
        if clock.expired() {
            break;
        }
    }
    report.x = best_x;
    report.f_best = best_f;
    report.lower_bound = lb.is_finite().then_some(lb);
    report.iterations = t;
    report.wall_ms = clock.ms();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorDescentOptions {
    pub stop: StopRule,
    pub max_iters: usize,
    pub time_limit_secs: Option<f64>,
    pub log_every: usize,
}

impl Default for MirrorDescentOptions {
    fn default() -> Self {
        MirrorDescentOptions { stop: StopRule::default(), max_iters: 10_000, time_limit_secs: None, log_every: 1 }
    }
}

/// Projected subgradient descent from the box midpoint with stepsize
/// `Omega_X sqrt2 / (M_f sqrt t)`, `M_f` the largest subgradient norm seen so far.
/// The geometry is only recorded in the report; steps are Euclidean.
pub fn mirror_descent_solve(
    inst: &DroInstance,
    geometry: Geometry,
    opts: &MirrorDescentOptions,
) -> Result<SolveReport> {
    let clock = Clock::start(opts.time_limit_secs);
    let blocks = conjugate_blocks(inst)?;
    let mut report = SolveReport::new("md", geometry, inst.ambiguity.kind_name());
    let mut x = inst.box_midpoint();
    let om = omega_x(&inst.x_upper, &x);
    if !(om > 0.0) {
        return Err(DroError::Domain("the box has zero radius".into()));
    }
    report.echo("omega_x", om);
    report.echo("max_iters", opts.max_iters);
    let mut m_f: f64 = 0.0;
    let mut best_f = f64::INFINITY;
    let mut best_x = x.clone();
    let mut sum = vec![0.0; inst.n];
    let log_every = opts.log_every.max(1);
    let mut t = 0;
    report.termination = Termination::BudgetExhausted;
    while t < opts.max_iters {
        t += 1;
        let fx = f_evaluate_at(inst, &blocks, &x, &inst.tx_all(&x))?;
        if fx.value < best_f {
            best_f = fx.value;
            best_x = x.clone();
        }
        axpy(1.0, &x, &mut sum);
        let avg: Vec<f64> = sum.iter().map(|v| v / t as f64).collect();
        let f_avg = f_evaluate_at(inst, &blocks, &avg, &inst.tx_all(&avg))?.value;
        if f_avg < best_f {
            best_f = f_avg;
            best_x = avg;
        }
        let mut g = inst.c.clone();
        for k in 0..inst.k {
            if fx.p_star[k] != 0.0 {
                let a = inst.scenarios[k].t.tmul_vec(&fx.pi_star[k]);
                axpy(fx.p_star[k], &a, &mut g);
            }
        }
        let done = opts.stop.reached(best_f, None);
        if t % log_every == 0 || done || t == opts.max_iters {
            report.rows.push(IterationRow {
                t,
                f_best: best_f,
                f_ergodic: Some(f_avg),
                lb: None,
                ub: Some(best_f),
                wall_ms: clock.ms(),
            });
        }
        if done {
            report.termination = Termination::GapReached;
            break;
        }
        m_f = m_f.max(norm2(&g));
        if m_f == 0.0 {
            // zero subgradient: x is optimal
            report.termination = Termination::GapReached;
            break;
        }
        let step = om * std::f64::consts::SQRT_2 / (m_f * (t as f64).sqrt());
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        inst.clip_x(&mut x);
        if clock.expired() {
            break;
        }
    }
    report.x = best_x;
    report.f_best = best_f;
    report.iterations = t;
    report.wall_ms = clock.ms();
    Ok(report)
}
