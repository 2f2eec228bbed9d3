//! Scenario cost functions through their conjugate representation.
//!
//! For simple recourse `g_k(z) = e_k.(d_k - z)_+ = max_{pi in [-e_k, 0]} <pi, z> - <d_k, pi>`.
//! For general recourse `g_k(z) = min { e.y : R y >= d - z, y >= 0 }`, whose dual
//! feasible set is `{pi <= 0, R^T pi >= -e}`, intersected with the user box
//! `pi >= -pi_bound`.

use rayon::prelude::*;

use crate::error::{DroError, Result};
use crate::linalg::{dot, Matrix};
use crate::model::{DroInstance, Recourse, ScenarioBlock};
use crate::projections::linear_maximizer;
use crate::qplp::{lp_solve, qp_nearest_point, DenseLp, HalfSpace, LpOutcome, NearestPointQp, QpOutcome};

/// Scenarios per evaluation above which scenario oracles run on the rayon pool.
const PARALLEL_SCENARIOS: usize = 32;

/// The dual feasible set of one scenario together with its data.
#[derive(Debug, Clone)]
pub struct ConjugateBlock<'a> {
    pub index: usize,
    pub scenario: &'a ScenarioBlock,
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
    /// `g*(pi) = <gstar_linear, pi>` on the dual set.
    pub gstar_linear: &'a [f64],
    /// `-R^T pi <= e` for general recourse.
    coupling: Vec<HalfSpace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GValue {
    pub value: f64,
    /// A maximizer of the conjugate representation (a subgradient of `g` in `z`).
    pub pi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GSmoothed {
    pub value: f64,
    pub pi_hat: Vec<f64>,
    pub grad_x: Vec<f64>,
}

impl<'a> ConjugateBlock<'a> {
    pub fn new(inst: &'a DroInstance, index: usize) -> Result<Self> {
        let scenario = &inst.scenarios[index];
        let box_lower = crate::geometry::pi_box_lower(inst, index)?;
        let coupling = match &scenario.recourse {
            Recourse::Simple => Vec::new(),
            Recourse::GeneralLp { r, .. } => (0..r.cols)
                .map(|j| HalfSpace { normal: (0..r.rows).map(|i| -r.get(i, j)).collect(), rhs: scenario.e[j] })
                .collect(),
        };
        Ok(ConjugateBlock {
            index,
            scenario,
            box_upper: vec![0.0; box_lower.len()],
            box_lower,
            gstar_linear: &scenario.d,
            coupling,
        })
    }

    pub fn is_simple(&self) -> bool {
        self.coupling.is_empty()
    }

    /// Nearest point of the dual feasible set.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.is_simple() {
            return Ok(v.iter().zip(&self.box_lower).map(|(&a, &l)| a.clamp(l, 0.0)).collect());
        }
        let qp = NearestPointQp {
            anchor: v.to_vec(),
            lower: self.box_lower.clone(),
            upper: self.box_upper.clone(),
            cuts: self.coupling.clone(),
        };
        match qp_nearest_point(&qp)? {
            QpOutcome::Optimal(p) => Ok(p),
            QpOutcome::Infeasible => Err(DroError::Recourse {
                scenario: self.index,
                detail: "dual feasible set is empty".into(),
            }),
        }
    }

    pub fn contains(&self, pi: &[f64], tol: f64) -> bool {
        pi.iter().zip(&self.box_lower).all(|(&p, &l)| p >= l - tol && p <= tol)
            && self.coupling.iter().all(|h| dot(&h.normal, pi) <= h.rhs + tol)
    }

    /// `g(z)` and a maximizing `pi`.
    pub fn g_value(&self, z: &[f64]) -> Result<GValue> {
        let s = self.scenario;
        if self.is_simple() {
            let mut value = 0.0;
            let mut pi = vec![0.0; z.len()];
            for i in 0..z.len() {
                if s.d[i] > z[i] {
                    value += s.e[i] * (s.d[i] - z[i]);
                    pi[i] = -s.e[i];
                }
            }
            return Ok(GValue { value, pi });
        }
        let Recourse::GeneralLp { r, .. } = &s.recourse else { unreachable!() };
        let primal = recourse_primal(r, &s.e, &s.d, z);
        let value = match lp_solve(&primal)? {
            LpOutcome::Optimal(sol) => sol.value,
            LpOutcome::Infeasible => {
                return Err(DroError::Recourse { scenario: self.index, detail: "recourse LP is infeasible".into() })
            }
            LpOutcome::Unbounded => {
                return Err(DroError::Recourse { scenario: self.index, detail: "recourse LP is unbounded".into() })
            }
        };
        // dual over the bounded set: min <d - z, pi>
        let obj: Vec<f64> = s.d.iter().zip(z).map(|(d, z)| d - z).collect();
        let mut dual = DenseLp::new(obj, self.box_lower.clone(), self.box_upper.clone());
        for h in &self.coupling {
            dual.push_row(h.normal.clone(), h.rhs);
        }
        let sol = match lp_solve(&dual)? {
            LpOutcome::Optimal(sol) => sol,
            _ => {
                return Err(DroError::Recourse { scenario: self.index, detail: "dual recourse LP failed".into() })
            }
        };
        let dual_value = -sol.value;
        if (dual_value - value).abs() > 1e-7 * (1.0 + value.abs()) {
            return Err(DroError::Recourse {
                scenario: self.index,
                detail: format!("pi_bound cuts off the dual optimum (primal {value}, bounded dual {dual_value})"),
            });
        }
        Ok(GValue { value, pi: sol.x })
    }

    /// `argmax_pi <pi, tx> - <d, pi> - sigma/2 |pi - pi_prev|^2` given `tx = T x_tilde`.
    pub fn pi_prox_at(&self, tx: &[f64], pi_prev: &[f64], sigma: f64) -> Result<Vec<f64>> {
        let s = self.scenario;
        let v: Vec<f64> = (0..tx.len()).map(|i| pi_prev[i] + (tx[i] - s.d[i]) / sigma).collect();
        self.project(&v)
    }

    pub fn pi_prox(&self, x_tilde: &[f64], pi_prev: &[f64], sigma: f64) -> Result<Vec<f64>> {
        self.pi_prox_at(&self.scenario.t.mul_vec(x_tilde), pi_prev, sigma)
    }

    /// Smoothed value at `tx = T x` with center 0.
    pub fn g_smoothed_at(&self, tx: &[f64], mu_pi: f64) -> Result<GSmoothed> {
        let s = self.scenario;
        let r: Vec<f64> = tx.iter().zip(&s.d).map(|(a, d)| a - d).collect();
        let v: Vec<f64> = r.iter().map(|a| a / mu_pi).collect();
        let pi_hat = self.project(&v)?;
        let value = dot(&pi_hat, &r) - 0.5 * mu_pi * dot(&pi_hat, &pi_hat);
        let grad_x = s.t.tmul_vec(&pi_hat);
        Ok(GSmoothed { value, pi_hat, grad_x })
    }

    pub fn g_smoothed(&self, x: &[f64], mu_pi: f64) -> Result<GSmoothed> {
        self.g_smoothed_at(&self.scenario.t.mul_vec(x), mu_pi)
    }
}

fn recourse_primal(r: &Matrix, e: &[f64], d: &[f64], z: &[f64]) -> DenseLp {
    // R y >= d - z  as  -R y <= z - d
    let mut lp = DenseLp::new(e.to_vec(), vec![0.0; r.cols], vec![f64::INFINITY; r.cols]);
    for i in 0..r.rows {
        lp.push_row(r.row(i).iter().map(|v| -v).collect(), z[i] - d[i]);
    }
    lp
}

pub fn conjugate_blocks(inst: &DroInstance) -> Result<Vec<ConjugateBlock<'_>>> {
    (0..inst.k).map(|k| ConjugateBlock::new(inst, k)).collect()
}

/// Maps `f` over scenarios, in parallel for many scenarios; results keep index order.
pub(crate) fn map_scenarios<T, F>(k: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if k >= PARALLEL_SCENARIOS {
        (0..k).into_par_iter().map(&f).collect()
    } else {
        (0..k).map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FEvaluation {
    pub value: f64,
    /// `g_k(T_k x)` per scenario.
    pub g: Vec<f64>,
    pub p_star: Vec<f64>,
    /// Worst-case joint matrix for the Kantorovich set.
    pub h_star: Option<Vec<f64>>,
    pub pi_star: Vec<Vec<f64>>,
}

/// Exact `f(x) = c.x + max_p sum_k p_k g_k(T_k x)`.
pub fn f_evaluate(inst: &DroInstance, x: &[f64]) -> Result<FEvaluation> {
    let blocks = conjugate_blocks(inst)?;
    f_evaluate_at(inst, &blocks, x, &inst.tx_all(x))
}

/// [`f_evaluate`] with the products `T_k x` already available.
pub fn f_evaluate_at(
    inst: &DroInstance,
    blocks: &[ConjugateBlock<'_>],
    x: &[f64],
    tx: &[Vec<f64>],
) -> Result<FEvaluation> {
    let vals = map_scenarios(inst.k, |k| blocks[k].g_value(&tx[k]))?;
    let g: Vec<f64> = vals.iter().map(|v| v.value).collect();
    let lm = linear_maximizer(&inst.ambiguity, &g)?;
    let value = dot(&inst.c, x) + dot(&lm.p, &g);
    Ok(FEvaluation { value, g, p_star: lm.p, h_star: lm.h, pi_star: vals.into_iter().map(|v| v.pi).collect() })
}

/// `L(x, p, pi) = c.x + sum_k p_k (<T_k x, pi_k> - <d_k, pi_k>)`.
pub fn lagrangian(inst: &DroInstance, x: &[f64], p: &[f64], pi: &[Vec<f64>]) -> f64 {
    let mut v = dot(&inst.c, x);
    for (k, s) in inst.scenarios.iter().enumerate() {
        let tx = s.t.mul_vec(x);
        v += p[k] * (dot(&tx, &pi[k]) - dot(&s.d, &pi[k]));
    }
    v
}
