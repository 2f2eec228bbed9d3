//! Two-layer smooth approximation of the risk term.
//!
//! The inner layer replaces each `g_k` by its Moreau-type smoothing with weight
//! `mu_pi` around `pi = 0`; the outer layer penalizes the worst-case distribution
//! with `mu_p W(p_bar, p)`. For the Kantorovich ball the outer penalty acts on the
//! joint matrix, centered at `H_bar`, with weight `mu_q`.

use crate::error::Result;
use crate::geometry::{bregman_lenient, h_center, Geometry};
use crate::linalg::{axpy, dot};
use crate::model::{AmbiguitySpec, DroInstance};
use crate::oracles::{map_scenarios, ConjugateBlock};
use crate::projections::{prox_ambiguity, prox_kantorovich_q, ProxRequest};

/// Bisection tolerance of the transport budget, scaled by `1 + delta`.
pub const TRANSPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmoothingParams {
    pub mu: f64,
    pub mu_pi: f64,
    pub mu_p: f64,
}

/// Weights with the optimal ratio for master parameter `mu`, given the norm
/// constant `c_p`, the dual radius estimate `m_bar` and the distribution radius
/// estimate `omega_bar` (both unsquared).
pub fn optimal_params(mu: f64, c_p: f64, m_bar: f64, omega_bar: f64) -> SmoothingParams {
    let s2 = std::f64::consts::SQRT_2;
    SmoothingParams {
        mu,
        mu_pi: mu * (2.0 + 2.0 * s2 * c_p * omega_bar),
        mu_p: mu * (s2 + 2.0 * c_p * omega_bar) * m_bar * m_bar * c_p / omega_bar,
    }
}

/// Joint-matrix weight for a given distribution-layer weight.
pub fn mu_q(mu_p: f64, geometry: Geometry, k: usize) -> f64 {
    match geometry {
        Geometry::Entropy => mu_p,
        Geometry::Euclidean => k as f64 * mu_p,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedEvaluation {
    /// `F_mu(x)`, excluding `c.x`.
    pub value: f64,
    /// `sum_k p_hat_k T_k^T pi_hat_k`, excluding `c`.
    pub grad_x: Vec<f64>,
    /// The smoothed maximizer over distributions (the marginal `q` for Kantorovich).
    pub p_hat: Vec<f64>,
    pub h_hat: Option<Vec<f64>>,
    pub pi_hat: Vec<Vec<f64>>,
    /// Smoothed scenario values `g_{mu_pi, k}`.
    pub g_mu: Vec<f64>,
}

pub fn f_mu_evaluate(
    inst: &DroInstance,
    x: &[f64],
    params: &SmoothingParams,
    geometry: Geometry,
) -> Result<SmoothedEvaluation> {
    let blocks = crate::oracles::conjugate_blocks(inst)?;
    f_mu_evaluate_at(inst, &blocks, &inst.tx_all(x), params, geometry)
}

/// Smoothed value and gradient given `T_k x`. Dispatches to the joint-matrix
/// layer for Kantorovich sets.
pub fn f_mu_evaluate_at(
    inst: &DroInstance,
    blocks: &[ConjugateBlock<'_>],
    tx: &[Vec<f64>],
    params: &SmoothingParams,
    geometry: Geometry,
) -> Result<SmoothedEvaluation> {
    let inner = map_scenarios(inst.k, |k| blocks[k].g_smoothed_at(&tx[k], params.mu_pi))?;
    let g_mu: Vec<f64> = inner.iter().map(|s| s.value).collect();
    let p_bar = inst.p_bar();
    let (p_hat, h_hat, value) = match &inst.ambiguity {
        AmbiguitySpec::Kantorovich { d, delta, p_bar } => {
            let center = h_center(p_bar);
            let w = mu_q(params.mu_p, geometry, inst.k);
            let req = ProxRequest { scores: &g_mu, prev: &center, stepsize: w, geometry };
            let st = prox_kantorovich_q(&req, d, *delta, p_bar, TRANSPORT_TOL * (1.0 + delta))?;
            let value = dot(&st.q, &g_mu) - w * bregman_lenient(geometry, &center, &st.h);
            (st.q, Some(st.h), value)
        }
        amb => {
            let req = ProxRequest { scores: &g_mu, prev: &p_bar, stepsize: params.mu_p, geometry };
            let p = prox_ambiguity(amb, &req)?;
            let value = dot(&p, &g_mu) - params.mu_p * bregman_lenient(geometry, &p_bar, &p);
            (p, None, value)
        }
    };
    let mut grad_x = vec![0.0; inst.n];
    for (k, s) in inner.iter().enumerate() {
        axpy(p_hat[k], &s.grad_x, &mut grad_x);
    }
    Ok(SmoothedEvaluation {
        value,
        grad_x,
        p_hat,
        h_hat,
        pi_hat: inner.into_iter().map(|s| s.pi_hat).collect(),
        g_mu,
    })
}

/// Kantorovich-only entry point; identical to [`f_mu_evaluate`] on those sets.
pub fn f_mu_kantorovich_evaluate(
    inst: &DroInstance,
    x: &[f64],
    params: &SmoothingParams,
    geometry: Geometry,
) -> Result<SmoothedEvaluation> {
    if !inst.ambiguity.is_kantorovich() {
        return Err(crate::error::DroError::Unsupported(
            "joint-matrix smoothing needs a Kantorovich ambiguity set".into(),
        ));
    }
    f_mu_evaluate(inst, x, params, geometry)
}
