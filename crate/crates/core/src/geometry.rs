//! Bregman distances and the scenario-independent constants used by stepsize and
//! smoothing formulas.
//!
//! Scaling convention: the `x` and `pi` blocks always use `V(a, b) = U(a, b) =
//! |a - b|^2 / 2`. The probability block uses `W`, which is `|a - b|^2` (no half)
//! under [`Geometry::Euclidean`] and the relative entropy `sum b log(b / a)` under
//! [`Geometry::Entropy`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DroError, Result};
use crate::linalg::{norm2, sq_dist};
use crate::model::{AmbiguitySpec, DroInstance, Recourse};

/// Power iteration settings for `|T_k|_2`.
pub const POWER_ITERATIONS: usize = 200;
pub const POWER_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Euclidean,
    Entropy,
}

impl Geometry {
    /// Norm adjustment constant: 1 for entropy, `sqrt(K)` for Euclidean.
    pub fn c_p(self, k: usize) -> f64 {
        match self {
            Geometry::Entropy => 1.0,
            Geometry::Euclidean => (k as f64).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Euclidean => "euclidean",
            Geometry::Entropy => "entropy",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Geometry {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "euclid" => Ok(Geometry::Euclidean),
            "entropy" | "kl" => Ok(Geometry::Entropy),
            other => Err(format!("unknown geometry '{other}' (expected euclidean or entropy)")),
        }
    }
}

/// `V(a, b) = |a - b|^2 / 2`, used for the `x` and `pi` blocks.
pub fn half_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    0.5 * sq_dist(a, b)
}

/// The probability-block distance `W(a, b)`.
///
/// Entropy requires every coordinate of `a` to be positive.
pub fn bregman(geometry: Geometry, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DroError::Domain(format!("length mismatch {} vs {}", a.len(), b.len())));
    }
    match geometry {
        Geometry::Euclidean => Ok(sq_dist(a, b)),
        Geometry::Entropy => {
            if let Some(i) = a.iter().position(|&v| !(v > 0.0)) {
                return Err(DroError::Domain(format!(
                    "entropy distance needs a positive reference point, a[{i}] = {}",
                    a[i]
                )));
            }
            if b.iter().any(|&v| v < 0.0) {
                return Err(DroError::Domain("entropy distance needs b >= 0".into()));
            }
            Ok(kl(a, b))
        }
    }
}

/// `W(a, b)` with the conventions `0 log 0 = 0` and `W = +inf` when `b` puts mass
/// where `a` has none.
pub fn bregman_lenient(geometry: Geometry, a: &[f64], b: &[f64]) -> f64 {
    match geometry {
        Geometry::Euclidean => sq_dist(a, b),
        Geometry::Entropy => kl(a, b),
    }
}

fn kl(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&ai, &bi) in a.iter().zip(b) {
        if bi > 0.0 {
            if ai <= 0.0 {
                return f64::INFINITY;
            }
            s += bi * (bi / ai).ln();
        }
    }
    s
}

/// `max_k |pi_k|_2` over a block vector.
pub fn block_norm_2inf(blocks: &[Vec<f64>]) -> f64 {
    blocks.iter().map(|b| norm2(b)).fold(0.0, f64::max)
}

/// The block norm dual to the probability geometry: `|.|_{2,inf}` under entropy and
/// `|.|_{2,2}` under Euclidean.
pub fn dual_block_norm(geometry: Geometry, blocks: &[Vec<f64>]) -> f64 {
    match geometry {
        Geometry::Entropy => block_norm_2inf(blocks),
        Geometry::Euclidean => blocks.iter().map(|b| b.iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// `max_k |T_k|_2`.
    pub m_t: f64,
    /// `max_k max_{pi in Pi(k)} |pi|_2`.
    pub m_pi: f64,
    /// `Omega_X^2 = max_x V(x0, x)`.
    pub omega_x: f64,
    /// `Omega_P^2 >= max_p W(p0, p)`.
    pub omega_p: f64,
    /// `Omega_Pi^2 = max_k max_pi U(pi0, pi)`.
    pub omega_pi: f64,
    pub c_p: f64,
}

/// Componentwise bound on the dual feasible region of each scenario: Simple
/// recourse gives `[-e, 0]` exactly, general recourse uses the supplied bound.
pub(crate) fn pi_box_lower(inst: &DroInstance, k: usize) -> Result<Vec<f64>> {
    let s = &inst.scenarios[k];
    match &s.recourse {
        Recourse::Simple => Ok(s.e.iter().map(|v| -v).collect()),
        Recourse::GeneralLp { pi_bound: Some(b), .. } => Ok(vec![-b; inst.m]),
        Recourse::GeneralLp { pi_bound: None, .. } => Err(DroError::UnknownPiBound(format!(
            "scenario {k} has general recourse and no pi_bound"
        ))),
    }
}

/// `Omega_X` for the box `[0, U]` around `x0`.
pub fn omega_x(x_upper: &[f64], x0: &[f64]) -> f64 {
    let s: f64 = x_upper
        .iter()
        .zip(x0)
        .map(|(&u, &x)| {
            let r = x.max(u - x);
            r * r
        })
        .sum();
    (0.5 * s).sqrt()
}

/// Exact `max_{p in simplex} W(p0, p)`, attained at a vertex. Used as the
/// enclosing bound for every ambiguity set.
pub fn simplex_radius_sq(geometry: Geometry, p0: &[f64]) -> Result<f64> {
    match geometry {
        Geometry::Entropy => {
            let min = p0.iter().cloned().fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(DroError::Domain("entropy radius needs a positive center".into()));
            }
            Ok(-min.ln())
        }
        Geometry::Euclidean => {
            let sq: f64 = p0.iter().map(|v| v * v).sum();
            let min = p0.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(1.0 - 2.0 * min + sq)
        }
    }
}

pub fn compute_constants(
    inst: &DroInstance,
    geometry: Geometry,
    x0: &[f64],
    p0: &[f64],
    pi0: Option<&[Vec<f64>]>,
) -> Result<ProblemConstants> {
    if geometry == Geometry::Entropy && matches!(inst.ambiguity, AmbiguitySpec::ChiSquare { .. }) {
        return Err(DroError::Unsupported("the chi-square set supports Euclidean geometry only".into()));
    }
    let m_t = inst
        .scenarios
        .iter()
        .map(|s| s.t.spectral_norm(POWER_ITERATIONS, POWER_RTOL))
        .fold(0.0, f64::max);
    let mut m_pi = 0.0_f64;
    let mut omega_pi_sq = 0.0_f64;
    for k in 0..inst.k {
        let lo = pi_box_lower(inst, k)?;
        // exact for simple recourse; an upper bound from the box for general recourse
        m_pi = m_pi.max(norm2(&lo));
        let centre = pi0.map(|p| p[k].clone()).unwrap_or_else(|| vec![0.0; inst.m]);
        let far: f64 = lo
            .iter()
            .zip(&centre)
            .map(|(&l, &c)| {
                let r = (c - l).abs().max(c.abs());
                r * r
            })
            .sum();
        omega_pi_sq = omega_pi_sq.max(0.5 * far);
    }
    let omega_p_sq = simplex_radius_sq(geometry, p0)?;
    Ok(ProblemConstants {
        m_t,
        m_pi,
        omega_x: omega_x(&inst.x_upper, x0),
        omega_p: omega_p_sq.max(0.0).sqrt(),
        omega_pi: omega_pi_sq.sqrt(),
        c_p: geometry.c_p(inst.k),
    })
}

/// Constants for the joint-matrix (Kantorovich) formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KantorovichConstants {
    /// `Omega_H^2 >= max_H W(H_bar, H)` over matrices with row sums `p_bar`.
    pub omega_h: f64,
    /// Radius after the change of variables: `sqrt(K) Omega_H` (Euclidean) or
    /// `Omega_H` (entropy).
    pub omega_tilde: f64,
    /// Adjusted norm constant `sqrt(K)` for both geometries.
    pub c_tilde: f64,
}

/// The smoothing and stepsize center for the joint matrix: row `i` spreads
/// `p_bar_i` evenly over the `K` columns.
pub fn h_center(p_bar: &[f64]) -> Vec<f64> {
    let k = p_bar.len();
    let mut h = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            h[i * k + j] = p_bar[i] / k as f64;
        }
    }
    h
}

pub fn kantorovich_constants(p_bar: &[f64], geometry: Geometry) -> KantorovichConstants {
    let k = p_bar.len() as f64;
    let omega_h_sq = match geometry {
        Geometry::Euclidean => (1.0 - 1.0 / k) * p_bar.iter().map(|v| v * v).sum::<f64>(),
        Geometry::Entropy => p_bar.iter().sum::<f64>() * k.ln(),
    };
    let omega_tilde_sq = match geometry {
        Geometry::Euclidean => k * omega_h_sq,
        Geometry::Entropy => omega_h_sq,
    };
    KantorovichConstants {
        omega_h: omega_h_sq.sqrt(),
        omega_tilde: omega_tilde_sq.sqrt(),
        c_tilde: k.sqrt(),
    }
}
