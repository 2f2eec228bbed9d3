//! Bregman proximal operators and linear maximizers over the ambiguity sets.
//!
//! Every prox solves `argmax_p <scores, p> - stepsize * W(prev, p)` over its set,
//! with `W` the probability-block distance of [`crate::geometry`]. Under the
//! Euclidean geometry `W = |.|^2` carries no half, so the maximizer is the
//! projection of `prev + scores / (2 stepsize)`.
//!
//! For the Kantorovich ball the prox acts on a joint matrix `H` (row sums
//! `p_bar`, transport cost `<D, H> <= delta`), and the worst-case marginal is the
//! column-sum vector `q`. The transport budget is dualized with a scalar
//! multiplier found by bisection, which leaves `K` independent row problems.

use rayon::prelude::*;

use crate::error::{DroError, Result};
use crate::geometry::Geometry;
use crate::linalg::Matrix;
use crate::model::AmbiguitySpec;

/// Smallest value kept in entropy outputs, so that the next multiplicative
/// update still has a positive reference point.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Rows per joint-matrix evaluation above which rows are solved on the rayon pool.
const PARALLEL_ROWS: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct ProxRequest<'a> {
    pub scores: &'a [f64],
    pub prev: &'a [f64],
    /// `tau > 0`; `+inf` returns `prev` unchanged.
    pub stepsize: f64,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportState {
    /// Row-major `K x K` joint mass.
    pub h: Vec<f64>,
    pub lambda: f64,
    /// Column sums of `h`.
    pub q: Vec<f64>,
}

fn check_request(req: &ProxRequest<'_>) -> Result<()> {
    if req.scores.len() != req.prev.len() {
        return Err(DroError::Domain(format!(
            "scores have length {}, prev has length {}",
            req.scores.len(),
            req.prev.len()
        )));
    }
    if !(req.stepsize > 0.0) {
        return Err(DroError::Domain(format!("stepsize must be positive, got {}", req.stepsize)));
    }
    if req.scores.iter().any(|v| !v.is_finite()) {
        return Err(DroError::Domain("scores must be finite".into()));
    }
    Ok(())
}

fn require_positive_prev(prev: &[f64], skip: impl Fn(usize) -> bool) -> Result<()> {
    for (i, &v) in prev.iter().enumerate() {
        if !skip(i) && !(v > 0.0) {
            return Err(DroError::Domain(format!(
                "entropy prox needs a positive previous point, prev[{i}] = {v}"
            )));
        }
    }
    Ok(())
}

/// Euclidean projection of `y` onto `{p >= 0, sum p = mass}` by the sorted
/// threshold rule. Ties in the sort are broken by index.
pub fn project_simplex(y: &[f64], mass: f64) -> Vec<f64> {
    let n = y.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![mass],
        _ => {}
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &i) in idx.iter().enumerate() {
        cum += y[i];
        let t = (cum - mass) / (j + 1) as f64;
        if j == 0 || y[i] - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Entropy prox with total mass `mass`: `p ∝ prev * exp(scores / tau)`,
/// computed in the log domain. Coordinates with `prev = 0` stay at zero.
fn entropy_mass(prev: &[f64], scores: &[f64], tau: f64, mass: f64) -> Vec<f64> {
    let logs: Vec<f64> = prev
        .iter()
        .zip(scores)
        .map(|(&p, &s)| if p > 0.0 { p.ln() + s / tau } else { f64::NEG_INFINITY })
        .collect();
    normalize_logs(&logs, mass)
}

/// `mass * softmax(logs)`, with `-inf` entries mapped to exact zeros.
fn normalize_logs(logs: &[f64], mass: f64) -> Vec<f64> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; logs.len()];
    }
    let w: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    logs.iter()
        .zip(&w)
        .map(|(&l, &wi)| if l > f64::NEG_INFINITY { (mass * wi / total).max(ENTROPY_FLOOR) } else { 0.0 })
        .collect()
}

/// Row prox over `{h >= 0, sum h = mass}`.
fn prox_mass(prev: &[f64], scores: &[f64], tau: f64, geometry: Geometry, mass: f64) -> Vec<f64> {
    if tau.is_infinite() {
        return prev.to_vec();
    }
    match geometry {
        Geometry::Entropy => entropy_mass(prev, scores, tau, mass),
        Geometry::Euclidean => {
            let y: Vec<f64> = prev.iter().zip(scores).map(|(&p, &s)| p + s / (2.0 * tau)).collect();
            project_simplex(&y, mass)
        }
    }
}

pub fn prox_simplex(req: &ProxRequest<'_>) -> Result<Vec<f64>> {
    check_request(req)?;
    if req.geometry == Geometry::Entropy {
        require_positive_prev(req.prev, |_| false)?;
    }
    Ok(prox_mass(req.prev, req.scores, req.stepsize, req.geometry, 1.0))
}

/// Prox over `{sum p = 1, 0 <= p_k <= p_bar_k / alpha}`.
pub fn prox_avar(req: &ProxRequest<'_>, alpha: f64, p_bar: &[f64]) -> Result<Vec<f64>> {
    check_request(req)?;
    let k = req.prev.len();
    if p_bar.len() != k {
        return Err(DroError::Domain("p_bar length differs from prev".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(DroError::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let caps: Vec<f64> = p_bar.iter().map(|p| p / alpha).collect();
    let cap_sum: f64 = caps.iter().sum();
    if cap_sum < 1.0 - 1e-12 {
        return Err(DroError::Domain(format!("AVaR caps sum to {cap_sum} < 1")));
    }
    if cap_sum <= 1.0 + 1e-12 {
        return Ok(caps);
    }
    if req.stepsize.is_infinite() {
        return Ok(req.prev.to_vec());
    }
    match req.geometry {
        Geometry::Euclidean => {
            let y: Vec<f64> =
                req.prev.iter().zip(req.scores).map(|(&p, &s)| p + s / (2.0 * req.stepsize)).collect();
            Ok(capped_shift(&y, &caps))
        }
        Geometry::Entropy => {
            require_positive_prev(req.prev, |i| caps[i] == 0.0)?;
            let lw: Vec<f64> = req
                .prev
                .iter()
                .zip(req.scores)
                .zip(&caps)
                .map(|((&p, &s), &c)| if c > 0.0 { p.ln() + s / req.stepsize } else { f64::NEG_INFINITY })
                .collect();
            Ok(capped_scale(&lw, &caps))
        }
    }
}

/// `p_i = clip(y_i - theta, 0, cap_i)` with `theta` chosen so that `sum p = 1`.
fn capped_shift(y: &[f64], caps: &[f64]) -> Vec<f64> {
    let eval = |theta: f64| -> f64 { y.iter().zip(caps).map(|(&v, &c)| (v - theta).clamp(0.0, c)).sum() };
    let mut lo = y.iter().zip(caps).map(|(&v, &c)| v - c).fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (eval(hi) - 1.0).abs() <= 1e-14 {
            break;
        }
    }
    // exact threshold on the identified free set
    let theta = 0.5 * (lo + hi);
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut capped = 0.0;
    for (&v, &c) in y.iter().zip(caps) {
        let s = v - theta;
        if s >= c {
            capped += c;
        } else if s > 0.0 {
            free_sum += v;
            free_n += 1;
        }
    }
    let refined = if free_n > 0 { (free_sum + capped - 1.0) / free_n as f64 } else { theta };
    let pick = |t: f64| -> Vec<f64> { y.iter().zip(caps).map(|(&v, &c)| (v - t).clamp(0.0, c)).collect() };
    let a = pick(refined);
    let b = pick(hi);
    let res = |p: &[f64]| (p.iter().sum::<f64>() - 1.0).abs();
    if res(&a) <= res(&b) {
        a
    } else {
        b
    }
}

/// `p_i = min(cap_i, exp(lw_i + z))` with `z` chosen so that `sum p = 1`.
fn capped_scale(lw: &[f64], caps: &[f64]) -> Vec<f64> {
    let k = lw.len() as f64;
    let eval = |z: f64| -> f64 {
        lw.iter().zip(caps).map(|(&l, &c)| if c > 0.0 { (l + z).exp().min(c) } else { 0.0 }).sum()
    };
    let max_lw = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = -max_lw - k.ln() - 1.0;
    let mut hi = lw
        .iter()
        .zip(caps)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&l, &c)| c.ln() - l)
        .fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    let mut capped = 0.0;
    let mut free = Vec::new();
    for (i, (&l, &c)) in lw.iter().zip(caps).enumerate() {
        if c > 0.0 {
            if l + z >= c.ln() {
                capped += c;
            } else {
                free.push(i);
            }
        }
    }
    let pick = |z: f64| -> Vec<f64> {
        lw.iter()
            .zip(caps)
            .map(|(&l, &c)| if c > 0.0 { (l + z).exp().min(c).max(ENTROPY_FLOOR) } else { 0.0 })
            .collect()
    };
    let res = |p: &[f64]| (p.iter().sum::<f64>() - 1.0).abs();
    let b = pick(hi);
    if !free.is_empty() && capped < 1.0 {
        let m = free.iter().map(|&i| lw[i]).fold(f64::NEG_INFINITY, f64::max);
        let lse = m + free.iter().map(|&i| (lw[i] - m).exp()).sum::<f64>().ln();
        let a = pick((1.0 - capped).ln() - lse);
        if res(&a) <= res(&b) {
            return a;
        }
    }
    b
}

/// Euclidean prox over `{p in simplex, |p - p_bar|^2 <= r}`.
pub fn prox_chisq(req: &ProxRequest<'_>, r: f64, p_bar: &[f64]) -> Result<Vec<f64>> {
    check_request(req)?;
    if req.geometry != Geometry::Euclidean {
        return Err(DroError::Unsupported(
            "the chi-square set supports the Euclidean prox only".into(),
        ));
    }
    if !(r >= 0.0) {
        return Err(DroError::Domain(format!("chi-square radius must be nonnegative, got {r}")));
    }
    if p_bar.len() != req.prev.len() {
        return Err(DroError::Domain("p_bar length differs from prev".into()));
    }
    if r == 0.0 {
        return Ok(p_bar.to_vec());
    }
    if req.stepsize.is_infinite() {
        return Ok(req.prev.to_vec());
    }
    let y: Vec<f64> =
        req.prev.iter().zip(req.scores).map(|(&p, &s)| p + s / (2.0 * req.stepsize)).collect();
    Ok(ball_simplex_projection(&y, p_bar, r))
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    crate::linalg::sq_dist(a, b)
}

/// Projection of `y` onto `simplex ∩ {|p - u|^2 <= r}`: `p(nu) = proj((y + nu u) / (1 + nu))`
/// with `nu >= 0` found by bisection on the radius residual.
fn ball_simplex_projection(y: &[f64], u: &[f64], r: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> {
        let z: Vec<f64> = y.iter().zip(u).map(|(&a, &b)| (a + nu * b) / (1.0 + nu)).collect();
        project_simplex(&z, 1.0)
    };
    let p0 = at(0.0);
    if dist_sq(&p0, u) <= r {
        return p0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut p_hi = at(hi);
    let mut guard = 0;
    while dist_sq(&p_hi, u) > r {
        lo = hi;
        hi *= 2.0;
        p_hi = at(hi);
        guard += 1;
        if guard > 2000 {
            return u.to_vec();
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = at(mid);
        let d = dist_sq(&p, u);
        if d > r {
            lo = mid;
        } else {
            hi = mid;
            p_hi = p;
            if r - d <= 1e-12 * r.max(1e-300) {
                break;
            }
        }
    }
    p_hi
}

/// Dispatches the prox for the simplex, AVaR, and chi-square sets.
pub fn prox_ambiguity(amb: &AmbiguitySpec, req: &ProxRequest<'_>) -> Result<Vec<f64>> {
    match amb {
        AmbiguitySpec::Simplex => prox_simplex(req),
        AmbiguitySpec::Avar { alpha, p_bar } => prox_avar(req, *alpha, p_bar),
        AmbiguitySpec::ChiSquare { r, p_bar } => prox_chisq(req, *r, p_bar),
        AmbiguitySpec::Kantorovich { .. } => Err(DroError::Unsupported(
            "Kantorovich sets are updated through the joint-matrix prox".into(),
        )),
    }
}

/// Joint-matrix prox: maximizes `<scores, sum_i H_i> - stepsize * W(prev, H)` over
/// `{H >= 0, row sums p_bar, <D, H> <= delta}`. The multiplier of the budget is
/// located by bisection on `<D, H(lambda)> - delta` to tolerance `tol`.
pub fn prox_kantorovich_q(
    req: &ProxRequest<'_>,
    d: &Matrix,
    delta: f64,
    p_bar: &[f64],
    tol: f64,
) -> Result<TransportState> {
    let k = p_bar.len();
    if req.scores.len() != k || req.prev.len() != k * k || d.rows != k || d.cols != k {
        return Err(DroError::Domain("joint-matrix prox shapes are inconsistent".into()));
    }
    if !(req.stepsize > 0.0) {
        return Err(DroError::Domain(format!("stepsize must be positive, got {}", req.stepsize)));
    }
    if !(delta >= 0.0) {
        return Err(DroError::Domain(format!("transport radius must be nonnegative, got {delta}")));
    }
    if !(tol > 0.0) {
        return Err(DroError::Domain("bisection tolerance must be positive".into()));
    }
    let tau = req.stepsize;
    let geometry = req.geometry;
    let prev = req.prev;
    let scores = req.scores;

    if delta == 0.0 {
        // only zero-cost transport is allowed: restrict every row to its zero-distance support
        let rows = map_rows(k, |i| {
            if p_bar[i] == 0.0 {
                return Ok(vec![0.0; k]);
            }
            let support: Vec<usize> = (0..k).filter(|&j| d.get(i, j) == 0.0).collect();
            let pr: Vec<f64> = support.iter().map(|&j| prev[i * k + j]).collect();
            let sc: Vec<f64> = support.iter().map(|&j| scores[j]).collect();
            if geometry == Geometry::Entropy {
                require_positive_prev(&pr, |_| false)?;
            }
            let sol = prox_mass(&pr, &sc, tau, geometry, p_bar[i]);
            let mut row = vec![0.0; k];
            for (&j, v) in support.iter().zip(sol) {
                row[j] = v;
            }
            Ok(row)
        })?;
        return Ok(assemble(rows, 0.0, k));
    }

    if geometry == Geometry::Entropy {
        for i in 0..k {
            if p_bar[i] > 0.0 {
                require_positive_prev(&prev[i * k..(i + 1) * k], |_| false)?;
            }
        }
    }
    // lambda-free part of the entropy row kernel
    let base: Vec<f64> = if geometry == Geometry::Entropy && tau.is_finite() {
        (0..k * k)
            .map(|ij| if prev[ij] > 0.0 { prev[ij].ln() + scores[ij % k] / tau } else { f64::NEG_INFINITY })
            .collect()
    } else {
        Vec::new()
    };
    let solve_rows = |lambda: f64| -> Vec<Vec<f64>> {
        map_rows(k, |i| {
            if p_bar[i] == 0.0 {
                return Ok(vec![0.0; k]);
            }
            if !base.is_empty() {
                let logs: Vec<f64> =
                    (0..k).map(|j| base[i * k + j] - lambda * d.get(i, j) / tau).collect();
                return Ok(normalize_logs(&logs, p_bar[i]));
            }
            let sc: Vec<f64> = (0..k).map(|j| scores[j] - lambda * d.get(i, j)).collect();
            Ok(prox_mass(&prev[i * k..(i + 1) * k], &sc, tau, geometry, p_bar[i]))
        })
        .expect("row prox is infallible once inputs are checked")
    };
    let cost = |rows: &[Vec<f64>]| -> f64 {
        rows.iter().enumerate().map(|(i, r)| crate::linalg::dot(d.row(i), r)).sum()
    };

    let rows0 = solve_rows(0.0);
    if cost(&rows0) <= delta {
        return Ok(assemble(rows0, 0.0, k));
    }
    let min_pos = d.data.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let s_max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s_min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lo = 0.0;
    let mut hi = (s_max - s_min) / min_pos + 1.0;
    let mut rows_hi = solve_rows(hi);
    let mut expansions = 0;
    while cost(&rows_hi) > delta {
        lo = hi;
        hi *= 2.0;
        rows_hi = solve_rows(hi);
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(DroError::Bisection { lo, hi });
        }
    }
    for _ in 0..200 {
        if cost(&rows_hi) >= delta - tol {
            return Ok(assemble(rows_hi, hi, k));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket has collapsed to adjacent floats; the budget function is
            // continuous, so this is the numerical limit
            return Ok(assemble(rows_hi, hi, k));
        }
        let rows_mid = solve_rows(mid);
        if cost(&rows_mid) > delta {
            lo = mid;
        } else {
            hi = mid;
            rows_hi = rows_mid;
        }
    }
    if cost(&rows_hi) >= delta - tol {
        return Ok(assemble(rows_hi, hi, k));
    }
    Err(DroError::Bisection { lo, hi })
}

fn map_rows<F>(k: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    if k >= PARALLEL_ROWS {
        (0..k).into_par_iter().map(&f).collect()
    } else {
        (0..k).map(f).collect()
    }
}

fn assemble(rows: Vec<Vec<f64>>, lambda: f64, k: usize) -> TransportState {
    let mut h = Vec::with_capacity(k * k);
    for r in &rows {
        h.extend_from_slice(r);
    }
    let q = column_sums(&h, k);
    TransportState { h, lambda, q }
}

/// Column sums of a row-major `K x K` matrix, accumulated in row order.
pub fn column_sums(h: &[f64], k: usize) -> Vec<f64> {
    let mut q = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            q[j] += h[i * k + j];
        }
    }
    q
}

/// Transport cost `<D, H>`.
pub fn transport_cost(d: &Matrix, h: &[f64]) -> f64 {
    (0..d.rows).map(|i| crate::linalg::dot(d.row(i), &h[i * d.cols..(i + 1) * d.cols])).sum()
}

/// Maximizer of `<g, p>` over an ambiguity set. For the Kantorovich ball the
/// joint matrix is returned as well and `p` is its column-sum marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMax {
    pub p: Vec<f64>,
    pub h: Option<Vec<f64>>,
}

pub fn linear_maximizer(amb: &AmbiguitySpec, g: &[f64]) -> Result<LinearMax> {
    Ok(match amb {
        AmbiguitySpec::Simplex => LinearMax { p: linmax_simplex(g), h: None },
        AmbiguitySpec::Avar { alpha, p_bar } => LinearMax { p: linmax_avar(g, *alpha, p_bar), h: None },
        AmbiguitySpec::ChiSquare { r, p_bar } => LinearMax { p: linmax_chisq(g, *r, p_bar), h: None },
        AmbiguitySpec::Kantorovich { d, delta, p_bar } => {
            let h = linmax_kantorovich(g, d, *delta, p_bar);
            LinearMax { p: column_sums(&h, p_bar.len()), h: Some(h) }
        }
    })
}

/// First maximizing vertex.
pub fn linmax_simplex(g: &[f64]) -> Vec<f64> {
    let mut best = 0;
    for (i, &v) in g.iter().enumerate() {
        if v > g[best] {
            best = i;
        }
    }
    let mut p = vec![0.0; g.len()];
    p[best] = 1.0;
    p
}

/// Fills the caps `p_bar / alpha` in decreasing order of `g` (ties by index).
pub fn linmax_avar(g: &[f64], alpha: f64, p_bar: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    let mut p = vec![0.0; g.len()];
    let mut left = 1.0;
    for i in idx {
        if left <= 0.0 {
            break;
        }
        let take = (p_bar[i] / alpha).min(left);
        p[i] = take;
        left -= take;
    }
    p
}

/// Maximizer of `<g, p>` over `simplex ∩ {|p - u|^2 <= r}`. With multiplier
/// `nu > 0`, `p(nu) = proj(u + g / (2 nu))`; `nu` is found by bisection so that
/// the radius constraint is tight, unless the best face of the simplex is
/// already inside the ball.
pub fn linmax_chisq(g: &[f64], r: f64, u: &[f64]) -> Vec<f64> {
    let k = g.len();
    let g_max = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g_min = g.iter().cloned().fold(f64::INFINITY, f64::min);
    if r <= 0.0 || g_max == g_min {
        return u.to_vec();
    }
    // limit nu -> 0: uniform over the maximizing coordinates
    let top: Vec<usize> = (0..k).filter(|&i| g[i] == g_max).collect();
    let mut face = vec![0.0; k];
    for &i in &top {
        face[i] = 1.0 / top.len() as f64;
    }
    if dist_sq(&face, u) <= r {
        return face;
    }
    let at = |nu: f64| -> Vec<f64> {
        let z: Vec<f64> = u.iter().zip(g).map(|(&a, &b)| a + b / (2.0 * nu)).collect();
        project_simplex(&z, 1.0)
    };
    let mut hi = 1.0;
    let mut p_hi = at(hi);
    while dist_sq(&p_hi, u) > r {
        hi *= 2.0;
        p_hi = at(hi);
    }
    let mut lo = hi / 2.0;
    while dist_sq(&at(lo), u) <= r {
        hi = lo;
        p_hi = at(hi);
        lo /= 2.0;
        if lo < 1e-300 {
            return p_hi;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = at(mid);
        if dist_sq(&p, u) > r {
            lo = mid;
        } else {
            hi = mid;
            p_hi = p;
        }
    }
    p_hi
}

/// Maximizer of `sum_j g_j q_j` over the Kantorovich ball, returned as the joint
/// matrix. The budget multiplier solves the one-dimensional dual
/// `min_lambda lambda delta + sum_i p_bar_i max_j (g_j - lambda D_ij)`; at the
/// optimal multiplier the two bracketing row assignments are mixed so that the
/// budget holds with equality.
pub fn linmax_kantorovich(g: &[f64], d: &Matrix, delta: f64, p_bar: &[f64]) -> Vec<f64> {
    let k = g.len();
    let assign = |lambda: f64| -> Vec<usize> {
        (0..k)
            .map(|i| {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for j in 0..k {
                    let v = g[j] - lambda * d.get(i, j);
                    if v > best_v || (v == best_v && d.get(i, j) < d.get(i, best)) {
                        best_v = v;
                        best = j;
                    }
                }
                best
            })
            .collect()
    };
    let budget = |a: &[usize]| -> f64 { (0..k).map(|i| p_bar[i] * d.get(i, a[i])).sum() };
    let to_h = |a: &[usize]| -> Vec<f64> {
        let mut h = vec![0.0; k * k];
        for i in 0..k {
            h[i * k + a[i]] = p_bar[i];
        }
        h
    };
    let a0 = assign(0.0);
    if budget(&a0) <= delta {
        return to_h(&a0);
    }
    let min_pos = d.data.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let g_max = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g_min = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lo = 0.0;
    let mut hi = (g_max - g_min) / min_pos + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if budget(&assign(mid)) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a_lo = assign(lo);
    let a_hi = assign(hi);
    let (b_lo, b_hi) = (budget(&a_lo), budget(&a_hi));
    let h_hi = to_h(&a_hi);
    if b_lo <= b_hi || b_lo <= delta {
        return if b_lo <= delta { to_h(&a_lo) } else { h_hi };
    }
    let theta = ((delta - b_hi) / (b_lo - b_hi)).clamp(0.0, 1.0);
    let h_lo = to_h(&a_lo);
    h_lo.iter().zip(&h_hi).map(|(&a, &b)| theta * a + (1.0 - theta) * b).collect()
}
