//! Independent reference solvers shared by the integration tests.
#![allow(dead_code)]

use dro_core::linalg::Matrix;
use dro_core::model::{AmbiguitySpec, DroInstance, Recourse};
use dro_core::qplp::{lp_solve, DenseLp, LpOutcome};
use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// A minimization LP with `<=` rows and variable bounds.
#[derive(Debug, Clone)]
pub struct LinProg {
    pub obj: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl LinProg {
    fn var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.obj.push(cost);
        self.lower.push(lo);
        self.upper.push(hi);
        self.obj.len() - 1
    }

    pub fn to_dense(&self) -> DenseLp {
        let n = self.obj.len();
        let mut lp = DenseLp::new(self.obj.clone(), self.lower.clone(), self.upper.clone());
        for (terms, rhs) in &self.rows {
            let mut row = vec![0.0; n];
            for &(j, v) in terms {
                row[j] += v;
            }
            lp.push_row(row, *rhs);
        }
        lp
    }

    pub fn solve_qplp(&self) -> (f64, Vec<f64>) {
        match lp_solve(&self.to_dense()).expect("qplp solve") {
            LpOutcome::Optimal(s) => (s.value, s.x),
            other => panic!("reference LP not optimal: {other:?}"),
        }
    }

    pub fn solve_minilp(&self) -> (f64, Vec<f64>) {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..self.obj.len())
            .map(|j| p.add_var(self.obj[j], (self.lower[j], self.upper[j])))
            .collect();
        for (terms, rhs) in &self.rows {
            let t: Vec<_> = terms.iter().map(|&(j, v)| (vars[j], v)).collect();
            p.add_constraint(&t[..], ComparisonOp::Le, *rhs);
        }
        let s = p.solve().expect("minilp solve");
        (s.objective(), vars.iter().map(|&v| s[v]).collect())
    }
}

/// Extensive-form LP of the problem for polyhedral ambiguity sets, or of the
/// expected-value problem under `fixed_p`. The first `n` variables are `x`.
pub fn extensive_lp(inst: &DroInstance, fixed_p: Option<&[f64]>) -> LinProg {
    let (n, m, k) = (inst.n, inst.m, inst.k);
    let mut lp = LinProg { obj: vec![], lower: vec![], upper: vec![], rows: vec![] };
    for j in 0..n {
        lp.var(inst.c[j], 0.0, inst.x_upper[j]);
    }
    // y_k >= 0 with R y_k + T_k x >= d_k; second-stage cost terms per scenario
    let mut cost_terms: Vec<Vec<(usize, f64)>> = Vec::with_capacity(k);
    for s in &inst.scenarios {
        let ys: Vec<usize> = (0..m).map(|_| lp.var(0.0, 0.0, f64::INFINITY)).collect();
        let r = match &s.recourse {
            Recourse::Simple => Matrix::identity(m),
            Recourse::GeneralLp { r, .. } => r.clone(),
        };
        for i in 0..m {
            let mut terms: Vec<(usize, f64)> = (0..n).map(|j| (j, -s.t.get(i, j))).collect();
            for l in 0..m {
                if r.get(i, l) != 0.0 {
                    terms.push((ys[l], -r.get(i, l)));
                }
            }
            lp.rows.push((terms, -s.d[i]));
        }
        cost_terms.push(ys.iter().zip(&s.e).map(|(&y, &e)| (y, e)).collect());
    }
    if let Some(p) = fixed_p {
        for (kk, terms) in cost_terms.iter().enumerate() {
            for &(y, e) in terms {
                lp.obj[y] += p[kk] * e;
            }
        }
        return lp;
    }
    match &inst.ambiguity {
        AmbiguitySpec::Simplex => {
            let t = lp.var(1.0, f64::NEG_INFINITY, f64::INFINITY);
            for terms in &cost_terms {
                let mut row = terms.clone();
                row.push((t, -1.0));
                lp.rows.push((row, 0.0));
            }
        }
        AmbiguitySpec::Avar { alpha, p_bar } => {
            let nu = lp.var(1.0, f64::NEG_INFINITY, f64::INFINITY);
            for (kk, terms) in cost_terms.iter().enumerate() {
                let w = lp.var(p_bar[kk] / alpha, 0.0, f64::INFINITY);
                let mut row = terms.clone();
                row.push((nu, -1.0));
                row.push((w, -1.0));
                lp.rows.push((row, 0.0));
            }
        }
        AmbiguitySpec::Kantorovich { d, delta, p_bar } => {
            let a: Vec<usize> = (0..k).map(|i| lp.var(p_bar[i], f64::NEG_INFINITY, f64::INFINITY)).collect();
            let b = lp.var(*delta, 0.0, f64::INFINITY);
            for i in 0..k {
                for (j, terms) in cost_terms.iter().enumerate() {
                    let mut row = terms.clone();
                    row.push((a[i], -1.0));
                    if d.get(i, j) != 0.0 {
                        row.push((b, -d.get(i, j)));
                    }
                    lp.rows.push((row, 0.0));
                }
            }
        }
        AmbiguitySpec::ChiSquare { .. } => panic!("the chi-square set has no LP reformulation"),
    }
    lp
}

/// Optimal value from the extensive LP, solved by qplp and confirmed by minilp.
pub fn lp_fstar(inst: &DroInstance) -> (f64, Vec<f64>) {
    fstar_checked(&extensive_lp(inst, None), inst.n)
}

/// Optimal value of the expected-value problem under `p`.
pub fn saa_fstar(inst: &DroInstance, p: &[f64]) -> (f64, Vec<f64>) {
    fstar_checked(&extensive_lp(inst, Some(p)), inst.n)
}

fn fstar_checked(lp: &LinProg, n: usize) -> (f64, Vec<f64>) {
    let (v1, x1) = lp.solve_qplp();
    let (v2, _) = lp.solve_minilp();
    assert!((v1 - v2).abs() <= 1e-7 * (1.0 + v1.abs()), "LP oracles disagree: qplp {v1}, minilp {v2}");
    (v1, x1[..n].to_vec())
}

// ---------------------------------------------------------------------------
// Prox oracles. Each solves the same problem as a library prox by a different
// route: active-set enumeration, dual bisection, or a dense solve over all
// K^2 joint-matrix entries.

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(r: &mut impl rand::Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..hi)).collect()
}

/// A random strictly positive point of the simplex.
pub fn random_simplex_point(r: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest point to `y` in `{sum p = mass, 0 <= p <= caps}` (caps may be
/// infinite), by enumerating every lower/free/upper pattern.
pub fn capped_projection_enum(y: &[f64], caps: &[f64], mass: f64) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let pattern: Vec<u8> = (0..n)
            .map(|_| {
                let v = (c % 3) as u8;
                c /= 3;
                v
            })
            .collect();
        if pattern.iter().zip(caps).any(|(&s, cap)| s == 2 && !cap.is_finite()) {
            continue;
        }
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 1).collect();
        let fixed: f64 = (0..n).filter(|&i| pattern[i] == 2).map(|i| caps[i]).sum();
        let mut p = vec![0.0; n];
        for i in 0..n {
            if pattern[i] == 2 {
                p[i] = caps[i];
            }
        }
        if free.is_empty() {
            if (fixed - mass).abs() > 1e-12 {
                continue;
            }
        } else {
            let theta = (free.iter().map(|&i| y[i]).sum::<f64>() - (mass - fixed)) / free.len() as f64;
            for &i in &free {
                p[i] = y[i] - theta;
            }
        }
        if p.iter().zip(caps).any(|(&v, &cap)| v < -1e-12 || v > cap + 1e-12) {
            continue;
        }
        let obj = sq(&p, y);
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, p));
        }
    }
    best.expect("capped simplex is nonempty").1
}

/// Maximizer of `<s, p> - tau * sum p log(p / prev)` over the capped simplex,
/// by enumerating which coordinates sit at their caps.
pub fn capped_entropy_enum(s: &[f64], prev: &[f64], tau: f64, caps: &[f64]) -> Vec<f64> {
    let n = s.len();
    let logw: Vec<f64> = (0..n).map(|i| prev[i].ln() + s[i] / tau).collect();
    let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - mx).exp()).collect();
    let objective = |p: &[f64]| -> f64 {
        (0..n).map(|i| s[i] * p[i] - if p[i] > 0.0 { tau * p[i] * (p[i] / prev[i]).ln() } else { 0.0 }).sum()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n) {
        let capped = |i: usize| mask & (1 << i) != 0;
        if (0..n).any(|i| capped(i) && !caps[i].is_finite()) {
            continue;
        }
        let fixed: f64 = (0..n).filter(|&i| capped(i)).map(|i| caps[i]).sum();
        let wf: f64 = (0..n).filter(|&i| !capped(i)).map(|i| w[i]).sum();
        let rest = 1.0 - fixed;
        if rest < -1e-12 || (wf == 0.0 && rest.abs() > 1e-12) {
            continue;
        }
        let p: Vec<f64> =
            (0..n).map(|i| if capped(i) { caps[i] } else if wf > 0.0 { rest.max(0.0) * w[i] / wf } else { 0.0 }).collect();
        if p.iter().zip(caps).any(|(&v, &cap)| v > cap + 1e-12) {
            continue;
        }
        let obj = objective(&p);
        if best.as_ref().map_or(true, |(b, _)| obj > *b) {
            best = Some((obj, p));
        }
    }
    best.expect("capped simplex is nonempty").1
}

/// Nearest point to `y` in `{simplex} ∩ {|p - u|^2 <= r}`: bisection to 1e-12
/// on the multiplier of the ball, each inner problem solved by enumeration.
pub fn chisq_projection_oracle(y: &[f64], u: &[f64], r: f64) -> Vec<f64> {
    let inf = vec![f64::INFINITY; y.len()];
    let at = |nu: f64| -> Vec<f64> {
        let z: Vec<f64> = y.iter().zip(u).map(|(a, b)| (a + nu * b) / (1.0 + nu)).collect();
        capped_projection_enum(&z, &inf, 1.0)
    };
    let p0 = at(0.0);
    if sq(&p0, u) <= r {
        return p0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while sq(&at(hi), u) > r {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if sq(&at(mid), u) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Column sums of a row-major `k x k` matrix.
pub fn col_sums(h: &[f64], k: usize) -> Vec<f64> {
    (0..k).map(|j| (0..k).map(|i| h[i * k + j]).sum()).collect()
}

/// Euclidean joint-matrix prox as one dense QP over all `K^2` entries:
/// nearest point to `prev + S / (2 tau)` under row sums, `H >= 0` and the budget.
pub fn kantorovich_euclid_dense_qp(
    scores: &[f64],
    prev: &[f64],
    tau: f64,
    d: &Matrix,
    delta: f64,
    p_bar: &[f64],
) -> Vec<f64> {
    use dro_core::qplp::{qp_nearest_point, HalfSpace, NearestPointQp, QpOutcome};
    let k = p_bar.len();
    let anchor: Vec<f64> = (0..k * k).map(|ij| prev[ij] + scores[ij % k] / (2.0 * tau)).collect();
    let mut cuts = Vec::new();
    for i in 0..k {
        let mut a = vec![0.0; k * k];
        for j in 0..k {
            a[i * k + j] = 1.0;
        }
        cuts.push(HalfSpace { normal: a.clone(), rhs: p_bar[i] });
        cuts.push(HalfSpace { normal: a.iter().map(|v| -v).collect(), rhs: -p_bar[i] });
    }
    cuts.push(HalfSpace { normal: d.data.clone(), rhs: delta });
    let upper: Vec<f64> = (0..k * k).map(|ij| p_bar[ij / k]).collect();
    let qp = NearestPointQp { anchor, lower: vec![0.0; k * k], upper, cuts };
    match qp_nearest_point(&qp).expect("dense QP") {
        QpOutcome::Optimal(h) => h,
        QpOutcome::Infeasible => panic!("dense QP reported infeasible"),
    }
}

fn simplex_proj_sorted(y: &[f64], mass: f64) -> Vec<f64> {
    let mut s = y.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = s[0] - mass;
    for (j, v) in s.iter().enumerate() {
        cum += v;
        let t = (cum - mass) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Euclidean joint-matrix prox by block coordinate ascent on the dual, the
/// counterpart of [`kantorovich_entropy_dense`]: each row is projected exactly
/// onto its scaled simplex, the budget multiplier is found by bisection, and the
/// loop runs until row sums and the multiplier settle to `tol`.
pub fn kantorovich_euclid_dense(
    scores: &[f64],
    prev: &[f64],
    tau: f64,
    d: &Matrix,
    delta: f64,
    p_bar: &[f64],
    tol: f64,
) -> Vec<f64> {
    use rayon::prelude::*;
    let k = p_bar.len();
    let y: Vec<f64> = (0..k * k).map(|ij| prev[ij] + scores[ij % k] / (2.0 * tau)).collect();
    let mut theta = vec![0.0; k];
    let mut z = 0.0_f64;
    let build = |theta: &[f64], z: f64| -> Vec<f64> {
        (0..k * k).into_par_iter().map(|ij| (y[ij] - theta[ij / k] - z * d.data[ij]).max(0.0)).collect()
    };
    let cost = |h: &[f64]| -> f64 { h.iter().zip(&d.data).map(|(x, y)| x * y).sum() };
    for _ in 0..1_000_000 {
        // row step: exact simplex projection of y - z D per row
        let thetas: Vec<f64> = (0..k)
            .into_par_iter()
            .map(|i| {
                let row: Vec<f64> = (0..k).map(|j| y[i * k + j] - z * d.data[i * k + j]).collect();
                let h = simplex_proj_sorted(&row, p_bar[i]);
                let j = (0..k).find(|&j| h[j] > 0.0).unwrap();
                row[j] - h[j]
            })
            .collect();
        theta = thetas;
        // budget step: smallest z >= 0 with cost(z) <= delta
        let z_new = if cost(&build(&theta, 0.0)) <= delta {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, z.max(1.0));
            while cost(&build(&theta, hi)) > delta {
                lo = hi;
                hi *= 2.0;
            }
            while hi - lo > 1e-15 * (1.0 + hi) {
                let mid = 0.5 * (lo + hi);
                if cost(&build(&theta, mid)) > delta {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        let moved = (z_new - z).abs();
        z = z_new;
        let h = build(&theta, z);
        let row_err: f64 =
            (0..k).map(|i| (h[i * k..(i + 1) * k].iter().sum::<f64>() - p_bar[i]).abs()).fold(0.0, f64::max);
        if row_err <= tol && moved <= tol * (1.0 + z) {
            return h;
        }
    }
    panic!("dual coordinate ascent did not converge");
}

/// Entropy joint-matrix prox by block coordinate ascent on the dual: rows are
/// rescaled exactly, the budget multiplier is updated by a 1-D root solve, and
/// the loop runs until row sums and complementarity hold to `tol`.
pub fn kantorovich_entropy_dense(
    scores: &[f64],
    prev: &[f64],
    tau: f64,
    d: &Matrix,
    delta: f64,
    p_bar: &[f64],
    tol: f64,
) -> Vec<f64> {
    use rayon::prelude::*;
    let k = p_bar.len();
    // log of the unnormalized kernel, without the budget term
    let logy: Vec<f64> = (0..k * k).map(|ij| prev[ij].ln() + scores[ij % k] / tau).collect();
    let mut a = vec![0.0; k];
    let mut z = 0.0_f64;
    let build = |a: &[f64], z: f64| -> Vec<f64> {
        (0..k * k)
            .into_par_iter()
            .map(|ij| (logy[ij] - a[ij / k] - z * d.data[ij] / tau).exp())
            .collect()
    };
    let cost = |h: &[f64]| -> f64 { h.iter().zip(&d.data).map(|(x, y)| x * y).sum() };
    for _ in 0..100_000 {
        // row step
        let h = build(&a, z);
        for i in 0..k {
            let s: f64 = h[i * k..(i + 1) * k].iter().sum();
            a[i] += (s / p_bar[i]).ln();
        }
        // budget step: largest z >= 0 with cost(z) <= delta, by safeguarded Newton
        let c0 = cost(&build(&a, 0.0));
        let z_new = if c0 <= delta {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, z.max(1.0));
            while cost(&build(&a, hi)) > delta {
                lo = hi;
                hi *= 2.0;
            }
            let mut t = 0.5 * (lo + hi);
            for _ in 0..200 {
                let ht = build(&a, t);
                let c = cost(&ht) - delta;
                if c.abs() <= 1e-15 * (1.0 + delta) {
                    break;
                }
                if c > 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
                let dc: f64 = -ht.iter().zip(&d.data).map(|(x, y)| x * y * y).sum::<f64>() / tau;
                let newton = t - c / dc;
                t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if hi - lo <= 1e-15 * (1.0 + hi) {
                    break;
                }
            }
            t
        };
        let moved = (z_new - z).abs();
        z = z_new;
        let h = build(&a, z);
        let row_err: f64 =
            (0..k).map(|i| (h[i * k..(i + 1) * k].iter().sum::<f64>() - p_bar[i]).abs()).fold(0.0, f64::max);
        if row_err <= tol && moved <= tol * (1.0 + z) {
            return h;
        }
    }
    panic!("dual coordinate ascent did not converge");
}
