//! Dense LP and nearest-point QP kernels for the small systems that arise in the
//! level method, the Benders master, and test cross-checks.
//!
//! The LP `min c.x s.t. A x <= b, l <= x <= u` is solved through its dual
//! `min h.y s.t. G^T y = -c, y >= 0`, where `G, h` stack the inequality rows and
//! the finite bounds. That dual has one equality row per primal variable, so the
//! tableau stays short even when thousands of cuts have been collected. The
//! primal point is read off as the simplex multipliers of the dual.

use crate::error::{DroError, Result};
use crate::linalg::{cholesky_solve, dot, norm2};

/// Numerical tolerances shared by every kernel in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Smallest magnitude accepted as a pivot element.
    pub pivot: f64,
    /// Reduced-cost optimality tolerance, relative to the cost scale.
    pub optimality: f64,
    /// Primal feasibility tolerance, relative to the right-hand-side scale.
    pub feasibility: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
    /// Pivot cap; 0 means `50 * (rows + cols) + 1000`.
    pub max_pivots: usize,
    /// Largest number of LP variables accepted.
    pub max_variables: usize,
    /// QP violation tolerance (absolute, scaled by the constraint normal).
    pub qp_feasibility: f64,
    /// QP active-set step cap; 0 means `20 * (constraints + n) + 200`.
    pub qp_max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pivot: 1e-11,
            optimality: 1e-11,
            feasibility: 1e-9,
            degenerate_switch: 30,
            max_pivots: 0,
            max_variables: 10_000,
            qp_feasibility: 1e-11,
            qp_max_steps: 0,
        }
    }
}

/// `min objective.x  s.t.  a_ub x <= b_ub,  lower <= x <= upper`.
/// Bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLp {
    pub objective: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DenseLp {
    /// LP over the box `[lower, upper]` without inequality rows.
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        DenseLp { objective, a_ub: Vec::new(), b_ub: Vec::new(), lower, upper }
    }

    pub fn push_row(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }
}

/// Optimal primal point together with Lagrange multipliers.
///
/// Stationarity reads `c + A^T y_ub - z_lower + z_upper = 0` with all multipliers
/// nonnegative, and the dual objective is `-b.y_ub + l.z_lower - u.z_upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub y_ub: Vec<f64>,
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
}

impl LpSolution {
    pub fn dual_value(&self, lp: &DenseLp) -> f64 {
        let mut v = -dot(&lp.b_ub, &self.y_ub);
        for j in 0..self.x.len() {
            if self.z_lower[j] != 0.0 {
                v += lp.lower[j] * self.z_lower[j];
            }
            if self.z_upper[j] != 0.0 {
                v -= lp.upper[j] * self.z_upper[j];
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

pub fn lp_solve(lp: &DenseLp) -> Result<LpOutcome> {
    lp_solve_with(lp, &Tolerances::default())
}

/// Which stacked inequality a dual variable belongs to.
#[derive(Debug, Clone, Copy)]
enum RowKind {
    Ub(usize),
    Lower(usize),
    Upper(usize),
}

pub fn lp_solve_with(lp: &DenseLp, tol: &Tolerances) -> Result<LpOutcome> {
    let nv = lp.objective.len();
    check_lp(lp, nv, tol)?;
    for j in 0..nv {
        if lp.lower[j] > lp.upper[j] {
            return Ok(LpOutcome::Infeasible);
        }
    }
    // stacked rows of G x <= h
    let mut g: Vec<(&[f64], Option<(usize, f64)>)> = Vec::new();
    let mut h = Vec::new();
    let mut kinds = Vec::new();
    for (i, row) in lp.a_ub.iter().enumerate() {
        g.push((row.as_slice(), None));
        h.push(lp.b_ub[i]);
        kinds.push(RowKind::Ub(i));
    }
    for j in 0..nv {
        if lp.upper[j].is_finite() {
            g.push((&[], Some((j, 1.0))));
            h.push(lp.upper[j]);
            kinds.push(RowKind::Upper(j));
        }
        if lp.lower[j].is_finite() {
            g.push((&[], Some((j, -1.0))));
            h.push(-lp.lower[j]);
            kinds.push(RowKind::Lower(j));
        }
    }
    let ny = g.len();
    // dual equality system: column r of the constraint matrix is row r of G
    let mut a_eq = vec![0.0; nv * ny];
    for (r, (row, unit)) in g.iter().enumerate() {
        match unit {
            Some((j, s)) => a_eq[j * ny + r] = *s,
            None => {
                for j in 0..nv {
                    a_eq[j * ny + r] = row[j];
                }
            }
        }
    }
    let rhs: Vec<f64> = lp.objective.iter().map(|c| -c).collect();
    match standard_form_solve(&a_eq, nv, ny, &rhs, &h, tol)? {
        StdOutcome::Optimal { y, multipliers } => {
            let x = multipliers;
            let value = dot(&lp.objective, &x);
            let mut y_ub = vec![0.0; lp.a_ub.len()];
            let mut z_lower = vec![0.0; nv];
            let mut z_upper = vec![0.0; nv];
            for (r, kind) in kinds.iter().enumerate() {
                match *kind {
                    RowKind::Ub(i) => y_ub[i] = y[r],
                    RowKind::Lower(j) => z_lower[j] = y[r],
                    RowKind::Upper(j) => z_upper[j] = y[r],
                }
            }
            Ok(LpOutcome::Optimal(LpSolution { x, value, y_ub, z_lower, z_upper }))
        }
        StdOutcome::Unbounded => Ok(LpOutcome::Infeasible),
        StdOutcome::Infeasible => {
            // The dual is infeasible, so the primal is either unbounded or infeasible.
            // Farkas: the primal is infeasible iff some y >= 0 has G^T y = 0, h.y < 0.
            let mut a_f = vec![0.0; (nv + 1) * (ny + 1)];
            for j in 0..nv {
                for r in 0..ny {
                    a_f[j * (ny + 1) + r] = a_eq[j * ny + r];
                }
            }
            for r in 0..=ny {
                a_f[nv * (ny + 1) + r] = 1.0;
            }
            let mut b_f = vec![0.0; nv + 1];
            b_f[nv] = 1.0;
            let mut c_f = h.clone();
            c_f.push(0.0);
            let scale = h.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
            match standard_form_solve(&a_f, nv + 1, ny + 1, &b_f, &c_f, tol)? {
                StdOutcome::Optimal { y, .. } => {
                    if dot(&c_f, &y) < -tol.feasibility * scale {
                        Ok(LpOutcome::Infeasible)
                    } else {
                        Ok(LpOutcome::Unbounded)
                    }
                }
                _ => Err(DroError::Diagnostic("LP feasibility certificate failed".into())),
            }
        }
    }
}

fn check_lp(lp: &DenseLp, nv: usize, tol: &Tolerances) -> Result<()> {
    if nv > tol.max_variables {
        return Err(DroError::Domain(format!(
            "LP has {nv} variables, above the cap of {}",
            tol.max_variables
        )));
    }
    let shapes_ok = lp.lower.len() == nv
        && lp.upper.len() == nv
        && lp.a_ub.len() == lp.b_ub.len()
        && lp.a_ub.iter().all(|r| r.len() == nv);
    if !shapes_ok {
        return Err(DroError::Domain("LP data has inconsistent shapes".into()));
    }
    let finite = lp.objective.iter().chain(lp.b_ub.iter()).all(|v| v.is_finite())
        && lp.a_ub.iter().flatten().all(|v| v.is_finite())
        && lp.lower.iter().chain(lp.upper.iter()).all(|v| !v.is_nan())
        && lp.lower.iter().all(|&v| v != f64::INFINITY)
        && lp.upper.iter().all(|&v| v != f64::NEG_INFINITY);
    if !finite {
        return Err(DroError::Domain("LP data must be finite".into()));
    }
    Ok(())
}

enum StdOutcome {
    Optimal { y: Vec<f64>, multipliers: Vec<f64> },
    Infeasible,
    Unbounded,
}

/// Two-phase tableau simplex for `min c.y s.t. A y = b, y >= 0` with `A` given
/// row-major as `rows x cols`. Returns the optimal `y` and the simplex
/// multipliers `w` of the equality rows (`c - A^T w >= 0` at optimality).
fn standard_form_solve(
    a: &[f64],
    rows: usize,
    cols: usize,
    b: &[f64],
    c: &[f64],
    tol: &Tolerances,
) -> Result<StdOutcome> {
    let width = cols + rows + 1;
    let rhs_col = cols + rows;
    let mut t = vec![0.0; rows * width];
    let mut sign = vec![1.0; rows];
    for i in 0..rows {
        if b[i] < 0.0 {
            sign[i] = -1.0;
        }
        for j in 0..cols {
            t[i * width + j] = sign[i] * a[i * cols + j];
        }
        t[i * width + cols + i] = 1.0;
        t[i * width + rhs_col] = sign[i] * b[i];
    }
    let basis: Vec<usize> = (cols..cols + rows).collect();
    let max_pivots =
        if tol.max_pivots == 0 { 50 * (rows + cols) + 1000 } else { tol.max_pivots };
    let b_scale = b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let c_scale = c.iter().fold(1.0_f64, |m, v| m.max(v.abs()));

    // phase I: minimize the sum of artificials
    let mut cost1 = vec![0.0; cols + rows];
    for v in cost1.iter_mut().skip(cols) {
        *v = 1.0;
    }
    let mut tab = Tableau { t, rows, width, basis, pivots: 0 };
    let allow_all = |_: usize| true;
    match tab.optimize(&cost1, &allow_all, tol.optimality, tol, max_pivots)? {
        PhaseResult::Optimal => {}
        PhaseResult::Unbounded => {
            return Err(DroError::Diagnostic("phase I reported unbounded".into()))
        }
    }
    let infeas: f64 = (0..rows)
        .filter(|&i| tab.basis[i] >= cols)
        .map(|i| tab.t[i * width + rhs_col])
        .sum();
    if infeas > tol.feasibility * b_scale {
        return Ok(StdOutcome::Infeasible);
    }
    // drive basic artificials out where possible
    for i in 0..rows {
        if tab.basis[i] < cols {
            continue;
        }
        let mut best = None;
        let mut best_abs = tol.pivot.max(1e-9);
        for j in 0..cols {
            let v = tab.t[i * width + j].abs();
            if v > best_abs {
                best_abs = v;
                best = Some(j);
            }
        }
        if let Some(j) = best {
            tab.pivot(i, j);
        }
    }
    // phase II
    let mut cost2 = vec![0.0; cols + rows];
    cost2[..cols].copy_from_slice(c);
    let allow_struct = |j: usize| j < cols;
    match tab.optimize(&cost2, &allow_struct, tol.optimality * c_scale, tol, max_pivots)? {
        PhaseResult::Unbounded => return Ok(StdOutcome::Unbounded),
        PhaseResult::Optimal => {}
    }
    let mut y = vec![0.0; cols];
    for i in 0..rows {
        let bj = tab.basis[i];
        if bj < cols {
            y[bj] = tab.t[i * width + rhs_col].max(0.0);
        }
    }
    // multipliers: w = c_B B^{-1}; the artificial block of the tableau holds B^{-1}
    // for the sign-adjusted rows
    let mut multipliers = vec![0.0; rows];
    for (k, w) in multipliers.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..rows {
            let cb = cost2[tab.basis[i]];
            if cb != 0.0 {
                s += cb * tab.t[i * width + cols + k];
            }
        }
        *w = sign[k] * s;
    }
    Ok(StdOutcome::Optimal { y, multipliers })
}

enum PhaseResult {
    Optimal,
    Unbounded,
}

struct Tableau {
    t: Vec<f64>,
    rows: usize,
    width: usize,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.t[r * w + j];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for chunk in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = chunk[j];
            if f != 0.0 {
                for (x, pv) in chunk.iter_mut().zip(prow.iter()) {
                    *x -= f * pv;
                }
                chunk[j] = 0.0;
            }
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let ncols = self.width - 1;
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.width..i * self.width + ncols];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn optimize(
        &mut self,
        cost: &[f64],
        allowed: &dyn Fn(usize) -> bool,
        rc_tol: f64,
        tol: &Tolerances,
        max_pivots: usize,
    ) -> Result<PhaseResult> {
        let w = self.width;
        let rhs = w - 1;
        let ncols = w - 1;
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots > max_pivots {
                return Err(DroError::LpStall { iterations: self.pivots, basis: self.basis.clone() });
            }
            let d = self.reduced_costs(cost);
            let bland = degenerate_run >= tol.degenerate_switch;
            let mut enter = None;
            let mut best = -rc_tol;
            for j in 0..ncols {
                if !allowed(j) || d[j] >= -rc_tol {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if d[j] < best {
                    best = d[j];
                    enter = Some(j);
                }
            }
            let Some(j) = enter else { return Ok(PhaseResult::Optimal) };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.t[i * w + j];
                if a > tol.pivot {
                    let ratio = self.t[i * w + rhs].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs()) {
                                self.basis[i] < self.basis[l]
                            } else {
                                ratio < best_ratio
                            }
                        }
                    };
                    if better {
                        best_ratio = best_ratio.min(ratio);
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else { return Ok(PhaseResult::Unbounded) };
            if best_ratio <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, j);
        }
    }
}

/// Half-space `normal.x <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub rhs: f64,
}

/// `min 1/2 |x - anchor|^2` over `{lower <= x <= upper} ∩ cuts`.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestPointQp {
    pub anchor: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cuts: Vec<HalfSpace>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpOutcome {
    Optimal(Vec<f64>),
    Infeasible,
}

pub fn qp_nearest_point(qp: &NearestPointQp) -> Result<QpOutcome> {
    qp_nearest_point_with(qp, &Tolerances::default())
}

/// Dual active-set method (Goldfarb and Idnani) specialized to the identity
/// Hessian. Constraints are stored as `n_i.x >= beta_i`.
pub fn qp_nearest_point_with(qp: &NearestPointQp, tol: &Tolerances) -> Result<QpOutcome> {
    let n = qp.anchor.len();
    if qp.lower.len() != n || qp.upper.len() != n || qp.cuts.iter().any(|c| c.normal.len() != n) {
        return Err(DroError::Domain("QP data has inconsistent shapes".into()));
    }
    let mut normals: Vec<Vec<f64>> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..n {
        if qp.lower[j] > qp.upper[j] {
            return Ok(QpOutcome::Infeasible);
        }
        if qp.lower[j].is_finite() {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            normals.push(e);
            beta.push(qp.lower[j]);
        }
        if qp.upper[j].is_finite() {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            normals.push(e);
            beta.push(-qp.upper[j]);
        }
    }
    for c in &qp.cuts {
        if norm2(&c.normal) == 0.0 {
            if c.rhs < 0.0 {
                return Ok(QpOutcome::Infeasible);
            }
            continue;
        }
        normals.push(c.normal.iter().map(|v| -v).collect());
        beta.push(-c.rhs);
    }
    let norms: Vec<f64> = normals.iter().map(|v| norm2(v)).collect();
    let ncons = normals.len();
    let max_steps = if tol.qp_max_steps == 0 { 20 * (ncons + n) + 200 } else { tol.qp_max_steps };

    let mut x = qp.anchor.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut steps = 0usize;
    let slack = |x: &[f64], i: usize| dot(&normals[i], x) - beta[i];
    let violation = |x: &[f64], i: usize| {
        let s = slack(x, i) / norms[i];
        let thresh = -tol.qp_feasibility * (1.0 + beta[i].abs() / norms[i]);
        (s < thresh).then_some(s)
    };

    loop {
        // most violated constraint, measured in distance units
        let mut p = None;
        let mut worst = 0.0;
        for i in 0..ncons {
            if active.contains(&i) {
                continue;
            }
            if let Some(s) = violation(&x, i) {
                if s < worst {
                    worst = s;
                    p = Some(i);
                }
            }
        }
        let Some(p) = p else { return Ok(QpOutcome::Optimal(x)) };
        let mut u_p = 0.0;
        loop {
            steps += 1;
            if steps > max_steps {
                return Err(DroError::QpCycle(steps));
            }
            let q = active.len();
            let np = &normals[p];
            // r = (N^T N)^{-1} N^T n_p and z = n_p - N r
            let r = if q == 0 {
                Vec::new()
            } else {
                let mut m = vec![0.0; q * q];
                for a in 0..q {
                    for b in 0..=a {
                        let v = dot(&normals[active[a]], &normals[active[b]]);
                        m[a * q + b] = v;
                        m[b * q + a] = v;
                    }
                }
                let rhs: Vec<f64> = active.iter().map(|&a| dot(&normals[a], np)).collect();
                match cholesky_solve(&m, q, &rhs) {
                    Some(r) => r,
                    None => {
                        return Err(DroError::Diagnostic(
                            "QP active set lost linear independence".into(),
                        ))
                    }
                }
            };
            let mut z = np.clone();
            for (a, &ra) in active.iter().zip(&r) {
                for (zi, ni) in z.iter_mut().zip(&normals[*a]) {
                    *zi -= ra * ni;
                }
            }
            let zz = dot(&z, &z);
            let z_is_zero = zz <= 1e-20 * norms[p] * norms[p];
            // largest dual step keeping active multipliers nonnegative
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 0.0 {
                    let ratio = u[k] / rk;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(k);
                    }
                }
            }
            let s_p = slack(&x, p);
            let t2 = if z_is_zero { f64::INFINITY } else { -s_p / zz };
            if z_is_zero && t1.is_infinite() {
                return Ok(QpOutcome::Infeasible);
            }
            let t = t1.min(t2);
            if !z_is_zero {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            for (uk, rk) in u.iter_mut().zip(&r) {
                *uk -= t * rk;
            }
            u_p += t;
            if t2 <= t1 {
                active.push(p);
                u.push(u_p);
                break;
            }
            let k = drop.expect("finite partial step has a blocking constraint");
            active.remove(k);
            u.remove(k);
            if violation(&x, p).is_none() {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_x_on_unit_interval() {
        let lp = DenseLp::new(vec![1.0], vec![0.0], vec![1.0]);
        let s = lp_solve(&lp).unwrap().optimal().unwrap();
        assert!(s.x[0].abs() < 1e-12 && s.value.abs() < 1e-12);
    }

    #[test]
    fn facet_optimum_is_deterministic() {
        let mut lp = DenseLp::new(vec![-1.0, -1.0], vec![0.0; 2], vec![1.0; 2]);
        lp.push_row(vec![1.0, 1.0], 1.0);
        let a = lp_solve(&lp).unwrap().optimal().unwrap();
        let b = lp_solve(&lp).unwrap().optimal().unwrap();
        assert!((a.value + 1.0).abs() < 1e-12);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = DenseLp::new(vec![1.0], vec![0.0], vec![f64::INFINITY]);
        lp.push_row(vec![1.0], -1.0);
        assert_eq!(lp_solve(&lp).unwrap(), LpOutcome::Infeasible);
        let lp = DenseLp::new(vec![-1.0], vec![0.0], vec![f64::INFINITY]);
        assert_eq!(lp_solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variable_with_rows() {
        // min x s.t. -x <= 3  ->  x = -3
        let mut lp = DenseLp::new(vec![1.0], vec![f64::NEG_INFINITY], vec![f64::INFINITY]);
        lp.push_row(vec![-1.0], 3.0);
        let s = lp_solve(&lp).unwrap().optimal().unwrap();
        assert!((s.x[0] + 3.0).abs() < 1e-12);
        assert!((s.dual_value(&lp) - s.value).abs() < 1e-12);
    }

    #[test]
    fn qp_without_cuts_clips() {
        let qp = NearestPointQp {
            anchor: vec![-1.0, 0.5, 3.0],
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
            cuts: vec![],
        };
        assert_eq!(qp_nearest_point(&qp).unwrap(), QpOutcome::Optimal(vec![0.0, 0.5, 1.0]));
    }

    #[test]
    fn qp_single_active_cut() {
        // nearest point to (1,1) on x + y <= 1
        let qp = NearestPointQp {
            anchor: vec![1.0, 1.0],
            lower: vec![f64::NEG_INFINITY; 2],
            upper: vec![f64::INFINITY; 2],
            cuts: vec![HalfSpace { normal: vec![1.0, 1.0], rhs: 1.0 }],
        };
        let QpOutcome::Optimal(x) = qp_nearest_point(&qp).unwrap() else { panic!() };
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn qp_infeasible() {
        let qp = NearestPointQp {
            anchor: vec![0.5],
            lower: vec![0.0],
            upper: vec![1.0],
            cuts: vec![HalfSpace { normal: vec![1.0], rhs: -1.0 }],
        };
        assert_eq!(qp_nearest_point(&qp).unwrap(), QpOutcome::Infeasible);
    }
}
