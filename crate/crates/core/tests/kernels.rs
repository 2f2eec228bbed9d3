mod support;

use dro_core::geometry::{bregman, compute_constants, dual_block_norm, block_norm_2inf, Geometry};
use dro_core::model::{
    generate_from_template, instance_from_json, instance_to_json, load_instance, save_instance, AmbiguityTemplate,
};
use dro_core::qplp::{lp_solve, qp_nearest_point, DenseLp, HalfSpace, LpOutcome, NearestPointQp, QpOutcome};
use proptest::prelude::*;
use rand::Rng;
use support::*;

/// Solves a square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// All inequalities `a.x <= b` of a bounded LP, bounds included.
fn all_constraints(lp: &DenseLp) -> Vec<(Vec<f64>, f64)> {
    let n = lp.objective.len();
    let mut cons: Vec<(Vec<f64>, f64)> = lp.a_ub.iter().cloned().zip(lp.b_ub.iter().cloned()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cons.push((e.clone(), lp.upper[j]));
        e[j] = -1.0;
        cons.push((e, -lp.lower[j]));
    }
    cons
}

/// Optimal value of a bounded LP by enumerating every basic solution.
fn lp_vertex_enumeration(lp: &DenseLp) -> Option<f64> {
    let n = lp.objective.len();
    let cons = all_constraints(lp);
    let mut best: Option<f64> = None;
    for s in subsets(cons.len(), n) {
        let a: Vec<Vec<f64>> = s.iter().map(|&i| cons[i].0.clone()).collect();
        let b: Vec<f64> = s.iter().map(|&i| cons[i].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        if cons.iter().all(|(a, b)| a.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= b + 1e-9) {
            let v: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut r = rng(41);
    let mut solved = 0;
    for _ in 0..40 {
        let n = 4;
        let mut lp = DenseLp::new(uniform_vec(&mut r, n, -1.0, 1.0), vec![-2.0; n], vec![3.0; n]);
        for _ in 0..6 {
            lp.push_row(uniform_vec(&mut r, n, -1.0, 1.0), r.gen_range(-1.0..2.0));
        }
        let want = lp_vertex_enumeration(&lp);
        match (lp_solve(&lp).unwrap(), want) {
            (LpOutcome::Optimal(s), Some(v)) => {
                assert!((s.value - v).abs() <= 1e-8, "{} vs {v}", s.value);
                assert!((s.dual_value(&lp) - v).abs() <= 1e-8);
                solved += 1;
            }
            (LpOutcome::Infeasible, None) => {}
            (got, want) => panic!("solver {got:?}, enumeration {want:?}"),
        }
    }
    assert!(solved >= 10);
}

/// Nearest point by enumerating active sets of the cuts and bounds.
fn qp_kkt_enumeration(qp: &NearestPointQp) -> Option<Vec<f64>> {
    let n = qp.anchor.len();
    let lp_like = DenseLp {
        objective: vec![0.0; n],
        a_ub: qp.cuts.iter().map(|c| c.normal.clone()).collect(),
        b_ub: qp.cuts.iter().map(|c| c.rhs).collect(),
        lower: qp.lower.clone(),
        upper: qp.upper.clone(),
    };
    let cons = all_constraints(&lp_like);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for size in 0..=n {
        for s in subsets(cons.len(), size) {
            // x = a - N^T lambda with N N^T lambda = N a - b
            let nn: Vec<Vec<f64>> = s
                .iter()
                .map(|&i| s.iter().map(|&j| cons[i].0.iter().zip(&cons[j].0).map(|(u, v)| u * v).sum()).collect())
                .collect();
            let rhs: Vec<f64> = s
                .iter()
                .map(|&i| cons[i].0.iter().zip(&qp.anchor).map(|(u, v)| u * v).sum::<f64>() - cons[i].1)
                .collect();
            let lambda = if size == 0 { vec![] } else { match solve_square(nn, rhs) { Some(l) => l, None => continue } };
            let mut x = qp.anchor.clone();
            for (l, &i) in lambda.iter().zip(&s) {
                for (xj, aj) in x.iter_mut().zip(&cons[i].0) {
                    *xj -= l * aj;
                }
            }
            if cons.iter().all(|(a, b)| a.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= b + 1e-9) {
                let d: f64 = x.iter().zip(&qp.anchor).map(|(u, v)| (u - v) * (u - v)).sum();
                if best.as_ref().map_or(true, |(b, _)| d < *b) {
                    best = Some((d, x));
                }
            }
        }
    }
    best.map(|b| b.1)
}

#[test]
fn qp_matches_kkt_enumeration() {
    let mut r = rng(42);
    for _ in 0..40 {
        let n = 4;
        let cuts: Vec<HalfSpace> =
            (0..3).map(|_| HalfSpace { normal: uniform_vec(&mut r, n, -1.0, 1.0), rhs: r.gen_range(-0.5..1.0) }).collect();
        let qp = NearestPointQp { anchor: uniform_vec(&mut r, n, -3.0, 3.0), lower: vec![-1.0; n], upper: vec![2.0; n], cuts };
        let want = qp_kkt_enumeration(&qp);
        match (qp_nearest_point(&qp).unwrap(), want) {
            (QpOutcome::Optimal(x), Some(w)) => {
                for (a, b) in x.iter().zip(&w) {
                    assert!((a - b).abs() <= 1e-8, "{x:?} vs {w:?}");
                }
            }
            (QpOutcome::Infeasible, None) => {}
            (got, want) => panic!("solver {got:?}, enumeration {want:?}"),
        }
    }
}

#[test]
fn entropy_distance_example() {
    let v = bregman(Geometry::Entropy, &[0.5, 0.5], &[0.25, 0.75]).unwrap();
    let want = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
    assert!((v - want).abs() <= 1e-15);
    assert!((v - 0.130812).abs() <= 1e-6);
}

#[test]
fn entropy_radius_for_three_scenarios() {
    let inst = generate_from_template(3, 2, 2, 3, 100.0, &AmbiguityTemplate::Simplex).unwrap();
    let c = compute_constants(&inst, Geometry::Entropy, &inst.box_midpoint(), &inst.p_bar(), None).unwrap();
    assert!((c.omega_p * c.omega_p - 3f64.ln()).abs() <= 1e-12);
    assert_eq!(c.c_p, 1.0);
    // simple recourse: the dual radius is the largest cost vector norm
    let m_pi = inst.scenarios.iter().map(|s| s.e.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    assert!((c.m_pi - m_pi).abs() <= 1e-12);
}

#[test]
fn spectral_norm_matches_gram_eigenvalue() {
    // 2x2 case in closed form: largest eigenvalue of T^T T
    let inst = generate_from_template(5, 2, 2, 1, 100.0, &AmbiguityTemplate::Simplex).unwrap();
    let t = &inst.scenarios[0].t;
    let (a, b, c, d) = (t.get(0, 0), t.get(0, 1), t.get(1, 0), t.get(1, 1));
    let (p, q, s) = (a * a + c * c, a * b + c * d, b * b + d * d);
    let lmax = 0.5 * (p + s) + (0.25 * (p - s) * (p - s) + q * q).sqrt();
    let c = compute_constants(&inst, Geometry::Euclidean, &inst.box_midpoint(), &inst.p_bar(), None).unwrap();
    assert!((c.m_t - lmax.sqrt()).abs() <= 1e-9 * lmax.sqrt());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn norm_adjustment_inequality(seed in any::<u64>(), k in 1usize..20, m in 1usize..5) {
        let mut r = rng(seed);
        let blocks: Vec<Vec<f64>> = (0..k).map(|_| uniform_vec(&mut r, m, -3.0, 0.0)).collect();
        for geometry in [Geometry::Euclidean, Geometry::Entropy] {
            let lhs = geometry.c_p(k) * block_norm_2inf(&blocks);
            prop_assert!(lhs >= dual_block_norm(geometry, &blocks) - 1e-12);
        }
    }

    #[test]
    fn distances_are_strongly_convex(seed in any::<u64>(), k in 2usize..10) {
        let mut r = rng(seed);
        let a = random_simplex_point(&mut r, k);
        let b = random_simplex_point(&mut r, k);
        // Pinsker for the entropy; W = |a - b|^2 exceeds half of it for Euclidean
        let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        let l2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        prop_assert!(bregman(Geometry::Entropy, &a, &b).unwrap() >= 0.5 * l1 * l1 - 1e-12);
        prop_assert!(bregman(Geometry::Euclidean, &a, &b).unwrap() >= 0.5 * l2 - 1e-15);
        prop_assert_eq!(bregman(Geometry::Entropy, &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn instance_json_round_trip(seed in any::<u64>(), k in 1usize..6, which in 0usize..4) {
        let tpl = [
            AmbiguityTemplate::Simplex,
            AmbiguityTemplate::Avar { alpha: 0.3 },
            AmbiguityTemplate::ChiSquare { r: 0.1 },
            AmbiguityTemplate::Kantorovich { delta: 0.2 },
        ][which].clone();
        let inst = generate_from_template(seed, 3, 2, k, 100.0, &tpl).unwrap();
        let back = instance_from_json(&instance_to_json(&inst).unwrap()).unwrap();
        prop_assert_eq!(back, inst);
    }
}

#[test]
fn instance_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate_from_template(7, 40, 20, 50, 100.0, &AmbiguityTemplate::Simplex).unwrap();
    let path = dir.path().join("inst.json");
    save_instance(&inst, &path).unwrap();
    assert_eq!(load_instance(&path).unwrap(), inst);
}

#[test]
fn malformed_instance_reports_violations() {
    let inst = generate_from_template(7, 2, 2, 2, 100.0, &AmbiguityTemplate::Avar { alpha: 0.5 }).unwrap();
    let text = instance_to_json(&inst).unwrap().replace("0.5", "1.5");
    let err = instance_from_json(&text).unwrap_err().to_string();
    assert!(err.contains("alpha"), "{err}");
}
