//! Independent oracles shared by the integration and acceptance tests. None of
//! them call into the simplex code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use newsvendor::lp::WeightedL1Problem;
use rand::Rng;

/// One hyperplane `a·q = b` in coefficient space.
struct Plane {
    a: Vec<f64>,
    b: f64,
}

fn feasible(problem: &WeightedL1Problem, q: &[f64], tol: f64) -> bool {
    let rows_ok = (0..problem.rows()).all(|t| {
        let v = problem.prediction(t, q);
        v >= -tol && v <= problem.upper + tol
    });
    let box_ok = problem
        .coefficient_bounds
        .as_ref()
        .is_none_or(|b| q.iter().zip(b).all(|(x, (l, u))| *x >= l - tol && *x <= u + tol));
    rows_ok && box_ok
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Minimum normalized objective over every basic feasible point of the
/// piecewise-linear fit. Candidate points are intersections of `p` planes drawn
/// from the kink planes `x_t·q = e_t`, the bound planes `x_t·q ∈ {0, upper}`
/// and, if present, the coefficient box. Requires a design of full column rank
/// so that the feasible region has vertices.
pub fn brute_force_objective(problem: &WeightedL1Problem) -> Option<f64> {
    let p = problem.features();
    let mut planes = Vec::new();
    for t in 0..problem.rows() {
        for b in [problem.targets[t], 0.0, problem.upper] {
            planes.push(Plane { a: problem.design[t].clone(), b });
        }
    }
    if let Some(bounds) = &problem.coefficient_bounds {
        for (j, (l, u)) in bounds.iter().enumerate() {
            for b in [*l, *u] {
                if b.is_finite() {
                    let mut a = vec![0.0; p];
                    a[j] = 1.0;
                    planes.push(Plane { a, b });
                }
            }
        }
    }
    let mut best: Option<f64> = None;
    for combo in combinations(planes.len(), p) {
        let m = DMatrix::from_fn(p, p, |i, j| planes[combo[i]].a[j]);
        let rhs = DVector::from_iterator(p, combo.iter().map(|&i| planes[i].b));
        let svd = m.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smax == 0.0 || smin / smax < 1e-10 {
            continue;
        }
        let Some(q) = m.lu().solve(&rhs) else { continue };
        let q: Vec<f64> = q.iter().copied().collect();
        if !feasible(problem, &q, 1e-9 * (1.0 + problem.upper)) {
            continue;
        }
        let obj = problem.objective_at(&q);
        if best.is_none_or(|b| obj < b) {
            best = Some(obj);
        }
    }
    best
}

/// Smallest sorted sample `s_k` with `k/n >= tau`, written independently of
/// the library's version.
pub fn quantile_by_sorting(samples: &[f64], tau: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    for k in 1..=n {
        if k as f64 / n as f64 >= tau {
            return s[k - 1];
        }
    }
    s[n - 1]
}

/// Mean pinball-style loss of the constant prediction `c`.
pub fn constant_loss(samples: &[f64], c: f64, psi_minus: f64, psi_plus: f64) -> f64 {
    samples
        .iter()
        .map(|e| if c > *e { psi_minus * (c - e) } else { psi_plus * (e - c) })
        .sum::<f64>()
        / samples.len() as f64
}

/// A random weighted-L1 instance with `n` rows and `p` features whose design
/// has full column rank with probability one.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, p: usize, with_box: bool) -> WeightedL1Problem {
    let design: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..1.0)).collect();
            if rng.gen_bool(0.5) {
                row[0] = 1.0;
            }
            row
        })
        .collect();
    let targets = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let psi_minus = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..3.0) }).collect();
    let psi_plus = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..3.0) }).collect();
    let coefficient_bounds = with_box.then(|| (0..p).map(|_| (-rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0))).collect());
    WeightedL1Problem { design, targets, psi_minus, psi_plus, upper: 1.0, coefficient_bounds }
}
