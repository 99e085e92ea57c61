//! Asymmetric-L1 fit of a linear decision rule.
//!
//! Given training rows `x_t`, outcomes `e_t` and per-row costs `psi_minus_t`
//! (for predicting above the outcome) and `psi_plus_t` (for predicting
//! below it), find `q` minimizing
//!
//! ```text
//! (1/|T|) sum_t psi_minus_t (x_t·q - e_t)^+ + psi_plus_t (e_t - x_t·q)^+
//! s.t.    0 <= x_t·q <= upper   for every training row
//! ```
//!
//! The primal has `p + 2|T|` variables and `4|T|` rows. Its LP dual has only
//! `p` equality rows, so the solver works on the dual and reads `q` back
//! from the simplex multipliers, which makes rolling-window refits cheap.

use serde::{Deserialize, Serialize};

use super::{simplex, LinearProgram, LpStatus, Sense};
use crate::error::{Error, Result};

/// Slack allowed on the training-row prediction bounds when checking a fit.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedL1Problem {
    /// Training rows, each of length `p`.
    pub design: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub psi_minus: Vec<f64>,
    pub psi_plus: Vec<f64>,
    /// Upper prediction bound on every training row; the lower bound is zero.
    pub upper: f64,
    /// Optional `(lower, upper)` box per coefficient.
    pub coefficient_bounds: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedL1Solution {
    pub coefficients: Vec<f64>,
    /// Objective at `coefficients`, normalized by the number of training rows.
    pub objective: f64,
    pub iterations: usize,
}

impl WeightedL1Problem {
    /// Unit costs on every row, i.e. a median fit.
    pub fn unit_weights(design: Vec<Vec<f64>>, targets: Vec<f64>, upper: f64) -> Self {
        let n = targets.len();
        Self {
            design,
            targets,
            psi_minus: vec![1.0; n],
            psi_plus: vec![1.0; n],
            upper,
            coefficient_bounds: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    pub fn features(&self) -> usize {
        self.design.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rows();
        let p = self.features();
        if n == 0 {
            return Err(Error::InvalidConfig("weighted L1 problem needs at least one training row".into()));
        }
        if p == 0 {
            return Err(Error::InvalidConfig("weighted L1 problem needs at least one feature".into()));
        }
        for (name, len) in [
            ("design", self.design.len()),
            ("psi_minus", self.psi_minus.len()),
            ("psi_plus", self.psi_plus.len()),
        ] {
            if len != n {
                return Err(Error::InvalidConfig(format!("{name} has {len} rows, targets have {n}")));
            }
        }
        if let Some(t) = self.design.iter().position(|r| r.len() != p) {
            return Err(Error::LengthMismatch { expected: p, actual: self.design[t].len() });
        }
        if self.design.iter().flatten().chain(&self.targets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite design or target value".into()));
        }
        if self.psi_minus.iter().chain(&self.psi_plus).any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig("opportunity costs must be finite and nonnegative".into()));
        }
        if !(self.upper.is_finite() && self.upper > 0.0) {
            return Err(Error::InvalidConfig(format!("upper bound must be positive, got {}", self.upper)));
        }
        if let Some(bounds) = &self.coefficient_bounds {
            if bounds.len() != p {
                return Err(Error::LengthMismatch { expected: p, actual: bounds.len() });
            }
            if bounds.iter().any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
                return Err(Error::InvalidConfig("invalid coefficient bounds".into()));
            }
        }
        Ok(())
    }

    pub fn prediction(&self, t: usize, q: &[f64]) -> f64 {
        self.design[t].iter().zip(q).map(|(x, c)| x * c).sum()
    }

    /// Normalized objective at `q`, ignoring feasibility.
    pub fn objective_at(&self, q: &[f64]) -> f64 {
        let total: f64 = (0..self.rows())
            .map(|t| {
                let r = self.prediction(t, q) - self.targets[t];
                self.psi_minus[t] * r.max(0.0) + self.psi_plus[t] * (-r).max(0.0)
            })
            .sum();
        total / self.rows() as f64
    }

    /// Largest violation of the training-row bounds `0 <= x_t·q <= upper`.
    pub fn bound_violation(&self, q: &[f64]) -> f64 {
        (0..self.rows())
            .map(|t| {
                let r = self.prediction(t, q);
                (-r).max(r - self.upper).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Columns that are zero on every training row.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        (0..self.features())
            .filter(|&j| self.design.iter().all(|row| row[j] == 0.0))
            .collect()
    }

    /// The textbook primal: variables `[q, u, o]` with `u_t >= x_t·q - e_t`,
    /// `o_t >= e_t - x_t·q` and the prediction bounds as explicit rows.
    /// The objective is not normalized.
    pub fn to_primal_lp(&self) -> LinearProgram {
        let n = self.rows();
        let p = self.features();
        let nv = p + 2 * n;
        let mut objective = vec![0.0; nv];
        objective[p..p + n].copy_from_slice(&self.psi_minus);
        objective[p + n..].copy_from_slice(&self.psi_plus);
        let mut lp = LinearProgram::new(nv).with_objective(objective);
        for j in 0..p {
            let (l, u) = self
                .coefficient_bounds
                .as_ref()
                .map_or((f64::NEG_INFINITY, f64::INFINITY), |b| b[j]);
            lp.set_bounds(j, l, u);
        }
        for t in 0..n {
            let mut over = vec![0.0; nv];
            over[..p].copy_from_slice(&self.design[t]);
            let mut under = over.clone();
            let bound = over.clone();
            over[p + t] = -1.0;
            lp.add_constraint(over, Sense::Le, self.targets[t]);
            under[p + n + t] = 1.0;
            lp.add_constraint(under, Sense::Ge, self.targets[t]);
            lp.add_constraint(bound.clone(), Sense::Ge, 0.0);
            lp.add_constraint(bound, Sense::Le, self.upper);
        }
        lp
    }

    /// LP dual over the non-degenerate columns `active`:
    ///
    /// ```text
    /// min  -sum e_t y_t + upper·sum beta_t - sum l_j mu_j + sum u_j nu_j
    /// s.t. sum_t x_tj (y_t + alpha_t - beta_t) + mu_j - nu_j = 0   (j in active)
    ///      -psi_minus_t <= y_t <= psi_plus_t,  alpha, beta, mu, nu >= 0
    /// ```
    ///
    /// The multiplier of row `j` is `-q_j`.
    fn to_dual_lp(&self, active: &[usize]) -> LinearProgram {
        let n = self.rows();
        let bounds: Vec<(f64, f64)> = active
            .iter()
            .map(|&j| {
                self.coefficient_bounds
                    .as_ref()
                    .map_or((f64::NEG_INFINITY, f64::INFINITY), |b| b[j])
            })
            .collect();
        let n_mu = bounds.iter().filter(|(l, _)| l.is_finite()).count();
        let n_nu = bounds.iter().filter(|(_, u)| u.is_finite()).count();
        let nv = 3 * n + n_mu + n_nu;

        let mut lp = LinearProgram::new(nv);
        let mut rows = vec![vec![0.0; nv]; active.len()];
        for t in 0..n {
            lp.objective[t] = -self.targets[t];
            lp.set_bounds(t, -self.psi_minus[t], self.psi_plus[t]);
            lp.objective[2 * n + t] = self.upper;
            for (row, &j) in rows.iter_mut().zip(active) {
                let x = self.design[t][j];
                row[t] = x;
                row[n + t] = x;
                row[2 * n + t] = -x;
            }
        }
        let mut col = 3 * n;
        for (k, (l, _)) in bounds.iter().enumerate() {
            if l.is_finite() {
                lp.objective[col] = -l;
                rows[k][col] = 1.0;
                col += 1;
            }
        }
        for (k, (_, u)) in bounds.iter().enumerate() {
            if u.is_finite() {
                lp.objective[col] = *u;
                rows[k][col] = -1.0;
                col += 1;
            }
        }
        for row in rows {
            lp.add_constraint(row, Sense::Eq, 0.0);
        }
        lp
    }
}

/// Solves the asymmetric-L1 fit. Coefficients of all-zero columns are fixed
/// to zero. With several optimal vertices, the one returned is whichever the
/// deterministic pivot order reaches first.
pub fn solve_weighted_l1(problem: &WeightedL1Problem) -> Result<WeightedL1Solution> {
    problem.validate()?;
    let p = problem.features();
    let degenerate = problem.degenerate_columns();
    let active: Vec<usize> = (0..p).filter(|j| !degenerate.contains(j)).collect();

    let mut coefficients = vec![0.0; p];
    let mut iterations = 0;
    if !active.is_empty() {
        let dual = problem.to_dual_lp(&active);
        let sol = simplex::solve(&dual)?;
        iterations = sol.iterations;
        match sol.status {
            LpStatus::Optimal => {}
            // Dual unbounded means the training constraints admit no rule.
            LpStatus::Unbounded => return Err(Error::Solver("infeasible training constraints".into())),
            LpStatus::Infeasible => return Err(Error::Solver("dual infeasible: objective unbounded".into())),
            LpStatus::IterationLimit => return Err(Error::Solver("iteration limit reached".into())),
        }
        for (k, &j) in active.iter().enumerate() {
            coefficients[j] = -sol.duals[k];
        }
    }

    let violation = problem.bound_violation(&coefficients);
    let scale = 1.0 + problem.upper;
    if violation > FEASIBILITY_TOL * scale {
        return Err(Error::Solver(format!(
            "infeasible training constraints (bound violation {violation:.3e})"
        )));
    }
    Ok(WeightedL1Solution {
        objective: problem.objective_at(&coefficients),
        coefficients,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_design(n: usize) -> Vec<Vec<f64>> {
        vec![vec![1.0]; n]
    }

    #[test]
    fn median_of_odd_sample() {
        let prob = WeightedL1Problem::unit_weights(constant_design(5), vec![1.0, 2.0, 3.0, 4.0, 5.0], 10.0);
        let sol = solve_weighted_l1(&prob).unwrap();
        assert!((sol.coefficients[0] - 3.0).abs() < 1e-9);
        assert!((sol.objective - 6.0 / 5.0).abs() < 1e-12);
    }

    /// Brute-force scan of the piecewise-linear objective over its breakpoints.
    fn breakpoint_scan(prob: &WeightedL1Problem) -> f64 {
        prob.targets
            .iter()
            .map(|&b| prob.objective_at(&[b]))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn asymmetric_costs_shift_to_upper_quantile() {
        let mut prob = WeightedL1Problem::unit_weights(constant_design(4), vec![1.0, 2.0, 3.0, 4.0], 10.0);
        prob.psi_plus = vec![3.0; 4];
        let oracle = breakpoint_scan(&prob);
        assert!((oracle - 1.5).abs() < 1e-12);
        let sol = solve_weighted_l1(&prob).unwrap();
        assert!((sol.objective - oracle).abs() < 1e-12);
        assert!((3.0 - 1e-9..=4.0 + 1e-9).contains(&sol.coefficients[0]));
    }

    #[test]
    fn prediction_bounds_bind() {
        // Median of the targets is 9 but predictions are capped at 5.
        let prob = WeightedL1Problem::unit_weights(constant_design(3), vec![8.0, 9.0, 10.0], 5.0);
        let sol = solve_weighted_l1(&prob).unwrap();
        assert!((sol.coefficients[0] - 5.0).abs() < 1e-9);
        assert!((sol.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_column_is_fixed_to_zero() {
        let design = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]];
        let prob = WeightedL1Problem::unit_weights(design, vec![0.2, 0.4, 0.6], 1.0);
        let sol = solve_weighted_l1(&prob).unwrap();
        assert_eq!(sol.coefficients[1], 0.0);
        assert!((sol.coefficients[0] - 0.4).abs() < 1e-9);
    }

    #[test]
    fn coefficient_bounds_are_respected() {
        let mut prob = WeightedL1Problem::unit_weights(constant_design(3), vec![0.2, 0.4, 0.6], 1.0);
        prob.coefficient_bounds = Some(vec![(0.5, 2.0)]);
        let sol = solve_weighted_l1(&prob).unwrap();
        assert!((sol.coefficients[0] - 0.5).abs() < 1e-9);

        prob.coefficient_bounds = Some(vec![(-1.0, 0.3)]);
        let sol = solve_weighted_l1(&prob).unwrap();
        assert!((sol.coefficients[0] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn infeasible_bounds_are_reported() {
        // A single feature taking both signs with q pinned far from zero.
        let design = vec![vec![1.0], vec![-1.0]];
        let mut prob = WeightedL1Problem::unit_weights(design, vec![0.0, 0.0], 1.0);
        prob.coefficient_bounds = Some(vec![(0.5, 1.0)]);
        assert!(matches!(solve_weighted_l1(&prob), Err(Error::Solver(_))));
    }

    #[test]
    fn perfect_feature_gives_zero_loss() {
        let xs = [0.1, 0.7, 0.3, 0.9, 0.5];
        let design = xs.iter().map(|&x| vec![1.0, x]).collect();
        let prob = WeightedL1Problem::unit_weights(design, xs.to_vec(), 1.0);
        let sol = solve_weighted_l1(&prob).unwrap();
        assert!(sol.objective < 1e-12);
    }

    #[test]
    fn primal_and_dual_routes_agree() {
        let design = vec![
            vec![1.0, 0.3],
            vec![1.0, 0.9],
            vec![1.0, 0.1],
            vec![1.0, 0.5],
            vec![1.0, 0.7],
        ];
        let prob = WeightedL1Problem {
            design,
            targets: vec![0.35, 0.8, 0.2, 0.4, 0.75],
            psi_minus: vec![1.0, 0.5, 2.0, 1.5, 0.1],
            psi_plus: vec![0.3, 1.0, 1.0, 0.2, 2.0],
            upper: 1.0,
            coefficient_bounds: None,
        };
        let fast = solve_weighted_l1(&prob).unwrap();
        let primal = simplex::solve(&prob.to_primal_lp()).unwrap();
        assert_eq!(primal.status, LpStatus::Optimal);
        assert!((fast.objective - primal.objective / 5.0).abs() < 1e-10);
    }
}
