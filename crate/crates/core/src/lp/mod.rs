//! Dense linear programming.
//!
//! [`solve`] is a bounded-variable primal simplex for small to medium dense
//! problems. [`weighted_l1`] builds and solves the asymmetric-L1 decision-rule
//! fit on top of it.

mod dump;
mod simplex;
pub mod weighted_l1;

pub use simplex::{solve, solve_with, SolverOptions};
pub use weighted_l1::{solve_weighted_l1, WeightedL1Problem, WeightedL1Solution};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `minimize c·x  s.t.  rows,  lower <= x <= upper`. Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// `n` variables with zero objective and bounds `[0, +inf)`.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_objective(mut self, objective: Vec<f64>) -> Self {
        self.objective = objective;
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coefficients, sense, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidConfig(format!(
                "bound vectors have lengths {}/{} for {} variables",
                self.lower.len(),
                self.upper.len(),
                n
            )));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(format!("objective coefficient {j} is not finite")));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidConfig(format!("variable {j} has invalid bounds [{l}, {u}]")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "constraint {i} has {} coefficients for {} variables",
                    row.coefficients.len(),
                    n
                )));
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidConfig(format!("constraint {i} has non-finite data")));
            }
        }
        Ok(())
    }

    /// Objective value at `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or constraint violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.constraints {
            let lhs: f64 = row.coefficients.iter().zip(x).map(|(a, v)| a * v).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the structural variables. Meaningful only when optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers, one per constraint, for rows written as `a·x + s = b`.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
