//! Bounded-variable revised primal simplex with an explicit basis inverse.
//!
//! Rows are brought to equality form with one slack per inequality. Every row
//! also gets an artificial column; phase one drives the artificials to zero,
//! phase two fixes them at zero and optimizes the real objective. Pricing is
//! Dantzig's largest reduced cost until `bland_after` consecutive degenerate
//! pivots, after which Bland's smallest-index rule is kept for the rest of the
//! phase so the method terminates.

use nalgebra::DMatrix;

use super::{LinearProgram, LpSolution, LpStatus, Sense};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub bland_after: usize,
    pub refactor_every: usize,
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            pivot_tol: 1e-11,
            bland_after: 50,
            refactor_every: 50,
            max_iterations: None,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    let mut s = Simplex::build(lp, *opts);
    let limit = opts.max_iterations.unwrap_or(20 * (s.m + s.ncols) + 1000);

    s.refactor()?;
    match s.run_phase(limit)? {
        PhaseEnd::Optimal => {}
        PhaseEnd::IterationLimit => return Ok(s.finish(lp, LpStatus::IterationLimit)),
        // Phase one is bounded below by zero.
        PhaseEnd::Unbounded => return Err(Error::Solver("phase one reported unbounded".into())),
    }
    let infeasibility = s.artificial_range().map(|j| s.x[j].abs()).fold(0.0, f64::max);
    if infeasibility > opts.feasibility_tol {
        return Ok(s.finish(lp, LpStatus::Infeasible));
    }

    s.enter_phase_two(lp);
    let status = match s.run_phase(limit)? {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::IterationLimit => LpStatus::IterationLimit,
    };
    if status == LpStatus::Optimal {
        s.refactor()?;
    }
    Ok(s.finish(lp, status))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Simplex {
    m: usize,
    n_struct: usize,
    ncols: usize,
    first_artificial: usize,
    /// Column-major `m x ncols`.
    a: Vec<f64>,
    b: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Row-major `m x m`.
    binv: Vec<f64>,
    opts: SolverOptions,
    iterations: usize,
}

impl Simplex {
    fn build(lp: &LinearProgram, opts: SolverOptions) -> Self {
        let m = lp.constraints.len();
        let n = lp.num_vars();
        let n_slack = lp.constraints.iter().filter(|r| r.sense != Sense::Eq).count();
        let first_artificial = n + n_slack;
        let ncols = first_artificial + m;

        let mut a = vec![0.0; m * ncols];
        let mut lb = Vec::with_capacity(ncols);
        let mut ub = Vec::with_capacity(ncols);
        for j in 0..n {
            for (i, row) in lp.constraints.iter().enumerate() {
                a[j * m + i] = row.coefficients[j];
            }
        }
        lb.extend_from_slice(&lp.lower);
        ub.extend_from_slice(&lp.upper);

        let mut slack = n;
        for (i, row) in lp.constraints.iter().enumerate() {
            match row.sense {
                Sense::Le => {
                    a[slack * m + i] = 1.0;
                    lb.push(0.0);
                    ub.push(f64::INFINITY);
                    slack += 1;
                }
                Sense::Ge => {
                    a[slack * m + i] = 1.0;
                    lb.push(f64::NEG_INFINITY);
                    ub.push(0.0);
                    slack += 1;
                }
                Sense::Eq => {}
            }
        }

        // Nonbasic starting values: the bound the objective favours, else any finite bound.
        let mut x = vec![0.0; ncols];
        let mut state = vec![State::Zero; ncols];
        for j in 0..first_artificial {
            let c = if j < n { lp.objective[j] } else { 0.0 };
            let (l, u) = (lb[j], ub[j]);
            let (v, st) = if c < 0.0 && u.is_finite() {
                (u, State::Upper)
            } else if l.is_finite() {
                (l, State::Lower)
            } else if u.is_finite() {
                (u, State::Upper)
            } else {
                (0.0, State::Zero)
            };
            x[j] = v;
            state[j] = st;
        }

        let b: Vec<f64> = lp.constraints.iter().map(|r| r.rhs).collect();
        let mut residual = b.clone();
        for j in 0..first_artificial {
            if x[j] != 0.0 {
                for i in 0..m {
                    residual[i] -= a[j * m + i] * x[j];
                }
            }
        }

        let mut basis = Vec::with_capacity(m);
        let mut cost = vec![0.0; ncols];
        for (i, r) in residual.iter().enumerate() {
            let j = first_artificial + i;
            a[j * m + i] = if *r >= 0.0 { 1.0 } else { -1.0 };
            lb.push(0.0);
            ub.push(f64::INFINITY);
            x[j] = r.abs();
            state[j] = State::Basic;
            cost[j] = 1.0;
            basis.push(j);
        }

        Self {
            m,
            n_struct: n,
            ncols,
            first_artificial,
            a,
            b,
            lb,
            ub,
            cost,
            x,
            state,
            basis,
            binv: vec![0.0; m * m],
            opts,
            iterations: 0,
        }
    }

    fn artificial_range(&self) -> std::ops::Range<usize> {
        self.first_artificial..self.ncols
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.a[j * self.m..(j + 1) * self.m]
    }

    fn enter_phase_two(&mut self, lp: &LinearProgram) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        self.cost[..self.n_struct].copy_from_slice(&lp.objective);
        for j in self.artificial_range() {
            self.ub[j] = 0.0;
            if self.state[j] != State::Basic {
                self.x[j] = 0.0;
                self.state[j] = State::Lower;
            }
        }
    }

    /// Rebuilds the basis inverse from scratch and recomputes basic values.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.a[self.basis[k] * m + i]);
        let inv = bmat
            .try_inverse()
            .ok_or_else(|| Error::Solver("singular basis during refactorization".into()))?;
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = inv[(i, k)];
            }
        }

        let mut rhs = self.b.clone();
        for j in 0..self.ncols {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                for (r, a) in rhs.iter_mut().zip(self.column(j)) {
                    *r -= a * xj;
                }
            }
        }
        for i in 0..m {
            let v: f64 = (0..m).map(|k| self.binv[i * m + k] * rhs[k]).sum();
            self.x[self.basis[i]] = v;
        }
        Ok(())
    }

    fn multipliers(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for i in 0..m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                for k in 0..m {
                    pi[k] += cb * self.binv[i * m + k];
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, pi: &[f64]) -> f64 {
        self.cost[j] - self.column(j).iter().zip(pi).map(|(a, p)| a * p).sum::<f64>()
    }

    /// Entering column and the direction it moves in (+1 up, -1 down).
    fn price(&self, pi: &[f64], bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            let st = self.state[j];
            if st == State::Basic || self.lb[j] == self.ub[j] {
                continue;
            }
            let d = self.reduced_cost(j, pi);
            let dir = match st {
                State::Lower if d < -tol => 1.0,
                State::Upper if d > tol => -1.0,
                State::Zero if d.abs() > tol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, mag)| d.abs() > mag) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let col = self.column(j);
        (0..m)
            .map(|i| (0..m).map(|k| self.binv[i * m + k] * col[k]).sum())
            .collect()
    }

    fn pivot(&mut self, r: usize, w: &[f64]) {
        let m = self.m;
        let piv = w[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        for i in 0..m {
            if i == r || w[i] == 0.0 {
                continue;
            }
            let f = w[i];
            for k in 0..m {
                self.binv[i * m + k] -= f * self.binv[r * m + k];
            }
        }
    }

    fn run_phase(&mut self, limit: usize) -> Result<PhaseEnd> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= limit {
                return Ok(PhaseEnd::IterationLimit);
            }
            if since_refactor >= self.opts.refactor_every {
                self.refactor()?;
                since_refactor = 0;
            }
            let pi = self.multipliers();
            let Some((q, dir)) = self.price(&pi, bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            let w = self.ftran(q);

            // Ratio test. `None` as the leaving row means a bound flip of q.
            let mut theta = self.ub[q] - self.lb[q];
            let mut leaving: Option<usize> = None;
            let mut leaving_mag = 0.0;
            for (i, &wi) in w.iter().enumerate() {
                if wi.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let j = self.basis[i];
                let delta = -dir * wi;
                let t = if delta < 0.0 {
                    if !self.lb[j].is_finite() {
                        continue;
                    }
                    (self.x[j] - self.lb[j]) / -delta
                } else {
                    if !self.ub[j].is_finite() {
                        continue;
                    }
                    (self.ub[j] - self.x[j]) / delta
                }
                .max(0.0);

                let better = if t < theta - 1e-12 {
                    true
                } else if t <= theta + 1e-12 {
                    match leaving {
                        None => t < theta,
                        Some(r) => {
                            if bland {
                                j < self.basis[r]
                            } else {
                                wi.abs() > leaving_mag
                            }
                        }
                    }
                } else {
                    false
                };
                if better {
                    theta = t;
                    leaving = Some(i);
                    leaving_mag = wi.abs();
                }
            }
            if !theta.is_finite() {
                return Ok(PhaseEnd::Unbounded);
            }

            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= self.opts.bland_after {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            if theta > 0.0 {
                self.x[q] += dir * theta;
                for (i, &wi) in w.iter().enumerate() {
                    self.x[self.basis[i]] -= dir * theta * wi;
                }
            }

            match leaving {
                None => {
                    let (v, st) = if dir > 0.0 { (self.ub[q], State::Upper) } else { (self.lb[q], State::Lower) };
                    self.x[q] = v;
                    self.state[q] = st;
                }
                Some(r) => {
                    let out = self.basis[r];
                    let delta = -dir * w[r];
                    if delta < 0.0 {
                        self.x[out] = self.lb[out];
                        self.state[out] = State::Lower;
                    } else {
                        self.x[out] = self.ub[out];
                        self.state[out] = State::Upper;
                    }
                    self.pivot(r, &w);
                    self.basis[r] = q;
                    self.state[q] = State::Basic;
                    since_refactor += 1;
                }
            }
        }
    }

    fn finish(&self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        let x = self.x[..self.n_struct].to_vec();
        let objective = lp.evaluate(&x);
        let duals = if status == LpStatus::Optimal { self.multipliers() } else { Vec::new() };
        LpSolution { status, x, objective, duals, iterations: self.iterations }
    }
}
