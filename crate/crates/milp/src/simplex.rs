//! Two-phase bounded-variable primal simplex.
//!
//! Rows are brought to equality form with slack columns; phase one drives an
//! initial basis of slacks and artificials to feasibility, phase two
//! optimizes the real objective. Nonbasic variables rest at a finite bound
//! (or at zero when free). The basis inverse is held explicitly and rebuilt
//! whenever a periodic residual check detects drift.
//!
//! Pivot selection is Dantzig pricing with lowest-index tie-breaking. After a
//! configurable run of consecutive degenerate steps the solver switches to
//! Bland's rule until it makes a nondegenerate step again, which rules out
//! cycling while keeping the common case fast. All choices are fixed rules,
//! so a given problem always produces the same pivot sequence.

use crate::{Error, Problem, RowSense};

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Row/bound violations up to this are considered feasible.
    pub feasibility_tol: f64,
    /// Matrix entries and reduced costs below this are treated as zero.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before falling back to Bland's rule.
    pub degenerate_pivot_limit: u32,
    /// Hard cap on simplex iterations per solve (cycling safeguard).
    pub max_iterations: u64,
    /// Hard cap on rows; the dense basis inverse costs rows^2 doubles.
    pub max_rows: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-6,
            pivot_tol: 1e-9,
            degenerate_pivot_limit: 200,
            max_iterations: 2_000_000,
            max_rows: 6_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `c'x + offset` when optimal; NaN when infeasible; +inf when unbounded.
    pub objective: f64,
    /// One value per problem variable when optimal, empty otherwise.
    pub values: Vec<f64>,
    pub iterations: u64,
}

/// Solves the LP relaxation of `problem` (binary variables become their
/// [lower, upper] box).
pub fn solve_lp(problem: &Problem, options: &SimplexOptions) -> Result<LpSolution, Error> {
    problem.validate()?;
    let lower: Vec<f64> = problem.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = problem.variables.iter().map(|v| v.upper).collect();
    solve_lp_with_bounds(problem, &lower, &upper, options)
}

/// Same as [`solve_lp`] but with per-variable bound overrides (used by
/// branch-and-bound to fix branching variables).
pub(crate) fn solve_lp_with_bounds(
    problem: &Problem,
    lower: &[f64],
    upper: &[f64],
    options: &SimplexOptions,
) -> Result<LpSolution, Error> {
    Worker::new(problem, lower, upper, options)?.run(problem)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    /// Basic in the given row slot.
    Basic(u32),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    FreeZero,
}

enum Ratio {
    Unbounded,
    BoundFlip(f64),
    Pivot { step: f64, slot: usize, to_upper: bool },
}

struct Worker<'a> {
    opts: &'a SimplexOptions,
    m: usize,
    n_struct: usize,
    n_total: usize,
    first_artificial: usize,
    // Column-major matrix over structural, slack, then artificial columns.
    col_ptr: Vec<usize>,
    row_of: Vec<u32>,
    val: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<u32>,
    /// Dense basis inverse, row-major m x m.
    binv: Vec<f64>,
    /// Values of basic variables per row slot.
    xb: Vec<f64>,
    iterations: u64,
    degenerate_run: u32,
    bland: bool,
    // Scratch buffers reused across iterations.
    y: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> Worker<'a> {
    fn new(
        problem: &Problem,
        lower_s: &[f64],
        upper_s: &[f64],
        opts: &'a SimplexOptions,
    ) -> Result<Self, Error> {
        let m = problem.rows.len();
        if m > opts.max_rows {
            return Err(Error::TooManyRows {
                rows: m,
                limit: opts.max_rows,
            });
        }
        let n_struct = problem.num_variables();
        let n_slack = problem
            .rows
            .iter()
            .filter(|r| r.sense != RowSense::Eq)
            .count();
        let n_total = n_struct + n_slack + m;
        let first_artificial = n_struct + n_slack;

        // Fill columns in order: structural columns from the row-major input,
        // then slack and artificial columns as singletons.
        let mut counts = vec![0usize; n_struct];
        for row in &problem.rows {
            for &(j, _) in &row.coeffs {
                counts[j] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n_total + 1];
        for j in 0..n_struct {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let struct_nnz = col_ptr[n_struct];
        let mut fill: Vec<usize> = col_ptr[..n_struct].to_vec();
        let total_nnz = struct_nnz + n_slack + m;
        let mut row_of = vec![0u32; total_nnz];
        let mut val = vec![0.0f64; total_nnz];
        for (i, row) in problem.rows.iter().enumerate() {
            for &(j, c) in &row.coeffs {
                row_of[fill[j]] = i as u32;
                val[fill[j]] = c;
                fill[j] += 1;
            }
        }

        let mut lower = Vec::with_capacity(n_total);
        let mut upper = Vec::with_capacity(n_total);
        lower.extend_from_slice(lower_s);
        upper.extend_from_slice(upper_s);

        let mut slack_of_row = vec![usize::MAX; m];
        let mut next = struct_nnz;
        let mut col = n_struct;
        for (i, row) in problem.rows.iter().enumerate() {
            let coeff = match row.sense {
                RowSense::Eq => continue,
                RowSense::Le => 1.0,
                RowSense::Ge => -1.0,
            };
            col_ptr[col + 1] = next + 1;
            row_of[next] = i as u32;
            val[next] = coeff;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            slack_of_row[i] = col;
            next += 1;
            col += 1;
        }

        // Start point: every structural/slack column at a finite bound
        // (preferring lower), free columns at zero.
        let mut state = vec![VarState::AtLower; n_total];
        for k in 0..first_artificial {
            state[k] = if lower[k].is_finite() {
                VarState::AtLower
            } else if upper[k].is_finite() {
                VarState::AtUpper
            } else {
                VarState::FreeZero
            };
        }
        let mut residual: Vec<f64> = problem.rows.iter().map(|r| r.rhs).collect();
        for k in 0..first_artificial {
            let x = match state[k] {
                VarState::AtLower => lower[k],
                VarState::AtUpper => upper[k],
                _ => 0.0,
            };
            if x != 0.0 {
                for e in col_ptr[k]..col_ptr[k + 1] {
                    residual[row_of[e] as usize] -= val[e] * x;
                }
            }
        }

        // Initial basis: a slack where it can absorb the residual feasibly,
        // otherwise an artificial signed so its start value is nonnegative.
        // Either way the basis matrix is diag(+-1) and inverts trivially.
        let mut basis = vec![0u32; m];
        let mut xb = vec![0.0f64; m];
        let mut binv = vec![0.0f64; m * m];
        for (i, row) in problem.rows.iter().enumerate() {
            let r = residual[i];
            let art = first_artificial + i;
            let slack_ok = match row.sense {
                RowSense::Le => r >= 0.0,
                RowSense::Ge => r <= 0.0,
                RowSense::Eq => false,
            };
            let art_sign = if slack_ok || r >= 0.0 { 1.0 } else { -1.0 };
            col_ptr[art + 1] = next + 1;
            row_of[next] = i as u32;
            val[next] = art_sign;
            lower.push(0.0);
            // Artificials that are not part of the start basis are pinned to
            // zero from the outset.
            upper.push(if slack_ok { 0.0 } else { f64::INFINITY });
            next += 1;

            let (var, diag) = if slack_ok {
                (
                    slack_of_row[i],
                    if row.sense == RowSense::Le { 1.0 } else { -1.0 },
                )
            } else {
                (art, art_sign)
            };
            basis[i] = var as u32;
            state[var] = VarState::Basic(i as u32);
            xb[i] = diag * r;
            binv[i * m + i] = diag;
        }
        debug_assert_eq!(next, val.len());

        let rhs: Vec<f64> = problem.rows.iter().map(|r| r.rhs).collect();
        Ok(Worker {
            opts,
            m,
            n_struct,
            n_total,
            first_artificial,
            col_ptr,
            row_of,
            val,
            lower,
            upper,
            cost: vec![0.0; n_total],
            rhs,
            state,
            basis,
            binv,
            xb,
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            y: vec![0.0; m],
            w: vec![0.0; m],
        })
    }

    fn run(mut self, problem: &Problem) -> Result<LpSolution, Error> {
        // Phase one: maximize -(sum of artificials), stopping early once the
        // infeasibility is gone.
        for k in self.first_artificial..self.n_total {
            self.cost[k] = -1.0;
        }
        if self.artificial_sum() > 0.0 {
            let status = self.iterate(true)?;
            if status == LpStatus::Unbounded {
                return Err(Error::Numerical(
                    "phase one reported an unbounded objective".into(),
                ));
            }
        }
        if self.artificial_sum() > self.opts.feasibility_tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                values: Vec::new(),
                iterations: self.iterations,
            });
        }

        // Pin artificials at zero and switch to the real objective.
        for k in self.first_artificial..self.n_total {
            self.upper[k] = 0.0;
            self.cost[k] = 0.0;
            if matches!(self.state[k], VarState::AtUpper) {
                self.state[k] = VarState::AtLower;
            }
        }
        self.cost[..self.n_struct].copy_from_slice(&problem.objective);
        self.bland = false;
        self.degenerate_run = 0;

        let status = self.iterate(false)?;
        if status == LpStatus::Unbounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: f64::INFINITY,
                values: Vec::new(),
                iterations: self.iterations,
            });
        }

        // Extract, then verify against the original rows and bounds. A
        // violation here means accumulated roundoff, which is a hard error
        // rather than a silently wrong answer.
        self.refresh_xb();
        let values = self.extract_values();
        self.verify(problem, &values)?;
        let objective = problem.objective_offset
            + values
                .iter()
                .zip(&problem.objective)
                .map(|(x, c)| x * c)
                .sum::<f64>();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective,
            values,
            iterations: self.iterations,
        })
    }

    fn artificial_sum(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.m {
            if self.basis[i] as usize >= self.first_artificial {
                total += self.xb[i].abs();
            }
        }
        total
    }

    /// Runs pricing/ratio-test/pivot until the current objective is optimal.
    fn iterate(&mut self, phase_one: bool) -> Result<LpStatus, Error> {
        loop {
            self.iterations += 1;
            if self.iterations > self.opts.max_iterations {
                return Err(Error::IterationLimit(self.iterations));
            }
            if self.iterations % 128 == 0 {
                self.refresh_xb();
                if self.iterations % 1024 == 0 && self.residual_norm() > 1e-7 {
                    self.refactorize()?;
                }
            }
            if phase_one && self.artificial_sum() <= 1e-12 {
                return Ok(LpStatus::Optimal);
            }

            let entering = match self.price() {
                Some(j) => j,
                None => return Ok(LpStatus::Optimal),
            };
            // Direction: +1 when the entering variable increases.
            let d = self.reduced_cost(entering);
            let sigma = match self.state[entering] {
                VarState::AtLower => 1.0,
                VarState::AtUpper => -1.0,
                VarState::FreeZero => {
                    if d > 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                VarState::Basic(_) => unreachable!("basic column was priced"),
            };
            self.compute_w(entering);
            match self.ratio_test(entering, sigma) {
                Ratio::Unbounded => {
                    if phase_one {
                        return Err(Error::Numerical(
                            "phase one ratio test found no blocking bound".into(),
                        ));
                    }
                    return Ok(LpStatus::Unbounded);
                }
                Ratio::BoundFlip(step) => {
                    self.apply_bound_flip(entering, sigma, step);
                    self.note_step(step);
                }
                Ratio::Pivot {
                    step,
                    slot,
                    to_upper,
                } => {
                    self.apply_pivot(entering, sigma, step, slot, to_upper);
                    self.note_step(step);
                }
            }
        }
    }

    fn note_step(&mut self, step: f64) {
        if step > 1e-10 {
            self.degenerate_run = 0;
            self.bland = false;
        } else {
            self.degenerate_run += 1;
            if self.degenerate_run > self.opts.degenerate_pivot_limit {
                self.bland = true;
            }
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let mut d = self.cost[j];
        for e in self.col_ptr[j]..self.col_ptr[j + 1] {
            d -= self.y[self.row_of[e] as usize] * self.val[e];
        }
        d
    }

    /// Computes simplex multipliers and picks the entering column, or `None`
    /// at optimality. Dantzig rule (largest violation, lowest index on ties);
    /// Bland's rule (lowest eligible index) while in anti-cycling mode.
    fn price(&mut self) -> Option<usize> {
        for k in 0..self.m {
            self.y[k] = 0.0;
        }
        for i in 0..self.m {
            let c = self.cost[self.basis[i] as usize];
            if c != 0.0 {
                let row = &self.binv[i * self.m..(i + 1) * self.m];
                for k in 0..self.m {
                    self.y[k] += c * row[k];
                }
            }
        }
        let tol = self.opts.pivot_tol;
        let mut best: Option<(f64, usize)> = None;
        for j in 0..self.n_total {
            let st = self.state[j];
            if matches!(st, VarState::Basic(_)) || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced_cost(j);
            let violation = match st {
                VarState::AtLower => d,
                VarState::AtUpper => -d,
                VarState::FreeZero => d.abs(),
                VarState::Basic(_) => unreachable!(),
            };
            if violation > tol {
                if self.bland {
                    return Some(j);
                }
                if best.map_or(true, |(b, _)| violation > b) {
                    best = Some((violation, j));
                }
            }
        }
        best.map(|(_, j)| j)
    }

    fn compute_w(&mut self, entering: usize) {
        for i in 0..self.m {
            self.w[i] = 0.0;
        }
        for e in self.col_ptr[entering]..self.col_ptr[entering + 1] {
            let a = self.val[e];
            let r = self.row_of[e] as usize;
            for i in 0..self.m {
                self.w[i] += self.binv[i * self.m + r] * a;
            }
        }
    }

    /// Finds the maximum step for the entering variable moving by `sigma`.
    /// Basic variable i changes at rate `-sigma * w[i]`.
    fn ratio_test(&self, entering: usize, sigma: f64) -> Ratio {
        let tol = self.opts.pivot_tol;
        let own_range = self.upper[entering] - self.lower[entering];
        let mut best_step = if own_range.is_finite() {
            own_range
        } else {
            f64::INFINITY
        };
        let mut best: Option<(usize, bool, f64)> = None; // slot, to_upper, |rate|

        for i in 0..self.m {
            let rate = -sigma * self.w[i];
            if rate.abs() <= tol {
                continue;
            }
            let v = self.basis[i] as usize;
            let (limit, to_upper) = if rate < 0.0 {
                (self.lower[v], false)
            } else {
                (self.upper[v], true)
            };
            if !limit.is_finite() {
                continue;
            }
            // Clamp at zero: slightly out-of-bounds basic values (roundoff)
            // must not produce negative steps.
            let step = ((limit - self.xb[i]) / rate).max(0.0);
            let better = match best {
                None => step < best_step - 1e-12,
                Some((slot, _, mag)) => {
                    if step < best_step - 1e-12 {
                        true
                    } else if step > best_step + 1e-12 {
                        false
                    } else if self.bland {
                        // Bland: lowest variable index among ties.
                        (self.basis[i] as usize) < (self.basis[slot] as usize)
                    } else {
                        // Stability: largest pivot magnitude, then lowest index.
                        rate.abs() > mag + 1e-12
                            || (rate.abs() >= mag - 1e-12
                                && (self.basis[i] as usize) < (self.basis[slot] as usize))
                    }
                }
            };
            if better {
                best_step = best_step.min(step);
                best = Some((i, to_upper, rate.abs()));
            }
        }

        match best {
            None => {
                if best_step.is_finite() {
                    Ratio::BoundFlip(best_step)
                } else {
                    Ratio::Unbounded
                }
            }
            Some((slot, to_upper, _)) => Ratio::Pivot {
                step: best_step,
                slot,
                to_upper,
            },
        }
    }

    fn apply_bound_flip(&mut self, entering: usize, sigma: f64, step: f64) {
        for i in 0..self.m {
            self.xb[i] += -sigma * self.w[i] * step;
        }
        self.state[entering] = match self.state[entering] {
            VarState::AtLower => VarState::AtUpper,
            VarState::AtUpper => VarState::AtLower,
            other => other,
        };
    }

    fn apply_pivot(&mut self, entering: usize, sigma: f64, step: f64, slot: usize, to_upper: bool) {
        let entering_value = match self.state[entering] {
            VarState::AtLower => self.lower[entering],
            VarState::AtUpper => self.upper[entering],
            VarState::FreeZero => 0.0,
            VarState::Basic(_) => unreachable!(),
        } + sigma * step;

        for i in 0..self.m {
            self.xb[i] += -sigma * self.w[i] * step;
        }
        let leaving = self.basis[slot] as usize;
        self.state[leaving] = if to_upper {
            VarState::AtUpper
        } else {
            VarState::AtLower
        };
        // A leaving variable with equal bounds rests at its fixed value.
        if self.lower[leaving] == self.upper[leaving] {
            self.state[leaving] = VarState::AtLower;
        }
        self.basis[slot] = entering as u32;
        self.state[entering] = VarState::Basic(slot as u32);
        self.xb[slot] = entering_value;

        // Rank-one update of the explicit inverse: row `slot` is scaled by
        // 1/pivot, every other row has w_i times the new pivot row removed.
        let pivot = self.w[slot];
        let m = self.m;
        let (before, rest) = self.binv.split_at_mut(slot * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        let inv = 1.0 / pivot;
        for x in pivot_row.iter_mut() {
            *x *= inv;
        }
        for (i, chunk) in before.chunks_exact_mut(m).enumerate() {
            let wi = self.w[i];
            if wi != 0.0 {
                for (x, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *x -= wi * p;
                }
            }
        }
        for (off, chunk) in after.chunks_exact_mut(m).enumerate() {
            let wi = self.w[slot + 1 + off];
            if wi != 0.0 {
                for (x, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *x -= wi * p;
                }
            }
        }
    }

    /// Recomputes basic values from the current nonbasic assignment.
    fn refresh_xb(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.n_total {
            let x = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
                VarState::FreeZero => 0.0,
            };
            if x != 0.0 {
                for e in self.col_ptr[j]..self.col_ptr[j + 1] {
                    r[self.row_of[e] as usize] -= self.val[e] * x;
                }
            }
        }
        for i in 0..self.m {
            let row = &self.binv[i * self.m..(i + 1) * self.m];
            self.xb[i] = row.iter().zip(&r).map(|(a, b)| a * b).sum();
        }
    }

    /// Max-norm of `B x_B - (rhs - N x_N)`, the error the inverse update has
    /// accumulated.
    fn residual_norm(&self) -> f64 {
        let mut r = self.rhs.clone();
        for j in 0..self.n_total {
            let x = match self.state[j] {
                VarState::Basic(slot) => self.xb[slot as usize],
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
                VarState::FreeZero => 0.0,
            };
            if x != 0.0 {
                for e in self.col_ptr[j]..self.col_ptr[j + 1] {
                    r[self.row_of[e] as usize] -= self.val[e] * x;
                }
            }
        }
        r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Rebuilds the dense inverse from the basis columns by Gauss-Jordan
    /// elimination with partial pivoting.
    fn refactorize(&mut self) -> Result<(), Error> {
        let m = self.m;
        let mut b = vec![0.0f64; m * m];
        for (slot, &v) in self.basis.iter().enumerate() {
            let v = v as usize;
            for e in self.col_ptr[v]..self.col_ptr[v + 1] {
                b[self.row_of[e] as usize * m + slot] = self.val[e];
            }
        }
        let mut inv = vec![0.0f64; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut mag = b[col * m + col].abs();
            for r in col + 1..m {
                let a = b[r * m + col].abs();
                if a > mag {
                    mag = a;
                    piv = r;
                }
            }
            if mag < 1e-12 {
                return Err(Error::Numerical(
                    "singular basis during refactorization".into(),
                ));
            }
            if piv != col {
                for k in 0..m {
                    b.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = 1.0 / b[col * m + col];
            for k in 0..m {
                b[col * m + k] *= d;
                inv[col * m + k] *= d;
            }
            for r in 0..m {
                if r != col {
                    let f = b[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            b[r * m + k] -= f * b[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.refresh_xb();
        Ok(())
    }

    fn extract_values(&self) -> Vec<f64> {
        (0..self.n_struct)
            .map(|j| match self.state[j] {
                VarState::Basic(slot) => self.xb[slot as usize],
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
                VarState::FreeZero => 0.0,
            })
            .collect()
    }

    fn verify(&self, problem: &Problem, values: &[f64]) -> Result<(), Error> {
        let tol = self.opts.feasibility_tol * 10.0;
        for (j, &x) in values.iter().enumerate() {
            if x < self.lower[j] - tol || x > self.upper[j] + tol {
                return Err(Error::Numerical(format!(
                    "variable {} value {} violates bounds [{}, {}]",
                    problem.variables[j].name, x, self.lower[j], self.upper[j]
                )));
            }
        }
        for (i, row) in problem.rows.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().map(|&(j, c)| c * values[j]).sum();
            let ok = match row.sense {
                RowSense::Eq => (lhs - row.rhs).abs() <= tol,
                RowSense::Le => lhs <= row.rhs + tol,
                RowSense::Ge => lhs >= row.rhs - tol,
            };
            if !ok {
                return Err(Error::Numerical(format!(
                    "row {} ({}) violated: lhs {} vs rhs {}",
                    i, row.name, lhs, row.rhs
                )));
            }
        }
        Ok(())
    }
}
