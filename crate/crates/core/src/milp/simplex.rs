//! Dense bounded-variable dual simplex.
//!
//! Every row `lo ≤ a·x ≤ hi` gets a logical column `r` with `a·x − r = 0`, so
//! the working matrix is `[A | −I]` and the slack basis starts as `B = −I`.
//! All columns carry finite bounds (logical bounds are clipped to the row's
//! activity range), which makes any basis dual feasible once each nonbasic
//! column sits at the bound matching the sign of its reduced cost. That
//! removes the need for a phase one and lets branch and bound re-solve from
//! the previous tableau after changing bounds.

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
/// Pivots smaller than this fraction of the largest candidate in the row are refused.
const REL_PIVOT_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-9;
const NONE: usize = usize::MAX;

/// `maximize cost·x` subject to row and column bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub row_lower: Vec<f64>,
    pub row_upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            cost: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            rows: Vec::new(),
            row_lower: Vec::new(),
            row_upper: Vec::new(),
        }
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, lower: f64, upper: f64) {
        self.rows.push(terms);
        self.row_lower.push(lower);
        self.row_upper.push(upper);
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// Iteration limit or numerical breakdown.
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub row_activity: Vec<f64>,
    /// Row duals `y` with `cost − Aᵀy` equal to `reduced_costs`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Basis and nonbasic bound positions, for restarting a later solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSnapshot {
    basis: Vec<usize>,
    at_upper: Vec<bool>,
}

/// Warm-startable solver state.
#[derive(Debug, Clone)]
pub struct DualSimplex {
    m: usize,
    n: usize,
    ncols: usize,
    tab: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    rows: Vec<Vec<(usize, f64)>>,
    row_scale: Vec<f64>,
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
    pivots_since_refactor: usize,
    total_iterations: usize,
    infeasible_rows: bool,
    scratch: Vec<usize>,
}

impl DualSimplex {
    /// Sets up the slack basis. Column bounds must be finite.
    pub fn new(p: &LpProblem) -> Self {
        let (m, n) = (p.rows.len(), p.num_vars);
        let ncols = n + m;
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        let mut cost = p.cost.clone();
        cost.resize(ncols, 0.0);
        let mut infeasible_rows = false;
        // equilibrate rows so the largest coefficient of each is one
        let row_scale: Vec<f64> = p
            .rows
            .iter()
            .map(|row| {
                let big = row.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
                if big > 0.0 {
                    1.0 / big
                } else {
                    1.0
                }
            })
            .collect();
        let rows: Vec<Vec<(usize, f64)>> =
            p.rows.iter().zip(&row_scale).map(|(row, &k)| row.iter().map(|&(j, a)| (j, a * k)).collect()).collect();
        for (i, row) in rows.iter().enumerate() {
            let (amin, amax) = activity_range(row, &p.lower, &p.upper);
            let l = (p.row_lower[i] * row_scale[i]).max(amin);
            let h = (p.row_upper[i] * row_scale[i]).min(amax);
            if l > h + PRIMAL_TOL * (1.0 + l.abs().max(h.abs())) {
                infeasible_rows = true;
            }
            lo.push(l);
            hi.push(h.max(l));
        }
        let mut s = Self {
            m,
            n,
            ncols,
            tab: vec![0.0; m * ncols],
            lo,
            hi,
            cost,
            x: vec![0.0; ncols],
            d: vec![0.0; ncols],
            basis: (n..ncols).collect(),
            pos: vec![NONE; ncols],
            at_upper: vec![false; ncols],
            rows,
            row_scale,
            row_lower: p.row_lower.clone(),
            row_upper: p.row_upper.clone(),
            pivots_since_refactor: 0,
            total_iterations: 0,
            infeasible_rows,
            scratch: Vec::new(),
        };
        s.load_slack_basis();
        s
    }

    fn load_slack_basis(&mut self) {
        let (m, n, ncols) = (self.m, self.n, self.ncols);
        self.tab.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                self.tab[i * ncols + j] -= a;
            }
            self.tab[i * ncols + n + i] = 1.0;
        }
        self.pos.iter_mut().for_each(|p| *p = NONE);
        for i in 0..m {
            self.basis[i] = n + i;
            self.pos[n + i] = i;
        }
        self.d.copy_from_slice(&self.cost);
        for i in 0..m {
            self.d[n + i] = 0.0;
        }
        self.pivots_since_refactor = 0;
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot { basis: self.basis.clone(), at_upper: self.at_upper.clone() }
    }

    /// Reinstalls a basis taken from this problem; bounds are kept.
    pub fn load(&mut self, snap: &BasisSnapshot) {
        if snap.basis == self.basis && snap.at_upper == self.at_upper {
            return;
        }
        self.basis.copy_from_slice(&snap.basis);
        self.at_upper.copy_from_slice(&snap.at_upper);
        self.refactor();
    }

    /// Returns to the slack basis, keeping the current column bounds.
    pub fn reset(&mut self) {
        self.load_slack_basis();
        self.place_nonbasics_fresh();
        self.compute_basic_values();
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    /// Changes structural column bounds; takes effect on the next [`solve`](Self::solve).
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        debug_assert!(j < self.n);
        self.lo[j] = lo;
        self.hi[j] = hi;
    }

    fn is_basic(&self, j: usize) -> bool {
        self.pos[j] != NONE
    }

    fn place_nonbasics(&mut self) {
        for j in 0..self.ncols {
            if self.is_basic(j) {
                continue;
            }
            if self.hi[j] - self.lo[j] <= 0.0 {
                self.at_upper[j] = false;
            } else if self.d[j] > DUAL_TOL {
                self.at_upper[j] = true;
            } else if self.d[j] < -DUAL_TOL {
                self.at_upper[j] = false;
            }
            self.x[j] = if self.at_upper[j] { self.hi[j] } else { self.lo[j] };
        }
    }

    fn compute_basic_values(&mut self) {
        let ncols = self.ncols;
        self.scratch.clear();
        for j in 0..ncols {
            if !self.is_basic(j) && self.x[j] != 0.0 {
                self.scratch.push(j);
            }
        }
        for i in 0..self.m {
            let row = &self.tab[i * ncols..(i + 1) * ncols];
            let v: f64 = self.scratch.iter().map(|&j| row[j] * self.x[j]).sum();
            self.x[self.basis[i]] = -v;
        }
    }

    fn compute_reduced_costs(&mut self) {
        let ncols = self.ncols;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[i * ncols..(i + 1) * ncols];
            for (dj, &t) in self.d.iter_mut().zip(row) {
                *dj -= cb * t;
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// Rebuilds the tableau for the current basis from the original rows.
    /// Falls back to the slack basis when the basis has become singular.
    fn refactor(&mut self) {
        let (m, n, ncols) = (self.m, self.n, self.ncols);
        let old_basis = self.basis.clone();
        self.tab.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                self.tab[i * ncols + j] += a;
            }
            self.tab[i * ncols + n + i] = -1.0;
        }
        let mut order: Vec<usize> = old_basis.iter().copied().filter(|&q| q >= n).collect();
        order.extend(old_basis.iter().copied().filter(|&q| q < n));
        let mut new_basis = vec![NONE; m];
        let mut in_basis = vec![false; ncols];
        for &q in &order {
            let mut best = (NONE, 0.0);
            for i in 0..m {
                if new_basis[i] == NONE {
                    let v = self.tab[i * ncols + q].abs();
                    if v > best.1 {
                        best = (i, v);
                    }
                }
            }
            // a dependent column leaves the basis; its row is covered below
            if best.0 == NONE || best.1 < 1e-10 {
                continue;
            }
            self.pivot_tableau(best.0, q);
            new_basis[best.0] = q;
            in_basis[q] = true;
        }
        for r in 0..m {
            if new_basis[r] != NONE {
                continue;
            }
            let mut best = (NONE, 0.0);
            for q in n..ncols {
                let v = self.tab[r * ncols + q].abs();
                if !in_basis[q] && v > best.1 {
                    best = (q, v);
                }
            }
            if best.0 == NONE || best.1 < 1e-12 {
                self.load_slack_basis();
                self.place_nonbasics_fresh();
                self.compute_basic_values();
                return;
            }
            self.pivot_tableau(r, best.0);
            new_basis[r] = best.0;
            in_basis[best.0] = true;
        }
        self.basis = new_basis;
        self.pos.iter_mut().for_each(|p| *p = NONE);
        for (i, &q) in self.basis.iter().enumerate() {
            self.pos[q] = i;
        }
        self.compute_reduced_costs();
        self.place_nonbasics();
        self.compute_basic_values();
        self.pivots_since_refactor = 0;
    }

    fn place_nonbasics_fresh(&mut self) {
        for j in 0..self.ncols {
            if !self.is_basic(j) {
                self.at_upper[j] = self.d[j] > DUAL_TOL && self.hi[j] > self.lo[j];
            }
        }
        self.place_nonbasics();
    }

    /// Gauss-Jordan step making column `q` the unit vector `e_r`.
    fn pivot_tableau(&mut self, r: usize, q: usize) {
        let ncols = self.ncols;
        let piv = self.tab[r * ncols + q];
        let mut nz: Vec<usize> = Vec::new();
        {
            let row = &mut self.tab[r * ncols..(r + 1) * ncols];
            let inv = 1.0 / piv;
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        nz.push(k);
                    }
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.tab.split_at_mut(r * ncols);
        let (prow, after) = rest.split_at_mut(ncols);
        let update = |row: &mut [f64]| {
            let t = row[q];
            if t == 0.0 {
                return;
            }
            for &k in &nz {
                row[k] -= t * prow[k];
            }
            row[q] = 0.0;
        };
        before.chunks_exact_mut(ncols).for_each(update);
        after.chunks_exact_mut(ncols).for_each(update);
    }

    /// Runs dual simplex iterations from the current basis.
    pub fn solve(&mut self) -> LpStatus {
        if self.infeasible_rows {
            return LpStatus::Infeasible;
        }
        for j in 0..self.n {
            if self.lo[j] > self.hi[j] {
                return LpStatus::Infeasible;
            }
        }
        let (m, ncols) = (self.m, self.ncols);
        if self.pivots_since_refactor > m.max(100) {
            self.refactor();
        } else {
            self.place_nonbasics();
            self.compute_basic_values();
        }
        let max_iter = 50 * (m + self.n) + 1000;
        let mut iters = 0usize;
        let mut repairs = 0usize;
        let mut refactors_for_check = 0usize;
        loop {
            // leaving row: largest bound violation
            let mut r = NONE;
            let mut best = 0.0;
            for i in 0..m {
                let j = self.basis[i];
                let v = self.x[j];
                let tol = PRIMAL_TOL * (1.0 + v.abs());
                let inf = if v < self.lo[j] - tol {
                    self.lo[j] - v
                } else if v > self.hi[j] + tol {
                    v - self.hi[j]
                } else {
                    continue;
                };
                if inf > best {
                    best = inf;
                    r = i;
                }
            }
            if r == NONE {
                // primal feasible: confirm dual feasibility with fresh reduced
                // costs, then accuracy
                self.compute_reduced_costs();
                let mut flipped = false;
                for j in 0..ncols {
                    if self.is_basic(j) || self.hi[j] <= self.lo[j] {
                        continue;
                    }
                    if !self.at_upper[j] && self.d[j] > 10.0 * DUAL_TOL {
                        self.at_upper[j] = true;
                        flipped = true;
                    } else if self.at_upper[j] && self.d[j] < -10.0 * DUAL_TOL {
                        self.at_upper[j] = false;
                        flipped = true;
                    }
                }
                if flipped {
                    repairs += 1;
                    if repairs % 20 == 0 {
                        self.refactor();
                    } else {
                        self.place_nonbasics();
                        self.compute_basic_values();
                    }
                    iters += 1;
                    if iters > max_iter {
                        return LpStatus::Failed;
                    }
                    continue;
                }
                if self.residual() > RESIDUAL_TOL {
                    if refactors_for_check < 3 {
                        refactors_for_check += 1;
                        self.refactor();
                        continue;
                    }
                    self.reset();
                    return LpStatus::Failed;
                }
                return LpStatus::Optimal;
            }

            let jl = self.basis[r];
            let increase = self.x[jl] < self.lo[jl];
            let row = &self.tab[r * ncols..(r + 1) * ncols];
            let eligible = |j: usize, a: f64| -> bool {
                if increase {
                    (!self.at_upper[j] && a < -PIVOT_TOL) || (self.at_upper[j] && a > PIVOT_TOL)
                } else {
                    (!self.at_upper[j] && a > PIVOT_TOL) || (self.at_upper[j] && a < -PIVOT_TOL)
                }
            };
            let dual_slack = |j: usize| -> f64 {
                if self.at_upper[j] {
                    self.d[j].max(0.0)
                } else {
                    (-self.d[j]).max(0.0)
                }
            };
            let row_max = (0..ncols)
                .filter(|&j| self.pos[j] == NONE && self.hi[j] > self.lo[j])
                .fold(0.0f64, |acc, j| acc.max(row[j].abs()));
            let piv_tol = PIVOT_TOL.max(REL_PIVOT_TOL * row_max);
            let eligible = |j: usize, a: f64| a.abs() > piv_tol && eligible(j, a);
            let mut theta_max = f64::INFINITY;
            for j in 0..ncols {
                let a = row[j];
                if a == 0.0 || self.pos[j] != NONE || self.hi[j] <= self.lo[j] || !eligible(j, a) {
                    continue;
                }
                theta_max = theta_max.min((dual_slack(j) + DUAL_TOL) / a.abs());
            }
            if theta_max == f64::INFINITY {
                return LpStatus::Infeasible;
            }
            let mut q = NONE;
            let mut qa = 0.0;
            for j in 0..ncols {
                let a = row[j];
                if a == 0.0 || self.pos[j] != NONE || self.hi[j] <= self.lo[j] || !eligible(j, a) {
                    continue;
                }
                if dual_slack(j) / a.abs() <= theta_max && a.abs() > qa {
                    qa = a.abs();
                    q = j;
                }
            }
            self.pivot(r, q, increase);
            iters += 1;
            if iters > max_iter {
                return LpStatus::Failed;
            }
            if self.pivots_since_refactor > 4 * m.max(100) {
                self.refactor();
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize, increase: bool) {
        let ncols = self.ncols;
        let jl = self.basis[r];
        let bound = if increase { self.lo[jl] } else { self.hi[jl] };
        let a_rq = self.tab[r * ncols + q];
        let delta = (self.x[jl] - bound) / a_rq;
        for i in 0..self.m {
            let t = self.tab[i * ncols + q];
            if t != 0.0 {
                self.x[self.basis[i]] -= t * delta;
            }
        }
        self.x[q] += delta;
        self.x[jl] = bound;
        self.at_upper[jl] = !increase;

        let theta = self.d[q] / a_rq;
        if theta != 0.0 {
            let row = &self.tab[r * ncols..(r + 1) * ncols];
            for (dj, &t) in self.d.iter_mut().zip(row) {
                if t != 0.0 {
                    *dj -= theta * t;
                }
            }
        }
        self.d[q] = 0.0;
        self.pivot_tableau(r, q);
        self.basis[r] = q;
        self.pos[q] = r;
        self.pos[jl] = NONE;
        self.pivots_since_refactor += 1;
        self.total_iterations += 1;
    }

    /// Largest mismatch between the logical values and `A x`, relative to
    /// the magnitude of the row's terms.
    fn residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let (ax, scale) = row.iter().fold((0.0, 0.0), |(s, m): (f64, f64), &(j, a)| {
                let t = a * self.x[j];
                (s + t, m.max(t.abs()))
            });
            let r = self.x[self.n + i];
            worst = worst.max((ax - r).abs() / (1.0 + scale));
        }
        worst
    }

    pub fn cost(&self, j: usize) -> f64 {
        self.cost[j]
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    /// Structural values of the current basic solution.
    pub fn x(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        self.cost[..self.n].iter().zip(&self.x[..self.n]).map(|(c, x)| c * x).sum()
    }

    pub fn solution(&self, status: LpStatus) -> LpSolution {
        let n = self.n;
        let x = self.x[..n].to_vec();
        let row_activity = self
            .rows
            .iter()
            .zip(&self.row_scale)
            .map(|(row, k)| row.iter().map(|&(j, a)| a * x[j]).sum::<f64>() / k)
            .collect();
        let mut reduced_costs = self.cost[..n].to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                reduced_costs[j] -= self.d[n + i] * a;
            }
        }
        let duals = self.d[n..].iter().zip(&self.row_scale).map(|(y, k)| y * k).collect();
        LpSolution {
            status,
            objective: self.objective(),
            x,
            row_activity,
            duals,
            reduced_costs,
            iterations: self.total_iterations,
        }
    }

    /// Original row bounds, before clipping to the activity range.
    pub fn row_bounds(&self, i: usize) -> (f64, f64) {
        (self.row_lower[i], self.row_upper[i])
    }
}

fn activity_range(row: &[(usize, f64)], lower: &[f64], upper: &[f64]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for &(j, a) in row {
        if a >= 0.0 {
            lo += a * lower[j];
            hi += a * upper[j];
        } else {
            lo += a * upper[j];
            hi += a * lower[j];
        }
    }
    (lo, hi)
}

/// One-shot solve.
pub fn solve_lp(p: &LpProblem) -> LpSolution {
    let mut s = DualSimplex::new(p);
    let status = s.solve();
    s.solution(status)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(n: usize, ub: f64) -> LpProblem {
        let mut p = LpProblem::new(n);
        p.upper = vec![ub; n];
        p
    }

    #[test]
    fn simple_max() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, 0 <= x,y <= 10
        let mut p = boxed(2, 10.0);
        p.cost = vec![3.0, 2.0];
        p.add_row(vec![(0, 1.0), (1, 1.0)], f64::NEG_INFINITY, 4.0);
        p.add_row(vec![(0, 1.0), (1, 3.0)], f64::NEG_INFINITY, 6.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 12.0).abs() < 1e-9);
        assert!((s.x[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max -x - y, x + y = 3, x - y >= 1
        let mut p = boxed(2, 10.0);
        p.cost = vec![-1.0, -2.0];
        p.add_row(vec![(0, 1.0), (1, 1.0)], 3.0, 3.0);
        p.add_row(vec![(0, 1.0), (1, -1.0)], 1.0, f64::INFINITY);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-9 && s.x[1].abs() < 1e-9);
        assert!((s.objective + 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut p = boxed(2, 1.0);
        p.add_row(vec![(0, 1.0), (1, 1.0)], 3.0, f64::INFINITY);
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);
        let mut p = boxed(2, 5.0);
        p.add_row(vec![(0, 1.0), (1, 1.0)], 3.0, f64::INFINITY);
        p.add_row(vec![(0, 1.0), (1, 1.0)], f64::NEG_INFINITY, 2.0);
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn warm_start_after_bound_change() {
        let mut p = boxed(3, 1.0);
        p.cost = vec![5.0, 4.0, 3.0];
        p.add_row(vec![(0, 2.0), (1, 3.0), (2, 1.0)], f64::NEG_INFINITY, 5.0);
        p.add_row(vec![(0, 4.0), (1, 1.0), (2, 2.0)], f64::NEG_INFINITY, 11.0);
        let mut s = DualSimplex::new(&p);
        assert_eq!(s.solve(), LpStatus::Optimal);
        let first = s.objective();
        s.set_bounds(0, 0.0, 0.0);
        assert_eq!(s.solve(), LpStatus::Optimal);
        let mut q = p.clone();
        q.upper[0] = 0.0;
        let fresh = solve_lp(&q);
        assert!((s.objective() - fresh.objective).abs() < 1e-9);
        assert!(s.objective() <= first + 1e-9);
        s.set_bounds(0, 0.0, 1.0);
        assert_eq!(s.solve(), LpStatus::Optimal);
        assert!((s.objective() - first).abs() < 1e-9);
    }

    #[test]
    fn duals_satisfy_complementarity() {
        let mut p = boxed(2, 10.0);
        p.cost = vec![3.0, 2.0];
        p.add_row(vec![(0, 1.0), (1, 1.0)], f64::NEG_INFINITY, 4.0);
        p.add_row(vec![(0, 1.0), (1, 3.0)], f64::NEG_INFINITY, 6.0);
        let s = solve_lp(&p);
        assert!((s.duals[0] - 3.0).abs() < 1e-9);
        assert!(s.duals[1].abs() < 1e-9);
        assert!(s.reduced_costs.iter().all(|r| r.abs() < 1e-9 || *r < 0.0));
    }
}
