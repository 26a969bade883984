use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{MilpModel, Sense, VarId};
use super::simplex::{BasisSnapshot, DualSimplex, LpProblem, LpSolution, LpStatus};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    /// Time budget exhausted; the best solution found so far is returned.
    BudgetIncumbent,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::BudgetIncumbent => "BUDGET_INCUMBENT",
            SolveStatus::Infeasible => "INFEASIBLE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Proven upper bound on the optimum.
    pub bound: f64,
    pub solve_time: Duration,
    pub nodes: usize,
}

impl Solution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.index]
    }

    pub fn is_set(&self, v: VarId) -> bool {
        self.values[v.index] > 0.5
    }

    fn infeasible(start: Instant, nodes: usize) -> Self {
        Self {
            values: Vec::new(),
            objective: f64::NEG_INFINITY,
            status: SolveStatus::Infeasible,
            bound: f64::NEG_INFINITY,
            solve_time: start.elapsed(),
            nodes,
        }
    }
}

/// Seam for plugging in other MILP engines.
pub trait SolverBackend {
    fn name(&self) -> &str;
    fn solve(&self, model: &MilpModel) -> Result<Solution>;
}

/// Best-bound branch and bound over the warm-started dual simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchAndBound {
    pub int_tol: f64,
    /// Run the rounding heuristic every this many processed nodes.
    pub heuristic_every: usize,
    pub node_limit: Option<usize>,
}

impl Default for BranchAndBound {
    fn default() -> Self {
        Self { int_tol: 1e-6, heuristic_every: 50, node_limit: None }
    }
}

impl SolverBackend for BranchAndBound {
    fn name(&self) -> &str {
        "branch-and-bound"
    }

    fn solve(&self, model: &MilpModel) -> Result<Solution> {
        model.validate()?;
        Ok(self.run(model))
    }
}

/// Solves with the built-in backend.
pub fn solve(model: &MilpModel) -> Result<Solution> {
    BranchAndBound::default().solve(model)
}

/// Continuous relaxation of `model`.
pub fn to_lp(model: &MilpModel) -> LpProblem {
    let mut p = LpProblem::new(model.num_vars());
    for (k, v) in model.vars.iter().enumerate() {
        p.lower[k] = v.lower;
        p.upper[k] = v.upper;
    }
    for (id, c) in &model.objective {
        p.cost[id.index] += c;
    }
    for c in &model.constraints {
        let terms = c.terms.iter().map(|(v, a)| (v.index, *a)).collect();
        let (lo, hi) = match c.sense {
            Sense::Le => (f64::NEG_INFINITY, c.rhs),
            Sense::Ge => (c.rhs, f64::INFINITY),
            Sense::Eq => (c.rhs, c.rhs),
        };
        p.add_row(terms, lo, hi);
    }
    p
}

/// Re-solves the continuous part with the booleans of `x` substituted into
/// the rows. Row equilibration in the search scales big-M rows by their
/// boolean coefficient, which loosens the feasibility tolerance on the other
/// terms; without the booleans the rows are scaled by their own terms.
fn polish(model: &MilpModel, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let mut p = to_lp(model);
    let fixed: Vec<Option<f64>> = model.vars.iter().zip(x).map(|(v, &xv)| v.integer.then(|| xv.round())).collect();
    for (j, f) in fixed.iter().enumerate() {
        if let Some(v) = *f {
            p.lower[j] = v;
            p.upper[j] = v;
        }
    }
    for r in 0..p.rows.len() {
        let shift: f64 = p.rows[r].iter().filter_map(|&(j, a)| fixed[j].map(|v| a * v)).sum();
        p.rows[r].retain(|&(j, _)| fixed[j].is_none());
        p.row_lower[r] -= shift;
        p.row_upper[r] -= shift;
    }
    let mut lp = DualSimplex::new(&p);
    if lp.solve() != LpStatus::Optimal {
        return None;
    }
    let mut values = lp.x().to_vec();
    for (j, f) in fixed.iter().enumerate() {
        if let Some(v) = *f {
            values[j] = v;
        }
    }
    Some((model.objective_value(&values), values))
}

/// Solves the LP relaxation; the objective includes the model constant.
pub fn solve_relaxation(model: &MilpModel) -> LpSolution {
    let mut s = DualSimplex::new(&to_lp(model));
    let status = s.solve();
    let mut sol = s.solution(status);
    sol.objective += model.objective_constant;
    sol
}

struct Fix {
    var: u32,
    value: bool,
    parent: Option<Arc<Fix>>,
}

struct Node {
    bound: f64,
    depth: usize,
    id: u64,
    fixes: Option<Arc<Fix>>,
    origin: Option<Origin>,
    /// Parent's optimal basis, reloaded when the node does not continue a plunge.
    warm: Option<Arc<BasisSnapshot>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

/// Per-variable average objective loss per unit of rounding, by direction.
struct Pseudocosts {
    sum: Vec<[f64; 2]>,
    count: Vec<[u32; 2]>,
    prior: Vec<f64>,
}

impl Pseudocosts {
    fn new(cost: &[f64]) -> Self {
        let n = cost.len();
        Self { sum: vec![[0.0; 2]; n], count: vec![[0; 2]; n], prior: cost.iter().map(|c| c.abs().max(1e-6)).collect() }
    }

    fn get(&self, j: usize, up: bool) -> f64 {
        let d = up as usize;
        if self.count[j][d] == 0 {
            self.prior[j]
        } else {
            self.sum[j][d] / self.count[j][d] as f64
        }
    }

    fn record(&mut self, j: usize, up: bool, loss_per_unit: f64) {
        let d = up as usize;
        self.sum[j][d] += loss_per_unit.max(0.0);
        self.count[j][d] += 1;
    }

    /// Product score; ties go to the lower index.
    fn select(&self, fractional: &[(usize, f64)]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for &(j, v) in fractional {
            let f = v - v.floor();
            let score = (f * self.get(j, false)).max(1e-6) * ((1.0 - f) * self.get(j, true)).max(1e-6);
            if best.is_none_or(|(_, _, s)| score > s * (1.0 + 1e-12)) {
                best = Some((j, v, score));
            }
        }
        best.map(|(j, v, _)| (j, v))
    }
}

/// How a node was created from its parent.
#[derive(Clone, Copy)]
struct Origin {
    var: usize,
    up: bool,
    /// Distance the variable was rounded.
    dist: f64,
    parent_objective: f64,
}

struct Worker {
    lp: DualSimplex,
    int_vars: Vec<usize>,
    root_lo: Vec<f64>,
    root_hi: Vec<f64>,
    constant: f64,
}

enum Outcome {
    Infeasible,
    Solved {
        objective: f64,
        /// Feasible integral point found at this node, if any.
        candidate: Option<(f64, Vec<f64>)>,
        /// Free integer variables with their relaxation values, branching candidates.
        fractional: Vec<(usize, f64)>,
        /// Optimal basis of the node relaxation.
        basis: Option<Arc<BasisSnapshot>>,
    },
}

impl Worker {
    fn apply(&mut self, fixes: &Option<Arc<Fix>>) {
        let mut lo = self.root_lo.clone();
        let mut hi = self.root_hi.clone();
        let mut cur = fixes.as_ref();
        while let Some(f) = cur {
            let v = if f.value { 1.0 } else { 0.0 };
            lo[f.var as usize] = v;
            hi[f.var as usize] = v;
            cur = f.parent.as_ref();
        }
        for &j in &self.int_vars {
            if self.lp.bounds(j) != (lo[j], hi[j]) {
                self.lp.set_bounds(j, lo[j], hi[j]);
            }
        }
    }

    /// Fixes every integer variable to `rounded` and solves for the rest.
    fn complete(&mut self, rounded: &[(usize, f64)]) -> Option<(f64, Vec<f64>)> {
        for &(j, v) in rounded {
            self.lp.set_bounds(j, v, v);
        }
        match self.lp.solve() {
            LpStatus::Optimal => {
                let mut x = self.lp.x().to_vec();
                for &(j, v) in rounded {
                    x[j] = v;
                }
                Some((self.lp.objective() + self.constant, x))
            }
            _ => None,
        }
    }

    fn round_heuristic(&mut self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let nearest: Vec<(usize, f64)> = self.int_vars.iter().map(|&j| (j, x[j].round().clamp(0.0, 1.0))).collect();
        let saved: Vec<(f64, f64)> = self.int_vars.iter().map(|&j| self.lp.bounds(j)).collect();
        let respect = |r: &mut Vec<(usize, f64)>| {
            for ((_, v), (lo, hi)) in r.iter_mut().zip(&saved) {
                *v = v.clamp(*lo, *hi);
            }
        };
        let mut nearest = nearest;
        respect(&mut nearest);
        let mut best = self.complete(&nearest);
        if best.is_none() {
            let mut floor: Vec<(usize, f64)> =
                self.int_vars.iter().map(|&j| (j, if x[j] > 1.0 - 1e-6 { 1.0 } else { 0.0 })).collect();
            respect(&mut floor);
            best = self.complete(&floor);
        }
        for (&j, (lo, hi)) in self.int_vars.iter().zip(&saved) {
            self.lp.set_bounds(j, *lo, *hi);
        }
        best
    }

    fn evaluate(&mut self, node: &Node, warm: bool, int_tol: f64, run_heuristic: bool, incumbent: f64, gap: f64) -> Outcome {
        self.apply(&node.fixes);
        if let (true, Some(b)) = (warm, &node.warm) {
            self.lp.load(b);
        }
        let mut status = self.lp.solve();
        if status == LpStatus::Failed {
            self.lp.reset();
            status = self.lp.solve();
        }
        let (objective, x) = match status {
            LpStatus::Infeasible => return Outcome::Infeasible,
            LpStatus::Optimal => (self.lp.objective() + self.constant, self.lp.x().to_vec()),
            LpStatus::Failed => {
                // no usable relaxation: keep the parent bound and split on a free integer
                let fractional = self
                    .int_vars
                    .iter()
                    .copied()
                    .find(|&j| {
                        let (lo, hi) = self.lp.bounds(j);
                        lo < hi
                    })
                    .map(|j| vec![(j, 0.5)])
                    .unwrap_or_default();
                return Outcome::Solved { objective: node.bound, candidate: None, fractional, basis: None };
            }
        };
        if objective <= incumbent + gap {
            return Outcome::Solved { objective, candidate: None, fractional: Vec::new(), basis: None };
        }
        let basis = Some(Arc::new(self.lp.snapshot()));
        let frac = |v: f64| (v - v.round()).abs();
        let integral = self.int_vars.iter().all(|&j| frac(x[j]) <= int_tol);
        let mut candidate = None;
        if integral {
            let rounded: Vec<(usize, f64)> = self.int_vars.iter().map(|&j| (j, x[j].round())).collect();
            let saved: Vec<(f64, f64)> = self.int_vars.iter().map(|&j| self.lp.bounds(j)).collect();
            candidate = self.complete(&rounded);
            for (&j, (lo, hi)) in self.int_vars.iter().zip(&saved) {
                self.lp.set_bounds(j, *lo, *hi);
            }
            let closed = candidate.as_ref().is_some_and(|(v, _)| *v >= objective - gap);
            if closed {
                return Outcome::Solved { objective, candidate, fractional: Vec::new(), basis: None };
            }
        } else if run_heuristic {
            candidate = self.round_heuristic(&x);
        }
        let tol = if integral { 1e-12 } else { int_tol };
        let fractional = self
            .int_vars
            .iter()
            .copied()
            .filter(|&j| {
                let (lo, hi) = self.lp.bounds(j);
                lo < hi && frac(x[j]) > tol
            })
            .map(|j| (j, x[j]))
            .collect();
        Outcome::Solved { objective, candidate, fractional, basis }
    }
}

impl BranchAndBound {
    fn run(&self, model: &MilpModel) -> Solution {
        let start = Instant::now();
        let budget = model.params.time_budget();
        let lp = to_lp(model);
        let int_vars: Vec<usize> = model.vars.iter().enumerate().filter(|(_, v)| v.integer).map(|(k, _)| k).collect();
        let root = Worker {
            lp: DualSimplex::new(&lp),
            int_vars,
            root_lo: lp.lower.clone(),
            root_hi: lp.upper.clone(),
            constant: model.objective_constant,
        };
        let nworkers = model.params.workers.max(1);
        let mut workers = vec![root];

        let mut incumbent: Option<(f64, Vec<f64>)> = None;
        let gap_of = |inc: &Option<(f64, Vec<f64>)>| match inc {
            Some((v, _)) => model.params.mip_gap * v.abs().max(1.0),
            None => 0.0,
        };
        let inc_value = |inc: &Option<(f64, Vec<f64>)>| inc.as_ref().map_or(f64::NEG_INFINITY, |(v, _)| *v);

        let mut heap = BinaryHeap::new();
        heap.push(Node { bound: f64::INFINITY, depth: 0, id: 0, fixes: None, origin: None, warm: None });
        let mut pseudo = Pseudocosts::new(&lp.cost);
        let mut next_id = 1u64;
        let mut processed = 0usize;
        let mut timed_out = false;
        let mut pruned_bound = f64::NEG_INFINITY;
        // depth-first plunge: the preferred child of the last branching
        let mut dives: Vec<Node> = Vec::new();

        while !heap.is_empty() || !dives.is_empty() {
            if start.elapsed() >= budget || self.node_limit.is_some_and(|l| processed >= l) {
                timed_out = true;
                break;
            }
            let gap = gap_of(&incumbent);
            let inc = inc_value(&incumbent);
            let mut batch = Vec::new();
            for n in dives.drain(..) {
                if n.bound > inc + gap && batch.len() < nworkers {
                    batch.push((n, nworkers > 1));
                } else if n.bound > inc + gap {
                    heap.push(n);
                } else {
                    pruned_bound = pruned_bound.max(n.bound);
                }
            }
            while batch.len() < nworkers {
                match heap.pop() {
                    Some(n) if n.bound > inc + gap => batch.push((n, true)),
                    Some(n) => {
                        pruned_bound = pruned_bound.max(n.bound);
                        heap.clear();
                        break;
                    }
                    None => break,
                }
            }
            if batch.is_empty() {
                break;
            }
            while workers.len() < batch.len() {
                let w = Worker {
                    lp: workers[0].lp.clone(),
                    int_vars: workers[0].int_vars.clone(),
                    root_lo: workers[0].root_lo.clone(),
                    root_hi: workers[0].root_hi.clone(),
                    constant: workers[0].constant,
                };
                workers.push(w);
            }
            let heuristic_flags: Vec<bool> = (0..batch.len())
                .map(|k| {
                    let n = processed + k;
                    n == 0 || (self.heuristic_every > 0 && n % self.heuristic_every == 0)
                })
                .collect();
            let int_tol = self.int_tol;
            let outcomes: Vec<Outcome> = if batch.len() == 1 {
                vec![workers[0].evaluate(&batch[0].0, batch[0].1, int_tol, heuristic_flags[0], inc, gap)]
            } else {
                workers
                    .par_iter_mut()
                    .zip(batch.par_iter())
                    .zip(heuristic_flags.par_iter())
                    .map(|((w, (n, warm)), &h)| w.evaluate(n, *warm, int_tol, h, inc, gap))
                    .collect()
            };
            processed += batch.len();

            for ((node, _), outcome) in batch.into_iter().zip(outcomes) {
                let Outcome::Solved { objective, candidate, fractional, basis } = outcome else {
                    continue;
                };
                if let Some(o) = node.origin {
                    if o.dist > 1e-9 && objective.is_finite() && o.parent_objective.is_finite() {
                        pseudo.record(o.var, o.up, (o.parent_objective - objective) / o.dist);
                    }
                }
                if let Some((v, x)) = candidate {
                    if v > inc_value(&incumbent) {
                        incumbent = Some((v, x));
                    }
                }
                let gap = gap_of(&incumbent);
                let bound = objective.min(node.bound);
                if bound <= inc_value(&incumbent) + gap {
                    pruned_bound = pruned_bound.max(bound);
                    continue;
                }
                if let Some((j, v)) = pseudo.select(&fractional) {
                    let up_first = v >= 0.5;
                    for value in [up_first, !up_first] {
                        let dist = if value { v.ceil() - v } else { v - v.floor() };
                        let child = Node {
                            bound,
                            depth: node.depth + 1,
                            id: next_id,
                            fixes: Some(Arc::new(Fix { var: j as u32, value, parent: node.fixes.clone() })),
                            origin: Some(Origin { var: j, up: value, dist, parent_objective: objective }),
                            warm: basis.clone(),
                        };
                        next_id += 1;
                        if value == up_first {
                            dives.push(child);
                        } else {
                            heap.push(child);
                        }
                    }
                }
            }
        }

        heap.extend(dives);
        let open_bound = heap.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
        let incumbent = incumbent.map(|(v, x)| polish(model, &x).unwrap_or((v, x)));
        match incumbent {
            None if !timed_out => Solution::infeasible(start, processed),
            None => {
                // budget ran out before any integral point: fall back to rounding the root
                let w = &mut workers[0];
                w.apply(&None);
                let fallback = match w.lp.solve() {
                    LpStatus::Optimal => {
                        let x = w.lp.x().to_vec();
                        w.round_heuristic(&x)
                    }
                    _ => None,
                };
                match fallback.map(|(v, x)| polish(model, &x).unwrap_or((v, x))) {
                    Some((v, x)) => Solution {
                        values: x,
                        objective: v,
                        status: SolveStatus::BudgetIncumbent,
                        bound: open_bound.max(v),
                        solve_time: start.elapsed(),
                        nodes: processed,
                    },
                    None => Solution::infeasible(start, processed),
                }
            }
            Some((v, x)) => {
                let gap = gap_of(&Some((v, Vec::new())));
                let optimal = !timed_out || open_bound <= v + gap;
                Solution {
                    values: x,
                    objective: v,
                    status: if optimal { SolveStatus::Optimal } else { SolveStatus::BudgetIncumbent },
                    bound: if optimal { v.max(pruned_bound.min(v + gap)) } else { open_bound.max(v) },
                    solve_time: start.elapsed(),
                    nodes: processed,
                }
            }
        }
    }
}
