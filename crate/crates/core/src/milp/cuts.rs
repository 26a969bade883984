//! Cycle consistency cuts.
//!
//! When every edge of a graph cycle is real, the intersection and
//! collinearity rows along the cycle need some minimum total slack `δ`
//! (zero for geometrically consistent cycles), while the collinearity rows
//! alone need `δ₀ ≤ δ`. The inequality
//! `(δ − δ₀) Σ b_e − Σ s ≤ (δ − δ₀)(|C| − 1) − δ₀` is therefore valid for the
//! model and leaves its optimum unchanged, but unlike the big-M rows it lets
//! the LP relaxation see the slack cost of closing an inconsistent cycle.

use std::collections::HashMap;

use crate::linegraph::LineGraph;

use super::model::{MilpModel, Sense, VarId, VarKind};
use super::simplex::{solve_lp, LpProblem, LpStatus};

/// Relative safety margin applied to the computed minimum slack.
const SAFETY: f64 = 1e-6;
const MIN_DELTA: f64 = 1e-9;
/// Cuts with a smaller coefficient are too weak to pay for their conditioning.
const MIN_CUT: f64 = 1e-5;

/// Simple cycles of length 3 to `max_len`, as edge index lists, each reported
/// once. Stops after `limit` cycles.
pub fn simple_cycles(g: &LineGraph, max_len: usize, limit: usize) -> Vec<Vec<usize>> {
    let adj = g.adjacency();
    let mut out = Vec::new();
    let mut on_path = vec![false; g.num_vertices()];
    for s in 0..g.num_vertices() {
        let mut verts = vec![s];
        let mut edges = Vec::new();
        on_path[s] = true;
        extend(&adj, s, max_len, limit, &mut verts, &mut edges, &mut on_path, &mut out);
        on_path[s] = false;
        if out.len() >= limit {
            out.truncate(limit);
            break;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    adj: &[Vec<(usize, usize)>],
    s: usize,
    max_len: usize,
    limit: usize,
    verts: &mut Vec<usize>,
    edges: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    let v = *verts.last().expect("path starts at s");
    for &(w, e) in &adj[v] {
        if out.len() >= limit {
            return;
        }
        if w == s && verts.len() >= 3 && verts[1] < v {
            let mut c = edges.clone();
            c.push(e);
            out.push(c);
        } else if w > s && !on_path[w] && verts.len() < max_len {
            on_path[w] = true;
            verts.push(w);
            edges.push(e);
            extend(adj, s, max_len, limit, verts, edges, on_path, out);
            edges.pop();
            verts.pop();
            on_path[w] = false;
        }
    }
}

/// Minimum total slack of the rows along `cycle`: first with every cycle
/// edge real, then with only the collinearity rows of its lines. Returns
/// `None` when there is no slack to trade or an LP fails.
pub fn cycle_min_slack(g: &LineGraph, model: &MilpModel, cycle: &[usize]) -> Option<CycleSlack> {
    let mut edge_rows = Vec::new();
    let mut verts = Vec::new();
    for er in model.layout.edge_rows.iter().filter(|r| cycle.contains(&r.edge)) {
        edge_rows.extend([er.row, er.row + 1]);
        verts.extend([g.edges[er.edge].i, g.edges[er.edge].j]);
    }
    verts.sort_unstable();
    verts.dedup();
    let mut line_rows = Vec::new();
    for lr in model.layout.line_rows.iter().filter(|r| verts.binary_search(&r.vertex).is_ok()) {
        line_rows.extend([lr.row, lr.row + 1]);
    }
    let fixed: Vec<usize> = cycle.iter().map(|&e| model.layout.edge_b[e].index).collect();
    let (closed, slacks) = min_slack(model, edge_rows.iter().chain(&line_rows).copied(), &fixed)?;
    let (open, _) = min_slack(model, line_rows.iter().copied(), &fixed)?;
    Some(CycleSlack { closed, open: open.min(closed), slacks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSlack {
    /// All cycle edges real.
    pub closed: f64,
    /// Collinearity rows alone.
    pub open: f64,
    /// Slack variables of the closed problem.
    pub slacks: Vec<VarId>,
}

/// Minimizes the sum of slacks over `rows`, with the booleans in `fixed` set to 1.
fn min_slack(model: &MilpModel, rows: impl Iterator<Item = usize>, fixed: &[usize]) -> Option<(f64, Vec<VarId>)> {
    let mut local: HashMap<usize, usize> = HashMap::new();
    let mut lp = LpProblem::new(0);
    let mut slacks = Vec::new();
    for r in rows {
        let c = &model.constraints[r];
        debug_assert_eq!(c.sense, Sense::Le);
        let mut rhs = c.rhs;
        let mut terms = Vec::with_capacity(c.terms.len());
        for &(v, a) in &c.terms {
            if fixed.contains(&v.index) {
                rhs -= a;
                continue;
            }
            let k = *local.entry(v.index).or_insert_with(|| {
                let var = &model.vars[v.index];
                lp.num_vars += 1;
                lp.lower.push(var.lower);
                lp.upper.push(var.upper);
                let slack = var.kind == VarKind::Slack;
                lp.cost.push(if slack { -1.0 } else { 0.0 });
                if slack {
                    slacks.push(v);
                }
                lp.num_vars - 1
            });
            terms.push((k, a));
        }
        lp.add_row(terms, f64::NEG_INFINITY, rhs);
    }
    if slacks.is_empty() {
        return None;
    }
    let sol = solve_lp(&lp);
    (sol.status == LpStatus::Optimal).then(|| (-sol.objective, slacks))
}

/// Adds one cut per cycle (up to `max_len` edges, at most `limit` cycles)
/// whose rows cannot all hold without slack. Returns the number added.
pub fn add_consistency_cuts(g: &LineGraph, model: &mut MilpModel, max_len: usize, limit: usize) -> usize {
    if !model.params.slacks || max_len < 3 {
        return 0;
    }
    let mut added = 0;
    for cycle in simple_cycles(g, max_len, limit) {
        let Some(cs) = cycle_min_slack(g, model, &cycle) else { continue };
        let open = (cs.open * (1.0 - SAFETY) - MIN_DELTA).max(0.0);
        let delta = cs.closed * (1.0 - SAFETY) - MIN_DELTA - open;
        if delta <= MIN_CUT {
            continue;
        }
        let mut terms: Vec<(VarId, f64)> = cycle.iter().map(|&e| (model.layout.edge_b[e], delta)).collect();
        terms.extend(cs.slacks.iter().map(|&s| (s, -1.0)));
        model.add_constraint(terms, Sense::Le, delta * (cycle.len() - 1) as f64 - open);
        added += 1;
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Direction, Point2H};
    use crate::linegraph::{IntersectionEdge, JunctionClass, LineSegment2D};

    fn graph(n: usize, edges: &[(usize, usize)]) -> LineGraph {
        let vertices = (0..n)
            .map(|k| LineSegment2D::new(k as u32, [0.0, 10.0 * k as f64], [5.0, 10.0 * k as f64], Direction::X).unwrap())
            .collect();
        let edges = edges
            .iter()
            .map(|&(i, j)| IntersectionEdge { i, j, point: Point2H::pixel(0.0, 0.0), junction: JunctionClass::L, weight: 1.0 })
            .collect();
        LineGraph { vertices, edges }
    }

    #[test]
    fn counts_cycles_of_complete_graph() {
        // K4: four triangles and three 4-cycles
        let g = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let c = simple_cycles(&g, 4, usize::MAX);
        assert_eq!(c.iter().filter(|c| c.len() == 3).count(), 4);
        assert_eq!(c.iter().filter(|c| c.len() == 4).count(), 3);
        assert_eq!(simple_cycles(&g, 3, usize::MAX).len(), 4);
        assert_eq!(simple_cycles(&g, 4, 2).len(), 2);
    }

    #[test]
    fn tree_has_no_cycles() {
        let g = graph(4, &[(0, 1), (1, 2), (1, 3)]);
        assert!(simple_cycles(&g, 6, usize::MAX).is_empty());
    }
}
