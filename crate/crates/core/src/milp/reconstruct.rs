use serde::{Deserialize, Serialize};

use super::bnb::{Solution, SolveStatus};
use super::model::MilpModel;
use crate::geometry::{Direction, Ray};
use crate::linegraph::LineGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line3D {
    pub id: u32,
    pub direction: Direction,
    pub p1: [f64; 3],
    pub p2: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDecision {
    /// Line ids, `i < j` in vertex order.
    pub i: u32,
    pub j: u32,
    pub real: bool,
    pub weight: f64,
}

/// Solver output mapped back onto the line graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub status: SolveStatus,
    pub objective: f64,
    pub bound: f64,
    /// Line ids of the reconstructed component.
    pub component: Vec<u32>,
    pub lines: Vec<Line3D>,
    pub edges: Vec<EdgeDecision>,
    /// Total slack used by the solution.
    pub slack_total: f64,
}

impl Reconstruction {
    pub fn num_real(&self) -> usize {
        self.edges.iter().filter(|e| e.real).count()
    }

    pub fn line(&self, id: u32) -> Option<&Line3D> {
        self.lines.iter().find(|l| l.id == id)
    }
}

/// Builds 3D endpoints `P = λ d`, rescaled so the smallest depth is 1, and
/// collects the edge decisions.
pub fn extract_reconstruction(g: &LineGraph, rays: &[[Ray; 2]], model: &MilpModel, sol: &Solution) -> Reconstruction {
    if sol.status == SolveStatus::Infeasible || sol.values.is_empty() {
        return Reconstruction {
            status: sol.status,
            objective: sol.objective,
            bound: sol.bound,
            component: g.vertices.iter().map(|l| l.id).collect(),
            lines: Vec::new(),
            edges: Vec::new(),
            slack_total: 0.0,
        };
    }
    let lam = &model.layout.lambda;
    let min_lambda = lam.iter().flatten().map(|v| sol.value(*v)).fold(f64::INFINITY, f64::min);
    let scale = if min_lambda.is_finite() && min_lambda > 0.0 { 1.0 / min_lambda } else { 1.0 };
    let point = |v: usize, a: usize| -> [f64; 3] {
        let p = rays[v][a].d() * (sol.value(lam[v][a]) * scale);
        [p.x, p.y, p.z]
    };
    let lines = g
        .vertices
        .iter()
        .enumerate()
        .map(|(v, l)| Line3D { id: l.id, direction: l.direction, p1: point(v, 0), p2: point(v, 1) })
        .collect();
    let edges = g
        .edges
        .iter()
        .zip(&model.layout.edge_b)
        .map(|(e, b)| EdgeDecision {
            i: g.vertices[e.i].id,
            j: g.vertices[e.j].id,
            real: sol.is_set(*b),
            weight: e.weight,
        })
        .collect();
    let slack_total = model.vars_of_kind(super::model::VarKind::Slack).map(|s| sol.value(s)).sum();
    Reconstruction {
        status: sol.status,
        objective: sol.objective,
        bound: sol.bound,
        component: g.vertices.iter().map(|l| l.id).collect(),
        lines,
        edges,
        slack_total,
    }
}
