use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::constraints::{BoolRef, ConstraintSet};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Ray};
use crate::linegraph::LineGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    Lambda,
    Slack,
    BEdge,
    Pi,
    BBoundary,
}

impl VarKind {
    pub fn is_boolean(self) -> bool {
        matches!(self, VarKind::BEdge | VarKind::Pi | VarKind::BBoundary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub index: usize,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * values[v.index]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    pub name: String,
}

/// Model and solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Big-M constant; recomputed by [`build_model`] as `2 λ_max max|d|`.
    pub big_m: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Objective penalty per unit of slack.
    pub slack_penalty: f64,
    pub lambda_max: f64,
    /// Wall-clock budget for branch and bound, in seconds.
    pub time_budget: f64,
    /// Relative optimality gap at which the search stops.
    pub mip_gap: f64,
    pub slacks: bool,
    /// Emit big-M rows for all four endpoint pairs of an edge instead of the
    /// pair nearest the intersection.
    pub strict_eq4: bool,
    pub workers: usize,
    /// Longest graph cycle given a consistency cut; below 3 disables cuts.
    pub cut_cycle_len: usize,
    /// Cap on the number of cycles examined for cuts.
    pub cut_limit: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            big_m: 2e4,
            mu1: 0.5,
            mu2: 10.0,
            slack_penalty: 300.0,
            lambda_max: 1e4,
            time_budget: 300.0,
            mip_gap: 1e-6,
            slacks: true,
            strict_eq4: false,
            workers: 1,
            cut_cycle_len: 6,
            cut_limit: 20_000,
        }
    }
}

impl ModelParams {
    pub fn time_budget(&self) -> Duration {
        Duration::from_secs_f64(self.time_budget.max(0.0))
    }
}

/// One big-M intersection row pair: `|λ_ia d_iaα − λ_jb d_jbα| ≤ L(1 − b) + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRow {
    pub edge: usize,
    /// Endpoint index (0 or 1) on `i` and on `j`.
    pub a: usize,
    pub b: usize,
    pub axis: Direction,
    pub slack: Option<VarId>,
    /// Index of the first of the two rows in `MilpModel::constraints`.
    pub row: usize,
}

/// Per-line collinearity row pair: `|λ_i1 d_i1β − λ_i2 d_i2β| ≤ s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineRow {
    pub vertex: usize,
    pub axis: Direction,
    pub slack: Option<VarId>,
    pub row: usize,
}

/// Where each graph quantity lives in the model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelLayout {
    pub lambda: Vec<[VarId; 2]>,
    pub edge_b: Vec<VarId>,
    pub pi: Vec<[VarId; 2]>,
    pub boundary: Vec<VarId>,
    pub edge_rows: Vec<EdgeRow>,
    pub line_rows: Vec<LineRow>,
    /// Rows contributed by the constraint generators start here.
    pub combinatorial_rows: std::ops::Range<usize>,
    /// Cycle consistency cuts.
    pub cut_rows: std::ops::Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    /// Maximized: `objective_constant + Σ coef · var`.
    pub objective: Vec<(VarId, f64)>,
    pub objective_constant: f64,
    pub params: ModelParams,
    pub layout: ModelLayout,
}

impl MilpModel {
    pub fn empty(params: ModelParams) -> Self {
        Self {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            params,
            layout: ModelLayout::default(),
        }
    }

    pub fn add_var(&mut self, kind: VarKind, lower: f64, upper: f64, name: impl Into<String>) -> VarId {
        let id = VarId { index: self.vars.len(), kind };
        self.vars.push(Variable { kind, lower, upper, integer: kind.is_boolean(), name: name.into() });
        id
    }

    pub fn add_constraint(&mut self, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> usize {
        self.constraints.push(LinearConstraint { terms, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_booleans(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    pub fn var_id(&self, index: usize) -> VarId {
        VarId { index, kind: self.vars[index].kind }
    }

    pub fn vars_of_kind(&self, kind: VarKind) -> impl Iterator<Item = VarId> + '_ {
        self.vars.iter().enumerate().filter(move |(_, v)| v.kind == kind).map(|(i, v)| VarId { index: i, kind: v.kind })
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|(v, c)| c * values[v.index]).sum::<f64>()
    }

    /// Largest row or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Checks structural invariants: declared ids, finite coefficients, no
    /// duplicate terms, boolean bounds.
    pub fn validate(&self) -> Result<()> {
        for (k, v) in self.vars.iter().enumerate() {
            if v.integer && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(Error::ModelConstruction(format!("boolean {k} has bounds [{}, {}]", v.lower, v.upper)));
            }
            if !(v.lower <= v.upper) || !v.lower.is_finite() || !v.upper.is_finite() {
                return Err(Error::ModelConstruction(format!("variable {k} has bounds [{}, {}]", v.lower, v.upper)));
            }
        }
        let check = |id: &VarId, what: &str| -> Result<()> {
            match self.vars.get(id.index) {
                Some(v) if v.kind == id.kind => Ok(()),
                _ => Err(Error::ModelConstruction(format!("{what} references undeclared variable {id:?}"))),
            }
        };
        for (r, c) in self.constraints.iter().enumerate() {
            let mut seen: Vec<usize> = Vec::with_capacity(c.terms.len());
            for (id, coef) in &c.terms {
                check(id, &format!("row {r}"))?;
                if !coef.is_finite() {
                    return Err(Error::ModelConstruction(format!("row {r} has non-finite coefficient")));
                }
                if seen.contains(&id.index) {
                    return Err(Error::ModelConstruction(format!("row {r} repeats variable {}", id.index)));
                }
                seen.push(id.index);
            }
            if !c.rhs.is_finite() {
                return Err(Error::ModelConstruction(format!("row {r} has non-finite rhs")));
            }
        }
        for (id, _) in &self.objective {
            check(id, "objective")?;
        }
        Ok(())
    }
}

fn nearest_endpoint(g: &LineGraph, v: usize, point: [f64; 2]) -> usize {
    let l = &g.vertices[v];
    let da = (l.a()[0] - point[0]).hypot(l.a()[1] - point[1]);
    let db = (l.b()[0] - point[0]).hypot(l.b()[1] - point[1]);
    if db < da {
        1
    } else {
        0
    }
}

/// Assembles the full reconstruction program:
///
/// * `λ_ia ∈ [1, λ_max]` per endpoint,
/// * big-M rows per edge on the axis perpendicular to both lines,
/// * two slacked rows per line per non-line axis (collinearity),
/// * every cycle, planarity and boundary row of `cons`,
/// * objective `Σ w_ij b_ij + μ1 Σ π + μ2 Σ (1 − B_i) − μ_s Σ s`.
pub fn build_model(g: &LineGraph, rays: &[[Ray; 2]], cons: &ConstraintSet, params: &ModelParams) -> Result<MilpModel> {
    if rays.len() != g.num_vertices() {
        return Err(Error::ModelConstruction(format!(
            "{} ray pairs for {} vertices",
            rays.len(),
            g.num_vertices()
        )));
    }
    if !(params.lambda_max >= 1.0) {
        return Err(Error::ModelConstruction("lambda_max must be at least 1".into()));
    }
    if params.mu1 < 0.0 || params.mu2 < 0.0 || params.slack_penalty < 0.0 {
        return Err(Error::ModelConstruction("objective weights must be nonnegative".into()));
    }
    let max_comp = rays.iter().flatten().map(Ray::max_component).fold(0.0, f64::max).max(1.0);
    let big_m = 2.0 * params.lambda_max * max_comp;
    let mut params = params.clone();
    params.big_m = big_m;
    let slack_max = big_m;
    let mut m = MilpModel::empty(params.clone());

    for v in 0..g.num_vertices() {
        let id = g.vertices[v].id;
        let l1 = m.add_var(VarKind::Lambda, 1.0, params.lambda_max, format!("lam_{id}_1"));
        let l2 = m.add_var(VarKind::Lambda, 1.0, params.lambda_max, format!("lam_{id}_2"));
        m.layout.lambda.push([l1, l2]);
    }
    for (k, e) in g.edges.iter().enumerate() {
        if e.i >= e.j || e.j >= g.num_vertices() {
            return Err(Error::ModelConstruction(format!("edge {k} has invalid endpoints ({}, {})", e.i, e.j)));
        }
        let (a, b) = (g.vertices[e.i].id, g.vertices[e.j].id);
        let var = m.add_var(VarKind::BEdge, 0.0, 1.0, format!("b_{a}_{b}"));
        m.layout.edge_b.push(var);
        m.objective.push((var, e.weight));
    }
    for (p, pair) in cons.planarity.pairs.iter().enumerate() {
        let (k, l) = (g.vertices[pair.k].id, g.vertices[pair.l].id);
        let e = m.add_var(VarKind::Pi, 0.0, 1.0, format!("pi_{k}_{l}_{}", pair.axes[0]));
        let f = m.add_var(VarKind::Pi, 0.0, 1.0, format!("pi_{k}_{l}_{}", pair.axes[1]));
        let _ = p;
        m.layout.pi.push([e, f]);
    }
    for bv in &cons.boundary.vars {
        if bv.i >= g.num_vertices() {
            return Err(Error::ModelConstruction(format!("boundary variable for missing vertex {}", bv.i)));
        }
        let var = m.add_var(VarKind::BBoundary, 0.0, 1.0, format!("B_{}", g.vertices[bv.i].id));
        m.layout.boundary.push(var);
    }

    let mut slack_count = 0usize;
    let mut new_slack = |m: &mut MilpModel| -> Option<VarId> {
        if !m.params.slacks {
            return None;
        }
        slack_count += 1;
        let s = m.add_var(VarKind::Slack, 0.0, slack_max, format!("s_{}", slack_count - 1));
        m.objective.push((s, -m.params.slack_penalty));
        Some(s)
    };

    // intersection rows
    for (k, e) in g.edges.iter().enumerate() {
        let (di, dj) = (g.direction(e.i), g.direction(e.j));
        let axis = Direction::third(di, dj)
            .ok_or_else(|| Error::ModelConstruction(format!("edge {k} joins two {di}-lines")))?;
        let pairs: Vec<(usize, usize)> = if params.strict_eq4 {
            vec![(0, 0), (0, 1), (1, 0), (1, 1)]
        } else {
            let p = e.point_px();
            vec![(nearest_endpoint(g, e.i, p), nearest_endpoint(g, e.j, p))]
        };
        let b = m.layout.edge_b[k];
        for (a, bb) in pairs {
            let ci = rays[e.i][a].component(axis);
            let cj = rays[e.j][bb].component(axis);
            let li = m.layout.lambda[e.i][a];
            let lj = m.layout.lambda[e.j][bb];
            let slack = new_slack(&mut m);
            let row = m.constraints.len();
            for sign in [1.0, -1.0] {
                let mut terms = vec![(li, sign * ci), (lj, -sign * cj), (b, big_m)];
                if let Some(s) = slack {
                    terms.push((s, -1.0));
                }
                m.add_constraint(terms, Sense::Le, big_m);
            }
            m.layout.edge_rows.push(EdgeRow { edge: k, a, b: bb, axis, slack, row });
        }
    }

    // collinearity rows
    for v in 0..g.num_vertices() {
        for axis in g.direction(v).others() {
            let c1 = rays[v][0].component(axis);
            let c2 = rays[v][1].component(axis);
            let [l1, l2] = m.layout.lambda[v];
            let slack = new_slack(&mut m);
            let row = m.constraints.len();
            for sign in [1.0, -1.0] {
                let mut terms = vec![(l1, sign * c1), (l2, -sign * c2)];
                if let Some(s) = slack {
                    terms.push((s, -1.0));
                }
                m.add_constraint(terms, Sense::Le, 0.0);
            }
            m.layout.line_rows.push(LineRow { vertex: v, axis, slack, row });
        }
    }

    let resolve = |m: &MilpModel, r: &BoolRef| -> Result<VarId> {
        let missing = || Error::ModelConstruction(format!("constraint references unknown variable {r:?}"));
        match *r {
            BoolRef::Edge(k) => m.layout.edge_b.get(k).copied().ok_or_else(missing),
            BoolRef::Pi { pair, slot } if slot < 2 => m.layout.pi.get(pair).map(|p| p[slot]).ok_or_else(missing),
            BoolRef::Pi { .. } => Err(missing()),
            BoolRef::Boundary(k) => m.layout.boundary.get(k).copied().ok_or_else(missing),
        }
    };

    let start = m.constraints.len();
    for row in cons.rows() {
        let terms = row.terms.iter().map(|(r, c)| Ok((resolve(&m, r)?, *c))).collect::<Result<Vec<_>>>()?;
        m.add_constraint(terms, row.sense, row.rhs);
    }
    m.layout.combinatorial_rows = start..m.constraints.len();

    for obj in [&cons.planarity.objective, &cons.boundary.objective] {
        m.objective_constant += obj.constant;
        for (r, c) in &obj.terms {
            let id = resolve(&m, r)?;
            m.objective.push((id, *c));
        }
    }
    let start = m.constraints.len();
    super::cuts::add_consistency_cuts(g, &mut m, params.cut_cycle_len, params.cut_limit);
    m.layout.cut_rows = start..m.constraints.len();
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{ConstraintConfig, ConstraintFlags};
    use crate::geometry::{backproject, CameraIntrinsics, WorldRotation};
    use crate::linegraph::{build_line_graph, GraphConfig, LineSegment2D};
    use Direction::*;

    fn rays_for(g: &LineGraph) -> Vec<[Ray; 2]> {
        let cam = CameraIntrinsics::from_focal(500.0, 320.0, 240.0, 640, 480).unwrap();
        let rot = WorldRotation::identity();
        g.vertices
            .iter()
            .map(|l| [backproject(&cam, &rot, &l.p1).unwrap(), backproject(&cam, &rot, &l.p2).unwrap()])
            .collect()
    }

    #[test]
    fn single_edge_constrains_third_axis() {
        let lines = [
            LineSegment2D::new(0, [100.0, 100.0], [200.0, 100.0], X).unwrap(),
            LineSegment2D::new(1, [200.0, 100.0], [200.0, 200.0], Y).unwrap(),
        ];
        let g = build_line_graph(&lines, &GraphConfig::default());
        assert_eq!(g.num_edges(), 1);
        let cons = ConstraintSet::generate(&g, &ConstraintConfig::default());
        let m = build_model(&g, &rays_for(&g), &cons, &ModelParams::default()).unwrap();
        assert_eq!(m.vars_of_kind(VarKind::BEdge).count(), 1);
        assert_eq!(m.layout.edge_rows.len(), 1);
        let er = m.layout.edge_rows[0];
        assert_eq!(er.axis, Z);
        // nearest endpoints to (200, 100): end 2 of line 0, end 1 of line 1
        assert_eq!((er.a, er.b), (1, 0));
        assert_eq!(m.params.big_m, 2.0 * 1e4);
    }

    #[test]
    fn no_edges_model() {
        let lines = [
            LineSegment2D::new(0, [100.0, 100.0], [200.0, 100.0], X).unwrap(),
            LineSegment2D::new(1, [400.0, 300.0], [400.0, 400.0], Y).unwrap(),
        ];
        let g = build_line_graph(&lines, &GraphConfig::default());
        let cons = ConstraintSet::generate(&g, &ConstraintConfig::default());
        let m = build_model(&g, &rays_for(&g), &cons, &ModelParams::default()).unwrap();
        assert_eq!(m.num_booleans(), 0);
        assert_eq!(m.constraints.len(), 4 * 2);
        assert_eq!(m.objective_constant, 10.0 * 2.0);
    }

    #[test]
    fn strict_mode_emits_four_pairs() {
        let lines = [
            LineSegment2D::new(0, [100.0, 100.0], [200.0, 100.0], X).unwrap(),
            LineSegment2D::new(1, [200.0, 100.0], [200.0, 200.0], Y).unwrap(),
        ];
        let g = build_line_graph(&lines, &GraphConfig::default());
        let cons = ConstraintSet::generate(&g, &ConstraintConfig { flags: ConstraintFlags::NONE, ..Default::default() });
        let params = ModelParams { strict_eq4: true, ..Default::default() };
        let m = build_model(&g, &rays_for(&g), &cons, &params).unwrap();
        assert_eq!(m.layout.edge_rows.len(), 4);
        assert_eq!(m.constraints.len(), 8 + 8);
    }

    #[test]
    fn inconsistent_ids_rejected() {
        let lines = [
            LineSegment2D::new(0, [100.0, 100.0], [200.0, 100.0], X).unwrap(),
            LineSegment2D::new(1, [200.0, 100.0], [200.0, 200.0], Y).unwrap(),
        ];
        let g = build_line_graph(&lines, &GraphConfig::default());
        let mut cons = ConstraintSet::generate(&g, &ConstraintConfig::default());
        cons.boundary.rows.push(crate::constraints::BoolRow::le(vec![(BoolRef::Edge(7), 1.0)], 1.0));
        assert!(matches!(
            build_model(&g, &rays_for(&g), &cons, &ModelParams::default()),
            Err(Error::ModelConstruction(_))
        ));
        assert!(build_model(&g, &rays_for(&g)[..1], &ConstraintSet::default(), &ModelParams::default()).is_err());
    }
}
