//! Combinatorial feasibility constraints over the line graph: cycle bounds,
//! Manhattan-plane (planarity) coupling and boundary-line limits.
//!
//! Rows here are expressed over [`BoolRef`]s rather than model variable ids;
//! [`crate::milp::build_model`] resolves them.

use serde::{Deserialize, Serialize};

use crate::geometry::Direction;
use crate::linegraph::LineGraph;
use crate::milp::Sense;

/// Boolean referenced by a combinatorial row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoolRef {
    /// Intersection indicator of graph edge `k`.
    Edge(usize),
    /// Plane indicator `slot` (0 or 1, matching `PlanarityPair::axes`) of pair `pair`.
    Pi { pair: usize, slot: usize },
    /// Boundary indicator of the `k`-th [`BoundaryVar`].
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoolRow {
    pub terms: Vec<(BoolRef, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl BoolRow {
    pub fn le(terms: Vec<(BoolRef, f64)>, rhs: f64) -> Self {
        Self { terms, sense: Sense::Le, rhs }
    }
}

/// Constant plus linear terms, to be maximized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectiveTerm {
    pub constant: f64,
    pub terms: Vec<(BoolRef, f64)>,
}

/// Upper bound on simultaneously real intersections around a 3- or 4-cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleConstraint {
    /// Cycle vertices in traversal order.
    pub vertices: Vec<usize>,
    /// `edges[t]` joins `vertices[t]` and `vertices[t + 1]` (cyclically).
    pub edges: Vec<usize>,
    pub bound: usize,
}

impl CycleConstraint {
    pub fn row(&self) -> BoolRow {
        BoolRow::le(self.edges.iter().map(|&e| (BoolRef::Edge(e), 1.0)).collect(), self.bound as f64)
    }
}

/// Two same-direction lines that may span a Manhattan plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarityPair {
    pub k: usize,
    pub l: usize,
    /// The two plane orientations, in x-y-z order; slot `s` of the pair's
    /// indicator means "plane contains `axes[s]`".
    pub axes: [Direction; 2],
    /// Common neighbors of `k` and `l`.
    pub witnesses: Vec<usize>,
}

impl PlanarityPair {
    pub fn slot_of(&self, axis: Direction) -> Option<usize> {
        self.axes.iter().position(|&a| a == axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryVar {
    pub i: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanarityConstraints {
    pub pairs: Vec<PlanarityPair>,
    pub rows: Vec<BoolRow>,
    pub objective: ObjectiveTerm,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryConstraints {
    pub vars: Vec<BoundaryVar>,
    pub rows: Vec<BoolRow>,
    pub objective: ObjectiveTerm,
}

/// Which constraint families to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintFlags {
    pub cycles: bool,
    pub planarity: bool,
    pub boundary: bool,
}

impl ConstraintFlags {
    pub const ALL: Self = Self { cycles: true, planarity: true, boundary: true };
    pub const NONE: Self = Self { cycles: false, planarity: false, boundary: false };
}

impl Default for ConstraintFlags {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintConfig {
    pub flags: ConstraintFlags,
    /// Planarity objective weight.
    pub mu1: f64,
    /// Boundary objective weight.
    pub mu2: f64,
    /// Pixel gap between two lines' bounding boxes beyond which no
    /// planarity pair is formed. `None` disables gating.
    pub planarity_max_gap_px: Option<f64>,
    /// Intersection points closer than this (pixels) count as one junction
    /// when deciding whether a cycle collapses to a corner.
    pub corner_radius_px: f64,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self { flags: ConstraintFlags::ALL, mu1: 0.5, mu2: 10.0, planarity_max_gap_px: None, corner_radius_px: 5.0 }
    }
}

/// Everything the constraint generators contribute to the model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub cycles: Vec<CycleConstraint>,
    pub planarity: PlanarityConstraints,
    pub boundary: BoundaryConstraints,
}

impl ConstraintSet {
    pub fn generate(g: &LineGraph, config: &ConstraintConfig) -> Self {
        let mut out = ConstraintSet::default();
        if config.flags.cycles {
            out.cycles = enumerate_3cycles(g);
            out.cycles.extend(enumerate_4cycles(g));
            out.cycles.retain(|c| !collapses_to_corner(g, c, config.corner_radius_px));
        }
        if config.flags.planarity {
            out.planarity = generate_planarity(g, config.mu1, config.planarity_max_gap_px);
        }
        if config.flags.boundary {
            out.boundary = generate_boundary(g, config.mu2);
        }
        out
    }

    pub fn num_rows(&self) -> usize {
        self.cycles.len() + self.planarity.rows.len() + self.boundary.rows.len()
    }

    /// All rows, cycles first.
    pub fn rows(&self) -> impl Iterator<Item = BoolRow> + '_ {
        self.cycles
            .iter()
            .map(CycleConstraint::row)
            .chain(self.planarity.rows.iter().cloned())
            .chain(self.boundary.rows.iter().cloned())
    }
}

/// Every triangle of the graph. Labels are necessarily x, y, z since edges
/// never join equal directions; at most two of its intersections can be real.
pub fn enumerate_3cycles(g: &LineGraph) -> Vec<CycleConstraint> {
    let adj = g.adjacency();
    let mut out = Vec::new();
    for (e_ij, e) in g.edges.iter().enumerate() {
        let (i, j) = (e.i, e.j);
        for &(k, e_jk) in adj[j].iter().filter(|(k, _)| *k > j) {
            if let Some(e_ik) = g.edge_between(i, k) {
                out.push(CycleConstraint { vertices: vec![i, j, k], edges: vec![e_ij, e_jk, e_ik], bound: 2 });
            }
        }
    }
    out.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    out
}

/// True when every line whose direction occurs once in the cycle meets its two
/// cycle neighbors at the same image point. The cycle can then close with zero
/// travel along those lines (three faces meeting at a corner, or two
/// collinear pieces of one edge), so the cycle bound does not apply.
pub fn collapses_to_corner(g: &LineGraph, c: &CycleConstraint, radius_px: f64) -> bool {
    let n = c.vertices.len();
    (0..n).all(|t| {
        let d = g.direction(c.vertices[t]);
        if c.vertices.iter().filter(|&&v| g.direction(v) == d).count() > 1 {
            return true;
        }
        let p = g.edges[c.edges[(t + n - 1) % n]].point_px();
        let q = g.edges[c.edges[t]].point_px();
        (p[0] - q[0]).hypot(p[1] - q[1]) <= radius_px
    })
}

/// Labels of a 4-cycle alternate between two axes (xyxy type).
pub fn is_alternating(labels: [Direction; 4]) -> bool {
    labels[0] == labels[2] && labels[1] == labels[3]
}

/// Every simple 4-cycle whose labels use all three axes (xyzy type).
/// Alternating cycles can be fully realized by a planar rectangle, so they
/// get no row.
pub fn enumerate_4cycles(g: &LineGraph) -> Vec<CycleConstraint> {
    let adj = g.adjacency();
    let mut out = Vec::new();
    for v0 in 0..g.num_vertices() {
        let nbrs: Vec<(usize, usize)> = adj[v0].iter().copied().filter(|&(w, _)| w > v0).collect();
        for (a, &(v1, e01)) in nbrs.iter().enumerate() {
            for &(v3, e30) in &nbrs[a + 1..] {
                for &(v2, e12) in adj[v1].iter().filter(|&&(w, _)| w > v0 && w != v3) {
                    let Some(e23) = g.edge_between(v2, v3) else { continue };
                    let labels = [g.direction(v0), g.direction(v1), g.direction(v2), g.direction(v3)];
                    if is_alternating(labels) {
                        continue;
                    }
                    out.push(CycleConstraint {
                        vertices: vec![v0, v1, v2, v3],
                        edges: vec![e01, e12, e23, e30],
                        bound: 3,
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    out
}

fn bbox_gap(g: &LineGraph, a: usize, b: usize) -> f64 {
    let bb = |v: usize| {
        let (p, q) = (g.vertices[v].a(), g.vertices[v].b());
        [p[0].min(q[0]), p[1].min(q[1]), p[0].max(q[0]), p[1].max(q[1])]
    };
    let (r, s) = (bb(a), bb(b));
    let dx = (r[0] - s[2]).max(s[0] - r[2]).max(0.0);
    let dy = (r[1] - s[3]).max(s[1] - r[3]).max(0.0);
    dx.hypot(dy)
}

/// Plane indicators for same-direction pairs with at least one common
/// neighbor, and the rows tying them to the pair's intersections:
///
/// * `π_e + π_f ≤ 1`
/// * for a common neighbor `m` of direction `e`:
///   `π_e + b_km ≤ 1 + b_lm`, `π_e + b_lm ≤ 1 + b_km`, `π_f + b_km + b_lm ≤ 2`
pub fn generate_planarity(g: &LineGraph, mu1: f64, max_gap_px: Option<f64>) -> PlanarityConstraints {
    let adj = g.adjacency();
    let mut out = PlanarityConstraints::default();
    for k in 0..g.num_vertices() {
        for l in (k + 1)..g.num_vertices() {
            let d = g.direction(k);
            if g.direction(l) != d {
                continue;
            }
            if let Some(gap) = max_gap_px {
                if bbox_gap(g, k, l) > gap {
                    continue;
                }
            }
            // both adjacency lists are sorted by neighbor
            let mut witnesses = Vec::new();
            let (mut a, mut b) = (0, 0);
            while a < adj[k].len() && b < adj[l].len() {
                match adj[k][a].0.cmp(&adj[l][b].0) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        witnesses.push((adj[k][a].0, adj[k][a].1, adj[l][b].1));
                        a += 1;
                        b += 1;
                    }
                }
            }
            if witnesses.is_empty() {
                continue;
            }
            let pair_idx = out.pairs.len();
            let pair = PlanarityPair {
                k,
                l,
                axes: d.others(),
                witnesses: witnesses.iter().map(|w| w.0).collect(),
            };
            let pi = |slot| BoolRef::Pi { pair: pair_idx, slot };
            out.rows.push(BoolRow::le(vec![(pi(0), 1.0), (pi(1), 1.0)], 1.0));
            for &(m, e_km, e_lm) in &witnesses {
                let Some(se) = pair.slot_of(g.direction(m)) else { continue };
                let sf = 1 - se;
                let (bkm, blm) = (BoolRef::Edge(e_km), BoolRef::Edge(e_lm));
                out.rows.push(BoolRow::le(vec![(pi(se), 1.0), (bkm, 1.0), (blm, -1.0)], 1.0));
                out.rows.push(BoolRow::le(vec![(pi(se), 1.0), (blm, 1.0), (bkm, -1.0)], 1.0));
                out.rows.push(BoolRow::le(vec![(pi(sf), 1.0), (bkm, 1.0), (blm, 1.0)], 2.0));
            }
            out.objective.terms.push((pi(0), mu1));
            out.objective.terms.push((pi(1), mu1));
            out.pairs.push(pair);
        }
    }
    out
}

/// Boundary indicators for lines touching both other directions, with
/// `b_im + b_in ≤ 1 + B_i` for every cross-direction neighbor pair. The
/// objective rewards non-boundary lines: `μ2 Σ (1 − B_i)` over all vertices.
pub fn generate_boundary(g: &LineGraph, mu2: f64) -> BoundaryConstraints {
    let adj = g.adjacency();
    let mut out = BoundaryConstraints {
        objective: ObjectiveTerm { constant: mu2 * g.num_vertices() as f64, terms: Vec::new() },
        ..Default::default()
    };
    for i in 0..g.num_vertices() {
        let [da, db] = g.direction(i).others();
        let group = |d: Direction| -> Vec<usize> {
            adj[i].iter().filter(|(w, _)| g.direction(*w) == d).map(|&(_, e)| e).collect()
        };
        let (ga, gb) = (group(da), group(db));
        if ga.is_empty() || gb.is_empty() {
            continue;
        }
        let var = BoolRef::Boundary(out.vars.len());
        out.vars.push(BoundaryVar { i });
        for &em in &ga {
            for &en in &gb {
                out.rows.push(BoolRow::le(vec![(BoolRef::Edge(em), 1.0), (BoolRef::Edge(en), 1.0), (var, -1.0)], 1.0));
            }
        }
        out.objective.terms.push((var, -mu2));
    }
    out
}
