//! Line graph: labeled segments as vertices, candidate 2D intersections as
//! weighted edges.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Point2H, Segment2};

/// Image segment with a Manhattan direction label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment2D {
    pub id: u32,
    pub p1: Point2H,
    pub p2: Point2H,
    pub direction: Direction,
}

impl LineSegment2D {
    pub fn new(id: u32, p1: [f64; 2], p2: [f64; 2], direction: Direction) -> Result<Self> {
        if p1.iter().chain(p2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("segment {id} has non-finite endpoint")));
        }
        if p1 == p2 {
            return Err(Error::Degenerate(format!("segment {id} has coincident endpoints")));
        }
        Ok(Self { id, p1: Point2H::pixel(p1[0], p1[1]), p2: Point2H::pixel(p2[0], p2[1]), direction })
    }

    pub fn a(&self) -> [f64; 2] {
        [self.p1.u / self.p1.w, self.p1.v / self.p1.w]
    }

    pub fn b(&self) -> [f64; 2] {
        [self.p2.u / self.p2.w, self.p2.v / self.p2.w]
    }

    pub fn segment(&self) -> Segment2 {
        Segment2::new(self.p1, self.p2)
    }

    pub fn length(&self) -> f64 {
        let (a, b) = (self.a(), self.b());
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn midpoint(&self) -> [f64; 2] {
        let (a, b) = (self.a(), self.b());
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    }

    /// Unit vector from `p1` toward `p2`.
    pub fn unit(&self) -> [f64; 2] {
        let (a, b) = (self.a(), self.b());
        let l = self.length();
        [(b[0] - a[0]) / l, (b[1] - a[1]) / l]
    }
}

/// Moves both endpoints outward by `pixels` along the segment.
pub fn extend_segment(line: &LineSegment2D, pixels: f64) -> LineSegment2D {
    if pixels == 0.0 {
        return *line;
    }
    let (a, b, u) = (line.a(), line.b(), line.unit());
    LineSegment2D {
        p1: Point2H::pixel(a[0] - u[0] * pixels, a[1] - u[1] * pixels),
        p2: Point2H::pixel(b[0] + u[0] * pixels, b[1] + u[1] * pixels),
        ..*line
    }
}

/// Junction type at an intersection point, by incident half-ray count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JunctionClass {
    L,
    T,
    Y,
    X,
    Higher,
}

/// Edge weight per junction class.
///
/// Corner-like junctions (L, Y) are favored over T and X, which are where
/// occlusion and accidental crossings show up. L and Y stay above twice the
/// default boundary weight so that the boundary term never pays for
/// dropping a real corner shared by two lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JunctionWeights {
    pub l: f64,
    pub t: f64,
    pub y: f64,
    pub x: f64,
    pub higher: f64,
}

impl Default for JunctionWeights {
    fn default() -> Self {
        Self { l: 24.0, t: 6.0, y: 24.0, x: 12.0, higher: 12.0 }
    }
}

impl JunctionWeights {
    pub fn weight(&self, class: JunctionClass) -> f64 {
        match class {
            JunctionClass::L => self.l,
            JunctionClass::T => self.t,
            JunctionClass::Y => self.y,
            JunctionClass::X => self.x,
            JunctionClass::Higher => self.higher,
        }
    }
}

/// Candidate intersection between vertices `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionEdge {
    pub i: usize,
    pub j: usize,
    pub point: Point2H,
    pub junction: JunctionClass,
    pub weight: f64,
}

impl IntersectionEdge {
    pub fn point_px(&self) -> [f64; 2] {
        [self.point.u / self.point.w, self.point.v / self.point.w]
    }

    pub fn other(&self, v: usize) -> usize {
        if self.i == v {
            self.j
        } else {
            self.i
        }
    }
}

/// 2D crossing of two extended segments, prior to junction classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub i: usize,
    pub j: usize,
    pub point: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineGraph {
    pub vertices: Vec<LineSegment2D>,
    pub edges: Vec<IntersectionEdge>,
}

impl LineGraph {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `adjacency()[v]` lists `(neighbor, edge index)` sorted by neighbor.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.i].push((e.j, k));
            adj[e.j].push((e.i, k));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Index of the edge joining `a` and `b`, if any.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by(|e| (e.i, e.j).cmp(&(i, j))).ok()
    }

    pub fn direction(&self, v: usize) -> Direction {
        self.vertices[v].direction
    }

    /// Connected components as sorted vertex lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices.len()];
        let mut out = Vec::new();
        for start in 0..self.vertices.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Induced subgraph on `keep` (vertex order preserved, edges re-indexed).
    pub fn induced(&self, keep: &[usize]) -> LineGraph {
        let mut map = vec![usize::MAX; self.vertices.len()];
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for (new, &old) in sorted.iter().enumerate() {
            map[old] = new;
        }
        let vertices = sorted.iter().map(|&v| self.vertices[v]).collect();
        let mut edges: Vec<IntersectionEdge> = self
            .edges
            .iter()
            .filter(|e| map[e.i] != usize::MAX && map[e.j] != usize::MAX)
            .map(|e| IntersectionEdge { i: map[e.i], j: map[e.j], ..*e })
            .collect();
        edges.sort_by_key(|e| (e.i, e.j));
        LineGraph { vertices, edges }
    }

    /// Vertex index of the line with the given id.
    pub fn vertex_of(&self, id: u32) -> Option<usize> {
        self.vertices.iter().position(|l| l.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub extension_px: f64,
    /// Radius for gathering segments incident to a junction point.
    pub junction_radius_px: f64,
    pub min_length_px: f64,
    pub weights: JunctionWeights,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { extension_px: 30.0, junction_radius_px: 5.0, min_length_px: 10.0, weights: JunctionWeights::default() }
    }
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Crossing point of two closed segments, if any. Overlapping collinear
/// segments yield the overlap point closest to both midpoints.
fn segment_crossing(p: &LineSegment2D, q: &LineSegment2D) -> Option<[f64; 2]> {
    let (a, b, c, d) = (p.a(), p.b(), q.a(), q.b());
    let r = sub(b, a);
    let s = sub(d, c);
    let denom = cross2(r, s);
    let scale = (r[0].hypot(r[1]) * s[0].hypot(s[1])).max(f64::MIN_POSITIVE);
    let ca = sub(c, a);
    if denom.abs() <= 1e-12 * scale {
        // parallel: only collinear overlaps count
        if cross2(ca, r).abs() > 1e-9 * r[0].hypot(r[1]) * ca[0].hypot(ca[1]).max(1.0) {
            return None;
        }
        let rr = r[0] * r[0] + r[1] * r[1];
        let t0 = (ca[0] * r[0] + ca[1] * r[1]) / rr;
        let t1 = ((d[0] - a[0]) * r[0] + (d[1] - a[1]) * r[1]) / rr;
        let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(1.0));
        if lo > hi {
            return None;
        }
        let mp = p.midpoint();
        let mq = q.midpoint();
        let target = [(mp[0] + mq[0]) / 2.0, (mp[1] + mq[1]) / 2.0];
        let tt = (((target[0] - a[0]) * r[0] + (target[1] - a[1]) * r[1]) / rr).clamp(lo, hi);
        return Some([a[0] + tt * r[0], a[1] + tt * r[1]]);
    }
    let t = cross2(ca, s) / denom;
    let u = cross2(ca, r) / denom;
    let eps = 1e-12;
    if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
        Some([a[0] + t * r[0], a[1] + t * r[1]])
    } else {
        None
    }
}

/// All differently-labeled pairs whose extended segments cross. Indices refer
/// to positions in `lines`; output is sorted by `(i, j)`.
pub fn find_candidate_intersections(lines: &[LineSegment2D], extension_px: f64) -> Vec<Crossing> {
    let extended: Vec<LineSegment2D> = lines.iter().map(|l| extend_segment(l, extension_px)).collect();
    let mut out = Vec::new();
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            if lines[i].direction == lines[j].direction {
                continue;
            }
            if let Some(point) = segment_crossing(&extended[i], &extended[j]) {
                out.push(Crossing { i, j, point });
            }
        }
    }
    out
}

/// Classifies the junction at `point` by the half-rays of every segment that
/// passes within the junction radius, and looks up its weight.
pub fn classify_and_weight(point: [f64; 2], lines: &[LineSegment2D], config: &GraphConfig) -> (JunctionClass, f64) {
    let radius = config.junction_radius_px;
    let mut rays: Vec<[f64; 2]> = Vec::new();
    for line in lines {
        let (a, u, len) = (line.a(), line.unit(), line.length());
        let t = (point[0] - a[0]) * u[0] + (point[1] - a[1]) * u[1];
        if t < -config.extension_px - radius || t > len + config.extension_px + radius {
            continue;
        }
        let foot = [a[0] + t * u[0], a[1] + t * u[1]];
        if dist(foot, point) > radius {
            continue;
        }
        if t <= radius {
            rays.push(u);
        } else if t >= len - radius {
            rays.push([-u[0], -u[1]]);
        } else {
            rays.push(u);
            rays.push([-u[0], -u[1]]);
        }
    }
    let collinear_pair = || {
        let cos_tol = 5f64.to_radians().cos();
        (0..rays.len()).any(|a| {
            ((a + 1)..rays.len()).any(|b| rays[a][0] * rays[b][0] + rays[a][1] * rays[b][1] < -cos_tol)
        })
    };
    let class = match rays.len() {
        0..=2 => JunctionClass::L,
        3 if collinear_pair() => JunctionClass::T,
        3 => JunctionClass::Y,
        4 => JunctionClass::X,
        _ => JunctionClass::Higher,
    };
    (class, config.weights.weight(class))
}

/// Builds the weighted line graph. Vertices are the segments at least
/// `min_length_px` long, ordered by id so the result does not depend on
/// input order.
pub fn build_line_graph(lines: &[LineSegment2D], config: &GraphConfig) -> LineGraph {
    let mut vertices: Vec<LineSegment2D> =
        lines.iter().copied().filter(|l| l.length() >= config.min_length_px).collect();
    vertices.sort_by_key(|l| l.id);
    let edges = find_candidate_intersections(&vertices, config.extension_px)
        .into_iter()
        .map(|c| {
            let (junction, weight) = classify_and_weight(c.point, &vertices, config);
            IntersectionEdge { i: c.i, j: c.j, point: Point2H::pixel(c.point[0], c.point[1]), junction, weight }
        })
        .collect();
    LineGraph { vertices, edges }
}

/// Induced subgraph on the largest connected component; ties go to the
/// component containing the smallest line id.
pub fn largest_connected_component(g: &LineGraph) -> LineGraph {
    let best = g
        .components()
        .into_iter()
        .map(|c| {
            let min_id = c.iter().map(|&v| g.vertices[v].id).min().unwrap_or(u32::MAX);
            (c, min_id)
        })
        .max_by(|(a, ida), (b, idb)| a.len().cmp(&b.len()).then(idb.cmp(ida)));
    match best {
        Some((comp, _)) => g.induced(&comp),
        None => LineGraph::default(),
    }
}
