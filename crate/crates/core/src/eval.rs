//! Spanning-tree accuracy and the constraint ablation harness.

use std::fmt;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::constraints::ConstraintFlags;
use crate::error::{Error, Result};
use crate::io::SceneInstance;
use crate::linegraph::LineGraph;
use crate::milp::Reconstruction;
use crate::pipeline::reconstruct;

/// Kruskal spanning tree over `g`, preferring edges the solver marked real,
/// then heavier junctions, then lower edge index. `real[k]` belongs to
/// `g.edges[k]`.
pub fn minimum_spanning_tree(g: &LineGraph, real: &[bool]) -> Result<Vec<usize>> {
    assert_eq!(real.len(), g.num_edges(), "one decision per edge");
    let components = g.components().len();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let mut order: Vec<usize> = (0..g.num_edges()).collect();
    order.sort_by(|&a, &b| {
        (!real[a])
            .cmp(&!real[b])
            .then(g.edges[b].weight.total_cmp(&g.edges[a].weight))
            .then(a.cmp(&b))
    });
    let mut uf = UnionFind::<usize>::new(g.num_vertices());
    let mut tree = Vec::with_capacity(g.num_vertices().saturating_sub(1));
    for k in order {
        if uf.union(g.edges[k].i, g.edges[k].j) {
            tree.push(k);
        }
    }
    Ok(tree)
}

/// Solver decisions in graph edge order; an empty (failed) reconstruction
/// counts every edge as fake.
pub fn real_flags(g: &LineGraph, rec: &Reconstruction) -> Vec<bool> {
    if rec.edges.len() != g.num_edges() {
        return vec![false; g.num_edges()];
    }
    rec.edges.iter().map(|e| e.real).collect()
}

/// Spanning-tree edge counts of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub name: String,
    /// Tree edges that are real according to the ground truth.
    pub real: usize,
    pub total: usize,
}

impl InstanceScore {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.real as f64 / self.total as f64
        }
    }
}

/// Scores the spanning tree of `g` against ground-truth labels keyed by line id.
pub fn score_instance(
    name: impl Into<String>,
    g: &LineGraph,
    real: &[bool],
    label: impl Fn(u32, u32) -> Option<bool>,
) -> Result<InstanceScore> {
    let tree = minimum_spanning_tree(g, real)?;
    let mut hits = 0;
    for &k in &tree {
        let (i, j) = (g.vertices[g.edges[k].i].id, g.vertices[g.edges[k].j].id);
        if label(i, j).ok_or(Error::MissingLabel { i, j })? {
            hits += 1;
        }
    }
    Ok(InstanceScore { name: name.into(), real: hits, total: tree.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub method: String,
    pub instances: Vec<InstanceScore>,
    /// Pooled fraction of real tree edges.
    pub mean_acc: f64,
    /// Average of per-instance fractions; instances with an empty tree are skipped.
    pub norm_acc: f64,
}

impl AccuracyReport {
    pub fn new(method: impl Into<String>, instances: Vec<InstanceScore>) -> Self {
        let (n, total) = instances.iter().fold((0, 0), |(n, t), s| (n + s.real, t + s.total));
        let mean_acc = if total == 0 { 0.0 } else { n as f64 / total as f64 };
        let nonempty: Vec<f64> = instances.iter().filter(|s| s.total > 0).map(InstanceScore::accuracy).collect();
        let norm_acc = if nonempty.is_empty() { 0.0 } else { nonempty.iter().sum::<f64>() / nonempty.len() as f64 };
        Self { method: method.into(), instances, mean_acc, norm_acc }
    }
}

/// Pipeline output for one instance scored against its embedded labels.
pub fn score(inst: &SceneInstance, name: &str, config: &Config) -> Result<InstanceScore> {
    let out = reconstruct(inst, config)?;
    let real = real_flags(&out.graph, &out.reconstruction);
    score_instance(name, &out.graph, &real, |i, j| inst.label(i, j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationConfig {
    pub name: &'static str,
    pub flags: ConstraintFlags,
}

const fn flags(cycles: bool, planarity: bool, boundary: bool) -> ConstraintFlags {
    ConstraintFlags { cycles, planarity, boundary }
}

/// The eight constraint combinations, baseline first and all three last.
pub const ABLATION_CONFIGS: [AblationConfig; 8] = [
    AblationConfig { name: "Baseline", flags: flags(false, false, false) },
    AblationConfig { name: "Boundary (B)", flags: flags(false, false, true) },
    AblationConfig { name: "Cycles (C)", flags: flags(true, false, false) },
    AblationConfig { name: "Planarity (P)", flags: flags(false, true, false) },
    AblationConfig { name: "B + C", flags: flags(true, false, true) },
    AblationConfig { name: "B + P", flags: flags(false, true, true) },
    AblationConfig { name: "C + P", flags: flags(true, true, false) },
    AblationConfig { name: "B + C + P", flags: flags(true, true, true) },
];

/// One report per configuration, in the order given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AccuracyReport>,
}

impl AblationTable {
    pub fn row(&self, method: &str) -> Option<&AccuracyReport> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,mean_acc_pct,norm_acc_pct\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.4},{:.4}\n", r.method, 100.0 * r.mean_acc, 100.0 * r.norm_acc));
        }
        out
    }
}

impl fmt::Display for AblationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max("Method".len());
        writeln!(f, "{:<w$}  {:>13}  {:>13}", "Method", "Mean Acc. %", "Norm. Acc. %")?;
        writeln!(f, "{}", "-".repeat(w + 30))?;
        for r in &self.rows {
            writeln!(f, "{:<w$}  {:>13.4}  {:>13.4}", r.method, 100.0 * r.mean_acc, 100.0 * r.norm_acc)?;
        }
        Ok(())
    }
}

/// Runs every configuration over the suite with otherwise identical settings.
/// Instances are named `suite[k]` unless `names` is given.
pub fn run_ablation(
    suite: &[SceneInstance],
    names: Option<&[String]>,
    base: &Config,
    configs: &[AblationConfig],
) -> Result<AblationTable> {
    let name = |k: usize| names.and_then(|n| n.get(k).cloned()).unwrap_or_else(|| format!("suite[{k}]"));
    let rows = configs
        .iter()
        .map(|c| {
            let config = base.clone().with_flags(c.flags);
            let scores = suite
                .par_iter()
                .enumerate()
                .map(|(k, inst)| score(inst, &name(k), &config))
                .collect::<Result<Vec<_>>>()?;
            Ok(AccuracyReport::new(c.name, scores))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Direction, Point2H};
    use crate::linegraph::{IntersectionEdge, JunctionClass, LineSegment2D};

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> LineGraph {
        let vertices = (0..n)
            .map(|k| LineSegment2D::new(k as u32, [0.0, 10.0 * k as f64], [5.0, 10.0 * k as f64], Direction::X).unwrap())
            .collect();
        let edges = edges
            .iter()
            .map(|&(i, j, weight)| IntersectionEdge { i, j, point: Point2H::pixel(0.0, 0.0), junction: JunctionClass::L, weight })
            .collect();
        LineGraph { vertices, edges }
    }

    #[test]
    fn tree_graph_keeps_all_edges() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)]);
        let mut t = minimum_spanning_tree(&g, &[false, true, false]).unwrap();
        t.sort();
        assert_eq!(t, vec![0, 1, 2]);
    }

    #[test]
    fn triangle_prefers_real_edges() {
        let g = graph(3, &[(0, 1, 5.0), (1, 2, 1.0), (0, 2, 1.0)]);
        let mut t = minimum_spanning_tree(&g, &[false, true, true]).unwrap();
        t.sort();
        assert_eq!(t, vec![1, 2]);
        // all fake: heavier junction first
        assert!(minimum_spanning_tree(&g, &[false; 3]).unwrap().contains(&0));
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = graph(3, &[(0, 1, 1.0)]);
        assert!(matches!(minimum_spanning_tree(&g, &[true]), Err(Error::Disconnected { components: 2 })));
    }

    #[test]
    fn missing_label_is_reported() {
        let g = graph(2, &[(0, 1, 1.0)]);
        assert!(matches!(score_instance("a", &g, &[true], |_, _| None), Err(Error::MissingLabel { i: 0, j: 1 })));
    }

    #[test]
    fn report_formulas() {
        let s = |real, total| InstanceScore { name: String::new(), real, total };
        let r = AccuracyReport::new("x", vec![s(3, 4), s(1, 2)]);
        assert!((r.mean_acc - 4.0 / 6.0).abs() < 1e-12);
        assert!((r.norm_acc - 0.625).abs() < 1e-12);
        let all = AccuracyReport::new("y", vec![s(5, 5)]);
        assert_eq!((all.mean_acc, all.norm_acc), (1.0, 1.0));
        let equal = AccuracyReport::new("z", vec![s(1, 4), s(2, 4), s(4, 4)]);
        assert!((equal.mean_acc - equal.norm_acc).abs() < 1e-12);
        let swapped = AccuracyReport::new("x", vec![s(1, 2), s(3, 4)]);
        assert_eq!((r.mean_acc, r.norm_acc), (swapped.mean_acc, swapped.norm_acc));
    }

    #[test]
    fn table_formats() {
        let t = AblationTable { rows: vec![AccuracyReport::new("Baseline", vec![InstanceScore { name: "a".into(), real: 1, total: 2 }])] };
        assert_eq!(t.to_csv(), "method,mean_acc_pct,norm_acc_pct\nBaseline,50.0000,50.0000\n");
        assert!(t.to_string().contains("Mean Acc. %"));
    }
}
