//! End-to-end reconstruction: label lines, build the graph, keep its largest
//! component, solve the program and lift the endpoints.

use crate::config::Config;
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::geometry::{
    backproject, estimate_vanishing_points, label_direction, rotation_from_labeled_segments, CameraIntrinsics,
    Direction, Point2H, Ray, Segment2, VanishingPoints, WorldRotation,
};
use crate::io::SceneInstance;
use crate::linegraph::{build_line_graph, largest_connected_component, LineGraph, LineSegment2D};
use crate::milp::{build_model, extract_reconstruction, BranchAndBound, MilpModel, Reconstruction, Solution, SolverBackend};

/// Where the direction labels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Instance,
    VanishingPoints,
}

/// Everything produced along the way, for inspection and evaluation.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub rotation: WorldRotation,
    pub label_source: LabelSource,
    /// Labeled segments entering graph construction.
    pub segments: Vec<LineSegment2D>,
    pub full_graph: LineGraph,
    pub graph: LineGraph,
    pub rays: Vec<[Ray; 2]>,
    pub constraints: ConstraintSet,
    pub model: MilpModel,
    pub solution: Solution,
    pub reconstruction: Reconstruction,
}

/// Camera, rotation and labeled segments for an instance.
pub fn prepare(inst: &SceneInstance, config: &Config, use_labels: bool) -> Result<(CameraIntrinsics, WorldRotation, Vec<LineSegment2D>, LabelSource)> {
    let cam = inst.intrinsics()?;
    let raw: Vec<(u32, Segment2, Option<Direction>)> = inst
        .lines
        .iter()
        .map(|l| (l.id, Segment2::new(Point2H::pixel(l.p1[0], l.p1[1]), Point2H::pixel(l.p2[0], l.p2[1])), l.dir))
        .collect();
    let given = inst.world_rotation()?;
    let labeled_input = use_labels && inst.all_labeled() && !inst.lines.is_empty();

    let (rot, labels, source) = if labeled_input {
        let rot = match given {
            Some(r) => r,
            None => {
                let pairs: Vec<(Segment2, Direction)> = raw.iter().map(|(_, s, d)| (*s, d.expect("all labeled"))).collect();
                rotation_from_labeled_segments(&pairs, &cam)?
            }
        };
        (rot, raw.iter().map(|r| r.2).collect::<Vec<_>>(), LabelSource::Instance)
    } else {
        let (vps, rot) = match given {
            Some(r) => (VanishingPoints::from_rotation(&cam, &r), r),
            None => {
                let segs: Vec<Segment2> = raw.iter().map(|r| r.1).collect();
                estimate_vanishing_points(&segs, &cam, &config.vp, config.seed)?
            }
        };
        let labels = raw.iter().map(|r| label_direction(&r.1, &vps, config.vp.label_angle_deg)).collect();
        (rot, labels, LabelSource::VanishingPoints)
    };

    let segments = raw
        .iter()
        .zip(labels)
        .filter_map(|((id, s, _), d)| {
            let (a, b) = s.endpoints()?;
            LineSegment2D::new(*id, a, b, d?).ok()
        })
        .collect();
    Ok((cam, rot, segments, source))
}

pub fn rays_for(g: &LineGraph, cam: &CameraIntrinsics, rot: &WorldRotation) -> Result<Vec<[Ray; 2]>> {
    g.vertices.iter().map(|l| Ok([backproject(cam, rot, &l.p1)?, backproject(cam, rot, &l.p2)?])).collect()
}

/// Runs the full pipeline with the built-in solver.
pub fn reconstruct(inst: &SceneInstance, config: &Config) -> Result<PipelineOutput> {
    reconstruct_with(inst, config, &BranchAndBound::default(), true)
}

/// Runs the full pipeline; `use_labels = false` ignores direction labels in
/// the instance and derives them from vanishing points.
pub fn reconstruct_with(
    inst: &SceneInstance,
    config: &Config,
    backend: &dyn SolverBackend,
    use_labels: bool,
) -> Result<PipelineOutput> {
    let (cam, rotation, segments, label_source) = prepare(inst, config, use_labels)?;
    let full_graph = build_line_graph(&segments, &config.graph);
    let graph = largest_connected_component(&full_graph);
    if graph.num_vertices() == 0 {
        return Err(Error::Degenerate("no labeled segments to reconstruct".into()));
    }
    let rays = rays_for(&graph, &cam, &rotation)?;
    let constraints = ConstraintSet::generate(&graph, &config.constraint_config());
    let model = build_model(&graph, &rays, &constraints, &config.solver)?;
    let solution = backend.solve(&model)?;
    let reconstruction = extract_reconstruction(&graph, &rays, &model, &solution);
    Ok(PipelineOutput {
        rotation,
        label_source,
        segments,
        full_graph,
        graph,
        rays,
        constraints,
        model,
        solution,
        reconstruction,
    })
}
