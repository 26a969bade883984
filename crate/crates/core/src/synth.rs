//! Synthetic Manhattan scenes with exact ground truth.
//!
//! Scenes are axis-aligned boxes standing on a ground plane, optionally with
//! facade grid lines, seen by a camera at the world origin. Every box
//! coordinate sits on a lattice offset by half a cell from the camera, so two
//! axis-aligned lines either share a coordinate exactly or differ by at
//! least one lattice cell. Distractor segments floating at other depths
//! supply fake crossings.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project, CameraIntrinsics, Direction, WorldRotation};
use crate::io::{CameraRecord, EdgeLabel, LineRecord, SceneInstance, SCHEMA_VERSION};
use crate::linegraph::{find_candidate_intersections, LineSegment2D};

/// Camera pose distribution. The camera looks at a ground point from above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSpec {
    pub width: u32,
    pub height: u32,
    pub focal_px: f64,
    /// Range of the yaw magnitude in degrees; the sign is random.
    pub yaw_deg: [f64; 2],
    /// Downward tilt range in degrees.
    pub pitch_deg: [f64; 2],
    /// Range of the distance to the look-at point on the ground.
    pub distance: [f64; 2],
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self { width: 640, height: 480, focal_px: 500.0, yaw_deg: [20.0, 38.0], pitch_deg: [18.0, 30.0], distance: [5.0, 7.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub num_boxes: usize,
    /// When set, the box count is drawn uniformly from `num_boxes..=num_boxes_max`.
    pub num_boxes_max: Option<usize>,
    /// Box extents (x, y, z) in world units, rounded to the lattice.
    pub box_size_min: [f64; 3],
    pub box_size_max: [f64; 3],
    /// Half-width of the square around the look-at point where boxes are placed.
    pub spread: f64,
    pub lattice: f64,
    /// Probability of a facade grid line at each interior lattice position
    /// of a visible wall.
    pub facade_density: f64,
    pub camera: CameraSpec,
    pub noise_px: f64,
    pub spurious_rate: f64,
    pub dropout_rate: f64,
    pub rng_seed: u64,
    /// Fake-edge separation margin as a fraction of the scene diameter.
    pub margin_fraction: f64,
    pub min_length_px: f64,
    /// Extension used when enumerating the candidate edges to label.
    pub extension_px: f64,
    pub max_retries: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            num_boxes: 1,
            num_boxes_max: None,
            box_size_min: [1.0, 1.0, 1.0],
            box_size_max: [1.0, 1.0, 1.0],
            spread: 0.0,
            lattice: 0.5,
            facade_density: 0.0,
            camera: CameraSpec::default(),
            noise_px: 0.0,
            spurious_rate: 0.0,
            dropout_rate: 0.0,
            rng_seed: 0,
            margin_fraction: 0.05,
            min_length_px: 10.0,
            extension_px: 30.0,
            max_retries: 200,
        }
    }
}

impl SceneSpec {
    /// A single unit cube, noise free.
    pub fn cube(seed: u64) -> Self {
        Self { rng_seed: seed, ..Self::default() }
    }

    /// One to three noise-free boxes.
    pub fn boxes(seed: u64) -> Self {
        Self {
            num_boxes: 1,
            num_boxes_max: Some(3),
            box_size_min: [1.0, 1.0, 1.0],
            box_size_max: [2.5, 3.0, 2.5],
            spread: 3.0,
            camera: CameraSpec { width: 800, height: 600, focal_px: 600.0, distance: [8.0, 10.0], ..CameraSpec::default() },
            rng_seed: seed,
            ..Self::default()
        }
    }

    /// Small cluttered scenes: detector noise, distractors and missed lines.
    pub fn noisy(seed: u64) -> Self {
        Self {
            num_boxes: 1,
            num_boxes_max: Some(2),
            box_size_min: [1.0, 1.0, 1.0],
            box_size_max: [2.5, 3.0, 2.5],
            spread: 2.5,
            camera: CameraSpec { width: 800, height: 600, focal_px: 600.0, distance: [8.0, 10.0], ..CameraSpec::default() },
            noise_px: 1.0,
            spurious_rate: 0.15,
            dropout_rate: 0.1,
            rng_seed: seed,
            ..Self::default()
        }
    }

    /// City blocks with facade grids, sized like real street photos.
    pub fn urban(seed: u64) -> Self {
        Self {
            num_boxes: 5,
            num_boxes_max: Some(8),
            box_size_min: [3.0, 4.0, 3.0],
            box_size_max: [7.0, 12.0, 7.0],
            spread: 9.0,
            lattice: 1.0,
            facade_density: 0.45,
            camera: CameraSpec {
                width: 1920,
                height: 1080,
                focal_px: 1400.0,
                yaw_deg: [20.0, 38.0],
                pitch_deg: [12.0, 22.0],
                distance: [28.0, 34.0],
            },
            noise_px: 1.0,
            spurious_rate: 0.1,
            dropout_rate: 0.05,
            margin_fraction: 0.025,
            rng_seed: seed,
            ..Self::default()
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "cube" => Some(Self::cube(seed)),
            "boxes" => Some(Self::boxes(seed)),
            "noisy" => Some(Self::noisy(seed)),
            "urban" => Some(Self::urban(seed)),
            _ => None,
        }
    }

    pub const PRESETS: [&'static str; 4] = ["cube", "boxes", "noisy", "urban"];

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::SceneGeneration(m.to_string()));
        for (name, r) in [("spurious_rate", self.spurious_rate), ("dropout_rate", self.dropout_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.noise_px >= 0.0) {
            return bad("noise_px must be nonnegative");
        }
        if !(self.lattice > 0.0) {
            return bad("lattice must be positive");
        }
        if self.num_boxes == 0 || self.num_boxes_max.is_some_and(|m| m < self.num_boxes) {
            return bad("box count range is empty");
        }
        for k in 0..3 {
            if !(self.box_size_min[k] > 0.0) || self.box_size_max[k] < self.box_size_min[k] {
                return bad("box size range is empty");
            }
        }
        if !(0.0..=1.0).contains(&self.facade_density) {
            return bad("facade_density must lie in [0, 1]");
        }
        let c = &self.camera;
        if c.width == 0 || c.height == 0 || !(c.focal_px > 0.0) {
            return bad("invalid camera");
        }
        if !(c.pitch_deg[0] > 0.0 && c.pitch_deg[1] < 89.0 && c.pitch_deg[0] <= c.pitch_deg[1]) {
            return bad("pitch range must lie in (0, 89) degrees");
        }
        if !(c.yaw_deg[0] >= 0.0 && c.yaw_deg[1] < 45.0 && c.yaw_deg[0] <= c.yaw_deg[1]) {
            return bad("yaw range must lie in [0, 45) degrees");
        }
        if !(c.distance[0] > 0.0 && c.distance[0] <= c.distance[1]) {
            return bad("distance range is empty");
        }
        Ok(())
    }
}

/// Axis-aligned 3D segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldLine {
    pub direction: Direction,
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
}

impl WorldLine {
    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.a + (self.b - self.a) * t
    }

    /// Distance along `axis` between two lines, each constant on that axis.
    pub fn gap(&self, other: &WorldLine, axis: Direction) -> f64 {
        (self.a[axis.index()] - other.a[axis.index()]).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtLine {
    pub id: u32,
    pub direction: Direction,
    pub p1: [f64; 3],
    pub p2: [f64; 3],
    /// Injected distractor rather than scene structure.
    #[serde(default)]
    pub distractor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtEdge {
    pub i: u32,
    pub j: u32,
    pub real: bool,
    /// Separation of the two 3D lines along the axis perpendicular to both.
    pub gap: f64,
}

/// Sidecar ground truth. World units; the camera sits at the origin, so the
/// reconstruction matches these endpoints up to one positive scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: u32,
    pub seed: u64,
    pub margin: f64,
    pub diameter: f64,
    pub lines: Vec<GtLine>,
    pub edges: Vec<GtEdge>,
}

impl GroundTruth {
    pub fn label(&self, i: u32, j: u32) -> Option<bool> {
        let (a, b) = (i.min(j), i.max(j));
        self.edges.iter().find(|e| e.i == a && e.j == b).map(|e| e.real)
    }

    pub fn line(&self, id: u32) -> Option<&GtLine> {
        self.lines.iter().find(|l| l.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Aabb {
    min: Vector3<f64>,
    max: Vector3<f64>,
}

impl Aabb {
    /// True when the open segment from the origin to `p` passes through the box.
    fn blocks(&self, p: &Vector3<f64>) -> bool {
        let (mut t0, mut t1): (f64, f64) = (0.0, 1.0 - 1e-9);
        for k in 0..3 {
            if p[k].abs() < 1e-300 {
                if 0.0 < self.min[k] || 0.0 > self.max[k] {
                    return false;
                }
                continue;
            }
            let a = self.min[k] / p[k];
            let b = self.max[k] / p[k];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    fn edges(&self) -> Vec<(WorldLine, [(usize, usize); 2])> {
        let c = [self.min, self.max];
        let mut out = Vec::with_capacity(12);
        for axis in 0..3 {
            let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
            for sp in 0..2 {
                for sq in 0..2 {
                    let mut a = Vector3::zeros();
                    a[p] = c[sp][p];
                    a[q] = c[sq][q];
                    a[axis] = self.min[axis];
                    let mut b = a;
                    b[axis] = self.max[axis];
                    out.push((WorldLine { direction: Direction::from_index(axis), a, b }, [(p, sp), (q, sq)]));
                }
            }
        }
        out
    }

    /// Outward face on `axis` (`side` 0 = min, 1 = max) faces the origin.
    fn face_visible(&self, axis: usize, side: usize) -> bool {
        if side == 0 {
            self.min[axis] > 0.0
        } else {
            self.max[axis] < 0.0
        }
    }

    fn corners(&self) -> [Vector3<f64>; 2] {
        [self.min, self.max]
    }
}

struct View<'a> {
    cam: &'a CameraIntrinsics,
    rot: &'a WorldRotation,
    boxes: &'a [Aabb],
    near: f64,
}

impl View<'_> {
    fn visible(&self, p: &Vector3<f64>, skip: Option<usize>) -> bool {
        let c = self.rot.matrix() * p;
        if c.z < self.near {
            return false;
        }
        let Some(px) = project(self.cam, self.rot, p).and_then(|q| q.to_pixel()) else {
            return false;
        };
        let (w, h) = (self.cam.image_width as f64, self.cam.image_height as f64);
        if !(px[0] >= 0.0 && px[1] >= 0.0 && px[0] <= w && px[1] <= h) {
            return false;
        }
        !self.boxes.iter().enumerate().any(|(k, b)| Some(k) != skip && b.blocks(p))
    }

    /// Visible sub-segments, found by sampling and refined by bisection.
    fn visible_pieces(&self, line: &WorldLine, skip: Option<usize>) -> Vec<WorldLine> {
        const SAMPLES: usize = 160;
        let vis: Vec<bool> = (0..=SAMPLES).map(|k| self.visible(&line.at(k as f64 / SAMPLES as f64), skip)).collect();
        let refine = |lo: f64, hi: f64, lo_visible: bool| -> f64 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if self.visible(&line.at(m), skip) == lo_visible {
                    a = m;
                } else {
                    b = m;
                }
            }
            if lo_visible {
                a
            } else {
                b
            }
        };
        let mut pieces = Vec::new();
        let mut start: Option<f64> = if vis[0] { Some(0.0) } else { None };
        for k in 1..=SAMPLES {
            let (t0, t1) = ((k - 1) as f64 / SAMPLES as f64, k as f64 / SAMPLES as f64);
            match (vis[k - 1], vis[k]) {
                (false, true) => start = Some(refine(t0, t1, false)),
                (true, false) => {
                    let end = refine(t0, t1, true);
                    if let Some(s) = start.take() {
                        pieces.push((s, end));
                    }
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            pieces.push((s, 1.0));
        }
        pieces
            .into_iter()
            .filter(|(s, e)| e > s)
            .map(|(s, e)| {
                let mut piece = WorldLine { direction: line.direction, a: line.at(s), b: line.at(e) };
                // keep the two fixed coordinates bit-exact
                for k in 0..3 {
                    if k != line.direction.index() {
                        piece.a[k] = line.a[k];
                        piece.b[k] = line.a[k];
                    }
                }
                piece
            })
            .collect()
    }
}

fn pixel_length(cam: &CameraIntrinsics, rot: &WorldRotation, l: &WorldLine) -> Option<f64> {
    let p = project(cam, rot, &l.a)?.to_pixel()?;
    let q = project(cam, rot, &l.b)?.to_pixel()?;
    Some((p[0] - q[0]).hypot(p[1] - q[1]))
}

/// Projects world segments, clipping each at the near plane `z = near`.
/// Segments entirely behind it are dropped; ids follow input order.
pub fn project_scene(lines: &[WorldLine], cam: &CameraIntrinsics, rot: &WorldRotation, near: f64) -> Vec<LineSegment2D> {
    let mut out = Vec::new();
    for (k, l) in lines.iter().enumerate() {
        let za = (rot.matrix() * l.a).z;
        let zb = (rot.matrix() * l.b).z;
        if za < near && zb < near {
            continue;
        }
        let clip = |inside: Vector3<f64>, outside: Vector3<f64>, zi: f64, zo: f64| {
            let t = (zi - near) / (zi - zo);
            inside + (outside - inside) * t
        };
        let (a, b) = if za < near {
            (clip(l.b, l.a, zb, za), l.b)
        } else if zb < near {
            (l.a, clip(l.a, l.b, za, zb))
        } else {
            (l.a, l.b)
        };
        let (Some(p), Some(q)) = (project(cam, rot, &a).and_then(|p| p.to_pixel()), project(cam, rot, &b).and_then(|p| p.to_pixel()))
        else {
            continue;
        };
        if let Ok(seg) = LineSegment2D::new(k as u32, p, q, l.direction) {
            out.push(seg);
        }
    }
    out
}

/// World-to-camera rotation for a camera looking along `forward` with world
/// `+y` up: rows are image right, image down and forward.
pub fn look_rotation(forward: Vector3<f64>) -> Result<WorldRotation> {
    let f = forward.try_normalize(1e-12).ok_or_else(|| Error::SceneGeneration("zero view direction".into()))?;
    let right = f
        .cross(&Vector3::y())
        .try_normalize(1e-9)
        .ok_or_else(|| Error::SceneGeneration("camera looks straight up or down".into()))?;
    let down = f.cross(&right);
    WorldRotation::new(nalgebra::Matrix3::from_rows(&[right.transpose(), down.transpose(), f.transpose()]))
}

struct Candidate {
    world: WorldLine,
    distractor: bool,
}

/// Generates one scene and its ground truth. Deterministic per `spec`.
pub fn generate_scene(spec: &SceneSpec) -> Result<(SceneInstance, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut last = String::from("no attempt made");
    for _ in 0..spec.max_retries.max(1) {
        match attempt(spec, &mut rng) {
            Ok(v) => return Ok(v),
            Err(Error::SceneGeneration(m)) => last = m,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SceneGeneration(format!("gave up after {} attempts: {last}", spec.max_retries)))
}

fn snap(v: f64, lattice: f64) -> f64 {
    ((v / lattice - 0.5).round() + 0.5) * lattice
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.gen_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn attempt(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<(SceneInstance, GroundTruth)> {
    let fail = |m: &str| Err(Error::SceneGeneration(m.to_string()));
    let lat = spec.lattice;
    let c = &spec.camera;
    let cx = c.width as f64 / 2.0;
    let cy = c.height as f64 / 2.0;
    let cam = CameraIntrinsics::from_focal(c.focal_px, cx, cy, c.width, c.height)?;

    let yaw_mag = uniform(rng, c.yaw_deg).to_radians();
    let yaw = if rng.gen_bool(0.5) { yaw_mag } else { -yaw_mag };
    let pitch = uniform(rng, c.pitch_deg).to_radians();
    let dist = uniform(rng, c.distance);
    let forward = Vector3::new(yaw.sin() * pitch.cos(), -pitch.sin(), -yaw.cos() * pitch.cos());
    // ground at a half-cell offset so no lattice coordinate is zero
    let height = snap(dist * pitch.sin(), lat).max(0.5 * lat);
    let target = forward * (height / pitch.sin());
    let rot = look_rotation(forward)?;
    let ground = -height;

    let count = match spec.num_boxes_max {
        Some(m) => rng.gen_range(spec.num_boxes..=m),
        None => spec.num_boxes,
    };
    let mut boxes: Vec<Aabb> = Vec::new();
    for _ in 0..count {
        for _ in 0..100 {
            let mut size = [0.0; 3];
            for k in 0..3 {
                let lo = (spec.box_size_min[k] / lat).round().max(1.0) as i64;
                let hi = ((spec.box_size_max[k] / lat).round() as i64).max(lo);
                size[k] = rng.gen_range(lo..=hi) as f64 * lat;
            }
            let ox = if spec.spread > 0.0 { rng.gen_range(-spec.spread..=spec.spread) } else { 0.0 };
            let oz = if spec.spread > 0.0 { rng.gen_range(-spec.spread..=spec.spread) } else { 0.0 };
            let x0 = snap(target.x + ox - size[0] / 2.0, lat);
            let z0 = snap(target.z + oz - size[2] / 2.0, lat);
            let b = Aabb {
                min: Vector3::new(x0, ground, z0),
                max: Vector3::new(x0 + size[0], ground + size[1], z0 + size[2]),
            };
            let clear = boxes.iter().all(|o| {
                b.min.x >= o.max.x + lat || o.min.x >= b.max.x + lat || b.min.z >= o.max.z + lat || o.min.z >= b.max.z + lat
            });
            if clear {
                boxes.push(b);
                break;
            }
        }
    }
    if boxes.is_empty() {
        return fail("no box could be placed");
    }
    let near = 1e-3;
    let view = View { cam: &cam, rot: &rot, boxes: &boxes, near };

    let mut cands: Vec<Candidate> = Vec::new();
    let push_visible = |l: &WorldLine, skip: Option<usize>, cands: &mut Vec<Candidate>| {
        for piece in view.visible_pieces(l, skip) {
            if pixel_length(&cam, &rot, &piece).is_some_and(|len| len >= spec.min_length_px) {
                cands.push(Candidate { world: piece, distractor: false });
            }
        }
    };
    for (k, b) in boxes.iter().enumerate() {
        for (edge, faces) in b.edges() {
            if faces.iter().any(|&(axis, side)| b.face_visible(axis, side)) {
                push_visible(&edge, Some(k), &mut cands);
            }
        }
        if spec.facade_density > 0.0 {
            for wall_axis in [0usize, 2] {
                for side in 0..2 {
                    if !b.face_visible(wall_axis, side) {
                        continue;
                    }
                    let fixed = b.corners()[side][wall_axis];
                    let along = 2 - wall_axis;
                    let mut grid = Vec::new();
                    // horizontal lines at interior lattice heights
                    let ny = ((b.max.y - b.min.y) / lat).round() as i64;
                    for k in 1..ny {
                        if rng.gen_bool(spec.facade_density) {
                            let y = b.min.y + k as f64 * lat;
                            let mut a = Vector3::zeros();
                            a[wall_axis] = fixed;
                            a.y = y;
                            a[along] = b.min[along];
                            let mut e = a;
                            e[along] = b.max[along];
                            grid.push(WorldLine { direction: Direction::from_index(along), a, b: e });
                        }
                    }
                    // vertical lines at interior lattice positions
                    let nh = ((b.max[along] - b.min[along]) / lat).round() as i64;
                    for k in 1..nh {
                        if rng.gen_bool(spec.facade_density) {
                            let mut a = Vector3::zeros();
                            a[wall_axis] = fixed;
                            a[along] = b.min[along] + k as f64 * lat;
                            a.y = b.min.y;
                            let mut e = a;
                            e.y = b.max.y;
                            grid.push(WorldLine { direction: Direction::Y, a, b: e });
                        }
                    }
                    for l in &grid {
                        push_visible(l, Some(k), &mut cands);
                    }
                }
            }
        }
    }
    if cands.len() < 3 {
        return fail("too few visible lines");
    }

    let mut lo = boxes[0].min;
    let mut hi = boxes[0].max;
    for b in &boxes {
        lo = lo.inf(&b.min);
        hi = hi.sup(&b.max);
    }
    let diameter = (hi - lo).norm();
    let margin = spec.margin_fraction * diameter;
    if margin > lat + 1e-12 {
        return fail("lattice is finer than the label margin");
    }

    let structural = cands.len();
    if spec.spurious_rate > 0.0 {
        let wanted = (spec.spurious_rate * structural as f64).round().max(1.0) as usize;
        let mut added = 0;
        let mut tries = 0;
        while added < wanted && tries < 40 * wanted {
            tries += 1;
            let base = cands[rng.gen_range(0..structural)].world;
            let t = rng.gen_range(0.2..0.8);
            let q = base.at(t);
            let s = if rng.gen_bool(0.5) { rng.gen_range(0.6..0.85) } else { rng.gen_range(1.2..1.5) };
            let qs = q * s;
            let others = base.direction.others();
            let dir = others[rng.gen_range(0..2)];
            let axis = Direction::third(base.direction, dir).expect("distinct axes");
            if (qs[axis.index()] - q[axis.index()]).abs() < 1.5 * margin {
                continue;
            }
            let half = rng.gen_range(0.25..0.6) * (base.b - base.a).norm();
            let l = WorldLine { direction: dir, a: qs - dir.unit() * half, b: qs + dir.unit() * half };
            let pieces = view.visible_pieces(&l, None);
            let Some(piece) = pieces.into_iter().max_by(|x, y| (x.b - x.a).norm().total_cmp(&(y.b - y.a).norm())) else {
                continue;
            };
            if pixel_length(&cam, &rot, &piece).is_some_and(|len| len >= spec.min_length_px) {
                cands.push(Candidate { world: piece, distractor: true });
                added += 1;
            }
        }
    }

    if spec.dropout_rate > 0.0 {
        cands.retain(|_| !rng.gen_bool(spec.dropout_rate));
    }

    let noise = Normal::new(0.0, spec.noise_px.max(0.0)).map_err(|e| Error::SceneGeneration(e.to_string()))?;
    let mut segs: Vec<(LineSegment2D, WorldLine, bool)> = Vec::new();
    for cand in &cands {
        let (Some(p), Some(q)) = (
            project(&cam, &rot, &cand.world.a).and_then(|p| p.to_pixel()),
            project(&cam, &rot, &cand.world.b).and_then(|p| p.to_pixel()),
        ) else {
            continue;
        };
        let mut jitter = |v: [f64; 2]| -> [f64; 2] {
            if spec.noise_px > 0.0 {
                [v[0] + noise.sample(rng), v[1] + noise.sample(rng)]
            } else {
                v
            }
        };
        let (p, q) = (jitter(p), jitter(q));
        if (p[0] - q[0]).hypot(p[1] - q[1]) < spec.min_length_px {
            continue;
        }
        let id = segs.len() as u32;
        let Ok(seg) = LineSegment2D::new(id, p, q, cand.world.direction) else {
            continue;
        };
        segs.push((seg, cand.world, cand.distractor));
    }

    // label candidate edges; distractors causing ambiguous gaps are removed
    let real_tol = 1e-9 * (1.0 + diameter);
    let edges = loop {
        let lines: Vec<LineSegment2D> = segs.iter().map(|s| s.0).collect();
        let crossings = find_candidate_intersections(&lines, spec.extension_px);
        let mut edges = Vec::with_capacity(crossings.len());
        let mut drop: Option<usize> = None;
        for cr in &crossings {
            let (a, b) = (&segs[cr.i], &segs[cr.j]);
            let axis = Direction::third(a.1.direction, b.1.direction).expect("candidate edges join distinct labels");
            let gap = a.1.gap(&b.1, axis);
            let real = gap <= real_tol;
            if !real && gap < margin {
                if a.2 || b.2 {
                    drop = Some(if a.2 { cr.i } else { cr.j });
                    break;
                }
                return fail("ambiguous gap between structural lines");
            }
            edges.push(GtEdge { i: a.0.id, j: b.0.id, real, gap: if real { 0.0 } else { gap } });
        }
        match drop {
            Some(k) => {
                segs.remove(k);
                for (n, s) in segs.iter_mut().enumerate() {
                    s.0.id = n as u32;
                }
            }
            None => break edges,
        }
    };
    let clean = spec.noise_px == 0.0 && spec.spurious_rate == 0.0 && spec.dropout_rate == 0.0;
    if clean && edges.iter().any(|e| !e.real) {
        return fail("noise-free scene has a fake crossing");
    }
    if edges.is_empty() {
        return fail("no candidate intersections");
    }

    let instance = SceneInstance {
        schema_version: SCHEMA_VERSION,
        camera: CameraRecord { k: cam.to_row_major(), width: c.width, height: c.height },
        rotation: Some(rot.to_row_major()),
        lines: segs
            .iter()
            .map(|(s, _, _)| LineRecord { id: s.id, p1: s.a(), p2: s.b(), dir: Some(s.direction) })
            .collect(),
        gt: Some(edges.iter().map(|e| EdgeLabel { i: e.i, j: e.j, real: e.real }).collect()),
    };
    let truth = GroundTruth {
        schema_version: SCHEMA_VERSION,
        seed: spec.rng_seed,
        margin,
        diameter,
        lines: segs
            .iter()
            .map(|(s, w, d)| GtLine { id: s.id, direction: w.direction, p1: w.a.into(), p2: w.b.into(), distractor: *d })
            .collect(),
        edges,
    };
    Ok((instance, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::backproject;

    #[test]
    fn cube_has_nine_lines_and_seven_corners() {
        for seed in 0..5 {
            let (inst, gt) = generate_scene(&SceneSpec::cube(seed)).unwrap();
            assert_eq!(inst.lines.len(), 9, "seed {seed}");
            assert!(gt.edges.iter().all(|e| e.real));
            let mut corners: Vec<[i64; 3]> = Vec::new();
            for l in &gt.lines {
                for p in [l.p1, l.p2] {
                    let key = p.map(|v| (v * 1e6).round() as i64);
                    if !corners.contains(&key) {
                        corners.push(key);
                    }
                }
            }
            assert_eq!(corners.len(), 7, "seed {seed}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_scene(&SceneSpec::noisy(7)).unwrap();
        let b = generate_scene(&SceneSpec::noisy(7)).unwrap();
        assert_eq!(a.0.to_json_string(), b.0.to_json_string());
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn projection_round_trip() {
        let (inst, gt) = generate_scene(&SceneSpec::boxes(3)).unwrap();
        let cam = inst.intrinsics().unwrap();
        let rot = inst.world_rotation().unwrap().unwrap();
        for (l, g) in inst.lines.iter().zip(&gt.lines) {
            let d = backproject(&cam, &rot, &crate::geometry::Point2H::pixel(l.p1[0], l.p1[1])).unwrap();
            let p = Vector3::from(g.p1);
            assert!(d.d().normalize().cross(&p.normalize()).norm() < 1e-9);
        }
    }

    #[test]
    fn simple_projection() {
        let cam = CameraIntrinsics::from_focal(1.0, 0.0, 0.0, 1, 1).unwrap();
        let rot = WorldRotation::identity();
        let l = WorldLine { direction: Direction::X, a: Vector3::new(0.0, 0.0, 5.0), b: Vector3::new(1.0, 0.0, 5.0) };
        let s = project_scene(&[l], &cam, &rot, 1e-6);
        assert_eq!(s[0].a(), [0.0, 0.0]);
        let behind = WorldLine { direction: Direction::Z, a: Vector3::new(1.0, 0.0, -5.0), b: Vector3::new(1.0, 0.0, -1.0) };
        assert!(project_scene(&[behind], &cam, &rot, 1e-6).is_empty());
        let crossing = WorldLine { direction: Direction::Z, a: Vector3::new(1.0, 0.0, -5.0), b: Vector3::new(1.0, 0.0, 5.0) };
        let s = project_scene(&[crossing], &cam, &rot, 0.5);
        assert_eq!(s.len(), 1);
        assert!((s[0].a()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = SceneSpec::cube(0);
        s.spurious_rate = 1.5;
        assert!(generate_scene(&s).is_err());
        let mut s = SceneSpec::cube(0);
        s.noise_px = -1.0;
        assert!(generate_scene(&s).is_err());
    }
}
