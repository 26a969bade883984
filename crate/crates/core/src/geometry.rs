//! Camera model, Manhattan frame recovery and back-projection.
//!
//! World and camera share their origin at the camera center. A world point
//! `P` images to `p ~ K R P`, so the world-space ray through pixel `p` is
//! `R⁻¹ K⁻¹ p` and every 3D endpoint is `λ` times that ray.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the three Manhattan axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
    Z,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::X, Direction::Y, Direction::Z];

    pub fn index(self) -> usize {
        match self {
            Direction::X => 0,
            Direction::Y => 1,
            Direction::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i % 3]
    }

    /// The two axes other than `self`, in x-y-z order.
    pub fn others(self) -> [Direction; 2] {
        match self {
            Direction::X => [Direction::Y, Direction::Z],
            Direction::Y => [Direction::X, Direction::Z],
            Direction::Z => [Direction::X, Direction::Y],
        }
    }

    /// The axis perpendicular to both `a` and `b`, if they differ.
    pub fn third(a: Direction, b: Direction) -> Option<Direction> {
        if a == b {
            return None;
        }
        Some(Direction::from_index(3 - a.index() - b.index()))
    }

    pub fn unit(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::X => "x",
            Direction::Y => "y",
            Direction::Z => "z",
        };
        f.write_str(s)
    }
}

/// Homogeneous image point in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2H {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl Point2H {
    pub fn new(u: f64, v: f64, w: f64) -> Self {
        Self { u, v, w }
    }

    /// Finite pixel `(u, v)`.
    pub fn pixel(u: f64, v: f64) -> Self {
        Self { u, v, w: 1.0 }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self { u: v.x, v: v.y, w: v.z }
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.w)
    }

    pub fn is_at_infinity(&self, eps: f64) -> bool {
        let scale = self.u.abs().max(self.v.abs()).max(self.w.abs());
        scale == 0.0 || self.w.abs() <= eps * scale
    }

    /// Dehomogenized pixel coordinates, `None` at infinity.
    pub fn to_pixel(&self) -> Option<[f64; 2]> {
        if self.w == 0.0 {
            None
        } else {
            Some([self.u / self.w, self.v / self.w])
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.u * c, self.v * c, self.w * c)
    }
}

/// Pinhole intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraIntrinsics {
    k: Matrix3<f64>,
    k_inv: Matrix3<f64>,
    pub image_width: u32,
    pub image_height: u32,
}

impl CameraIntrinsics {
    pub fn new(k: Matrix3<f64>, image_width: u32, image_height: u32) -> Result<Self> {
        if image_width == 0 || image_height == 0 {
            return Err(Error::InvalidCamera("image size must be positive".into()));
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCamera("non-finite intrinsic entry".into()));
        }
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
            return Err(Error::InvalidCamera("K must be upper triangular".into()));
        }
        if k[(0, 0)] <= 0.0 || k[(1, 1)] <= 0.0 || k[(2, 2)] <= 0.0 {
            return Err(Error::InvalidCamera("focal entries must be positive".into()));
        }
        let cx = k[(0, 2)] / k[(2, 2)];
        let cy = k[(1, 2)] / k[(2, 2)];
        if !(0.0..=image_width as f64).contains(&cx) || !(0.0..=image_height as f64).contains(&cy) {
            return Err(Error::InvalidCamera(format!(
                "principal point ({cx}, {cy}) outside {image_width}x{image_height} image"
            )));
        }
        let k_inv = k
            .try_inverse()
            .ok_or_else(|| Error::InvalidCamera("K is singular".into()))?;
        Ok(Self { k, k_inv, image_width, image_height })
    }

    pub fn from_focal(f: f64, cx: f64, cy: f64, image_width: u32, image_height: u32) -> Result<Self> {
        Self::new(Matrix3::new(f, 0.0, cx, 0.0, f, cy, 0.0, 0.0, 1.0), image_width, image_height)
    }

    /// Row-major 3x3, as stored in instance files.
    pub fn from_row_major(k: [f64; 9], image_width: u32, image_height: u32) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&k), image_width, image_height)
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = self.k[(r, c)];
            }
        }
        out
    }

    pub fn k(&self) -> &Matrix3<f64> {
        &self.k
    }

    pub fn k_inv(&self) -> &Matrix3<f64> {
        &self.k_inv
    }

    /// Camera-frame direction through a pixel, oriented toward positive depth.
    pub fn pixel_direction(&self, p: &Point2H) -> Vector3<f64> {
        let sign = if p.w < 0.0 { -1.0 } else { 1.0 };
        self.k_inv * p.to_vector() * sign
    }
}

/// Rotation taking world coordinates to camera coordinates. Its columns are
/// the world axes expressed in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldRotation(Matrix3<f64>);

impl WorldRotation {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(r: Matrix3<f64>) -> Result<Self> {
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(err <= Self::TOLERANCE) {
            return Err(Error::Degenerate(format!("rotation not orthonormal (error {err:e})")));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::Degenerate(format!("rotation determinant {det} != 1")));
        }
        Ok(Self(r))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Nearest rotation (Frobenius sense) to an arbitrary nonsingular matrix.
    pub fn nearest(m: &Matrix3<f64>) -> Result<Self> {
        let svd = m.svd(true, true);
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::Degenerate("SVD failed".into())),
        };
        let mut d = Matrix3::identity();
        if (u * vt).determinant() < 0.0 {
            d[(2, 2)] = -1.0;
        }
        Self::new(u * d * vt)
    }

    /// Rotation about a world axis by `angle` radians.
    pub fn about_axis(axis: Direction, angle: f64) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis.unit());
        Self(*nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &WorldRotation) -> Self {
        Self(self.0 * other.0)
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = self.0[(r, c)];
            }
        }
        out
    }

    pub fn from_row_major(r: [f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&r))
    }
}

/// World-frame ray direction, scaled so its largest-magnitude component is ±1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    d: Vector3<f64>,
}

impl Ray {
    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let m = v.amax();
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Degenerate("zero or non-finite ray".into()));
        }
        Ok(Self { d: v / m })
    }

    pub fn d(&self) -> &Vector3<f64> {
        &self.d
    }

    pub fn component(&self, axis: Direction) -> f64 {
        self.d[axis.index()]
    }

    pub fn max_component(&self) -> f64 {
        self.d.amax()
    }
}

/// Back-projects a finite image point to a world ray `R⁻¹ K⁻¹ p`.
pub fn backproject(cam: &CameraIntrinsics, rot: &WorldRotation, p: &Point2H) -> Result<Ray> {
    if p.w == 0.0 || !p.w.is_finite() {
        return Err(Error::Degenerate("cannot back-project a point at infinity".into()));
    }
    let cam_dir = cam.pixel_direction(p);
    Ray::from_vector(rot.matrix().transpose() * cam_dir)
}

/// Projects a world point, returning `None` when it is not in front of the camera.
pub fn project(cam: &CameraIntrinsics, rot: &WorldRotation, world: &Vector3<f64>) -> Option<Point2H> {
    let c = rot.matrix() * world;
    if c.z <= 0.0 {
        return None;
    }
    let p = cam.k() * c;
    Some(Point2H::pixel(p.x / p.z, p.y / p.z))
}

/// Raw image segment between two finite pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub p1: Point2H,
    pub p2: Point2H,
}

impl Segment2 {
    pub fn new(p1: Point2H, p2: Point2H) -> Self {
        Self { p1, p2 }
    }

    pub fn endpoints(&self) -> Option<([f64; 2], [f64; 2])> {
        Some((self.p1.to_pixel()?, self.p2.to_pixel()?))
    }

    pub fn length(&self) -> f64 {
        match self.endpoints() {
            Some((a, b)) => ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt(),
            None => 0.0,
        }
    }

    /// Unit normal of the plane through the camera center and the segment.
    fn interpretation_normal(&self, cam: &CameraIntrinsics) -> Option<Vector3<f64>> {
        let a = cam.pixel_direction(&self.p1);
        let b = cam.pixel_direction(&self.p2);
        a.cross(&b).try_normalize(1e-15)
    }
}

/// Vanishing points of the three Manhattan axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingPoints {
    pub vx: Point2H,
    pub vy: Point2H,
    pub vz: Point2H,
}

impl VanishingPoints {
    pub fn get(&self, axis: Direction) -> &Point2H {
        match axis {
            Direction::X => &self.vx,
            Direction::Y => &self.vy,
            Direction::Z => &self.vz,
        }
    }

    /// Vanishing points of a known camera pose.
    pub fn from_rotation(cam: &CameraIntrinsics, rot: &WorldRotation) -> Self {
        let vp = |axis: Direction| {
            let v = cam.k() * rot.matrix().column(axis.index());
            Point2H::from_vector(&(v / v.norm()))
        };
        Self { vx: vp(Direction::X), vy: vp(Direction::Y), vz: vp(Direction::Z) }
    }
}

/// Tuning for vanishing point estimation and direction labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VpConfig {
    pub ransac_iterations: usize,
    /// Max angle (degrees) between a vanishing direction and a line's
    /// interpretation plane for the line to count as an inlier.
    pub inlier_angle_deg: f64,
    /// Max deviation (degrees) of refined cluster directions from orthogonality.
    pub orthogonality_tol_deg: f64,
    pub refine_iterations: usize,
    /// Labeling threshold on the image-space angle (degrees).
    pub label_angle_deg: f64,
}

impl Default for VpConfig {
    fn default() -> Self {
        Self {
            ransac_iterations: 2000,
            inlier_angle_deg: 2.0,
            orthogonality_tol_deg: 2.0,
            refine_iterations: 10,
            label_angle_deg: 5.0,
        }
    }
}

fn sign_or(x: f64, fallback: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else if fallback >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Orients and names three camera-frame vanishing directions: y is the most
/// vertical one pointing up in the image, x points rightward, z completes a
/// right-handed frame.
fn canonical_frame(dirs: [Vector3<f64>; 3]) -> Result<WorldRotation> {
    let iy = (0..3)
        .max_by(|&a, &b| dirs[a].y.abs().total_cmp(&dirs[b].y.abs()))
        .unwrap_or(1);
    let rest: Vec<usize> = (0..3).filter(|&i| i != iy).collect();
    let (ix, iz) = if dirs[rest[0]].x.abs() >= dirs[rest[1]].x.abs() {
        (rest[0], rest[1])
    } else {
        (rest[1], rest[0])
    };
    let y = dirs[iy] * -sign_or(dirs[iy].y, dirs[iy].z);
    let x = dirs[ix] * sign_or(dirs[ix].x, dirs[ix].z);
    let z_ref = x.cross(&y);
    let z = dirs[iz] * sign_or(dirs[iz].dot(&z_ref), 1.0);
    WorldRotation::nearest(&Matrix3::from_columns(&[x, y, z]))
}

/// Rotation whose columns are the (orthogonalized) back-projected vanishing
/// directions, named and signed by the image-space convention.
///
/// The input labels of the three points are not used for naming; only their
/// directions matter, so any homogeneous rescaling leaves the result unchanged.
pub fn rotation_from_vanishing_points(vps: &VanishingPoints, cam: &CameraIntrinsics) -> Result<WorldRotation> {
    let dir = |p: &Point2H| -> Result<Vector3<f64>> {
        (cam.k_inv() * p.to_vector())
            .try_normalize(1e-300)
            .ok_or_else(|| Error::Degenerate("zero vanishing point".into()))
    };
    let dirs = [dir(&vps.vx)?, dir(&vps.vy)?, dir(&vps.vz)?];
    for a in 0..3 {
        for b in (a + 1)..3 {
            if dirs[a].cross(&dirs[b]).norm() < 1e-9 {
                return Err(Error::Degenerate("coincident vanishing points".into()));
            }
        }
    }
    canonical_frame(dirs)
}

struct WeightedNormal {
    n: Vector3<f64>,
    weight: f64,
}

fn cluster_of(n: &Vector3<f64>, dirs: &[Vector3<f64>; 3], sin_tol: f64) -> Option<usize> {
    let (best, res) = (0..3)
        .map(|k| (k, n.dot(&dirs[k]).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    (res < sin_tol).then_some(best)
}

/// Estimates the three Manhattan vanishing points and the world rotation.
///
/// RANSAC hypothesizes a first direction from two interpretation-plane
/// normals, a second from one more normal constrained orthogonal to it, and
/// completes the frame with a cross product. The best hypothesis (by inlier
/// length) is refined by alternating per-cluster least squares and
/// projection back onto rotations.
pub fn estimate_vanishing_points(
    segments: &[Segment2],
    cam: &CameraIntrinsics,
    config: &VpConfig,
    rng_seed: u64,
) -> Result<(VanishingPoints, WorldRotation)> {
    let normals: Vec<WeightedNormal> = segments
        .iter()
        .filter_map(|s| {
            Some(WeightedNormal { n: s.interpretation_normal(cam)?, weight: s.length().max(1e-9) })
        })
        .collect();
    if normals.len() < 6 {
        return Err(Error::VanishingPointEstimation(format!(
            "need at least 6 usable segments, got {}",
            normals.len()
        )));
    }
    let sin_tol = config.inlier_angle_deg.to_radians().sin();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let score = |dirs: &[Vector3<f64>; 3]| -> (f64, [usize; 3]) {
        let mut counts = [0usize; 3];
        let mut total = 0.0;
        for wn in &normals {
            if let Some(k) = cluster_of(&wn.n, dirs, sin_tol) {
                counts[k] += 1;
                total += wn.weight;
            }
        }
        (total, counts)
    };

    let mut best: Option<([Vector3<f64>; 3], f64)> = None;
    for _ in 0..config.ransac_iterations {
        let idx = sample(&mut rng, normals.len(), 3);
        let (a, b, c) = (idx.index(0), idx.index(1), idx.index(2));
        let Some(v1) = normals[a].n.cross(&normals[b].n).try_normalize(1e-9) else {
            continue;
        };
        let Some(v2) = normals[c].n.cross(&v1).try_normalize(1e-9) else {
            continue;
        };
        let v3 = v1.cross(&v2);
        let dirs = [v1, v2, v3];
        let (s, counts) = score(&dirs);
        if counts.iter().filter(|&&c| c >= 2).count() < 3 {
            continue;
        }
        if best.as_ref().map_or(true, |(_, bs)| s > *bs) {
            best = Some((dirs, s));
        }
    }
    let Some((mut dirs, _)) = best else {
        return Err(Error::VanishingPointEstimation(
            "no hypothesis with three populated orthogonal clusters".into(),
        ));
    };

    for _ in 0..config.refine_iterations {
        let mut scatter = [Matrix3::<f64>::zeros(); 3];
        let mut counts = [0usize; 3];
        for wn in &normals {
            if let Some(k) = cluster_of(&wn.n, &dirs, 2.0 * sin_tol) {
                scatter[k] += wn.n * wn.n.transpose() * wn.weight;
                counts[k] += 1;
            }
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::VanishingPointEstimation(format!(
                "cluster sizes {counts:?} after refinement"
            )));
        }
        let mut fitted = dirs;
        for k in 0..3 {
            let eig = scatter[k].symmetric_eigen();
            let imin = eig.eigenvalues.imin();
            let mut v: Vector3<f64> = eig.eigenvectors.column(imin).into_owned();
            if v.dot(&dirs[k]) < 0.0 {
                v = -v;
            }
            fitted[k] = v;
        }
        let r = WorldRotation::nearest(&Matrix3::from_columns(&fitted))
            .or_else(|_| {
                let m = Matrix3::from_columns(&[fitted[0], fitted[1], -fitted[2]]);
                WorldRotation::nearest(&m)
            })
            .map_err(|e| Error::VanishingPointEstimation(e.to_string()))?;
        let max_dev = (0..3)
            .map(|k| {
                let col: Vector3<f64> = r.matrix().column(k).into_owned();
                col.dot(&fitted[k]).abs().min(1.0).acos()
            })
            .fold(0.0f64, f64::max);
        if max_dev > config.orthogonality_tol_deg.to_radians() {
            return Err(Error::VanishingPointEstimation(format!(
                "cluster directions deviate {:.2} deg from orthogonality",
                max_dev.to_degrees()
            )));
        }
        let next = [
            r.matrix().column(0).into_owned(),
            r.matrix().column(1).into_owned(),
            r.matrix().column(2).into_owned(),
        ];
        let change = (0..3).map(|k| (next[k] - dirs[k]).norm()).fold(0.0f64, f64::max);
        dirs = next;
        if change < 1e-13 {
            break;
        }
    }

    let rot = canonical_frame(dirs).map_err(|e| Error::VanishingPointEstimation(e.to_string()))?;
    Ok((VanishingPoints::from_rotation(cam, &rot), rot))
}

/// Rotation fitted to segments whose axes are already known. Each axis is the
/// direction most orthogonal to its segments' interpretation planes; an axis
/// with fewer than two segments is completed from the other two.
pub fn rotation_from_labeled_segments(
    segments: &[(Segment2, Direction)],
    cam: &CameraIntrinsics,
) -> Result<WorldRotation> {
    let mut scatter = [Matrix3::<f64>::zeros(); 3];
    let mut counts = [0usize; 3];
    for (seg, d) in segments {
        if let Some(n) = seg.interpretation_normal(cam) {
            scatter[d.index()] += n * n.transpose() * seg.length().max(1e-9);
            counts[d.index()] += 1;
        }
    }
    let fit = |k: usize| -> Option<Vector3<f64>> {
        if counts[k] < 2 {
            return None;
        }
        let eig = scatter[k].symmetric_eigen();
        Some(eig.eigenvectors.column(eig.eigenvalues.imin()).into_owned())
    };
    let mut dirs = [fit(0), fit(1), fit(2)];
    let missing: Vec<usize> = (0..3).filter(|&k| dirs[k].is_none()).collect();
    match missing.len() {
        0 => {}
        1 => {
            let k = missing[0];
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let (Some(va), Some(vb)) = (dirs[a], dirs[b]) else { unreachable!() };
            dirs[k] = va.cross(&vb).try_normalize(1e-12);
        }
        _ => {
            return Err(Error::VanishingPointEstimation(format!(
                "labeled segments per axis {counts:?}; need two axes with at least 2 each"
            )))
        }
    }
    let [Some(mut x), Some(mut y), Some(mut z)] = dirs else {
        return Err(Error::VanishingPointEstimation("degenerate labeled directions".into()));
    };
    y *= -sign_or(y.y, y.z);
    x *= sign_or(x.x, x.z);
    z *= sign_or(z.dot(&x.cross(&y)), 1.0);
    WorldRotation::nearest(&Matrix3::from_columns(&[x, y, z]))
        .map_err(|e| Error::VanishingPointEstimation(e.to_string()))
}

/// Angle (radians, in `[0, π/2]`) between the segment and the line joining
/// its midpoint to the vanishing point.
pub fn angle_to_vanishing_point(seg: &Segment2, vp: &Point2H) -> Option<f64> {
    let (a, b) = seg.endpoints()?;
    let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let s = [b[0] - a[0], b[1] - a[1]];
    let t = [vp.u - m[0] * vp.w, vp.v - m[1] * vp.w];
    let ns = (s[0] * s[0] + s[1] * s[1]).sqrt();
    let nt = (t[0] * t[0] + t[1] * t[1]).sqrt();
    if ns == 0.0 || nt == 0.0 {
        return None;
    }
    let cross = (s[0] * t[1] - s[1] * t[0]).abs();
    let dot = (s[0] * t[0] + s[1] * t[1]).abs();
    Some(cross.atan2(dot))
}

/// Assigns the Manhattan axis whose vanishing point best explains the
/// segment, or `None` when even the best exceeds `max_angle_deg`.
pub fn label_direction(seg: &Segment2, vps: &VanishingPoints, max_angle_deg: f64) -> Option<Direction> {
    let (axis, angle) = Direction::ALL
        .iter()
        .filter_map(|&d| Some((d, angle_to_vanishing_point(seg, vps.get(d))?)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    (angle <= max_angle_deg.to_radians()).then_some(axis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye_cam() -> CameraIntrinsics {
        CameraIntrinsics::new(Matrix3::identity(), 2, 2).unwrap()
    }

    #[test]
    fn backproject_identity() {
        let r = backproject(&eye_cam(), &WorldRotation::identity(), &Point2H::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(*r.d(), Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn backproject_focal_matches_linear_solve() {
        let cam = CameraIntrinsics::from_focal(100.0, 0.0, 0.0, 640, 480).unwrap();
        let p = Point2H::pixel(100.0, 0.0);
        let r = backproject(&cam, &WorldRotation::identity(), &p).unwrap();
        // independent route: solve K x = p by LU
        let x = cam.k().lu().solve(&p.to_vector()).unwrap();
        let x = x / x.amax();
        assert!((r.d() - x).norm() < 1e-15);
        assert!((r.d() - Vector3::new(1.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn backproject_z_rotation_fixes_optical_axis() {
        let rot = WorldRotation::about_axis(Direction::Z, std::f64::consts::FRAC_PI_2);
        let r = backproject(&eye_cam(), &rot, &Point2H::new(0.0, 0.0, 1.0)).unwrap();
        assert!((r.d() - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn backproject_rejects_infinity() {
        let e = backproject(&eye_cam(), &WorldRotation::identity(), &Point2H::new(1.0, 0.0, 0.0));
        assert!(matches!(e, Err(Error::Degenerate(_))));
    }

    #[test]
    fn negative_w_points_forward() {
        let cam = CameraIntrinsics::from_focal(100.0, 50.0, 50.0, 100, 100).unwrap();
        let a = backproject(&cam, &WorldRotation::identity(), &Point2H::new(60.0, 70.0, 1.0)).unwrap();
        let b = backproject(&cam, &WorldRotation::identity(), &Point2H::new(-120.0, -140.0, -2.0)).unwrap();
        assert!((a.d() - b.d()).norm() < 1e-15);
        assert!(a.d().z > 0.0);
    }

    #[test]
    fn camera_validation() {
        assert!(CameraIntrinsics::from_focal(-1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::from_focal(1.0, 10.0, 1.0, 4, 4).is_err());
        let mut k = Matrix3::identity();
        k[(1, 0)] = 0.5;
        assert!(CameraIntrinsics::new(k, 4, 4).is_err());
    }

    #[test]
    fn direction_helpers() {
        assert_eq!(Direction::third(Direction::X, Direction::Y), Some(Direction::Z));
        assert_eq!(Direction::third(Direction::Z, Direction::X), Some(Direction::Y));
        assert_eq!(Direction::third(Direction::Y, Direction::Y), None);
        assert_eq!(Direction::Y.others(), [Direction::X, Direction::Z]);
    }

    fn vps_axis_aligned() -> VanishingPoints {
        // x at infinity to the right, y at infinity downward, z at the origin
        VanishingPoints {
            vx: Point2H::new(1.0, 0.0, 0.0),
            vy: Point2H::new(0.0, 1.0, 0.0),
            vz: Point2H::new(0.0, 0.0, 1.0),
        }
    }

    #[test]
    fn label_exact_alignment() {
        let vps = vps_axis_aligned();
        let seg = Segment2::new(Point2H::pixel(10.0, 50.0), Point2H::pixel(40.0, 50.0));
        assert_eq!(label_direction(&seg, &vps, 5.0), Some(Direction::X));
        let seg = Segment2::new(Point2H::pixel(10.0, 10.0), Point2H::pixel(20.0, 20.0));
        assert_eq!(label_direction(&seg, &vps, 5.0), Some(Direction::Z));
    }

    #[test]
    fn label_ambiguous_is_unlabeled() {
        // segment at 45 deg to x and y, and perpendicular-ish to the midpoint->origin line
        let vps = vps_axis_aligned();
        let seg = Segment2::new(Point2H::pixel(90.0, 110.0), Point2H::pixel(110.0, 90.0));
        assert_eq!(label_direction(&seg, &vps, 5.0), None);
    }

    #[test]
    fn rotation_from_exact_vps() {
        let cam = CameraIntrinsics::from_focal(800.0, 320.0, 240.0, 640, 480).unwrap();
        let rot = WorldRotation::about_axis(Direction::Y, 0.6)
            .compose(&WorldRotation::about_axis(Direction::X, -0.2));
        let rot = WorldRotation::about_axis(Direction::X, 0.15).compose(&rot);
        let vps = VanishingPoints::from_rotation(&cam, &rot);
        let r = rotation_from_vanishing_points(&vps, &cam).unwrap();
        let err = (r.matrix().transpose() * r.matrix() - Matrix3::identity()).abs().max();
        assert!(err < 1e-12);
        // each recovered column is parallel to a generating column
        for k in 0..3 {
            let c: Vector3<f64> = r.matrix().column(k).into_owned();
            let best = (0..3)
                .map(|j| c.dot(&rot.matrix().column(j).into_owned()).abs())
                .fold(0.0, f64::max);
            assert!((best - 1.0).abs() < 1e-12);
        }
    }
}
