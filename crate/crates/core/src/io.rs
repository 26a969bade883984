//! Instance, ground-truth and reconstruction files, plus OBJ export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Direction, WorldRotation};
use crate::milp::Reconstruction;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    /// Intrinsic matrix, row-major.
    pub k: [f64; 9],
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub id: u32,
    pub p1: [f64; 2],
    pub p2: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeLabel {
    pub i: u32,
    pub j: u32,
    pub real: bool,
}

/// Detected lines of one image with its camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneInstance {
    pub schema_version: u32,
    pub camera: CameraRecord,
    /// World-to-camera rotation, row-major. Estimated from the lines when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[f64; 9]>,
    pub lines: Vec<LineRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<Vec<EdgeLabel>>,
}

impl SceneInstance {
    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::from_row_major(self.camera.k, self.camera.width, self.camera.height)
    }

    pub fn world_rotation(&self) -> Result<Option<WorldRotation>> {
        self.rotation.map(WorldRotation::from_row_major).transpose()
    }

    pub fn all_labeled(&self) -> bool {
        self.lines.iter().all(|l| l.dir.is_some())
    }

    pub fn label(&self, i: u32, j: u32) -> Option<bool> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.gt.as_ref()?.iter().find(|e| (e.i.min(e.j), e.i.max(e.j)) == (a, b)).map(|e| e.real)
    }

    /// Semantic checks beyond the JSON shape.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        let mut ids: Vec<u32> = self.lines.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(schema("lines", format!("duplicate line id {}", w[0])));
        }
        for (k, l) in self.lines.iter().enumerate() {
            if l.p1.iter().chain(&l.p2).any(|v| !v.is_finite()) {
                return Err(schema(&format!("lines[{k}]"), "non-finite endpoint".into()));
            }
        }
        if self.camera.k.iter().any(|v| !v.is_finite()) {
            return Err(schema("camera.k", "non-finite entry".into()));
        }
        Ok(())
    }

    /// Line ids with an endpoint outside the image (allowed, but worth a warning).
    pub fn out_of_bounds(&self) -> Vec<u32> {
        let (w, h) = (self.camera.width as f64, self.camera.height as f64);
        let inside = |p: &[f64; 2]| p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= w && p[1] <= h;
        self.lines.iter().filter(|l| !inside(&l.p1) || !inside(&l.p2)).map(|l| l.id).collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let inst: Self = parse_json(s)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        to_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

fn schema(path: &str, message: String) -> Error {
    Error::Schema { path: path.to_string(), message }
}

/// Parses JSON, reporting the failing field path with line and column.
pub fn parse_json<T: DeserializeOwned>(s: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(s);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Schema {
            path: if path.is_empty() { ".".into() } else { path },
            message: format!("{} (line {}, column {})", strip_position(&inner.to_string()), inner.line(), inner.column()),
        }
    })
}

fn strip_position(msg: &str) -> &str {
    msg.find(" at line ").map_or(msg, |k| &msg[..k])
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    fs::write(path, to_json(v))?;
    Ok(())
}

/// Reconstruction as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub reconstruction: Reconstruction,
}

impl ReconstructionFile {
    pub fn new(reconstruction: Reconstruction) -> Self {
        Self { schema_version: SCHEMA_VERSION, reconstruction }
    }
}

/// Wavefront OBJ with one `l` element per 3D line, 12 significant digits.
pub fn to_obj(rec: &Reconstruction) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} lines", rec.lines.len());
    for l in &rec.lines {
        for p in [l.p1, l.p2] {
            let _ = writeln!(out, "v {:.11e} {:.11e} {:.11e}", p[0], p[1], p[2]);
        }
    }
    for k in 0..rec.lines.len() {
        let _ = writeln!(out, "l {} {}", 2 * k + 1, 2 * k + 2);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjModel {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex index pairs.
    pub lines: Vec<(usize, usize)>,
}

/// Reads `v` and two-point `l` elements; other statements are ignored.
pub fn parse_obj(s: &str) -> Result<ObjModel> {
    let mut m = ObjModel::default();
    for (n, line) in s.lines().enumerate() {
        let mut it = line.split_whitespace();
        let bad = |what: &str| schema(&format!("line {}", n + 1), what.to_string());
        match it.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for c in &mut p {
                    *c = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad vertex"))?;
                }
                m.vertices.push(p);
            }
            Some("l") => {
                let idx: Vec<usize> = it
                    .map(|t| t.split('/').next().and_then(|v| v.parse::<usize>().ok()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad("bad line element"))?;
                if idx.len() < 2 || idx.iter().any(|&i| i == 0 || i > m.vertices.len()) {
                    return Err(bad("line element references a missing vertex"));
                }
                for w in idx.windows(2) {
                    m.lines.push((w[0] - 1, w[1] - 1));
                }
            }
            _ => {}
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
  "schema_version": 1,
  "camera": {"k": [500, 0, 320, 0, 500, 240, 0, 0, 1], "width": 640, "height": 480},
  "lines": [
    {"id": 0, "p1": [10, 20], "p2": [100, 20], "dir": "x"},
    {"id": 1, "p1": [100, 20], "p2": [100, 200]}
  ]
}"#;

    #[test]
    fn parses_sample() {
        let inst = SceneInstance::from_json_str(SAMPLE).unwrap();
        assert_eq!(inst.lines.len(), 2);
        assert_eq!(inst.lines[0].dir, Some(Direction::X));
        assert!(!inst.all_labeled());
        assert!(inst.intrinsics().is_ok());
        let again = SceneInstance::from_json_str(&inst.to_json_string()).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn reports_field_path() {
        let bad = SAMPLE.replace("\"dir\": \"x\"", "\"dir\": \"w\"");
        match SceneInstance::from_json_str(&bad) {
            Err(Error::Schema { path, message }) => {
                assert_eq!(path, "lines[0].dir");
                assert!(message.contains("line 5"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let dup = SAMPLE.replace("\"id\": 1", "\"id\": 0");
        assert!(matches!(SceneInstance::from_json_str(&dup), Err(Error::Schema { .. })));
        assert!(matches!(SceneInstance::from_json_str("{"), Err(Error::Schema { .. })));
    }

    #[test]
    fn obj_round_trip() {
        use crate::milp::{Line3D, SolveStatus};
        let rec = Reconstruction {
            status: SolveStatus::Optimal,
            objective: 1.0,
            bound: 1.0,
            component: vec![3],
            lines: vec![Line3D { id: 3, direction: Direction::X, p1: [1.0 / 3.0, -2.5, 7.0], p2: [1e-7, 123456.789, -0.1] }],
            edges: vec![],
            slack_total: 0.0,
        };
        let m = parse_obj(&to_obj(&rec)).unwrap();
        assert_eq!(m.lines, vec![(0, 1)]);
        for (a, b) in m.vertices.iter().zip([rec.lines[0].p1, rec.lines[0].p2]) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 1e-9 * b[k].abs().max(1e-300));
            }
        }
    }
}
