//! Camera geometry: estimate the Manhattan frame from unlabeled segments,
//! label each segment, and back-project its endpoints.
//!
//! `cargo run --example vanishing_points`

use linelift::geometry::{
    backproject, estimate_vanishing_points, label_direction, Direction, Point2H, Segment2, VpConfig,
};
use linelift::synth::{generate_scene, SceneSpec};

fn main() -> linelift::Result<()> {
    let (instance, _) = generate_scene(&SceneSpec::boxes(3))?;
    let cam = instance.intrinsics()?;
    let truth = instance.world_rotation()?.expect("synthetic scenes carry their rotation");
    let segments: Vec<Segment2> = instance
        .lines
        .iter()
        .map(|l| Segment2::new(Point2H::pixel(l.p1[0], l.p1[1]), Point2H::pixel(l.p2[0], l.p2[1])))
        .collect();

    let config = VpConfig::default();
    let (vps, rot) = estimate_vanishing_points(&segments, &cam, &config, 7)?;
    let err = (rot.matrix() - truth.matrix()).abs().max();
    println!("estimated rotation, largest entry error {err:.2e}");
    for axis in [Direction::X, Direction::Y, Direction::Z] {
        let vp = vps.get(axis);
        match vp.to_pixel() {
            Some([u, v]) => println!("  {axis} vanishing point at ({u:.1}, {v:.1})"),
            None => println!("  {axis} vanishing point at infinity"),
        }
    }

    let mut agree = 0;
    for (line, seg) in instance.lines.iter().zip(&segments) {
        let label = label_direction(seg, &vps, config.label_angle_deg);
        if label.is_some() && label == line.dir {
            agree += 1;
        }
    }
    println!("{agree} of {} segments labeled like the generator", segments.len());

    let first = &instance.lines[0];
    let ray = backproject(&cam, &rot, &Point2H::pixel(first.p1[0], first.p1[1]))?;
    println!("line {} first endpoint ray {:?}", first.id, ray.d().as_slice());
    Ok(())
}
