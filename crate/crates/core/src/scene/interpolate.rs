use super::model::{normalize_yaw, Demonstration, Frame, ObjectPose, SourceKind};
use super::SceneError;

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Signed shortest-arc difference `to - from` in degrees, in `[-180, 180)`.
pub fn yaw_delta(from: f64, to: f64) -> f64 {
    (to - from + 180.0).rem_euclid(360.0) - 180.0
}

fn lerp_frame(a: &Frame, b: &Frame, t: f64) -> Frame {
    let u = (t - a.t) / (b.t - a.t);
    let poses = a
        .poses
        .iter()
        .map(|pa| {
            let pb = b.pose(&pa.id).expect("object sets validated");
            ObjectPose {
                id: pa.id.clone(),
                pos: [pa.pos[0] + (pb.pos[0] - pa.pos[0]) * u, pa.pos[1] + (pb.pos[1] - pa.pos[1]) * u],
                yaw: normalize_yaw(pa.yaw + yaw_delta(pa.yaw, pb.yaw) * u),
            }
        })
        .collect();
    Frame { t, poses }
}

/// Resamples `d` onto the grid `t0, t0 + dt, ...` (plus the original
/// timestamps, which are kept verbatim). Positions are linear, yaw follows
/// the shortest arc.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
pub fn interpolate_keyframes(d: &Demonstration, dt: f64) -> Result<Demonstration, SceneError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SceneError::InvalidStep(dt));
    }
    let t0 = d.frames[0].t;
    let t_end = d.frames[d.last_index()].t;

    let mut times: Vec<f64> = Vec::new();
    let mut k = 0u64;
    loop {
        let t = t0 + k as f64 * dt;
        if t > t_end && !same_time(t, t_end) {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.extend(d.frames.iter().map(|f| f.t));
    times.sort_by(f64::total_cmp);

    let mut frames: Vec<Frame> = Vec::with_capacity(times.len());
    let mut seg = 0usize;
    for t in times {
        if let Some(last) = frames.last() {
            if same_time(last.t, t) {
                continue;
            }
        }
        if let Some(orig) = d.frames.iter().find(|f| same_time(f.t, t)) {
            frames.push(orig.clone());
            continue;
        }
        while seg + 1 < d.last_index() && d.frames[seg + 1].t < t {
            seg += 1;
        }
        frames.push(lerp_frame(&d.frames[seg], &d.frames[seg + 1], t));
    }

    Demonstration::new(d.name.clone(), d.signature.clone(), frames, d.roles.clone(), SourceKind::DenseStream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::model::{ActionSignature, RoleBinding};

    fn demo(frames: Vec<Frame>) -> Demonstration {
        Demonstration::new(
            "k",
            ActionSignature::new("slide", &["A"], &[]),
            frames,
            RoleBinding::new().bind("A", "a", None),
            SourceKind::Keyframes,
        )
        .unwrap()
    }

    fn pose(x: f64, y: f64, yaw: f64) -> Vec<ObjectPose> {
        vec![ObjectPose::new("a", x, y).with_yaw(yaw)]
    }

    #[test]
    fn midpoint_is_linear() {
        let d = demo(vec![Frame::new(0.0, pose(0.0, 0.0, 0.0)), Frame::new(1.0, pose(2.0, 0.0, 0.0))]);
        let dense = interpolate_keyframes(&d, 0.5).unwrap();
        assert_eq!(dense.frames.len(), 3);
        assert_eq!(dense.frames[1].poses[0].pos, [1.0, 0.0]);
    }

    #[test]
    fn yaw_takes_shortest_arc() {
        let d = demo(vec![Frame::new(0.0, pose(0.0, 0.0, 350.0)), Frame::new(1.0, pose(0.0, 0.0, 10.0))]);
        let dense = interpolate_keyframes(&d, 0.5).unwrap();
        let mid = dense.frames[1].poses[0].yaw;
        // oracle: the short way from 350 to 10 passes through 0 (== 360)
        assert!(mid.abs() < 1e-9 || (mid - 360.0).abs() < 1e-9, "mid yaw {mid}");
        assert!((0.0..360.0).contains(&mid));
    }

    #[test]
    fn oversized_step_keeps_endpoints_only() {
        let d = demo(vec![Frame::new(0.0, pose(0.0, 0.0, 0.0)), Frame::new(1.0, pose(2.0, 0.0, 0.0))]);
        let dense = interpolate_keyframes(&d, 5.0).unwrap();
        assert_eq!(dense.frames, d.frames);
    }

    #[test]
    fn off_grid_keyframes_preserved() {
        let d = demo(vec![
            Frame::new(0.0, pose(0.0, 0.0, 0.0)),
            Frame::new(0.3, pose(3.0, 0.0, 0.0)),
            Frame::new(1.0, pose(3.0, 7.0, 0.0)),
        ]);
        let dense = interpolate_keyframes(&d, 0.25).unwrap();
        let ts: Vec<f64> = dense.frames.iter().map(|f| f.t).collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert_eq!(dense.frames[2], d.frames[1]);
        // x stays at 3 after t = 0.3, y rises linearly from 0 to 7
        let f = &dense.frames[3];
        assert!((f.poses[0].pos[0] - 3.0).abs() < 1e-12);
        assert!((f.poses[0].pos[1] - 7.0 * (0.2 / 0.7)).abs() < 1e-12);
    }

    #[test]
    fn non_positive_step_rejected() {
        let d = demo(vec![Frame::new(0.0, pose(0.0, 0.0, 0.0)), Frame::new(1.0, pose(2.0, 0.0, 0.0))]);
        assert!(matches!(interpolate_keyframes(&d, 0.0), Err(SceneError::InvalidStep(_))));
        assert!(matches!(interpolate_keyframes(&d, -1.0), Err(SceneError::InvalidStep(_))));
    }

    #[test]
    fn dense_input_is_fixed_point() {
        let frames: Vec<Frame> = (0..11)
            .map(|i| Frame::new(i as f64 * 0.1, pose((i as f64).sin(), i as f64 * 0.3, i as f64 * 40.0)))
            .collect();
        let d = demo(frames);
        let again = interpolate_keyframes(&d, 0.1).unwrap();
        assert_eq!(again.frames, d.frames);
    }
}
