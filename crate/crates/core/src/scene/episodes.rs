use super::model::{Frame, MoveEpisode, ObjectId};
use super::SceneError;

/// Default per-frame displacement above which an object counts as moving.
pub const DEFAULT_MOTION_THRESHOLD: f64 = 0.01;

fn movers(a: &Frame, b: &Frame, threshold: f64) -> Vec<ObjectId> {
    a.poses
        .iter()
        .filter(|pa| b.pose(&pa.id).map(|pb| pa.distance_to(pb) > threshold).unwrap_or(false))
        .map(|pa| pa.id.clone())
        .collect()
}

/// Splits a dense frame sequence into single-mover episodes.
///
/// Transition `i` (frame `i` to `i + 1`) belongs to an episode when exactly
/// one object moves farther than `motion_threshold`. A pause of even one
/// transition ends the episode. When a new mover takes over on the very next
/// transition, the shared boundary frame stays with the earlier episode.
pub fn segment_move_episodes(frames: &[Frame], motion_threshold: f64) -> Vec<MoveEpisode> {
    let mut episodes: Vec<MoveEpisode> = Vec::new();
    let mut current: Option<MoveEpisode> = None;

    let close = |ep: MoveEpisode, episodes: &mut Vec<MoveEpisode>| {
        let mut ep = ep;
        if let Some(prev) = episodes.last() {
            if ep.start_frame <= prev.end_frame {
                ep.start_frame = prev.end_frame + 1;
            }
        }
        if ep.start_frame < ep.end_frame {
            episodes.push(ep);
        }
    };

    for (i, w) in frames.windows(2).enumerate() {
        let moving = movers(&w[0], &w[1], motion_threshold);
        let single = if moving.len() == 1 { moving.into_iter().next() } else { None };
        match (current.take(), single) {
            (Some(mut ep), Some(m)) if ep.mover == m => {
                ep.end_frame = i + 1;
                current = Some(ep);
            }
            (prev, Some(m)) => {
                if let Some(ep) = prev {
                    close(ep, &mut episodes);
                }
                current = Some(MoveEpisode { mover: m, start_frame: i, end_frame: i + 1 });
            }
            (prev, None) => {
                if let Some(ep) = prev {
                    close(ep, &mut episodes);
                }
            }
        }
    }
    if let Some(ep) = current {
        close(ep, &mut episodes);
    }
    episodes
}

/// Resolves the dynamic `(last moved, currently moved)` pair at frame `t`.
///
/// The "last moved" object is the mover of the closest earlier episode whose
/// mover differs from the current one, so a block that pauses mid-move does
/// not become its own predecessor.
pub fn resolve_dynamic_binding(
    frame_count: usize,
    episodes: &[MoveEpisode],
    t: usize,
) -> Result<Option<(ObjectId, ObjectId)>, SceneError> {
    if t >= frame_count {
        return Err(SceneError::FrameOutOfRange { frame: t, len: frame_count });
    }
    let Some(idx) = episodes.iter().position(|ep| ep.contains(t)) else {
        return Ok(None);
    };
    let current = &episodes[idx].mover;
    let last = episodes[..idx].iter().rev().find(|ep| &ep.mover != current).map(|ep| ep.mover.clone());
    Ok(last.map(|l| (l, current.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::model::ObjectPose;

    /// X moves during transitions `x_moves`, Y during `y_moves`.
    fn scripted(n: usize, x_moves: impl Fn(usize) -> bool, y_moves: impl Fn(usize) -> bool) -> Vec<Frame> {
        let (mut x, mut y) = (0.0, 5.0);
        let mut frames = vec![Frame::new(0.0, vec![ObjectPose::new("X", x, 0.0), ObjectPose::new("Y", y, 0.0)])];
        for i in 0..n - 1 {
            if x_moves(i) {
                x += 0.1;
            }
            if y_moves(i) {
                y += 0.1;
            }
            frames.push(Frame::new((i + 1) as f64, vec![ObjectPose::new("X", x, 0.0), ObjectPose::new("Y", y, 0.0)]));
        }
        frames
    }

    fn ep(m: &str, s: usize, e: usize) -> MoveEpisode {
        MoveEpisode { mover: ObjectId::from(m), start_frame: s, end_frame: e }
    }

    #[test]
    fn two_sequential_moves() {
        let frames = scripted(21, |i| i < 10, |i| (12..20).contains(&i));
        let eps = segment_move_episodes(&frames, 0.01);
        assert_eq!(eps, vec![ep("X", 0, 10), ep("Y", 12, 20)]);
    }

    #[test]
    fn static_scene_has_no_episodes() {
        let frames = scripted(10, |_| false, |_| false);
        assert!(segment_move_episodes(&frames, 0.01).is_empty());
    }

    #[test]
    fn simultaneous_motion_has_no_episodes() {
        let frames = scripted(10, |_| true, |_| true);
        assert!(segment_move_episodes(&frames, 0.01).is_empty());
    }

    #[test]
    fn back_to_back_movers_do_not_share_a_frame() {
        let frames = scripted(21, |i| i < 10, |i| (10..20).contains(&i));
        let eps = segment_move_episodes(&frames, 0.01);
        assert_eq!(eps, vec![ep("X", 0, 10), ep("Y", 11, 20)]);
    }

    #[test]
    fn pause_splits_an_episode() {
        let frames = scripted(21, |i| i < 5 || (6..10).contains(&i), |_| false);
        let eps = segment_move_episodes(&frames, 0.01);
        assert_eq!(eps, vec![ep("X", 0, 5), ep("X", 6, 10)]);
    }

    #[test]
    fn dynamic_binding_cases() {
        let frames = scripted(21, |i| i < 10, |i| (12..20).contains(&i));
        let eps = segment_move_episodes(&frames, 0.01);
        let n = frames.len();
        let inside_second = resolve_dynamic_binding(n, &eps, 15).unwrap();
        assert_eq!(inside_second, Some((ObjectId::from("X"), ObjectId::from("Y"))));
        assert_eq!(resolve_dynamic_binding(n, &eps, 4).unwrap(), None);
        assert_eq!(resolve_dynamic_binding(n, &eps, 11).unwrap(), None);
        assert!(resolve_dynamic_binding(n, &eps, 21).is_err());
        // stable through the whole second episode
        for t in 12..=20 {
            assert_eq!(resolve_dynamic_binding(n, &eps, t).unwrap(), inside_second);
        }
    }

    #[test]
    fn paused_mover_is_not_its_own_predecessor() {
        let eps = vec![ep("X", 0, 4), ep("Y", 6, 9), ep("Y", 11, 14)];
        assert_eq!(resolve_dynamic_binding(20, &eps, 12).unwrap(), Some((ObjectId::from("X"), ObjectId::from("Y"))));
    }
}
