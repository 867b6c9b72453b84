use crate::scene::{resolve_dynamic_binding, segment_move_episodes, Demonstration, Frame, ObjectId, RoleBinding};

use super::calculi::{eval_cd, eval_mv, eval_mv_dir, eval_qdc, eval_qtc_c1, eval_qtc_c3};
use super::value::{FeatureKind, FeatureValue};
use super::{Binding, FeatureError, FeatureFunction, QuantizationConfig};

/// Objects a feature function resolved to at one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundObjects {
    One(ObjectId),
    Two(ObjectId, ObjectId),
}

/// One entry per frame; `None` where the binding does not resolve or the
/// calculus is undefined (e.g. QTC_C3 with coincident objects).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    pub values: Vec<Option<FeatureValue>>,
    pub bound: Vec<Option<BoundObjects>>,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn indexed(&self) -> Vec<(usize, Option<FeatureValue>)> {
        self.values.iter().copied().enumerate().collect()
    }
}

fn resolve(role: &str, roles: &RoleBinding) -> Result<ObjectId, FeatureError> {
    roles.object(role).cloned().ok_or_else(|| FeatureError::UnresolvedRole(role.to_string()))
}

fn eval_at(
    kind: FeatureKind,
    objects: &BoundObjects,
    frames: &[Frame],
    t: usize,
    cfg: &QuantizationConfig,
) -> Result<Option<FeatureValue>, FeatureError> {
    let (a, b) = if t + 1 < frames.len() { (t, t + 1) } else { (t - 1, t) };
    let missing = |id: &ObjectId| FeatureError::MissingObject(id.clone());
    let value = match (kind, objects) {
        (FeatureKind::Mv, BoundObjects::One(x)) => eval_mv(x, &frames[a], &frames[b], cfg)?,
        (FeatureKind::MvDir, BoundObjects::One(x)) => eval_mv_dir(x, &frames[a], &frames[b], cfg)?,
        (FeatureKind::Cd, BoundObjects::Two(x, y)) => {
            let f = &frames[t];
            eval_cd(f.pose(x).ok_or_else(|| missing(x))?, f.pose(y).ok_or_else(|| missing(y))?, cfg)
        }
        (FeatureKind::Qdc, BoundObjects::Two(x, y)) => {
            let f = &frames[t];
            eval_qdc(f.pose(x).ok_or_else(|| missing(x))?, f.pose(y).ok_or_else(|| missing(y))?, cfg)
        }
        (FeatureKind::QtcC1, BoundObjects::Two(x, y)) => eval_qtc_c1(x, y, &frames[a], &frames[b], cfg)?,
        (FeatureKind::QtcC3, BoundObjects::Two(x, y)) => match eval_qtc_c3(x, y, &frames[a], &frames[b], cfg) {
            Ok(v) => v,
            Err(FeatureError::UndefinedReferenceLine(..)) => return Ok(None),
            Err(e) => return Err(e),
        },
        _ => return Err(FeatureError::ArityMismatch(kind)),
    };
    Ok(Some(value))
}

/// Evaluates `f` at every frame. Transition-based kinds use the motion from
/// `t` to `t + 1`; the last frame repeats the final transition so the
/// sequence is as long as `frames`.
pub fn extract_on_frames(
    frames: &[Frame],
    roles: &RoleBinding,
    f: &FeatureFunction,
    cfg: &QuantizationConfig,
) -> Result<FeatureSequence, FeatureError> {
    if frames.len() < 2 {
        return Err(FeatureError::TooFewFrames);
    }
    let n = frames.len();
    let bound: Vec<Option<BoundObjects>> = match &f.binding {
        Binding::Unary(r) => vec![Some(BoundObjects::One(resolve(r, roles)?)); n],
        Binding::Pair(x, y) => vec![Some(BoundObjects::Two(resolve(x, roles)?, resolve(y, roles)?)); n],
        Binding::LastCurrent => {
            let episodes = segment_move_episodes(frames, cfg.motion_threshold);
            (0..n)
                .map(|t| {
                    resolve_dynamic_binding(n, &episodes, t)
                        .expect("frame index in range")
                        .map(|(l, c)| BoundObjects::Two(l, c))
                })
                .collect()
        }
    };
    let values = bound
        .iter()
        .enumerate()
        .map(|(t, objs)| match objs {
            Some(o) => eval_at(f.kind, o, frames, t, cfg),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureSequence { values, bound })
}

pub fn extract_feature_sequence(
    d: &Demonstration,
    f: &FeatureFunction,
    cfg: &QuantizationConfig,
) -> Result<FeatureSequence, FeatureError> {
    extract_on_frames(&d.frames, &d.roles, f, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::value::{MoveDir, QdcBand, QtcSign};
    use crate::scene::{generate_synthetic, GeneratorParams, SyntheticKind};

    fn circle() -> Demonstration {
        generate_synthetic(SyntheticKind::CircleAround, &GeneratorParams::default(), 7).unwrap()
    }

    #[test]
    fn stationary_reference_never_moves() {
        let seq = extract_feature_sequence(
            &circle(),
            &FeatureFunction::unary(FeatureKind::Mv, "B"),
            &QuantizationConfig::default(),
        )
        .unwrap();
        assert_eq!(seq.len(), 64);
        assert!(seq.values.iter().all(|v| *v == Some(FeatureValue::Mv(false))));
    }

    #[test]
    fn clockwise_orbit_is_minus_everywhere() {
        let d = circle();
        let seq = extract_feature_sequence(
            &d,
            &FeatureFunction::pair(FeatureKind::QtcC3, "A", "B"),
            &QuantizationConfig::default(),
        )
        .unwrap();
        assert!(seq.values.iter().all(|v| *v == Some(FeatureValue::QtcC3(QtcSign::Minus))));
        // independent per-transition oracle: sign of cross((A - B), dA)
        let (a, b) = (ObjectId::from("block_red"), ObjectId::from("block_green"));
        for w in d.frames.windows(2) {
            let (pa, pb, pn) = (w[0].pose(&a).unwrap().pos, w[0].pose(&b).unwrap().pos, w[1].pose(&a).unwrap().pos);
            let cross = (pa[0] - pb[0]) * (pn[1] - pa[1]) - (pa[1] - pb[1]) * (pn[0] - pa[0]);
            assert!(cross < 0.0);
        }
    }

    #[test]
    fn unknown_role_is_an_error() {
        let err = extract_feature_sequence(
            &circle(),
            &FeatureFunction::unary(FeatureKind::Mv, "Z"),
            &QuantizationConfig::default(),
        );
        assert!(matches!(err, Err(FeatureError::UnresolvedRole(_))));
    }

    #[test]
    fn dynamic_qdc_on_row_is_constant_per_episode_tail() {
        let d = generate_synthetic(SyntheticKind::BuildRow, &GeneratorParams::default(), 5).unwrap();
        let cfg = QuantizationConfig::default();
        let seq = extract_feature_sequence(&d, &FeatureFunction::dynamic(FeatureKind::Qdc), &cfg).unwrap();
        let episodes = segment_move_episodes(&d.frames, cfg.motion_threshold);
        assert_eq!(episodes.len(), 3);
        for ep in &episodes[1..] {
            let tail: Vec<_> = (ep.start_frame..=ep.end_frame).map(|t| seq.values[t]).collect();
            // the generator keeps the moving block within 1.3..2.5 of its left neighbour
            assert!(tail.iter().all(|v| *v == Some(FeatureValue::Qdc(QdcBand(1)))), "{tail:?}");
        }
        // outside episodes the dynamic binding is undefined
        assert_eq!(seq.values[0], None);
    }

    #[test]
    fn last_frame_repeats_final_transition() {
        let d =
            generate_synthetic(SyntheticKind::TranslateEast, &GeneratorParams { frames: 2, ..Default::default() }, 1)
                .unwrap();
        let seq = extract_feature_sequence(
            &d,
            &FeatureFunction::unary(FeatureKind::MvDir, "X"),
            &QuantizationConfig::default(),
        )
        .unwrap();
        let east = Some(FeatureValue::MvDir(MoveDir::Dir(crate::features::Compass::E)));
        assert_eq!(seq.values, vec![east, east]);
    }
}
