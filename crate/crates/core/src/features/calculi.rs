//! Per-frame evaluators for each qualitative calculus.

use crate::scene::{Frame, ObjectId, ObjectPose};

use super::value::{CdValue, Compass, FeatureValue, MoveDir, QdcBand, QtcSign};
use super::{FeatureError, QuantizationConfig};

fn pose<'a>(frame: &'a Frame, id: &ObjectId) -> Result<&'a ObjectPose, FeatureError> {
    frame.pose(id).ok_or_else(|| FeatureError::MissingObject(id.clone()))
}

fn displacement(id: &ObjectId, a: &Frame, b: &Frame) -> Result<[f64; 2], FeatureError> {
    let (pa, pb) = (pose(a, id)?, pose(b, id)?);
    Ok([pb.pos[0] - pa.pos[0], pb.pos[1] - pa.pos[1]])
}

/// Compass direction of `target` as seen from `reference`.
pub fn eval_cd(target: &ObjectPose, reference: &ObjectPose, cfg: &QuantizationConfig) -> FeatureValue {
    let dx = target.pos[0] - reference.pos[0];
    let dy = target.pos[1] - reference.pos[1];
    if dx.hypot(dy) < cfg.cd_epsilon {
        FeatureValue::Cd(CdValue::Eq)
    } else {
        FeatureValue::Cd(CdValue::Dir(Compass::from_vector(dx, dy)))
    }
}

/// Whether `obj` moves strictly farther than the motion threshold.
pub fn eval_mv(
    obj: &ObjectId,
    frame_t: &Frame,
    frame_next: &Frame,
    cfg: &QuantizationConfig,
) -> Result<FeatureValue, FeatureError> {
    let d = displacement(obj, frame_t, frame_next)?;
    Ok(FeatureValue::Mv(d[0].hypot(d[1]) > cfg.motion_threshold))
}

pub fn eval_mv_dir(
    obj: &ObjectId,
    frame_t: &Frame,
    frame_next: &Frame,
    cfg: &QuantizationConfig,
) -> Result<FeatureValue, FeatureError> {
    let d = displacement(obj, frame_t, frame_next)?;
    if d[0].hypot(d[1]) > cfg.motion_threshold {
        Ok(FeatureValue::MvDir(MoveDir::Dir(Compass::from_vector(d[0], d[1]))))
    } else {
        Ok(FeatureValue::MvDir(MoveDir::Static))
    }
}

/// Distance band with lower-inclusive bounds.
pub fn eval_qdc(a: &ObjectPose, b: &ObjectPose, cfg: &QuantizationConfig) -> FeatureValue {
    let dist = a.distance_to(b);
    let band = cfg.qdc_thresholds.iter().take_while(|&&q| dist >= q).count();
    FeatureValue::Qdc(QdcBand(band as u8))
}

fn sign_with_deadband(x: f64, deadband: f64) -> QtcSign {
    if x < -deadband {
        QtcSign::Minus
    } else if x > deadband {
        QtcSign::Plus
    } else {
        QtcSign::Zero
    }
}

/// Toward (`-`) / away (`+`) from the change in distance between `k` and `l`.
pub fn eval_qtc_c1(
    k: &ObjectId,
    l: &ObjectId,
    frame_t: &Frame,
    frame_next: &Frame,
    cfg: &QuantizationConfig,
) -> Result<FeatureValue, FeatureError> {
    let before = pose(frame_t, k)?.distance_to(pose(frame_t, l)?);
    let after = pose(frame_next, k)?.distance_to(pose(frame_next, l)?);
    Ok(FeatureValue::QtcC1(sign_with_deadband(after - before, cfg.qtc_deadband)))
}

/// Side of `k`'s motion relative to `l`: `+` counterclockwise about `l`,
/// `-` clockwise. The dead band scales with the separation, so it bounds the
/// tangential component of the displacement.
pub fn eval_qtc_c3(
    k: &ObjectId,
    l: &ObjectId,
    frame_t: &Frame,
    frame_next: &Frame,
    cfg: &QuantizationConfig,
) -> Result<FeatureValue, FeatureError> {
    let (pk, pl) = (pose(frame_t, k)?, pose(frame_t, l)?);
    let r = [pk.pos[0] - pl.pos[0], pk.pos[1] - pl.pos[1]];
    let sep = r[0].hypot(r[1]);
    if sep < cfg.cd_epsilon {
        return Err(FeatureError::UndefinedReferenceLine(k.clone(), l.clone()));
    }
    let d = displacement(k, frame_t, frame_next)?;
    let cross = r[0] * d[1] - r[1] * d[0];
    Ok(FeatureValue::QtcC3(sign_with_deadband(cross, cfg.qtc_deadband * sep)))
}
