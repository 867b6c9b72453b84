//! Feature-calculus laws as plain property functions, shared by the
//! proptest suite and the acceptance harness.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use qsrteach::features::{
    eval_cd, eval_mv, eval_mv_dir, eval_qdc, eval_qtc_c1, eval_qtc_c3, CdValue, Compass, FeatureValue, QdcBand,
    QuantizationConfig,
};
use qsrteach::scene::{Frame, ObjectId, ObjectPose};

pub type Pt = (f64, f64);

/// Positions of `k` and `l` at `t` and `t + 1`.
#[derive(Clone, Copy, Debug)]
pub struct Motion {
    pub k0: Pt,
    pub l0: Pt,
    pub k1: Pt,
    pub l1: Pt,
}

impl Motion {
    pub fn map(self, f: impl Fn(Pt) -> Pt) -> Motion {
        Motion { k0: f(self.k0), l0: f(self.l0), k1: f(self.k1), l1: f(self.l1) }
    }

    fn frames(self) -> (Frame, Frame) {
        let frame =
            |k: Pt, l: Pt, t: f64| Frame::new(t, vec![ObjectPose::new("k", k.0, k.1), ObjectPose::new("l", l.0, l.1)]);
        (frame(self.k0, self.l0, 0.0), frame(self.k1, self.l1, 1.0))
    }
}

fn pose(p: Pt) -> ObjectPose {
    ObjectPose::new("p", p.0, p.1)
}

/// CD, QDC, QTC_C1 and QTC_C3 of `k` relative to `l`; errors are kept as text.
pub fn binary_features(m: Motion, cfg: &QuantizationConfig) -> Vec<Result<FeatureValue, String>> {
    let (f0, f1) = m.frames();
    let (k, l) = (ObjectId::from("k"), ObjectId::from("l"));
    vec![
        Ok(eval_cd(&pose(m.k0), &pose(m.l0), cfg)),
        Ok(eval_qdc(&pose(m.k0), &pose(m.l0), cfg)),
        eval_qtc_c1(&k, &l, &f0, &f1, cfg).map_err(|e| e.to_string()),
        eval_qtc_c3(&k, &l, &f0, &f1, cfg).map_err(|e| e.to_string()),
    ]
}

/// MV and MV_DIR of both objects.
pub fn unary_features(m: Motion, cfg: &QuantizationConfig) -> Vec<Result<FeatureValue, String>> {
    let (f0, f1) = m.frames();
    ["k", "l"]
        .iter()
        .flat_map(|id| {
            let id = ObjectId::from(*id);
            [
                eval_mv(&id, &f0, &f1, cfg).map_err(|e| e.to_string()),
                eval_mv_dir(&id, &f0, &f1, cfg).map_err(|e| e.to_string()),
            ]
        })
        .collect()
}

fn grid_coord() -> impl Strategy<Value = f64> {
    (-8i32..=8).prop_map(f64::from)
}

fn grid_step() -> impl Strategy<Value = f64> {
    (-2i32..=2).prop_map(f64::from)
}

fn grid_motion() -> impl Strategy<Value = Motion> {
    let pt = || (grid_coord(), grid_coord());
    let step = || (grid_step(), grid_step());
    (pt(), pt(), step(), step()).prop_map(|(k0, l0, dk, dl)| Motion {
        k0,
        l0,
        k1: (k0.0 + dk.0, k0.1 + dk.1),
        l1: (l0.0 + dl.0, l0.1 + dl.1),
    })
}

fn continuous_motion() -> impl Strategy<Value = Motion> {
    let pt = || (-40.0..40.0f64, -40.0..40.0f64);
    let step = || prop_oneof![Just((0.0, 0.0)), (-1.5..1.5f64, -1.5..1.5f64)];
    (pt(), pt(), step(), step()).prop_map(|(k0, l0, dk, dl)| Motion {
        k0,
        l0,
        k1: (k0.0 + dk.0, k0.1 + dk.1),
        l1: (l0.0 + dl.0, l0.1 + dl.1),
    })
}

/// Any finite coordinate, from subnormal to near the top of the range.
pub fn finite() -> impl Strategy<Value = f64> {
    use proptest::num::f64::{NEGATIVE, NORMAL, POSITIVE, SUBNORMAL, ZERO};
    prop_oneof![
        (POSITIVE | NEGATIVE | NORMAL | SUBNORMAL | ZERO).prop_filter("finite", |x| x.is_finite()),
        -10.0..10.0f64,
        (-8i32..=8).prop_map(f64::from),
    ]
}

/// Integer-grid motions with integer offsets, or continuous ones with any offset.
/// Grid scenes hit exact band edges, which only survive exact arithmetic.
pub fn translation_case() -> impl Strategy<Value = (Motion, Pt)> {
    prop_oneof![
        (grid_motion(), ((-50i32..50).prop_map(f64::from), (-50i32..50).prop_map(f64::from))),
        (continuous_motion(), (-100.0..100.0f64, -100.0..100.0f64)),
    ]
}

/// Grid motions with power-of-two factors, or continuous ones with any factor.
pub fn scale_case() -> impl Strategy<Value = (Motion, f64)> {
    prop_oneof![(grid_motion(), (-8i32..=8).prop_map(|e| 2f64.powi(e))), (continuous_motion(), 0.05..20.0f64),]
}

pub fn rotation_case() -> impl Strategy<Value = (Pt, Pt)> {
    prop_oneof![
        ((grid_coord(), grid_coord()), (grid_coord(), grid_coord())),
        ((-40.0..40.0f64, -40.0..40.0f64), (-40.0..40.0f64, -40.0..40.0f64)),
    ]
}

/// (reference length, vertical offset, axis sign)
pub fn boundary_case() -> impl Strategy<Value = (f64, f64, bool)> {
    (prop_oneof![0.05..20.0f64, (-4i32..=4).prop_map(|e| 2f64.powi(e))], -30.0..30.0f64, any::<bool>())
}

fn sector_contains(c: Compass, bearing: f64) -> bool {
    let lower = c as usize as f64 * 45.0 - 22.5;
    (bearing - lower).rem_euclid(360.0) < 45.0
}

/// Exactly one of the nine values, and the sector really contains the bearing.
pub fn cd_totality(dx: f64, dy: f64) -> Result<(), TestCaseError> {
    let cfg = QuantizationConfig::default();
    let v = eval_cd(&pose((dx, dy)), &pose((0.0, 0.0)), &cfg);
    if dx.hypot(dy) < cfg.cd_epsilon {
        prop_assert_eq!(v, FeatureValue::Cd(CdValue::Eq));
        return Ok(());
    }
    let bearing = dx.atan2(dy).to_degrees();
    let hits: Vec<Compass> = Compass::ALL.into_iter().filter(|&c| sector_contains(c, bearing)).collect();
    prop_assert_eq!(hits.len(), 1, "bearing {} in sectors {:?}", bearing, hits);
    prop_assert_eq!(v, FeatureValue::Cd(CdValue::Dir(hits[0])));
    Ok(())
}

/// Rotating both poses a quarter turn clockwise moves CD one quarter turn.
pub fn cd_rotation(target: Pt, reference: Pt) -> Result<(), TestCaseError> {
    let cfg = QuantizationConfig::default();
    let rot = |p: Pt| (p.1, -p.0);
    let before = eval_cd(&pose(target), &pose(reference), &cfg);
    let after = eval_cd(&pose(rot(target)), &pose(rot(reference)), &cfg);
    let expected = match before {
        FeatureValue::Cd(CdValue::Dir(c)) => FeatureValue::Cd(CdValue::Dir(c.quarter_turn())),
        other => other,
    };
    prop_assert_eq!(after, expected);
    Ok(())
}

pub fn translation_invariance(m: Motion, offset: Pt) -> Result<(), TestCaseError> {
    let cfg = QuantizationConfig::default();
    let moved = m.map(|p| (p.0 + offset.0, p.1 + offset.1));
    prop_assert_eq!(binary_features(m, &cfg), binary_features(moved, &cfg));
    Ok(())
}

pub fn scale_coherence(m: Motion, factor: f64) -> Result<(), TestCaseError> {
    let cfg = QuantizationConfig::default();
    let scaled_cfg = cfg.scaled(factor);
    let scaled = m.map(|p| (p.0 * factor, p.1 * factor));
    prop_assert_eq!(binary_features(m, &cfg), binary_features(scaled, &scaled_cfg));
    prop_assert_eq!(unary_features(m, &cfg), unary_features(scaled, &scaled_cfg));
    Ok(())
}

fn below(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// QDC bands include their lower bound, MV is strict, CD `EQ` excludes epsilon,
/// and axis directions fall in their own sectors.
pub fn boundary_rules(u: f64, y: f64, negative: bool) -> Result<(), TestCaseError> {
    let cfg = QuantizationConfig::with_reference_length(u);
    let s = if negative { -1.0 } else { 1.0 };
    let origin = pose((0.0, y));
    for (i, &q) in cfg.qdc_thresholds.iter().enumerate() {
        prop_assert_eq!(eval_qdc(&pose((s * q, y)), &origin, &cfg), FeatureValue::Qdc(QdcBand(i as u8 + 1)));
        prop_assert_eq!(eval_qdc(&pose((s * below(q), y)), &origin, &cfg), FeatureValue::Qdc(QdcBand(i as u8)));
    }

    let id = ObjectId::from("p");
    let at = |x: f64| Frame::new(0.0, vec![ObjectPose::new("p", x, y)]);
    let m = cfg.motion_threshold;
    prop_assert_eq!(eval_mv(&id, &at(0.0), &at(s * m), &cfg).unwrap(), FeatureValue::Mv(false));
    prop_assert_eq!(eval_mv(&id, &at(0.0), &at(s * m * 1.5), &cfg).unwrap(), FeatureValue::Mv(true));

    let e = cfg.cd_epsilon;
    let zero = pose((0.0, 0.0));
    prop_assert_eq!(eval_cd(&pose((0.0, s * below(e))), &zero, &cfg), FeatureValue::Cd(CdValue::Eq));
    let exact = if negative { Compass::S } else { Compass::N };
    prop_assert_eq!(eval_cd(&pose((0.0, s * e)), &zero, &cfg), FeatureValue::Cd(CdValue::Dir(exact)));
    let axis = [
        ((0.0, u), Compass::N),
        ((u, 0.0), Compass::E),
        ((0.0, -u), Compass::S),
        ((-u, 0.0), Compass::W),
        ((u, u), Compass::NE),
        ((-u, -u), Compass::SW),
    ];
    for ((dx, dy), c) in axis {
        prop_assert_eq!(eval_cd(&pose((dx, dy)), &zero, &cfg), FeatureValue::Cd(CdValue::Dir(c)));
    }
    Ok(())
}
