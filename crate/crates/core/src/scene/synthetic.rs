//! Deterministic demonstration generators used as fixtures.

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{ActionSignature, Demonstration, Frame, ObjectPose, RoleBinding, SourceKind};
use super::SceneError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// A orbits a stationary B once at constant radius.
    CircleAround,
    /// Blocks are moved one at a time into an evenly spaced row.
    BuildRow,
    /// A single block slides due east.
    TranslateEast,
}

impl FromStr for SyntheticKind {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "circle_around" => Ok(SyntheticKind::CircleAround),
            "build_row" => Ok(SyntheticKind::BuildRow),
            "translate_east" => Ok(SyntheticKind::TranslateEast),
            other => Err(SceneError::InvalidParams(format!("unknown generator kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    /// Frame period in seconds.
    pub dt: f64,
    /// circle_around: orbit radius.
    pub radius: f64,
    /// circle_around / translate_east: number of frames.
    pub frames: usize,
    /// circle_around: orbit direction.
    pub clockwise: bool,
    /// build_row: number of blocks.
    pub blocks: usize,
    /// build_row: gap between neighbouring row slots.
    pub spacing: f64,
    /// build_row: motion transitions per block move.
    pub frames_per_move: usize,
    /// build_row: static transitions before and after each move.
    pub pause_frames: usize,
    /// translate_east: displacement per frame.
    pub step: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            dt: 0.05,
            radius: 2.0,
            frames: 64,
            clockwise: true,
            blocks: 3,
            spacing: 1.5,
            frames_per_move: 20,
            pause_frames: 3,
            step: 0.1,
        }
    }
}

impl GeneratorParams {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
    fn validate(&self, kind: SyntheticKind) -> Result<(), SceneError> {
        let bad = |msg: &str| Err(SceneError::InvalidParams(msg.to_string()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        match kind {
            SyntheticKind::CircleAround => {
                if !(self.radius > 0.0) || !self.radius.is_finite() {
                    return bad("radius must be positive");
                }
                if self.frames < 3 {
                    return bad("circle_around needs at least 3 frames");
                }
            }
            SyntheticKind::BuildRow => {
                if self.blocks < 2 {
                    return bad("build_row needs at least 2 blocks");
                }
                if !(self.spacing > 0.0) || !self.spacing.is_finite() {
                    return bad("spacing must be positive");
                }
                if self.frames_per_move == 0 {
                    return bad("frames_per_move must be positive");
                }
            }
            SyntheticKind::TranslateEast => {
                if self.frames < 2 {
                    return bad("translate_east needs at least 2 frames");
                }
                if !(self.step > 0.0) || !self.step.is_finite() {
                    return bad("step must be positive");
                }
            }
        }
        Ok(())
    }
}

const COLOURS: &[&str] = &["red", "green", "blue", "yellow", "purple", "orange", "white", "black"];

/// Builds a demonstration; pure in `(kind, params, seed)`.
pub fn generate_synthetic(
    kind: SyntheticKind,
    params: &GeneratorParams,
    seed: u64,
) -> Result<Demonstration, SceneError> {
    params.validate(kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SyntheticKind::CircleAround => circle_around(params, &mut rng),
        SyntheticKind::BuildRow => build_row(params, &mut rng),
        SyntheticKind::TranslateEast => translate_east(params, &mut rng),
    }
}

fn circle_around(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<Demonstration, SceneError> {
    let centre = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let phase = rng.gen_range(0.0..TAU);
    let yaw_a = rng.gen_range(0.0..360.0);
    let sweep = if p.clockwise { -TAU } else { TAU };
    let last = (p.frames - 1) as f64;
    let frames = (0..p.frames)
        .map(|k| {
            let theta = phase + sweep * k as f64 / last;
            Frame::new(
                k as f64 * p.dt,
                vec![
                    ObjectPose::new(
                        "block_red",
                        centre[0] + p.radius * theta.cos(),
                        centre[1] + p.radius * theta.sin(),
                    )
                    .with_yaw(yaw_a),
                    ObjectPose::new("block_green", centre[0], centre[1]),
                ],
            )
        })
        .collect();
    let modifiers: &[&str] = if p.clockwise { &["around"] } else { &["around", "counterclockwise"] };
    Demonstration::new(
        "circle_around",
        ActionSignature::new("move", &["A", "B"], modifiers),
        frames,
        RoleBinding::new().bind("A", "block_red", Some("the red block")).bind(
            "B",
            "block_green",
            Some("the green block"),
        ),
        SourceKind::DenseStream,
    )
}

fn build_row(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<Demonstration, SceneError> {
    let origin = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let ids: Vec<String> = (0..p.blocks).map(|i| format!("block_{i}")).collect();
    let slots: Vec<[f64; 2]> = (0..p.blocks).map(|i| [origin[0] + i as f64 * p.spacing, origin[1]]).collect();
    // each block starts below its slot, offset a little sideways
    let mut positions: Vec<[f64; 2]> =
        slots.iter().map(|s| [s[0] + rng.gen_range(-0.2..0.2), s[1] - rng.gen_range(1.0..1.8)]).collect();

    let mut frames = Vec::new();
    let snapshot = |positions: &[[f64; 2]], t: f64| {
        Frame::new(t, ids.iter().zip(positions).map(|(id, pos)| ObjectPose::new(id.as_str(), pos[0], pos[1])).collect())
    };
    let mut t = 0.0;
    let mut push = |positions: &[[f64; 2]], frames: &mut Vec<Frame>| {
        frames.push(snapshot(positions, t));
        t += p.dt;
    };
    push(&positions, &mut frames);
    for _ in 0..p.pause_frames {
        push(&positions, &mut frames);
    }
    for (i, slot) in slots.iter().enumerate() {
        let start = positions[i];
        for k in 1..=p.frames_per_move {
            let u = k as f64 / p.frames_per_move as f64;
            positions[i] = [start[0] + (slot[0] - start[0]) * u, start[1] + (slot[1] - start[1]) * u];
            push(&positions, &mut frames);
        }
        positions[i] = *slot;
        for _ in 0..p.pause_frames {
            push(&positions, &mut frames);
        }
    }

    let role_names: Vec<String> = (0..p.blocks).map(|i| format!("B{}", i + 1)).collect();
    let role_refs: Vec<&str> = role_names.iter().map(String::as_str).collect();
    let mut roles = RoleBinding::new();
    for (i, (role, id)) in role_names.iter().zip(&ids).enumerate() {
        let descriptor = format!("the {} block", COLOURS[i % COLOURS.len()]);
        roles = roles.bind(role, id, Some(&descriptor));
    }
    Demonstration::new(
        "build_row",
        ActionSignature::new("make", &role_refs, &["row"]),
        frames,
        roles,
        SourceKind::DenseStream,
    )
}

fn translate_east(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<Demonstration, SceneError> {
    let start = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let frames = (0..p.frames)
        .map(|k| {
            Frame::new(k as f64 * p.dt, vec![ObjectPose::new("block_red", start[0] + k as f64 * p.step, start[1])])
        })
        .collect();
    Demonstration::new(
        "translate_east",
        ActionSignature::new("slide", &["X"], &["east"]),
        frames,
        RoleBinding::new().bind("X", "block_red", Some("the red block")),
        SourceKind::DenseStream,
    )
}
