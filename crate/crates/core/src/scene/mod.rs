//! Scenes, demonstrations, and their ingestion.

mod episodes;
mod interpolate;
mod io;
mod model;
mod synthetic;

pub use episodes::{resolve_dynamic_binding, segment_move_episodes, DEFAULT_MOTION_THRESHOLD};
pub use interpolate::{interpolate_keyframes, yaw_delta};
pub use io::{
    load_demonstration, load_demonstration_value, to_document_string, unknown_keys, DemoDocument, LoadOptions,
    DEFAULT_INTERPOLATION_DT,
};
pub use model::{
    normalize_yaw, ActionSignature, Demonstration, Frame, MoveEpisode, ObjectId, ObjectPose, RoleBinding, SourceKind,
};
pub use synthetic::{generate_synthetic, GeneratorParams, SyntheticKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("malformed demonstration document: {0}")]
    Malformed(String),
    #[error("unknown keys in strict mode: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("a demonstration needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("non-finite value in frame {frame}")]
    NonFinite { frame: usize },
    #[error("object {object} appears twice in frame {frame}")]
    DuplicateObject { frame: usize, object: ObjectId },
    #[error("timestamps must strictly increase (frame {frame})")]
    NonMonotoneTime { frame: usize },
    #[error("object set of frame {frame} differs from frame 0")]
    InconsistentObjects { frame: usize },
    #[error("role binds unknown object: {role} -> {object}")]
    UnknownRoleObject { role: String, object: ObjectId },
    #[error("two roles bind the same object {0}")]
    SharedRoleObject(ObjectId),
    #[error("role slot {0} is not bound")]
    UnboundRole(String),
    #[error("invalid action signature: {0}")]
    InvalidSignature(String),
    #[error("interpolation step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("frame {frame} out of range (demonstration has {len} frames)")]
    FrameOutOfRange { frame: usize, len: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}
