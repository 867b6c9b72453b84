use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SceneError;

/// Opaque identifier of a tracked object (usually a block).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub String);

impl ObjectId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        ObjectId(s.to_string())
    }
}

impl From<String> for ObjectId {
    fn from(s: String) -> Self {
        ObjectId(s)
    }
}

/// Normalizes an angle in degrees into `[0, 360)`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let y = yaw.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs
    if y >= 360.0 {
        0.0
    } else {
        y
    }
}

/// Planar pose of one object on the tabletop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectPose {
    pub id: ObjectId,
    pub pos: [f64; 2],
    #[serde(default)]
    pub yaw: f64,
}

impl ObjectPose {
    pub fn new(id: impl Into<ObjectId>, x: f64, y: f64) -> Self {
        ObjectPose { id: id.into(), pos: [x, y], yaw: 0.0 }
    }

    pub fn with_yaw(mut self, yaw: f64) -> Self {
        self.yaw = normalize_yaw(yaw);
        self
    }

    pub fn distance_to(&self, other: &ObjectPose) -> f64 {
        (self.pos[0] - other.pos[0]).hypot(self.pos[1] - other.pos[1])
    }
}

/// A snapshot of every tracked object at time `t` (seconds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    #[serde(rename = "objects")]
    pub poses: Vec<ObjectPose>,
}

impl Frame {
    pub fn new(t: f64, poses: Vec<ObjectPose>) -> Self {
        Frame { t, poses }
    }

    pub fn pose(&self, id: &ObjectId) -> Option<&ObjectPose> {
        self.poses.iter().find(|p| &p.id == id)
    }

    pub fn pose_mut(&mut self, id: &ObjectId) -> Option<&mut ObjectPose> {
        self.poses.iter_mut().find(|p| &p.id == id)
    }

    pub fn object_ids(&self) -> BTreeSet<ObjectId> {
        self.poses.iter().map(|p| p.id.clone()).collect()
    }

    /// Checks finiteness and id uniqueness, and normalizes yaws in place.
    pub(crate) fn validate(&mut self, index: usize) -> Result<(), SceneError> {
        if !self.t.is_finite() {
            return Err(SceneError::NonFinite { frame: index });
        }
        let mut seen = BTreeSet::new();
        for pose in &mut self.poses {
            if !pose.pos.iter().all(|c| c.is_finite()) || !pose.yaw.is_finite() {
                return Err(SceneError::NonFinite { frame: index });
            }
            pose.yaw = normalize_yaw(pose.yaw);
            if !seen.insert(pose.id.clone()) {
                return Err(SceneError::DuplicateObject { frame: index, object: pose.id.clone() });
            }
        }
        Ok(())
    }
}

/// Name of the action and the ordered role slots it takes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionSignature {
    pub verb: String,
    pub roles: Vec<String>,
    #[serde(default)]
    pub modifiers: Vec<String>,
}

impl ActionSignature {
    pub fn new<S: Into<String>>(verb: S, roles: &[&str], modifiers: &[&str]) -> Self {
        ActionSignature {
            verb: verb.into(),
            roles: roles.iter().map(|r| r.to_string()).collect(),
            modifiers: modifiers.iter().map(|m| m.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.verb.trim().is_empty() {
            return Err(SceneError::InvalidSignature("empty verb".into()));
        }
        if self.roles.is_empty() {
            return Err(SceneError::InvalidSignature("no role slots".into()));
        }
        let distinct: BTreeSet<_> = self.roles.iter().collect();
        if distinct.len() != self.roles.len() {
            return Err(SceneError::InvalidSignature("duplicate role slot".into()));
        }
        Ok(())
    }

    /// Human-readable form, e.g. `move(A, B) around clockwise`.
    pub fn display_name(&self) -> String {
        let mut s = format!("{}({})", self.verb, self.roles.join(", "));
        for m in &self.modifiers {
            s.push(' ');
            s.push_str(m);
        }
        s
    }
}

/// Role name to object id, plus optional descriptors ("the red block") per object.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleBinding {
    pub roles: BTreeMap<String, ObjectId>,
    #[serde(default)]
    pub descriptors: BTreeMap<ObjectId, String>,
}

impl RoleBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, role: &str, object: &str, descriptor: Option<&str>) -> Self {
        self.roles.insert(role.to_string(), ObjectId::from(object));
        if let Some(d) = descriptor {
            self.descriptors.insert(ObjectId::from(object), d.to_string());
        }
        self
    }

    pub fn object(&self, role: &str) -> Option<&ObjectId> {
        self.roles.get(role)
    }

    pub fn descriptor(&self, object: &ObjectId) -> Option<&str> {
        self.descriptors.get(object).map(String::as_str)
    }

    /// Every role must bind a distinct object present in `objects`.
    pub fn validate(&self, objects: &BTreeSet<ObjectId>) -> Result<(), SceneError> {
        let mut used = BTreeSet::new();
        for (role, obj) in &self.roles {
            if !objects.contains(obj) {
                return Err(SceneError::UnknownRoleObject { role: role.clone(), object: obj.clone() });
            }
            if !used.insert(obj) {
                return Err(SceneError::SharedRoleObject(obj.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    DenseStream,
    Keyframes,
}

/// A validated demonstration: at least two frames, strictly increasing
/// timestamps, identical object sets, and roles bound to existing objects.
#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration {
    pub name: String,
    pub signature: ActionSignature,
    pub frames: Vec<Frame>,
    pub roles: RoleBinding,
    pub source: SourceKind,
}

impl Demonstration {
    pub fn new(
        name: impl Into<String>,
        signature: ActionSignature,
        mut frames: Vec<Frame>,
        roles: RoleBinding,
        source: SourceKind,
    ) -> Result<Self, SceneError> {
        signature.validate()?;
        if frames.len() < 2 {
            return Err(SceneError::TooFewFrames(frames.len()));
        }
        for (i, f) in frames.iter_mut().enumerate() {
            f.validate(i)?;
        }
        let ids = frames[0].object_ids();
        for (i, w) in frames.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(SceneError::NonMonotoneTime { frame: i + 1 });
            }
        }
        for (i, f) in frames.iter().enumerate().skip(1) {
            if f.object_ids() != ids {
                return Err(SceneError::InconsistentObjects { frame: i });
            }
        }
        for slot in &signature.roles {
            if !roles.roles.contains_key(slot) {
                return Err(SceneError::UnboundRole(slot.clone()));
            }
        }
        roles.validate(&ids)?;
        Ok(Demonstration { name: name.into(), signature, frames, roles, source })
    }

    pub fn last_index(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn object_ids(&self) -> BTreeSet<ObjectId> {
        self.frames[0].object_ids()
    }
}

/// A maximal run of frames during which exactly one object moves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveEpisode {
    pub mover: ObjectId,
    pub start_frame: usize,
    pub end_frame: usize,
}

impl MoveEpisode {
    pub fn contains(&self, frame: usize) -> bool {
        self.start_frame <= frame && frame <= self.end_frame
    }
}
