//! JSON document format for demonstrations.
//!
//! ```json
//! {
//!   "name": "circle",
//!   "signature": {"verb": "move", "roles": ["A", "B"], "modifiers": ["around"]},
//!   "roles": {"A": "block_red", "B": "block_green"},
//!   "descriptors": {"block_red": "the red block"},
//!   "source": "dense_stream",
//!   "frames": [{"t": 0.0, "objects": [{"id": "block_red", "pos": [0.0, 0.0], "yaw": 0.0}]}]
//! }
//! ```
//!
//! Exported plan traces use the same layout with extra `steps`, `audit`
//! and `terminal` sections, which this loader accepts and ignores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::interpolate::interpolate_keyframes;
use super::model::{ActionSignature, Demonstration, Frame, ObjectId, RoleBinding, SourceKind};
use super::SceneError;

/// Default resampling period for keyframe documents (20 frames per second).
pub const DEFAULT_INTERPOLATION_DT: f64 = 0.05;

const DOC_KEYS: &[&str] = &[
    "name",
    "signature",
    "roles",
    "descriptors",
    "source",
    "frames",
    // plan-trace sections
    "steps",
    "audit",
    "terminal",
];
const SIGNATURE_KEYS: &[&str] = &["verb", "roles", "modifiers"];
const FRAME_KEYS: &[&str] = &["t", "objects"];
const POSE_KEYS: &[&str] = &["id", "pos", "yaw"];

#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// Reject unknown keys instead of warning about them.
    pub strict: bool,
    /// Resampling period applied to keyframe documents.
    pub interpolation_dt: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { strict: false, interpolation_dt: DEFAULT_INTERPOLATION_DT }
    }
}

/// Serialized form of a [`Demonstration`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoDocument {
    pub name: String,
    pub signature: ActionSignature,
    pub roles: BTreeMap<String, ObjectId>,
    #[serde(default)]
    pub descriptors: BTreeMap<ObjectId, String>,
    pub source: SourceKind,
    pub frames: Vec<Frame>,
}

impl From<&Demonstration> for DemoDocument {
    fn from(d: &Demonstration) -> Self {
        DemoDocument {
            name: d.name.clone(),
            signature: d.signature.clone(),
            roles: d.roles.roles.clone(),
            descriptors: d.roles.descriptors.clone(),
            source: d.source,
            frames: d.frames.clone(),
        }
    }
}

impl DemoDocument {
    pub fn into_demonstration(self) -> Result<Demonstration, SceneError> {
        let roles = RoleBinding { roles: self.roles, descriptors: self.descriptors };
        Demonstration::new(self.name, self.signature, self.frames, roles, self.source)
    }
}

/// Lists dotted paths of keys that are not part of the document schema.
pub fn unknown_keys(doc: &Value) -> Vec<String> {
    let mut out = Vec::new();
    let Some(obj) = doc.as_object() else {
        return out;
    };
    collect_unknown(obj, DOC_KEYS, "", &mut out);
    if let Some(sig) = obj.get("signature").and_then(Value::as_object) {
        collect_unknown(sig, SIGNATURE_KEYS, "signature.", &mut out);
    }
    if let Some(frames) = obj.get("frames").and_then(Value::as_array) {
        for (i, frame) in frames.iter().enumerate() {
            let Some(fo) = frame.as_object() else { continue };
            collect_unknown(fo, FRAME_KEYS, &format!("frames[{i}]."), &mut out);
            if let Some(objects) = fo.get("objects").and_then(Value::as_array) {
                for (j, pose) in objects.iter().enumerate() {
                    if let Some(po) = pose.as_object() {
                        collect_unknown(po, POSE_KEYS, &format!("frames[{i}].objects[{j}]."), &mut out);
                    }
                }
            }
        }
    }
    out
}

fn collect_unknown(obj: &serde_json::Map<String, Value>, known: &[&str], prefix: &str, out: &mut Vec<String>) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            out.push(format!("{prefix}{key}"));
        }
    }
}

/// Parses and validates a demonstration document. Keyframe documents are
/// densified with [`interpolate_keyframes`] before being returned.
pub fn load_demonstration(text: &str, opts: &LoadOptions) -> Result<Demonstration, SceneError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SceneError::Malformed(e.to_string()))?;
    load_demonstration_value(value, opts)
}

pub fn load_demonstration_value(value: Value, opts: &LoadOptions) -> Result<Demonstration, SceneError> {
    let unknown = unknown_keys(&value);
    if !unknown.is_empty() {
        if opts.strict {
            return Err(SceneError::UnknownKeys(unknown));
        }
        for key in &unknown {
            log::warn!("ignoring unknown key `{key}` in demonstration document");
        }
    }
    let doc: DemoDocument = serde_json::from_value(value).map_err(|e| SceneError::Malformed(e.to_string()))?;
    let demo = doc.into_demonstration()?;
    match demo.source {
        SourceKind::DenseStream => Ok(demo),
        SourceKind::Keyframes => interpolate_keyframes(&demo, opts.interpolation_dt),
    }
}

pub fn to_document_string(d: &Demonstration) -> String {
    serde_json::to_string_pretty(&DemoDocument::from(d)).expect("demonstration serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra: &str) -> String {
        format!(
            r#"{{"name":"one","signature":{{"verb":"slide","roles":["A"],"modifiers":[]}},
            "roles":{{"A":"block_red"}},"descriptors":{{"block_red":"the red block"}},
            "source":"dense_stream"{extra},
            "frames":[{{"t":0.0,"objects":[{{"id":"block_red","pos":[0.0,0.0],"yaw":0.0}}]}},
                      {{"t":0.1,"objects":[{{"id":"block_red","pos":[0.5,0.0],"yaw":0.0}}]}}]}}"#
        )
    }

    #[test]
    fn loads_minimal_document() {
        let d = load_demonstration(&minimal(""), &LoadOptions::default()).unwrap();
        assert_eq!(d.frames.len(), 2);
        assert_eq!(d.roles.object("A").unwrap().as_str(), "block_red");
    }

    #[test]
    fn missing_role_object_is_rejected() {
        let text = minimal("").replace(r#""A":"block_red""#, r#""A":"block_blue""#);
        let err = load_demonstration(&text, &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("role binds unknown object"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_only_in_strict_mode() {
        let text = minimal(r#","colour":"red""#);
        assert!(load_demonstration(&text, &LoadOptions::default()).is_ok());
        let strict = LoadOptions { strict: true, ..LoadOptions::default() };
        match load_demonstration(&text, &strict) {
            Err(SceneError::UnknownKeys(keys)) => assert_eq!(keys, vec!["colour".to_string()]),
            other => panic!("expected unknown-key error, got {other:?}"),
        }
    }

    #[test]
    fn single_frame_rejected() {
        let text = r#"{"name":"x","signature":{"verb":"v","roles":["A"]},"roles":{"A":"a"},
            "source":"dense_stream","frames":[{"t":0,"objects":[{"id":"a","pos":[0,0]}]}]}"#;
        assert!(matches!(load_demonstration(text, &LoadOptions::default()), Err(SceneError::TooFewFrames(1))));
    }

    #[test]
    fn inconsistent_object_sets_rejected() {
        let text = r#"{"name":"x","signature":{"verb":"v","roles":["A"]},"roles":{"A":"a"},
            "source":"dense_stream","frames":[
              {"t":0,"objects":[{"id":"a","pos":[0,0]}]},
              {"t":1,"objects":[{"id":"a","pos":[0,0]},{"id":"b","pos":[1,0]}]}]}"#;
        assert!(matches!(
            load_demonstration(text, &LoadOptions::default()),
            Err(SceneError::InconsistentObjects { frame: 1 })
        ));
    }

    #[test]
    fn keyframes_are_densified() {
        let text = r#"{"name":"k","signature":{"verb":"v","roles":["A"]},"roles":{"A":"a"},
            "source":"keyframes","frames":[
              {"t":0,"objects":[{"id":"a","pos":[0,0]}]},
              {"t":1,"objects":[{"id":"a","pos":[2,0]}]}]}"#;
        let opts = LoadOptions { strict: true, interpolation_dt: 0.25 };
        let d = load_demonstration(text, &opts).unwrap();
        assert_eq!(d.frames.len(), 5);
        assert_eq!(d.source, SourceKind::DenseStream);
        // linear oracle: x(t) = 2t
        for f in &d.frames {
            assert!((f.poses[0].pos[0] - 2.0 * f.t).abs() < 1e-12);
        }
    }

    #[test]
    fn document_round_trip() {
        let d = load_demonstration(&minimal(""), &LoadOptions::default()).unwrap();
        let again = load_demonstration(&to_document_string(&d), &LoadOptions::default()).unwrap();
        assert_eq!(d, again);
    }
}
