//! Learned concepts on disk and the superclass relation between them.
//!
//! A store is a directory holding one `<id>.json` per concept and an
//! `index.json` listing every concept (ordered by signature) plus the
//! superclass relations found among them. Every write goes to a temporary
//! file first and is renamed into place.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dialogue::TranscriptEntry;
use crate::features::QuantizationConfig;
use crate::pattern::{entails, Pattern};
use crate::scene::ActionSignature;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("a concept with signature {0} already exists (pass overwrite to replace it)")]
    Duplicate(String),
    #[error("unreadable concept {id}: {reason}")]
    Unreadable { id: String, reason: String },
    #[error("no concept with id {0}")]
    NotFound(String),
    #[error("invalid concept record: {0}")]
    Invalid(String),
    #[error("concepts are not comparable: {0}")]
    Incomparable(String),
    #[error("storage failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub demos: Vec<String>,
    /// Hex SHA-256 of the answer transcript's JSON.
    pub transcript_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptRecord {
    pub schema_version: u32,
    pub signature: ActionSignature,
    pub confirmed: Vec<Pattern>,
    pub quantization: QuantizationConfig,
    pub provenance: Provenance,
    pub created_at: String,
}

pub fn transcript_digest(transcript: &[TranscriptEntry]) -> String {
    let json = serde_json::to_string(transcript).expect("transcript serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

impl ConceptRecord {
    pub fn new(
        signature: ActionSignature,
        confirmed: Vec<Pattern>,
        quantization: QuantizationConfig,
        demos: Vec<String>,
        transcript: &[TranscriptEntry],
        created_at: impl Into<String>,
    ) -> Result<Self, StoreError> {
        let record = ConceptRecord {
            schema_version: SCHEMA_VERSION,
            signature,
            confirmed,
            quantization,
            provenance: Provenance { demos, transcript_sha256: transcript_digest(transcript) },
            created_at: created_at.into(),
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(StoreError::Invalid(format!("unsupported schema_version {}", self.schema_version)));
        }
        self.signature.validate().map_err(|e| StoreError::Invalid(e.to_string()))?;
        self.quantization.validate().map_err(|e| StoreError::Invalid(e.to_string()))?;
        let mut seen = BTreeSet::new();
        for p in &self.confirmed {
            if !seen.insert(p) {
                return Err(StoreError::Invalid(format!("duplicate pattern {p}")));
            }
        }
        Ok(())
    }

    /// Stable file-name-safe id derived from the signature.
    pub fn id(&self) -> String {
        concept_id(&self.signature)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let record: ConceptRecord = serde_json::from_str(text).map_err(|e| StoreError::Invalid(e.to_string()))?;
        record.validate()?;
        Ok(record)
    }
}

pub fn concept_id(sig: &ActionSignature) -> String {
    let mut parts = vec![sig.verb.clone()];
    parts.extend(sig.roles.iter().cloned());
    parts.extend(sig.modifiers.iter().cloned());
    let raw = parts.join("_").to_lowercase();
    let mut id = String::with_capacity(raw.len());
    for c in raw.chars() {
        let c = if c.is_ascii_alphanumeric() { c } else { '_' };
        if !(c == '_' && id.ends_with('_')) {
            id.push(c);
        }
    }
    id.trim_matches('_').to_string()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Superclass,
}

/// `general` is a superclass of `specific`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptRelation {
    pub general: String,
    pub specific: String,
    pub kind: RelationKind,
}

/// Superclass relation when every pattern of `general` is entailed by some
/// pattern of `specific`.
pub fn relate_concepts(
    general: &ConceptRecord,
    specific: &ConceptRecord,
) -> Result<Option<ConceptRelation>, StoreError> {
    let (g, s) = (&general.signature, &specific.signature);
    if g.verb != s.verb || g.roles.len() != s.roles.len() {
        return Err(StoreError::Incomparable(format!("{} vs {}", g.display_name(), s.display_name())));
    }
    let subsumed = general.confirmed.iter().all(|pg| specific.confirmed.iter().any(|ps| entails(ps, pg)));
    Ok(subsumed.then(|| ConceptRelation {
        general: general.id(),
        specific: specific.id(),
        kind: RelationKind::Superclass,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub signature: ActionSignature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreIndex {
    pub schema_version: u32,
    pub concepts: Vec<IndexEntry>,
    pub relations: Vec<ConceptRelation>,
}

#[derive(Clone, Debug)]
pub struct ConceptStore {
    dir: PathBuf,
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("concept");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl ConceptStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ConceptStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    pub fn save(&self, record: &ConceptRecord, overwrite: bool) -> Result<String, StoreError> {
        record.validate()?;
        let id = record.id();
        let path = self.path(&id);
        if path.exists() && !overwrite {
            return Err(StoreError::Duplicate(record.signature.display_name()));
        }
        write_atomic(&path, &record.to_json())?;
        self.rebuild_index()?;
        Ok(id)
    }

    pub fn load(&self, id: &str) -> Result<ConceptRecord, StoreError> {
        let path = self.path(id);
        if !path.exists() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let unreadable = |reason: String| StoreError::Unreadable { id: id.to_string(), reason };
        let text = fs::read_to_string(&path).map_err(|e| unreadable(e.to_string()))?;
        ConceptRecord::from_json(&text).map_err(|e| unreadable(e.to_string()))
    }

    /// Every stored concept, ordered by signature.
    pub fn list(&self) -> Result<Vec<ConceptRecord>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(".json") {
                if id != "index" && !name.starts_with('.') {
                    ids.push(id.to_string());
                }
            }
        }
        let mut records = ids.iter().map(|id| self.load(id)).collect::<Result<Vec<_>, _>>()?;
        records.sort_by(|a, b| a.signature.cmp(&b.signature));
        Ok(records)
    }

    pub fn index(&self) -> Result<StoreIndex, StoreError> {
        let text = fs::read_to_string(self.dir.join("index.json"))?;
        serde_json::from_str(&text).map_err(|e| StoreError::Unreadable { id: "index".into(), reason: e.to_string() })
    }

    fn rebuild_index(&self) -> Result<(), StoreError> {
        let records = self.list()?;
        let mut relations = Vec::new();
        for g in &records {
            for s in &records {
                if g.id() != s.id() {
                    if let Ok(Some(r)) = relate_concepts(g, s) {
                        relations.push(r);
                    }
                }
            }
        }
        let index = StoreIndex {
            schema_version: SCHEMA_VERSION,
            concepts: records.iter().map(|r| IndexEntry { id: r.id(), signature: r.signature.clone() }).collect(),
            relations,
        };
        let text = serde_json::to_string_pretty(&index).expect("index serializes") + "\n";
        write_atomic(&self.dir.join("index.json"), &text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(modifiers: &[&str], patterns: &[&str]) -> ConceptRecord {
        ConceptRecord::new(
            ActionSignature::new("move", &["A", "B"], modifiers),
            patterns.iter().map(|p| p.parse().unwrap()).collect(),
            QuantizationConfig::default(),
            vec!["demo".into()],
            &[],
            "2024-01-01T00:00:00Z",
        )
        .unwrap()
    }

    const AROUND: [&str; 4] = [
        "forall_t MV(A)[t] = 1",
        "forall_t MV(B)[t] = 0",
        "forall_t QTC_C3(A,B)[t] = QTC_C3(A,B)[t+1]",
        "CD(A,B)[0] = CD(A,B)[F]",
    ];

    #[test]
    fn ids_are_slugs() {
        assert_eq!(record(&["around"], &[]).id(), "move_a_b_around");
        assert_eq!(
            concept_id(&ActionSignature::new("Make Row", &["B1"], &["evenly-spaced"])),
            "make_row_b1_evenly_spaced"
        );
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = ConceptStore::open(dir.path()).unwrap();
        let r = record(&["around"], &AROUND);
        let id = store.save(&r, false).unwrap();
        assert_eq!(store.load(&id).unwrap(), r);
        let bytes = fs::read_to_string(dir.path().join(format!("{id}.json"))).unwrap();
        assert_eq!(bytes, r.to_json());
        assert!(matches!(store.save(&r, false), Err(StoreError::Duplicate(_))));
        store.save(&r, true).unwrap();
    }

    #[test]
    fn corrupted_file_is_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let store = ConceptStore::open(dir.path()).unwrap();
        fs::write(dir.path().join("broken.json"), "{not json").unwrap();
        let err = store.load("broken").unwrap_err();
        assert!(err.to_string().starts_with("unreadable concept"), "{err}");
        assert!(matches!(store.load("absent"), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn clockwise_is_a_subclass() {
        let general = record(&["around"], &AROUND);
        let mut specific_patterns = AROUND.to_vec();
        specific_patterns.push("forall_t QTC_C3(A,B)[t] = -");
        let specific = record(&["around", "clockwise"], &specific_patterns);
        assert!(relate_concepts(&general, &specific).unwrap().is_some());
        assert!(relate_concepts(&specific, &general).unwrap().is_none());
        assert!(relate_concepts(&general, &general).unwrap().is_some());
        let other = record(&["sideways"], &["forall_t MV(B)[t] = 1"]);
        assert!(relate_concepts(&general, &other).unwrap().is_none());
        let unary = ConceptRecord { signature: ActionSignature::new("move", &["A"], &[]), ..general.clone() };
        assert!(relate_concepts(&general, &unary).is_err());
    }

    #[test]
    fn index_lists_relations_in_signature_order() {
        let dir = tempfile::tempdir().unwrap();
        let store = ConceptStore::open(dir.path()).unwrap();
        let mut cw = AROUND.to_vec();
        cw.push("forall_t QTC_C3(A,B)[t] = -");
        store.save(&record(&["around", "clockwise"], &cw), false).unwrap();
        store.save(&record(&["around"], &AROUND), false).unwrap();
        let index = store.index().unwrap();
        let ids: Vec<_> = index.concepts.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["move_a_b_around", "move_a_b_around_clockwise"]);
        assert_eq!(
            index.relations,
            vec![ConceptRelation {
                general: "move_a_b_around".into(),
                specific: "move_a_b_around_clockwise".into(),
                kind: RelationKind::Superclass,
            }]
        );
        assert!(!dir.path().join(".index.json.tmp").exists());
    }

    #[test]
    fn duplicate_patterns_rejected() {
        let err = ConceptRecord::new(
            ActionSignature::new("move", &["A"], &[]),
            vec!["forall_t MV(A)[t] = 1".parse().unwrap(), "forall_t MV(A)[t] = 1".parse().unwrap()],
            QuantizationConfig::default(),
            vec![],
            &[],
            "",
        );
        assert!(matches!(err, Err(StoreError::Invalid(_))));
    }
}
