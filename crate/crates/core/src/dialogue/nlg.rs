//! Table-driven question rendering.
//!
//! The table is a JSON document with one sentence frame per
//! (template, kind, comparator) cell. Frames may use the slots `{subject}`,
//! `{object}` and `{value-phrase}`; value phrases come from the per-kind map
//! unless the cell overrides them. The built-in table lives in
//! `data/nlg_templates.json`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::features::{Binding, FeatureKind};
use crate::pattern::{Comparator, Pattern, Template};
use crate::scene::RoleBinding;

use super::DialogueError;

const BUILTIN: &str = include_str!("../../data/nlg_templates.json");
const SLOTS: [&str; 3] = ["{subject}", "{object}", "{value-phrase}"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicDescriptors {
    pub last_moved: String,
    pub current: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlgCell {
    pub template: Template,
    pub kind: FeatureKind,
    pub comparator: Comparator,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_phrases: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlgTable {
    pub version: u32,
    pub dynamic_descriptors: DynamicDescriptors,
    pub value_phrases: BTreeMap<FeatureKind, BTreeMap<String, String>>,
    pub cells: Vec<NlgCell>,
}

/// A rendered question plus any fallbacks taken while filling slots.
#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub text: String,
    pub warnings: Vec<String>,
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl NlgTable {
    pub fn builtin() -> Self {
        NlgTable::from_json(BUILTIN).expect("built-in NLG table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, DialogueError> {
        let table: NlgTable = serde_json::from_str(text).map_err(|e| DialogueError::InvalidTable(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), DialogueError> {
        let bad = |m: String| Err(DialogueError::InvalidTable(m));
        let mut seen = BTreeSet::new();
        for c in &self.cells {
            let key = (c.template, c.kind, c.comparator);
            if !seen.insert(key) {
                return bad(format!("duplicate cell {} {} {}", c.template.name(), c.kind, c.comparator));
            }
            if !c.comparator.allowed_on(c.kind) {
                return bad(format!("comparator {} not allowed on {}", c.comparator, c.kind));
            }
            let mut rest = c.text.clone();
            for slot in SLOTS {
                rest = rest.replace(slot, "");
            }
            if rest.contains('{') || rest.contains('}') {
                return bad(format!("unknown slot in {:?}", c.text));
            }
            if c.text.contains("{value-phrase}") {
                let phrases = c.value_phrases.as_ref().or_else(|| self.value_phrases.get(&c.kind));
                for v in c.kind.domain() {
                    if !phrases.is_some_and(|p| p.contains_key(v.symbol())) {
                        return bad(format!("no value phrase for {} {}", c.kind, v.symbol()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn cell(&self, template: Template, kind: FeatureKind, comparator: Comparator) -> Option<&NlgCell> {
        self.cells.iter().find(|c| c.template == template && c.kind == kind && c.comparator == comparator)
    }

    fn describe(&self, role: &str, roles: &RoleBinding, warnings: &mut Vec<String>) -> String {
        match roles.object(role) {
            Some(obj) => match roles.descriptor(obj) {
                Some(d) => d.to_string(),
                None => {
                    warnings.push(format!("no descriptor for {obj}; using its id"));
                    obj.to_string()
                }
            },
            None => {
                warnings.push(format!("role {role} is unbound; using its name"));
                role.to_string()
            }
        }
    }

    pub fn render(&self, p: &Pattern, roles: &RoleBinding) -> Result<Rendered, DialogueError> {
        if p.related_feature().is_some_and(|g| g != p.feature()) {
            return Err(DialogueError::UnsupportedBinding(p.to_string()));
        }
        let cell = self.cell(p.template(), p.kind(), p.comparator()).ok_or_else(|| DialogueError::UnknownCell {
            template: p.template().name().to_string(),
            kind: p.kind(),
            comparator: p.comparator(),
        })?;
        let mut warnings = Vec::new();
        let (subject, object) = match &p.feature().binding {
            Binding::Unary(a) => (self.describe(a, roles, &mut warnings), String::new()),
            Binding::Pair(a, b) => (self.describe(a, roles, &mut warnings), self.describe(b, roles, &mut warnings)),
            Binding::LastCurrent => {
                (self.dynamic_descriptors.last_moved.clone(), self.dynamic_descriptors.current.clone())
            }
        };
        let mut text = cell.text.replace("{subject}", &subject).replace("{object}", &object);
        if let Some(v) = p.constant_value() {
            let phrases = cell.value_phrases.as_ref().or_else(|| self.value_phrases.get(&p.kind()));
            let phrase = phrases
                .and_then(|m| m.get(v.symbol()))
                .ok_or_else(|| DialogueError::InvalidTable(format!("no value phrase for {} {}", p.kind(), v)))?;
            text = text.replace("{value-phrase}", phrase);
        }
        Ok(Rendered { text: capitalize(&text), warnings })
    }
}
