//! The five pattern templates, their text form, satisfying sets and the
//! entailment preorder.
//!
//! Canonical grammar (one pattern per line, single spaces):
//!
//! ```text
//! QDC(A,B)[0] <= 1                              initial state
//! QDC(A,B)[F] = 1                               final state
//! forall_t MV(A)[t] = 1                         constant across frames
//! forall_t QTC_C3(A,B)[t] = QTC_C3(A,B)[t+1]    consecutive relation
//! CD(A,B)[0] = CD(A,B)[F]                       start/end relation
//! ```
//!
//! Comparators are `<`, `>`, `=`, `<=`, `>=`, `!=`; the dynamic binding is
//! written `QDC(L(S),C(S))`.

mod entail;
mod eval;
mod sets;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::features::{FeatureError, FeatureFunction, FeatureKind, FeatureValue};

pub use entail::entails;
pub use eval::{evaluate_on_frames, evaluate_on_sequences, evaluate_pattern, EvaluationReport, Outcome};
pub use sets::{RelationSet, ValueSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("order comparator {0} not allowed on {1}")]
    UnorderedComparator(Comparator, FeatureKind),
    #[error("pattern has an empty satisfying set: {0}")]
    EmptySatisfyingSet(String),
    #[error("right-hand side does not match the template")]
    RhsMismatch,
    #[error("right-hand side kind {rhs} differs from {lhs}")]
    KindMismatch { lhs: FeatureKind, rhs: FeatureKind },
    #[error("cannot parse pattern: {0}")]
    Parse(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    InitialState,
    FinalState,
    ConstantAcrossFrames,
    ConsecutiveRelation,
    StartEndRelation,
}

impl Template {
    pub const ALL: [Template; 5] = [
        Template::InitialState,
        Template::FinalState,
        Template::ConstantAcrossFrames,
        Template::ConsecutiveRelation,
        Template::StartEndRelation,
    ];

    pub fn has_constant_rhs(self) -> bool {
        matches!(self, Template::InitialState | Template::FinalState | Template::ConstantAcrossFrames)
    }

    pub fn name(self) -> &'static str {
        match self {
            Template::InitialState => "initial_state",
            Template::FinalState => "final_state",
            Template::ConstantAcrossFrames => "constant_across_frames",
            Template::ConsecutiveRelation => "consecutive_relation",
            Template::StartEndRelation => "start_end_relation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comparator {
    Eq,
    Le,
    Ge,
    Ne,
    Lt,
    Gt,
}

impl Comparator {
    pub const ALL: [Comparator; 6] =
        [Comparator::Eq, Comparator::Le, Comparator::Ge, Comparator::Ne, Comparator::Lt, Comparator::Gt];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Eq => "=",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Ne => "!=",
        }
    }

    pub fn is_order(self) -> bool {
        !matches!(self, Comparator::Eq | Comparator::Ne)
    }

    /// `a cmp b`, comparing ordinals for the order comparators.
    pub fn holds(self, a: FeatureValue, b: FeatureValue) -> bool {
        let (x, y) = (a.ordinal(), b.ordinal());
        match self {
            Comparator::Eq => a == b,
            Comparator::Ne => a != b,
            Comparator::Lt => x < y,
            Comparator::Le => x <= y,
            Comparator::Gt => x > y,
            Comparator::Ge => x >= y,
        }
    }

    pub fn allowed_on(self, kind: FeatureKind) -> bool {
        kind.is_ordered() || !self.is_order()
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Serialize for Comparator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for Comparator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Comparator {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Comparator::ALL
            .into_iter()
            .find(|c| c.symbol() == s)
            .ok_or_else(|| PatternError::Parse(format!("unknown comparator {s}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rhs {
    Value(FeatureValue),
    /// The feature at the related frame, possibly with a different binding.
    Feature(FeatureFunction),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    template: Template,
    feature: FeatureFunction,
    comparator: Comparator,
    rhs: Rhs,
}

impl Pattern {
    pub fn new(
        template: Template,
        feature: FeatureFunction,
        comparator: Comparator,
        rhs: Rhs,
    ) -> Result<Self, PatternError> {
        let kind = feature.kind;
        if !comparator.allowed_on(kind) {
            return Err(PatternError::UnorderedComparator(comparator, kind));
        }
        let p = Pattern { template, feature, comparator, rhs };
        match (&p.rhs, template.has_constant_rhs()) {
            (Rhs::Value(v), true) => {
                if v.kind() != kind {
                    return Err(PatternError::KindMismatch { lhs: kind, rhs: v.kind() });
                }
                if p.satisfying_set()?.is_empty() {
                    return Err(PatternError::EmptySatisfyingSet(p.to_string()));
                }
            }
            (Rhs::Feature(g), false) => {
                if g.kind != kind {
                    return Err(PatternError::KindMismatch { lhs: kind, rhs: g.kind });
                }
                if p.relation_set()?.is_empty() {
                    return Err(PatternError::EmptySatisfyingSet(p.to_string()));
                }
            }
            _ => return Err(PatternError::RhsMismatch),
        }
        Ok(p)
    }

    pub fn initial(f: FeatureFunction, cmp: Comparator, v: FeatureValue) -> Result<Self, PatternError> {
        Pattern::new(Template::InitialState, f, cmp, Rhs::Value(v))
    }

    pub fn final_state(f: FeatureFunction, cmp: Comparator, v: FeatureValue) -> Result<Self, PatternError> {
        Pattern::new(Template::FinalState, f, cmp, Rhs::Value(v))
    }

    pub fn constant(f: FeatureFunction, cmp: Comparator, v: FeatureValue) -> Result<Self, PatternError> {
        Pattern::new(Template::ConstantAcrossFrames, f, cmp, Rhs::Value(v))
    }

    /// Consecutive relation with the same binding on both sides.
    pub fn consecutive(f: FeatureFunction, cmp: Comparator) -> Result<Self, PatternError> {
        let g = f.clone();
        Pattern::new(Template::ConsecutiveRelation, f, cmp, Rhs::Feature(g))
    }

    pub fn start_end(f: FeatureFunction, cmp: Comparator) -> Result<Self, PatternError> {
        let g = f.clone();
        Pattern::new(Template::StartEndRelation, f, cmp, Rhs::Feature(g))
    }

    /// `forall_t f[t] cmp g[t+1]` with a second binding `g`.
    pub fn consecutive_with(f: FeatureFunction, cmp: Comparator, g: FeatureFunction) -> Result<Self, PatternError> {
        Pattern::new(Template::ConsecutiveRelation, f, cmp, Rhs::Feature(g))
    }

    pub fn start_end_with(f: FeatureFunction, cmp: Comparator, g: FeatureFunction) -> Result<Self, PatternError> {
        Pattern::new(Template::StartEndRelation, f, cmp, Rhs::Feature(g))
    }

    pub fn template(&self) -> Template {
        self.template
    }

    pub fn feature(&self) -> &FeatureFunction {
        &self.feature
    }

    pub fn kind(&self) -> FeatureKind {
        self.feature.kind
    }

    pub fn comparator(&self) -> Comparator {
        self.comparator
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    pub fn constant_value(&self) -> Option<FeatureValue> {
        match self.rhs {
            Rhs::Value(v) => Some(v),
            Rhs::Feature(_) => None,
        }
    }

    /// The feature function on the right-hand side of a relation pattern.
    pub fn related_feature(&self) -> Option<&FeatureFunction> {
        match &self.rhs {
            Rhs::Feature(g) => Some(g),
            Rhs::Value(_) => None,
        }
    }

    /// Domain values `v` with `v cmp rhs`; only for constant-rhs templates.
    pub fn satisfying_set(&self) -> Result<ValueSet, PatternError> {
        let rhs = self.constant_value().ok_or(PatternError::RhsMismatch)?;
        let kind = self.kind();
        Ok(ValueSet::from_values(kind, kind.domain().into_iter().filter(|&v| self.comparator.holds(v, rhs))))
    }

    /// Pairs `(a, b)` with `a cmp b`; only for relation templates.
    pub fn relation_set(&self) -> Result<RelationSet, PatternError> {
        if self.template.has_constant_rhs() {
            return Err(PatternError::RhsMismatch);
        }
        let cmp = self.comparator;
        Ok(RelationSet::from_predicate(self.kind(), |a, b| cmp.holds(a, b)))
    }

    /// True when every sequence satisfies the pattern.
    pub fn is_tautology(&self) -> bool {
        match self.template.has_constant_rhs() {
            true => self.satisfying_set().map(|s| s.is_full()).unwrap_or(false),
            false => self.relation_set().map(|r| r.is_full()).unwrap_or(false),
        }
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lhs, cmp) = (&self.feature, self.comparator);
        match (&self.rhs, self.template) {
            (Rhs::Value(v), Template::InitialState) => write!(f, "{lhs}[0] {cmp} {v}"),
            (Rhs::Value(v), Template::FinalState) => write!(f, "{lhs}[F] {cmp} {v}"),
            (Rhs::Value(v), _) => write!(f, "forall_t {lhs}[t] {cmp} {v}"),
            (Rhs::Feature(g), Template::ConsecutiveRelation) => write!(f, "forall_t {lhs}[t] {cmp} {g}[t+1]"),
            (Rhs::Feature(g), _) => write!(f, "{lhs}[0] {cmp} {g}[F]"),
        }
    }
}

impl FromStr for Pattern {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PatternError::Parse(s.to_string());
        let tokens: Vec<&str> = s.split(' ').collect();
        let (quantified, lhs, cmp, rhs) = match tokens.as_slice() {
            ["forall_t", lhs, cmp, rhs] => (true, *lhs, *cmp, *rhs),
            [lhs, cmp, rhs] => (false, *lhs, *cmp, *rhs),
            _ => return Err(bad()),
        };
        let cmp: Comparator = cmp.parse()?;
        let split_frame = |tok: &str| -> Option<(String, String)> {
            let open = tok.rfind('[')?;
            let idx = tok[open + 1..].strip_suffix(']')?;
            Some((tok[..open].to_string(), idx.to_string()))
        };
        let (lhs_fn, lhs_idx) = split_frame(lhs).ok_or_else(bad)?;
        let f: FeatureFunction = lhs_fn.parse()?;
        let rhs_frame = if rhs.ends_with(']') { split_frame(rhs) } else { None };
        let constant = || -> Result<Rhs, PatternError> { Ok(Rhs::Value(f.kind.parse_value(rhs)?)) };
        let (template, rhs) = match (quantified, lhs_idx.as_str(), rhs_frame) {
            (true, "t", Some((g, idx))) if idx == "t+1" => (Template::ConsecutiveRelation, Rhs::Feature(g.parse()?)),
            (true, "t", None) => (Template::ConstantAcrossFrames, constant()?),
            (false, "0", Some((g, idx))) if idx == "F" => (Template::StartEndRelation, Rhs::Feature(g.parse()?)),
            (false, "0", None) => (Template::InitialState, constant()?),
            (false, "F", None) => (Template::FinalState, constant()?),
            _ => return Err(bad()),
        };
        let p = Pattern::new(template, f, cmp, rhs)?;
        if p.to_string() != s {
            return Err(bad());
        }
        Ok(p)
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{CdValue, Compass, QdcBand, QtcSign};

    fn qdc(b: u8) -> FeatureValue {
        FeatureValue::Qdc(QdcBand(b))
    }

    fn qdc_ab() -> FeatureFunction {
        FeatureFunction::pair(FeatureKind::Qdc, "A", "B")
    }

    #[test]
    fn satisfying_sets() {
        let le1 = Pattern::initial(qdc_ab(), Comparator::Le, qdc(1)).unwrap();
        assert_eq!(le1.satisfying_set().unwrap().values(), vec![qdc(0), qdc(1)]);
        let eq0 = Pattern::initial(qdc_ab(), Comparator::Eq, qdc(0)).unwrap();
        assert_eq!(eq0.satisfying_set().unwrap().values(), vec![qdc(0)]);
        let cd = FeatureFunction::pair(FeatureKind::Cd, "A", "B");
        let ne_n = Pattern::initial(cd, Comparator::Ne, FeatureValue::Cd(CdValue::Dir(Compass::N))).unwrap();
        let set = ne_n.satisfying_set().unwrap();
        assert_eq!(set.len(), 8);
        assert!(!set.contains(FeatureValue::Cd(CdValue::Dir(Compass::N))));
    }

    #[test]
    fn order_comparators_only_on_qdc() {
        let cd = FeatureFunction::pair(FeatureKind::Cd, "A", "B");
        let err = Pattern::initial(cd, Comparator::Lt, FeatureValue::Cd(CdValue::Eq)).unwrap_err();
        assert!(matches!(err, PatternError::UnorderedComparator(Comparator::Lt, FeatureKind::Cd)));
        let c3 = FeatureFunction::pair(FeatureKind::QtcC3, "A", "B");
        assert!(Pattern::consecutive(c3, Comparator::Ge).is_err());
    }

    #[test]
    fn empty_and_mismatched_patterns_rejected() {
        assert!(matches!(Pattern::initial(qdc_ab(), Comparator::Lt, qdc(0)), Err(PatternError::EmptySatisfyingSet(_))));
        assert!(matches!(
            Pattern::initial(qdc_ab(), Comparator::Eq, FeatureValue::Mv(true)),
            Err(PatternError::KindMismatch { .. })
        ));
        assert!(Pattern::new(Template::ConsecutiveRelation, qdc_ab(), Comparator::Eq, Rhs::Value(qdc(0))).is_err());
    }

    #[test]
    fn grammar_round_trips() {
        let texts = [
            "forall_t QTC_C3(A,B)[t] = QTC_C3(A,B)[t+1]",
            "CD(A,B)[0] = CD(A,B)[F]",
            "QDC(A,B)[0] <= 1",
            "QDC(A,B)[F] != 3",
            "forall_t MV(A)[t] = 1",
            "forall_t QTC_C3(A,B)[t] = -",
            "forall_t MV_DIR(X)[t] = E",
            "forall_t QDC(L(S),C(S))[t] = QDC(L(S),C(S))[t+1]",
            "forall_t CD(A,B)[t] != EQ",
            "forall_t QDC(A,B)[t] <= QDC(A,C)[t+1]",
        ];
        for text in texts {
            let p: Pattern = text.parse().unwrap_or_else(|e| panic!("{text}: {e}"));
            assert_eq!(p.to_string(), text);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(serde_json::from_str::<Pattern>(&json).unwrap(), p);
        }
        let c3: Pattern = "forall_t QTC_C3(A,B)[t] = -".parse().unwrap();
        assert_eq!(c3.constant_value(), Some(FeatureValue::QtcC3(QtcSign::Minus)));
    }

    #[test]
    fn grammar_rejects_noise() {
        for text in [
            "",
            "forall_t MV(A)[t] = 2",
            "forall_t MV(A)[0] = 1",
            "MV(A)[t] = 1",
            "forall_t  MV(A)[t] = 1",
            "forall_t MV(A)[t] == 1",
            "CD(A,B)[0] = CD(A,B)[t+1]",
            "forall_t CD(A,B)[t] < N",
            "forall_t QDC(A,B)[t] = MV(A)[t+1]",
        ] {
            assert!(text.parse::<Pattern>().is_err(), "accepted {text:?}");
        }
    }

    #[test]
    fn tautologies() {
        assert!(Pattern::constant(qdc_ab(), Comparator::Ge, qdc(0)).unwrap().is_tautology());
        assert!(!Pattern::constant(qdc_ab(), Comparator::Ge, qdc(1)).unwrap().is_tautology());
        assert!(!Pattern::consecutive(qdc_ab(), Comparator::Le).unwrap().is_tautology());
    }
}
