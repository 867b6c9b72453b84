//! Qualitative feature calculi evaluated frame by frame.

mod calculi;
mod quantization;
mod sequence;
mod value;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scene::ObjectId;

pub use calculi::{eval_cd, eval_mv, eval_mv_dir, eval_qdc, eval_qtc_c1, eval_qtc_c3};
pub use quantization::QuantizationConfig;
pub use sequence::{extract_feature_sequence, extract_on_frames, BoundObjects, FeatureSequence};
pub use value::{CdValue, Compass, FeatureKind, FeatureValue, MoveDir, QdcBand, QtcSign};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("unknown feature kind: {0}")]
    UnknownKind(String),
    #[error("unknown {kind} value: {text}")]
    UnknownValue { kind: FeatureKind, text: String },
    #[error("invalid quantization config: {0}")]
    InvalidConfig(String),
    #[error("object {0} missing from frame")]
    MissingObject(ObjectId),
    #[error("undefined reference line: {0} and {1} coincide")]
    UndefinedReferenceLine(ObjectId, ObjectId),
    #[error("static role unresolvable: {0}")]
    UnresolvedRole(String),
    #[error("binding arity does not match {0}")]
    ArityMismatch(FeatureKind),
    #[error("feature extraction needs at least 2 frames")]
    TooFewFrames,
    #[error("malformed feature function: {0}")]
    Malformed(String),
}

/// Which objects a feature function reads.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binding {
    Unary(String),
    Pair(String, String),
    /// Last-moved block and currently moving block, resolved per frame.
    LastCurrent,
}

/// A feature kind bound to roles, e.g. `QTC_C3(A,B)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureFunction {
    pub kind: FeatureKind,
    pub binding: Binding,
}

impl FeatureFunction {
    pub fn new(kind: FeatureKind, binding: Binding) -> Result<Self, FeatureError> {
        let ok = match &binding {
            Binding::Unary(_) => kind.arity() == 1,
            Binding::Pair(a, b) => kind.arity() == 2 && a != b,
            Binding::LastCurrent => kind.arity() == 2,
        };
        if ok {
            Ok(FeatureFunction { kind, binding })
        } else {
            Err(FeatureError::ArityMismatch(kind))
        }
    }

    /// Panics on arity mismatch; for literals in code and tests.
    pub fn unary(kind: FeatureKind, role: &str) -> Self {
        Self::new(kind, Binding::Unary(role.to_string())).expect("unary kind")
    }

    pub fn pair(kind: FeatureKind, a: &str, b: &str) -> Self {
        Self::new(kind, Binding::Pair(a.to_string(), b.to_string())).expect("binary kind")
    }

    pub fn dynamic(kind: FeatureKind) -> Self {
        Self::new(kind, Binding::LastCurrent).expect("binary kind")
    }

    pub fn is_dynamic(&self) -> bool {
        self.binding == Binding::LastCurrent
    }

    /// Role names in slot order; empty for the dynamic binding.
    pub fn roles(&self) -> Vec<&str> {
        match &self.binding {
            Binding::Unary(a) => vec![a],
            Binding::Pair(a, b) => vec![a, b],
            Binding::LastCurrent => vec![],
        }
    }
}

impl fmt::Display for FeatureFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.binding {
            Binding::Unary(a) => write!(f, "{}({a})", self.kind),
            Binding::Pair(a, b) => write!(f, "{}({a},{b})", self.kind),
            Binding::LastCurrent => write!(f, "{}(L(S),C(S))", self.kind),
        }
    }
}

fn is_role_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for FeatureFunction {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || FeatureError::Malformed(s.to_string());
        let open = s.find('(').ok_or_else(malformed)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(malformed)?;
        let kind: FeatureKind = s[..open].parse()?;
        let binding = if inner == "L(S),C(S)" {
            Binding::LastCurrent
        } else {
            let parts: Vec<&str> = inner.split(',').collect();
            if !parts.iter().all(|p| is_role_name(p)) {
                return Err(malformed());
            }
            match parts.as_slice() {
                [a] => Binding::Unary(a.to_string()),
                [a, b] => Binding::Pair(a.to_string(), b.to_string()),
                _ => return Err(malformed()),
            }
        };
        FeatureFunction::new(kind, binding)
    }
}
