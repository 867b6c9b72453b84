use serde::{Deserialize, Serialize};

use crate::features::{extract_on_frames, FeatureSequence, QuantizationConfig};
use crate::scene::{Demonstration, Frame, RoleBinding};

use super::{Pattern, PatternError, Rhs, Template};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Satisfied,
    Violated,
    Inapplicable,
}

/// Tallies of one pattern on one demonstration.
///
/// `outcomes` is indexed by frame for the constant template, by transition
/// `t -> t+1` for the consecutive template, and has a single entry for the
/// three single-evaluation templates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub applicable_count: usize,
    pub satisfied_count: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub outcomes: Vec<Outcome>,
}

impl EvaluationReport {
    fn from_outcomes(outcomes: Vec<Outcome>) -> Self {
        let applicable_count = outcomes.iter().filter(|o| **o != Outcome::Inapplicable).count();
        let satisfied_count = outcomes.iter().filter(|o| **o == Outcome::Satisfied).count();
        EvaluationReport { applicable_count, satisfied_count, outcomes }
    }

    /// True when nothing applicable was violated (vacuously true if nothing applied).
    pub fn fully_satisfied(&self) -> bool {
        self.satisfied_count == self.applicable_count
    }

    pub fn probability(&self) -> Option<f64> {
        (self.applicable_count > 0).then(|| self.satisfied_count as f64 / self.applicable_count as f64)
    }

    /// First violated index, if any.
    pub fn first_violation(&self) -> Option<usize> {
        self.outcomes.iter().position(|o| *o == Outcome::Violated)
    }

    /// Adds counts from another report, dropping per-frame outcomes.
    pub fn accumulate(&mut self, other: &EvaluationReport) {
        self.applicable_count += other.applicable_count;
        self.satisfied_count += other.satisfied_count;
        self.outcomes.clear();
    }
}

fn judge(ok: Option<bool>) -> Outcome {
    match ok {
        Some(true) => Outcome::Satisfied,
        Some(false) => Outcome::Violated,
        None => Outcome::Inapplicable,
    }
}

/// Evaluates `p` on precomputed sequences. `rhs` is the sequence of the
/// related feature for relation templates; pass `lhs` again when the binding
/// is shared.
pub fn evaluate_on_sequences(p: &Pattern, lhs: &FeatureSequence, rhs: &FeatureSequence) -> EvaluationReport {
    let n = lhs.len();
    let last = n - 1;
    let cmp = p.comparator();
    // dynamic bindings only relate frames that resolve to the same objects
    let dynamic = p.feature().is_dynamic() || p.related_feature().is_some_and(|g| g.is_dynamic());
    let related = |i: usize, j: usize| -> Option<bool> {
        let (a, b) = (lhs.values[i]?, rhs.values[j]?);
        if dynamic && lhs.bound[i] != rhs.bound[j] {
            return None;
        }
        Some(cmp.holds(a, b))
    };
    let outcomes = match (p.template(), p.rhs()) {
        (Template::InitialState, Rhs::Value(v)) => vec![judge(lhs.values[0].map(|a| cmp.holds(a, *v)))],
        (Template::FinalState, Rhs::Value(v)) => vec![judge(lhs.values[last].map(|a| cmp.holds(a, *v)))],
        (Template::ConstantAcrossFrames, Rhs::Value(v)) => {
            lhs.values.iter().map(|a| judge(a.map(|a| cmp.holds(a, *v)))).collect()
        }
        (Template::ConsecutiveRelation, _) => (0..last).map(|t| judge(related(t, t + 1))).collect(),
        (Template::StartEndRelation, _) => vec![judge(related(0, last))],
        _ => unreachable!("pattern invariants tie rhs to template"),
    };
    EvaluationReport::from_outcomes(outcomes)
}

pub fn evaluate_on_frames(
    p: &Pattern,
    frames: &[Frame],
    roles: &RoleBinding,
    cfg: &QuantizationConfig,
) -> Result<EvaluationReport, PatternError> {
    let lhs = extract_on_frames(frames, roles, p.feature(), cfg)?;
    let report = match p.related_feature() {
        Some(g) if g != p.feature() => evaluate_on_sequences(p, &lhs, &extract_on_frames(frames, roles, g, cfg)?),
        _ => evaluate_on_sequences(p, &lhs, &lhs),
    };
    Ok(report)
}

pub fn evaluate_pattern(
    p: &Pattern,
    d: &Demonstration,
    cfg: &QuantizationConfig,
) -> Result<EvaluationReport, PatternError> {
    evaluate_on_frames(p, &d.frames, &d.roles, cfg)
}
