//! Pairwise entailment between patterns.
//!
//! `entails(p1, p2)` holds when every feature sequence satisfying `p1` also
//! satisfies `p2`. Sequences have at least two frames and may contain frames
//! where the feature is undefined (an unresolved dynamic binding); such
//! frames make a check vacuous. The decision below is exact for that model:
//! each rule is sound, and every missing case has a counterexample of at most
//! three frames (see the exhaustive oracle in the tests).

use super::{Pattern, RelationSet, Template, ValueSet};

pub fn entails(p1: &Pattern, p2: &Pattern) -> bool {
    if p1 == p2 || p2.is_tautology() {
        return true;
    }
    if p1.feature() != p2.feature() {
        return false;
    }
    use Template::*;
    match (p1.template(), p2.template()) {
        (InitialState, InitialState) | (FinalState, FinalState) => subset(p1, p2),
        (ConstantAcrossFrames, InitialState | FinalState | ConstantAcrossFrames) => subset(p1, p2),
        (ConstantAcrossFrames, ConsecutiveRelation | StartEndRelation) => {
            same_rhs_binding(p2)
                && match (p1.satisfying_set(), p2.relation_set()) {
                    (Ok(s), Ok(r)) => RelationSet::square(&s).is_subset(&r),
                    _ => false,
                }
        }
        // s[0] in S forces (s[0], s[F]) into R whatever s[F] is
        (InitialState, StartEndRelation) => {
            same_rhs_binding(p2)
                && match (p1.satisfying_set(), p2.relation_set()) {
                    (Ok(s), Ok(r)) => RelationSet::product(&s, &ValueSet::full(s.kind())).is_subset(&r),
                    _ => false,
                }
        }
        (FinalState, StartEndRelation) => {
            same_rhs_binding(p2)
                && match (p1.satisfying_set(), p2.relation_set()) {
                    (Ok(s), Ok(r)) => RelationSet::product(&ValueSet::full(s.kind()), &s).is_subset(&r),
                    _ => false,
                }
        }
        (ConsecutiveRelation, ConsecutiveRelation) | (StartEndRelation, StartEndRelation) => {
            p1.related_feature() == p2.related_feature()
                && match (p1.relation_set(), p2.relation_set()) {
                    (Ok(a), Ok(b)) => a.is_subset(&b),
                    _ => false,
                }
        }
        _ => false,
    }
}

fn subset(p1: &Pattern, p2: &Pattern) -> bool {
    match (p1.satisfying_set(), p2.satisfying_set()) {
        (Ok(a), Ok(b)) => a.is_subset(&b),
        _ => false,
    }
}

fn same_rhs_binding(p: &Pattern) -> bool {
    p.related_feature() == Some(p.feature())
}
