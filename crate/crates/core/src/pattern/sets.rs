use crate::features::{FeatureKind, FeatureValue};

/// Subset of one kind's value domain, indexed by ordinal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ValueSet {
    kind: FeatureKind,
    bits: u16,
}

impl ValueSet {
    pub fn empty(kind: FeatureKind) -> Self {
        ValueSet { kind, bits: 0 }
    }

    pub fn full(kind: FeatureKind) -> Self {
        ValueSet { kind, bits: (1u16 << kind.domain_size()) - 1 }
    }

    pub fn from_values(kind: FeatureKind, values: impl IntoIterator<Item = FeatureValue>) -> Self {
        let mut s = ValueSet::empty(kind);
        for v in values {
            s.insert(v);
        }
        s
    }

    pub fn insert(&mut self, v: FeatureValue) {
        debug_assert_eq!(v.kind(), self.kind);
        self.bits |= 1 << v.ordinal();
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn contains(&self, v: FeatureValue) -> bool {
        v.kind() == self.kind && self.bits & (1 << v.ordinal()) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_full(&self) -> bool {
        *self == ValueSet::full(self.kind)
    }

    pub fn is_subset(&self, other: &ValueSet) -> bool {
        self.kind == other.kind && self.bits & !other.bits == 0
    }

    /// Members in ordinal order.
    pub fn values(&self) -> Vec<FeatureValue> {
        self.kind.domain().into_iter().filter(|v| self.contains(*v)).collect()
    }

    pub fn bits(&self) -> u16 {
        self.bits
    }
}

/// Set of ordered value pairs `(a, b)`, bit `a * 9 + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RelationSet {
    kind: FeatureKind,
    bits: u128,
}

const STRIDE: usize = 9;

impl RelationSet {
    pub fn from_predicate(kind: FeatureKind, pred: impl Fn(FeatureValue, FeatureValue) -> bool) -> Self {
        let mut bits = 0u128;
        let domain = kind.domain();
        for &a in &domain {
            for &b in &domain {
                if pred(a, b) {
                    bits |= 1 << (a.ordinal() * STRIDE + b.ordinal());
                }
            }
        }
        RelationSet { kind, bits }
    }

    /// `S × S`.
    pub fn square(s: &ValueSet) -> Self {
        RelationSet::from_predicate(s.kind(), |a, b| s.contains(a) && s.contains(b))
    }

    /// `left × right`.
    pub fn product(left: &ValueSet, right: &ValueSet) -> Self {
        RelationSet::from_predicate(left.kind(), |a, b| left.contains(a) && right.contains(b))
    }

    pub fn contains(&self, a: FeatureValue, b: FeatureValue) -> bool {
        a.kind() == self.kind && b.kind() == self.kind && self.bits & (1 << (a.ordinal() * STRIDE + b.ordinal())) != 0
    }

    pub fn is_subset(&self, other: &RelationSet) -> bool {
        self.kind == other.kind && self.bits & !other.bits == 0
    }

    pub fn is_full(&self) -> bool {
        *self == RelationSet::from_predicate(self.kind, |_, _| true)
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::QdcBand;

    #[test]
    fn value_set_basics() {
        let q = |b| FeatureValue::Qdc(QdcBand(b));
        let s = ValueSet::from_values(FeatureKind::Qdc, [q(0), q(1)]);
        assert_eq!(s.len(), 2);
        assert!(s.contains(q(1)) && !s.contains(q(2)));
        assert!(s.is_subset(&ValueSet::full(FeatureKind::Qdc)));
        assert!(!ValueSet::full(FeatureKind::Qdc).is_subset(&s));
        assert_eq!(s.values(), vec![q(0), q(1)]);
        assert!(ValueSet::full(FeatureKind::Cd).is_full());
        assert_eq!(ValueSet::full(FeatureKind::Cd).len(), 9);
    }

    #[test]
    fn relation_square_and_product() {
        let s = ValueSet::full(FeatureKind::Cd);
        assert_eq!(RelationSet::square(&s).len(), 81);
        assert!(RelationSet::square(&s).is_full());
        let eq = RelationSet::from_predicate(FeatureKind::Mv, |a, b| a == b);
        let one = ValueSet::from_values(FeatureKind::Mv, [FeatureValue::Mv(true)]);
        assert!(RelationSet::square(&one).is_subset(&eq));
        assert!(!RelationSet::product(&one, &ValueSet::full(FeatureKind::Mv)).is_subset(&eq));
    }
}
