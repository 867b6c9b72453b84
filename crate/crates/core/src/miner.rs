//! Candidate enumeration, confidence scoring and the ranked question queue.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{
    extract_feature_sequence, FeatureError, FeatureFunction, FeatureKind, FeatureSequence, FeatureValue,
    QuantizationConfig,
};
use crate::pattern::{
    entails, evaluate_on_sequences, Comparator, EvaluationReport, Pattern, PatternError, Rhs, Template, ValueSet,
};
use crate::scene::Demonstration;

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("no demonstrations to mine")]
    NoDemonstrations,
    #[error("demonstrations disagree on role slots: {0}")]
    MismatchedSignatures(String),
    #[error("pattern has no applicable evaluations: {0}")]
    NoApplicable(String),
    #[error("invalid miner config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Per-value weights `b(v)`. Values without an explicit entry fall back to
/// `1 / (ordinal + 1)` on QDC and `1` elsewhere.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    #[serde(default)]
    pub overrides: Vec<BiasOverride>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasOverride {
    pub kind: FeatureKind,
    pub value: String,
    pub weight: f64,
}

impl BiasModel {
    pub fn default_weight(v: FeatureValue) -> f64 {
        match v.kind() {
            FeatureKind::Qdc => 1.0 / (v.ordinal() as f64 + 1.0),
            _ => 1.0,
        }
    }

    pub fn weight(&self, v: FeatureValue) -> f64 {
        self.overrides
            .iter()
            .rev()
            .find(|o| o.kind == v.kind() && o.value == v.symbol())
            .map(|o| o.weight)
            .unwrap_or_else(|| Self::default_weight(v))
    }

    pub fn sum(&self, set: &ValueSet) -> f64 {
        set.values().into_iter().map(|v| self.weight(v)).sum()
    }

    pub fn validate(&self) -> Result<(), MinerError> {
        for o in &self.overrides {
            o.kind.parse_value(&o.value).map_err(|e| MinerError::InvalidConfig(e.to_string()))?;
            if !(o.weight > 0.0 && o.weight.is_finite()) {
                return Err(MinerError::InvalidConfig(format!(
                    "bias weight for {} {} must be positive",
                    o.kind, o.value
                )));
            }
        }
        Ok(())
    }
}

/// How relation patterns (no constant right-hand side) are scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationScoring {
    /// `q = probability`.
    #[default]
    Unit,
    /// `q = probability / |feature domain|`.
    InverseDomain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinerConfig {
    pub confidence_threshold: f64,
    pub kinds: Vec<FeatureKind>,
    /// Unary kinds on every role.
    pub unary_roles: bool,
    /// Binary kinds on every ordered role pair `(r_i, r_j)`, `i < j`.
    pub static_pairs: bool,
    /// Binary kinds on the last-moved / currently-moving pair.
    pub dynamic: bool,
    pub bias: BiasModel,
    pub relation_scoring: RelationScoring,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            confidence_threshold: 0.6,
            kinds: FeatureKind::ALL.to_vec(),
            unary_roles: true,
            static_pairs: true,
            dynamic: false,
            bias: BiasModel::default(),
            relation_scoring: RelationScoring::Unit,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<(), MinerError> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(MinerError::InvalidConfig("confidence_threshold must lie in [0, 1]".into()));
        }
        self.bias.validate()
    }

    pub fn with_kinds(mut self, kinds: &[FeatureKind]) -> Self {
        self.kinds = kinds.to_vec();
        self
    }
}

/// A scored pattern. `q == probability * bias_sum / domain_size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinedPattern {
    pub pattern: Pattern,
    pub probability: f64,
    pub bias_sum: f64,
    pub domain_size: usize,
    pub q: f64,
    pub support: EvaluationReport,
}

/// Feature functions enabled by `cfg` for the given role slots.
pub fn feature_functions(roles: &[String], cfg: &MinerConfig) -> Vec<FeatureFunction> {
    let kinds: BTreeSet<FeatureKind> = cfg.kinds.iter().copied().collect();
    let mut out = Vec::new();
    for &kind in &kinds {
        if kind.arity() == 1 {
            if cfg.unary_roles {
                out.extend(roles.iter().map(|r| FeatureFunction::unary(kind, r)));
            }
            continue;
        }
        if cfg.static_pairs {
            for (i, a) in roles.iter().enumerate() {
                for b in &roles[i + 1..] {
                    out.push(FeatureFunction::pair(kind, a, b));
                }
            }
        }
        if cfg.dynamic {
            out.push(FeatureFunction::dynamic(kind));
        }
    }
    out
}

fn role_slots(demos: &[Demonstration]) -> Result<Vec<String>, MinerError> {
    let first = demos.first().ok_or(MinerError::NoDemonstrations)?;
    for d in &demos[1..] {
        if d.signature.roles != first.signature.roles {
            return Err(MinerError::MismatchedSignatures(format!(
                "{} has [{}], {} has [{}]",
                first.name,
                first.signature.roles.join(", "),
                d.name,
                d.signature.roles.join(", ")
            )));
        }
    }
    Ok(first.signature.roles.clone())
}

/// Feature sequences per function, one per demonstration.
struct SequenceCache {
    sequences: HashMap<FeatureFunction, Vec<FeatureSequence>>,
}

impl SequenceCache {
    fn build(
        demos: &[Demonstration],
        functions: &[FeatureFunction],
        qcfg: &QuantizationConfig,
    ) -> Result<Self, MinerError> {
        let sequences = functions
            .par_iter()
            .map(|f| {
                let seqs = demos.iter().map(|d| extract_feature_sequence(d, f, qcfg)).collect::<Result<Vec<_>, _>>()?;
                Ok((f.clone(), seqs))
            })
            .collect::<Result<HashMap<_, _>, MinerError>>()?;
        Ok(SequenceCache { sequences })
    }

    fn support(&self, p: &Pattern) -> EvaluationReport {
        let lhs = &self.sequences[p.feature()];
        let rhs = match p.related_feature() {
            Some(g) => &self.sequences[g],
            None => lhs,
        };
        let mut total = EvaluationReport::default();
        for (l, r) in lhs.iter().zip(rhs) {
            total.accumulate(&evaluate_on_sequences(p, l, r));
        }
        total
    }
}

fn observed(seqs: &[FeatureSequence], template: Template) -> BTreeSet<FeatureValue> {
    let mut out = BTreeSet::new();
    for s in seqs {
        let picked: Vec<Option<FeatureValue>> = match template {
            Template::InitialState => vec![s.values[0]],
            Template::FinalState => vec![s.values[s.len() - 1]],
            _ => s.values.clone(),
        };
        out.extend(picked.into_iter().flatten());
    }
    out
}

fn constant_candidates(f: &FeatureFunction, template: Template, seen: &BTreeSet<FeatureValue>) -> Vec<Pattern> {
    let kind = f.kind;
    let seen_set = ValueSet::from_values(kind, seen.iter().copied());
    let mut by_set: BTreeMap<u16, Pattern> = BTreeMap::new();
    let comparators: &[Comparator] = if kind.is_ordered() { &Comparator::ALL } else { &[Comparator::Eq] };
    // Comparator::ALL lists `=` first, so the plainest form wins each satisfying set
    for &cmp in comparators {
        for c in kind.domain() {
            if cmp == Comparator::Eq && !seen.contains(&c) {
                continue;
            }
            let Ok(p) = Pattern::new(template, f.clone(), cmp, Rhs::Value(c)) else {
                continue;
            };
            let set = p.satisfying_set().expect("constant template");
            if set.is_full() || set.bits() & seen_set.bits() == 0 {
                continue;
            }
            by_set.entry(set.bits()).or_insert(p);
        }
    }
    by_set.into_values().collect()
}

fn relation_candidates(f: &FeatureFunction, template: Template, seqs: &[FeatureSequence]) -> Vec<Pattern> {
    let eq = Pattern::new(template, f.clone(), Comparator::Eq, Rhs::Feature(f.clone())).expect("= is always allowed");
    let ne = Pattern::new(template, f.clone(), Comparator::Ne, Rhs::Feature(f.clone())).expect("!= is always allowed");
    let seen_unequal = seqs.iter().any(|s| evaluate_on_sequences(&ne, s, s).satisfied_count > 0);
    if seen_unequal {
        vec![eq, ne]
    } else {
        vec![eq]
    }
}

fn enumerate_with_cache(functions: &[FeatureFunction], cache: &SequenceCache) -> Vec<Pattern> {
    let mut out = BTreeSet::new();
    for f in functions {
        let seqs = &cache.sequences[f];
        for template in Template::ALL {
            if template.has_constant_rhs() {
                out.extend(constant_candidates(f, template, &observed(seqs, template)));
            } else {
                out.extend(relation_candidates(f, template, seqs));
            }
        }
    }
    out.into_iter().collect()
}

/// Every candidate pattern for `demos`, deduplicated and sorted.
///
/// Constant templates use values observed at the frames they test (frame 0,
/// frame F, or any frame). On QDC, every order or `!=` cut whose satisfying
/// set contains an observed value is added, one pattern per distinct
/// satisfying set. Relation templates get `=`, plus `!=` where some
/// applicable pair differed.
pub fn enumerate_candidates(
    demos: &[Demonstration],
    cfg: &MinerConfig,
    qcfg: &QuantizationConfig,
) -> Result<Vec<Pattern>, MinerError> {
    let roles = role_slots(demos)?;
    let functions = feature_functions(&roles, cfg);
    let cache = SequenceCache::build(demos, &functions, qcfg)?;
    Ok(enumerate_with_cache(&functions, &cache))
}

/// Pooled fraction of satisfied evaluations across all demonstrations.
pub fn probability(p: &Pattern, demos: &[Demonstration], qcfg: &QuantizationConfig) -> Result<f64, MinerError> {
    let mut total = EvaluationReport::default();
    for d in demos {
        total.accumulate(&crate::pattern::evaluate_pattern(p, d, qcfg)?);
    }
    total.probability().ok_or_else(|| MinerError::NoApplicable(p.to_string()))
}

/// Returns `(q, bias_sum, domain_size)`.
pub fn score_parts(p: &Pattern, prob: f64, bias: &BiasModel, scoring: RelationScoring) -> (f64, f64, usize) {
    match p.satisfying_set() {
        Ok(set) => {
            let bias_sum = bias.sum(&set);
            (prob * bias_sum / set.len() as f64, bias_sum, set.len())
        }
        Err(_) => match scoring {
            RelationScoring::Unit => (prob, 1.0, 1),
            RelationScoring::InverseDomain => {
                let n = p.kind().domain_size();
                (prob / n as f64, 1.0, n)
            }
        },
    }
}

/// Confidence heuristic with the default relation scoring.
pub fn confidence_q(p: &Pattern, prob: f64, bias: &BiasModel) -> f64 {
    score_parts(p, prob, bias, RelationScoring::default()).0
}

/// Longest chain of strictly entailing patterns above each pattern.
fn entailment_layers(patterns: &[Pattern]) -> Vec<usize> {
    let n = patterns.len();
    let rel: Vec<Vec<bool>> = patterns.par_iter().map(|a| patterns.iter().map(|b| entails(a, b)).collect()).collect();
    let strict = |i: usize, j: usize| i != j && rel[i][j] && !rel[j][i];
    let mut indegree: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| strict(i, j)).count()).collect();
    let mut layer = vec![0usize; n];
    let mut ready: Vec<usize> = (0..n).filter(|&j| indegree[j] == 0).collect();
    while let Some(i) = ready.pop() {
        for j in 0..n {
            if strict(i, j) {
                layer[j] = layer[j].max(layer[i] + 1);
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
    }
    layer
}

/// Orders by entailment layer, then `q` descending, then canonical text.
/// Mutually entailing patterns keep only the best-scored representative.
pub fn rank(mut mined: Vec<MinedPattern>) -> Vec<MinedPattern> {
    mined.sort_by(|a, b| b.q.total_cmp(&a.q).then_with(|| a.pattern.canonical().cmp(&b.pattern.canonical())));
    let mut kept: Vec<MinedPattern> = Vec::with_capacity(mined.len());
    for m in mined {
        if !kept.iter().any(|k| entails(&k.pattern, &m.pattern) && entails(&m.pattern, &k.pattern)) {
            kept.push(m);
        }
    }
    let patterns: Vec<Pattern> = kept.iter().map(|m| m.pattern.clone()).collect();
    let layers = entailment_layers(&patterns);
    let mut order: Vec<usize> = (0..kept.len()).collect();
    order.sort_by(|&i, &j| {
        layers[i]
            .cmp(&layers[j])
            .then_with(|| kept[j].q.total_cmp(&kept[i].q))
            .then_with(|| patterns[i].canonical().cmp(&patterns[j].canonical()))
    });
    let mut slots: Vec<Option<MinedPattern>> = kept.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("each index once")).collect()
}

/// Enumerates, scores and ranks; drops patterns with `q < threshold` and
/// patterns that were never applicable.
pub fn mine(
    demos: &[Demonstration],
    cfg: &MinerConfig,
    qcfg: &QuantizationConfig,
) -> Result<Vec<MinedPattern>, MinerError> {
    cfg.validate()?;
    qcfg.validate()?;
    let roles = role_slots(demos)?;
    let functions = feature_functions(&roles, cfg);
    let cache = SequenceCache::build(demos, &functions, qcfg)?;
    let candidates = enumerate_with_cache(&functions, &cache);
    let scored: Vec<MinedPattern> = candidates
        .par_iter()
        .filter_map(|p| {
            let support = cache.support(p);
            let prob = support.probability()?;
            let (q, bias_sum, domain_size) = score_parts(p, prob, &cfg.bias, cfg.relation_scoring);
            (q >= cfg.confidence_threshold).then(|| MinedPattern {
                pattern: p.clone(),
                probability: prob,
                bias_sum,
                domain_size,
                q,
                support,
            })
        })
        .collect();
    log::debug!("{} candidates, {} above threshold", candidates.len(), scored.len());
    Ok(rank(scored))
}

/// JSON document for the `mine` report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MineReport {
    pub demonstrations: Vec<String>,
    pub confidence_threshold: f64,
    pub patterns: Vec<MinedPattern>,
}

impl MineReport {
    pub fn new(demos: &[Demonstration], cfg: &MinerConfig, patterns: Vec<MinedPattern>) -> Self {
        MineReport {
            demonstrations: demos.iter().map(|d| d.name.clone()).collect(),
            confidence_threshold: cfg.confidence_threshold,
            patterns,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::QdcBand;
    use crate::scene::{generate_synthetic, GeneratorParams, SyntheticKind};

    fn qdc_ab() -> FeatureFunction {
        FeatureFunction::pair(FeatureKind::Qdc, "A", "B")
    }

    fn q(b: u8) -> FeatureValue {
        FeatureValue::Qdc(QdcBand(b))
    }

    #[test]
    fn worked_q_values() {
        let bias = BiasModel::default();
        let eq0 = Pattern::initial(qdc_ab(), Comparator::Eq, q(0)).unwrap();
        let le1 = Pattern::initial(qdc_ab(), Comparator::Le, q(1)).unwrap();
        assert_eq!(confidence_q(&eq0, 0.8, &bias), 0.8);
        assert_eq!(confidence_q(&le1, 1.0, &bias), 0.75);
        assert!(confidence_q(&le1, 1.0, &bias) > confidence_q(&eq0, 0.5, &bias));
    }

    #[test]
    fn relation_scoring_variants() {
        let p = Pattern::consecutive(FeatureFunction::pair(FeatureKind::Cd, "A", "B"), Comparator::Eq).unwrap();
        let bias = BiasModel::default();
        assert_eq!(score_parts(&p, 0.9, &bias, RelationScoring::Unit), (0.9, 1.0, 1));
        assert_eq!(score_parts(&p, 0.9, &bias, RelationScoring::InverseDomain), (0.1, 1.0, 9));
    }

    #[test]
    fn bias_overrides_apply() {
        let bias =
            BiasModel { overrides: vec![BiasOverride { kind: FeatureKind::Qdc, value: "1".into(), weight: 2.0 }] };
        assert_eq!(bias.weight(q(1)), 2.0);
        assert_eq!(bias.weight(q(2)), 1.0 / 3.0);
        assert!(bias.validate().is_ok());
        let bad =
            BiasModel { overrides: vec![BiasOverride { kind: FeatureKind::Qdc, value: "7".into(), weight: 2.0 }] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn function_inventory() {
        let roles = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        let cfg =
            MinerConfig { dynamic: true, ..MinerConfig::default() }.with_kinds(&[FeatureKind::Mv, FeatureKind::Qdc]);
        let names: Vec<String> = feature_functions(&roles, &cfg).iter().map(|f| f.to_string()).collect();
        assert_eq!(names, ["MV(A)", "MV(B)", "MV(C)", "QDC(A,B)", "QDC(A,C)", "QDC(B,C)", "QDC(L(S),C(S))"]);
    }

    #[test]
    fn mismatched_roles_rejected() {
        let a = generate_synthetic(SyntheticKind::CircleAround, &GeneratorParams::default(), 1).unwrap();
        let b = generate_synthetic(SyntheticKind::TranslateEast, &GeneratorParams::default(), 1).unwrap();
        assert!(matches!(
            enumerate_candidates(&[a, b], &MinerConfig::default(), &QuantizationConfig::default()),
            Err(MinerError::MismatchedSignatures(_))
        ));
        assert!(matches!(
            mine(&[], &MinerConfig::default(), &QuantizationConfig::default()),
            Err(MinerError::NoDemonstrations)
        ));
    }

    #[test]
    fn east_translation_ranks_direction_before_sameness() {
        let d = generate_synthetic(SyntheticKind::TranslateEast, &GeneratorParams::default(), 2).unwrap();
        let mined = mine(&[d], &MinerConfig::default(), &QuantizationConfig::default()).unwrap();
        let pos = |text: &str| mined.iter().position(|m| m.pattern.to_string() == text);
        let east = pos("forall_t MV_DIR(X)[t] = E").expect("constant direction mined");
        let same = pos("forall_t MV_DIR(X)[t] = MV_DIR(X)[t+1]").expect("consecutive equality mined");
        assert!(east < same);
        assert_eq!(mined[east].q, 1.0);
    }
}
