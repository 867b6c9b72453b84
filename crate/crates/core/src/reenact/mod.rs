//! Reenacting a confirmed concept in a new scene.
//!
//! A plan is a chain of small [`StepPrimitive`]s. Every step must keep the
//! concept's per-frame patterns true; the search stops once the terminal
//! patterns hold and enough progress has been made.

mod search;

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{eval_qtc_c3, Binding, FeatureError, FeatureKind, FeatureValue, QuantizationConfig};
use crate::pattern::{evaluate_on_frames, Comparator, Outcome, Pattern, PatternError, Template};
use crate::scene::{ActionSignature, Demonstration, Frame, ObjectId, RoleBinding, SceneError, SourceKind};

pub use search::plan;

/// Time between consecutive plan frames.
pub const PLAN_FRAME_DT: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum ReenactError {
    #[error("no movable object: no role is constrained to keep moving")]
    NoMovableObject,
    #[error("plan not found after {expansions} expansions")]
    PlanNotFound { expansions: usize },
    #[error("scene violates initial state: {0}")]
    SceneViolatesInitial(String),
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum StepPrimitive {
    Move { object: ObjectId, target: [f64; 2] },
    Rotate { object: ObjectId, delta_yaw: f64 },
}

impl StepPrimitive {
    pub fn object(&self) -> &ObjectId {
        match self {
            StepPrimitive::Move { object, .. } | StepPrimitive::Rotate { object, .. } => object,
        }
    }

    /// Applies the step, producing the next frame `dt` seconds later.
    pub fn apply(&self, state: &Frame, dt: f64) -> Frame {
        let mut next = state.clone();
        next.t = state.t + dt;
        if let Some(pose) = next.pose_mut(self.object()) {
            match self {
                StepPrimitive::Move { target, .. } => pose.pos = *target,
                StepPrimitive::Rotate { delta_yaw, .. } => pose.yaw = crate::scene::normalize_yaw(pose.yaw + delta_yaw),
            }
        }
        next
    }

    /// Stable text form used to break score ties.
    pub fn canonical(&self) -> String {
        match self {
            StepPrimitive::Move { object, target } => format!("M({object},{:?},{:?})", target[0], target[1]),
            StepPrimitive::Rotate { object, delta_yaw } => format!("R({object},{delta_yaw:?})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    Beam,
    BestFirst,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub strategy: SearchStrategy,
    pub beam_width: usize,
    pub candidates_per_expansion: usize,
    pub max_step: f64,
    pub max_expansions: usize,
    pub rng_seed: u64,
    /// Revolutions about the reference object required before stopping.
    pub min_progress: f64,
    pub min_steps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: SearchStrategy::Beam,
            beam_width: 16,
            candidates_per_expansion: 32,
            max_step: 0.25,
            max_expansions: 20_000,
            rng_seed: 7,
            min_progress: 0.9,
            min_steps: 8,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ReenactError> {
        let bad = |m: &str| Err(ReenactError::InvalidConfig(m.to_string()));
        if self.beam_width == 0 {
            return bad("beam_width must be positive");
        }
        if self.candidates_per_expansion == 0 {
            return bad("candidates_per_expansion must be positive");
        }
        if !(self.max_step.is_finite() && self.max_step > 0.0) {
            return bad("max_step must be positive and finite");
        }
        if self.max_expansions == 0 {
            return bad("max_expansions must be positive");
        }
        if !(self.min_progress.is_finite() && self.min_progress >= 0.0) {
            return bad("min_progress must be a finite non-negative number");
        }
        Ok(())
    }
}

/// Confirmed patterns split by when they are checked.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintSet {
    pub during: Vec<Pattern>,
    pub terminal: Vec<Pattern>,
    pub initial: Vec<Pattern>,
}

impl ConstraintSet {
    /// The mover and reference objects' roles of the first QTC_C3 constancy
    /// constraint, which drives the swept-angle progress guard.
    pub fn progress_pair(&self) -> Option<(&str, &str)> {
        self.during.iter().find_map(|p| {
            if p.kind() != FeatureKind::QtcC3 || p.comparator() != Comparator::Eq {
                return None;
            }
            if p.related_feature().is_some_and(|g| g != p.feature()) {
                return None;
            }
            match &p.feature().binding {
                Binding::Pair(k, l) => Some((k.as_str(), l.as_str())),
                _ => None,
            }
        })
    }

    fn has_dynamic(patterns: &[Pattern]) -> bool {
        patterns.iter().any(is_dynamic)
    }
}

pub fn split_constraints(confirmed: &[Pattern]) -> ConstraintSet {
    let mut cs = ConstraintSet::default();
    for p in confirmed {
        match p.template() {
            Template::ConstantAcrossFrames | Template::ConsecutiveRelation => cs.during.push(p.clone()),
            Template::FinalState | Template::StartEndRelation => cs.terminal.push(p.clone()),
            Template::InitialState => cs.initial.push(p.clone()),
        }
    }
    cs
}

fn is_dynamic(p: &Pattern) -> bool {
    p.feature().is_dynamic() || p.related_feature().is_some_and(|g| g.is_dynamic())
}

/// Objects whose role is constrained to move on every frame. Everything
/// else stays where the scene put it.
pub fn movable_objects(cs: &ConstraintSet, roles: &RoleBinding) -> Result<Vec<ObjectId>, ReenactError> {
    let mut out = Vec::new();
    for p in &cs.during {
        if p.template() != Template::ConstantAcrossFrames || p.kind() != FeatureKind::Mv {
            continue;
        }
        if p.comparator() != Comparator::Eq || p.constant_value() != Some(FeatureValue::Mv(true)) {
            continue;
        }
        if let Binding::Unary(role) = &p.feature().binding {
            let obj = roles.object(role).ok_or_else(|| FeatureError::UnresolvedRole(role.clone()))?;
            if !out.contains(obj) {
                out.push(obj.clone());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Draws `candidates_per_expansion` moves of the movable objects. Each
/// displacement has length in `(0, max_step]` and a uniform heading.
pub fn generate_candidate_steps(
    state: &Frame,
    movable: &[ObjectId],
    cfg: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<StepPrimitive>, ReenactError> {
    if movable.is_empty() {
        return Err(ReenactError::NoMovableObject);
    }
    let mut out = Vec::with_capacity(cfg.candidates_per_expansion);
    for _ in 0..cfg.candidates_per_expansion {
        let object = &movable[rng.gen_range(0..movable.len())];
        let magnitude = cfg.max_step * (1.0 - rng.gen::<f64>());
        let heading = rng.gen::<f64>() * TAU;
        let pose = state.pose(object).ok_or_else(|| FeatureError::MissingObject(object.clone()))?;
        let target = [pose.pos[0] + magnitude * heading.cos(), pose.pos[1] + magnitude * heading.sin()];
        out.push(StepPrimitive::Move { object: object.clone(), target });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(Pattern),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// True when `p` holds on `frames`. Static bindings must also be defined
/// everywhere; an undefined value means the objects coincide.
fn holds_on(
    p: &Pattern,
    frames: &[Frame],
    roles: &RoleBinding,
    qcfg: &QuantizationConfig,
) -> Result<bool, ReenactError> {
    let report = evaluate_on_frames(p, frames, roles, qcfg)?;
    Ok(report.fully_satisfied() && (is_dynamic(p) || report.outcomes.iter().all(|o| *o != Outcome::Inapplicable)))
}

fn window(history: &[Frame], dynamic: bool) -> &[Frame] {
    if dynamic {
        history
    } else {
        &history[history.len().saturating_sub(2)..]
    }
}

/// Checks the transition from the last frame of `history` to `next`.
///
/// Static patterns are evaluated on the last two history frames plus `next`,
/// which covers the new transition and its predecessor; dynamic ones need
/// the whole prefix to resolve their episodes. Initial-state patterns are
/// checked when `history` is just the starting scene.
pub fn check_transition(
    history: &[Frame],
    next: &Frame,
    cs: &ConstraintSet,
    roles: &RoleBinding,
    qcfg: &QuantizationConfig,
) -> Result<Verdict, ReenactError> {
    assert!(!history.is_empty(), "history holds at least the starting frame");
    let first_step = history.len() == 1;
    let patterns = cs.during.iter().chain(cs.initial.iter().filter(|_| first_step));
    for p in patterns {
        let mut frames = window(history, is_dynamic(p)).to_vec();
        frames.push(next.clone());
        if !holds_on(p, &frames, roles, qcfg)? {
            return Ok(Verdict::Fail(p.clone()));
        }
    }
    Ok(Verdict::Pass)
}

/// Signed angle swept by `k` around `l`, in revolutions.
pub fn swept_revolutions(frames: &[Frame], k: &ObjectId, l: &ObjectId) -> Result<f64, FeatureError> {
    let bearing = |f: &Frame| -> Result<f64, FeatureError> {
        let pk = f.pose(k).ok_or_else(|| FeatureError::MissingObject(k.clone()))?;
        let pl = f.pose(l).ok_or_else(|| FeatureError::MissingObject(l.clone()))?;
        Ok((pk.pos[1] - pl.pos[1]).atan2(pk.pos[0] - pl.pos[0]))
    };
    let mut total = 0.0;
    for w in frames.windows(2) {
        total += wrap_angle(bearing(&w[1])? - bearing(&w[0])?);
    }
    Ok(total / TAU)
}

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > std::f64::consts::PI {
        r - TAU
    } else {
        r
    }
}

fn progress_objects(cs: &ConstraintSet, roles: &RoleBinding) -> Result<Option<(ObjectId, ObjectId)>, ReenactError> {
    let Some((k, l)) = cs.progress_pair() else {
        return Ok(None);
    };
    let resolve = |r: &str| roles.object(r).cloned().ok_or_else(|| FeatureError::UnresolvedRole(r.to_string()));
    Ok(Some((resolve(k)?, resolve(l)?)))
}

/// Number of terminal patterns holding between the first and last frame.
fn terminal_count(
    frames: &[Frame],
    cs: &ConstraintSet,
    roles: &RoleBinding,
    qcfg: &QuantizationConfig,
) -> Result<usize, ReenactError> {
    let mut n = 0;
    for p in &cs.terminal {
        if holds_on(p, frames, roles, qcfg)? {
            n += 1;
        }
    }
    Ok(n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub transition: usize,
    pub pattern: Pattern,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalEntry {
    pub pattern: Pattern,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanTrace {
    pub initial: Frame,
    pub steps: Vec<StepPrimitive>,
    pub frames: Vec<Frame>,
    /// One entry per (transition, during pattern).
    pub audit: Vec<AuditEntry>,
    pub terminal: Vec<TerminalEntry>,
    pub expansions: usize,
    pub swept_revolutions: f64,
}

impl PlanTrace {
    /// Replays `steps` from `initial`.
    pub fn from_steps(initial: Frame, steps: Vec<StepPrimitive>) -> Self {
        let mut frames = vec![initial.clone()];
        for s in &steps {
            let next = s.apply(frames.last().expect("nonempty"), PLAN_FRAME_DT);
            frames.push(next);
        }
        PlanTrace {
            initial,
            steps,
            frames,
            audit: Vec::new(),
            terminal: Vec::new(),
            expansions: 0,
            swept_revolutions: 0.0,
        }
    }

    /// Re-evaluates every during pattern on every transition and every
    /// terminal pattern on the whole trace.
    pub fn fill_audit(
        &mut self,
        cs: &ConstraintSet,
        roles: &RoleBinding,
        qcfg: &QuantizationConfig,
    ) -> Result<(), ReenactError> {
        self.audit.clear();
        for t in 0..self.steps.len() {
            for p in &cs.during {
                let frames = &self.frames[..=t];
                let mut w = window(frames, is_dynamic(p)).to_vec();
                w.push(self.frames[t + 1].clone());
                self.audit.push(AuditEntry {
                    transition: t,
                    pattern: p.clone(),
                    passed: holds_on(p, &w, roles, qcfg)?,
                });
            }
        }
        self.terminal.clear();
        for p in &cs.terminal {
            let passed = self.frames.len() >= 2 && holds_on(p, &self.frames, roles, qcfg)?;
            self.terminal.push(TerminalEntry { pattern: p.clone(), passed });
        }
        self.swept_revolutions = match progress_objects(cs, roles)? {
            Some((k, l)) => swept_revolutions(&self.frames, &k, &l)?,
            None => 0.0,
        };
        Ok(())
    }

    pub fn to_demonstration(
        &self,
        signature: &ActionSignature,
        roles: &RoleBinding,
    ) -> Result<Demonstration, SceneError> {
        Demonstration::new("plan", signature.clone(), self.frames.clone(), roles.clone(), SourceKind::DenseStream)
    }

    /// Demonstration document plus `steps`, `audit` and `terminal` sections.
    pub fn to_document(
        &self,
        signature: &ActionSignature,
        roles: &RoleBinding,
    ) -> Result<serde_json::Value, SceneError> {
        let demo = self.to_demonstration(signature, roles)?;
        let mut doc = serde_json::to_value(crate::scene::DemoDocument::from(&demo)).expect("document serializes");
        let obj = doc.as_object_mut().expect("document is an object");
        obj.insert("steps".into(), serde_json::to_value(&self.steps).expect("steps serialize"));
        obj.insert("audit".into(), serde_json::to_value(&self.audit).expect("audit serializes"));
        obj.insert("terminal".into(), serde_json::to_value(&self.terminal).expect("terminal serializes"));
        Ok(doc)
    }
}

/// True when the trace may stop: it has at least `min_steps` steps, every
/// terminal pattern holds between its first and last frame and, under a
/// QTC_C3 constancy constraint, the mover has swept `min_progress`
/// revolutions about the reference object.
pub fn termination_satisfied(
    trace: &PlanTrace,
    cs: &ConstraintSet,
    cfg: &SearchConfig,
    roles: &RoleBinding,
    qcfg: &QuantizationConfig,
) -> Result<bool, ReenactError> {
    if trace.steps.is_empty() || trace.steps.len() < cfg.min_steps || trace.frames.len() < 2 {
        return Ok(false);
    }
    if let Some((k, l)) = progress_objects(cs, roles)? {
        if swept_revolutions(&trace.frames, &k, &l)?.abs() < cfg.min_progress {
            return Ok(false);
        }
    }
    Ok(terminal_count(&trace.frames, cs, roles, qcfg)? == cs.terminal.len())
}

/// Rejects scenes where the concept cannot even start: unbound roles,
/// coincident QTC_C3 objects, or a violated state-based initial pattern.
fn check_scene(
    scene: &Frame,
    cs: &ConstraintSet,
    roles: &RoleBinding,
    qcfg: &QuantizationConfig,
) -> Result<(), ReenactError> {
    roles.validate(&scene.object_ids())?;
    let all = cs.during.iter().chain(&cs.terminal).chain(&cs.initial);
    for p in all {
        for f in std::iter::once(p.feature()).chain(p.related_feature()) {
            if let (FeatureKind::QtcC3, Binding::Pair(k, l)) = (f.kind, &f.binding) {
                let resolve =
                    |r: &str| roles.object(r).cloned().ok_or_else(|| FeatureError::UnresolvedRole(r.to_string()));
                eval_qtc_c3(&resolve(k)?, &resolve(l)?, scene, scene, qcfg)?;
            }
        }
    }
    let still = [scene.clone(), scene.clone()];
    for p in &cs.initial {
        if p.kind().is_transition() {
            continue;
        }
        if !evaluate_on_frames(p, &still, roles, qcfg)?.fully_satisfied() {
            return Err(ReenactError::SceneViolatesInitial(p.to_string()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureFunction, QtcSign};
    use crate::scene::ObjectPose;
    use rand::SeedableRng;

    fn around() -> Vec<Pattern> {
        [
            "CD(A,B)[0] = CD(A,B)[F]",
            "forall_t MV(A)[t] = 1",
            "forall_t MV(B)[t] = 0",
            "forall_t QTC_C3(A,B)[t] = QTC_C3(A,B)[t+1]",
        ]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
    }

    fn roles() -> RoleBinding {
        RoleBinding::new().bind("A", "a", None).bind("B", "b", None)
    }

    fn at(t: f64, ax: f64, ay: f64) -> Frame {
        Frame::new(t, vec![ObjectPose::new("a", ax, ay), ObjectPose::new("b", 0.0, 0.0)])
    }

    fn polar(t: f64, deg: f64) -> Frame {
        let r = deg.to_radians();
        at(t, 2.0 * r.cos(), 2.0 * r.sin())
    }

    #[test]
    fn split_partitions_by_template() {
        let cs = split_constraints(&around());
        assert_eq!(cs.during.len(), 3);
        assert_eq!(cs.terminal.len(), 1);
        assert!(cs.initial.is_empty());
        let only_init = split_constraints(&["MV(A)[0] = 1".parse().unwrap()]);
        assert!(only_init.during.is_empty() && only_init.terminal.is_empty());
        assert_eq!(split_constraints(&[]), ConstraintSet::default());
    }

    #[test]
    fn candidates_are_bounded_deterministic_and_skip_pinned() {
        let cs = split_constraints(&around());
        let movable = movable_objects(&cs, &roles()).unwrap();
        assert_eq!(movable, vec![ObjectId::from("a")]);
        let cfg = SearchConfig::default();
        let scene = at(0.0, 2.0, 0.0);
        let gen = || generate_candidate_steps(&scene, &movable, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let steps = gen();
        assert_eq!(steps.len(), 32);
        assert_eq!(steps, gen());
        for s in &steps {
            let StepPrimitive::Move { object, target } = s else { panic!("only moves are sampled") };
            assert_eq!(object.as_str(), "a");
            let d = (target[0] - 2.0).hypot(target[1]);
            assert!(d > 0.0 && d <= cfg.max_step + 1e-12);
        }
        assert!(matches!(
            generate_candidate_steps(&scene, &[], &cfg, &mut ChaCha8Rng::seed_from_u64(7)),
            Err(ReenactError::NoMovableObject)
        ));
    }

    #[test]
    fn qtc_constancy_rejects_radial_step() {
        let p = "forall_t QTC_C3(A,B)[t] = QTC_C3(A,B)[t+1]".parse::<Pattern>().unwrap();
        let cs = split_constraints(std::slice::from_ref(&p));
        let q = QuantizationConfig::default();
        // clockwise so far: bearing 10° then 5°
        let history = [polar(0.0, 10.0), polar(0.05, 5.0)];
        let outward = at(0.1, 2.0 * 5f64.to_radians().cos() * 1.1, 2.0 * 5f64.to_radians().sin() * 1.1);
        assert_eq!(check_transition(&history, &outward, &cs, &roles(), &q).unwrap(), Verdict::Fail(p));
        let onward = polar(0.1, 0.0);
        assert_eq!(check_transition(&history, &onward, &cs, &roles(), &q).unwrap(), Verdict::Pass);
        let empty = ConstraintSet::default();
        assert!(check_transition(&history, &outward, &empty, &roles(), &q).unwrap().passed());
    }

    #[test]
    fn constant_sign_constraint_checks_new_transition() {
        let f = FeatureFunction::pair(FeatureKind::QtcC3, "A", "B");
        let p = Pattern::constant(f, Comparator::Eq, FeatureValue::QtcC3(QtcSign::Minus)).unwrap();
        let cs = split_constraints(&[p]);
        let q = QuantizationConfig::default();
        let history = [polar(0.0, 10.0)];
        assert!(check_transition(&history, &polar(0.05, 5.0), &cs, &roles(), &q).unwrap().passed());
        assert!(!check_transition(&history, &polar(0.05, 15.0), &cs, &roles(), &q).unwrap().passed());
    }

    fn circle_trace(degrees: f64, steps: usize) -> PlanTrace {
        let moves = (1..=steps)
            .map(|i| {
                let r = (-degrees * i as f64 / steps as f64).to_radians();
                StepPrimitive::Move { object: "a".into(), target: [2.0 * r.cos(), 2.0 * r.sin()] }
            })
            .collect();
        PlanTrace::from_steps(at(0.0, 2.0, 0.0), moves)
    }

    #[test]
    fn termination_needs_steps_progress_and_terminal() {
        let cs = split_constraints(&around());
        let cfg = SearchConfig::default();
        let q = QuantizationConfig::default();
        let r = roles();
        let empty = PlanTrace::from_steps(at(0.0, 2.0, 0.0), vec![]);
        assert!(!termination_satisfied(&empty, &cs, &cfg, &r, &q).unwrap());
        let full = circle_trace(360.0, 72);
        assert!((swept_revolutions(&full.frames, &"a".into(), &"b".into()).unwrap() + 1.0).abs() < 1e-9);
        assert!(termination_satisfied(&full, &cs, &cfg, &r, &q).unwrap());
        let half = circle_trace(180.0, 36);
        assert!(!termination_satisfied(&half, &cs, &cfg, &r, &q).unwrap());
    }

    #[test]
    fn scene_checks() {
        let cs = split_constraints(&around());
        let q = QuantizationConfig::default();
        let coincident = at(0.0, 0.0, 0.0);
        assert!(matches!(
            check_scene(&coincident, &cs, &roles(), &q),
            Err(ReenactError::Feature(FeatureError::UndefinedReferenceLine(..)))
        ));
        let init = split_constraints(&["CD(A,B)[0] = N".parse().unwrap()]);
        assert!(matches!(
            check_scene(&at(0.0, 2.0, 0.0), &init, &roles(), &q),
            Err(ReenactError::SceneViolatesInitial(_))
        ));
        assert!(check_scene(&at(0.0, 0.0, 2.0), &init, &roles(), &q).is_ok());
    }

    #[test]
    fn trace_document_loads_back() {
        let cs = split_constraints(&around());
        let mut trace = circle_trace(360.0, 72);
        trace.fill_audit(&cs, &roles(), &QuantizationConfig::default()).unwrap();
        assert_eq!(trace.audit.len(), 72 * 3);
        assert!(trace.audit.iter().all(|a| a.passed));
        assert!(trace.terminal.iter().all(|t| t.passed));
        let sig = ActionSignature::new("move", &["A", "B"], &["around"]);
        let doc = trace.to_document(&sig, &roles()).unwrap();
        assert!(doc.get("steps").is_some() && doc.get("audit").is_some());
        let opts = crate::scene::LoadOptions { strict: true, ..Default::default() };
        let back = crate::scene::load_demonstration_value(doc, &opts).unwrap();
        assert_eq!(back.frames, trace.frames);
    }
}
