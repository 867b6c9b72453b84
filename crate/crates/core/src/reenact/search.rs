use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::BinaryHeap;
use std::hash::{Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::concept::ConceptRecord;
use crate::features::QuantizationConfig;
use crate::scene::{Frame, ObjectId, RoleBinding};

use super::{
    check_scene, check_transition, generate_candidate_steps, movable_objects, progress_objects, split_constraints,
    terminal_count, termination_satisfied, wrap_angle, ConstraintSet, PlanTrace, ReenactError, SearchConfig,
    SearchStrategy, StepPrimitive, PLAN_FRAME_DT,
};

#[derive(Clone, Copy, Debug)]
struct Score {
    terminal: usize,
    progress: f64,
    len: usize,
}

impl Score {
    /// Higher is better: more terminal patterns, more progress, fewer steps.
    fn cmp(&self, other: &Score) -> Ordering {
        self.terminal.cmp(&other.terminal).then(self.progress.total_cmp(&other.progress)).then(other.len.cmp(&self.len))
    }
}

struct Node {
    parent: Option<usize>,
    step: Option<StepPrimitive>,
    frame: Frame,
    depth: usize,
    /// Arena index of the depth-1 ancestor (the node itself at depth <= 1).
    first: usize,
    swept: f64,
}

struct Child {
    parent: usize,
    step: StepPrimitive,
    frame: Frame,
    swept: f64,
    score: Score,
    terminates: bool,
}

struct Ctx<'a> {
    cs: ConstraintSet,
    roles: &'a RoleBinding,
    qcfg: &'a QuantizationConfig,
    cfg: &'a SearchConfig,
    movable: Vec<ObjectId>,
    progress: Option<(ObjectId, ObjectId)>,
    dynamic_during: bool,
    dynamic_terminal: bool,
}

fn prefix(arena: &[Node], mut idx: usize) -> Vec<Frame> {
    let mut out = vec![arena[idx].frame.clone()];
    while let Some(p) = arena[idx].parent {
        out.push(arena[p].frame.clone());
        idx = p;
    }
    out.reverse();
    out
}

fn steps_of(arena: &[Node], mut idx: usize) -> Vec<StepPrimitive> {
    let mut out = Vec::new();
    while let Some(p) = arena[idx].parent {
        out.push(arena[idx].step.clone().expect("non-root nodes carry a step"));
        idx = p;
    }
    out.reverse();
    out
}

impl Ctx<'_> {
    fn history(&self, arena: &[Node], idx: usize) -> Vec<Frame> {
        if self.dynamic_during {
            return prefix(arena, idx);
        }
        let node = &arena[idx];
        match node.parent {
            Some(p) => vec![arena[p].frame.clone(), node.frame.clone()],
            None => vec![node.frame.clone()],
        }
    }

    /// Frames that determine the terminal patterns of the trace ending in
    /// `next`: its first two and last two frames, unless a dynamic binding
    /// needs the whole trace.
    fn endpoints(&self, arena: &[Node], parent: usize, next: &Frame) -> Vec<Frame> {
        let mut frames = if self.dynamic_terminal {
            prefix(arena, parent)
        } else {
            let p = &arena[parent];
            let mut v = vec![arena[0].frame.clone()];
            if p.depth >= 1 {
                v.push(arena[p.first].frame.clone());
            }
            if p.depth >= 2 {
                v.push(p.frame.clone());
            }
            v
        };
        frames.push(next.clone());
        frames
    }

    fn guard_met(&self, swept: f64) -> bool {
        self.progress.is_none() || swept.abs() >= self.cfg.min_progress
    }

    /// Bearing and distance of the mover from the reference object.
    fn polar(&self, f: &Frame) -> Option<(f64, f64)> {
        let (k, l) = self.progress.as_ref()?;
        let (pk, pl) = (f.pose(k)?, f.pose(l)?);
        let (dx, dy) = (pk.pos[0] - pl.pos[0], pk.pos[1] - pl.pos[1]);
        Some((dy.atan2(dx), dx.hypot(dy)))
    }

    fn expand(&self, arena: &[Node], idx: usize, stream: u64) -> Result<Vec<Child>, ReenactError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.rng_seed);
        rng.set_stream(stream);
        let node = &arena[idx];
        let steps = generate_candidate_steps(&node.frame, &self.movable, self.cfg, &mut rng)?;
        let history = self.history(arena, idx);
        let mut out = Vec::new();
        for step in steps {
            let next = step.apply(&node.frame, PLAN_FRAME_DT);
            if !check_transition(&history, &next, &self.cs, self.roles, self.qcfg)?.passed() {
                continue;
            }
            // Swept angle alone rewards spiralling in towards the reference
            // object, so the score subtracts the log drift from the start radius.
            let (swept, orbit) = match (self.polar(&arena[0].frame), self.polar(&node.frame), self.polar(&next)) {
                (Some((_, r0)), Some((a, _)), Some((b, rb))) => {
                    let d = wrap_angle(b - a) / std::f64::consts::TAU;
                    (node.swept + d, (node.swept + d).abs() - (rb / r0).ln().abs())
                }
                _ => (0.0, 0.0),
            };
            let depth = node.depth + 1;
            let guard = self.guard_met(swept);
            let terminal = if guard {
                terminal_count(&self.endpoints(arena, idx, &next), &self.cs, self.roles, self.qcfg)?
            } else {
                0
            };
            let terminates = guard && depth >= self.cfg.min_steps.max(1) && terminal == self.cs.terminal.len();
            out.push(Child {
                parent: idx,
                step,
                frame: next,
                swept,
                score: Score { terminal, progress: orbit, len: depth },
                terminates,
            });
        }
        Ok(out)
    }

    fn push(&self, arena: &mut Vec<Node>, c: Child) -> usize {
        let parent = &arena[c.parent];
        let depth = parent.depth + 1;
        let idx = arena.len();
        let first = if depth == 1 { idx } else { parent.first };
        arena.push(Node { parent: Some(c.parent), step: Some(c.step), frame: c.frame, depth, first, swept: c.swept });
        idx
    }

    fn finish(&self, arena: &[Node], idx: usize, expansions: usize) -> Result<PlanTrace, ReenactError> {
        let mut trace = PlanTrace::from_steps(arena[0].frame.clone(), steps_of(arena, idx));
        trace.expansions = expansions;
        trace.fill_audit(&self.cs, self.roles, self.qcfg)?;
        debug_assert!(termination_satisfied(&trace, &self.cs, self.cfg, self.roles, self.qcfg)?);
        Ok(trace)
    }
}

fn child_key(parent_key: &str, step: &StepPrimitive) -> String {
    format!("{parent_key}{};", step.canonical())
}

/// Searches for a step sequence reproducing `concept` from `scene`.
pub fn plan(
    scene: &Frame,
    concept: &ConceptRecord,
    roles: &RoleBinding,
    cfg: &SearchConfig,
) -> Result<PlanTrace, ReenactError> {
    cfg.validate()?;
    let qcfg = &concept.quantization;
    let cs = split_constraints(&concept.confirmed);
    check_scene(scene, &cs, roles, qcfg)?;
    let ctx = Ctx {
        movable: movable_objects(&cs, roles)?,
        progress: progress_objects(&cs, roles)?,
        dynamic_during: ConstraintSet::has_dynamic(&cs.during) || ConstraintSet::has_dynamic(&cs.initial),
        dynamic_terminal: ConstraintSet::has_dynamic(&cs.terminal),
        cs,
        roles,
        qcfg,
        cfg,
    };
    if ctx.movable.is_empty() {
        return Err(ReenactError::NoMovableObject);
    }
    let root = Node { parent: None, step: None, frame: scene.clone(), depth: 0, first: 0, swept: 0.0 };
    let mut arena = vec![root];
    match cfg.strategy {
        SearchStrategy::Beam => beam(&ctx, &mut arena),
        SearchStrategy::BestFirst => best_first(&ctx, &mut arena),
    }
}

fn beam(ctx: &Ctx, arena: &mut Vec<Node>) -> Result<PlanTrace, ReenactError> {
    let cfg = ctx.cfg;
    let mut members: Vec<(usize, String)> = vec![(0, String::new())];
    let mut expansions = 0;
    loop {
        let budget = cfg.max_expansions - expansions;
        if budget == 0 || members.is_empty() {
            return Err(ReenactError::PlanNotFound { expansions });
        }
        let batch = &members[..members.len().min(budget)];
        let expanded = batch
            .par_iter()
            .enumerate()
            .map(|(i, (idx, _))| ctx.expand(arena, *idx, (expansions + i) as u64))
            .collect::<Result<Vec<_>, _>>()?;
        expansions += batch.len();
        let mut children: Vec<(Child, String)> = expanded
            .into_iter()
            .zip(batch)
            .flat_map(|(cs, (_, key))| {
                cs.into_iter().map(move |c| {
                    let k = child_key(key, &c.step);
                    (c, k)
                })
            })
            .collect();
        children.sort_by(|(a, ka), (b, kb)| b.score.cmp(&a.score).then_with(|| ka.cmp(kb)));
        if let Some(pos) = children.iter().position(|(c, _)| c.terminates) {
            let (c, _) = children.swap_remove(pos);
            let idx = ctx.push(arena, c);
            return ctx.finish(arena, idx, expansions);
        }
        children.truncate(cfg.beam_width);
        members = children.into_iter().map(|(c, k)| (ctx.push(arena, c), k)).collect();
    }
}

struct Entry {
    score: Score,
    key: u64,
    idx: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.cmp(&other.score).then(other.key.cmp(&self.key)).then(other.idx.cmp(&self.idx))
    }
}

fn hash_key(parent: u64, step: &StepPrimitive) -> u64 {
    let mut h = DefaultHasher::new();
    parent.hash(&mut h);
    step.canonical().hash(&mut h);
    h.finish()
}

fn best_first(ctx: &Ctx, arena: &mut Vec<Node>) -> Result<PlanTrace, ReenactError> {
    let mut heap = BinaryHeap::new();
    let mut keys = vec![0u64];
    heap.push(Entry { score: Score { terminal: 0, progress: 0.0, len: 0 }, key: 0, idx: 0 });
    let mut expansions = 0;
    while let Some(entry) = heap.pop() {
        if expansions == ctx.cfg.max_expansions {
            break;
        }
        let mut children = ctx.expand(arena, entry.idx, expansions as u64)?;
        expansions += 1;
        let parent_key = keys[entry.idx];
        let mut keyed: Vec<(Child, u64)> = children
            .drain(..)
            .map(|c| {
                let k = hash_key(parent_key, &c.step);
                (c, k)
            })
            .collect();
        keyed.sort_by(|(a, ka), (b, kb)| b.score.cmp(&a.score).then(ka.cmp(kb)));
        if let Some(pos) = keyed.iter().position(|(c, _)| c.terminates) {
            let (c, _) = keyed.swap_remove(pos);
            let idx = ctx.push(arena, c);
            return ctx.finish(arena, idx, expansions);
        }
        for (c, key) in keyed {
            let score = c.score;
            let idx = ctx.push(arena, c);
            keys.push(key);
            heap.push(Entry { score, key, idx });
        }
    }
    Err(ReenactError::PlanNotFound { expansions })
}
