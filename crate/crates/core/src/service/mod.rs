//! Session protocol: newline-delimited JSON messages driving the
//! record → mine → teach → reenact loop.
//!
//! Every message is one JSON object carrying `proto`, `type`, `session`
//! (absent on `create_session`) and a per-direction `seq` that starts at 1
//! and has no gaps. [`handle_message`] is a pure function of the session
//! state and one client message; the transports in [`transport`] own the
//! sockets and the concept store.

pub mod transport;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::concept::ConceptRecord;
use crate::dialogue::{build_queue, Answer, NlgTable, QuestionStatus, TeachingSession};
use crate::features::QuantizationConfig;
use crate::miner::{mine, MinerConfig};
use crate::pattern::Pattern;
use crate::reenact::{plan, AuditEntry, PlanTrace, ReenactError, SearchConfig, StepPrimitive, TerminalEntry};
use crate::scene::{
    load_demonstration_value, ActionSignature, DemoDocument, Demonstration, Frame, LoadOptions, ObjectId, RoleBinding,
    SourceKind,
};

pub const PROTO_VERSION: u32 = 1;

/// Timestamp used for concepts when the triggering message has no `time`.
pub const EPOCH: &str = "1970-01-01T00:00:00Z";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientBody {
    CreateSession {
        #[serde(default)]
        quantization: Option<QuantizationConfig>,
        #[serde(default)]
        miner: Option<MinerConfig>,
        #[serde(default)]
        search: Option<SearchConfig>,
    },
    /// Opens a demonstration; the fields are the header of a demonstration
    /// document.
    BeginDemo {
        name: String,
        signature: ActionSignature,
        roles: BTreeMap<String, ObjectId>,
        #[serde(default)]
        descriptors: BTreeMap<ObjectId, String>,
        #[serde(default)]
        source: Option<SourceKind>,
    },
    DemoFrame {
        frame: Frame,
    },
    EndDemo {},
    StartMining {
        #[serde(default)]
        miner: Option<MinerConfig>,
    },
    Answer {
        question_id: String,
        answer: Answer,
    },
    ReenactRequest {
        scene: Frame,
        #[serde(default)]
        roles: Option<BTreeMap<String, ObjectId>>,
        #[serde(default)]
        search: Option<SearchConfig>,
        /// Delay the transport inserts between streamed frames.
        #[serde(default)]
        throttle_ms: Option<u64>,
    },
    SaveConcept {
        #[serde(default)]
        overwrite: bool,
    },
    LoadConcept {
        id: String,
    },
}

impl ClientBody {
    pub fn type_name(&self) -> &'static str {
        match self {
            ClientBody::CreateSession { .. } => "create_session",
            ClientBody::BeginDemo { .. } => "begin_demo",
            ClientBody::DemoFrame { .. } => "demo_frame",
            ClientBody::EndDemo {} => "end_demo",
            ClientBody::StartMining { .. } => "start_mining",
            ClientBody::Answer { .. } => "answer",
            ClientBody::ReenactRequest { .. } => "reenact_request",
            ClientBody::SaveConcept { .. } => "save_concept",
            ClientBody::LoadConcept { .. } => "load_concept",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    pub proto: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    pub seq: u64,
    /// RFC 3339 timestamp; stamps concepts learned in reply to this message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<String>,
    #[serde(flatten)]
    pub body: ClientBody,
}

impl ClientMessage {
    pub fn new(session: Option<&str>, seq: u64, body: ClientBody) -> Self {
        ClientMessage { proto: PROTO_VERSION, session: session.map(str::to_string), seq, time: None, body }
    }

    pub fn parse(line: &str) -> Result<Self, String> {
        let value: Value = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
        if value.get("type").and_then(Value::as_str).is_none() {
            return Err("message has no type".into());
        }
        serde_json::from_value(value).map_err(|e| format!("malformed payload: {e}"))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("message serializes")
    }
}

/// A question's state as reported to the client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionInfo {
    pub id: String,
    pub pattern: Pattern,
    pub text: String,
    pub status: QuestionStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerBody {
    SessionCreated {},
    Question {
        id: String,
        text: String,
        pattern: Pattern,
        q: f64,
        /// Open questions, including this one.
        remaining: usize,
        /// Questions settled by the previous answer.
        resolved: Vec<QuestionInfo>,
    },
    ConceptLearned {
        concept: ConceptRecord,
        /// Every question with its final status.
        questions: Vec<QuestionInfo>,
    },
    PlanFrame {
        index: usize,
        frame: Frame,
        /// Audit of the transition into this frame; empty for frame 0.
        audit: Vec<AuditEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        throttle_ms: Option<u64>,
    },
    PlanDone {
        ok: bool,
        steps: Vec<StepPrimitive>,
        expansions: usize,
        swept_revolutions: f64,
        terminal: Vec<TerminalEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    ConceptSaved {
        id: String,
    },
    Error {
        /// Short name of the violated rule: `sequence`, `session`, `phase`,
        /// `payload`, `dialogue`, `miner`, `planner` or `store`.
        rule: String,
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        in_reply_to: Option<u64>,
    },
    Warning {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    pub proto: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    pub seq: u64,
    #[serde(flatten)]
    pub body: ServerBody,
}

impl ServerMessage {
    pub fn is_error(&self) -> bool {
        matches!(self.body, ServerBody::Error { .. })
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("message serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Recording,
    Mining,
    Teaching,
    Learned,
    Reenacting,
}

/// Side effects on the concept store, performed by the transport.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Effect {
    SaveConcept { record: ConceptRecord, overwrite: bool, reply_to: u64 },
    LoadConcept { id: String, reply_to: u64 },
}

#[derive(Clone, Debug, PartialEq)]
struct DemoBuffer {
    name: String,
    signature: ActionSignature,
    roles: BTreeMap<String, ObjectId>,
    descriptors: BTreeMap<ObjectId, String>,
    source: SourceKind,
    frames: Vec<Frame>,
}

#[derive(Clone, Debug)]
pub struct SessionState {
    pub id: String,
    pub phase: Phase,
    /// Last client sequence number accepted.
    pub in_seq: u64,
    /// Last server sequence number emitted.
    pub out_seq: u64,
    pub quantization: QuantizationConfig,
    pub miner: MinerConfig,
    pub search: SearchConfig,
    buffer: Option<DemoBuffer>,
    pub demos: Vec<Demonstration>,
    pub teaching: Option<TeachingSession>,
    pub concept: Option<ConceptRecord>,
    /// Role binding of the first demonstration; the default for reenactment.
    pub roles: Option<RoleBinding>,
    pub last_plan: Option<PlanTrace>,
    nlg: NlgTable,
}

/// Result of one [`handle_message`] call.
#[derive(Debug)]
pub struct Transition {
    pub state: Option<SessionState>,
    pub messages: Vec<ServerMessage>,
    pub effects: Vec<Effect>,
}

/// A rule violation: error rule name and message.
type Reject = (&'static str, String);

fn reject<T>(rule: &'static str, message: impl Into<String>) -> Result<T, Reject> {
    Err((rule, message.into()))
}

impl SessionState {
    pub fn new(id: impl Into<String>) -> Self {
        SessionState {
            id: id.into(),
            phase: Phase::Recording,
            in_seq: 0,
            out_seq: 0,
            quantization: QuantizationConfig::default(),
            miner: MinerConfig::default(),
            search: SearchConfig::default(),
            buffer: None,
            demos: Vec::new(),
            teaching: None,
            concept: None,
            roles: None,
            last_plan: None,
            nlg: NlgTable::builtin(),
        }
    }

    pub fn recording_open(&self) -> bool {
        self.buffer.is_some()
    }

    fn emit(&mut self, body: ServerBody) -> ServerMessage {
        self.out_seq += 1;
        ServerMessage { proto: PROTO_VERSION, session: Some(self.id.clone()), seq: self.out_seq, body }
    }

    fn error(&mut self, rule: &str, message: String, in_reply_to: u64) -> ServerMessage {
        self.emit(ServerBody::Error { rule: rule.to_string(), message, in_reply_to: Some(in_reply_to) })
    }

    fn question_infos(&self, ids: &[String]) -> Vec<QuestionInfo> {
        let Some(t) = &self.teaching else { return Vec::new() };
        ids.iter()
            .filter_map(|id| t.question(id))
            .map(|q| QuestionInfo {
                id: q.id.clone(),
                pattern: q.pattern.pattern.clone(),
                text: q.text.clone(),
                status: q.status,
            })
            .collect()
    }

    /// Installs a concept read from the store and reports it as learned.
    pub fn install_concept(&mut self, record: ConceptRecord) -> Vec<ServerMessage> {
        self.concept = Some(record.clone());
        self.phase = Phase::Learned;
        vec![self.emit(ServerBody::ConceptLearned { concept: record, questions: Vec::new() })]
    }

    pub fn concept_saved(&mut self, id: String) -> Vec<ServerMessage> {
        vec![self.emit(ServerBody::ConceptSaved { id })]
    }

    /// Reply to a line that did not parse as a client message.
    pub fn payload_error(&mut self, message: String) -> ServerMessage {
        self.emit(ServerBody::Error { rule: "payload".into(), message, in_reply_to: None })
    }

    pub fn store_error(&mut self, message: String, reply_to: u64) -> Vec<ServerMessage> {
        vec![self.error("store", message, reply_to)]
    }

    fn require_phase(&self, allowed: &[Phase], rule_msg: &str) -> Result<(), Reject> {
        if allowed.contains(&self.phase) {
            Ok(())
        } else {
            reject("phase", rule_msg)
        }
    }

    /// Applies one message. Rejected messages leave everything but the
    /// outgoing sequence counter untouched.
    fn apply(
        &mut self,
        msg: &ClientMessage,
        out: &mut Vec<ServerMessage>,
        effects: &mut Vec<Effect>,
    ) -> Result<(), Reject> {
        let reply_to = msg.seq;
        match &msg.body {
            ClientBody::CreateSession { .. } => reject("session", "session already created"),
            ClientBody::BeginDemo { name, signature, roles, descriptors, source } => {
                self.require_phase(
                    &[Phase::Recording, Phase::Learned, Phase::Reenacting],
                    "not accepting demonstrations",
                )?;
                if self.buffer.is_some() {
                    return reject("phase", "a demonstration is already open");
                }
                if let Some(first) = self.demos.first() {
                    if &first.signature != signature {
                        return reject("payload", "demonstrations in one session must share a signature");
                    }
                }
                signature.validate().map_err(|e| ("payload", e.to_string()))?;
                self.buffer = Some(DemoBuffer {
                    name: name.clone(),
                    signature: signature.clone(),
                    roles: roles.clone(),
                    descriptors: descriptors.clone(),
                    source: source.unwrap_or(SourceKind::DenseStream),
                    frames: Vec::new(),
                });
                self.phase = Phase::Recording;
                Ok(())
            }
            ClientBody::DemoFrame { frame } => {
                let Some(buf) = self.buffer.as_mut() else {
                    return reject("phase", "not recording");
                };
                buf.frames.push(frame.clone());
                Ok(())
            }
            ClientBody::EndDemo {} => {
                let Some(buf) = self.buffer.as_ref() else {
                    return reject("phase", "not recording");
                };
                let doc = DemoDocument {
                    name: buf.name.clone(),
                    signature: buf.signature.clone(),
                    roles: buf.roles.clone(),
                    descriptors: buf.descriptors.clone(),
                    source: buf.source,
                    frames: buf.frames.clone(),
                };
                let value = serde_json::to_value(doc).expect("document serializes");
                let demo = load_demonstration_value(value, &LoadOptions::default())
                    .map_err(|e| ("payload", format!("invalid demonstration: {e}")))?;
                if self.roles.is_none() {
                    self.roles = Some(demo.roles.clone());
                }
                self.demos.push(demo);
                self.buffer = None;
                Ok(())
            }
            ClientBody::StartMining { miner } => {
                if self.phase != Phase::Recording || self.buffer.is_some() {
                    return reject("phase", "not ready to mine");
                }
                if self.demos.is_empty() {
                    return reject("phase", "no demonstrations recorded");
                }
                let cfg = miner.clone().unwrap_or_else(|| self.miner.clone());
                let mined = mine(&self.demos, &cfg, &self.quantization).map_err(|e| ("miner", e.to_string()))?;
                let roles = self.roles.clone().expect("set with the first demonstration");
                let sig = self.demos[0].signature.clone();
                let mut teaching = build_queue(sig, self.demos.clone(), mined, &roles, &self.nlg)
                    .map_err(|e| ("dialogue", e.to_string()))?;
                let warnings = teaching.warnings.clone();
                let first = teaching.next_question();
                self.miner = cfg;
                self.phase = Phase::Teaching;
                self.teaching = Some(teaching);
                for w in warnings {
                    out.push(self.emit(ServerBody::Warning { message: w }));
                }
                match first {
                    Some(q) => {
                        let remaining = self.teaching.as_ref().map_or(0, |t| t.pending_count());
                        out.push(self.emit(ServerBody::Question {
                            id: q.id,
                            text: q.text,
                            pattern: q.pattern.pattern,
                            q: q.pattern.q,
                            remaining,
                            resolved: Vec::new(),
                        }));
                    }
                    None => out.push(self.learn(msg)?),
                }
                Ok(())
            }
            ClientBody::Answer { question_id, answer } => {
                self.require_phase(&[Phase::Teaching], "not teaching")?;
                let teaching = self.teaching.as_mut().expect("teaching phase has a session");
                let mut next = teaching.clone();
                let effect = next.apply_answer(question_id, *answer).map_err(|e| ("dialogue", e.to_string()))?;
                let following = next.next_question();
                let remaining = next.pending_count();
                *teaching = next;
                let mut ids = vec![question_id.clone()];
                ids.extend(effect.implied_true);
                ids.extend(effect.implied_false);
                let resolved = self.question_infos(&ids);
                match following {
                    Some(q) => out.push(self.emit(ServerBody::Question {
                        id: q.id,
                        text: q.text,
                        pattern: q.pattern.pattern,
                        q: q.pattern.q,
                        remaining,
                        resolved,
                    })),
                    None => out.push(self.learn(msg)?),
                }
                Ok(())
            }
            ClientBody::ReenactRequest { scene, roles, search, throttle_ms } => {
                if !matches!(self.phase, Phase::Learned | Phase::Reenacting) || self.concept.is_none() {
                    return reject("phase", "no concept");
                }
                let concept = self.concept.as_ref().expect("checked above");
                let roles = match roles {
                    Some(map) => RoleBinding { roles: map.clone(), descriptors: BTreeMap::new() },
                    None => match &self.roles {
                        Some(r) => r.clone(),
                        None => return reject("payload", "reenact_request needs roles for a loaded concept"),
                    },
                };
                let cfg = search.clone().unwrap_or_else(|| self.search.clone());
                match plan(scene, concept, &roles, &cfg) {
                    Ok(trace) => {
                        for (i, frame) in trace.frames.iter().enumerate() {
                            let audit = if i == 0 {
                                Vec::new()
                            } else {
                                trace.audit.iter().filter(|a| a.transition == i - 1).cloned().collect()
                            };
                            out.push(self.emit(ServerBody::PlanFrame {
                                index: i,
                                frame: frame.clone(),
                                audit,
                                throttle_ms: *throttle_ms,
                            }));
                        }
                        out.push(self.emit(ServerBody::PlanDone {
                            ok: true,
                            steps: trace.steps.clone(),
                            expansions: trace.expansions,
                            swept_revolutions: trace.swept_revolutions,
                            terminal: trace.terminal.clone(),
                            error: None,
                        }));
                        self.last_plan = Some(trace);
                        self.phase = Phase::Reenacting;
                        Ok(())
                    }
                    Err(e) => {
                        let expansions = match e {
                            ReenactError::PlanNotFound { expansions } => expansions,
                            _ => 0,
                        };
                        let message = format!("plan not found: {e}");
                        out.push(self.error("planner", message.clone(), reply_to));
                        out.push(self.emit(ServerBody::PlanDone {
                            ok: false,
                            steps: Vec::new(),
                            expansions,
                            swept_revolutions: 0.0,
                            terminal: Vec::new(),
                            error: Some(message),
                        }));
                        Ok(())
                    }
                }
            }
            ClientBody::SaveConcept { overwrite } => {
                let Some(record) = &self.concept else {
                    return reject("phase", "no concept");
                };
                effects.push(Effect::SaveConcept { record: record.clone(), overwrite: *overwrite, reply_to });
                Ok(())
            }
            ClientBody::LoadConcept { id } => {
                if self.phase == Phase::Teaching || self.buffer.is_some() {
                    return reject("phase", "cannot load a concept while teaching or recording");
                }
                effects.push(Effect::LoadConcept { id: id.clone(), reply_to });
                Ok(())
            }
        }
    }

    fn learn(&mut self, msg: &ClientMessage) -> Result<ServerMessage, Reject> {
        let teaching = self.teaching.as_ref().expect("learning follows teaching");
        let record = ConceptRecord::new(
            teaching.signature.clone(),
            teaching.confirmed.clone(),
            self.quantization.clone(),
            self.demos.iter().map(|d| d.name.clone()).collect(),
            &teaching.transcript,
            msg.time.clone().unwrap_or_else(|| EPOCH.to_string()),
        )
        .map_err(|e| ("store", e.to_string()))?;
        let ids: Vec<String> = teaching.queue.iter().map(|q| q.id.clone()).collect();
        let questions = self.question_infos(&ids);
        self.concept = Some(record.clone());
        self.phase = Phase::Learned;
        Ok(self.emit(ServerBody::ConceptLearned { concept: record, questions }))
    }
}

fn sessionless_error(message: String, in_reply_to: u64) -> ServerMessage {
    ServerMessage {
        proto: PROTO_VERSION,
        session: None,
        seq: 0,
        body: ServerBody::Error { rule: "session".into(), message, in_reply_to: Some(in_reply_to) },
    }
}

/// Applies one client message.
///
/// `new_id` names the session a `create_session` opens. A rejected message
/// yields one error reply and leaves the state as it was, apart from the
/// outgoing sequence counter.
pub fn handle_message(state: Option<SessionState>, msg: &ClientMessage, new_id: &str) -> Transition {
    let Some(mut state) = state else {
        let messages = match &msg.body {
            _ if msg.proto != PROTO_VERSION => {
                vec![sessionless_error(format!("unsupported proto {}", msg.proto), msg.seq)]
            }
            ClientBody::CreateSession { .. } if msg.seq != 1 => {
                vec![sessionless_error(format!("expected seq 1, got {}", msg.seq), msg.seq)]
            }
            ClientBody::CreateSession { quantization, miner, search } => {
                let mut s = SessionState::new(new_id);
                let configured = (|| -> Result<(), String> {
                    if let Some(q) = quantization {
                        q.validate().map_err(|e| e.to_string())?;
                        s.quantization = q.clone();
                    }
                    if let Some(m) = miner {
                        m.validate().map_err(|e| e.to_string())?;
                        s.miner = m.clone();
                    }
                    if let Some(c) = search {
                        c.validate().map_err(|e| e.to_string())?;
                        s.search = c.clone();
                    }
                    Ok(())
                })();
                if let Err(e) = configured {
                    return Transition {
                        state: None,
                        messages: vec![sessionless_error(format!("invalid configuration: {e}"), msg.seq)],
                        effects: Vec::new(),
                    };
                }
                s.in_seq = 1;
                let created = s.emit(ServerBody::SessionCreated {});
                return Transition { state: Some(s), messages: vec![created], effects: Vec::new() };
            }
            // sessions live only as long as their connection
            _ if msg.session.is_some() => vec![sessionless_error(
                format!("session not resumable: {}", msg.session.as_deref().unwrap_or_default()),
                msg.seq,
            )],
            other => {
                vec![sessionless_error(format!("no session: {} before create_session", other.type_name()), msg.seq)]
            }
        };
        return Transition { state: None, messages, effects: Vec::new() };
    };

    let precheck = if msg.proto != PROTO_VERSION {
        Err(("payload", format!("unsupported proto {}", msg.proto)))
    } else if msg.session.as_deref() != Some(state.id.as_str()) {
        Err(("session", format!("unknown session {:?}", msg.session.as_deref().unwrap_or(""))))
    } else if msg.seq != state.in_seq + 1 {
        Err(("sequence", format!("expected seq {}, got {}", state.in_seq + 1, msg.seq)))
    } else {
        Ok(())
    };
    if let Err((rule, message)) = precheck {
        let err = state.error(rule, message, msg.seq);
        return Transition { state: Some(state), messages: vec![err], effects: Vec::new() };
    }

    let mut next = state.clone();
    next.in_seq = msg.seq;
    let mut messages = Vec::new();
    let mut effects = Vec::new();
    match next.apply(msg, &mut messages, &mut effects) {
        Ok(()) => Transition { state: Some(next), messages, effects },
        Err((rule, message)) => {
            // The rejected message still consumes its sequence number.
            state.in_seq = msg.seq;
            let err = state.error(rule, message, msg.seq);
            Transition { state: Some(state), messages: vec![err], effects: Vec::new() }
        }
    }
}

/// Where a replayed script failed.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("script message {index}: {message}")]
pub struct ReplayError {
    pub index: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct Replay {
    pub state: SessionState,
    pub messages: Vec<ServerMessage>,
    pub effects: Vec<Effect>,
}

/// Folds [`handle_message`] over a script that starts with
/// `create_session`, stopping at the first error reply. Store effects are
/// collected, not performed.
pub fn replay_transcript(script: &[ClientMessage]) -> Result<Replay, ReplayError> {
    let first_ok = script.first().is_some_and(|m| matches!(m.body, ClientBody::CreateSession { .. }));
    if !first_ok {
        return Err(ReplayError { index: 0, message: "no create_session".into() });
    }
    let mut state = None;
    let mut messages = Vec::new();
    let mut effects = Vec::new();
    for (index, msg) in script.iter().enumerate() {
        let t = handle_message(state, msg, "s1");
        if let Some(ServerBody::Error { message, .. }) =
            t.messages.iter().map(|m| &m.body).find(|b| matches!(b, ServerBody::Error { .. }))
        {
            return Err(ReplayError { index, message: message.clone() });
        }
        state = t.state;
        messages.extend(t.messages);
        effects.extend(t.effects);
    }
    Ok(Replay { state: state.expect("create_session succeeded"), messages, effects })
}

/// Parses a newline-delimited script, skipping blank lines.
pub fn parse_script(text: &str) -> Result<Vec<ClientMessage>, ReplayError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(index, l)| ClientMessage::parse(l).map_err(|message| ReplayError { index, message }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::scene::{generate_synthetic, GeneratorParams, ObjectPose, SyntheticKind};

    struct Client {
        state: Option<SessionState>,
        seq: u64,
    }

    impl Client {
        fn new() -> (Self, Vec<ServerMessage>) {
            let mut c = Client { state: None, seq: 0 };
            let out = c.send(ClientBody::CreateSession { quantization: None, miner: None, search: None });
            (c, out)
        }

        fn send(&mut self, body: ClientBody) -> Vec<ServerMessage> {
            self.seq += 1;
            let session = self.state.as_ref().map(|s| s.id.clone());
            let msg = ClientMessage::new(session.as_deref(), self.seq, body);
            let t = handle_message(self.state.take(), &msg, "s1");
            self.state = t.state;
            t.messages
        }

        fn phase(&self) -> Phase {
            self.state.as_ref().unwrap().phase
        }

        fn record(&mut self, d: &Demonstration) {
            self.send(ClientBody::BeginDemo {
                name: d.name.clone(),
                signature: d.signature.clone(),
                roles: d.roles.roles.clone(),
                descriptors: d.roles.descriptors.clone(),
                source: Some(d.source),
            });
            for f in &d.frames {
                assert!(self.send(ClientBody::DemoFrame { frame: f.clone() }).is_empty());
            }
            assert!(self.send(ClientBody::EndDemo {}).is_empty());
        }
    }

    fn error_text(m: &ServerMessage) -> &str {
        match &m.body {
            ServerBody::Error { message, .. } => message,
            other => panic!("expected error, got {other:?}"),
        }
    }

    #[test]
    fn phase_guards() {
        let (mut c, created) = Client::new();
        assert!(matches!(created[0].body, ServerBody::SessionCreated {}));
        let scene = Frame::new(0.0, vec![ObjectPose::new("a", 1.0, 0.0)]);
        let out = c.send(ClientBody::ReenactRequest { scene, roles: None, search: None, throttle_ms: None });
        assert_eq!(error_text(&out[0]), "no concept");
        let out = c.send(ClientBody::DemoFrame { frame: Frame::new(0.0, vec![]) });
        assert_eq!(error_text(&out[0]), "not recording");
        assert_eq!(c.phase(), Phase::Recording);
    }

    #[test]
    fn frames_rejected_while_teaching() {
        let (mut c, _) = Client::new();
        let d = generate_synthetic(SyntheticKind::CircleAround, &GeneratorParams::default(), 7).unwrap();
        c.record(&d);
        let out =
            c.send(ClientBody::StartMining { miner: Some(MinerConfig::default().with_kinds(&[FeatureKind::Mv])) });
        assert!(matches!(out.last().unwrap().body, ServerBody::Question { .. }));
        assert_eq!(c.phase(), Phase::Teaching);
        let out = c.send(ClientBody::DemoFrame { frame: d.frames[0].clone() });
        assert_eq!(error_text(&out[0]), "not recording");
        assert_eq!(c.phase(), Phase::Teaching);
    }

    #[test]
    fn sequence_numbers_are_gapless() {
        let (mut c, _) = Client::new();
        let mut seen = vec![1];
        c.seq += 1; // skip one
        let out = c.send(ClientBody::EndDemo {});
        assert!(error_text(&out[0]).starts_with("expected seq 2"));
        seen.extend(out.iter().map(|m| m.seq));
        c.seq -= 2;
        let out = c.send(ClientBody::EndDemo {});
        assert_eq!(error_text(&out[0]), "not recording");
        seen.extend(out.iter().map(|m| m.seq));
        assert_eq!(seen, vec![1, 2, 3]);
    }

    #[test]
    fn replay_needs_create_session() {
        assert_eq!(replay_transcript(&[]).unwrap_err().message, "no create_session");
        let m = ClientMessage::new(Some("s1"), 1, ClientBody::EndDemo {});
        assert_eq!(replay_transcript(&[m]).unwrap_err().index, 0);
    }

    #[test]
    fn message_lines_round_trip() {
        let m = ClientMessage::new(Some("s1"), 4, ClientBody::Answer { question_id: "q2".into(), answer: Answer::Yes });
        let line = m.to_line();
        assert_eq!(line, r#"{"proto":1,"session":"s1","seq":4,"type":"answer","question_id":"q2","answer":"yes"}"#);
        assert_eq!(ClientMessage::parse(&line).unwrap(), m);
        assert!(ClientMessage::parse(r#"{"proto":1,"seq":1}"#).is_err());
        assert!(ClientMessage::parse(r#"{"proto":1,"seq":1,"type":"answer"}"#).is_err());
    }
}
