//! Yes/no teaching dialogue over the mined pattern queue.

mod nlg;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureKind;
use crate::miner::MinedPattern;
use crate::pattern::{entails, Comparator, Pattern};
use crate::scene::{ActionSignature, Demonstration, RoleBinding};

pub use nlg::{DynamicDescriptors, NlgCell, NlgTable, Rendered};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DialogueError {
    #[error("duplicate pattern in queue: {0}")]
    DuplicatePattern(String),
    #[error("unknown question id: {0}")]
    UnknownQuestion(String),
    #[error("question {0} is already resolved")]
    AlreadyResolved(String),
    #[error("no sentence frame for {template} {kind} {comparator}")]
    UnknownCell { template: String, kind: FeatureKind, comparator: Comparator },
    #[error("cannot phrase relations between different bindings: {0}")]
    UnsupportedBinding(String),
    #[error("invalid NLG table: {0}")]
    InvalidTable(String),
    #[error("answer must be yes or no, got {0:?}")]
    InvalidAnswer(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionStatus {
    Pending,
    Asked,
    Confirmed,
    Denied,
    ImpliedTrue,
    ImpliedFalse,
}

impl QuestionStatus {
    pub fn is_open(self) -> bool {
        matches!(self, QuestionStatus::Pending | QuestionStatus::Asked)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        })
    }
}

impl FromStr for Answer {
    type Err = DialogueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "y" | "yes" => Ok(Answer::Yes),
            "n" | "no" => Ok(Answer::No),
            _ => Err(DialogueError::InvalidAnswer(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub pattern: MinedPattern,
    pub text: String,
    pub status: QuestionStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Agent,
    Teacher,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub speaker: Speaker,
    pub question_id: String,
    pub utterance: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeachingSession {
    pub signature: ActionSignature,
    pub demos: Vec<Demonstration>,
    pub queue: Vec<Question>,
    /// Patterns the teacher explicitly confirmed, in answer order.
    pub confirmed: Vec<Pattern>,
    pub transcript: Vec<TranscriptEntry>,
    pub warnings: Vec<String>,
}

/// Questions whose status changed as a side effect of an answer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnswerEffect {
    pub implied_true: Vec<String>,
    pub implied_false: Vec<String>,
}

/// One question per mined pattern, in mine order, ids `q1`, `q2`, ...
pub fn build_queue(
    signature: ActionSignature,
    demos: Vec<Demonstration>,
    mined: Vec<MinedPattern>,
    roles: &RoleBinding,
    nlg: &NlgTable,
) -> Result<TeachingSession, DialogueError> {
    let mut seen = BTreeSet::new();
    let mut queue = Vec::with_capacity(mined.len());
    let mut warnings = Vec::new();
    for (i, m) in mined.into_iter().enumerate() {
        if !seen.insert(m.pattern.clone()) {
            return Err(DialogueError::DuplicatePattern(m.pattern.to_string()));
        }
        let rendered = nlg.render(&m.pattern, roles)?;
        for w in rendered.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        queue.push(Question {
            id: format!("q{}", i + 1),
            pattern: m,
            text: rendered.text,
            status: QuestionStatus::Pending,
        });
    }
    Ok(TeachingSession { signature, demos, queue, confirmed: Vec::new(), transcript: Vec::new(), warnings })
}

impl TeachingSession {
    pub fn question(&self, id: &str) -> Option<&Question> {
        self.queue.iter().find(|q| q.id == id)
    }

    fn index(&self, id: &str) -> Result<usize, DialogueError> {
        self.queue.iter().position(|q| q.id == id).ok_or_else(|| DialogueError::UnknownQuestion(id.to_string()))
    }

    fn ask(&mut self, i: usize) {
        let q = &mut self.queue[i];
        q.status = QuestionStatus::Asked;
        self.transcript.push(TranscriptEntry {
            speaker: Speaker::Agent,
            question_id: q.id.clone(),
            utterance: q.text.clone(),
        });
    }

    /// The question awaiting an answer, asking the first pending one if none
    /// is outstanding. `None` once every question is resolved.
    pub fn next_question(&mut self) -> Option<Question> {
        if let Some(q) = self.queue.iter().find(|q| q.status == QuestionStatus::Asked) {
            return Some(q.clone());
        }
        let i = self.queue.iter().position(|q| q.status == QuestionStatus::Pending)?;
        self.ask(i);
        Some(self.queue[i].clone())
    }

    /// Records the answer and prunes what it settles: a yes resolves every
    /// pending pattern it entails as implied true; a no resolves every
    /// pending pattern that entails it as implied false.
    pub fn apply_answer(&mut self, id: &str, answer: Answer) -> Result<AnswerEffect, DialogueError> {
        let i = self.index(id)?;
        match self.queue[i].status {
            QuestionStatus::Pending => self.ask(i),
            QuestionStatus::Asked => {}
            _ => return Err(DialogueError::AlreadyResolved(id.to_string())),
        }
        self.transcript.push(TranscriptEntry {
            speaker: Speaker::Teacher,
            question_id: id.to_string(),
            utterance: answer.to_string(),
        });
        let p = self.queue[i].pattern.pattern.clone();
        let mut effect = AnswerEffect::default();
        match answer {
            Answer::Yes => {
                self.queue[i].status = QuestionStatus::Confirmed;
                self.confirmed.push(p.clone());
            }
            Answer::No => self.queue[i].status = QuestionStatus::Denied,
        }
        for q in self.queue.iter_mut().filter(|q| q.status == QuestionStatus::Pending) {
            let other = &q.pattern.pattern;
            match answer {
                Answer::Yes if entails(&p, other) => {
                    q.status = QuestionStatus::ImpliedTrue;
                    effect.implied_true.push(q.id.clone());
                }
                Answer::No if entails(other, &p) => {
                    q.status = QuestionStatus::ImpliedFalse;
                    effect.implied_false.push(q.id.clone());
                }
                _ => {}
            }
        }
        Ok(effect)
    }

    pub fn pending_count(&self) -> usize {
        self.queue.iter().filter(|q| q.status.is_open()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.pending_count() == 0
    }

    /// Confirmed patterns plus those implied true.
    pub fn accepted(&self) -> Vec<Pattern> {
        self.queue
            .iter()
            .filter(|q| matches!(q.status, QuestionStatus::Confirmed | QuestionStatus::ImpliedTrue))
            .map(|q| q.pattern.pattern.clone())
            .collect()
    }
}
