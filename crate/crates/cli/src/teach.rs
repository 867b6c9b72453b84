use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;

use qsrteach::concept::ConceptStore;
use qsrteach::dialogue::Answer;
use qsrteach::scene::SourceKind;
use qsrteach::service::{handle_message, ClientBody, ClientMessage, ServerBody, ServerMessage, SessionState};

use crate::{now, read, usage, write, MinerFlags};

#[derive(Args, Debug)]
pub struct TeachArgs {
    /// Demonstration files.
    #[arg(required = true)]
    demos: Vec<PathBuf>,
    #[command(flatten)]
    miner: MinerFlags,
    /// Where to write the learned concept.
    #[arg(long)]
    out: PathBuf,
    /// Read y/n answers from this file instead of stdin.
    #[arg(long)]
    answers: Option<PathBuf>,
    /// Write the client message log as replayable NDJSON.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Timestamp recorded in the concept (RFC 3339; default now).
    #[arg(long)]
    created_at: Option<String>,
    /// Also save the concept into this store directory.
    #[arg(long)]
    store: Option<PathBuf>,
}

/// Drives one protocol session in-process and keeps the client log.
struct Session {
    state: Option<SessionState>,
    log: Vec<ClientMessage>,
    time: String,
}

impl Session {
    fn send(&mut self, body: ClientBody) -> anyhow::Result<Vec<ServerMessage>> {
        let session = self.state.as_ref().map(|s| s.id.clone());
        let mut msg = ClientMessage::new(session.as_deref(), self.log.len() as u64 + 1, body);
        msg.time = Some(self.time.clone());
        let t = handle_message(self.state.take(), &msg, "s1");
        self.state = t.state;
        self.log.push(msg);
        for m in &t.messages {
            match &m.body {
                ServerBody::Error { message, .. } => bail!("{message}"),
                ServerBody::Warning { message } => log::warn!("{message}"),
                _ => {}
            }
        }
        Ok(t.messages)
    }
}

fn read_answer(input: &mut dyn BufRead) -> anyhow::Result<Option<Answer>> {
    loop {
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        match line.parse::<Answer>() {
            Ok(a) => return Ok(Some(a)),
            Err(_) => eprintln!("please answer y or n"),
        }
    }
}

pub fn run(args: &TeachArgs) -> anyhow::Result<()> {
    let cfg = args.miner.miner_config()?;
    let qcfg = args.miner.quantization()?;
    let answers_text = args.answers.as_ref().map(|p| read(p)).transpose()?;
    let demos = args.miner.load_demos(&args.demos)?;
    let store = args.store.as_ref().map(ConceptStore::open).transpose().map_err(|e| usage(e.to_string()))?;

    let mut session = Session { state: None, log: Vec::new(), time: args.created_at.clone().unwrap_or_else(now) };
    session.send(ClientBody::CreateSession { quantization: Some(qcfg), miner: Some(cfg), search: None })?;
    for d in &demos {
        session.send(ClientBody::BeginDemo {
            name: d.name.clone(),
            signature: d.signature.clone(),
            roles: d.roles.roles.clone(),
            descriptors: d.roles.descriptors.clone(),
            source: Some(SourceKind::DenseStream),
        })?;
        for f in &d.frames {
            session.send(ClientBody::DemoFrame { frame: f.clone() })?;
        }
        session.send(ClientBody::EndDemo {})?;
    }
    let mut replies = session.send(ClientBody::StartMining { miner: None })?;

    let stdin = io::stdin();
    let mut input: Box<dyn BufRead> = match &answers_text {
        Some(text) => Box::new(io::Cursor::new(text.clone().into_bytes())),
        None => Box::new(stdin.lock()),
    };
    let concept = loop {
        let last = replies.pop().context("no reply from session")?;
        match last.body {
            ServerBody::Question { id, text, .. } => {
                print!("[{id}] {text} (y/n) ");
                io::stdout().flush()?;
                let Some(answer) = read_answer(input.as_mut())? else {
                    println!();
                    bail!("answers ended before question {id} was settled");
                };
                if answers_text.is_some() {
                    println!("{answer}");
                }
                replies = session.send(ClientBody::Answer { question_id: id, answer })?;
            }
            ServerBody::ConceptLearned { concept, .. } => break concept,
            other => bail!("unexpected reply {other:?}"),
        }
    };

    write(&args.out, &concept.to_json())?;
    if let Some(p) = &args.transcript {
        let text: String = session.log.iter().map(|m| m.to_line() + "\n").collect();
        write(p, &text)?;
    }
    println!("learned {} with {} confirmed patterns:", concept.id(), concept.confirmed.len());
    for p in &concept.confirmed {
        println!("  {p}");
    }
    if let Some(store) = store {
        let id = store.save(&concept, true)?;
        println!("saved {id} to {}", store.dir().display());
    }
    Ok(())
}
