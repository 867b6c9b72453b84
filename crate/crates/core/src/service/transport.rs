//! Line transports for the session protocol: one session per stream.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use crate::concept::ConceptStore;

use super::{handle_message, sessionless_error, ClientMessage, Effect, ServerBody, ServerMessage, SessionState};

/// Source of RFC 3339 timestamps for messages that carry none.
pub type Clock = fn() -> String;

pub type SharedStore = Arc<Mutex<ConceptStore>>;

fn write_message<W: Write>(w: &mut W, m: &ServerMessage) -> io::Result<()> {
    writeln!(w, "{}", m.to_line())?;
    if let ServerBody::PlanFrame { throttle_ms: Some(ms), .. } = m.body {
        w.flush()?;
        thread::sleep(Duration::from_millis(ms));
    }
    Ok(())
}

fn perform(state: &mut SessionState, effect: Effect, store: Option<&SharedStore>) -> Vec<ServerMessage> {
    let Some(store) = store else {
        let reply_to = match &effect {
            Effect::SaveConcept { reply_to, .. } | Effect::LoadConcept { reply_to, .. } => *reply_to,
        };
        return state.store_error("no concept store configured".into(), reply_to);
    };
    let store = store.lock().unwrap_or_else(|p| p.into_inner());
    match effect {
        Effect::SaveConcept { record, overwrite, reply_to } => match store.save(&record, overwrite) {
            Ok(id) => state.concept_saved(id),
            Err(e) => state.store_error(e.to_string(), reply_to),
        },
        Effect::LoadConcept { id, reply_to } => match store.load(&id) {
            Ok(record) => state.install_concept(record),
            Err(e) => state.store_error(e.to_string(), reply_to),
        },
    }
}

/// Serves one session over a line stream until the reader closes.
pub fn serve_lines<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    session_id: &str,
    store: Option<&SharedStore>,
    clock: Clock,
) -> io::Result<()> {
    let mut state: Option<SessionState> = None;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut msg = match ClientMessage::parse(&line) {
            Ok(m) => m,
            Err(e) => {
                let reply = match state.as_mut() {
                    Some(s) => s.payload_error(e),
                    None => sessionless_error(e, 0),
                };
                write_message(&mut writer, &reply)?;
                writer.flush()?;
                continue;
            }
        };
        if msg.time.is_none() {
            msg.time = Some(clock());
        }
        let t = handle_message(state.take(), &msg, session_id);
        state = t.state;
        for m in &t.messages {
            write_message(&mut writer, m)?;
        }
        if let Some(s) = state.as_mut() {
            for effect in t.effects {
                for m in perform(s, effect, store) {
                    write_message(&mut writer, &m)?;
                }
            }
        }
        writer.flush()?;
    }
    Ok(())
}

/// Accepts connections forever, one thread and one session per connection.
pub fn serve_tcp(listener: TcpListener, store: Option<SharedStore>, clock: Clock) -> io::Result<()> {
    let counter = Arc::new(AtomicU64::new(0));
    for stream in listener.incoming() {
        let stream = stream?;
        let id = format!("s{}", counter.fetch_add(1, Ordering::SeqCst) + 1);
        let store = store.clone();
        thread::spawn(move || {
            if let Err(e) = serve_connection(stream, &id, store.as_ref(), clock) {
                log::warn!("session {id}: {e}");
            }
        });
    }
    Ok(())
}

fn serve_connection(stream: TcpStream, id: &str, store: Option<&SharedStore>, clock: Clock) -> io::Result<()> {
    log::info!("session {id} connected from {:?}", stream.peer_addr().ok());
    let reader = BufReader::new(stream.try_clone()?);
    serve_lines(reader, stream, id, store, clock)
}
