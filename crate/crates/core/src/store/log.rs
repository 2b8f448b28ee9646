use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::event::{Event, EventBody};
use super::StoreError;

/// Append-only event log, optionally mirrored line-by-line to a JSONL file.
#[derive(Debug, Default)]
pub struct EventLog {
    events: Vec<Event>,
    sink: Option<BufWriter<File>>,
}

impl Clone for EventLog {
    /// Clones the in-memory events only; the clone is not attached to a file.
    fn clone(&self) -> Self {
        Self {
            events: self.events.clone(),
            sink: None,
        }
    }
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Starts a fresh log file, truncating anything already there.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let file = File::create(path)?;
        Ok(Self {
            events: Vec::new(),
            sink: Some(BufWriter::new(file)),
        })
    }

    /// Opens an existing log for further appends.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let events = read_jsonl(File::open(&path)?)?;
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Self {
            events,
            sink: Some(BufWriter::new(file)),
        })
    }

    /// Wraps already-validated events (e.g. from [`read_jsonl`]).
    pub fn from_events(events: Vec<Event>) -> Result<Self, StoreError> {
        check_sequence(&events)?;
        Ok(Self { events, sink: None })
    }

    pub fn next_seq(&self) -> u64 {
        self.events.last().map_or(1, |e| e.seq + 1)
    }

    /// Validates and appends; returns the assigned sequence number.
    pub fn append(&mut self, ts: u64, body: EventBody) -> Result<u64, StoreError> {
        body.validate().map_err(StoreError::InvalidPayload)?;
        let event = Event {
            seq: self.next_seq(),
            ts,
            body,
        };
        if let Some(sink) = self.sink.as_mut() {
            serde_json::to_writer(&mut *sink, &event).map_err(|e| StoreError::Storage(e.into()))?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
        let seq = event.seq;
        self.events.push(event);
        Ok(seq)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<(), StoreError> {
        for event in &self.events {
            serde_json::to_writer(&mut out, event).map_err(|e| StoreError::Storage(e.into()))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_sequence(events: &[Event]) -> Result<(), StoreError> {
    let mut last = 0;
    for event in events {
        if event.seq <= last {
            return Err(StoreError::CorruptLog {
                seq: event.seq,
                reason: format!("sequence does not increase (previous {last})"),
            });
        }
        event
            .body
            .validate()
            .map_err(|reason| StoreError::CorruptLog {
                seq: event.seq,
                reason,
            })?;
        last = event.seq;
    }
    Ok(())
}

/// Parses a JSONL log. Blank lines are skipped.
pub fn read_jsonl(input: impl Read) -> Result<Vec<Event>, StoreError> {
    let mut events = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        events.push(event);
    }
    check_sequence(&events)?;
    Ok(events)
}

pub fn read_jsonl_file(path: impl AsRef<Path>) -> Result<Vec<Event>, StoreError> {
    read_jsonl(File::open(path)?)
}
