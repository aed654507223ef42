//! Append-only JSONL record of everything the search loop does.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::candidate::Operator;
use crate::error::{Error, Result};
use crate::llm::PromptKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationEntry {
    pub id: String,
    #[serde(with = "super::floats")]
    pub s: f64,
    #[serde(with = "super::floats")]
    pub t: f64,
    pub front_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventBody {
    Start {
        n_ktm: usize,
        g_ktm: usize,
        seed: u64,
        benchmark: String,
        backend: String,
    },
    Prompt {
        kind: PromptKind,
        parents: Vec<String>,
        /// First 16 hex digits of the SHA-256 of system + user text.
        digest: String,
    },
    Completion {
        chars: usize,
        digest: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    Extraction {
        result: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snippet: Option<String>,
        /// Design-thought comment of the extracted snippet.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        annotation: Option<String>,
    },
    Verdict {
        snippet: String,
        kind: String,
        message: String,
    },
    Objectives {
        snippet: String,
        #[serde(with = "super::floats")]
        s: f64,
        #[serde(with = "super::floats")]
        t: f64,
        cached: bool,
        wall_clock_secs: f64,
    },
    Init {
        candidate: String,
        snippet: String,
    },
    Insert {
        candidate: String,
        snippet: String,
        operator: Operator,
        parents: Vec<String>,
    },
    Sort {
        fronts: Vec<Vec<String>>,
    },
    Removal {
        candidate: String,
        front_rank: usize,
        #[serde(with = "super::floats")]
        crowding: f64,
        birth_gen: usize,
    },
    Skip {
        reason: String,
    },
    GenerationEnd {
        #[serde(with = "super::floats")]
        min_s: f64,
        #[serde(with = "super::floats")]
        min_t: f64,
        population: Vec<PopulationEntry>,
    },
    End {
        headline: Option<String>,
        front: Vec<String>,
        evaluations: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub gen: usize,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Event sink: keeps every event in memory and mirrors it to a JSONL file
/// when a path is given (one flushed line per event).
#[derive(Debug, Default)]
pub struct EventLog {
    path: Option<PathBuf>,
    file: Option<BufWriter<File>>,
    events: Vec<Event>,
    next_seq: u64,
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        Ok(EventLog {
            path: Some(path.to_path_buf()),
            file: Some(BufWriter::new(file)),
            events: Vec::new(),
            next_seq: 0,
        })
    }

    /// Reopens an existing log for resuming: events with `seq >= next_seq`
    /// (written after the checkpoint) are discarded.
    pub fn resume(path: &Path, next_seq: u64) -> Result<Self> {
        let events: Vec<Event> = read_events(path)?
            .into_iter()
            .filter(|e| e.seq < next_seq)
            .collect();
        let mut file = BufWriter::new(File::create(path)?);
        for e in &events {
            writeln!(file, "{}", serde_json::to_string(e).expect("event serializes"))?;
        }
        file.flush()?;
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(EventLog {
            path: Some(path.to_path_buf()),
            file: Some(BufWriter::new(file)),
            events,
            next_seq,
        })
    }

    pub fn emit(&mut self, gen: usize, body: EventBody) -> Result<()> {
        let event = Event {
            seq: self.next_seq,
            gen,
            body,
        };
        self.next_seq += 1;
        if let Some(f) = self.file.as_mut() {
            writeln!(f, "{}", serde_json::to_string(&event).expect("event serializes"))?;
            f.flush()?;
        }
        self.events.push(event);
        Ok(())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }
}

pub fn read_events(path: &Path) -> Result<Vec<Event>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|err| Error::Parse {
            offset: i,
            message: format!("event log line {}: {err}", i + 1),
        })?;
        out.push(e);
    }
    Ok(out)
}

/// JSON values of the log lines with wall-clock fields removed, for
/// run-to-run comparisons.
pub fn comparable_lines(path: &Path) -> Result<Vec<serde_json::Value>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).map_err(|e| Error::from_json(e, l))?;
            if let Some(obj) = v.as_object_mut() {
                obj.remove("wall_clock_secs");
            }
            Ok(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_round_trip_with_infinities() {
        let e = Event {
            seq: 3,
            gen: 1,
            body: EventBody::Objectives {
                snippet: "abc".into(),
                s: f64::INFINITY,
                t: f64::INFINITY,
                cached: false,
                wall_clock_secs: 0.25,
            },
        };
        let line = serde_json::to_string(&e).unwrap();
        assert!(line.contains("\"event\":\"objectives\""));
        assert_eq!(serde_json::from_str::<Event>(&line).unwrap(), e);
    }

    #[test]
    fn resume_truncates_later_events() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut log = EventLog::create(&path).unwrap();
        for i in 0..5 {
            log.emit(0, EventBody::Skip { reason: format!("r{i}") }).unwrap();
        }
        drop(log);
        let mut log = EventLog::resume(&path, 3).unwrap();
        assert_eq!(log.events().len(), 3);
        log.emit(1, EventBody::Skip { reason: "again".into() }).unwrap();
        let back = read_events(&path).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back[3].seq, 3);
        assert_eq!(comparable_lines(&path).unwrap().len(), 4);
    }
}
