//! Wire messages exchanged with a snippet runner process.
//!
//! Every message is one line: the payload's byte length in ASCII decimal,
//! a single space, the UTF-8 JSON payload (no newlines), then `\n`. The
//! host writes one request to the runner's stdin and reads one response
//! from its stdout. Diagnostics go to stderr, optionally ending with a
//! JSON [`ErrorReport`] line.

use serde::{Deserialize, Serialize};

use crate::transfer::TransferSnapshot;

pub const PROTOCOL_VERSION: u32 = 1;

/// Runner exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPILE_ERROR: i32 = 2;
pub const EXIT_RUNTIME_ERROR: i32 = 3;
pub const EXIT_MALFORMED_REQUEST: i32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub population: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferRequest {
    pub protocol_version: u32,
    pub nt: usize,
    pub seed: u64,
    pub tasks: Vec<TaskPayload>,
}

impl TransferRequest {
    pub fn from_snapshot(snapshot: &TransferSnapshot<f64>, seed: u64) -> Self {
        TransferRequest {
            protocol_version: PROTOCOL_VERSION,
            nt: snapshot.nt,
            seed,
            tasks: snapshot
                .tasks
                .iter()
                .map(|t| TaskPayload {
                    population: t.population.clone(),
                    fitness: t.fitness.clone(),
                    lower: t.lower.clone(),
                    upper: t.upper.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferResponse {
    /// `numt × nt × dim`.
    pub transfers: Vec<Vec<Vec<f64>>>,
    /// Optional cost reported by the runner for the deterministic cost model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work_units: Option<u64>,
}

/// Structured diagnostic written to stderr on failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub code: String,
    pub message: String,
}

pub fn encode_frame(payload: &str) -> String {
    debug_assert!(!payload.contains('\n'));
    format!("{} {}\n", payload.len(), payload)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameError {
    Empty,
    BadLength(String),
    Truncated { expected: usize, found: usize },
    MissingTerminator,
    TrailingData(usize),
    NotUtf8,
}

impl std::fmt::Display for FrameError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameError::Empty => f.write_str("no message"),
            FrameError::BadLength(s) => write!(f, "invalid length prefix {s:?}"),
            FrameError::Truncated { expected, found } => {
                write!(f, "payload truncated: expected {expected} bytes, found {found}")
            }
            FrameError::MissingTerminator => f.write_str("missing newline after payload"),
            FrameError::TrailingData(n) => write!(f, "{n} unexpected bytes after the message"),
            FrameError::NotUtf8 => f.write_str("payload is not UTF-8"),
        }
    }
}

/// Parses exactly one frame occupying the whole buffer.
pub fn decode_frame(buf: &[u8]) -> Result<&str, FrameError> {
    if buf.is_empty() {
        return Err(FrameError::Empty);
    }
    let space = buf
        .iter()
        .position(|&b| b == b' ')
        .filter(|&p| p <= 20)
        .ok_or_else(|| FrameError::BadLength(String::from_utf8_lossy(&buf[..buf.len().min(20)]).into()))?;
    let prefix = std::str::from_utf8(&buf[..space]).map_err(|_| FrameError::NotUtf8)?;
    if prefix.is_empty() || !prefix.bytes().all(|b| b.is_ascii_digit()) {
        return Err(FrameError::BadLength(prefix.into()));
    }
    let len: usize = prefix.parse().map_err(|_| FrameError::BadLength(prefix.into()))?;
    let body = &buf[space + 1..];
    if body.len() < len {
        return Err(FrameError::Truncated {
            expected: len,
            found: body.len(),
        });
    }
    let payload = std::str::from_utf8(&body[..len]).map_err(|_| FrameError::NotUtf8)?;
    let rest = &body[len..];
    match rest.first() {
        Some(b'\n') => {}
        _ => return Err(FrameError::MissingTerminator),
    }
    if rest.len() > 1 {
        return Err(FrameError::TrailingData(rest.len() - 1));
    }
    Ok(payload)
}
