use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::protocol::{
    decode_frame, encode_frame, ErrorReport, TransferRequest, TransferResponse, EXIT_COMPILE_ERROR,
    EXIT_MALFORMED_REQUEST, EXIT_OK, EXIT_RUNTIME_ERROR,
};
use super::screen::{static_screen, ScreenOutcome};
use super::snippet::SnippetSpec;
use crate::error::{Error, Result};
use crate::transfer::{ShapeViolation, TransferResult, TransferSnapshot};

/// Placeholder replaced by the snippet's temporary file path in runner commands.
pub const SOURCE_PLACEHOLDER: &str = "{source}";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandboxConfig {
    /// Runner command per snippet language. Arguments equal to
    /// [`SOURCE_PLACEHOLDER`] are replaced by the source path; if none is
    /// present the path is appended.
    pub runners: BTreeMap<String, Vec<String>>,
    pub timeout_ms: u64,
    /// Time between SIGTERM and SIGKILL once the timeout fires.
    pub grace_ms: u64,
    pub max_response_bytes: usize,
    /// Bytes of stderr kept for diagnostics; the rest is drained and dropped.
    pub max_stderr_bytes: usize,
    /// Environment variables passed through to the runner. Everything else is cleared.
    pub env_allow: Vec<String>,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        let mut runners = BTreeMap::new();
        runners.insert(
            "python".to_string(),
            vec!["python3".to_string(), "-I".to_string(), "runner/ktm_runner.py".to_string(), SOURCE_PLACEHOLDER.to_string()],
        );
        SandboxConfig {
            runners,
            timeout_ms: 10_000,
            grace_ms: 500,
            max_response_bytes: 16 << 20,
            max_stderr_bytes: 64 << 10,
            env_allow: ["PATH", "HOME", "LANG", "LC_ALL", "TMPDIR", "PYTHONPATH"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl SandboxConfig {
    /// Defaults for desk-scale runs (shorter timeout).
    pub fn mini() -> Self {
        SandboxConfig {
            timeout_ms: 2_000,
            ..Self::default()
        }
    }

    /// A config whose only runner is `command`, registered for `language`.
    pub fn with_runner(language: &str, command: Vec<String>) -> Self {
        let mut cfg = Self::default();
        cfg.runners.clear();
        cfg.runners.insert(language.to_string(), command);
        cfg
    }

    /// Upper bound on the response size for a `numt × nt × dim` payload.
    pub fn worst_case_response_bytes(numt: usize, nt: usize, dim: usize) -> usize {
        // 24 chars covers any shortest-round-trip f64 plus a separator.
        numt * nt * (dim * 26 + 4) + 256
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout_ms == 0 {
            return Err(Error::config("sandbox timeout must be positive"));
        }
        if self.runners.values().any(Vec::is_empty) {
            return Err(Error::config("sandbox runner command is empty"));
        }
        Ok(())
    }

    /// Checks the size invariant for a concrete problem shape.
    pub fn validate_for(&self, numt: usize, nt: usize, dim: usize) -> Result<()> {
        self.validate()?;
        let need = Self::worst_case_response_bytes(numt, nt, dim);
        if self.max_response_bytes < need {
            return Err(Error::config(format!(
                "max_response_bytes {} is below the worst-case payload {need}",
                self.max_response_bytes
            )));
        }
        Ok(())
    }
}

/// Outcome of one sandboxed transfer invocation.
#[derive(Clone, Debug, PartialEq)]
pub enum SandboxVerdict {
    Ok {
        result: TransferResult<f64>,
        elapsed_ms: u64,
    },
    CompileError {
        msg: String,
    },
    RuntimeError {
        msg: String,
    },
    Timeout {
        elapsed_ms: u64,
    },
    ProtocolError {
        msg: String,
    },
    ShapeError {
        msg: String,
    },
    /// Refused by the static screen; nothing was executed.
    Rejected {
        reason: String,
    },
}

impl SandboxVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            SandboxVerdict::Ok { .. } => "ok",
            SandboxVerdict::CompileError { .. } => "compile-error",
            SandboxVerdict::RuntimeError { .. } => "runtime-error",
            SandboxVerdict::Timeout { .. } => "timeout",
            SandboxVerdict::ProtocolError { .. } => "protocol-error",
            SandboxVerdict::ShapeError { .. } => "shape-error",
            SandboxVerdict::Rejected { .. } => "rejected",
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, SandboxVerdict::Ok { .. })
    }

    pub fn message(&self) -> String {
        match self {
            SandboxVerdict::Ok { elapsed_ms, .. } => format!("completed in {elapsed_ms} ms"),
            SandboxVerdict::Timeout { elapsed_ms } => format!("killed after {elapsed_ms} ms"),
            SandboxVerdict::CompileError { msg }
            | SandboxVerdict::RuntimeError { msg }
            | SandboxVerdict::ProtocolError { msg }
            | SandboxVerdict::ShapeError { msg } => msg.clone(),
            SandboxVerdict::Rejected { reason } => reason.clone(),
        }
    }
}

/// Objectives assigned to any candidate whose evaluation failed.
pub fn penalty_objectives() -> (f64, f64) {
    (f64::INFINITY, f64::INFINITY)
}

struct Captured {
    bytes: Vec<u8>,
    overflow: bool,
}

fn read_capped<R: Read>(mut r: R, cap: usize, drain: bool, overflow_flag: Option<&AtomicBool>) -> Captured {
    let mut bytes = Vec::new();
    let mut overflow = false;
    let mut chunk = [0u8; 64 * 1024];
    loop {
        match r.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => {
                if overflow {
                    continue;
                }
                let room = cap.saturating_sub(bytes.len());
                bytes.extend_from_slice(&chunk[..n.min(room)]);
                if n > room {
                    overflow = true;
                    if let Some(flag) = overflow_flag {
                        flag.store(true, Ordering::SeqCst);
                    }
                    if !drain {
                        break;
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        }
    }
    Captured { bytes, overflow }
}

fn kill_group(pgid: u32, signal: libc::c_int) {
    // SAFETY: plain syscall; a stale group id only yields ESRCH.
    unsafe {
        libc::killpg(pgid as libc::pid_t, signal);
    }
}

fn stderr_message(stderr: &[u8]) -> String {
    let text = String::from_utf8_lossy(stderr);
    for line in text.lines().rev() {
        if let Ok(report) = serde_json::from_str::<ErrorReport>(line.trim()) {
            return format!("{}: {}", report.code, report.message);
        }
    }
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return "no diagnostics".into();
    }
    let tail_start = trimmed.len().saturating_sub(2048);
    let mut start = tail_start;
    while !trimmed.is_char_boundary(start) {
        start += 1;
    }
    trimmed[start..].to_string()
}

/// Runs `snippet` on one transfer request in a fresh child process.
///
/// Returns `Err` only for host-side configuration problems (unknown
/// language, missing runner binary, unwritable temp dir). Every snippet
/// outcome maps to exactly one [`SandboxVerdict`].
pub fn execute_transfer(
    snippet: &SnippetSpec,
    snapshot: &TransferSnapshot<f64>,
    seed: u64,
    cfg: &SandboxConfig,
) -> Result<SandboxVerdict> {
    cfg.validate()?;
    if let ScreenOutcome::Reject { reason } = static_screen(&snippet.source) {
        return Ok(SandboxVerdict::Rejected { reason });
    }
    let template = cfg
        .runners
        .get(&snippet.language)
        .ok_or_else(|| Error::config(format!("no runner configured for language {:?}", snippet.language)))?;

    let dir = tempfile::tempdir()?;
    let ext = match snippet.language.as_str() {
        "python" => "py",
        "javascript" => "js",
        other => other,
    };
    let source_path = dir.path().join(format!("snippet.{ext}"));
    std::fs::write(&source_path, &snippet.source)?;
    let source_arg = source_path.to_string_lossy().into_owned();

    let mut args: Vec<String> = template[1..].to_vec();
    if args.iter().any(|a| a == SOURCE_PLACEHOLDER) {
        for a in &mut args {
            if a == SOURCE_PLACEHOLDER {
                *a = source_arg.clone();
            }
        }
    } else {
        args.push(source_arg);
    }

    let request = TransferRequest::from_snapshot(snapshot, seed);
    let payload = serde_json::to_string(&request).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let frame = encode_frame(&payload);

    let mut cmd = Command::new(&template[0]);
    cmd.args(&args)
        .env_clear()
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    for key in &cfg.env_allow {
        if let Some(v) = std::env::var_os(key) {
            cmd.env(key, v);
        }
    }
    let start = Instant::now();
    let mut child = cmd.spawn().map_err(|e| {
        Error::config(format!("cannot start runner {:?}: {e}", template[0]))
    })?;
    let pgid = child.id();

    let mut stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let stderr = child.stderr.take().expect("piped stderr");

    let writer = thread::spawn(move || {
        // A snippet that never reads, or exits early, turns this into EPIPE.
        let _ = stdin.write_all(frame.as_bytes());
    });
    let overflow = Arc::new(AtomicBool::new(false));
    let (out_tx, out_rx) = mpsc::channel();
    {
        let overflow = Arc::clone(&overflow);
        let cap = cfg.max_response_bytes;
        thread::spawn(move || {
            let _ = out_tx.send(read_capped(stdout, cap, false, Some(&overflow)));
        });
    }
    let (err_tx, err_rx) = mpsc::channel();
    {
        let cap = cfg.max_stderr_bytes;
        thread::spawn(move || {
            let _ = err_tx.send(read_capped(stderr, cap, true, None));
        });
    }

    let timeout = Duration::from_millis(cfg.timeout_ms);
    let grace = Duration::from_millis(cfg.grace_ms);
    let mut timed_out = false;
    let mut overflowed = false;
    let mut term_sent: Option<Instant> = None;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if overflow.load(Ordering::SeqCst) && !overflowed {
            overflowed = true;
            kill_group(pgid, libc::SIGKILL);
        }
        let now = Instant::now();
        match term_sent {
            None if now.duration_since(start) >= timeout => {
                timed_out = true;
                kill_group(pgid, libc::SIGTERM);
                term_sent = Some(now);
            }
            Some(t) if now.duration_since(t) >= grace => {
                kill_group(pgid, libc::SIGKILL);
                let _ = child.kill();
                break None;
            }
            _ => {}
        }
        thread::sleep(Duration::from_millis(1));
    };
    // Reap the child and anything it left behind in its process group.
    let status = match status {
        Some(s) => s,
        None => child.wait()?,
    };
    kill_group(pgid, libc::SIGKILL);
    let elapsed_ms = start.elapsed().as_millis() as u64;

    let settle = grace + Duration::from_millis(1000);
    let out = out_rx.recv_timeout(settle).ok();
    let err = err_rx.recv_timeout(settle).ok();
    let _ = writer.join();
    let stderr_bytes = err.map(|c| c.bytes).unwrap_or_default();

    if timed_out {
        return Ok(SandboxVerdict::Timeout { elapsed_ms });
    }
    let Some(out) = out else {
        return Ok(SandboxVerdict::ProtocolError {
            msg: "runner output stream was not closed".into(),
        });
    };
    if overflowed || out.overflow {
        return Ok(SandboxVerdict::ProtocolError {
            msg: format!("response exceeded {} bytes", cfg.max_response_bytes),
        });
    }

    let code = match status.code() {
        Some(c) => c,
        None => {
            let sig = status.signal().unwrap_or(0);
            return Ok(SandboxVerdict::RuntimeError {
                msg: format!("runner terminated by signal {sig}: {}", stderr_message(&stderr_bytes)),
            });
        }
    };
    match code {
        EXIT_OK => {}
        EXIT_COMPILE_ERROR => {
            return Ok(SandboxVerdict::CompileError {
                msg: stderr_message(&stderr_bytes),
            })
        }
        EXIT_RUNTIME_ERROR => {
            return Ok(SandboxVerdict::RuntimeError {
                msg: stderr_message(&stderr_bytes),
            })
        }
        EXIT_MALFORMED_REQUEST => {
            return Ok(SandboxVerdict::ProtocolError {
                msg: format!("runner rejected the request: {}", stderr_message(&stderr_bytes)),
            })
        }
        other => {
            return Ok(SandboxVerdict::RuntimeError {
                msg: format!("runner exited with status {other}: {}", stderr_message(&stderr_bytes)),
            })
        }
    }

    let payload = match decode_frame(&out.bytes) {
        Ok(p) => p,
        Err(e) => return Ok(SandboxVerdict::ProtocolError { msg: e.to_string() }),
    };
    let response: TransferResponse = match serde_json::from_str(payload) {
        Ok(r) => r,
        Err(e) => {
            return Ok(SandboxVerdict::ProtocolError {
                msg: format!("invalid response: {e}"),
            })
        }
    };
    let default_work = (snapshot.numt() * snapshot.nt * snapshot.tasks.first().map_or(0, |t| t.dim())) as u64;
    let mut result = TransferResult {
        transfers: response.transfers,
        work_units: response.work_units.unwrap_or(default_work),
        clipped: 0,
        warning: None,
    };
    if result.transfers.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Ok(SandboxVerdict::ProtocolError {
            msg: "response contains non-finite values".into(),
        });
    }
    match result.conform(snapshot) {
        Ok(clipped) => {
            if clipped > 0 {
                let total = snapshot.numt() * snapshot.nt * snapshot.tasks.first().map_or(0, |t| t.dim());
                result.warning = Some(format!("clipped {clipped} of {total} values into bounds"));
            }
            Ok(SandboxVerdict::Ok { result, elapsed_ms })
        }
        Err(ShapeViolation::NonFinite { task }) => Ok(SandboxVerdict::ProtocolError {
            msg: format!("task {task}: non-finite value"),
        }),
        Err(v) => Ok(SandboxVerdict::ShapeError { msg: v.to_string() }),
    }
}

/// Direct children of this process that have not been reaped (Linux only;
/// returns 0 elsewhere). Used to check that no runner outlives its call.
pub fn live_children() -> usize {
    let pid = std::process::id();
    let Ok(tasks) = std::fs::read_dir(format!("/proc/{pid}/task")) else {
        return 0;
    };
    tasks
        .filter_map(|t| t.ok())
        .filter_map(|t| std::fs::read_to_string(t.path().join("children")).ok())
        .map(|s| s.split_whitespace().count())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::TaskSnapshot;

    fn snapshot() -> TransferSnapshot<f64> {
        TransferSnapshot {
            nt: 1,
            tasks: vec![TaskSnapshot {
                population: vec![vec![0.0, 0.0]],
                fitness: vec![0.0],
                lower: vec![-1.0; 2],
                upper: vec![1.0; 2],
            }],
        }
    }

    const SRC: &str = "def LLMTransfer(p, f, lo, hi, NT, seed):\n    return p\n";

    #[test]
    fn missing_runner_is_config_error() {
        let cfg = SandboxConfig::with_runner("python", vec!["/nonexistent/runner-binary".into()]);
        let s = SnippetSpec::new(SRC, "python");
        assert!(matches!(execute_transfer(&s, &snapshot(), 0, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_language_is_config_error() {
        let cfg = SandboxConfig::default();
        let s = SnippetSpec::new(SRC, "cobol");
        assert!(matches!(execute_transfer(&s, &snapshot(), 0, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn screened_snippet_never_runs() {
        let cfg = SandboxConfig::with_runner("python", vec!["/nonexistent/runner-binary".into()]);
        let s = SnippetSpec::new(format!("import socket\n{SRC}"), "python");
        let v = execute_transfer(&s, &snapshot(), 0, &cfg).unwrap();
        assert_eq!(v.kind(), "rejected");
    }

    #[test]
    fn shell_runner_classifications() {
        let sh = |script: &str| SandboxConfig::with_runner("python", vec!["sh".into(), "-c".into(), script.into(), "runner".into()]);
        let s = SnippetSpec::new(SRC, "python");
        let run = |cfg: SandboxConfig| execute_transfer(&s, &snapshot(), 0, &cfg).unwrap();

        let ok = run(sh(r#"cat >/dev/null; printf '23 {"transfers":[[[2,0]]]}\n'"#));
        match ok {
            SandboxVerdict::Ok { result, .. } => {
                assert_eq!(result.transfers, vec![vec![vec![1.0, 0.0]]]);
                assert_eq!(result.clipped, 1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(run(sh("exit 2")).kind(), "compile-error");
        assert_eq!(run(sh("exit 3")).kind(), "runtime-error");
        assert_eq!(run(sh("exit 4")).kind(), "protocol-error");
        assert_eq!(run(sh("exit 9")).kind(), "runtime-error");
        assert_eq!(run(sh("cat >/dev/null; echo nonsense")).kind(), "protocol-error");
        assert_eq!(
            run(sh(r#"cat >/dev/null; printf '21 {"transfers":[[[2]]]}\n'"#)).kind(),
            "shape-error"
        );
        let mut slow = sh("sleep 5");
        slow.timeout_ms = 100;
        slow.grace_ms = 50;
        let t0 = Instant::now();
        assert_eq!(run(slow).kind(), "timeout");
        assert!(t0.elapsed() < Duration::from_millis(1500));
    }

    #[test]
    fn size_invariant() {
        let mut cfg = SandboxConfig::default();
        assert!(cfg.validate_for(50, 10, 50).is_ok());
        cfg.max_response_bytes = 100;
        assert!(cfg.validate_for(5, 5, 10).is_err());
        cfg.timeout_ms = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn penalty_is_infinite() {
        let (s, t) = penalty_objectives();
        assert!(s.is_infinite() && t.is_infinite());
    }
}
