//! Deterministic stand-in for a language runner.
//!
//! Speaks the sandbox wire protocol but does not interpret the snippet.
//! Instead it looks for a directive line in the source,
//!
//! ```text
//! # replay: <behavior> [key=value ...]
//! ```
//!
//! and replays the recorded behavior. This keeps the fault suite and the
//! search tests hermetic while exercising the real process machinery.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::process::ExitCode;
use std::time::Duration;

use super::protocol::{
    decode_frame, encode_frame, ErrorReport, TransferRequest, TransferResponse, EXIT_COMPILE_ERROR,
    EXIT_MALFORMED_REQUEST, EXIT_RUNTIME_ERROR, PROTOCOL_VERSION,
};
use rand::{Rng, SeedableRng};

fn report(code: &str, message: &str) {
    let r = ErrorReport {
        code: code.into(),
        message: message.into(),
    };
    eprintln!("{}", serde_json::to_string(&r).unwrap());
}

fn directive(source: &str) -> Option<(String, HashMap<String, String>)> {
    let line = source.lines().find_map(|l| {
        let t = l.trim_start().trim_start_matches('#').trim_start_matches("//").trim();
        t.strip_prefix("replay:")
    })?;
    let mut parts = line.split_whitespace();
    let behavior = parts.next()?.to_string();
    let params = parts
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    Some((behavior, params))
}

fn ranked(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[a].partial_cmp(&fitness[b]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

fn echo_best(req: &TransferRequest) -> Vec<Vec<Vec<f64>>> {
    req.tasks
        .iter()
        .map(|t| {
            let order = ranked(&t.fitness);
            (0..req.nt).map(|k| t.population[order[k % order.len()]].clone()).collect()
        })
        .collect()
}

/// Row `k` for task `i` is the `k / (numt-1)`-th best of the `k mod (numt-1)`-th
/// other task, moved through the unit box.
fn elite_exchange(req: &TransferRequest) -> Vec<Vec<Vec<f64>>> {
    let numt = req.tasks.len();
    if numt < 2 {
        return echo_best(req);
    }
    let orders: Vec<Vec<usize>> = req.tasks.iter().map(|t| ranked(&t.fitness)).collect();
    (0..numt)
        .map(|i| {
            let target = &req.tasks[i];
            (0..req.nt)
                .map(|k| {
                    let j = (i + 1 + k % (numt - 1)) % numt;
                    let src = &req.tasks[j];
                    let row = &src.population[orders[j][(k / (numt - 1)) % orders[j].len()]];
                    row.iter()
                        .enumerate()
                        .map(|(d, &v)| {
                            let u = (v - src.lower[d]) / (src.upper[d] - src.lower[d]);
                            target.lower[d] + u * (target.upper[d] - target.lower[d])
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn random_rows(req: &TransferRequest) -> Vec<Vec<Vec<f64>>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(req.seed);
    req.tasks
        .iter()
        .map(|t| {
            (0..req.nt)
                .map(|_| {
                    t.lower
                        .iter()
                        .zip(&t.upper)
                        .map(|(&l, &u)| l + rng.random::<f64>() * (u - l))
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn respond(transfers: Vec<Vec<Vec<f64>>>, work: Option<u64>) -> ExitCode {
    let body = serde_json::to_string(&TransferResponse {
        transfers,
        work_units: work,
    })
    .unwrap();
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(encode_frame(&body).as_bytes());
    let _ = out.flush();
    ExitCode::SUCCESS
}

/// Entry point: `path` is the snippet source file; the request arrives on
/// stdin and the response leaves on stdout.
pub fn replay_main(path: Option<String>) -> ExitCode {
    let Some(path) = path else {
        report("usage", "ktm-replay-runner <source-path>");
        return ExitCode::from(EXIT_MALFORMED_REQUEST as u8);
    };
    let source = match std::fs::read_to_string(&path) {
        Ok(s) => s,
        Err(e) => {
            report("compile-error", &format!("cannot read {path}: {e}"));
            return ExitCode::from(EXIT_COMPILE_ERROR as u8);
        }
    };
    let Some((behavior, params)) = directive(&source) else {
        report("compile-error", "no replay directive in snippet");
        return ExitCode::from(EXIT_COMPILE_ERROR as u8);
    };
    let param = |k: &str, default: u64| params.get(k).and_then(|v| v.parse().ok()).unwrap_or(default);

    // Behaviors that fire before the request is read.
    match behavior.as_str() {
        "compile-error" => {
            report("compile-error", "SyntaxError: invalid syntax (snippet, line 3)");
            return ExitCode::from(EXIT_COMPILE_ERROR as u8);
        }
        "infinite-loop" => loop {
            std::thread::sleep(Duration::from_millis(50));
        },
        _ => {}
    }

    let mut input = Vec::new();
    if std::io::stdin().read_to_end(&mut input).is_err() {
        report("malformed-request", "cannot read stdin");
        return ExitCode::from(EXIT_MALFORMED_REQUEST as u8);
    }
    let req: TransferRequest = match decode_frame(&input)
        .map_err(|e| e.to_string())
        .and_then(|p| serde_json::from_str(p).map_err(|e| e.to_string()))
    {
        Ok(r) => r,
        Err(e) => {
            report("malformed-request", &e);
            return ExitCode::from(EXIT_MALFORMED_REQUEST as u8);
        }
    };
    if req.protocol_version != PROTOCOL_VERSION {
        report("malformed-request", &format!("unsupported protocol version {}", req.protocol_version));
        return ExitCode::from(EXIT_MALFORMED_REQUEST as u8);
    }
    let work = params.get("work").and_then(|v| v.parse().ok());

    match behavior.as_str() {
        "echo-best" => respond(echo_best(&req), work),
        "elite-exchange" => respond(elite_exchange(&req), work),
        "random" => respond(random_rows(&req), work),
        "sleep" => {
            std::thread::sleep(Duration::from_millis(param("ms", 100)));
            respond(echo_best(&req), work)
        }
        "out-of-bounds" => {
            let mut t = echo_best(&req);
            for (rows, task) in t.iter_mut().zip(&req.tasks) {
                for row in rows.iter_mut() {
                    for (d, v) in row.iter_mut().enumerate() {
                        *v = task.upper[d] + (task.upper[d] - task.lower[d]);
                    }
                }
            }
            respond(t, work)
        }
        "wrong-shape" => {
            let mut t = echo_best(&req);
            for rows in &mut t {
                for row in rows.iter_mut() {
                    row.pop();
                }
            }
            respond(t, work)
        }
        "nan" => {
            let body = serde_json::to_string(&TransferResponse {
                transfers: echo_best(&req),
                work_units: None,
            })
            .unwrap();
            let body = body.replacen("[[[", "[[[NaN,", 1);
            print!("{}", encode_frame(&body));
            ExitCode::SUCCESS
        }
        "oversized" => {
            let mut out = std::io::stdout().lock();
            let chunk = vec![b'9'; 1 << 20];
            let _ = out.write_all(b"999999999 {\"transfers\":[[[");
            for _ in 0..param("mib", 64) {
                if out.write_all(&chunk).is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        "stderr-flood" => {
            let mut err = std::io::stderr().lock();
            let line = vec![b'x'; 8191];
            for _ in 0..(param("mib", 16) * 128) {
                let _ = err.write_all(&line);
                let _ = err.write_all(b"\n");
            }
            drop(err);
            respond(echo_best(&req), work)
        }
        "malformed" => {
            print!("this is not a frame");
            ExitCode::SUCCESS
        }
        "runtime-error" => {
            report("runtime-error", "Traceback (most recent call last):\n  ValueError: operands could not be broadcast together");
            ExitCode::from(EXIT_RUNTIME_ERROR as u8)
        }
        "exit-code" => ExitCode::from(param("code", 7) as u8),
        "crash" => std::process::abort(),
        "orphan" => {
            // Leaves a grandchild holding stdout open; the host must kill the group.
            let _ = std::process::Command::new("sleep").arg("30").spawn();
            respond(echo_best(&req), work)
        }
        other => {
            report("compile-error", &format!("unknown replay behavior {other:?}"));
            ExitCode::from(EXIT_COMPILE_ERROR as u8)
        }
    }
}
