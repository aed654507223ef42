//! Token-level deny-list screen run before any snippet executes.
//!
//! Conservative by construction: a snippet that merely mentions a denied
//! token in a comment is rejected too.

use std::sync::OnceLock;

use regex::Regex;

use super::snippet::definition_count;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScreenOutcome {
    Pass,
    Reject { reason: String },
}

impl ScreenOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, ScreenOutcome::Pass)
    }
}

const DENY: &[(&str, &str)] = &[
    ("process spawning", r"\bsubprocess\b"),
    ("process spawning", r"\bos\s*\.\s*(system|popen|spawn\w*|exec\w*|fork\w*|kill|posix_spawn\w*)\b"),
    ("process spawning", r"\bmultiprocessing\b"),
    ("process spawning", r"\bpty\b"),
    ("network access", r"\bsocket\b"),
    ("network access", r"\burllib\d?\b"),
    ("network access", r"\brequests\b"),
    ("network access", r"\bhttp\s*\.\s*client\b"),
    ("network access", r"\b(httplib|ftplib|smtplib|telnetlib|poplib|imaplib|xmlrpc|aiohttp|httpx)\b"),
    ("filesystem write", r"\bopen\s*\("),
    ("filesystem write", r"\bshutil\b"),
    ("filesystem write", r"\bos\s*\.\s*(remove|unlink|rmdir|mkdir|makedirs|rename|replace|chmod|chown|truncate|write)\b"),
    ("filesystem write", r"\bpathlib\b"),
    ("filesystem write", r"\.(write_text|write_bytes|tofile)\s*\("),
    ("filesystem write", r"\b(np|numpy)\s*\.\s*(save|savez|savez_compressed|savetxt)\s*\("),
    ("filesystem write", r"\btempfile\b"),
    ("dynamic code", r"\b__import__\b"),
    ("dynamic code", r"\b(eval|exec|compile)\s*\("),
    ("dynamic code", r"\b(ctypes|cffi|importlib)\b"),
    ("dynamic code", r"\bsys\s*\.\s*modules\b"),
];

fn deny_list() -> &'static [(&'static str, Regex)] {
    static LIST: OnceLock<Vec<(&'static str, Regex)>> = OnceLock::new();
    LIST.get_or_init(|| {
        DENY.iter()
            .map(|(cat, pat)| (*cat, Regex::new(pat).expect("deny pattern")))
            .collect()
    })
}

pub fn static_screen(source: &str) -> ScreenOutcome {
    if source.trim().is_empty() {
        return ScreenOutcome::Reject {
            reason: "no function: source is empty".into(),
        };
    }
    match definition_count(source) {
        0 => {
            return ScreenOutcome::Reject {
                reason: "no function: LLMTransfer is not defined".into(),
            }
        }
        1 => {}
        n => {
            return ScreenOutcome::Reject {
                reason: format!("{n} definitions of LLMTransfer"),
            }
        }
    }
    for (category, re) in deny_list() {
        if let Some(m) = re.find(source) {
            return ScreenOutcome::Reject {
                reason: format!("{category}: `{}`", m.as_str().trim()),
            };
        }
    }
    ScreenOutcome::Pass
}

#[cfg(test)]
mod tests {
    use super::*;

    const OK: &str = "import numpy as np\n# Design Thought: echo\ndef LLMTransfer(pops, fits, lo, hi, NT, seed):\n    rng = np.random.default_rng(seed)\n    return [p[:NT].tolist() for p in pops]\n";

    #[test]
    fn passes_plain_numeric_code() {
        assert_eq!(static_screen(OK), ScreenOutcome::Pass);
    }

    #[test]
    fn rejects_empty_and_missing_function() {
        for src in ["", "   \n", "x = 1\n"] {
            match static_screen(src) {
                ScreenOutcome::Reject { reason } => assert!(reason.starts_with("no function")),
                ScreenOutcome::Pass => panic!("accepted {src:?}"),
            }
        }
    }

    #[test]
    fn rejects_denied_capabilities() {
        let cases = [
            ("import socket\n", "network"),
            ("import subprocess\n", "process"),
            ("os.system('ls')\n", "process"),
            ("f = open('x', 'w')\n", "filesystem"),
            ("np.save('x', a)\n", "filesystem"),
            ("__import__('os')\n", "dynamic"),
            ("import urllib.request\n", "network"),
        ];
        for (bad, cat) in cases {
            let src = format!("{bad}{OK}");
            match static_screen(&src) {
                ScreenOutcome::Reject { reason } => assert!(reason.contains(cat), "{reason}"),
                ScreenOutcome::Pass => panic!("accepted {bad:?}"),
            }
        }
    }

    #[test]
    fn rejects_multiple_definitions() {
        let src = format!("{OK}{OK}");
        assert!(!static_screen(&src).is_pass());
    }
}
