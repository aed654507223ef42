use serde::{Deserialize, Serialize};

use crate::sandbox::{penalty_objectives, SnippetSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    Init,
    Generation,
    Mutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub operator: Operator,
    /// Candidate ids of the prompt's parents (empty for init).
    pub parents: Vec<String>,
}

/// Short classification of an evaluation; `kind == "ok"` for valid runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub kind: String,
    pub message: String,
}

impl VerdictSummary {
    pub fn ok() -> Self {
        VerdictSummary {
            kind: "ok".into(),
            message: String::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.kind == "ok"
    }
}

/// Objectives of one snippet plus how they were obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(with = "super::floats")]
    pub s: f64,
    #[serde(with = "super::floats")]
    pub t: f64,
    pub verdict: VerdictSummary,
    #[serde(default)]
    pub wall_clock_secs: f64,
}

impl Evaluation {
    /// A valid evaluation; non-finite objectives are turned into a penalty.
    pub fn valid(s: f64, t: f64) -> Self {
        if s.is_finite() && t.is_finite() {
            Evaluation {
                s,
                t,
                verdict: VerdictSummary::ok(),
                wall_clock_secs: 0.0,
            }
        } else {
            Self::penalized("non-finite-objective", format!("s={s}, t={t}"))
        }
    }

    pub fn penalized(kind: impl Into<String>, message: impl Into<String>) -> Self {
        let (s, t) = penalty_objectives();
        Evaluation {
            s,
            t,
            verdict: VerdictSummary {
                kind: kind.into(),
                message: message.into(),
            },
            wall_clock_secs: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateKtm {
    pub id: String,
    /// Creation order; also the last tie-breaker in removal.
    pub serial: u64,
    pub snippet: SnippetSpec,
    #[serde(with = "super::floats")]
    pub s: f64,
    #[serde(with = "super::floats")]
    pub t: f64,
    pub verdict: VerdictSummary,
    pub front_rank: usize,
    #[serde(with = "super::floats")]
    pub crowding: f64,
    pub birth_gen: usize,
    pub lineage: Lineage,
}

impl CandidateKtm {
    pub fn new(serial: u64, snippet: SnippetSpec, eval: &Evaluation, birth_gen: usize, lineage: Lineage) -> Self {
        CandidateKtm {
            id: format!("k{serial:04}"),
            serial,
            snippet,
            s: eval.s,
            t: eval.t,
            verdict: eval.verdict.clone(),
            front_rank: 0,
            crowding: 0.0,
            birth_gen,
            lineage,
        }
    }

    pub fn objectives(&self) -> (f64, f64) {
        (self.s, self.t)
    }

    pub fn is_valid(&self) -> bool {
        self.verdict.is_ok()
    }
}
