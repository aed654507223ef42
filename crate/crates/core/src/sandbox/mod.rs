//! Host side of sandboxed snippet execution: one child process per
//! transfer invocation, a line-framed JSON protocol over stdio, hard
//! timeouts, and a token screen that runs before anything executes.

mod exec;
pub mod protocol;
pub mod replay;
mod screen;
mod snippet;

use rand::RngCore;

pub use exec::{
    execute_transfer, live_children, penalty_objectives, SandboxConfig, SandboxVerdict, SOURCE_PLACEHOLDER,
};
pub use screen::{static_screen, ScreenOutcome};
pub use snippet::{content_id, definition_count, extract_annotation, SnippetSpec, FUNCTION_NAME};

use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::transfer::{TransferFailure, TransferModel, TransferResult, TransferSnapshot};

/// A snippet bound to a sandbox config, usable wherever a baseline is.
///
/// Each transfer event draws one `u64` from the run's transfer stream and
/// passes it to the snippet as its seed.
#[derive(Clone, Debug)]
pub struct SandboxedSnippet {
    pub snippet: SnippetSpec,
    pub config: SandboxConfig,
}

impl SandboxedSnippet {
    pub fn new(snippet: SnippetSpec, config: SandboxConfig) -> Self {
        SandboxedSnippet { snippet, config }
    }
}

impl<T: Scalar> TransferModel<T> for SandboxedSnippet {
    fn name(&self) -> &str {
        &self.snippet.id
    }

    fn transfer(
        &self,
        snapshot: &TransferSnapshot<T>,
        rng: &mut Rng,
    ) -> Result<TransferResult<T>, TransferFailure> {
        let seed = rng.next_u64();
        let wire = snapshot.map_scalar::<f64>();
        match execute_transfer(&self.snippet, &wire, seed, &self.config) {
            Ok(SandboxVerdict::Ok { result, .. }) => Ok(TransferResult {
                transfers: result
                    .transfers
                    .into_iter()
                    .map(|rows| {
                        rows.into_iter()
                            .map(|r| r.into_iter().map(T::lit).collect())
                            .collect()
                    })
                    .collect(),
                work_units: result.work_units,
                clipped: result.clipped,
                warning: result.warning,
            }),
            Ok(verdict) => Err(TransferFailure {
                kind: verdict.kind().to_string(),
                message: verdict.message(),
            }),
            Err(e) => Err(TransferFailure {
                kind: "configuration".to_string(),
                message: e.to_string(),
            }),
        }
    }
}
