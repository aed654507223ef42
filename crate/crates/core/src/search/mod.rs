//! Multi-objective evolutionary search over transfer-model snippets.

mod archive;
mod candidate;
mod evaluate;
mod events;
mod floats;
mod pareto;
mod run;
mod select;

pub use archive::ParetoArchive;
pub use candidate::{CandidateKtm, Evaluation, Lineage, Operator, VerdictSummary};
pub use evaluate::{CandidateEvaluator, EmtoEvaluator, FnEvaluator};
pub use events::{comparable_lines, read_events, Event, EventBody, EventLog, PopulationEntry};
pub use pareto::{crowding_distance, dominates, fast_nondominated_sort, Dominance};
pub use run::{
    checkpoint_path, latest_checkpoint, run_search, GenerationSummary, SearchConfig, SearchOptions, SearchOutcome,
    SearchState, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use select::{assign_ranks, dynamic_parent_count, rank_weights, remove_worst, roulette_select};
