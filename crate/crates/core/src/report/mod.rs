//! Plot-ready data derived from event logs, and the method comparison table.

mod compare;
mod runs;
mod stats;
mod terms;

pub use compare::{compare_methods, table_csv, table_text, ComparisonRow, MethodCell};
pub use runs::{
    front_csv, generations_csv, report_from_events, terms_csv, write_report, FrontPoint, GenerationStats,
    GenerationTerms, RunReport,
};
pub use stats::{quantile_sorted, summarize, Quantiles};
pub use terms::{count_terms, ranked, tokenize};
