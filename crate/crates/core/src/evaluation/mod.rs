//! Repeated cross-validation protocol and its statistics.

mod metrics;
mod protocol;
mod ranks;
mod wilcoxon;

pub use metrics::{bias_variance, error_rate, macro_f1, mean_variance, BiasVarianceReport};
pub use protocol::{
    run_protocol, BiasVarianceSummary, Comparison, DatasetReport, ExperimentReport, MethodResult, MethodSpec,
    Outcome, ProtocolConfig, RankEntry, Tally,
};
pub use ranks::{average_ranks, midranks};
pub use wilcoxon::{exact_p_value, wilcoxon_signed_rank, Verdict, WilcoxonResult, EXACT_LIMIT, MIN_PAIRS};
