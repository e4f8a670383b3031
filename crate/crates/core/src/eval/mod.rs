//! Evaluation harness: synthetic data, oracles, metrics, sweeps and reports.

pub mod data;
pub mod gate_stats;
pub mod latency;
pub mod metrics;
pub mod oracle;
pub mod sweep;
pub mod synth;

pub use data::{GoldSet, QueryRecord};
pub use gate_stats::{gate_stats, GateStats};
pub use latency::{latency_report, LatencyReport};
pub use metrics::{evaluate, recall_at_k, EvalReport};
pub use oracle::oracle_top_k;
pub use sweep::{sweep, SweepGrid, SweepRow};
pub use synth::{generate, SyntheticData, SyntheticSpec};
