//! Metrics, latency benchmarking and hidden-size sweeps.

mod bench;
mod metrics;
mod sweep;

pub use bench::{
    bench_csv, bench_latency, bench_models, hardware_descriptor, BenchConfig, BenchReport, Precision, BENCH_CSV_HEADER,
};
pub use metrics::{
    accuracy, class_counts, gold_classes, gold_multi_hot, macro_f1, micro_f1, primary_metric, threshold_predictions,
    ClassScore, Counts, MetricReport, DEFAULT_THRESHOLD,
};
pub use sweep::{mean_std, sweep_csv, sweep_hidden_sizes, SweepRow, SWEEP_CSV_HEADER};
