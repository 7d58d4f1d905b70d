//! Minimal end-to-end run: train the metric network at a reduced scale,
//! sweep it against the correlation baseline, and print the CSV.
//!
//! ```bash
//! cargo run --release -p elmfs-core --example quickstart
//! ```

use elmfs_core::harness::{
    report, run_sweep, train_model, ExperimentConfig, FeatureKind, ModelSet,
};
use std::time::Instant;

fn main() {
    let mut cfg = ExperimentConfig::baseline();
    cfg.n_train_samples = 5_000;
    cfg.n_hidden = 320;
    cfg.n_trials_per_snr = 2_000;

    let t0 = Instant::now();
    let model = train_model(&cfg, FeatureKind::Metric).expect("training");
    eprintln!("trained in {:.1?}", t0.elapsed());

    let t1 = Instant::now();
    let result = run_sweep(&cfg, &ModelSet::with_prop(&model)).expect("sweep");
    eprintln!("swept in {:.1?}", t1.elapsed());

    print!("{}", report::csv_string(&result));
}
