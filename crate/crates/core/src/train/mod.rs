//! Optimizer, training loop, gradient checks and the ablation runner.

mod ablation;
mod adam;
mod fit;
mod gradcheck;

pub use ablation::{ablation_csv, run_ablation, write_ablation_csv, AblationRow, ABLATION_VARIANTS};
pub use adam::{AdamConfig, AdamState};
pub use fit::{evaluate, fit, train, write_metric_csv, Evaluation, MetricRow, TrainConfig, TrainOutcome};
pub use gradcheck::{
    describe, grad_check, grad_check_sweep, sweep_configs, tiny_config, BlockReport, BlockStatus,
    GradCheckReport, GRADCHECK_BUCKETS, GRADCHECK_DIM, GRADCHECK_FIELDS, GRADCHECK_FLOOR,
    GRADCHECK_HIDDEN, GRADCHECK_ROWS, GRADCHECK_STEP, GRADCHECK_TOLERANCE,
};
