//! Seeded generators: simulated telemetry with ground-truth anomalies and
//! the Monte Carlo calibration, power, and FDR studies.

mod studies;
mod telemetry;

pub use studies::{
    fdr_null_study, level_study, power_study, roc_auc, union_bound_study, FdrReplication,
    FdrStudyResult, LevelEstimate, PowerStudyResult, RocCurve, RocPoint, StudyConfig,
    StudyDistribution, ROC_GRID,
};
pub use telemetry::{
    daily_bump, default_anomalies, generate_telemetry, AnomalyKind, AnomalySpec,
    TelemetryConfig, DEFAULT_WINDOW_START, LOCAL_WINDOW_FRAC, NOISE_WINDOW_START,
    SPIKE_WINDOW_START,
};
