//! Ranking metrics, synthetic data with planted modules, the exhaustive
//! oracle and the association / recovery protocols.

mod metrics;
mod oracle;
mod protocols;
mod synthetic;

pub use metrics::{auprc, auroc, pr_points, ranking_metrics, roc_points, RankingMetrics};
pub use oracle::{brute_force_best_module, set_valuation, MAX_ORACLE_K, MAX_ORACLE_POOL};
pub use protocols::{
    ensemble_from_model, fit_ensemble, grid_search, loocv_association, loocv_case, loocv_folds,
    module_recovery, Case, CaseResult, Grid, GridPoint, PipelineConfig, RecoveryReport,
};
pub use synthetic::{
    generate_synthetic, PlantedTruth, SyntheticSpec, CHEMICAL, DISEASE, EDGES, GENE, TERM, TISSUE,
};
