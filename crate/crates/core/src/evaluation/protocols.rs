use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{auprc, auroc, RankingMetrics};
use crate::chains::{materialize, Chain};
use crate::detection::{detect, DetectionConfig, Detector, Module, Regime, SemanticsEnsemble};
use crate::error::{Error, Result};
use crate::factorization::{factorize, select_ranks, FactorizationOptions, LatentModel};
use crate::graph::FusionGraph;
use crate::par;

/// How to turn a fusion graph into an ensemble of chain matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub rank_fraction: f64,
    pub factorization: FactorizationOptions,
    pub chains: Vec<String>,
}

pub fn fit_ensemble(
    graph: &FusionGraph,
    cfg: &PipelineConfig,
) -> Result<(LatentModel, SemanticsEnsemble)> {
    let ranks = select_ranks(graph, cfg.rank_fraction)?;
    let model = factorize(graph, &ranks, &cfg.factorization)?;
    let ens = ensemble_from_model(&model, &cfg.chains)?;
    Ok((model, ens))
}

pub fn ensemble_from_model(model: &LatentModel, chains: &[String]) -> Result<SemanticsEnsemble> {
    let topo = model.topology();
    let parsed = chains
        .iter()
        .map(|s| Chain::parse(s, &topo))
        .collect::<Result<Vec<_>>>()?;
    let mats = par::map(&parsed, |c| materialize(model, c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    SemanticsEnsemble::new(mats.into_iter().map(Into::into).collect())
}

/// A known association set: `positives` are candidate rows; CPI runs score
/// them against `context_pivots` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub name: String,
    pub positives: Vec<usize>,
    #[serde(default)]
    pub context_pivots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub name: String,
    pub metrics: Option<RankingMetrics>,
}

fn pivots_for<'a>(case: &'a Case, rest: &'a [usize], regime: Regime) -> Result<&'a [usize]> {
    match regime {
        Regime::Cpe => Ok(rest),
        Regime::Cpi if case.context_pivots.is_empty() => Err(Error::InvalidParameter(format!(
            "case `{}` needs context pivots for the visibility regime",
            case.name
        ))),
        Regime::Cpi => Ok(&case.context_pivots),
    }
}

/// Leave-one-positive-out folds of a single case with size-1 module
/// probabilities. Each fold ranks the held-out positive (first entry)
/// against every non-positive. `None` when the case has fewer than two
/// positives.
/// Scores of one held-out positive followed by every non-positive.
pub type Fold = Vec<(f64, bool)>;

pub fn loocv_folds(
    ens: &SemanticsEnsemble,
    case: &Case,
    config: &DetectionConfig,
) -> Result<Option<Vec<Fold>>> {
    if case.positives.len() < 2 {
        tracing::warn!(case = %case.name, "fewer than two positives; skipped");
        return Ok(None);
    }
    let n = ens.n_candidates();
    if let Some(&p) = case.positives.iter().find(|&&p| p >= n) {
        return Err(Error::InvalidParameter(format!(
            "case `{}`: positive {p} out of range for {n} candidates",
            case.name
        )));
    }
    let negatives: Vec<usize> = (0..n).filter(|i| !case.positives.contains(i)).collect();
    if negatives.is_empty() {
        return Err(Error::DegenerateClasses {
            n_pos: case.positives.len(),
            n_neg: 0,
        });
    }
    let cfg = DetectionConfig {
        k: 1,
        ..config.clone()
    };
    let mut folds = Vec::with_capacity(case.positives.len());
    for &held in &case.positives {
        let rest: Vec<usize> = case
            .positives
            .iter()
            .copied()
            .filter(|&p| p != held)
            .collect();
        let det = Detector::new(ens, pivots_for(case, &rest, cfg.regime)?, &cfg)?;
        let s = det.scores()?;
        let score = |i: usize| s.combined[s.position(i).expect("candidate in pool")];
        folds.push(
            std::iter::once((score(held), true))
                .chain(negatives.iter().map(|&i| (score(i), false)))
                .collect(),
        );
    }
    Ok(Some(folds))
}

/// Fold-averaged metrics of [`loocv_folds`].
pub fn loocv_case(
    ens: &SemanticsEnsemble,
    case: &Case,
    config: &DetectionConfig,
) -> Result<Option<RankingMetrics>> {
    let Some(folds) = loocv_folds(ens, case, config)? else {
        return Ok(None);
    };
    let (mut roc, mut pr) = (0.0, 0.0);
    for fold in &folds {
        roc += auroc(fold)?;
        pr += auprc(fold)?;
    }
    let n = folds.len() as f64;
    Ok(Some(RankingMetrics {
        auroc: roc / n,
        auprc: pr / n,
        n_pos: case.positives.len(),
        n_neg: folds[0].len() - 1,
    }))
}

pub fn loocv_association(
    ens: &SemanticsEnsemble,
    cases: &[Case],
    config: &DetectionConfig,
) -> Result<Vec<CaseResult>> {
    par::map(cases, |c| {
        loocv_case(ens, c, config).map(|metrics| CaseResult {
            name: c.name.clone(),
            metrics,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub case: String,
    pub removal_fraction: f64,
    pub seed: u64,
    pub held_out: Vec<usize>,
    pub pivots: Vec<usize>,
    pub recall_at_k: f64,
    pub module: Module,
}

/// Removes `⌊fraction · |positives|⌋` positives at random, detects a module
/// of the full case size from the rest and reports recall of the removed
/// members. `None` when nothing would be removed.
pub fn module_recovery(
    ens: &SemanticsEnsemble,
    case: &Case,
    fraction: f64,
    config: &DetectionConfig,
    seed: u64,
) -> Result<Option<RecoveryReport>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "removal fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let size = case.positives.len();
    if size < 4 {
        return Err(Error::InvalidParameter(format!(
            "case `{}` has {size} members; recovery needs at least 4",
            case.name
        )));
    }
    let n_remove = (fraction * size as f64).floor() as usize;
    if n_remove == 0 {
        tracing::warn!(case = %case.name, fraction, "no members removed; skipped");
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut removed: Vec<usize> = sample(&mut rng, size, n_remove)
        .into_iter()
        .map(|j| case.positives[j])
        .collect();
    removed.sort_unstable();
    let rest: Vec<usize> = case
        .positives
        .iter()
        .copied()
        .filter(|p| !removed.contains(p))
        .collect();
    let cfg = DetectionConfig {
        k: size,
        ..config.clone()
    };
    let pivots = pivots_for(case, &rest, cfg.regime)?.to_vec();
    let module = detect(ens, &pivots, &cfg)?;
    let found = module
        .members
        .iter()
        .filter(|m| removed.contains(&m.candidate))
        .count();
    Ok(Some(RecoveryReport {
        case: case.name.clone(),
        removal_fraction: fraction,
        seed,
        recall_at_k: found as f64 / removed.len() as f64,
        held_out: removed,
        pivots,
        module,
    }))
}

/// Candidate values for the detection parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub q: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            alpha: vec![0.25, 0.5, 0.75],
            beta: vec![0.01, 0.05, 0.1],
            q: vec![5, 10, 20],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub config: DetectionConfig,
    pub mean_recall: f64,
}

/// Scores each grid point by mean recovery recall over `cases` and `seeds`
/// at `fraction`. CPE varies `alpha` and `q`; CPI varies `beta`. Values of
/// `q` wider than the narrowest semantic are skipped. Sorted best first,
/// ties kept in grid order.
pub fn grid_search(
    ens: &SemanticsEnsemble,
    cases: &[Case],
    base: &DetectionConfig,
    grid: &Grid,
    fraction: f64,
    seeds: &[u64],
) -> Result<Vec<GridPoint>> {
    let max_q = ens
        .semantics()
        .iter()
        .map(|s| s.values.ncols())
        .min()
        .unwrap_or(0);
    let configs: Vec<DetectionConfig> = match base.regime {
        Regime::Cpe => grid
            .alpha
            .iter()
            .flat_map(|&alpha| {
                grid.q
                    .iter()
                    .filter(|&&q| q <= max_q)
                    .map(move |&q| DetectionConfig {
                        alpha,
                        q,
                        ..base.clone()
                    })
            })
            .collect(),
        Regime::Cpi => grid
            .beta
            .iter()
            .map(|&beta| DetectionConfig {
                beta,
                ..base.clone()
            })
            .collect(),
    };
    if configs.is_empty() {
        return Err(Error::InvalidParameter(
            "grid has no admissible points".into(),
        ));
    }
    let mut points = Vec::with_capacity(configs.len());
    for config in configs {
        let mut sum = 0.0;
        let mut n = 0usize;
        for case in cases {
            for &seed in seeds {
                if let Some(r) = module_recovery(ens, case, fraction, &config, seed)? {
                    sum += r.recall_at_k;
                    n += 1;
                }
            }
        }
        let mean_recall = if n == 0 { f64::NAN } else { sum / n as f64 };
        points.push(GridPoint {
            config,
            mean_recall,
        });
    }
    points.sort_by(|a, b| b.mean_recall.total_cmp(&a.mean_recall));
    Ok(points)
}
