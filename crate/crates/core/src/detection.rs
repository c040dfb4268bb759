//! Greedy module detection.
//!
//! A [`Detector`] holds the evolving state of one run (remaining pool, pivot
//! weights or selection history) and exposes one greedy step at a time, so
//! the exhaustive oracle can replay arbitrary inclusion orders through the
//! same code path as [`detect`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chains::MaterializedChain;
use crate::error::{Error, Result};
use crate::scoring::{kl_divergence, score_cpe, score_cpi, CandidateScore, PivotState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Cpe,
    Cpi,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cpe" => Ok(Regime::Cpe),
            "cpi" => Ok(Regime::Cpi),
            _ => Err(Error::InvalidParameter(format!("unknown regime `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combination {
    Single,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub regime: Regime,
    pub k: usize,
    pub alpha: f64,
    pub q: usize,
    pub beta: f64,
    pub combination: Combination,
    #[serde(default)]
    pub semantics: Vec<String>,
}

impl DetectionConfig {
    pub fn new(regime: Regime, k: usize) -> Self {
        Self {
            regime,
            k,
            alpha: 0.5,
            q: 5,
            beta: 0.05,
            combination: Combination::Single,
            semantics: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be >= 1".into()));
        }
        Ok(())
    }
}

/// One candidate-by-context matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Semantic {
    pub label: String,
    pub values: DMatrix<f64>,
}

impl From<MaterializedChain> for Semantic {
    fn from(m: MaterializedChain) -> Self {
        Self {
            label: m.semantic_label,
            values: m.values,
        }
    }
}

/// Semantics over a shared candidate index space.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticsEnsemble {
    semantics: Vec<Semantic>,
}

impl SemanticsEnsemble {
    pub fn new(semantics: Vec<Semantic>) -> Result<Self> {
        let first = semantics
            .first()
            .ok_or_else(|| Error::InvalidParameter("at least one semantic is required".into()))?;
        let n = first.values.nrows();
        if let Some(s) = semantics.iter().find(|s| s.values.nrows() != n) {
            return Err(Error::InvalidParameter(format!(
                "semantic `{}` has {} candidate rows, expected {n}",
                s.label,
                s.values.nrows()
            )));
        }
        Ok(Self { semantics })
    }

    pub fn single(label: impl Into<String>, values: DMatrix<f64>) -> Self {
        Self {
            semantics: vec![Semantic {
                label: label.into(),
                values,
            }],
        }
    }

    pub fn semantics(&self) -> &[Semantic] {
        &self.semantics
    }

    pub fn len(&self) -> usize {
        self.semantics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.semantics.is_empty()
    }

    pub fn n_candidates(&self) -> usize {
        self.semantics[0].values.nrows()
    }

    pub fn labels(&self) -> Vec<String> {
        self.semantics.iter().map(|s| s.label.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub candidate: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// 1-based inclusion iteration.
    pub iteration: usize,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_semantic: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Module {
    pub regime: Regime,
    pub k: usize,
    pub members: Vec<Member>,
    pub semantic_labels: Vec<String>,
    /// Semantic weights in force at each iteration.
    pub weights: Vec<Vec<f64>>,
    pub config: DetectionConfig,
}

impl Module {
    pub fn candidates(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.candidate).collect()
    }

    /// `Σ −ln p` over inclusion steps.
    pub fn valuation(&self) -> f64 {
        valuation(self.members.iter().map(|m| m.p_value))
    }
}

pub fn valuation(p_values: impl IntoIterator<Item = f64>) -> f64 {
    p_values
        .into_iter()
        .map(|p| -p.max(f64::MIN_POSITIVE).ln())
        .sum()
}

/// `1 − Σ_{t=1..r} β^t · exp(−KL(C_i, C_{x_{t−1}}))`, floored at 0.
pub fn visibility_decay(i: usize, history: &[usize], beta: f64, c: &DMatrix<f64>) -> Result<f64> {
    let row_i: Vec<f64> = c.row(i).iter().copied().collect();
    let mut sum = 0.0;
    let mut bt = 1.0;
    for &x in history {
        bt *= beta;
        let row_x: Vec<f64> = c.row(x).iter().copied().collect();
        sum += bt * (-kl_divergence(&row_i, &row_x)?).exp();
    }
    Ok((1.0 - sum).max(0.0))
}

/// Weighted arithmetic mean of per-semantic p values, candidate by candidate.
pub fn combine(per_semantic: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = per_semantic.first().map_or(0, Vec::len);
    (0..n)
        .map(|j| {
            per_semantic
                .iter()
                .zip(weights)
                .map(|(p, w)| w * p[j])
                .sum()
        })
        .collect()
}

fn uniform(d: usize) -> Vec<f64> {
    vec![1.0 / d as f64; d]
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    if s > 0.0 && s.is_finite() {
        raw.into_iter().map(|w| w / s).collect()
    } else {
        uniform(raw.len())
    }
}

/// 1-based rank of `target` among `scores` (ascending p, ties to the lower
/// candidate index).
fn rank_of(target: usize, scores: &[CandidateScore]) -> usize {
    let t = scores
        .iter()
        .find(|s| s.candidate == target)
        .expect("target scored");
    1 + scores
        .iter()
        .filter(|s| s.p_value < t.p_value || (s.p_value == t.p_value && s.candidate < t.candidate))
        .count()
}

/// Mean reciprocal rank of each original pivot when it is held out of the
/// pivot set and scored alongside the remaining pool.
pub fn pivot_mrr(c: &DMatrix<f64>, pivots: &PivotState, q: usize) -> Result<f64> {
    let orig = pivots.original();
    let mut total = 0.0;
    for &held in orig {
        let rest: Vec<usize> = orig.iter().copied().filter(|&p| p != held).collect();
        let mut state = PivotState::new(rest, pivots.alpha())?;
        for &(i, r) in pivots.accreted() {
            state.accrete(i, r)?;
        }
        let pool: Vec<usize> = (0..c.nrows()).filter(|&i| !state.contains(i)).collect();
        let scores = score_cpe(c, &state, &pool, q)?;
        total += 1.0 / rank_of(held, &scores) as f64;
    }
    Ok(total / orig.len() as f64)
}

/// Concentration weights: proportional to leave-one-pivot-out MRR.
pub fn cpe_weights(ens: &SemanticsEnsemble, pivots: &PivotState, q: usize) -> Result<Vec<f64>> {
    let d = ens.len();
    if d == 1 {
        return Ok(vec![1.0]);
    }
    if pivots.original().len() < 2 {
        tracing::info!("fewer than two pivots; using uniform semantic weights");
        return Ok(uniform(d));
    }
    let raw = ens
        .semantics()
        .iter()
        .map(|s| pivot_mrr(&s.values, pivots, q.min(s.values.ncols())))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalized(raw))
}

/// Mean KL divergence over ordered pairs of distinct pivot column profiles.
pub fn pivot_dispersion(c: &DMatrix<f64>, pivots: &[usize]) -> Result<f64> {
    let cols: Vec<Vec<f64>> = pivots
        .iter()
        .map(|&s| c.column(s).iter().copied().collect())
        .collect();
    let mut sum = 0.0;
    let mut n = 0usize;
    for (a, ca) in cols.iter().enumerate() {
        for (b, cb) in cols.iter().enumerate() {
            if a != b {
                sum += kl_divergence(ca, cb)?;
                n += 1;
            }
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Visibility weights: proportional to `exp(−pivot_dispersion)`.
pub fn cpi_weights(ens: &SemanticsEnsemble, pivots: &[usize]) -> Result<Vec<f64>> {
    let d = ens.len();
    if d == 1 {
        return Ok(vec![1.0]);
    }
    if pivots.len() < 2 {
        tracing::info!("fewer than two pivots; using uniform semantic weights");
        return Ok(uniform(d));
    }
    let raw = ens
        .semantics()
        .iter()
        .map(|s| pivot_dispersion(&s.values, pivots).map(|k| (-k).exp()))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalized(raw))
}

pub fn combine_scores_cpe(
    per_semantic: &[Vec<f64>],
    ens: &SemanticsEnsemble,
    pivots: &PivotState,
    q: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = cpe_weights(ens, pivots, q)?;
    Ok((combine(per_semantic, &w), w))
}

pub fn combine_scores_cpi(
    per_semantic: &[Vec<f64>],
    ens: &SemanticsEnsemble,
    pivots: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = cpi_weights(ens, pivots)?;
    Ok((combine(per_semantic, &w), w))
}

/// Scores of the remaining pool at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepScores {
    pub candidates: Vec<usize>,
    pub weights: Vec<f64>,
    /// `per_semantic[d][j]` scores `candidates[j]` under semantic `d`.
    pub per_semantic: Vec<Vec<CandidateScore>>,
    pub combined: Vec<f64>,
}

impl StepScores {
    /// Position in `candidates` of the lowest combined score, ties to the
    /// lower candidate index.
    pub fn argmin(&self) -> Option<usize> {
        (0..self.candidates.len()).min_by(|&a, &b| {
            self.combined[a]
                .total_cmp(&self.combined[b])
                .then(self.candidates[a].cmp(&self.candidates[b]))
        })
    }

    pub fn position(&self, candidate: usize) -> Option<usize> {
        self.candidates.iter().position(|&c| c == candidate)
    }
}

#[derive(Debug, Clone)]
enum State {
    Cpe(PivotState),
    Cpi {
        pivots: Vec<usize>,
        history: Vec<usize>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Detector<'a> {
    ens: &'a SemanticsEnsemble,
    config: DetectionConfig,
    state: State,
    pool: Vec<usize>,
    iteration: usize,
}

impl<'a> Detector<'a> {
    /// `pivots` index candidate rows for CPE and context columns for CPI.
    pub fn new(
        ens: &'a SemanticsEnsemble,
        pivots: &[usize],
        config: &DetectionConfig,
    ) -> Result<Self> {
        config.validate()?;
        if config.combination == Combination::Single && ens.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "single-semantic detection given {} semantics",
                ens.len()
            )));
        }
        let n = ens.n_candidates();
        let (state, pool) = match config.regime {
            Regime::Cpe => {
                let state = PivotState::new(pivots.to_vec(), config.alpha)?;
                if let Some(&p) = pivots.iter().find(|&&p| p >= n) {
                    return Err(Error::InvalidParameter(format!(
                        "pivot row {p} out of range for {n} candidates"
                    )));
                }
                for s in ens.semantics() {
                    if config.q > s.values.ncols() {
                        return Err(Error::InvalidParameter(format!(
                            "q = {} exceeds the {} columns of `{}`",
                            config.q,
                            s.values.ncols(),
                            s.label
                        )));
                    }
                }
                let pool = (0..n).filter(|i| !state.contains(*i)).collect();
                (State::Cpe(state), pool)
            }
            Regime::Cpi => {
                PivotState::new(pivots.to_vec(), 0.0)?;
                for s in ens.semantics() {
                    if let Some(&p) = pivots.iter().find(|&&p| p >= s.values.ncols()) {
                        return Err(Error::InvalidParameter(format!(
                            "pivot column {p} out of range for `{}`",
                            s.label
                        )));
                    }
                }
                let weights = cpi_weights(ens, pivots)?;
                let state = State::Cpi {
                    pivots: pivots.to_vec(),
                    history: Vec::new(),
                    weights,
                };
                (state, (0..n).collect())
            }
        };
        Ok(Self {
            ens,
            config: config.clone(),
            state,
            pool,
            iteration: 0,
        })
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn pivot_state(&self) -> Option<&PivotState> {
        match &self.state {
            State::Cpe(p) => Some(p),
            State::Cpi { .. } => None,
        }
    }

    pub fn history(&self) -> &[usize] {
        match &self.state {
            State::Cpe(_) => &[],
            State::Cpi { history, .. } => history,
        }
    }

    pub fn scores(&self) -> Result<StepScores> {
        if self.pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let (weights, per_semantic) = match &self.state {
            State::Cpe(pivots) => {
                let per = self
                    .ens
                    .semantics()
                    .iter()
                    .map(|s| score_cpe(&s.values, pivots, &self.pool, self.config.q))
                    .collect::<Result<Vec<_>>>()?;
                (cpe_weights(self.ens, pivots, self.config.q)?, per)
            }
            State::Cpi {
                pivots,
                history,
                weights,
            } => {
                let per = self
                    .ens
                    .semantics()
                    .iter()
                    .map(|s| {
                        let jobs = self
                            .pool
                            .iter()
                            .map(|&i| {
                                visibility_decay(i, history, self.config.beta, &s.values)
                                    .map(|d| (i, d))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        score_cpi(&s.values, pivots, &jobs)
                    })
                    .collect::<Result<Vec<_>>>()?;
                (weights.clone(), per)
            }
        };
        let p: Vec<Vec<f64>> = per_semantic
            .iter()
            .map(|v| v.iter().map(|s| s.p_value).collect())
            .collect();
        Ok(StepScores {
            candidates: self.pool.clone(),
            combined: combine(&p, &weights),
            weights,
            per_semantic,
        })
    }

    /// Adds `candidate` to the module using the given step's scores.
    pub fn include(&mut self, candidate: usize, scores: &StepScores) -> Result<Member> {
        let j = scores.position(candidate).ok_or_else(|| {
            Error::InvalidParameter(format!("candidate {candidate} is not in the pool"))
        })?;
        self.iteration += 1;
        match &mut self.state {
            State::Cpe(p) => p.accrete(candidate, self.iteration)?,
            State::Cpi { history, .. } => history.push(candidate),
        }
        self.pool.retain(|&c| c != candidate);
        Ok(Member {
            candidate,
            label: None,
            iteration: self.iteration,
            p_value: scores.combined[j],
            per_semantic: (self.ens.len() > 1)
                .then(|| scores.per_semantic.iter().map(|v| v[j].p_value).collect()),
        })
    }
}

/// Greedy detection of a module of size `min(k, pool)`.
pub fn detect(
    ens: &SemanticsEnsemble,
    pivots: &[usize],
    config: &DetectionConfig,
) -> Result<Module> {
    let mut det = Detector::new(ens, pivots, config)?;
    let mut module = Module {
        regime: config.regime,
        k: config.k,
        members: Vec::new(),
        semantic_labels: ens.labels(),
        weights: Vec::new(),
        config: config.clone(),
    };
    if config.k == 0 {
        return Ok(module);
    }
    if det.pool().is_empty() {
        return Err(Error::EmptyPool);
    }
    while module.members.len() < config.k && !det.pool().is_empty() {
        let scores = det.scores()?;
        let best = scores.argmin().expect("non-empty pool");
        let member = det.include(scores.candidates[best], &scores)?;
        tracing::debug!(candidate = member.candidate, p = member.p_value, "included");
        module.weights.push(scores.weights);
        module.members.push(member);
    }
    Ok(module)
}

pub fn detect_cpe(
    ens: &SemanticsEnsemble,
    pivots: &[usize],
    config: &DetectionConfig,
) -> Result<Module> {
    let config = DetectionConfig {
        regime: Regime::Cpe,
        ..config.clone()
    };
    detect(ens, pivots, &config)
}

pub fn detect_cpi(
    ens: &SemanticsEnsemble,
    pivots: &[usize],
    config: &DetectionConfig,
) -> Result<Module> {
    let config = DetectionConfig {
        regime: Regime::Cpi,
        ..config.clone()
    };
    detect(ens, pivots, &config)
}
