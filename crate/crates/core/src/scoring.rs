//! Significance scores for candidates against a pivot set.
//!
//! Both regimes share one density shape, a ratio of real-line binomials
//! `gbin(n1, c) · gbin(n2, t − c) / gbin(n1 + n2, t)`, evaluated in log space.
//! Concentration (CPE) pivots are rows of the chain matrix; visibility (CPI)
//! pivots are its columns.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub const SIMPSON_PANELS: usize = 256;
pub const KL_EPSILON: f64 = 1e-12;

/// `ln Γ(n+1) − ln Γ(k+1) − ln Γ(n−k+1)`, or `None` when any gamma argument
/// is not strictly positive.
pub fn log_gbin(n: f64, k: f64) -> Option<f64> {
    let (a, b, c) = (n + 1.0, k + 1.0, n - k + 1.0);
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return None;
    }
    Some(libm::lgamma(a) - libm::lgamma(b) - libm::lgamma(c))
}

/// Binomial coefficient extended to real arguments. Out-of-domain arguments
/// give 0.
pub fn gbin(n: f64, k: f64) -> f64 {
    match log_gbin(n, k) {
        Some(l) => l.exp(),
        None => {
            tracing::debug!(n, k, "gbin argument out of domain");
            0.0
        }
    }
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
/// Signed: `simpson(f, b, a) == -simpson(f, a, b)`.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = panels.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + j as f64 * h);
    }
    acc * h / 3.0
}

/// Density `c ↦ gbin(n1, c) · gbin(n2, t − c) / gbin(n1 + n2, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbinDensity {
    pub n1: f64,
    pub n2: f64,
    pub t: f64,
}

impl GbinDensity {
    pub fn eval(&self, c: f64) -> f64 {
        let log = (|| {
            Some(
                log_gbin(self.n1, c)? + log_gbin(self.n2, self.t - c)?
                    - log_gbin(self.n1 + self.n2, self.t)?,
            )
        })();
        log.map_or(0.0, f64::exp)
    }

    /// Open interval outside which the density is identically zero.
    pub fn support(&self) -> Option<(f64, f64)> {
        log_gbin(self.n1 + self.n2, self.t)?;
        if !(self.n1 > -1.0 && self.n2 > -1.0) {
            return None;
        }
        let lo = (-1.0f64).max(self.t - self.n2 - 1.0);
        let hi = (self.n1 + 1.0).min(self.t + 1.0);
        (lo < hi).then_some((lo, hi))
    }

    /// Signed integral from `a` to `b`, evaluated over the part of the
    /// interval that meets the support.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if a > b {
            return -self.integrate(b, a);
        }
        let Some((lo, hi)) = self.support() else {
            return 0.0;
        };
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return 0.0;
        }
        simpson(|c| self.eval(c), a, b, SIMPSON_PANELS)
    }
}

/// Pivot bookkeeping: original pivots weigh 1, members accreted at
/// iteration `r` weigh `(1 − α)^r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotState {
    original: Vec<usize>,
    accreted: Vec<(usize, usize)>,
    alpha: f64,
}

impl PivotState {
    pub fn new(original: Vec<usize>, alpha: f64) -> Result<Self> {
        if original.is_empty() {
            return Err(Error::InvalidParameter("pivot set is empty".into()));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        let mut sorted = original.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate pivot index".into()));
        }
        Ok(Self {
            original,
            accreted: Vec::new(),
            alpha,
        })
    }

    pub fn accrete(&mut self, index: usize, iteration: usize) -> Result<()> {
        if self.contains(index) {
            return Err(Error::InvalidParameter(format!(
                "index {index} is already a pivot"
            )));
        }
        self.accreted.push((index, iteration));
        Ok(())
    }

    pub fn original(&self) -> &[usize] {
        &self.original
    }

    pub fn accreted(&self) -> &[(usize, usize)] {
        &self.accreted
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn contains(&self, index: usize) -> bool {
        self.original.contains(&index) || self.accreted.iter().any(|(i, _)| *i == index)
    }

    pub fn weight(&self, index: usize) -> f64 {
        if self.original.contains(&index) {
            return 1.0;
        }
        self.accreted
            .iter()
            .find(|(i, _)| *i == index)
            .map_or(0.0, |(_, r)| (1.0 - self.alpha).powi(*r as i32))
    }

    /// Every pivot with a non-zero weight.
    pub fn weighted(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.original
            .iter()
            .map(|&i| (i, 1.0))
            .chain(self.accreted.iter().map(|&(i, _)| (i, self.weight(i))))
    }

    fn check_bound(&self, bound: usize, what: &str) -> Result<()> {
        match self.weighted().map(|(i, _)| i).find(|&i| i >= bound) {
            Some(i) => Err(Error::InvalidParameter(format!(
                "pivot {i} out of range for {bound} {what}"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate: usize,
    pub p_value: f64,
    pub observed_strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_columns: Option<Vec<usize>>,
}

/// The `q` strongest columns of `row`, ties to the lower column index.
pub fn top_q(row: &[f64], q: usize) -> Result<Vec<usize>> {
    if q == 0 || q > row.len() {
        return Err(Error::InvalidParameter(format!(
            "q = {q} outside 1..={}",
            row.len()
        )));
    }
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(q);
    Ok(idx)
}

fn row_vec(c: &DMatrix<f64>, i: usize) -> Vec<f64> {
    c.row(i).iter().copied().collect()
}

fn finite_or(candidate: usize, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Integration { candidate })
    }
}

/// Per-iteration quantities for concentration scoring: the pivot-weighted
/// column mass and the total mass of the original pivots.
#[derive(Debug, Clone)]
pub struct CpeContext<'a> {
    c: &'a DMatrix<f64>,
    q: usize,
    weighted_columns: Vec<f64>,
    original_mass: f64,
}

impl<'a> CpeContext<'a> {
    pub fn new(c: &'a DMatrix<f64>, pivots: &PivotState, q: usize) -> Result<Self> {
        pivots.check_bound(c.nrows(), "rows")?;
        if q == 0 || q > c.ncols() {
            return Err(Error::InvalidParameter(format!(
                "q = {q} outside 1..={}",
                c.ncols()
            )));
        }
        let mut weighted_columns = vec![0.0; c.ncols()];
        for (p, w) in pivots.weighted() {
            for (j, v) in c.row(p).iter().enumerate() {
                weighted_columns[j] += w * v;
            }
        }
        let original_mass = pivots.original().iter().map(|&p| c.row(p).sum()).sum();
        Ok(Self {
            c,
            q,
            weighted_columns,
            original_mass,
        })
    }

    /// Density for candidate `i` over the columns `q_i`.
    pub fn density(&self, i: usize, q_i: &[usize]) -> GbinDensity {
        let a: f64 = q_i.iter().map(|&j| self.weighted_columns[j]).sum();
        GbinDensity {
            n1: a,
            n2: self.original_mass - a,
            t: self.c.row(i).sum(),
        }
    }

    /// `p = 1 − ∫_{c̃}^{|Q|} h`: the density mass at or below the observed
    /// concentration `c̃` on the candidate's top columns.
    pub fn score(&self, i: usize) -> Result<CandidateScore> {
        let row = row_vec(self.c, i);
        let q_i = top_q(&row, self.q)?;
        let observed: f64 = q_i.iter().map(|&j| row[j]).sum();
        let upper = self.density(i, &q_i).integrate(observed, q_i.len() as f64);
        let p = finite_or(i, 1.0 - upper)?.clamp(0.0, 1.0);
        Ok(CandidateScore {
            candidate: i,
            p_value: p,
            observed_strength: observed,
            top_columns: Some(q_i),
        })
    }
}

/// Concentration density of candidate `i` at `c`.
pub fn h_cpe(c: f64, mat: &DMatrix<f64>, pivots: &PivotState, q_i: &[usize], i: usize) -> f64 {
    match CpeContext::new(mat, pivots, q_i.len().clamp(1, mat.ncols())) {
        Ok(ctx) => ctx.density(i, q_i).eval(c),
        Err(_) => 0.0,
    }
}

pub fn p_cpe(
    mat: &DMatrix<f64>,
    pivots: &PivotState,
    i: usize,
    q: usize,
) -> Result<CandidateScore> {
    CpeContext::new(mat, pivots, q)?.score(i)
}

/// Scores every candidate in order.
pub fn score_cpe(
    mat: &DMatrix<f64>,
    pivots: &PivotState,
    candidates: &[usize],
    q: usize,
) -> Result<Vec<CandidateScore>> {
    let ctx = CpeContext::new(mat, pivots, q)?;
    par::map(candidates, |&i| ctx.score(i))
        .into_iter()
        .collect()
}

/// Quantities for visibility scoring against fixed pivot columns.
#[derive(Debug, Clone)]
pub struct CpiContext<'a> {
    c: &'a DMatrix<f64>,
    pivots: Vec<usize>,
    pivot_mass: f64,
    total_mass: f64,
}

impl<'a> CpiContext<'a> {
    pub fn new(c: &'a DMatrix<f64>, pivots: &[usize]) -> Result<Self> {
        PivotState::new(pivots.to_vec(), 0.0)?.check_bound(c.ncols(), "columns")?;
        let pivot_mass = pivots.iter().map(|&s| c.column(s).sum()).sum();
        Ok(Self {
            c,
            pivots: pivots.to_vec(),
            pivot_mass,
            total_mass: c.sum(),
        })
    }

    pub fn density(&self, i: usize) -> GbinDensity {
        GbinDensity {
            n1: self.pivot_mass,
            n2: self.total_mass - self.pivot_mass,
            t: self.c.row(i).sum(),
        }
    }

    /// Mass candidate `i` places on the pivot columns.
    pub fn pivot_strength(&self, i: usize) -> f64 {
        self.pivots.iter().map(|&s| self.c[(i, s)]).sum()
    }

    /// `p = ∫_{c̃}^{m} h` with `c̃ = decay · C_{i,S₀}·1` and `m` the number
    /// of columns.
    pub fn score(&self, i: usize, decay: f64) -> Result<CandidateScore> {
        if !(0.0..=1.0).contains(&decay) {
            return Err(Error::InvalidParameter(format!(
                "decay must lie in [0, 1], got {decay}"
            )));
        }
        let observed = decay * self.pivot_strength(i);
        let tail = self.density(i).integrate(observed, self.c.ncols() as f64);
        Ok(CandidateScore {
            candidate: i,
            p_value: finite_or(i, tail)?.clamp(0.0, 1.0),
            observed_strength: observed,
            top_columns: None,
        })
    }
}

/// Visibility density of candidate `i` at `c`.
pub fn h_cpi(c: f64, mat: &DMatrix<f64>, pivots: &[usize], i: usize) -> f64 {
    match CpiContext::new(mat, pivots) {
        Ok(ctx) => ctx.density(i).eval(c),
        Err(_) => 0.0,
    }
}

pub fn p_cpi(mat: &DMatrix<f64>, pivots: &[usize], i: usize, decay: f64) -> Result<CandidateScore> {
    CpiContext::new(mat, pivots)?.score(i, decay)
}

/// Scores `(candidate, decay)` pairs in order.
pub fn score_cpi(
    mat: &DMatrix<f64>,
    pivots: &[usize],
    candidates: &[(usize, f64)],
) -> Result<Vec<CandidateScore>> {
    let ctx = CpiContext::new(mat, pivots)?;
    par::map(candidates, |&(i, d)| ctx.score(i, d))
        .into_iter()
        .collect()
}

fn smooth(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameter(
            "distribution entries must be finite and non-negative".into(),
        ));
    }
    let s: f64 = v.iter().map(|x| x + KL_EPSILON).sum();
    Ok(v.iter().map(|x| (x + KL_EPSILON) / s).collect())
}

/// Kullback-Leibler divergence after epsilon smoothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidParameter(format!(
            "distribution lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let (p, q) = (smooth(p)?, smooth(q)?);
    let kl: f64 = p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum();
    Ok(kl.max(0.0))
}
