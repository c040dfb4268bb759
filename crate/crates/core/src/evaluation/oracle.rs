use crate::detection::{valuation, DetectionConfig, Detector, SemanticsEnsemble};
use crate::error::{Error, Result};

pub const MAX_ORACLE_POOL: usize = 12;
pub const MAX_ORACLE_K: usize = 3;

/// Exhaustive search over ordered size-`k` subsets of the candidate pool.
///
/// Each order is replayed through a [`Detector`] so pivot weights or
/// visibility history evolve exactly as they would under greedy selection.
/// Returns the best order and its valuation `Σ −ln p`; among equal
/// valuations the first order in lexicographic candidate order wins.
pub fn brute_force_best_module(
    ens: &SemanticsEnsemble,
    pivots: &[usize],
    config: &DetectionConfig,
) -> Result<(Vec<usize>, f64)> {
    let det = Detector::new(ens, pivots, config)?;
    let pool = det.pool().len();
    if pool > MAX_ORACLE_POOL || config.k > MAX_ORACLE_K {
        return Err(Error::TooLarge(format!(
            "exhaustive search limited to {MAX_ORACLE_POOL} candidates and k <= {MAX_ORACLE_K}, got {pool} and {}",
            config.k
        )));
    }
    let k = config.k.min(pool);
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    search(det, k, &mut Vec::new(), &mut Vec::new(), &mut best)?;
    if k == 0 {
        best.1 = 0.0;
    }
    Ok(best)
}

fn search(
    det: Detector<'_>,
    k: usize,
    order: &mut Vec<usize>,
    ps: &mut Vec<f64>,
    best: &mut (Vec<usize>, f64),
) -> Result<()> {
    if order.len() == k {
        let v = valuation(ps.iter().copied());
        if v > best.1 {
            *best = (order.clone(), v);
        }
        return Ok(());
    }
    let scores = det.scores()?;
    for &c in &scores.candidates {
        let mut next = det.clone();
        let m = next.include(c, &scores)?;
        order.push(c);
        ps.push(m.p_value);
        search(next, k, order, ps, best)?;
        order.pop();
        ps.pop();
    }
    Ok(())
}

/// Valuation of an unordered set: its members are included greedily, each
/// step taking the lowest p among the members not yet included.
pub fn set_valuation(
    ens: &SemanticsEnsemble,
    pivots: &[usize],
    config: &DetectionConfig,
    set: &[usize],
) -> Result<f64> {
    let mut det = Detector::new(ens, pivots, config)?;
    let mut left: Vec<usize> = set.to_vec();
    let mut ps = Vec::with_capacity(set.len());
    while !left.is_empty() {
        let scores = det.scores()?;
        let best = left
            .iter()
            .map(|&c| {
                let j = scores.position(c).ok_or_else(|| {
                    Error::InvalidParameter(format!("candidate {c} is not in the pool"))
                })?;
                Ok((scores.combined[j], c))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("non-empty");
        ps.push(det.include(best.1, &scores)?.p_value);
        left.retain(|&c| c != best.1);
    }
    Ok(valuation(ps))
}
