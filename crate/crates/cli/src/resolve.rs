//! Label lookups and chain/ensemble assembly shared by the commands.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use medusa_core::chains::{materialize, Chain};
use medusa_core::detection::{Combination, DetectionConfig, Regime, SemanticsEnsemble};
use medusa_core::factorization::LatentModel;
use medusa_core::graph::ObjectType;
use medusa_core::par;
use serde::Deserialize;

use crate::args::DetectOptions;

/// Non-empty lines with `#` comments stripped.
pub fn read_label_list(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

pub fn indices(t: &ObjectType, labels: &[String], what: &str) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::with_capacity(labels.len());
    let mut unknown = Vec::new();
    for l in labels {
        match t.index_of(l) {
            Some(i) => out.push(i),
            None => unknown.push(l.as_str()),
        }
    }
    if !unknown.is_empty() {
        bail!("{what}: unknown {} labels: {}", t.id(), unknown.join(", "));
    }
    Ok(out)
}

/// Parsed chains over one candidate type and one context type.
pub struct Semantics {
    pub chains: Vec<Chain>,
    pub ensemble: SemanticsEnsemble,
    pub candidate_type: String,
    pub context_type: String,
}

pub fn semantics(model: &LatentModel, opts: &DetectOptions) -> anyhow::Result<Semantics> {
    if opts.chains.len() > 1 && !opts.combine {
        bail!(
            "{} chains given; pass --combine to score them jointly",
            opts.chains.len()
        );
    }
    let topo = model.topology();
    let chains = opts
        .chains
        .iter()
        .map(|s| Chain::parse(s, &topo).with_context(|| format!("chain `{s}`")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let (src, dst) = (
        chains[0].source().to_string(),
        chains[0].target().to_string(),
    );
    if let Some(c) = chains
        .iter()
        .find(|c| c.source() != src || c.target() != dst)
    {
        bail!(
            "chain `{}` runs {}→{}, expected {src}→{dst} like the first chain",
            c.spec(),
            c.source(),
            c.target()
        );
    }
    let mats = par::map(&chains, |c| materialize(model, c))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let ensemble = SemanticsEnsemble::new(mats.into_iter().map(Into::into).collect())?;
    Ok(Semantics {
        chains,
        ensemble,
        candidate_type: src,
        context_type: dst,
    })
}

pub fn detection_config(opts: &DetectOptions, k: usize, sem: &Semantics) -> DetectionConfig {
    DetectionConfig {
        regime: opts.regime.into(),
        k,
        alpha: opts.alpha,
        q: opts.q,
        beta: opts.beta,
        combination: if opts.combine {
            Combination::Combined
        } else {
            Combination::Single
        },
        semantics: sem.chains.iter().map(Chain::spec).collect(),
    }
}

/// Pivot indices in the type the regime expects. Labels that only resolve
/// in the other chain end are reported as a type mismatch.
pub fn pivots(
    model: &LatentModel,
    sem: &Semantics,
    regime: Regime,
    labels: &[String],
) -> anyhow::Result<Vec<usize>> {
    let (want, other) = match regime {
        Regime::Cpe => (&sem.candidate_type, &sem.context_type),
        Regime::Cpi => (&sem.context_type, &sem.candidate_type),
    };
    let want_t = model.object_type(want)?;
    let missing: Vec<&String> = labels
        .iter()
        .filter(|l| want_t.index_of(l).is_none())
        .collect();
    if !missing.is_empty() && want != other {
        let other_t = model.object_type(other)?;
        if missing.iter().all(|l| other_t.index_of(l).is_some()) {
            bail!(
                "type mismatch: pivots {} are `{other}` objects, the {} regime needs `{want}` pivots",
                missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
                match regime {
                    Regime::Cpe => "cpe",
                    Regime::Cpi => "cpi",
                }
            );
        }
    }
    indices(want_t, labels, "pivots")
}

/// A case as stored on disk, by label.
#[derive(Debug, Deserialize)]
pub struct LabelCase {
    pub name: String,
    pub positives: Vec<String>,
    #[serde(default)]
    pub context_pivots: Vec<String>,
}

pub fn read_cases(
    path: &Path,
    model: &LatentModel,
    sem: &Semantics,
) -> anyhow::Result<Vec<medusa_core::evaluation::Case>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cases: Vec<LabelCase> = serde_json::from_str(&text)
        .with_context(|| format!("malformed cases file {}", path.display()))?;
    let mut names: Vec<&str> = cases.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        bail!("case name `{}` appears twice in {}", w[0], path.display());
    }
    let cand = model.object_type(&sem.candidate_type)?;
    let ctx = model.object_type(&sem.context_type)?;
    cases
        .into_iter()
        .map(|c| {
            let what = format!("case `{}`", c.name);
            Ok(medusa_core::evaluation::Case {
                positives: indices(cand, &c.positives, &what)?,
                context_pivots: indices(ctx, &c.context_pivots, &what)?,
                name: c.name,
            })
        })
        .collect()
}
