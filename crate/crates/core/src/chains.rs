//! Chains: typed paths of relations through the fusion graph, and their
//! materialization as candidate-by-context matrices.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::factorization::LatentModel;
use crate::graph::Topology;
use crate::normalize::row_stochastic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub edge_id: String,
    pub direction: Direction,
    pub from: String,
    pub to: String,
}

impl Step {
    fn key(&self) -> (&str, Direction) {
        (&self.edge_id, self.direction)
    }
}

/// A non-empty sequence of adjacent traversal steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chain {
    steps: Vec<Step>,
}

impl Chain {
    /// Resolves `(edge_id, direction)` pairs against `topology` and checks
    /// that consecutive steps share an endpoint type.
    pub fn new(topology: &Topology, steps: &[(&str, Direction)]) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidChain(
                "a chain needs at least one step".into(),
            ));
        }
        let mut out: Vec<Step> = Vec::with_capacity(steps.len());
        for &(edge_id, direction) in steps {
            let e = topology.edge(edge_id)?;
            let (from, to) = match direction {
                Direction::Forward => (&e.source, &e.target),
                Direction::Reverse => (&e.target, &e.source),
            };
            if let Some(prev) = out.last() {
                if &prev.to != from {
                    return Err(Error::InvalidChain(format!(
                        "step `{edge_id}` departs from `{from}` but previous step arrives at `{}`",
                        prev.to
                    )));
                }
            }
            out.push(Step {
                edge_id: edge_id.to_string(),
                direction,
                from: from.clone(),
                to: to.clone(),
            });
        }
        Ok(Self { steps: out })
    }

    /// Parses `edge_id[!]( > edge_id[!])*`, where `!` marks reverse traversal.
    pub fn parse(spec: &str, topology: &Topology) -> Result<Self> {
        let mut steps = Vec::new();
        for part in spec.split('>') {
            let part = part.trim();
            let (id, dir) = match part.strip_suffix('!') {
                Some(id) => (id.trim_end(), Direction::Reverse),
                None => (part, Direction::Forward),
            };
            if id.is_empty() {
                return Err(Error::InvalidChain(format!("empty step in `{spec}`")));
            }
            steps.push((id, dir));
        }
        Self::new(topology, &steps)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.steps[0].from
    }

    pub fn target(&self) -> &str {
        &self.steps[self.steps.len() - 1].to
    }

    /// The same path walked backwards.
    pub fn reversed(&self) -> Self {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| Step {
                edge_id: s.edge_id.clone(),
                direction: match s.direction {
                    Direction::Forward => Direction::Reverse,
                    Direction::Reverse => Direction::Forward,
                },
                from: s.to.clone(),
                to: s.from.clone(),
            })
            .collect();
        Self { steps }
    }

    /// Spec string accepted by [`Chain::parse`].
    pub fn spec(&self) -> String {
        self.steps
            .iter()
            .map(|s| match s.direction {
                Direction::Forward => s.edge_id.clone(),
                Direction::Reverse => format!("{}!", s.edge_id),
            })
            .collect::<Vec<_>>()
            .join(" > ")
    }

    /// Type path such as `gene→term→disease`.
    pub fn semantic_label(&self) -> String {
        let mut label = self.source().to_string();
        for s in &self.steps {
            label.push('→');
            label.push_str(&s.to);
        }
        label
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

impl PartialOrd for Chain {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Chain {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.steps
            .iter()
            .map(Step::key)
            .cmp(other.steps.iter().map(Step::key))
    }
}

/// Lists every chain from `source` to `target` of at most `max_length` steps.
///
/// Edges are traversed in either direction but never twice. Intermediate
/// types may not repeat, except that `source` and `target` may each appear
/// once as an intermediate. Output is sorted lexicographically by step list.
pub fn enumerate_chains(
    topology: &Topology,
    source: &str,
    target: &str,
    max_length: usize,
) -> Result<Vec<Chain>> {
    for t in [source, target] {
        if !topology.has_type(t) {
            return Err(Error::UnknownType(t.to_string()));
        }
    }
    if max_length == 0 {
        return Err(Error::InvalidParameter("max_length must be >= 1".into()));
    }
    let mut out = Vec::new();
    let mut path: Vec<(&str, Direction)> = Vec::new();
    let mut visited: Vec<&str> = Vec::new();
    extend(
        topology,
        target,
        source,
        max_length,
        &mut path,
        &mut visited,
        &mut out,
    )?;
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extend<'a>(
    topology: &'a Topology,
    target: &str,
    at: &str,
    max_length: usize,
    path: &mut Vec<(&'a str, Direction)>,
    intermediates: &mut Vec<&'a str>,
    out: &mut Vec<Chain>,
) -> Result<()> {
    if path.len() == max_length {
        return Ok(());
    }
    for e in &topology.edges {
        if path.iter().any(|(id, _)| *id == e.edge_id) {
            continue;
        }
        for (dir, from, to) in [
            (Direction::Forward, &e.source, &e.target),
            (Direction::Reverse, &e.target, &e.source),
        ] {
            if from != at {
                continue;
            }
            path.push((&e.edge_id, dir));
            if to == target {
                out.push(Chain::new(topology, path)?);
            }
            if allowed_intermediate(to, intermediates) {
                intermediates.push(to);
                extend(topology, target, to, max_length, path, intermediates, out)?;
                intermediates.pop();
            }
            path.pop();
        }
    }
    Ok(())
}

// The source is the starting point, not an intermediate, so it may still
// be passed through once; every other type is capped at one visit.
fn allowed_intermediate(t: &str, seen: &[&str]) -> bool {
    !seen.contains(&t)
}

/// A chain realized as a non-negative row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterializedChain {
    pub chain: Chain,
    pub values: DMatrix<f64>,
    pub semantic_label: String,
}

/// Product of reconstructed relations along the chain, before clamping and
/// row normalization.
///
/// Evaluated in latent space as `G(S) · [M₁ · GᵀG · M₂ · … · Mₗ] · G(T)ᵀ` where
/// `Mⱼ` is the step's interaction matrix (transposed for reverse steps), so no
/// intermediate `n × n` product is ever formed.
pub fn materialize_raw(model: &LatentModel, chain: &Chain) -> Result<DMatrix<f64>> {
    let mut core: Option<DMatrix<f64>> = None;
    for step in chain.steps() {
        let s = model.interaction(&step.edge_id)?;
        let m = match step.direction {
            Direction::Forward => s.clone(),
            Direction::Reverse => s.transpose(),
        };
        core = Some(match core {
            None => m,
            Some(c) => {
                let g = model.factor(&step.from)?;
                c * (g.transpose() * g) * m
            }
        });
    }
    let core = core.ok_or_else(|| Error::InvalidChain("empty chain".into()))?;
    let gs = model.factor(chain.source())?;
    let gt = model.factor(chain.target())?;
    debug_assert_eq!(core.shape(), (gs.ncols(), gt.ncols()));
    Ok(gs * core * gt.transpose())
}

/// Clamps the raw chain product at zero and row-normalizes it.
pub fn materialize(model: &LatentModel, chain: &Chain) -> Result<MaterializedChain> {
    let raw = materialize_raw(model, chain)?;
    Ok(MaterializedChain {
        semantic_label: chain.semantic_label(),
        chain: chain.clone(),
        values: row_stochastic(&raw),
    })
}
