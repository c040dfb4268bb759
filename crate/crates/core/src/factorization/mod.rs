//! Collective non-negative matrix tri-factorization of a fusion graph.
//!
//! Every relation `R(I,J)` is approximated by `G(I) · S(I,J) · G(J)ᵀ`, with one
//! non-negative factor `G(I)` per object type shared by all incident
//! relations, and one unconstrained interaction matrix `S(I,J)` per relation.
//! Constraint matrices `Θ(I)` add `tr(G(I)ᵀ Θ(I) G(I))` to the objective.
//!
//! Fitting alternates two block updates until the relative objective change
//! falls below tolerance:
//!
//! * `S(I,J)` is the least-squares solution given the factors,
//!   `(GᵢᵀGᵢ)⁻¹ Gᵢᵀ R Gⱼ (GⱼᵀGⱼ)⁻¹`.
//! * `G(I)` takes a multiplicative step that aggregates every incident
//!   relation and constraint, with each signed term split into positive and
//!   negative parts so the factor stays non-negative:
//!   `G ← G ∘ sqrt((B⁺ + G M⁻ + Θ⁻ G) / (B⁻ + G M⁺ + Θ⁺ G))`.

mod persist;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeInfo, FusionGraph, ObjectType};
use crate::par;

pub use persist::{load_model, save_model, ModelManifest};

/// Floor for multiplicative-update denominators.
const DENOM_FLOOR: f64 = 1e-12;
/// Initial ridge added to a Gram matrix that fails Cholesky.
const RIDGE_JITTER: f64 = 1e-12;

/// Latent dimension per object type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankSpec(BTreeMap<String, usize>);

impl RankSpec {
    pub fn new(ranks: BTreeMap<String, usize>) -> Self {
        Self(ranks)
    }

    pub fn get(&self, type_id: &str) -> Option<usize> {
        self.0.get(type_id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn validate(&self, graph: &FusionGraph) -> Result<()> {
        for t in graph.types() {
            let k = self.get(t.id()).ok_or_else(|| {
                Error::InvalidParameter(format!("no rank given for type `{}`", t.id()))
            })?;
            if k == 0 || k > t.cardinality() {
                return Err(Error::InvalidParameter(format!(
                    "rank {k} for type `{}` outside 1..={}",
                    t.id(),
                    t.cardinality()
                )));
            }
        }
        Ok(())
    }
}

/// `k = max(1, round(p · n))` for every type.
pub fn select_ranks(graph: &FusionGraph, p: f64) -> Result<RankSpec> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rank fraction p = {p} outside (0, 1]"
        )));
    }
    Ok(RankSpec(
        graph
            .types()
            .iter()
            .map(|t| {
                let k = ((p * t.cardinality() as f64).round() as usize).max(1);
                (t.id().to_string(), k.min(t.cardinality()))
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    RandomUniform,
    RandomAcol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationOptions {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub seed: u64,
    pub init_scheme: InitScheme,
}

impl Default for FactorizationOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_tolerance: 1e-5,
            seed: 0,
            init_scheme: InitScheme::RandomAcol,
        }
    }
}

impl FactorizationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        if self.rel_tolerance.is_nan() || self.rel_tolerance <= 0.0 {
            return Err(Error::InvalidParameter("rel_tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Fitted latent factors. Immutable once returned by [`factorize`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub(crate) types: Vec<ObjectType>,
    pub(crate) edges: Vec<EdgeInfo>,
    pub(crate) factors: BTreeMap<String, DMatrix<f64>>,
    pub(crate) interactions: BTreeMap<String, DMatrix<f64>>,
    pub(crate) ranks: RankSpec,
    pub(crate) options: FactorizationOptions,
    pub(crate) fit_log: Vec<f64>,
    pub(crate) converged: bool,
}

impl LatentModel {
    /// Assembles a model from explicit factors, e.g. planted ones. Shapes are
    /// checked against the types and edges; factors must be non-negative.
    pub fn from_parts(
        types: Vec<ObjectType>,
        edges: Vec<EdgeInfo>,
        factors: BTreeMap<String, DMatrix<f64>>,
        interactions: BTreeMap<String, DMatrix<f64>>,
    ) -> Result<Self> {
        let mut ranks = BTreeMap::new();
        for t in &types {
            let g = factors
                .get(t.id())
                .ok_or_else(|| Error::UnknownType(t.id().to_string()))?;
            if g.nrows() != t.cardinality() || g.ncols() == 0 {
                return Err(Error::Shape {
                    id: t.id().to_string(),
                    msg: format!("factor is {}x{}", g.nrows(), g.ncols()),
                });
            }
            if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "factor for `{}` must be finite and non-negative",
                    t.id()
                )));
            }
            ranks.insert(t.id().to_string(), g.ncols());
        }
        for e in &edges {
            let s = interactions
                .get(&e.edge_id)
                .ok_or_else(|| Error::UnknownEdge(e.edge_id.clone()))?;
            let (ks, kt) = (ranks.get(&e.source), ranks.get(&e.target));
            if Some(&s.nrows()) != ks || Some(&s.ncols()) != kt {
                return Err(Error::Shape {
                    id: e.edge_id.clone(),
                    msg: format!("interaction is {}x{}", s.nrows(), s.ncols()),
                });
            }
        }
        Ok(Self {
            types,
            edges,
            factors,
            interactions,
            ranks: RankSpec(ranks),
            options: FactorizationOptions::default(),
            fit_log: vec![],
            converged: false,
        })
    }

    pub fn factor(&self, type_id: &str) -> Result<&DMatrix<f64>> {
        self.factors
            .get(type_id)
            .ok_or_else(|| Error::UnknownType(type_id.to_string()))
    }

    pub fn interaction(&self, edge_id: &str) -> Result<&DMatrix<f64>> {
        self.interactions
            .get(edge_id)
            .ok_or_else(|| Error::UnknownEdge(edge_id.to_string()))
    }

    pub fn edge(&self, edge_id: &str) -> Result<&EdgeInfo> {
        self.edges
            .iter()
            .find(|e| e.edge_id == edge_id)
            .ok_or_else(|| Error::UnknownEdge(edge_id.to_string()))
    }

    pub fn edges(&self) -> &[EdgeInfo] {
        &self.edges
    }

    pub fn types(&self) -> &[ObjectType] {
        &self.types
    }

    pub fn object_type(&self, id: &str) -> Result<&ObjectType> {
        self.types
            .iter()
            .find(|t| t.id() == id)
            .ok_or_else(|| Error::UnknownType(id.to_string()))
    }

    pub fn topology(&self) -> crate::graph::Topology {
        crate::graph::Topology {
            types: self.types.iter().map(|t| t.id().to_string()).collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn ranks(&self) -> &RankSpec {
        &self.ranks
    }

    pub fn options(&self) -> &FactorizationOptions {
        &self.options
    }

    /// Objective after initialization followed by one value per sweep.
    pub fn fit_log(&self) -> &[f64] {
        &self.fit_log
    }

    pub fn iterations(&self) -> usize {
        self.fit_log.len().saturating_sub(1)
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.fit_log.last().copied()
    }
}

/// `G(I) · S(I,J) · G(J)ᵀ` for the given edge.
pub fn reconstruct(model: &LatentModel, edge_id: &str) -> Result<DMatrix<f64>> {
    let e = model.edge(edge_id)?;
    let gs = model.factor(&e.source)?;
    let gt = model.factor(&e.target)?;
    let s = model.interaction(edge_id)?;
    Ok(gs * s * gt.transpose())
}

/// Sum of squared Frobenius residuals over relations plus the constraint traces.
pub fn objective(graph: &FusionGraph, model: &LatentModel) -> Result<f64> {
    let mut factors = BTreeMap::new();
    for t in graph.types() {
        let g = model.factor(t.id())?;
        if g.nrows() != t.cardinality() {
            return Err(Error::Shape {
                id: t.id().to_string(),
                msg: format!(
                    "factor has {} rows, type has {}",
                    g.nrows(),
                    t.cardinality()
                ),
            });
        }
        factors.insert(t.id().to_string(), g.clone());
    }
    let mut interactions = BTreeMap::new();
    for r in graph.relations() {
        let s = model.interaction(&r.edge_id)?;
        let (ks, kt) = (factors[&r.source].ncols(), factors[&r.target].ncols());
        if s.shape() != (ks, kt) {
            return Err(Error::Shape {
                id: r.edge_id.clone(),
                msg: format!("interaction is {:?}, expected ({ks}, {kt})", s.shape()),
            });
        }
        interactions.insert(r.edge_id.clone(), s.clone());
    }
    Ok(Problem::new(graph).objective(&factors, &interactions))
}

struct EdgeData<'a> {
    id: &'a str,
    source: &'a str,
    target: &'a str,
    r: &'a CsrMatrix<f64>,
    rt: CsrMatrix<f64>,
}

struct ConstraintData<'a> {
    type_id: &'a str,
    theta: &'a CsrMatrix<f64>,
    pos: CsrMatrix<f64>,
    neg: CsrMatrix<f64>,
}

struct Problem<'a> {
    graph: &'a FusionGraph,
    edges: Vec<EdgeData<'a>>,
    constraints: Vec<ConstraintData<'a>>,
}

impl<'a> Problem<'a> {
    fn new(graph: &'a FusionGraph) -> Self {
        let edges = graph
            .relations()
            .iter()
            .map(|r| EdgeData {
                id: &r.edge_id,
                source: &r.source,
                target: &r.target,
                r: &r.values,
                rt: r.values.transpose(),
            })
            .collect();
        let constraints = graph
            .constraints()
            .iter()
            .map(|c| {
                // tr(GᵀΘG) only sees the symmetric part of Θ
                let sym = (&c.values + &c.values.transpose()) * 0.5;
                let mut pos = sym.clone();
                pos.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                let mut neg = sym;
                neg.values_mut()
                    .iter_mut()
                    .for_each(|v| *v = (-*v).max(0.0));
                ConstraintData {
                    type_id: &c.type_id,
                    theta: &c.values,
                    pos,
                    neg,
                }
            })
            .collect();
        Self {
            graph,
            edges,
            constraints,
        }
    }

    fn objective(
        &self,
        factors: &BTreeMap<String, DMatrix<f64>>,
        interactions: &BTreeMap<String, DMatrix<f64>>,
    ) -> f64 {
        let residuals = par::map(&self.edges, |e| {
            let recon = &factors[e.source] * &interactions[e.id] * factors[e.target].transpose();
            residual_sq(e.r, recon)
        });
        let traces = par::map(&self.constraints, |c| {
            let g = &factors[c.type_id];
            c.theta
                .triplet_iter()
                .map(|(i, j, v)| v * g.row(i).dot(&g.row(j)))
                .sum::<f64>()
        });
        residuals.iter().sum::<f64>() + traces.iter().sum::<f64>()
    }

    fn solve_interactions(
        &self,
        factors: &BTreeMap<String, DMatrix<f64>>,
    ) -> BTreeMap<String, DMatrix<f64>> {
        let grams: BTreeMap<&str, DMatrix<f64>> = self
            .graph
            .types()
            .iter()
            .map(|t| {
                let g = &factors[t.id()];
                (t.id(), g.transpose() * g)
            })
            .collect();
        let solved = par::map(&self.edges, |e| {
            let gs = &factors[e.source];
            let gt = &factors[e.target];
            let rg = e.r * gt;
            let x = gs.transpose() * rg;
            let left = spd_solve(&grams[e.source], &x);
            let s = spd_solve(&grams[e.target], &left.transpose()).transpose();
            (e.id.to_string(), s)
        });
        solved.into_iter().collect()
    }

    /// One multiplicative step on the factor of `type_id`, in place.
    fn update_factor(
        &self,
        type_id: &str,
        factors: &mut BTreeMap<String, DMatrix<f64>>,
        interactions: &BTreeMap<String, DMatrix<f64>>,
    ) {
        let incident: Vec<&EdgeData> = self
            .edges
            .iter()
            .filter(|e| e.source == type_id || e.target == type_id)
            .collect();
        let g = &factors[type_id];
        let parts = par::map(&incident, |e| {
            let s = &interactions[e.id];
            let (b, m) = if e.source == type_id {
                let gt = &factors[e.target];
                let b = (e.r * gt) * s.transpose();
                let m = s * (gt.transpose() * gt) * s.transpose();
                (b, m)
            } else {
                let gs = &factors[e.source];
                let b = (&e.rt * gs) * s;
                let m = s.transpose() * (gs.transpose() * gs) * s;
                (b, m)
            };
            let (mp, mn) = split(&m);
            let (bp, bn) = split(&b);
            (bp + g * mn, bn + g * mp)
        });
        let mut num = DMatrix::zeros(g.nrows(), g.ncols());
        let mut den = DMatrix::zeros(g.nrows(), g.ncols());
        for (n, d) in parts {
            num += n;
            den += d;
        }
        for c in self.constraints.iter().filter(|c| c.type_id == type_id) {
            num += &c.neg * g;
            den += &c.pos * g;
        }
        let g = factors.get_mut(type_id).expect("factor present");
        g.zip_zip_apply(&num, &den, |x, n, d| {
            *x *= (n / d.max(DENOM_FLOOR)).sqrt();
        });
    }
}

/// `‖R − recon‖²` with `R` sparse, computed on the dense residual so that
/// near-exact fits do not lose precision to cancellation.
fn residual_sq(r: &CsrMatrix<f64>, mut recon: DMatrix<f64>) -> f64 {
    for (i, j, v) in r.triplet_iter() {
        recon[(i, j)] -= v;
    }
    recon.iter().map(|x| x * x).sum()
}

fn non_finite_key(ms: &BTreeMap<String, DMatrix<f64>>) -> Option<&str> {
    ms.iter()
        .find(|(_, m)| m.iter().any(|v| !v.is_finite()))
        .map(|(k, _)| k.as_str())
}

fn split(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|v| v.max(0.0)), m.map(|v| (-v).max(0.0)))
}

/// Solves `a · x = b` for symmetric positive semi-definite `a`, adding a
/// growing ridge when Cholesky fails.
fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = a.clone().cholesky() {
        return ch.solve(b);
    }
    let scale = (a.trace() / a.nrows().max(1) as f64).max(1.0);
    let mut ridge = RIDGE_JITTER * scale;
    // a finite PSD matrix succeeds long before the ridge reaches its own scale
    for _ in 0..16 {
        let mut reg = a.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += ridge;
        }
        if let Some(ch) = reg.cholesky() {
            return ch.solve(b);
        }
        ridge *= 10.0;
    }
    DMatrix::from_element(b.nrows(), b.ncols(), f64::NAN)
}

fn initialize(
    graph: &FusionGraph,
    ranks: &RankSpec,
    opts: &FactorizationOptions,
) -> BTreeMap<String, DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut factors = BTreeMap::new();
    for t in graph.types() {
        let n = t.cardinality();
        let k = ranks.get(t.id()).expect("validated");
        let incident: Vec<(&CsrMatrix<f64>, bool)> = graph
            .relations()
            .iter()
            .filter_map(|r| {
                if r.source == t.id() {
                    Some((&r.values, false))
                } else if r.target == t.id() {
                    Some((&r.values, true))
                } else {
                    None
                }
            })
            .collect();
        let (abs_sum, cells) = incident.iter().fold((0.0, 0.0), |(s, c), (m, _)| {
            (
                s + m.values().iter().map(|v| v.abs()).sum::<f64>(),
                c + (m.nrows() * m.ncols()) as f64,
            )
        });
        let mean_mag = if cells > 0.0 { abs_sum / cells } else { 0.0 };
        let scale = if mean_mag > 0.0 { mean_mag.sqrt() } else { 1.0 };

        let g = match opts.init_scheme {
            InitScheme::RandomUniform => DMatrix::from_fn(n, k, |_, _| rng.gen::<f64>() * scale),
            InitScheme::RandomAcol => random_acol(n, k, &incident, scale, &mut rng),
        };
        factors.insert(t.id().to_string(), g);
    }
    factors
}

/// Each latent column is the mean of a random subset of data columns (in
/// absolute value) over the type's incident relations, plus a small uniform
/// floor so no column starts at zero.
fn random_acol(
    n: usize,
    k: usize,
    incident: &[(&CsrMatrix<f64>, bool)],
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    // columns over which this type's entities are profiled, as dense n x m
    let mut profile = DMatrix::<f64>::zeros(n, 0);
    for (m, transposed) in incident {
        let dense = if *transposed {
            DMatrix::from(&m.transpose())
        } else {
            DMatrix::from(*m)
        };
        let width = profile.ncols();
        profile = profile.resize_horizontally(width + dense.ncols(), 0.0);
        profile
            .columns_mut(width, dense.ncols())
            .copy_from(&dense.abs());
    }
    let m = profile.ncols();
    let p = m.div_ceil(5).max(1);
    let mut g = DMatrix::zeros(n, k);
    for j in 0..k {
        if m > 0 {
            for _ in 0..p {
                let c = rng.gen_range(0..m);
                let col = profile.column(c) / p as f64;
                g.column_mut(j).axpy(1.0, &col, 1.0);
            }
        }
        for i in 0..n {
            g[(i, j)] += 1e-2 * scale * rng.gen::<f64>();
        }
    }
    g
}

/// Fits the latent model. Deterministic for a given seed, independent of the
/// number of worker threads.
pub fn factorize(
    graph: &FusionGraph,
    ranks: &RankSpec,
    opts: &FactorizationOptions,
) -> Result<LatentModel> {
    ranks.validate(graph)?;
    opts.validate()?;
    let problem = Problem::new(graph);

    let mut factors = initialize(graph, ranks, opts);
    let mut interactions = problem.solve_interactions(&factors);
    let mut prev = problem.objective(&factors, &interactions);
    if !prev.is_finite() {
        return Err(Error::Numerical {
            iteration: 0,
            msg: "non-finite objective after initialization".into(),
        });
    }
    let mut fit_log = vec![prev];
    let mut converged = false;

    for it in 1..=opts.max_iterations {
        for t in graph.types() {
            problem.update_factor(t.id(), &mut factors, &interactions);
            if factors[t.id()].iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    iteration: it,
                    msg: format!("non-finite entry in factor `{}`", t.id()),
                });
            }
        }
        interactions = problem.solve_interactions(&factors);
        if let Some(id) = non_finite_key(&interactions) {
            return Err(Error::Numerical {
                iteration: it,
                msg: format!("singular Gram system for interaction `{id}`"),
            });
        }
        let obj = problem.objective(&factors, &interactions);
        if !obj.is_finite() {
            return Err(Error::Numerical {
                iteration: it,
                msg: "non-finite objective".into(),
            });
        }
        fit_log.push(obj);
        let rel = (prev - obj).abs() / prev.max(1e-12);
        tracing::trace!(iteration = it, objective = obj, rel_change = rel);
        prev = obj;
        if rel < opts.rel_tolerance {
            converged = true;
            break;
        }
    }
    tracing::debug!(
        iterations = fit_log.len() - 1,
        objective = prev,
        converged,
        "factorization finished"
    );

    Ok(LatentModel {
        types: graph.types().to_vec(),
        edges: graph.topology().edges,
        factors,
        interactions,
        ranks: ranks.clone(),
        options: opts.clone(),
        fit_log,
        converged,
    })
}
