use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FusionGraph, ObjectType, RelationMatrix};
use crate::normalize::normalize_matrix;

pub const GENE: &str = "gene";
pub const TERM: &str = "term";
pub const CHEMICAL: &str = "chemical";
pub const DISEASE: &str = "disease";
pub const TISSUE: &str = "tissue";

/// Edges of the synthetic graph. Every edge except `gene_tissue` carries the
/// planted component.
pub const EDGES: [(&str, &str, &str); 5] = [
    ("chemical_disease", CHEMICAL, DISEASE),
    ("gene_chemical", GENE, CHEMICAL),
    ("gene_term", GENE, TERM),
    ("gene_tissue", GENE, TISSUE),
    ("term_chemical", TERM, CHEMICAL),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub genes: usize,
    pub terms: usize,
    pub chemicals: usize,
    pub diseases: usize,
    pub tissues: usize,
    /// Fraction of relation entries observed.
    pub density: f64,
    pub background_rank: usize,
    pub module_size: usize,
    /// Planted terms, chemicals and diseases sharing the module's component.
    pub planted_contexts: usize,
    pub signal: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            genes: 80,
            terms: 30,
            chemicals: 25,
            diseases: 12,
            tissues: 15,
            density: 1.0,
            background_rank: 4,
            module_size: 12,
            planted_contexts: 4,
            signal: 4.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density must lie in (0, 1], got {}", self.density));
        }
        if !(self.signal >= 0.0 && self.signal.is_finite()) {
            return bad(format!(
                "signal must be finite and >= 0, got {}",
                self.signal
            ));
        }
        let sizes = [
            self.genes,
            self.terms,
            self.chemicals,
            self.diseases,
            self.tissues,
        ];
        if sizes.contains(&0) || self.background_rank == 0 {
            return bad("cardinalities and background rank must be >= 1".into());
        }
        if self.module_size == 0 || self.module_size > self.genes {
            return bad(format!(
                "module size {} must lie in 1..={}",
                self.module_size, self.genes
            ));
        }
        let ctx = self.terms.min(self.chemicals).min(self.diseases);
        if self.planted_contexts == 0 || self.planted_contexts > ctx {
            return bad(format!(
                "planted contexts {} must lie in 1..={ctx}",
                self.planted_contexts
            ));
        }
        Ok(())
    }
}

/// Indices planted with the shared component, per type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub module: Vec<usize>,
    pub terms: Vec<usize>,
    pub chemicals: Vec<usize>,
    pub diseases: Vec<usize>,
}

fn pick(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v = sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

/// Builds a normalized five-type fusion graph from planted low-rank factors.
///
/// Every entity draws a uniform background profile of rank
/// `background_rank`. Module genes and the planted contexts additionally
/// load `signal` on one shared extra component. Relations are the factor
/// products with multiplicative noise in `[0.5, 1.5)`, observed with
/// probability `density`, then column/row normalized.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(FusionGraph, PlantedTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = PlantedTruth {
        module: pick(&mut rng, spec.genes, spec.module_size),
        terms: pick(&mut rng, spec.terms, spec.planted_contexts),
        chemicals: pick(&mut rng, spec.chemicals, spec.planted_contexts),
        diseases: pick(&mut rng, spec.diseases, spec.planted_contexts),
    };
    let r = spec.background_rank;
    let types: [(&str, usize, &[usize]); 5] = [
        (GENE, spec.genes, &truth.module),
        (TERM, spec.terms, &truth.terms),
        (CHEMICAL, spec.chemicals, &truth.chemicals),
        (DISEASE, spec.diseases, &truth.diseases),
        (TISSUE, spec.tissues, &[]),
    ];
    let mut factors = std::collections::BTreeMap::new();
    let mut object_types = Vec::new();
    for (id, n, planted) in types {
        let mut u = DMatrix::from_fn(n, r + 1, |_, _| 0.0);
        for i in 0..n {
            for c in 0..r {
                u[(i, c)] = rng.gen::<f64>();
            }
        }
        for &i in planted {
            u[(i, r)] = spec.signal;
        }
        factors.insert(id, u);
        object_types.push(ObjectType::with_generated_labels(id, id, n)?);
    }
    let mut relations = Vec::new();
    for (edge_id, s, t) in EDGES {
        let clean = &factors[s] * factors[t].transpose();
        let mut coo = CooMatrix::new(clean.nrows(), clean.ncols());
        for i in 0..clean.nrows() {
            for j in 0..clean.ncols() {
                let keep = rng.gen::<f64>() < spec.density;
                let noise = rng.gen_range(0.5..1.5);
                if keep {
                    coo.push(i, j, clean[(i, j)] * noise);
                }
            }
        }
        relations.push(RelationMatrix {
            edge_id: edge_id.into(),
            source: s.into(),
            target: t.into(),
            values: normalize_matrix(&CsrMatrix::from(&coo)),
        });
    }
    Ok((FusionGraph::new(object_types, relations, vec![])?, truth))
}
