//! Fusion graph data model: object types, relation matrices between types
//! and constraint matrices within a type.

use std::collections::{BTreeMap, HashSet, VecDeque};

use nalgebra_sparse::CsrMatrix;

use crate::error::{Error, Result};

/// A type of object (genes, diseases, ...) with its ordered entity labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectType {
    id: String,
    labels: Vec<String>,
}

impl ObjectType {
    pub fn new(id: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let id = id.into();
        if labels.is_empty() {
            return Err(Error::Labels {
                id,
                msg: "cardinality must be at least 1".into(),
            });
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Labels {
                    id,
                    msg: format!("duplicate label `{l}`"),
                });
            }
        }
        Ok(Self { id, labels })
    }

    /// Convenience constructor labelling entities `{prefix}0 .. {prefix}{n-1}`.
    pub fn with_generated_labels(id: impl Into<String>, prefix: &str, n: usize) -> Result<Self> {
        Self::new(id, (0..n).map(|i| format!("{prefix}{i}")).collect())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A dyadic data set relating entities of `source` (rows) to `target` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct RelationMatrix {
    pub edge_id: String,
    pub source: String,
    pub target: String,
    pub values: CsrMatrix<f64>,
}

/// A square within-type matrix used to regularize the latent factors of one type.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    pub constraint_id: String,
    pub type_id: String,
    pub values: CsrMatrix<f64>,
}

/// Validated collection of types, relations and constraints.
///
/// Relations and constraints are kept sorted by identifier; every
/// floating-point reduction over edges follows that order.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGraph {
    types: Vec<ObjectType>,
    relations: Vec<RelationMatrix>,
    constraints: Vec<ConstraintMatrix>,
}

impl FusionGraph {
    pub fn new(
        types: Vec<ObjectType>,
        mut relations: Vec<RelationMatrix>,
        mut constraints: Vec<ConstraintMatrix>,
    ) -> Result<Self> {
        let mut cards = BTreeMap::new();
        for t in &types {
            if cards.insert(t.id.clone(), t.cardinality()).is_some() {
                return Err(Error::Duplicate(t.id.clone()));
            }
        }
        let mut ids = HashSet::new();
        for r in &relations {
            if !ids.insert(r.edge_id.as_str()) {
                return Err(Error::Duplicate(r.edge_id.clone()));
            }
            let ns = *cards
                .get(&r.source)
                .ok_or_else(|| Error::UnknownType(r.source.clone()))?;
            let nt = *cards
                .get(&r.target)
                .ok_or_else(|| Error::UnknownType(r.target.clone()))?;
            if r.source == r.target {
                return Err(Error::Shape {
                    id: r.edge_id.clone(),
                    msg: "relation must join two distinct types; use a constraint matrix".into(),
                });
            }
            if r.values.nrows() != ns || r.values.ncols() != nt {
                return Err(Error::Shape {
                    id: r.edge_id.clone(),
                    msg: format!(
                        "matrix is {}x{}, expected {}x{} ({} x {})",
                        r.values.nrows(),
                        r.values.ncols(),
                        ns,
                        nt,
                        r.source,
                        r.target
                    ),
                });
            }
            check_finite(&r.edge_id, &r.values)?;
        }
        for c in &constraints {
            if !ids.insert(c.constraint_id.as_str()) {
                return Err(Error::Duplicate(c.constraint_id.clone()));
            }
            let n = *cards
                .get(&c.type_id)
                .ok_or_else(|| Error::UnknownType(c.type_id.clone()))?;
            if c.values.nrows() != n || c.values.ncols() != n {
                return Err(Error::Shape {
                    id: c.constraint_id.clone(),
                    msg: format!(
                        "constraint is {}x{}, expected {n}x{n}",
                        c.values.nrows(),
                        c.values.ncols()
                    ),
                });
            }
            check_finite(&c.constraint_id, &c.values)?;
        }
        drop(ids);

        relations.sort_by(|a, b| a.edge_id.cmp(&b.edge_id));
        constraints.sort_by(|a, b| a.constraint_id.cmp(&b.constraint_id));
        let graph = Self {
            types,
            relations,
            constraints,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    fn check_connected(&self) -> Result<()> {
        let Some(root) = self.types.first() else {
            return Err(Error::InvalidParameter("fusion graph has no types".into()));
        };
        let mut seen: HashSet<&str> = HashSet::new();
        let mut queue = VecDeque::from([root.id()]);
        seen.insert(root.id());
        while let Some(t) = queue.pop_front() {
            for r in &self.relations {
                let other = if r.source == t {
                    r.target.as_str()
                } else if r.target == t {
                    r.source.as_str()
                } else {
                    continue;
                };
                if seen.insert(other) {
                    queue.push_back(other);
                }
            }
        }
        let unreachable: Vec<String> = self
            .types
            .iter()
            .filter(|t| !seen.contains(t.id()))
            .map(|t| t.id.clone())
            .collect();
        if unreachable.is_empty() {
            Ok(())
        } else {
            Err(Error::Disconnected {
                root: root.id.clone(),
                unreachable,
            })
        }
    }

    pub fn types(&self) -> &[ObjectType] {
        &self.types
    }

    pub fn relations(&self) -> &[RelationMatrix] {
        &self.relations
    }

    pub fn constraints(&self) -> &[ConstraintMatrix] {
        &self.constraints
    }

    pub fn object_type(&self, id: &str) -> Result<&ObjectType> {
        self.types
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::UnknownType(id.to_string()))
    }

    pub fn cardinality(&self, id: &str) -> Result<usize> {
        self.object_type(id).map(ObjectType::cardinality)
    }

    pub fn relation(&self, edge_id: &str) -> Result<&RelationMatrix> {
        self.relations
            .iter()
            .find(|r| r.edge_id == edge_id)
            .ok_or_else(|| Error::UnknownEdge(edge_id.to_string()))
    }

    /// Returns a copy with every relation matrix passed through `f`.
    pub fn map_relations(&self, f: impl Fn(&CsrMatrix<f64>) -> CsrMatrix<f64>) -> Result<Self> {
        let relations = self
            .relations
            .iter()
            .map(|r| RelationMatrix {
                values: f(&r.values),
                ..r.clone()
            })
            .collect();
        Self::new(self.types.clone(), relations, self.constraints.clone())
    }

    /// Edge topology only, enough to enumerate chains without matrix data.
    pub fn topology(&self) -> Topology {
        Topology {
            types: self.types.iter().map(|t| t.id.clone()).collect(),
            edges: self
                .relations
                .iter()
                .map(|r| EdgeInfo {
                    edge_id: r.edge_id.clone(),
                    source: r.source.clone(),
                    target: r.target.clone(),
                })
                .collect(),
        }
    }
}

fn check_finite(id: &str, m: &CsrMatrix<f64>) -> Result<()> {
    for (row, col, v) in m.triplet_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                id: id.to_string(),
                row,
                col,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EdgeInfo {
    pub edge_id: String,
    pub source: String,
    pub target: String,
}

/// Type and edge identifiers of a fusion graph.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Topology {
    pub types: Vec<String>,
    pub edges: Vec<EdgeInfo>,
}

impl Topology {
    pub fn edge(&self, edge_id: &str) -> Result<&EdgeInfo> {
        self.edges
            .iter()
            .find(|e| e.edge_id == edge_id)
            .ok_or_else(|| Error::UnknownEdge(edge_id.to_string()))
    }

    pub fn has_type(&self, id: &str) -> bool {
        self.types.iter().any(|t| t == id)
    }
}
