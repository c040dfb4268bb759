//! Model directory layout:
//!
//! ```text
//! model.json              ModelManifest
//! {type}.labels.txt       entity labels
//! G.{type}.txt            dense factor, triplet format
//! S.{edge}.txt            dense interaction, triplet format
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FactorizationOptions, LatentModel, RankSpec};
use crate::error::{Error, Result};
use crate::graph::{EdgeInfo, ObjectType};
use crate::io::{read_dense, read_labels, write_dense, write_json, write_labels};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelType {
    pub id: String,
    pub labels_file: String,
    pub factor_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEdge {
    #[serde(flatten)]
    pub edge: EdgeInfo,
    pub interaction_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub types: Vec<ModelType>,
    pub edges: Vec<ModelEdge>,
    pub ranks: RankSpec,
    pub seed: u64,
    pub options: FactorizationOptions,
    pub final_objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub fit_log: Vec<f64>,
}

pub fn save_model(model: &LatentModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut types = Vec::new();
    for t in &model.types {
        let labels_file = format!("{}.labels.txt", t.id());
        let factor_file = format!("G.{}.txt", t.id());
        write_labels(dir.join(&labels_file), t.labels())?;
        write_dense(dir.join(&factor_file), &model.factors[t.id()])?;
        types.push(ModelType {
            id: t.id().to_string(),
            labels_file,
            factor_file,
        });
    }
    let mut edges = Vec::new();
    for e in &model.edges {
        let interaction_file = format!("S.{}.txt", e.edge_id);
        write_dense(dir.join(&interaction_file), &model.interactions[&e.edge_id])?;
        edges.push(ModelEdge {
            edge: e.clone(),
            interaction_file,
        });
    }
    let manifest = ModelManifest {
        types,
        edges,
        ranks: model.ranks.clone(),
        seed: model.options.seed,
        options: model.options.clone(),
        final_objective: model.final_objective(),
        iterations: model.iterations(),
        converged: model.converged,
        fit_log: model.fit_log.clone(),
    };
    write_json(dir.join("model.json"), &manifest)
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<LatentModel> {
    let dir = dir.as_ref();
    let path = dir.join("model.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: ModelManifest =
        serde_json::from_str(&text).map_err(|source| Error::Manifest { path, source })?;
    let mut types = Vec::new();
    let mut factors = BTreeMap::new();
    for t in &manifest.types {
        types.push(ObjectType::new(
            &t.id,
            read_labels(dir.join(&t.labels_file))?,
        )?);
        factors.insert(t.id.clone(), read_dense(dir.join(&t.factor_file), &t.id)?);
    }
    let mut interactions = BTreeMap::new();
    for e in &manifest.edges {
        interactions.insert(
            e.edge.edge_id.clone(),
            read_dense(dir.join(&e.interaction_file), &e.edge.edge_id)?,
        );
    }
    let edges = manifest.edges.iter().map(|e| e.edge.clone()).collect();
    let mut model = LatentModel::from_parts(types, edges, factors, interactions)?;
    if model.ranks != manifest.ranks {
        return Err(Error::InvalidParameter(
            "model ranks disagree with stored factor shapes".into(),
        ));
    }
    model.options = manifest.options;
    model.fit_log = manifest.fit_log;
    model.converged = manifest.converged;
    Ok(model)
}
