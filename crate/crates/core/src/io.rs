//! File formats: JSON graph manifest, coordinate-triplet matrix files and
//! label files.
//!
//! Matrix file layout (UTF-8 text):
//!
//! ```text
//! n_rows n_cols nnz
//! row col value      # nnz lines, 0-based indices
//! ```
//!
//! Unlisted entries are zero. Values are written with the shortest decimal
//! representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConstraintMatrix, FusionGraph, ObjectType, RelationMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeEntry {
    pub id: String,
    pub labels_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEntry {
    pub edge_id: String,
    pub source: String,
    pub target: String,
    pub matrix_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub constraint_id: String,
    #[serde(rename = "type")]
    pub type_id: String,
    pub matrix_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphManifest {
    pub types: Vec<TypeEntry>,
    pub relations: Vec<RelationEntry>,
    #[serde(default)]
    pub constraints: Vec<ConstraintEntry>,
}

/// Loads and validates a fusion graph. Relative file paths in the manifest
/// resolve against the manifest's directory.
pub fn load_fusion_graph(manifest_path: impl AsRef<Path>) -> Result<FusionGraph> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: GraphManifest =
        serde_json::from_str(&text).map_err(|source| Error::Manifest {
            path: manifest_path.to_path_buf(),
            source,
        })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut types = Vec::with_capacity(manifest.types.len());
    for t in &manifest.types {
        let labels = read_labels(base.join(&t.labels_file))?;
        types.push(ObjectType::new(&t.id, labels)?);
    }
    let card = |id: &str| -> Result<usize> {
        types
            .iter()
            .find(|t| t.id() == id)
            .map(ObjectType::cardinality)
            .ok_or_else(|| Error::UnknownType(id.to_string()))
    };

    let mut relations = Vec::with_capacity(manifest.relations.len());
    for r in &manifest.relations {
        let values = read_sparse(base.join(&r.matrix_file), &r.edge_id)?;
        let (ns, nt) = (card(&r.source)?, card(&r.target)?);
        check_declared_shape(&r.edge_id, &values, ns, nt)?;
        relations.push(RelationMatrix {
            edge_id: r.edge_id.clone(),
            source: r.source.clone(),
            target: r.target.clone(),
            values,
        });
    }
    let mut constraints = Vec::with_capacity(manifest.constraints.len());
    for c in &manifest.constraints {
        let values = read_sparse(base.join(&c.matrix_file), &c.constraint_id)?;
        let n = card(&c.type_id)?;
        check_declared_shape(&c.constraint_id, &values, n, n)?;
        constraints.push(ConstraintMatrix {
            constraint_id: c.constraint_id.clone(),
            type_id: c.type_id.clone(),
            values,
        });
    }
    FusionGraph::new(types, relations, constraints)
}

fn check_declared_shape(id: &str, m: &CsrMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Shape {
            id: id.to_string(),
            msg: format!(
                "matrix file declares {}x{}, types require {rows}x{cols}",
                m.nrows(),
                m.ncols()
            ),
        });
    }
    Ok(())
}

/// Writes `graph` as a manifest plus one file per matrix and label list.
/// Returns the manifest path.
pub fn save_fusion_graph(graph: &FusionGraph, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = GraphManifest {
        types: vec![],
        relations: vec![],
        constraints: vec![],
    };
    for t in graph.types() {
        let file = format!("{}.labels.txt", t.id());
        write_labels(dir.join(&file), t.labels())?;
        manifest.types.push(TypeEntry {
            id: t.id().to_string(),
            labels_file: file,
        });
    }
    for r in graph.relations() {
        let file = format!("{}.triplets.txt", r.edge_id);
        write_sparse(dir.join(&file), &r.values)?;
        manifest.relations.push(RelationEntry {
            edge_id: r.edge_id.clone(),
            source: r.source.clone(),
            target: r.target.clone(),
            matrix_file: file,
        });
    }
    for c in graph.constraints() {
        let file = format!("{}.triplets.txt", c.constraint_id);
        write_sparse(dir.join(&file), &c.values)?;
        manifest.constraints.push(ConstraintEntry {
            constraint_id: c.constraint_id.clone(),
            type_id: c.type_id.clone(),
            matrix_file: file,
        });
    }
    let path = dir.join("graph.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r').to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[String]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        out.push_str(l);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

fn read_triplets(path: &Path, id: &str) -> Result<Triplets> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header `n_rows n_cols nnz`".into()))?;
    let h: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(hline + 1, format!("bad header: {e}")))?;
    let [nrows, ncols, nnz] = h[..] else {
        return Err(parse_err(hline + 1, "header must have 3 fields".into()));
    };

    let mut entries = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashSet::with_capacity(nnz);
    for (ln, line) in lines {
        let mut it = line.split_whitespace();
        let (Some(r), Some(c), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(parse_err(ln + 1, "expected `row col value`".into()));
        };
        let r: usize = r
            .parse()
            .map_err(|e| parse_err(ln + 1, format!("bad row index: {e}")))?;
        let c: usize = c
            .parse()
            .map_err(|e| parse_err(ln + 1, format!("bad column index: {e}")))?;
        let v: f64 = v
            .parse()
            .map_err(|e| parse_err(ln + 1, format!("bad value: {e}")))?;
        if r >= nrows || c >= ncols {
            return Err(Error::Shape {
                id: id.to_string(),
                msg: format!("entry ({r}, {c}) outside declared {nrows}x{ncols}"),
            });
        }
        if !v.is_finite() {
            return Err(Error::NonFinite {
                id: id.to_string(),
                row: r,
                col: c,
            });
        }
        if !seen.insert((r, c)) {
            return Err(parse_err(ln + 1, format!("duplicate entry ({r}, {c})")));
        }
        entries.push((r, c, v));
    }
    if entries.len() != nnz {
        return Err(parse_err(
            hline + 1,
            format!("header declares {nnz} entries, found {}", entries.len()),
        ));
    }
    Ok(Triplets {
        nrows,
        ncols,
        entries,
    })
}

/// Reads a triplet file into CSR form. `id` names the matrix in errors.
pub fn read_sparse(path: impl AsRef<Path>, id: &str) -> Result<CsrMatrix<f64>> {
    let t = read_triplets(path.as_ref(), id)?;
    let mut coo = CooMatrix::new(t.nrows, t.ncols);
    for (r, c, v) in t.entries {
        coo.push(r, c, v);
    }
    Ok(CsrMatrix::from(&coo))
}

pub fn read_dense(path: impl AsRef<Path>, id: &str) -> Result<DMatrix<f64>> {
    let t = read_triplets(path.as_ref(), id)?;
    let mut m = DMatrix::zeros(t.nrows, t.ncols);
    for (r, c, v) in t.entries {
        m[(r, c)] = v;
    }
    Ok(m)
}

pub fn write_sparse(path: impl AsRef<Path>, m: &CsrMatrix<f64>) -> Result<()> {
    let mut out = format!("{} {} {}\n", m.nrows(), m.ncols(), m.nnz());
    for (r, c, v) in m.triplet_iter() {
        let _ = writeln!(out, "{r} {c} {v:?}");
    }
    write_atomic(path, out.as_bytes())
}

/// Writes every entry of a dense matrix, row-major.
pub fn write_dense(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut out = format!("{} {} {}\n", m.nrows(), m.ncols(), m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let _ = writeln!(out, "{r} {c} {:?}", m[(r, c)]);
        }
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Manifest {
        path: path.as_ref().to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp.{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
