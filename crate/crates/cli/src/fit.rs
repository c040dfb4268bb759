use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use medusa_core::factorization::{
    factorize, save_model, select_ranks, FactorizationOptions, LatentModel, ModelManifest, RankSpec,
};
use medusa_core::graph::FusionGraph;
use medusa_core::io::{load_fusion_graph, write_atomic};

use crate::args::{FitArgs, FitOptions};
use crate::run::{resolve_seed, Recorder};

pub const FIT_LOG_FILE: &str = "fit_log.tsv";

pub fn load_graph(path: &Path) -> anyhow::Result<FusionGraph> {
    load_fusion_graph(path).with_context(|| format!("loading graph {}", path.display()))
}

pub fn fit_model(graph: &FusionGraph, opts: &FitOptions, seed: u64) -> anyhow::Result<LatentModel> {
    let ranks = match (opts.p, opts.ranks.is_empty()) {
        (Some(p), _) => select_ranks(graph, p)?,
        (None, false) => {
            let map: BTreeMap<String, usize> = opts.ranks.iter().cloned().collect();
            if map.len() != opts.ranks.len() {
                bail!("--ranks names a type twice");
            }
            RankSpec::new(map)
        }
        (None, true) => bail!("one of --p or --ranks is required"),
    };
    let fopts = FactorizationOptions {
        max_iterations: opts.max_iter,
        rel_tolerance: opts.tol,
        seed,
        init_scheme: opts.init.into(),
    };
    Ok(factorize(graph, &ranks, &fopts)?)
}

pub fn run(args: FitArgs) -> anyhow::Result<()> {
    let seed = resolve_seed(args.seed);
    let mut rec = Recorder::start("fit", &args)?;
    rec.seed("factorization", seed);
    rec.input_graph(&args.graph)?;

    let graph = load_graph(&args.graph)?;
    let model = fit_model(&graph, &args.fit, seed)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    save_model(&model, &args.out)?;
    let mut log = String::from("iteration\tobjective\n");
    for (i, v) in model.fit_log().iter().enumerate() {
        writeln!(log, "{i}\t{v}")?;
    }
    write_atomic(args.out.join(FIT_LOG_FILE), log.as_bytes())?;

    let stored: ModelManifest =
        serde_json::from_str(&fs::read_to_string(args.out.join("model.json"))?)?;
    rec.output("model.json");
    rec.output(FIT_LOG_FILE);
    for t in &stored.types {
        rec.output(&t.labels_file);
        rec.output(&t.factor_file);
    }
    for e in &stored.edges {
        rec.output(&e.interaction_file);
    }
    rec.finish(&args.out)?;

    println!(
        "final objective {} after {} iterations ({})",
        model.final_objective().unwrap_or(f64::NAN),
        model.iterations(),
        if model.converged() {
            "converged"
        } else {
            "iteration limit"
        }
    );
    Ok(())
}
