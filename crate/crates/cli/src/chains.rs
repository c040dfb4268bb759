use anyhow::Context;
use medusa_core::chains::{enumerate_chains, Chain};
use medusa_core::factorization::load_model;
use medusa_core::io::write_json;
use serde::Serialize;

use crate::args::ChainsArgs;
use crate::fit::load_graph;
use crate::run::Recorder;

pub const CHAINS_FILE: &str = "chains.json";

#[derive(Debug, Serialize)]
struct ChainEntry {
    spec: String,
    semantic_label: String,
    length: usize,
}

#[derive(Debug, Serialize)]
struct ChainListing {
    source: String,
    target: String,
    max_length: usize,
    chains: Vec<ChainEntry>,
}

pub fn run(args: ChainsArgs) -> anyhow::Result<()> {
    let mut rec = Recorder::start("chains", &args)?;
    let topology = match (&args.model, &args.graph) {
        (Some(dir), _) => {
            rec.input_dir(dir)?;
            load_model(dir)
                .with_context(|| format!("loading model {}", dir.display()))?
                .topology()
        }
        (None, Some(g)) => {
            rec.input_graph(g)?;
            load_graph(g)?.topology()
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let chains = enumerate_chains(&topology, &args.from, &args.to, args.max_len)?;
    for c in &chains {
        println!("{}\t{}", c.spec(), c.semantic_label());
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let listing = ChainListing {
            source: args.from.clone(),
            target: args.to.clone(),
            max_length: args.max_len,
            chains: chains
                .iter()
                .map(|c: &Chain| ChainEntry {
                    spec: c.spec(),
                    semantic_label: c.semantic_label(),
                    length: c.len(),
                })
                .collect(),
        };
        write_json(out.join(CHAINS_FILE), &listing)?;
        rec.output(CHAINS_FILE);
        rec.finish(out)?;
    }
    Ok(())
}
