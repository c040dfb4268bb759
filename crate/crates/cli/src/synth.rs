use anyhow::Context;
use medusa_core::evaluation::{generate_synthetic, SyntheticSpec, GENE, TERM};
use medusa_core::io::{save_fusion_graph, write_json};
use serde::Serialize;

use crate::args::SynthArgs;
use crate::run::{resolve_seed, Recorder};

pub const TRUTH_FILE: &str = "truth.json";
pub const CASES_FILE: &str = "cases.json";

#[derive(Debug, Serialize)]
struct LabelCase<'a> {
    name: &'a str,
    positives: Vec<&'a str>,
    context_pivots: Vec<&'a str>,
}

pub fn run(args: SynthArgs) -> anyhow::Result<()> {
    let seed = resolve_seed(args.seed);
    let mut rec = Recorder::start("synth", &args)?;
    rec.seed("synthetic", seed);
    let spec = SyntheticSpec {
        seed,
        genes: args.genes,
        terms: args.terms,
        chemicals: args.chemicals,
        diseases: args.diseases,
        tissues: args.tissues,
        density: args.density,
        background_rank: args.background_rank,
        module_size: args.module_size,
        planted_contexts: args.planted_contexts,
        signal: args.signal,
    };
    let (graph, truth) = generate_synthetic(&spec)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let manifest = save_fusion_graph(&graph, &args.out)?;

    let genes = graph.object_type(GENE)?.labels();
    let terms = graph.object_type(TERM)?.labels();
    let cases = [LabelCase {
        name: "planted",
        positives: truth.module.iter().map(|&i| genes[i].as_str()).collect(),
        context_pivots: truth.terms.iter().map(|&i| terms[i].as_str()).collect(),
    }];
    write_json(args.out.join(TRUTH_FILE), &truth)?;
    write_json(args.out.join(CASES_FILE), &cases)?;

    let text = std::fs::read_to_string(&manifest)?;
    let m: medusa_core::io::GraphManifest = serde_json::from_str(&text)?;
    rec.output("graph.json");
    for t in &m.types {
        rec.output(&t.labels_file);
    }
    for r in &m.relations {
        rec.output(&r.matrix_file);
    }
    rec.output(TRUTH_FILE);
    rec.output(CASES_FILE);
    rec.finish(&args.out)?;
    println!("{}", manifest.display());
    Ok(())
}
