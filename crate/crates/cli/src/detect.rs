use std::fmt::Write as _;

use anyhow::Context;
use medusa_core::detection::detect;
use medusa_core::factorization::load_model;
use medusa_core::io::{write_atomic, write_json};

use crate::args::DetectArgs;
use crate::resolve::{detection_config, pivots, read_label_list, semantics};
use crate::run::Recorder;

pub const MODULE_FILE: &str = "module.json";
pub const MODULE_TSV: &str = "module.tsv";

pub fn run(args: DetectArgs) -> anyhow::Result<()> {
    let mut rec = Recorder::start("detect", &args)?;
    rec.input_dir(&args.model)?;
    rec.input(&args.pivots)?;
    let model = load_model(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    rec.seed("factorization", model.options().seed);

    let sem = semantics(&model, &args.detect)?;
    let config = detection_config(&args.detect, args.k, &sem);
    let labels = read_label_list(&args.pivots)?;
    let pivot_idx = pivots(&model, &sem, config.regime, &labels)?;

    let mut module = detect(&sem.ensemble, &pivot_idx, &config)?;
    let cand = model.object_type(&sem.candidate_type)?;
    for m in &mut module.members {
        m.label = Some(cand.labels()[m.candidate].clone());
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_json(args.out.join(MODULE_FILE), &module)?;
    let mut tsv = String::from("iteration\tcandidate\tlabel\tp_value\n");
    for m in &module.members {
        writeln!(
            tsv,
            "{}\t{}\t{}\t{}",
            m.iteration,
            m.candidate,
            m.label.as_deref().unwrap_or(""),
            m.p_value
        )?;
    }
    write_atomic(args.out.join(MODULE_TSV), tsv.as_bytes())?;
    rec.output(MODULE_FILE);
    rec.output(MODULE_TSV);
    rec.finish(&args.out)?;

    for m in &module.members {
        println!(
            "{}\t{}\t{:.3e}",
            m.iteration,
            m.label.as_deref().unwrap_or(""),
            m.p_value
        );
    }
    Ok(())
}
