use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use medusa_core::detection::{DetectionConfig, Detector};
use medusa_core::evaluation::{
    loocv_association, loocv_folds, module_recovery, Case, CaseResult, RecoveryReport,
};
use medusa_core::factorization::load_model;
use medusa_core::io::{write_atomic, write_json};
use medusa_core::par;
use serde::Serialize;

use crate::args::{EvalArgs, Protocol};
use crate::fit::{fit_model, load_graph};
use crate::plot::{self, Curve};
use crate::resolve::{detection_config, read_cases, semantics, Semantics};
use crate::run::{resolve_seed, Recorder};

pub const REPORT_FILE: &str = "report.json";
pub const METRICS_TSV: &str = "metrics.tsv";
pub const ROC_SVG: &str = "roc.svg";
pub const PR_SVG: &str = "pr.svg";

#[derive(Debug, Serialize)]
struct Report {
    protocol: Protocol,
    candidate_type: String,
    context_type: String,
    config: DetectionConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    removal_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    cases: Vec<CaseResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    recovery: Vec<RecoveryReport>,
    /// Mean over cases with defined results; absent when there are none.
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_auroc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_auprc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_recall: Option<f64>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn run(args: EvalArgs) -> anyhow::Result<()> {
    let seed = resolve_seed(args.seed);
    let mut rec = Recorder::start("eval", &args)?;
    rec.input(&args.cases)?;
    let model = match (&args.model, &args.graph) {
        (Some(dir), _) => {
            rec.input_dir(dir)?;
            load_model(dir).with_context(|| format!("loading model {}", dir.display()))?
        }
        (None, Some(g)) => {
            rec.input_graph(g)?;
            fit_model(&load_graph(g)?, &args.fit, seed)?
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    rec.seed("factorization", model.options().seed);

    let sem = semantics(&model, &args.detect)?;
    let config = detection_config(&args.detect, 1, &sem);
    let cases = read_cases(&args.cases, &model, &sem)?;

    let mut report = Report {
        protocol: args.protocol,
        candidate_type: sem.candidate_type.clone(),
        context_type: sem.context_type.clone(),
        config: config.clone(),
        removal_fraction: None,
        seed: None,
        cases: Vec::new(),
        recovery: Vec::new(),
        mean_auroc: None,
        mean_auprc: None,
        mean_recall: None,
    };
    let mut tsv = String::new();
    let mut curves = Vec::new();
    match args.protocol {
        Protocol::Loocv => {
            report.cases = loocv_association(&sem.ensemble, &cases, &config)?;
            let defined = || report.cases.iter().filter_map(|c| c.metrics);
            report.mean_auroc = mean(defined().map(|m| m.auroc));
            report.mean_auprc = mean(defined().map(|m| m.auprc));
            tsv.push_str("case\tn_pos\tn_neg\tauroc\tauprc\n");
            for c in &report.cases {
                match c.metrics {
                    Some(m) => writeln!(
                        tsv,
                        "{}\t{}\t{}\t{}\t{}",
                        c.name, m.n_pos, m.n_neg, m.auroc, m.auprc
                    )?,
                    None => writeln!(tsv, "{}\tNA\tNA\tNA\tNA", c.name)?,
                }
            }
            if args.plot {
                curves = loocv_curves(&sem, &cases, &config)?;
            }
        }
        Protocol::Recovery => {
            rec.seed("recovery", seed);
            report.removal_fraction = Some(args.fraction);
            report.seed = Some(seed);
            let results = par::map(&cases, |c| {
                module_recovery(&sem.ensemble, c, args.fraction, &config, seed)
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            let labels = model.object_type(&sem.candidate_type)?.labels();
            tsv.push_str("case\tsize\theld_out\trecall_at_k\n");
            for (case, r) in cases.iter().zip(results) {
                match r {
                    Some(mut r) => {
                        for m in &mut r.module.members {
                            m.label = Some(labels[m.candidate].clone());
                        }
                        writeln!(
                            tsv,
                            "{}\t{}\t{}\t{}",
                            r.case,
                            case.positives.len(),
                            r.held_out.len(),
                            r.recall_at_k
                        )?;
                        report.recovery.push(r);
                    }
                    None => writeln!(tsv, "{}\t{}\t0\tNA", case.name, case.positives.len())?,
                }
            }
            report.mean_recall = mean(report.recovery.iter().map(|r| r.recall_at_k));
            if args.plot {
                curves = recovery_curves(&sem, &cases, &report.recovery, &config)?;
            }
        }
    }

    let out: &Path = &args.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(out.join(REPORT_FILE), &report)?;
    write_atomic(out.join(METRICS_TSV), tsv.as_bytes())?;
    rec.output(REPORT_FILE);
    rec.output(METRICS_TSV);
    if args.plot {
        if curves.is_empty() {
            tracing::warn!("no case produced a ranking; plots are empty");
        }
        plot::write_roc(&out.join(ROC_SVG), &curves)?;
        plot::write_pr(&out.join(PR_SVG), &curves)?;
        rec.output(ROC_SVG);
        rec.output(PR_SVG);
    }
    rec.finish(out)?;

    print!("{tsv}");
    Ok(())
}

/// One curve per case, pooling the case's folds.
fn loocv_curves(
    sem: &Semantics,
    cases: &[Case],
    config: &DetectionConfig,
) -> anyhow::Result<Vec<Curve>> {
    let mut curves = Vec::new();
    for case in cases {
        if let Some(folds) = loocv_folds(&sem.ensemble, case, config)? {
            curves.push(Curve::new(&case.name, folds.concat())?);
        }
    }
    Ok(curves)
}

/// First-step scores of each recovery run, held-out members as positives.
/// Remaining known members are left out of the ranking.
fn recovery_curves(
    sem: &Semantics,
    cases: &[Case],
    reports: &[RecoveryReport],
    config: &DetectionConfig,
) -> anyhow::Result<Vec<Curve>> {
    let mut curves = Vec::new();
    for r in reports {
        let case = cases
            .iter()
            .find(|c| c.name == r.case)
            .expect("report of a listed case");
        let det = Detector::new(&sem.ensemble, &r.pivots, config)?;
        let s = det.scores()?;
        let scores: Vec<(f64, bool)> = s
            .candidates
            .iter()
            .zip(&s.combined)
            .filter(|(c, _)| r.held_out.contains(c) || !case.positives.contains(c))
            .map(|(c, &p)| (p, r.held_out.contains(c)))
            .collect();
        curves.push(Curve::new(&r.case, scores)?);
    }
    Ok(curves)
}
