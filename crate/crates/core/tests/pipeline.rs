//! End-to-end runs through the public library API.

use medusa_core::detection::{detect, DetectionConfig, Regime};
use medusa_core::evaluation::{
    ensemble_from_model, fit_ensemble, generate_synthetic, PipelineConfig, SyntheticSpec,
};
use medusa_core::factorization::{load_model, save_model, FactorizationOptions};
use medusa_core::io::{load_fusion_graph, save_fusion_graph};

fn config() -> PipelineConfig {
    PipelineConfig {
        rank_fraction: 0.2,
        factorization: FactorizationOptions::default(),
        chains: vec!["gene_term".into()],
    }
}

#[test]
fn planted_module_is_detected_from_half_its_genes() {
    let spec = SyntheticSpec {
        seed: 3,
        ..Default::default()
    };
    let (g, truth) = generate_synthetic(&spec).unwrap();
    let (_, ens) = fit_ensemble(&g, &config()).unwrap();

    let (pivots, rest) = truth.module.split_at(truth.module.len() / 2);
    let cfg = DetectionConfig {
        q: spec.planted_contexts,
        ..DetectionConfig::new(Regime::Cpe, rest.len())
    };
    let module = detect(&ens, pivots, &cfg).unwrap();
    assert_eq!(module.members.len(), rest.len());
    let hits = module
        .members
        .iter()
        .filter(|m| rest.contains(&m.candidate))
        .count();
    assert!(hits * 5 >= rest.len() * 4, "{hits}/{} recovered", rest.len());
    assert!(module.members.iter().all(|m| !pivots.contains(&m.candidate)));
}

#[test]
fn graph_and_model_survive_a_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        seed: 11,
        genes: 30,
        module_size: 6,
        ..Default::default()
    };
    let (g, truth) = generate_synthetic(&spec).unwrap();
    let manifest = save_fusion_graph(&g, dir.path().join("graph")).unwrap();
    let g2 = load_fusion_graph(&manifest).unwrap();

    let cfg = PipelineConfig {
        factorization: FactorizationOptions {
            max_iterations: 50,
            ..Default::default()
        },
        ..config()
    };
    let (m1, e1) = fit_ensemble(&g, &cfg).unwrap();
    let (m2, _) = fit_ensemble(&g2, &cfg).unwrap();
    assert_eq!(m1.fit_log(), m2.fit_log());

    save_model(&m1, dir.path().join("model")).unwrap();
    let m3 = load_model(dir.path().join("model")).unwrap();
    let e3 = ensemble_from_model(&m3, &cfg.chains).unwrap();
    assert_eq!(e1.semantics()[0].values, e3.semantics()[0].values);

    let det = DetectionConfig::new(Regime::Cpe, 3);
    let a = detect(&e1, &truth.module[..2], &det).unwrap();
    let b = detect(&e3, &truth.module[..2], &det).unwrap();
    assert_eq!(a, b);
}
