use std::collections::HashMap;

use rstre_core::environment::{sample_environment, CompleteEnvironment, DisorderLaw, Environment, WeightedGraphView};
use rstre_core::graph::{build_box, build_complete, SpanningTree};
use rstre_core::rng::RngStream;
use rstre_core::sampler::{
    complete_mst, exact_tree_law, kruskal_mst, prim_mst, sample_complete_tree, sample_tree,
    spanning_tree_count, SamplerKind,
};

fn frequency_error(kind: SamplerKind, beta: f64, samples: usize) -> f64 {
    let g = build_complete(4).unwrap();
    let env = Environment::fixed(vec![0.05, 0.9, 0.3, 0.6, 0.75, 0.15]);
    let wg = WeightedGraphView::new(&g, &env, beta).unwrap();
    let law = exact_tree_law(&wg, 100).unwrap();
    let mut counts: HashMap<SpanningTree, usize> = HashMap::new();
    let root = RngStream::new(42, "sampler-test", 0);
    for i in 0..samples as u64 {
        *counts.entry(sample_tree(&wg, kind, &mut root.substream("tree", i)).unwrap()).or_default() += 1;
    }
    law.trees
        .iter()
        .zip(&law.probability)
        .map(|(t, p)| {
            let f = *counts.get(t).unwrap_or(&0) as f64 / samples as f64;
            (f - p).abs() / (p * (1.0 - p) / samples as f64).sqrt()
        })
        .fold(0.0, f64::max)
}

#[test]
fn samplers_follow_the_gibbs_law_on_k4() {
    for kind in [SamplerKind::Wilson, SamplerKind::AldousBroder, SamplerKind::Sequential] {
        let z = frequency_error(kind, 2.0, 40_000);
        assert!(z < 5.0, "{kind:?}: worst z-score {z}");
    }
}

#[test]
fn mst_algorithms_agree() {
    let g = build_box(3, 2, false).unwrap();
    let env = sample_environment(&DisorderLaw::Uniform01, &g, 8).unwrap();
    let k = kruskal_mst(&g, &env).unwrap();
    assert_eq!(k.edges, prim_mst(&g, &env, 5).unwrap().edges);
    let kn = CompleteEnvironment::new(60, DisorderLaw::Uniform01, 3).unwrap();
    let (g, env) = kn.materialize().unwrap();
    assert_eq!(complete_mst(&kn).unwrap().edge_ids(), kruskal_mst(&g, &env).unwrap().edges);
}

#[test]
fn huge_beta_recovers_the_mst() {
    let kn = CompleteEnvironment::new(200, DisorderLaw::Uniform01, 17).unwrap();
    let mst = complete_mst(&kn).unwrap();
    let mut rng = RngStream::new(1, "mst", 0);
    let t = sample_complete_tree(&kn, 1e9, SamplerKind::Auto, &mut rng).unwrap();
    assert_eq!(t, mst);
}

#[test]
fn tree_counts() {
    assert_eq!(spanning_tree_count(&build_complete(7).unwrap()).round(), 16807.0);
    assert_eq!(spanning_tree_count(&build_box(1, 2, false).unwrap()).round(), 192.0);
}
