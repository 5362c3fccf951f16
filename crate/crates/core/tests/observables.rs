use rstre_core::environment::{sample_environment, DisorderLaw, WeightedGraphView};
use rstre_core::graph::build_complete;
use rstre_core::observables::{
    derivative_checks, edge_overlap_exact, edge_overlap_mc, tree_overlap_exact, walk_diagnostics,
};
use rstre_core::rng::RngStream;
use rstre_core::sampler::SamplerKind;

#[test]
fn monte_carlo_overlap_matches_kirchhoff() {
    let g = build_complete(7).unwrap();
    let env = sample_environment(&DisorderLaw::Uniform01, &g, 4).unwrap();
    let wg = WeightedGraphView::new(&g, &env, 3.0).unwrap();
    let exact = edge_overlap_exact(&wg).unwrap();
    let g_exact = tree_overlap_exact(&wg, 100_000).unwrap();
    let (edge, same) = edge_overlap_mc(&wg, 8000, SamplerKind::Wilson, &RngStream::new(1, "overlap", 0)).unwrap();
    assert!((edge.mean - exact).abs() < 5.0 * edge.stderr, "{edge:?} vs {exact}");
    assert!((same.mean - g_exact).abs() < 5.0 * same.stderr.max(1e-3));
}

#[test]
fn derivative_identities_on_k5() {
    let g = build_complete(5).unwrap();
    for seed in 0..3 {
        let env = sample_environment(&DisorderLaw::Uniform01, &g, seed).unwrap();
        let wg = WeightedGraphView::new(&g, &env, 1.7).unwrap();
        assert!(derivative_checks(&wg, 1e-4, 1000).unwrap().passed());
    }
}

#[test]
fn diagnostics_on_a_small_graph() {
    let g = build_complete(6).unwrap();
    let env = sample_environment(&DisorderLaw::Uniform01, &g, 1).unwrap();
    let d = walk_diagnostics(&WeightedGraphView::new(&g, &env, 2.0).unwrap()).unwrap();
    assert!(d.d_ratio >= 1.0 && d.t_mix >= 1 && d.phi > 0.0 && !d.phi_heuristic);
}
