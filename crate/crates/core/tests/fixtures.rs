use std::path::PathBuf;

use rstre_core::graph::build_from_edge_list;
use rstre_core::sampler::kruskal_mst;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn diagonal_removed_fixture() {
    let (g, env) = build_from_edge_list(&fixture("diagonal_removed.txt")).unwrap();
    let env = env.unwrap();
    assert_eq!((g.n(), g.m()), (4, 5));
    let mst = kruskal_mst(&g, &env).unwrap();
    let mut ends: Vec<_> = mst.edges.iter().map(|&e| g.endpoints(e)).collect();
    ends.sort();
    assert_eq!(ends, vec![(0, 1), (0, 2), (0, 3)]);
}

#[test]
fn parallel_fixtures() {
    let (g, env) = build_from_edge_list(&fixture("three_parallel.txt")).unwrap();
    assert_eq!(kruskal_mst(&g, &env.unwrap()).unwrap().edges, vec![0]);
    let (g, env) = build_from_edge_list(&fixture("triangle_doubled.txt")).unwrap();
    let mut mst = kruskal_mst(&g, &env.unwrap()).unwrap().edges;
    mst.sort();
    assert_eq!(mst, vec![0, 2]);
}
