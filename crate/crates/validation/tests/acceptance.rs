//! Acceptance criteria. Each criterion prints one `PASS` or `FAIL` line with the
//! measured quantities; the process exits nonzero if any criterion fails.
//!
//! Run a subset with `cargo test -p rstre-validation --test acceptance -- 3 8`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rstre_core::electric::{
    edge_marginals, effective_resistance, flow_energy, joint_edge_probability,
    transfer_impedance_matrix, unit_current_flow,
};
use rstre_core::environment::{
    sample_environment, CompleteEnvironment, DisorderLaw, Environment, WeightedGraphView,
};
use rstre_core::graph::{build_complete, build_from_edge_list, MultiGraph, SpanningTree};
use rstre_core::lattice::{
    build_boundary_box, cylinder_monotonicity_check, free_energy, overlap_density, Boundary,
    LatticeEdge, LatticeEnvironment,
};
use rstre_core::observables::{
    derivative_report, edge_overlap_mc, expected_length_exact,
    log_log_slope, median, pattern_path, pattern_star, tree_length, tree_moment_report,
    tree_overlap_exact,
};
use rstre_core::reduction::{kernel_coupling_check, kernel_decompose, series_law_check, tv_restricted_laws};
use rstre_core::rng::{derive_seed, RngStream};
use rstre_core::sampler::{
    enumerate_spanning_trees, exact_tree_law, sample_complete_tree, sample_tree, SamplerKind,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SEED: u64 = 20_240_601;
const APERY: f64 = 1.202_056_903_159_594_2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn weighted(g: &MultiGraph, env: &Environment, beta: f64) -> WeightedGraphView<'static> {
    // The views borrow leaked data so that helpers can return them; the suite is short-lived.
    let g: &'static MultiGraph = Box::leak(Box::new(g.clone()));
    let env: &'static Environment = Box::leak(Box::new(env.clone()));
    WeightedGraphView::new(g, env, beta).unwrap()
}

/// A connected multigraph on `n` vertices: a random spanning tree plus `extra` random
/// non-loop edges.
fn random_connected(n: usize, extra: usize, rng: &mut RngStream) -> MultiGraph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.below(v), v)).collect();
    while edges.len() < n - 1 + extra {
        let (u, v) = (rng.below(n), rng.below(n));
        if u != v {
            edges.push((u.min(v), u.max(v)));
        }
    }
    MultiGraph::from_edges(n, &edges).unwrap()
}

fn strictly(xs: &[f64], increasing: bool) -> bool {
    xs.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn chi_square_p(counts: &HashMap<SpanningTree, u64>, trees: &[SpanningTree], probs: &[f64], samples: u64) -> f64 {
    let stat: f64 = trees
        .iter()
        .zip(probs)
        .map(|(t, p)| {
            let e = p * samples as f64;
            let o = *counts.get(t).unwrap_or(&0) as f64;
            (o - e).powi(2) / e
        })
        .sum();
    let unseen = counts.keys().filter(|t| !trees.contains(t)).count();
    if unseen > 0 {
        return 0.0;
    }
    1.0 - ChiSquared::new((trees.len() - 1) as f64).unwrap().cdf(stat)
}

fn criterion_1() -> Outcome {
    let g = build_complete(4).unwrap();
    let env = sample_environment(&DisorderLaw::Uniform01, &g, SEED).unwrap();
    let wg = weighted(&g, &env, 1.0);
    let law = exact_tree_law(&wg, 100).unwrap();
    let samples = 1_000_000u64;
    let mut ps = Vec::new();
    for (name, kind) in [("wilson", SamplerKind::Wilson), ("aldous-broder", SamplerKind::AldousBroder)] {
        let mut rng = RngStream::new(SEED, name, 0);
        let mut counts = HashMap::new();
        for _ in 0..samples {
            *counts.entry(sample_tree(&wg, kind, &mut rng).unwrap()).or_insert(0u64) += 1;
        }
        ps.push(chi_square_p(&counts, &law.trees, &law.probability, samples));
    }
    outcome(
        law.len() == 16 && ps.iter().all(|&p| p > 0.001),
        format!("16-tree law, chi-square p: wilson {:.4}, aldous-broder {:.4} (need > 0.001)", ps[0], ps[1]),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = RngStream::new(SEED, "electric", 0);
    let (mut foster, mut thompson, mut rayleigh_ok) = (0.0f64, 0.0f64, true);
    for i in 0..100u64 {
        let n = 3 + rng.below(10);
        let g = random_connected(n, rng.below(2 * n), &mut rng);
        let env = sample_environment(&DisorderLaw::Uniform01, &g, derive_seed(SEED, "electric-env", i)).unwrap();
        let beta = 3.0 * rng.uniform();
        let wg = weighted(&g, &env, beta);
        let sum: f64 = edge_marginals(&wg).unwrap().iter().sum();
        foster = foster.max((sum - (n - 1) as f64).abs());
        let (a, b) = (rng.below(n), rng.below(n));
        if a != b {
            let r = effective_resistance(&wg, &[a], &[b]).unwrap();
            let flow = unit_current_flow(&wg, a, b).unwrap();
            thompson = thompson.max((flow_energy(&flow, &wg) - r).abs());
            let e = rng.below(g.m());
            let stronger = env.with_value(e, env.value(e) - rng.uniform());
            let r2 = effective_resistance(&weighted(&g, &stronger, beta), &[a], &[b]).unwrap();
            rayleigh_ok &= r2 <= r * (1.0 + 1e-12);
        }
    }
    outcome(
        foster <= 1e-9 && thompson <= 1e-9 && rayleigh_ok,
        format!("100 graphs: max Foster error {foster:.2e}, max Thompson error {thompson:.2e}, Rayleigh {rayleigh_ok}"),
    )
}

fn criterion_3() -> Outcome {
    let g = build_complete(10).unwrap();
    let env = Environment::fixed(vec![0.0; g.m()]);
    let wg = weighted(&g, &env, 0.0);
    let all: Vec<usize> = (0..g.m()).collect();
    let y = transfer_impedance_matrix(&wg, &all).unwrap();
    let mut y_err = 0.0f64;
    for (i, &e) in all.iter().enumerate() {
        let (a, b) = g.endpoints(e);
        for (j, &f) in all.iter().enumerate() {
            let (c, d) = g.endpoints(f);
            let shared = [c, d].iter().filter(|x| **x == a || **x == b).count();
            y_err = y_err.max((y.y[(i, j)].abs() - [0.0, 0.1, 0.2][shared]).abs());
        }
    }
    let g5 = build_complete(5).unwrap();
    let env5 = sample_environment(&DisorderLaw::Uniform01, &g5, SEED).unwrap();
    let wg5 = weighted(&g5, &env5, 2.0);
    let law = exact_tree_law(&wg5, 1000).unwrap();
    let mut det_err = 0.0f64;
    for mask in 1u32..(1 << g5.m()) {
        let set: Vec<usize> = (0..g5.m()).filter(|e| mask >> e & 1 == 1).collect();
        if set.len() <= 4 {
            det_err = det_err.max((joint_edge_probability(&wg5, &set).unwrap() - law.joint(&set)).abs());
        }
    }
    outcome(
        y_err <= 1e-9 && det_err <= 1e-9,
        format!("K10 |Y| error {y_err:.2e}; K5 determinant vs enumeration error {det_err:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let (n, beta, envs, pairs) = (400, 30.0f64, 20u64, 100usize);
    let g = build_complete(n).unwrap();
    let per_env: Vec<f64> = (0..envs)
        .map(|i| {
            let env = sample_environment(&DisorderLaw::Uniform01, &g, derive_seed(SEED, "overlap-low", i)).unwrap();
            let wg = WeightedGraphView::new(&g, &env, beta).unwrap();
            let stream = RngStream::new(SEED, "overlap-low-trees", i);
            edge_overlap_mc(&wg, 2 * pairs, SamplerKind::Wilson, &stream).unwrap().0.mean
        })
        .collect();
    let mc = per_env.iter().sum::<f64>() / envs as f64;
    let target = beta * (1.0 - (-2.0 * beta).exp()) / (1.0 - (-beta).exp()).powi(2);
    let rel = (mc - target).abs() / target;
    outcome(
        rel <= 0.10,
        format!("n={n}, beta={beta}, {} pairs: overlap {mc:.3} vs {target:.3} (rel {rel:.3}, need <= 0.10)", envs as usize * pairs),
    )
}

fn criterion_5() -> Outcome {
    let n = 64usize;
    let beta = n as f64 * (n as f64).ln().powi(3);
    let (envs, pairs) = (50u64, 10usize);
    let per_env: Vec<f64> = (0..envs)
        .map(|i| {
            let kn = CompleteEnvironment::new(n, DisorderLaw::Uniform01, derive_seed(SEED, "overlap-high", i)).unwrap();
            let stream = RngStream::new(SEED, "overlap-high-trees", i);
            let total: usize = (0..pairs as u64)
                .map(|j| {
                    let t1 = sample_complete_tree(&kn, beta, SamplerKind::Auto, &mut stream.substream("tree", 2 * j)).unwrap();
                    let t2 = sample_complete_tree(&kn, beta, SamplerKind::Auto, &mut stream.substream("tree", 2 * j + 1)).unwrap();
                    t1.overlap(&t2)
                })
                .sum();
            total as f64 / pairs as f64
        })
        .collect();
    let mean = per_env.iter().sum::<f64>() / envs as f64;
    outcome(
        mean >= 0.9 * n as f64,
        format!("n={n}, beta={beta:.1}, {envs} environments: mean overlap {mean:.3} (need >= {:.1})", 0.9 * n as f64),
    )
}

fn criterion_6() -> Outcome {
    let n = 400usize;
    let beta = 30.0f64;
    let g = build_complete(n).unwrap();
    let envs = 10u64;
    let exact: f64 = (0..envs)
        .map(|i| {
            let env = sample_environment(&DisorderLaw::Uniform01, &g, derive_seed(SEED, "length-low", i)).unwrap();
            expected_length_exact(&WeightedGraphView::new(&g, &env, beta).unwrap()).unwrap()
        })
        .sum::<f64>()
        / envs as f64;
    let eb = (-beta).exp();
    let target = n as f64 / beta * (1.0 - beta * eb - eb) / (1.0 - eb);
    let rel_low = (exact - target).abs() / target;
    let beta_high = (n * n) as f64;
    let sampled: f64 = (0..envs)
        .map(|i| {
            let env = sample_environment(&DisorderLaw::Uniform01, &g, derive_seed(SEED, "length-high", i)).unwrap();
            let wg = WeightedGraphView::new(&g, &env, beta_high).unwrap();
            let t = sample_tree(&wg, SamplerKind::Auto, &mut RngStream::new(SEED, "length-high-trees", i)).unwrap();
            tree_length(&t, &env)
        })
        .sum::<f64>()
        / envs as f64;
    let rel_high = (sampled - APERY).abs() / APERY;
    outcome(
        rel_low <= 0.10 && rel_high <= 0.15,
        format!(
            "beta=30: E[L] {exact:.4} vs {target:.4} (rel {rel_low:.4}, need <= 0.10); beta=n^2: L {sampled:.4} vs zeta(3) (rel {rel_high:.4}, need <= 0.15)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let sizes = [1000usize, 2000, 4000, 8000];
    let samples = 30u64;
    let slope = |label: &str, beta_of: &dyn Fn(usize) -> f64, kind: SamplerKind| -> (f64, Vec<f64>) {
        let medians: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                let ds: Vec<f64> = (0..samples)
                    .map(|i| {
                        let kn = CompleteEnvironment::new(n, DisorderLaw::Uniform01, derive_seed(SEED, label, i)).unwrap();
                        let mut rng = RngStream::new(SEED, label, n as u64 * 1000 + i);
                        sample_complete_tree(&kn, beta_of(n), kind, &mut rng).unwrap().diameter() as f64
                    })
                    .collect();
                median(&ds)
            })
            .collect();
        let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        (log_log_slope(&xs, &medians), medians)
    };
    let (low, low_m) = slope("diameter-low", &|_| 5.0, SamplerKind::Wilson);
    let (high, high_m) = slope("diameter-high", &|n| (n * n) as f64, SamplerKind::Sequential);
    outcome(
        (0.42..=0.58).contains(&low) && (0.26..=0.40).contains(&high),
        format!(
            "beta=5 slope {low:.3} (need [0.42, 0.58], medians {low_m:?}); beta=n^2 slope {high:.3} (need [0.26, 0.40], medians {high_m:?})"
        ),
    )
}

fn criterion_8() -> Outcome {
    let load = |name: &str| {
        let (g, env) = build_from_edge_list(&fixture(name)).unwrap();
        (g, env.unwrap())
    };
    let grid = |hi: f64, step: f64| -> Vec<f64> {
        (0..=((hi / step).round() as usize)).map(|i| i as f64 * step).collect()
    };
    // P((1,4) ∈ T): edge 2 of the fixture joins vertices 0 and 3.
    let (g, env) = load("diagonal_removed.txt");
    let p14: Vec<f64> = grid(0.4, 0.02)
        .iter()
        .map(|&b| exact_tree_law(&weighted(&g, &env, b), 100).unwrap().edge_marginals()[2])
        .collect();
    let (g, env) = load("three_parallel.txt");
    let betas = grid(0.2, 0.01);
    let pb: Vec<f64> = betas
        .iter()
        .map(|&b| exact_tree_law(&weighted(&g, &env, b), 100).unwrap().edge_marginals()[1])
        .collect();
    let closed = betas
        .iter()
        .zip(&pb)
        .map(|(b, p)| ((-b).exp() / ((-0.1 * b).exp() + (-b).exp() + (-10.0 * b).exp()) - p).abs())
        .fold(0.0, f64::max);
    let (g, env) = load("triangle_doubled.txt");
    let overlap: Vec<f64> = grid(0.1, 0.005)
        .iter()
        .map(|&b| {
            let law = exact_tree_law(&weighted(&g, &env, b), 100).unwrap();
            law.edge_marginals().iter().map(|p| p * p).sum()
        })
        .collect();
    let (d1, i2, d3) = (strictly(&p14, false), strictly(&pb, true), strictly(&overlap, false));
    outcome(
        d1 && i2 && d3 && closed <= 1e-12,
        format!(
            "P((1,4)) decreasing on [0,0.4]: {d1} ({:.5} -> {:.5}); P(b) increasing on [0,0.2]: {i2} (closed-form error {closed:.1e}); O decreasing on [0,0.1]: {d3} ({:.6} -> {:.6})",
            p14[0], p14[p14.len() - 1], overlap[0], overlap[overlap.len() - 1]
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = RngStream::new(SEED, "tree-overlap", 0);
    let betas: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
    let mut failures = 0;
    let mut graphs = 0;
    while graphs < 50 {
        let g = random_connected(5, 1 + rng.below(6), &mut rng);
        if enumerate_spanning_trees(&g, 10_000).unwrap().len() < 2 {
            continue;
        }
        let env = sample_environment(&DisorderLaw::Uniform01, &g, derive_seed(SEED, "tree-overlap-env", graphs)).unwrap();
        let gs: Vec<f64> = betas
            .iter()
            .map(|&b| tree_overlap_exact(&weighted(&g, &env, b), 10_000).unwrap())
            .collect();
        if !strictly(&gs, true) {
            failures += 1;
        }
        graphs += 1;
    }
    outcome(failures == 0, format!("g(beta) strictly increasing on {} of 50 graphs", 50 - failures))
}

fn criterion_10() -> Outcome {
    let g = build_complete(5).unwrap();
    let h = 1e-4;
    let mut worst = (0.0f64, 0.0f64);
    let mut all = true;
    for i in 0..10u64 {
        let env = sample_environment(&DisorderLaw::Uniform01, &g, derive_seed(SEED, "derivative", i)).unwrap();
        let beta = 0.5 + 0.4 * i as f64;
        let r = derivative_report(&weighted(&g, &env, beta), h, 1000).unwrap();
        all &= r.passed();
        worst.0 = worst.0.max(r.beta_residual / r.beta_tolerance);
        worst.1 = worst.1.max(r.max_omega_residual / r.omega_tolerance);
    }
    outcome(
        all,
        format!("10 K5 instances, h={h}: worst residual/tolerance {:.3} (beta), {:.3} (omega)", worst.0, worst.1),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = RngStream::new(SEED, "kernel", 0);
    let (mut coupling, mut series) = (0.0f64, 0.0f64);
    let mut instances = 0u64;
    let mut errors = Vec::new();
    while instances < 30 {
        let n = 4 + rng.below(7);
        let g = random_connected(n, 2 + rng.below(3), &mut rng);
        let env = sample_environment(&DisorderLaw::Uniform01, &g, derive_seed(SEED, "kernel-env", instances)).unwrap();
        let beta = 4.0 * rng.uniform();
        if kernel_decompose(&g, &env, beta).unwrap().kernel.m() == 0 {
            continue;
        }
        match kernel_coupling_check(&g, &env, beta, 1_000_000) {
            Ok(r) => coupling = coupling.max(r.max_marginal_diff.max(r.max_kirchhoff_diff).max(r.joint_tv)),
            Err(e) => errors.push(e.to_string()),
        }
        series = series.max(series_law_check(&g, &env, beta, 10).unwrap());
        instances += 1;
    }
    outcome(
        errors.is_empty() && coupling <= 1e-9 && series <= 1e-9,
        format!("30 instances: max coupling error {coupling:.2e}, max series-law error {series:.2e}, failures {errors:?}"),
    )
}

fn criterion_12() -> Outcome {
    let law = DisorderLaw::Uniform01;
    let mut worst_ratio = 0.0f64;
    let mut count = 0u64;
    let mut violations = 0;
    let mut seed = 0u64;
    while count < 30 {
        seed += 1;
        let n = 5 + (count % 3) as usize;
        let g = build_complete(n).unwrap();
        let env = sample_environment(&law, &g, derive_seed(SEED, "tv", seed)).unwrap();
        let beta = [5.0, 15.0, 30.0][(count % 3) as usize];
        let (p0, p1) = (0.35, 0.75);
        match tv_restricted_laws(&g, &env, &law, beta, p0, p1, 1_000_000) {
            Ok(r) => {
                if r.tv > r.bound {
                    violations += 1;
                }
                worst_ratio = worst_ratio.max(r.tv / r.bound);
                count += 1;
            }
            // The p0 giant may fail to sit inside the p1 giant; such draws are skipped.
            Err(rstre_core::Error::PreconditionFailed(_)) => continue,
            Err(e) => return outcome(false, format!("instance {count}: {e}")),
        }
    }
    outcome(violations == 0, format!("30 instances: max TV/bound {worst_ratio:.3e}, violations {violations}"))
}

fn criterion_13() -> Outcome {
    let env2 = LatticeEnvironment::new(DisorderLaw::Uniform01, SEED, 2).unwrap();
    let small = build_boundary_box(1, 2, Boundary::Free).unwrap();
    let trees = enumerate_spanning_trees(&small.graph, 10_000).unwrap().len();
    let f = free_energy(&small, &env2, 0.0).unwrap();
    let f_err = (f - (trees as f64).ln() / 9.0).abs();
    let mut cyl_ok = true;
    let cylinders = [
        vec![LatticeEdge::new(vec![0, 0], 0)],
        vec![LatticeEdge::new(vec![0, 0], 1), LatticeEdge::new(vec![-1, 0], 0)],
        vec![LatticeEdge::new(vec![0, 0], 0), LatticeEdge::new(vec![0, -1], 1), LatticeEdge::new(vec![-1, -1], 0)],
    ];
    for a in &cylinders {
        for beta in [0.0, 1.0, 5.0] {
            cyl_ok &= cylinder_monotonicity_check(a, &[1, 2, 3], &env2, beta).is_ok();
        }
    }
    let big = build_boundary_box(8, 2, Boundary::Free).unwrap();
    let rho = overlap_density(&big, &env2, 0.0).unwrap();
    outcome(
        trees == 192 && f_err <= 1e-9 && cyl_ok && (rho - 0.5).abs() <= 0.05,
        format!(
            "3x3 trees {trees}, free-energy error {f_err:.1e}; cylinder chains and domination (L<=3): {cyl_ok}; rho(L=8, beta=0) {rho:.4} (need 0.5 +- 0.05)"
        ),
    )
}

fn criterion_14() -> Outcome {
    let g = build_complete(50).unwrap();
    let env = Environment::fixed(vec![0.0; g.m()]);
    let wg = WeightedGraphView::new(&g, &env, 0.0).unwrap();
    let patterns = [pattern_path(2), pattern_path(3), pattern_star(3)];
    let reports = tree_moment_report(&wg, &patterns, 100_000, SamplerKind::Wilson, &RngStream::new(SEED, "local", 0)).unwrap();
    let names = ["path2", "path3", "star3"];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in names.iter().zip(&reports) {
        let z = r.estimate.z_score(&r.reference);
        pass &= z <= 3.0;
        parts.push(format!(
            "{name}: {:.4}+-{:.4} vs {:.4}+-{:.4} (z {z:.1})",
            r.estimate.mean, r.estimate.stderr, r.reference.mean, r.reference.stderr
        ));
    }
    outcome(pass, format!("UST on K50, 1e5 samples: {} (need z <= 3)", parts.join("; ")))
}

type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn main() {
    let minute = Duration::from_secs(60);
    let criteria: Vec<Criterion> = vec![
        (1, "sampler exactness on K4", criterion_1, minute),
        (2, "electric identities", criterion_2, Duration::from_secs(30)),
        (3, "transfer impedance", criterion_3, Duration::MAX),
        (4, "edge overlap, low disorder", criterion_4, 10 * minute),
        (5, "edge overlap, high disorder", criterion_5, Duration::MAX),
        (6, "tree length", criterion_6, 10 * minute),
        (7, "diameter exponents", criterion_7, 30 * minute),
        (8, "monotonicity fixtures", criterion_8, Duration::from_secs(5)),
        (9, "tree overlap monotone", criterion_9, Duration::from_secs(30)),
        (10, "derivative identities", criterion_10, Duration::from_secs(10)),
        (11, "kernel coupling", criterion_11, Duration::from_secs(30)),
        (12, "restricted-tree TV bound", criterion_12, minute),
        (13, "lattice", criterion_13, 5 * minute),
        (14, "local moments", criterion_14, Duration::MAX),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run, limit) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= limit;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = if limit == Duration::MAX { String::new() } else { format!(", limit {}s", limit.as_secs()) };
        println!(
            "{} criterion {id} ({name}): {} [{:.1}s{budget}{}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
    }
    if selected.is_empty() || selected.contains(&15) {
        println!("NOTE criterion 15: asymptotic constants, sharp local-limit cutoffs and infinite-volume statements are covered only by the trend and invariant checks of criteria 4-7 and 13-14");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
