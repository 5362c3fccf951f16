//! Seeded experiment orchestration.
//!
//! Replica `r` of an experiment draws its environment from
//! `derive_seed(seed, "env", r)` and its trees from `RngStream::new(seed, "trees", r)`,
//! so every row depends only on the configuration and the replica index. Replicas run
//! on a pool of `workers` threads and are reassembled in index order.

pub mod config;
pub mod output;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{parse_boundary, BetaSpec, ExperimentConfig, GraphSpec, EXPERIMENTS};
pub use output::{render_csv, write_atomic, write_csv, ResultRow, CSV_HEADER};

use crate::environment::{sample_environment, CompleteEnvironment, Environment, WeightedGraphView};
use crate::error::{Error, Result};
use crate::graph::{MultiGraph, SpanningTree};
use crate::lattice::{build_boundary_box, free_energy, overlap_density, LatticeEnvironment};
use crate::observables::{
    bottleneck_exhaustive, edge_overlap_exact, edge_overlap_mc, expected_length_exact,
    heat_cheeger_bound, log_log_slope, median, mst_equality_probability, pattern_path,
    pattern_star, tree_length, tree_moment_report, tree_overlap_exact, walk_diagnostics, Estimate,
    EXHAUSTIVE_LIMIT,
};
use crate::reduction::{graph_excess, kernel_coupling_check, kernel_decompose, series_law_check};
use crate::rng::{derive_seed, RngStream};
use crate::sampler::{sample_complete_tree, sample_tree, SamplerKind};

/// Library version echoed into result headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Enumeration cap used by exact observables inside experiments.
pub const EXPERIMENT_ENUMERATION_CAP: usize = 200_000;

/// Complete graphs above this size are sampled from an implicit environment.
pub const IMPLICIT_COMPLETE_ABOVE: usize = 1000;

/// Default tolerance of the exact identity checks.
pub const DEFAULT_CHECK_TOLERANCE: f64 = 1e-9;

/// Outcome of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    /// Descriptions of failed checks; nonempty means exit code 2.
    pub failed_checks: Vec<String>,
    /// Replicas that produced an error row instead of observables.
    pub replica_errors: usize,
}

/// Seed of the environment of replica `r`.
pub fn env_seed(master: u64, r: u64) -> u64 {
    derive_seed(master, "env", r)
}

#[derive(Default)]
struct ReplicaOut {
    rows: Vec<(String, f64, f64)>,
    failures: Vec<String>,
}

impl ReplicaOut {
    fn push(&mut self, obs: impl Into<String>, value: f64, stderr: f64) {
        self.rows.push((obs.into(), value, stderr));
    }

    fn estimate(&mut self, obs: &str, e: Estimate) {
        self.push(obs, e.mean, e.stderr);
    }
}

/// Context shared by the replicas of one (graph, β) point.
struct Point<'a> {
    config: &'a ExperimentConfig,
    n: usize,
    beta: Option<f64>,
}

impl Point<'_> {
    fn row(&self, replica: Option<u64>, obs: String, value: f64, stderr: f64, wall_ms: u64, seed: u64) -> ResultRow {
        ResultRow {
            experiment: self.config.experiment.clone(),
            n: Some(self.n),
            beta: self.beta,
            replica,
            observable: obs,
            value,
            stderr,
            wall_ms,
            seed,
        }
    }

    /// Run every replica in parallel; a failing replica becomes an error row.
    fn replicas(
        &self,
        summary: &mut RunSummary,
        f: impl Fn(u64) -> Result<ReplicaOut> + Sync,
    ) -> Vec<Option<ReplicaOut>> {
        let timing = self.config.timing;
        let outs: Vec<(Result<ReplicaOut>, u64)> = (0..self.config.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let start = Instant::now();
                let out = f(r);
                let ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
                (out, ms)
            })
            .collect();
        outs.into_iter()
            .enumerate()
            .map(|(r, (out, ms))| {
                let seed = env_seed(self.config.seed, r as u64);
                match out {
                    Ok(o) => {
                        for (obs, v, s) in &o.rows {
                            summary.rows.push(self.row(Some(r as u64), obs.clone(), *v, *s, ms, seed));
                        }
                        summary.failed_checks.extend(o.failures.iter().cloned());
                        Some(o)
                    }
                    Err(e) => {
                        summary.replica_errors += 1;
                        summary.rows.push(self.row(Some(r as u64), format!("error: {e}"), f64::NAN, f64::NAN, ms, seed));
                        None
                    }
                }
            })
            .collect()
    }

    /// Aggregate of one observable over the successful replicas.
    fn aggregate(&self, summary: &mut RunSummary, outs: &[Option<ReplicaOut>], obs: &str, name: &str) {
        let xs: Vec<f64> = outs
            .iter()
            .flatten()
            .filter_map(|o| o.rows.iter().find(|r| r.0 == obs).map(|r| r.1))
            .collect();
        if !xs.is_empty() {
            let e = Estimate::from_samples(&xs);
            summary.rows.push(self.row(None, name.to_string(), e.mean, e.stderr, 0, self.config.seed));
        }
    }
}

fn environment(config: &ExperimentConfig, g: &MultiGraph, fixed: &Option<Vec<f64>>, r: u64) -> Result<Environment> {
    match fixed {
        Some(omega) => Ok(Environment::fixed(omega.clone())),
        None => sample_environment(&config.law, g, env_seed(config.seed, r)),
    }
}

/// Where trees are sampled from: an explicit graph or an implicit complete graph.
enum Instance<'a> {
    Explicit(&'a MultiGraph, Environment),
    Complete(CompleteEnvironment),
}

impl Instance<'_> {
    fn sample(&self, beta: f64, kind: SamplerKind, rng: &mut RngStream) -> Result<SpanningTree> {
        match self {
            Instance::Explicit(g, env) => sample_tree(&WeightedGraphView::new(g, env, beta)?, kind, rng),
            Instance::Complete(kn) => sample_complete_tree(kn, beta, kind, rng),
        }
    }

    fn length(&self, t: &SpanningTree) -> f64 {
        match self {
            Instance::Explicit(_, env) => tree_length(t, env),
            Instance::Complete(kn) => {
                let mut reader = kn.reader();
                t.triples().iter().map(|&(_, u, v)| reader.omega(u, v)).sum()
            }
        }
    }
}

struct Graph {
    spec: GraphSpec,
    g: MultiGraph,
    fixed: Option<Vec<f64>>,
}

impl Graph {
    fn instance(&self, config: &ExperimentConfig, r: u64) -> Result<Instance<'_>> {
        if self.spec.is_complete() && self.fixed.is_none() && self.g.n() > IMPLICIT_COMPLETE_ABOVE && !config.exact {
            Ok(Instance::Complete(CompleteEnvironment::new(
                self.g.n(),
                config.law.clone(),
                env_seed(config.seed, r),
            )?))
        } else {
            Ok(Instance::Explicit(&self.g, environment(config, &self.g, &self.fixed, r)?))
        }
    }
}

fn build_graph(config: &ExperimentConfig, spec: GraphSpec) -> Result<Graph> {
    // Large complete graphs are never materialised.
    if let GraphSpec::Complete(n) = spec {
        if n > IMPLICIT_COMPLETE_ABOVE && !config.exact {
            let g = MultiGraph::new(n);
            return Ok(Graph { spec, g, fixed: None });
        }
    }
    let (g, fixed) = spec.build(config.seed)?;
    if let Some(omega) = &fixed {
        if omega.len() != g.m() {
            return Err(Error::invalid("edge list disorder does not match its edges"));
        }
    }
    Ok(Graph { spec, g, fixed })
}

/// Run `config` on a pool of `config.workers` threads without writing output.
pub fn execute(config: &ExperimentConfig) -> Result<RunSummary> {
    if !EXPERIMENTS.contains(&config.experiment.as_str()) {
        return Err(Error::invalid(format!("unknown experiment '{}'", config.experiment)));
    }
    if config.replicas == 0 {
        return Err(Error::invalid("replicas must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut summary = RunSummary {
            rows: Vec::new(),
            failed_checks: Vec::new(),
            replica_errors: 0,
        };
        match config.experiment.as_str() {
            "diameter-scaling" => diameter_scaling(config, &mut summary)?,
            "free-energy-sweep" => free_energy_sweep(config, &mut summary)?,
            _ => {
                for spec in config.graphs() {
                    let graph = build_graph(config, spec)?;
                    for b in &config.beta_grid {
                        let point = Point {
                            config,
                            n: graph.g.n(),
                            beta: Some(b.resolve(graph.g.n())),
                        };
                        run_point(&point, &graph, &mut summary)?;
                    }
                }
            }
        }
        Ok(summary)
    })
}

/// Run `config`, write the CSV (with the configuration echoed as comments) if an
/// output path is set, and return the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    let summary = execute(config)?;
    if let Some(path) = &config.out {
        write_atomic(path, &render_csv(&header_lines(config), &summary.rows)?)?;
    }
    Ok(summary)
}

/// Comment lines echoed at the top of a result file.
pub fn header_lines(config: &ExperimentConfig) -> Vec<String> {
    let mut lines = vec![format!("rstre-core version {VERSION}")];
    lines.extend(config.to_lines());
    lines
}

fn run_point(p: &Point, graph: &Graph, summary: &mut RunSummary) -> Result<()> {
    let config = p.config;
    let beta = p.beta.unwrap_or(0.0);
    let g = &graph.g;
    let kind = config.sampler;
    let tol = config.tolerance("check", DEFAULT_CHECK_TOLERANCE);
    let trees = |r: u64| RngStream::new(config.seed, "trees", r);
    match config.experiment.as_str() {
        "overlap-sweep" => {
            let outs = p.replicas(summary, |r| {
                let env = environment(config, g, &graph.fixed, r)?;
                let wg = WeightedGraphView::new(g, &env, beta)?;
                let mut o = ReplicaOut::default();
                if config.exact {
                    o.push("edge_overlap", edge_overlap_exact(&wg)?, 0.0);
                    match tree_overlap_exact(&wg, EXPERIMENT_ENUMERATION_CAP) {
                        Ok(x) => o.push("tree_overlap", x, 0.0),
                        Err(Error::TooLarge(_)) => {}
                        Err(e) => return Err(e),
                    }
                } else {
                    let (edge, same) = edge_overlap_mc(&wg, 2 * config.samples.max(1), kind, &trees(r))?;
                    o.estimate("edge_overlap", edge);
                    o.estimate("tree_overlap", same);
                }
                Ok(o)
            });
            p.aggregate(summary, &outs, "edge_overlap", "mean_edge_overlap");
        }
        "length-sweep" => {
            let outs = p.replicas(summary, |r| {
                let mut o = ReplicaOut::default();
                if config.exact {
                    let env = environment(config, g, &graph.fixed, r)?;
                    o.push("expected_length", expected_length_exact(&WeightedGraphView::new(g, &env, beta)?)?, 0.0);
                } else {
                    let inst = graph.instance(config, r)?;
                    let stream = trees(r);
                    let xs = (0..config.samples.max(1) as u64)
                        .map(|i| Ok(inst.length(&inst.sample(beta, kind, &mut stream.substream("tree", i))?)))
                        .collect::<Result<Vec<_>>>()?;
                    o.estimate("expected_length", Estimate::from_samples(&xs));
                }
                Ok(o)
            });
            p.aggregate(summary, &outs, "expected_length", "mean_length");
        }
        "local-census" => {
            let patterns = [pattern_path(2), pattern_path(3), pattern_star(3)];
            let names = ["path2", "path3", "star3"];
            p.replicas(summary, |r| {
                let env = environment(config, g, &graph.fixed, r)?;
                let wg = WeightedGraphView::new(g, &env, beta)?;
                let reports = tree_moment_report(&wg, &patterns, config.samples.max(1), kind, &trees(r))?;
                let mut o = ReplicaOut::default();
                for (name, rep) in names.iter().zip(&reports) {
                    o.estimate(&format!("moment:{name}"), rep.estimate);
                    o.estimate(&format!("backbone:{name}"), rep.reference);
                }
                Ok(o)
            });
        }
        "kernel-pipeline" => {
            let outs = p.replicas(summary, |r| {
                let env = environment(config, g, &graph.fixed, r)?;
                let k = kernel_decompose(g, &env, beta)?;
                let mut o = ReplicaOut::default();
                o.push("excess", graph_excess(g) as f64, 0.0);
                o.push("core_vertices", k.two_core.graph.n() as f64, 0.0);
                o.push("kernel_vertices", k.kernel.n() as f64, 0.0);
                o.push("kernel_edges", k.kernel.m() as f64, 0.0);
                o.push("dropped_cycles", k.dropped_cycles.len() as f64, 0.0);
                o.push("kernel_loops", k.loops.len() as f64, 0.0);
                if config.exact && k.kernel.m() > 0 {
                    match kernel_coupling_check(g, &env, beta, EXPERIMENT_ENUMERATION_CAP) {
                        Ok(c) => {
                            let err = c.max_marginal_diff.max(c.max_kirchhoff_diff).max(c.joint_tv);
                            o.push("coupling_error", err, 0.0);
                            if !(err <= tol) {
                                o.failures.push(format!("replica {r}: kernel coupling error {err:e} > {tol:e}"));
                            }
                        }
                        Err(Error::CheckFailed(msg)) => o.failures.push(format!("replica {r}: {msg}")),
                        Err(e) => return Err(e),
                    }
                    let s = series_law_check(g, &env, beta, 5)?;
                    o.push("series_error", s, 0.0);
                    if !(s <= tol) {
                        o.failures.push(format!("replica {r}: series law error {s:e} > {tol:e}"));
                    }
                }
                Ok(o)
            });
            p.aggregate(summary, &outs, "kernel_vertices", "mean_kernel_vertices");
        }
        "mst-equality" => {
            let est = mst_equality_probability(g, &config.law, beta, config.replicas, kind, config.seed)?;
            summary.rows.push(p.row(None, "mst_equality".into(), est.mean, est.stderr, 0, config.seed));
        }
        "diagnostics" => {
            p.replicas(summary, |r| {
                let env = environment(config, g, &graph.fixed, r)?;
                let wg = WeightedGraphView::new(g, &env, beta)?;
                let d = walk_diagnostics(&wg)?;
                let mut o = ReplicaOut::default();
                o.push("d_ratio", d.d_ratio, 0.0);
                o.push("t_mix", d.t_mix as f64, 0.0);
                o.push("escaping_sum", d.escaping, 0.0);
                o.push(if d.phi_heuristic { "phi_upper" } else { "phi" }, d.phi, 0.0);
                if g.n() >= 2 && g.n() <= EXHAUSTIVE_LIMIT {
                    let bound = heat_cheeger_bound(&bottleneck_exhaustive(&wg)?);
                    o.push("heat_cheeger_bound", bound, 0.0);
                    if !(d.t_mix as f64 <= bound) {
                        o.failures.push(format!("replica {r}: t_mix {} exceeds bound {bound}", d.t_mix));
                    }
                }
                Ok(o)
            });
        }
        other => return Err(Error::invalid(format!("unknown experiment '{other}'"))),
    }
    Ok(())
}

fn diameter_scaling(config: &ExperimentConfig, summary: &mut RunSummary) -> Result<()> {
    let graphs = config
        .graphs()
        .into_iter()
        .map(|s| build_graph(config, s))
        .collect::<Result<Vec<_>>>()?;
    for b in &config.beta_grid {
        let mut sizes = Vec::new();
        let mut medians = Vec::new();
        for graph in &graphs {
            let n = graph.g.n();
            let beta = b.resolve(n);
            let point = Point { config, n, beta: Some(beta) };
            let outs = point.replicas(summary, |r| {
                let inst = graph.instance(config, r)?;
                let t = inst.sample(beta, config.sampler, &mut RngStream::new(config.seed, "trees", r))?;
                let mut o = ReplicaOut::default();
                o.push("diameter", t.diameter() as f64, 0.0);
                Ok(o)
            });
            let ds: Vec<f64> = outs.iter().flatten().map(|o| o.rows[0].1).collect();
            if !ds.is_empty() {
                let m = median(&ds);
                summary.rows.push(point.row(None, "median_diameter".into(), m, 0.0, 0, config.seed));
                sizes.push(n as f64);
                medians.push(m);
            }
        }
        if sizes.len() >= 2 {
            summary.rows.push(ResultRow {
                experiment: config.experiment.clone(),
                n: None,
                beta: match b {
                    BetaSpec::Value(v) => Some(*v),
                    _ => None,
                },
                replica: None,
                observable: format!("diameter_slope[beta={b}]"),
                value: log_log_slope(&sizes, &medians),
                stderr: 0.0,
                wall_ms: 0,
                seed: config.seed,
            });
        }
    }
    Ok(())
}

fn free_energy_sweep(config: &ExperimentConfig, summary: &mut RunSummary) -> Result<()> {
    for spec in config.graphs() {
        let (l, d) = match spec {
            GraphSpec::Box { l, d, torus: false } => (l, d),
            other => {
                return Err(Error::invalid(format!("free-energy-sweep needs a box graph, got {other}")))
            }
        };
        let bg = build_boundary_box(l, d, config.boundary)?;
        for b in &config.beta_grid {
            let beta = b.resolve(bg.volume);
            let point = Point { config, n: bg.volume, beta: Some(beta) };
            let outs = point.replicas(summary, |r| {
                let env = LatticeEnvironment::new(config.law.clone(), env_seed(config.seed, r), d)?;
                let mut o = ReplicaOut::default();
                o.push("free_energy", free_energy(&bg, &env, beta)?, 0.0);
                o.push("overlap_density", overlap_density(&bg, &env, beta)?, 0.0);
                Ok(o)
            });
            point.aggregate(summary, &outs, "free_energy", "mean_free_energy");
            point.aggregate(summary, &outs, "overlap_density", "mean_overlap_density");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_text(&format!("seed=5\n{text}")).unwrap()
    }

    fn value(s: &RunSummary, obs: &str) -> f64 {
        s.rows.iter().find(|r| r.observable == obs).unwrap().value
    }

    #[test]
    fn exact_overlap_on_triangle() {
        let s = execute(&config("experiment=overlap-sweep\ngraph=complete:3\nbeta=0\nexact=true\nreplicas=1")).unwrap();
        assert!((value(&s, "edge_overlap") - 4.0 / 3.0).abs() < 1e-12);
        assert!((value(&s, "tree_overlap") - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tree_diameters_are_deterministic() {
        let c = config("experiment=diameter-scaling\ngraph=path:9\nn-grid=9,17\nbeta=2\nreplicas=3");
        let s = execute(&c).unwrap();
        let d: Vec<f64> = s.rows.iter().filter(|r| r.observable == "diameter").map(|r| r.value).collect();
        assert_eq!(d, vec![8.0, 8.0, 8.0, 16.0, 16.0, 16.0]);
        assert!((value(&s, "diameter_slope[beta=2]") - (16f64.ln() - 8f64.ln()) / (17f64.ln() - 9f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        for text in [
            "experiment=overlap-sweep\ngraph=complete:6\nbeta=0,2\nreplicas=4\nsamples=20",
            "experiment=length-sweep\ngraph=cycle:7\nbeta=1\nreplicas=3\nsamples=10",
            "experiment=local-census\ngraph=complete:8\nbeta=0\nreplicas=2\nsamples=10",
        ] {
            let mut c = config(text);
            let a = execute(&c).unwrap();
            c.workers = 4;
            assert_eq!(a, execute(&c).unwrap());
        }
    }

    #[test]
    fn checks_and_lattice_rows() {
        let s = execute(&config("experiment=kernel-pipeline\ngraph=regular:8:3\nbeta=1\nexact=true\nreplicas=2")).unwrap();
        assert!(s.failed_checks.is_empty(), "{:?}", s.failed_checks);
        assert!(value(&s, "coupling_error") < 1e-9);
        let s = execute(&config("experiment=diagnostics\ngraph=cycle:6\nbeta=1\nreplicas=2")).unwrap();
        assert!(s.failed_checks.is_empty());
        let s = execute(&config("experiment=free-energy-sweep\ngraph=box:1:2\nbeta=0\nreplicas=1")).unwrap();
        assert!((value(&s, "free_energy") - 192f64.ln() / 9.0).abs() < 1e-12);
        let s = execute(&config("experiment=mst-equality\ngraph=complete:5\nbeta=n^2\nreplicas=20")).unwrap();
        assert!(value(&s, "mst_equality") > 0.5);
    }

    #[test]
    fn failed_replicas_become_error_rows() {
        // Weights underflow at this β, which Wilson's algorithm rejects.
        let s = execute(&config("experiment=length-sweep\ngraph=complete:4\nbeta=5000\nsampler=wilson\nreplicas=2")).unwrap();
        assert_eq!(s.replica_errors, 2);
        assert_eq!(s.rows.iter().filter(|r| r.observable.starts_with("error: ")).count(), 2);
        assert!(execute(&config("experiment=free-energy-sweep\ngraph=complete:4")).is_err());
    }

    #[test]
    fn output_file_round_trips_the_config() {
        let dir = std::env::temp_dir().join(format!("rstre-run-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let out = dir.join("o.csv");
        let c = config(&format!("experiment=overlap-sweep\ngraph=complete:4\nbeta=0.5\nreplicas=2\nsamples=5\nout={}", out.display()));
        run_experiment(&c).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with(&format!("# rstre-core version {VERSION}\n")));
        assert_eq!(ExperimentConfig::from_header(&text).unwrap(), c);
        run_experiment(&c).unwrap();
        assert_eq!(text, std::fs::read_to_string(&out).unwrap());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
