//! Command-line front end: every verb runs one experiment of the harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rstre_core::environment::{sample_environment, CompleteEnvironment, WeightedGraphView};
use rstre_core::harness::{
    env_seed, header_lines, render_csv, run_experiment, write_atomic, ExperimentConfig, GraphSpec,
    IMPLICIT_COMPLETE_ABOVE,
};
use rstre_core::rng::RngStream;
use rstre_core::sampler::{format_tree_line, sample_complete_tree, sample_tree};
use rstre_core::Error;

#[derive(Parser, Debug)]
#[command(name = "rstre", version, about = "Random spanning trees in random environment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample trees and print one line of edge ids per tree.
    Sample(Common),
    /// Edge and tree overlaps of two independent trees.
    Overlap(Common),
    /// Total tree length.
    Length(Common),
    /// Tree diameters across graph sizes.
    Diameter(Common),
    /// Local tree-map moments against the Poisson-backbone reference.
    Local(Common),
    /// 2-core and kernel reduction with the coupling checks.
    Kernel(Common),
    /// Free energy and overlap density of lattice boxes.
    Lattice(Common),
    /// Random-walk mixing diagnostics.
    Diagnose(Common),
    /// Probability that a sampled tree is the minimum spanning tree.
    MstProb(Common),
    /// Run the experiment named in a configuration file.
    Run(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Configuration file of `key=value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Graph, e.g. `complete:100`, `box:3:2`, `file:edges.txt`.
    #[arg(long)]
    graph: Option<String>,
    /// Graph sizes to sweep, comma separated.
    #[arg(long)]
    n_grid: Option<String>,
    /// Disorder law, e.g. `uniform01` or `gaussian mean=0 variance=1`.
    #[arg(long)]
    law: Option<String>,
    /// A single inverse temperature (`2.5`, `n^2`, `n*ln^3`).
    #[arg(long, conflicts_with = "beta_grid")]
    beta: Option<String>,
    /// Comma-separated inverse temperatures.
    #[arg(long)]
    beta_grid: Option<String>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Trees per environment.
    #[arg(long)]
    samples: Option<usize>,
    /// Master seed (default: `RSTRE_SEED`, else 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use exact (Kirchhoff or enumeration) values instead of sampling.
    #[arg(long)]
    exact: bool,
    /// wilson, aldous-broder, sequential or auto.
    #[arg(long)]
    sampler: Option<String>,
    /// free, wired or partial:λ.
    #[arg(long)]
    boundary: Option<String>,
    /// Record wall-clock times (outputs are then no longer byte-reproducible).
    #[arg(long)]
    timing: bool,
    /// Extra `key=value` settings, e.g. `tolerance.check=1e-8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn config(&self, experiment: Option<&str>) -> rstre_core::Result<ExperimentConfig> {
        let mut c = ExperimentConfig {
            seed: ExperimentConfig::default_seed()?,
            ..Default::default()
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            c.apply_text(&text)?;
        }
        if let Some(e) = experiment {
            c.set("experiment", e)?;
        }
        let flags = [
            ("graph", self.graph.clone()),
            ("n-grid", self.n_grid.clone()),
            ("law", self.law.clone()),
            ("beta", self.beta.clone().or_else(|| self.beta_grid.clone())),
            ("replicas", self.replicas.map(|x| x.to_string())),
            ("samples", self.samples.map(|x| x.to_string())),
            ("seed", self.seed.map(|x| x.to_string())),
            ("workers", self.workers.map(|x| x.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("sampler", self.sampler.clone()),
            ("boundary", self.boundary.clone()),
            ("exact", self.exact.then(|| "true".to_string())),
            ("timing", self.timing.then(|| "true".to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            c.set(k, v)?;
        }
        Ok(c)
    }
}

fn sample_trees(config: &ExperimentConfig) -> rstre_core::Result<String> {
    let spec = &config.graph;
    let stream = RngStream::new(config.seed, "trees", 0);
    let mut lines = header_lines(config);
    lines.retain(|l| !l.starts_with("experiment="));
    let mut out: String = lines.iter().map(|l| format!("# {l}\n")).collect();
    let seed = env_seed(config.seed, 0);
    let implicit = matches!(spec, GraphSpec::Complete(n) if *n > IMPLICIT_COMPLETE_ABOVE);
    let (graph, kn) = if implicit {
        let GraphSpec::Complete(n) = spec else { unreachable!() };
        (None, Some(CompleteEnvironment::new(*n, config.law.clone(), seed)?))
    } else {
        let (g, fixed) = spec.build(config.seed)?;
        let env = match fixed {
            Some(omega) => rstre_core::environment::Environment::fixed(omega),
            None => sample_environment(&config.law, &g, seed)?,
        };
        (Some((g, env)), None)
    };
    for i in 0..config.replicas as u64 {
        let mut rng = stream.substream("tree", i);
        let t = match (&graph, &kn) {
            (Some((g, env)), _) => {
                let n = g.n();
                let wg = WeightedGraphView::new(g, env, config.beta_grid[0].resolve(n))?;
                sample_tree(&wg, config.sampler, &mut rng)?
            }
            (None, Some(kn)) => {
                sample_complete_tree(kn, config.beta_grid[0].resolve(kn.n()), config.sampler, &mut rng)?
            }
            _ => unreachable!(),
        };
        out.push_str(&format_tree_line(&t));
        out.push('\n');
    }
    Ok(out)
}

fn usage_error(e: &Error) -> bool {
    matches!(e, Error::InvalidArgument(_) | Error::Parse { .. })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (common, experiment) = match &cli.command {
        Command::Sample(c) => (c, None),
        Command::Overlap(c) => (c, Some("overlap-sweep")),
        Command::Length(c) => (c, Some("length-sweep")),
        Command::Diameter(c) => (c, Some("diameter-scaling")),
        Command::Local(c) => (c, Some("local-census")),
        Command::Kernel(c) => (c, Some("kernel-pipeline")),
        Command::Lattice(c) => (c, Some("free-energy-sweep")),
        Command::Diagnose(c) => (c, Some("diagnostics")),
        Command::MstProb(c) => (c, Some("mst-equality")),
        Command::Run(c) => (c, None),
    };
    if matches!(cli.command, Command::Run(_)) && common.config.is_none() {
        eprintln!("error: run needs --config");
        return ExitCode::from(1);
    }
    let config = match common.config(experiment) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if usage_error(&e) { 1 } else { 3 });
        }
    };
    let result = if matches!(cli.command, Command::Sample(_)) {
        sample_trees(&config).and_then(|text| match &config.out {
            Some(p) => write_atomic(p, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        })
        .map(|_| Vec::new())
    } else {
        run_experiment(&config).and_then(|s| {
            if config.out.is_none() {
                print!("{}", render_csv(&header_lines(&config), &s.rows)?);
            }
            if s.replica_errors > 0 {
                eprintln!("warning: {} replica(s) failed; see the error rows", s.replica_errors);
            }
            Ok(s.failed_checks)
        })
    };
    match result {
        Ok(failed) if failed.is_empty() => ExitCode::SUCCESS,
        Ok(failed) => {
            for f in &failed {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { 1 } else { 3 })
        }
    }
}
