//! Experiment configuration: flat `key=value` files, graph and β specifications.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::environment::DisorderLaw;
use crate::error::{Error, Result};
use crate::graph::{
    build_box, build_complete, build_cycle, build_from_edge_list, build_path, build_random_regular,
    build_star, MultiGraph,
};
use crate::lattice::Boundary;
use crate::reduction::sample_contiguous_giant;
use crate::rng::{derive_seed, RngStream};
use crate::sampler::SamplerKind;

/// Experiments known to [`super::run_experiment`].
pub const EXPERIMENTS: [&str; 8] = [
    "overlap-sweep",
    "length-sweep",
    "diameter-scaling",
    "local-census",
    "kernel-pipeline",
    "free-energy-sweep",
    "mst-equality",
    "diagnostics",
];

/// One point of a β grid, possibly scaling with the graph size `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaSpec {
    Value(f64),
    /// `n^p`.
    NPow(f64),
    /// `n (ln n)^p`.
    NLogPow(f64),
}

impl BetaSpec {
    pub fn resolve(&self, n: usize) -> f64 {
        let x = n as f64;
        match *self {
            BetaSpec::Value(b) => b,
            BetaSpec::NPow(p) => x.powf(p),
            BetaSpec::NLogPow(p) => x * x.ln().powf(p),
        }
    }
}

impl FromStr for BetaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad beta specification '{s}'")))
        };
        let b = if let Some(p) = s.strip_prefix("n*ln^") {
            BetaSpec::NLogPow(num(p)?)
        } else if let Some(p) = s.strip_prefix("n^") {
            BetaSpec::NPow(num(p)?)
        } else if s == "n" {
            BetaSpec::NPow(1.0)
        } else {
            BetaSpec::Value(num(s)?)
        };
        let ok = match b {
            BetaSpec::Value(v) => v >= 0.0 && v.is_finite(),
            BetaSpec::NPow(p) | BetaSpec::NLogPow(p) => p.is_finite(),
        };
        if !ok {
            return Err(Error::invalid(format!("beta '{s}' must be finite and >= 0")));
        }
        Ok(b)
    }
}

impl fmt::Display for BetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaSpec::Value(b) => write!(f, "{b}"),
            BetaSpec::NPow(p) => write!(f, "n^{p}"),
            BetaSpec::NLogPow(p) => write!(f, "n*ln^{p}"),
        }
    }
}

/// Graph families: `complete:N`, `path:N`, `cycle:N`, `star:K`, `box:L:D`, `torus:L:D`,
/// `regular:N:D`, `tree:N` (random recursive tree), `contiguous:N:EPS`, `file:PATH`.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSpec {
    Complete(usize),
    Path(usize),
    Cycle(usize),
    Star(usize),
    Box { l: usize, d: usize, torus: bool },
    Regular { n: usize, d: usize },
    Tree(usize),
    Contiguous { n: usize, eps: f64 },
    File(PathBuf),
}

impl GraphSpec {
    /// The same family with its size parameter replaced by `size`.
    pub fn with_size(&self, size: usize) -> GraphSpec {
        match self {
            GraphSpec::Complete(_) => GraphSpec::Complete(size),
            GraphSpec::Path(_) => GraphSpec::Path(size),
            GraphSpec::Cycle(_) => GraphSpec::Cycle(size),
            GraphSpec::Star(_) => GraphSpec::Star(size),
            GraphSpec::Box { d, torus, .. } => GraphSpec::Box {
                l: size,
                d: *d,
                torus: *torus,
            },
            GraphSpec::Regular { d, .. } => GraphSpec::Regular { n: size, d: *d },
            GraphSpec::Tree(_) => GraphSpec::Tree(size),
            GraphSpec::Contiguous { eps, .. } => GraphSpec::Contiguous { n: size, eps: *eps },
            GraphSpec::File(p) => GraphSpec::File(p.clone()),
        }
    }

    /// Build the graph; random families draw from `derive_seed(seed, "graph", 0)`.
    /// A file may carry disorder values, returned alongside.
    pub fn build(&self, seed: u64) -> Result<(MultiGraph, Option<Vec<f64>>)> {
        let graph_seed = derive_seed(seed, "graph", 0);
        let g = match self {
            GraphSpec::Complete(n) => build_complete(*n)?,
            GraphSpec::Path(n) => build_path(*n)?,
            GraphSpec::Cycle(n) => build_cycle(*n)?,
            GraphSpec::Star(k) => build_star(*k)?,
            GraphSpec::Box { l, d, torus } => build_box(*l, *d, *torus)?,
            GraphSpec::Regular { n, d } => build_random_regular(*n, *d, graph_seed)?,
            GraphSpec::Tree(n) => {
                if *n == 0 {
                    return Err(Error::invalid("tree needs n >= 1"));
                }
                let mut rng = RngStream::new(graph_seed, "tree", 0);
                let edges: Vec<_> = (1..*n).map(|v| (rng.below(v), v)).collect();
                MultiGraph::from_edges(*n, &edges)?
            }
            GraphSpec::Contiguous { n, eps } => {
                let mut rng = RngStream::new(graph_seed, "contiguous", 0);
                sample_contiguous_giant(*n, *eps, &mut rng)?.graph
            }
            GraphSpec::File(p) => {
                let (g, env) = build_from_edge_list(p)?;
                return Ok((g, env.map(|e| e.omega().to_vec())));
            }
        };
        Ok((g, None))
    }

    pub fn is_complete(&self) -> bool {
        matches!(self, GraphSpec::Complete(_))
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        if family == "file" {
            if rest.is_empty() {
                return Err(Error::invalid("file graph needs a path"));
            }
            return Ok(GraphSpec::File(PathBuf::from(rest)));
        }
        let args: Vec<&str> = if rest.is_empty() { vec![] } else { rest.split(':').collect() };
        let bad = || Error::invalid(format!("bad graph specification '{s}'"));
        let int = |i: usize| -> Result<usize> { args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let want = |k: usize| if args.len() == k { Ok(()) } else { Err(bad()) };
        Ok(match family {
            "complete" => {
                want(1)?;
                GraphSpec::Complete(int(0)?)
            }
            "path" => {
                want(1)?;
                GraphSpec::Path(int(0)?)
            }
            "cycle" => {
                want(1)?;
                GraphSpec::Cycle(int(0)?)
            }
            "star" => {
                want(1)?;
                GraphSpec::Star(int(0)?)
            }
            "box" | "torus" => {
                want(2)?;
                GraphSpec::Box {
                    l: int(0)?,
                    d: int(1)?,
                    torus: family == "torus",
                }
            }
            "regular" => {
                want(2)?;
                GraphSpec::Regular { n: int(0)?, d: int(1)? }
            }
            "tree" => {
                want(1)?;
                GraphSpec::Tree(int(0)?)
            }
            "contiguous" => {
                want(2)?;
                GraphSpec::Contiguous {
                    n: int(0)?,
                    eps: args[1].parse().map_err(|_| bad())?,
                }
            }
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Star(k) => write!(f, "star:{k}"),
            GraphSpec::Box { l, d, torus } => {
                write!(f, "{}:{l}:{d}", if *torus { "torus" } else { "box" })
            }
            GraphSpec::Regular { n, d } => write!(f, "regular:{n}:{d}"),
            GraphSpec::Tree(n) => write!(f, "tree:{n}"),
            GraphSpec::Contiguous { n, eps } => write!(f, "contiguous:{n}:{eps}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

pub fn parse_boundary(s: &str) -> Result<Boundary> {
    match s.trim() {
        "free" => Ok(Boundary::Free),
        "wired" => Ok(Boundary::Wired),
        other => match other.strip_prefix("partial:") {
            Some(l) => Ok(Boundary::Partial(
                l.parse().map_err(|_| Error::invalid(format!("bad boundary '{other}'")))?,
            )),
            None => Err(Error::invalid(format!("unknown boundary '{other}'"))),
        },
    }
}

pub fn format_boundary(b: Boundary) -> String {
    match b {
        Boundary::Free => "free".into(),
        Boundary::Wired => "wired".into(),
        Boundary::Partial(l) => format!("partial:{l}"),
    }
}

fn format_sampler(k: SamplerKind) -> &'static str {
    match k {
        SamplerKind::Wilson => "wilson",
        SamplerKind::AldousBroder => "aldous-broder",
        SamplerKind::Sequential => "sequential",
        SamplerKind::Auto => "auto",
    }
}

/// Everything needed to rerun an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub graph: GraphSpec,
    /// Graph sizes to sweep; each replaces the size parameter of `graph`.
    pub n_grid: Vec<usize>,
    pub law: DisorderLaw,
    pub beta_grid: Vec<BetaSpec>,
    /// Number of environments (or trees, for experiments on a fixed environment).
    pub replicas: usize,
    /// Trees per environment for Monte Carlo estimates.
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub exact: bool,
    pub sampler: SamplerKind,
    /// Record wall-clock times; off by default so that outputs are byte-reproducible.
    pub timing: bool,
    pub boundary: Boundary,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "overlap-sweep".into(),
            graph: GraphSpec::Complete(10),
            n_grid: Vec::new(),
            law: DisorderLaw::Uniform01,
            beta_grid: vec![BetaSpec::Value(1.0)],
            replicas: 10,
            samples: 100,
            seed: 0,
            workers: 1,
            out: None,
            exact: false,
            sampler: SamplerKind::Auto,
            timing: false,
            boundary: Boundary::Free,
            tolerances: BTreeMap::new(),
        }
    }
}

fn parse_bool(k: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::invalid(format!("{k}: expected a boolean, got '{v}'"))),
    }
}

fn parse_num<T: FromStr>(k: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::invalid(format!("{k}: cannot parse '{v}'")))
}

impl ExperimentConfig {
    /// Default master seed: `RSTRE_SEED` if set, else 0.
    pub fn default_seed() -> Result<u64> {
        match std::env::var("RSTRE_SEED") {
            Ok(s) => parse_num("RSTRE_SEED", s.trim()),
            Err(_) => Ok(0),
        }
    }

    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "experiment" => {
                if !EXPERIMENTS.contains(&v) {
                    return Err(Error::invalid(format!("unknown experiment '{v}'")));
                }
                self.experiment = v.to_string();
            }
            "graph" => self.graph = v.parse()?,
            "n-grid" => {
                self.n_grid = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|x| parse_num("n-grid", x.trim())).collect::<Result<_>>()?
                }
            }
            "law" => self.law = DisorderLaw::parse(v)?,
            "beta" | "beta-grid" => {
                self.beta_grid = v.split(',').map(str::parse).collect::<Result<_>>()?;
                if self.beta_grid.is_empty() {
                    return Err(Error::invalid("empty beta grid"));
                }
            }
            "replicas" => self.replicas = parse_num(key, v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "workers" => {
                self.workers = parse_num(key, v)?;
                if self.workers == 0 {
                    return Err(Error::invalid("workers must be >= 1"));
                }
            }
            "out" => self.out = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "exact" => self.exact = parse_bool(key, v)?,
            "sampler" => self.sampler = v.parse()?,
            "timing" => self.timing = parse_bool(key, v)?,
            "boundary" => self.boundary = parse_boundary(v)?,
            k => match k.strip_prefix("tolerance.") {
                Some(name) if !name.is_empty() => {
                    self.tolerances.insert(name.to_string(), parse_num(k, v)?);
                }
                _ => return Err(Error::invalid(format!("unknown configuration key '{k}'"))),
            },
        }
        Ok(())
    }

    /// Apply `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key=value, got '{line}'"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig {
            seed: Self::default_seed()?,
            ..Default::default()
        };
        c.apply_text(text)?;
        Ok(c)
    }

    /// `key=value` lines reproducing this configuration exactly.
    pub fn to_lines(&self) -> Vec<String> {
        let join = |xs: Vec<String>| xs.join(",");
        let mut lines = vec![
            format!("experiment={}", self.experiment),
            format!("graph={}", self.graph),
            format!("n-grid={}", join(self.n_grid.iter().map(|n| n.to_string()).collect())),
            format!("law={}", self.law),
            format!("beta={}", join(self.beta_grid.iter().map(|b| b.to_string()).collect())),
            format!("replicas={}", self.replicas),
            format!("samples={}", self.samples),
            format!("seed={}", self.seed),
            format!("workers={}", self.workers),
            format!(
                "out={}",
                self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
            ),
            format!("exact={}", self.exact),
            format!("sampler={}", format_sampler(self.sampler)),
            format!("timing={}", self.timing),
            format!("boundary={}", format_boundary(self.boundary)),
        ];
        for (k, v) in &self.tolerances {
            lines.push(format!("tolerance.{k}={v}"));
        }
        lines
    }

    /// Recover a configuration from the comment header of a result file.
    pub fn from_header(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for line in text.lines() {
            let Some(body) = line.strip_prefix("# ") else { break };
            if let Some((k, v)) = body.split_once('=') {
                c.set(k, v)?;
            }
        }
        Ok(c)
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Graph specifications to run: one per entry of `n_grid`, or `graph` itself.
    pub fn graphs(&self) -> Vec<GraphSpec> {
        if self.n_grid.is_empty() {
            vec![self.graph.clone()]
        } else {
            self.n_grid.iter().map(|&n| self.graph.with_size(n)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip() {
        for s in ["complete:5", "box:2:3", "torus:1:2", "regular:10:3", "tree:7", "contiguous:100:0.1", "file:a/b.txt"] {
            assert_eq!(s.parse::<GraphSpec>().unwrap().to_string(), s);
        }
        assert!("complete".parse::<GraphSpec>().is_err());
        assert!("box:2".parse::<GraphSpec>().is_err());
        for s in ["0", "2.5", "n^2", "n*ln^3"] {
            assert_eq!(s.parse::<BetaSpec>().unwrap().to_string(), s);
        }
        assert_eq!("n^2".parse::<BetaSpec>().unwrap().resolve(10), 100.0);
        assert!("-1".parse::<BetaSpec>().is_err());
    }

    #[test]
    fn config_round_trip() {
        let text = "# comment\nexperiment=mst-equality\ngraph=box:1:2\nn-grid=1,2\nlaw=gaussian mean=0 variance=2\n\
                    beta=0,0.1,n^2\nreplicas=7\nseed=99\nexact=true\nsampler=wilson\nboundary=partial:0.5\ntolerance.tv=0.001\n";
        let c = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(c.replicas, 7);
        assert_eq!(c.graphs().len(), 2);
        let echo: String = c.to_lines().iter().map(|l| format!("# {l}\n")).collect();
        assert_eq!(ExperimentConfig::from_header(&echo).unwrap(), c);
        assert!(ExperimentConfig::from_text("experiment=nope").is_err());
        assert!(matches!(ExperimentConfig::from_text("x"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn random_tree_is_a_tree() {
        let (g, _) = GraphSpec::Tree(30).build(4).unwrap();
        assert_eq!(g.m(), 29);
        assert!(g.is_connected());
    }
}
