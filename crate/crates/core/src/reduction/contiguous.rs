//! The contiguous model of the slightly supercritical giant component, kernel-weight
//! statistics and the snapshot schedule of the percolation coupling.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::graph::{census_from_edges, ComponentCensus, MultiGraph};
use crate::rng::RngStream;

/// Attempts at drawing a usable degree vector.
const DEGREE_BUDGET: usize = 1000;

/// The conjugate `μ ∈ (0, 1]` with `μ e^{−μ} = (1+ε) e^{−(1+ε)}`, by bisection.
pub fn conjugate_parameter(eps: f64) -> Result<f64> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("eps = {eps} must be finite and >= 0")));
    }
    if eps == 0.0 {
        return Ok(1.0);
    }
    let target = (1.0 + eps) * (-(1.0 + eps)).exp();
    let f = |mu: f64| mu * (-mu).exp() - target;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Parameters drawn by the contiguous model.
#[derive(Clone, Debug, PartialEq)]
pub struct ContiguousModelParams {
    pub n: usize,
    pub eps: f64,
    pub mu_star: f64,
    /// The normal draw `Λ ~ N(1+ε−μ, 1/(εn))`.
    pub lambda: f64,
    /// Degrees `D_u ≥ 3` of the kernel vertices.
    pub degrees: Vec<usize>,
    /// `N_k`: number of kernel vertices of degree `k`.
    pub counts: BTreeMap<usize, usize>,
    /// Success parameter `1 − μ` of the path lengths.
    pub geometric_p: f64,
}

/// A sample of the contiguous model.
#[derive(Clone, Debug)]
pub struct ContiguousGiant {
    pub graph: MultiGraph,
    pub params: ContiguousModelParams,
    /// Number of kernel vertices (vertices `0..kernel_size` of `graph`).
    pub kernel_size: usize,
    /// Length of the path replacing every kernel edge.
    pub path_lengths: Vec<usize>,
    /// Self-loops of the configuration model, dropped.
    pub self_loops_dropped: usize,
    /// The kernel multigraph has parallel edges.
    pub multi_edges: bool,
    /// `ε³ n < 5`: the model is a poor approximation.
    pub small_window: bool,
}

fn geometric(rng: &mut RngStream, p: f64) -> usize {
    // Number of trials up to and including the first success, by inversion.
    if p >= 1.0 {
        return 1;
    }
    let u = rng.uniform();
    1 + (u.ln() / (1.0 - p).ln()).floor() as usize
}

/// Sample the three-stage model: a configuration multigraph on Poisson(Λ) degrees
/// conditioned to be at least 3 (with even total), every edge replaced by a path of
/// Geometric(1−μ) length, and a Poisson(μ) Galton–Watson tree hung on every vertex.
pub fn sample_contiguous_giant(n: usize, eps: f64, rng: &mut RngStream) -> Result<ContiguousGiant> {
    if n < 2 || !(eps > 0.0) {
        return Err(Error::invalid("contiguous model needs n >= 2 and eps > 0"));
    }
    let mu = conjugate_parameter(eps)?;
    let sd = (1.0 / (eps * n as f64)).sqrt();
    let normal = Normal::new(1.0 + eps - mu, sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut lambda = normal.sample(rng);
    let mut tries = 0;
    while !(lambda > 0.0) {
        tries += 1;
        if tries > DEGREE_BUDGET {
            return Err(Error::RetryExhausted("no positive draw of Lambda".into()));
        }
        lambda = normal.sample(rng);
    }
    let poisson = Poisson::new(lambda).map_err(|e| Error::invalid(e.to_string()))?;
    // Degree vector, resampled in full until the kernel stub count is even and there
    // are at least two kernel vertices.
    let mut degrees = Vec::new();
    let mut ok = false;
    for _ in 0..DEGREE_BUDGET {
        degrees = (0..n)
            .map(|_| poisson.sample(rng) as usize)
            .filter(|&d| d >= 3)
            .collect();
        let total: usize = degrees.iter().sum();
        if total % 2 == 0 && degrees.len() >= 2 {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::RetryExhausted(
            "no degree vector with an even kernel stub count".into(),
        ));
    }
    let k = degrees.len();
    let mut stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat(v).take(d))
        .collect();
    rng.shuffle(&mut stubs);
    let mut kernel_edges = Vec::with_capacity(stubs.len() / 2);
    let mut self_loops_dropped = 0;
    for pair in stubs.chunks(2) {
        if pair[0] == pair[1] {
            self_loops_dropped += 1;
        } else {
            kernel_edges.push((pair[0].min(pair[1]), pair[0].max(pair[1])));
        }
    }
    let multi_edges = {
        let mut sorted = kernel_edges.clone();
        sorted.sort_unstable();
        sorted.windows(2).any(|w| w[0] == w[1])
    };
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut nv = k;
    let mut path_lengths = Vec::with_capacity(kernel_edges.len());
    for &(a, b) in &kernel_edges {
        let len = geometric(rng, 1.0 - mu);
        path_lengths.push(len);
        let mut prev = a;
        for _ in 1..len {
            edges.push((prev, nv));
            prev = nv;
            nv += 1;
        }
        edges.push((prev, b));
    }
    let depth_cap = (50.0 * (n as f64).ln()).ceil() as usize;
    let gw = Poisson::new(mu).map_err(|e| Error::invalid(e.to_string()))?;
    let base = nv;
    for root in 0..base {
        let mut frontier = vec![root];
        let mut depth = 0;
        while !frontier.is_empty() {
            if depth >= depth_cap {
                return Err(Error::NonTermination(depth_cap as u64));
            }
            let mut next = Vec::new();
            for &x in &frontier {
                for _ in 0..gw.sample(rng) as usize {
                    edges.push((x, nv));
                    next.push(nv);
                    nv += 1;
                }
            }
            frontier = next;
            depth += 1;
        }
    }
    let g = MultiGraph::from_edges(nv, &edges)?;
    let mut counts = BTreeMap::new();
    for &d in &degrees {
        *counts.entry(d).or_insert(0) += 1;
    }
    Ok(ContiguousGiant {
        graph: g,
        params: ContiguousModelParams {
            n,
            eps,
            mu_star: mu,
            lambda,
            degrees,
            counts,
            geometric_p: 1.0 - mu,
        },
        kernel_size: k,
        path_lengths,
        self_loops_dropped,
        multi_edges,
        small_window: eps.powi(3) * (n as f64) < 5.0,
    })
}

/// One draw of the kernel-edge weight law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelWeightSample {
    /// Path length `L ~ Geometric(1−μ)` on `{1, 2, ...}`.
    pub l: usize,
    /// `M_L`: minimum of the `L` uniforms.
    pub m_l: f64,
    /// `ŵ = Σ_{k≤L} e^{−β p₁ U_k}`.
    pub what: f64,
}

/// Summary of kernel-weight samples.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelWeightReport {
    pub samples: Vec<KernelWeightSample>,
    /// Empirical quantiles of `ŵ` at levels 0.1, 0.5 and 0.9.
    pub quantiles: [f64; 3],
    /// Samples with `ŵ < e^{−β p₁ M_L}` (always 0).
    pub lower_violations: usize,
    /// Fraction of samples with `ŵ ≤ C e^{−β p₁ M_L} log n`.
    pub sandwich_fraction: f64,
}

/// Sample `samples` kernel weights and check the sandwich around `e^{−β p₁ M_L}`.
pub fn kernel_weight_law_stats(
    beta: f64,
    p1: f64,
    mu_star: f64,
    samples: usize,
    n: usize,
    c: f64,
    rng: &mut RngStream,
) -> Result<KernelWeightReport> {
    if !(0.0..1.0).contains(&mu_star) || samples == 0 {
        return Err(Error::invalid("need mu_star in [0, 1) and samples > 0"));
    }
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let l = geometric(rng, 1.0 - mu_star);
        let mut what = 0.0;
        let mut m_l = f64::INFINITY;
        for _ in 0..l {
            let u = rng.uniform();
            m_l = m_l.min(u);
            what += (-beta * p1 * u).exp();
        }
        out.push(KernelWeightSample { l, m_l, what });
    }
    let lower = |s: &KernelWeightSample| (-beta * p1 * s.m_l).exp();
    let lower_violations = out.iter().filter(|s| s.what < lower(s) * (1.0 - 1e-12)).count();
    let log_n = (n.max(2) as f64).ln();
    let inside = out.iter().filter(|s| s.what <= c * lower(s) * log_n).count();
    let mut ws: Vec<f64> = out.iter().map(|s| s.what).collect();
    ws.sort_by(f64::total_cmp);
    let q = |p: f64| ws[((p * (ws.len() - 1) as f64).round() as usize).min(ws.len() - 1)];
    Ok(KernelWeightReport {
        quantiles: [q(0.1), q(0.5), q(0.9)],
        lower_violations,
        sandwich_fraction: inside as f64 / samples as f64,
        samples: out,
    })
}

/// Snapshot times `p_i = (1 + g_i ε)/n` with `g_i = (5/4)^{i/2} g_0`, up to the first
/// `i` with `g_i ε ≥ 1/log n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSchedule {
    pub g0: f64,
    pub eps: f64,
    pub n: usize,
    pub g: Vec<f64>,
    pub p: Vec<f64>,
    /// Index of the last snapshot.
    pub m: usize,
}

impl SnapshotSchedule {
    pub fn new(g0: f64, eps: f64, n: usize) -> Result<Self> {
        if !(g0 > 0.0) || !(eps > 0.0) || n < 3 {
            return Err(Error::invalid("snapshot schedule needs g0 > 0, eps > 0, n >= 3"));
        }
        let target = 1.0 / (n as f64).ln();
        let mut g = Vec::new();
        let mut p = Vec::new();
        let mut i = 0;
        loop {
            let gi = 1.25f64.powf(i as f64 / 2.0) * g0;
            g.push(gi);
            p.push((1.0 + gi * eps) / n as f64);
            if gi * eps >= target {
                break;
            }
            i += 1;
        }
        Ok(SnapshotSchedule {
            g0,
            eps,
            n,
            g,
            p,
            m: i,
        })
    }
}

/// Keep every edge independently with probability `p` and take the component census.
pub fn bernoulli_percolation(g: &MultiGraph, p: f64, rng: &mut RngStream) -> ComponentCensus {
    let kept: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .copied()
        .filter(|_| rng.uniform() < p)
        .collect();
    census_from_edges(g.n(), kept)
}
