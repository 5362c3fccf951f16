//! Disorder laws, sampled environments, Gibbs edge weights `w(e) = exp(-β ω_e)`, the
//! percolation coupling and concentration bounds for the edge weights.

use std::fmt;

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::graph::{complete_edge_id, EdgeId, MultiGraph, VertexId};
use crate::rng::KeyedUniforms;

/// Stream tag of environment uniforms; the uniform for edge `e` sits at position `e`.
pub const ENV_TAG: &str = "environment";

/// Distribution of the disorder variables `ω_e`.
#[derive(Clone, Debug, PartialEq)]
pub enum DisorderLaw {
    /// Uniform on `[0, 1]`.
    Uniform01,
    /// `F(t) = c_mu t^alpha` on `[0, rho]`. With `extend` the same power law is
    /// continued up to `c_mu^(-1/alpha)`, where it reaches mass one.
    PowerTail {
        alpha: f64,
        c_mu: f64,
        rho: f64,
        extend: bool,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// Uniform on `[a, b]`.
    Bounded {
        a: f64,
        b: f64,
    },
    /// Law of `-exp(1/U)` with `U` uniform on `(0, 1)`.
    NegExpInv,
    /// Piecewise-linear inverse CDF through points `(p, x)`, `p` running from 0 to 1.
    TableInverseCdf {
        points: Vec<(f64, f64)>,
    },
}

impl DisorderLaw {
    pub fn power_tail(alpha: f64, c_mu: f64, rho: f64) -> Self {
        DisorderLaw::PowerTail {
            alpha,
            c_mu,
            rho,
            extend: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DisorderLaw::Uniform01 | DisorderLaw::NegExpInv => Ok(()),
            DisorderLaw::PowerTail {
                alpha, c_mu, rho, ..
            } => {
                if !(*alpha > 0.0 && *c_mu > 0.0 && *rho > 0.0) {
                    return Err(Error::invalid("power tail needs alpha, c_mu, rho > 0"));
                }
                if c_mu * rho.powf(*alpha) > 1.0 + 1e-12 {
                    return Err(Error::invalid("power tail needs c_mu * rho^alpha <= 1"));
                }
                Ok(())
            }
            DisorderLaw::Gaussian { mean, variance } => {
                if !mean.is_finite() || !(*variance > 0.0) || !variance.is_finite() {
                    return Err(Error::invalid("gaussian needs finite mean and variance > 0"));
                }
                Ok(())
            }
            DisorderLaw::Bounded { a, b } => {
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    return Err(Error::invalid("bounded law needs finite a <= b"));
                }
                Ok(())
            }
            DisorderLaw::TableInverseCdf { points } => {
                if points.len() < 2 {
                    return Err(Error::invalid("table needs at least two points"));
                }
                if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
                    return Err(Error::invalid("table probabilities must run from 0 to 1"));
                }
                for w in points.windows(2) {
                    if w[1].0 < w[0].0 || w[1].1 < w[0].1 || !w[1].1.is_finite() {
                        return Err(Error::invalid("table must be monotone nondecreasing"));
                    }
                }
                Ok(())
            }
        }
    }

    /// `F⁻¹(p)`, the quantile function.
    pub fn inverse_cdf(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        Ok(match self {
            DisorderLaw::Uniform01 => p,
            DisorderLaw::PowerTail {
                alpha,
                c_mu,
                rho,
                extend,
            } => {
                if !extend && p > c_mu * rho.powf(*alpha) {
                    return Err(Error::UnsupportedRange(format!(
                        "p = {p} exceeds c_mu rho^alpha = {} and the tail is not extended",
                        c_mu * rho.powf(*alpha)
                    )));
                }
                (p / c_mu).powf(1.0 / alpha)
            }
            DisorderLaw::Gaussian { mean, variance } => {
                if p == 0.0 {
                    f64::NEG_INFINITY
                } else if p == 1.0 {
                    f64::INFINITY
                } else {
                    Normal::new(*mean, variance.sqrt())
                        .map_err(|e| Error::invalid(e.to_string()))?
                        .inverse_cdf(p)
                }
            }
            DisorderLaw::Bounded { a, b } => a + (b - a) * p,
            DisorderLaw::NegExpInv => {
                if p == 1.0 {
                    -std::f64::consts::E
                } else {
                    let v = -(1.0 / p).exp();
                    // Saturate: ω is finite by contract.
                    if v.is_finite() {
                        v
                    } else {
                        -f64::MAX
                    }
                }
            }
            DisorderLaw::TableInverseCdf { points } => {
                let i = points.partition_point(|q| q.0 < p);
                if i == 0 {
                    points[0].1
                } else {
                    let (p0, x0) = points[i - 1];
                    let (p1, x1) = points[i.min(points.len() - 1)];
                    if p1 == p0 {
                        x1
                    } else {
                        x0 + (x1 - x0) * (p - p0) / (p1 - p0)
                    }
                }
            }
        })
    }

    /// `F(t)`, where available in closed form.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(match self {
            DisorderLaw::Uniform01 => t.clamp(0.0, 1.0),
            DisorderLaw::PowerTail {
                alpha,
                c_mu,
                rho,
                extend,
            } => {
                if t <= 0.0 {
                    0.0
                } else if !extend && t > *rho {
                    return Err(Error::UnsupportedRange(format!(
                        "t = {t} beyond rho = {rho} and the tail is not extended"
                    )));
                } else {
                    (c_mu * t.powf(*alpha)).min(1.0)
                }
            }
            DisorderLaw::Gaussian { mean, variance } => Normal::new(*mean, variance.sqrt())
                .map_err(|e| Error::invalid(e.to_string()))?
                .cdf(t),
            DisorderLaw::Bounded { a, b } => {
                if t < *a {
                    0.0
                } else if t >= *b {
                    1.0
                } else {
                    (t - a) / (b - a)
                }
            }
            DisorderLaw::NegExpInv => {
                if t >= -std::f64::consts::E {
                    1.0
                } else {
                    1.0 / (-t).ln()
                }
            }
            DisorderLaw::TableInverseCdf { .. } => {
                return Err(Error::Unsupported("cdf of a tabulated law".into()))
            }
        })
    }

    /// Essential infimum of the support, when finite.
    pub fn support_min(&self) -> Option<f64> {
        match self {
            DisorderLaw::Uniform01 | DisorderLaw::PowerTail { .. } => Some(0.0),
            DisorderLaw::Bounded { a, .. } => Some(*a),
            DisorderLaw::TableInverseCdf { points } => Some(points[0].1),
            DisorderLaw::Gaussian { .. } | DisorderLaw::NegExpInv => None,
        }
    }

    /// Draw `ω` from a uniform `u ∈ (0, 1)` by inversion.
    #[inline]
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        match self {
            DisorderLaw::Uniform01 => u,
            _ => self
                .inverse_cdf(u)
                .expect("validated law with u in (0, 1) and extended tail"),
        }
    }

    /// Parse `name key=value ...`, e.g. `power_tail alpha=2 c_mu=1 rho=1`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut parts = spec.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| Error::invalid("empty law specification"))?;
        let mut kv = std::collections::BTreeMap::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got '{p}'")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let num = |k: &str| -> Result<f64> {
            kv.get(k)
                .ok_or_else(|| Error::invalid(format!("law '{name}' needs parameter '{k}'")))?
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("parameter '{k}' is not a number")))
        };
        let law = match name {
            "uniform01" | "uniform" => DisorderLaw::Uniform01,
            "power_tail" => DisorderLaw::PowerTail {
                alpha: num("alpha")?,
                c_mu: num("c_mu")?,
                rho: num("rho")?,
                extend: kv.get("extend").map(|s| s != "false").unwrap_or(true),
            },
            "gaussian" => DisorderLaw::Gaussian {
                mean: num("mean")?,
                variance: num("variance")?,
            },
            "bounded" => DisorderLaw::Bounded {
                a: num("a")?,
                b: num("b")?,
            },
            "neg_exp_inv" => DisorderLaw::NegExpInv,
            "table" => {
                let raw = kv
                    .get("points")
                    .ok_or_else(|| Error::invalid("table law needs points=p:x,p:x,..."))?;
                let points = raw
                    .split(',')
                    .map(|pair| {
                        let (p, x) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::invalid(format!("bad table point '{pair}'")))?;
                        let p: f64 = p.parse().map_err(|_| Error::invalid("bad table p"))?;
                        let x: f64 = x.parse().map_err(|_| Error::invalid("bad table x"))?;
                        Ok((p, x))
                    })
                    .collect::<Result<Vec<_>>>()?;
                DisorderLaw::TableInverseCdf { points }
            }
            other => return Err(Error::invalid(format!("unknown law '{other}'"))),
        };
        law.validate()?;
        Ok(law)
    }
}

impl fmt::Display for DisorderLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisorderLaw::Uniform01 => write!(f, "uniform01"),
            DisorderLaw::PowerTail {
                alpha,
                c_mu,
                rho,
                extend,
            } => {
                write!(f, "power_tail alpha={alpha} c_mu={c_mu} rho={rho}")?;
                if !extend {
                    write!(f, " extend=false")?;
                }
                Ok(())
            }
            DisorderLaw::Gaussian { mean, variance } => {
                write!(f, "gaussian mean={mean} variance={variance}")
            }
            DisorderLaw::Bounded { a, b } => write!(f, "bounded a={a} b={b}"),
            DisorderLaw::NegExpInv => write!(f, "neg_exp_inv"),
            DisorderLaw::TableInverseCdf { points } => {
                let s: Vec<String> = points.iter().map(|(p, x)| format!("{p}:{x}")).collect();
                write!(f, "table points={}", s.join(","))
            }
        }
    }
}

/// Disorder values, one per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    omega: Vec<f64>,
    law: Option<DisorderLaw>,
    seed: Option<u64>,
}

impl Environment {
    /// Wrap explicit values (e.g. fixtures or files).
    pub fn from_values(omega: Vec<f64>, law: DisorderLaw, seed: u64) -> Self {
        Environment {
            omega,
            law: Some(law),
            seed: Some(seed),
        }
    }

    /// Explicit values without sampling provenance.
    pub fn fixed(omega: Vec<f64>) -> Self {
        Environment {
            omega,
            law: None,
            seed: None,
        }
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn value(&self, e: EdgeId) -> f64 {
        self.omega[e]
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn law(&self) -> Option<&DisorderLaw> {
        self.law.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Copy with `ω_e` replaced.
    pub fn with_value(&self, e: EdgeId, value: f64) -> Self {
        let mut out = self.clone();
        out.omega[e] = value;
        out
    }

    /// Copy with every value shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.omega.iter_mut().for_each(|w| *w += c);
        out
    }

    /// Restrict to a subset of edges (in the given order).
    pub fn select(&self, edges: &[EdgeId]) -> Self {
        Environment {
            omega: edges.iter().map(|&e| self.omega[e]).collect(),
            law: self.law.clone(),
            seed: self.seed,
        }
    }

    pub fn hamiltonian(&self, edges: impl IntoIterator<Item = EdgeId>) -> f64 {
        edges.into_iter().map(|e| self.omega[e]).sum()
    }
}

/// i.i.d. disorder for every edge of `g`: the value of edge `e` is the inverse CDF of
/// uniform number `e` of the keyed stream `(seed, "environment")`.
pub fn sample_environment(law: &DisorderLaw, g: &MultiGraph, seed: u64) -> Result<Environment> {
    sample_environment_values(law, g.m(), seed)
}

/// As [`sample_environment`] for `m` edges without a graph.
pub fn sample_environment_values(law: &DisorderLaw, m: usize, seed: u64) -> Result<Environment> {
    law.validate()?;
    let mut keyed = KeyedUniforms::new(seed, ENV_TAG);
    keyed.seek(0);
    let omega = (0..m)
        .map(|_| law.sample_from_uniform(keyed.next()))
        .collect();
    Ok(Environment::from_values(omega, law.clone(), seed))
}

/// `exp(-β ω_e)`.
pub fn edge_weight(env: &Environment, e: EdgeId, beta: f64) -> f64 {
    (-beta * env.value(e)).exp()
}

/// Edge conductances stored as `w(e) = scaled[e] * exp(log_scale)`.
///
/// The Gibbs law, Kirchhoff marginals and transfer currents are invariant under a global
/// rescaling, so solvers work with `scaled` (maximum 1) and only log-partition functions
/// and absolute resistances use `log_scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conductances {
    pub scaled: Vec<f64>,
    pub log_scale: f64,
}

impl Conductances {
    /// From log-weights `log w(e)`.
    pub fn from_log_weights(logw: &[f64]) -> Self {
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let top = if top.is_finite() { top } else { 0.0 };
        Conductances {
            scaled: logw.iter().map(|&l| (l - top).exp()).collect(),
            log_scale: top,
        }
    }

    /// Plain weights (no rescaling).
    pub fn from_weights(w: Vec<f64>) -> Self {
        Conductances {
            scaled: w,
            log_scale: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    /// True weight of edge `e`.
    pub fn weight(&self, e: EdgeId) -> f64 {
        self.scaled[e] * self.log_scale.exp()
    }
}

/// A graph, an environment and an inverse temperature.
#[derive(Clone, Copy, Debug)]
pub struct WeightedGraphView<'a> {
    pub graph: &'a MultiGraph,
    pub env: &'a Environment,
    pub beta: f64,
}

impl<'a> WeightedGraphView<'a> {
    pub fn new(graph: &'a MultiGraph, env: &'a Environment, beta: f64) -> Result<Self> {
        if env.len() != graph.m() {
            return Err(Error::invalid(format!(
                "environment has {} values for {} edges",
                env.len(),
                graph.m()
            )));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("beta = {beta} must be finite and >= 0")));
        }
        Ok(WeightedGraphView { graph, env, beta })
    }

    pub fn weight(&self, e: EdgeId) -> f64 {
        edge_weight(self.env, e, self.beta)
    }

    /// Conductances rescaled by `exp(β ω_min)` so the heaviest edge has weight 1.
    pub fn conductances(&self) -> Conductances {
        let logw: Vec<f64> = self.env.omega().iter().map(|&w| -self.beta * w).collect();
        Conductances::from_log_weights(&logw)
    }
}

/// Subgraph of `p`-open edges, `ω_e ≤ F⁻¹(p)`, with the original id of every kept edge.
pub fn open_subgraph(
    g: &MultiGraph,
    env: &Environment,
    law: &DisorderLaw,
    p: f64,
) -> Result<(MultiGraph, Vec<EdgeId>)> {
    let threshold = if p >= 1.0 {
        f64::INFINITY
    } else {
        law.inverse_cdf(p)?
    };
    let keep: Vec<EdgeId> = (0..g.m()).filter(|&e| env.value(e) <= threshold).collect();
    Ok(g.edge_subgraph(&keep))
}

/// Mean, variance and almost-sure bound of the edge weight `exp(-β ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightStats {
    pub xi: f64,
    pub sigma2: f64,
    pub k: f64,
}

/// `E[exp(-s ω)]` for the supported laws.
fn laplace(law: &DisorderLaw, s: f64) -> Result<f64> {
    match law {
        DisorderLaw::Uniform01 => Ok(if s.abs() < 1e-12 {
            1.0 - s / 2.0
        } else {
            -(-s).exp_m1() / s
        }),
        DisorderLaw::Bounded { a, b } => {
            let width = b - a;
            let base = (-s * a).exp();
            Ok(if (s * width).abs() < 1e-12 {
                base * (1.0 - s * width / 2.0)
            } else {
                base * (-(-s * width).exp_m1()) / (s * width)
            })
        }
        DisorderLaw::PowerTail {
            alpha,
            c_mu,
            extend,
            ..
        } => {
            if !extend {
                return Err(Error::Unsupported(
                    "weight statistics need the full law; enable the power-tail extension".into(),
                ));
            }
            // Density c α t^{α-1} on [0, T], T = c^{-1/α}.
            let top = c_mu.powf(-1.0 / alpha);
            let x = s * top;
            if x < 1e-8 {
                return Ok(1.0 - alpha / (alpha + 1.0) * x);
            }
            // Γ(α+1) P(α, x) / x^α, evaluated in logs.
            let lg = ln_gamma(alpha + 1.0) + gamma_lr(*alpha, x).ln() - alpha * x.ln();
            Ok(lg.exp())
        }
        DisorderLaw::Gaussian { .. } | DisorderLaw::NegExpInv => Err(Error::Unsupported(
            "weight statistics are not provided for unbounded-below laws (overflow)".into(),
        )),
        DisorderLaw::TableInverseCdf { .. } => Err(Error::Unsupported(
            "weight statistics for tabulated laws".into(),
        )),
    }
}

/// `ξ = E[e^{-βω}]`, `σ² = Var[e^{-βω}]`, `K = sup e^{-βω}`.
pub fn weight_stats(law: &DisorderLaw, beta: f64) -> Result<WeightStats> {
    law.validate()?;
    if !(beta >= 0.0) {
        return Err(Error::invalid("beta must be >= 0"));
    }
    let xi = laplace(law, beta)?;
    let second = laplace(law, 2.0 * beta)?;
    let k = (-beta * law.support_min().unwrap_or(0.0)).exp();
    Ok(WeightStats {
        xi,
        sigma2: (second - xi * xi).max(0.0),
        k,
    })
}

/// Two-sided Bernstein bound `P(|S - mξ| ≥ δ m ξ)` for `m` i.i.d. weights.
pub fn bernstein_bound(m: f64, delta: f64, stats: &WeightStats) -> f64 {
    let xi = stats.xi;
    2.0 * (-m * delta * delta * xi * xi / (2.0 * stats.sigma2 + 2.0 * stats.k * delta * xi / 3.0))
        .exp()
}

/// The law-specific tail bounds for the sum of `m` edge weights deviating by `δ m ξ`.
pub fn bernstein_tail_bound(m: usize, delta: f64, beta: f64, law: &DisorderLaw) -> Result<f64> {
    if m == 0 || !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid("need m >= 1 and 0 < delta <= 1"));
    }
    match law {
        DisorderLaw::Uniform01 => {
            Ok(2.0 * (-delta * delta * m as f64 / (9.0 * beta.max(1.0))).exp())
        }
        DisorderLaw::PowerTail { alpha, .. } => {
            let c_b = power_tail_constant(law, beta, delta)?;
            let scale = beta.powf(*alpha).max(1.0);
            Ok(2.0 * (-c_b * delta * delta * m as f64 / scale).exp())
        }
        _ => Err(Error::Unsupported(format!(
            "no concentration bound implemented for {law}"
        ))),
    }
}

/// A valid constant `C_B` for the power-tail bound at `(β, δ)`:
/// `max(β^α, 1) ξ² / (2σ² + 2Kδξ/3)`.
pub fn power_tail_constant(law: &DisorderLaw, beta: f64, delta: f64) -> Result<f64> {
    let DisorderLaw::PowerTail { alpha, .. } = law else {
        return Err(Error::invalid("power-tail constant of another law"));
    };
    let s = weight_stats(law, beta)?;
    Ok(beta.powf(*alpha).max(1.0) * s.xi * s.xi / (2.0 * s.sigma2 + 2.0 * s.k * delta * s.xi / 3.0))
}

/// Paley–Zygmund lower bound `P(Z > tE[Z]) ≥ (1-t)² E[Z]² / E[Z²]`.
pub fn paley_zygmund_bound(t: f64, mean: f64, second_moment: f64) -> f64 {
    (1.0 - t).powi(2) * mean * mean / second_moment
}

/// Implicit environment on `K_n`: `ω(u, v)` is computed on demand from the keyed
/// stream, and equals the value [`sample_environment`] gives edge
/// [`complete_edge_id`]`(n, u, v)` of `build_complete(n)`.
#[derive(Clone, Debug)]
pub struct CompleteEnvironment {
    n: usize,
    law: DisorderLaw,
    seed: u64,
}

impl CompleteEnvironment {
    pub fn new(n: usize, law: DisorderLaw, seed: u64) -> Result<Self> {
        law.validate()?;
        if n == 0 {
            return Err(Error::invalid("complete graph needs n >= 1"));
        }
        Ok(CompleteEnvironment { n, law, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn law(&self) -> &DisorderLaw {
        &self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A reader holding its own cipher state for random access.
    pub fn reader(&self) -> OmegaReader<'_> {
        OmegaReader {
            env: self,
            keyed: KeyedUniforms::new(self.seed, ENV_TAG),
        }
    }

    /// All edges with `ω ≤ threshold` as `(ω, edge, u, v)`, sorted by `(ω, edge)`.
    pub fn edges_below(&self, threshold: f64) -> Vec<(f64, EdgeId, VertexId, VertexId)> {
        let mut keyed = KeyedUniforms::new(self.seed, ENV_TAG);
        keyed.seek(0);
        let mut out = Vec::new();
        let uniform_law = matches!(self.law, DisorderLaw::Uniform01);
        let mut e = 0;
        for u in 0..self.n {
            for v in u + 1..self.n {
                let x = keyed.next();
                let w = if uniform_law {
                    x
                } else {
                    self.law.sample_from_uniform(x)
                };
                if w <= threshold {
                    out.push((w, e, u, v));
                }
                e += 1;
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Materialise the full graph and environment (small `n` only).
    pub fn materialize(&self) -> Result<(MultiGraph, Environment)> {
        let g = crate::graph::build_complete(self.n)?;
        let env = sample_environment(&self.law, &g, self.seed)?;
        Ok((g, env))
    }
}

/// Random-access view of a [`CompleteEnvironment`].
#[derive(Clone, Debug)]
pub struct OmegaReader<'a> {
    env: &'a CompleteEnvironment,
    keyed: KeyedUniforms,
}

impl OmegaReader<'_> {
    #[inline]
    pub fn omega(&mut self, u: VertexId, v: VertexId) -> f64 {
        let e = complete_edge_id(self.env.n, u, v);
        self.env.law.sample_from_uniform(self.keyed.at(e as u64))
    }
}
