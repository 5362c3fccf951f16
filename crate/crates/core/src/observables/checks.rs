//! Exact identity checks on small graphs: derivative identities, the bumping step,
//! total-variation distance and the probability of sampling the MST.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use super::Estimate;
use crate::environment::{sample_environment, DisorderLaw, Environment, WeightedGraphView};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MultiGraph};
use crate::rng::{derive_seed, RngStream};
use crate::sampler::{exact_tree_law, kruskal_mst, sample_tree, SamplerKind, TreeLaw};

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Finite-difference checks of `∂_β log Z = −E[H]` and
/// `∂_{ω_f} P(e ∈ T) = β (P(e) P(f) − P(e, f))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeReport {
    pub beta: f64,
    pub h: f64,
    pub dlogz_fd: f64,
    pub minus_expected_h: f64,
    pub beta_residual: f64,
    pub beta_tolerance: f64,
    /// `(e, f, finite difference, identity)` for every ordered pair.
    pub omega_pairs: Vec<(EdgeId, EdgeId, f64, f64)>,
    pub max_omega_residual: f64,
    pub omega_tolerance: f64,
}

impl DerivativeReport {
    pub fn passed(&self) -> bool {
        self.beta_residual <= self.beta_tolerance && self.max_omega_residual <= self.omega_tolerance
    }
}

/// Compute the derivative report without failing on tolerance.
pub fn derivative_report(wg: &WeightedGraphView, h: f64, cap: usize) -> Result<DerivativeReport> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let law = exact_tree_law(wg, cap)?;
    let beta = wg.beta;
    let hs = &law.hamiltonian;
    let log_z = |b: f64| log_sum_exp(hs.iter().map(|x| -b * x));
    let dlogz_fd = (log_z(beta + h) - log_z(beta - h)) / (2.0 * h);
    let minus_expected_h = -law.expected_hamiltonian();
    let hmin = hs.iter().copied().fold(f64::INFINITY, f64::min);
    let hmax = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let beta_tolerance = 10.0 * h * h * (hmax - hmin).powi(3).max(1.0);

    let m = wg.graph.m();
    let marg = law.edge_marginals();
    // Marginals after shifting ω_f by `d`, reweighting the enumerated trees.
    let shifted = |f: EdgeId, d: f64| -> Vec<f64> {
        let logw: Vec<f64> = law
            .trees
            .iter()
            .zip(hs)
            .map(|(t, &x)| -beta * (x + if t.contains(f) { d } else { 0.0 }))
            .collect();
        let lz = log_sum_exp(logw.iter().copied());
        let mut out = vec![0.0; m];
        for (t, l) in law.trees.iter().zip(&logw) {
            let p = (l - lz).exp();
            for &(e, _, _) in t.triples() {
                out[e] += p;
            }
        }
        out
    };
    let mut omega_pairs = Vec::with_capacity(m * m);
    let mut max_omega_residual: f64 = 0.0;
    for f in 0..m {
        let plus = shifted(f, h);
        let minus = shifted(f, -h);
        for e in 0..m {
            let fd = (plus[e] - minus[e]) / (2.0 * h);
            let joint = if e == f { marg[e] } else { law.joint(&[e, f]) };
            let identity = beta * (marg[e] * marg[f] - joint);
            max_omega_residual = max_omega_residual.max((fd - identity).abs());
            omega_pairs.push((e, f, fd, identity));
        }
    }
    Ok(DerivativeReport {
        beta,
        h,
        dlogz_fd,
        minus_expected_h,
        beta_residual: (dlogz_fd - minus_expected_h).abs(),
        beta_tolerance,
        omega_pairs,
        max_omega_residual,
        omega_tolerance: 10.0 * h * h * beta.powi(3).max(1.0),
    })
}

/// [`derivative_report`], failing with the residuals when a tolerance is exceeded.
pub fn derivative_checks(wg: &WeightedGraphView, h: f64, cap: usize) -> Result<DerivativeReport> {
    let r = derivative_report(wg, h, cap)?;
    if r.passed() {
        Ok(r)
    } else {
        Err(Error::CheckFailed(format!(
            "beta residual {:.3e} (tol {:.3e}), omega residual {:.3e} (tol {:.3e})",
            r.beta_residual, r.beta_tolerance, r.max_omega_residual, r.omega_tolerance
        )))
    }
}

/// One bumping step on edge `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpReport {
    /// `P(diam ≤ D | e ∈ T)`.
    pub lambda1: f64,
    /// `P(diam ≤ D | e ∉ T)`.
    pub lambda2: f64,
    pub before: f64,
    pub after: f64,
    pub new_value: f64,
    /// One of the conditioning events has probability 0; `a1` was used.
    pub ill_posed: bool,
    pub holds: bool,
    pub env: Environment,
}

fn diameter_probability(law: &TreeLaw, d: usize) -> f64 {
    law.probability_of(|t| t.diameter() <= d)
}

/// Move `ω_e` to `a1` if `λ1 ≤ λ2` and to `a2` otherwise, and check that
/// `P(diam(T) ≤ D)` did not increase.
#[allow(clippy::too_many_arguments)]
pub fn bump_step_verify(
    g: &MultiGraph,
    env: &Environment,
    beta: f64,
    e: EdgeId,
    a1: f64,
    a2: f64,
    d: usize,
    cap: usize,
) -> Result<BumpReport> {
    g.check_edge(e)?;
    let w = env.value(e);
    if !(a1 <= w && w <= a2) {
        return Err(Error::PreconditionFailed(format!(
            "need a1 <= omega_e <= a2, got {a1} <= {w} <= {a2}"
        )));
    }
    let wg = WeightedGraphView::new(g, env, beta)?;
    let law = exact_tree_law(&wg, cap)?;
    let pe = law.joint(&[e]);
    let with = law.probability_of(|t| t.contains(e) && t.diameter() <= d);
    let without = law.probability_of(|t| !t.contains(e) && t.diameter() <= d);
    let before = with + without;
    let ill_posed = pe <= 1e-15 || 1.0 - pe <= 1e-15;
    let lambda1 = if pe > 0.0 { with / pe } else { f64::NAN };
    let lambda2 = if pe < 1.0 { without / (1.0 - pe) } else { f64::NAN };
    let new_value = if ill_posed || lambda1 <= lambda2 { a1 } else { a2 };
    let new_env = env.with_value(e, new_value);
    let after = diameter_probability(&exact_tree_law(&WeightedGraphView::new(g, &new_env, beta)?, cap)?, d);
    Ok(BumpReport {
        lambda1,
        lambda2,
        before,
        after,
        new_value,
        ill_posed,
        holds: after <= before + 1e-12,
        env: new_env,
    })
}

/// Bump every listed edge in turn; returns the chain of probabilities `P(diam ≤ D)`
/// (initial value first) and the final environment.
#[allow(clippy::too_many_arguments)]
pub fn bump_sweep(
    g: &MultiGraph,
    env: &Environment,
    beta: f64,
    edges: &[EdgeId],
    a1: f64,
    a2: f64,
    d: usize,
    cap: usize,
) -> Result<(Vec<f64>, Environment)> {
    let mut cur = env.clone();
    let mut chain = Vec::with_capacity(edges.len() + 1);
    for &e in edges {
        let r = bump_step_verify(g, &cur, beta, e, a1, a2, d, cap)?;
        if chain.is_empty() {
            chain.push(r.before);
        }
        chain.push(r.after);
        cur = r.env;
    }
    Ok((chain, cur))
}

/// `½ Σ |p₁ − p₂|` over the union of two keyed probability tables.
pub fn tv_distance<K: Hash + Eq + Clone>(a: &[(K, f64)], b: &[(K, f64)]) -> Result<f64> {
    let table = |xs: &[(K, f64)]| -> Result<HashMap<K, f64>> {
        let mut map = HashMap::with_capacity(xs.len());
        let mut total = 0.0;
        for (k, p) in xs {
            if !(*p >= -1e-12) {
                return Err(Error::invalid("negative probability in law"));
            }
            total += p;
            if map.insert(k.clone(), *p).is_some() {
                return Err(Error::invalid("law lists an outcome twice"));
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("law sums to {total}, not 1")));
        }
        Ok(map)
    };
    let (ta, tb) = (table(a)?, table(b)?);
    let mut sum = 0.0;
    for (k, p) in &ta {
        sum += (p - tb.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, q) in &tb {
        if !ta.contains_key(k) {
            sum += q;
        }
    }
    Ok((0.5 * sum).min(1.0))
}

/// Frequency with which a sampled tree equals the MST, over fresh environments.
/// Replica `i` uses environment seed `derive_seed(seed, "mst-env", i)` and the tree
/// stream `("mst-tree", i)`.
pub fn mst_equality_probability(
    g: &MultiGraph,
    law: &DisorderLaw,
    beta: f64,
    replicas: usize,
    kind: SamplerKind,
    seed: u64,
) -> Result<Estimate> {
    let hits: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let env = sample_environment(law, g, derive_seed(seed, "mst-env", i))?;
            let wg = WeightedGraphView::new(g, &env, beta)?;
            let mut rng = RngStream::new(seed, "mst-tree", i);
            let t = sample_tree(&wg, kind, &mut rng)?;
            let mst = kruskal_mst(g, &env)?;
            Ok(if t.edge_ids() == mst.edges { 1.0 } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&hits))
}
