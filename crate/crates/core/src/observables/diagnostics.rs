//! Lazy-walk diagnostics: stationary ratio, uniform mixing time, escaping sum and the
//! bottleneck ratio and profile.

use nalgebra::DMatrix;

use crate::environment::WeightedGraphView;
use crate::error::{Error, Result};
use crate::graph::MultiGraph;

/// Largest graph for exhaustive bottleneck search (`2^n` subsets).
pub const EXHAUSTIVE_LIMIT: usize = 24;
/// Largest graph for dense kernel powering.
pub const KERNEL_LIMIT: usize = 4000;
/// Work budget (in multiply-adds) for the escaping sum.
const ESCAPING_BUDGET: f64 = 2e10;

/// Walk diagnostics of a weighted graph.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkDiagnostics {
    /// `max π / min π`.
    pub d_ratio: f64,
    /// Uniform mixing time of the lazy walk.
    pub t_mix: u64,
    /// `Σ_{t ≤ t_mix} (t+1) sup_v q_t(v, v)`; NaN when over the work budget.
    pub escaping: f64,
    pub phi: f64,
    /// Φ comes from the sweep heuristic (an upper bound), not exhaustive search.
    pub phi_heuristic: bool,
    pub pi: Vec<f64>,
}

/// Merged symmetric conductance matrix and vertex weights `w(v)`.
fn dense_weights(g: &MultiGraph, c: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = g.n();
    let mut w = vec![vec![0.0; n]; n];
    let mut deg = vec![0.0; n];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        w[u][v] += c[e];
        w[v][u] += c[e];
        deg[u] += c[e];
        deg[v] += c[e];
    }
    (w, deg)
}

/// Lazy transition matrix `q = (I + P) / 2` and stationary law `π(v) ∝ w(v)`.
pub fn lazy_kernel(wg: &WeightedGraphView) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let g = wg.graph;
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    if n > KERNEL_LIMIT {
        return Err(Error::TooLarge(format!("dense kernel on {n} > {KERNEL_LIMIT} vertices")));
    }
    let c = wg.conductances().scaled;
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut deg = vec![0.0; n];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        deg[u] += c[e];
        deg[v] += c[e];
    }
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        q[(u, v)] += 0.5 * c[e] / deg[u];
        q[(v, u)] += 0.5 * c[e] / deg[v];
    }
    for v in 0..n {
        q[(v, v)] += 0.5;
    }
    let total: f64 = deg.iter().sum();
    let pi = if n == 1 {
        vec![1.0]
    } else {
        deg.iter().map(|d| d / total).collect()
    };
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::UnsupportedRange(
            "a vertex weight underflows; rescale β".into(),
        ));
    }
    Ok((q, pi))
}

fn uniform_distance(qt: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = pi.len();
    let mut worst: f64 = 0.0;
    for v in 0..n {
        for u in 0..n {
            worst = worst.max((qt[(u, v)] / pi[v] - 1.0).abs());
        }
    }
    worst
}

/// First `t` with `max_{u,v} |q_t(u,v)/π(v) − 1| ≤ 1/2`, by doubling and then
/// binary descent over the stored powers `q^{2^j}`.
pub fn uniform_mixing_time(q: &DMatrix<f64>, pi: &[f64]) -> Result<u64> {
    let n = pi.len();
    if n <= 1 {
        return Ok(0);
    }
    let ok = |m: &DMatrix<f64>| uniform_distance(m, pi) <= 0.5;
    let mut powers = vec![q.clone()];
    loop {
        let k = powers.len() - 1;
        if ok(&powers[k]) {
            break;
        }
        if k >= 62 {
            return Err(Error::NonTermination(u64::MAX));
        }
        let sq = &powers[k] * &powers[k];
        powers.push(sq);
    }
    let k = powers.len() - 1;
    if k == 0 {
        return Ok(1);
    }
    // 2^{k-1} fails, 2^k passes.
    let mut cur = powers[k - 1].clone();
    let mut t = 1u64 << (k - 1);
    for j in (0..k - 1).rev() {
        let cand = &cur * &powers[j];
        if !ok(&cand) {
            cur = cand;
            t += 1 << j;
        }
    }
    Ok(t + 1)
}

/// `Σ_{t=0}^{t_max} (t+1) max_v q_t(v,v)`, or NaN when over the work budget.
fn escaping_sum(wg: &WeightedGraphView, q: &DMatrix<f64>, t_max: u64) -> f64 {
    let n = q.nrows();
    let nnz = n + 2 * wg.graph.m();
    if (t_max as f64 + 1.0) * n as f64 * nnz as f64 > ESCAPING_BUDGET {
        return f64::NAN;
    }
    // Sparse representation of q by rows.
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|u| (0..n).filter(|&v| q[(u, v)] != 0.0).map(|v| (v, q[(u, v)])).collect())
        .collect();
    let mut cur = DMatrix::<f64>::identity(n, n);
    let mut total = 1.0;
    for t in 1..=t_max {
        let mut next = DMatrix::<f64>::zeros(n, n);
        for u in 0..n {
            for (x, row) in rows.iter().enumerate() {
                let a = cur[(u, x)];
                if a != 0.0 {
                    for &(v, b) in row {
                        next[(u, v)] += a * b;
                    }
                }
            }
        }
        cur = next;
        let diag = (0..n).map(|v| cur[(v, v)]).fold(0.0, f64::max);
        total += (t + 1) as f64 * diag;
    }
    total
}

/// The bottleneck profile `Φ(r) = min{Φ(S) : 0 < π(S) ≤ r}`, stored as the points
/// where it drops.
#[derive(Clone, Debug, PartialEq)]
pub struct BottleneckProfile {
    /// `(π(S), Φ(S))` with increasing `π` and strictly decreasing `Φ`.
    pub steps: Vec<(f64, f64)>,
    pub pi_min: f64,
    /// Built from sweep sets only (upper bounds).
    pub heuristic: bool,
}

impl BottleneckProfile {
    fn from_points(mut pts: Vec<(f64, f64)>, pi_min: f64, heuristic: bool) -> Self {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut steps: Vec<(f64, f64)> = Vec::new();
        for (p, f) in pts {
            if steps.last().is_none_or(|&(_, best)| f < best) {
                steps.push((p, f));
            }
        }
        BottleneckProfile {
            steps,
            pi_min,
            heuristic,
        }
    }

    /// The bottleneck ratio `Φ = Φ(1/2)`.
    pub fn phi(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.1)
    }

    /// `Φ(r)`; for `r ≥ 1/2` this is `Φ`.
    pub fn at(&self, r: f64) -> f64 {
        let i = self.steps.partition_point(|s| s.0 <= r);
        if i == 0 {
            f64::NAN
        } else {
            self.steps[i - 1].1
        }
    }

    /// `∫_a^b 4 / (r Φ(r)²) dr` for the step function `Φ`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut lo = a;
        for (i, &(_, f)) in self.steps.iter().enumerate() {
            let hi = self.steps.get(i + 1).map_or(f64::INFINITY, |s| s.0).min(b);
            if hi > lo {
                total += 4.0 / (f * f) * (hi / lo).ln();
                lo = hi;
            }
            if lo >= b {
                break;
            }
        }
        total
    }
}

/// The mixing-time bound `1 + ∫_{4 π_min}^{8} 4/(r Φ(r)²) dr`.
pub fn heat_cheeger_bound(profile: &BottleneckProfile) -> f64 {
    1.0 + profile.integral(4.0 * profile.pi_min, 8.0)
}

const HALF: f64 = 0.5 + 1e-12;

/// Exhaustive bottleneck profile over all vertex subsets (Gray-code order).
pub fn bottleneck_exhaustive(wg: &WeightedGraphView) -> Result<BottleneckProfile> {
    let g = wg.graph;
    let n = g.n();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge(format!(
            "exhaustive bottleneck search on {n} > {EXHAUSTIVE_LIMIT} vertices"
        )));
    }
    if n < 2 || !g.is_connected() {
        return Err(Error::invalid("bottleneck ratio needs a connected graph with n >= 2"));
    }
    let (w, deg) = dense_weights(g, &wg.conductances().scaled);
    let total: f64 = deg.iter().sum();
    let pi_min = deg.iter().fold(f64::INFINITY, |a, &d| a.min(d)) / total;
    let mut in_s = vec![false; n];
    let (mut vol, mut cut) = (0.0, 0.0);
    let mut pts = Vec::new();
    for i in 1u64..(1u64 << n) {
        let x = i.trailing_zeros() as usize;
        let (mut a, mut b) = (0.0, 0.0);
        for y in 0..n {
            if y != x {
                if in_s[y] {
                    a += w[x][y];
                } else {
                    b += w[x][y];
                }
            }
        }
        if in_s[x] {
            in_s[x] = false;
            vol -= deg[x];
            cut += a - b;
        } else {
            in_s[x] = true;
            vol += deg[x];
            cut += b - a;
        }
        if i % 4096 == 0 {
            // Refresh to stop rounding drift.
            vol = (0..n).filter(|&y| in_s[y]).map(|y| deg[y]).sum();
            cut = 0.0;
            for p in 0..n {
                for q in 0..n {
                    if in_s[p] && !in_s[q] {
                        cut += w[p][q];
                    }
                }
            }
        }
        let pi_s = vol / total;
        if pi_s > 0.0 && pi_s <= HALF {
            pts.push((pi_s, 0.5 * cut.max(0.0) / vol));
        }
    }
    Ok(BottleneckProfile::from_points(pts, pi_min, false))
}

/// Sweep-set heuristic for large graphs: prefixes of vertices ordered by
/// `q_t(s, ·)/π` for a spread of seeds `s` and times `t`. Gives upper bounds on Φ(r).
pub fn bottleneck_heuristic(wg: &WeightedGraphView, seeds: usize) -> Result<BottleneckProfile> {
    let g = wg.graph;
    let n = g.n();
    if n < 2 || !g.is_connected() {
        return Err(Error::invalid("bottleneck ratio needs a connected graph with n >= 2"));
    }
    let c = wg.conductances().scaled;
    let mut deg = vec![0.0; n];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        deg[u] += c[e];
        deg[v] += c[e];
    }
    let total: f64 = deg.iter().sum();
    let pi_min = deg.iter().fold(f64::INFINITY, |a, &d| a.min(d)) / total;
    let mut pts = Vec::new();
    let seeds = seeds.clamp(1, n);
    for k in 0..seeds {
        let s = k * n / seeds;
        let mut dist = vec![0.0; n];
        dist[s] = 1.0;
        let mut t = 0;
        for round in 0..=8 {
            let target = if round == 0 { 0 } else { 1usize << (round - 1) };
            while t < target {
                let mut next: Vec<f64> = dist.iter().map(|d| 0.5 * d).collect();
                for (e, &(u, v)) in g.edges().iter().enumerate() {
                    next[v] += 0.5 * dist[u] * c[e] / deg[u];
                    next[u] += 0.5 * dist[v] * c[e] / deg[v];
                }
                dist = next;
                t += 1;
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| (dist[b] / deg[b]).total_cmp(&(dist[a] / deg[a])).then(a.cmp(&b)));
            let mut in_s = vec![false; n];
            let (mut vol, mut cut) = (0.0, 0.0);
            for &x in &order[..n - 1] {
                for &(y, e) in g.neighbors(x) {
                    if in_s[y] {
                        cut -= c[e];
                    } else {
                        cut += c[e];
                    }
                }
                in_s[x] = true;
                vol += deg[x];
                let pi_s = vol / total;
                if pi_s > HALF {
                    break;
                }
                pts.push((pi_s, 0.5 * cut.max(0.0) / vol));
            }
        }
    }
    for v in 0..n {
        let pi_v = deg[v] / total;
        if pi_v <= HALF {
            // Singletons: the whole weight of v leaves.
            pts.push((pi_v, 0.5));
        }
    }
    Ok(BottleneckProfile::from_points(pts, pi_min, true))
}

/// All diagnostics: exhaustive Φ for `n ≤ 24`, the flagged heuristic beyond.
pub fn walk_diagnostics(wg: &WeightedGraphView) -> Result<WalkDiagnostics> {
    let (q, pi) = lazy_kernel(wg)?;
    let n = pi.len();
    let pmax = pi.iter().copied().fold(0.0, f64::max);
    let pmin = pi.iter().copied().fold(f64::INFINITY, f64::min);
    let t_mix = uniform_mixing_time(&q, &pi)?;
    let escaping = escaping_sum(wg, &q, t_mix);
    let (phi, phi_heuristic) = if n < 2 {
        (f64::NAN, false)
    } else if n <= EXHAUSTIVE_LIMIT {
        (bottleneck_exhaustive(wg)?.phi(), false)
    } else {
        (bottleneck_heuristic(wg, 32)?.phi(), true)
    };
    Ok(WalkDiagnostics {
        d_ratio: pmax / pmin,
        t_mix,
        escaping,
        phi,
        phi_heuristic,
        pi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Environment;
    use crate::graph::{build_complete, build_cycle, build_path};

    fn unit(g: &MultiGraph) -> Environment {
        Environment::fixed(vec![0.0; g.m()])
    }

    #[test]
    fn single_edge() {
        let g = build_path(2).unwrap();
        let env = unit(&g);
        let wg = WeightedGraphView::new(&g, &env, 1.0).unwrap();
        let d = walk_diagnostics(&wg).unwrap();
        assert_eq!(d.d_ratio, 1.0);
        assert_eq!(d.phi, 0.5);
        // q = [[1/2,1/2],[1/2,1/2]] mixes perfectly in one step.
        assert_eq!(d.t_mix, 1);
        assert!((d.escaping - (1.0 + 2.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_is_balanced() {
        let g = build_complete(6).unwrap();
        let env = unit(&g);
        let wg = WeightedGraphView::new(&g, &env, 0.0).unwrap();
        let d = walk_diagnostics(&wg).unwrap();
        assert!((d.d_ratio - 1.0).abs() < 1e-12);
        // |S| = 3: cut 9, volume 15.
        assert!((d.phi - 0.5 * 9.0 / 15.0).abs() < 1e-12);
        assert!(d.t_mix >= 1);
    }

    #[test]
    fn mixing_time_matches_direct_iteration() {
        let g = build_cycle(9).unwrap();
        let env = Environment::fixed((0..9).map(|e| e as f64 / 9.0).collect());
        let wg = WeightedGraphView::new(&g, &env, 2.0).unwrap();
        let (q, pi) = lazy_kernel(&wg).unwrap();
        let t = uniform_mixing_time(&q, &pi).unwrap();
        let mut cur = DMatrix::<f64>::identity(9, 9);
        let mut direct = 0;
        while uniform_distance(&cur, &pi) > 0.5 {
            cur = &cur * &q;
            direct += 1;
        }
        assert_eq!(t, direct);
        let profile = bottleneck_exhaustive(&wg).unwrap();
        assert!(t as f64 <= heat_cheeger_bound(&profile));
        let h = bottleneck_heuristic(&wg, 9).unwrap();
        assert!(h.phi() >= profile.phi() - 1e-12);
    }

    #[test]
    fn profile_integral_of_constant_step() {
        let p = BottleneckProfile::from_points(vec![(0.1, 0.5), (0.3, 0.6), (0.4, 0.25)], 0.1, false);
        assert_eq!(p.steps, vec![(0.1, 0.5), (0.4, 0.25)]);
        assert_eq!(p.at(0.35), 0.5);
        assert_eq!(p.at(5.0), 0.25);
        let want = 16.0 * (0.4f64 / 0.2).ln() + 64.0 * (8.0f64 / 0.4).ln();
        assert!((p.integral(0.2, 8.0) - want).abs() < 1e-9);
    }
}
