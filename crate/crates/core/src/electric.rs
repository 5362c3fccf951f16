//! Electric networks on weighted multigraphs: voltages, effective resistance, unit
//! current flows, series/parallel reduction, Kirchhoff marginals and the
//! transfer-impedance matrix.
//!
//! Conductances enter as [`Conductances`], i.e. rescaled so that the largest weight is
//! one. Every probability computed here is invariant under that rescaling; absolute
//! resistances are converted back with the stored log-scale.

use nalgebra::{DMatrix, DVector};

use crate::environment::{Conductances, WeightedGraphView};
use crate::error::{Error, Result};
use crate::graph::{census_from_edges, EdgeId, MultiGraph, UnionFind, VertexId};

/// Largest system solved with a dense factorisation.
pub const DENSE_LIMIT: usize = 2000;
/// Relative residual required from the iterative solver.
pub const CG_TOLERANCE: f64 = 1e-10;
/// Largest edge set accepted by [`joint_edge_probability`].
pub const MAX_JOINT_EDGES: usize = 64;

/// Harmonic potential with `v = 1` on `A` and `v = 0` on `B`.
#[derive(Clone, Debug)]
pub struct Voltages {
    pub v: Vec<f64>,
    pub a: Vec<VertexId>,
    pub b: Vec<VertexId>,
    /// Current leaving `A`, in rescaled conductance units (the effective conductance).
    pub current: f64,
}

/// A flow on the edges, `theta[e]` measured along the reference orientation `e⁻ → e⁺`.
#[derive(Clone, Debug)]
pub struct Flow {
    pub theta: Vec<f64>,
    pub sources: Vec<VertexId>,
    pub sinks: Vec<VertexId>,
    pub strength: f64,
}

impl Flow {
    /// Net outflow at every vertex.
    pub fn divergence(&self, g: &MultiGraph) -> Vec<f64> {
        let mut div = vec![0.0; g.n()];
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            div[u] += self.theta[e];
            div[v] -= self.theta[e];
        }
        div
    }

    /// Linear combination `a·self + b·other` of flows on the same graph.
    pub fn combine(&self, a: f64, other: &Flow, b: f64) -> Flow {
        Flow {
            theta: self
                .theta
                .iter()
                .zip(&other.theta)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            sources: self.sources.clone(),
            sinks: self.sinks.clone(),
            strength: a * self.strength + b * other.strength,
        }
    }
}

/// Transfer-impedance matrix `Y(e, f) = θ_e(f⁻, f⁺)` for an ordered edge list, where
/// `θ_e` is the unit current flow from `e⁻` to `e⁺`.
#[derive(Clone, Debug)]
pub struct TransferImpedance {
    pub edges: Vec<EdgeId>,
    pub y: DMatrix<f64>,
}

impl TransferImpedance {
    /// Sub-matrix on positions `idx` of the edge list.
    pub fn restrict(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.y[(idx[i], idx[j])])
    }
}

fn check_connected(g: &MultiGraph) -> Result<()> {
    if g.is_connected() {
        Ok(())
    } else {
        Err(Error::Disconnected)
    }
}

fn weighted_degrees(g: &MultiGraph, c: &[f64]) -> Vec<f64> {
    let mut deg = vec![0.0; g.n()];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        deg[u] += c[e];
        deg[v] += c[e];
    }
    deg
}

/// Inverse of the Laplacian grounded at one vertex (its row and column are zero).
#[derive(Clone, Debug)]
pub struct GroundedInverse {
    ground: VertexId,
    inv: DMatrix<f64>,
    index: Vec<usize>,
}

impl GroundedInverse {
    /// Dense factorisation; the graph must be connected and have at most
    /// [`DENSE_LIMIT`] vertices.
    pub fn new(g: &MultiGraph, c: &[f64]) -> Result<Self> {
        check_connected(g)?;
        let n = g.n();
        if n > DENSE_LIMIT + 1 {
            return Err(Error::TooLarge(format!(
                "dense grounded inverse on {n} vertices"
            )));
        }
        let ground = n - 1;
        let index: Vec<usize> = (0..n).map(|v| if v == ground { usize::MAX } else { v }).collect();
        let mut lap = DMatrix::<f64>::zeros(n - 1, n - 1);
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            let w = c[e];
            if u != ground {
                lap[(u, u)] += w;
            }
            if v != ground {
                lap[(v, v)] += w;
            }
            if u != ground && v != ground {
                lap[(u, v)] -= w;
                lap[(v, u)] -= w;
            }
        }
        let inv = if n == 1 {
            DMatrix::zeros(0, 0)
        } else {
            lap.cholesky()
                .ok_or_else(|| {
                    Error::NumericalFailure("grounded Laplacian is not positive definite".into())
                })?
                .inverse()
        };
        Ok(GroundedInverse { ground, inv, index })
    }

    #[inline]
    fn entry(&self, a: VertexId, b: VertexId) -> f64 {
        if a == self.ground || b == self.ground {
            0.0
        } else {
            self.inv[(self.index[a], self.index[b])]
        }
    }

    /// Potential difference `v(c) - v(d)` for a unit current injected at `a` and
    /// extracted at `b`.
    #[inline]
    pub fn transfer(&self, a: VertexId, b: VertexId, c: VertexId, d: VertexId) -> f64 {
        self.entry(c, a) - self.entry(c, b) - self.entry(d, a) + self.entry(d, b)
    }

    /// Point-to-point effective resistance (rescaled units).
    pub fn resistance(&self, a: VertexId, b: VertexId) -> f64 {
        self.transfer(a, b, a, b)
    }
}

/// Solve the Dirichlet problem `v|_A = 1`, `v|_B = 0`, harmonic elsewhere.
pub fn solve_voltages(
    g: &MultiGraph,
    c: &[f64],
    a: &[VertexId],
    b: &[VertexId],
) -> Result<Voltages> {
    let n = g.n();
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("boundary sets must be nonempty"));
    }
    let mut role = vec![0u8; n]; // 0 interior, 1 in A, 2 in B
    for &x in a {
        if x >= n {
            return Err(Error::invalid(format!("vertex {x} out of range")));
        }
        role[x] = 1;
    }
    for &x in b {
        if x >= n {
            return Err(Error::invalid(format!("vertex {x} out of range")));
        }
        if role[x] == 1 {
            return Err(Error::invalid("boundary sets must be disjoint"));
        }
        role[x] = 2;
    }
    // Interior vertices in components without boundary are left at potential 0.
    let census = census_from_edges(n, g.edges().iter().copied());
    let mut has_boundary = vec![false; census.sizes.len()];
    for v in 0..n {
        if role[v] != 0 {
            has_boundary[census.component[v]] = true;
        }
    }
    let interior: Vec<VertexId> = (0..n)
        .filter(|&v| role[v] == 0 && has_boundary[census.component[v]])
        .collect();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in interior.iter().enumerate() {
        local[v] = i;
    }
    let deg = weighted_degrees(g, c);
    let mut rhs = vec![0.0; interior.len()];
    for (i, &x) in interior.iter().enumerate() {
        for &(y, e) in g.neighbors(x) {
            if role[y] == 1 {
                rhs[i] += c[e];
            }
        }
    }
    let sol = if interior.is_empty() {
        Vec::new()
    } else if interior.len() <= DENSE_LIMIT {
        let k = interior.len();
        let mut mat = DMatrix::<f64>::zeros(k, k);
        for (i, &x) in interior.iter().enumerate() {
            mat[(i, i)] = deg[x];
            for &(y, e) in g.neighbors(x) {
                if local[y] != usize::MAX {
                    mat[(i, local[y])] -= c[e];
                }
            }
        }
        let chol = mat.cholesky().ok_or_else(|| {
            Error::NumericalFailure("Dirichlet system is not positive definite".into())
        })?;
        chol.solve(&DVector::from_vec(rhs)).data.into()
    } else {
        conjugate_gradient(g, c, &interior, &local, &deg, &rhs)?
    };
    let mut v = vec![0.0; n];
    for x in 0..n {
        if role[x] == 1 {
            v[x] = 1.0;
        }
    }
    for (i, &x) in interior.iter().enumerate() {
        v[x] = sol[i];
    }
    let mut current = 0.0;
    for &x in a {
        for &(y, e) in g.neighbors(x) {
            current += c[e] * (1.0 - v[y]);
        }
    }
    Ok(Voltages {
        v,
        a: a.to_vec(),
        b: b.to_vec(),
        current,
    })
}

fn conjugate_gradient(
    g: &MultiGraph,
    c: &[f64],
    interior: &[VertexId],
    local: &[usize],
    deg: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let k = interior.len();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (i, &v) in interior.iter().enumerate() {
            let mut s = deg[v] * x[i];
            for &(y, e) in g.neighbors(v) {
                if local[y] != usize::MAX {
                    s -= c[e] * x[local[y]];
                }
            }
            out[i] = s;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let precond: Vec<f64> = interior.iter().map(|&v| 1.0 / deg[v]).collect();
    let norm_b = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; k];
    if norm_b == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; k];
    let max_iter = 10 * k + 1000;
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..k {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= CG_TOLERANCE * norm_b {
            return Ok(x);
        }
        for i in 0..k {
            z[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..k {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NumericalFailure(format!(
        "conjugate gradient stalled at relative residual {:.3e}",
        dot(&r, &r).sqrt() / norm_b
    )))
}

/// `R_eff(A ↔ B)` in the weighted graph; `+∞` when `A` and `B` are not connected.
pub fn effective_resistance(wg: &WeightedGraphView, a: &[VertexId], b: &[VertexId]) -> Result<f64> {
    let c = wg.conductances();
    Ok(effective_resistance_scaled(wg.graph, &c.scaled, a, b)? * (-c.log_scale).exp())
}

/// Effective resistance for explicit conductances.
pub fn effective_resistance_scaled(
    g: &MultiGraph,
    c: &[f64],
    a: &[VertexId],
    b: &[VertexId],
) -> Result<f64> {
    let volt = solve_voltages(g, c, a, b)?;
    Ok(if volt.current > 0.0 {
        1.0 / volt.current
    } else {
        f64::INFINITY
    })
}

/// Unit current flow from `u` to `v`.
pub fn unit_current_flow(wg: &WeightedGraphView, u: VertexId, v: VertexId) -> Result<Flow> {
    unit_current_flow_scaled(wg.graph, &wg.conductances().scaled, u, v)
}

pub fn unit_current_flow_scaled(
    g: &MultiGraph,
    c: &[f64],
    u: VertexId,
    v: VertexId,
) -> Result<Flow> {
    if u == v {
        return Err(Error::invalid("flow endpoints must differ"));
    }
    let volt = solve_voltages(g, c, &[u], &[v])?;
    if !(volt.current > 0.0) {
        return Err(Error::Disconnected);
    }
    let theta = g
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(x, y))| c[e] * (volt.v[x] - volt.v[y]) / volt.current)
        .collect();
    Ok(Flow {
        theta,
        sources: vec![u],
        sinks: vec![v],
        strength: 1.0,
    })
}

/// Energy `Σ_e θ(e)² / w(e)` with the true (unscaled) weights.
pub fn flow_energy(theta: &Flow, wg: &WeightedGraphView) -> f64 {
    let c = wg.conductances();
    flow_energy_scaled(&theta.theta, &c.scaled) * (-c.log_scale).exp()
}

pub fn flow_energy_scaled(theta: &[f64], c: &[f64]) -> f64 {
    theta
        .iter()
        .zip(c)
        .map(|(t, w)| if *t == 0.0 { 0.0 } else { t * t / w })
        .sum()
}

/// One step of [`series_parallel_reduce`]; ids refer to the working edge numbering in
/// which original edges keep their ids and each new edge gets the next free id.
#[derive(Clone, Debug, PartialEq)]
pub enum ReductionStep {
    Parallel {
        a: EdgeId,
        b: EdgeId,
        result: EdgeId,
    },
    Series {
        vertex: VertexId,
        a: EdgeId,
        b: EdgeId,
        result: EdgeId,
    },
}

/// Output of [`series_parallel_reduce`].
#[derive(Clone, Debug)]
pub struct ReducedNetwork {
    pub graph: MultiGraph,
    pub conductances: Conductances,
    /// Old vertex → new vertex (`None` when eliminated).
    pub vertex_map: Vec<Option<VertexId>>,
    pub log: Vec<ReductionStep>,
}

/// Merge parallel edges and eliminate unprotected degree-2 vertices until neither
/// applies. Effective resistances between surviving vertices are preserved.
pub fn series_parallel_reduce(
    g: &MultiGraph,
    c: &Conductances,
    protected: &[VertexId],
) -> Result<ReducedNetwork> {
    let n = g.n();
    let mut keep = vec![false; n];
    for &p in protected {
        if p >= n {
            return Err(Error::invalid(format!("protected vertex {p} out of range")));
        }
        keep[p] = true;
    }
    let mut ends: Vec<(VertexId, VertexId)> = g.edges().to_vec();
    let mut w: Vec<f64> = c.scaled.clone();
    let mut alive = vec![true; ends.len()];
    let mut vertex_alive = vec![true; n];
    let mut inc: Vec<Vec<EdgeId>> = (0..n)
        .map(|v| g.neighbors(v).iter().map(|&(_, e)| e).collect())
        .collect();
    let mut log = Vec::new();
    let push = |ends: &mut Vec<(VertexId, VertexId)>,
                    w: &mut Vec<f64>,
                    alive: &mut Vec<bool>,
                    inc: &mut Vec<Vec<EdgeId>>,
                    u: VertexId,
                    v: VertexId,
                    weight: f64| {
        let id = ends.len();
        ends.push((u.min(v), u.max(v)));
        w.push(weight);
        alive.push(true);
        inc[u].push(id);
        inc[v].push(id);
        id
    };
    loop {
        let mut changed = false;
        // Parallel merges.
        for x in 0..n {
            if !vertex_alive[x] {
                continue;
            }
            inc[x].retain(|&e| alive[e]);
            let mut by_other: std::collections::BTreeMap<VertexId, EdgeId> = Default::default();
            let list = inc[x].clone();
            for e in list {
                if !alive[e] {
                    continue;
                }
                let (a, b) = ends[e];
                let y = if a == x { b } else { a };
                if let Some(&f) = by_other.get(&y) {
                    alive[e] = false;
                    alive[f] = false;
                    let sum = w[e] + w[f];
                    let id = push(&mut ends, &mut w, &mut alive, &mut inc, x, y, sum);
                    log.push(ReductionStep::Parallel {
                        a: f,
                        b: e,
                        result: id,
                    });
                    by_other.insert(y, id);
                    changed = true;
                } else {
                    by_other.insert(y, e);
                }
            }
            inc[x].retain(|&e| alive[e]);
        }
        // Series eliminations.
        for x in 0..n {
            if !vertex_alive[x] || keep[x] {
                continue;
            }
            inc[x].retain(|&e| alive[e]);
            if inc[x].len() != 2 {
                continue;
            }
            let (e, f) = (inc[x][0], inc[x][1]);
            let other = |id: EdgeId| {
                let (a, b) = ends[id];
                if a == x {
                    b
                } else {
                    a
                }
            };
            let (y, z) = (other(e), other(f));
            if y == z {
                continue; // parallel pair, merged in the next sweep
            }
            alive[e] = false;
            alive[f] = false;
            vertex_alive[x] = false;
            inc[x].clear();
            let series = w[e] * w[f] / (w[e] + w[f]);
            let id = push(&mut ends, &mut w, &mut alive, &mut inc, y, z, series);
            log.push(ReductionStep::Series {
                vertex: x,
                a: e,
                b: f,
                result: id,
            });
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let mut vertex_map = vec![None; n];
    let mut next = 0;
    for v in 0..n {
        if vertex_alive[v] {
            vertex_map[v] = Some(next);
            next += 1;
        }
    }
    let mut graph = MultiGraph::new(next);
    let mut scaled = Vec::new();
    for (e, &(u, v)) in ends.iter().enumerate() {
        if alive[e] {
            graph.add_edge(vertex_map[u].unwrap(), vertex_map[v].unwrap())?;
            scaled.push(w[e]);
        }
    }
    Ok(ReducedNetwork {
        graph,
        conductances: Conductances {
            scaled,
            log_scale: c.log_scale,
        },
        vertex_map,
        log,
    })
}

/// `P(e ∈ T) = w(e) R_eff(e⁻ ↔ e⁺)`.
pub fn kirchhoff_edge_probability(wg: &WeightedGraphView, e: EdgeId) -> Result<f64> {
    wg.graph.check_edge(e)?;
    check_connected(wg.graph)?;
    let c = wg.conductances();
    let (u, v) = wg.graph.endpoints(e);
    let volt = solve_voltages(wg.graph, &c.scaled, &[u], &[v])?;
    Ok((c.scaled[e] / volt.current).min(1.0))
}

/// Kirchhoff marginals of every edge.
pub fn edge_marginals(wg: &WeightedGraphView) -> Result<Vec<f64>> {
    edge_marginals_scaled(wg.graph, &wg.conductances().scaled)
}

pub fn edge_marginals_scaled(g: &MultiGraph, c: &[f64]) -> Result<Vec<f64>> {
    check_connected(g)?;
    if g.n() <= DENSE_LIMIT + 1 {
        let gi = GroundedInverse::new(g, c)?;
        Ok(g.edges()
            .iter()
            .enumerate()
            .map(|(e, &(u, v))| (c[e] * gi.resistance(u, v)).clamp(0.0, 1.0))
            .collect())
    } else {
        g.edges()
            .iter()
            .enumerate()
            .map(|(e, &(u, v))| {
                let volt = solve_voltages(g, c, &[u], &[v])?;
                Ok((c[e] / volt.current).min(1.0))
            })
            .collect()
    }
}

/// Transfer-impedance matrix on the given (distinct) edges.
pub fn transfer_impedance_matrix(
    wg: &WeightedGraphView,
    edges: &[EdgeId],
) -> Result<TransferImpedance> {
    transfer_impedance_scaled(wg.graph, &wg.conductances().scaled, edges)
}

pub fn transfer_impedance_scaled(
    g: &MultiGraph,
    c: &[f64],
    edges: &[EdgeId],
) -> Result<TransferImpedance> {
    check_connected(g)?;
    let mut seen = std::collections::HashSet::new();
    for &e in edges {
        g.check_edge(e)?;
        if !seen.insert(e) {
            return Err(Error::invalid(format!("edge {e} listed twice")));
        }
    }
    let k = edges.len();
    let mut y = DMatrix::<f64>::zeros(k, k);
    if g.n() <= DENSE_LIMIT + 1 {
        let gi = GroundedInverse::new(g, c)?;
        for (i, &e) in edges.iter().enumerate() {
            let (a, b) = g.endpoints(e);
            for (j, &f) in edges.iter().enumerate() {
                let (p, q) = g.endpoints(f);
                y[(i, j)] = c[f] * gi.transfer(a, b, p, q);
            }
        }
    } else {
        for (i, &e) in edges.iter().enumerate() {
            let (a, b) = g.endpoints(e);
            let flow = unit_current_flow_scaled(g, c, a, b)?;
            for (j, &f) in edges.iter().enumerate() {
                y[(i, j)] = flow.theta[f];
            }
        }
    }
    Ok(TransferImpedance {
        edges: edges.to_vec(),
        y,
    })
}

/// `P(edges ⊂ T) = det Y[edges]`.
pub fn joint_edge_probability(wg: &WeightedGraphView, edges: &[EdgeId]) -> Result<f64> {
    joint_edge_probability_scaled(wg.graph, &wg.conductances().scaled, edges)
}

pub fn joint_edge_probability_scaled(g: &MultiGraph, c: &[f64], edges: &[EdgeId]) -> Result<f64> {
    if edges.len() > MAX_JOINT_EDGES {
        return Err(Error::TooLarge(format!(
            "joint probability of {} edges (limit {MAX_JOINT_EDGES})",
            edges.len()
        )));
    }
    if edges.is_empty() {
        return Ok(1.0);
    }
    let ti = transfer_impedance_scaled(g, c, edges)?;
    let det = ti.y.lu().determinant();
    clip_probability(det)
}

/// Clip values within `1e-9` of `[0, 1]`; anything further out is a numerical failure.
pub fn clip_probability(p: f64) -> Result<f64> {
    const SLACK: f64 = 1e-9;
    if (-SLACK..=1.0 + SLACK).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::NumericalFailure(format!(
            "probability {p} outside [0, 1]"
        )))
    }
}

/// Nash-Williams bound `Σ_i (Σ_{e ∈ Π_i} w(e))⁻¹ ≤ R_eff(A ↔ B)` for disjoint cutsets.
pub fn nash_williams_lower_bound(
    wg: &WeightedGraphView,
    a: &[VertexId],
    b: &[VertexId],
    cutsets: &[Vec<EdgeId>],
) -> Result<f64> {
    let g = wg.graph;
    let mut owner = vec![usize::MAX; g.m()];
    for (i, cut) in cutsets.iter().enumerate() {
        for &e in cut {
            g.check_edge(e)?;
            if owner[e] != usize::MAX {
                return Err(Error::InvalidCutset(format!(
                    "edge {e} appears in cutsets {} and {i}",
                    owner[e]
                )));
            }
            owner[e] = i;
        }
    }
    let mut bound = 0.0;
    for (i, cut) in cutsets.iter().enumerate() {
        // Separation: no path from A to B avoiding the cutset.
        let mut uf = UnionFind::new(g.n());
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if owner[e] != i {
                uf.union(u, v);
            }
        }
        if a.iter().any(|&x| b.iter().any(|&y| uf.same(x, y))) {
            return Err(Error::InvalidCutset(format!(
                "cutset {i} does not separate A from B"
            )));
        }
        let total: f64 = cut.iter().map(|&e| wg.weight(e)).sum();
        bound += 1.0 / total;
    }
    Ok(bound)
}

/// Effective conductance between `s` and `t` of a small network given as a dense
/// symmetric conductance matrix, by star–mesh elimination of every other node.
///
/// The elimination only adds and multiplies nonnegative numbers, so it stays accurate
/// when conductances span many orders of magnitude.
pub fn effective_conductance_by_elimination(mut cond: Vec<Vec<f64>>, s: usize, t: usize) -> f64 {
    let k = cond.len();
    let mut alive = vec![true; k];
    // Eliminate low-degree nodes first to limit fill-in.
    loop {
        let pick = (0..k)
            .filter(|&x| alive[x] && x != s && x != t)
            .min_by_key(|&x| (0..k).filter(|&y| alive[y] && y != x && cond[x][y] > 0.0).count());
        let Some(x) = pick else { break };
        alive[x] = false;
        let nbrs: Vec<usize> = (0..k)
            .filter(|&y| alive[y] && cond[x][y] > 0.0)
            .collect();
        let total: f64 = nbrs.iter().map(|&y| cond[x][y]).sum();
        if total > 0.0 {
            for (i, &p) in nbrs.iter().enumerate() {
                for &q in &nbrs[i + 1..] {
                    let add = cond[x][p] * cond[x][q] / total;
                    cond[p][q] += add;
                    cond[q][p] += add;
                }
            }
        }
        for y in 0..k {
            cond[x][y] = 0.0;
            cond[y][x] = 0.0;
        }
    }
    cond[s][t]
}

/// Log-determinant of the Laplacian with its last row and column removed.
pub fn reduced_laplacian_log_det(g: &MultiGraph, c: &[f64]) -> Result<f64> {
    check_connected(g)?;
    let n = g.n();
    if n == 1 {
        return Ok(0.0);
    }
    let mut lap = DMatrix::<f64>::zeros(n - 1, n - 1);
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let w = c[e];
        if u < n - 1 {
            lap[(u, u)] += w;
        }
        if v < n - 1 {
            lap[(v, v)] += w;
        }
        if u < n - 1 && v < n - 1 {
            lap[(u, v)] -= w;
            lap[(v, u)] -= w;
        }
    }
    let chol = lap.cholesky().ok_or_else(|| {
        Error::NumericalFailure("reduced Laplacian has non-positive determinant".into())
    })?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Environment;
    use crate::graph::{build_complete, build_cycle, build_path};

    fn unit_view(g: &MultiGraph) -> Environment {
        Environment::fixed(vec![0.0; g.m()])
    }

    #[test]
    fn single_edge() {
        let g = build_path(2).unwrap();
        let env = Environment::fixed(vec![-(3f64).ln()]);
        let wg = WeightedGraphView::new(&g, &env, 1.0).unwrap();
        let r = effective_resistance(&wg, &[0], &[1]).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-12);
        let flow = unit_current_flow(&wg, 0, 1).unwrap();
        assert!((flow.theta[0] - 1.0).abs() < 1e-12);
        assert!((flow_energy(&flow, &wg) - r).abs() < 1e-12);
    }

    #[test]
    fn triangle_values() {
        let g = build_complete(3).unwrap();
        let env = unit_view(&g);
        let wg = WeightedGraphView::new(&g, &env, 0.0).unwrap();
        let r = effective_resistance(&wg, &[0], &[1]).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-12);
        let flow = unit_current_flow(&wg, 0, 1).unwrap();
        // Edges: (0,1), (0,2), (1,2).
        assert!((flow.theta[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((flow.theta[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((flow.theta[2] + 1.0 / 3.0).abs() < 1e-12); // edge oriented 1 -> 2, against the current
    }

    #[test]
    fn parallel_law() {
        let g = MultiGraph::from_edges(2, &[(0, 1), (0, 1)]).unwrap();
        let env = Environment::fixed(vec![-(2f64).ln(), -(5f64).ln()]);
        let wg = WeightedGraphView::new(&g, &env, 1.0).unwrap();
        let r = effective_resistance(&wg, &[0], &[1]).unwrap();
        assert!((r - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_is_infinite() {
        let g = MultiGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let env = unit_view(&g);
        let wg = WeightedGraphView::new(&g, &env, 0.0).unwrap();
        assert_eq!(effective_resistance(&wg, &[0], &[3]).unwrap(), f64::INFINITY);
        assert!(matches!(
            kirchhoff_edge_probability(&wg, 0),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn series_parallel() {
        let g = build_path(5).unwrap();
        let c = Conductances::from_weights(vec![1.0; 4]);
        let red = series_parallel_reduce(&g, &c, &[0, 4]).unwrap();
        assert_eq!(red.graph.m(), 1);
        assert!((1.0 / red.conductances.scaled[0] - 4.0).abs() < 1e-12);

        // Theta graph: three 2-paths between 0 and 1.
        let theta =
            MultiGraph::from_edges(5, &[(0, 2), (2, 1), (0, 3), (3, 1), (0, 4), (4, 1)]).unwrap();
        let c = Conductances::from_weights(vec![1.0; 6]);
        let red = series_parallel_reduce(&theta, &c, &[0, 1]).unwrap();
        assert_eq!(red.graph.m(), 1);
        assert!((red.conductances.scaled[0] - 1.5).abs() < 1e-12);

        let k4 = build_complete(4).unwrap();
        let c = Conductances::from_weights(vec![1.0; 6]);
        let red = series_parallel_reduce(&k4, &c, &[]).unwrap();
        assert_eq!(red.graph, k4);
        assert!(red.log.is_empty());
    }

    #[test]
    fn kirchhoff_on_complete_graph() {
        let g = build_complete(6).unwrap();
        let env = unit_view(&g);
        let wg = WeightedGraphView::new(&g, &env, 0.0).unwrap();
        for p in edge_marginals(&wg).unwrap() {
            assert!((p - 2.0 / 6.0).abs() < 1e-12);
        }
        let path = build_path(3).unwrap();
        let env = unit_view(&path);
        let wg = WeightedGraphView::new(&path, &env, 0.0).unwrap();
        assert!((kirchhoff_edge_probability(&wg, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_parallel_edges() {
        let g = MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)]).unwrap();
        let env = Environment::fixed(vec![0.1, 1.0, 10.0]);
        for beta in [0.0, 0.1, 1.0, 3.0] {
            let wg = WeightedGraphView::new(&g, &env, beta).unwrap();
            let p = kirchhoff_edge_probability(&wg, 1).unwrap();
            let exact = (-beta).exp()
                / ((-0.1 * beta).exp() + (-beta).exp() + (-10.0 * beta).exp());
            assert!((p - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_on_triangle_and_cycle() {
        let g = build_complete(3).unwrap();
        let env = unit_view(&g);
        let wg = WeightedGraphView::new(&g, &env, 0.0).unwrap();
        let p = joint_edge_probability(&wg, &[0, 1]).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
        assert!(joint_edge_probability(&wg, &[0, 1, 2]).unwrap().abs() < 1e-12);
        let ti = transfer_impedance_matrix(&wg, &[0]).unwrap();
        assert!((ti.y[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nash_williams() {
        let g = build_complete(5).unwrap();
        let env = unit_view(&g);
        let wg = WeightedGraphView::new(&g, &env, 0.0).unwrap();
        let star: Vec<EdgeId> = (0..4).collect();
        let b = nash_williams_lower_bound(&wg, &[0], &[1], &[star]).unwrap();
        assert!((b - 0.25).abs() < 1e-12);
        let path = build_path(4).unwrap();
        let env = unit_view(&path);
        let wg = WeightedGraphView::new(&path, &env, 0.0).unwrap();
        let b = nash_williams_lower_bound(&wg, &[0], &[3], &[vec![0], vec![1], vec![2]]).unwrap();
        assert!((b - 3.0).abs() < 1e-12);
        assert!(matches!(
            nash_williams_lower_bound(&wg, &[0], &[3], &[vec![0], vec![0]]),
            Err(Error::InvalidCutset(_))
        ));
        let cyc = build_cycle(4).unwrap();
        let env = unit_view(&cyc);
        let wg = WeightedGraphView::new(&cyc, &env, 0.0).unwrap();
        assert!(nash_williams_lower_bound(&wg, &[0], &[2], &[vec![0]]).is_err());
    }

    #[test]
    fn elimination_matches_solver() {
        let g = build_complete(5).unwrap();
        let c: Vec<f64> = (0..g.m()).map(|e| 0.3 + e as f64 * 0.17).collect();
        let mut dense = vec![vec![0.0; 5]; 5];
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            dense[u][v] += c[e];
            dense[v][u] += c[e];
        }
        let ce = effective_conductance_by_elimination(dense, 1, 3);
        let r = effective_resistance_scaled(&g, &c, &[1], &[3]).unwrap();
        assert!((ce * r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_det_counts_trees() {
        let g = build_complete(5).unwrap();
        let ld = reduced_laplacian_log_det(&g, &vec![1.0; g.m()]).unwrap();
        assert!((ld - 125f64.ln()).abs() < 1e-12);
    }
}
