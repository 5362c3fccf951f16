//! Finite boxes of `ℤ^d` with free, wired and partially wired boundary conditions.
//!
//! Disorder lives on the edges of `ℤ^d` (not of a particular box), so nested boxes see
//! the same environment. Wiring contracts everything outside the box into one extra
//! vertex; the outside edges of a boundary vertex then become parallel edges to it,
//! which are merged into one edge of summed conductance.

use std::collections::HashMap;

use crate::electric::{edge_marginals_scaled, joint_edge_probability_scaled, reduced_laplacian_log_det};
use crate::environment::{Conductances, DisorderLaw};
use crate::error::{Error, Result};
use crate::graph::{box_coords, box_index, build_box, EdgeId, MultiGraph, VertexId};
use crate::rng::{derive_seed, open_unit, splitmix64};

/// Largest box handled by the dense solvers.
pub const LATTICE_LIMIT: usize = 4000;

/// The `ℤ^d` edge from `x` to `x + e_dir`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeEdge {
    pub x: Vec<i64>,
    pub dir: usize,
}

impl LatticeEdge {
    pub fn new(x: Vec<i64>, dir: usize) -> Self {
        LatticeEdge { x, dir }
    }

    fn key(&self) -> u64 {
        const OFFSET: i64 = 1 << 20;
        let mut k = 0u64;
        for &c in &self.x {
            k = (k << 21) | ((c + OFFSET) as u64 & ((1 << 21) - 1));
        }
        (k << 2) | self.dir as u64
    }
}

/// i.i.d. disorder on the edges of `ℤ^d`, evaluated on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeEnvironment {
    pub law: DisorderLaw,
    pub seed: u64,
    pub d: usize,
}

impl LatticeEnvironment {
    pub fn new(law: DisorderLaw, seed: u64, d: usize) -> Result<Self> {
        law.validate()?;
        if !(1..=3).contains(&d) {
            return Err(Error::invalid(format!("lattice dimension {d} not in 1..=3")));
        }
        Ok(LatticeEnvironment { law, seed, d })
    }

    pub fn omega(&self, e: &LatticeEdge) -> f64 {
        let u = open_unit(splitmix64(derive_seed(self.seed, "lattice", e.key())));
        self.law.sample_from_uniform(u)
    }
}

/// Boundary condition of a box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    Free,
    Wired,
    /// Wired edges with conductance multiplied by `λ ∈ (0, 1]`; interpolates between
    /// free (`λ → 0`) and wired (`λ = 1`).
    Partial(f64),
}

/// A box with a boundary condition and the `ℤ^d` edges behind every edge.
#[derive(Clone, Debug)]
pub struct BoundaryGraph {
    pub l: usize,
    pub d: usize,
    pub boundary: Boundary,
    pub graph: MultiGraph,
    /// `ℤ^d` edges represented by every graph edge (one for internal edges, the outside
    /// edges of a boundary vertex for wired edges).
    pub provenance: Vec<Vec<LatticeEdge>>,
    pub dagger: Option<VertexId>,
    /// `|Λ| = (2L+1)^d`.
    pub volume: usize,
    /// Number of internal edges; they come first and share ids across conditions.
    pub internal_edges: usize,
    index: HashMap<LatticeEdge, EdgeId>,
}

/// Build `Λ_L = [−L, L]^d` with the given boundary condition.
pub fn build_boundary_box(l: usize, d: usize, boundary: Boundary) -> Result<BoundaryGraph> {
    if !(1..=3).contains(&d) {
        return Err(Error::invalid(format!("lattice dimension {d} not in 1..=3")));
    }
    if let Boundary::Partial(lambda) = boundary {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::invalid(format!("partial wiring lambda = {lambda} not in (0, 1]")));
        }
    }
    let base = build_box(l, d, false)?;
    let volume = base.n();
    let mut provenance = Vec::with_capacity(base.m());
    for &(u, v) in base.edges() {
        let (xu, xv) = (box_coords(u, l, d), box_coords(v, l, d));
        let dir = (0..d).find(|&i| xu[i] != xv[i]).expect("distinct endpoints");
        provenance.push(LatticeEdge::new(xu, dir));
    }
    let internal_edges = base.m();
    let mut edges: Vec<(usize, usize)> = base.edges().to_vec();
    let mut provenance: Vec<Vec<LatticeEdge>> = provenance.into_iter().map(|e| vec![e]).collect();
    let dagger = match boundary {
        Boundary::Free => None,
        Boundary::Wired | Boundary::Partial(_) => {
            let dag = volume;
            for v in 0..volume {
                let x = box_coords(v, l, d);
                let mut outside = Vec::new();
                for i in 0..d {
                    let mut up = x.clone();
                    up[i] += 1;
                    if box_index(&up, l).is_none() {
                        outside.push(LatticeEdge::new(x.clone(), i));
                    }
                    let mut down = x.clone();
                    down[i] -= 1;
                    if box_index(&down, l).is_none() {
                        outside.push(LatticeEdge::new(down, i));
                    }
                }
                if !outside.is_empty() {
                    edges.push((v, dag));
                    provenance.push(outside);
                }
            }
            Some(dag)
        }
    };
    let n = volume + dagger.map_or(0, |_| 1);
    let graph = MultiGraph::from_edges(n, &edges)?;
    let index = provenance[..internal_edges]
        .iter()
        .enumerate()
        .map(|(e, p)| (p[0].clone(), e))
        .collect();
    Ok(BoundaryGraph {
        l,
        d,
        boundary,
        graph,
        provenance,
        dagger,
        volume,
        internal_edges,
        index,
    })
}

impl BoundaryGraph {
    /// Id of an internal `ℤ^d` edge, if it lies in the box.
    pub fn edge_id(&self, e: &LatticeEdge) -> Option<EdgeId> {
        self.index.get(e).copied()
    }

    fn check_size(&self) -> Result<()> {
        if self.graph.n() > LATTICE_LIMIT {
            return Err(Error::TooLarge(format!(
                "box with {} vertices exceeds {LATTICE_LIMIT}",
                self.graph.n()
            )));
        }
        Ok(())
    }

    /// `log w(e) = log Σ_{z∈prov(e)} e^{−β ω_z}` (plus `log λ` for partial wiring).
    pub fn log_weights(&self, env: &LatticeEnvironment, beta: f64) -> Vec<f64> {
        let log_lambda = match self.boundary {
            Boundary::Partial(l) => l.ln(),
            _ => 0.0,
        };
        self.provenance
            .iter()
            .enumerate()
            .map(|(e, zs)| {
                let xs: Vec<f64> = zs.iter().map(|z| -beta * env.omega(z)).collect();
                let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln();
                lse + if e >= self.internal_edges { log_lambda } else { 0.0 }
            })
            .collect()
    }

    /// Gibbs-averaged disorder `−∂_β log w(e)` of every edge.
    pub fn mean_omega(&self, env: &LatticeEnvironment, beta: f64) -> Vec<f64> {
        self.provenance
            .iter()
            .map(|zs| {
                let om: Vec<f64> = zs.iter().map(|z| env.omega(z)).collect();
                let lo = om.iter().copied().fold(f64::INFINITY, f64::min);
                let ws: Vec<f64> = om.iter().map(|w| (-beta * (w - lo)).exp()).collect();
                let total: f64 = ws.iter().sum();
                om.iter().zip(&ws).map(|(o, w)| o * w).sum::<f64>() / total
            })
            .collect()
    }

    pub fn conductances(&self, env: &LatticeEnvironment, beta: f64) -> Result<Conductances> {
        if env.d != self.d {
            return Err(Error::invalid("environment dimension does not match the box"));
        }
        Ok(Conductances::from_log_weights(&self.log_weights(env, beta)))
    }
}

/// `F = log Z / |Λ|` (the wired extra vertex is not counted in `|Λ|`).
pub fn free_energy(bg: &BoundaryGraph, env: &LatticeEnvironment, beta: f64) -> Result<f64> {
    bg.check_size()?;
    let c = bg.conductances(env, beta)?;
    let logdet = reduced_laplacian_log_det(&bg.graph, &c.scaled)?;
    let log_z = logdet + (bg.graph.n() - 1) as f64 * c.log_scale;
    Ok(log_z / bg.volume as f64)
}

/// `Σ_{internal e} P(e ∈ T)² / (|Λ| − 1)`.
pub fn overlap_density(bg: &BoundaryGraph, env: &LatticeEnvironment, beta: f64) -> Result<f64> {
    bg.check_size()?;
    if bg.volume < 2 {
        return Err(Error::invalid("overlap density needs at least two box vertices"));
    }
    let c = bg.conductances(env, beta)?;
    let p = edge_marginals_scaled(&bg.graph, &c.scaled)?;
    let s: f64 = p[..bg.internal_edges].iter().map(|x| x * x).sum();
    Ok(s / (bg.volume - 1) as f64)
}

/// `P(A ⊂ T)` for internal `ℤ^d` edges `A` by a transfer-current determinant.
pub fn cylinder_probability(
    bg: &BoundaryGraph,
    env: &LatticeEnvironment,
    beta: f64,
    a: &[LatticeEdge],
) -> Result<f64> {
    bg.check_size()?;
    let ids = a
        .iter()
        .map(|z| {
            bg.edge_id(z)
                .ok_or_else(|| Error::PreconditionFailed(format!("edge {z:?} not inside the box")))
        })
        .collect::<Result<Vec<_>>>()?;
    let c = bg.conductances(env, beta)?;
    joint_edge_probability_scaled(&bg.graph, &c.scaled, &ids)
}

/// Free and wired cylinder probabilities along a sequence of box sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderReport {
    pub ls: Vec<usize>,
    pub free: Vec<f64>,
    pub wired: Vec<f64>,
    pub free_nonincreasing: bool,
    pub wired_nondecreasing: bool,
    pub wired_below_free: bool,
}

/// Check that `P^F_{Λ_L}(A ⊂ T)` is nonincreasing and `P^W_{Λ_L}(A ⊂ T)` nondecreasing
/// in `L`, and that wired never exceeds free, with slack `1e-9`.
pub fn cylinder_monotonicity_check(
    a: &[LatticeEdge],
    ls: &[usize],
    env: &LatticeEnvironment,
    beta: f64,
) -> Result<CylinderReport> {
    let mut free = Vec::with_capacity(ls.len());
    let mut wired = Vec::with_capacity(ls.len());
    for &l in ls {
        let f = build_boundary_box(l, env.d, Boundary::Free)?;
        let w = build_boundary_box(l, env.d, Boundary::Wired)?;
        free.push(cylinder_probability(&f, env, beta, a)?);
        wired.push(cylinder_probability(&w, env, beta, a)?);
    }
    const SLACK: f64 = 1e-9;
    let report = CylinderReport {
        ls: ls.to_vec(),
        free_nonincreasing: free.windows(2).all(|x| x[1] <= x[0] + SLACK),
        wired_nondecreasing: wired.windows(2).all(|x| x[1] >= x[0] - SLACK),
        wired_below_free: wired.iter().zip(&free).all(|(w, f)| *w <= f + SLACK),
        free,
        wired,
    };
    if report.free_nonincreasing && report.wired_nondecreasing && report.wired_below_free {
        Ok(report)
    } else {
        Err(Error::CheckFailed(format!("cylinder monotonicity violated: {report:?}")))
    }
}

/// `log |𝕋(Λ_L)| / |Λ_L|` for `L = 1..=l_max` (free boundary, β = 0).
pub fn tree_count_growth(d: usize, l_max: usize) -> Result<Vec<f64>> {
    let env = LatticeEnvironment::new(DisorderLaw::Uniform01, 0, d)?;
    (1..=l_max)
        .map(|l| free_energy(&build_boundary_box(l, d, Boundary::Free)?, &env, 0.0))
        .collect()
}

/// Free energy, overlap density and tree-count growth of one box.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeReport {
    pub l: usize,
    pub d: usize,
    pub beta: f64,
    pub free_energy: f64,
    pub rho_hat: f64,
    /// `log |𝕋(Λ_L)| / |Λ_L|` for the same box.
    pub z_d_hat: f64,
}

pub fn lattice_report(bg: &BoundaryGraph, env: &LatticeEnvironment, beta: f64) -> Result<LatticeReport> {
    Ok(LatticeReport {
        l: bg.l,
        d: bg.d,
        beta,
        free_energy: free_energy(bg, env, beta)?,
        rho_hat: overlap_density(bg, env, beta)?,
        z_d_hat: free_energy(bg, env, 0.0)?,
    })
}

/// Central difference of `F(β)` against `−E[H]/|Λ|` with Gibbs-averaged edge disorder.
pub fn free_energy_derivative(
    bg: &BoundaryGraph,
    env: &LatticeEnvironment,
    beta: f64,
    h: f64,
) -> Result<(f64, f64)> {
    let fd = (free_energy(bg, env, beta + h)? - free_energy(bg, env, beta - h)?) / (2.0 * h);
    let c = bg.conductances(env, beta)?;
    let p = edge_marginals_scaled(&bg.graph, &c.scaled)?;
    let om = bg.mean_omega(env, beta);
    let eh: f64 = p.iter().zip(&om).map(|(p, w)| p * w).sum();
    Ok((fd, -eh / bg.volume as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(d: usize) -> LatticeEnvironment {
        LatticeEnvironment::new(DisorderLaw::Uniform01, 7, d).unwrap()
    }

    #[test]
    fn box_shapes() {
        let f = build_boundary_box(1, 1, Boundary::Free).unwrap();
        assert_eq!((f.graph.n(), f.graph.m()), (3, 2));
        let w = build_boundary_box(1, 1, Boundary::Wired).unwrap();
        assert_eq!((w.graph.n(), w.graph.m()), (4, 4));
        let w2 = build_boundary_box(1, 2, Boundary::Wired).unwrap();
        assert_eq!(w2.graph.n(), 10);
        assert_eq!(w2.graph.degree(w2.dagger.unwrap()), 8);
        // Corners carry two outside edges.
        assert_eq!(w2.provenance.iter().filter(|p| p.len() == 2).count(), 4);
    }

    #[test]
    fn environment_is_shared_by_nested_boxes() {
        let e = env(2);
        let small = build_boundary_box(1, 2, Boundary::Free).unwrap();
        let big = build_boundary_box(2, 2, Boundary::Free).unwrap();
        for z in small.provenance.iter().map(|p| &p[0]) {
            let (a, b) = (small.edge_id(z).unwrap(), big.edge_id(z).unwrap());
            assert_eq!(small.log_weights(&e, 1.0)[a], big.log_weights(&e, 1.0)[b]);
        }
    }

    #[test]
    fn free_energy_values() {
        let e = env(1);
        for l in 1..4 {
            let bg = build_boundary_box(l, 1, Boundary::Free).unwrap();
            assert!(free_energy(&bg, &e, 0.0).unwrap().abs() < 1e-12);
        }
        let bg = build_boundary_box(1, 2, Boundary::Free).unwrap();
        assert!((free_energy(&bg, &env(2), 0.0).unwrap() - 192f64.ln() / 9.0).abs() < 1e-12);
        let growth = tree_count_growth(2, 4).unwrap();
        assert!(growth.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cylinder_chains_and_derivative() {
        let e = env(2);
        let a = [LatticeEdge::new(vec![0, 0], 0)];
        for beta in [0.0, 2.0] {
            let r = cylinder_monotonicity_check(&a, &[1, 2, 3], &e, beta).unwrap();
            assert!(r.wired_below_free);
        }
        let r = cylinder_monotonicity_check(&[], &[1, 2], &e, 1.0).unwrap();
        assert!(r.free.iter().chain(&r.wired).all(|&p| p == 1.0));
        for boundary in [Boundary::Free, Boundary::Wired, Boundary::Partial(0.3)] {
            let bg = build_boundary_box(2, 2, boundary).unwrap();
            let (fd, formula) = free_energy_derivative(&bg, &e, 1.5, 1e-4).unwrap();
            assert!((fd - formula).abs() < 1e-6);
        }
    }

    #[test]
    fn partial_wiring_is_sandwiched() {
        let e = env(2);
        let a = [LatticeEdge::new(vec![0, 0], 1), LatticeEdge::new(vec![1, 0], 0)];
        let p = |b| cylinder_probability(&build_boundary_box(2, 2, b).unwrap(), &e, 1.0, &a).unwrap();
        let (f, w, b) = (p(Boundary::Free), p(Boundary::Wired), p(Boundary::Partial(0.4)));
        assert!(w <= b + 1e-12 && b <= f + 1e-12);
    }
}
