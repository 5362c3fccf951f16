//! Spanning-tree samplers and exact oracles.
//!
//! Walk-based samplers (Wilson, Aldous–Broder) use the non-lazy kernel; laziness never
//! changes the tree law and is only exposed for mixing diagnostics. For very large `β`
//! walks become trapped behind exponentially small conductances, and the
//! [`sequential`] sampler is used instead.

pub mod exact;
pub mod mst;
pub mod sequential;
pub mod walk;

pub use exact::{
    enumerate_spanning_trees, exact_tree_law, format_tree_line, matrix_tree_partition_function,
    parse_tree_line, spanning_tree_count, TreeLaw, ENUMERATION_CAP,
};
pub use mst::{complete_mst, kruskal_mst, prim_mst, MstResult};
pub use sequential::{sequential_sample, sequential_sample_complete, window_load};
pub use walk::{
    aldous_broder_with_kernel, lazy_random_walk, loop_erase, wilson_with_kernel, CompleteKernel,
    ExplicitKernel, VertexOrder, WalkKernel, WalkPath, STEP_CAP,
};

use crate::environment::{CompleteEnvironment, WeightedGraphView};
use crate::error::{Error, Result};
use crate::graph::{SpanningTree, UnionFind, VertexId};
use crate::rng::RngStream;

/// Window loads up to this size favour the sequential sampler.
pub const SEQUENTIAL_LOAD: f64 = 64.0;

/// Choice of tree sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    Wilson,
    AldousBroder,
    Sequential,
    /// Sequential when the conductance window is small, Wilson otherwise.
    Auto,
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wilson" => Ok(SamplerKind::Wilson),
            "aldous-broder" | "ab" => Ok(SamplerKind::AldousBroder),
            "sequential" => Ok(SamplerKind::Sequential),
            "auto" => Ok(SamplerKind::Auto),
            _ => Err(Error::invalid(format!("unknown sampler {s:?}"))),
        }
    }
}

fn explicit_kernel(wg: &WeightedGraphView) -> Result<ExplicitKernel> {
    if !wg.graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let c = wg.conductances();
    let mut uf = UnionFind::new(wg.graph.n());
    for (e, &(u, v)) in wg.graph.edges().iter().enumerate() {
        if c.scaled[e] > 0.0 {
            uf.union(u, v);
        }
    }
    if uf.sets() > 1 {
        return Err(Error::UnsupportedRange(format!(
            "weights underflow at beta = {}; use the sequential sampler",
            wg.beta
        )));
    }
    ExplicitKernel::new(wg.graph, &c.scaled)
}

/// Lazy weighted random walk on `wg`.
pub fn lazy_walk(
    wg: &WeightedGraphView,
    start: VertexId,
    stop: impl FnMut(VertexId, usize) -> bool,
    rng: &mut RngStream,
) -> Result<WalkPath> {
    let mut k = ExplicitKernel::new(wg.graph, &wg.conductances().scaled)?;
    lazy_random_walk(&mut k, start, stop, rng, STEP_CAP)
}

/// Wilson's algorithm on `wg`.
pub fn wilson_sample(
    wg: &WeightedGraphView,
    root: VertexId,
    order: &VertexOrder,
    rng: &mut RngStream,
) -> Result<SpanningTree> {
    let mut k = explicit_kernel(wg)?;
    wilson_with_kernel(&mut k, root, order, rng, STEP_CAP)
}

/// Aldous–Broder on `wg`.
pub fn aldous_broder_sample(
    wg: &WeightedGraphView,
    start: VertexId,
    rng: &mut RngStream,
) -> Result<SpanningTree> {
    let mut k = explicit_kernel(wg)?;
    aldous_broder_with_kernel(&mut k, start, rng, STEP_CAP)
}

/// Resolve [`SamplerKind::Auto`] for an explicit graph.
pub fn choose_sampler(wg: &WeightedGraphView) -> SamplerKind {
    if wg.beta == 0.0 {
        return SamplerKind::Wilson;
    }
    let mut xs = wg.env.omega().to_vec();
    xs.sort_by(f64::total_cmp);
    if window_load(&xs, wg.graph.n(), wg.beta) <= SEQUENTIAL_LOAD {
        SamplerKind::Sequential
    } else {
        SamplerKind::Wilson
    }
}

/// One RSTRE sample on an explicit graph.
pub fn sample_tree(
    wg: &WeightedGraphView,
    kind: SamplerKind,
    rng: &mut RngStream,
) -> Result<SpanningTree> {
    let kind = match kind {
        SamplerKind::Auto => choose_sampler(wg),
        k => k,
    };
    match kind {
        SamplerKind::Wilson => wilson_sample(wg, 0, &VertexOrder::Natural, rng),
        SamplerKind::AldousBroder => aldous_broder_sample(wg, 0, rng),
        SamplerKind::Sequential => sequential_sample(wg.graph, wg.env, wg.beta, rng),
        SamplerKind::Auto => unreachable!(),
    }
}

/// One RSTRE sample on `K_n` with an implicit environment.
pub fn sample_complete_tree(
    kn: &CompleteEnvironment,
    beta: f64,
    kind: SamplerKind,
    rng: &mut RngStream,
) -> Result<SpanningTree> {
    let kind = match kind {
        SamplerKind::Auto if beta > 0.0 => {
            if sequential::window_load_complete(kn, beta)? <= SEQUENTIAL_LOAD {
                SamplerKind::Sequential
            } else {
                SamplerKind::Wilson
            }
        }
        SamplerKind::Auto => SamplerKind::Wilson,
        k => k,
    };
    match kind {
        SamplerKind::Wilson => {
            let mut k = CompleteKernel::new(kn, beta)?;
            wilson_with_kernel(&mut k, 0, &VertexOrder::Natural, rng, STEP_CAP)
        }
        SamplerKind::AldousBroder => {
            let mut k = CompleteKernel::new(kn, beta)?;
            aldous_broder_with_kernel(&mut k, 0, rng, STEP_CAP)
        }
        SamplerKind::Sequential => sequential_sample_complete(kn, beta, rng),
        SamplerKind::Auto => unreachable!(),
    }
}
