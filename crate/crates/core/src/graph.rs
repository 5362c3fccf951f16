//! Undirected multigraphs with stable edge identities, spanning trees and the
//! graph families used throughout the crate.

use std::collections::VecDeque;
use std::path::Path;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Union–find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merge the sets of `a` and `b`; returns false when they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    pub fn sets(&self) -> usize {
        self.sets
    }
}

/// Undirected multigraph on vertices `0..n`.
///
/// Each edge is stored with its lower endpoint first; that endpoint is the tail `e⁻`
/// of the fixed reference orientation. Self-loops are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiGraph {
    n: usize,
    edges: Vec<(VertexId, VertexId)>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
}

impl MultiGraph {
    /// Graph with `n` vertices and no edges.
    pub fn new(n: usize) -> Self {
        MultiGraph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Build from an endpoint list; self-loops and out-of-range endpoints are errors.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut g = MultiGraph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Append an edge and return its id.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<EdgeId> {
        if u >= self.n || v >= self.n {
            return Err(Error::invalid(format!(
                "edge ({u},{v}) out of range for {} vertices",
                self.n
            )));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop at vertex {u}")));
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let id = self.edges.len();
        self.edges.push((a, b));
        self.adj[a].push((b, id));
        self.adj[b].push((a, id));
        Ok(id)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints `(e⁻, e⁺)` with `e⁻ < e⁺`.
    #[inline]
    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Incident `(neighbour, edge)` pairs of `v`.
    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e < self.m() {
            Ok(())
        } else {
            Err(Error::invalid(format!("unknown edge id {e}")))
        }
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || connected_components(self).sizes.len() == 1
    }

    /// Breadth-first distances from `s` (`usize::MAX` when unreachable).
    pub fn bfs_distances(&self, s: VertexId) -> Vec<usize> {
        bfs(self.n, |v| self.adj[v].iter().map(|&(w, _)| w), s)
    }

    /// Same graph with every edge used as a subgraph keeping only `keep`.
    pub fn edge_subgraph(&self, keep: &[EdgeId]) -> (MultiGraph, Vec<EdgeId>) {
        let mut g = MultiGraph::new(self.n);
        let mut ids = Vec::with_capacity(keep.len());
        for &e in keep {
            let (u, v) = self.edges[e];
            g.add_edge(u, v).expect("edges of a valid graph");
            ids.push(e);
        }
        (g, ids)
    }

    /// Subgraph induced by `vertices`, relabelled `0..k` in the given order.
    /// Returns the graph and, for every new edge, its id in `self`.
    pub fn induced_subgraph(&self, vertices: &[VertexId]) -> (MultiGraph, Vec<EdgeId>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut g = MultiGraph::new(vertices.len());
        let mut ids = Vec::new();
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if local[u] != usize::MAX && local[v] != usize::MAX {
                g.add_edge(local[u], local[v]).expect("valid endpoints");
                ids.push(e);
            }
        }
        (g, ids)
    }
}

fn bfs<I, F>(n: usize, nbrs: F, s: VertexId) -> Vec<usize>
where
    F: Fn(VertexId) -> I,
    I: Iterator<Item = VertexId>,
{
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[s] = 0;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        for w in nbrs(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Index of edge `{u, v}` (u ≠ v) in the lexicographic edge order of `K_n` produced by
/// [`build_complete`].
#[inline]
pub fn complete_edge_id(n: usize, u: VertexId, v: VertexId) -> EdgeId {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

/// The complete graph `K_n`, edges in lexicographic order of `(u, v)` with `u < v`.
pub fn build_complete(n: usize) -> Result<MultiGraph> {
    if n == 0 {
        return Err(Error::invalid("complete graph needs n >= 1"));
    }
    let mut g = MultiGraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v)?;
        }
    }
    Ok(g)
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn build_path(n: usize) -> Result<MultiGraph> {
    if n == 0 {
        return Err(Error::invalid("path needs n >= 1"));
    }
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    MultiGraph::from_edges(n, &edges)
}

/// Cycle on `n >= 3` vertices.
pub fn build_cycle(n: usize) -> Result<MultiGraph> {
    if n < 3 {
        return Err(Error::invalid("cycle needs n >= 3"));
    }
    let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    edges.push((0, n - 1));
    MultiGraph::from_edges(n, &edges)
}

/// Star with centre 0 and `leaves` leaves.
pub fn build_star(leaves: usize) -> Result<MultiGraph> {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    MultiGraph::from_edges(leaves + 1, &edges)
}

/// Coordinates of box vertex `idx` in `[-L, L]^d` (first coordinate varies fastest).
pub fn box_coords(idx: usize, l: usize, d: usize) -> Vec<i64> {
    let side = 2 * l + 1;
    let mut rest = idx;
    (0..d)
        .map(|_| {
            let c = (rest % side) as i64 - l as i64;
            rest /= side;
            c
        })
        .collect()
}

/// Inverse of [`box_coords`]; `None` when the point lies outside the box.
pub fn box_index(x: &[i64], l: usize) -> Option<usize> {
    let side = (2 * l + 1) as i64;
    let mut idx = 0i64;
    for &c in x.iter().rev() {
        if c < -(l as i64) || c > l as i64 {
            return None;
        }
        idx = idx * side + (c + l as i64);
    }
    Some(idx as usize)
}

/// The box `[-L, L]^d ∩ ℤ^d` with nearest-neighbour edges; `torus` wraps coordinates.
///
/// Edges are listed vertex by vertex, dimension by dimension, in the `+` direction.
pub fn build_box(l: usize, d: usize, torus: bool) -> Result<MultiGraph> {
    if d == 0 {
        return Err(Error::invalid("box dimension must be >= 1"));
    }
    let side = 2 * l + 1;
    let n = (0..d)
        .try_fold(1usize, |acc, _| acc.checked_mul(side))
        .filter(|&n| n <= 1 << 28)
        .ok_or_else(|| Error::invalid(format!("box L={l}, d={d} is too large")))?;
    let mut g = MultiGraph::new(n);
    for v in 0..n {
        let x = box_coords(v, l, d);
        for i in 0..d {
            let mut y = x.clone();
            y[i] += 1;
            if let Some(w) = box_index(&y, l) {
                g.add_edge(v, w)?;
            } else if torus && side >= 3 {
                y[i] = -(l as i64);
                g.add_edge(v, box_index(&y, l).expect("wrapped point"))?;
            }
        }
    }
    Ok(g)
}

/// Uniform simple `d`-regular graph on `n` vertices by the configuration model with
/// rejection of self-loops and multi-edges.
pub fn build_random_regular(n: usize, d: usize, seed: u64) -> Result<MultiGraph> {
    if (n * d) % 2 == 1 {
        return Err(Error::invalid(format!("n*d = {} is odd", n * d)));
    }
    if d >= n {
        return Err(Error::invalid(format!("degree {d} must be below n = {n}")));
    }
    const BUDGET: u64 = 10_000;
    let mut stubs: Vec<VertexId> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
    for attempt in 0..BUDGET {
        let mut rng = RngStream::new(seed, "regular", attempt);
        rng.shuffle(&mut stubs);
        let mut seen = std::collections::HashSet::with_capacity(n * d / 2);
        let mut ok = true;
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                ok = false;
                break;
            }
        }
        if ok {
            let edges: Vec<_> = stubs.chunks(2).map(|p| (p[0], p[1])).collect();
            return MultiGraph::from_edges(n, &edges);
        }
    }
    Err(Error::RetryExhausted(format!(
        "no simple {d}-regular graph on {n} vertices after {BUDGET} pairings"
    )))
}

/// Parse the edge-list format: first line `n`, then `u v` or `u v omega` per line.
///
/// Either every edge line carries a disorder value or none does.
pub fn parse_edge_list(text: &str) -> Result<(MultiGraph, Option<Vec<f64>>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing vertex count".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line: first,
        msg: format!("bad vertex count '{header}'"),
    })?;
    let mut g = MultiGraph::new(n);
    let mut omega = Vec::new();
    let mut with_omega: Option<bool> = None;
    for (line, l) in lines {
        let parts: Vec<&str> = l.split_whitespace().collect();
        let perr = |msg: String| Error::Parse { line, msg };
        if parts.len() != 2 && parts.len() != 3 {
            return Err(perr(format!("expected 'u v [omega]', got '{l}'")));
        }
        let u: usize = parts[0]
            .parse()
            .map_err(|_| perr(format!("bad vertex '{}'", parts[0])))?;
        let v: usize = parts[1]
            .parse()
            .map_err(|_| perr(format!("bad vertex '{}'", parts[1])))?;
        if u >= n || v >= n {
            return Err(perr(format!("vertex out of range in '{l}' (n = {n})")));
        }
        if u == v {
            return Err(perr(format!("self-loop at vertex {u}")));
        }
        if u > v {
            return Err(perr(format!("endpoints must satisfy u < v, got '{l}'")));
        }
        let has = parts.len() == 3;
        if *with_omega.get_or_insert(has) != has {
            return Err(perr("disorder column present on some lines only".into()));
        }
        if has {
            let w: f64 = parts[2]
                .parse()
                .map_err(|_| perr(format!("bad disorder value '{}'", parts[2])))?;
            if !w.is_finite() {
                return Err(perr(format!("non-finite disorder value '{}'", parts[2])));
            }
            omega.push(w);
        }
        g.add_edge(u, v).map_err(|e| perr(e.to_string()))?;
    }
    Ok((g, if with_omega == Some(true) { Some(omega) } else { None }))
}

/// Read an edge-list file; the environment is present when the disorder column is.
pub fn build_from_edge_list(path: &Path) -> Result<(MultiGraph, Option<Environment>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (g, omega) = parse_edge_list(&text)?;
    Ok((g, omega.map(Environment::fixed)))
}

/// Render a graph (and optional disorder) in the edge-list format.
pub fn write_edge_list(g: &MultiGraph, omega: Option<&[f64]>) -> String {
    let mut out = format!("{}\n", g.n());
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        match omega {
            Some(w) => out.push_str(&format!("{u} {v} {}\n", w[e])),
            None => out.push_str(&format!("{u} {v}\n")),
        }
    }
    out
}

/// Result of contracting a set of edges.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub graph: MultiGraph,
    /// Old vertex → new vertex.
    pub vertex_map: Vec<VertexId>,
    /// Old edge → new edge; `None` for contracted edges and dropped self-loops.
    pub edge_map: Vec<Option<EdgeId>>,
}

/// Merge the endpoints of every edge in `a`. New vertices are numbered by the smallest
/// old vertex of their class; surviving edges keep their relative order.
pub fn contract_edges(g: &MultiGraph, a: &[EdgeId]) -> Result<Contraction> {
    let mut uf = UnionFind::new(g.n());
    for &e in a {
        g.check_edge(e)?;
        let (u, v) = g.endpoints(e);
        uf.union(u, v);
    }
    let mut root_label = vec![usize::MAX; g.n()];
    let mut vertex_map = vec![0; g.n()];
    let mut next = 0;
    for v in 0..g.n() {
        let r = uf.find(v);
        if root_label[r] == usize::MAX {
            root_label[r] = next;
            next += 1;
        }
        vertex_map[v] = root_label[r];
    }
    let mut graph = MultiGraph::new(next);
    let mut edge_map = vec![None; g.m()];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let (nu, nv) = (vertex_map[u], vertex_map[v]);
        if nu != nv {
            edge_map[e] = Some(graph.add_edge(nu, nv)?);
        }
    }
    Ok(Contraction {
        graph,
        vertex_map,
        edge_map,
    })
}

/// Result of deleting a set of edges: vertices are unchanged.
#[derive(Clone, Debug)]
pub struct Deletion {
    pub graph: MultiGraph,
    /// Old edge → new edge; `None` for deleted edges.
    pub edge_map: Vec<Option<EdgeId>>,
}

/// Remove the edges in `b`, keeping every vertex.
pub fn delete_edges(g: &MultiGraph, b: &[EdgeId]) -> Result<Deletion> {
    let mut gone = vec![false; g.m()];
    for &e in b {
        g.check_edge(e)?;
        gone[e] = true;
    }
    let mut graph = MultiGraph::new(g.n());
    let mut edge_map = vec![None; g.m()];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if !gone[e] {
            edge_map[e] = Some(graph.add_edge(u, v)?);
        }
    }
    Ok(Deletion { graph, edge_map })
}

/// Connected components ordered by decreasing size, ties broken by smallest vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentCensus {
    /// Vertex → component index (index 0 is the largest component).
    pub component: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ComponentCensus {
    /// Vertices of component `i` in increasing order.
    pub fn members(&self, i: usize) -> Vec<VertexId> {
        (0..self.component.len())
            .filter(|&v| self.component[v] == i)
            .collect()
    }

    pub fn largest(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }

    pub fn second(&self) -> usize {
        self.sizes.get(1).copied().unwrap_or(0)
    }
}

pub fn connected_components(g: &MultiGraph) -> ComponentCensus {
    census_from_edges(g.n(), g.edges().iter().copied())
}

/// Component census of the graph on `0..n` with the given edges.
pub fn census_from_edges(
    n: usize,
    edges: impl IntoIterator<Item = (VertexId, VertexId)>,
) -> ComponentCensus {
    let mut uf = UnionFind::new(n);
    for (u, v) in edges {
        uf.union(u, v);
    }
    // (size, smallest vertex, root) for each class; vertices are scanned in order so the
    // first vertex seen of a class is its smallest.
    let mut first_seen = vec![usize::MAX; n];
    let mut classes = Vec::new();
    for v in 0..n {
        let r = uf.find(v);
        if first_seen[r] == usize::MAX {
            first_seen[r] = classes.len();
            classes.push((uf.set_size(r), v, r));
        }
    }
    classes.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut rank = vec![0; n];
    for (i, &(_, _, r)) in classes.iter().enumerate() {
        rank[r] = i;
    }
    let component = (0..n).map(|v| rank[uf.find(v)]).collect();
    ComponentCensus {
        component,
        sizes: classes.iter().map(|c| c.0).collect(),
    }
}

/// A spanning tree of a graph on `n` vertices, stored as `(edge, u, v)` sorted by edge id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpanningTree {
    n: usize,
    edges: Vec<(EdgeId, VertexId, VertexId)>,
}

impl SpanningTree {
    /// Validate that the listed edges of `g` form a spanning tree.
    pub fn from_edge_ids(g: &MultiGraph, ids: &[EdgeId]) -> Result<Self> {
        let mut edges = Vec::with_capacity(ids.len());
        for &e in ids {
            g.check_edge(e)?;
            let (u, v) = g.endpoints(e);
            edges.push((e, u, v));
        }
        SpanningTree::from_triples(g.n(), edges)
    }

    /// Validate `(edge, u, v)` triples on `n` vertices.
    pub fn from_triples(n: usize, mut edges: Vec<(EdgeId, VertexId, VertexId)>) -> Result<Self> {
        if n == 0 || edges.len() != n - 1 {
            return Err(Error::invalid(format!(
                "a spanning tree on {n} vertices needs {} edges, got {}",
                n.saturating_sub(1),
                edges.len()
            )));
        }
        let mut uf = UnionFind::new(n);
        for &(_, u, v) in &edges {
            if u >= n || v >= n || !uf.union(u, v) {
                return Err(Error::invalid("edge set contains a cycle"));
            }
        }
        edges.sort_unstable();
        Ok(SpanningTree { n, edges })
    }

    /// Trusted constructor for samplers that already guarantee a spanning tree.
    pub(crate) fn from_triples_unchecked(
        n: usize,
        mut edges: Vec<(EdgeId, VertexId, VertexId)>,
    ) -> Self {
        debug_assert_eq!(edges.len() + 1, n.max(1));
        edges.sort_unstable();
        SpanningTree { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges.iter().map(|t| t.0).collect()
    }

    pub fn triples(&self) -> &[(EdgeId, VertexId, VertexId)] {
        &self.edges
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.binary_search_by(|t| t.0.cmp(&e)).is_ok()
    }

    /// Number of shared edges with another tree.
    pub fn overlap(&self, other: &SpanningTree) -> usize {
        let (mut i, mut j, mut c) = (0, 0, 0);
        while i < self.edges.len() && j < other.edges.len() {
            match self.edges[i].0.cmp(&other.edges[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    c += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        c
    }

    /// Adjacency lists `(neighbour, edge)`.
    pub fn adjacency(&self) -> Vec<Vec<(VertexId, EdgeId)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(e, u, v) in &self.edges {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(_, u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn diameter(&self) -> usize {
        let adj = adjacency_from_pairs(self.n, self.edges.iter().map(|t| (t.1, t.2)));
        diameter_from(&adj, 0).0
    }
}

fn adjacency_from_pairs(
    n: usize,
    pairs: impl Iterator<Item = (VertexId, VertexId)>,
) -> Vec<Vec<VertexId>> {
    let mut adj = vec![Vec::new(); n];
    for (u, v) in pairs {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}

/// Double sweep from `s` inside its component of an acyclic adjacency structure.
fn diameter_from(adj: &[Vec<VertexId>], s: VertexId) -> (usize, Vec<usize>) {
    let far = |src: VertexId| {
        let d = bfs(adj.len(), |v| adj[v].iter().copied(), src);
        let (arg, best) = d
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != usize::MAX)
            .max_by_key(|(i, &x)| (x, std::cmp::Reverse(*i)))
            .map(|(i, &x)| (i, x))
            .unwrap_or((src, 0));
        (arg, best, d)
    };
    let (a, _, _) = far(s);
    let (_, diam, d) = far(a);
    (diam, d)
}

/// Diameter (in edges) of a tree given by its edge list on `n` vertices.
///
/// Errors when the edges contain a cycle or do not connect all vertices.
pub fn tree_diameter(n: usize, edges: &[(VertexId, VertexId)]) -> Result<usize> {
    let diams = forest_diameters(n, edges)?;
    if diams.len() != 1 {
        return Err(Error::invalid(format!(
            "input is a forest with {} components",
            diams.len()
        )));
    }
    Ok(diams[0])
}

/// Per-component diameters of a forest, ordered like [`connected_components`].
pub fn forest_diameters(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Vec<usize>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut uf = UnionFind::new(n);
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::invalid(format!("edge ({u},{v}) out of range")));
        }
        if !uf.union(u, v) {
            return Err(Error::invalid("input has a cycle"));
        }
    }
    let census = census_from_edges(n, edges.iter().copied());
    let adj = adjacency_from_pairs(n, edges.iter().copied());
    let mut out = vec![0; census.sizes.len()];
    let mut done = vec![false; census.sizes.len()];
    for v in 0..n {
        let c = census.component[v];
        if !done[c] {
            done[c] = true;
            out[c] = diameter_from(&adj, v).0;
        }
    }
    Ok(out)
}

/// Minimal subtree of a tree containing a vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subtree {
    /// Vertices in increasing order.
    pub vertices: Vec<VertexId>,
    /// Edge ids in increasing order.
    pub edges: Vec<EdgeId>,
}

/// Union of the tree paths between vertices of `a`: the minimal subtree spanning `a`.
pub fn restricted_subtree(t: &SpanningTree, a: &[VertexId]) -> Result<Subtree> {
    if a.is_empty() {
        return Err(Error::invalid("restricted subtree of an empty vertex set"));
    }
    let n = t.n();
    let mut marked = vec![false; n];
    for &v in a {
        if v >= n {
            return Err(Error::invalid(format!("vertex {v} not in tree")));
        }
        marked[v] = true;
    }
    let total = marked.iter().filter(|&&m| m).count();
    let adj = t.adjacency();
    let root = a[0];
    // Iterative DFS order; count marked vertices below each vertex.
    let mut parent = vec![(usize::MAX, usize::MAX); n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, e) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = (v, e);
                stack.push(w);
            }
        }
    }
    let mut below = vec![0usize; n];
    let mut edges = Vec::new();
    let mut in_tree = vec![false; n];
    in_tree[root] = true;
    for &v in order.iter().rev() {
        if marked[v] {
            below[v] += 1;
        }
        if v != root {
            let (p, e) = parent[v];
            if below[v] > 0 && below[v] < total {
                edges.push(e);
                in_tree[v] = true;
                in_tree[p] = true;
            }
            below[p] += below[v];
        }
    }
    edges.sort_unstable();
    let vertices = (0..n).filter(|&v| in_tree[v]).collect();
    Ok(Subtree { vertices, edges })
}

/// A finite rooted tree on vertices `0..len` with root 0 and children lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    children: Vec<Vec<usize>>,
}

impl RootedTree {
    /// A single root vertex.
    pub fn singleton() -> Self {
        RootedTree {
            children: vec![Vec::new()],
        }
    }

    /// Build from a parent array where `parents[0]` is ignored (vertex 0 is the root)
    /// and `parents[i] < i` for `i > 0`.
    pub fn from_parents(parents: &[usize]) -> Result<Self> {
        if parents.is_empty() {
            return Err(Error::invalid("rooted tree needs at least one vertex"));
        }
        let mut children = vec![Vec::new(); parents.len()];
        for (i, &p) in parents.iter().enumerate().skip(1) {
            if p >= i {
                return Err(Error::invalid(format!("parent of {i} must precede it")));
            }
            children[p].push(i);
        }
        Ok(RootedTree { children })
    }

    /// Append a child of `parent`, returning its index.
    pub fn add_child(&mut self, parent: usize) -> usize {
        let id = self.children.len();
        self.children.push(Vec::new());
        self.children[parent].push(id);
        id
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Undirected adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for (v, cs) in self.children.iter().enumerate() {
            for &c in cs {
                adj[v].push(c);
                adj[c].push(v);
            }
        }
        adj
    }

    /// Depth of every vertex.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.len()];
        for v in 0..self.len() {
            for &c in &self.children[v] {
                depth[c] = depth[v] + 1;
            }
        }
        depth
    }

    /// AHU canonical code: equal codes iff the rooted trees are isomorphic.
    pub fn canonical_code(&self) -> String {
        fn code(t: &RootedTree, v: usize) -> String {
            let mut parts: Vec<String> = t.children[v].iter().map(|&c| code(t, c)).collect();
            parts.sort();
            let mut s = String::with_capacity(2 + parts.iter().map(|p| p.len()).sum::<usize>());
            s.push('(');
            for p in parts {
                s.push_str(&p);
            }
            s.push(')');
            s
        }
        code(self, 0)
    }
}
