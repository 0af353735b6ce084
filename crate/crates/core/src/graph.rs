//! Finite graphs in Serre form.
//!
//! A graph is a set of vertices and a set of darts (oriented edges). Every
//! dart `e` has an initial vertex `iota(e)`, a terminal vertex `tau(e)` and a
//! reverse dart `bar(e)`; `bar` is a fixed-point-free involution with
//! `tau(bar(e)) == iota(e)`. Geometric edges are the `bar`-orbits and are never
//! stored separately, so loops and parallel edges need no special casing.
//!
//! Vertices and darts carry opaque string ids for I/O; all algorithms work on
//! the dense indices `0..n`.

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

pub type VertexId = usize;
pub type DartId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("dart `{0}` is its own reverse")]
    FixedPointInvolution(String),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("reverse of the reverse of dart `{0}` is not `{0}`")]
    NonInvolutiveBar(String),
    #[error("dart `{0}`: terminal vertex of its reverse differs from its initial vertex")]
    EndpointMismatch(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("partition does not match the vertex set: {0}")]
    PartitionMismatch(String),
    #[error("map is not a graph morphism: {0}")]
    NotAMorphism(String),
}

/// Unvalidated graph description using string ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawGraph {
    pub vertices: Vec<String>,
    pub darts: Vec<RawDart>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDart {
    pub id: String,
    pub bar: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SerreGraph {
    vertex_names: Vec<String>,
    dart_names: Vec<String>,
    bar: Vec<DartId>,
    iota: Vec<VertexId>,
    tau: Vec<VertexId>,
    // darts ending at v, ascending
    link: Vec<Vec<DartId>>,
    // darts starting at v, ascending
    out: Vec<Vec<DartId>>,
}

impl SerreGraph {
    /// Validates a raw description.
    pub fn from_raw(raw: &RawGraph) -> Result<Self, GraphError> {
        let mut vindex = HashMap::new();
        for (i, v) in raw.vertices.iter().enumerate() {
            if vindex.insert(v.as_str(), i).is_some() {
                return Err(GraphError::DuplicateId(v.clone()));
            }
        }
        let mut dindex = HashMap::new();
        for (i, d) in raw.darts.iter().enumerate() {
            if dindex.insert(d.id.as_str(), i).is_some() || vindex.contains_key(d.id.as_str()) {
                return Err(GraphError::DuplicateId(d.id.clone()));
            }
        }
        let lookup_v = |name: &str, ctx: &str| {
            vindex
                .get(name)
                .copied()
                .ok_or_else(|| GraphError::DanglingReference(format!("{ctx} refers to unknown vertex `{name}`")))
        };
        let mut bar = Vec::with_capacity(raw.darts.len());
        let mut iota = Vec::with_capacity(raw.darts.len());
        let mut tau = Vec::with_capacity(raw.darts.len());
        for d in &raw.darts {
            let b = dindex.get(d.bar.as_str()).copied().ok_or_else(|| {
                GraphError::DanglingReference(format!("dart `{}` has unknown reverse `{}`", d.id, d.bar))
            })?;
            bar.push(b);
            iota.push(lookup_v(&d.from, &format!("dart `{}`", d.id))?);
            tau.push(lookup_v(&d.to, &format!("dart `{}`", d.id))?);
        }
        let g = Self::assemble(
            raw.vertices.clone(),
            raw.darts.iter().map(|d| d.id.clone()).collect(),
            bar,
            iota,
            tau,
        );
        g.check()?;
        Ok(g)
    }

    /// Builds from index data, validating the Serre axioms.
    pub fn from_parts(
        vertex_names: Vec<String>,
        dart_names: Vec<String>,
        bar: Vec<DartId>,
        iota: Vec<VertexId>,
        tau: Vec<VertexId>,
    ) -> Result<Self, GraphError> {
        let n = vertex_names.len();
        let m = dart_names.len();
        if bar.len() != m || iota.len() != m || tau.len() != m {
            return Err(GraphError::DanglingReference("dart tables have different lengths".into()));
        }
        if let Some(d) = (0..m).find(|&d| bar[d] >= m || iota[d] >= n || tau[d] >= n) {
            return Err(GraphError::DanglingReference(format!("dart `{}` refers out of range", dart_names[d])));
        }
        let g = Self::assemble(vertex_names, dart_names, bar, iota, tau);
        g.check()?;
        Ok(g)
    }

    fn assemble(
        vertex_names: Vec<String>,
        dart_names: Vec<String>,
        bar: Vec<DartId>,
        iota: Vec<VertexId>,
        tau: Vec<VertexId>,
    ) -> Self {
        let n = vertex_names.len();
        let mut link = vec![Vec::new(); n];
        let mut out = vec![Vec::new(); n];
        for d in 0..dart_names.len() {
            link[tau[d]].push(d);
            out[iota[d]].push(d);
        }
        SerreGraph { vertex_names, dart_names, bar, iota, tau, link, out }
    }

    fn check(&self) -> Result<(), GraphError> {
        for e in 0..self.num_darts() {
            let b = self.bar[e];
            if b == e {
                return Err(GraphError::FixedPointInvolution(self.dart_names[e].clone()));
            }
            if self.bar[b] != e {
                return Err(GraphError::NonInvolutiveBar(self.dart_names[e].clone()));
            }
            if self.tau[b] != self.iota[e] {
                return Err(GraphError::EndpointMismatch(self.dart_names[e].clone()));
            }
        }
        Ok(())
    }

    /// Graph with `n` vertices named `v0..` and one geometric edge per pair;
    /// the darts of edge `i` are `2i` (u to v) and `2i+1` (v to u).
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Self {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_vertex(format!("v{i}"));
        }
        for &(u, v) in edges {
            b.add_edge(u, v);
        }
        b.build()
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn path(edges: usize) -> Self {
        let e: Vec<_> = (0..edges).map(|i| (i, i + 1)).collect();
        Self::from_edges(edges + 1, &e)
    }

    pub fn star(leaves: usize) -> Self {
        let e: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &e)
    }

    pub fn complete(n: usize) -> Self {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        Self::from_edges(n, &e)
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let mut e = Vec::new();
        for i in 0..a {
            for j in 0..b {
                e.push((i, a + j));
            }
        }
        Self::from_edges(a + b, &e)
    }

    /// Attaches two fresh leaves at every vertex of `base`.
    pub fn with_leaf_pairs(base: &SerreGraph) -> Self {
        let mut b = GraphBuilder::from_graph(base);
        for v in 0..base.num_vertices() {
            for side in ["a", "b"] {
                let leaf = b.add_vertex(format!("{}.{side}", base.vertex_name(v)));
                b.add_edge(v, leaf);
            }
        }
        b.build()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn num_darts(&self) -> usize {
        self.dart_names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.dart_names.len() / 2
    }

    pub fn bar(&self, e: DartId) -> DartId {
        self.bar[e]
    }

    pub fn iota(&self, e: DartId) -> VertexId {
        self.iota[e]
    }

    pub fn tau(&self, e: DartId) -> VertexId {
        self.tau[e]
    }

    /// Darts terminating at `v`.
    pub fn link(&self, v: VertexId) -> &[DartId] {
        &self.link[v]
    }

    /// Darts starting at `v`.
    pub fn out(&self, v: VertexId) -> &[DartId] {
        &self.out[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.link[v].len()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v]
    }

    pub fn dart_name(&self, e: DartId) -> &str {
        &self.dart_names[e]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn dart_names(&self) -> &[String] {
        &self.dart_names
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name)
    }

    pub fn dart_by_name(&self, name: &str) -> Option<DartId> {
        self.dart_names.iter().position(|n| n == name)
    }

    /// One representative dart per geometric edge (the smaller index).
    pub fn edge_reps(&self) -> Vec<DartId> {
        (0..self.num_darts()).filter(|&e| e < self.bar[e]).collect()
    }

    pub fn is_loop(&self, e: DartId) -> bool {
        self.iota[e] == self.tau[e]
    }

    /// No loops and no parallel darts.
    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        (0..self.num_darts()).all(|e| !self.is_loop(e) && seen.insert((self.iota[e], self.tau[e])))
    }

    /// The unique dart from `u` to `v`, if there is exactly one.
    pub fn dart_between(&self, u: VertexId, v: VertexId) -> Option<DartId> {
        let mut it = self.out[u].iter().copied().filter(|&d| self.tau[d] == v);
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            vertices: self.vertex_names.clone(),
            darts: (0..self.num_darts())
                .map(|d| RawDart {
                    id: self.dart_names[d].clone(),
                    bar: self.dart_names[self.bar[d]].clone(),
                    from: self.vertex_names[self.iota[d]].clone(),
                    to: self.vertex_names[self.tau[d]].clone(),
                })
                .collect(),
        }
    }

    /// Connected components as sorted vertex lists, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let mut comp = vec![usize::MAX; self.num_vertices()];
        let mut out = Vec::new();
        for s in 0..self.num_vertices() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut i = 0;
            while i < members.len() {
                let v = members[i];
                i += 1;
                for &d in &self.out[v] {
                    let w = self.tau[d];
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        members.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.num_vertices() > 0 && self.components().len() == 1
    }

    /// Whether the subgraph induced on `subset` is connected (and nonempty).
    pub fn is_connected_on(&self, subset: &[VertexId]) -> bool {
        let Some(&start) = subset.first() else {
            return false;
        };
        let mut inside = vec![false; self.num_vertices()];
        for &v in subset {
            inside[v] = true;
        }
        let mut seen = vec![false; self.num_vertices()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &d in &self.out[v] {
                let w = self.tau[d];
                if inside[w] && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == subset.iter().filter(|&&v| inside[v]).count()
    }

    /// Connected with exactly `|V| - 1` geometric edges.
    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.num_edges() + 1 == self.num_vertices()
    }

    /// Subgraph spanned by the given vertices (all darts with both ends inside).
    /// Returns the subgraph together with the old index of every new vertex and dart.
    pub fn induced_subgraph(&self, vertices: &[VertexId]) -> (SerreGraph, Vec<VertexId>, Vec<DartId>) {
        let mut newv = vec![usize::MAX; self.num_vertices()];
        let mut vs: Vec<VertexId> = vertices.to_vec();
        vs.sort_unstable();
        vs.dedup();
        for (i, &v) in vs.iter().enumerate() {
            newv[v] = i;
        }
        let ds: Vec<DartId> = (0..self.num_darts())
            .filter(|&d| newv[self.iota[d]] != usize::MAX && newv[self.tau[d]] != usize::MAX)
            .collect();
        let mut newd = vec![usize::MAX; self.num_darts()];
        for (i, &d) in ds.iter().enumerate() {
            newd[d] = i;
        }
        let g = Self::assemble(
            vs.iter().map(|&v| self.vertex_names[v].clone()).collect(),
            ds.iter().map(|&d| self.dart_names[d].clone()).collect(),
            ds.iter().map(|&d| newd[self.bar[d]]).collect(),
            ds.iter().map(|&d| newv[self.iota[d]]).collect(),
            ds.iter().map(|&d| newv[self.tau[d]]).collect(),
        );
        (g, vs, ds)
    }

    /// Disjoint union; returns vertex and dart offsets of every part.
    pub fn disjoint_union(parts: &[&SerreGraph]) -> (SerreGraph, Vec<(usize, usize)>) {
        let mut names_v = Vec::new();
        let mut names_d = Vec::new();
        let mut bar = Vec::new();
        let mut iota = Vec::new();
        let mut tau = Vec::new();
        let mut offsets = Vec::with_capacity(parts.len());
        for (i, g) in parts.iter().enumerate() {
            let vo = names_v.len();
            let dof = names_d.len();
            offsets.push((vo, dof));
            names_v.extend(g.vertex_names.iter().map(|n| format!("{i}:{n}")));
            names_d.extend(g.dart_names.iter().map(|n| format!("{i}:{n}")));
            bar.extend(g.bar.iter().map(|&d| d + dof));
            iota.extend(g.iota.iter().map(|&v| v + vo));
            tau.extend(g.tau.iter().map(|&v| v + vo));
        }
        (Self::assemble(names_v, names_d, bar, iota, tau), offsets)
    }

    /// Same graph with fresh names `v0..`, `d0..`.
    pub fn renamed(&self, vprefix: &str, dprefix: &str) -> SerreGraph {
        let mut g = self.clone();
        g.vertex_names = (0..self.num_vertices()).map(|i| format!("{vprefix}{i}")).collect();
        g.dart_names = (0..self.num_darts()).map(|i| format!("{dprefix}{i}")).collect();
        g
    }
}

/// Incremental construction with automatic dart naming.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    vertex_names: Vec<String>,
    dart_names: Vec<String>,
    bar: Vec<DartId>,
    iota: Vec<VertexId>,
    tau: Vec<VertexId>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_graph(g: &SerreGraph) -> Self {
        GraphBuilder {
            vertex_names: g.vertex_names.clone(),
            dart_names: g.dart_names.clone(),
            bar: g.bar.clone(),
            iota: g.iota.clone(),
            tau: g.tau.clone(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn num_darts(&self) -> usize {
        self.dart_names.len()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> VertexId {
        self.vertex_names.push(name.into());
        self.vertex_names.len() - 1
    }

    /// Adds a geometric edge; returns the dart `u -> v` (its reverse is the next index).
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> DartId {
        let d = self.dart_names.len();
        self.add_edge_named(u, v, format!("d{d}"), format!("d{}", d + 1))
    }

    pub fn add_edge_named(&mut self, u: VertexId, v: VertexId, fwd: String, back: String) -> DartId {
        let d = self.dart_names.len();
        self.dart_names.push(fwd);
        self.dart_names.push(back);
        self.bar.extend([d + 1, d]);
        self.iota.extend([u, v]);
        self.tau.extend([v, u]);
        d
    }

    pub fn build(self) -> SerreGraph {
        let g = SerreGraph::assemble(self.vertex_names, self.dart_names, self.bar, self.iota, self.tau);
        debug_assert!(g.check().is_ok());
        g
    }
}

/// Structure-preserving map of Serre graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMorphism {
    pub source: SerreGraph,
    pub target: SerreGraph,
    pub vmap: Vec<VertexId>,
    pub dmap: Vec<DartId>,
}

impl GraphMorphism {
    /// Checks that the maps commute with `bar`, `iota` and `tau`.
    pub fn new(
        source: SerreGraph,
        target: SerreGraph,
        vmap: Vec<VertexId>,
        dmap: Vec<DartId>,
    ) -> Result<Self, GraphError> {
        check_morphism(&source, &target, &vmap, &dmap)?;
        Ok(GraphMorphism { source, target, vmap, dmap })
    }

    pub fn identity(g: &SerreGraph) -> Self {
        GraphMorphism {
            source: g.clone(),
            target: g.clone(),
            vmap: (0..g.num_vertices()).collect(),
            dmap: (0..g.num_darts()).collect(),
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &GraphMorphism) -> Result<GraphMorphism, GraphError> {
        if self.target != other.source {
            return Err(GraphError::NotAMorphism("composition of non-matching maps".into()));
        }
        Ok(GraphMorphism {
            source: self.source.clone(),
            target: other.target.clone(),
            vmap: self.vmap.iter().map(|&v| other.vmap[v]).collect(),
            dmap: self.dmap.iter().map(|&d| other.dmap[d]).collect(),
        })
    }
}

pub(crate) fn check_morphism(
    source: &SerreGraph,
    target: &SerreGraph,
    vmap: &[VertexId],
    dmap: &[DartId],
) -> Result<(), GraphError> {
    if vmap.len() != source.num_vertices() || dmap.len() != source.num_darts() {
        return Err(GraphError::NotAMorphism("map sizes differ from the source".into()));
    }
    if vmap.iter().any(|&v| v >= target.num_vertices()) || dmap.iter().any(|&d| d >= target.num_darts()) {
        return Err(GraphError::NotAMorphism("image out of range".into()));
    }
    for e in 0..source.num_darts() {
        let f = dmap[e];
        if dmap[source.bar(e)] != target.bar(f)
            || target.iota(f) != vmap[source.iota(e)]
            || target.tau(f) != vmap[source.tau(e)]
        {
            return Err(GraphError::NotAMorphism(format!("dart `{}`", source.dart_name(e))));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoveringFailure {
    /// `|lk(v)|` and `|lk(f(v))|` differ.
    LinkSize { vertex: VertexId, source: usize, target: usize },
    /// Two darts of `lk(v)` share an image.
    NotInjective { vertex: VertexId, darts: (DartId, DartId) },
    /// A target vertex outside the image.
    NotSurjective { target_vertex: VertexId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringReport {
    pub is_covering: bool,
    /// Common fiber size, when the map is a covering onto a connected target.
    pub degree: Option<usize>,
    pub witness: Option<CoveringFailure>,
}

/// Local bijectivity on links, plus surjectivity on vertices.
pub fn is_covering(f: &GraphMorphism) -> CoveringReport {
    let (s, t) = (&f.source, &f.target);
    for v in 0..s.num_vertices() {
        let fv = f.vmap[v];
        let (ls, lt) = (s.link(v), t.link(fv));
        if ls.len() != lt.len() {
            return CoveringReport {
                is_covering: false,
                degree: None,
                witness: Some(CoveringFailure::LinkSize { vertex: v, source: ls.len(), target: lt.len() }),
            };
        }
        let mut seen: HashMap<DartId, DartId> = HashMap::with_capacity(ls.len());
        for &e in ls {
            if let Some(&prev) = seen.get(&f.dmap[e]) {
                return CoveringReport {
                    is_covering: false,
                    degree: None,
                    witness: Some(CoveringFailure::NotInjective { vertex: v, darts: (prev, e) }),
                };
            }
            seen.insert(f.dmap[e], e);
        }
    }
    let mut fiber = vec![0usize; t.num_vertices()];
    for &w in &f.vmap {
        fiber[w] += 1;
    }
    if let Some(w) = fiber.iter().position(|&c| c == 0) {
        return CoveringReport {
            is_covering: false,
            degree: None,
            witness: Some(CoveringFailure::NotSurjective { target_vertex: w }),
        };
    }
    let degree = (t.is_connected() && fiber.iter().all(|&c| c == fiber[0])).then(|| fiber[0]);
    CoveringReport { is_covering: true, degree, witness: None }
}

/// First barycentric subdivision together with the correspondence to the original.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subdivision {
    pub graph: SerreGraph,
    /// New index of every original vertex.
    pub vertex: Vec<VertexId>,
    /// Midpoint vertex of every original dart (shared by `e` and `bar(e)`).
    pub midpoint: Vec<VertexId>,
    /// For every original dart `e`: the new darts `iota(e) -> m_e` and `m_e -> tau(e)`.
    pub halves: Vec<(DartId, DartId)>,
}

impl Subdivision {
    /// Whether new vertex `x` is a midpoint, and of which geometric edge rep.
    pub fn original_of(&self, x: VertexId) -> SubdivisionVertex {
        if let Some(v) = self.vertex.iter().position(|&y| y == x) {
            return SubdivisionVertex::Vertex(v);
        }
        let e = self.midpoint.iter().position(|&y| y == x).expect("vertex of the subdivision");
        SubdivisionVertex::Midpoint(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubdivisionVertex {
    Vertex(VertexId),
    /// Midpoint of the geometric edge with this representative dart.
    Midpoint(DartId),
}

pub fn barycentric_subdivision(g: &SerreGraph) -> Subdivision {
    let mut names_v: Vec<String> = g.vertex_names.clone();
    let vertex: Vec<VertexId> = (0..g.num_vertices()).collect();
    let mut midpoint = vec![0; g.num_darts()];
    for e in g.edge_reps() {
        midpoint[e] = names_v.len();
        midpoint[g.bar(e)] = names_v.len();
        names_v.push(format!("m({})", g.dart_name(e)));
    }
    let m = g.num_darts();
    // dart 2e: iota(e) -> m_e ; dart 2e+1: m_e -> tau(e)
    let mut names_d = Vec::with_capacity(2 * m);
    let mut bar = Vec::with_capacity(2 * m);
    let mut iota = Vec::with_capacity(2 * m);
    let mut tau = Vec::with_capacity(2 * m);
    for e in 0..m {
        let b = g.bar(e);
        names_d.push(format!("{}/0", g.dart_name(e)));
        bar.push(2 * b + 1);
        iota.push(g.iota(e));
        tau.push(midpoint[e]);
        names_d.push(format!("{}/1", g.dart_name(e)));
        bar.push(2 * b);
        iota.push(midpoint[e]);
        tau.push(g.tau(e));
    }
    let graph = SerreGraph::assemble(names_v, names_d, bar, iota, tau);
    debug_assert!(graph.check().is_ok());
    Subdivision { graph, vertex, midpoint, halves: (0..m).map(|e| (2 * e, 2 * e + 1)).collect() }
}

/// Partition of `0..n` into nonempty disjoint blocks, stored canonically:
/// blocks sorted internally and ordered by least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexPartition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl VertexPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        let mut block_of = vec![usize::MAX; n];
        for (i, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(GraphError::PartitionMismatch("empty block".into()));
            }
            for &x in b {
                if x >= n {
                    return Err(GraphError::PartitionMismatch(format!("element {x} out of range")));
                }
                if block_of[x] != usize::MAX {
                    return Err(GraphError::PartitionMismatch(format!("element {x} in two blocks")));
                }
                block_of[x] = i;
            }
        }
        if let Some(x) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(GraphError::PartitionMismatch(format!("element {x} not covered")));
        }
        Ok(Self::from_labels(&block_of))
    }

    /// Partition of the union of `blocks`, which must be disjoint and nonempty.
    pub fn of_subset(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let max = blocks.iter().flatten().copied().max().map_or(0, |m| m + 1);
        let mut block_of = vec![usize::MAX; max];
        for (i, b) in blocks.iter().enumerate() {
            for &x in b {
                block_of[x] = i;
            }
        }
        VertexPartition { blocks, block_of }
    }

    /// From arbitrary labels: elements with equal labels share a block.
    pub fn from_labels<L: Ord + Clone>(labels: &[L]) -> Self {
        let mut by_label: BTreeMap<L, Vec<usize>> = BTreeMap::new();
        for (x, l) in labels.iter().enumerate() {
            by_label.entry(l.clone()).or_default().push(x);
        }
        let mut blocks: Vec<Vec<usize>> = by_label.into_values().collect();
        blocks.sort_by_key(|b| b[0]);
        let mut block_of = vec![0; labels.len()];
        for (i, b) in blocks.iter().enumerate() {
            for &x in b {
                block_of[x] = i;
            }
        }
        VertexPartition { blocks, block_of }
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Number of elements covered.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Whether the blocks cover exactly `0..n`.
    pub fn covers(&self, n: usize) -> bool {
        self.block_of.len() == n && self.len() == n
    }

    /// Every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &VertexPartition) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&x| other.block_of(x) == other.block_of(b[0])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuotientMode {
    /// Loops and parallel edges removed.
    #[default]
    Simple,
    /// Every dart kept, for diagnostics.
    Multigraph,
}

/// Projection onto a partition quotient. Darts collapsed into a block (or merged
/// away in simple mode) have no image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionProjection {
    pub vertex: Vec<VertexId>,
    pub dart: Vec<Option<DartId>>,
}

pub fn quotient_by_partition(
    g: &SerreGraph,
    p: &VertexPartition,
    mode: QuotientMode,
) -> Result<(SerreGraph, PartitionProjection), GraphError> {
    if !p.covers(g.num_vertices()) {
        return Err(GraphError::PartitionMismatch(format!(
            "partition of {} elements for a graph with {} vertices",
            p.len(),
            g.num_vertices()
        )));
    }
    let mut b = GraphBuilder::new();
    for block in p.blocks() {
        let name = if block.len() == 1 {
            g.vertex_name(block[0]).to_string()
        } else {
            format!("[{}]", block.iter().map(|&v| g.vertex_name(v)).collect::<Vec<_>>().join(","))
        };
        b.add_vertex(name);
    }
    let mut dart = vec![None; g.num_darts()];
    match mode {
        QuotientMode::Simple => {
            let mut pairs: BTreeMap<(usize, usize), ()> = BTreeMap::new();
            for e in 0..g.num_darts() {
                let (x, y) = (p.block_of(g.iota(e)), p.block_of(g.tau(e)));
                if x < y {
                    pairs.insert((x, y), ());
                }
            }
            let mut index = HashMap::new();
            for &(x, y) in pairs.keys() {
                let d = b.add_edge(x, y);
                index.insert((x, y), d);
                index.insert((y, x), d + 1);
            }
            for (e, slot) in dart.iter_mut().enumerate() {
                let key = (p.block_of(g.iota(e)), p.block_of(g.tau(e)));
                *slot = index.get(&key).copied();
            }
        }
        QuotientMode::Multigraph => {
            for e in g.edge_reps() {
                let d = b.add_edge_named(
                    p.block_of(g.iota(e)),
                    p.block_of(g.tau(e)),
                    g.dart_name(e).to_string(),
                    g.dart_name(g.bar(e)).to_string(),
                );
                dart[e] = Some(d);
                dart[g.bar(e)] = Some(d + 1);
            }
        }
    }
    let vertex = (0..g.num_vertices()).map(|v| p.block_of(v)).collect();
    Ok((b.build(), PartitionProjection { vertex, dart }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(vertices: &[&str], darts: &[(&str, &str, &str, &str)]) -> RawGraph {
        RawGraph {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            darts: darts
                .iter()
                .map(|&(id, bar, from, to)| RawDart {
                    id: id.into(),
                    bar: bar.into(),
                    from: from.into(),
                    to: to.into(),
                })
                .collect(),
        }
    }

    #[test]
    fn loop_graph_validates() {
        let g = SerreGraph::from_raw(&raw(&["v"], &[("e", "eb", "v", "v"), ("eb", "e", "v", "v")])).unwrap();
        assert_eq!(g.num_vertices(), 1);
        assert_eq!(g.link(0), &[0, 1]);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn fixed_point_bar_rejected() {
        let err = SerreGraph::from_raw(&raw(&["v"], &[("e", "e", "v", "v")])).unwrap_err();
        assert_eq!(err, GraphError::FixedPointInvolution("e".into()));
    }

    #[test]
    fn dangling_and_non_involutive() {
        let err = SerreGraph::from_raw(&raw(&["v"], &[("e", "x", "v", "v")])).unwrap_err();
        assert!(matches!(err, GraphError::DanglingReference(_)));
        let err = SerreGraph::from_raw(&raw(
            &["v"],
            &[("a", "b", "v", "v"), ("b", "c", "v", "v"), ("c", "b", "v", "v")],
        ))
        .unwrap_err();
        assert!(matches!(err, GraphError::NonInvolutiveBar(_)));
        let err = SerreGraph::from_raw(&raw(&["u", "v"], &[("a", "b", "u", "v"), ("b", "a", "u", "v")])).unwrap_err();
        assert!(matches!(err, GraphError::EndpointMismatch(_)));
    }

    #[test]
    fn decorated_four_cycle_shape() {
        let g = SerreGraph::with_leaf_pairs(&SerreGraph::cycle(4));
        assert_eq!((g.num_vertices(), g.num_darts()), (12, 24));
        let again = SerreGraph::from_raw(&g.to_raw()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn covering_examples() {
        let c3 = SerreGraph::cycle(3);
        let r = is_covering(&GraphMorphism::identity(&c3));
        assert!(r.is_covering);
        assert_eq!(r.degree, Some(1));

        let c6 = SerreGraph::cycle(6);
        // edge i of c6 (darts 2i, 2i+1) wraps onto edge i mod 3
        let f = GraphMorphism::new(
            c6.clone(),
            c3.clone(),
            (0..6).map(|i| i % 3).collect(),
            (0..12).map(|d| d % 6).collect(),
        )
        .unwrap();
        let r = is_covering(&f);
        assert_eq!((r.is_covering, r.degree), (true, Some(2)));

        let star = SerreGraph::star(3);
        let edge = SerreGraph::path(1);
        let f = GraphMorphism::new(star, edge, vec![0, 1, 1, 1], vec![0, 1, 0, 1, 0, 1]).unwrap();
        let r = is_covering(&f);
        assert!(!r.is_covering);
        assert_eq!(r.witness, Some(CoveringFailure::LinkSize { vertex: 0, source: 3, target: 1 }));
    }

    #[test]
    fn morphism_rejects_bad_maps() {
        let c3 = SerreGraph::cycle(3);
        let err = GraphMorphism::new(c3.clone(), c3.clone(), vec![0, 1, 2], vec![1, 0, 2, 3, 4, 5]).unwrap_err();
        assert!(matches!(err, GraphError::NotAMorphism(_)));
    }

    #[test]
    fn subdivision_examples() {
        let s = barycentric_subdivision(&SerreGraph::path(1));
        assert_eq!((s.graph.num_vertices(), s.graph.num_darts()), (3, 4));
        assert!(s.graph.is_tree());
        let s = barycentric_subdivision(&SerreGraph::cycle(3));
        assert_eq!((s.graph.num_vertices(), s.graph.num_edges()), (6, 6));
        assert!(s.graph.is_connected());
        assert!((0..6).all(|v| s.graph.degree(v) == 2));
        let s = barycentric_subdivision(&SerreGraph::path(2));
        assert_eq!((s.graph.num_vertices(), s.graph.num_edges()), (5, 4));
        assert!(s.graph.is_tree());
        assert_eq!(s.original_of(s.midpoint[0]), SubdivisionVertex::Midpoint(0));
        assert_eq!(s.original_of(s.vertex[2]), SubdivisionVertex::Vertex(2));
    }

    #[test]
    fn subdivision_of_loop_is_a_bigon() {
        let g = SerreGraph::from_edges(1, &[(0, 0)]);
        let s = barycentric_subdivision(&g);
        assert_eq!((s.graph.num_vertices(), s.graph.num_darts()), (2, 4));
        assert!((0..2).all(|v| s.graph.degree(v) == 2));
    }

    #[test]
    fn quotient_examples() {
        let g = SerreGraph::with_leaf_pairs(&SerreGraph::cycle(4));
        // leaves of vertex v are 4+2v and 5+2v
        let mut blocks: Vec<Vec<usize>> = (0..4).map(|v| vec![v]).collect();
        blocks.extend((0..4).map(|v| vec![4 + 2 * v, 5 + 2 * v]));
        let p = VertexPartition::new(12, blocks).unwrap();
        let (q, proj) = quotient_by_partition(&g, &p, QuotientMode::Simple).unwrap();
        assert_eq!((q.num_vertices(), q.num_edges()), (8, 8));
        assert!(q.is_simple());
        let leaves = (0..8).filter(|&v| q.degree(v) == 1).count();
        assert_eq!(leaves, 4);
        assert_eq!(proj.vertex[5], proj.vertex[4]);

        let (q, _) = quotient_by_partition(&g, &VertexPartition::singletons(12), QuotientMode::Simple).unwrap();
        assert_eq!((q.num_vertices(), q.num_edges()), (12, 12));

        let one = VertexPartition::new(12, vec![(0..12).collect()]).unwrap();
        let (q, proj) = quotient_by_partition(&g, &one, QuotientMode::Simple).unwrap();
        assert_eq!((q.num_vertices(), q.num_darts()), (1, 0));
        assert!(proj.dart.iter().all(Option::is_none));

        let (q, _) = quotient_by_partition(&g, &one, QuotientMode::Multigraph).unwrap();
        assert_eq!(q.num_darts(), 24);

        let bad = VertexPartition::singletons(3);
        assert!(matches!(
            quotient_by_partition(&g, &bad, QuotientMode::Simple),
            Err(GraphError::PartitionMismatch(_))
        ));
    }

    #[test]
    fn partition_validation() {
        assert!(VertexPartition::new(3, vec![vec![0], vec![1]]).is_err());
        assert!(VertexPartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(VertexPartition::new(2, vec![vec![0], vec![], vec![1]]).is_err());
        let p = VertexPartition::new(4, vec![vec![3, 1], vec![2, 0]]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn disjoint_union_offsets() {
        let (u, off) = SerreGraph::disjoint_union(&[&SerreGraph::cycle(3), &SerreGraph::path(2)]);
        assert_eq!(off, vec![(0, 0), (3, 6)]);
        assert_eq!(u.components().len(), 2);
        assert_eq!(u.iota(6), 3);
    }
}
