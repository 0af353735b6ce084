//! Graphs of spaces over finite graphs.
//!
//! Every vertex `v` of the underlying graph `Λ` carries a graph `X_v`, every
//! geometric edge a graph `X_e` (shared by `e` and `ē`), and every dart an
//! injective attachment `φ_e: X_e → X_τ(e)`.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{check_morphism, is_covering, CoveringFailure, DartId, GraphError, GraphMorphism, SerreGraph, VertexId};
use crate::group::{GroupError, PermGroup, DEFAULT_ELEMENT_BOUND};
use crate::perm::Perm;
use crate::structure::{automorphisms, Structure};
use crate::voltage::{voltage_cover, Voltages};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GosError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("expected {expected} {what}, found {found}")]
    Count { what: &'static str, expected: usize, found: usize },
    #[error("attachment of dart {dart} is not a morphism into its vertex space")]
    AttachNotMorphism { dart: DartId },
    #[error("attachment of dart {dart} is not injective")]
    AttachNotInjective { dart: DartId },
    #[error("image of the attachment of dart {dart} is not a full subgraph")]
    ImageNotFull { dart: DartId },
    #[error("not a morphism of graphs of spaces: {0}")]
    NotAMorphism(String),
    #[error("attachment square does not commute at dart {dart}")]
    NonCommuting { dart: DartId },
    #[error("square does not commute at {0:?}")]
    NonCommutingSquare(GraphElement),
    #[error("action is not free: element moves nothing at {0:?}")]
    NotFree(GosPoint),
    #[error("action inverts the edge of dart {0}")]
    EdgeInversion(DartId),
    #[error("map is not a covering")]
    NotACovering,
}

/// A vertex or a dart of some graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphElement {
    Vertex(usize),
    Dart(usize),
}

/// A map of graphs as bare index tables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PieceMap {
    pub vmap: Vec<VertexId>,
    pub dmap: Vec<DartId>,
}

impl PieceMap {
    pub fn identity(g: &SerreGraph) -> Self {
        PieceMap { vmap: (0..g.num_vertices()).collect(), dmap: (0..g.num_darts()).collect() }
    }

    pub fn check(&self, source: &SerreGraph, target: &SerreGraph) -> Result<(), GraphError> {
        check_morphism(source, target, &self.vmap, &self.dmap)
    }

    pub fn is_injective(&self) -> bool {
        fn inj(xs: &[usize]) -> bool {
            let mut s: Vec<usize> = xs.to_vec();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        }
        inj(&self.vmap) && inj(&self.dmap)
    }

    /// `then ∘ self`.
    pub fn then(&self, then: &PieceMap) -> PieceMap {
        PieceMap {
            vmap: self.vmap.iter().map(|&v| then.vmap[v]).collect(),
            dmap: self.dmap.iter().map(|&d| then.dmap[d]).collect(),
        }
    }

    /// Inverse of a bijection.
    pub fn inverse(&self) -> PieceMap {
        let mut vmap = vec![0; self.vmap.len()];
        for (i, &v) in self.vmap.iter().enumerate() {
            vmap[v] = i;
        }
        let mut dmap = vec![0; self.dmap.len()];
        for (i, &d) in self.dmap.iter().enumerate() {
            dmap[d] = i;
        }
        PieceMap { vmap, dmap }
    }

    pub fn to_morphism(&self, source: &SerreGraph, target: &SerreGraph) -> Result<GraphMorphism, GraphError> {
        GraphMorphism::new(source.clone(), target.clone(), self.vmap.clone(), self.dmap.clone())
    }

    fn apply(&self, x: GraphElement) -> GraphElement {
        match x {
            GraphElement::Vertex(v) => GraphElement::Vertex(self.vmap[v]),
            GraphElement::Dart(d) => GraphElement::Dart(self.dmap[d]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOfSpaces {
    base: SerreGraph,
    vertex_spaces: Vec<SerreGraph>,
    edge_spaces: Vec<SerreGraph>,
    edge_of: Vec<usize>,
    attach: Vec<PieceMap>,
}

impl GraphOfSpaces {
    /// `edge_spaces` are indexed like `base.edge_reps()`; `attach[e]` maps the
    /// space of `e`'s geometric edge into `X_τ(e)`.
    pub fn new(
        base: SerreGraph,
        vertex_spaces: Vec<SerreGraph>,
        edge_spaces: Vec<SerreGraph>,
        attach: Vec<PieceMap>,
    ) -> Result<Self, GosError> {
        let reps = base.edge_reps();
        let counts = [
            ("vertex spaces", base.num_vertices(), vertex_spaces.len()),
            ("edge spaces", reps.len(), edge_spaces.len()),
            ("attaching maps", base.num_darts(), attach.len()),
        ];
        for (what, expected, found) in counts {
            if expected != found {
                return Err(GosError::Count { what, expected, found });
            }
        }
        let mut edge_of = vec![0; base.num_darts()];
        for (i, &e) in reps.iter().enumerate() {
            edge_of[e] = i;
            edge_of[base.bar(e)] = i;
        }
        let y = GraphOfSpaces { base, vertex_spaces, edge_spaces, edge_of, attach };
        for e in 0..y.base.num_darts() {
            let (xe, xv, phi) = (y.edge_space_of(e), &y.vertex_spaces[y.base.tau(e)], &y.attach[e]);
            if phi.check(xe, xv).is_err() {
                return Err(GosError::AttachNotMorphism { dart: e });
            }
            if !phi.is_injective() {
                return Err(GosError::AttachNotInjective { dart: e });
            }
            let inside: Vec<bool> = (0..xv.num_vertices()).map(|x| phi.vmap.contains(&x)).collect();
            let full = (0..xv.num_darts()).all(|d| !(inside[xv.iota(d)] && inside[xv.tau(d)]) || phi.dmap.contains(&d));
            if !full {
                return Err(GosError::ImageNotFull { dart: e });
            }
        }
        Ok(y)
    }

    /// Every piece a single vertex.
    pub fn trivial(base: SerreGraph) -> Self {
        let point = SerreGraph::from_edges(1, &[]);
        let nv = base.num_vertices();
        let ne = base.num_edges();
        let nd = base.num_darts();
        let attach = vec![PieceMap { vmap: vec![0], dmap: vec![] }; nd];
        Self::new(base, vec![point.clone(); nv], vec![point; ne], attach).expect("trivial pieces are valid")
    }

    pub fn base(&self) -> &SerreGraph {
        &self.base
    }

    pub fn vertex_space(&self, v: VertexId) -> &SerreGraph {
        &self.vertex_spaces[v]
    }

    pub fn vertex_spaces(&self) -> &[SerreGraph] {
        &self.vertex_spaces
    }

    /// Space of the geometric edge with index `i` (position in `edge_reps`).
    pub fn edge_space(&self, i: usize) -> &SerreGraph {
        &self.edge_spaces[i]
    }

    pub fn edge_spaces(&self) -> &[SerreGraph] {
        &self.edge_spaces
    }

    pub fn edge_of(&self, e: DartId) -> usize {
        self.edge_of[e]
    }

    pub fn edge_space_of(&self, e: DartId) -> &SerreGraph {
        &self.edge_spaces[self.edge_of[e]]
    }

    pub fn attach(&self, e: DartId) -> &PieceMap {
        &self.attach[e]
    }

    pub fn attachments(&self) -> &[PieceMap] {
        &self.attach
    }

    /// First vertex with two incident attachments whose images share a vertex.
    pub fn overlapping_images(&self) -> Option<(VertexId, DartId, DartId)> {
        for v in 0..self.base.num_vertices() {
            let mut owner: HashMap<usize, DartId> = HashMap::new();
            for &e in self.base.link(v) {
                for &x in &self.attach[e].vmap {
                    if let Some(&f) = owner.get(&x) {
                        return Some((v, f, e));
                    }
                    owner.insert(x, e);
                }
            }
        }
        None
    }

    pub fn is_connected(&self) -> bool {
        self.total_space().graph.is_connected()
    }

    pub fn total_space(&self) -> TotalSpace {
        TotalSpace::new(self)
    }
}

/// A point of the combinatorial description of a graph of spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GosPoint {
    BaseVertex(VertexId),
    BaseDart(DartId),
    PieceVertex(VertexId, usize),
    PieceDart(VertexId, usize),
    EdgeVertex(usize, usize),
    EdgeDart(usize, usize),
    /// Rung of base dart `e` at vertex `x` of its edge space.
    VertexRung(DartId, usize),
    /// Rung of base dart `e` at dart `d` of its edge space.
    DartRung(DartId, usize),
}

impl GosPoint {
    fn kind(self) -> u64 {
        match self {
            GosPoint::BaseVertex(..) => 0,
            GosPoint::BaseDart(..) => 1,
            GosPoint::PieceVertex(..) => 2,
            GosPoint::PieceDart(..) => 3,
            GosPoint::EdgeVertex(..) => 4,
            GosPoint::EdgeDart(..) => 5,
            GosPoint::VertexRung(..) => 6,
            GosPoint::DartRung(..) => 7,
        }
    }
}

/// Numbering of all [`GosPoint`]s.
#[derive(Debug, Clone)]
pub struct Layout {
    points: Vec<GosPoint>,
    index: HashMap<GosPoint, usize>,
}

impl Layout {
    pub fn new(y: &GraphOfSpaces) -> Self {
        let mut points = Vec::new();
        let b = &y.base;
        points.extend((0..b.num_vertices()).map(GosPoint::BaseVertex));
        points.extend((0..b.num_darts()).map(GosPoint::BaseDart));
        for (v, x) in y.vertex_spaces.iter().enumerate() {
            points.extend((0..x.num_vertices()).map(|i| GosPoint::PieceVertex(v, i)));
            points.extend((0..x.num_darts()).map(|i| GosPoint::PieceDart(v, i)));
        }
        for (k, x) in y.edge_spaces.iter().enumerate() {
            points.extend((0..x.num_vertices()).map(|i| GosPoint::EdgeVertex(k, i)));
            points.extend((0..x.num_darts()).map(|i| GosPoint::EdgeDart(k, i)));
        }
        for e in 0..b.num_darts() {
            let x = y.edge_space_of(e);
            points.extend((0..x.num_vertices()).map(|i| GosPoint::VertexRung(e, i)));
            points.extend((0..x.num_darts()).map(|i| GosPoint::DartRung(e, i)));
        }
        let index = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        Layout { points, index }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> GosPoint {
        self.points[i]
    }

    pub fn index(&self, p: GosPoint) -> usize {
        self.index[&p]
    }

    pub fn points(&self) -> &[GosPoint] {
        &self.points
    }
}

const BAR: usize = 0;
const IOTA: usize = 1;
const TAU: usize = 2;
const OWNER: usize = 3;
const SRC: usize = 4;
const DST: usize = 5;

/// Encoding whose automorphisms are exactly the automorphisms of `y`; `extra`
/// refines point labels.
pub(crate) fn gos_structure(y: &GraphOfSpaces, layout: &Layout, extra: Option<&[u64]>) -> Structure {
    use GosPoint::*;
    let labels = layout
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.kind() << 40) | extra.map_or(0, |x| x[i]))
        .collect();
    let mut s = Structure::new(labels, 6);
    let b = &y.base;
    let ix = |p: GosPoint| layout.index(p);
    for (i, &p) in layout.points().iter().enumerate() {
        match p {
            BaseVertex(_) | EdgeVertex(..) => {}
            BaseDart(e) => {
                s.set(BAR, i, ix(BaseDart(b.bar(e))));
                s.set(IOTA, i, ix(BaseVertex(b.iota(e))));
                s.set(TAU, i, ix(BaseVertex(b.tau(e))));
            }
            PieceVertex(v, _) => s.set(OWNER, i, ix(BaseVertex(v))),
            PieceDart(v, d) => {
                let x = &y.vertex_spaces[v];
                s.set(BAR, i, ix(PieceDart(v, x.bar(d))));
                s.set(IOTA, i, ix(PieceVertex(v, x.iota(d))));
                s.set(TAU, i, ix(PieceVertex(v, x.tau(d))));
                s.set(OWNER, i, ix(BaseVertex(v)));
            }
            EdgeDart(k, d) => {
                let x = &y.edge_spaces[k];
                s.set(BAR, i, ix(EdgeDart(k, x.bar(d))));
                s.set(IOTA, i, ix(EdgeVertex(k, x.iota(d))));
                s.set(TAU, i, ix(EdgeVertex(k, x.tau(d))));
            }
            VertexRung(e, x) => {
                s.set(OWNER, i, ix(BaseDart(e)));
                s.set(SRC, i, ix(EdgeVertex(y.edge_of[e], x)));
                s.set(DST, i, ix(PieceVertex(b.tau(e), y.attach[e].vmap[x])));
            }
            DartRung(e, d) => {
                s.set(OWNER, i, ix(BaseDart(e)));
                s.set(SRC, i, ix(EdgeDart(y.edge_of[e], d)));
                s.set(DST, i, ix(PieceDart(b.tau(e), y.attach[e].dmap[d])));
            }
        }
    }
    s
}

/// Piece data of a map of graphs of spaces, without the spaces themselves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GosMap {
    pub base: PieceMap,
    /// `X_v → X'_f(v)` for every vertex `v`.
    pub vertex_maps: Vec<PieceMap>,
    /// `X_e → X'_f(e)` for every geometric edge.
    pub edge_maps: Vec<PieceMap>,
}

impl GosMap {
    pub fn identity(y: &GraphOfSpaces) -> Self {
        GosMap {
            base: PieceMap::identity(&y.base),
            vertex_maps: y.vertex_spaces.iter().map(PieceMap::identity).collect(),
            edge_maps: y.edge_spaces.iter().map(PieceMap::identity).collect(),
        }
    }

    /// Image of every point of the source layout in the target layout.
    fn on_points(&self, source: &GraphOfSpaces, sl: &Layout, target: &GraphOfSpaces, tl: &Layout) -> Vec<usize> {
        use GosPoint::*;
        sl.points()
            .iter()
            .map(|&p| {
                let q = match p {
                    BaseVertex(v) => BaseVertex(self.base.vmap[v]),
                    BaseDart(e) => BaseDart(self.base.dmap[e]),
                    PieceVertex(v, x) => PieceVertex(self.base.vmap[v], self.vertex_maps[v].vmap[x]),
                    PieceDart(v, d) => PieceDart(self.base.vmap[v], self.vertex_maps[v].dmap[d]),
                    EdgeVertex(k, x) => EdgeVertex(self.target_edge(source, target, k), self.edge_maps[k].vmap[x]),
                    EdgeDart(k, d) => EdgeDart(self.target_edge(source, target, k), self.edge_maps[k].dmap[d]),
                    VertexRung(e, x) => VertexRung(self.base.dmap[e], self.edge_maps[source.edge_of[e]].vmap[x]),
                    DartRung(e, d) => DartRung(self.base.dmap[e], self.edge_maps[source.edge_of[e]].dmap[d]),
                };
                tl.index(q)
            })
            .collect()
    }

    fn target_edge(&self, source: &GraphOfSpaces, target: &GraphOfSpaces, k: usize) -> usize {
        target.edge_of[self.base.dmap[source.base.edge_reps()[k]]]
    }

    /// Reads piece maps off a point map between layouts.
    fn from_points(source: &GraphOfSpaces, sl: &Layout, tl: &Layout, img: &[usize]) -> GosMap {
        use GosPoint::*;
        let b = &source.base;
        let at = |p: GosPoint| tl.point(img[sl.index(p)]);
        let base = PieceMap {
            vmap: (0..b.num_vertices()).map(|v| if let BaseVertex(w) = at(BaseVertex(v)) { w } else { unreachable!() }).collect(),
            dmap: (0..b.num_darts()).map(|e| if let BaseDart(f) = at(BaseDart(e)) { f } else { unreachable!() }).collect(),
        };
        let piece = |g: &SerreGraph, pv: &dyn Fn(usize) -> GosPoint, pd: &dyn Fn(usize) -> GosPoint| PieceMap {
            vmap: (0..g.num_vertices())
                .map(|x| match at(pv(x)) {
                    PieceVertex(_, y) | EdgeVertex(_, y) => y,
                    _ => unreachable!(),
                })
                .collect(),
            dmap: (0..g.num_darts())
                .map(|d| match at(pd(d)) {
                    PieceDart(_, y) | EdgeDart(_, y) => y,
                    _ => unreachable!(),
                })
                .collect(),
        };
        let vertex_maps = source
            .vertex_spaces
            .iter()
            .enumerate()
            .map(|(v, g)| piece(g, &|x| PieceVertex(v, x), &|d| PieceDart(v, d)))
            .collect();
        let edge_maps = source
            .edge_spaces
            .iter()
            .enumerate()
            .map(|(k, g)| piece(g, &|x| EdgeVertex(k, x), &|d| EdgeDart(k, d)))
            .collect();
        GosMap { base, vertex_maps, edge_maps }
    }
}

/// A map of graphs of spaces, checked on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GosMorphism {
    pub source: GraphOfSpaces,
    pub target: GraphOfSpaces,
    pub map: GosMap,
}

impl GosMorphism {
    pub fn new(source: GraphOfSpaces, target: GraphOfSpaces, map: GosMap) -> Result<Self, GosError> {
        check_gos_map(&source, &target, &map)?;
        Ok(GosMorphism { source, target, map })
    }

    pub fn identity(y: &GraphOfSpaces) -> Self {
        GosMorphism { source: y.clone(), target: y.clone(), map: GosMap::identity(y) }
    }

    /// The induced map of total spaces.
    pub fn total_map(&self) -> GraphMorphism {
        let (ts, tt) = (self.source.total_space(), self.target.total_space());
        let (sl, tl) = (Layout::new(&self.source), Layout::new(&self.target));
        let img = self.map.on_points(&self.source, &sl, &self.target, &tl);
        let vmap = ts.vertex_point.iter().map(|&p| tt.vertex_of[&tl.point(img[sl.index(p)])]).collect();
        let dmap = ts
            .dart_point
            .iter()
            .map(|&(p, rev)| {
                let base = tt.dart_of[&tl.point(img[sl.index(p)])];
                base + usize::from(rev)
            })
            .collect();
        GraphMorphism::new(ts.graph, tt.graph, vmap, dmap).expect("maps of graphs of spaces induce morphisms")
    }
}

pub fn check_gos_map(source: &GraphOfSpaces, target: &GraphOfSpaces, m: &GosMap) -> Result<(), GosError> {
    let (sb, tb) = (&source.base, &target.base);
    m.base.check(sb, tb).map_err(|e| GosError::NotAMorphism(format!("underlying graph: {e}")))?;
    if m.vertex_maps.len() != sb.num_vertices() || m.edge_maps.len() != source.edge_spaces.len() {
        return Err(GosError::NotAMorphism("wrong number of piece maps".into()));
    }
    for (v, f) in m.vertex_maps.iter().enumerate() {
        f.check(&source.vertex_spaces[v], &target.vertex_spaces[m.base.vmap[v]])
            .map_err(|e| GosError::NotAMorphism(format!("vertex space {}: {e}", sb.vertex_name(v))))?;
    }
    for (k, f) in m.edge_maps.iter().enumerate() {
        let t = m.target_edge(source, target, k);
        f.check(&source.edge_spaces[k], &target.edge_spaces[t])
            .map_err(|e| GosError::NotAMorphism(format!("edge space {k}: {e}")))?;
    }
    for e in 0..sb.num_darts() {
        let fe = &m.edge_maps[source.edge_of[e]];
        let left = fe.then(&target.attach[m.base.dmap[e]]);
        let right = source.attach[e].then(&m.vertex_maps[sb.tau(e)]);
        if left != right {
            return Err(GosError::NonCommuting { dart: e });
        }
    }
    Ok(())
}

/// The total space as a graph: vertex spaces, one copy of each edge space, and
/// a rung from every vertex `x` of an edge copy to `φ_e(x)` for both darts `e`.
#[derive(Debug, Clone)]
pub struct TotalSpace {
    pub graph: SerreGraph,
    /// Piece vertex or edge-copy vertex behind every vertex.
    pub vertex_point: Vec<GosPoint>,
    /// Point behind every dart; rungs appear twice, the second time reversed
    /// (pointing from the vertex space into the edge copy).
    pub dart_point: Vec<(GosPoint, bool)>,
    vertex_of: HashMap<GosPoint, usize>,
    dart_of: HashMap<GosPoint, usize>,
}

impl TotalSpace {
    fn new(y: &GraphOfSpaces) -> Self {
        use GosPoint::*;
        let b = &y.base;
        let mut vertex_point = Vec::new();
        let mut vnames = Vec::new();
        for (v, x) in y.vertex_spaces.iter().enumerate() {
            for i in 0..x.num_vertices() {
                vertex_point.push(PieceVertex(v, i));
                vnames.push(format!("{}/{}", b.vertex_name(v), x.vertex_name(i)));
            }
        }
        let reps = b.edge_reps();
        for (k, x) in y.edge_spaces.iter().enumerate() {
            for i in 0..x.num_vertices() {
                vertex_point.push(EdgeVertex(k, i));
                vnames.push(format!("{}/{}", b.dart_name(reps[k]), x.vertex_name(i)));
            }
        }
        let vertex_of: HashMap<GosPoint, usize> = vertex_point.iter().enumerate().map(|(i, &p)| (p, i)).collect();

        let mut dart_point = Vec::new();
        let mut dnames = Vec::new();
        for (v, x) in y.vertex_spaces.iter().enumerate() {
            for d in 0..x.num_darts() {
                dart_point.push((PieceDart(v, d), false));
                dnames.push(format!("{}/{}", b.vertex_name(v), x.dart_name(d)));
            }
        }
        for (k, x) in y.edge_spaces.iter().enumerate() {
            for d in 0..x.num_darts() {
                dart_point.push((EdgeDart(k, d), false));
                dnames.push(format!("{}/{}", b.dart_name(reps[k]), x.dart_name(d)));
            }
        }
        for e in 0..b.num_darts() {
            let x = y.edge_space_of(e);
            for i in 0..x.num_vertices() {
                dart_point.push((VertexRung(e, i), false));
                dart_point.push((VertexRung(e, i), true));
                dnames.push(format!("{}/{}>", b.dart_name(e), x.vertex_name(i)));
                dnames.push(format!("{}/{}<", b.dart_name(e), x.vertex_name(i)));
            }
        }
        let dart_of: HashMap<GosPoint, usize> =
            dart_point.iter().enumerate().filter(|(_, (_, rev))| !rev).map(|(i, &(p, _))| (p, i)).collect();

        let mut bar = Vec::with_capacity(dart_point.len());
        let mut iota = Vec::with_capacity(dart_point.len());
        let mut tau = Vec::with_capacity(dart_point.len());
        for (i, &(p, rev)) in dart_point.iter().enumerate() {
            let (bb, ii, tt) = match p {
                PieceDart(v, d) => {
                    let x = &y.vertex_spaces[v];
                    (dart_of[&PieceDart(v, x.bar(d))], vertex_of[&PieceVertex(v, x.iota(d))], vertex_of[&PieceVertex(v, x.tau(d))])
                }
                EdgeDart(k, d) => {
                    let x = &y.edge_spaces[k];
                    (dart_of[&EdgeDart(k, x.bar(d))], vertex_of[&EdgeVertex(k, x.iota(d))], vertex_of[&EdgeVertex(k, x.tau(d))])
                }
                VertexRung(e, x) => {
                    let from = vertex_of[&EdgeVertex(y.edge_of[e], x)];
                    let to = vertex_of[&PieceVertex(b.tau(e), y.attach[e].vmap[x])];
                    if rev {
                        (i - 1, to, from)
                    } else {
                        (i + 1, from, to)
                    }
                }
                _ => unreachable!("only darts are listed"),
            };
            bar.push(bb);
            iota.push(ii);
            tau.push(tt);
        }
        let graph = SerreGraph::from_parts(vnames, dnames, bar, iota, tau).expect("total space is a graph");
        TotalSpace { graph, vertex_point, dart_point, vertex_of, dart_of }
    }

    pub fn vertex_of(&self, p: GosPoint) -> Option<usize> {
        self.vertex_of.get(&p).copied()
    }
}

/// A piece of a graph of spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    Vertex(VertexId),
    Edge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GosCoveringFailure {
    /// A piece map is not a covering.
    Piece { piece: Piece, failure: CoveringFailure },
    /// At upstairs vertex `vertex`, the pair (`element` of its space, `edge_element`
    /// of the space of downstairs dart `edge`) has no elevation.
    MissingElevation { vertex: VertexId, element: GraphElement, edge: DartId, edge_element: GraphElement },
    /// The same pair has more than one elevation.
    DuplicateElevation { vertex: VertexId, element: GraphElement, edge: DartId, edge_element: GraphElement },
    TotalSpace(CoveringFailure),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GosCoveringReport {
    pub is_covering: bool,
    pub degree: Option<usize>,
    pub witness: Option<GosCoveringFailure>,
}

impl GosCoveringReport {
    fn fail(w: GosCoveringFailure) -> Self {
        GosCoveringReport { is_covering: false, degree: None, witness: Some(w) }
    }
}

fn piece_covering(s: &SerreGraph, t: &SerreGraph, m: &PieceMap) -> Option<CoveringFailure> {
    let f = GraphMorphism { source: s.clone(), target: t.clone(), vmap: m.vmap.clone(), dmap: m.dmap.clone() };
    is_covering(&f).witness
}

/// Piece maps are coverings, and at every upstairs vertex the incident edge
/// spaces form a fiber product over the downstairs ones.
pub fn check_gos_covering(f: &GosMorphism) -> GosCoveringReport {
    let (s, t, m) = (&f.source, &f.target, &f.map);
    for (v, pm) in m.vertex_maps.iter().enumerate() {
        if let Some(failure) = piece_covering(&s.vertex_spaces[v], &t.vertex_spaces[m.base.vmap[v]], pm) {
            return GosCoveringReport::fail(GosCoveringFailure::Piece { piece: Piece::Vertex(v), failure });
        }
    }
    for (k, pm) in m.edge_maps.iter().enumerate() {
        let tk = m.target_edge(s, t, k);
        if let Some(failure) = piece_covering(&s.edge_spaces[k], &t.edge_spaces[tk], pm) {
            return GosCoveringReport::fail(GosCoveringFailure::Piece { piece: Piece::Edge(k), failure });
        }
    }
    for vh in 0..s.base.num_vertices() {
        if let Some(w) = local_fiber_product(f, vh) {
            return GosCoveringReport::fail(w);
        }
    }
    let report = is_covering(&f.total_map());
    match report.witness {
        Some(w) => GosCoveringReport::fail(GosCoveringFailure::TotalSpace(w)),
        None => GosCoveringReport { is_covering: true, degree: report.degree, witness: None },
    }
}

fn elements(g: &SerreGraph) -> impl Iterator<Item = GraphElement> {
    (0..g.num_vertices()).map(GraphElement::Vertex).chain((0..g.num_darts()).map(GraphElement::Dart))
}

fn local_fiber_product(f: &GosMorphism, vh: VertexId) -> Option<GosCoveringFailure> {
    let (s, t, m) = (&f.source, &f.target, &f.map);
    let v = m.base.vmap[vh];
    // elevations: (a1 in X_v̂, downstairs dart e, a2 in X_e) -> count
    let mut count: HashMap<(GraphElement, DartId, GraphElement), usize> = HashMap::new();
    for &eh in s.base.link(vh) {
        let fe = &m.edge_maps[s.edge_of[eh]];
        for c in elements(s.edge_space_of(eh)) {
            let key = (s.attach[eh].apply(c), m.base.dmap[eh], fe.apply(c));
            *count.entry(key).or_default() += 1;
        }
    }
    let fv = &m.vertex_maps[vh];
    for a1 in elements(&s.vertex_spaces[vh]) {
        let b = fv.apply(a1);
        for &e in t.base.link(v) {
            for a2 in elements(t.edge_space_of(e)) {
                if t.attach[e].apply(a2) != b {
                    continue;
                }
                match count.get(&(a1, e, a2)).copied().unwrap_or(0) {
                    1 => {}
                    0 => return Some(GosCoveringFailure::MissingElevation { vertex: vh, element: a1, edge: e, edge_element: a2 }),
                    _ => return Some(GosCoveringFailure::DuplicateElevation { vertex: vh, element: a1, edge: e, edge_element: a2 }),
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiberProductFailure {
    /// A compatible pair with no corner element over it.
    Existence { first: GraphElement, second: GraphElement },
    /// A compatible pair with several corner elements over it.
    Uniqueness { first: GraphElement, second: GraphElement },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberProductReport {
    pub holds: bool,
    pub witness: Option<FiberProductFailure>,
}

/// Whether `corner` (with `p1: C → A1`, `p2: C → A2`) is a fiber product of
/// `f1: A1 → B` and `f2: A2 → B`.
pub fn is_fiber_product_diagram(
    p1: &GraphMorphism,
    p2: &GraphMorphism,
    f1: &GraphMorphism,
    f2: &GraphMorphism,
) -> Result<FiberProductReport, GosError> {
    let c = &p1.source;
    for x in elements(c) {
        let (a, b) = match x {
            GraphElement::Vertex(v) => (f1.vmap[p1.vmap[v]], f2.vmap[p2.vmap[v]]),
            GraphElement::Dart(d) => (f1.dmap[p1.dmap[d]], f2.dmap[p2.dmap[d]]),
        };
        if a != b {
            return Err(GosError::NonCommutingSquare(x));
        }
    }
    let as_piece = |g: &GraphMorphism| PieceMap { vmap: g.vmap.clone(), dmap: g.dmap.clone() };
    let (q1, q2, g1, g2) = (as_piece(p1), as_piece(p2), as_piece(f1), as_piece(f2));
    let mut count: HashMap<(GraphElement, GraphElement), usize> = HashMap::new();
    for x in elements(c) {
        *count.entry((q1.apply(x), q2.apply(x))).or_default() += 1;
    }
    let mut over: HashMap<GraphElement, Vec<GraphElement>> = HashMap::new();
    for a2 in elements(&f2.source) {
        over.entry(g2.apply(a2)).or_default().push(a2);
    }
    for a1 in elements(&f1.source) {
        for &a2 in over.get(&g1.apply(a1)).map(Vec::as_slice).unwrap_or(&[]) {
            let witness = match count.get(&(a1, a2)).copied().unwrap_or(0) {
                1 => continue,
                0 => FiberProductFailure::Existence { first: a1, second: a2 },
                _ => FiberProductFailure::Uniqueness { first: a1, second: a2 },
            };
            return Ok(FiberProductReport { holds: false, witness: Some(witness) });
        }
    }
    Ok(FiberProductReport { holds: true, witness: None })
}

/// One connected component of a fiber product with its two projections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberComponent {
    pub graph: SerreGraph,
    pub first: GraphMorphism,
    pub second: GraphMorphism,
}

/// The pullback `{(a1, a2) | f1(a1) = f2(a2)}`, split into components ordered
/// by their least vertex pair.
pub fn fiber_product(f1: &GraphMorphism, f2: &GraphMorphism) -> Result<Vec<FiberComponent>, GosError> {
    if f1.target != f2.target {
        return Err(GraphError::NotAMorphism("fiber product of maps with different targets".into()).into());
    }
    let (a1, a2) = (&f1.source, &f2.source);
    let mut vpairs = Vec::new();
    for x in 0..a1.num_vertices() {
        for y in 0..a2.num_vertices() {
            if f1.vmap[x] == f2.vmap[y] {
                vpairs.push((x, y));
            }
        }
    }
    let mut dpairs = Vec::new();
    for x in 0..a1.num_darts() {
        for y in 0..a2.num_darts() {
            if f1.dmap[x] == f2.dmap[y] {
                dpairs.push((x, y));
            }
        }
    }
    let vix: HashMap<(usize, usize), usize> = vpairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let dix: HashMap<(usize, usize), usize> = dpairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let full = SerreGraph::from_parts(
        vpairs.iter().map(|&(x, y)| format!("({},{})", a1.vertex_name(x), a2.vertex_name(y))).collect(),
        dpairs.iter().map(|&(x, y)| format!("({},{})", a1.dart_name(x), a2.dart_name(y))).collect(),
        dpairs.iter().map(|&(x, y)| dix[&(a1.bar(x), a2.bar(y))]).collect(),
        dpairs.iter().map(|&(x, y)| vix[&(a1.iota(x), a2.iota(y))]).collect(),
        dpairs.iter().map(|&(x, y)| vix[&(a1.tau(x), a2.tau(y))]).collect(),
    )?;
    let mut out = Vec::new();
    for comp in full.components() {
        let (g, vs, ds) = full.induced_subgraph(&comp);
        let first = GraphMorphism::new(
            g.clone(),
            a1.clone(),
            vs.iter().map(|&v| vpairs[v].0).collect(),
            ds.iter().map(|&d| dpairs[d].0).collect(),
        )?;
        let second = GraphMorphism::new(
            g.clone(),
            a2.clone(),
            vs.iter().map(|&v| vpairs[v].1).collect(),
            ds.iter().map(|&d| dpairs[d].1).collect(),
        )?;
        out.push(FiberComponent { graph: g, first, second });
    }
    out.sort_by_key(|c| (c.first.vmap[0], c.second.vmap[0]));
    Ok(out)
}

/// Automorphism group of `y`, as permutations of its layout points, with
/// optional extra point labels that automorphisms must preserve.
pub(crate) fn gos_automorphism_group(
    y: &GraphOfSpaces,
    layout: &Layout,
    extra: Option<&[u64]>,
    bound: usize,
) -> Result<PermGroup, GosError> {
    let s = gos_structure(y, layout, extra);
    let search = automorphisms(&s);
    if search.order() > bound as u128 {
        return Err(GroupError::ElementBoundExceeded(bound).into());
    }
    let order = search.order();
    let g = PermGroup::new(layout.len(), search.generators)?.with_bound(bound);
    assert_eq!(g.order()? as u128, order, "automorphism search is exact");
    Ok(g)
}

/// Every automorphism of `y`, identity first.
pub fn gos_automorphisms(y: &GraphOfSpaces) -> Result<Vec<GosMap>, GosError> {
    let layout = Layout::new(y);
    let g = gos_automorphism_group(y, &layout, None, DEFAULT_ELEMENT_BOUND)?;
    let els = g.elements()?;
    let mut out: Vec<GosMap> = Vec::with_capacity(els.len());
    let id = g.identity();
    out.push(GosMap::from_points(y, &layout, &layout, &id.images().collect::<Vec<_>>()));
    for p in els.iter().filter(|p| !p.is_identity()) {
        out.push(GosMap::from_points(y, &layout, &layout, &p.images().collect::<Vec<_>>()));
    }
    Ok(out)
}

/// Deck transformations of a covering.
#[derive(Debug, Clone)]
pub struct DeckGroup {
    pub elements: Vec<GosMap>,
    /// Transitive on the fibers.
    pub regular: bool,
}

/// Automorphisms `σ` of the source with `f ∘ σ = f`.
pub fn deck_group(f: &GosMorphism) -> Result<DeckGroup, GosError> {
    let report = check_gos_covering(f);
    if !report.is_covering {
        return Err(GosError::NotACovering);
    }
    let (sl, tl) = (Layout::new(&f.source), Layout::new(&f.target));
    let img = f.map.on_points(&f.source, &sl, &f.target, &tl);
    let extra: Vec<u64> = img.iter().map(|&i| i as u64).collect();
    let g = gos_automorphism_group(&f.source, &sl, Some(&extra), DEFAULT_ELEMENT_BOUND)?;
    let els = g.elements()?;
    let elements: Vec<GosMap> = std::iter::once(g.identity())
        .chain(els.iter().filter(|p| !p.is_identity()).cloned())
        .map(|p| GosMap::from_points(&f.source, &sl, &sl, &p.images().collect::<Vec<_>>()))
        .collect();
    // fibers over every total-space vertex have the same size when the total
    // space is connected; check transitivity on each fiber anyway
    let regular = fibers_transitive(&g, &sl, &img, &f.source);
    Ok(DeckGroup { elements, regular })
}

fn fibers_transitive(g: &PermGroup, layout: &Layout, img: &[usize], y: &GraphOfSpaces) -> bool {
    let ts = y.total_space();
    let mut fiber: HashMap<usize, Vec<usize>> = HashMap::new();
    for &p in &ts.vertex_point {
        let i = layout.index(p);
        fiber.entry(img[i]).or_default().push(i);
    }
    fiber.values().all(|f| {
        let orbit = g.orbit(f[0]);
        f.iter().all(|x| orbit.contains(x))
    })
}

/// Quotient of `y` by the group generated by `gens`, which must act freely on
/// the total space and without inverting edges of the underlying graph.
pub fn quotient_gos(y: &GraphOfSpaces, gens: &[GosMap]) -> Result<GosMorphism, GosError> {
    use GosPoint::*;
    let layout = Layout::new(y);
    let mut perms = Vec::with_capacity(gens.len());
    for m in gens {
        check_gos_map(y, y, m)?;
        let img = m.on_points(y, &layout, y, &layout);
        perms.push(Perm::from_images(img).ok_or_else(|| GosError::NotAMorphism("generator is not bijective".into()))?);
    }
    let g = PermGroup::new(layout.len(), perms)?;
    let b = &y.base;
    for p in g.elements()?.iter().filter(|p| !p.is_identity()) {
        for (i, &pt) in layout.points().iter().enumerate() {
            let j = p.apply(i);
            match pt {
                PieceVertex(..) | EdgeVertex(..) if j == i => return Err(GosError::NotFree(pt)),
                PieceDart(v, d) if j == layout.index(PieceDart(v, y.vertex_spaces[v].bar(d))) => {
                    return Err(GosError::NotFree(pt))
                }
                EdgeDart(k, d) if j == layout.index(EdgeDart(k, y.edge_spaces[k].bar(d))) => {
                    return Err(GosError::NotFree(pt))
                }
                BaseDart(e) if j == layout.index(BaseDart(b.bar(e))) => return Err(GosError::EdgeInversion(e)),
                _ => {}
            }
        }
    }
    // orbit representative = least point index
    let mut rep = vec![usize::MAX; layout.len()];
    for i in 0..layout.len() {
        if rep[i] == usize::MAX {
            for j in g.orbit(i) {
                rep[j] = i;
            }
        }
    }
    let pt = |p: GosPoint| rep[layout.index(p)];

    // underlying quotient graph
    let vreps: Vec<usize> = dedup_sorted((0..b.num_vertices()).map(|v| pt(BaseVertex(v))));
    let dreps: Vec<usize> = dedup_sorted((0..b.num_darts()).map(|e| pt(BaseDart(e))));
    let vpos = |r: usize| vreps.binary_search(&r).expect("vertex orbit");
    let dpos = |r: usize| dreps.binary_search(&r).expect("dart orbit");
    let base_v = |r: usize| if let BaseVertex(v) = layout.point(r) { v } else { unreachable!() };
    let base_d = |r: usize| if let BaseDart(e) = layout.point(r) { e } else { unreachable!() };
    let qbase = SerreGraph::from_parts(
        vreps.iter().map(|&r| b.vertex_name(base_v(r)).to_string()).collect(),
        dreps.iter().map(|&r| b.dart_name(base_d(r)).to_string()).collect(),
        dreps.iter().map(|&r| dpos(pt(BaseDart(b.bar(base_d(r)))))).collect(),
        dreps.iter().map(|&r| vpos(pt(BaseVertex(b.iota(base_d(r)))))).collect(),
        dreps.iter().map(|&r| vpos(pt(BaseVertex(b.tau(base_d(r)))))).collect(),
    )?;

    // quotient of one piece: orbits of its points, numbered by first appearance
    struct QPiece {
        graph: SerreGraph,
        vpos: HashMap<usize, usize>,
        dpos: HashMap<usize, usize>,
    }
    let quotient_piece = |x: &SerreGraph, pv: &dyn Fn(usize) -> GosPoint, pd: &dyn Fn(usize) -> GosPoint| {
        let mut vpos: HashMap<usize, usize> = HashMap::new();
        let mut vnames = Vec::new();
        for i in 0..x.num_vertices() {
            let r = pt(pv(i));
            if let Entry::Vacant(e) = vpos.entry(r) {
                e.insert(vnames.len());
                vnames.push(x.vertex_name(i).to_string());
            }
        }
        let mut dpos: HashMap<usize, usize> = HashMap::new();
        let mut first = Vec::new();
        for d in 0..x.num_darts() {
            let r = pt(pd(d));
            if let Entry::Vacant(e) = dpos.entry(r) {
                e.insert(first.len());
                first.push(d);
            }
        }
        let graph = SerreGraph::from_parts(
            vnames,
            first.iter().map(|&d| x.dart_name(d).to_string()).collect(),
            first.iter().map(|&d| dpos[&pt(pd(x.bar(d)))]).collect(),
            first.iter().map(|&d| vpos[&pt(pv(x.iota(d)))]).collect(),
            first.iter().map(|&d| vpos[&pt(pv(x.tau(d)))]).collect(),
        )
        .expect("free quotient of a graph");
        QPiece { graph, vpos, dpos }
    };
    let vpieces: Vec<QPiece> = vreps
        .iter()
        .map(|&r| {
            let v = base_v(r);
            quotient_piece(&y.vertex_spaces[v], &|i| PieceVertex(v, i), &|d| PieceDart(v, d))
        })
        .collect();
    let qreps = qbase.edge_reps();
    let epieces: Vec<QPiece> = qreps
        .iter()
        .map(|&qd| {
            let k = y.edge_of[base_d(dreps[qd])];
            quotient_piece(&y.edge_spaces[k], &|i| EdgeVertex(k, i), &|d| EdgeDart(k, d))
        })
        .collect();
    let mut qedge_of = vec![0; qbase.num_darts()];
    for (i, &e) in qreps.iter().enumerate() {
        qedge_of[e] = i;
        qedge_of[qbase.bar(e)] = i;
    }
    // piece maps of the projection
    let to_piece = |x: &SerreGraph, q: &QPiece, pv: &dyn Fn(usize) -> GosPoint, pd: &dyn Fn(usize) -> GosPoint| PieceMap {
        vmap: (0..x.num_vertices()).map(|i| q.vpos[&pt(pv(i))]).collect(),
        dmap: (0..x.num_darts()).map(|d| q.dpos[&pt(pd(d))]).collect(),
    };
    let base_map = PieceMap {
        vmap: (0..b.num_vertices()).map(|v| vpos(pt(BaseVertex(v)))).collect(),
        dmap: (0..b.num_darts()).map(|e| dpos(pt(BaseDart(e)))).collect(),
    };
    let vertex_maps: Vec<PieceMap> = (0..b.num_vertices())
        .map(|v| to_piece(&y.vertex_spaces[v], &vpieces[base_map.vmap[v]], &|i| PieceVertex(v, i), &|d| PieceDart(v, d)))
        .collect();
    let breps = b.edge_reps();
    let edge_maps: Vec<PieceMap> = (0..y.edge_spaces.len())
        .map(|k| {
            let q = &epieces[qedge_of[base_map.dmap[breps[k]]]];
            to_piece(&y.edge_spaces[k], q, &|i| EdgeVertex(k, i), &|d| EdgeDart(k, d))
        })
        .collect();
    // attachments: push φ_e down through any dart e over the quotient dart
    let mut attach = Vec::with_capacity(qbase.num_darts());
    for qd in 0..qbase.num_darts() {
        let e = base_d(dreps[qd]);
        let k = y.edge_of[e];
        let (xe, qe) = (&y.edge_spaces[k], &epieces[qedge_of[qd]]);
        let target = &vertex_maps[b.tau(e)];
        let mut vmap = vec![0; qe.graph.num_vertices()];
        for i in 0..xe.num_vertices() {
            vmap[edge_maps[k].vmap[i]] = target.vmap[y.attach[e].vmap[i]];
        }
        let mut dmap = vec![0; qe.graph.num_darts()];
        for d in 0..xe.num_darts() {
            dmap[edge_maps[k].dmap[d]] = target.dmap[y.attach[e].dmap[d]];
        }
        attach.push(PieceMap { vmap, dmap });
    }
    let quotient = GraphOfSpaces::new(
        qbase,
        vpieces.into_iter().map(|q| q.graph).collect(),
        epieces.into_iter().map(|q| q.graph).collect(),
        attach,
    )?;
    GosMorphism::new(y.clone(), quotient, GosMap { base: base_map, vertex_maps, edge_maps })
}

fn dedup_sorted(it: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = it.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Lift of `y` along a voltage cover of its underlying graph: every piece is
/// copied, and the projection is the identity on pieces.
pub fn lift_gos(y: &GraphOfSpaces, volt: &Voltages) -> GosMorphism {
    let p = voltage_cover(&y.base, volt);
    let cover = p.source.clone();
    let vertex_spaces = (0..cover.num_vertices()).map(|v| y.vertex_spaces[p.vmap[v]].clone()).collect();
    let reps = cover.edge_reps();
    let edge_spaces: Vec<SerreGraph> = reps.iter().map(|&e| y.edge_space_of(p.dmap[e]).clone()).collect();
    let attach = (0..cover.num_darts()).map(|e| y.attach[p.dmap[e]].clone()).collect();
    let lifted = GraphOfSpaces::new(cover.clone(), vertex_spaces, edge_spaces, attach).expect("lifted pieces are valid");
    let map = GosMap {
        base: PieceMap { vmap: p.vmap.clone(), dmap: p.dmap.clone() },
        vertex_maps: lifted.vertex_spaces.iter().map(PieceMap::identity).collect(),
        edge_maps: lifted.edge_spaces.iter().map(PieceMap::identity).collect(),
    };
    GosMorphism::new(lifted, y.clone(), map).expect("lift projects onto the base")
}

/// Restriction of a lift to the component containing the first vertex.
pub fn connected_lift(f: &GosMorphism) -> GosMorphism {
    let b = &f.source.base;
    let comp = b.components().into_iter().find(|c| c.contains(&0)).unwrap_or_default();
    let (sub, vs, ds) = b.induced_subgraph(&comp);
    let old_reps = b.edge_reps();
    let edge_ix: HashMap<DartId, usize> = old_reps.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let new_reps = sub.edge_reps();
    let old_edge = |e: DartId| edge_ix[&ds[e].min(b.bar(ds[e]))];
    let y = GraphOfSpaces::new(
        sub.clone(),
        vs.iter().map(|&v| f.source.vertex_spaces[v].clone()).collect(),
        new_reps.iter().map(|&e| f.source.edge_spaces[old_edge(e)].clone()).collect(),
        ds.iter().map(|&d| f.source.attach[d].clone()).collect(),
    )
    .expect("component of a graph of spaces");
    let map = GosMap {
        base: PieceMap { vmap: vs.iter().map(|&v| f.map.base.vmap[v]).collect(), dmap: ds.iter().map(|&d| f.map.base.dmap[d]).collect() },
        vertex_maps: vs.iter().map(|&v| f.map.vertex_maps[v].clone()).collect(),
        edge_maps: new_reps.iter().map(|&e| f.map.edge_maps[old_edge(e)].clone()).collect(),
    };
    GosMorphism::new(y, f.target.clone(), map).expect("restriction of a morphism")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn point() -> SerreGraph {
        SerreGraph::from_edges(1, &[])
    }

    fn single_edge(xv: SerreGraph, xe: SerreGraph, left: PieceMap, right: PieceMap) -> GraphOfSpaces {
        let base = SerreGraph::path(1);
        // dart 0 runs 0 -> 1, dart 1 runs 1 -> 0
        GraphOfSpaces::new(base, vec![xv.clone(), xv], vec![xe], vec![right, left]).unwrap()
    }

    fn loop_base() -> SerreGraph {
        SerreGraph::from_edges(1, &[(0, 0)])
    }

    #[test]
    fn total_space_examples() {
        let t = GraphOfSpaces::trivial(SerreGraph::path(1)).total_space();
        assert_eq!((t.graph.num_vertices(), t.graph.num_edges()), (3, 2));
        assert!(t.graph.is_connected() && t.graph.is_tree());

        let tri = SerreGraph::cycle(3);
        let at0 = PieceMap { vmap: vec![0], dmap: vec![] };
        let y = single_edge(tri, point(), at0.clone(), at0);
        let t = y.total_space();
        assert_eq!(t.graph.num_vertices(), 7);
        assert_eq!(t.graph.num_edges(), 8);
        assert!(t.graph.is_connected());

        let t = GraphOfSpaces::trivial(loop_base()).total_space();
        assert_eq!((t.graph.num_vertices(), t.graph.num_edges()), (2, 2));
        assert!(t.graph.is_connected());
    }

    #[test]
    fn validation() {
        let tri = SerreGraph::cycle(3);
        let base = SerreGraph::path(1);
        let bad = PieceMap { vmap: vec![0, 0], dmap: vec![0, 1] };
        let xe = SerreGraph::path(1);
        let ok = PieceMap { vmap: vec![0, 1], dmap: vec![0, 1] };
        assert!(matches!(
            GraphOfSpaces::new(base.clone(), vec![tri.clone(), tri.clone()], vec![xe.clone()], vec![bad, ok.clone()]),
            Err(GosError::AttachNotMorphism { .. })
        ));
        // a two-vertex edge space into a triangle: image is a full edge
        assert!(GraphOfSpaces::new(base.clone(), vec![tri.clone(), tri.clone()], vec![xe], vec![ok.clone(), ok]).is_ok());
        // two isolated points into adjacent vertices is not full
        let two = SerreGraph::from_edges(2, &[]);
        let m = PieceMap { vmap: vec![0, 1], dmap: vec![] };
        assert!(matches!(
            GraphOfSpaces::new(base, vec![tri.clone(), tri], vec![two], vec![m.clone(), m]),
            Err(GosError::ImageNotFull { .. })
        ));
        assert!(GraphOfSpaces::trivial(loop_base()).overlapping_images().is_some());
    }

    fn double_cover_of_loop() -> GosMorphism {
        let base = loop_base();
        let swap = Perm::from_cycles(2, &[vec![0, 1]]).unwrap();
        lift_gos(&GraphOfSpaces::trivial(base.clone()), &Voltages::from_edges(&base, 2, |_| swap.clone()))
    }

    #[test]
    fn coverings() {
        let y = GraphOfSpaces::trivial(SerreGraph::cycle(3));
        let r = check_gos_covering(&GosMorphism::identity(&y));
        assert_eq!((r.is_covering, r.degree), (true, Some(1)));

        let f = double_cover_of_loop();
        assert!(f.source.base().is_connected());
        let r = check_gos_covering(&f);
        assert_eq!((r.is_covering, r.degree), (true, Some(2)));
    }

    #[test]
    fn dropped_elevation_is_reported() {
        // base: one vertex with a loop, vertex space a 2-path, edge space a point
        // attached at both ends. Upstairs: the loop unwrapped into a single edge
        // (a path), so each end sees only one of the two attachments.
        let xv = SerreGraph::path(2);
        let base = loop_base();
        let y = GraphOfSpaces::new(
            base,
            vec![xv.clone()],
            vec![point()],
            vec![PieceMap { vmap: vec![0], dmap: vec![] }, PieceMap { vmap: vec![2], dmap: vec![] }],
        )
        .unwrap();
        let up = GraphOfSpaces::new(
            SerreGraph::path(1),
            vec![xv.clone(), xv.clone()],
            vec![point()],
            vec![PieceMap { vmap: vec![0], dmap: vec![] }, PieceMap { vmap: vec![2], dmap: vec![] }],
        )
        .unwrap();
        let map = GosMap {
            base: PieceMap { vmap: vec![0, 0], dmap: vec![0, 1] },
            vertex_maps: vec![PieceMap::identity(&xv), PieceMap::identity(&xv)],
            edge_maps: vec![PieceMap::identity(&point())],
        };
        let f = GosMorphism::new(up, y, map).unwrap();
        let r = check_gos_covering(&f);
        assert!(!r.is_covering);
        assert!(matches!(r.witness, Some(GosCoveringFailure::MissingElevation { .. })));
    }

    #[test]
    fn fiber_products() {
        let c3 = SerreGraph::cycle(3);
        let wrap = crate::voltage::voltage_cover(
            &c3,
            &Voltages::from_edges(&c3, 2, |e| if e == 0 { Perm::from_cycles(2, &[vec![0, 1]]).unwrap() } else { Perm::identity(2) }),
        );
        let comps = fiber_product(&wrap, &wrap).unwrap();
        assert_eq!(comps.len(), 2);
        for c in &comps {
            assert_eq!(c.graph.num_vertices(), 6);
            assert!(c.graph.is_connected());
            assert!(is_covering(&c.first).is_covering);
        }
        let id = GraphMorphism::identity(&c3);
        let comps = fiber_product(&id, &wrap).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].graph.num_vertices(), 6);

        // the full product is a fiber product; dropping a component breaks existence
        let full_first = |cs: &[FiberComponent]| {
            let parts: Vec<&SerreGraph> = cs.iter().map(|c| &c.graph).collect();
            let (u, off) = SerreGraph::disjoint_union(&parts);
            let mut v1 = vec![0; u.num_vertices()];
            let mut d1 = vec![0; u.num_darts()];
            let mut v2 = v1.clone();
            let mut d2 = d1.clone();
            for (c, &(vo, dof)) in cs.iter().zip(&off) {
                let (nv, nd) = (c.graph.num_vertices(), c.graph.num_darts());
                v1[vo..vo + nv].copy_from_slice(&c.first.vmap);
                v2[vo..vo + nv].copy_from_slice(&c.second.vmap);
                d1[dof..dof + nd].copy_from_slice(&c.first.dmap);
                d2[dof..dof + nd].copy_from_slice(&c.second.dmap);
            }
            (
                GraphMorphism::new(u.clone(), wrap.source.clone(), v1, d1).unwrap(),
                GraphMorphism::new(u, wrap.source.clone(), v2, d2).unwrap(),
            )
        };
        let comps = fiber_product(&wrap, &wrap).unwrap();
        let (p1, p2) = full_first(&comps);
        assert!(is_fiber_product_diagram(&p1, &p2, &wrap, &wrap).unwrap().holds);
        let (p1, p2) = full_first(&comps[..1]);
        let r = is_fiber_product_diagram(&p1, &p2, &wrap, &wrap).unwrap();
        assert!(matches!(r.witness, Some(FiberProductFailure::Existence { .. })));
        let doubled = [comps[0].clone(), comps[0].clone(), comps[1].clone()];
        let (p1, p2) = full_first(&doubled);
        let r = is_fiber_product_diagram(&p1, &p2, &wrap, &wrap).unwrap();
        assert!(matches!(r.witness, Some(FiberProductFailure::Uniqueness { .. })));
    }

    #[test]
    fn lcm_fiber_product() {
        // 4-cycle and 6-cycle wrapping the 2-cycle
        let c2 = SerreGraph::cycle(2);
        let onto = |n: usize| {
            let vmap = (0..n).map(|i| i % 2).collect();
            let dmap = (0..2 * n).map(|d| if (d / 2) % 2 == 0 { d % 2 } else { 2 + d % 2 }).collect();
            GraphMorphism::new(SerreGraph::cycle(n), c2.clone(), vmap, dmap).unwrap()
        };
        let (f4, f6) = (onto(4), onto(6));
        assert!(is_covering(&f4).is_covering && is_covering(&f6).is_covering);
        let comps = fiber_product(&f4, &f6).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].graph.num_vertices(), 12);
    }

    #[test]
    fn deck_groups() {
        let f = double_cover_of_loop();
        let d = deck_group(&f).unwrap();
        assert_eq!(d.elements.len(), 2);
        assert!(d.regular);

        let y = GraphOfSpaces::trivial(SerreGraph::cycle(3));
        let d = deck_group(&GosMorphism::identity(&y)).unwrap();
        assert_eq!(d.elements.len(), 1);
        assert!(d.regular);

        // irregular 3-fold cover of the wedge of two loops: monodromy S3
        let wedge = SerreGraph::from_edges(1, &[(0, 0), (0, 0)]);
        let a = Perm::from_cycles(3, &[vec![0, 1]]).unwrap();
        let b = Perm::from_cycles(3, &[vec![1, 2]]).unwrap();
        let v = Voltages::from_edges(&wedge, 3, |e| if e == 0 { a.clone() } else { b.clone() });
        let f = lift_gos(&GraphOfSpaces::trivial(wedge), &v);
        assert!(f.source.base().is_connected());
        let d = deck_group(&f).unwrap();
        assert_eq!(d.elements.len(), 1);
        assert!(!d.regular);
    }

    #[test]
    fn quotients() {
        let y = GraphOfSpaces::trivial(SerreGraph::cycle(3));
        let q = quotient_gos(&y, &[]).unwrap();
        assert_eq!(check_gos_covering(&q).degree, Some(1));

        let rot = GosMap {
            base: PieceMap { vmap: vec![1, 2, 0], dmap: vec![2, 3, 4, 5, 0, 1] },
            vertex_maps: vec![PieceMap::identity(&point()); 3],
            edge_maps: vec![PieceMap::identity(&point()); 3],
        };
        let q = quotient_gos(&y, &[rot]).unwrap();
        assert_eq!(q.target.base().num_vertices(), 1);
        assert_eq!(q.target.base().num_edges(), 1);
        assert!(q.target.base().is_loop(0));
        assert_eq!(check_gos_covering(&q).degree, Some(3));

        let f = double_cover_of_loop();
        let deck = deck_group(&f).unwrap();
        let q = quotient_gos(&f.source, &deck.elements[1..]).unwrap();
        assert_eq!(q.target.base().num_vertices(), 1);
        assert_eq!(check_gos_covering(&q).degree, Some(2));
    }

    #[test]
    fn inversions_and_fixed_points_rejected() {
        let y = GraphOfSpaces::trivial(SerreGraph::path(1));
        let flip = GosMap {
            base: PieceMap { vmap: vec![1, 0], dmap: vec![1, 0] },
            vertex_maps: vec![PieceMap::identity(&point()); 2],
            edge_maps: vec![PieceMap::identity(&point())],
        };
        assert!(matches!(quotient_gos(&y, &[flip]), Err(GosError::EdgeInversion(_))));

        let mut b = GraphBuilder::new();
        b.add_vertex("v");
        let piece = SerreGraph::path(1);
        let base = b.build();
        let y = GraphOfSpaces::new(base, vec![piece.clone()], vec![], vec![]).unwrap();
        let swap = GosMap {
            base: PieceMap::identity(y.base()),
            vertex_maps: vec![PieceMap { vmap: vec![1, 0], dmap: vec![1, 0] }],
            edge_maps: vec![],
        };
        assert!(matches!(quotient_gos(&y, &[swap]), Err(GosError::NotFree(_))));
    }

    #[test]
    fn flips_between_isomorphic_vertex_spaces() {
        let tri = SerreGraph::cycle(3);
        let at0 = PieceMap { vmap: vec![0], dmap: vec![] };
        let y = single_edge(tri.clone(), point(), at0.clone(), at0);
        let auts = gos_automorphisms(&y).unwrap();
        assert_eq!(auts[0], GosMap::identity(&y));
        assert!(auts.iter().any(|m| m.base.vmap == vec![1, 0]));
        // a square on one side, a triangle on the other: no flip
        let sq = SerreGraph::cycle(4);
        let y = GraphOfSpaces::new(
            SerreGraph::path(1),
            vec![tri, sq],
            vec![point()],
            vec![PieceMap { vmap: vec![0], dmap: vec![] }, PieceMap { vmap: vec![0], dmap: vec![] }],
        )
        .unwrap();
        let auts = gos_automorphisms(&y).unwrap();
        assert!(auts.iter().all(|m| m.base.vmap == vec![0, 1]));
        assert_eq!(auts.len(), 4);
    }
}
