use std::collections::{HashMap, VecDeque};

use crate::aut::{graph_isomorphism, Coloring};
use crate::graph::{is_covering, DartId, GraphBuilder, GraphMorphism, SerreGraph, VertexId};
use crate::perm::lcm;

use super::refine::{degree_refinement, RefinementProfile};
use super::LeightonError;

/// Largest common cover `common_cover_graphs` will build.
pub const MAX_COVER_VERTICES: usize = 500_000;

/// A connected graph covering two graphs, with its pulled-back coloring.
#[derive(Debug, Clone)]
pub struct CommonCover {
    pub graph: SerreGraph,
    pub coloring: Coloring,
    pub p1: GraphMorphism,
    pub p2: GraphMorphism,
}

impl CommonCover {
    pub fn order(&self) -> usize {
        self.graph.num_vertices()
    }
}

fn colors_preserved(f: &GraphMorphism, cs: &Coloring, ct: &Coloring) -> bool {
    (0..f.source.num_vertices()).all(|v| cs.vertex[v] == ct.vertex[f.vmap[v]])
        && (0..f.source.num_darts()).all(|d| cs.dart[d] == ct.dart[f.dmap[d]])
}

/// Both projections are color-preserving coverings from a connected graph.
pub fn verify_common_cover(cc: &CommonCover, c1: Option<&Coloring>, c2: Option<&Coloring>) -> bool {
    let c1 = c1.cloned().unwrap_or_else(|| Coloring::uniform(&cc.p1.target));
    let c2 = c2.cloned().unwrap_or_else(|| Coloring::uniform(&cc.p2.target));
    cc.graph.is_connected()
        && cc.p1.source == cc.graph
        && cc.p2.source == cc.graph
        && is_covering(&cc.p1).is_covering
        && is_covering(&cc.p2).is_covering
        && colors_preserved(&cc.p1, &cc.coloring, &c1)
        && colors_preserved(&cc.p2, &cc.coloring, &c2)
}

fn pull_back(f: &GraphMorphism, c: &Coloring) -> Coloring {
    Coloring {
        vertex: f.vmap.iter().map(|&v| c.vertex[v]).collect(),
        dart: f.dmap.iter().map(|&d| c.dart[d]).collect(),
    }
}

type DartType = (u32, u32, usize, usize);

/// Dart types and, for every dart, its position among the darts of its type
/// leaving the same vertex.
fn typed_darts(g: &SerreGraph, c: &Coloring, p: &RefinementProfile) -> (Vec<DartType>, Vec<usize>) {
    let ty: Vec<DartType> = (0..g.num_darts())
        .map(|e| (c.dart[e], c.dart[g.bar(e)], p.class_of[g.iota(e)], p.class_of[g.tau(e)]))
        .collect();
    let mut pos = vec![0; g.num_darts()];
    for v in 0..g.num_vertices() {
        let mut seen: HashMap<DartType, usize> = HashMap::new();
        for &e in g.out(v) {
            let k = seen.entry(ty[e]).or_default();
            pos[e] = *k;
            *k += 1;
        }
    }
    (ty, pos)
}

/// A connected common finite cover of two graphs with the same stable degree
/// refinement.
///
/// Vertices of the cover are triples `(v1, v2, k)` with `v1`, `v2` in the same
/// class `c` and `k` modulo `L_c`; the darts over a pair `(e1, e2)` of the same
/// type `t` are indexed by `j < L_c / a_t` and shift the cyclic coordinate, so
/// that both projections are bijective on links. The component of the first
/// vertex is returned after both projections are re-checked.
pub fn common_cover_graphs(
    x1: &SerreGraph,
    x2: &SerreGraph,
    c1: Option<&Coloring>,
    c2: Option<&Coloring>,
) -> Result<CommonCover, LeightonError> {
    let col1 = c1.cloned().unwrap_or_else(|| Coloring::uniform(x1));
    let col2 = c2.cloned().unwrap_or_else(|| Coloring::uniform(x2));
    let p1 = degree_refinement(x1, Some(&col1))?;
    let p2 = degree_refinement(x2, Some(&col2))?;
    if !p1.matches(&p2) {
        return Err(LeightonError::NoCommonCover("profile mismatch".into()));
    }
    if x1 == x2 && col1 == col2 {
        let id = GraphMorphism::identity(x1);
        return Ok(CommonCover { graph: x1.clone(), coloring: col1, p1: id.clone(), p2: id });
    }
    if let Some((vmap, dmap)) = graph_isomorphism(x1, Some(&col1), x2, Some(&col2)) {
        let p2 = GraphMorphism::new(x1.clone(), x2.clone(), vmap, dmap)?;
        return Ok(CommonCover { graph: x1.clone(), coloring: col1, p1: GraphMorphism::identity(x1), p2 });
    }

    let (ty1, alpha) = typed_darts(x1, &col1, &p1);
    let (ty2, beta) = typed_darts(x2, &col2, &p2);
    let count = |t: &DartType| p1.transitions[t.2][&(t.0, t.1, t.3)];
    let mut n = 1usize;
    for (c, &size) in p1.class_sizes.iter().enumerate() {
        n = lcm(n, size);
        for &a in p1.transitions[c].values() {
            n = lcm(n, size * a);
        }
        if n > MAX_COVER_VERTICES {
            return Err(LeightonError::SearchBoundExceeded(format!("cyclic coordinate period exceeds {MAX_COVER_VERTICES}")));
        }
    }
    let period: Vec<usize> = p1.class_sizes.iter().map(|&s| n / s).collect();

    // darts of x2 leaving each vertex, grouped by type
    let mut by_type2: Vec<HashMap<DartType, Vec<DartId>>> = vec![HashMap::new(); x2.num_vertices()];
    for v in 0..x2.num_vertices() {
        for &e in x2.out(v) {
            by_type2[v].entry(ty2[e]).or_default().push(e);
        }
    }

    let start = (0, (0..x2.num_vertices()).find(|&w| p2.class_of[w] == p1.class_of[0]).expect("classes match"), 0);
    let mut vindex: HashMap<(VertexId, VertexId, usize), VertexId> = HashMap::from([(start, 0)]);
    let mut verts = vec![start];
    let mut darts: HashMap<(DartId, DartId, usize), DartId> = HashMap::new();
    let mut b = GraphBuilder::new();
    b.add_vertex(format!("({},{},0)", x1.vertex_name(start.0), x2.vertex_name(start.1)));
    let mut dmap1 = Vec::new();
    let mut dmap2 = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    // the initial vertex of dart (e1, e2, j)
    let tail = |e1: DartId, e2: DartId, j: usize| {
        let t = &ty1[e1];
        (x1.iota(e1), x2.iota(e2), (alpha[e1] + beta[e2] + count(t) * j) % period[t.2])
    };
    while let Some(z) = queue.pop_front() {
        let (v1, v2, k) = verts[z];
        for &e1 in x1.out(v1) {
            let t = ty1[e1];
            let a = count(&t);
            let l = period[t.2];
            // the unique (e2, j) with alpha + beta + a j = k (mod l)
            let r = (k + l - alpha[e1] % l) % l;
            let e2 = by_type2[v2][&t][r % a];
            let j = (r - beta[e2]) / a;
            if darts.contains_key(&(e1, e2, j)) {
                continue;
            }
            let (b1, b2) = (x1.bar(e1), x2.bar(e2));
            let head = tail(b1, b2, j);
            let w = match vindex.get(&head) {
                Some(&w) => w,
                None => {
                    let w = verts.len();
                    if w >= MAX_COVER_VERTICES {
                        return Err(LeightonError::SearchBoundExceeded(format!("common cover exceeds {MAX_COVER_VERTICES} vertices")));
                    }
                    vindex.insert(head, w);
                    verts.push(head);
                    b.add_vertex(format!("({},{},{})", x1.vertex_name(head.0), x2.vertex_name(head.1), head.2));
                    queue.push_back(w);
                    w
                }
            };
            let d = b.add_edge_named(
                z,
                w,
                format!("({},{},{j})", x1.dart_name(e1), x2.dart_name(e2)),
                format!("({},{},{j})", x1.dart_name(b1), x2.dart_name(b2)),
            );
            debug_assert_eq!(d, dmap1.len());
            darts.insert((e1, e2, j), d);
            darts.insert((b1, b2, j), d + 1);
            dmap1.extend([e1, b1]);
            dmap2.extend([e2, b2]);
        }
    }
    let z = b.build();
    let f1 = GraphMorphism::new(z.clone(), x1.clone(), verts.iter().map(|t| t.0).collect(), dmap1)?;
    let f2 = GraphMorphism::new(z.clone(), x2.clone(), verts.iter().map(|t| t.1).collect(), dmap2)?;
    let cc = CommonCover { coloring: pull_back(&f1, &col1), graph: z, p1: f1, p2: f2 };
    if !verify_common_cover(&cc, Some(&col1), Some(&col2)) {
        return Err(LeightonError::NoCommonCover("constructed cover failed verification".into()));
    }
    Ok(cc)
}
