//! Common covers of graphs of spaces whose decorated stars are rigid.

use std::collections::HashMap;

use crate::aut::Coloring;
use crate::gos::{check_gos_covering, GosMap, GosMorphism, GraphOfSpaces, PieceMap};
use crate::graph::{DartId, SerreGraph, VertexId};
use crate::structure::{automorphisms, canonical_form, Structure};

use super::cover::common_cover_graphs;
use super::LeightonError;

const BAR: usize = 0;
const IOTA: usize = 1;
const TAU: usize = 2;
const OWNER: usize = 3;
const DST: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StarPoint {
    Vertex(usize),
    Dart(usize),
    Marker(DartId),
    CopyVertex(DartId, usize),
    CopyDart(DartId, usize),
}

/// `X_v` with a marked copy of `X_e` for every `e ∈ lk(v)`, canonically labelled.
struct Star {
    points: Vec<StarPoint>,
    index: HashMap<(u8, DartId, usize), usize>,
    certificate: Vec<u64>,
    position: Vec<usize>,
    at_position: Vec<usize>,
    aut_order: u128,
}

fn key(p: StarPoint) -> (u8, DartId, usize) {
    match p {
        StarPoint::Vertex(x) => (0, 0, x),
        StarPoint::Dart(x) => (1, 0, x),
        StarPoint::Marker(e) => (2, e, 0),
        StarPoint::CopyVertex(e, x) => (3, e, x),
        StarPoint::CopyDart(e, x) => (4, e, x),
    }
}

impl Star {
    fn new(y: &GraphOfSpaces, v: VertexId) -> Star {
        let xv = y.vertex_space(v);
        let mut points: Vec<StarPoint> = (0..xv.num_vertices()).map(StarPoint::Vertex).collect();
        points.extend((0..xv.num_darts()).map(StarPoint::Dart));
        for &e in y.base().link(v) {
            let xe = y.edge_space_of(e);
            points.push(StarPoint::Marker(e));
            points.extend((0..xe.num_vertices()).map(|x| StarPoint::CopyVertex(e, x)));
            points.extend((0..xe.num_darts()).map(|x| StarPoint::CopyDart(e, x)));
        }
        let index: HashMap<_, _> = points.iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
        let ix = |p: StarPoint| index[&key(p)];
        let mut s = Structure::new(points.iter().map(|&p| key(p).0 as u64).collect(), 5);
        for (i, &p) in points.iter().enumerate() {
            match p {
                StarPoint::Vertex(_) | StarPoint::Marker(_) => {}
                StarPoint::Dart(d) => {
                    s.set(BAR, i, ix(StarPoint::Dart(xv.bar(d))));
                    s.set(IOTA, i, ix(StarPoint::Vertex(xv.iota(d))));
                    s.set(TAU, i, ix(StarPoint::Vertex(xv.tau(d))));
                }
                StarPoint::CopyVertex(e, x) => {
                    s.set(OWNER, i, ix(StarPoint::Marker(e)));
                    s.set(DST, i, ix(StarPoint::Vertex(y.attach(e).vmap[x])));
                }
                StarPoint::CopyDart(e, d) => {
                    let xe = y.edge_space_of(e);
                    s.set(BAR, i, ix(StarPoint::CopyDart(e, xe.bar(d))));
                    s.set(IOTA, i, ix(StarPoint::CopyVertex(e, xe.iota(d))));
                    s.set(TAU, i, ix(StarPoint::CopyVertex(e, xe.tau(d))));
                    s.set(OWNER, i, ix(StarPoint::Marker(e)));
                    s.set(DST, i, ix(StarPoint::Dart(y.attach(e).dmap[d])));
                }
            }
        }
        let cf = canonical_form(&s);
        let mut at_position = vec![0; points.len()];
        for (x, &p) in cf.labeling.iter().enumerate() {
            at_position[p] = x;
        }
        Star { points, index, certificate: cf.certificate, position: cf.labeling, at_position, aut_order: automorphisms(&s).order() }
    }

    fn pos(&self, p: StarPoint) -> usize {
        self.position[self.index[&key(p)]]
    }

    fn at(&self, pos: usize) -> StarPoint {
        self.points[self.at_position[pos]]
    }
}

#[derive(Default)]
struct Interner {
    vertex: HashMap<Vec<u64>, u32>,
    dart: HashMap<Vec<u64>, u32>,
}

fn intern(table: &mut HashMap<Vec<u64>, u32>, k: Vec<u64>) -> u32 {
    let next = table.len() as u32;
    *table.entry(k).or_insert(next)
}

/// Colors of the underlying graph that record the decorated stars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GosDecoration {
    pub coloring: Coloring,
    /// Order of the automorphism group of each vertex's decorated star.
    pub star_symmetry: Vec<u128>,
}

impl GosDecoration {
    pub fn is_rigid(&self) -> bool {
        self.star_symmetry.iter().all(|&o| o == 1)
    }

    /// Vertices whose star has a nontrivial automorphism.
    pub fn symmetric_vertices(&self) -> Vec<VertexId> {
        (0..self.star_symmetry.len()).filter(|&v| self.star_symmetry[v] > 1).collect()
    }
}

fn decorate(y: &GraphOfSpaces, table: &mut Interner) -> (GosDecoration, Vec<Star>) {
    let b = y.base();
    let stars: Vec<Star> = (0..b.num_vertices()).map(|v| Star::new(y, v)).collect();
    let vertex: Vec<u32> = stars.iter().map(|s| intern(&mut table.vertex, s.certificate.clone())).collect();
    let dart = (0..b.num_darts())
        .map(|e| {
            let (head, tail) = (&stars[b.tau(e)], &stars[b.iota(e)]);
            let xe = y.edge_space_of(e);
            let eb = b.bar(e);
            let mut pairs: Vec<(usize, usize)> = (0..xe.num_vertices())
                .map(|x| (head.pos(StarPoint::CopyVertex(e, x)), tail.pos(StarPoint::CopyVertex(eb, x))))
                .chain(
                    (0..xe.num_darts()).map(|x| (head.pos(StarPoint::CopyDart(e, x)), tail.pos(StarPoint::CopyDart(eb, x)))),
                )
                .collect();
            pairs.sort();
            let mut k = vec![vertex[b.tau(e)] as u64, vertex[b.iota(e)] as u64, head.pos(StarPoint::Marker(e)) as u64];
            k.extend(pairs.into_iter().flat_map(|(a, c)| [a as u64, c as u64]));
            intern(&mut table.dart, k)
        })
        .collect();
    let star_symmetry = stars.iter().map(|s| s.aut_order).collect();
    (GosDecoration { coloring: Coloring { vertex, dart }, star_symmetry }, stars)
}

/// Vertex colors are canonical forms of the marked stars, dart colors record
/// how the edge space sits in the stars at both ends.
pub fn gos_decoration(y: &GraphOfSpaces) -> GosDecoration {
    decorate(y, &mut Interner::default()).0
}

#[derive(Debug, Clone)]
pub struct GosCommonCover {
    pub z: GraphOfSpaces,
    pub p1: GosMorphism,
    pub p2: GosMorphism,
}

/// Common cover of two graphs of spaces with rigid stars, through the decorated
/// common cover of their underlying graphs; pieces are pulled back from `y1`.
pub fn common_cover_gos(y1: &GraphOfSpaces, y2: &GraphOfSpaces) -> Result<GosCommonCover, LeightonError> {
    let mut table = Interner::default();
    let (d1, s1) = decorate(y1, &mut table);
    let (d2, s2) = decorate(y2, &mut table);
    for (input, d) in [(1, &d1), (2, &d2)] {
        if let Some(&vertex) = d.symmetric_vertices().first() {
            return Err(LeightonError::AmbiguousLocalSymmetry { input, vertex });
        }
    }
    let cc = common_cover_graphs(y1.base(), y2.base(), Some(&d1.coloring), Some(&d2.coloring))?;
    let zb = cc.graph.clone();
    let (f1, f2) = (&cc.p1, &cc.p2);
    let vertex_spaces: Vec<SerreGraph> = f1.vmap.iter().map(|&v| y1.vertex_space(v).clone()).collect();
    let reps = zb.edge_reps();
    let edge_spaces: Vec<SerreGraph> = reps.iter().map(|&e| y1.edge_space_of(f1.dmap[e]).clone()).collect();
    let attach: Vec<PieceMap> = f1.dmap.iter().map(|&e| y1.attach(e).clone()).collect();
    let z = GraphOfSpaces::new(zb.clone(), vertex_spaces, edge_spaces, attach)?;

    let base1 = PieceMap { vmap: f1.vmap.clone(), dmap: f1.dmap.clone() };
    let m1 = GosMap {
        base: base1,
        vertex_maps: z.vertex_spaces().iter().map(PieceMap::identity).collect(),
        edge_maps: z.edge_spaces().iter().map(PieceMap::identity).collect(),
    };

    let vertex_maps = (0..zb.num_vertices())
        .map(|v| {
            let (a, b) = (&s1[f1.vmap[v]], &s2[f2.vmap[v]]);
            let xv = y1.vertex_space(f1.vmap[v]);
            let vmap = (0..xv.num_vertices())
                .map(|x| match b.at(a.pos(StarPoint::Vertex(x))) {
                    StarPoint::Vertex(y) => y,
                    _ => unreachable!("canonical labelings preserve point kinds"),
                })
                .collect();
            let dmap = (0..xv.num_darts())
                .map(|x| match b.at(a.pos(StarPoint::Dart(x))) {
                    StarPoint::Dart(y) => y,
                    _ => unreachable!("canonical labelings preserve point kinds"),
                })
                .collect();
            PieceMap { vmap, dmap }
        })
        .collect();
    let edge_maps = reps
        .iter()
        .map(|&e| {
            let (e1, e2) = (f1.dmap[e], f2.dmap[e]);
            let (a, b) = (&s1[y1.base().tau(e1)], &s2[y2.base().tau(e2)]);
            let xe = y1.edge_space_of(e1);
            let vmap = (0..xe.num_vertices())
                .map(|x| match b.at(a.pos(StarPoint::CopyVertex(e1, x))) {
                    StarPoint::CopyVertex(_, y) => y,
                    _ => unreachable!("canonical labelings preserve point kinds"),
                })
                .collect();
            let dmap = (0..xe.num_darts())
                .map(|x| match b.at(a.pos(StarPoint::CopyDart(e1, x))) {
                    StarPoint::CopyDart(_, y) => y,
                    _ => unreachable!("canonical labelings preserve point kinds"),
                })
                .collect();
            PieceMap { vmap, dmap }
        })
        .collect();
    let m2 = GosMap { base: PieceMap { vmap: f2.vmap.clone(), dmap: f2.dmap.clone() }, vertex_maps, edge_maps };

    let p1 = GosMorphism::new(z.clone(), y1.clone(), m1)?;
    let p2 = GosMorphism::new(z.clone(), y2.clone(), m2)?;
    for p in [&p1, &p2] {
        if !check_gos_covering(p).is_covering {
            return Err(crate::gos::GosError::NotACovering.into());
        }
    }
    Ok(GosCommonCover { z, p1, p2 })
}

#[cfg(test)]
mod tests {
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    use super::*;
    use crate::gos::{connected_lift, lift_gos};
    use crate::voltage::Voltages;

    fn point() -> SerreGraph {
        SerreGraph::from_edges(1, &[])
    }

    fn at(x: usize) -> PieceMap {
        PieceMap { vmap: vec![x], dmap: vec![] }
    }

    /// Two loops at one vertex, attached to a path at 0, 1 and 3, 5.
    fn rigid_wedge() -> GraphOfSpaces {
        let base = SerreGraph::from_edges(1, &[(0, 0), (0, 0)]);
        GraphOfSpaces::new(base, vec![SerreGraph::path(5)], vec![point(), point()], vec![at(0), at(1), at(3), at(5)]).unwrap()
    }

    #[test]
    fn equal_stars_equal_colors() {
        let base = SerreGraph::path(1);
        let y = GraphOfSpaces::new(base, vec![SerreGraph::path(2); 2], vec![point()], vec![at(0), at(0)]).unwrap();
        let d = gos_decoration(&y);
        assert_eq!(d.coloring.vertex[0], d.coloring.vertex[1]);
        let y2 = GraphOfSpaces::new(
            SerreGraph::path(1),
            vec![SerreGraph::path(2); 2],
            vec![SerreGraph::path(1)],
            vec![PieceMap { vmap: vec![0, 1], dmap: vec![0, 1] }; 2],
        )
        .unwrap();
        let d2 = gos_decoration(&y2);
        let mut t = Interner::default();
        let (a, _) = decorate(&y, &mut t);
        let (b, _) = decorate(&y2, &mut t);
        assert_ne!(a.coloring.vertex[0], b.coloring.vertex[0]);
        assert!(d2.is_rigid());
    }

    #[test]
    fn interchangeable_images_are_flagged() {
        let base = SerreGraph::from_edges(1, &[(0, 0)]);
        let y = GraphOfSpaces::new(base, vec![SerreGraph::path(2)], vec![point()], vec![at(0), at(2)]).unwrap();
        let d = gos_decoration(&y);
        assert!(!d.is_rigid());
        assert_eq!(d.symmetric_vertices(), vec![0]);
        assert!(matches!(common_cover_gos(&y, &y), Err(LeightonError::AmbiguousLocalSymmetry { input: 1, vertex: 0 })));
        assert!(gos_decoration(&rigid_wedge()).is_rigid());
    }

    #[test]
    fn identical_inputs() {
        let y = rigid_wedge();
        let cc = common_cover_gos(&y, &y).unwrap();
        assert_eq!(cc.p1.map, GosMap::identity(&y));
        assert_eq!(cc.p2.map, GosMap::identity(&y));
    }

    #[test]
    fn voltage_covers_of_a_wedge() {
        let y = rigid_wedge();
        let mut rng = StdRng::seed_from_u64(3);
        for (k1, k2) in [(2, 3), (3, 2), (2, 2)] {
            let a = connected_lift(&lift_gos(&y, &Voltages::random(y.base(), k1, &mut rng)));
            let b = connected_lift(&lift_gos(&y, &Voltages::random(y.base(), k2, &mut rng)));
            let cc = common_cover_gos(&a.source, &b.source).unwrap();
            assert!(check_gos_covering(&cc.p1).is_covering);
            assert!(check_gos_covering(&cc.p2).is_covering);
        }
    }

    #[test]
    fn incompatible_decorations() {
        let y = rigid_wedge();
        let base = SerreGraph::from_edges(1, &[(0, 0), (0, 0)]);
        let other =
            GraphOfSpaces::new(base, vec![SerreGraph::path(5)], vec![point(), point()], vec![at(0), at(1), at(2), at(5)]).unwrap();
        assert!(matches!(common_cover_gos(&y, &other), Err(LeightonError::NoCommonCover(_))));
    }
}
