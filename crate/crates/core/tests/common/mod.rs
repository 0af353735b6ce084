//! Builders shared by the integration tests.
#![allow(dead_code)]

use groupgraph::action::{graph_perm, num_points, GroupAction};
use groupgraph::aut::automorphism_group;
use groupgraph::gos::{GraphOfSpaces, PieceMap};
use groupgraph::graph::{GraphBuilder, GraphMorphism, SerreGraph};
use groupgraph::group::PermGroup;
use groupgraph::leighton::{HatCoverData, HatEdge, HatVertex};
use groupgraph::perm::Perm;
use rand::Rng;

/// `Z/2` swapping the two ends of a single edge.
pub fn inversion() -> GroupAction {
    let t = SerreGraph::path(1);
    let flip = graph_perm(&t, &[1, 0], &[1, 0]).unwrap();
    let z2 = PermGroup::new(2, vec![Perm::from_cycles(2, &[vec![0, 1]]).unwrap()]).unwrap();
    GroupAction::new(z2, t, vec![flip]).unwrap()
}

pub fn trivially(g: PermGroup, t: SerreGraph) -> GroupAction {
    let id = Perm::identity(num_points(&t));
    let n = g.generators().len();
    GroupAction::new(g, t, vec![id; n]).unwrap()
}

/// The full automorphism group of `t` acting on it.
pub fn full(t: SerreGraph) -> GroupAction {
    let g = automorphism_group(&t, None).unwrap();
    GroupAction::tautological(g, t).unwrap()
}

/// An automorphism of `t` with the given vertex images, if there is one.
pub fn automorphism_with(t: &SerreGraph, vertices: &[usize]) -> Option<Perm> {
    let aut = automorphism_group(t, None).unwrap();
    let el = aut.elements().unwrap();
    el.iter().find(|g| vertices.iter().enumerate().all(|(v, &w)| g.apply(v) == w)).cloned()
}

/// Tree actions with `|G| ≤ 48` on at most nine vertices, each with a
/// subgroup `K` to blow up along.
pub fn tree_catalog() -> Vec<(&'static str, GroupAction, PermGroup)> {
    let mut out = Vec::new();
    out.push(("inversion", inversion(), PermGroup::trivial(2)));
    out.push(("sym3 on an edge", trivially(PermGroup::symmetric(3), SerreGraph::path(1)), PermGroup::trivial(3)));
    let a3 = PermGroup::new(3, vec![Perm::from_cycles(3, &[vec![0, 1, 2]]).unwrap()]).unwrap();
    out.push(("sym3 on an edge mod A3", trivially(PermGroup::symmetric(3), SerreGraph::path(1)), a3));
    out.push(("point", trivially(PermGroup::trivial(1), SerreGraph::from_edges(1, &[])), PermGroup::trivial(1)));
    for (name, t) in [
        ("star3", SerreGraph::star(3)),
        ("path2", SerreGraph::path(2)),
        ("path3", SerreGraph::path(3)),
        ("star4", SerreGraph::star(4)),
        ("spider", SerreGraph::from_edges(7, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)])),
        ("double star", SerreGraph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)])),
        ("path8", SerreGraph::path(8)),
    ] {
        let a = full(t);
        let n = a.group().degree();
        out.push((name, a, PermGroup::trivial(n)));
    }

    // rotation of the four leaves of a star
    let t = SerreGraph::star(4);
    let r = automorphism_with(&t, &[0, 2, 3, 4, 1]).unwrap();
    let z4 = PermGroup::new(num_points(&t), vec![r]).unwrap();
    let n = z4.degree();
    out.push(("z4 on star4", GroupAction::tautological(z4, t).unwrap(), PermGroup::trivial(n)));

    // S3 x Z/2 on a star, with the Z/2 factor acting trivially
    let t = SerreGraph::star(3);
    let gens = vec![
        Perm::from_cycles(5, &[vec![0, 1, 2]]).unwrap(),
        Perm::from_cycles(5, &[vec![0, 1]]).unwrap(),
        Perm::from_cycles(5, &[vec![3, 4]]).unwrap(),
    ];
    let images = vec![
        automorphism_with(&t, &[0, 2, 3, 1]).unwrap(),
        automorphism_with(&t, &[0, 2, 1, 3]).unwrap(),
        Perm::identity(num_points(&t)),
    ];
    let g = PermGroup::new(5, gens).unwrap();
    let z2 = PermGroup::new(5, vec![Perm::from_cycles(5, &[vec![3, 4]]).unwrap()]).unwrap();
    out.push(("sym3 x z2 on star3", GroupAction::new(g, t, images).unwrap(), z2));
    out
}

/// Rotation by `k` of the `n`-cycle, as a permutation of its points.
pub fn rotation(x: &SerreGraph, n: usize, k: usize) -> Perm {
    let aut = automorphism_group(x, None).unwrap();
    let el = aut.elements().unwrap();
    el.iter().find(|g| (0..n).all(|i| g.apply(i) == (i + k) % n)).cloned().unwrap()
}

pub fn cyclic(x: &SerreGraph, n: usize, k: usize) -> PermGroup {
    PermGroup::new(num_points(x), vec![rotation(x, n, k)]).unwrap()
}

/// Two `n`-cycles joined by an edge space of isolated points. `steps` are the
/// rotation steps generating `Γ`, `Γ'` and `Q̂` at both ends.
pub fn hat_instance(n: usize, dihedral: bool, steps: [usize; 3], tail: &[usize], head: &[usize]) -> HatCoverData {
    let x = SerreGraph::cycle(n);
    let q = if dihedral { automorphism_group(&x, None).unwrap() } else { cyclic(&x, n, 1) };
    let vertex = |name: &str| HatVertex {
        name: name.into(),
        space: x.clone(),
        q: q.clone(),
        gamma: cyclic(&x, n, steps[0]),
        gamma_prime: cyclic(&x, n, steps[1]),
        q_hat: cyclic(&x, n, steps[2]),
    };
    let m = tail.len();
    let edge = HatEdge {
        name: "e".into(),
        space: SerreGraph::from_edges(m, &[]),
        q: PermGroup::symmetric(m),
        tail: 0,
        head: 1,
        attach_tail: PieceMap { vmap: tail.to_vec(), dmap: vec![] },
        attach_head: PieceMap { vmap: head.to_vec(), dmap: vec![] },
    };
    HatCoverData { vertices: vec![vertex("u"), vertex("v")], edges: vec![edge] }
}

/// Instances satisfying every hat condition.
pub fn hat_catalog() -> Vec<(&'static str, HatCoverData)> {
    vec![
        ("hexagons, rotations by two", hat_instance(6, true, [2, 2, 2], &[0], &[0])),
        ("squares, trivial hat group", hat_instance(4, true, [1, 1, 4], &[0], &[0])),
        ("squares, half turns", hat_instance(4, true, [1, 1, 2], &[0, 2], &[0, 2])),
        ("hexagons, three points", hat_instance(6, false, [1, 1, 2], &[0, 2, 4], &[0, 2, 4])),
        ("dodecagons, four points", hat_instance(12, false, [1, 3, 6], &[0, 3, 6, 9], &[0, 3, 6, 9])),
    ]
}

pub fn point() -> SerreGraph {
    SerreGraph::from_edges(1, &[])
}

pub fn at(x: usize) -> PieceMap {
    PieceMap { vmap: vec![x], dmap: vec![] }
}

/// Two loops at one vertex, attached to a path at 0, 1 and 3, 5.
pub fn rigid_wedge() -> GraphOfSpaces {
    let base = SerreGraph::from_edges(1, &[(0, 0), (0, 0)]);
    GraphOfSpaces::new(base, vec![SerreGraph::path(5)], vec![point(), point()], vec![at(0), at(1), at(3), at(5)]).unwrap()
}

/// Connected graph on at most `max_vertices` vertices with at least one edge:
/// a random tree plus a few extra edges, loops allowed.
pub fn random_base<R: Rng>(rng: &mut R, max_vertices: usize) -> SerreGraph {
    let n = rng.gen_range(1..=max_vertices);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    let extra = rng.gen_range(usize::from(n == 1)..=3);
    for _ in 0..extra {
        edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    SerreGraph::from_edges(n, &edges)
}

/// The wrap-around map `C_{kn} → C_n`.
pub fn wrap(n: usize, k: usize) -> GraphMorphism {
    let m = n * k;
    let vmap = (0..m).map(|i| i % n).collect();
    let dmap = (0..2 * m).map(|d| 2 * ((d / 2) % n) + d % 2).collect();
    GraphMorphism::new(SerreGraph::cycle(m), SerreGraph::cycle(n), vmap, dmap).unwrap()
}

/// A random walk of length `len` from vertex `start`, as a map from a path.
pub fn walk<R: Rng>(g: &SerreGraph, start: usize, len: usize, rng: &mut R) -> GraphMorphism {
    let mut vmap = vec![start];
    let mut dmap = Vec::new();
    let mut v = start;
    for _ in 0..len {
        let out = g.out(v);
        let e = out[rng.gen_range(0..out.len())];
        dmap.extend([e, g.bar(e)]);
        v = g.tau(e);
        vmap.push(v);
    }
    GraphMorphism::new(SerreGraph::path(len), g.clone(), vmap, dmap).unwrap()
}

/// A walk out and back again, as a map from a cycle of length `2 len`.
pub fn closed_walk<R: Rng>(g: &SerreGraph, start: usize, len: usize, rng: &mut R) -> GraphMorphism {
    let w = walk(g, start, len, rng);
    let mut vmap = w.vmap.clone();
    vmap.extend(w.vmap[1..len].iter().rev());
    let mut dmap = Vec::new();
    for i in 0..len {
        dmap.extend([w.dmap[2 * i], w.dmap[2 * i + 1]]);
    }
    for i in (0..len).rev() {
        dmap.extend([w.dmap[2 * i + 1], w.dmap[2 * i]]);
    }
    GraphMorphism::new(SerreGraph::cycle(2 * len), g.clone(), vmap, dmap).unwrap()
}

/// Inclusion of a single vertex.
pub fn vertex_inclusion(g: &SerreGraph, v: usize) -> GraphMorphism {
    GraphMorphism::new(point(), g.clone(), vec![v], vec![]).unwrap()
}

/// Adds a pendant edge at `z`, sent onto the first dart leaving `f(z)`.
pub fn with_pendant(f: &GraphMorphism, z: usize) -> GraphMorphism {
    let mut b = GraphBuilder::from_graph(&f.source);
    let w = b.add_vertex("extra");
    b.add_edge(z, w);
    let e = f.target.out(f.vmap[z])[0];
    let mut vmap = f.vmap.clone();
    vmap.push(f.target.tau(e));
    let mut dmap = f.dmap.clone();
    dmap.extend([e, f.target.bar(e)]);
    GraphMorphism::new(b.build(), f.target.clone(), vmap, dmap).unwrap()
}

/// Adds a second copy of the edge of dart `d`, with the same image.
pub fn with_parallel(f: &GraphMorphism, d: usize) -> GraphMorphism {
    let mut b = GraphBuilder::from_graph(&f.source);
    b.add_edge(f.source.iota(d), f.source.tau(d));
    let mut dmap = f.dmap.clone();
    dmap.extend([f.dmap[d], f.dmap[f.source.bar(d)]]);
    GraphMorphism::new(b.build(), f.target.clone(), f.vmap.clone(), dmap).unwrap()
}

/// The same map into the target with an extra isolated vertex.
pub fn with_missed_vertex(f: &GraphMorphism) -> GraphMorphism {
    let mut b = GraphBuilder::from_graph(&f.target);
    b.add_vertex("missed");
    GraphMorphism::new(f.source.clone(), b.build(), f.vmap.clone(), f.dmap.clone()).unwrap()
}
