//! Actions of permutation groups on graphs.
//!
//! A graph's points are its vertices followed by its darts: vertex `v` is point
//! `v`, dart `d` is point `|V| + d`. An action assigns to every generator of an
//! abstract [`PermGroup`] a permutation of these points that is a graph
//! automorphism; the assignment is checked to extend to a homomorphism on the
//! whole enumerated group.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{DartId, SerreGraph, VertexId};
use crate::group::{GroupError, PermGroup};
use crate::perm::Perm;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("{found} generator images for a group with {expected} generators")]
    GeneratorCount { expected: usize, found: usize },
    #[error("image of generator {0} is not a graph automorphism")]
    NotAnAutomorphism(usize),
    #[error("generator images do not extend to a homomorphism")]
    NotAHomomorphism,
}

pub fn num_points(g: &SerreGraph) -> usize {
    g.num_vertices() + g.num_darts()
}

pub fn dart_point(g: &SerreGraph, d: DartId) -> usize {
    g.num_vertices() + d
}

/// Permutation of the graph's points from separate vertex and dart maps.
pub fn graph_perm(g: &SerreGraph, vmap: &[VertexId], dmap: &[DartId]) -> Option<Perm> {
    let n = g.num_vertices();
    Perm::from_images(vmap.iter().copied().chain(dmap.iter().map(|&d| d + n)).collect())
}

/// Whether `p` (on the graph's points) maps vertices to vertices and darts to
/// darts compatibly with `bar`, `iota` and `tau`.
pub fn is_graph_automorphism(g: &SerreGraph, p: &Perm) -> bool {
    let n = g.num_vertices();
    if p.degree() != num_points(g) {
        return false;
    }
    if (0..n).any(|v| p.apply(v) >= n) {
        return false;
    }
    (0..g.num_darts()).all(|d| {
        let e = p.apply(n + d) - n;
        p.apply(n + g.bar(d)) - n == g.bar(e) && p.apply(g.iota(d)) == g.iota(e) && p.apply(g.tau(d)) == g.tau(e)
    })
}

#[derive(Debug, Clone)]
pub struct GroupAction {
    group: PermGroup,
    graph: SerreGraph,
    gen_images: Vec<Perm>,
    images: Arc<HashMap<Perm, Perm>>,
}

impl GroupAction {
    pub fn new(group: PermGroup, graph: SerreGraph, gen_images: Vec<Perm>) -> Result<Self, ActionError> {
        if gen_images.len() != group.generators().len() {
            return Err(ActionError::GeneratorCount { expected: group.generators().len(), found: gen_images.len() });
        }
        if let Some(i) = gen_images.iter().position(|p| !is_graph_automorphism(&graph, p)) {
            return Err(ActionError::NotAnAutomorphism(i));
        }
        let images = extend_homomorphism(&group, &gen_images, num_points(&graph))?;
        Ok(GroupAction { group, graph, gen_images, images: Arc::new(images) })
    }

    /// A group of automorphisms acting on its own graph.
    pub fn tautological(group: PermGroup, graph: SerreGraph) -> Result<Self, ActionError> {
        let gens = group.generators().to_vec();
        Self::new(group, graph, gens)
    }

    pub fn group(&self) -> &PermGroup {
        &self.group
    }

    pub fn graph(&self) -> &SerreGraph {
        &self.graph
    }

    pub fn generator_images(&self) -> &[Perm] {
        &self.gen_images
    }

    /// Image of a group element; `None` if it is not in the group.
    pub fn image(&self, g: &Perm) -> Option<&Perm> {
        self.images.get(g)
    }

    fn img(&self, g: &Perm) -> &Perm {
        self.images.get(g).expect("element of the acting group")
    }

    pub fn act_vertex(&self, g: &Perm, v: VertexId) -> VertexId {
        self.img(g).apply(v)
    }

    pub fn act_dart(&self, g: &Perm, d: DartId) -> DartId {
        self.img(g).apply(self.graph.num_vertices() + d) - self.graph.num_vertices()
    }

    /// Elements acting trivially on vertices and darts.
    pub fn kernel(&self) -> Result<PermGroup, GroupError> {
        self.group.subgroup_where(|g| self.img(g).is_identity())
    }

    /// Stabilizer of a vertex, as a subgroup of the acting group.
    pub fn vertex_stabilizer(&self, v: VertexId) -> Result<PermGroup, GroupError> {
        self.group.subgroup_where(|g| self.img(g).apply(v) == v)
    }

    /// Setwise stabilizer of the geometric edge through `d`.
    pub fn edge_stabilizer(&self, d: DartId) -> Result<PermGroup, GroupError> {
        let b = self.graph.bar(d);
        self.group.subgroup_where(|g| {
            let e = self.act_dart(g, d);
            e == d || e == b
        })
    }

    /// Orbit of vertex `v`, sorted.
    pub fn vertex_orbit(&self, v: VertexId) -> Vec<VertexId> {
        let mut o = orbit_of(&self.gen_images, v);
        o.retain(|&x| x < self.graph.num_vertices());
        o
    }

    /// Orbit of `v` under a subgroup of the acting group.
    pub fn vertex_orbit_under(&self, h: &PermGroup, v: VertexId) -> Vec<VertexId> {
        let gens: Vec<Perm> = h.generators().iter().map(|g| self.img(g).clone()).collect();
        orbit_of(&gens, v)
    }

    /// The image of the acting group as a permutation group on graph points.
    pub fn image_group(&self) -> PermGroup {
        PermGroup::new(num_points(&self.graph), self.gen_images.clone())
            .expect("images have the graph's degree")
            .with_bound(self.group.bound())
    }
}

fn orbit_of(gens: &[Perm], x: usize) -> Vec<usize> {
    let mut seen = vec![x];
    let mut i = 0;
    while i < seen.len() {
        let y = seen[i];
        i += 1;
        for g in gens {
            let z = g.apply(y);
            if !seen.contains(&z) {
                seen.push(z);
            }
        }
    }
    seen.sort_unstable();
    seen
}

/// Breadth-first walk of the Cayley graph, pairing each element with an
/// image; any element reached twice with different images refutes the map.
fn extend_homomorphism(
    group: &PermGroup,
    gen_images: &[Perm],
    image_degree: usize,
) -> Result<HashMap<Perm, Perm>, ActionError> {
    let bound = group.bound();
    let mut images: HashMap<Perm, Perm> = HashMap::new();
    let id = group.identity();
    images.insert(id.clone(), Perm::identity(image_degree));
    let mut queue = vec![id];
    let mut i = 0;
    while i < queue.len() {
        let x = queue[i].clone();
        i += 1;
        let ix = images[&x].clone();
        for (g, ig) in group.generators().iter().zip(gen_images) {
            let y = g.compose(&x);
            let iy = ig.compose(&ix);
            match images.get(&y) {
                Some(prev) if *prev != iy => return Err(ActionError::NotAHomomorphism),
                Some(_) => {}
                None => {
                    if images.len() >= bound {
                        return Err(GroupError::ElementBoundExceeded(bound).into());
                    }
                    images.insert(y.clone(), iy);
                    queue.push(y);
                }
            }
        }
    }
    Ok(images)
}
