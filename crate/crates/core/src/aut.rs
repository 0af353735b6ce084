//! Automorphism groups of (colored) graphs and the stabilizer orbit bound.

use thiserror::Error;

use crate::action::{num_points, GroupAction};
use crate::graph::{SerreGraph, VertexId};
use crate::group::{GroupError, PermGroup, DEFAULT_ELEMENT_BOUND};
use crate::structure::{automorphisms, canonical_form, isomorphism, CanonicalForm, Structure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("coloring has {found} entries where {expected} were expected")]
    ColoringSize { expected: usize, found: usize },
}

/// Vertex and dart colors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Coloring {
    pub vertex: Vec<u32>,
    pub dart: Vec<u32>,
}

impl Coloring {
    pub fn uniform(g: &SerreGraph) -> Self {
        Coloring { vertex: vec![0; g.num_vertices()], dart: vec![0; g.num_darts()] }
    }

    pub fn check(&self, g: &SerreGraph) -> Result<(), AutError> {
        if self.vertex.len() != g.num_vertices() {
            return Err(AutError::ColoringSize { expected: g.num_vertices(), found: self.vertex.len() });
        }
        if self.dart.len() != g.num_darts() {
            return Err(AutError::ColoringSize { expected: g.num_darts(), found: self.dart.len() });
        }
        Ok(())
    }
}

pub(crate) const BAR: usize = 0;
pub(crate) const IOTA: usize = 1;
pub(crate) const TAU: usize = 2;

/// Vertices then darts, with `bar`, `iota`, `tau` as functions.
pub(crate) fn graph_structure(g: &SerreGraph, c: Option<&Coloring>) -> Structure {
    let n = g.num_vertices();
    let mut labels: Vec<u64> = (0..n).map(|v| c.map_or(0, |c| c.vertex[v] as u64)).collect();
    labels.extend((0..g.num_darts()).map(|d| (1 << 32) | c.map_or(0, |c| c.dart[d] as u64)));
    let mut s = Structure::new(labels, 3);
    for d in 0..g.num_darts() {
        s.set(BAR, n + d, n + g.bar(d));
        s.set(IOTA, n + d, g.iota(d));
        s.set(TAU, n + d, g.tau(d));
    }
    s
}

/// Full color-preserving automorphism group, acting on vertices ⊔ darts.
///
/// The order found by the search is checked against the enumerated closure of
/// the generators.
pub fn automorphism_group(g: &SerreGraph, c: Option<&Coloring>) -> Result<PermGroup, AutError> {
    automorphism_group_bounded(g, c, DEFAULT_ELEMENT_BOUND)
}

pub fn automorphism_group_bounded(
    g: &SerreGraph,
    c: Option<&Coloring>,
    bound: usize,
) -> Result<PermGroup, AutError> {
    if let Some(c) = c {
        c.check(g)?;
    }
    let search = automorphisms(&graph_structure(g, c));
    if search.order() > bound as u128 {
        return Err(GroupError::ElementBoundExceeded(bound).into());
    }
    let order = search.order();
    let group = PermGroup::new(num_points(g), search.generators)?.with_bound(bound);
    let enumerated = group.order()?;
    assert_eq!(enumerated as u128, order, "automorphism search is exact");
    Ok(group)
}

/// Canonical form of a colored graph; equal forms mean color-preserving isomorphic.
pub fn graph_canonical_form(g: &SerreGraph, c: Option<&Coloring>) -> CanonicalForm {
    canonical_form(&graph_structure(g, c))
}

/// A color-preserving isomorphism as (vertex map, dart map).
pub fn graph_isomorphism(
    a: &SerreGraph,
    ca: Option<&Coloring>,
    b: &SerreGraph,
    cb: Option<&Coloring>,
) -> Option<(Vec<VertexId>, Vec<usize>)> {
    if a.num_vertices() != b.num_vertices() || a.num_darts() != b.num_darts() {
        return None;
    }
    let map = isomorphism(&graph_structure(a, ca), &graph_structure(b, cb))?;
    let n = a.num_vertices();
    Some((map[..n].to_vec(), map[n..].iter().map(|&x| x - n).collect()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitBound {
    pub bound: usize,
    /// First pair `(x, y)` with `|G_x · y|` equal to the bound.
    pub witness: (VertexId, VertexId),
}

/// `max |G_x · y|` over vertices `x, y`.
pub fn vertex_stabilizer_orbit_bound(a: &GroupAction) -> Result<OrbitBound, GroupError> {
    let mut best = OrbitBound { bound: 1, witness: (0, 0) };
    for x in 0..a.graph().num_vertices() {
        let h = a.vertex_stabilizer(x)?;
        let mut seen = vec![false; a.graph().num_vertices()];
        for y in 0..a.graph().num_vertices() {
            if seen[y] {
                continue;
            }
            let orbit = a.vertex_orbit_under(&h, y);
            for &z in &orbit {
                seen[z] = true;
            }
            if orbit.len() > best.bound {
                best = OrbitBound { bound: orbit.len(), witness: (x, y) };
            }
        }
    }
    Ok(best)
}
