//! Permutation voltage covers.
//!
//! A voltage assignment gives every dart `e` a permutation `π_e` of `0..k` with
//! `π_ē = π_e⁻¹`. The derived cover has vertices `(v, i)` and darts `(e, i)`
//! running from `(ι(e), i)` to `(τ(e), π_e(i))`.

use rand::Rng;

use crate::graph::{DartId, GraphMorphism, SerreGraph};
use crate::perm::Perm;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Voltages {
    degree: usize,
    perms: Vec<Perm>,
}

impl Voltages {
    /// From one permutation per geometric edge, keyed by its representative dart.
    pub fn from_edges(g: &SerreGraph, degree: usize, mut on_rep: impl FnMut(DartId) -> Perm) -> Self {
        let mut perms = vec![Perm::identity(degree); g.num_darts()];
        for e in g.edge_reps() {
            let p = on_rep(e);
            assert_eq!(p.degree(), degree, "voltage of the wrong degree");
            perms[g.bar(e)] = p.inverse();
            perms[e] = p;
        }
        Voltages { degree, perms }
    }

    pub fn trivial(g: &SerreGraph, degree: usize) -> Self {
        Self::from_edges(g, degree, |_| Perm::identity(degree))
    }

    /// Identity on a spanning forest, uniform random permutations elsewhere.
    pub fn random<R: Rng + ?Sized>(g: &SerreGraph, degree: usize, rng: &mut R) -> Self {
        let tree = spanning_forest(g);
        Self::from_edges(g, degree, |e| {
            if tree[e] {
                Perm::identity(degree)
            } else {
                random_perm(degree, rng)
            }
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn of(&self, e: DartId) -> &Perm {
        &self.perms[e]
    }
}

pub fn random_perm<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Perm {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        v.swap(i, rng.gen_range(0..=i));
    }
    Perm::from_images(v).expect("shuffle is a permutation")
}

/// Marks the darts (both orientations) of a breadth-first spanning forest.
pub fn spanning_forest(g: &SerreGraph) -> Vec<bool> {
    let mut in_tree = vec![false; g.num_darts()];
    let mut seen = vec![false; g.num_vertices()];
    for s in 0..g.num_vertices() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &e in g.out(v) {
                let w = g.tau(e);
                if !seen[w] {
                    seen[w] = true;
                    in_tree[e] = true;
                    in_tree[g.bar(e)] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    in_tree
}

/// The derived cover and its projection. Vertex `(v, i)` has index `v·k + i`,
/// dart `(e, i)` index `e·k + i`.
pub fn voltage_cover(g: &SerreGraph, volt: &Voltages) -> GraphMorphism {
    let k = volt.degree;
    let vnames = (0..g.num_vertices() * k).map(|x| format!("{}#{}", g.vertex_name(x / k), x % k)).collect();
    let dnames = (0..g.num_darts() * k).map(|x| format!("{}#{}", g.dart_name(x / k), x % k)).collect();
    let mut bar = Vec::with_capacity(g.num_darts() * k);
    let mut iota = Vec::with_capacity(g.num_darts() * k);
    let mut tau = Vec::with_capacity(g.num_darts() * k);
    for e in 0..g.num_darts() {
        let p = &volt.perms[e];
        for i in 0..k {
            bar.push(g.bar(e) * k + p.apply(i));
            iota.push(g.iota(e) * k + i);
            tau.push(g.tau(e) * k + p.apply(i));
        }
    }
    let cover = SerreGraph::from_parts(vnames, dnames, bar, iota, tau).expect("voltage data is consistent");
    let vmap = (0..g.num_vertices() * k).map(|x| x / k).collect();
    let dmap = (0..g.num_darts() * k).map(|x| x / k).collect();
    GraphMorphism::new(cover, g.clone(), vmap, dmap).expect("projection is a morphism")
}

/// The component of a cover containing `(0, 0)`, with its projection.
pub fn connected_part(f: &GraphMorphism) -> GraphMorphism {
    let comp = f.source.components().into_iter().find(|c| c.contains(&0)).unwrap_or_default();
    let (sub, vs, ds) = f.source.induced_subgraph(&comp);
    GraphMorphism::new(sub, f.target.clone(), vs.iter().map(|&v| f.vmap[v]).collect(), ds.iter().map(|&d| f.dmap[d]).collect())
        .expect("restriction of a morphism")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::is_covering;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn trivial_voltage_is_disjoint_copies() {
        let g = SerreGraph::cycle(3);
        let f = voltage_cover(&g, &Voltages::trivial(&g, 2));
        assert_eq!(f.source.components().len(), 2);
        assert!(is_covering(&f).is_covering);
    }

    #[test]
    fn rotation_voltage_unwraps_cycle() {
        let g = SerreGraph::cycle(3);
        let swap = Perm::from_cycles(2, &[vec![0, 1]]).unwrap();
        let f = voltage_cover(&g, &Voltages::from_edges(&g, 2, |e| if e == 0 { swap.clone() } else { Perm::identity(2) }));
        assert!(f.source.is_connected());
        assert_eq!(is_covering(&f).degree, Some(2));
    }

    #[test]
    fn random_covers_cover() {
        let mut rng = StdRng::seed_from_u64(7);
        let g = SerreGraph::complete(4);
        for k in 1..5 {
            let f = voltage_cover(&g, &Voltages::random(&g, k, &mut rng));
            assert_eq!(is_covering(&f).degree, Some(k));
            let c = connected_part(&f);
            assert!(c.source.is_connected());
            assert!(is_covering(&c).is_covering);
        }
    }
}
