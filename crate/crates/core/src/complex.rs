//! 2-complexes obtained by gluing discs along short cycles of a graph, and
//! their first integral homology.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{DartId, SerreGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexError {
    #[error("cell {0} is empty")]
    EmptyCell(usize),
    #[error("cell {0} is not a closed edge walk")]
    NotClosed(usize),
    #[error("cell {cell} refers to unknown dart {dart}")]
    UnknownDart { cell: usize, dart: usize },
}

/// A graph with 2-cells attached along closed edge walks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoComplex {
    skeleton: SerreGraph,
    cells: Vec<Vec<DartId>>,
}

impl TwoComplex {
    pub fn new(skeleton: SerreGraph, cells: Vec<Vec<DartId>>) -> Result<Self, ComplexError> {
        for (i, c) in cells.iter().enumerate() {
            if c.is_empty() {
                return Err(ComplexError::EmptyCell(i));
            }
            if let Some(&d) = c.iter().find(|&&d| d >= skeleton.num_darts()) {
                return Err(ComplexError::UnknownDart { cell: i, dart: d });
            }
            let closed = (0..c.len()).all(|k| skeleton.tau(c[k]) == skeleton.iota(c[(k + 1) % c.len()]));
            if !closed {
                return Err(ComplexError::NotClosed(i));
            }
        }
        Ok(TwoComplex { skeleton, cells })
    }

    pub fn skeleton(&self) -> &SerreGraph {
        &self.skeleton
    }

    pub fn cells(&self) -> &[Vec<DartId>] {
        &self.cells
    }
}

/// Attaches a disc along every cycle of length at most `max_len`.
///
/// Cycles are closed walks without repeated vertices (hence without
/// backtracking), taken once up to rotation and reversal. Any closed walk of
/// length at most `max_len` is a product of conjugates of such cycles, so the
/// result has the same fundamental group as gluing along every short closed walk.
pub fn attach_small_loops(g: &SerreGraph, max_len: usize) -> TwoComplex {
    let mut found: BTreeSet<Vec<DartId>> = BTreeSet::new();
    let mut path: Vec<DartId> = Vec::new();
    let mut on_path = vec![false; g.num_vertices()];
    for start in 0..g.num_vertices() {
        on_path[start] = true;
        extend_cycles(g, start, start, max_len, &mut path, &mut on_path, &mut found);
        on_path[start] = false;
    }
    let cells = found.into_iter().collect();
    TwoComplex { skeleton: g.clone(), cells }
}

fn extend_cycles(
    g: &SerreGraph,
    start: usize,
    at: usize,
    max_len: usize,
    path: &mut Vec<DartId>,
    on_path: &mut [bool],
    found: &mut BTreeSet<Vec<DartId>>,
) {
    if path.len() == max_len {
        return;
    }
    for &d in g.out(at) {
        if path.last().is_some_and(|&p| g.bar(p) == d) {
            continue;
        }
        let w = g.tau(d);
        if w == start {
            if path.first().is_some_and(|&f| g.bar(f) == d) {
                continue;
            }
            path.push(d);
            found.insert(canonical_cycle(g, path));
            path.pop();
        } else if w > start && !on_path[w] {
            on_path[w] = true;
            path.push(d);
            extend_cycles(g, start, w, max_len, path, on_path, found);
            path.pop();
            on_path[w] = false;
        }
    }
}

/// Least rotation of the walk or of its reverse.
fn canonical_cycle(g: &SerreGraph, walk: &[DartId]) -> Vec<DartId> {
    let rev: Vec<DartId> = walk.iter().rev().map(|&d| g.bar(d)).collect();
    let n = walk.len();
    let mut best: Option<Vec<DartId>> = None;
    for w in [walk, rev.as_slice()] {
        for r in 0..n {
            let cand: Vec<DartId> = (0..n).map(|i| w[(r + i) % n]).collect();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    best.unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homology {
    pub free_rank: usize,
    /// Invariant factors greater than one.
    pub torsion: Vec<u64>,
}

impl Homology {
    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }
}

/// Integral boundary matrix of the 2-cells: rows are geometric edges (oriented
/// by their representative dart), columns are cells.
pub fn cell_boundary_matrix(c: &TwoComplex) -> Vec<Vec<i64>> {
    let g = c.skeleton();
    let reps = g.edge_reps();
    let mut row_of = vec![(0usize, 0i64); g.num_darts()];
    for (i, &e) in reps.iter().enumerate() {
        row_of[e] = (i, 1);
        row_of[g.bar(e)] = (i, -1);
    }
    let mut m = vec![vec![0i64; c.cells().len()]; reps.len()];
    for (j, cell) in c.cells().iter().enumerate() {
        for &d in cell {
            let (i, s) = row_of[d];
            m[i][j] += s;
        }
    }
    m
}

/// `H₁` of the complex, via the Smith normal form of the cell boundary map.
pub fn homology_h1(c: &TwoComplex) -> Homology {
    let g = c.skeleton();
    let components = g.components().len();
    let cycle_rank = g.num_edges() + components - g.num_vertices();
    let factors = smith_invariants(cell_boundary_matrix(c));
    Homology {
        free_rank: cycle_rank - factors.len(),
        torsion: factors.into_iter().filter(|&d| d > 1).collect(),
    }
}

/// Nonzero diagonal entries of the Smith normal form, each dividing the next.
pub fn smith_invariants(matrix: Vec<Vec<i64>>) -> Vec<u64> {
    let mut a: Vec<Vec<i128>> = matrix.into_iter().map(|r| r.into_iter().map(i128::from).collect()).collect();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for t in 0..rows.min(cols) {
        // smallest nonzero entry of the remaining block becomes the pivot
        let Some((pi, pj)) = min_entry(&a, t) else { break };
        a.swap(t, pi);
        for r in a.iter_mut() {
            r.swap(t, pj);
        }
        loop {
            let mut changed = false;
            for i in t + 1..rows {
                let q = a[i][t] / a[t][t];
                if q != 0 {
                    for j in t..cols {
                        a[i][j] -= q * a[t][j];
                    }
                }
                if a[i][t] != 0 {
                    a.swap(t, i);
                    changed = true;
                }
            }
            for j in t + 1..cols {
                let q = a[t][j] / a[t][t];
                if q != 0 {
                    for r in a.iter_mut().skip(t) {
                        r[j] -= q * r[t];
                    }
                }
                if a[t][j] != 0 {
                    for r in a.iter_mut() {
                        r.swap(t, j);
                    }
                    changed = true;
                }
            }
            if changed {
                continue;
            }
            // pivot must divide the rest of the block
            let p = a[t][t];
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
            match bad {
                Some(i) => {
                    for j in t..cols {
                        a[t][j] += a[i][j];
                    }
                }
                None => break,
            }
        }
        out.push(a[t][t].unsigned_abs() as u64);
    }
    out
}

fn min_entry(a: &[Vec<i128>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, &x) in row.iter().enumerate().skip(t) {
            if x != 0 && best.is_none_or(|(bi, bj)| x.abs() < a[bi][bj].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rank over ℚ by fraction-free elimination, independent of the Smith form.
    fn rational_rank(m: &[Vec<i64>]) -> usize {
        let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        let cols = a.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..a.len()).find(|&i| a[i][c] != 0) else { continue };
            a.swap(rank, p);
            for i in 0..a.len() {
                if i != rank && a[i][c] != 0 {
                    let (x, y) = (a[rank][c], a[i][c]);
                    for j in 0..cols {
                        a[i][j] = a[i][j] * x - a[rank][j] * y;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn theta() -> SerreGraph {
        SerreGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)])
    }

    #[test]
    fn triangle_filled() {
        let c = attach_small_loops(&SerreGraph::cycle(3), 3);
        assert_eq!(c.cells().len(), 1);
        let m = cell_boundary_matrix(&c);
        assert_eq!(rational_rank(&m), 1);
        assert_eq!(homology_h1(&c), Homology { free_rank: 0, torsion: vec![] });
    }

    #[test]
    fn square_unfilled_below_four() {
        let c = attach_small_loops(&SerreGraph::cycle(4), 3);
        assert!(c.cells().is_empty());
        assert_eq!(homology_h1(&c).free_rank, 1);
    }

    #[test]
    fn theta_bigons() {
        let c = attach_small_loops(&theta(), 6);
        assert_eq!(c.cells().len(), 3);
        assert!(c.cells().iter().all(|w| w.len() == 2));
        let m = cell_boundary_matrix(&c);
        assert_eq!(rational_rank(&m), 2);
        assert!(homology_h1(&c).is_trivial());
    }

    #[test]
    fn loop_cells() {
        let g = SerreGraph::from_edges(1, &[(0, 0)]);
        let bare = TwoComplex::new(g.clone(), vec![]).unwrap();
        assert_eq!(homology_h1(&bare).free_rank, 1);
        let disk = TwoComplex::new(g.clone(), vec![vec![0]]).unwrap();
        assert!(homology_h1(&disk).is_trivial());
        let projective = TwoComplex::new(g.clone(), vec![vec![0, 0]]).unwrap();
        assert_eq!(homology_h1(&projective), Homology { free_rank: 0, torsion: vec![2] });
        assert_eq!(attach_small_loops(&g, 1).cells(), &[vec![0]]);
    }

    #[test]
    fn bare_skeleton_rank_is_cycle_rank() {
        for g in [SerreGraph::complete(4), SerreGraph::complete_bipartite(3, 3), theta(), SerreGraph::cycle(7)] {
            let c = attach_small_loops(&g, 0);
            assert_eq!(homology_h1(&c).free_rank, g.num_edges() - g.num_vertices() + 1);
        }
    }

    #[test]
    fn complete_graph_triangles() {
        let c = attach_small_loops(&SerreGraph::complete(4), 3);
        assert_eq!(c.cells().len(), 4);
        assert!(homology_h1(&c).is_trivial());
    }

    #[test]
    fn rejects_open_walks() {
        let g = SerreGraph::path(2);
        assert_eq!(TwoComplex::new(g, vec![vec![0]]).unwrap_err(), ComplexError::NotClosed(0));
    }

    #[test]
    fn smith_examples() {
        assert_eq!(smith_invariants(vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]), vec![2, 6, 12]);
        assert_eq!(smith_invariants(vec![vec![0, 0], vec![0, 0]]), Vec::<u64>::new());
        assert_eq!(smith_invariants(vec![vec![2, 0], vec![0, 3]]), vec![1, 6]);
    }
}
