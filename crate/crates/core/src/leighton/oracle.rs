//! Exhaustive search for a minimal common cover, independent of the refinement
//! machinery.

use crate::aut::Coloring;
use crate::graph::{GraphMorphism, SerreGraph};
use crate::perm::Perm;
use crate::voltage::{spanning_forest, voltage_cover, Voltages};

use super::cover::CommonCover;
use super::LeightonError;

/// Largest number of voltage assignments the oracle will enumerate for one degree.
pub const ORACLE_CANDIDATE_CAP: u128 = 5_000_000;

/// Adjacency tables of a graph.
struct Raw {
    bar: Vec<usize>,
    tau: Vec<usize>,
    out: Vec<Vec<usize>>,
}

impl Raw {
    fn of(g: &SerreGraph) -> Raw {
        Raw {
            bar: (0..g.num_darts()).map(|d| g.bar(d)).collect(),
            tau: (0..g.num_darts()).map(|d| g.tau(d)).collect(),
            out: (0..g.num_vertices()).map(|v| g.out(v).to_vec()).collect(),
        }
    }

    fn bfs_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.out.len()];
        let mut order = vec![0];
        seen[0] = true;
        let mut i = 0;
        while i < order.len() {
            for &e in &self.out[order[i]] {
                let w = self.tau[e];
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                }
            }
            i += 1;
        }
        order
    }
}

struct Search<'a> {
    z: &'a Raw,
    x: &'a Raw,
    order: Vec<usize>,
    vmap: Vec<Option<usize>>,
    dmap: Vec<Option<usize>>,
}

impl Search<'_> {
    fn used_at(&self, v: usize, f: usize) -> bool {
        self.z.out[v].iter().any(|&e| self.dmap[e] == Some(f))
    }

    fn go(&mut self, pv: usize, pd: usize) -> bool {
        if pv == self.order.len() {
            return true;
        }
        let v = self.order[pv];
        if pd == self.z.out[v].len() {
            return self.go(pv + 1, 0);
        }
        let e = self.z.out[v][pd];
        if self.dmap[e].is_some() {
            return self.go(pv, pd + 1);
        }
        let w = self.vmap[v].expect("visited in breadth-first order");
        let (u, b) = (self.z.tau[e], self.z.bar[e]);
        for i in 0..self.x.out[w].len() {
            let f = self.x.out[w][i];
            let (wu, fb) = (self.x.tau[f], self.x.bar[f]);
            if self.used_at(v, f) {
                continue;
            }
            let fresh_vertex = self.vmap[u].is_none();
            match self.vmap[u] {
                Some(x) if x != wu => continue,
                None if self.z.out[u].len() != self.x.out[wu].len() => continue,
                _ => {}
            }
            self.dmap[e] = Some(f);
            if fresh_vertex {
                self.vmap[u] = Some(wu);
            }
            let bar_ok = !self.used_at(u, fb);
            if bar_ok {
                self.dmap[b] = Some(fb);
                if self.go(pv, pd + 1) {
                    return true;
                }
                self.dmap[b] = None;
            }
            self.dmap[e] = None;
            if fresh_vertex {
                self.vmap[u] = None;
            }
        }
        false
    }
}

fn search(z: &Raw, x: &Raw) -> Option<(Vec<usize>, Vec<usize>)> {
    if z.out.is_empty() || x.out.is_empty() {
        return None;
    }
    let order = z.bfs_order();
    if order.len() != z.out.len() {
        return None;
    }
    let root = order[0];
    for w in 0..x.out.len() {
        if x.out[w].len() != z.out[root].len() {
            continue;
        }
        let mut s = Search { z, x, order: order.clone(), vmap: vec![None; z.out.len()], dmap: vec![None; z.bar.len()] };
        s.vmap[root] = Some(w);
        if s.go(0, 0) {
            return Some((s.vmap.into_iter().map(Option::unwrap).collect(), s.dmap.into_iter().map(Option::unwrap).collect()));
        }
    }
    None
}

/// Some covering map from a connected graph `z` onto `x`, by exhaustive search.
pub fn find_covering(z: &SerreGraph, x: &SerreGraph) -> Option<GraphMorphism> {
    let (vmap, dmap) = search(&Raw::of(z), &Raw::of(x))?;
    GraphMorphism::new(z.clone(), x.clone(), vmap, dmap).ok()
}

/// All permutations of `0..d` in lexicographic order.
fn all_perms(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..d).collect();
    loop {
        out.push(cur.clone());
        // next permutation
        let Some(i) = (1..d).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..d).rev().find(|&j| cur[j] > cur[i - 1]).expect("exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Minimal-order connected common cover found by enumerating the connected
/// covers of `x1` of degree at most `max_degree`.
///
/// Voltages are the identity on a spanning tree and run over all of `S_d` on
/// the remaining edges; assignments that are not lexicographically least under
/// simultaneous conjugation are skipped, since they give isomorphic covers.
pub fn brute_force_common_cover(
    x1: &SerreGraph,
    x2: &SerreGraph,
    max_degree: usize,
) -> Result<Option<CommonCover>, LeightonError> {
    if x1.num_vertices() == 0 || !x1.is_connected() || x2.num_vertices() == 0 || !x2.is_connected() {
        return Err(LeightonError::NotConnected);
    }
    let tree = spanning_forest(x1);
    let cotree: Vec<usize> = x1.edge_reps().into_iter().filter(|&e| !tree[e]).collect();
    let raw2 = Raw::of(x2);
    for d in 1..=max_degree {
        if !(d * x1.num_vertices()).is_multiple_of(x2.num_vertices()) || !(d * x1.num_darts()).is_multiple_of(x2.num_darts()) {
            continue;
        }
        let perms = all_perms(d);
        let np = perms.len();
        let total = (np as u128).checked_pow(cotree.len() as u32).unwrap_or(u128::MAX);
        if total > ORACLE_CANDIDATE_CAP {
            return Err(LeightonError::SearchBoundExceeded(format!(
                "{total} voltage assignments of degree {d} exceed {ORACLE_CANDIDATE_CAP}"
            )));
        }
        let index = |p: &[usize]| perms.binary_search_by(|q| q.as_slice().cmp(p)).expect("a permutation");
        // conj[g][p] = g p g⁻¹
        let conj: Vec<Vec<usize>> = perms
            .iter()
            .map(|g| {
                let mut ginv = vec![0; d];
                for (i, &x) in g.iter().enumerate() {
                    ginv[x] = i;
                }
                perms
                    .iter()
                    .map(|p| index(&(0..d).map(|i| g[p[ginv[i]]]).collect::<Vec<_>>()))
                    .collect()
            })
            .collect();
        let mut tuple = vec![0usize; cotree.len()];
        loop {
            let canonical = conj.iter().all(|c| {
                let image: Vec<usize> = tuple.iter().map(|&p| c[p]).collect();
                image >= tuple
            });
            if canonical && transitive(&tuple, &perms, d) {
                if let Some(cc) = try_voltages(x1, x2, &raw2, &cotree, &tuple, &perms, d)? {
                    return Ok(Some(cc));
                }
            }
            // next tuple
            let mut i = tuple.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                tuple[i] += 1;
                if tuple[i] < np {
                    break;
                }
                tuple[i] = 0;
            }
            if tuple.iter().all(|&t| t == 0) {
                break;
            }
        }
    }
    Ok(None)
}

fn transitive(tuple: &[usize], perms: &[Vec<usize>], d: usize) -> bool {
    let mut seen = vec![false; d];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for &t in tuple {
            let j = perms[t][i];
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn try_voltages(
    x1: &SerreGraph,
    x2: &SerreGraph,
    raw2: &Raw,
    cotree: &[usize],
    tuple: &[usize],
    perms: &[Vec<usize>],
    d: usize,
) -> Result<Option<CommonCover>, LeightonError> {
    let mut volt = vec![None; x1.num_darts()];
    for (&e, &t) in cotree.iter().zip(tuple) {
        volt[e] = Some(t);
    }
    let voltages = Voltages::from_edges(x1, d, |e| match volt[e] {
        Some(t) => Perm::from_images(perms[t].clone()).expect("a permutation"),
        None => Perm::identity(d),
    });
    // the cover's tables, indexed as in `voltage_cover`
    let n = x1.num_vertices() * d;
    let mut raw = Raw { bar: Vec::new(), tau: Vec::new(), out: vec![Vec::new(); n] };
    for e in 0..x1.num_darts() {
        let p = voltages.of(e);
        for i in 0..d {
            raw.bar.push(x1.bar(e) * d + p.apply(i));
            raw.tau.push(x1.tau(e) * d + p.apply(i));
            raw.out[x1.iota(e) * d + i].push(e * d + i);
        }
    }
    let Some((vmap, dmap)) = search(&raw, raw2) else { return Ok(None) };
    let p1 = voltage_cover(x1, &voltages);
    let z = p1.source.clone();
    let p2 = GraphMorphism::new(z.clone(), x2.clone(), vmap, dmap)?;
    Ok(Some(CommonCover { coloring: Coloring::uniform(&z), graph: z, p1, p2 }))
}
