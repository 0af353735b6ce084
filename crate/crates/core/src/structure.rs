//! Automorphisms, canonical forms and isomorphisms of finite "functional
//! structures": a set of labelled points with a few partial unary functions.
//!
//! Graphs, colored graphs and graphs of spaces are all encoded this way (darts
//! are points, `bar`/`iota`/`tau` are functions), so one search serves them all.
//! The search is individualization-refinement: color refinement to a stable
//! partition, then branching on the points of a non-singleton cell.

use crate::perm::Perm;

/// Points `0..n` with opaque labels and partial functions between points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    labels: Vec<u64>,
    funcs: Vec<Vec<Option<u32>>>,
}

impl Structure {
    pub fn new(labels: Vec<u64>, num_funcs: usize) -> Self {
        let n = labels.len();
        Structure { labels, funcs: vec![vec![None; n]; num_funcs] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, x: usize) -> u64 {
        self.labels[x]
    }

    pub fn set_label(&mut self, x: usize, label: u64) {
        self.labels[x] = label;
    }

    /// Sets `f(x) = y`.
    pub fn set(&mut self, f: usize, x: usize, y: usize) {
        self.funcs[f][x] = Some(y as u32);
    }

    pub fn get(&self, f: usize, x: usize) -> Option<usize> {
        self.funcs[f][x].map(|y| y as usize)
    }

    /// Whether `p` preserves labels and commutes with every function.
    pub fn is_automorphism(&self, p: &Perm) -> bool {
        p.degree() == self.len()
            && (0..self.len()).all(|x| {
                let y = p.apply(x);
                self.labels[x] == self.labels[y]
                    && self.funcs.iter().all(|f| f[y].map(|z| z as usize) == f[x].map(|z| p.apply(z as usize)))
            })
    }
}

/// Result of the automorphism search.
#[derive(Debug, Clone)]
pub struct AutomorphismSearch {
    pub generators: Vec<Perm>,
    /// Orbit of each base point under the stabilizer of the earlier ones; the
    /// group order is their product.
    pub orbit_lengths: Vec<usize>,
}

impl AutomorphismSearch {
    pub fn order(&self) -> u128 {
        self.orbit_lengths.iter().map(|&l| l as u128).product()
    }
}

/// A canonical relabelling: isomorphic structures get equal certificates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub certificate: Vec<u64>,
    /// `labeling[x]` is the canonical position of point `x`.
    pub labeling: Vec<usize>,
}

struct Engine<'a> {
    s: &'a Structure,
    pre: Vec<Vec<Vec<u32>>>,
}

impl<'a> Engine<'a> {
    fn new(s: &'a Structure) -> Self {
        let n = s.len();
        let pre = s
            .funcs
            .iter()
            .map(|f| {
                let mut p = vec![Vec::new(); n];
                for (x, y) in f.iter().enumerate() {
                    if let Some(y) = y {
                        p[*y as usize].push(x as u32);
                    }
                }
                p
            })
            .collect();
        Engine { s, pre }
    }

    fn initial(&self) -> Vec<u32> {
        let mut c = dense_ranks(&self.s.labels);
        self.refine(&mut c);
        c
    }

    /// Splits cells until every point's signature (own color, colors of its
    /// images, multisets of colors of its preimages) is determined by its cell.
    fn refine(&self, colors: &mut Vec<u32>) {
        let mut cells = count_distinct(colors);
        loop {
            let sigs: Vec<Vec<u32>> = (0..colors.len())
                .map(|x| {
                    let mut sig = vec![colors[x]];
                    for f in &self.s.funcs {
                        sig.push(f[x].map_or(0, |y| colors[y as usize] + 1));
                    }
                    for p in &self.pre {
                        let mut cs: Vec<u32> = p[x].iter().map(|&z| colors[z as usize]).collect();
                        cs.sort_unstable();
                        sig.push(u32::MAX);
                        sig.extend(cs);
                    }
                    sig
                })
                .collect();
            *colors = dense_ranks(&sigs);
            let now = count_distinct(colors);
            if now == cells {
                return;
            }
            cells = now;
        }
    }

    fn individualize(&self, colors: &[u32], x: usize) -> Vec<u32> {
        let keyed: Vec<u64> =
            colors.iter().enumerate().map(|(y, &c)| 2 * c as u64 + u64::from(y != x)).collect();
        let mut c = dense_ranks(&keyed);
        self.refine(&mut c);
        c
    }

    fn certificate(&self, colors: &[u32]) -> Vec<u64> {
        let n = colors.len();
        let mut at = vec![0usize; n];
        for (x, &c) in colors.iter().enumerate() {
            at[c as usize] = x;
        }
        let mut cert = Vec::with_capacity(n * (1 + self.s.funcs.len()));
        for &x in &at {
            cert.push(self.s.labels[x]);
            for f in &self.s.funcs {
                cert.push(f[x].map_or(0, |y| colors[y as usize] as u64 + 1));
            }
        }
        cert
    }
}

fn dense_ranks<T: Ord + Clone>(keys: &[T]) -> Vec<u32> {
    let mut sorted: Vec<T> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).expect("key present") as u32).collect()
}

fn count_distinct(colors: &[u32]) -> usize {
    colors.iter().copied().max().map_or(0, |m| m as usize + 1)
}

/// The smallest non-singleton cell, ties broken by color.
fn target_cell(colors: &[u32]) -> Option<Vec<usize>> {
    let k = count_distinct(colors);
    let mut size = vec![0usize; k];
    for &c in colors {
        size[c as usize] += 1;
    }
    let c = (0..k).filter(|&c| size[c] > 1).min_by_key(|&c| (size[c], c))?;
    Some((0..colors.len()).filter(|&x| colors[x] as usize == c).collect())
}

/// Cell sizes in color order; equal on nodes related by an automorphism.
fn shape(colors: &[u32]) -> Vec<usize> {
    let mut size = vec![0usize; count_distinct(colors)];
    for &c in colors {
        size[c as usize] += 1;
    }
    size
}

fn orbit_under(gens: &[Perm], x: usize) -> Vec<usize> {
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
    seen
}

/// Point with each label, inverse of a discrete coloring.
fn points_by_label(colors: &[u32]) -> Vec<usize> {
    let mut at = vec![0usize; colors.len()];
    for (x, &c) in colors.iter().enumerate() {
        at[c as usize] = x;
    }
    at
}

/// Generators of the full automorphism group.
pub fn automorphisms(s: &Structure) -> AutomorphismSearch {
    let e = Engine::new(s);
    let mut path = vec![e.initial()];
    let mut base = Vec::new();
    while let Some(cell) = target_cell(path.last().expect("root")) {
        let c = cell[0];
        base.push((cell, c));
        let next = e.individualize(path.last().expect("root"), c);
        path.push(next);
    }
    let leaf = path.last().expect("root").clone();
    let zeta_cert = e.certificate(&leaf);
    let zeta_at = points_by_label(&leaf);
    let shapes: Vec<Vec<usize>> = path.iter().map(|c| shape(c)).collect();

    let mut gens: Vec<Perm> = Vec::new();
    let mut orbit_lengths = vec![0usize; base.len()];
    for level in (0..base.len()).rev() {
        let (cell, c) = &base[level];
        let mut orbit = orbit_under(&gens, *c);
        for &x in cell {
            if orbit.contains(&x) {
                continue;
            }
            let child = e.individualize(&path[level], x);
            if let Some(lambda) = find_equivalent_leaf(&e, child, level + 1, &shapes, &zeta_cert) {
                // λ ↦ ζ sends x to c; its inverse sends c to x
                let sigma: Vec<usize> = (0..s.len()).map(|y| zeta_at[lambda[y] as usize]).collect();
                let p = Perm::from_images(sigma).expect("leaf relabelling is a bijection").inverse();
                debug_assert!(s.is_automorphism(&p));
                gens.push(p);
                orbit = orbit_under(&gens, *c);
            }
        }
        orbit_lengths[level] = orbit.len();
    }
    AutomorphismSearch { generators: gens, orbit_lengths }
}

fn find_equivalent_leaf(
    e: &Engine<'_>,
    colors: Vec<u32>,
    depth: usize,
    shapes: &[Vec<usize>],
    zeta_cert: &[u64],
) -> Option<Vec<u32>> {
    if depth >= shapes.len() || shape(&colors) != shapes[depth] {
        return None;
    }
    match target_cell(&colors) {
        None => (e.certificate(&colors) == zeta_cert).then_some(colors),
        Some(cell) => cell
            .into_iter()
            .find_map(|y| find_equivalent_leaf(e, e.individualize(&colors, y), depth + 1, shapes, zeta_cert)),
    }
}

/// Least certificate over the whole search tree, pruned by automorphisms.
pub fn canonical_form(s: &Structure) -> CanonicalForm {
    let auts = automorphisms(s);
    let e = Engine::new(s);
    let mut best: Option<(Vec<u64>, Vec<u32>)> = None;
    let mut prefix = Vec::new();
    canon_search(&e, e.initial(), &auts.generators, &mut prefix, &mut best);
    let (certificate, colors) = best.expect("search reaches a leaf");
    CanonicalForm { certificate, labeling: colors.into_iter().map(|c| c as usize).collect() }
}

fn canon_search(
    e: &Engine<'_>,
    colors: Vec<u32>,
    gens: &[Perm],
    prefix: &mut Vec<usize>,
    best: &mut Option<(Vec<u64>, Vec<u32>)>,
) {
    let Some(cell) = target_cell(&colors) else {
        let cert = e.certificate(&colors);
        if best.as_ref().is_none_or(|(b, _)| cert < *b) {
            *best = Some((cert, colors));
        }
        return;
    };
    // automorphisms fixing the prefix permute the children's subtrees
    let fixing: Vec<Perm> = gens.iter().filter(|g| prefix.iter().all(|&p| g.apply(p) == p)).cloned().collect();
    let mut done: Vec<usize> = Vec::new();
    for y in cell {
        if done.contains(&y) {
            continue;
        }
        done.extend(orbit_under(&fixing, y));
        prefix.push(y);
        canon_search(e, e.individualize(&colors, y), gens, prefix, best);
        prefix.pop();
    }
}

/// An isomorphism `a → b` as a point map, if one exists.
pub fn isomorphism(a: &Structure, b: &Structure) -> Option<Vec<usize>> {
    if a.len() != b.len() || a.funcs.len() != b.funcs.len() {
        return None;
    }
    let (ca, cb) = (canonical_form(a), canonical_form(b));
    if ca.certificate != cb.certificate {
        return None;
    }
    let mut at_b = vec![0usize; b.len()];
    for (x, &l) in cb.labeling.iter().enumerate() {
        at_b[l] = x;
    }
    Some(ca.labeling.iter().map(|&l| at_b[l]).collect())
}
