use std::collections::BTreeMap;

use crate::aut::Coloring;
use crate::graph::{GraphMorphism, SerreGraph};

use super::LeightonError;

/// Stable degree refinement of a connected, possibly colored graph.
///
/// Class numbers are ranks of signatures, so two graphs with a common universal
/// cover number their classes identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementProfile {
    pub class_of: Vec<usize>,
    pub class_color: Vec<u32>,
    /// Per class: `(dart color, reverse color, class of the far end) → count`
    /// over the darts leaving any one vertex of the class.
    pub transitions: Vec<BTreeMap<(u32, u32, usize), usize>>,
    pub class_sizes: Vec<usize>,
    /// Rounds that split some class.
    pub depth: usize,
}

impl RefinementProfile {
    pub fn num_classes(&self) -> usize {
        self.class_color.len()
    }

    /// Same weighted class data, which holds exactly when the graphs have a
    /// common universal cover.
    pub fn matches(&self, other: &RefinementProfile) -> bool {
        self.class_color == other.class_color && self.transitions == other.transitions
    }
}

fn ranks<T: Ord + Clone>(keys: &[T]) -> (Vec<usize>, Vec<T>) {
    let mut distinct = keys.to_vec();
    distinct.sort();
    distinct.dedup();
    let class = keys.iter().map(|k| distinct.binary_search(k).expect("present")).collect();
    (class, distinct)
}

pub fn degree_refinement(g: &SerreGraph, c: Option<&Coloring>) -> Result<RefinementProfile, LeightonError> {
    if let Some(c) = c {
        c.check(g)?;
    }
    if g.num_vertices() == 0 || !g.is_connected() {
        return Err(LeightonError::NotConnected);
    }
    let vcol = |v: usize| c.map_or(0, |c| c.vertex[v]);
    let dcol = |d: usize| c.map_or(0, |c| c.dart[d]);
    let colors: Vec<u32> = (0..g.num_vertices()).map(vcol).collect();
    let (mut class, class_color) = ranks(&colors);
    let mut count = class_color.len();
    let mut depth = 0;
    let signature = |class: &[usize], v: usize| {
        let mut s: Vec<(u32, u32, usize)> =
            g.out(v).iter().map(|&e| (dcol(e), dcol(g.bar(e)), class[g.tau(e)])).collect();
        s.sort();
        (class[v], s)
    };
    loop {
        let keys: Vec<_> = (0..g.num_vertices()).map(|v| signature(&class, v)).collect();
        let (next, distinct) = ranks(&keys);
        if distinct.len() == count {
            break;
        }
        count = distinct.len();
        class = next;
        depth += 1;
    }
    let mut class_color = vec![0; count];
    let mut class_sizes = vec![0; count];
    let mut transitions = vec![BTreeMap::new(); count];
    for v in 0..g.num_vertices() {
        class_color[class[v]] = vcol(v);
        class_sizes[class[v]] += 1;
        if class_sizes[class[v]] == 1 {
            let t = &mut transitions[class[v]];
            for &e in g.out(v) {
                *t.entry((dcol(e), dcol(g.bar(e)), class[g.tau(e)])).or_default() += 1;
            }
        }
    }
    Ok(RefinementProfile { class_of: class, class_color, transitions, class_sizes, depth })
}

/// Whether a covering sends every vertex to a vertex of the same class, with
/// matching profiles.
pub fn refinement_preserved(
    f: &GraphMorphism,
    source: Option<&Coloring>,
    target: Option<&Coloring>,
) -> Result<bool, LeightonError> {
    let ps = degree_refinement(&f.source, source)?;
    let pt = degree_refinement(&f.target, target)?;
    Ok(ps.matches(&pt) && (0..f.source.num_vertices()).all(|v| ps.class_of[v] == pt.class_of[f.vmap[v]]))
}
