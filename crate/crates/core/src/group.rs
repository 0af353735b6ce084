//! Permutation groups given by generators.
//!
//! Groups are small, so every subgroup computation works on the full element
//! list. Enumeration stops with [`GroupError::ElementBoundExceeded`] once the
//! configured bound is passed; nothing is truncated silently.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::graph::VertexPartition;
use crate::perm::Perm;

pub const DEFAULT_ELEMENT_BOUND: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("group has more than {0} elements")]
    ElementBoundExceeded(usize),
    #[error("permutation of degree {found} where degree {expected} was expected")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("group is not transitive on its domain")]
    NotTransitive,
    #[error("not a subgroup: {0}")]
    NotASubgroup(String),
    #[error("subgroup is not normal")]
    NotNormal,
    #[error("point {0} outside the domain")]
    PointOutOfRange(usize),
}

/// Sorted element list with a lookup table.
#[derive(Debug)]
pub struct Elements {
    list: Vec<Perm>,
    index: HashMap<Perm, usize>,
}

impl Elements {
    pub fn as_slice(&self) -> &[Perm] {
        &self.list
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.index.contains_key(p)
    }

    pub fn position(&self, p: &Perm) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Perm> {
        self.list.iter()
    }
}

#[derive(Debug, Clone)]
pub struct PermGroup {
    degree: usize,
    gens: Vec<Perm>,
    bound: usize,
    elements: OnceLock<Result<Arc<Elements>, GroupError>>,
}

impl PartialEq for PermGroup {
    /// Equal as sets of permutations (enumerates both groups).
    fn eq(&self, other: &Self) -> bool {
        if self.degree != other.degree {
            return false;
        }
        match (self.elements(), other.elements()) {
            (Ok(a), Ok(b)) => a.list == b.list,
            _ => false,
        }
    }
}

impl PermGroup {
    pub fn new(degree: usize, gens: Vec<Perm>) -> Result<Self, GroupError> {
        if let Some(g) = gens.iter().find(|g| g.degree() != degree) {
            return Err(GroupError::DegreeMismatch { expected: degree, found: g.degree() });
        }
        let mut gens: Vec<Perm> = gens.into_iter().filter(|g| !g.is_identity()).collect();
        gens.dedup();
        Ok(PermGroup { degree, gens, bound: DEFAULT_ELEMENT_BOUND, elements: OnceLock::new() })
    }

    pub fn trivial(degree: usize) -> Self {
        PermGroup { degree, gens: Vec::new(), bound: DEFAULT_ELEMENT_BOUND, elements: OnceLock::new() }
    }

    /// Full symmetric group on `0..n`.
    pub fn symmetric(n: usize) -> Self {
        let mut gens = Vec::new();
        if n >= 2 {
            gens.push(Perm::from_cycles(n, &[vec![0, 1]]).unwrap());
        }
        if n >= 3 {
            gens.push(Perm::from_cycles(n, &[(0..n).collect()]).unwrap());
        }
        PermGroup::new(n, gens).unwrap()
    }

    pub fn with_bound(mut self, bound: usize) -> Self {
        self.bound = bound;
        self.elements = OnceLock::new();
        self
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Perm] {
        &self.gens
    }

    pub fn identity(&self) -> Perm {
        Perm::identity(self.degree)
    }

    /// All elements, enumerated once by breadth-first closure.
    pub fn elements(&self) -> Result<Arc<Elements>, GroupError> {
        self.elements.get_or_init(|| enumerate(self.degree, &self.gens, self.bound).map(Arc::new)).clone()
    }

    pub fn order(&self) -> Result<usize, GroupError> {
        Ok(self.elements()?.len())
    }

    pub fn contains(&self, p: &Perm) -> Result<bool, GroupError> {
        if p.degree() != self.degree {
            return Ok(false);
        }
        Ok(self.elements()?.contains(p))
    }

    pub fn is_trivial(&self) -> bool {
        self.gens.is_empty()
    }

    /// Orbit of `x`, sorted.
    pub fn orbit(&self, x: usize) -> Vec<usize> {
        orbit_under(&self.gens, x)
    }

    pub fn is_transitive(&self) -> bool {
        self.degree == 0 || self.orbit(0).len() == self.degree
    }

    /// Group generated by a subset of the elements, with a small generating set
    /// picked greedily in element order.
    pub fn from_elements(degree: usize, elems: &[Perm], bound: usize) -> Result<Self, GroupError> {
        let mut sorted: Vec<&Perm> = elems.iter().collect();
        sorted.sort();
        let mut gens: Vec<Perm> = Vec::new();
        let mut closure: HashSet<Perm> = HashSet::from([Perm::identity(degree)]);
        for p in sorted {
            if closure.contains(p) {
                continue;
            }
            gens.push(p.clone());
            closure = enumerate(degree, &gens, bound)?.list.into_iter().collect();
        }
        Ok(PermGroup::new(degree, gens)?.with_bound(bound))
    }

    /// Subgroup of elements satisfying `pred`; `pred` must define a subgroup.
    pub fn subgroup_where(&self, pred: impl Fn(&Perm) -> bool) -> Result<PermGroup, GroupError> {
        let el = self.elements()?;
        let keep: Vec<Perm> = el.iter().filter(|p| pred(p)).cloned().collect();
        Self::from_elements(self.degree, &keep, self.bound)
    }

    pub fn point_stabilizer(&self, x: usize) -> Result<PermGroup, GroupError> {
        if x >= self.degree {
            return Err(GroupError::PointOutOfRange(x));
        }
        self.subgroup_where(|p| p.apply(x) == x)
    }

    /// Setwise stabilizer of `set`.
    pub fn set_stabilizer(&self, set: &[usize]) -> Result<PermGroup, GroupError> {
        let inside: HashSet<usize> = set.iter().copied().collect();
        self.subgroup_where(|p| set.iter().all(|&x| inside.contains(&p.apply(x))))
    }

    /// Blocks = orbits intersected with `subset` (the whole domain if `None`).
    pub fn orbit_partition(&self, subset: Option<&[usize]>) -> Result<VertexPartition, GroupError> {
        let all: Vec<usize> = (0..self.degree).collect();
        let pts = subset.unwrap_or(&all);
        if let Some(&x) = pts.iter().find(|&&x| x >= self.degree) {
            return Err(GroupError::PointOutOfRange(x));
        }
        let mut label = vec![usize::MAX; self.degree];
        for s in 0..self.degree {
            if label[s] == usize::MAX {
                for y in self.orbit(s) {
                    label[y] = s;
                }
            }
        }
        let mut by_orbit: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &x in pts {
            by_orbit.entry(label[x]).or_default().push(x);
        }
        Ok(VertexPartition::of_subset(by_orbit.into_values().collect()))
    }

    pub fn is_subgroup_of(&self, g: &PermGroup) -> Result<bool, GroupError> {
        if self.degree != g.degree {
            return Ok(false);
        }
        let el = g.elements()?;
        Ok(self.gens.iter().all(|h| el.contains(h)))
    }

    fn require_subgroup(&self, h: &PermGroup) -> Result<(), GroupError> {
        if h.is_subgroup_of(self)? {
            Ok(())
        } else {
            Err(GroupError::NotASubgroup("generator outside the ambient group".into()))
        }
    }

    pub fn index(&self, h: &PermGroup) -> Result<usize, GroupError> {
        self.require_subgroup(h)?;
        Ok(self.order()? / h.order()?)
    }

    /// Whether `h` (a subgroup) is normalized by every generator.
    pub fn is_normal(&self, h: &PermGroup) -> Result<bool, GroupError> {
        self.require_subgroup(h)?;
        let el = h.elements()?;
        Ok(self.gens.iter().all(|g| h.gens.iter().all(|x| el.contains(&x.conjugate_by(g)))))
    }

    pub fn intersection(&self, other: &PermGroup) -> Result<PermGroup, GroupError> {
        if self.degree != other.degree {
            return Err(GroupError::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        let b = other.elements()?;
        self.subgroup_where(|p| b.contains(p))
    }

    /// `g H g⁻¹`.
    pub fn conjugate(&self, g: &Perm) -> PermGroup {
        PermGroup::new(self.degree, self.gens.iter().map(|h| h.conjugate_by(g)).collect())
            .expect("same degree")
            .with_bound(self.bound)
    }

    /// Largest subgroup of `h` normal in `self`.
    pub fn normal_core(&self, h: &PermGroup) -> Result<PermGroup, GroupError> {
        self.require_subgroup(h)?;
        let mut core: HashSet<Perm> = h.elements()?.iter().cloned().collect();
        loop {
            let next: HashSet<Perm> = core
                .iter()
                .filter(|x| self.gens.iter().all(|g| core.contains(&x.conjugate_by(g))))
                .cloned()
                .collect();
            if next.len() == core.len() {
                break;
            }
            core = next;
        }
        let elems: Vec<Perm> = core.into_iter().collect();
        Self::from_elements(self.degree, &elems, self.bound)
    }

    /// `HK` as a group, when it is one.
    pub fn product_set(&self, h: &PermGroup, k: &PermGroup) -> Result<PermGroup, GroupError> {
        self.require_subgroup(h)?;
        self.require_subgroup(k)?;
        let (he, ke) = (h.elements()?, k.elements()?);
        let mut set: HashSet<Perm> = HashSet::new();
        for a in he.iter() {
            for b in ke.iter() {
                set.insert(a.compose(b));
                if set.len() > self.bound {
                    return Err(GroupError::ElementBoundExceeded(self.bound));
                }
            }
        }
        // HK is a subgroup iff it is closed under left multiplication by K
        for x in &set {
            if k.gens.iter().any(|g| !set.contains(&g.compose(x))) {
                return Err(GroupError::NotASubgroup("HK is not closed under multiplication".into()));
            }
        }
        let gens: Vec<Perm> = h.gens.iter().chain(k.gens.iter()).cloned().collect();
        Ok(PermGroup::new(self.degree, gens)?.with_bound(self.bound))
    }

    /// Minimal nontrivial block systems of a transitive group, sorted.
    /// Empty iff the group is primitive.
    pub fn minimal_block_systems(&self) -> Result<Vec<VertexPartition>, GroupError> {
        if !self.is_transitive() {
            return Err(GroupError::NotTransitive);
        }
        let n = self.degree;
        let mut candidates: Vec<VertexPartition> = Vec::new();
        for beta in 1..n {
            let p = minimal_block_system(&self.gens, n, 0, beta);
            if p.num_blocks() > 1 && !candidates.contains(&p) {
                candidates.push(p);
            }
        }
        let mut minimal: Vec<VertexPartition> = candidates
            .iter()
            .filter(|p| !candidates.iter().any(|q| q != *p && q.refines(p)))
            .cloned()
            .collect();
        minimal.sort();
        Ok(minimal)
    }

    /// Whether `p` is preserved by every generator.
    pub fn preserves_partition(&self, p: &VertexPartition) -> bool {
        self.gens.iter().all(|g| {
            p.blocks().iter().all(|b| {
                let target = p.block_of(g.apply(b[0]));
                b.iter().all(|&x| p.block_of(g.apply(x)) == target)
            })
        })
    }
}

fn orbit_under(gens: &[Perm], x: usize) -> Vec<usize> {
    let mut seen = HashSet::from([x]);
    let mut queue = VecDeque::from([x]);
    while let Some(y) = queue.pop_front() {
        for g in gens {
            let z = g.apply(y);
            if seen.insert(z) {
                queue.push_back(z);
            }
        }
    }
    let mut out: Vec<usize> = seen.into_iter().collect();
    out.sort_unstable();
    out
}

fn enumerate(degree: usize, gens: &[Perm], bound: usize) -> Result<Elements, GroupError> {
    let id = Perm::identity(degree);
    let mut seen: HashSet<Perm> = HashSet::from([id.clone()]);
    let mut list = vec![id];
    let mut i = 0;
    while i < list.len() {
        let x = list[i].clone();
        i += 1;
        for g in gens {
            let y = g.compose(&x);
            if !seen.contains(&y) {
                if list.len() >= bound {
                    return Err(GroupError::ElementBoundExceeded(bound));
                }
                seen.insert(y.clone());
                list.push(y);
            }
        }
    }
    list.sort();
    let index = list.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
    Ok(Elements { list, index })
}

/// Finest block system in which `alpha` and `beta` share a block (Atkinson).
fn minimal_block_system(gens: &[Perm], n: usize, alpha: usize, beta: usize) -> VertexPartition {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut queue = VecDeque::from([(alpha, beta)]);
    let (ra, rb) = (find(&mut parent, alpha), find(&mut parent, beta));
    parent[rb.max(ra)] = ra.min(rb);
    while let Some((x, y)) = queue.pop_front() {
        for g in gens {
            let (gx, gy) = (g.apply(x), g.apply(y));
            let (rx, ry) = (find(&mut parent, gx), find(&mut parent, gy));
            if rx != ry {
                parent[rx.max(ry)] = rx.min(ry);
                queue.push_back((gx, gy));
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
    VertexPartition::from_labels(&labels)
}
