//! Finite data for a tree of spaces with two free actions, and the pieces of
//! the common regular cover `(X̂, S)` built from chosen subgroups `Q̂_v`.
//!
//! Only one lifted vertex per orbit is stored. The link of `v` is recovered as
//! the `Q_v`-translates of the marked images `φ_e(X_e)`, one family per dart of
//! the quotient graph `Λ` ending at `v`. Groups act on the points of a graph:
//! vertices first, then darts.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::action::{is_graph_automorphism, num_points};
use crate::aut::{automorphism_group, Coloring};
use crate::gos::{is_fiber_product_diagram, FiberProductReport, GraphOfSpaces, PieceMap};
use crate::graph::{is_covering, DartId, GraphBuilder, GraphMorphism, SerreGraph};
use crate::group::PermGroup;
use crate::perm::Perm;

use super::LeightonError;

#[derive(Debug, Clone)]
pub struct HatVertex {
    pub name: String,
    pub space: SerreGraph,
    /// `Q_v ≤ Aut(X_v)`.
    pub q: PermGroup,
    pub gamma: PermGroup,
    pub gamma_prime: PermGroup,
    pub q_hat: PermGroup,
}

#[derive(Debug, Clone)]
pub struct HatEdge {
    pub name: String,
    pub space: SerreGraph,
    /// `Q_e ≤ Aut(X_e)`.
    pub q: PermGroup,
    pub tail: usize,
    pub head: usize,
    pub attach_tail: PieceMap,
    pub attach_head: PieceMap,
}

#[derive(Debug, Clone)]
pub struct HatCoverData {
    pub vertices: Vec<HatVertex>,
    pub edges: Vec<HatEdge>,
}

/// One edge of the link of a stored vertex: a translate `t·φ_d(X_e)`.
#[derive(Debug, Clone)]
struct Entry {
    /// Dart of `Λ` ending at the vertex.
    dart: DartId,
    /// `t ∘ φ_d` on points.
    map: Vec<usize>,
    image: Vec<usize>,
}

impl Entry {
    /// `F(q) = (t φ_d)⁻¹ q (t φ_d)`, if `q` preserves the image.
    fn restrict(&self, q: &Perm) -> Option<Perm> {
        let back: HashMap<usize, usize> = self.map.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        Perm::from_images(self.map.iter().map(|&x| back.get(&q.apply(x)).copied()).collect::<Option<Vec<_>>>()?)
    }

    fn moved_by(&self, q: &Perm) -> Vec<usize> {
        let mut s: Vec<usize> = self.image.iter().map(|&x| q.apply(x)).collect();
        s.sort_unstable();
        s
    }
}

fn point_map(target: &SerreGraph, phi: &PieceMap) -> Vec<usize> {
    let n = target.num_vertices();
    phi.vmap.iter().copied().chain(phi.dmap.iter().map(|&d| n + d)).collect()
}

impl HatCoverData {
    /// `Λ`: edge `i` has darts `2i` (tail to head) and `2i + 1`.
    pub fn quotient_graph(&self) -> SerreGraph {
        let mut b = GraphBuilder::new();
        for v in &self.vertices {
            b.add_vertex(v.name.clone());
        }
        for e in &self.edges {
            b.add_edge_named(e.tail, e.head, e.name.clone(), format!("{}'", e.name));
        }
        b.build()
    }

    /// Edge index, end vertex and attaching map of a dart of `Λ`.
    fn side(&self, d: DartId) -> (usize, usize, &PieceMap) {
        let e = &self.edges[d / 2];
        if d.is_multiple_of(2) {
            (d / 2, e.head, &e.attach_head)
        } else {
            (d / 2, e.tail, &e.attach_tail)
        }
    }

    fn darts_into(&self, v: usize) -> Vec<DartId> {
        (0..2 * self.edges.len()).filter(|&d| self.side(d).1 == v).collect()
    }

    fn entries(&self, v: usize) -> Result<Vec<Entry>, LeightonError> {
        let hv = &self.vertices[v];
        let els = hv.q.elements()?;
        let mut out: Vec<Entry> = Vec::new();
        for d in self.darts_into(v) {
            let m0 = point_map(&hv.space, self.side(d).2);
            let mut seen = HashSet::new();
            for q in els.iter() {
                let map: Vec<usize> = m0.iter().map(|&x| q.apply(x)).collect();
                let mut image = map.clone();
                image.sort_unstable();
                if seen.insert(image.clone()) {
                    out.push(Entry { dart: d, map, image });
                }
            }
        }
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (k, en) in out.iter().enumerate() {
            for &x in &en.image {
                if let Some(&j) = owner.get(&x) {
                    return Err(LeightonError::InvalidHatData(format!(
                        "marked images {j} and {k} overlap in the space of {}",
                        hv.name
                    )));
                }
                owner.insert(x, k);
            }
        }
        Ok(out)
    }

    fn validate(&self) -> Result<(), LeightonError> {
        let bad = |s: String| Err(LeightonError::InvalidHatData(s));
        for v in &self.vertices {
            let n = num_points(&v.space);
            if v.q.degree() != n {
                return bad(format!("Q of {} acts on {} points, the space has {n}", v.name, v.q.degree()));
            }
            if !v.q.generators().iter().all(|g| is_graph_automorphism(&v.space, g)) {
                return bad(format!("Q of {} does not act by automorphisms", v.name));
            }
            for (what, h) in [("Γ", &v.gamma), ("Γ'", &v.gamma_prime), ("Q̂", &v.q_hat)] {
                if !h.is_subgroup_of(&v.q)? {
                    return bad(format!("{what} of {} is not a subgroup of Q", v.name));
                }
            }
        }
        for e in &self.edges {
            if e.q.degree() != num_points(&e.space) || !e.q.generators().iter().all(|g| is_graph_automorphism(&e.space, g)) {
                return bad(format!("Q of edge {} does not act on its space", e.name));
            }
            for (end, phi) in [(e.tail, &e.attach_tail), (e.head, &e.attach_head)] {
                let Some(v) = self.vertices.get(end) else {
                    return bad(format!("edge {} ends at a missing vertex", e.name));
                };
                if phi.check(&e.space, &v.space).is_err() || !phi.is_injective() {
                    return bad(format!("attaching map of edge {} into {} is not an embedding", e.name, v.name));
                }
            }
        }
        for v in 0..self.vertices.len() {
            let hv = &self.vertices[v];
            let entries = self.entries(v)?;
            for d in self.darts_into(v) {
                let en = entries.iter().find(|en| en.dart == d).expect("every dart has an entry");
                let qe = &self.edges[d / 2].q;
                for q in hv.q.elements()?.iter() {
                    if let Some(f) = en.restrict(q) {
                        if !qe.contains(&f)? {
                            return bad(format!("restriction to edge {} leaves Q_e", self.edges[d / 2].name));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HatClause {
    Freeness,
    VertexSpaceCommonCovers,
    Equivariance,
    GluingCondition,
}

impl fmt::Display for HatClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HatClause::Freeness => "Freeness",
            HatClause::VertexSpaceCommonCovers => "VertexSpaceCommonCovers",
            HatClause::Equivariance => "Equivariance",
            HatClause::GluingCondition => "GluingCondition",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HatViolation {
    pub clause: HatClause,
    /// Vertex or edge name, with the offending group for freeness.
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HatConditionReport {
    pub violations: Vec<HatViolation>,
}

impl HatConditionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn first_error(&self) -> Option<LeightonError> {
        let v = self.violations.first()?;
        Some(match v.clause {
            HatClause::Freeness => {
                let (vertex, group) = v.location.rsplit_once(' ').unwrap_or((&v.location, ""));
                LeightonError::NotFree { vertex: vertex.to_string(), group: if group == "Γ'" { "Γ'" } else { "Γ" } }
            }
            HatClause::VertexSpaceCommonCovers => LeightonError::CommonCoverViolated(v.location.clone()),
            HatClause::Equivariance => LeightonError::NotNormal(v.location.clone()),
            HatClause::GluingCondition => LeightonError::GluingMismatch(v.location.clone()),
        })
    }
}

fn acts_freely(x: &SerreGraph, h: &PermGroup) -> Result<bool, LeightonError> {
    let n = x.num_vertices();
    Ok(h.elements()?.iter().filter(|g| !g.is_identity()).all(|g| {
        (0..n).all(|v| g.apply(v) != v) && (0..x.num_darts()).all(|d| g.apply(n + d) != n + x.bar(d))
    }))
}

/// Images `F(Q̂_v ∩ Q_v^e)` at one end of an edge, and whether `F` is injective there.
fn glued_image(v: &HatVertex, en: &Entry) -> Result<(BTreeSet<Perm>, bool), LeightonError> {
    let mut image = BTreeSet::new();
    let mut count = 0;
    for h in v.q_hat.elements()?.iter() {
        if let Some(f) = en.restrict(h) {
            count += 1;
            image.insert(f);
        }
    }
    let injective = image.len() == count;
    Ok((image, injective))
}

/// Every violated condition, by clause; errors only on malformed data.
pub fn check_hat_conditions(data: &HatCoverData) -> Result<HatConditionReport, LeightonError> {
    data.validate()?;
    let mut report = HatConditionReport::default();
    let mut push = |clause, location: String| report.violations.push(HatViolation { clause, location });
    for v in &data.vertices {
        for (what, h) in [("Γ", &v.gamma), ("Γ'", &v.gamma_prime)] {
            if !acts_freely(&v.space, h)? {
                push(HatClause::Freeness, format!("{} {what}", v.name));
            }
        }
    }
    for v in &data.vertices {
        let both = v.gamma.intersection(&v.gamma_prime)?;
        if !v.q_hat.is_subgroup_of(&both)? {
            push(HatClause::VertexSpaceCommonCovers, v.name.clone());
        }
    }
    for v in &data.vertices {
        if !v.q.is_normal(&v.q_hat)? {
            push(HatClause::Equivariance, v.name.clone());
        }
    }
    for (i, e) in data.edges.iter().enumerate() {
        let mut sides = Vec::new();
        for d in [2 * i, 2 * i + 1] {
            let (_, end, _) = data.side(d);
            let en = data.entries(end)?.into_iter().find(|en| en.dart == d).expect("every dart has an entry");
            sides.push(glued_image(&data.vertices[end], &en)?);
        }
        if sides[0].0 != sides[1].0 || !sides[0].1 || !sides[1].1 {
            push(HatClause::GluingCondition, e.name.clone());
        }
    }
    Ok(report)
}

/// `X → X/H` for `H` acting without inversions.
fn orbit_quotient(x: &SerreGraph, h: &PermGroup) -> Result<GraphMorphism, LeightonError> {
    let n = x.num_vertices();
    let mut class = vec![usize::MAX; num_points(x)];
    let mut vnames = Vec::new();
    let mut dreps = Vec::new();
    for p in 0..num_points(x) {
        if class[p] != usize::MAX {
            continue;
        }
        let id = if p < n { vnames.len() } else { dreps.len() };
        if p < n {
            vnames.push(format!("[{}]", x.vertex_name(p)));
        } else {
            dreps.push(p - n);
        }
        for q in h.orbit(p) {
            class[q] = id;
        }
    }
    let dclass = |d: usize| class[n + d];
    if let Some(d) = (0..x.num_darts()).find(|&d| dclass(d) == dclass(x.bar(d))) {
        return Err(LeightonError::InvalidHatData(format!("a group element inverts dart {}", x.dart_name(d))));
    }
    let q = SerreGraph::from_parts(
        vnames,
        dreps.iter().map(|&d| format!("[{}]", x.dart_name(d))).collect(),
        dreps.iter().map(|&d| dclass(x.bar(d))).collect(),
        dreps.iter().map(|&d| class[x.iota(d)]).collect(),
        dreps.iter().map(|&d| class[x.tau(d)]).collect(),
    )?;
    let vmap = class[..n].to_vec();
    let dmap = (0..x.num_darts()).map(dclass).collect();
    Ok(GraphMorphism::new(x.clone(), q, vmap, dmap)?)
}

/// The map `A → B` with `pb = m ∘ pa`, read off through representatives.
fn descend(pa: &GraphMorphism, pb: &GraphMorphism, what: &str) -> Result<GraphMorphism, LeightonError> {
    let mut vmap = vec![usize::MAX; pa.target.num_vertices()];
    let mut dmap = vec![usize::MAX; pa.target.num_darts()];
    for (slots, from, to) in [(&mut vmap, &pa.vmap, &pb.vmap), (&mut dmap, &pa.dmap, &pb.dmap)] {
        for (x, &a) in from.iter().enumerate() {
            if slots[a] != usize::MAX && slots[a] != to[x] {
                return Err(LeightonError::InvalidHatData(format!("{what} is not well defined")));
            }
            slots[a] = to[x];
        }
    }
    Ok(GraphMorphism::new(pa.target.clone(), pb.target.clone(), vmap, dmap)?)
}

/// `X_v → X_v/H` followed by `[x] ↦ [m(x)]` on points, as a map out of `X_e/K`.
fn descend_points(
    pe: &GraphMorphism,
    map: &[usize],
    pv: &GraphMorphism,
    what: &str,
) -> Result<GraphMorphism, LeightonError> {
    let (ne, nv) = (pe.source.num_vertices(), pv.source.num_vertices());
    let through = GraphMorphism {
        source: pe.source.clone(),
        target: pv.target.clone(),
        vmap: (0..ne).map(|x| pv.vmap[map[x]]).collect(),
        dmap: (0..pe.source.num_darts()).map(|d| pv.dmap[map[ne + d] - nv]).collect(),
    };
    descend(pe, &through, what)
}

fn deck_order(cover: &GraphMorphism) -> Result<usize, LeightonError> {
    let c = Coloring {
        vertex: cover.vmap.iter().map(|&v| v as u32).collect(),
        dart: cover.dmap.iter().map(|&d| d as u32).collect(),
    };
    Ok(automorphism_group(&cover.source, Some(&c))?.order()?)
}

#[derive(Debug, Clone)]
pub struct HatVertexPiece {
    /// `X̂_v = X_v/Q̂_v`.
    pub space: SerreGraph,
    pub projection: GraphMorphism,
    /// `X_v → X_v/Γ_v` and `X_v → X_v/Γ'_v`.
    pub quotient: GraphMorphism,
    pub quotient_prime: GraphMorphism,
    /// `X̂_v → X_v/Γ_v` and `X̂_v → X_v/Γ'_v`.
    pub cover: GraphMorphism,
    pub cover_prime: GraphMorphism,
    pub deck_order: usize,
    pub deck_order_prime: usize,
    /// `[Γ_v : Q̂_v]` and `[Γ'_v : Q̂_v]`.
    pub index: usize,
    pub index_prime: usize,
}

impl HatVertexPiece {
    /// Both covers are regular of the expected degree.
    pub fn is_regular(&self) -> bool {
        let ok = |c: &GraphMorphism, deck: usize, index: usize| {
            let r = is_covering(c);
            r.is_covering && r.degree == Some(index) && deck == index
        };
        ok(&self.cover, self.deck_order, self.index) && ok(&self.cover_prime, self.deck_order_prime, self.index_prime)
    }
}

#[derive(Debug, Clone)]
pub struct HatEdgePiece {
    /// `Q̂_e = F(Q̂_v ∩ Q_v^e)`.
    pub q_hat: PermGroup,
    /// `X̂_e = X_e/Q̂_e`.
    pub space: SerreGraph,
    pub projection: GraphMorphism,
    pub embed_tail: GraphMorphism,
    pub embed_head: GraphMorphism,
}

#[derive(Debug, Clone)]
pub struct HatGluing {
    pub vertices: Vec<HatVertexPiece>,
    pub edges: Vec<HatEdgePiece>,
    pub report: HatConditionReport,
}

fn is_injective(f: &GraphMorphism) -> bool {
    let distinct = |m: &[usize]| m.iter().collect::<HashSet<_>>().len() == m.len();
    distinct(&f.vmap) && distinct(&f.dmap)
}

/// Checks the conditions, then builds `X̂_v`, `X̂_e`, the embeddings, and the
/// two regular covers at every vertex.
pub fn verify_and_glue_hat(data: &HatCoverData) -> Result<HatGluing, LeightonError> {
    let report = check_hat_conditions(data)?;
    if let Some(e) = report.first_error() {
        return Err(e);
    }
    let mut vertices = Vec::new();
    for v in &data.vertices {
        let projection = orbit_quotient(&v.space, &v.q_hat)?;
        let quotient = orbit_quotient(&v.space, &v.gamma)?;
        let quotient_prime = orbit_quotient(&v.space, &v.gamma_prime)?;
        let cover = descend(&projection, &quotient, "cover of X/Γ")?;
        let cover_prime = descend(&projection, &quotient_prime, "cover of X/Γ'")?;
        vertices.push(HatVertexPiece {
            space: projection.target.clone(),
            deck_order: deck_order(&cover)?,
            deck_order_prime: deck_order(&cover_prime)?,
            index: v.gamma.index(&v.q_hat)?,
            index_prime: v.gamma_prime.index(&v.q_hat)?,
            projection,
            quotient,
            quotient_prime,
            cover,
            cover_prime,
        });
    }
    let mut edges = Vec::new();
    for (i, e) in data.edges.iter().enumerate() {
        let head = data.entries(e.head)?.into_iter().find(|en| en.dart == 2 * i).expect("entry");
        let tail = data.entries(e.tail)?.into_iter().find(|en| en.dart == 2 * i + 1).expect("entry");
        let (image, _) = glued_image(&data.vertices[e.head], &head)?;
        let q_hat = PermGroup::from_elements(num_points(&e.space), &image.into_iter().collect::<Vec<_>>(), e.q.bound())?;
        let projection = orbit_quotient(&e.space, &q_hat)?;
        let embed_head = descend_points(&projection, &head.map, &vertices[e.head].projection, "embedding")?;
        let embed_tail = descend_points(&projection, &tail.map, &vertices[e.tail].projection, "embedding")?;
        for f in [&embed_head, &embed_tail] {
            if !is_injective(f) {
                return Err(LeightonError::GluingMismatch(e.name.clone()));
            }
        }
        edges.push(HatEdgePiece { q_hat, space: projection.target.clone(), projection, embed_tail, embed_head });
    }
    Ok(HatGluing { vertices, edges, report })
}

/// Fiber product check at one interior vertex of the ball.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallCheck {
    pub vertex: usize,
    pub gamma: FiberProductReport,
    pub gamma_prime: FiberProductReport,
}

#[derive(Debug, Clone)]
pub struct HatBall {
    pub gos: GraphOfSpaces,
    /// Vertex of `Λ` under each ball vertex.
    pub kind: Vec<usize>,
    pub depth: Vec<usize>,
    /// Ball vertices at distance `r`, whose links are cut off.
    pub boundary: Vec<bool>,
    pub checks: Vec<BallCheck>,
}

impl HatBall {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.gamma.holds && c.gamma_prime.holds)
    }
}

/// Orbit number of every entry under `h`.
fn entry_orbits(entries: &[Entry], h: &PermGroup) -> Result<Vec<usize>, LeightonError> {
    let by_image: HashMap<&[usize], usize> = entries.iter().enumerate().map(|(k, e)| (e.image.as_slice(), k)).collect();
    let mut orbit = vec![usize::MAX; entries.len()];
    let mut next = 0;
    for k in 0..entries.len() {
        if orbit[k] != usize::MAX {
            continue;
        }
        for g in h.elements()?.iter() {
            orbit[by_image[entries[k].moved_by(g).as_slice()]] = next;
        }
        next += 1;
    }
    Ok(orbit)
}

/// The radius-`r` ball of `S` around the first vertex of `Λ`: one edge per
/// `Q̂_v`-orbit in every link, a child entering through the untranslated
/// marked image of the reverse dart.
pub fn assemble_hat_ball(data: &HatCoverData, r: usize) -> Result<HatBall, LeightonError> {
    let glue = verify_and_glue_hat(data)?;
    let lam = data.quotient_graph();
    let n = data.vertices.len();
    let entries: Vec<Vec<Entry>> = (0..n).map(|v| data.entries(v)).collect::<Result<_, _>>()?;
    let hat_orbits: Vec<Vec<usize>> =
        (0..n).map(|v| entry_orbits(&entries[v], &data.vertices[v].q_hat)).collect::<Result<_, _>>()?;

    let mut b = GraphBuilder::new();
    let mut kind = vec![0];
    let mut depth = vec![0];
    // entry used by every ball dart at its end
    let mut dart_entry: Vec<usize> = Vec::new();
    let mut parent_orbit: Vec<Option<usize>> = vec![None];
    b.add_vertex(format!("{}@0", data.vertices[0].name));
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        if depth[s] == r {
            continue;
        }
        let v = kind[s];
        let mut done = HashSet::new();
        for (k, en) in entries[v].iter().enumerate() {
            let o = hat_orbits[v][k];
            if Some(o) == parent_orbit[s] || !done.insert(o) {
                continue;
            }
            let back = lam.bar(en.dart);
            let u = lam.tau(back);
            let kc = entries[u].iter().position(|x| x.dart == back).expect("every dart has an entry");
            let c = kind.len();
            kind.push(u);
            depth.push(depth[s] + 1);
            parent_orbit.push(Some(hat_orbits[u][kc]));
            b.add_vertex(format!("{}@{c}", data.vertices[u].name));
            // dart s → c ends at the child, its reverse at s
            b.add_edge(s, c);
            dart_entry.extend([kc, k]);
            queue.push_back(c);
        }
    }
    let base = b.build();
    let vertex_spaces: Vec<SerreGraph> = kind.iter().map(|&v| glue.vertices[v].space.clone()).collect();
    let edge_of = |d: DartId| entries[kind[base.tau(d)]][dart_entry[d]].dart / 2;
    let edge_spaces: Vec<SerreGraph> = base.edge_reps().iter().map(|&d| glue.edges[edge_of(d)].space.clone()).collect();
    let mut attach = Vec::new();
    for d in 0..base.num_darts() {
        let v = kind[base.tau(d)];
        let en = &entries[v][dart_entry[d]];
        let m = descend_points(&glue.edges[en.dart / 2].projection, &en.map, &glue.vertices[v].projection, "attaching map")?;
        attach.push(PieceMap { vmap: m.vmap, dmap: m.dmap });
    }
    let gos = GraphOfSpaces::new(base.clone(), vertex_spaces, edge_spaces, attach)?;

    let mut checks = Vec::new();
    for s in 0..kind.len() {
        if depth[s] >= r {
            continue;
        }
        let v = kind[s];
        let hv = &data.vertices[v];
        let piece = &glue.vertices[v];
        let mut reports = Vec::new();
        for (gamma, quotient, cover) in
            [(&hv.gamma, &piece.quotient, &piece.cover), (&hv.gamma_prime, &piece.quotient_prime, &piece.cover_prime)]
        {
            let incoming: Vec<DartId> = base.link(s).to_vec();
            reports.push(local_fiber_product(data, &glue, &gos, &entries[v], &incoming, &dart_entry, gamma, quotient, cover)?);
        }
        let gamma_prime = reports.pop().expect("two reports");
        let gamma = reports.pop().expect("two reports");
        checks.push(BallCheck { vertex: s, gamma, gamma_prime });
    }
    let boundary = depth.iter().map(|&d| d == r).collect();
    Ok(HatBall { gos, kind, depth, boundary, checks })
}

/// The square `⊔ X̂_ê → X̂_v` over `⊔ X_e/Γ_e → X_v/Γ_v` at one ball vertex.
#[allow(clippy::too_many_arguments)]
fn local_fiber_product(
    data: &HatCoverData,
    glue: &HatGluing,
    gos: &GraphOfSpaces,
    entries: &[Entry],
    incoming: &[DartId],
    dart_entry: &[usize],
    gamma: &PermGroup,
    quotient: &GraphMorphism,
    cover: &GraphMorphism,
) -> Result<FiberProductReport, LeightonError> {
    let orbit = entry_orbits(entries, gamma)?;
    let reps: Vec<usize> = (0..entries.len()).filter(|&k| orbit[..k].iter().all(|&o| o != orbit[k])).collect();
    // one quotient X_e/Γ_e per Γ_v-orbit of the link
    let mut parts = Vec::new();
    let mut down = Vec::new();
    for &k in &reps {
        let en = &entries[k];
        let xe = &data.edges[en.dart / 2].space;
        let stab: Vec<Perm> = gamma.elements()?.iter().filter_map(|g| en.restrict(g)).collect();
        let h = PermGroup::from_elements(num_points(xe), &stab, gamma.bound())?;
        let p = orbit_quotient(xe, &h)?;
        down.push(descend_points(&p, &en.map, quotient, "edge map of the quotient")?);
        parts.push(p);
    }
    let a1_parts: Vec<&SerreGraph> = parts.iter().map(|p| &p.target).collect();
    let (a1, a1_off) = SerreGraph::disjoint_union(&a1_parts);
    let mut f1 = GraphMorphism {
        source: a1.clone(),
        target: cover.target.clone(),
        vmap: vec![0; a1.num_vertices()],
        dmap: vec![0; a1.num_darts()],
    };
    for (i, m) in down.iter().enumerate() {
        let (vo, dof) = a1_off[i];
        for (x, &y) in m.vmap.iter().enumerate() {
            f1.vmap[vo + x] = y;
        }
        for (x, &y) in m.dmap.iter().enumerate() {
            f1.dmap[dof + x] = y;
        }
    }

    let c_parts: Vec<&SerreGraph> = incoming.iter().map(|&d| gos.edge_space_of(d)).collect();
    let (c, c_off) = SerreGraph::disjoint_union(&c_parts);
    let mut p1 = GraphMorphism { source: c.clone(), target: a1.clone(), vmap: vec![0; c.num_vertices()], dmap: vec![0; c.num_darts()] };
    let mut p2 = GraphMorphism {
        source: c.clone(),
        target: cover.source.clone(),
        vmap: vec![0; c.num_vertices()],
        dmap: vec![0; c.num_darts()],
    };
    for (i, &d) in incoming.iter().enumerate() {
        let (vo, dof) = c_off[i];
        let phi = gos.attach(d);
        for (x, &y) in phi.vmap.iter().enumerate() {
            p2.vmap[vo + x] = y;
        }
        for (x, &y) in phi.dmap.iter().enumerate() {
            p2.dmap[dof + x] = y;
        }
        // move the entry onto its orbit representative by some g ∈ Γ_v
        let k = dart_entry[d];
        let en = &entries[k];
        let j = reps.iter().position(|&j| orbit[j] == orbit[k]).expect("orbit has a representative");
        let rep = &entries[reps[j]];
        let g = gamma
            .elements()?
            .iter()
            .find(|g| rep.moved_by(g) == en.image)
            .cloned()
            .expect("same orbit");
        let ginv = g.inverse();
        let back: HashMap<usize, usize> = rep.map.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let twist: Vec<usize> = en.map.iter().map(|&x| back[&ginv.apply(x)]).collect();
        let edge = &glue.edges[en.dart / 2];
        let xe = &data.edges[en.dart / 2].space;
        let ne = xe.num_vertices();
        let (ao, adof) = a1_off[j];
        // X̂_e → X_e/Γ_e through representatives
        let through = GraphMorphism {
            source: xe.clone(),
            target: a1.clone(),
            vmap: (0..ne).map(|x| ao + parts[j].vmap[twist[x]]).collect(),
            dmap: (0..xe.num_darts()).map(|x| adof + parts[j].dmap[twist[ne + x] - ne]).collect(),
        };
        let m = descend(&edge.projection, &through, "edge map into the quotient")?;
        for (x, &y) in m.vmap.iter().enumerate() {
            p1.vmap[vo + x] = y;
        }
        for (x, &y) in m.dmap.iter().enumerate() {
            p1.dmap[dof + x] = y;
        }
    }
    let check = |f: &GraphMorphism| crate::graph::check_morphism(&f.source, &f.target, &f.vmap, &f.dmap);
    for f in [&p1, &p2, &f1] {
        check(f)?;
    }
    Ok(is_fiber_product_diagram(&p1, &p2, &f1, cover)?)
}

/// Every subgroup of a small group, trivial group first.
pub fn all_subgroups(g: &PermGroup) -> Result<Vec<PermGroup>, LeightonError> {
    const LIMIT: usize = 512;
    let els = g.elements()?;
    let n = els.len();
    if n > LIMIT {
        return Err(LeightonError::SearchBoundExceeded(format!("subgroup enumeration is limited to order {LIMIT}")));
    }
    let idx = |p: &Perm| els.position(p).expect("closed under products");
    let mul: Vec<Vec<usize>> = els.iter().map(|a| els.iter().map(|b| idx(&a.compose(b))).collect()).collect();
    let close = |mut set: Vec<bool>, gens: &[usize]| {
        let mut stack: Vec<usize> = (0..n).filter(|&i| set[i]).collect();
        while let Some(a) = stack.pop() {
            for &s in gens {
                let c = mul[a][s];
                if !set[c] {
                    set[c] = true;
                    stack.push(c);
                }
            }
        }
        set
    };
    let id = idx(&g.identity());
    let mut trivial = vec![false; n];
    trivial[id] = true;
    let mut found: Vec<(Vec<bool>, Vec<usize>)> = vec![(trivial.clone(), Vec::new())];
    let mut seen: HashSet<Vec<bool>> = HashSet::from([trivial]);
    let mut i = 0;
    while i < found.len() {
        let (set, gens) = found[i].clone();
        for x in 0..n {
            if set[x] {
                continue;
            }
            let mut gx = gens.clone();
            gx.push(x);
            let t = close(set.clone(), &gx);
            if seen.insert(t.clone()) {
                found.push((t, gx));
            }
        }
        i += 1;
    }
    found
        .into_iter()
        .map(|(set, _)| {
            let members: Vec<Perm> = (0..n).filter(|&i| set[i]).map(|i| els.as_slice()[i].clone()).collect();
            Ok(PermGroup::from_elements(g.degree(), &members, g.bound())?)
        })
        .collect()
}

/// Intersection of all subgroups of index at most `max_index`.
pub fn characteristic_core(g: &PermGroup, max_index: usize) -> Result<PermGroup, LeightonError> {
    let order = g.order()?;
    let mut core = g.clone();
    for h in all_subgroups(g)? {
        if order / h.order()? <= max_index {
            core = core.intersection(&h)?;
        }
    }
    Ok(core)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rotation by `k` of the `n`-cycle, as a permutation of its points.
    fn rotation(x: &SerreGraph, n: usize, k: usize) -> Perm {
        let aut = automorphism_group(x, None).unwrap();
        let el = aut.elements().unwrap();
        el.iter().find(|g| (0..n).all(|i| g.apply(i) == (i + k) % n)).cloned().unwrap()
    }

    fn cyclic(x: &SerreGraph, n: usize, k: usize) -> PermGroup {
        PermGroup::new(num_points(x), vec![rotation(x, n, k)]).unwrap()
    }

    /// Two `n`-cycles joined by an edge space of isolated points.
    fn instance(n: usize, dihedral: bool, steps: [usize; 3], tail: &[usize], head: &[usize]) -> HatCoverData {
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

    #[test]
    fn hexagon_with_rotations_of_order_three() {
        let data = instance(6, true, [2, 2, 2], &[0], &[0]);
        let g = verify_and_glue_hat(&data).unwrap();
        assert!(g.report.passed());
        let p = &g.vertices[0];
        assert_eq!((p.space.num_vertices(), p.space.num_edges()), (2, 2));
        assert_eq!(p.index, 1);
        assert!(p.is_regular());
        let ball = assemble_hat_ball(&data, 1).unwrap();
        // six marked points at each vertex, two orbits of rotations by 2
        assert_eq!(ball.gos.base().num_vertices(), 3);
        assert!(ball.passed());
    }

    #[test]
    fn trivial_hat_groups() {
        let data = instance(4, true, [1, 1, 4], &[0], &[0]);
        let g = verify_and_glue_hat(&data).unwrap();
        let x = &data.vertices[0].space;
        let sp = &g.vertices[0].space;
        assert_eq!(sp.num_vertices(), 4);
        assert!((0..x.num_darts()).all(|d| sp.tau(d) == x.tau(d) && sp.bar(d) == x.bar(d)));
        assert_eq!(g.vertices[0].deck_order, 4);
        assert_eq!(g.edges[0].embed_head.vmap, vec![0]);
        assert!(g.vertices.iter().all(|p| p.is_regular()));
        assert_eq!(assemble_hat_ball(&data, 0).unwrap().gos.base().num_vertices(), 1);
    }

    #[test]
    fn nontrivial_gluing() {
        let data = instance(12, false, [1, 3, 6], &[0, 3, 6, 9], &[0, 3, 6, 9]);
        let g = verify_and_glue_hat(&data).unwrap();
        assert_eq!(g.edges[0].q_hat.order().unwrap(), 2);
        assert_eq!(g.edges[0].space.num_vertices(), 2);
        assert_eq!((g.vertices[0].deck_order, g.vertices[0].deck_order_prime), (6, 2));
        let ball = assemble_hat_ball(&data, 2).unwrap();
        assert!(ball.passed());
        assert_eq!(ball.checks.len(), 1 + 3);

        let swapped = instance(12, false, [1, 3, 6], &[0, 3, 6, 9], &[0, 6, 3, 9]);
        assert_eq!(verify_and_glue_hat(&swapped).unwrap_err(), LeightonError::GluingMismatch("e".into()));
        let mut trivial = data.clone();
        trivial.vertices[0].q_hat = PermGroup::trivial(num_points(&trivial.vertices[0].space));
        assert_eq!(verify_and_glue_hat(&trivial).unwrap_err(), LeightonError::GluingMismatch("e".into()));
    }

    #[test]
    fn clause_failures() {
        let x = SerreGraph::cycle(6);
        let mut data = instance(6, true, [1, 2, 2], &[0], &[0]);
        data.vertices[1].gamma = automorphism_group(&x, None).unwrap();
        assert!(matches!(verify_and_glue_hat(&data), Err(LeightonError::NotFree { .. })));

        let mut data = instance(6, true, [2, 2, 1], &[0], &[0]);
        data.vertices[0].q_hat = cyclic(&x, 6, 1);
        assert_eq!(verify_and_glue_hat(&data).unwrap_err(), LeightonError::CommonCoverViolated("u".into()));

        // a reflection subgroup inside Γ is not normal in the dihedral group
        let aut = automorphism_group(&x, None).unwrap();
        let refl = aut.elements().unwrap().iter().find(|g| g.apply(0) == 0 && !g.is_identity()).cloned().unwrap();
        let mut data = instance(6, true, [1, 1, 1], &[0], &[0]);
        let r = PermGroup::new(num_points(&x), vec![refl]).unwrap();
        for v in &mut data.vertices {
            v.gamma = aut.clone();
            v.gamma_prime = aut.clone();
            v.q_hat = r.clone();
        }
        let report = check_hat_conditions(&data).unwrap();
        let clauses: Vec<HatClause> = report.violations.iter().map(|v| v.clause).collect();
        assert!(clauses.contains(&HatClause::Freeness));
        assert!(clauses.contains(&HatClause::Equivariance));

        let overlapping = instance(6, true, [2, 2, 2], &[0, 1], &[0, 3]);
        assert!(matches!(verify_and_glue_hat(&overlapping), Err(LeightonError::InvalidHatData(_))));
    }

    #[test]
    fn subgroups() {
        let s3 = PermGroup::symmetric(3);
        assert_eq!(all_subgroups(&s3).unwrap().len(), 6);
        assert_eq!(characteristic_core(&s3, 2).unwrap().order().unwrap(), 3);
        assert_eq!(characteristic_core(&s3, 3).unwrap().order().unwrap(), 1);
        let c6 = PermGroup::new(6, vec![Perm::from_cycles(6, &[vec![0, 1, 2, 3, 4, 5]]).unwrap()]).unwrap();
        assert_eq!(all_subgroups(&c6).unwrap().len(), 4);
        assert_eq!(characteristic_core(&c6, 2).unwrap().order().unwrap(), 3);
        assert_eq!(all_subgroups(&PermGroup::symmetric(4)).unwrap().len(), 30);
    }
}
