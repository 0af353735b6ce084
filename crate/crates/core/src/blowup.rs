//! Blowups of finite group actions on finite trees.
//!
//! Vertices of the blowup are pairs `(gK, w)` with `w` running over orbit
//! representatives of vertices and edges of the tree. Type I edges stay inside a
//! fiber, type II edges join a vertex fiber to an adjacent edge fiber.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::action::{graph_perm, ActionError, GroupAction};
use crate::graph::{
    barycentric_subdivision, DartId, GraphBuilder, GraphError, PartitionProjection,
    SerreGraph, Subdivision, SubdivisionVertex, VertexId, VertexPartition,
};
use crate::group::{GroupError, PermGroup};
use crate::perm::Perm;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlowupError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("the graph is not a tree")]
    NotATree,
    #[error("invalid orbit representatives: {0}")]
    OrbitRepsInvalid(String),
    #[error("{0} is not an element of the required group")]
    NotInGroup(String),
    #[error("subgroup family is not equivariant at {0:?}")]
    NotEquivariantFamily(TreeCell),
    #[error("subgroup at {0:?} is not normal in its stabilizer")]
    NotNormal(TreeCell),
    #[error("subgroup containment fails at edge {0}")]
    ContainmentViolated(DartId),
}

/// A vertex, or a geometric edge given by either of its darts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeCell {
    Vertex(VertexId),
    Edge(DartId),
}

impl TreeCell {
    /// Edge cells named by their lesser dart.
    pub fn normalized(self, t: &SerreGraph) -> TreeCell {
        match self {
            TreeCell::Edge(d) => TreeCell::Edge(d.min(t.bar(d))),
            v => v,
        }
    }

    fn name(self, t: &SerreGraph) -> String {
        match self {
            TreeCell::Vertex(v) => t.vertex_name(v).to_string(),
            TreeCell::Edge(d) => t.dart_name(d).to_string(),
        }
    }
}

fn act_cell(a: &GroupAction, g: &Perm, c: TreeCell) -> TreeCell {
    match c {
        TreeCell::Vertex(v) => TreeCell::Vertex(a.act_vertex(g, v)),
        TreeCell::Edge(d) => TreeCell::Edge(a.act_dart(g, d)).normalized(a.graph()),
    }
}

fn cell_stabilizer(a: &GroupAction, c: TreeCell) -> Result<PermGroup, GroupError> {
    match c {
        TreeCell::Vertex(v) => a.vertex_stabilizer(v),
        TreeCell::Edge(d) => a.edge_stabilizer(d),
    }
}

fn all_cells(t: &SerreGraph) -> Vec<TreeCell> {
    (0..t.num_vertices()).map(TreeCell::Vertex).chain(t.edge_reps().into_iter().map(TreeCell::Edge)).collect()
}

/// Least representative of every orbit of vertices and geometric edges.
pub fn orbit_representatives(a: &GroupAction) -> Result<Vec<TreeCell>, GroupError> {
    let el = a.group().elements()?;
    let mut seen = HashSet::new();
    let mut reps = Vec::new();
    for c in all_cells(a.graph()) {
        if seen.contains(&c) {
            continue;
        }
        reps.push(c);
        for g in el.iter() {
            seen.insert(act_cell(a, g, c));
        }
    }
    Ok(reps)
}

#[derive(Debug, Clone)]
pub struct BlowupInput {
    /// `G` acting on the tree `T`.
    pub action: GroupAction,
    pub omega0: Vec<TreeCell>,
    pub k: PermGroup,
    /// One symmetric list `S_w` per entry of `omega0`.
    pub s: Vec<Vec<Perm>>,
    pub f: Vec<Perm>,
}

impl BlowupInput {
    /// Orbit representatives chosen automatically, `S_w` and `F` left empty.
    pub fn minimal(action: GroupAction, k: PermGroup) -> Result<Self, BlowupError> {
        let omega0 = orbit_representatives(&action)?;
        let s = vec![Vec::new(); omega0.len()];
        Ok(BlowupInput { action, omega0, k, s, f: Vec::new() })
    }
}

/// What [`normalize_input`] changed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NormalizationReport {
    pub k_replaced: bool,
    /// Elements appended to each `S_w`.
    pub added_s: Vec<Vec<Perm>>,
    pub added_f: Vec<Perm>,
}

impl NormalizationReport {
    pub fn is_unchanged(&self) -> bool {
        !self.k_replaced && self.added_s.iter().all(Vec::is_empty) && self.added_f.is_empty()
    }
}

fn push_symmetric(list: &mut Vec<Perm>, added: &mut Vec<Perm>, g: &Perm) {
    for x in [g.clone(), g.inverse()] {
        if !list.contains(&x) {
            list.push(x.clone());
            added.push(x);
        }
    }
}

/// Replaces `K` by `∩ (K ∩ G_w)` and completes `S_w` and `F` greedily, in
/// element order.
pub fn normalize_input(raw: &BlowupInput) -> Result<(BlowupInput, NormalizationReport), BlowupError> {
    let a = &raw.action;
    let t = a.graph();
    if !t.is_tree() {
        return Err(BlowupError::NotATree);
    }
    let g = a.group();
    if !raw.k.is_subgroup_of(g)? {
        return Err(BlowupError::NotInGroup("a generator of K".into()));
    }
    let omega0: Vec<TreeCell> = raw.omega0.iter().map(|c| c.normalized(t)).collect();
    check_orbit_reps(a, &omega0)?;
    if raw.s.len() != omega0.len() {
        return Err(BlowupError::OrbitRepsInvalid(format!("{} generator lists for {} representatives", raw.s.len(), omega0.len())));
    }
    let stabs: Vec<PermGroup> = omega0.iter().map(|&w| cell_stabilizer(a, w)).collect::<Result<_, _>>()?;

    let mut k = raw.k.clone();
    for st in &stabs {
        k = k.intersection(st)?;
    }
    let mut report = NormalizationReport { k_replaced: k != raw.k, ..Default::default() };

    let el = g.elements()?;
    let mut s_out = Vec::with_capacity(omega0.len());
    for (i, st) in stabs.iter().enumerate() {
        let mut s = Vec::new();
        let mut added = Vec::new();
        for x in &raw.s[i] {
            if !st.contains(x)? {
                return Err(BlowupError::NotInGroup(format!("an element of S_{}", omega0[i].name(t))));
            }
            push_symmetric(&mut s, &mut Vec::new(), x);
        }
        added.extend(s.iter().filter(|x| !raw.s[i].contains(x)).cloned());
        loop {
            let gens: Vec<Perm> = s.iter().chain(k.generators()).cloned().collect();
            let h = PermGroup::new(g.degree(), gens)?.with_bound(g.bound());
            if h.order()? == st.order()? {
                break;
            }
            let he = h.elements()?;
            let x = st.elements()?.iter().find(|x| !he.contains(x)).cloned().expect("proper subgroup");
            push_symmetric(&mut s, &mut added, &x);
        }
        s_out.push(s);
        report.added_s.push(added);
    }

    let mut f = Vec::new();
    for x in &raw.f {
        if !g.contains(x)? {
            return Err(BlowupError::NotInGroup("an element of F".into()));
        }
        push_symmetric(&mut f, &mut report.added_f, x);
    }
    report.added_f.retain(|x| !raw.f.contains(x));
    let covered = |f: &[Perm], c: TreeCell| f.iter().any(|x| omega0.iter().any(|&w| act_cell(a, x, w) == c));
    for c in closure(t, &omega0) {
        if !covered(&f, c) {
            let x = el
                .iter()
                .find(|x| omega0.iter().any(|&w| act_cell(a, x, w) == c))
                .cloned()
                .expect("representatives meet every orbit");
            push_symmetric(&mut f, &mut report.added_f, &x);
        }
    }
    let out = BlowupInput { action: a.clone(), omega0, k, s: s_out, f };
    Ok((out, report))
}

fn check_orbit_reps(a: &GroupAction, omega0: &[TreeCell]) -> Result<(), BlowupError> {
    let t = a.graph();
    let el = a.group().elements()?;
    let mut owner: HashMap<TreeCell, usize> = HashMap::new();
    for (i, &w) in omega0.iter().enumerate() {
        match w {
            TreeCell::Vertex(v) if v >= t.num_vertices() => {
                return Err(BlowupError::OrbitRepsInvalid(format!("vertex {v} out of range")))
            }
            TreeCell::Edge(d) if d >= t.num_darts() => return Err(BlowupError::OrbitRepsInvalid(format!("dart {d} out of range"))),
            _ => {}
        }
        for g in el.iter() {
            let c = act_cell(a, g, w);
            if let Some(&j) = owner.get(&c) {
                if j != i {
                    return Err(BlowupError::OrbitRepsInvalid(format!(
                        "{} and {} lie in one orbit",
                        omega0[j].name(t),
                        w.name(t)
                    )));
                }
            }
            owner.insert(c, i);
        }
    }
    if let Some(c) = all_cells(t).into_iter().find(|c| !owner.contains_key(c)) {
        return Err(BlowupError::OrbitRepsInvalid(format!("orbit of {} has no representative", c.name(t))));
    }
    Ok(())
}

/// Smallest subgraph containing the cells.
fn closure(t: &SerreGraph, cells: &[TreeCell]) -> BTreeSet<TreeCell> {
    let mut out = BTreeSet::new();
    for &c in cells {
        out.insert(c);
        if let TreeCell::Edge(d) = c {
            out.insert(TreeCell::Vertex(t.iota(d)));
            out.insert(TreeCell::Vertex(t.tau(d)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeType {
    /// Inside a fiber.
    I,
    /// Between a vertex fiber and an edge fiber.
    II,
}

#[derive(Debug, Clone)]
pub struct BlowupResult {
    pub graph: SerreGraph,
    pub subdivision: Subdivision,
    pub tree_action: GroupAction,
    pub action: GroupAction,
    pub omega0: Vec<TreeCell>,
    /// Index into `omega0` of every vertex.
    pub cell: Vec<usize>,
    pub p_vertex: Vec<VertexId>,
    /// Image of type II darts in the subdivision.
    pub p_dart: Vec<Option<DartId>>,
    pub edge_type: Vec<EdgeType>,
}

/// Left cosets `gK`, each named by its least element.
struct Cosets {
    reps: Vec<Perm>,
    of: HashMap<Perm, usize>,
}

fn left_cosets(g: &PermGroup, k: &PermGroup) -> Result<Cosets, GroupError> {
    let ke = k.elements()?;
    let mut reps = Vec::new();
    let mut of = HashMap::new();
    for x in g.elements()?.iter() {
        if of.contains_key(x) {
            continue;
        }
        let c = reps.len();
        reps.push(x.clone());
        for y in ke.iter() {
            of.insert(x.compose(y), c);
        }
    }
    Ok(Cosets { reps, of })
}

fn double_coset(k: &PermGroup, s: &[Perm]) -> Result<HashSet<Perm>, GroupError> {
    let ke = k.elements()?;
    let mut out = HashSet::new();
    for x in s {
        for a in ke.iter() {
            for b in ke.iter() {
                out.insert(a.compose(x).compose(b));
            }
        }
    }
    Ok(out)
}

/// Vertex image of a subdivision point under `g`.
fn act_subdivided(a: &GroupAction, sub: &Subdivision, back: &[SubdivisionVertex], g: &Perm, x: VertexId) -> VertexId {
    match back[x] {
        SubdivisionVertex::Vertex(v) => sub.vertex[a.act_vertex(g, v)],
        SubdivisionVertex::Midpoint(d) => sub.midpoint[a.act_dart(g, d)],
    }
}

fn subdivision_back(sub: &Subdivision) -> Vec<SubdivisionVertex> {
    (0..sub.graph.num_vertices()).map(|x| sub.original_of(x)).collect()
}

/// Builds `X` from normalized input. Vertex `(c, j)` (coset `c`, representative
/// `omega0[j]`) has index `c·|Ω₀| + j`.
pub fn construct_blowup(input: &BlowupInput) -> Result<BlowupResult, BlowupError> {
    let a = &input.action;
    let t = a.graph();
    let g = a.group();
    let n0 = input.omega0.len();
    let cosets = left_cosets(g, &input.k)?;
    let nc = cosets.reps.len();
    let sub = barycentric_subdivision(t);

    let mut b = GraphBuilder::new();
    for rep in 0..nc {
        for w in &input.omega0 {
            b.add_vertex(format!("{}K.{}", rep, w.name(t)));
        }
    }
    let idx = |c: usize, j: usize| c * n0 + j;
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (j, s) in input.s.iter().enumerate() {
        let d = double_coset(&input.k, s)?;
        for (c1, g1) in cosets.reps.iter().enumerate() {
            for x in &d {
                let c2 = cosets.of[&g1.compose(x)];
                if c1 != c2 {
                    edges.insert((idx(c1, j).min(idx(c2, j)), idx(c1, j).max(idx(c2, j))));
                }
            }
        }
    }
    let kfk = double_coset(&input.k, &input.f)?;
    for (j1, &w1) in input.omega0.iter().enumerate() {
        let TreeCell::Edge(e) = w1 else { continue };
        for (j2, &w2) in input.omega0.iter().enumerate() {
            let TreeCell::Vertex(v) = w2 else { continue };
            for (c1, g1) in cosets.reps.iter().enumerate() {
                let ge = a.act_dart(g1, e);
                for x in &kfk {
                    let g2 = g1.compose(x);
                    let gv = a.act_vertex(&g2, v);
                    if t.iota(ge) == gv || t.tau(ge) == gv {
                        let (p, q) = (idx(c1, j1), idx(cosets.of[&g2], j2));
                        edges.insert((p.min(q), p.max(q)));
                    }
                }
            }
        }
    }
    for &(p, q) in &edges {
        b.add_edge(p, q);
    }
    let x = b.build();

    let p_vertex: Vec<VertexId> = (0..x.num_vertices())
        .map(|i| {
            let (c, j) = (i / n0, i % n0);
            match input.omega0[j] {
                TreeCell::Vertex(v) => sub.vertex[a.act_vertex(&cosets.reps[c], v)],
                TreeCell::Edge(e) => sub.midpoint[a.act_dart(&cosets.reps[c], e)],
            }
        })
        .collect();
    let (p_dart, edge_type) = project_darts(&x, &sub, &p_vertex);

    let images: Vec<Perm> = g
        .generators()
        .iter()
        .map(|h| {
            let vmap: Vec<usize> =
                (0..x.num_vertices()).map(|i| idx(cosets.of[&h.compose(&cosets.reps[i / n0])], i % n0)).collect();
            let dmap: Vec<usize> = (0..x.num_darts())
                .map(|d| x.dart_between(vmap[x.iota(d)], vmap[x.tau(d)]).expect("left multiplication preserves edges"))
                .collect();
            graph_perm(&x, &vmap, &dmap).expect("left multiplication is bijective")
        })
        .collect();
    let action = GroupAction::new(g.clone(), x.clone(), images)?;
    Ok(BlowupResult {
        graph: x,
        subdivision: sub,
        tree_action: a.clone(),
        action,
        omega0: input.omega0.clone(),
        cell: (0..nc * n0).map(|i| i % n0).collect(),
        p_vertex,
        p_dart,
        edge_type,
    })
}

fn project_darts(x: &SerreGraph, sub: &Subdivision, p: &[VertexId]) -> (Vec<Option<DartId>>, Vec<EdgeType>) {
    (0..x.num_darts())
        .map(|d| {
            let (u, v) = (p[x.iota(d)], p[x.tau(d)]);
            if u == v {
                (None, EdgeType::I)
            } else {
                (sub.graph.dart_between(u, v), EdgeType::II)
            }
        })
        .unzip()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlowupFailure {
    Disconnected,
    /// A vertex of the subdivision with empty fiber.
    NotSurjective { point: VertexId },
    FiberDisconnected { point: VertexId },
    /// Dart whose endpoints are neither in one fiber nor in adjacent fibers.
    NotSimplicial { dart: DartId },
    /// Type I dart between fibers, or type II dart inside one.
    TypeMismatch { dart: DartId },
    /// `p(g·x) ≠ g·p(x)` for generator `generator` at vertex `vertex`.
    NotEquivariant { generator: usize, vertex: VertexId },
    NotEquivariantOnDart { generator: usize, dart: DartId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlowupReport {
    pub failures: Vec<BlowupFailure>,
}

impl BlowupReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks every blowup condition and collects all failures.
pub fn verify_blowup(r: &BlowupResult) -> BlowupReport {
    let x = &r.graph;
    let sub = &r.subdivision;
    let bt = &sub.graph;
    let mut failures = Vec::new();
    if !x.is_connected() {
        failures.push(BlowupFailure::Disconnected);
    }
    let mut fibers: Vec<Vec<VertexId>> = vec![Vec::new(); bt.num_vertices()];
    for (i, &y) in r.p_vertex.iter().enumerate() {
        fibers[y].push(i);
    }
    for (y, f) in fibers.iter().enumerate() {
        if f.is_empty() {
            failures.push(BlowupFailure::NotSurjective { point: y });
        } else if !x.is_connected_on(f) {
            failures.push(BlowupFailure::FiberDisconnected { point: y });
        }
    }
    for d in 0..x.num_darts() {
        let (u, v) = (r.p_vertex[x.iota(d)], r.p_vertex[x.tau(d)]);
        let expected = if u == v { EdgeType::I } else { EdgeType::II };
        if r.edge_type[d] != expected {
            failures.push(BlowupFailure::TypeMismatch { dart: d });
        }
        if u != v {
            let ok = r.p_dart[d].is_some_and(|e| bt.iota(e) == u && bt.tau(e) == v);
            if !ok {
                failures.push(BlowupFailure::NotSimplicial { dart: d });
            }
        }
    }
    let back = subdivision_back(sub);
    let ta = &r.tree_action;
    for (gi, g) in r.action.group().generators().iter().enumerate() {
        if let Some(v) = (0..x.num_vertices())
            .find(|&v| r.p_vertex[r.action.act_vertex(g, v)] != act_subdivided(ta, sub, &back, g, r.p_vertex[v]))
        {
            failures.push(BlowupFailure::NotEquivariant { generator: gi, vertex: v });
        }
        let act_half = |h: DartId| {
            let e = ta.act_dart(g, h / 2);
            2 * e + h % 2
        };
        if let Some(d) =
            (0..x.num_darts()).find(|&d| r.p_dart[d].is_some() && r.p_dart[r.action.act_dart(g, d)] != r.p_dart[d].map(act_half))
        {
            failures.push(BlowupFailure::NotEquivariantOnDart { generator: gi, dart: d });
        }
    }
    BlowupReport { failures }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefinedVertex {
    /// Vertex of the original tree.
    I(VertexId),
    /// `(v, K_v·e)`, named by the least dart of the orbit.
    II(VertexId, DartId),
}

#[derive(Debug, Clone)]
pub struct RefinedTree {
    pub tree: SerreGraph,
    pub action: GroupAction,
    pub kind: Vec<RefinedVertex>,
    /// Image of every vertex under collapsing the stars.
    pub collapse: Vec<VertexId>,
}

fn check_vertex_family(a: &GroupAction, kv: &[PermGroup]) -> Result<Vec<PermGroup>, BlowupError> {
    let t = a.graph();
    if kv.len() != t.num_vertices() {
        return Err(BlowupError::OrbitRepsInvalid(format!("{} subgroups for {} vertices", kv.len(), t.num_vertices())));
    }
    let mut stabs = Vec::with_capacity(kv.len());
    for (v, k) in kv.iter().enumerate() {
        let st = a.vertex_stabilizer(v)?;
        if !k.is_subgroup_of(&st)? || !st.is_normal(k)? {
            return Err(BlowupError::NotNormal(TreeCell::Vertex(v)));
        }
        stabs.push(st);
    }
    for g in a.group().generators() {
        for (v, k) in kv.iter().enumerate() {
            if k.conjugate(g) != kv[a.act_vertex(g, v)] {
                return Err(BlowupError::NotEquivariantFamily(TreeCell::Vertex(v)));
            }
        }
    }
    Ok(stabs)
}

/// Replaces every vertex `v` by the star on `v` and the `K_v`-orbits of `lk(v)`.
pub fn refine_tree(a: &GroupAction, kv: &[PermGroup]) -> Result<RefinedTree, BlowupError> {
    let t = a.graph();
    if !t.is_tree() {
        return Err(BlowupError::NotATree);
    }
    check_vertex_family(a, kv)?;
    let mut b = GraphBuilder::new();
    let mut kind = Vec::new();
    let mut collapse = Vec::new();
    for v in 0..t.num_vertices() {
        b.add_vertex(t.vertex_name(v));
        kind.push(RefinedVertex::I(v));
        collapse.push(v);
    }
    // orbit label of each dart e in lk(τ e) -> type II vertex index
    let mut type2 = vec![usize::MAX; t.num_darts()];
    for v in 0..t.num_vertices() {
        let gens: Vec<Perm> = kv[v].generators().to_vec();
        for &e in t.link(v) {
            if type2[e] != usize::MAX {
                continue;
            }
            let i = b.add_vertex(format!("({},{})", t.vertex_name(v), t.dart_name(e)));
            kind.push(RefinedVertex::II(v, e));
            collapse.push(v);
            let mut stack = vec![e];
            type2[e] = i;
            while let Some(x) = stack.pop() {
                for g in &gens {
                    let y = a.act_dart(g, x);
                    if type2[y] == usize::MAX {
                        type2[y] = i;
                        stack.push(y);
                    }
                }
            }
        }
    }
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for e in 0..t.num_darts() {
        edges.insert((t.tau(e), type2[e]));
    }
    for e in t.edge_reps() {
        let (p, q) = (type2[t.bar(e)], type2[e]);
        edges.insert((p.min(q), p.max(q)));
    }
    for &(p, q) in &edges {
        b.add_edge(p, q);
    }
    let tree = b.build();
    let images: Vec<Perm> = a
        .group()
        .generators()
        .iter()
        .map(|g| {
            let vmap: Vec<usize> = kind
                .iter()
                .map(|k| match *k {
                    RefinedVertex::I(v) => a.act_vertex(g, v),
                    RefinedVertex::II(_, e) => type2[a.act_dart(g, e)],
                })
                .collect();
            let dmap: Vec<usize> = (0..tree.num_darts())
                .map(|d| tree.dart_between(vmap[tree.iota(d)], vmap[tree.tau(d)]).expect("equivariant family"))
                .collect();
            graph_perm(&tree, &vmap, &dmap).expect("bijective on the refinement")
        })
        .collect();
    let action = GroupAction::new(a.group().clone(), tree.clone(), images)?;
    Ok(RefinedTree { tree, action, kind, collapse })
}

/// `K_e = K_ι(e) K_τ(e)` for every geometric edge, in `edge_reps` order.
pub fn product_family(a: &GroupAction, kv: &[PermGroup]) -> Result<Vec<PermGroup>, BlowupError> {
    let t = a.graph();
    t.edge_reps()
        .into_iter()
        .map(|e| {
            a.group()
                .product_set(&kv[t.iota(e)], &kv[t.tau(e)])
                .map_err(|err| match err {
                    GroupError::NotASubgroup(_) => BlowupError::ContainmentViolated(e),
                    other => other.into(),
                })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BlowupQuotient {
    pub result: BlowupResult,
    pub projection: PartitionProjection,
    /// First vertex `v` whose `K_v` moves something in the star of its fiber.
    pub star_witness: Option<VertexId>,
}

/// Quotient of a blowup by the `K_w`-orbits inside each fiber. `kv` is indexed
/// by tree vertices, `ke` by `edge_reps`; every `K_v` must lie in the `K_e` of
/// its incident edges.
pub fn blowup_imprimitivity_quotient(
    r: &BlowupResult,
    kv: &[PermGroup],
    ke: &[PermGroup],
) -> Result<BlowupQuotient, BlowupError> {
    let ta = &r.tree_action;
    let t = ta.graph();
    check_vertex_family(ta, kv)?;
    let reps = t.edge_reps();
    if ke.len() != reps.len() {
        return Err(BlowupError::OrbitRepsInvalid(format!("{} subgroups for {} edges", ke.len(), reps.len())));
    }
    let edge_ix: HashMap<DartId, usize> = reps.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let ix = |d: DartId| edge_ix[&d.min(t.bar(d))];
    for (i, &e) in reps.iter().enumerate() {
        let st = ta.edge_stabilizer(e)?;
        if !ke[i].is_subgroup_of(&st)? || !st.is_normal(&ke[i])? {
            return Err(BlowupError::NotNormal(TreeCell::Edge(e)));
        }
        if !kv[t.iota(e)].is_subgroup_of(&ke[i])? || !kv[t.tau(e)].is_subgroup_of(&ke[i])? {
            return Err(BlowupError::ContainmentViolated(e));
        }
        for g in ta.group().generators() {
            if ke[i].conjugate(g) != ke[ix(ta.act_dart(g, e))] {
                return Err(BlowupError::NotEquivariantFamily(TreeCell::Edge(e)));
            }
        }
    }
    let sub = &r.subdivision;
    let back = subdivision_back(sub);
    let x = &r.graph;
    // the group of each fiber, and its orbits on that fiber
    let mut label = vec![usize::MAX; x.num_vertices()];
    for v in 0..x.num_vertices() {
        if label[v] != usize::MAX {
            continue;
        }
        let k = match back[r.p_vertex[v]] {
            SubdivisionVertex::Vertex(w) => &kv[w],
            SubdivisionVertex::Midpoint(d) => &ke[ix(d)],
        };
        for w in r.action.vertex_orbit_under(k, v) {
            label[w] = v;
        }
    }
    let part = VertexPartition::from_labels(&label);
    let qa = crate::imprim::induced_quotient_action(&r.action, &part).map_err(|e| match e {
        crate::imprim::ImprimError::Group(g) => BlowupError::Group(g),
        crate::imprim::ImprimError::Action(a) => BlowupError::Action(a),
        crate::imprim::ImprimError::Graph(g) => BlowupError::Graph(g),
        other => BlowupError::NotEquivariantFamily(TreeCell::Vertex(match other {
            crate::imprim::ImprimError::NotInvariant { block, .. } => r.p_vertex[part.blocks()[block][0]],
            _ => 0,
        })),
    })?;
    let z = qa.graph.clone();
    let proj = qa.projection.clone();
    let p_vertex: Vec<VertexId> = part.blocks().iter().map(|b| r.p_vertex[b[0]]).collect();
    let cell: Vec<usize> = part.blocks().iter().map(|b| r.cell[b[0]]).collect();
    let (p_dart, edge_type) = project_darts(&z, sub, &p_vertex);
    let result = BlowupResult {
        graph: z.clone(),
        subdivision: sub.clone(),
        tree_action: ta.clone(),
        action: qa.action.clone(),
        omega0: r.omega0.clone(),
        cell,
        p_vertex,
        p_dart,
        edge_type,
    };
    let star_witness = (0..t.num_vertices()).find(|&v| {
        let centre = sub.vertex[v];
        let star: Vec<VertexId> =
            (0..z.num_vertices()).filter(|&i| {
                let y = result.p_vertex[i];
                y == centre || sub.graph.dart_between(y, centre).is_some()
            })
            .collect();
        kv[v].generators().iter().any(|g| {
            star.iter().any(|&i| result.action.act_vertex(g, i) != i)
                || (0..z.num_darts()).any(|d| {
                    star.contains(&z.iota(d)) && star.contains(&z.tau(d)) && result.action.act_dart(g, d) != d
                })
        })
    });
    Ok(BlowupQuotient { result, projection: proj, star_witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::num_points;
    use crate::aut::automorphism_group;
    use crate::graph::{quotient_by_partition, QuotientMode};

    fn edge() -> SerreGraph {
        SerreGraph::path(1)
    }

    /// `Z/2` swapping the two ends of a single edge.
    fn inversion() -> GroupAction {
        let t = edge();
        let flip = graph_perm(&t, &[1, 0], &[1, 0]).unwrap();
        let z2 = PermGroup::new(2, vec![Perm::from_cycles(2, &[vec![0, 1]]).unwrap()]).unwrap();
        GroupAction::new(z2, t, vec![flip]).unwrap()
    }

    fn trivially(g: PermGroup, t: SerreGraph) -> GroupAction {
        let id = Perm::identity(num_points(&t));
        let n = g.generators().len();
        GroupAction::new(g, t, vec![id; n]).unwrap()
    }

    fn build(a: GroupAction, k: PermGroup) -> BlowupResult {
        let (inp, _) = normalize_input(&BlowupInput::minimal(a, k).unwrap()).unwrap();
        construct_blowup(&inp).unwrap()
    }

    /// Oracle: the inversion blowup written out by hand.
    #[test]
    fn inversion_blowup_by_hand() {
        let a = inversion();
        let sigma = Perm::from_cycles(2, &[vec![0, 1]]).unwrap();
        let inp = BlowupInput {
            action: a.clone(),
            omega0: vec![TreeCell::Vertex(0), TreeCell::Edge(0)],
            k: PermGroup::trivial(2),
            s: vec![vec![], vec![sigma.clone()]],
            f: vec![Perm::identity(2), sigma],
        };
        let (n, rep) = normalize_input(&inp).unwrap();
        assert!(rep.is_unchanged());
        let r = construct_blowup(&n).unwrap();
        // vertices: (1,u)=0, (1,e)=1, (σ,u)=2, (σ,e)=3
        let x = &r.graph;
        assert_eq!(x.num_vertices(), 4);
        let mut expected = vec![(0, 1), (1, 2), (0, 3), (2, 3), (1, 3)];
        expected.sort();
        let mut got: Vec<(usize, usize)> =
            x.edge_reps().iter().map(|&d| (x.iota(d).min(x.tau(d)), x.iota(d).max(x.tau(d)))).collect();
        got.sort();
        assert_eq!(got, expected);
        let mid = r.subdivision.midpoint[0];
        let fiber: Vec<usize> = (0..4).filter(|&i| r.p_vertex[i] == mid).collect();
        assert_eq!(fiber, vec![1, 3]);
        let d = x.dart_between(1, 3).unwrap();
        assert_eq!(r.edge_type[d], EdgeType::I);
        assert!(x.is_connected());
        assert!(verify_blowup(&r).passed());
    }

    #[test]
    fn sym3_on_a_fixed_edge() {
        let a = trivially(PermGroup::symmetric(3), edge());
        let r = build(a, PermGroup::trivial(3));
        assert_eq!(r.graph.num_vertices(), 18);
        assert!(verify_blowup(&r).passed());
    }

    #[test]
    fn trivial_group_on_a_point() {
        let a = trivially(PermGroup::trivial(1), SerreGraph::from_edges(1, &[]));
        let r = build(a, PermGroup::trivial(1));
        assert_eq!(r.graph.num_vertices(), 1);
        assert_eq!(r.p_vertex, vec![0]);
        assert!(verify_blowup(&r).passed());
    }

    #[test]
    fn normalization() {
        // K = G with nontrivial stabilizers becomes the intersection of stabilizers
        let t = SerreGraph::star(3);
        let g = automorphism_group(&t, None).unwrap();
        let a = GroupAction::tautological(g.clone(), t).unwrap();
        let (n, rep) = normalize_input(&BlowupInput::minimal(a.clone(), g.clone()).unwrap()).unwrap();
        assert!(rep.k_replaced);
        let mut expect = g.clone();
        for &w in &n.omega0 {
            expect = expect.intersection(&cell_stabilizer(&a, w).unwrap()).unwrap();
        }
        assert_eq!(n.k, expect);
        // empty S_w completed to generate each stabilizer
        for (i, &w) in n.omega0.iter().enumerate() {
            let st = cell_stabilizer(&a, w).unwrap();
            let gens: Vec<Perm> = n.s[i].iter().chain(n.k.generators()).cloned().collect();
            assert_eq!(PermGroup::new(g.degree(), gens).unwrap().order().unwrap(), st.order().unwrap());
        }
        // a second pass changes nothing
        let (_, again) = normalize_input(&n).unwrap();
        assert!(again.is_unchanged());
    }

    #[test]
    fn input_errors() {
        let a = trivially(PermGroup::trivial(1), SerreGraph::cycle(3));
        assert_eq!(normalize_input(&BlowupInput::minimal(a, PermGroup::trivial(1)).unwrap()).unwrap_err(), BlowupError::NotATree);
        let a = inversion();
        let bad = BlowupInput {
            action: a,
            omega0: vec![TreeCell::Vertex(0), TreeCell::Vertex(1), TreeCell::Edge(0)],
            k: PermGroup::trivial(2),
            s: vec![vec![]; 3],
            f: vec![],
        };
        assert!(matches!(normalize_input(&bad), Err(BlowupError::OrbitRepsInvalid(_))));
    }

    #[test]
    fn verifier_catches_mutations() {
        // trivial group on an edge: X is the path u - e - v
        let a = trivially(PermGroup::trivial(1), edge());
        let r = build(a, PermGroup::trivial(1));
        assert_eq!(r.graph.num_vertices(), 3);
        let x = &r.graph;
        let keep: Vec<usize> = (0..x.num_darts()).filter(|&d| !(x.iota(d) == 1 && x.tau(d) == 2 || x.iota(d) == 2 && x.tau(d) == 1)).collect();
        let (cut, _, ds) = {
            let mut b = GraphBuilder::new();
            for v in 0..3 {
                b.add_vertex(x.vertex_name(v));
            }
            for &d in keep.iter().filter(|&&d| x.iota(d) < x.tau(d)) {
                b.add_edge(x.iota(d), x.tau(d));
            }
            let g = b.build();
            (g, (), keep)
        };
        let mut broken = r.clone();
        broken.action = trivially(PermGroup::trivial(1), cut.clone());
        broken.p_dart = ds.iter().map(|&d| r.p_dart[d]).collect();
        broken.edge_type = ds.iter().map(|&d| r.edge_type[d]).collect();
        broken.graph = cut;
        assert!(verify_blowup(&broken).failures.contains(&BlowupFailure::Disconnected));

        // perturbing p on one vertex breaks equivariance
        let mut s = automorphism_group(&SerreGraph::star(3), None).unwrap();
        s = s.with_bound(100);
        let a = GroupAction::tautological(s, SerreGraph::star(3)).unwrap();
        let mut r = build(a, PermGroup::trivial(num_points(&SerreGraph::star(3))));
        assert!(verify_blowup(&r).passed());
        let v = (0..r.graph.num_vertices()).find(|&v| r.p_vertex[v] == r.subdivision.vertex[0]).unwrap();
        r.p_vertex[v] = r.subdivision.vertex[1];
        let rep = verify_blowup(&r);
        assert!(rep.failures.iter().any(|f| matches!(f, BlowupFailure::NotEquivariant { .. })));
    }

    #[test]
    fn refine_single_edge() {
        let a = trivially(PermGroup::trivial(1), edge());
        let r = refine_tree(&a, &[PermGroup::trivial(1), PermGroup::trivial(1)]).unwrap();
        assert_eq!(r.tree.num_vertices(), 4);
        assert!(r.tree.is_tree());
        let degrees: Vec<usize> = (0..4).map(|v| r.tree.degree(v)).collect();
        assert_eq!(degrees, vec![1, 1, 2, 2]);
    }

    #[test]
    fn refine_star_merges_an_orbit() {
        // 3-star, centre 0; K_centre swaps leaves 1 and 2
        let t = SerreGraph::star(3);
        let full = automorphism_group(&t, None).unwrap();
        let a = GroupAction::tautological(full.clone(), t.clone()).unwrap();
        let swap = full.subgroup_where(|g| g.apply(3) == 3).unwrap();
        assert_eq!(swap.order().unwrap(), 2);
        // an equivariant family needs K_gv = g K_v g⁻¹; use the normal closure at the centre
        let mut kv = vec![PermGroup::trivial(full.degree()); 4];
        kv[0] = swap.clone();
        let err = refine_tree(&a, &kv).unwrap_err();
        assert!(matches!(err, BlowupError::NotNormal(_) | BlowupError::NotEquivariantFamily(_)));
        // with only the stabilizer of leaf 3 acting, K_centre is normal and equivariant
        let h = full.subgroup_where(|g| g.apply(3) == 3).unwrap();
        let a = GroupAction::tautological(h.clone(), t).unwrap();
        let mut kv = vec![PermGroup::trivial(h.degree()); 4];
        kv[0] = h;
        let r = refine_tree(&a, &kv).unwrap();
        assert!(r.tree.is_tree());
        let centre_type2 = r.kind.iter().filter(|k| matches!(k, RefinedVertex::II(0, _))).count();
        assert_eq!(centre_type2, 2);
        // collapsing the stars gives the original tree back
        let p = VertexPartition::from_labels(&r.collapse);
        let (q, _) = quotient_by_partition(&r.tree, &p, QuotientMode::Simple).unwrap();
        assert_eq!(q.num_vertices(), 4);
        assert!((1..4).all(|l| q.dart_between(p.block_of(0), p.block_of(l)).is_some()));
    }

    #[test]
    fn refine_point() {
        let a = trivially(PermGroup::trivial(1), SerreGraph::from_edges(1, &[]));
        let r = refine_tree(&a, &[PermGroup::trivial(1)]).unwrap();
        assert_eq!(r.tree.num_vertices(), 1);
    }

    #[test]
    fn quotients_of_the_inversion_blowup() {
        let r = build(inversion(), PermGroup::trivial(2));
        let triv = vec![PermGroup::trivial(2); 2];
        let q = blowup_imprimitivity_quotient(&r, &triv, &[PermGroup::trivial(2)]).unwrap();
        assert_eq!(q.result.graph.num_vertices(), r.graph.num_vertices());
        assert!(verify_blowup(&q.result).passed());

        let whole = r.tree_action.group().clone();
        let q = blowup_imprimitivity_quotient(&r, &triv, &[whole]).unwrap();
        let z = &q.result.graph;
        assert_eq!(z.num_vertices(), 3);
        assert!(z.is_tree() && z.num_edges() == 2);
        assert!(verify_blowup(&q.result).passed());
        assert_eq!(q.star_witness, None);
        // the projection commutes with p
        for v in 0..r.graph.num_vertices() {
            assert_eq!(q.result.p_vertex[q.projection.vertex[v]], r.p_vertex[v]);
        }
    }

    #[test]
    fn containment_is_checked() {
        // Sym3 acting trivially on a 2-path; the middle vertex gets K = G
        let g = PermGroup::symmetric(3);
        let a = trivially(g.clone(), SerreGraph::path(2));
        let r = build(a.clone(), PermGroup::trivial(g.degree()));
        let mut kv = vec![PermGroup::trivial(g.degree()); 3];
        kv[1] = g.clone();
        let ke = vec![PermGroup::trivial(g.degree()); 2];
        assert!(matches!(blowup_imprimitivity_quotient(&r, &kv, &ke), Err(BlowupError::ContainmentViolated(_))));
        let ke = product_family(&a, &kv).unwrap();
        let q = blowup_imprimitivity_quotient(&r, &kv, &ke).unwrap();
        assert!(verify_blowup(&q.result).passed());
        assert_eq!(q.star_witness, None);
        // fibers over the middle vertex and both midpoints collapse
        let sub = &q.result.subdivision;
        for y in [sub.vertex[1], sub.midpoint[0], sub.midpoint[2]] {
            assert_eq!(q.result.p_vertex.iter().filter(|&&p| p == y).count(), 1);
        }
    }
}
