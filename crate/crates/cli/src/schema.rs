//! JSON artifacts: reading with file/line context, resolving names to indices,
//! and writing graphs back out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use groupgraph::action::{graph_perm, num_points, GroupAction};
use groupgraph::aut::automorphism_group_bounded;
use groupgraph::blowup::{BlowupInput, TreeCell};
use groupgraph::gos::{GosMap, GosMorphism, GraphOfSpaces, PieceMap};
use groupgraph::graph::{GraphMorphism, RawDart, RawGraph, SerreGraph};
use groupgraph::group::PermGroup;
use groupgraph::leighton::{HatCoverData, HatEdge, HatVertex};
use groupgraph::perm::Perm;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Syntax { path: String, line: usize, column: usize, message: String },
    #[error("{path}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Invalid { path: String, line: Option<usize>, message: String },
}

/// A parsed JSON value together with the file text it came from.
#[derive(Debug, Clone)]
pub struct Doc {
    path: PathBuf,
    text: std::rc::Rc<str>,
    value: Value,
}

impl Doc {
    /// Error at the first line mentioning the first backquoted name in `message`.
    fn invalid(&self, message: impl Into<String>) -> InputError {
        let message = message.into();
        let line = message
            .split('`')
            .nth(1)
            .and_then(|name| {
                let quoted = format!("\"{name}\"");
                self.text.lines().position(|l| l.contains(&quoted))
            })
            .map(|i| i + 1);
        InputError::Invalid { path: self.path.display().to_string(), line, message }
    }

    fn typed<T: DeserializeOwned>(&self, kind: &str) -> Result<T, InputError> {
        match self.value.get("kind").and_then(Value::as_str) {
            Some(k) if k == kind => {}
            Some(k) => return Err(self.invalid(format!("expected kind `{kind}`, found `{k}`"))),
            None => return Err(self.invalid(format!("missing \"kind\" (expected `{kind}`)"))),
        }
        serde_json::from_value(self.value.clone()).map_err(|e| self.invalid(format!("{kind}: {e}")))
    }

    /// A nested artifact: a path relative to this file, or an inline object.
    fn child(&self, v: &Value) -> Result<Doc, InputError> {
        match v {
            Value::String(rel) => {
                let path = self.path.parent().unwrap_or(Path::new(".")).join(rel);
                read_doc(&path)
            }
            Value::Object(_) => Ok(Doc { path: self.path.clone(), text: self.text.clone(), value: v.clone() }),
            _ => Err(self.invalid("a reference must be a relative path or an inline object")),
        }
    }
}

pub fn read_doc(path: &Path) -> Result<Doc, InputError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| InputError::Read { path: shown.clone(), message: e.to_string() })?;
    let value = serde_json::from_str(&text).map_err(|e| InputError::Syntax {
        path: shown,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(Doc { path: path.to_path_buf(), text: text.into(), value })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    #[allow(dead_code)]
    kind: String,
    vertices: Vec<String>,
    darts: Vec<DartDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DartDoc {
    id: String,
    bar: String,
    from: String,
    to: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupDoc {
    #[allow(dead_code)]
    kind: String,
    degree: usize,
    generators: Vec<Value>,
}

/// Images of vertex and dart names.
#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct ElementMap {
    #[serde(default)]
    vertices: BTreeMap<String, String>,
    #[serde(default)]
    darts: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionDoc {
    #[allow(dead_code)]
    kind: String,
    graph: Value,
    group: Value,
    images: Option<Vec<ElementMap>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlowupDoc {
    #[allow(dead_code)]
    kind: String,
    action: Value,
    k: Option<Value>,
    omega0: Option<Vec<String>>,
    s: Option<Vec<Vec<Value>>>,
    f: Option<Vec<Value>>,
    vertex_subgroups: Option<BTreeMap<String, Value>>,
    edge_subgroups: Option<BTreeMap<String, Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GosDoc {
    #[allow(dead_code)]
    kind: String,
    base: Value,
    vertex_spaces: BTreeMap<String, Value>,
    edge_spaces: BTreeMap<String, Value>,
    attach: BTreeMap<String, ElementMap>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HatDoc {
    #[allow(dead_code)]
    kind: String,
    vertices: Vec<HatVertexDoc>,
    edges: Vec<HatEdgeDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HatVertexDoc {
    name: String,
    space: Value,
    q: Value,
    gamma: Value,
    gamma_prime: Value,
    q_hat: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HatEdgeDoc {
    name: String,
    space: Value,
    q: Value,
    tail: String,
    head: String,
    attach_tail: ElementMap,
    attach_head: ElementMap,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MorphismDoc {
    #[allow(dead_code)]
    kind: String,
    source: Value,
    target: Value,
    #[serde(default)]
    vertices: BTreeMap<String, String>,
    #[serde(default)]
    darts: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GosMorphismDoc {
    #[allow(dead_code)]
    kind: String,
    source: Value,
    target: Value,
    base: ElementMap,
    vertex_maps: BTreeMap<String, ElementMap>,
    edge_maps: BTreeMap<String, ElementMap>,
}

/// Resolves documents into library values, bounding every group.
pub struct Loader {
    pub element_bound: usize,
}

/// A blowup input file: the input proper and optional subgroup families.
pub struct BlowupSpec {
    pub input: BlowupInput,
    pub vertex_subgroups: Option<Vec<PermGroup>>,
    pub edge_subgroups: Option<Vec<PermGroup>>,
}

fn dart_of(g: &SerreGraph, name: &str, doc: &Doc) -> Result<usize, InputError> {
    g.dart_by_name(name).ok_or_else(|| doc.invalid(format!("unknown dart `{name}`")))
}

fn vertex_of(g: &SerreGraph, name: &str, doc: &Doc) -> Result<usize, InputError> {
    g.vertex_by_name(name).ok_or_else(|| doc.invalid(format!("unknown vertex `{name}`")))
}

/// Index tables of a name map; unlisted elements are fixed when `partial`.
fn resolve_map(
    m: &ElementMap,
    src: &SerreGraph,
    tgt: &SerreGraph,
    partial: bool,
    doc: &Doc,
) -> Result<PieceMap, InputError> {
    let mut vmap: Vec<Option<usize>> = vec![None; src.num_vertices()];
    for (a, b) in &m.vertices {
        vmap[vertex_of(src, a, doc)?] = Some(vertex_of(tgt, b, doc)?);
    }
    let mut dmap: Vec<Option<usize>> = vec![None; src.num_darts()];
    for (a, b) in &m.darts {
        dmap[dart_of(src, a, doc)?] = Some(dart_of(tgt, b, doc)?);
    }
    let fill = |xs: Vec<Option<usize>>, name: &dyn Fn(usize) -> String| -> Result<Vec<usize>, InputError> {
        xs.into_iter()
            .enumerate()
            .map(|(i, x)| match x {
                Some(y) => Ok(y),
                None if partial => Ok(i),
                None => Err(doc.invalid(format!("no image given for `{}`", name(i)))),
            })
            .collect()
    };
    Ok(PieceMap {
        vmap: fill(vmap, &|v| src.vertex_name(v).to_string())?,
        dmap: fill(dmap, &|d| src.dart_name(d).to_string())?,
    })
}

impl Loader {
    pub fn graph(&self, doc: &Doc) -> Result<SerreGraph, InputError> {
        let g: GraphDoc = doc.typed("serre-graph")?;
        let raw = RawGraph {
            vertices: g.vertices,
            darts: g.darts.into_iter().map(|d| RawDart { id: d.id, bar: d.bar, from: d.from, to: d.to }).collect(),
        };
        SerreGraph::from_raw(&raw).map_err(|e| doc.invalid(e.to_string()))
    }

    /// A group element: an image list, `{"cycles": …}`, or, when a graph is
    /// known, a map of vertex and dart names.
    fn element(&self, v: &Value, degree: usize, graph: Option<&SerreGraph>, doc: &Doc) -> Result<Perm, InputError> {
        let bad = || doc.invalid(format!("malformed permutation {v}"));
        if let Some(arr) = v.as_array() {
            let images: Vec<usize> = arr.iter().map(|x| x.as_u64().map(|x| x as usize)).collect::<Option<_>>().ok_or_else(bad)?;
            if images.len() != degree {
                return Err(doc.invalid(format!("permutation {v} does not have degree {degree}")));
            }
            return Perm::from_images(images).ok_or_else(bad);
        }
        if let Some(cycles) = v.get("cycles") {
            let cycles: Vec<Vec<usize>> = serde_json::from_value(cycles.clone()).map_err(|_| bad())?;
            return Perm::from_cycles(degree, &cycles).ok_or_else(bad);
        }
        match graph {
            Some(g) if v.is_object() => {
                if num_points(g) != degree {
                    return Err(doc.invalid(format!("graph has {} points, group has degree {degree}", num_points(g))));
                }
                let m: ElementMap = serde_json::from_value(v.clone()).map_err(|_| bad())?;
                let pm = resolve_map(&m, g, g, true, doc)?;
                graph_perm(g, &pm.vmap, &pm.dmap).ok_or_else(|| doc.invalid(format!("{v} is not a graph automorphism")))
            }
            _ => Err(bad()),
        }
    }

    /// A group reference: `"automorphisms"` or `"trivial"` of the context
    /// graph, a path, or an inline `perm-group`.
    fn group_ref(&self, v: &Value, graph: Option<&SerreGraph>, doc: &Doc) -> Result<PermGroup, InputError> {
        match (v.as_str(), graph) {
            (Some("automorphisms"), Some(g)) => {
                return automorphism_group_bounded(g, None, self.element_bound).map_err(|e| doc.invalid(e.to_string()));
            }
            (Some("trivial"), Some(g)) => return Ok(PermGroup::trivial(num_points(g)).with_bound(self.element_bound)),
            _ => {}
        }
        let child = doc.child(v)?;
        self.group_in(&child, graph)
    }

    pub fn group(&self, doc: &Doc) -> Result<PermGroup, InputError> {
        self.group_in(doc, None)
    }

    /// A `perm-group`; generators may be graph maps when `graph` is given.
    pub fn group_in(&self, doc: &Doc, graph: Option<&SerreGraph>) -> Result<PermGroup, InputError> {
        let g: GroupDoc = doc.typed("perm-group")?;
        let gens =
            g.generators.iter().map(|x| self.element(x, g.degree, graph, doc)).collect::<Result<Vec<_>, _>>()?;
        PermGroup::new(g.degree, gens).map(|p| p.with_bound(self.element_bound)).map_err(|e| doc.invalid(e.to_string()))
    }

    pub fn action(&self, doc: &Doc) -> Result<GroupAction, InputError> {
        let a: ActionDoc = doc.typed("group-action")?;
        let graph = self.graph(&doc.child(&a.graph)?)?;
        let invalid = |e: &dyn std::fmt::Display| doc.invalid(e.to_string());
        match a.images {
            None => {
                let group = self.group_ref(&a.group, Some(&graph), doc)?;
                GroupAction::tautological(group, graph).map_err(|e| invalid(&e))
            }
            Some(images) => {
                let group = self.group_ref(&a.group, None, doc)?;
                let perms = images
                    .iter()
                    .map(|m| {
                        let pm = resolve_map(m, &graph, &graph, true, doc)?;
                        graph_perm(&graph, &pm.vmap, &pm.dmap).ok_or_else(|| doc.invalid("a generator image is not bijective"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                GroupAction::new(group, graph, perms).map_err(|e| invalid(&e))
            }
        }
    }

    pub fn blowup(&self, doc: &Doc) -> Result<BlowupSpec, InputError> {
        let b: BlowupDoc = doc.typed("blowup-input")?;
        let action = self.action(&doc.child(&b.action)?)?;
        let t = action.graph().clone();
        let g = action.group().clone();
        // elements of G may be written as tree maps when G acts tautologically
        let ctx = (g.degree() == num_points(&t)).then_some(&t);
        let k = match &b.k {
            Some(v) => self.group_ref(v, ctx, doc)?,
            None => PermGroup::trivial(g.degree()).with_bound(self.element_bound),
        };
        let mut input = BlowupInput::minimal(action.clone(), k).map_err(|e| doc.invalid(e.to_string()))?;
        if let Some(names) = &b.omega0 {
            input.omega0 = names.iter().map(|n| cell(&t, n, doc)).collect::<Result<_, _>>()?;
            input.s = vec![Vec::new(); names.len()];
        }
        if let Some(s) = &b.s {
            if s.len() != input.omega0.len() {
                return Err(doc.invalid(format!("{} lists in `s` for {} representatives", s.len(), input.omega0.len())));
            }
            input.s = s
                .iter()
                .map(|l| l.iter().map(|x| self.element(x, g.degree(), ctx, doc)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<_, _>>()?;
        }
        if let Some(f) = &b.f {
            input.f = f.iter().map(|x| self.element(x, g.degree(), ctx, doc)).collect::<Result<_, _>>()?;
        }
        let vertex_subgroups = match &b.vertex_subgroups {
            None => None,
            Some(m) => {
                let mut out = vec![None; t.num_vertices()];
                for (name, v) in m {
                    out[vertex_of(&t, name, doc)?] = Some(self.group_ref(v, ctx, doc)?);
                }
                Some(
                    out.into_iter()
                        .enumerate()
                        .map(|(i, x)| x.ok_or_else(|| doc.invalid(format!("no subgroup for vertex `{}`", t.vertex_name(i)))))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
        };
        let edge_subgroups = match &b.edge_subgroups {
            None => None,
            Some(m) => {
                let reps = t.edge_reps();
                let mut out = vec![None; reps.len()];
                for (name, v) in m {
                    let d = dart_of(&t, name, doc)?;
                    let i = reps.iter().position(|&e| e == d.min(t.bar(d))).expect("edge representative");
                    out[i] = Some(self.group_ref(v, ctx, doc)?);
                }
                Some(
                    out.into_iter()
                        .enumerate()
                        .map(|(i, x)| x.ok_or_else(|| doc.invalid(format!("no subgroup for edge `{}`", t.dart_name(reps[i])))))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
        };
        Ok(BlowupSpec { input, vertex_subgroups, edge_subgroups })
    }

    pub fn gos(&self, doc: &Doc) -> Result<GraphOfSpaces, InputError> {
        let y: GosDoc = doc.typed("graph-of-spaces")?;
        let base = self.graph(&doc.child(&y.base)?)?;
        let mut vertex_spaces = vec![None; base.num_vertices()];
        for (name, v) in &y.vertex_spaces {
            vertex_spaces[vertex_of(&base, name, doc)?] = Some(self.graph(&doc.child(v)?)?);
        }
        let vertex_spaces: Vec<SerreGraph> = vertex_spaces
            .into_iter()
            .enumerate()
            .map(|(i, x)| x.ok_or_else(|| doc.invalid(format!("no space for vertex `{}`", base.vertex_name(i)))))
            .collect::<Result<_, _>>()?;
        let reps = base.edge_reps();
        let mut edge_spaces = vec![None; reps.len()];
        for (name, v) in &y.edge_spaces {
            let d = dart_of(&base, name, doc)?;
            let i = reps.iter().position(|&e| e == d.min(base.bar(d))).expect("edge representative");
            edge_spaces[i] = Some(self.graph(&doc.child(v)?)?);
        }
        let edge_spaces: Vec<SerreGraph> = edge_spaces
            .into_iter()
            .enumerate()
            .map(|(i, x)| x.ok_or_else(|| doc.invalid(format!("no space for edge `{}`", base.dart_name(reps[i])))))
            .collect::<Result<_, _>>()?;
        let space_of = |d: usize| &edge_spaces[reps.iter().position(|&e| e == d.min(base.bar(d))).expect("rep")];
        let mut attach = vec![None; base.num_darts()];
        for (name, m) in &y.attach {
            let d = dart_of(&base, name, doc)?;
            attach[d] = Some(resolve_map(m, space_of(d), &vertex_spaces[base.tau(d)], false, doc)?);
        }
        let attach: Vec<PieceMap> = attach
            .into_iter()
            .enumerate()
            .map(|(i, x)| x.ok_or_else(|| doc.invalid(format!("no attaching map for dart `{}`", base.dart_name(i)))))
            .collect::<Result<_, _>>()?;
        GraphOfSpaces::new(base, vertex_spaces, edge_spaces, attach).map_err(|e| doc.invalid(e.to_string()))
    }

    pub fn morphism(&self, doc: &Doc) -> Result<GraphMorphism, InputError> {
        let m: MorphismDoc = doc.typed("graph-morphism")?;
        let source = self.graph(&doc.child(&m.source)?)?;
        let target = self.graph(&doc.child(&m.target)?)?;
        let map = ElementMap { vertices: m.vertices, darts: m.darts };
        let pm = resolve_map(&map, &source, &target, false, doc)?;
        GraphMorphism::new(source, target, pm.vmap, pm.dmap).map_err(|e| doc.invalid(e.to_string()))
    }

    pub fn gos_morphism(&self, doc: &Doc) -> Result<GosMorphism, InputError> {
        let m: GosMorphismDoc = doc.typed("gos-morphism")?;
        let source = self.gos(&doc.child(&m.source)?)?;
        let target = self.gos(&doc.child(&m.target)?)?;
        let (sb, tb) = (source.base(), target.base());
        let base = resolve_map(&m.base, sb, tb, false, doc)?;
        let mut vertex_maps = vec![None; sb.num_vertices()];
        for (name, em) in &m.vertex_maps {
            let v = vertex_of(sb, name, doc)?;
            vertex_maps[v] = Some(resolve_map(em, source.vertex_space(v), target.vertex_space(base.vmap[v]), false, doc)?);
        }
        let reps = sb.edge_reps();
        let mut edge_maps = vec![None; reps.len()];
        for (name, em) in &m.edge_maps {
            let d = dart_of(sb, name, doc)?;
            let i = source.edge_of(d);
            edge_maps[i] = Some(resolve_map(em, source.edge_space(i), target.edge_space_of(base.dmap[d]), false, doc)?);
        }
        let missing = |what: &str, name: &str| doc.invalid(format!("no {what} map for `{name}`"));
        let vertex_maps = vertex_maps
            .into_iter()
            .enumerate()
            .map(|(i, x)| x.ok_or_else(|| missing("vertex", sb.vertex_name(i))))
            .collect::<Result<_, _>>()?;
        let edge_maps = edge_maps
            .into_iter()
            .enumerate()
            .map(|(i, x)| x.ok_or_else(|| missing("edge", sb.dart_name(reps[i]))))
            .collect::<Result<_, _>>()?;
        GosMorphism::new(source, target, GosMap { base, vertex_maps, edge_maps }).map_err(|e| doc.invalid(e.to_string()))
    }

    pub fn hat(&self, doc: &Doc) -> Result<HatCoverData, InputError> {
        let h: HatDoc = doc.typed("hat-cover-data")?;
        let mut vertices = Vec::with_capacity(h.vertices.len());
        for v in &h.vertices {
            let space = self.graph(&doc.child(&v.space)?)?;
            let group = |x: &Value| self.group_ref(x, Some(&space), doc);
            vertices.push(HatVertex {
                name: v.name.clone(),
                q: group(&v.q)?,
                gamma: group(&v.gamma)?,
                gamma_prime: group(&v.gamma_prime)?,
                q_hat: group(&v.q_hat)?,
                space,
            });
        }
        let index = |name: &str| {
            vertices.iter().position(|v| v.name == name).ok_or_else(|| doc.invalid(format!("unknown vertex `{name}`")))
        };
        let mut edges = Vec::with_capacity(h.edges.len());
        for e in &h.edges {
            let space = self.graph(&doc.child(&e.space)?)?;
            let (tail, head) = (index(&e.tail)?, index(&e.head)?);
            edges.push(HatEdge {
                name: e.name.clone(),
                q: self.group_ref(&e.q, Some(&space), doc)?,
                tail,
                head,
                attach_tail: resolve_map(&e.attach_tail, &space, &vertices[tail].space, false, doc)?,
                attach_head: resolve_map(&e.attach_head, &space, &vertices[head].space, false, doc)?,
                space,
            });
        }
        Ok(HatCoverData { vertices, edges })
    }
}

/// A tree vertex or geometric edge by name.
fn cell(t: &SerreGraph, name: &str, doc: &Doc) -> Result<TreeCell, InputError> {
    match (t.vertex_by_name(name), t.dart_by_name(name)) {
        (Some(v), None) => Ok(TreeCell::Vertex(v)),
        (None, Some(d)) => Ok(TreeCell::Edge(d).normalized(t)),
        _ => Err(doc.invalid(format!("`{name}` names no vertex or dart of the tree"))),
    }
}

pub fn graph_json(g: &SerreGraph) -> Value {
    let darts: Vec<Value> = (0..g.num_darts())
        .map(|d| {
            json!({
                "id": g.dart_name(d),
                "bar": g.dart_name(g.bar(d)),
                "from": g.vertex_name(g.iota(d)),
                "to": g.vertex_name(g.tau(d)),
            })
        })
        .collect();
    json!({ "kind": "serre-graph", "vertices": g.vertex_names(), "darts": darts })
}

pub fn perm_json(p: &Perm) -> Value {
    json!(p.images().collect::<Vec<_>>())
}

/// Name of a point of a graph: a vertex or a dart.
pub fn point_name(g: &SerreGraph, x: usize) -> String {
    let n = g.num_vertices();
    if x < n {
        g.vertex_name(x).to_string()
    } else {
        g.dart_name(x - n).to_string()
    }
}
