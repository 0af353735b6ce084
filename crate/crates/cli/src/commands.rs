use std::path::Path;

use groupgraph::action::{num_points, GroupAction};
use groupgraph::aut::{automorphism_group_bounded, vertex_stabilizer_orbit_bound};
use groupgraph::blowup::{
    blowup_imprimitivity_quotient, construct_blowup, normalize_input, product_family, refine_tree, verify_blowup,
    BlowupError, BlowupResult, EdgeType, RefinedVertex, TreeCell,
};
use groupgraph::gos::{check_gos_covering, deck_group, fiber_product, quotient_gos, GosMorphism};
use groupgraph::graph::{
    barycentric_subdivision, is_covering, quotient_by_partition, GraphMorphism, QuotientMode, SerreGraph, SubdivisionVertex,
    VertexPartition,
};
use groupgraph::group::PermGroup;
use groupgraph::imprim::{imprimitivity_from_normal, induced_quotient_action};
use groupgraph::leighton::{
    assemble_hat_ball, brute_force_common_cover, check_hat_conditions, common_cover_gos, common_cover_graphs,
    degree_refinement, verify_and_glue_hat, verify_common_cover, CommonCover, LeightonError,
};
use groupgraph::voltage::{voltage_cover, Voltages};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

use crate::dot::Drawing;
use crate::schema::{perm_json, point_name, read_doc, InputError, Loader};

/// Run settings shared by every command and echoed into every report.
#[derive(Debug, Clone)]
pub struct Config {
    pub element_bound: usize,
    pub max_degree: usize,
    pub seed: u64,
}

impl Config {
    pub fn json(&self) -> Value {
        json!({ "element_bound": self.element_bound, "max_degree": self.max_degree, "seed": self.seed })
    }
}

#[derive(Debug)]
pub enum Failure {
    Input(InputError),
    /// A precondition or library error on well-formed input.
    Rejected(String),
    /// A verified negative answer.
    Negative(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

fn rejected(e: impl std::fmt::Display) -> Failure {
    Failure::Rejected(e.to_string())
}

fn leighton(e: LeightonError) -> Failure {
    match e {
        LeightonError::NoCommonCover(_)
        | LeightonError::NotFree { .. }
        | LeightonError::CommonCoverViolated(_)
        | LeightonError::NotNormal(_)
        | LeightonError::GluingMismatch(_) => Failure::Negative(e.to_string()),
        other => Failure::Rejected(other.to_string()),
    }
}

pub struct Outcome {
    pub result: Value,
    pub drawing: Option<Drawing>,
    /// Set when the command completed with a negative verdict.
    pub negative: Option<String>,
}

impl Outcome {
    fn ok(result: Value, drawing: Option<Drawing>) -> Self {
        Outcome { result, drawing, negative: None }
    }
}

pub type Run = Result<Outcome, Failure>;

pub struct Ctx {
    pub config: Config,
    pub loader: Loader,
}

fn names(g: &SerreGraph, vs: &[usize]) -> Vec<String> {
    vs.iter().map(|&v| g.vertex_name(v).to_string()).collect()
}

fn blocks_json(g: &SerreGraph, p: &VertexPartition) -> Value {
    json!(p.blocks().iter().map(|b| names(g, b)).collect::<Vec<_>>())
}

fn group_json(g: &PermGroup) -> Result<Value, Failure> {
    Ok(json!({
        "degree": g.degree(),
        "order": g.order().map_err(rejected)?,
        "generators": g.generators().iter().map(perm_json).collect::<Vec<_>>(),
    }))
}

fn counts(g: &SerreGraph) -> Value {
    json!({ "vertices": g.num_vertices(), "edges": g.num_edges(), "darts": g.num_darts() })
}

impl Ctx {
    fn graph(&self, p: &Path) -> Result<SerreGraph, Failure> {
        Ok(self.loader.graph(&read_doc(p)?)?)
    }

    fn action(&self, p: &Path) -> Result<GroupAction, Failure> {
        Ok(self.loader.action(&read_doc(p)?)?)
    }

    pub fn graph_validate(&self, p: &Path) -> Run {
        let g = self.graph(p)?;
        let result = json!({
            "counts": counts(&g),
            "components": g.components().len(),
            "connected": g.is_connected(),
            "simple": g.is_simple(),
            "tree": g.is_tree(),
        });
        Ok(Outcome::ok(result, Some(Drawing::plain(g))))
    }

    pub fn graph_subdivide(&self, p: &Path) -> Run {
        let g = self.graph(p)?;
        let s = barycentric_subdivision(&g);
        let class: Vec<usize> = (0..s.graph.num_vertices())
            .map(|x| match s.original_of(x) {
                SubdivisionVertex::Vertex(_) => 0,
                SubdivisionVertex::Midpoint(_) => 1,
            })
            .collect();
        let result = json!({ "counts": counts(&s.graph), "graph": crate::schema::graph_json(&s.graph) });
        Ok(Outcome::ok(result, Some(Drawing { graph: s.graph, vertex_class: Some(class), dart_class: None })))
    }

    /// `blocks` lists blocks separated by `;`, vertex names by `,`; unlisted
    /// vertices are singletons.
    pub fn graph_quotient(&self, p: &Path, blocks: &str, multigraph: bool) -> Run {
        let g = self.graph(p)?;
        let mut seen = vec![false; g.num_vertices()];
        let mut parts = Vec::new();
        for block in blocks.split(';').filter(|b| !b.trim().is_empty()) {
            let mut part = Vec::new();
            for name in block.split(',').map(str::trim) {
                let v = g.vertex_by_name(name).ok_or_else(|| Failure::Rejected(format!("unknown vertex `{name}`")))?;
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Failure::Rejected(format!("vertex `{name}` is in two blocks")));
                }
                part.push(v);
            }
            parts.push(part);
        }
        parts.extend((0..g.num_vertices()).filter(|&v| !seen[v]).map(|v| vec![v]));
        let partition = VertexPartition::new(g.num_vertices(), parts).map_err(rejected)?;
        let mode = if multigraph { QuotientMode::Multigraph } else { QuotientMode::Simple };
        let (q, _) = quotient_by_partition(&g, &partition, mode).map_err(rejected)?;
        let result = json!({ "counts": counts(&q), "blocks": blocks_json(&g, &partition), "graph": crate::schema::graph_json(&q) });
        Ok(Outcome::ok(result, Some(Drawing::plain(q))))
    }

    /// A random voltage cover of the given degree, seeded by the configuration.
    pub fn graph_lift(&self, p: &Path, degree: usize) -> Run {
        let g = self.graph(p)?;
        if degree == 0 {
            return Err(Failure::Rejected("degree must be positive".into()));
        }
        let mut rng = StdRng::seed_from_u64(self.config.seed);
        let f = voltage_cover(&g, &Voltages::random(&g, degree, &mut rng));
        let report = is_covering(&f);
        let result = json!({
            "counts": counts(&f.source),
            "degree": report.degree,
            "connected": f.source.is_connected(),
            "graph": crate::schema::graph_json(&f.source),
        });
        let class = f.vmap.clone();
        Ok(Outcome::ok(result, Some(Drawing { graph: f.source, vertex_class: Some(class), dart_class: None })))
    }

    pub fn group_orbits(&self, p: &Path) -> Run {
        let g = self.loader.group(&read_doc(p)?)?;
        let orbits = g.orbit_partition(None).map_err(rejected)?;
        Ok(Outcome::ok(json!({ "group": group_json(&g)?, "orbits": orbits.blocks() }), None))
    }

    pub fn group_stab(&self, p: &Path, points: &[usize]) -> Run {
        let g = self.loader.group(&read_doc(p)?)?;
        if let Some(&x) = points.iter().find(|&&x| x >= g.degree()) {
            return Err(Failure::Rejected(format!("point {x} outside the domain")));
        }
        let h = match points {
            [x] => g.point_stabilizer(*x),
            set => g.set_stabilizer(set),
        }
        .map_err(rejected)?;
        let index = g.index(&h).map_err(rejected)?;
        Ok(Outcome::ok(json!({ "points": points, "stabilizer": group_json(&h)?, "index": index }), None))
    }

    pub fn group_blocks(&self, p: &Path) -> Run {
        let g = self.loader.group(&read_doc(p)?)?;
        let systems = g.minimal_block_systems().map_err(rejected)?;
        let list: Vec<Value> = systems.iter().map(|s| json!(s.blocks())).collect();
        Ok(Outcome::ok(json!({ "group": group_json(&g)?, "primitive": systems.is_empty(), "minimal_block_systems": list }), None))
    }

    pub fn group_kernel(&self, p: &Path) -> Run {
        let a = self.action(p)?;
        let k = a.kernel().map_err(rejected)?;
        let faithful = k.is_trivial();
        Ok(Outcome::ok(json!({ "group": group_json(a.group())?, "kernel": group_json(&k)?, "faithful": faithful }), None))
    }

    pub fn aut_group(&self, p: &Path) -> Run {
        let g = self.graph(p)?;
        let aut = automorphism_group_bounded(&g, None, self.config.element_bound).map_err(rejected)?;
        let orbits: Vec<Vec<String>> = {
            let mut seen = vec![false; g.num_vertices()];
            let mut out = Vec::new();
            for v in 0..g.num_vertices() {
                if !seen[v] {
                    let orbit = aut.orbit(v);
                    for &x in &orbit {
                        seen[x] = true;
                    }
                    out.push(orbit.iter().map(|&x| point_name(&g, x)).collect());
                }
            }
            out
        };
        let result = json!({ "group": group_json(&aut)?, "vertex_orbits": orbits });
        Ok(Outcome::ok(result, Some(Drawing::plain(g))))
    }

    pub fn aut_orbit_bound(&self, p: &Path) -> Run {
        let a = self.action(p)?;
        let b = vertex_stabilizer_orbit_bound(&a).map_err(rejected)?;
        let g = a.graph();
        let result = json!({
            "bound": b.bound,
            "witness": [g.vertex_name(b.witness.0), g.vertex_name(b.witness.1)],
        });
        Ok(Outcome::ok(result, None))
    }

    fn normal_subgroup(&self, a: &GroupAction, p: &Path) -> Result<PermGroup, Failure> {
        let ctx = (a.group().degree() == num_points(a.graph())).then(|| a.graph());
        let k = self.loader.group_in(&read_doc(p)?, ctx)?;
        if k.degree() != a.group().degree() {
            return Err(Failure::Rejected(format!("subgroup of degree {} in a group of degree {}", k.degree(), a.group().degree())));
        }
        Ok(k)
    }

    pub fn imprim_from_normal(&self, action: &Path, k: &Path) -> Run {
        let a = self.action(action)?;
        let k = self.normal_subgroup(&a, k)?;
        let p = imprimitivity_from_normal(&a, &k).map_err(rejected)?;
        let g = a.graph();
        let class: Vec<usize> = (0..g.num_vertices()).map(|v| p.block_of(v)).collect();
        let result = json!({ "blocks": blocks_json(g, &p), "num_blocks": p.num_blocks() });
        Ok(Outcome::ok(result, Some(Drawing { graph: g.clone(), vertex_class: Some(class), dart_class: None })))
    }

    pub fn imprim_quotient_action(&self, action: &Path, k: &Path) -> Run {
        let a = self.action(action)?;
        let k = self.normal_subgroup(&a, k)?;
        let p = imprimitivity_from_normal(&a, &k).map_err(rejected)?;
        let qa = induced_quotient_action(&a, &p).map_err(rejected)?;
        let contains = k.is_subgroup_of(&qa.kernel).map_err(rejected)?;
        let result = json!({
            "blocks": blocks_json(a.graph(), &p),
            "quotient": counts(&qa.graph),
            "kernel": group_json(&qa.kernel)?,
            "kernel_contains_subgroup": contains,
            "image_order": a.group().order().map_err(rejected)? / qa.kernel.order().map_err(rejected)?,
        });
        Ok(Outcome::ok(result, Some(Drawing::plain(qa.graph))))
    }

    fn blowup_spec(&self, p: &Path) -> Result<crate::schema::BlowupSpec, Failure> {
        Ok(self.loader.blowup(&read_doc(p)?)?)
    }

    pub fn blowup_normalize(&self, p: &Path) -> Run {
        let spec = self.blowup_spec(p)?;
        let (input, report) = normalize_input(&spec.input).map_err(rejected)?;
        let t = input.action.graph();
        let result = json!({
            "unchanged": report.is_unchanged(),
            "k_replaced": report.k_replaced,
            "k": group_json(&input.k)?,
            "omega0": cells_json(t, &input.omega0),
            "added_s": report.added_s.iter().map(|l| l.iter().map(perm_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "added_f": report.added_f.iter().map(perm_json).collect::<Vec<_>>(),
        });
        Ok(Outcome::ok(result, None))
    }

    fn built(&self, p: &Path) -> Result<(crate::schema::BlowupSpec, BlowupResult), Failure> {
        let spec = self.blowup_spec(p)?;
        let (input, _) = normalize_input(&spec.input).map_err(rejected)?;
        let r = construct_blowup(&input).map_err(rejected)?;
        Ok((crate::schema::BlowupSpec { input, ..spec }, r))
    }

    pub fn blowup_construct(&self, p: &Path, verify: bool) -> Run {
        let (spec, r) = self.built(p)?;
        let g = spec.input.action.group();
        let index = g.index(&spec.input.k).map_err(rejected)?;
        let mut result = json!({
            "counts": counts(&r.graph),
            "index": index,
            "omega0": cells_json(r.tree_action.graph(), &r.omega0),
            "expected_vertices": index * r.omega0.len(),
        });
        let mut negative = None;
        if verify {
            let report = verify_blowup(&r);
            result["verified"] = json!(report.passed());
            result["failures"] = json!(report.failures.iter().map(|f| format!("{f:?}")).collect::<Vec<_>>());
            if !report.passed() {
                negative = Some(format!("blowup verification failed: {:?}", report.failures[0]));
            }
        }
        let dart_class = r.edge_type.iter().map(|t| if *t == EdgeType::I { 0 } else { 1 }).collect();
        let drawing = Drawing { graph: r.graph, vertex_class: Some(r.cell), dart_class: Some(dart_class) };
        Ok(Outcome { result, drawing: Some(drawing), negative })
    }

    fn vertex_family(&self, spec: &crate::schema::BlowupSpec) -> Result<Vec<PermGroup>, Failure> {
        spec.vertex_subgroups.clone().ok_or_else(|| Failure::Rejected("the input has no `vertex_subgroups`".into()))
    }

    pub fn blowup_refine_tree(&self, p: &Path) -> Run {
        let spec = self.blowup_spec(p)?;
        let kv = self.vertex_family(&spec)?;
        let rt = refine_tree(&spec.input.action, &kv).map_err(rejected)?;
        let kinds: Vec<usize> = rt.kind.iter().map(|k| matches!(k, RefinedVertex::II(..)) as usize).collect();
        let result = json!({
            "counts": counts(&rt.tree),
            "tree": rt.tree.is_tree(),
            "type_ii_vertices": kinds.iter().sum::<usize>(),
            "collapse": rt.collapse.iter().map(|&v| spec.input.action.graph().vertex_name(v)).collect::<Vec<_>>(),
        });
        Ok(Outcome::ok(result, Some(Drawing { graph: rt.tree, vertex_class: Some(kinds), dart_class: None })))
    }

    pub fn blowup_quotient(&self, p: &Path) -> Run {
        let (spec, r) = self.built(p)?;
        let kv = self.vertex_family(&spec)?;
        let ke = match &spec.edge_subgroups {
            Some(ke) => ke.clone(),
            None => product_family(&r.tree_action, &kv).map_err(rejected)?,
        };
        let q = blowup_imprimitivity_quotient(&r, &kv, &ke).map_err(|e: BlowupError| rejected(e))?;
        let report = verify_blowup(&q.result);
        let result = json!({
            "blowup": counts(&r.graph),
            "quotient": counts(&q.result.graph),
            "quotient_verified": report.passed(),
            "star_witness": q.star_witness.map(|v| r.graph.vertex_name(v).to_string()),
        });
        let negative = (!report.passed()).then(|| format!("quotient is not a blowup: {:?}", report.failures[0]));
        let drawing = Drawing { vertex_class: Some(q.result.cell.clone()), graph: q.result.graph, dart_class: None };
        Ok(Outcome { result, drawing: Some(drawing), negative })
    }

    pub fn gos_total(&self, p: &Path) -> Run {
        let y = self.loader.gos(&read_doc(p)?)?;
        let t = y.total_space();
        let overlap = y.overlapping_images().map(|(v, a, b)| {
            json!([y.base().vertex_name(v), y.base().dart_name(a), y.base().dart_name(b)])
        });
        let result = json!({ "counts": counts(&t.graph), "connected": t.graph.is_connected(), "overlapping_images": overlap });
        Ok(Outcome::ok(result, Some(Drawing::plain(t.graph))))
    }

    fn gos_morphism(&self, p: &Path) -> Result<GosMorphism, Failure> {
        Ok(self.loader.gos_morphism(&read_doc(p)?)?)
    }

    pub fn gos_check_cover(&self, p: &Path) -> Run {
        let f = self.gos_morphism(p)?;
        let r = check_gos_covering(&f);
        let witness = r.witness.as_ref().map(|w| format!("{w:?}"));
        let result = json!({ "is_covering": r.is_covering, "degree": r.degree, "witness": witness });
        let negative = witness.map(|w| format!("not a covering: {w}"));
        Ok(Outcome { result, drawing: Some(Drawing::plain(f.source.total_space().graph)), negative })
    }

    pub fn gos_fiber_product(&self, a: &Path, b: &Path) -> Run {
        let f1 = self.loader.morphism(&read_doc(a)?)?;
        let f2 = self.loader.morphism(&read_doc(b)?)?;
        let comps = fiber_product(&f1, &f2).map_err(rejected)?;
        let covering = |f: &GraphMorphism| is_covering(f).is_covering;
        let list: Vec<Value> = comps
            .iter()
            .map(|c| {
                json!({
                    "counts": counts(&c.graph),
                    "first_is_covering": covering(&c.first),
                    "second_is_covering": covering(&c.second),
                })
            })
            .collect();
        let parts: Vec<&SerreGraph> = comps.iter().map(|c| &c.graph).collect();
        let (union, offsets) = SerreGraph::disjoint_union(&parts);
        let mut class = vec![0; union.num_vertices()];
        for (i, &(v0, _)) in offsets.iter().enumerate() {
            for x in 0..comps[i].graph.num_vertices() {
                class[v0 + x] = i;
            }
        }
        let result = json!({ "components": list, "num_components": comps.len() });
        Ok(Outcome::ok(result, Some(Drawing { graph: union, vertex_class: Some(class), dart_class: None })))
    }

    /// Quotient by the automorphisms given as maps from a graph of spaces to itself.
    pub fn gos_quotient(&self, files: &[impl AsRef<Path>]) -> Run {
        let auts: Vec<GosMorphism> = files.iter().map(|p| self.gos_morphism(p.as_ref())).collect::<Result<_, _>>()?;
        let y = &auts[0].source;
        if auts.iter().any(|f| &f.source != y || &f.target != y) {
            return Err(Failure::Rejected("quotient generators must be automorphisms of one graph of spaces".into()));
        }
        let gens: Vec<_> = auts.iter().map(|f| f.map.clone()).collect();
        let q = quotient_gos(y, &gens).map_err(rejected)?;
        let report = check_gos_covering(&q);
        let result = json!({
            "base": counts(q.target.base()),
            "total_space": counts(&q.target.total_space().graph),
            "projection_is_covering": report.is_covering,
            "degree": report.degree,
        });
        Ok(Outcome::ok(result, Some(Drawing::plain(q.target.base().clone()))))
    }

    pub fn gos_deck(&self, p: &Path) -> Run {
        let f = self.gos_morphism(p)?;
        let d = match deck_group(&f) {
            Ok(d) => d,
            Err(groupgraph::gos::GosError::NotACovering) => return Err(Failure::Negative("map is not a covering".into())),
            Err(e) => return Err(rejected(e)),
        };
        Ok(Outcome::ok(json!({ "order": d.elements.len(), "regular": d.regular }), None))
    }

    pub fn leighton_refine(&self, p: &Path) -> Run {
        let g = self.graph(p)?;
        let r = degree_refinement(&g, None).map_err(leighton)?;
        let transitions: Vec<Value> = r
            .transitions
            .iter()
            .map(|t| json!(t.iter().map(|(&(_, _, c), &n)| json!({ "class": c, "count": n })).collect::<Vec<_>>()))
            .collect();
        let result = json!({
            "classes": r.num_classes(),
            "class_sizes": r.class_sizes,
            "transitions": transitions,
            "depth": r.depth,
        });
        let class = r.class_of.clone();
        Ok(Outcome::ok(result, Some(Drawing { graph: g, vertex_class: Some(class), dart_class: None })))
    }

    fn cover_outcome(cc: CommonCover) -> Outcome {
        let result = json!({
            "order": cc.order(),
            "counts": counts(&cc.graph),
            "verified": verify_common_cover(&cc, None, None),
            "degrees": [is_covering(&cc.p1).degree, is_covering(&cc.p2).degree],
        });
        let class = cc.p1.vmap.clone();
        Outcome::ok(result, Some(Drawing { graph: cc.graph, vertex_class: Some(class), dart_class: None }))
    }

    pub fn leighton_common_cover(&self, a: &Path, b: &Path) -> Run {
        let (x1, x2) = (self.graph(a)?, self.graph(b)?);
        let cc = common_cover_graphs(&x1, &x2, None, None).map_err(leighton)?;
        Ok(Self::cover_outcome(cc))
    }

    pub fn leighton_oracle(&self, a: &Path, b: &Path) -> Run {
        let (x1, x2) = (self.graph(a)?, self.graph(b)?);
        match brute_force_common_cover(&x1, &x2, self.config.max_degree).map_err(leighton)? {
            Some(cc) => Ok(Self::cover_outcome(cc)),
            None => Err(Failure::Negative(format!(
                "NoCommonCover: none covering the first graph with degree at most {}",
                self.config.max_degree
            ))),
        }
    }

    pub fn leighton_gos_cover(&self, a: &Path, b: &Path) -> Run {
        let y1 = self.loader.gos(&read_doc(a)?)?;
        let y2 = self.loader.gos(&read_doc(b)?)?;
        let c = common_cover_gos(&y1, &y2).map_err(leighton)?;
        let (r1, r2) = (check_gos_covering(&c.p1), check_gos_covering(&c.p2));
        let result = json!({
            "base": counts(c.z.base()),
            "total_space": counts(&c.z.total_space().graph),
            "first_is_covering": r1.is_covering,
            "second_is_covering": r2.is_covering,
            "degrees": [r1.degree, r2.degree],
        });
        let class = c.p1.map.base.vmap.clone();
        Ok(Outcome::ok(result, Some(Drawing { graph: c.z.base().clone(), vertex_class: Some(class), dart_class: None })))
    }

    pub fn hat_verify(&self, p: &Path) -> Run {
        let data = self.loader.hat(&read_doc(p)?)?;
        let report = check_hat_conditions(&data).map_err(leighton)?;
        let violations: Vec<Value> =
            report.violations.iter().map(|v| json!({ "clause": v.clause.to_string(), "location": v.location })).collect();
        if !report.passed() {
            let result = json!({ "passed": false, "violations": violations });
            let first = verify_and_glue_hat(&data).err().map(|e| e.to_string()).unwrap_or_else(|| "condition violated".into());
            return Ok(Outcome { result, drawing: Some(Drawing::plain(data.quotient_graph())), negative: Some(first) });
        }
        let glued = verify_and_glue_hat(&data).map_err(leighton)?;
        let vertices: Vec<Value> = data
            .vertices
            .iter()
            .zip(&glued.vertices)
            .map(|(v, piece)| {
                json!({
                    "name": v.name,
                    "space": counts(&piece.space),
                    "regular": piece.is_regular(),
                    "deck_orders": [piece.deck_order, piece.deck_order_prime],
                    "indices": [piece.index, piece.index_prime],
                })
            })
            .collect();
        let edges: Vec<Value> = data
            .edges
            .iter()
            .zip(&glued.edges)
            .map(|(e, piece)| json!({ "name": e.name, "space": counts(&piece.space), "q_hat_order": piece.q_hat.order().ok() }))
            .collect();
        let result = json!({ "passed": true, "violations": violations, "vertices": vertices, "edges": edges });
        Ok(Outcome::ok(result, Some(Drawing::plain(data.quotient_graph()))))
    }

    pub fn hat_ball(&self, p: &Path, radius: usize) -> Run {
        let data = self.loader.hat(&read_doc(p)?)?;
        let ball = assemble_hat_ball(&data, radius).map_err(leighton)?;
        let checks: Vec<Value> = ball
            .checks
            .iter()
            .map(|c| json!({ "vertex": ball.gos.base().vertex_name(c.vertex), "gamma": c.gamma.holds, "gamma_prime": c.gamma_prime.holds }))
            .collect();
        let result = json!({
            "radius": radius,
            "base": counts(ball.gos.base()),
            "boundary": ball.boundary.iter().filter(|&&b| b).count(),
            "checks": checks,
            "passed": ball.passed(),
        });
        let negative = (!ball.passed()).then(|| "a fiber-product check failed in the ball".to_string());
        let class = ball.depth.clone();
        let drawing = Drawing { graph: ball.gos.base().clone(), vertex_class: Some(class), dart_class: None };
        Ok(Outcome { result, drawing: Some(drawing), negative })
    }
}

fn cells_json(t: &SerreGraph, cells: &[TreeCell]) -> Value {
    json!(cells
        .iter()
        .map(|c| match *c {
            TreeCell::Vertex(v) => t.vertex_name(v).to_string(),
            TreeCell::Edge(d) => t.dart_name(d).to_string(),
        })
        .collect::<Vec<_>>())
}
