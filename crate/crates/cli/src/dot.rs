//! Graphviz output. Every dart is drawn as its own directed edge, so a
//! geometric edge appears as a pair of opposite arrows.

use std::fmt::Write;

use groupgraph::graph::SerreGraph;

const PALETTE: [&str; 8] = ["black", "red", "blue", "darkgreen", "orange", "purple", "brown", "deeppink"];

/// A graph to draw, with optional class labels rendered as colors.
#[derive(Debug, Clone)]
pub struct Drawing {
    pub graph: SerreGraph,
    pub vertex_class: Option<Vec<usize>>,
    pub dart_class: Option<Vec<usize>>,
}

impl Drawing {
    pub fn plain(graph: SerreGraph) -> Self {
        Drawing { graph, vertex_class: None, dart_class: None }
    }
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn render(d: &Drawing) -> String {
    let g = &d.graph;
    let mut out = String::from("digraph G {\n  node [shape=circle];\n");
    for v in 0..g.num_vertices() {
        let color = d.vertex_class.as_ref().map_or("black", |c| PALETTE[c[v] % PALETTE.len()]);
        writeln!(out, "  v{v} [label={}, color={color}];", quoted(g.vertex_name(v))).expect("string write");
    }
    for e in 0..g.num_darts() {
        let color = d.dart_class.as_ref().map_or("black", |c| PALETTE[c[e] % PALETTE.len()]);
        writeln!(out, "  v{} -> v{} [label={}, color={color}];", g.iota(e), g.tau(e), quoted(g.dart_name(e)))
            .expect("string write");
    }
    out.push_str("}\n");
    out
}
