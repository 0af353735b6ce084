mod commands;
mod dot;
mod schema;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use groupgraph::group::DEFAULT_ELEMENT_BOUND;
use serde_json::{json, Value};

use commands::{Config, Ctx, Failure, Run};
use schema::Loader;

#[derive(Parser)]
#[command(name = "groupgraph", version, about = "Group actions on graphs, blowups, graphs of spaces and common covers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Write the graph produced by the command in DOT format.
    #[arg(long, global = true, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Write a JSON report.
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Write the graph produced by the command as a serre-graph file.
    #[arg(long, global = true, value_name = "PATH")]
    emit: Option<PathBuf>,
    /// Largest group the element enumeration may build.
    #[arg(long, global = true, default_value_t = DEFAULT_ELEMENT_BOUND)]
    element_bound: usize,
    /// Largest cover degree searched by the oracle.
    #[arg(long, global = true, default_value_t = 6)]
    max_degree: usize,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    #[command(subcommand)]
    /// Serre graphs: validation, subdivision, quotients, lifts.
    Graph(GraphCmd),
    #[command(subcommand)]
    /// Permutation groups and group actions.
    Group(GroupCmd),
    #[command(subcommand)]
    /// Automorphism groups of graphs.
    Aut(AutCmd),
    #[command(subcommand)]
    /// Imprimitivity systems from normal subgroups.
    Imprim(ImprimCmd),
    #[command(subcommand)]
    /// Blowups of group actions on trees.
    Blowup(BlowupCmd),
    #[command(subcommand)]
    /// Graphs of spaces and their coverings.
    Gos(GosCmd),
    #[command(subcommand)]
    /// Degree refinement, common covers and hat covers.
    Leighton(LeightonCmd),
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Check the Serre axioms and report basic counts.
    Validate { graph: PathBuf },
    /// First barycentric subdivision.
    Subdivide { graph: PathBuf },
    /// Quotient by a vertex partition.
    Quotient {
        graph: PathBuf,
        /// Blocks separated by `;`, vertex names by `,`; other vertices stay single.
        #[arg(long)]
        blocks: String,
        /// Keep loops and parallel edges.
        #[arg(long)]
        multigraph: bool,
    },
    /// Random voltage cover, seeded by `--seed`.
    Lift {
        graph: PathBuf,
        #[arg(long)]
        degree: usize,
    },
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Order and orbits of a group.
    Orbits { group: PathBuf },
    /// Stabilizer of a point, or setwise stabilizer of several.
    Stab {
        group: PathBuf,
        #[arg(long = "point", required = true, num_args = 1..)]
        points: Vec<usize>,
    },
    /// Minimal block systems of a transitive group.
    Blocks { group: PathBuf },
    /// Kernel of a group action.
    Kernel { action: PathBuf },
}

#[derive(Subcommand)]
enum AutCmd {
    /// Automorphism group of a graph.
    Group { graph: PathBuf },
    /// Largest orbit of a vertex stabilizer on vertices.
    OrbitBound { action: PathBuf },
}

#[derive(Subcommand)]
enum ImprimCmd {
    /// Orbits of a normal subgroup as blocks.
    FromNormal { action: PathBuf, subgroup: PathBuf },
    /// Induced action on the quotient by those blocks.
    QuotientAction { action: PathBuf, subgroup: PathBuf },
}

#[derive(Subcommand)]
enum BlowupCmd {
    /// Complete the input data and report what was added.
    Normalize {
        input: PathBuf,
    },
    /// Build the blowup.
    Construct {
        input: PathBuf,
        #[arg(long)]
        verify: bool,
    },
    /// Check every blowup condition.
    Verify {
        input: PathBuf,
    },
    /// Refine the tree along the vertex subgroups.
    RefineTree {
        input: PathBuf,
    },
    /// Quotient of the blowup by the vertex subgroups.
    Quotient {
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum GosCmd {
    /// Total space of a graph of spaces.
    Total { gos: PathBuf },
    /// Whether a map of graphs of spaces is a covering.
    CheckCover { morphism: PathBuf },
    /// Fiber product of two graph morphisms with a common target.
    FiberProduct { first: PathBuf, second: PathBuf },
    /// Quotient by a group generated by automorphisms.
    Quotient {
        #[arg(required = true, num_args = 1..)]
        automorphisms: Vec<PathBuf>,
    },
    /// Deck transformations of a covering.
    Deck { morphism: PathBuf },
}

#[derive(Subcommand)]
enum LeightonCmd {
    /// Stable degree refinement of a graph.
    Refine {
        graph: PathBuf,
    },
    /// Common finite cover of two graphs.
    CommonCover {
        first: PathBuf,
        second: PathBuf,
    },
    /// Minimal common cover by exhaustive search up to `--max-degree`.
    Oracle {
        first: PathBuf,
        second: PathBuf,
    },
    /// Common cover of two graphs of spaces with rigid stars.
    GosCover {
        first: PathBuf,
        second: PathBuf,
    },
    #[command(subcommand)]
    /// Hat cover data: conditions, gluing, balls.
    Hat(HatCmd),
}

#[derive(Subcommand)]
enum HatCmd {
    /// Check the hat conditions and glue the pieces.
    Verify {
        data: PathBuf,
    },
    /// Assemble the ball of the glued cover around a vertex.
    Ball {
        data: PathBuf,
        #[arg(long, default_value_t = 1)]
        radius: usize,
    },
}

impl Command {
    fn name(&self) -> String {
        let s = match self {
            Command::Graph(c) => match c {
                GraphCmd::Validate { .. } => "graph validate",
                GraphCmd::Subdivide { .. } => "graph subdivide",
                GraphCmd::Quotient { .. } => "graph quotient",
                GraphCmd::Lift { .. } => "graph lift",
            },
            Command::Group(c) => match c {
                GroupCmd::Orbits { .. } => "group orbits",
                GroupCmd::Stab { .. } => "group stab",
                GroupCmd::Blocks { .. } => "group blocks",
                GroupCmd::Kernel { .. } => "group kernel",
            },
            Command::Aut(c) => match c {
                AutCmd::Group { .. } => "aut group",
                AutCmd::OrbitBound { .. } => "aut orbit-bound",
            },
            Command::Imprim(c) => match c {
                ImprimCmd::FromNormal { .. } => "imprim from-normal",
                ImprimCmd::QuotientAction { .. } => "imprim quotient-action",
            },
            Command::Blowup(c) => match c {
                BlowupCmd::Normalize { .. } => "blowup normalize",
                BlowupCmd::Construct { .. } => "blowup construct",
                BlowupCmd::Verify { .. } => "blowup verify",
                BlowupCmd::RefineTree { .. } => "blowup refine-tree",
                BlowupCmd::Quotient { .. } => "blowup quotient",
            },
            Command::Gos(c) => match c {
                GosCmd::Total { .. } => "gos total",
                GosCmd::CheckCover { .. } => "gos check-cover",
                GosCmd::FiberProduct { .. } => "gos fiber-product",
                GosCmd::Quotient { .. } => "gos quotient",
                GosCmd::Deck { .. } => "gos deck",
            },
            Command::Leighton(c) => match c {
                LeightonCmd::Refine { .. } => "leighton refine",
                LeightonCmd::CommonCover { .. } => "leighton common-cover",
                LeightonCmd::Oracle { .. } => "leighton oracle",
                LeightonCmd::GosCover { .. } => "leighton gos-cover",
                LeightonCmd::Hat(HatCmd::Verify { .. }) => "leighton hat verify",
                LeightonCmd::Hat(HatCmd::Ball { .. }) => "leighton hat ball",
            },
        };
        s.to_string()
    }

    fn inputs(&self) -> Vec<&Path> {
        fn one(p: &Path) -> Vec<&Path> {
            vec![p]
        }
        fn two<'a>(a: &'a Path, b: &'a Path) -> Vec<&'a Path> {
            vec![a, b]
        }
        match self {
            Command::Graph(
                GraphCmd::Validate { graph } | GraphCmd::Subdivide { graph } | GraphCmd::Quotient { graph, .. } | GraphCmd::Lift { graph, .. },
            ) => one(graph),
            Command::Group(GroupCmd::Orbits { group } | GroupCmd::Stab { group, .. } | GroupCmd::Blocks { group }) => one(group),
            Command::Group(GroupCmd::Kernel { action }) | Command::Aut(AutCmd::OrbitBound { action }) => one(action),
            Command::Aut(AutCmd::Group { graph }) => one(graph),
            Command::Imprim(ImprimCmd::FromNormal { action, subgroup } | ImprimCmd::QuotientAction { action, subgroup }) => {
                two(action, subgroup)
            }
            Command::Blowup(
                BlowupCmd::Normalize { input }
                | BlowupCmd::Construct { input, .. }
                | BlowupCmd::Verify { input }
                | BlowupCmd::RefineTree { input }
                | BlowupCmd::Quotient { input },
            ) => one(input),
            Command::Gos(GosCmd::Total { gos }) => one(gos),
            Command::Gos(GosCmd::CheckCover { morphism } | GosCmd::Deck { morphism }) => one(morphism),
            Command::Gos(GosCmd::FiberProduct { first, second }) => two(first, second),
            Command::Gos(GosCmd::Quotient { automorphisms }) => automorphisms.iter().map(PathBuf::as_path).collect(),
            Command::Leighton(LeightonCmd::Refine { graph }) => one(graph),
            Command::Leighton(
                LeightonCmd::CommonCover { first, second }
                | LeightonCmd::Oracle { first, second }
                | LeightonCmd::GosCover { first, second },
            ) => two(first, second),
            Command::Leighton(LeightonCmd::Hat(HatCmd::Verify { data } | HatCmd::Ball { data, .. })) => one(data),
        }
    }

    fn run(&self, cx: &Ctx) -> Run {
        match self {
            Command::Graph(c) => match c {
                GraphCmd::Validate { graph } => cx.graph_validate(graph),
                GraphCmd::Subdivide { graph } => cx.graph_subdivide(graph),
                GraphCmd::Quotient { graph, blocks, multigraph } => cx.graph_quotient(graph, blocks, *multigraph),
                GraphCmd::Lift { graph, degree } => cx.graph_lift(graph, *degree),
            },
            Command::Group(c) => match c {
                GroupCmd::Orbits { group } => cx.group_orbits(group),
                GroupCmd::Stab { group, points } => cx.group_stab(group, points),
                GroupCmd::Blocks { group } => cx.group_blocks(group),
                GroupCmd::Kernel { action } => cx.group_kernel(action),
            },
            Command::Aut(c) => match c {
                AutCmd::Group { graph } => cx.aut_group(graph),
                AutCmd::OrbitBound { action } => cx.aut_orbit_bound(action),
            },
            Command::Imprim(c) => match c {
                ImprimCmd::FromNormal { action, subgroup } => cx.imprim_from_normal(action, subgroup),
                ImprimCmd::QuotientAction { action, subgroup } => cx.imprim_quotient_action(action, subgroup),
            },
            Command::Blowup(c) => match c {
                BlowupCmd::Normalize { input } => cx.blowup_normalize(input),
                BlowupCmd::Construct { input, verify } => cx.blowup_construct(input, *verify),
                BlowupCmd::Verify { input } => cx.blowup_construct(input, true),
                BlowupCmd::RefineTree { input } => cx.blowup_refine_tree(input),
                BlowupCmd::Quotient { input } => cx.blowup_quotient(input),
            },
            Command::Gos(c) => match c {
                GosCmd::Total { gos } => cx.gos_total(gos),
                GosCmd::CheckCover { morphism } => cx.gos_check_cover(morphism),
                GosCmd::FiberProduct { first, second } => cx.gos_fiber_product(first, second),
                GosCmd::Quotient { automorphisms } => cx.gos_quotient(automorphisms),
                GosCmd::Deck { morphism } => cx.gos_deck(morphism),
            },
            Command::Leighton(c) => match c {
                LeightonCmd::Refine { graph } => cx.leighton_refine(graph),
                LeightonCmd::CommonCover { first, second } => cx.leighton_common_cover(first, second),
                LeightonCmd::Oracle { first, second } => cx.leighton_oracle(first, second),
                LeightonCmd::GosCover { first, second } => cx.leighton_gos_cover(first, second),
                LeightonCmd::Hat(HatCmd::Verify { data }) => cx.hat_verify(data),
                LeightonCmd::Hat(HatCmd::Ball { data, radius }) => cx.hat_ball(data, *radius),
            },
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    // usage errors exit 1; exit 2 is reserved for verified negatives
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let o = &cli.opts;
    let config = Config { element_bound: o.element_bound, max_degree: o.max_degree, seed: o.seed };
    let cx = Ctx { config: config.clone(), loader: Loader { element_bound: o.element_bound } };

    let outcome = cli.command.run(&cx);
    let mut report = json!({
        "command": cli.command.name(),
        "config": config.json(),
        "inputs": cli.command.inputs().iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let (code, drawing) = match outcome {
        Ok(out) => {
            report["result"] = out.result;
            match out.negative {
                None => {
                    report["status"] = json!("ok");
                    (0, out.drawing)
                }
                Some(msg) => {
                    report["status"] = json!("negative");
                    report["message"] = Value::String(msg);
                    (2, out.drawing)
                }
            }
        }
        Err(f) => {
            let (status, msg, code) = match f {
                Failure::Negative(m) => ("negative", m, 2),
                Failure::Rejected(m) => ("error", m, 1),
                Failure::Input(e) => ("error", e.to_string(), 1),
            };
            report["status"] = json!(status);
            report["message"] = Value::String(msg.clone());
            if code == 1 {
                eprintln!("error: {msg}");
            }
            (code, None)
        }
    };

    let mut code = code;
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    print!("{text}");
    let mut outputs: Vec<(&PathBuf, String)> = Vec::new();
    if let Some(path) = &o.report {
        outputs.push((path, text));
    }
    match (&drawing, &o.dot, &o.emit) {
        (Some(d), dot, emit) => {
            if let Some(path) = dot {
                outputs.push((path, dot::render(d)));
            }
            if let Some(path) = emit {
                outputs.push((path, serde_json::to_string_pretty(&schema::graph_json(&d.graph)).expect("graphs serialize") + "\n"));
            }
        }
        (None, Some(_), _) | (None, _, Some(_)) if code == 0 => {
            eprintln!("error: `{}` produces no graph", cli.command.name());
            code = 1;
        }
        _ => {}
    }
    for (path, text) in outputs {
        if let Err(e) = write(path, &text) {
            eprintln!("error: {e}");
            code = 1;
        }
    }
    ExitCode::from(code)
}
