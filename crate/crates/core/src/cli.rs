//! The `pgp` command line.
//!
//! Exit codes: `check` returns 0 when the stipulation holds, 1 when it is
//! violated and 2 on any error. `closure` returns 1 when no solving plan
//! exists. Every other command returns 0 on success and 2 on error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::closure::{plan_closure, ClosureOptions, ClosureResult};
use crate::dot::{to_dot, DotStyle};
use crate::graph::{PGraph, VertexId};
use crate::observer::{Estimator, Mode, Reach};
use crate::ops::to_state_determined;
use crate::planning::{check_divulgence_superset, simulate, solves, Adversary};
use crate::scenario::{closure_to_json, graph_to_json, CaseTag, Scenario};
use crate::stipulation::{
    check_stipulation, evaluate_estimates, parse_formula, CheckOptions, Formula,
};

pub const DEFAULT_DEPTH: usize = 8;
pub const DEPTH_ENV: &str = "PGP_DEPTH";

/// Depth for bounded checks: `PGP_DEPTH` when set to a number, else 8.
pub fn default_depth() -> usize {
    std::env::var(DEPTH_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DEPTH)
}

#[derive(Debug, Parser)]
#[command(
    name = "pgp",
    version,
    about = "Plans, observers and information stipulations over p-graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Member,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Member => Mode::Member,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversaryArg {
    Uniform,
    Minimizing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Section {
    World,
    Plan,
    Filter,
    Closure,
}

#[derive(Debug, clap::Args)]
pub struct ProvisoArgs {
    /// Do not let an initial green successor justify a predecessor.
    #[arg(long, conflicts_with = "no_proviso")]
    pub proviso: bool,
    /// Let any green successor justify a predecessor (the default).
    #[arg(long)]
    pub no_proviso: bool,
}

impl ProvisoArgs {
    fn options(&self) -> ClosureOptions {
        ClosureOptions {
            initial_proviso: self.proviso && !self.no_proviso,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the scenario's stipulation on every observer estimate.
    Check {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Divulgence case; defaults to the scenario's own.
        #[arg(long)]
        case: Option<CaseTag>,
        /// Depth for the divulgence superset check and for `--bounded`.
        #[arg(long)]
        depth: Option<usize>,
        /// Only consider executions of at most `--depth` labels.
        #[arg(long)]
        bounded: bool,
        /// Also evaluate filter sets no consistent execution reaches.
        #[arg(long)]
        include_vacuous: bool,
        /// Check this formula instead of the scenario's stipulation.
        #[arg(long)]
        formula: Option<String>,
        #[command(flatten)]
        proviso: ProvisoArgs,
    },
    /// Compute the plan closure of the scenario's world.
    Closure {
        scenario: PathBuf,
        /// Write coloring, policy and closure as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        proviso: ProvisoArgs,
    },
    /// Print the state-determined form of a graph section.
    Sde {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Section::World)]
        section: Section,
        /// Write the result in the scenario graph format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the plan against the world and replay what the observer sees.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = AdversaryArg::Uniform)]
        adversary: AdversaryArg,
        #[arg(long)]
        case: Option<CaseTag>,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
    },
    /// Render a graph section as Graphviz DOT.
    Dot {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Section::World)]
        section: Section,
        /// Fill vertices by closure color.
        #[arg(long)]
        color: bool,
    },
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

type CmdResult = Result<i32, Box<dyn std::error::Error>>;

fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Check {
            scenario,
            mode,
            case,
            depth,
            bounded,
            include_vacuous,
            formula,
            proviso,
        } => {
            let depth = depth.unwrap_or_else(default_depth);
            cmd_check(
                &Scenario::load(&scenario)?,
                CheckArgs {
                    case,
                    depth,
                    options: CheckOptions {
                        mode: mode.into(),
                        reach: if bounded {
                            Reach::Depth(depth)
                        } else {
                            Reach::Unbounded
                        },
                        include_vacuous,
                    },
                    formula,
                    closure: proviso.options(),
                },
                out,
            )
        }
        Command::Closure {
            scenario,
            out: path,
            proviso,
        } => cmd_closure(&Scenario::load(&scenario)?, proviso.options(), path, out),
        Command::Sde {
            scenario,
            section,
            out: path,
        } => cmd_sde(&Scenario::load(&scenario)?, section, path, out),
        Command::Simulate {
            scenario,
            seed,
            steps,
            adversary,
            case,
            mode,
        } => cmd_simulate(
            &Scenario::load(&scenario)?,
            SimulateArgs {
                seed,
                steps,
                adversary: match adversary {
                    AdversaryArg::Uniform => Adversary::UniformRandom,
                    AdversaryArg::Minimizing => Adversary::Minimizing,
                },
                case,
                mode: mode.into(),
            },
            out,
        ),
        Command::Dot {
            scenario,
            section,
            color,
        } => cmd_dot(&Scenario::load(&scenario)?, section, color, out),
    }
}

fn states(set: &std::collections::BTreeSet<VertexId>) -> String {
    let v: Vec<&str> = set.iter().map(VertexId::as_str).collect();
    format!("{{{}}}", v.join(", "))
}

fn formula_for(
    scenario: &Scenario,
    override_text: Option<&str>,
) -> Result<Formula, Box<dyn std::error::Error>> {
    let text = override_text
        .or(scenario.stipulation.as_deref())
        .ok_or("scenario has no `stipulation` and no --formula was given")?;
    Ok(parse_formula(text)?)
}

pub struct CheckArgs {
    pub case: Option<CaseTag>,
    pub depth: usize,
    pub options: CheckOptions,
    pub formula: Option<String>,
    pub closure: ClosureOptions,
}

pub fn cmd_check(scenario: &Scenario, args: CheckArgs, out: &mut dyn Write) -> CmdResult {
    let problem = scenario.problem()?;
    let h = scenario.labelmap()?;
    let formula = formula_for(scenario, args.formula.as_deref())?;
    let case = match args.case {
        Some(c) => c,
        None => scenario.case_tag()?,
    };
    let observer = scenario.observer(case, args.closure)?;
    let verdict = check_stipulation(&problem, h, &observer, &formula, args.options)?;

    writeln!(out, "stipulation: {formula}")?;
    writeln!(
        out,
        "case {case}, mode {}, {}",
        args.options.mode,
        match args.options.reach {
            Reach::Unbounded => "all executions".to_owned(),
            Reach::Depth(k) => format!("executions up to {k} labels"),
        }
    )?;
    if let Some(plan) = &scenario.plan {
        let covered = check_divulgence_superset(&observer.divulged, plan, args.depth);
        writeln!(
            out,
            "divulged graph covers the executed plan up to depth {}: {}",
            args.depth,
            if covered { "yes" } else { "NO" }
        )?;
        let report = solves(plan, &problem);
        match &report.diagnosis {
            None => writeln!(out, "executed plan solves the problem: yes")?,
            Some(d) => writeln!(out, "executed plan solves the problem: NO ({d})")?,
        }
    }
    writeln!(out, "estimates checked: {}", verdict.estimates_checked)?;
    if verdict.satisfied {
        writeln!(out, "SATISFIED")?;
        return Ok(0);
    }
    writeln!(out, "VIOLATED on {} estimate(s)", verdict.violations.len())?;
    for v in &verdict.violations {
        writeln!(out, "  filter states {}", v.estimate.b)?;
        writeln!(out, "    estimate {}", states(&v.estimate.world_states))?;
        let atoms: Vec<String> = v
            .atoms
            .iter()
            .map(|(a, val)| format!("{a}={val}"))
            .collect();
        writeln!(out, "    atoms {}", atoms.join(", "))?;
        for (w, s) in &v.estimate.witnesses {
            let image = h.image_of_execution(s)?;
            writeln!(out, "    witness {w}: {s}  (observer sees {image})")?;
        }
    }
    Ok(1)
}

fn print_closure(c: &ClosureResult, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "state-determined world: {} vertices, initial proviso {}",
        c.wprime.vertex_count(),
        if c.options.initial_proviso {
            "on"
        } else {
            "off"
        }
    )?;
    writeln!(out, "coloring:")?;
    for (v, color) in &c.coloring {
        writeln!(out, "  {v} {color}")?;
    }
    writeln!(out, "policy:")?;
    for (v, a) in &c.pi {
        writeln!(out, "  {v} -> {a}")?;
    }
    writeln!(
        out,
        "closure: {} vertices, {} edges",
        c.pstar.vertex_count(),
        c.pstar.edge_count()
    )?;
    for (src, dst, labels) in c.pstar.edges() {
        let names: Vec<&str> = labels.iter().map(|l| l.name()).collect();
        writeln!(out, "  {src} -[{}]-> {dst}", names.join(", "))?;
    }
    Ok(())
}

pub fn cmd_closure(
    scenario: &Scenario,
    options: ClosureOptions,
    path: Option<PathBuf>,
    out: &mut dyn Write,
) -> CmdResult {
    let c = plan_closure(&scenario.problem()?, options)?;
    print_closure(&c, out)?;
    if let Some(path) = path {
        std::fs::write(&path, closure_to_json(&c))?;
        writeln!(out, "wrote {}", path.display())?;
    }
    if c.no_solving_plan() {
        writeln!(out, "no solving plan exists")?;
        return Ok(1);
    }
    Ok(0)
}

fn section_graph(
    scenario: &Scenario,
    section: Section,
) -> Result<PGraph, Box<dyn std::error::Error>> {
    Ok(match section {
        Section::World => scenario.world.clone(),
        Section::Plan => scenario.plan()?.graph().clone(),
        Section::Filter => scenario.filter()?.clone(),
        Section::Closure => plan_closure(&scenario.problem()?, ClosureOptions::default())?.pstar,
    })
}

pub fn cmd_sde(
    scenario: &Scenario,
    section: Section,
    path: Option<PathBuf>,
    out: &mut dyn Write,
) -> CmdResult {
    let g = section_graph(scenario, section)?;
    let det = to_state_determined(&g);
    writeln!(
        out,
        "{} vertices -> {} vertices",
        g.vertex_count(),
        det.graph.vertex_count()
    )?;
    for (v, kind) in det.graph.vertices() {
        writeln!(out, "  {v} {kind}")?;
    }
    for (src, dst, labels) in det.graph.edges() {
        let names: Vec<&str> = labels.iter().map(|l| l.name()).collect();
        writeln!(out, "  {src} -[{}]-> {dst}", names.join(", "))?;
    }
    for v in det.mixed_kind() {
        writeln!(out, "warning: {v} mixes action and observation vertices")?;
    }
    if let Some(path) = path {
        std::fs::write(&path, graph_to_json(&det.graph, None))?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(0)
}

pub struct SimulateArgs {
    pub seed: u64,
    pub steps: usize,
    pub adversary: Adversary,
    pub case: Option<CaseTag>,
    pub mode: Mode,
}

pub fn cmd_simulate(scenario: &Scenario, args: SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let problem = scenario.problem()?;
    let plan = scenario.plan()?;
    let trace = simulate(plan, &problem, args.seed, args.steps, args.adversary);

    // The observer replay needs the disclosure sections; without them only
    // the trace is printed.
    let replay = match (&scenario.labelmap, &scenario.filter) {
        (Some(h), Some(_)) => {
            let case = args
                .case
                .or(scenario.divulgence.as_ref().map(|d| d.case))
                .unwrap_or(CaseTag::I);
            let observer = scenario.observer(case, ClosureOptions::default())?;
            let estimator = Estimator::new(problem.world(), h, &observer, Reach::Unbounded)?;
            let lifted = h.preimage_graph(&observer.filter, false)?;
            let formula = scenario
                .stipulation
                .as_deref()
                .map(parse_formula)
                .transpose()?;
            Some((h, case, estimator, lifted, formula))
        }
        _ => None,
    };

    let adversary = match args.adversary {
        Adversary::UniformRandom => "uniform",
        Adversary::Minimizing => "minimizing",
    };
    writeln!(out, "seed {}, adversary {adversary}", args.seed)?;
    if let Some((_, case, _, _, _)) = &replay {
        writeln!(out, "observer: case {case}, mode {}", args.mode)?;
    }
    let mut satisfied_so_far = true;
    let mut prefix = crate::graph::Execution::empty();
    for (i, step) in trace.steps.iter().enumerate() {
        prefix.push(step.label.clone());
        write!(
            out,
            "{i:>3}  {} @ {}  {}",
            step.plan_vertex, step.world_vertex, step.label
        )?;
        if let Some((h, _, estimator, lifted, formula)) = &replay {
            let image = h.image(&step.label)?;
            let reached = lifted.reached_vertices(&prefix);
            write!(out, "  | sees {image}")?;
            if reached.is_empty() {
                write!(out, "  filter rejects the stream")?;
            } else {
                let b = crate::observer::BSet::new(reached);
                let estimate = estimator.estimate(&b, args.mode);
                write!(
                    out,
                    "  filter {b}  estimate {}",
                    states(&estimate.world_states)
                )?;
                if let Some(f) = formula {
                    let ok = evaluate_estimates(f, vec![estimate]).satisfied;
                    satisfied_so_far &= ok;
                    write!(out, "  {}", if ok { "ok" } else { "VIOLATION" })?;
                }
            }
        }
        writeln!(out)?;
    }
    writeln!(out, "outcome: {}", trace.outcome)?;
    if matches!(&replay, Some((_, _, _, _, Some(_)))) {
        writeln!(
            out,
            "stipulation along this run: {}",
            if satisfied_so_far {
                "satisfied"
            } else {
                "violated"
            }
        )?;
    }
    Ok(0)
}

pub fn cmd_dot(
    scenario: &Scenario,
    section: Section,
    color: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let closure = if color || section == Section::Closure {
        Some(plan_closure(
            &scenario.problem()?,
            ClosureOptions::default(),
        )?)
    } else {
        None
    };
    let dot = match (section, &closure) {
        (Section::Closure, Some(c)) => {
            let shown = if color { &c.wprime } else { &c.pstar };
            to_dot(
                shown,
                &DotStyle {
                    name: "closure",
                    coloring: color.then_some(&c.coloring),
                    marked: Some(&c.goals_prime),
                },
            )
        }
        (Section::World, _) => {
            let coloring = closure.as_ref().map(|c| {
                scenario
                    .world
                    .vertex_ids()
                    .filter_map(|v| {
                        let sd = c.vertex_of(v.as_str())?;
                        Some((v.clone(), c.color(sd.as_str())?))
                    })
                    .collect()
            });
            to_dot(
                &scenario.world,
                &DotStyle {
                    name: "world",
                    coloring: coloring.as_ref(),
                    marked: Some(&scenario.goals),
                },
            )
        }
        (Section::Plan, _) => {
            let plan = scenario.plan()?;
            to_dot(
                plan.graph(),
                &DotStyle {
                    name: "plan",
                    coloring: None,
                    marked: Some(plan.terminals()),
                },
            )
        }
        (Section::Filter, _) => to_dot(
            scenario.filter()?,
            &DotStyle {
                name: "filter",
                ..DotStyle::default()
            },
        ),
        (Section::Closure, None) => unreachable!("closure computed above"),
    };
    out.write_all(dot.as_bytes())?;
    Ok(0)
}
