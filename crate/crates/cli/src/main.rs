use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use airdrop_core::pipeline::{
    audit, export_cost_matrix, import_tour, instance_nodes, load_report, plan_to_json, run_phases, FailureKind,
    TspInstance, AUDIT_TOLERANCE,
};
use airdrop_core::{load_scenario, render_svg, ConfigError, Phase, PipelineError, RunReport, Scenario, SvgStyle};

#[derive(Parser)]
#[command(name = "airdrop", version, about = "Rapid area coverage by aerial drop: plan, simulate, render")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the coverage grid resolution, metres.
    #[arg(long)]
    resolution: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    CoveragePath,
    DropOverview,
    MgvNetwork,
}

#[derive(Clone, Copy, ValueEnum)]
enum Instance {
    Coverage,
    Drop,
}

#[derive(Subcommand)]
enum Command {
    /// Rapid high-altitude coverage tour.
    PlanCoverage(RunArgs),
    /// Coverage tour, drop points and drop tour.
    PlanDrop(RunArgs),
    /// Everything up to the agent descents.
    Simulate(RunArgs),
    /// Everything up to ground-vehicle redistribution.
    MgvPlan(RunArgs),
    /// Full pipeline including figures.
    Run(RunArgs),
    /// Render a figure from a finished output directory.
    Render {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_enum)]
        style: Style,
        /// Destination; defaults to `<dir>/<style>.svg`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute reported numbers from the files in an output directory.
    Audit {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Write a touring instance as a full cost matrix.
    ExportTsp {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "coverage")]
        instance: Instance,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a plan from an externally computed tour.
    ImportTour {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "coverage")]
        instance: Instance,
        #[arg(long)]
        tour: PathBuf,
        /// Plan JSON destination.
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: &'static str,
    exit: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let (code, exit) = match &e {
            PipelineError::Config(_) => ("E_CONFIG", 2),
            PipelineError::Phase { kind: FailureKind::Planning, .. } => ("E_PLANNING", 3),
            PipelineError::Phase { kind: FailureKind::Simulation, .. } => ("E_SIMULATION", 4),
            PipelineError::Io { .. } => ("E_IO", 1),
            PipelineError::Tour { .. } => ("E_TOUR", 3),
        };
        Failure { code, exit, message: e.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        PipelineError::Config(e).into()
    }
}

fn scenario(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let mut s = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(r) = args.resolution {
        s.grid_resolution = Some(r);
    }
    s.validate()?;
    Ok(s)
}

fn summary(report: &RunReport, out: &Path) -> String {
    let c = &report.coverage;
    let frac = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    let mut line = format!(
        "{}: phases {}; coverage rapid {} first-sample {} descent {}",
        out.display(),
        report.completed.iter().map(|p| p.name()).collect::<Vec<_>>().join(","),
        frac(c.rapid),
        frac(c.drop_first_sample),
        frac(c.descent),
    );
    if let Some(p) = &report.drop_plan {
        line += &format!("; {} drop points, drop tour {:.1} m", p.drop_points.len(), p.total_length);
    }
    if let Some(m) = &report.mgv {
        line += &format!("; network connected {} at {:.1} m", m.network.connected, m.network.comm_range);
    }
    line
}

fn instance(i: Instance) -> TspInstance {
    match i {
        Instance::Coverage => TspInstance::Coverage,
        Instance::Drop => TspInstance::Drop,
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let phases = |args: &RunArgs, until: Phase| -> Result<(), Failure> {
        let s = scenario(&args.scenario)?;
        let report = run_phases(&s, &args.out, until)?;
        println!("{}", summary(&report, &args.out));
        Ok(())
    };
    match cli.command {
        Command::PlanCoverage(a) => phases(&a, Phase::Coverage),
        Command::PlanDrop(a) => phases(&a, Phase::DropTour),
        Command::Simulate(a) => phases(&a, Phase::Descent),
        Command::MgvPlan(a) => phases(&a, Phase::Mgv),
        Command::Run(a) => phases(&a, Phase::Evaluation),
        Command::Render { dir, style, out } => {
            let report = load_report(&dir)?;
            let style = match style {
                Style::CoveragePath => SvgStyle::CoveragePath,
                Style::DropOverview => SvgStyle::DropOverview,
                Style::MgvNetwork => SvgStyle::MgvNetwork,
            };
            let svg = render_svg(&report, style)
                .map_err(|e| Failure { code: "E_PLANNING", exit: 3, message: e.to_string() })?;
            let out = out.unwrap_or_else(|| dir.join(format!("{}.svg", style.name())));
            std::fs::write(&out, svg)
                .map_err(|e| Failure { code: "E_IO", exit: 1, message: format!("{}: {e}", out.display()) })?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Audit { dir } => {
            let checks = audit(&dir)?;
            for c in &checks {
                println!(
                    "{} {}: reported {} recomputed {}",
                    if c.ok { "ok  " } else { "FAIL" },
                    c.name,
                    c.reported,
                    c.recomputed
                );
            }
            match checks.iter().find(|c| !c.ok) {
                Some(c) => Err(Failure {
                    code: "E_AUDIT",
                    exit: 1,
                    message: format!("{} differs by more than {AUDIT_TOLERANCE}", c.name),
                }),
                None => Ok(()),
            }
        }
        Command::ExportTsp { scenario: a, instance: i, out } => {
            let s = scenario(&a)?;
            let nodes = instance_nodes(&s, instance(i))?;
            let costs = nodes.cost_matrix(&s)?;
            export_cost_matrix(&costs, &out)?;
            println!("{}: {} nodes", out.display(), costs.n());
            Ok(())
        }
        Command::ImportTour { scenario: a, instance: i, tour, out } => {
            let s = scenario(&a)?;
            let nodes = instance_nodes(&s, instance(i))?;
            let costs = nodes.cost_matrix(&s)?;
            let t = import_tour(&tour, &costs, nodes.closed)?;
            let plan = nodes.plan_from_order(&s, &t.order)?;
            std::fs::write(&out, plan_to_json(&plan))
                .map_err(|e| Failure { code: "E_IO", exit: 1, message: format!("{}: {e}", out.display()) })?;
            println!("{}: {} waypoints, plan length {:.3} m", out.display(), plan.waypoints.len(), plan.total_length);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.code, f.message.replace('\n', " "));
            ExitCode::from(f.exit)
        }
    }
}
