//! Runs a scenario phase by phase and writes its artifacts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descent::{
    accumulate_descent_coverage, omega_heuristic, simulate_descent, DescentSample, DescentTrajectory,
};
use crate::dubins::{DubinsPath, Pose4};
use crate::fmt::round_json;
use crate::geometry::{AreaOfInterest, Point2};
use crate::mgv::{
    communication_targets, connectivity_check, drive_paths, enu_to_wgs84, optimal_assignment, Assignment,
    CommNetwork, GeodeticCoord, Point3,
};
use crate::mission::{
    drop_first_sample_grid, plan_drop_points, plan_drop_tour, plan_rapid_coverage, rapid_coverage_grid,
    AgentKind, DropPoint, MissionPlan,
};
use crate::render::{render_svg, SvgStyle};
use crate::scenario::{ConfigError, Scenario};
use crate::sensing::{CameraModel, CoverageGrid};
use crate::tsp::{dubins_cost_matrix, format_full_matrix, parse_tour_order, CostMatrix, Tour, TspError};

pub const REPORT_FILE: &str = "report.json";
pub const PLAN_FILE: &str = "plan.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const FAILURE_MARKER: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Coverage,
    DropPoints,
    DropTour,
    Descent,
    Mgv,
    Evaluation,
}

impl Phase {
    pub const ALL: [Phase; 6] =
        [Phase::Coverage, Phase::DropPoints, Phase::DropTour, Phase::Descent, Phase::Mgv, Phase::Evaluation];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Coverage => "coverage",
            Phase::DropPoints => "drop_points",
            Phase::DropTour => "drop_tour",
            Phase::Descent => "descent",
            Phase::Mgv => "mgv",
            Phase::Evaluation => "evaluation",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Planning,
    Simulation,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{phase} phase failed: {message}")]
    Phase { phase: Phase, kind: FailureKind, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("tour file {path}: {source}")]
    Tour { path: String, source: TspError },
}

impl PipelineError {
    fn planning(phase: Phase, e: impl fmt::Display) -> Self {
        PipelineError::Phase { phase, kind: FailureKind::Planning, message: e.to_string() }
    }

    fn io(path: &Path, e: impl fmt::Display) -> Self {
        PipelineError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub agent_id: usize,
    pub agent_kind: AgentKind,
    /// Relative to the output directory.
    pub file: String,
    pub omega: Option<f64>,
    pub touchdown: Point2,
    pub touchdown_time: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoverageSummary {
    /// Coverage-pass footprints at the viewpoints.
    pub rapid: Option<f64>,
    /// Disk footprints at the release points.
    pub drop_first_sample: Option<f64>,
    /// Every descent sample above the cutoff altitude, all agents.
    pub descent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgvReport {
    pub agent_ids: Vec<usize>,
    pub landing: Vec<Pose4>,
    pub targets: Vec<Point2>,
    pub targets_wgs84: Option<Vec<GeodeticCoord>>,
    pub assignment: Assignment,
    pub drive_paths: Vec<DubinsPath>,
    pub drive_total_length: f64,
    pub initial_network: CommNetwork,
    pub network: CommNetwork,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: Phase,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub area: AreaOfInterest,
    pub camera: CameraModel,
    pub coverage_altitude: f64,
    pub resolution: f64,
    pub z_cutoff: f64,
    pub completed: Vec<Phase>,
    pub coverage_plan: Option<MissionPlan>,
    pub drop_plan: Option<MissionPlan>,
    pub trajectories: Vec<TrajectoryRecord>,
    pub coverage: CoverageSummary,
    pub mgv: Option<MgvReport>,
    pub artifacts: Vec<String>,
    /// Parallel to `trajectories`; stored in the CSV files.
    #[serde(skip)]
    pub traces: Vec<DescentTrajectory>,
    /// Wall-clock seconds; stored in their own file.
    #[serde(skip)]
    pub timings: Vec<PhaseTiming>,
}

impl RunReport {
    fn new(s: &Scenario) -> Self {
        Self {
            scenario: s.name.clone(),
            seed: s.seed,
            area: s.area,
            camera: s.camera,
            coverage_altitude: s.coverage_altitude,
            resolution: s.resolution(),
            z_cutoff: s.z_cutoff,
            completed: Vec::new(),
            coverage_plan: None,
            drop_plan: None,
            trajectories: Vec::new(),
            coverage: CoverageSummary::default(),
            mgv: None,
            artifacts: Vec::new(),
            traces: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// Drop points in agent order.
    pub fn drop_points(&self) -> Vec<DropPoint> {
        let mut d = self.drop_plan.as_ref().map(|p| p.drop_points.clone()).unwrap_or_default();
        d.sort_by_key(|p| p.agent_id);
        d
    }

    pub fn grid(&self) -> Result<CoverageGrid, PipelineError> {
        CoverageGrid::new(self.area, self.resolution).map_err(|e| PipelineError::planning(Phase::Evaluation, e))
    }
}

struct Runner<'a> {
    scenario: &'a Scenario,
    out: PathBuf,
    report: RunReport,
    drops: Vec<DropPoint>,
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

impl Runner<'_> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
        fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
        if !self.report.artifacts.iter().any(|a| a == rel) {
            self.report.artifacts.push(rel.to_string());
        }
        Ok(())
    }

    fn write_pgm(&mut self, rel: &str, grid: &CoverageGrid) -> Result<(), PipelineError> {
        let mut buf = Vec::new();
        grid.write_pgm(&mut buf).expect("writing to memory");
        self.write(rel, &buf)
    }

    fn grid(&self) -> Result<CoverageGrid, PipelineError> {
        self.report.grid()
    }

    fn coverage(&mut self) -> Result<(), PipelineError> {
        let s = self.scenario;
        let plan = plan_rapid_coverage(&s.area, s.coverage_altitude, &s.camera, &s.carrier, s.seed, &s.planner)
            .map_err(|e| PipelineError::planning(Phase::Coverage, e))?;
        let mut grid = self.grid()?;
        rapid_coverage_grid(&plan, &s.camera, &mut grid);
        self.report.coverage.rapid = Some(grid.covered_fraction());
        self.report.coverage_plan = Some(plan);
        self.write_pgm("coverage_rapid.pgm", &grid)
    }

    fn drop_points(&mut self) -> Result<(), PipelineError> {
        let s = self.scenario;
        let kinds = s.roster.kinds();
        if kinds.is_empty() {
            return Err(ConfigError::Invalid {
                field: "roster".into(),
                reason: "drop phases need at least one agent".into(),
            }
            .into());
        }
        self.drops = plan_drop_points(&s.area, &kinds, &s.camera, s.drop.z_floor, s.drop.z_ceiling, s.seed, &s.planner.lloyd)
            .map_err(|e| PipelineError::planning(Phase::DropPoints, e))?;
        let mut grid = self.grid()?;
        drop_first_sample_grid(&self.drops, &s.camera, &mut grid);
        self.report.coverage.drop_first_sample = Some(grid.covered_fraction());
        Ok(())
    }

    fn drop_tour(&mut self) -> Result<(), PipelineError> {
        let s = self.scenario;
        let entry = match (s.entry, &self.report.coverage_plan) {
            (Some(e), _) => e,
            (None, Some(plan)) => plan.final_pose(),
            (None, None) => unreachable!("coverage runs before the drop tour"),
        };
        let plan = plan_drop_tour(&self.drops, &s.carrier, &entry, &s.planner.kopt)
            .map_err(|e| PipelineError::planning(Phase::DropTour, e))?;
        self.report.drop_plan = Some(plan);
        Ok(())
    }

    fn descent(&mut self) -> Result<(), PipelineError> {
        let s = self.scenario;
        let mut grid = self.grid()?;
        for d in self.drops.clone() {
            let (traj, omega) = if d.agent_kind == AgentKind::Mav {
                let omega = s.mav.omega.unwrap_or_else(|| omega_heuristic(d.cell.area, d.altitude, &s.mav.omega_bounds));
                let spiral = s.mav.spiral(omega);
                (simulate_descent(&d, Some(&spiral), &s.mav.descent), Some(omega))
            } else {
                (simulate_descent(&d, None, &s.passive.descent), None)
            };
            let traj = traj.map_err(|e| PipelineError::Phase {
                phase: Phase::Descent,
                kind: FailureKind::Simulation,
                message: format!("agent {}: {e}", d.agent_id),
            })?;
            accumulate_descent_coverage(&traj, &s.camera, &mut grid, s.z_cutoff);
            let file = format!("trajectories/agent_{:03}_{}.csv", d.agent_id, d.agent_kind.label());
            let mut csv = Vec::new();
            traj.write_csv(&mut csv).expect("writing to memory");
            self.write(&file, &csv)?;
            self.report.trajectories.push(TrajectoryRecord {
                agent_id: d.agent_id,
                agent_kind: d.agent_kind,
                file,
                omega,
                touchdown: traj.touchdown,
                touchdown_time: traj.touchdown_time,
                samples: traj.samples.len(),
            });
            self.report.traces.push(traj);
        }
        self.report.coverage.descent = Some(grid.covered_fraction());
        self.write_pgm("coverage.pgm", &grid)
    }

    fn mgv(&mut self) -> Result<(), PipelineError> {
        let s = self.scenario;
        let err = |e: &dyn fmt::Display| PipelineError::planning(Phase::Mgv, e);
        let heading = s.passive.descent.heading;
        let (agent_ids, landing): (Vec<usize>, Vec<Pose4>) = self
            .report
            .trajectories
            .iter()
            .filter(|t| t.agent_kind == AgentKind::Mgv)
            .map(|t| (t.agent_id, Pose4::new(t.touchdown.x, t.touchdown.y, 0.0, heading)))
            .unzip();
        let n = landing.len();
        if n == 0 {
            return Ok(());
        }
        let targets = communication_targets(&s.area, n, s.seed, &s.planner.lloyd).map_err(|e| err(&e))?;
        let planar: Vec<Point2> = landing.iter().map(Pose4::planar).collect();
        let assignment = optimal_assignment(&planar, &targets).map_err(|e| err(&e))?;
        let paths = drive_paths(&assignment, &landing, &targets, s.mgv.r_min_car).map_err(|e| err(&e))?;
        let range = s.comm_range(n);
        let network = connectivity_check(&targets, range).map_err(|e| err(&e))?;
        let initial_network = connectivity_check(&planar, range).map_err(|e| err(&e))?;
        let targets_wgs84 = s.mgv.geo_reference.map(|g| {
            let r = g.coord();
            targets.iter().map(|t| enu_to_wgs84(&Point3 { x: t.x, y: t.y, z: 0.0 }, &r)).collect()
        });
        self.report.mgv = Some(MgvReport {
            agent_ids,
            landing,
            drive_total_length: paths.iter().map(|p| p.total_length).sum(),
            targets,
            targets_wgs84,
            assignment,
            drive_paths: paths,
            initial_network,
            network,
        });
        Ok(())
    }

    fn evaluation(&mut self) -> Result<(), PipelineError> {
        let mut styles = vec![SvgStyle::CoveragePath];
        if self.report.drop_plan.is_some() {
            styles.push(SvgStyle::DropOverview);
        }
        if self.report.mgv.is_some() {
            styles.push(SvgStyle::MgvNetwork);
        }
        for style in styles {
            let svg = render_svg(&self.report, style).map_err(|e| PipelineError::planning(Phase::Evaluation, e))?;
            self.write(&format!("{}.svg", style.name()), svg.as_bytes())?;
        }
        Ok(())
    }

    fn run_phase(&mut self, phase: Phase) -> Result<(), PipelineError> {
        let started = Instant::now();
        match phase {
            Phase::Coverage => self.coverage(),
            Phase::DropPoints => self.drop_points(),
            Phase::DropTour => self.drop_tour(),
            Phase::Descent => self.descent(),
            Phase::Mgv => self.mgv(),
            Phase::Evaluation => self.evaluation(),
        }?;
        self.report.completed.push(phase);
        self.report.timings.push(PhaseTiming { phase, seconds: started.elapsed().as_secs_f64() });
        Ok(())
    }

    fn finish(&mut self) -> Result<(), PipelineError> {
        let mut plans = serde_json::Map::new();
        if let Some(p) = &self.report.coverage_plan {
            plans.insert("coverage".into(), serde_json::to_value(p).expect("plans serialize"));
        }
        if let Some(p) = &self.report.drop_plan {
            plans.insert("drop".into(), serde_json::to_value(p).expect("plans serialize"));
        }
        self.write(PLAN_FILE, to_pretty_json(&plans).as_bytes())?;
        self.report.artifacts.push(REPORT_FILE.into());
        self.report.artifacts.sort();
        self.report.artifacts.dedup();
        let report = to_pretty_json(&self.report);
        self.write(REPORT_FILE, report.as_bytes())?;
        let timings = to_pretty_json(&self.report.timings);
        let path = self.out.join(TIMINGS_FILE);
        fs::write(&path, timings).map_err(|e| PipelineError::io(&path, e))
    }
}

/// Runs every phase up to and including `until`, writing artifacts into
/// `out_dir`. A failing phase leaves the outputs written so far plus a
/// failure marker naming the phase and cause.
pub fn run_phases(scenario: &Scenario, out_dir: &Path, until: Phase) -> Result<RunReport, PipelineError> {
    scenario.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let marker = out_dir.join(FAILURE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| PipelineError::io(&marker, e))?;
    }
    let mut runner =
        Runner { scenario, out: out_dir.to_path_buf(), report: RunReport::new(scenario), drops: Vec::new() };
    let mut result = Ok(());
    for phase in Phase::ALL.into_iter().filter(|&p| p <= until) {
        if phase == Phase::Mgv && scenario.roster.mgv == 0 {
            continue;
        }
        result = runner.run_phase(phase);
        if result.is_err() {
            break;
        }
    }
    let finished = runner.finish();
    if let Err(e) = &result {
        fs::write(&marker, format!("{e}\n")).map_err(|e| PipelineError::io(&marker, e))?;
    }
    result?;
    finished?;
    Ok(runner.report)
}

/// Full pipeline.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunReport, PipelineError> {
    run_phases(scenario, out_dir, Phase::Evaluation)
}

pub fn parse_trajectory_csv(text: &str) -> Result<DescentTrajectory, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some("t,x,y,z,psi,roll,pitch") => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let v = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| format!("row {}: {e}", i + 1))?;
        let [t, x, y, z, psi, roll, pitch] = v[..] else {
            return Err(format!("row {}: expected 7 fields, got {}", i + 1, v.len()));
        };
        samples.push(DescentSample { t, pose: Pose4 { x, y, z, psi }, roll, pitch });
    }
    let last = samples.last().ok_or("no samples")?;
    Ok(DescentTrajectory { touchdown: last.pose.planar(), touchdown_time: last.t, samples })
}

/// Reads a report and its trajectory files back from an output directory.
pub fn load_report(dir: &Path) -> Result<RunReport, PipelineError> {
    let path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
    let mut report: RunReport = serde_json::from_str(&text).map_err(|e| PipelineError::io(&path, e))?;
    for rec in &report.trajectories {
        let p = dir.join(&rec.file);
        let csv = fs::read_to_string(&p).map_err(|e| PipelineError::io(&p, e))?;
        report.traces.push(parse_trajectory_csv(&csv).map_err(|e| PipelineError::io(&p, e))?);
    }
    Ok(report)
}

/// One reported number and its recomputation from the written files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub reported: f64,
    pub recomputed: f64,
    pub ok: bool,
}

/// Absolute tolerance of audit comparisons.
pub const AUDIT_TOLERANCE: f64 = 1e-4;

/// Recomputes the report's coverage fractions and plan lengths from the
/// emitted plan and trajectory files.
pub fn audit(dir: &Path) -> Result<Vec<AuditCheck>, PipelineError> {
    let report = load_report(dir)?;
    let mut checks = Vec::new();
    let mut check = |name: &str, reported: Option<f64>, recomputed: f64| {
        if let Some(reported) = reported {
            let ok = (reported - recomputed).abs() <= AUDIT_TOLERANCE * reported.abs().max(1.0);
            checks.push(AuditCheck { name: name.into(), reported, recomputed, ok });
        }
    };
    if let Some(plan) = &report.coverage_plan {
        let mut grid = report.grid()?;
        rapid_coverage_grid(plan, &report.camera, &mut grid);
        check("coverage.rapid", report.coverage.rapid, grid.covered_fraction());
        check("coverage_plan.total_length", Some(plan.total_length), plan.legs.iter().map(|l| l.total_length).sum());
    }
    if let Some(plan) = &report.drop_plan {
        let mut grid = report.grid()?;
        drop_first_sample_grid(&plan.drop_points, &report.camera, &mut grid);
        check("coverage.drop_first_sample", report.coverage.drop_first_sample, grid.covered_fraction());
        check("drop_plan.total_length", Some(plan.total_length), plan.legs.iter().map(|l| l.total_length).sum());
    }
    if !report.traces.is_empty() {
        let mut grid = report.grid()?;
        for t in &report.traces {
            accumulate_descent_coverage(t, &report.camera, &mut grid, report.z_cutoff);
        }
        check("coverage.descent", report.coverage.descent, grid.covered_fraction());
    }
    Ok(checks)
}

/// Which touring instance to hand to an external solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TspInstance {
    Coverage,
    Drop,
}

/// Tour nodes of an instance and whether the tour closes.
pub struct InstanceNodes {
    pub poses: Vec<Pose4>,
    pub closed: bool,
    drops: Vec<DropPoint>,
}

/// Builds the nodes of `instance` exactly as the pipeline does.
pub fn instance_nodes(scenario: &Scenario, instance: TspInstance) -> Result<InstanceNodes, PipelineError> {
    scenario.validate()?;
    let s = scenario;
    let coverage = crate::mission::coverage_viewpoints(&s.area, s.coverage_altitude, &s.camera, s.seed, &s.planner)
        .map_err(|e| PipelineError::planning(Phase::Coverage, e))?;
    match instance {
        TspInstance::Coverage => Ok(InstanceNodes { poses: coverage, closed: s.planner.closed_coverage_tour, drops: Vec::new() }),
        TspInstance::Drop => {
            let entry = match s.entry {
                Some(e) => e,
                None => plan_rapid_coverage(&s.area, s.coverage_altitude, &s.camera, &s.carrier, s.seed, &s.planner)
                    .map_err(|e| PipelineError::planning(Phase::Coverage, e))?
                    .final_pose(),
            };
            let drops = plan_drop_points(&s.area, &s.roster.kinds(), &s.camera, s.drop.z_floor, s.drop.z_ceiling, s.seed, &s.planner.lloyd)
                .map_err(|e| PipelineError::planning(Phase::DropPoints, e))?;
            let poses = crate::mission::drop_tour_poses(&drops, &entry);
            Ok(InstanceNodes { poses, closed: false, drops })
        }
    }
}

impl InstanceNodes {
    pub fn cost_matrix(&self, scenario: &Scenario) -> Result<CostMatrix, PipelineError> {
        dubins_cost_matrix(&self.poses, &scenario.carrier).map_err(|e| PipelineError::planning(Phase::Coverage, e))
    }

    /// Plan flying an externally computed tour. Cyclic tours are rotated to
    /// start at node 0.
    pub fn plan_from_order(&self, scenario: &Scenario, order: &[usize]) -> Result<MissionPlan, PipelineError> {
        let at = order.iter().position(|&i| i == 0).unwrap_or(0);
        let rotated: Vec<usize> = order[at..].iter().chain(&order[..at]).copied().collect();
        if self.drops.is_empty() {
            Ok(crate::mission::rapid_plan_from_order(&self.poses, &rotated, self.closed, &scenario.carrier))
        } else {
            crate::mission::drop_plan_from_order(&self.drops, &self.poses[0], &rotated, &scenario.carrier)
                .map_err(|e| PipelineError::planning(Phase::DropTour, e))
        }
    }
}

/// Writes `costs` in the full-matrix text format.
pub fn export_cost_matrix(costs: &CostMatrix, path: &Path) -> Result<(), PipelineError> {
    fs::write(path, format_full_matrix(costs)).map_err(|e| PipelineError::io(path, e))
}

/// Reads a tour file and prices it against `costs`.
pub fn import_tour(path: &Path, costs: &CostMatrix, closed: bool) -> Result<Tour, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let tour_err = |source| PipelineError::Tour { path: path.display().to_string(), source };
    let order = parse_tour_order(&text, costs.n()).map_err(tour_err)?;
    Tour::from_order(order, costs, closed).map_err(tour_err)
}

pub fn plan_to_json(plan: &MissionPlan) -> String {
    to_pretty_json(plan)
}
