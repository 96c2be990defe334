//! Fixed-wing mission plans: the rapid high-altitude coverage tour and the
//! aerial drop tour.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dubins::{dubins_airplane_path, DubinsError, DubinsPath, Pose4, VehicleLimits};
use crate::geometry::{
    lloyd_relax, AreaOfInterest, GeometryError, LloydConfig, Point2, SiteInit, VoronoiCell,
};
use crate::sensing::{required_viewpoints, snapped_ceil, CameraModel, CoverageGrid, SensingError};
use crate::tsp::{dubins_cost_matrix, iterated_k_opt, nearest_neighbor_tour, KOptConfig, Tour, TspError};

/// Drop sites closer than this are rejected as degenerate.
pub const MIN_DROP_SEPARATION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dubins(#[from] DubinsError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Tsp(#[from] TspError),
    #[error("drop sites {0} and {1} are closer than {MIN_DROP_SEPARATION} m")]
    DegenerateSites(usize, usize),
    #[error("invalid planning input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Mav,
    Mgv,
    StaticSensor,
}

impl AgentKind {
    pub fn label(self) -> &'static str {
        match self {
            AgentKind::Mav => "mav",
            AgentKind::Mgv => "mgv",
            AgentKind::StaticSensor => "sensor",
        }
    }
}

/// Interleaves agent kinds in roster order (MAV, MGV, static sensor) until
/// every count is used up.
pub fn round_robin_roster(mav: usize, mgv: usize, sensors: usize) -> Vec<AgentKind> {
    let mut left = [(AgentKind::Mav, mav), (AgentKind::Mgv, mgv), (AgentKind::StaticSensor, sensors)];
    let mut out = Vec::with_capacity(mav + mgv + sensors);
    while left.iter().any(|(_, n)| *n > 0) {
        for (kind, n) in &mut left {
            if *n > 0 {
                out.push(*kind);
                *n -= 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropPoint {
    pub agent_id: usize,
    pub agent_kind: AgentKind,
    pub position: Point2,
    /// Release altitude above ground.
    pub altitude: f64,
    pub cell: VoronoiCell,
    /// Set when the altitude needed to see the whole cell exceeded the ceiling.
    pub deficient: bool,
}

impl DropPoint {
    /// Disk footprint radius at release.
    pub fn footprint_radius(&self, camera: &CameraModel) -> f64 {
        self.altitude * camera.half_angle_tan()
    }

    /// True when the release footprint contains every cell vertex.
    pub fn covers_cell(&self, camera: &CameraModel, tol: f64) -> bool {
        let r = self.footprint_radius(camera);
        self.cell.polygon.iter().all(|v| v.distance(self.position) <= r + tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    RapidCoverage,
    DropTour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    pub kind: PlanKind,
    pub waypoints: Vec<Pose4>,
    /// `legs[i]` flies `waypoints[i]` → `waypoints[i + 1]`.
    pub legs: Vec<DubinsPath>,
    /// Drop points in visiting order; empty for coverage plans.
    pub drop_points: Vec<DropPoint>,
    pub total_length: f64,
    pub total_duration: f64,
}

impl MissionPlan {
    fn from_waypoints(
        kind: PlanKind,
        waypoints: Vec<Pose4>,
        drop_points: Vec<DropPoint>,
        limits: &VehicleLimits,
    ) -> Self {
        let legs: Vec<DubinsPath> =
            waypoints.windows(2).map(|w| dubins_airplane_path(&w[0], &w[1], limits)).collect();
        let total_length = legs.iter().map(|l| l.total_length).sum::<f64>();
        Self { kind, waypoints, legs, drop_points, total_length, total_duration: total_length / limits.airspeed }
    }

    pub fn final_pose(&self) -> Pose4 {
        *self.waypoints.last().expect("plans have at least one waypoint")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadingPolicy {
    /// Face the nearest not-yet-visited point of a greedy planar chain.
    #[default]
    NearestNext,
    /// Every heading along the longer side of the area.
    PrincipalAxis,
}

/// Initial sites for the coverage viewpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageInit {
    /// Footprint lattice when it has exactly the required number of
    /// viewpoints, seeded random sites otherwise.
    #[default]
    Auto,
    Random,
    /// `ceil(d_x / w) × ceil(d_y / w)` footprint centres; may exceed the
    /// required count when the area is not a whole number of footprints.
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub lloyd: LloydConfig,
    pub coverage_init: CoverageInit,
    pub heading: HeadingPolicy,
    /// Return to the first viewpoint at the end of the coverage tour.
    pub closed_coverage_tour: bool,
    pub kopt: KOptConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            lloyd: LloydConfig::default(),
            coverage_init: CoverageInit::Auto,
            heading: HeadingPolicy::NearestNext,
            closed_coverage_tour: true,
            kopt: KOptConfig::default(),
        }
    }
}

fn bearing(from: Point2, to: Point2) -> f64 {
    let d = to - from;
    if d.norm_sq() == 0.0 {
        0.0
    } else {
        d.y.atan2(d.x)
    }
}

/// Headings for `points` from a greedy nearest-unvisited chain that starts
/// at `start`. The chain's last point faces back to the start for closed
/// tours and keeps its incoming bearing otherwise.
fn chain_headings(points: &[Point2], start: usize, closed: bool) -> Vec<f64> {
    let n = points.len();
    let mut headings = vec![0.0; n];
    if n < 2 {
        return headings;
    }
    let mut visited = vec![false; n];
    let mut chain = vec![start];
    visited[start] = true;
    while chain.len() < n {
        let cur = points[*chain.last().unwrap()];
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| cur.distance_sq(points[a]).total_cmp(&cur.distance_sq(points[b])))
            .unwrap();
        visited[next] = true;
        chain.push(next);
    }
    for w in chain.windows(2) {
        headings[w[0]] = bearing(points[w[0]], points[w[1]]);
    }
    let last = chain[n - 1];
    headings[last] = if closed {
        bearing(points[last], points[start])
    } else {
        bearing(points[chain[n - 2]], points[last])
    };
    headings
}

pub fn assign_headings(
    points: &[Point2],
    policy: HeadingPolicy,
    area: &AreaOfInterest,
    start: usize,
    closed: bool,
) -> Vec<f64> {
    match policy {
        HeadingPolicy::NearestNext => chain_headings(points, start, closed),
        HeadingPolicy::PrincipalAxis => {
            let axis = if area.d_x >= area.d_y { 0.0 } else { std::f64::consts::FRAC_PI_2 };
            vec![axis; points.len()]
        }
    }
}

fn solve_order(poses: &[Pose4], limits: &VehicleLimits, closed: bool, kopt: &KOptConfig) -> Result<Tour, PlanError> {
    let costs = dubins_cost_matrix(poses, limits)?;
    let start = nearest_neighbor_tour(&costs, 0, closed);
    Ok(iterated_k_opt(&start, &costs, kopt))
}

/// Viewpoints for the rapid high-altitude pass, distributed by Lloyd
/// relaxation and toured with Dubins airplane legs.
pub fn plan_rapid_coverage(
    area: &AreaOfInterest,
    z_c: f64,
    camera: &CameraModel,
    limits: &VehicleLimits,
    seed: u64,
    config: &PlannerConfig,
) -> Result<MissionPlan, PlanError> {
    limits.validate()?;
    let poses = coverage_viewpoints(area, z_c, camera, seed, config)?;
    if poses.len() == 1 {
        return Ok(MissionPlan::from_waypoints(PlanKind::RapidCoverage, poses, Vec::new(), limits));
    }
    let tour = solve_order(&poses, limits, config.closed_coverage_tour, &config.kopt)?;
    Ok(rapid_plan_from_order(&poses, &tour.order, tour.closed, limits))
}

/// Coverage plan flying `poses` in `order`, optionally back to the first.
pub fn rapid_plan_from_order(poses: &[Pose4], order: &[usize], closed: bool, limits: &VehicleLimits) -> MissionPlan {
    let mut waypoints: Vec<Pose4> = order.iter().map(|&i| poses[i]).collect();
    if closed && waypoints.len() > 1 {
        waypoints.push(waypoints[0]);
    }
    MissionPlan::from_waypoints(PlanKind::RapidCoverage, waypoints, Vec::new(), limits)
}

/// Coverage viewpoints (before touring) exactly as [`plan_rapid_coverage`]
/// builds them, for exporting the touring instance.
pub fn coverage_viewpoints(
    area: &AreaOfInterest,
    z_c: f64,
    camera: &CameraModel,
    seed: u64,
    config: &PlannerConfig,
) -> Result<Vec<Pose4>, PlanError> {
    area.validate()?;
    camera.validate()?;
    let n = required_viewpoints(area, z_c, camera.fov)?;
    let w = 2.0 * crate::sensing::footprint_halfwidth(z_c, camera.fov)?;
    let lattice = lattice_sites(area, w);
    let init = match config.coverage_init {
        CoverageInit::Lattice => Some(lattice),
        CoverageInit::Auto if lattice.len() == n => Some(lattice),
        _ => None,
    };
    let sites = match init {
        Some(l) if l.len() == 1 => l,
        Some(l) => lloyd_relax(SiteInit::Given(l), area, &config.lloyd)?.partition.sites(),
        None if n == 1 => vec![area.center()],
        None => lloyd_relax(SiteInit::Random { count: n, seed }, area, &config.lloyd)?.partition.sites(),
    };
    let headings = assign_headings(&sites, config.heading, area, 0, config.closed_coverage_tour);
    Ok(sites.iter().zip(&headings).map(|(p, &h)| Pose4::new(p.x, p.y, z_c, h)).collect())
}

/// Centres of an even grid of `ceil(d / w)` cells per axis.
fn lattice_sites(area: &AreaOfInterest, w: f64) -> Vec<Point2> {
    let nx = snapped_ceil(area.d_x / w).max(1);
    let ny = snapped_ceil(area.d_y / w).max(1);
    let (sx, sy) = (area.d_x / nx as f64, area.d_y / ny as f64);
    (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                Point2::new(area.origin.x + (i as f64 + 0.5) * sx, area.origin.y + (j as f64 + 0.5) * sy)
            })
        })
        .collect()
}

/// Lloyd-distributed drop sites, each released at the lowest altitude whose
/// disk footprint contains its whole Voronoi cell, clamped to
/// `[z_floor, z_ceiling]`. `roster[i]` is the agent dropped at site `i`.
pub fn plan_drop_points(
    area: &AreaOfInterest,
    roster: &[AgentKind],
    camera: &CameraModel,
    z_floor: f64,
    z_ceiling: f64,
    seed: u64,
    lloyd: &LloydConfig,
) -> Result<Vec<DropPoint>, PlanError> {
    camera.validate()?;
    if roster.is_empty() {
        return Err(PlanError::InvalidInput("at least one agent is required".into()));
    }
    if !(z_floor > 0.0 && z_floor < z_ceiling) {
        return Err(PlanError::InvalidInput(format!(
            "need 0 < z_floor < z_ceiling, got {z_floor} and {z_ceiling}"
        )));
    }
    let run = lloyd_relax(SiteInit::Random { count: roster.len(), seed }, area, lloyd)?;
    let sites = run.partition.sites();
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            if sites[i].distance(sites[j]) < MIN_DROP_SEPARATION {
                return Err(PlanError::DegenerateSites(i, j));
            }
        }
    }
    let tan_half = camera.half_angle_tan();
    Ok(run
        .partition
        .cells
        .into_iter()
        .zip(roster)
        .enumerate()
        .map(|(agent_id, (cell, &agent_kind))| {
            let required = cell.max_vertex_distance() / tan_half;
            DropPoint {
                agent_id,
                agent_kind,
                position: cell.site,
                altitude: required.clamp(z_floor, z_ceiling),
                deficient: required > z_ceiling,
                cell,
            }
        })
        .collect())
}

/// Tour nodes: `entry` first, then one pose per drop point at its release
/// altitude, headed along the nearest-next chain from the entry.
pub fn drop_tour_poses(drop_points: &[DropPoint], entry: &Pose4) -> Vec<Pose4> {
    let mut planar = vec![entry.planar()];
    planar.extend(drop_points.iter().map(|d| d.position));
    let headings = chain_headings(&planar, 0, false);
    let mut poses = vec![*entry];
    poses.extend(
        drop_points
            .iter()
            .zip(&headings[1..])
            .map(|(d, &h)| Pose4::new(d.position.x, d.position.y, d.altitude, h)),
    );
    poses
}

/// Drop plan visiting the nodes of [`drop_tour_poses`] in `order`, which
/// must start with the entry node 0.
pub fn drop_plan_from_order(
    drop_points: &[DropPoint],
    entry: &Pose4,
    order: &[usize],
    limits: &VehicleLimits,
) -> Result<MissionPlan, PlanError> {
    if order.first() != Some(&0) || order.len() != drop_points.len() + 1 {
        return Err(PlanError::InvalidInput("drop tour must list every node once, starting at entry node 0".into()));
    }
    let poses = drop_tour_poses(drop_points, entry);
    let waypoints = order.iter().map(|&i| poses[i]).collect();
    let visited = order[1..].iter().map(|&i| drop_points[i - 1].clone()).collect();
    Ok(MissionPlan::from_waypoints(PlanKind::DropTour, waypoints, visited, limits))
}

/// Open tour from `entry` over every drop point, each released at its own
/// altitude. Drop headings follow the nearest-next chain from the entry.
pub fn plan_drop_tour(
    drop_points: &[DropPoint],
    limits: &VehicleLimits,
    entry: &Pose4,
    kopt: &KOptConfig,
) -> Result<MissionPlan, PlanError> {
    limits.validate()?;
    if drop_points.is_empty() {
        return Err(PlanError::InvalidInput("at least one drop point is required".into()));
    }
    let poses = drop_tour_poses(drop_points, entry);
    let order: Vec<usize> = if poses.len() == 2 {
        vec![0, 1]
    } else {
        solve_order(&poses, limits, false, kopt)?.order
    };
    drop_plan_from_order(drop_points, entry, &order, limits)
}

/// Nearest-neighbour-only drop tour, used as a quality baseline.
pub fn drop_tour_length_nearest_neighbor(
    drop_points: &[DropPoint],
    limits: &VehicleLimits,
    entry: &Pose4,
) -> Result<f64, PlanError> {
    let poses = drop_tour_poses(drop_points, entry);
    if poses.len() == 2 {
        return Ok(dubins_airplane_path(&poses[0], &poses[1], limits).total_length);
    }
    let costs = dubins_cost_matrix(&poses, limits)?;
    Ok(nearest_neighbor_tour(&costs, 0, false).total_cost)
}

/// Camera footprints at every coverage waypoint.
pub fn rapid_coverage_grid(plan: &MissionPlan, camera: &CameraModel, grid: &mut CoverageGrid) {
    for wp in &plan.waypoints {
        crate::sensing::mark_footprint(grid, wp, camera);
    }
}

/// Disk footprints of every drop point at its release altitude.
pub fn drop_first_sample_grid(drops: &[DropPoint], camera: &CameraModel, grid: &mut CoverageGrid) {
    for d in drops {
        grid.mark_disk(d.position, d.footprint_radius(camera));
    }
}
