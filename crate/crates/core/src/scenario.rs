//! Scenario files: a JSON document describing the area, sensors, vehicles
//! and agent roster of one mission.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descent::{AmplitudeProfile, DescentParams, OmegaBounds, SpiralParams, MAX_DT};
use crate::dubins::{Pose4, VehicleLimits};
use crate::geometry::AreaOfInterest;
use crate::mgv::GeodeticCoord;
use crate::mission::{round_robin_roster, AgentKind, PlannerConfig};
use crate::sensing::CameraModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropConfig {
    pub z_floor: f64,
    pub z_ceiling: f64,
}

impl Default for DropConfig {
    fn default() -> Self {
        Self { z_floor: 20.0, z_ceiling: 1000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Roster {
    pub mav: usize,
    pub mgv: usize,
    pub static_sensor: usize,
    /// Agent kind per drop point; overrides the round-robin order when set.
    pub assignment: Option<Vec<AgentKind>>,
}

impl Roster {
    pub fn total(&self) -> usize {
        self.mav + self.mgv + self.static_sensor
    }

    /// Agent kind for each drop point.
    pub fn kinds(&self) -> Vec<AgentKind> {
        self.assignment.clone().unwrap_or_else(|| round_robin_roster(self.mav, self.mgv, self.static_sensor))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MavConfig {
    pub amplitude: f64,
    /// Fixed spiral rate; the cell-size heuristic is used when absent.
    pub omega: Option<f64>,
    pub profile: AmplitudeProfile,
    pub omega_bounds: OmegaBounds,
    pub descent: DescentParams,
}

impl Default for MavConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.35,
            omega: None,
            profile: AmplitudeProfile::Constant,
            omega_bounds: OmegaBounds::default(),
            descent: DescentParams { terminal_velocity: 4.0, ..DescentParams::default() },
        }
    }
}

impl MavConfig {
    pub fn spiral(&self, omega: f64) -> SpiralParams {
        SpiralParams { amplitude: self.amplitude, omega, profile: self.profile }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassiveConfig {
    pub descent: DescentParams,
}

/// Geodetic anchor of the local frame, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoReference {
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default)]
    pub altitude: f64,
}

impl GeoReference {
    pub fn coord(&self) -> GeodeticCoord {
        GeodeticCoord::from_degrees(self.lat_deg, self.lon_deg, self.altitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgvConfig {
    pub r_min_car: f64,
    /// Defaults to `1.2 √(area / n_mgv)`.
    pub comm_range: Option<f64>,
    pub geo_reference: Option<GeoReference>,
}

impl Default for MgvConfig {
    fn default() -> Self {
        Self { r_min_car: 5.0, comm_range: None, geo_reference: None }
    }
}

fn default_carrier() -> VehicleLimits {
    VehicleLimits { r_min: 60.0, gamma_max: 0.2, airspeed: 25.0 }
}

fn default_coverage_altitude() -> f64 {
    150.0
}

fn default_z_cutoff() -> f64 {
    crate::descent::DEFAULT_Z_CUTOFF
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub area: AreaOfInterest,
    pub camera: CameraModel,
    #[serde(default = "default_carrier")]
    pub carrier: VehicleLimits,
    #[serde(default = "default_coverage_altitude")]
    pub coverage_altitude: f64,
    /// Coverage raster cell size; `min(d_x, d_y) / 500` when absent.
    #[serde(default)]
    pub grid_resolution: Option<f64>,
    /// Drop tour start; the end of the coverage tour when absent.
    #[serde(default)]
    pub entry: Option<Pose4>,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub drop: DropConfig,
    #[serde(default)]
    pub roster: Roster,
    #[serde(default)]
    pub mav: MavConfig,
    #[serde(default)]
    pub passive: PassiveConfig,
    #[serde(default)]
    pub mgv: MgvConfig,
    /// Samples below this altitude add no coverage.
    #[serde(default = "default_z_cutoff")]
    pub z_cutoff: f64,
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be a positive number, got {v}")))
    }
}

fn check_descent(prefix: &str, d: &DescentParams) -> Result<(), ConfigError> {
    positive(&format!("{prefix}.g"), d.g)?;
    positive(&format!("{prefix}.terminal_velocity"), d.terminal_velocity)?;
    if !(d.dt > 0.0 && d.dt <= MAX_DT) {
        return Err(invalid(&format!("{prefix}.dt"), format!("must lie in (0, {MAX_DT}], got {}", d.dt)));
    }
    for (name, v) in [("planar_gain", d.planar_gain), ("planar_drag", d.planar_drag), ("record_interval", d.record_interval)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(&format!("{prefix}.{name}"), format!("must be non-negative, got {v}")));
        }
    }
    if !d.heading.is_finite() {
        return Err(invalid(&format!("{prefix}.heading"), "must be finite"));
    }
    Ok(())
}

impl Scenario {
    /// Checks every field, naming the first offending one by its path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.area;
        if !(a.origin.x.is_finite() && a.origin.y.is_finite()) {
            return Err(invalid("area.origin", "must be finite"));
        }
        positive("area.d_x", a.d_x)?;
        positive("area.d_y", a.d_y)?;
        if !(self.camera.fov > 0.0 && self.camera.fov < std::f64::consts::PI) {
            return Err(invalid("camera.fov", format!("must lie in (0, π), got {}", self.camera.fov)));
        }
        positive("carrier.r_min", self.carrier.r_min)?;
        if !(self.carrier.gamma_max > 0.0 && self.carrier.gamma_max < std::f64::consts::FRAC_PI_2) {
            return Err(invalid("carrier.gamma_max", format!("must lie in (0, π/2), got {}", self.carrier.gamma_max)));
        }
        positive("carrier.airspeed", self.carrier.airspeed)?;
        positive("coverage_altitude", self.coverage_altitude)?;
        if let Some(r) = self.grid_resolution {
            positive("grid_resolution", r)?;
            if a.d_x / r > 20_000.0 || a.d_y / r > 20_000.0 {
                return Err(invalid("grid_resolution", "more than 20000 cells per side"));
            }
        }
        if let Some(e) = &self.entry {
            if !e.is_finite() {
                return Err(invalid("entry", "must be finite"));
            }
        }
        let l = &self.planner.lloyd;
        if !(l.rel_improvement_threshold > 0.0 && l.rel_improvement_threshold < 1.0) {
            return Err(invalid("planner.lloyd.rel_improvement_threshold", "must lie in (0, 1)"));
        }
        if l.max_iters == 0 {
            return Err(invalid("planner.lloyd.max_iters", "must be at least 1"));
        }
        if !(2..=3).contains(&self.planner.kopt.max_k) {
            return Err(invalid("planner.kopt.max_k", "must be 2 or 3"));
        }
        positive("drop.z_floor", self.drop.z_floor)?;
        if !(self.drop.z_ceiling.is_finite() && self.drop.z_ceiling > self.drop.z_floor) {
            return Err(invalid("drop.z_ceiling", "must exceed drop.z_floor"));
        }
        if let Some(kinds) = &self.roster.assignment {
            let count = |k| kinds.iter().filter(|&&x| x == k).count();
            let r = &self.roster;
            if count(AgentKind::Mav) != r.mav || count(AgentKind::Mgv) != r.mgv || count(AgentKind::StaticSensor) != r.static_sensor {
                return Err(invalid("roster.assignment", "kind counts must match roster.mav, roster.mgv and roster.static_sensor"));
            }
        }
        let m = &self.mav;
        if !(m.amplitude >= 0.0 && m.amplitude < std::f64::consts::FRAC_PI_2) {
            return Err(invalid("mav.amplitude", format!("must lie in [0, π/2), got {}", m.amplitude)));
        }
        if let Some(w) = m.omega {
            positive("mav.omega", w)?;
        }
        if let AmplitudeProfile::LinearRamp { t_ramp } = m.profile {
            positive("mav.profile.t_ramp", t_ramp)?;
        }
        positive("mav.omega_bounds.min", m.omega_bounds.min)?;
        if !(m.omega_bounds.max >= m.omega_bounds.min) {
            return Err(invalid("mav.omega_bounds.max", "must be at least mav.omega_bounds.min"));
        }
        check_descent("mav.descent", &m.descent)?;
        check_descent("passive.descent", &self.passive.descent)?;
        positive("mgv.r_min_car", self.mgv.r_min_car)?;
        if let Some(r) = self.mgv.comm_range {
            positive("mgv.comm_range", r)?;
        }
        if let Some(g) = &self.mgv.geo_reference {
            if !(g.lat_deg.abs() <= 90.0) {
                return Err(invalid("mgv.geo_reference.lat_deg", "must lie in [-90, 90]"));
            }
            if !g.lon_deg.is_finite() || !g.altitude.is_finite() {
                return Err(invalid("mgv.geo_reference", "must be finite"));
            }
        }
        if !(self.z_cutoff.is_finite() && self.z_cutoff >= 0.0) {
            return Err(invalid("z_cutoff", "must be non-negative"));
        }
        Ok(())
    }

    pub fn resolution(&self) -> f64 {
        self.grid_resolution.unwrap_or_else(|| crate::sensing::CoverageGrid::default_resolution(&self.area))
    }

    /// Comm range for `n` ground vehicles.
    pub fn comm_range(&self, n: usize) -> f64 {
        self.mgv.comm_range.unwrap_or_else(|| crate::mgv::default_comm_range(&self.area, n))
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_scenario(&text)
}
