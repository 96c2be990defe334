//! Descent of dropped agents: the MAV roll/pitch spiral and passive fall,
//! with the nadir camera coverage collected on the way down.
//!
//! Vertical motion is drag-limited free fall, `v_z = v_t tanh(g t / v_t)`,
//! evaluated in closed form. Attitude follows the commands instantly and the
//! planar velocity obeys
//! `v' = k g R(ψ) (tan φ, tan θ) (1 - v_z / (2 v_t)) - c v`,
//! integrated with explicit Euler at a fixed step.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dubins::Pose4;
use crate::fmt::sig9;
use crate::geometry::Point2;
use crate::mission::DropPoint;
use crate::sensing::{CameraModel, CoverageGrid};

pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Largest integration step accepted.
pub const MAX_DT: f64 = 0.05;

/// Descents longer than this are rejected rather than integrated.
pub const MAX_DESCENT_TIME: f64 = 600.0;

pub const DEFAULT_Z_CUTOFF: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescentError {
    #[error("drop altitude must be positive, got {0}")]
    InvalidDrop(f64),
    #[error("invalid descent parameter: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmplitudeProfile {
    #[default]
    Constant,
    LinearRamp { t_ramp: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralParams {
    /// Peak tilt `A`.
    pub amplitude: f64,
    pub omega: f64,
    #[serde(default)]
    pub profile: AmplitudeProfile,
}

impl SpiralParams {
    pub fn validate(&self) -> Result<(), DescentError> {
        if !(self.amplitude >= 0.0 && self.amplitude < std::f64::consts::FRAC_PI_2) {
            return Err(DescentError::InvalidParams(format!("amplitude {} outside [0, π/2)", self.amplitude)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(DescentError::InvalidParams(format!("omega must be positive, got {}", self.omega)));
        }
        if let AmplitudeProfile::LinearRamp { t_ramp } = self.profile {
            if !(t_ramp > 0.0) {
                return Err(DescentError::InvalidParams(format!("t_ramp must be positive, got {t_ramp}")));
            }
        }
        Ok(())
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        match self.profile {
            AmplitudeProfile::Constant => self.amplitude,
            AmplitudeProfile::LinearRamp { t_ramp } => self.amplitude * (t / t_ramp).min(1.0),
        }
    }
}

/// `(roll, pitch) = A(t) (sin ωt, cos ωt)`.
pub fn spiral_command(t: f64, params: &SpiralParams) -> (f64, f64) {
    let a = params.amplitude_at(t);
    let (s, c) = (params.omega * t).sin_cos();
    (a * s, a * c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OmegaBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for OmegaBounds {
    fn default() -> Self {
        Self { min: 0.05, max: 12.0 }
    }
}

/// Spiral rate `5.2 S_V / Δz`, clamped to `bounds`.
pub fn omega_heuristic(cell_area: f64, drop_altitude: f64, bounds: &OmegaBounds) -> f64 {
    (5.2 * cell_area / drop_altitude).clamp(bounds.min, bounds.max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentParams {
    pub g: f64,
    pub terminal_velocity: f64,
    pub planar_gain: f64,
    /// Linear drag on planar velocity, 1/s.
    pub planar_drag: f64,
    pub heading: f64,
    pub dt: f64,
    /// Spacing of recorded samples; rounded to a whole number of steps.
    pub record_interval: f64,
}

impl Default for DescentParams {
    fn default() -> Self {
        Self {
            g: STANDARD_GRAVITY,
            terminal_velocity: 15.0,
            planar_gain: 1.0,
            planar_drag: 0.5,
            heading: 0.0,
            dt: 0.01,
            record_interval: 0.1,
        }
    }
}

impl DescentParams {
    pub fn validate(&self) -> Result<(), DescentError> {
        let bad = |what: &str, v: f64| Err(DescentError::InvalidParams(format!("{what} = {v}")));
        if !(self.g > 0.0 && self.g.is_finite()) {
            return bad("g", self.g);
        }
        if !(self.terminal_velocity > 0.0 && self.terminal_velocity.is_finite()) {
            return bad("terminal_velocity", self.terminal_velocity);
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return bad("dt", self.dt);
        }
        if !(self.planar_gain >= 0.0 && self.planar_drag >= 0.0) {
            return bad("planar_gain/planar_drag", self.planar_gain.min(self.planar_drag));
        }
        if !(self.record_interval >= 0.0) {
            return bad("record_interval", self.record_interval);
        }
        if !self.heading.is_finite() {
            return bad("heading", self.heading);
        }
        Ok(())
    }

    pub fn vertical_speed(&self, t: f64) -> f64 {
        self.terminal_velocity * (self.g * t / self.terminal_velocity).tanh()
    }

    /// Distance fallen after `t` seconds.
    pub fn fallen(&self, t: f64) -> f64 {
        let vt = self.terminal_velocity;
        vt * vt / self.g * ln_cosh(self.g * t / vt)
    }

    /// Time to fall `dz`.
    pub fn fall_time(&self, dz: f64) -> f64 {
        let vt = self.terminal_velocity;
        let y = dz * self.g / (vt * vt);
        vt / self.g * (y + (1.0 + (-(-2.0 * y).exp_m1()).sqrt()).ln())
    }
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentSample {
    pub t: f64,
    pub pose: Pose4,
    pub roll: f64,
    pub pitch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentTrajectory {
    pub samples: Vec<DescentSample>,
    pub touchdown: Point2,
    pub touchdown_time: f64,
}

impl DescentTrajectory {
    pub fn max_planar_speed(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[0].pose.planar_distance(&w[1].pose) / (w[1].t - w[0].t))
            .fold(0.0, f64::max)
    }

    /// Time-stamped rows `t,x,y,z,psi,roll,pitch`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,y,z,psi,roll,pitch")?;
        for s in &self.samples {
            let p = &s.pose;
            let row = [s.t, p.x, p.y, p.z, p.psi, s.roll, s.pitch].map(sig9);
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn simulate_descent(
    drop: &DropPoint,
    spiral: Option<&SpiralParams>,
    params: &DescentParams,
) -> Result<DescentTrajectory, DescentError> {
    simulate_descent_from(drop.position, drop.altitude, spiral, params)
}

/// Descent from `start` at `altitude`. Without a spiral the agent falls
/// straight down.
pub fn simulate_descent_from(
    start: Point2,
    altitude: f64,
    spiral: Option<&SpiralParams>,
    params: &DescentParams,
) -> Result<DescentTrajectory, DescentError> {
    if !(altitude > 0.0 && altitude.is_finite()) {
        return Err(DescentError::InvalidDrop(altitude));
    }
    params.validate()?;
    if let Some(s) = spiral {
        s.validate()?;
    }
    let t_end = params.fall_time(altitude);
    if t_end > MAX_DESCENT_TIME {
        return Err(DescentError::InvalidParams(format!(
            "descent would take {t_end:.1} s, more than {MAX_DESCENT_TIME} s"
        )));
    }
    let command = |t: f64| spiral.map_or((0.0, 0.0), |s| spiral_command(t, s));
    let (sin_h, cos_h) = params.heading.sin_cos();
    let psi = crate::dubins::normalize_angle(params.heading);
    let stride = ((params.record_interval / params.dt).round() as usize).max(1);
    let dt = params.dt;

    let sample = |t: f64, pos: Point2, z: f64| {
        let (roll, pitch) = command(t);
        DescentSample { t, pose: Pose4::new(pos.x, pos.y, z, psi), roll, pitch }
    };
    let mut pos = start;
    let mut vel = Point2::default();
    let mut samples = vec![sample(0.0, pos, altitude)];
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        let h = dt.min(t_end - t);
        if h <= 0.0 {
            break;
        }
        let (roll, pitch) = command(t);
        let damping = 1.0 - 0.5 * params.vertical_speed(t) / params.terminal_velocity;
        let (bx, by) = (roll.tan(), pitch.tan());
        let thrust = Point2::new(cos_h * bx - sin_h * by, sin_h * bx + cos_h * by);
        let acc = thrust * (params.planar_gain * params.g * damping) - vel * params.planar_drag;
        pos = pos + vel * h;
        vel = vel + acc * h;
        k += 1;
        let t_next = t + h;
        if t_next >= t_end {
            break;
        }
        if k.is_multiple_of(stride) {
            samples.push(sample(t_next, pos, altitude - params.fallen(t_next)));
        }
    }
    samples.push(sample(t_end, pos, 0.0));
    Ok(DescentTrajectory { samples, touchdown: pos, touchdown_time: t_end })
}

/// Marks the nadir disk seen at every sample above `z_cutoff`.
pub fn accumulate_descent_coverage(
    traj: &DescentTrajectory,
    camera: &CameraModel,
    grid: &mut CoverageGrid,
    z_cutoff: f64,
) {
    let tan_half = camera.half_angle_tan();
    for s in traj.samples.iter().filter(|s| s.pose.z > z_cutoff) {
        grid.mark_disk(s.pose.planar(), s.pose.z * tan_half);
    }
}
