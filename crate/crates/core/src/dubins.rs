//! Dubins car and Dubins airplane paths.
//!
//! The planar part is the classic six-word Dubins solution. The airplane
//! variant lifts it to 3D with a bounded flight path angle: small climbs are
//! spread over the planar path, large climbs get extra helix turns on the
//! terminal circle, and the band in between is absorbed by a partial detour
//! arc at the start so the climb is flown at exactly `gamma_max`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DubinsError {
    #[error("invalid vehicle limits: {0}")]
    InvalidLimits(String),
    #[error("sampling step must be > 0, got {0}")]
    InvalidStep(f64),
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Smallest signed difference `a - b` wrapped into `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

// Arc angles within this of a full turn are numerical noise around zero.
fn mod2pi(a: f64) -> f64 {
    let r = normalize_angle(a);
    if TAU - r < 1e-10 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose4 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Heading in `[0, 2π)`, counter-clockwise from the +x axis.
    pub psi: f64,
}

impl Pose4 {
    pub fn new(x: f64, y: f64, z: f64, psi: f64) -> Self {
        Self { x, y, z, psi: normalize_angle(psi) }
    }

    pub fn planar(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn planar_distance(&self, other: &Pose4) -> f64 {
        self.planar().distance(other.planar())
    }

    pub fn distance_3d(&self, other: &Pose4) -> f64 {
        self.planar_distance(other).hypot(self.z - other.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.psi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleLimits {
    pub r_min: f64,
    /// Maximum flight path angle; ignored by ground vehicles.
    pub gamma_max: f64,
    pub airspeed: f64,
}

impl VehicleLimits {
    pub fn validate(&self) -> Result<(), DubinsError> {
        if !(self.r_min.is_finite() && self.r_min > 0.0) {
            return Err(DubinsError::InvalidLimits(format!("r_min must be > 0, got {}", self.r_min)));
        }
        if !(self.gamma_max > 0.0 && self.gamma_max < PI / 2.0) {
            return Err(DubinsError::InvalidLimits(format!(
                "gamma_max must lie in (0, π/2), got {}",
                self.gamma_max
            )));
        }
        if !(self.airspeed.is_finite() && self.airspeed > 0.0) {
            return Err(DubinsError::InvalidLimits(format!(
                "airspeed must be > 0, got {}",
                self.airspeed
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    LeftArc,
    RightArc,
    Straight,
    HelixLeft,
    HelixRight,
}

impl SegmentKind {
    /// +1 for counter-clockwise turns, -1 for clockwise, 0 for straight.
    pub fn turn_sign(self) -> f64 {
        match self {
            SegmentKind::LeftArc | SegmentKind::HelixLeft => 1.0,
            SegmentKind::RightArc | SegmentKind::HelixRight => -1.0,
            SegmentKind::Straight => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DubinsSegment {
    pub kind: SegmentKind,
    /// 3D arc length.
    pub length: f64,
    pub flight_path_angle: f64,
}

impl DubinsSegment {
    pub fn planar_length(&self) -> f64 {
        self.length * self.flight_path_angle.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DubinsWord {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

impl DubinsWord {
    pub const ALL: [DubinsWord; 6] =
        [DubinsWord::Lsl, DubinsWord::Rsr, DubinsWord::Lsr, DubinsWord::Rsl, DubinsWord::Rlr, DubinsWord::Lrl];

    pub fn kinds(self) -> [SegmentKind; 3] {
        use SegmentKind::{LeftArc as L, RightArc as R, Straight as S};
        match self {
            DubinsWord::Lsl => [L, S, L],
            DubinsWord::Rsr => [R, S, R],
            DubinsWord::Lsr => [L, S, R],
            DubinsWord::Rsl => [R, S, L],
            DubinsWord::Rlr => [R, L, R],
            DubinsWord::Lrl => [L, R, L],
        }
    }

    pub fn terminal_turn(self) -> SegmentKind {
        self.kinds()[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AltitudeCase {
    Planar,
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath {
    pub start: Pose4,
    pub end: Pose4,
    pub radius: f64,
    pub word: DubinsWord,
    pub segments: Vec<DubinsSegment>,
    pub total_length: f64,
    pub altitude_case: AltitudeCase,
}

/// Normalized segment parameters `(t, p, q)` of one word, in units of the
/// turning radius; `None` when the word cannot connect the poses.
pub fn word_parameters(word: DubinsWord, q0: &Pose4, qf: &Pose4, r: f64) -> Option<[f64; 3]> {
    let dx = qf.x - q0.x;
    let dy = qf.y - q0.y;
    let d = dx.hypot(dy) / r;
    let theta = if d > 0.0 { mod2pi(dy.atan2(dx)) } else { 0.0 };
    let alpha = mod2pi(q0.psi - theta);
    let beta = mod2pi(qf.psi - theta);
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let c_ab = (alpha - beta).cos();

    match word {
        DubinsWord::Lsl => {
            let p_sq = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb);
            if p_sq < 0.0 {
                return None;
            }
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([mod2pi(tmp - alpha), p_sq.sqrt(), mod2pi(beta - tmp)])
        }
        DubinsWord::Rsr => {
            let p_sq = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa);
            if p_sq < 0.0 {
                return None;
            }
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([mod2pi(alpha - tmp), p_sq.sqrt(), mod2pi(tmp - beta)])
        }
        DubinsWord::Lsr => {
            let p_sq = -2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb);
            if p_sq < 0.0 {
                return None;
            }
            let p = p_sq.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(tmp - alpha), p, mod2pi(tmp - beta)])
        }
        DubinsWord::Rsl => {
            let p_sq = -2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb);
            if p_sq < 0.0 {
                return None;
            }
            let p = p_sq.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(alpha - tmp), p, mod2pi(beta - tmp)])
        }
        DubinsWord::Rlr => {
            let tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let phi = (ca - cb).atan2(d - sa + sb);
            let p = mod2pi(TAU - tmp.acos());
            let t = mod2pi(alpha - phi + 0.5 * p);
            Some([t, p, mod2pi(alpha - beta - t + p)])
        }
        DubinsWord::Lrl => {
            let tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let phi = (ca - cb).atan2(d + sa - sb);
            let p = mod2pi(TAU - tmp.acos());
            let t = mod2pi(-alpha - phi + 0.5 * p);
            Some([t, p, mod2pi(beta - alpha - t + p)])
        }
    }
}

/// Advances a pose by `planar` metres along a segment kind, climbing `dz`.
pub fn advance(pose: &Pose4, kind: SegmentKind, planar: f64, dz: f64, r: f64) -> Pose4 {
    let psi = pose.psi;
    let (x, y) = match kind {
        SegmentKind::Straight => (pose.x + planar * psi.cos(), pose.y + planar * psi.sin()),
        _ => {
            let sign = kind.turn_sign();
            let psi_next = psi + sign * planar / r;
            (
                pose.x + sign * r * (psi_next.sin() - psi.sin()),
                pose.y - sign * r * (psi_next.cos() - psi.cos()),
            )
        }
    };
    let psi_next = psi + kind.turn_sign() * planar / r;
    Pose4::new(x, y, pose.z + dz, psi_next)
}

fn planar_segments(word: DubinsWord, params: [f64; 3], r: f64) -> Vec<DubinsSegment> {
    word.kinds()
        .iter()
        .zip(params)
        .map(|(&kind, p)| DubinsSegment { kind, length: p * r, flight_path_angle: 0.0 })
        .collect()
}

fn shortest_word(q0: &Pose4, qf: &Pose4, r: f64) -> (DubinsWord, [f64; 3]) {
    let mut best: Option<(DubinsWord, [f64; 3], f64)> = None;
    for word in DubinsWord::ALL {
        if let Some(params) = word_parameters(word, q0, qf, r) {
            let len = params.iter().sum::<f64>();
            if best.is_none_or(|(_, _, b)| len < b) {
                best = Some((word, params, len));
            }
        }
    }
    // LSL and RSR are feasible for every pose pair.
    let (word, params, _) = best.expect("Dubins LSL/RSR always feasible");
    (word, params)
}

/// Shortest planar Dubins car path. Altitude is held at `q0.z`.
pub fn dubins_car_path(q0: &Pose4, qf: &Pose4, r_min: f64) -> DubinsPath {
    assert!(r_min > 0.0, "turning radius must be positive");
    let (word, params) = shortest_word(q0, qf, r_min);
    let segments = planar_segments(word, params, r_min);
    let total_length = segments.iter().map(|s| s.length).sum();
    DubinsPath {
        start: *q0,
        end: Pose4::new(qf.x, qf.y, q0.z, qf.psi),
        radius: r_min,
        word,
        segments,
        total_length,
        altitude_case: AltitudeCase::Planar,
    }
}

fn with_climb(mut segments: Vec<DubinsSegment>, gamma: f64) -> Vec<DubinsSegment> {
    let c = gamma.cos();
    for s in &mut segments {
        s.length /= c;
        s.flight_path_angle = gamma;
    }
    segments
}

fn helix_kind(turn: SegmentKind) -> SegmentKind {
    match turn {
        SegmentKind::RightArc | SegmentKind::HelixRight => SegmentKind::HelixRight,
        _ => SegmentKind::HelixLeft,
    }
}

fn arc_kind(turn: SegmentKind) -> SegmentKind {
    match turn {
        SegmentKind::RightArc | SegmentKind::HelixRight => SegmentKind::RightArc,
        _ => SegmentKind::LeftArc,
    }
}

/// Planar length of "detour arc of angle `theta`, then shortest car path".
fn detour_length(q0: &Pose4, qf: &Pose4, r: f64, turn: SegmentKind, theta: f64) -> f64 {
    let p = advance(q0, turn, r * theta, 0.0, r);
    r * theta + shortest_word(&p, qf, r).1.iter().sum::<f64>() * r
}

/// Finds a detour angle in `(0, 2π)` whose planar length hits `target`.
fn solve_detour(q0: &Pose4, qf: &Pose4, r: f64, turn: SegmentKind, target: f64) -> Option<f64> {
    let tol = 1e-9 * target.max(1.0);
    let f = |theta: f64| detour_length(q0, qf, r, turn, theta) - target;
    let bisect = |mut lo: f64, mut hi: f64| -> Option<f64> {
        let mut flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.abs() <= tol {
                return Some(mid);
            }
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let mid = 0.5 * (lo + hi);
        (f(mid).abs() <= tol).then_some(mid)
    };
    if let Some(theta) = bisect(0.0, TAU) {
        return Some(theta);
    }
    // The shortest-path length can jump where the optimal word switches;
    // look for a bracket that does not straddle a jump.
    const SCAN: usize = 256;
    let mut prev = (0.0, f(0.0));
    for i in 1..=SCAN {
        let theta = TAU * i as f64 / SCAN as f64;
        let v = f(theta);
        if (prev.1 < 0.0) != (v < 0.0) {
            if let Some(root) = bisect(prev.0, theta) {
                return Some(root);
            }
        }
        prev = (theta, v);
    }
    None
}

/// Dubins airplane path with bounded flight path angle.
pub fn dubins_airplane_path(q0: &Pose4, qf: &Pose4, limits: &VehicleLimits) -> DubinsPath {
    let r = limits.r_min;
    let tan_g = limits.gamma_max.tan();
    let car = dubins_car_path(q0, qf, r);
    let l_car = car.total_length;
    let dz = qf.z - q0.z;
    let climb = dz.abs();
    let sign = if dz < 0.0 { -1.0 } else { 1.0 };
    let end = *qf;

    let build = |segments: Vec<DubinsSegment>, case: AltitudeCase| {
        let total_length = segments.iter().map(|s| s.length).sum();
        DubinsPath { start: *q0, end, radius: r, word: car.word, segments, total_length, altitude_case: case }
    };

    if climb <= l_car * tan_g {
        let gamma = if climb == 0.0 { 0.0 } else { sign * (climb / l_car).atan() };
        return build(with_climb(car.segments, gamma), AltitudeCase::Low);
    }

    if climb > (l_car + TAU * r) * tan_g {
        return high_case(&car, climb, limits, sign, build);
    }

    let turn = car.word.terminal_turn();
    let required = climb / tan_g;
    // Medium: lengthen the planar path to exactly `required` with a partial
    // detour arc on the start circle, then fly the whole path at gamma_max.
    let other = if arc_kind(turn) == SegmentKind::LeftArc {
        SegmentKind::RightArc
    } else {
        SegmentKind::LeftArc
    };
    for dir in [arc_kind(turn), other] {
        if let Some(theta) = solve_detour(q0, qf, r, dir, required) {
            let mid = advance(q0, dir, r * theta, 0.0, r);
            let (word, params) = shortest_word(&mid, qf, r);
            let mut planar = vec![DubinsSegment { kind: dir, length: r * theta, flight_path_angle: 0.0 }];
            planar.extend(planar_segments(word, params, r));
            let mut path = build(with_climb(planar, sign * limits.gamma_max), AltitudeCase::Medium);
            path.word = word;
            return path;
        }
    }
    // No exact detour found: one helix turn at a shallower angle.
    let planar_total = l_car + TAU * r;
    let gamma = sign * (climb / planar_total).atan();
    let mut planar = car.segments.clone();
    planar.push(DubinsSegment { kind: helix_kind(turn), length: TAU * r, flight_path_angle: 0.0 });
    build(with_climb(planar, gamma), AltitudeCase::Medium)
}

fn high_case(
    car: &DubinsPath,
    climb: f64,
    limits: &VehicleLimits,
    sign: f64,
    build: impl Fn(Vec<DubinsSegment>, AltitudeCase) -> DubinsPath,
) -> DubinsPath {
    let r = limits.r_min;
    let tan_g = limits.gamma_max.tan();
    let l_car = car.total_length;
    let mut turns = ((climb / tan_g - l_car) / (TAU * r)).ceil().max(1.0);
    // guard against the ceiling landing one short through rounding
    while climb > (l_car + TAU * r * turns) * tan_g {
        turns += 1.0;
    }
    let helix_planar = TAU * r * turns;
    let gamma = sign * (climb / (l_car + helix_planar)).atan();
    let mut planar = car.segments.clone();
    planar.push(DubinsSegment {
        kind: helix_kind(car.word.terminal_turn()),
        length: helix_planar,
        flight_path_angle: 0.0,
    });
    build(with_climb(planar, gamma), AltitudeCase::High)
}

impl DubinsPath {
    /// Number of full helix turns appended for a large climb.
    pub fn helix_turns(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| matches!(s.kind, SegmentKind::HelixLeft | SegmentKind::HelixRight))
            .map(|s| s.planar_length() / (TAU * self.radius))
            .sum()
    }

    pub fn planar_length(&self) -> f64 {
        self.segments.iter().map(DubinsSegment::planar_length).sum()
    }

    pub fn max_abs_flight_path_angle(&self) -> f64 {
        self.segments.iter().map(|s| s.flight_path_angle.abs()).fold(0.0, f64::max)
    }

    /// Pose after `s` metres of 3D arc length (clamped to the path).
    pub fn pose_at(&self, s: f64) -> Pose4 {
        let mut remaining = s.clamp(0.0, self.total_length);
        let mut pose = self.start;
        for seg in &self.segments {
            let step = remaining.min(seg.length);
            let (sg, cg) = seg.flight_path_angle.sin_cos();
            pose = advance(&pose, seg.kind, step * cg, step * sg, self.radius);
            remaining -= step;
            if remaining <= 0.0 {
                break;
            }
        }
        pose
    }

    /// Pose obtained by integrating every segment in full.
    pub fn integrated_end(&self) -> Pose4 {
        self.segments.iter().fold(self.start, |pose, seg| {
            let (sg, cg) = seg.flight_path_angle.sin_cos();
            advance(&pose, seg.kind, seg.length * cg, seg.length * sg, self.radius)
        })
    }
}

/// Poses every `ds` metres of arc length, both endpoints included.
pub fn sample_path(path: &DubinsPath, ds: f64) -> Result<Vec<Pose4>, DubinsError> {
    if !(ds.is_finite() && ds > 0.0) {
        return Err(DubinsError::InvalidStep(ds));
    }
    let total = path.total_length;
    let mut out = Vec::with_capacity((total / ds) as usize + 2);
    let mut k = 0usize;
    loop {
        let s = k as f64 * ds;
        if s >= total - 1e-12 {
            break;
        }
        out.push(if k == 0 { path.start } else { path.pose_at(s) });
        k += 1;
    }
    out.push(path.end);
    Ok(out)
}

/// Flight time at constant airspeed.
pub fn path_duration(path: &DubinsPath, limits: &VehicleLimits) -> f64 {
    path.total_length / limits.airspeed
}
