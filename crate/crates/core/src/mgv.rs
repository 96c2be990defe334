//! Ground-vehicle redistribution after landing: local ENU frame, target
//! selection, vehicle-to-target assignment, driving paths and the
//! communication-graph audit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dubins::{dubins_car_path, DubinsPath, Pose4};
use crate::geometry::{lloyd_relax, AreaOfInterest, GeometryError, LloydConfig, Point2, SiteInit};

pub const WGS84_A: f64 = 6_378_137.0;
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Largest instance solved by exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 10;

/// Candidate arrival headings tried per driving path.
pub const TERMINAL_HEADINGS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MgvError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{mgvs} vehicles but {targets} targets")]
    CountMismatch { mgvs: usize, targets: usize },
    #[error("turning radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("communication range must be positive, got {0}")]
    InvalidRange(f64),
    #[error("assignment pair ({0}, {1}) out of range")]
    BadPair(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticCoord {
    /// Radians.
    pub latitude: f64,
    /// Radians.
    pub longitude: f64,
    /// Metres above the ellipsoid.
    pub altitude: f64,
}

impl GeodeticCoord {
    pub fn from_degrees(lat_deg: f64, lon_deg: f64, altitude: f64) -> Self {
        Self { latitude: lat_deg.to_radians(), longitude: lon_deg.to_radians(), altitude }
    }
}

/// East, north, up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

fn to_ecef(p: &GeodeticCoord) -> [f64; 3] {
    let (sl, cl) = p.latitude.sin_cos();
    let (so, co) = p.longitude.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sl * sl).sqrt();
    [(n + p.altitude) * cl * co, (n + p.altitude) * cl * so, (n * (1.0 - WGS84_E2) + p.altitude) * sl]
}

fn from_ecef(e: [f64; 3]) -> GeodeticCoord {
    let [x, y, z] = e;
    let longitude = y.atan2(x);
    let p = x.hypot(y);
    let mut lat = z.atan2(p * (1.0 - WGS84_E2));
    for _ in 0..50 {
        let s = lat.sin();
        let n = WGS84_A / (1.0 - WGS84_E2 * s * s).sqrt();
        let next = (z + WGS84_E2 * n * s).atan2(p);
        let done = (next - lat).abs() < 1e-15;
        lat = next;
        if done {
            break;
        }
    }
    let (s, c) = lat.sin_cos();
    let altitude = p * c + z * s - WGS84_A * (1.0 - WGS84_E2 * s * s).sqrt();
    GeodeticCoord { latitude: lat, longitude, altitude }
}

/// Rows: east, north, up unit vectors in ECEF.
fn enu_basis(r: &GeodeticCoord) -> [[f64; 3]; 3] {
    let (sl, cl) = r.latitude.sin_cos();
    let (so, co) = r.longitude.sin_cos();
    [[-so, co, 0.0], [-sl * co, -sl * so, cl], [cl * co, cl * so, sl]]
}

pub fn wgs84_to_enu(p: &GeodeticCoord, reference: &GeodeticCoord) -> Point3 {
    let a = to_ecef(p);
    let b = to_ecef(reference);
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let m = enu_basis(reference);
    let dot = |r: [f64; 3]| r[0] * d[0] + r[1] * d[1] + r[2] * d[2];
    Point3 { x: dot(m[0]), y: dot(m[1]), z: dot(m[2]) }
}

pub fn enu_to_wgs84(p: &Point3, reference: &GeodeticCoord) -> GeodeticCoord {
    let b = to_ecef(reference);
    let m = enu_basis(reference);
    let e = std::array::from_fn(|k| b[k] + m[0][k] * p.x + m[1][k] * p.y + m[2][k] * p.z);
    from_ecef(e)
}

/// Centroids of a Lloyd-relaxed partition with `n_mgv` sites.
pub fn communication_targets(
    area: &AreaOfInterest,
    n_mgv: usize,
    seed: u64,
    lloyd: &LloydConfig,
) -> Result<Vec<Point2>, MgvError> {
    Ok(lloyd_relax(SiteInit::Random { count: n_mgv, seed }, area, lloyd)?.partition.centroids())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMethod {
    Enumeration,
    Hungarian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `(mgv_index, target_index)`, sorted by vehicle.
    pub pairs: Vec<(usize, usize)>,
    pub total_distance: f64,
    pub method: AssignmentMethod,
}

fn matching_total(mgvs: &[Point2], targets: &[Point2], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| mgvs[i].distance(targets[j])).sum()
}

fn check_counts(mgvs: &[Point2], targets: &[Point2]) -> Result<(), MgvError> {
    if mgvs.len() != targets.len() {
        return Err(MgvError::CountMismatch { mgvs: mgvs.len(), targets: targets.len() });
    }
    Ok(())
}

/// Minimum total Euclidean distance matching. Instances up to
/// [`ENUMERATION_LIMIT`] are enumerated with lexicographic tie-breaking;
/// larger ones use the Hungarian method.
pub fn optimal_assignment(mgvs: &[Point2], targets: &[Point2]) -> Result<Assignment, MgvError> {
    if mgvs.len() > ENUMERATION_LIMIT {
        hungarian_assignment(mgvs, targets)
    } else {
        enumerate_assignment(mgvs, targets)
    }
}

pub fn enumerate_assignment(mgvs: &[Point2], targets: &[Point2]) -> Result<Assignment, MgvError> {
    check_counts(mgvs, targets)?;
    let n = mgvs.len();
    let cost: Vec<Vec<f64>> = mgvs.iter().map(|m| targets.iter().map(|t| m.distance(*t)).collect()).collect();
    struct Dfs<'a> {
        cost: &'a [Vec<f64>],
        used: Vec<bool>,
        perm: Vec<usize>,
        best: f64,
        best_perm: Vec<usize>,
    }
    impl Dfs<'_> {
        fn go(&mut self, i: usize, partial: f64) {
            if partial >= self.best {
                return;
            }
            if i == self.cost.len() {
                self.best = partial;
                self.best_perm.clone_from(&self.perm);
                return;
            }
            for j in 0..self.cost.len() {
                if !self.used[j] {
                    self.used[j] = true;
                    self.perm.push(j);
                    self.go(i + 1, partial + self.cost[i][j]);
                    self.perm.pop();
                    self.used[j] = false;
                }
            }
        }
    }
    let mut dfs = Dfs { cost: &cost, used: vec![false; n], perm: Vec::with_capacity(n), best: f64::INFINITY, best_perm: Vec::new() };
    dfs.go(0, 0.0);
    let perm = dfs.best_perm;
    Ok(Assignment {
        total_distance: matching_total(mgvs, targets, &perm),
        pairs: perm.into_iter().enumerate().collect(),
        method: AssignmentMethod::Enumeration,
    })
}

/// O(n³) Hungarian method with row and column potentials.
pub fn hungarian_assignment(mgvs: &[Point2], targets: &[Point2]) -> Result<Assignment, MgvError> {
    check_counts(mgvs, targets)?;
    let n = mgvs.len();
    let cost = |i: usize, j: usize| mgvs[i - 1].distance(targets[j - 1]);
    // 1-based; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            perm[row_of[j] - 1] = j - 1;
        }
    }
    Ok(Assignment {
        total_distance: matching_total(mgvs, targets, &perm),
        pairs: perm.into_iter().enumerate().collect(),
        method: AssignmentMethod::Hungarian,
    })
}

/// Shortest car path from `from` to `target` over [`TERMINAL_HEADINGS`]
/// arrival headings spaced evenly from the starting heading.
pub fn drive_path(from: &Pose4, target: Point2, r_min_car: f64) -> DubinsPath {
    let step = std::f64::consts::TAU / TERMINAL_HEADINGS as f64;
    (0..TERMINAL_HEADINGS)
        .map(|k| {
            let goal = Pose4::new(target.x, target.y, from.z, from.psi + k as f64 * step);
            dubins_car_path(from, &goal, r_min_car)
        })
        .reduce(|best, p| if p.total_length < best.total_length { p } else { best })
        .expect("at least one heading")
}

/// One driving path per assignment pair, in pair order.
pub fn drive_paths(
    assignment: &Assignment,
    mgv_poses: &[Pose4],
    targets: &[Point2],
    r_min_car: f64,
) -> Result<Vec<DubinsPath>, MgvError> {
    if !(r_min_car > 0.0 && r_min_car.is_finite()) {
        return Err(MgvError::InvalidRadius(r_min_car));
    }
    assignment
        .pairs
        .iter()
        .map(|&(i, j)| match (mgv_poses.get(i), targets.get(j)) {
            (Some(p), Some(t)) => Ok(drive_path(p, *t, r_min_car)),
            _ => Err(MgvError::BadPair(i, j)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommNetwork {
    pub node_positions: Vec<Point2>,
    pub comm_range: f64,
    pub connected: bool,
    pub components: usize,
    /// Node pairs within range.
    pub edges: Vec<(usize, usize)>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Disk graph with an edge wherever two nodes are at most `comm_range` apart.
pub fn connectivity_check(positions: &[Point2], comm_range: f64) -> Result<CommNetwork, MgvError> {
    if !(comm_range > 0.0) {
        return Err(MgvError::InvalidRange(comm_range));
    }
    let n = positions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut edges = Vec::new();
    let mut components = n;
    for i in 0..n {
        for j in (i + 1)..n {
            if positions[i].distance(positions[j]) <= comm_range {
                edges.push((i, j));
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
    }
    Ok(CommNetwork { node_positions: positions.to_vec(), comm_range, connected: components <= 1, components, edges })
}

/// `1.2 √(area / n)`.
pub fn default_comm_range(area: &AreaOfInterest, n: usize) -> f64 {
    1.2 * (area.area() / n.max(1) as f64).sqrt()
}
