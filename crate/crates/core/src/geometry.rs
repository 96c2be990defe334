//! Planar geometry, bounded Voronoi tessellation and Lloyd relaxation.
//!
//! Cells are built by clipping the rectangular area of interest against the
//! perpendicular-bisector half-plane of every other site. For the site counts
//! used in mission planning (tens of sites) the quadratic construction is
//! exact, simple, and fast enough.

use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sites closer than this are treated as coincident.
pub const MIN_SITE_SEPARATION: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("at least one site is required")]
    NoSites,
    #[error("sites {0} and {1} are coincident")]
    DegenerateSites(usize, usize),
    #[error("site {index} at ({x}, {y}) lies outside the area of interest")]
    OutOfBounds { index: usize, x: f64, y: f64 },
    #[error("invalid area of interest: {0}")]
    InvalidBounds(String),
    #[error("invalid relaxation parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn distance_sq(self, other: Self) -> f64 {
        (self - other).norm_sq()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

/// Axis-aligned rectangular area of interest `[origin, origin + (d_x, d_y)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaOfInterest {
    #[serde(default)]
    pub origin: Point2,
    pub d_x: f64,
    pub d_y: f64,
}

impl AreaOfInterest {
    pub fn new(origin: Point2, d_x: f64, d_y: f64) -> Result<Self, GeometryError> {
        let area = Self { origin, d_x, d_y };
        area.validate()?;
        Ok(area)
    }

    pub fn unit() -> Self {
        Self { origin: Point2::new(0.0, 0.0), d_x: 1.0, d_y: 1.0 }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.origin.is_finite() {
            return Err(GeometryError::InvalidBounds("origin must be finite".into()));
        }
        if !(self.d_x.is_finite() && self.d_x > 0.0) {
            return Err(GeometryError::InvalidBounds(format!("d_x must be > 0, got {}", self.d_x)));
        }
        if !(self.d_y.is_finite() && self.d_y > 0.0) {
            return Err(GeometryError::InvalidBounds(format!("d_y must be > 0, got {}", self.d_y)));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.d_x * self.d_y
    }

    pub fn max(&self) -> Point2 {
        Point2::new(self.origin.x + self.d_x, self.origin.y + self.d_y)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.origin.x + 0.5 * self.d_x, self.origin.y + 0.5 * self.d_y)
    }

    pub fn contains(&self, p: Point2) -> bool {
        let max = self.max();
        p.x >= self.origin.x && p.x <= max.x && p.y >= self.origin.y && p.y <= max.y
    }

    /// Corners in counter-clockwise order starting at the origin.
    pub fn corners(&self) -> Vec<Point2> {
        let max = self.max();
        vec![
            self.origin,
            Point2::new(max.x, self.origin.y),
            max,
            Point2::new(self.origin.x, max.y),
        ]
    }

    /// Draws `n` points uniformly inside the area.
    pub fn sample_uniform(&self, n: usize, seed: u64) -> Vec<Point2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point2::new(
                    self.origin.x + rng.gen::<f64>() * self.d_x,
                    self.origin.y + rng.gen::<f64>() * self.d_y,
                )
            })
            .collect()
    }
}

/// Signed area of a polygon (positive for counter-clockwise vertex order).
pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>()
}

/// Area centroid of a simple polygon. Falls back to the vertex mean for
/// degenerate (zero-area) input.
pub fn polygon_centroid(poly: &[Point2]) -> Point2 {
    let n = poly.len();
    let area = polygon_area(poly);
    if n < 3 || area.abs() < f64::MIN_POSITIVE {
        let sum = poly.iter().fold(Point2::default(), |acc, &p| acc + p);
        return sum * (1.0 / n.max(1) as f64);
    }
    // Shift to the first vertex to limit cancellation for far-from-origin areas.
    let o = poly[0];
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = poly[i] - o;
        let b = poly[(i + 1) % n] - o;
        let c = a.cross(b);
        cx += (a.x + b.x) * c;
        cy += (a.y + b.y) * c;
    }
    let k = 1.0 / (6.0 * area);
    Point2::new(o.x + cx * k, o.y + cy * k)
}

/// `∫_poly ||p - about||² dp` for a counter-clockwise simple polygon.
pub fn polygon_second_moment(poly: &[Point2], about: Point2) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i] - about;
        let b = poly[(i + 1) % n] - about;
        let c = a.cross(b);
        acc += c * (a.x * a.x + a.x * b.x + b.x * b.x + a.y * a.y + a.y * b.y + b.y * b.y);
    }
    acc / 12.0
}

/// Strict point-in-convex-polygon test with a tolerance band (counter-clockwise input).
pub fn convex_contains(poly: &[Point2], p: Point2, tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let edge = b - a;
        edge.cross(p - a) >= -tol * edge.norm()
    })
}

/// Keeps the part of a convex polygon satisfying `normal · p <= offset`.
fn clip_half_plane(poly: &[Point2], normal: Point2, offset: f64) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = poly[i];
        let next = poly[(i + 1) % n];
        let dc = normal.dot(cur) - offset;
        let dn = normal.dot(next) - offset;
        if dc <= 0.0 {
            out.push(cur);
        }
        if (dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0) {
            let t = dc / (dc - dn);
            out.push(cur + (next - cur) * t);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCell {
    pub site: Point2,
    /// Convex, counter-clockwise, clipped to the bounds.
    pub polygon: Vec<Point2>,
    pub centroid: Point2,
    pub area: f64,
}

impl VoronoiCell {
    fn from_polygon(site: Point2, polygon: Vec<Point2>) -> Self {
        let area = polygon_area(&polygon);
        let centroid = polygon_centroid(&polygon);
        Self { site, polygon, centroid, area }
    }

    /// Quantization energy of the cell about its site.
    pub fn energy(&self) -> f64 {
        polygon_second_moment(&self.polygon, self.site)
    }

    /// Largest distance from the site to any polygon vertex.
    pub fn max_vertex_distance(&self) -> f64 {
        self.polygon.iter().map(|v| v.distance(self.site)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiPartition {
    pub cells: Vec<VoronoiCell>,
    pub bounds: AreaOfInterest,
}

impl VoronoiPartition {
    pub fn sites(&self) -> Vec<Point2> {
        self.cells.iter().map(|c| c.site).collect()
    }

    pub fn centroids(&self) -> Vec<Point2> {
        self.cells.iter().map(|c| c.centroid).collect()
    }

    /// Total quantization energy `Σ ∫_cell ||p - site||² dp`.
    pub fn energy(&self) -> f64 {
        self.cells.iter().map(VoronoiCell::energy).sum()
    }

    /// Index of the nearest site; ties go to the lowest index.
    pub fn locate(&self, p: Point2) -> usize {
        nearest_site(&self.sites(), p)
    }
}

/// Index of the site nearest to `p` (lowest index on ties).
pub fn nearest_site(sites: &[Point2], p: Point2) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, s) in sites.iter().enumerate() {
        let d = s.distance_sq(p);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn check_sites(sites: &[Point2], bounds: &AreaOfInterest) -> Result<(), GeometryError> {
    bounds.validate()?;
    if sites.is_empty() {
        return Err(GeometryError::NoSites);
    }
    for (index, &s) in sites.iter().enumerate() {
        if !s.is_finite() || !bounds.contains(s) {
            return Err(GeometryError::OutOfBounds { index, x: s.x, y: s.y });
        }
    }
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            if sites[i].distance(sites[j]) < MIN_SITE_SEPARATION {
                return Err(GeometryError::DegenerateSites(i, j));
            }
        }
    }
    Ok(())
}

/// Bounded Voronoi diagram of `sites`, cells returned in site order.
pub fn voronoi_partition(
    sites: &[Point2],
    bounds: &AreaOfInterest,
) -> Result<VoronoiPartition, GeometryError> {
    check_sites(sites, bounds)?;
    let rect = bounds.corners();
    let cells = sites
        .iter()
        .enumerate()
        .map(|(i, &si)| {
            let mut poly = rect.clone();
            for (j, &sj) in sites.iter().enumerate() {
                if i == j || poly.is_empty() {
                    continue;
                }
                // ||p - si||² <= ||p - sj||²  <=>  2 p·(sj - si) <= |sj|² - |si|²
                // evaluated relative to si to keep magnitudes small.
                let normal = sj - si;
                let offset = 0.5 * normal.norm_sq() + normal.dot(si);
                poly = clip_half_plane(&poly, normal, offset);
            }
            VoronoiCell::from_polygon(si, dedup_vertices(poly))
        })
        .collect();
    Ok(VoronoiPartition { cells, bounds: *bounds })
}

fn dedup_vertices(poly: Vec<Point2>) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(poly.len());
    for p in poly {
        if out.last().is_none_or(|q| q.distance(p) > 1e-12) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].distance(out[out.len() - 1]) <= 1e-12 {
        out.pop();
    }
    out
}

/// One Lloyd update: the area centroid of every cell.
pub fn lloyd_step(partition: &VoronoiPartition) -> Vec<Point2> {
    partition.centroids()
}

/// How the relaxation obtains its starting sites.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteInit {
    Given(Vec<Point2>),
    /// `count` sites drawn uniformly in the bounds from `seed`.
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LloydConfig {
    /// Stop once `(E_prev - E) / E_prev` drops below this.
    pub rel_improvement_threshold: f64,
    pub max_iters: usize,
}

impl Default for LloydConfig {
    fn default() -> Self {
        Self { rel_improvement_threshold: 1e-4, max_iters: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub partition: VoronoiPartition,
    /// Energy of the initial partition followed by one entry per update step.
    pub energy_history: Vec<f64>,
    /// Site sets in order, starting with the initial sites.
    pub site_history: Vec<Vec<Point2>>,
    pub iterations: usize,
}

/// Alternates partitioning and centroid updates until the relative energy
/// improvement falls below the threshold or `max_iters` updates were made.
pub fn lloyd_relax(
    init: SiteInit,
    bounds: &AreaOfInterest,
    config: &LloydConfig,
) -> Result<LloydRun, GeometryError> {
    let thr = config.rel_improvement_threshold;
    if !(thr > 0.0 && thr < 1.0) {
        return Err(GeometryError::InvalidParameter(format!(
            "relative improvement threshold must lie in (0, 1), got {thr}"
        )));
    }
    if config.max_iters == 0 {
        return Err(GeometryError::InvalidParameter("max_iters must be >= 1".into()));
    }
    bounds.validate()?;
    let sites = match init {
        SiteInit::Given(s) => s,
        SiteInit::Random { count, seed } => bounds.sample_uniform(count, seed),
    };

    let mut partition = voronoi_partition(&sites, bounds)?;
    let mut energy = partition.energy();
    let mut energy_history = vec![energy];
    let mut site_history = vec![sites];
    let mut iterations = 0;

    while iterations < config.max_iters {
        let next_sites = lloyd_step(&partition);
        let next = voronoi_partition(&next_sites, bounds)?;
        let next_energy = next.energy();
        iterations += 1;
        energy_history.push(next_energy);
        site_history.push(next_sites);
        let rel = if energy > 0.0 { (energy - next_energy) / energy } else { 0.0 };
        partition = next;
        energy = next_energy;
        if rel < thr {
            break;
        }
    }

    Ok(LloydRun { partition, energy_history, site_history, iterations })
}

/// Coefficient of variation of nearest-neighbour distances between sites.
pub fn nearest_neighbor_spacing_cv(sites: &[Point2]) -> f64 {
    if sites.len() < 2 {
        return 0.0;
    }
    let nn: Vec<f64> = sites
        .iter()
        .enumerate()
        .map(|(i, a)| {
            sites
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| a.distance(*b))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = nn.iter().sum::<f64>() / nn.len() as f64;
    let var = nn.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / nn.len() as f64;
    var.sqrt() / mean
}
