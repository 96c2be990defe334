//! Nadir camera footprints, viewpoint counting and raster coverage.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dubins::Pose4;
use crate::geometry::{AreaOfInterest, Point2};

/// Default raster cells across the shorter side of the area.
pub const DEFAULT_CELLS_ACROSS: f64 = 500.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensingError {
    #[error("altitude must be > 0, got {0}")]
    InvalidAltitude(f64),
    #[error("field of view must lie in (0, π), got {0}")]
    InvalidFov(f64),
    #[error("grid resolution must be > 0, got {0}")]
    InvalidResolution(f64),
    #[error("grids do not share bounds and resolution")]
    GridMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FootprintShape {
    /// Axis-aligned square of side `2 z tan(φ/2)`.
    #[default]
    Square,
    /// Disk of radius `z tan(φ/2)`.
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Full cone angle in radians.
    pub fov: f64,
    #[serde(default)]
    pub footprint: FootprintShape,
}

impl CameraModel {
    pub fn new(fov: f64, footprint: FootprintShape) -> Result<Self, SensingError> {
        let cam = Self { fov, footprint };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        if self.fov > 0.0 && self.fov < PI {
            Ok(())
        } else {
            Err(SensingError::InvalidFov(self.fov))
        }
    }

    pub fn with_shape(self, footprint: FootprintShape) -> Self {
        Self { footprint, ..self }
    }

    pub fn half_angle_tan(&self) -> f64 {
        (0.5 * self.fov).tan()
    }
}

/// Half-width `z tan(φ/2)` of the nadir footprint.
pub fn footprint_halfwidth(z: f64, fov: f64) -> Result<f64, SensingError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(SensingError::InvalidAltitude(z));
    }
    if !(fov > 0.0 && fov < PI) {
        return Err(SensingError::InvalidFov(fov));
    }
    Ok(z * (0.5 * fov).tan())
}

/// Viewpoints needed to tile the area with footprints of side
/// `Δ_c = 2 z_c tan(φ/2)`: `ceil(d_x d_y / Δ_c²)`, at least one.
///
/// Ratios within 1e-9 (relative) of an integer are taken as that integer,
/// so exact divisions are not pushed up by rounding in `tan`.
pub fn required_viewpoints(area: &AreaOfInterest, z_c: f64, fov: f64) -> Result<usize, SensingError> {
    let delta = 2.0 * footprint_halfwidth(z_c, fov)?;
    Ok(snapped_ceil(area.area() / (delta * delta)).max(1))
}

/// `ceil(x)`, except that values within 1e-9 (relative) of an integer round
/// to it.
pub fn snapped_ceil(x: f64) -> usize {
    let nearest = x.round();
    let v = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { x.ceil() };
    v as usize
}

/// Rasterized area of interest with per-cell coverage flags.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    bounds: AreaOfInterest,
    resolution: f64,
    nx: usize,
    ny: usize,
    covered: Vec<bool>,
}

impl CoverageGrid {
    /// Cells are at most `resolution` wide; the counts are rounded up so the
    /// raster spans the bounds exactly.
    pub fn new(bounds: AreaOfInterest, resolution: f64) -> Result<Self, SensingError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(SensingError::InvalidResolution(resolution));
        }
        let nx = ((bounds.d_x / resolution) - 1e-9).ceil().max(1.0) as usize;
        let ny = ((bounds.d_y / resolution) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { bounds, resolution, nx, ny, covered: vec![false; nx * ny] })
    }

    pub fn default_resolution(bounds: &AreaOfInterest) -> f64 {
        bounds.d_x.min(bounds.d_y) / DEFAULT_CELLS_ACROSS
    }

    pub fn bounds(&self) -> &AreaOfInterest {
        &self.bounds
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (self.bounds.d_x / self.nx as f64, self.bounds.d_y / self.ny as f64)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        let (w, h) = self.cell_size();
        Point2::new(
            self.bounds.origin.x + (ix as f64 + 0.5) * w,
            self.bounds.origin.y + (iy as f64 + 0.5) * h,
        )
    }

    pub fn is_covered(&self, ix: usize, iy: usize) -> bool {
        self.covered[iy * self.nx + ix]
    }

    pub fn total_cells(&self) -> usize {
        self.covered.len()
    }

    pub fn covered_cells(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }

    pub fn covered_fraction(&self) -> f64 {
        self.covered_cells() as f64 / self.total_cells() as f64
    }

    pub fn mark_all(&mut self) {
        self.covered.fill(true);
    }

    /// Column index range whose centers lie in `[lo, hi]` along x.
    fn column_span(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let (w, _) = self.cell_size();
        // center_i = x0 + (i + ½) w  ∈ [lo, hi]
        let first = ((lo - self.bounds.origin.x) / w - 0.5).ceil().max(0.0);
        let last = ((hi - self.bounds.origin.x) / w - 0.5).floor().min(self.nx as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    }

    fn row_span(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let (_, h) = self.cell_size();
        let first = ((lo - self.bounds.origin.y) / h - 0.5).ceil().max(0.0);
        let last = ((hi - self.bounds.origin.y) / h - 0.5).floor().min(self.ny as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    }

    /// Marks every cell whose center lies within `radius` of `center`.
    pub fn mark_disk(&mut self, center: Point2, radius: f64) {
        if !(radius >= 0.0) {
            return;
        }
        let Some((r0, r1)) = self.row_span(center.y - radius, center.y + radius) else { return };
        let r_sq = radius * radius;
        for iy in r0..=r1 {
            let cy = self.cell_center(0, iy).y;
            let dy = cy - center.y;
            let rem = r_sq - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let half = rem.sqrt();
            let Some((c0, c1)) = self.column_span(center.x - half - 1e-9, center.x + half + 1e-9)
            else {
                continue;
            };
            // the row chord is an interval; settle its ends with the exact test
            let inside = |ix: usize| self.cell_center(ix, iy).distance_sq(center) <= r_sq;
            let mut a = c0;
            let mut b = c1 + 1;
            while a < b && !inside(a) {
                a += 1;
            }
            while b > a && !inside(b - 1) {
                b -= 1;
            }
            if a < b {
                self.covered[iy * self.nx + a..iy * self.nx + b].fill(true);
            }
        }
    }

    /// Marks every cell whose center lies in the axis-aligned square.
    pub fn mark_square(&mut self, center: Point2, half_width: f64) {
        if !(half_width >= 0.0) {
            return;
        }
        let Some((r0, r1)) = self.row_span(center.y - half_width, center.y + half_width) else { return };
        let Some((c0, c1)) = self.column_span(center.x - half_width, center.x + half_width) else { return };
        for iy in r0..=r1 {
            self.covered[iy * self.nx + c0..=iy * self.nx + c1].fill(true);
        }
    }

    /// Cell-wise OR of two grids over the same raster.
    pub fn merge(&self, other: &CoverageGrid) -> Result<CoverageGrid, SensingError> {
        if self.bounds != other.bounds || self.nx != other.nx || self.ny != other.ny {
            return Err(SensingError::GridMismatch);
        }
        let covered = self.covered.iter().zip(&other.covered).map(|(a, b)| *a || *b).collect();
        Ok(CoverageGrid { covered, ..self.clone() })
    }

    /// True when every cell covered here is also covered in `other`.
    pub fn is_subset_of(&self, other: &CoverageGrid) -> bool {
        self.covered.len() == other.covered.len()
            && self.covered.iter().zip(&other.covered).all(|(a, b)| !*a || *b)
    }

    /// Binary greyscale PGM (covered = 255), top row = north edge. Comment
    /// lines carry the bounds and resolution.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "P5")?;
        writeln!(
            out,
            "# origin_x {} origin_y {} d_x {} d_y {}",
            self.bounds.origin.x, self.bounds.origin.y, self.bounds.d_x, self.bounds.d_y
        )?;
        writeln!(out, "# resolution {}", self.resolution)?;
        writeln!(out, "{} {}\n255", self.nx, self.ny)?;
        let mut row = vec![0u8; self.nx];
        for iy in (0..self.ny).rev() {
            for (ix, px) in row.iter_mut().enumerate() {
                *px = if self.is_covered(ix, iy) { 255 } else { 0 };
            }
            out.write_all(&row)?;
        }
        Ok(())
    }
}

/// Marks the nadir footprint of `pose`; footprints outside the grid clip.
pub fn mark_footprint(grid: &mut CoverageGrid, pose: &Pose4, camera: &CameraModel) {
    if !(pose.z > 0.0) {
        return;
    }
    let half = pose.z * camera.half_angle_tan();
    match camera.footprint {
        FootprintShape::Disk => grid.mark_disk(pose.planar(), half),
        FootprintShape::Square => grid.mark_square(pose.planar(), half),
    }
}

pub fn coverage_fraction(grid: &CoverageGrid) -> f64 {
    grid.covered_fraction()
}
