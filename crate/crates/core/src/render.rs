//! SVG figures of a run: the coverage tour, the drop overview and the
//! ground-vehicle network.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dubins::{sample_path, DubinsPath};
use crate::geometry::Point2;
use crate::mission::AgentKind;
use crate::pipeline::RunReport;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;
const PATH_SAMPLES: f64 = 64.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("report has no {0} data")]
    MissingPhase(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvgStyle {
    CoveragePath,
    DropOverview,
    MgvNetwork,
}

impl SvgStyle {
    pub fn name(self) -> &'static str {
        match self {
            SvgStyle::CoveragePath => "coverage_path",
            SvgStyle::DropOverview => "drop_overview",
            SvgStyle::MgvNetwork => "mgv_network",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [SvgStyle::CoveragePath, SvgStyle::DropOverview, SvgStyle::MgvNetwork].into_iter().find(|v| v.name() == s)
    }
}

/// World-to-canvas mapping with y pointing up in the world.
struct Canvas {
    min: Point2,
    max: Point2,
    scale: f64,
    body: String,
}

impl Canvas {
    fn new(points: impl Iterator<Item = Point2>) -> Self {
        let (mut min, mut max) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points.filter(|p| p.is_finite()) {
            min = Point2::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2::new(max.x.max(p.x), max.y.max(p.y));
        }
        let span = (max.x - min.x).max(max.y - min.y).max(1e-9);
        Self { min, max, scale: (WIDTH - 2.0 * MARGIN) / span, body: String::new() }
    }

    fn size(&self) -> (f64, f64) {
        ((self.max.x - self.min.x) * self.scale + 2.0 * MARGIN, (self.max.y - self.min.y) * self.scale + 2.0 * MARGIN)
    }

    fn xy(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.min.x) * self.scale + MARGIN, (self.max.y - p.y) * self.scale + MARGIN)
    }

    fn points(&self, pts: &[Point2]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.xy(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn polyline(&mut self, class: &str, pts: &[Point2]) {
        let pts = self.points(pts);
        let _ = writeln!(self.body, r#"<polyline class="{class}" points="{pts}"/>"#);
    }

    fn polygon(&mut self, class: &str, pts: &[Point2]) {
        let pts = self.points(pts);
        let _ = writeln!(self.body, r#"<polygon class="{class}" points="{pts}"/>"#);
    }

    fn circle(&mut self, class: &str, c: Point2, r_px: f64, extra: &str) {
        let (x, y) = self.xy(c);
        let _ = writeln!(self.body, r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="{r_px:.2}"{extra}/>"#);
    }

    fn line(&mut self, class: &str, a: Point2, b: Point2) {
        let (x1, y1) = self.xy(a);
        let (x2, y2) = self.xy(b);
        let _ = writeln!(self.body, r#"<line class="{class}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#);
    }

    fn finish(self, title: &str) -> String {
        let (w, h) = self.size();
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
        );
        let _ = writeln!(out, "<title>{title}</title>");
        out.push_str(STYLE);
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

const STYLE: &str = "<style>
.area{fill:#f7f7f2;stroke:#333;stroke-width:1.5}
.footprint{fill:#6baed6;fill-opacity:0.15;stroke:none}
.leg{fill:none;stroke:#d62728;stroke-width:1.5}
.viewpoint{fill:#d62728}
.cell{fill:none;stroke:#7f7f7f;stroke-dasharray:4 3}
.trace{fill:none;stroke:#2ca02c;stroke-width:0.8}
.drop{stroke:#000;stroke-width:0.8}
.entry{fill:#000}
.comm{fill:#9467bd;fill-opacity:0.06;stroke:#9467bd;stroke-opacity:0.3}
.link{stroke:#9467bd;stroke-width:1}
.assign{stroke:#ff7f0e;stroke-dasharray:3 3}
.drive{fill:none;stroke:#8c564b;stroke-width:1.5}
.landing{fill:#8c564b}
.target{fill:#fff;stroke:#9467bd;stroke-width:2}
</style>
";

fn planar_samples(path: &DubinsPath) -> Vec<Point2> {
    if path.total_length <= 0.0 {
        return vec![path.start.planar(), path.end.planar()];
    }
    sample_path(path, path.total_length / PATH_SAMPLES)
        .expect("positive step")
        .iter()
        .map(|p| p.planar())
        .collect()
}

fn kind_fill(kind: AgentKind) -> &'static str {
    match kind {
        AgentKind::Mav => "#1f77b4",
        AgentKind::Mgv => "#8c564b",
        AgentKind::StaticSensor => "#ff7f0e",
    }
}

pub fn render_svg(report: &RunReport, style: SvgStyle) -> Result<String, RenderError> {
    let area = report.area;
    let mut extent: Vec<Point2> = area.corners();
    let coverage_plan = report.coverage_plan.as_ref();
    let drop_plan = report.drop_plan.as_ref();
    let mgv = report.mgv.as_ref();
    match style {
        SvgStyle::CoveragePath => {
            let plan = coverage_plan.ok_or(RenderError::MissingPhase("coverage"))?;
            extent.extend(plan.legs.iter().flat_map(planar_samples));
        }
        SvgStyle::DropOverview => {
            let plan = drop_plan.ok_or(RenderError::MissingPhase("drop"))?;
            extent.extend(plan.legs.iter().flat_map(planar_samples));
            extent.extend(report.traces.iter().flat_map(|t| t.samples.iter().map(|s| s.pose.planar())));
        }
        SvgStyle::MgvNetwork => {
            let m = mgv.ok_or(RenderError::MissingPhase("mgv"))?;
            extent.extend(m.drive_paths.iter().flat_map(planar_samples));
        }
    }
    let mut c = Canvas::new(extent.into_iter());
    c.polygon("area", &area.corners());
    let title = match style {
        SvgStyle::CoveragePath => {
            let plan = coverage_plan.expect("checked above");
            let half = report.coverage_altitude * report.camera.half_angle_tan();
            for wp in &plan.waypoints {
                let p = wp.planar();
                let sq = [
                    Point2::new(p.x - half, p.y - half),
                    Point2::new(p.x + half, p.y - half),
                    Point2::new(p.x + half, p.y + half),
                    Point2::new(p.x - half, p.y + half),
                ];
                c.polygon("footprint", &sq);
            }
            for leg in &plan.legs {
                c.polyline("leg", &planar_samples(leg));
            }
            let unique = if plan.waypoints.len() > 1 && plan.waypoints.first() == plan.waypoints.last() {
                &plan.waypoints[..plan.waypoints.len() - 1]
            } else {
                &plan.waypoints[..]
            };
            for wp in unique {
                c.circle("viewpoint", wp.planar(), 3.5, "");
            }
            format!("coverage tour: {} viewpoints, {:.0} m", unique.len(), plan.total_length)
        }
        SvgStyle::DropOverview => {
            let plan = drop_plan.expect("checked above");
            for d in &plan.drop_points {
                c.polygon("cell", &d.cell.polygon);
            }
            for t in &report.traces {
                let pts: Vec<Point2> = t.samples.iter().map(|s| s.pose.planar()).collect();
                c.polyline("trace", &pts);
            }
            for leg in &plan.legs {
                c.polyline("leg", &planar_samples(leg));
            }
            if let Some(entry) = plan.waypoints.first() {
                c.circle("entry", entry.planar(), 4.0, "");
            }
            for d in &plan.drop_points {
                let extra = format!(r#" fill="{}" data-agent="{}" data-kind="{}""#, kind_fill(d.agent_kind), d.agent_id, d.agent_kind.label());
                c.circle("drop", d.position, 5.0, &extra);
            }
            format!("aerial drop: {} agents, {:.0} m tour", plan.drop_points.len(), plan.total_length)
        }
        SvgStyle::MgvNetwork => {
            let m = mgv.expect("checked above");
            let r_px = m.network.comm_range * c.scale;
            for &t in &m.targets {
                c.circle("comm", t, r_px, "");
            }
            for &(i, j) in &m.network.edges {
                c.line("link", m.targets[i], m.targets[j]);
            }
            for &(i, j) in &m.assignment.pairs {
                c.line("assign", m.landing[i].planar(), m.targets[j]);
            }
            for p in &m.drive_paths {
                c.polyline("drive", &planar_samples(p));
            }
            for l in &m.landing {
                c.circle("landing", l.planar(), 3.5, "");
            }
            for &t in &m.targets {
                c.circle("target", t, 5.0, "");
            }
            format!(
                "ground network: {} vehicles, range {:.0} m, {}",
                m.targets.len(),
                m.network.comm_range,
                if m.network.connected { "connected" } else { "disconnected" }
            )
        }
    };
    Ok(c.finish(&title))
}
