//! Mission planning for rapid area coverage by aerial drop: a fixed-wing
//! coverage pass, Lloyd-distributed drop points toured with Dubins
//! airplane paths, descent simulation of the dropped agents and
//! redistribution of ground vehicles for communication coverage.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descent;
pub mod dubins;
pub mod fmt;
pub mod geometry;
pub mod mgv;
pub mod mission;
pub mod pipeline;
pub mod render;
pub mod scenario;
pub mod sensing;
pub mod tsp;

pub use descent::{DescentParams, DescentTrajectory, SpiralParams};
pub use dubins::{DubinsPath, Pose4, VehicleLimits};
pub use geometry::{AreaOfInterest, Point2, VoronoiCell, VoronoiPartition};
pub use mgv::{Assignment, CommNetwork, GeodeticCoord};
pub use mission::{AgentKind, DropPoint, MissionPlan};
pub use pipeline::{run_phases, run_scenario, Phase, PipelineError, RunReport};
pub use render::{render_svg, SvgStyle};
pub use scenario::{load_scenario, ConfigError, Scenario};
pub use sensing::{CameraModel, CoverageGrid, FootprintShape};
pub use tsp::{CostMatrix, Tour};
