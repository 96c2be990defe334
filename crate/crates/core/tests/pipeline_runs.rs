//! Full runs over the bundled scenarios: artifacts, determinism, audit and
//! the external tour hand-off.

use std::fs;
use std::path::{Path, PathBuf};

use airdrop_core::pipeline::{
    audit, export_cost_matrix, import_tour, instance_nodes, load_report, run_phases, run_scenario,
    FailureKind, Phase, PipelineError, TspInstance, FAILURE_MARKER,
};
use airdrop_core::render::{render_svg, RenderError, SvgStyle};
use airdrop_core::tsp::{parse_full_matrix, TspError};
use airdrop_core::{load_scenario, AgentKind, Scenario};
use tempfile::tempdir;

fn fixture(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    load_scenario(&path).unwrap()
}

fn svg_numbers_are_finite(svg: &str) -> roxmltree::Document<'_> {
    let doc = roxmltree::Document::parse(svg).expect("well-formed SVG");
    for node in doc.descendants().filter(|n| n.is_element()) {
        for attr in node.attributes() {
            if ["cx", "cy", "r", "x1", "y1", "x2", "y2", "width", "height"].contains(&attr.name()) {
                assert!(attr.value().parse::<f64>().unwrap().is_finite());
            }
            if attr.name() == "points" {
                for v in attr.value().split([' ', ',']) {
                    assert!(v.parse::<f64>().unwrap().is_finite(), "{v}");
                }
            }
        }
    }
    doc
}

fn count_class(doc: &roxmltree::Document<'_>, class: &str) -> usize {
    doc.descendants().filter(|n| n.attribute("class") == Some(class)).count()
}

#[test]
fn airport_fixture_round_trips() {
    let s = fixture("airport_8x8.json");
    assert_eq!((s.roster.mav, s.roster.mgv, s.roster.static_sensor), (8, 8, 0));
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(airdrop_core::scenario::parse_scenario(&text).unwrap(), s);
}

#[test]
fn minimal_scenario_runs() {
    let dir = tempdir().unwrap();
    let report = run_scenario(&fixture("minimal.json"), dir.path()).unwrap();
    assert_eq!(report.trajectories.len(), 1);
    let drops = report.drop_points();
    assert_eq!(drops.len(), 1);
    assert_eq!(report.trajectories[0].touchdown, drops[0].position);
    assert_eq!(report.coverage.drop_first_sample, Some(1.0));
    assert!(report.mgv.is_none());
    for a in &report.artifacts {
        assert!(dir.path().join(a).is_file(), "{a}");
    }
    assert!(dir.path().join("timings.json").is_file());
    assert!(!dir.path().join(FAILURE_MARKER).exists());
}

#[test]
fn sensor_scenario_covers_with_first_samples() {
    let dir = tempdir().unwrap();
    let report = run_scenario(&fixture("sensors_8x8.json"), dir.path()).unwrap();
    let drops = report.drop_points();
    assert_eq!(drops.len(), 16);
    assert_eq!(report.trajectories.len(), 16);
    assert!(report.coverage.drop_first_sample.unwrap() >= 0.995);
    for (rec, d) in report.trajectories.iter().zip(&drops) {
        assert_eq!(rec.agent_id, d.agent_id);
        if rec.agent_kind == AgentKind::StaticSensor {
            assert_eq!(rec.touchdown, d.position);
            assert!(rec.omega.is_none());
        } else {
            assert!(rec.omega.unwrap() > 0.0);
        }
    }
    assert!(audit(dir.path()).unwrap().iter().all(|c| c.ok));

    let loaded = load_report(dir.path()).unwrap();
    assert_eq!(loaded.traces.len(), 16);
    let svg = fs::read_to_string(dir.path().join("drop_overview.svg")).unwrap();
    let doc = svg_numbers_are_finite(&svg);
    assert_eq!(count_class(&doc, "cell"), 16);
    assert_eq!(count_class(&doc, "drop"), 16);
    assert_eq!(count_class(&doc, "leg"), 16);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timings.json" {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn reruns_are_byte_identical() {
    let s = fixture("sensors_4x4.json");
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let report = run_scenario(&s, a.path()).unwrap();
    run_scenario(&s, b.path()).unwrap();
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
    let svg = fs::read_to_string(a.path().join("drop_overview.svg")).unwrap();
    let doc = svg_numbers_are_finite(&svg);
    assert_eq!(count_class(&doc, "cell"), 8);
    assert_eq!(count_class(&doc, "drop"), 8);
    assert_eq!(report.drop_points().len(), 8);
}

#[test]
fn ground_vehicles_reach_a_connected_layout() {
    let s = fixture("airport_8x8.json");
    let dir = tempdir().unwrap();
    let report = run_scenario(&s, dir.path()).unwrap();
    let m = report.mgv.as_ref().unwrap();
    assert_eq!(m.targets.len(), 8);
    assert_eq!(m.drive_paths.len(), 8);
    assert_eq!(m.targets_wgs84.as_ref().unwrap().len(), 8);
    let range = 1.2 * (s.area.area() / 8.0).sqrt();
    assert!((m.network.comm_range - range).abs() < 1e-9 * range);
    assert!(m.network.connected);
    for (p, &(i, j)) in m.drive_paths.iter().zip(&m.assignment.pairs) {
        assert_eq!(p.start, m.landing[i]);
        assert!(p.end.planar().distance(m.targets[j]) < 1e-9);
    }
    let svg = fs::read_to_string(dir.path().join("mgv_network.svg")).unwrap();
    let doc = svg_numbers_are_finite(&svg);
    assert_eq!(count_class(&doc, "target"), 8);
    assert_eq!(count_class(&doc, "drive"), 8);
    svg_numbers_are_finite(&fs::read_to_string(dir.path().join("coverage_path.svg")).unwrap());
    assert!(audit(dir.path()).unwrap().iter().all(|c| c.ok));
}

#[test]
fn single_viewpoint_renders_without_legs() {
    let mut s = fixture("minimal.json");
    s.coverage_altitude = 2000.0;
    let dir = tempdir().unwrap();
    let report = run_phases(&s, dir.path(), Phase::Coverage).unwrap();
    let svg = render_svg(&report, SvgStyle::CoveragePath).unwrap();
    let doc = svg_numbers_are_finite(&svg);
    assert_eq!(count_class(&doc, "viewpoint"), 1);
    assert_eq!(count_class(&doc, "leg"), 0);
    assert_eq!(render_svg(&report, SvgStyle::DropOverview), Err(RenderError::MissingPhase("drop")));
    assert_eq!(render_svg(&report, SvgStyle::MgvNetwork), Err(RenderError::MissingPhase("mgv")));
}

#[test]
fn failing_descent_leaves_a_marker() {
    let mut s = fixture("sensors_4x4.json");
    s.mav.descent.terminal_velocity = 0.05;
    let dir = tempdir().unwrap();
    match run_scenario(&s, dir.path()) {
        Err(PipelineError::Phase { phase: Phase::Descent, kind: FailureKind::Simulation, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
    let marker = fs::read_to_string(dir.path().join(FAILURE_MARKER)).unwrap();
    assert!(marker.contains("descent"), "{marker}");
    let partial = load_report(dir.path()).unwrap();
    assert_eq!(partial.completed, vec![Phase::Coverage, Phase::DropPoints, Phase::DropTour]);

    // a clean rerun clears the marker
    run_scenario(&fixture("sensors_4x4.json"), dir.path()).unwrap();
    assert!(!dir.path().join(FAILURE_MARKER).exists());
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let mut s = fixture("minimal.json");
    s.area.d_x = -1.0;
    let dir = tempdir().unwrap();
    assert!(matches!(run_scenario(&s, dir.path()), Err(PipelineError::Config(_))));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn external_tours_round_trip() {
    let s = fixture("sensors_4x4.json");
    let dir = tempdir().unwrap();
    for instance in [TspInstance::Coverage, TspInstance::Drop] {
        let nodes = instance_nodes(&s, instance).unwrap();
        let costs = nodes.cost_matrix(&s).unwrap();
        let mpath = dir.path().join("m.txt");
        export_cost_matrix(&costs, &mpath).unwrap();
        let back = parse_full_matrix(&fs::read_to_string(&mpath).unwrap()).unwrap();
        assert_eq!(back.n(), nodes.poses.len());

        let n = costs.n();
        let order: Vec<usize> = (0..n).map(|i| (i + 2) % n).collect();
        let tpath = dir.path().join("t.txt");
        let text: Vec<String> = order.iter().map(|i| i.to_string()).collect();
        fs::write(&tpath, text.join("\n")).unwrap();
        let tour = import_tour(&tpath, &costs, nodes.closed).unwrap();
        let plan = nodes.plan_from_order(&s, &tour.order).unwrap();
        assert_eq!(plan.waypoints[0], nodes.poses[0]);
        if nodes.closed {
            assert!((plan.total_length - tour.total_cost).abs() < 1e-6 * tour.total_cost);
        }

        fs::write(&tpath, "0 0 1").unwrap();
        assert!(matches!(
            import_tour(&tpath, &costs, nodes.closed),
            Err(PipelineError::Tour { source: TspError::InvalidTour(_), .. })
        ));
    }
}
