//! Runs the full pipeline on noise-free straight and arc grooves and compares the waypoints
//! with the analytic groove bottom.
//!
//! cargo run --release --example weld_trajectory -- [key=value ...]
//!
//! Keys prefixed with `spec.` edit the workpiece (e.g. `spec.groove.depth=0.004`); the rest
//! are pipeline config keys.

use weldgroove::config::PipelineConfig;
use weldgroove::evaluation::{overlap_rate, trajectory_deviation};
use weldgroove::pipeline::run_pipeline;
use weldgroove::synth::{generate_workpiece, Shape, WorkpieceSpec};

fn main() -> weldgroove::Result<()> {
    let mut config = PipelineConfig::default();
    let mut edits = Vec::new();
    let mut step = 9;
    for kv in std::env::args().skip(1) {
        let (k, v) = kv.split_once('=').expect("key=value");
        match k.strip_prefix("spec.") {
            Some(field) => edits.push((field.to_string(), v.to_string())),
            None if k == "step" => step = v.parse().expect("waypoint print stride"),
            None => config.set(k, v)?,
        }
    }
    for shape in [Shape::StraightLine, Shape::CurveLine] {
        let mut spec = WorkpieceSpec::default_for(shape);
        for (k, v) in &edits {
            spec.set(k, v)?;
        }
        let w = generate_workpiece(&spec)?;
        let run = run_pipeline(&w.labeled.cloud, &config)?;
        let t = &run.trajectory;
        let dev = trajectory_deviation(t, &w.reference);
        println!(
            "{shape}: lambda {:.3}, {} waypoints, deviation mean {:.3} mm max {:.3} mm, polyline {:.1} mm vs reference {:.1} mm",
            overlap_rate(&run.detection.groove.indices, &w.labeled.truth).lambda,
            t.len(),
            dev.mean * 1e3,
            dev.max * 1e3,
            t.polyline_length() * 1e3,
            w.reference.length() * 1e3,
        );
        for wp in t.waypoints.iter().step_by(step) {
            println!(
                "  #{:2} at ({:8.3}, {:8.3}, {:7.3}) mm  off {:6.3} mm  yaw {:7.2}° pitch {:6.2}°",
                wp.ordinal,
                wp.position.x * 1e3,
                wp.position.y * 1e3,
                wp.position.z * 1e3,
                w.reference.distance(&wp.position) * 1e3,
                wp.euler.yaw.to_degrees(),
                wp.euler.pitch.to_degrees()
            );
        }
    }
    Ok(())
}
