//! Stage timings of the full pipeline on synthetic plates of increasing size.
//!
//! cargo run --release --example pipeline_timing -- [runs] [threads]

use weldgroove::config::PipelineConfig;
use weldgroove::evaluation::StageTimings;
use weldgroove::pipeline::run_pipeline;
use weldgroove::synth::{generate_workpiece, Shape, WorkpieceSpec};

fn main() -> weldgroove::Result<()> {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().map_or(3, |s| s.parse().expect("run count"));
    let mut config = PipelineConfig::default();
    if let Some(t) = args.next() {
        config.set("threads", &t)?;
    }
    println!(
        "{:>8} {:>8} {:>8} {:>9} {:>10} {:>10} {:>8}",
        "points", "smooth", "normals", "variation", "extraction", "trajectory", "total"
    );
    for (length, width) in [(0.2, 0.1), (0.3, 0.2), (0.4, 0.3), (0.52, 0.5)] {
        let spec = WorkpieceSpec {
            length,
            width,
            seed: 9,
            noise_sigma: 0.0003,
            ..WorkpieceSpec::default_for(Shape::StraightLine)
        };
        let w = generate_workpiece(&spec)?;
        let mut all = Vec::new();
        for _ in 0..runs {
            all.push(run_pipeline(&w.labeled.cloud, &config)?.timings);
        }
        let t = StageTimings::mean(&all).expect("at least one run");
        println!(
            "{:8} {:8.3} {:8.3} {:9.3} {:10.3} {:10.3} {:8.3}",
            w.labeled.cloud.len(),
            t.smooth,
            t.normals,
            t.variation,
            t.extraction,
            t.trajectory,
            t.total
        );
    }
    Ok(())
}
