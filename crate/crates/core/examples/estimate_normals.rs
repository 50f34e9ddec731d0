//! Smooths a noisy scan and estimates normals, then compares them with the exact surface
//! normals of the synthetic part.
//!
//! cargo run --release --example estimate_normals -- [noise_mm] [mls=on|off]

use weldgroove::config::PipelineConfig;
use weldgroove::evaluation::StageTimings;
use weldgroove::pipeline::preprocess;
use weldgroove::synth::{generate_workpiece, Shape, WorkpieceSpec};

fn main() -> weldgroove::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise_mm: f64 = args.next().map_or(0.3, |s| s.parse().expect("noise in mm"));
    let mut config = PipelineConfig::default();
    if args.next().as_deref() == Some("mls=off") {
        config.set("mls.enabled", "false")?;
    }

    for shape in Shape::ALL {
        let spec = WorkpieceSpec {
            seed: 3,
            noise_sigma: noise_mm * 1e-3,
            ..WorkpieceSpec::default_for(shape)
        };
        let w = generate_workpiece(&spec)?;
        let mut timings = StageTimings::default();
        let pre = preprocess(&w.labeled.cloud, &config, &mut timings)?;
        let normals = pre.cloud.require_normals()?;

        // Mean angular error on groove points and on the rest.
        let mut err = [(0.0, 0usize); 2];
        for (i, n) in normals.iter().enumerate() {
            let truth = w.analytic_normals[i];
            let angle = n.dot(&truth).abs().clamp(0.0, 1.0).acos().to_degrees();
            let k = usize::from(w.labeled.truth.binary_search(&i).is_ok());
            err[k].0 += angle;
            err[k].1 += 1;
        }
        println!(
            "{shape:>13}: spacing {:.3} mm, radii mls {:.1} / normals {:.1} mm, error surface {:.2}° groove {:.2}°, \
             {} smoothing and {} normal diagnostics, {:.2} s",
            pre.radii.spacing * 1e3,
            pre.radii.mls * 1e3,
            pre.radii.normals * 1e3,
            err[0].0 / err[0].1 as f64,
            err[1].0 / err[1].1 as f64,
            pre.smoothing.len(),
            pre.normals.len(),
            timings.smooth + timings.normals,
        );
    }
    Ok(())
}
