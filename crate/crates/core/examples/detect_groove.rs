//! Detects the groove in a point cloud file, or in a synthetic curve-line scan when no file
//! is given, and writes the groove indices.
//!
//! cargo run --release --example detect_groove -- [cloud.pcd|cloud.ply] [out_groove.txt]

use weldgroove::config::PipelineConfig;
use weldgroove::evaluation::overlap_rate;
use weldgroove::io::{load_cloud_auto, write_index_list};
use weldgroove::pipeline::detect;
use weldgroove::synth::{generate_workpiece, Shape, WorkpieceSpec};

fn main() -> weldgroove::Result<()> {
    let mut args = std::env::args().skip(1);
    let (cloud, truth) = match args.next() {
        Some(path) => (load_cloud_auto(path)?, None),
        None => {
            let spec = WorkpieceSpec {
                seed: 4,
                noise_sigma: 0.0003,
                ..WorkpieceSpec::default_for(Shape::CurveLine)
            };
            let w = generate_workpiece(&spec)?;
            (w.labeled.cloud, Some(w.labeled.truth))
        }
    };
    let config = PipelineConfig::default();
    let d = detect(&cloud, &config)?;
    println!(
        "{} points, threshold {:.4}: {} above threshold, {} after denoising",
        cloud.len(),
        d.groove.threshold,
        d.raw.len(),
        d.groove.len()
    );
    println!(
        "timings: smooth {:.2} s, normals {:.2} s, variation {:.2} s, extraction {:.3} s",
        d.timings.smooth, d.timings.normals, d.timings.variation, d.timings.extraction
    );
    if let Some(truth) = truth {
        let raw = overlap_rate(&d.raw.indices, &truth);
        let clean = overlap_rate(&d.groove.indices, &truth);
        println!("overlap rate: raw {:.3}, denoised {:.3}", raw.lambda, clean.lambda);
    }
    if let Some(out) = args.next() {
        write_index_list(&out, &d.groove.indices)?;
        println!("groove written to {out}");
    }
    Ok(())
}
