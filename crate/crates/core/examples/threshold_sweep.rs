//! Sweeps fixed thresholds over the descriptor map of each synthetic workpiece and prints
//! the overlap rate before and after denoising.
//!
//! cargo run --release --example threshold_sweep -- [seed] [noise_mm] [key=value ...]
//!
//! Keys prefixed with `spec.` edit the workpiece, `verbose=1` prints every threshold, the rest
//! are pipeline config keys.

use weldgroove::config::PipelineConfig;
use weldgroove::descriptor::{denoise_groove, extract_groove, otsu_threshold, variation_map_with_index};
use weldgroove::evaluation::{overlap_rate, StageTimings};
use weldgroove::pipeline::preprocess;
use weldgroove::synth::{generate_workpiece, Shape, WorkpieceSpec};

fn main() -> weldgroove::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let noise_mm: f64 = args.next().map_or(0.3, |s| s.parse().expect("noise"));
    let mut config = PipelineConfig::default();
    let mut edits: Vec<(String, String)> = Vec::new();
    let mut verbose = false;
    let mut shapes = Shape::ALL.to_vec();
    for kv in args {
        let (k, v) = kv.split_once('=').expect("key=value");
        match k {
            "verbose" => verbose = v == "1",
            "shapes" => shapes = v.split(',').map(|s| s.parse()).collect::<weldgroove::Result<_>>()?,
            _ => match k.strip_prefix("spec.") {
                Some(field) => edits.push((field.to_string(), v.to_string())),
                None => config.set(k, v)?,
            },
        }
    }
    for shape in shapes {
        let mut spec = WorkpieceSpec {
            seed,
            noise_sigma: noise_mm * 1e-3,
            ..WorkpieceSpec::default_for(shape)
        };
        for (k, v) in &edits {
            spec.set(k, v)?;
        }
        let w = generate_workpiece(&spec)?;
        let truth = &w.labeled.truth;
        let pre = preprocess(&w.labeled.cloud, &config, &mut StageTimings::default())?;
        let map = variation_map_with_index(&pre.cloud, &pre.index, pre.radii.gfh)?;
        let max = map.max_descriptor();
        let otsu = otsu_threshold(map.descriptors());
        let denoise = pre.radii.denoise(&config);
        println!(
            "{shape}: {} points, {} truth, spacing {:.4} mm, max D {max:.4}, otsu {otsu:.4}",
            w.labeled.cloud.len(),
            truth.len(),
            pre.radii.spacing * 1e3
        );
        let mut best = (0.0, 0.0);
        for k in 1..40 {
            let t = max * k as f64 / 40.0;
            let raw = extract_groove(&map, t)?;
            let clean = denoise_groove(&raw, &pre.cloud, &denoise)?;
            let (a, b) = (overlap_rate(&raw.indices, truth).lambda, overlap_rate(&clean.indices, truth).lambda);
            if b > best.1 {
                best = (t, b);
            }
            if verbose {
                println!("  t {t:.4}  raw {a:.3} ({})  denoised {b:.3} ({})", raw.len(), clean.len());
            }
        }
        let raw = extract_groove(&map, otsu)?;
        let clean = denoise_groove(&raw, &pre.cloud, &denoise)?;
        println!(
            "  otsu raw {:.3} denoised {:.3}; best {:.4} -> {:.3}",
            overlap_rate(&raw.indices, truth).lambda,
            overlap_rate(&clean.indices, truth).lambda,
            best.0,
            best.1
        );
    }
    Ok(())
}
