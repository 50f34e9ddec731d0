//! Detection accuracy per workpiece type: the threshold is calibrated on two held-out seeds
//! and the overlap rate is reported for five test seeds.
//!
//! cargo run --release --example evaluate_accuracy -- [noise_mm]

use weldgroove::config::PipelineConfig;
use weldgroove::descriptor::{denoise_groove, extract_groove, variation_map_with_index, VariationMap};
use weldgroove::evaluation::{calibrate_threshold, overlap_rate, CalibrationSample, StageTimings};
use weldgroove::pipeline::{preprocess, Preprocessed};
use weldgroove::synth::{generate_workpiece, Shape, Workpiece, WorkpieceSpec};

fn prepare(shape: Shape, seed: u64, noise: f64, config: &PipelineConfig) -> weldgroove::Result<(Workpiece, Preprocessed, VariationMap)> {
    let spec = WorkpieceSpec {
        seed,
        noise_sigma: noise,
        ..WorkpieceSpec::default_for(shape)
    };
    let w = generate_workpiece(&spec)?;
    let pre = preprocess(&w.labeled.cloud, config, &mut StageTimings::default())?;
    let map = variation_map_with_index(&pre.cloud, &pre.index, pre.radii.gfh)?;
    Ok((w, pre, map))
}

fn main() -> weldgroove::Result<()> {
    let noise_mm: f64 = std::env::args().nth(1).map_or(0.3, |s| s.parse().expect("noise in mm"));
    let config = PipelineConfig::default();
    println!("{:>13} {:>9}  {:>6} {:>6} {:>6} {:>6} {:>6}  {:>6}", "shape", "threshold", "1", "2", "3", "4", "5", "mean");
    for shape in Shape::ALL {
        let calibration = [1000, 1001]
            .into_iter()
            .map(|s| prepare(shape, s, noise_mm * 1e-3, &config))
            .collect::<weldgroove::Result<Vec<_>>>()?;
        let denoise = calibration[0].1.radii.denoise(&config);
        let top = calibration.iter().map(|c| c.2.max_descriptor()).fold(0.0, f64::max);
        let candidates: Vec<f64> = (0..=150).map(|k| top * 10f64.powf(-3.0 + k as f64 / 50.0)).collect();
        let samples: Vec<_> = calibration
            .iter()
            .map(|(w, pre, map)| CalibrationSample {
                cloud: &pre.cloud,
                map,
                truth: &w.labeled.truth,
            })
            .collect();
        let (threshold, _) = calibrate_threshold(&samples, &candidates, Some(&denoise))?;

        let mut lambdas = Vec::new();
        for seed in 1..=5 {
            let (w, pre, map) = prepare(shape, seed, noise_mm * 1e-3, &config)?;
            let groove = denoise_groove(&extract_groove(&map, threshold)?, &pre.cloud, &pre.radii.denoise(&config))?;
            lambdas.push(overlap_rate(&groove.indices, &w.labeled.truth).lambda);
        }
        let mean = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
        let cells: Vec<String> = lambdas.iter().map(|l| format!("{:6.2}", l * 100.0)).collect();
        println!("{shape:>13} {threshold:9.4}  {}  {:6.2}", cells.join(" "), mean * 100.0);
    }
    Ok(())
}
