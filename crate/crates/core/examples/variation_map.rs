//! Computes the surface variation map of a noisy straight groove and prints a cross-section
//! of the local and global histogram variances.
//!
//! cargo run --release --example variation_map -- [noise_mm] [gfh_radius_mm]

use weldgroove::config::PipelineConfig;
use weldgroove::descriptor::{otsu_threshold, variation_map_with_index};
use weldgroove::evaluation::StageTimings;
use weldgroove::pipeline::preprocess;
use weldgroove::synth::{generate_workpiece, Shape, WorkpieceSpec};

fn main() -> weldgroove::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise_mm: f64 = args.next().map_or(0.3, |s| s.parse().expect("noise in mm"));
    let mut config = PipelineConfig::default();
    if let Some(r) = args.next() {
        let mm: f64 = r.parse().expect("radius in mm");
        config.set("gfh.radius", &(mm * 1e-3).to_string())?;
    }
    let spec = WorkpieceSpec {
        seed: 2,
        noise_sigma: noise_mm * 1e-3,
        ..WorkpieceSpec::default_for(Shape::StraightLine)
    };
    let w = generate_workpiece(&spec)?;
    let pre = preprocess(&w.labeled.cloud, &config, &mut StageTimings::default())?;
    let map = variation_map_with_index(&pre.cloud, &pre.index, pre.radii.gfh)?;

    println!(
        "{} points, radius {:.1} mm, {} angle evaluations, benchmark ({:.3}, {:.3}, {:.3})",
        map.len(),
        map.radius * 1e3,
        map.angle_evaluations,
        map.benchmark.x,
        map.benchmark.y,
        map.benchmark.z
    );
    println!("Otsu threshold {:.4}, max D {:.4}", otsu_threshold(map.descriptors()), map.max_descriptor());

    // One row per grid line across the seam near x = 0.
    println!("{:>8} {:>8} {:>9} {:>9} {:>9}", "y mm", "z mm", "sigma_l", "sigma_g", "D");
    let mut rows: Vec<usize> = (0..w.labeled.cloud.len())
        .filter(|&i| {
            let p = w.labeled.cloud.point(i);
            p.x.abs() < 0.6e-3 && p.x > 0.0 && p.y.abs() < 0.012
        })
        .collect();
    rows.sort_by(|&a, &b| w.labeled.cloud.point(a).y.total_cmp(&w.labeled.cloud.point(b).y));
    for i in rows {
        let p = w.labeled.cloud.point(i);
        let r = &map.records[i];
        let mark = if w.labeled.truth.binary_search(&i).is_ok() { "  groove" } else { "" };
        println!(
            "{:8.2} {:8.2} {:9.5} {:9.5} {:9.5}{mark}",
            p.y * 1e3,
            p.z * 1e3,
            r.sigma_local,
            r.sigma_global,
            r.descriptor
        );
    }
    Ok(())
}
