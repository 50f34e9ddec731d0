//! Generates the four synthetic workpieces and optionally writes them to disk.
//!
//! cargo run --release --example synth_workpieces -- [out_dir] [noise_mm] [seed]

use std::path::PathBuf;

use weldgroove::io::{save_cloud, write_index_list, CloudFormat};
use weldgroove::synth::{generate_workpiece, Shape, WorkpieceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from);
    let noise_mm: f64 = args.next().map_or(0.3, |s| s.parse().expect("noise in mm"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    for shape in Shape::ALL {
        let spec = WorkpieceSpec {
            seed,
            noise_sigma: noise_mm * 1e-3,
            ..WorkpieceSpec::default_for(shape)
        };
        let w = generate_workpiece(&spec)?;
        let cloud = &w.labeled.cloud;
        let (lo, hi) = cloud.points().iter().fold(
            ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]),
            |(mut lo, mut hi), p| {
                for k in 0..3 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
                (lo, hi)
            },
        );
        println!(
            "{shape:>13}: {:6} points, {:5} groove, seam {:6.1} mm, extent {:.0} x {:.0} x {:.0} mm",
            cloud.len(),
            w.labeled.truth.len(),
            w.reference.length() * 1e3,
            (hi[0] - lo[0]) * 1e3,
            (hi[1] - lo[1]) * 1e3,
            (hi[2] - lo[2]) * 1e3,
        );
        if let Some(dir) = &out {
            let dir = dir.join(shape.name());
            std::fs::create_dir_all(&dir)?;
            save_cloud(cloud, dir.join("cloud.pcd"), CloudFormat::PcdAscii)?;
            write_index_list(dir.join("truth.txt"), &w.labeled.truth)?;
            std::fs::write(dir.join("reference.json"), w.reference.to_json())?;
        }
    }
    if let Some(dir) = out {
        println!("written under {}", dir.display());
    }
    Ok(())
}
