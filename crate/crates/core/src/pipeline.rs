//! End-to-end composition: smoothing, normals, descriptor map, extraction, trajectory.

use std::time::Instant;

use crate::cloud::PointCloud;
use crate::config::{auto, PipelineConfig, ThresholdMode};
use crate::descriptor::{
    denoise_groove, extract_groove, otsu_threshold, variation_map_with_index, DenoiseParams, GrooveSet, VariationMap,
};
use crate::error::{Error, Result};
use crate::evaluation::StageTimings;
use crate::kdtree::{median_spacing, SpatialIndex};
use crate::preprocess::{estimate_normals_with_index, mls_smooth_with_index, Diagnostics, MlsParams, NormalParams};
use crate::trajectory::{generate_trajectory, Trajectory, TrajectoryConfig};

/// Concrete radii after resolving `auto` settings against the point spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedRadii {
    pub spacing: f64,
    pub mls: f64,
    pub normals: f64,
    pub gfh: f64,
    pub cluster: f64,
    pub edge_margin: f64,
}

impl ResolvedRadii {
    pub fn new(config: &PipelineConfig, spacing: f64) -> Self {
        Self {
            spacing,
            mls: config.mls_radius.resolve(spacing, auto::MLS),
            normals: config.normals_radius.resolve(spacing, auto::NORMALS),
            gfh: config.gfh_radius.resolve(spacing, auto::GFH),
            cluster: config.cluster_radius.resolve(spacing, auto::CLUSTER),
            edge_margin: config.edge_margin.resolve(spacing, auto::EDGE_MARGIN),
        }
    }

    pub fn denoise(&self, config: &PipelineConfig) -> DenoiseParams {
        DenoiseParams {
            min_cluster: config.min_cluster,
            cluster_radius: self.cluster,
            edge_margin: self.edge_margin,
            edge_fraction: config.edge_fraction,
        }
    }
}

/// Smoothed cloud with normals, ready for the descriptor pass.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub cloud: PointCloud,
    pub radii: ResolvedRadii,
    pub smoothing: Diagnostics,
    pub normals: Diagnostics,
    /// Spatial index over `cloud`.
    pub index: SpatialIndex,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub preprocessed: Preprocessed,
    pub map: VariationMap,
    /// Points at or above the threshold, before denoising.
    pub raw: GrooveSet,
    pub groove: GrooveSet,
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub detection: Detection,
    pub trajectory: Trajectory,
    pub timings: StageTimings,
}

fn spacing_of(index: &SpatialIndex) -> Result<f64> {
    median_spacing(index)
        .filter(|s| *s > 0.0)
        .ok_or_else(|| Error::InvalidParameter("cannot derive point spacing: fewer than two distinct points".into()))
}

/// MLS smoothing (when enabled) then normal estimation.
pub fn preprocess(cloud: &PointCloud, config: &PipelineConfig, timings: &mut StageTimings) -> Result<Preprocessed> {
    let start = Instant::now();
    let raw_index = SpatialIndex::build(cloud)?;
    let radii = ResolvedRadii::new(config, spacing_of(&raw_index)?);
    let (smoothed, smoothing) = if config.mls_enabled {
        mls_smooth_with_index(cloud, &raw_index, &MlsParams::new(radii.mls, config.mls_order))?
    } else {
        (cloud.clone().without_normals(), Diagnostics::default())
    };
    drop(raw_index);
    timings.smooth = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let index = if config.mls_enabled {
        SpatialIndex::build(&smoothed)?
    } else {
        SpatialIndex::build(cloud)?
    };
    let viewpoint = config.viewpoint.unwrap_or(*cloud.viewpoint());
    let (with_normals, normals) =
        estimate_normals_with_index(&smoothed, &index, &NormalParams::new(radii.normals, viewpoint))?;
    timings.normals = start.elapsed().as_secs_f64();
    Ok(Preprocessed {
        cloud: with_normals,
        radii,
        smoothing,
        normals,
        index,
    })
}

/// Threshold then (optionally) denoise a descriptor map.
pub fn extract(map: &VariationMap, cloud: &PointCloud, radii: &ResolvedRadii, config: &PipelineConfig) -> Result<(GrooveSet, GrooveSet)> {
    let threshold = match config.threshold {
        ThresholdMode::Otsu => otsu_threshold(map.descriptors()),
        ThresholdMode::Fixed(t) => t,
    };
    let raw = extract_groove(map, threshold)?;
    let groove = if config.denoise_enabled {
        denoise_groove(&raw, cloud, &radii.denoise(config))?
    } else {
        raw.clone()
    };
    Ok((raw, groove))
}

fn detect_inner(cloud: &PointCloud, config: &PipelineConfig) -> Result<Detection> {
    let total = Instant::now();
    let mut timings = StageTimings::default();
    let pre = preprocess(cloud, config, &mut timings)?;

    let start = Instant::now();
    let map = variation_map_with_index(&pre.cloud, &pre.index, pre.radii.gfh)?;
    timings.variation = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let (raw, groove) = extract(&map, &pre.cloud, &pre.radii, config)?;
    timings.extraction = start.elapsed().as_secs_f64();
    timings.total = total.elapsed().as_secs_f64();
    Ok(Detection {
        preprocessed: pre,
        map,
        raw,
        groove,
        timings,
    })
}

pub fn trajectory_config(config: &PipelineConfig) -> TrajectoryConfig {
    TrajectoryConfig {
        segments: config.segments,
        gd: config.gd,
        reverse: config.reverse,
    }
}

/// Runs `f` on a worker pool capped at `config.threads`, or on the global pool.
pub fn with_threads<T: Send>(config: &PipelineConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    match config.threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Detection stages only. The returned groove may be empty.
pub fn detect(cloud: &PointCloud, config: &PipelineConfig) -> Result<Detection> {
    with_threads(config, || detect_inner(cloud, config))?
}

/// Detection followed by trajectory generation.
pub fn run_pipeline(cloud: &PointCloud, config: &PipelineConfig) -> Result<PipelineRun> {
    with_threads(config, || {
        let total = Instant::now();
        let detection = detect_inner(cloud, config)?;
        let start = Instant::now();
        let trajectory = generate_trajectory(&detection.preprocessed.cloud, &detection.groove, &trajectory_config(config))?;
        let mut timings = detection.timings;
        timings.trajectory = start.elapsed().as_secs_f64();
        timings.total = total.elapsed().as_secs_f64();
        Ok(PipelineRun {
            detection,
            trajectory,
            timings,
        })
    })?
}
