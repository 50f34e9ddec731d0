//! Accuracy and runtime evaluation: overlap rate against ground truth, stage timings and
//! trajectory deviation from an analytic reference curve.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::descriptor::{denoise_groove, extract_groove, DenoiseParams, VariationMap};
use crate::error::{Error, Result};
use crate::synth::ReferenceCurve;
use crate::trajectory::Trajectory;

/// A cloud plus the indices of its true groove points, sorted and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    pub truth: Vec<usize>,
}

impl LabeledCloud {
    pub fn new(cloud: PointCloud, mut truth: Vec<usize>) -> Result<Self> {
        truth.sort_unstable();
        truth.dedup();
        if let Some(&last) = truth.last() {
            cloud.check_index(last)?;
        }
        Ok(Self { cloud, truth })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub lambda: f64,
    pub n_detected: usize,
    pub n_truth: usize,
    pub n_overlap: usize,
    /// Both sets were empty; `lambda` is 1 by convention.
    pub vacuous: bool,
}

/// Intersection over union of two index sets. Duplicates are ignored.
pub fn overlap_rate(detected: &[usize], truth: &[usize]) -> Overlap {
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (d, t) = (sorted(detected), sorted(truth));
    let (mut i, mut j, mut both) = (0, 0, 0);
    while i < d.len() && j < t.len() {
        match d[i].cmp(&t[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                both += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = d.len() + t.len() - both;
    Overlap {
        lambda: if union == 0 { 1.0 } else { both as f64 / union as f64 },
        n_detected: d.len(),
        n_truth: t.len(),
        n_overlap: both,
        vacuous: union == 0,
    }
}

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub smooth: f64,
    pub normals: f64,
    pub variation: f64,
    pub extraction: f64,
    pub trajectory: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn stage_sum(&self) -> f64 {
        self.smooth + self.normals + self.variation + self.extraction + self.trajectory
    }

    pub fn mean(runs: &[StageTimings]) -> Option<StageTimings> {
        if runs.is_empty() {
            return None;
        }
        let n = runs.len() as f64;
        let avg = |f: fn(&StageTimings) -> f64| runs.iter().map(f).sum::<f64>() / n;
        Some(StageTimings {
            smooth: avg(|t| t.smooth),
            normals: avg(|t| t.normals),
            variation: avg(|t| t.variation),
            extraction: avg(|t| t.extraction),
            trajectory: avg(|t| t.trajectory),
            total: avg(|t| t.total),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub mean: f64,
    pub max: f64,
    pub waypoints: usize,
}

/// Closest distance from each waypoint position to the reference curve.
pub fn trajectory_deviation(trajectory: &Trajectory, reference: &ReferenceCurve) -> DeviationStats {
    let d: Vec<f64> = trajectory
        .waypoints
        .iter()
        .map(|w| reference.distance(&w.position))
        .collect();
    DeviationStats {
        mean: if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 },
        max: d.iter().copied().fold(0.0, f64::max),
        waypoints: d.len(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    /// Number of points in the evaluated cloud, when known.
    pub point_count: Option<usize>,
    pub overlaps: Vec<Overlap>,
    pub mean_lambda: Option<f64>,
    pub runs: Vec<StageTimings>,
    pub mean_runtime: Option<StageTimings>,
    pub deviation: Option<DeviationStats>,
}

impl EvalReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn push_overlap(&mut self, o: Overlap) {
        self.overlaps.push(o);
        self.mean_lambda = Some(self.overlaps.iter().map(|o| o.lambda).sum::<f64>() / self.overlaps.len() as f64);
    }

    pub fn push_run(&mut self, t: StageTimings) {
        self.runs.push(t);
        self.mean_runtime = StageTimings::mean(&self.runs);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    pub const CSV_HEADER: &'static str = "name,points,lambda,total_seconds";

    /// `name,points,lambda,total_seconds`; unknown fields are left empty.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{}",
            self.name.replace(',', "_"),
            opt(self.point_count.map(|n| n.to_string())),
            opt(self.mean_lambda.map(|l| l.to_string())),
            opt(self.mean_runtime.map(|t| t.total.to_string())),
        );
        s
    }
}

/// One labeled cloud with its descriptor map, used to calibrate a fixed threshold.
#[derive(Debug, Clone)]
pub struct CalibrationSample<'a> {
    pub cloud: &'a PointCloud,
    pub map: &'a VariationMap,
    pub truth: &'a [usize],
}

/// Picks the candidate threshold with the highest mean λ over `samples`, after optional
/// denoising. Ties keep the smaller threshold. Returns `(threshold, mean λ)`.
pub fn calibrate_threshold(
    samples: &[CalibrationSample<'_>],
    candidates: &[f64],
    denoise: Option<&DenoiseParams>,
) -> Result<(f64, f64)> {
    if samples.is_empty() || candidates.is_empty() {
        return Err(Error::InvalidParameter("calibration needs samples and candidates".into()));
    }
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for &t in candidates {
        let mut sum = 0.0;
        for s in samples {
            let mut set = extract_groove(s.map, t)?;
            if let Some(p) = denoise {
                set = denoise_groove(&set, s.cloud, p)?;
            }
            sum += overlap_rate(&set.indices, s.truth).lambda;
        }
        let mean = sum / samples.len() as f64;
        if mean > best.1 {
            best = (t, mean);
        }
    }
    Ok(best)
}
