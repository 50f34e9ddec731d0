use crate::error::{Error, Result};

use super::VariationMap;

/// Indices of the points whose descriptor reached the threshold, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GrooveSet {
    pub indices: Vec<usize>,
    pub threshold: f64,
}

impl GrooveSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Keeps every point with `descriptor >= threshold`.
pub fn extract_groove(map: &VariationMap, threshold: f64) -> Result<GrooveSet> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {threshold}")));
    }
    let indices = map
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.descriptor >= threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(GrooveSet { indices, threshold })
}

const OTSU_BINS: usize = 256;

/// Otsu's threshold over a 256-bin histogram of `values` spanning `[0, max]`.
///
/// Returns the lower edge of the first bin of the upper class. When every value is zero the
/// smallest positive `f64` is returned, so extraction yields an empty set.
pub fn otsu_threshold(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(0.0, f64::max);
    if !(max > 0.0) {
        return f64::MIN_POSITIVE;
    }
    let width = max / OTSU_BINS as f64;
    let mut hist = [0u64; OTSU_BINS];
    let mut total = 0u64;
    for v in values {
        let b = ((v / width) as usize).min(OTSU_BINS - 1);
        hist[b] += 1;
        total += 1;
    }
    let sum_all: f64 = hist.iter().enumerate().map(|(b, &c)| b as f64 * c as f64).sum();
    let mut best = (f64::NEG_INFINITY, 1usize);
    let mut w0 = 0u64;
    let mut sum0 = 0.0;
    // Split between bin `k - 1` and bin `k`.
    for k in 1..OTSU_BINS {
        w0 += hist[k - 1];
        sum0 += (k - 1) as f64 * hist[k - 1] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1) * (m0 - m1);
        if between > best.0 {
            best = (between, k);
        }
    }
    (best.1 as f64 * width).max(f64::MIN_POSITIVE)
}
