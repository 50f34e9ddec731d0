//! Pipeline configuration: line-oriented `key = value` text, or a flat JSON object with the
//! same keys.
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `mls.enabled` | bool | `true` |
//! | `mls.radius` | `auto` or meters | `auto` |
//! | `mls.order` | 1 or 2 | 2 |
//! | `normals.radius` | `auto` or meters | `auto` |
//! | `normals.viewpoint` | `cloud` or `x y z` | `cloud` |
//! | `gfh.radius` | `auto` or meters | `auto` |
//! | `threshold` | `otsu` or a positive value | `otsu` |
//! | `denoise.enabled` | bool | `true` |
//! | `denoise.min_cluster` | count | 30 |
//! | `denoise.cluster_radius` | `auto` or meters | `auto` |
//! | `denoise.edge_margin` | `auto` or meters | `auto` |
//! | `denoise.edge_fraction` | in `[0, 1]` | 0.5 |
//! | `segments` | 1..=10000 | 55 |
//! | `gd.tolerance` | positive | 1e-4 |
//! | `gd.max_iters` | count | 1000 |
//! | `reverse` | bool | `false` |
//! | `threads` | `auto` or count | `auto` |
//!
//! `auto` radii are multiples of the median nearest-neighbor spacing of the input cloud.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::trajectory::{GdParams, DEFAULT_SEGMENTS};

/// A length that is either given in meters or derived from the cloud's point spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    Auto,
    Meters(f64),
}

impl Radius {
    /// Resolves `Auto` as `multiple × spacing`.
    pub fn resolve(&self, spacing: f64, multiple: f64) -> f64 {
        match *self {
            Radius::Auto => spacing * multiple,
            Radius::Meters(r) => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    Otsu,
    Fixed(f64),
}

/// Multiples of the median point spacing used by `Radius::Auto`.
pub mod auto {
    pub const MLS: f64 = 4.0;
    pub const NORMALS: f64 = 2.5;
    pub const GFH: f64 = 4.0;
    pub const CLUSTER: f64 = 2.5;
    pub const EDGE_MARGIN: f64 = 6.0;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mls_enabled: bool,
    pub mls_radius: Radius,
    pub mls_order: u8,
    pub normals_radius: Radius,
    /// `None` uses the viewpoint stored in the cloud.
    pub viewpoint: Option<Point3>,
    pub gfh_radius: Radius,
    pub threshold: ThresholdMode,
    pub denoise_enabled: bool,
    pub min_cluster: usize,
    pub cluster_radius: Radius,
    pub edge_margin: Radius,
    pub edge_fraction: f64,
    pub segments: usize,
    pub gd: GdParams,
    pub reverse: bool,
    /// `None` uses every available core.
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mls_enabled: true,
            mls_radius: Radius::Auto,
            mls_order: 2,
            normals_radius: Radius::Auto,
            viewpoint: None,
            gfh_radius: Radius::Auto,
            threshold: ThresholdMode::Otsu,
            denoise_enabled: true,
            min_cluster: 30,
            cluster_radius: Radius::Auto,
            edge_margin: Radius::Auto,
            edge_fraction: 0.5,
            segments: DEFAULT_SEGMENTS,
            gd: GdParams::default(),
            reverse: false,
            threads: None,
        }
    }
}

const KEYS: [&str; 17] = [
    "mls.enabled",
    "mls.radius",
    "mls.order",
    "normals.radius",
    "normals.viewpoint",
    "gfh.radius",
    "threshold",
    "denoise.enabled",
    "denoise.min_cluster",
    "denoise.cluster_radius",
    "denoise.edge_margin",
    "denoise.edge_fraction",
    "segments",
    "gd.tolerance",
    "gd.max_iters",
    "reverse",
    "threads",
];

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value `{value}` for `{key}`"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn parse_positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_num(key, value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, value))
    }
}

fn parse_radius(key: &str, value: &str) -> Result<Radius> {
    if value == "auto" {
        Ok(Radius::Auto)
    } else {
        parse_positive(key, value).map(Radius::Meters)
    }
}

fn radius_text(r: &Radius) -> String {
    match r {
        Radius::Auto => "auto".into(),
        Radius::Meters(v) => v.to_string(),
    }
}

impl PipelineConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "mls.enabled" => self.mls_enabled = parse_bool(key, value)?,
            "mls.radius" => self.mls_radius = parse_radius(key, value)?,
            "mls.order" => {
                let o: u8 = parse_num(key, value)?;
                if !(1..=2).contains(&o) {
                    return Err(bad(key, value));
                }
                self.mls_order = o;
            }
            "normals.radius" => self.normals_radius = parse_radius(key, value)?,
            "normals.viewpoint" => {
                self.viewpoint = if value == "cloud" {
                    None
                } else {
                    let c: Vec<f64> = value
                        .split_whitespace()
                        .map(|t| parse_num::<f64>(key, t))
                        .collect::<Result<_>>()?;
                    if c.len() != 3 || c.iter().any(|v| !v.is_finite()) {
                        return Err(bad(key, value));
                    }
                    Some(Point3::new(c[0], c[1], c[2]))
                }
            }
            "gfh.radius" => self.gfh_radius = parse_radius(key, value)?,
            "threshold" => {
                self.threshold = if value == "otsu" {
                    ThresholdMode::Otsu
                } else {
                    ThresholdMode::Fixed(parse_positive(key, value)?)
                }
            }
            "denoise.enabled" => self.denoise_enabled = parse_bool(key, value)?,
            "denoise.min_cluster" => self.min_cluster = parse_num(key, value)?,
            "denoise.cluster_radius" => self.cluster_radius = parse_radius(key, value)?,
            "denoise.edge_margin" => {
                self.edge_margin = if value == "auto" {
                    Radius::Auto
                } else {
                    let v: f64 = parse_num(key, value)?;
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(bad(key, value));
                    }
                    Radius::Meters(v)
                }
            }
            "denoise.edge_fraction" => {
                let v: f64 = parse_num(key, value)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(bad(key, value));
                }
                self.edge_fraction = v;
            }
            "segments" => {
                let n: usize = parse_num(key, value)?;
                if !(1..=10_000).contains(&n) {
                    return Err(Error::Config(format!("segment count {n} outside [1, 10000]")));
                }
                self.segments = n;
            }
            "gd.tolerance" => self.gd.tolerance = parse_positive(key, value)?,
            "gd.max_iters" => {
                let n: usize = parse_num(key, value)?;
                if n == 0 {
                    return Err(bad(key, value));
                }
                self.gd.max_iterations = n;
            }
            "reverse" => self.reverse = parse_bool(key, value)?,
            "threads" => {
                self.threads = if value == "auto" {
                    None
                } else {
                    let n: usize = parse_num(key, value)?;
                    if n == 0 {
                        return Err(bad(key, value));
                    }
                    Some(n)
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Textual value of `key`, in the form accepted by [`set`](Self::set).
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "mls.enabled" => self.mls_enabled.to_string(),
            "mls.radius" => radius_text(&self.mls_radius),
            "mls.order" => self.mls_order.to_string(),
            "normals.radius" => radius_text(&self.normals_radius),
            "normals.viewpoint" => match &self.viewpoint {
                None => "cloud".into(),
                Some(p) => format!("{} {} {}", p.x, p.y, p.z),
            },
            "gfh.radius" => radius_text(&self.gfh_radius),
            "threshold" => match self.threshold {
                ThresholdMode::Otsu => "otsu".into(),
                ThresholdMode::Fixed(v) => v.to_string(),
            },
            "denoise.enabled" => self.denoise_enabled.to_string(),
            "denoise.min_cluster" => self.min_cluster.to_string(),
            "denoise.cluster_radius" => radius_text(&self.cluster_radius),
            "denoise.edge_margin" => radius_text(&self.edge_margin),
            "denoise.edge_fraction" => self.edge_fraction.to_string(),
            "segments" => self.segments.to_string(),
            "gd.tolerance" => self.gd.tolerance.to_string(),
            "gd.max_iters" => self.gd.max_iterations.to_string(),
            "reverse" => self.reverse.to_string(),
            "threads" => self.threads.map_or("auto".into(), |n| n.to_string()),
            _ => return None,
        })
    }

    /// Parses `key = value` lines (`#` starts a comment), or a JSON object when the text
    /// starts with `{`. Keys not mentioned keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        if text.trim_start().starts_with('{') {
            let map: BTreeMap<String, serde_json::Value> =
                serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            for (key, value) in map {
                let value = match value {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::Bool(b) => b.to_string(),
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                    other => return Err(Error::Config(format!("unsupported value {other} for `{key}`"))),
                };
                config.set(&key, &value)?;
            }
            return Ok(config);
        }
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            config
                .set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every key, one `key = value` line each, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.get(key).expect("known key"));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, String> = KEYS.iter().map(|&k| (k, self.get(k).expect("known key"))).collect();
        serde_json::to_string_pretty(&map).expect("config serializes")
    }
}
