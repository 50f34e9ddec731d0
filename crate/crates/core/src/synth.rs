//! Synthetic workpiece scans with exact groove labels.
//!
//! Four geometries are supported: a flat plate with a straight seam, a flat plate with a
//! circular-arc seam, a seam along the top edge of a box, and a cylinder with a circumferential seam. All seams
//! carry a V-groove of configurable opening angle, depth and flat bottom width.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Unit, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::evaluation::LabeledCloud;
use crate::geometry::{Point3, UnitVector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    StraightLine,
    CurveLine,
    Box,
    Cylinder,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::StraightLine, Shape::CurveLine, Shape::Box, Shape::Cylinder];

    pub fn name(&self) -> &'static str {
        match self {
            Shape::StraightLine => "straight-line",
            Shape::CurveLine => "curve-line",
            Shape::Box => "box",
            Shape::Cylinder => "cylinder",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|sh| sh.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown shape `{s}`")))
    }
}

/// Cross-section of a V-groove: two walls at `opening_angle` to each other, `depth` below the
/// surface, joined by a flat bottom of `bottom_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrooveProfile {
    pub opening_angle: f64,
    pub depth: f64,
    pub bottom_width: f64,
}

impl GrooveProfile {
    fn half_tan(&self) -> f64 {
        (self.opening_angle * 0.5).tan()
    }

    /// Lateral distance from the seam center to the top edge of a wall.
    pub fn half_width(&self) -> f64 {
        self.bottom_width * 0.5 + self.depth * self.half_tan()
    }

    /// Depth below the surface at lateral distance `s >= 0`, and its derivative.
    fn depth_at(&self, s: f64) -> (f64, f64) {
        let b = self.bottom_width * 0.5;
        if s <= b {
            (self.depth, 0.0)
        } else if s < self.half_width() {
            let slope = 1.0 / self.half_tan();
            (self.depth - (s - b) * slope, -slope)
        } else {
            (0.0, 0.0)
        }
    }

    fn contains(&self, s: f64) -> bool {
        s < self.half_width()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkpieceSpec {
    pub shape: Shape,
    /// Extent along the seam direction (x), meters.
    pub length: f64,
    /// Extent across the seam (y) for plates and the box top, meters.
    pub width: f64,
    pub thickness: f64,
    pub groove: Option<GrooveProfile>,
    pub pitch: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub arc_radius: f64,
    pub arc_span: f64,
    /// Visible height of the box walls.
    pub box_height: f64,
    /// Distance from the box's front edge to the seam.
    pub seam_offset: f64,
    pub cylinder_radius: f64,
    /// Visible half-angle of the cylinder around the viewing direction.
    pub visible_half_angle: f64,
    /// Height of vertical faces along the two plate edges parallel to the seam (0 = none).
    pub skirt_height: f64,
}

impl Default for WorkpieceSpec {
    fn default() -> Self {
        Self::default_for(Shape::StraightLine)
    }
}

impl WorkpieceSpec {
    /// Bench-scale defaults for each geometry: 1 mm pitch, 90° opening, 5 mm depth.
    pub fn default_for(shape: Shape) -> Self {
        let mut spec = Self {
            shape,
            length: 0.2,
            width: 0.15,
            thickness: 0.02,
            groove: Some(GrooveProfile {
                opening_angle: std::f64::consts::FRAC_PI_3,
                depth: 0.004,
                bottom_width: 0.0,
            }),
            pitch: 0.001,
            noise_sigma: 0.0,
            seed: 0,
            arc_radius: 0.12,
            arc_span: FRAC_PI_2,
            box_height: 0.006,
            seam_offset: 0.02,
            cylinder_radius: 0.06,
            visible_half_angle: 75f64.to_radians(),
            skirt_height: 0.0,
        };
        match shape {
            Shape::StraightLine => {}
            Shape::CurveLine => {
                spec.length = 0.24;
                spec.width = 0.12;
            }
            Shape::Box => {
                spec.width = 0.1;
            }
            Shape::Cylinder => {}
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.pitch, "pitch")?;
        positive(self.length, "length")?;
        positive(self.width, "width")?;
        positive(self.thickness, "thickness")?;
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidSpec("noise sigma must be non-negative".into()));
        }
        if let Some(g) = &self.groove {
            if !(g.opening_angle > 0.0 && g.opening_angle < std::f64::consts::PI) {
                return Err(Error::InvalidSpec(format!("opening angle {} outside (0, π)", g.opening_angle)));
            }
            positive(g.depth, "groove depth")?;
            if !(g.bottom_width >= 0.0) {
                return Err(Error::InvalidSpec("bottom width must be non-negative".into()));
            }
            if g.depth >= self.thickness {
                return Err(Error::InvalidSpec(format!(
                    "groove depth {} is not less than plate thickness {}",
                    g.depth, self.thickness
                )));
            }
        }
        match self.shape {
            Shape::CurveLine => {
                positive(self.arc_radius, "arc radius")?;
                if !(self.arc_span > 0.0 && self.arc_span < std::f64::consts::PI) {
                    return Err(Error::InvalidSpec("arc span must lie in (0, π)".into()));
                }
            }
            Shape::Box => {
                positive(self.box_height, "box height")?;
                let half_width = self.groove.as_ref().map_or(0.0, |g| g.half_width());
                if !(self.seam_offset > half_width && self.seam_offset < self.width - half_width) {
                    return Err(Error::InvalidSpec("seam offset places the groove off the box top".into()));
                }
            }
            Shape::Cylinder => {
                positive(self.cylinder_radius, "cylinder radius")?;
                if !(self.visible_half_angle > 0.0 && self.visible_half_angle < FRAC_PI_2) {
                    return Err(Error::InvalidSpec("visible half-angle must lie in (0, π/2)".into()));
                }
                if let Some(g) = &self.groove {
                    if g.depth >= self.cylinder_radius {
                        return Err(Error::InvalidSpec("groove deeper than the cylinder radius".into()));
                    }
                }
            }
            Shape::StraightLine => {}
        }
        if !(self.skirt_height >= 0.0) {
            return Err(Error::InvalidSpec("skirt height must be non-negative".into()));
        }
        Ok(())
    }
}

impl WorkpieceSpec {
    /// Sets one field from text. Keys are the JSON field names; groove fields are
    /// `groove.opening_angle`, `groove.depth` and `groove.bottom_width`, and `groove = none`
    /// removes the groove.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = || -> Result<f64> {
            value
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("invalid value `{value}` for `{key}`")))
        };
        if let Some(field) = key.strip_prefix("groove.") {
            let g = self.groove.get_or_insert(GrooveProfile {
                opening_angle: std::f64::consts::FRAC_PI_3,
                depth: 0.004,
                bottom_width: 0.0,
            });
            match field {
                "opening_angle" => g.opening_angle = num()?,
                "depth" => g.depth = num()?,
                "bottom_width" => g.bottom_width = num()?,
                _ => return Err(Error::InvalidSpec(format!("unknown key `{key}`"))),
            }
            return Ok(());
        }
        match key {
            "groove" if value == "none" => self.groove = None,
            "shape" => self.shape = value.parse()?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("invalid seed `{value}`")))?
            }
            "length" => self.length = num()?,
            "width" => self.width = num()?,
            "thickness" => self.thickness = num()?,
            "pitch" => self.pitch = num()?,
            "noise_sigma" => self.noise_sigma = num()?,
            "arc_radius" => self.arc_radius = num()?,
            "arc_span" => self.arc_span = num()?,
            "box_height" => self.box_height = num()?,
            "seam_offset" => self.seam_offset = num()?,
            "cylinder_radius" => self.cylinder_radius = num()?,
            "visible_half_angle" => self.visible_half_angle = num()?,
            "skirt_height" => self.skirt_height = num()?,
            _ => return Err(Error::InvalidSpec(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

/// Analytic groove-bottom curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ReferenceCurve {
    Line {
        start: [f64; 3],
        end: [f64; 3],
    },
    /// Points `center + radius (cos φ start_dir + sin φ (axis × start_dir))`, `φ ∈ [0, sweep]`.
    Arc {
        center: [f64; 3],
        radius: f64,
        axis: [f64; 3],
        start_dir: [f64; 3],
        sweep: f64,
    },
}

impl ReferenceCurve {
    pub fn length(&self) -> f64 {
        match self {
            ReferenceCurve::Line { start, end } => (Vector3::from(*end) - Vector3::from(*start)).norm(),
            ReferenceCurve::Arc { radius, sweep, .. } => radius * sweep,
        }
    }

    /// Distance from `p` to the closest point of the curve.
    pub fn distance(&self, p: &Point3) -> f64 {
        match self {
            ReferenceCurve::Line { start, end } => {
                let a = Vector3::from(*start);
                let ab = Vector3::from(*end) - a;
                let t = ((p.coords - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (p.coords - (a + ab * t)).norm()
            }
            ReferenceCurve::Arc {
                center,
                radius,
                axis,
                start_dir,
                sweep,
            } => {
                let c = Vector3::from(*center);
                let n = Vector3::from(*axis).normalize();
                let e1 = Vector3::from(*start_dir).normalize();
                let e2 = n.cross(&e1);
                let d = p.coords - c;
                let mut phi = d.dot(&e2).atan2(d.dot(&e1));
                if phi < 0.0 {
                    phi += std::f64::consts::TAU;
                }
                let at = |phi: f64| c + (e1 * phi.cos() + e2 * phi.sin()) * *radius;
                if phi <= *sweep {
                    (p.coords - at(phi)).norm()
                } else {
                    (p.coords - at(0.0)).norm().min((p.coords - at(*sweep)).norm())
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reference curve serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workpiece {
    pub labeled: LabeledCloud,
    pub reference: ReferenceCurve,
    /// Exact surface normals at the noise-free sample positions.
    pub analytic_normals: Vec<UnitVector3>,
}

struct Sample {
    point: Point3,
    normal: Vector3<f64>,
    groove: bool,
}

/// Generates a labeled synthetic scan of `spec`. Deterministic for a fixed seed.
pub fn generate_workpiece(spec: &WorkpieceSpec) -> Result<Workpiece> {
    spec.validate()?;
    let (samples, reference, viewpoint) = match spec.shape {
        Shape::StraightLine => straight_plate(spec),
        Shape::CurveLine => curved_plate(spec),
        Shape::Box => box_top(spec),
        Shape::Cylinder => cylinder(spec),
    };
    if samples.is_empty() {
        return Err(Error::InvalidSpec("workpiece produced no samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut points = Vec::with_capacity(samples.len());
    let mut normals = Vec::with_capacity(samples.len());
    let mut truth = Vec::new();
    for (i, s) in samples.into_iter().enumerate() {
        let n = Unit::new_normalize(s.normal);
        let offset = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        points.push(s.point + n.into_inner() * offset);
        normals.push(n);
        if s.groove {
            truth.push(i);
        }
    }
    let cloud = PointCloud::with_viewpoint(points, viewpoint)?;
    Ok(Workpiece {
        labeled: LabeledCloud::new(cloud, truth)?,
        reference,
        analytic_normals: normals,
    })
}

fn grid_count(extent: f64, pitch: f64) -> usize {
    ((extent / pitch).round() as usize).max(1)
}

/// Cell-centered coordinates covering `[lo, lo + extent)`.
fn cell_centers(lo: f64, extent: f64, pitch: f64) -> impl Iterator<Item = f64> {
    let n = grid_count(extent, pitch);
    let step = extent / n as f64;
    (0..n).map(move |i| lo + (i as f64 + 0.5) * step)
}

/// Surface sample of a plate whose groove depth depends on lateral distance `s` with
/// in-plane gradient `grad_s`.
fn plate_sample(x: f64, y: f64, s: f64, grad_s: Vector2<f64>, groove: Option<&GrooveProfile>) -> Sample {
    let (depth, slope, inside) = match groove {
        Some(g) => {
            let (d, ds) = g.depth_at(s);
            (d, ds, g.contains(s))
        }
        None => (0.0, 0.0, false),
    };
    Sample {
        point: Point3::new(x, y, -depth),
        normal: Vector3::new(slope * grad_s.x, slope * grad_s.y, 1.0),
        groove: inside,
    }
}

fn skirt(spec: &WorkpieceSpec, xs: &[f64], samples: &mut Vec<Sample>) {
    if spec.skirt_height <= 0.0 {
        return;
    }
    for side in [-1.0, 1.0] {
        for z in cell_centers(-spec.skirt_height, spec.skirt_height, spec.pitch) {
            for &x in xs {
                samples.push(Sample {
                    point: Point3::new(x, side * spec.width * 0.5, z),
                    normal: Vector3::new(0.0, side, 0.0),
                    groove: false,
                });
            }
        }
    }
}

fn straight_plate(spec: &WorkpieceSpec) -> (Vec<Sample>, ReferenceCurve, Point3) {
    let g = spec.groove.as_ref();
    let xs: Vec<f64> = cell_centers(-spec.length * 0.5, spec.length, spec.pitch).collect();
    let mut samples = Vec::new();
    for y in cell_centers(-spec.width * 0.5, spec.width, spec.pitch) {
        for &x in &xs {
            samples.push(plate_sample(x, y, y.abs(), Vector2::new(0.0, y.signum()), g));
        }
    }
    skirt(spec, &xs, &mut samples);
    let depth = g.map_or(0.0, |g| g.depth);
    let reference = ReferenceCurve::Line {
        start: [-spec.length * 0.5, 0.0, -depth],
        end: [spec.length * 0.5, 0.0, -depth],
    };
    (samples, reference, Point3::new(0.0, 0.0, 0.5))
}

fn curved_plate(spec: &WorkpieceSpec) -> (Vec<Sample>, ReferenceCurve, Point3) {
    let g = spec.groove.as_ref();
    let r = spec.arc_radius;
    let half = spec.arc_span * 0.5;
    let sagitta = r * (1.0 - half.cos());
    let center = Vector2::new(0.0, -r * half.cos() - sagitta * 0.5);
    let phi0 = FRAC_PI_2 - half;
    let phi1 = FRAC_PI_2 + half;
    let ends = [
        center + Vector2::new(phi0.cos(), phi0.sin()) * r,
        center + Vector2::new(phi1.cos(), phi1.sin()) * r,
    ];

    let xs: Vec<f64> = cell_centers(-spec.length * 0.5, spec.length, spec.pitch).collect();
    let mut samples = Vec::new();
    for y in cell_centers(-spec.width * 0.5, spec.width, spec.pitch) {
        for &x in &xs {
            let q = Vector2::new(x, y);
            let d = q - center;
            let phi = d.y.atan2(d.x);
            let (s, grad) = if (phi0..=phi1).contains(&phi) {
                let rho = d.norm();
                (
                    (rho - r).abs(),
                    d / rho * (rho - r).signum(),
                )
            } else {
                let e = if (q - ends[0]).norm() <= (q - ends[1]).norm() { ends[0] } else { ends[1] };
                let v = q - e;
                let n = v.norm();
                (n, if n > 0.0 { v / n } else { Vector2::zeros() })
            };
            samples.push(plate_sample(x, y, s, grad, g));
        }
    }
    skirt(spec, &xs, &mut samples);
    let depth = g.map_or(0.0, |g| g.depth);
    let reference = ReferenceCurve::Arc {
        center: [center.x, center.y, -depth],
        radius: r,
        axis: [0.0, 0.0, 1.0],
        start_dir: [phi0.cos(), phi0.sin(), 0.0],
        sweep: spec.arc_span,
    };
    (samples, reference, Point3::new(0.0, 0.0, 0.5))
}

/// Section of a long box seen from above: the top face, the upper `box_height` of the front
/// (+y) and back walls, and a seam parallel to the front edge, `seam_offset` in from it.
fn box_top(spec: &WorkpieceSpec) -> (Vec<Sample>, ReferenceCurve, Point3) {
    let g = spec.groove.as_ref();
    let (hl, hw) = (spec.length * 0.5, spec.width * 0.5);
    let seam_y = hw - spec.seam_offset;
    let xs: Vec<f64> = cell_centers(-hl, spec.length, spec.pitch).collect();
    let ys: Vec<f64> = cell_centers(-hw, spec.width, spec.pitch).collect();
    let mut samples = Vec::new();
    for &y in &ys {
        let dy = y - seam_y;
        for &x in &xs {
            samples.push(plate_sample(x, y, dy.abs(), Vector2::new(0.0, dy.signum()), g));
        }
    }
    for side in [-1.0, 1.0] {
        for z in cell_centers(-spec.box_height, spec.box_height, spec.pitch) {
            for &x in &xs {
                samples.push(Sample {
                    point: Point3::new(x, side * hw, z),
                    normal: Vector3::new(0.0, side, 0.0),
                    groove: false,
                });
            }
        }
    }
    let depth = g.map_or(0.0, |g| g.depth);
    let reference = ReferenceCurve::Line {
        start: [-hl, seam_y, -depth],
        end: [hl, seam_y, -depth],
    };
    (samples, reference, Point3::new(0.0, 0.0, 0.5))
}

/// Cylinder along x with a circumferential seam at x = 0; only the band within
/// `visible_half_angle` of +z is sampled.
fn cylinder(spec: &WorkpieceSpec) -> (Vec<Sample>, ReferenceCurve, Point3) {
    let g = spec.groove.as_ref();
    let rc = spec.cylinder_radius;
    let va = spec.visible_half_angle;
    let thetas: Vec<f64> = cell_centers(-va, 2.0 * va, spec.pitch / rc).collect();
    let mut samples = Vec::new();
    for x in cell_centers(-spec.length * 0.5, spec.length, spec.pitch) {
        let (depth, slope, inside) = match g {
            Some(g) => {
                let (d, ds) = g.depth_at(x.abs());
                (d, ds, g.contains(x.abs()))
            }
            None => (0.0, 0.0, false),
        };
        let rho = rc - depth;
        // d rho / dx
        let drho = -slope * x.signum();
        for &t in &thetas {
            samples.push(Sample {
                point: Point3::new(x, rho * t.sin(), rho * t.cos()),
                normal: Vector3::new(-drho, t.sin(), t.cos()),
                groove: inside,
            });
        }
    }
    let depth = g.map_or(0.0, |g| g.depth);
    let reference = ReferenceCurve::Arc {
        center: [0.0, 0.0, 0.0],
        radius: rc - depth,
        axis: [-1.0, 0.0, 0.0],
        start_dir: [0.0, (-va).sin(), (-va).cos()],
        sweep: 2.0 * va,
    };
    (samples, reference, Point3::new(0.0, 0.0, rc + 0.5))
}
