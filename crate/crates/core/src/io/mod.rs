//! ASCII PCD / PLY readers and writers, plus the plain index-list format.

mod pcd;
mod ply;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Unit, Vector3};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3};

pub use pcd::{parse_pcd, write_pcd};
pub use ply::{parse_ply, write_ply};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PcdAscii,
    PlyAscii,
}

impl CloudFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pcd" => Some(Self::PcdAscii),
            "ply" => Some(Self::PlyAscii),
            _ => None,
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcd" | "pcd-ascii" => Ok(Self::PcdAscii),
            "ply" | "ply-ascii" => Ok(Self::PlyAscii),
            other => Err(Error::InvalidParameter(format!("unknown cloud format `{other}`"))),
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CloudFormat::PcdAscii => parse_pcd(&text),
        CloudFormat::PlyAscii => parse_ply(&text),
    }
}

/// Loads a cloud, inferring the format from the extension (PCD when unknown).
pub fn load_cloud_auto(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    load_cloud(path, CloudFormat::from_path(path).unwrap_or(CloudFormat::PcdAscii))
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        CloudFormat::PcdAscii => write_pcd(cloud),
        CloudFormat::PlyAscii => write_ply(cloud),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a list of point indices, one per line. Blank lines and `#` comments are skipped.
pub fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line
            .parse::<usize>()
            .map_err(|e| Error::parse(n + 1, format!("bad index `{line}`: {e}")))?;
        out.push(v);
    }
    Ok(out)
}

pub fn format_index_list(indices: &[usize]) -> String {
    let mut s = String::with_capacity(indices.len() * 7);
    for i in indices {
        let _ = writeln!(s, "{i}");
    }
    s
}

pub fn read_index_list(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_index_list(&text)
}

pub fn write_index_list(path: impl AsRef<Path>, indices: &[usize]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_index_list(indices)).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("`{token}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value `{token}`")));
    }
    Ok(v)
}

pub(crate) fn file_normal(v: [f64; 3], line: usize) -> Result<UnitVector3> {
    // Exact unit vectors are kept bit-for-bit; anything else (e.g. single-precision exports)
    // is renormalized.
    let v = Vector3::new(v[0], v[1], v[2]);
    if (v.norm_squared() - 1.0).abs() <= 1e-12 {
        return Ok(Unit::new_unchecked(v));
    }
    Unit::try_new(v, 1e-12).ok_or_else(|| Error::parse(line, "zero-length normal"))
}

pub(crate) fn assemble(points: Vec<Point3>, normals: Option<Vec<UnitVector3>>, viewpoint: Point3) -> Result<PointCloud> {
    let cloud = PointCloud::with_viewpoint(points, viewpoint)?;
    match normals {
        Some(n) => cloud.set_normals(n),
        None => Ok(cloud),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_list_round_trip() {
        let idx = vec![0, 5, 17, 123456];
        assert_eq!(parse_index_list(&format_index_list(&idx)).unwrap(), idx);
    }

    #[test]
    fn index_list_bad_line() {
        let err = parse_index_list("1\n2\nx\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(CloudFormat::from_path(Path::new("a/b.PCD")), Some(CloudFormat::PcdAscii));
        assert_eq!(CloudFormat::from_path(Path::new("b.ply")), Some(CloudFormat::PlyAscii));
        assert_eq!(CloudFormat::from_path(Path::new("b.xyz")), None);
    }
}
