use std::fmt::Write as _;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Point3;

use super::{assemble, file_normal, parse_f64};

const NORMAL_FIELDS: [&str; 3] = ["normal_x", "normal_y", "normal_z"];

/// Parses an ASCII PCD v0.7 document.
pub fn parse_pcd(text: &str) -> Result<PointCloud> {
    let mut fields: Vec<(String, usize)> = Vec::new();
    let mut declared_points: Option<usize> = None;
    let mut viewpoint = Point3::origin();
    let mut data_line = None;

    let mut lines = text.lines().enumerate();
    for (n, raw) in lines.by_ref() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = tokens.collect();
        match key.as_str() {
            "VERSION" | "SIZE" | "TYPE" | "WIDTH" | "HEIGHT" => {}
            "FIELDS" => fields = rest.iter().map(|f| (f.to_string(), 1)).collect(),
            "COUNT" => {
                if rest.len() != fields.len() {
                    return Err(Error::parse(line_no, "COUNT does not match FIELDS"));
                }
                for (f, c) in fields.iter_mut().zip(&rest) {
                    f.1 = c
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad COUNT `{c}`")))?;
                }
            }
            "VIEWPOINT" => {
                if rest.len() < 3 {
                    return Err(Error::parse(line_no, "VIEWPOINT needs 7 values"));
                }
                viewpoint = Point3::new(
                    parse_f64(rest[0], line_no)?,
                    parse_f64(rest[1], line_no)?,
                    parse_f64(rest[2], line_no)?,
                );
            }
            "POINTS" => {
                let v = rest.first().ok_or_else(|| Error::parse(line_no, "missing POINTS value"))?;
                declared_points = Some(
                    v.parse()
                        .map_err(|_| Error::parse(line_no, format!("bad POINTS `{v}`")))?,
                );
            }
            "DATA" => {
                match rest.first().copied() {
                    Some("ascii") => {}
                    Some(other) => return Err(Error::parse(line_no, format!("unsupported DATA mode `{other}`"))),
                    None => return Err(Error::parse(line_no, "missing DATA mode")),
                }
                data_line = Some(line_no);
                break;
            }
            other => return Err(Error::parse(line_no, format!("unknown header key `{other}`"))),
        }
    }
    let data_line = data_line.ok_or_else(|| Error::parse(text.lines().count(), "missing DATA line"))?;

    // Column offsets of the fields we use.
    let column = |name: &str| -> Option<usize> {
        let mut off = 0;
        for (f, c) in &fields {
            if f == name {
                return Some(off);
            }
            off += c;
        }
        None
    };
    let xyz: Vec<usize> = ["x", "y", "z"]
        .iter()
        .map(|f| column(f).ok_or_else(|| Error::parse(data_line, format!("FIELDS lacks `{f}`"))))
        .collect::<Result<_>>()?;
    let normal_cols: Option<Vec<usize>> = NORMAL_FIELDS.iter().map(|f| column(f)).collect();
    let width: usize = fields.iter().map(|(_, c)| c).sum();

    let mut points = Vec::with_capacity(declared_points.unwrap_or(0));
    let mut normals = normal_cols.as_ref().map(|_| Vec::with_capacity(points.capacity()));
    for (n, raw) in lines {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != width {
            return Err(Error::parse(
                line_no,
                format!("expected {width} values, found {}", tokens.len()),
            ));
        }
        points.push(Point3::new(
            parse_f64(tokens[xyz[0]], line_no)?,
            parse_f64(tokens[xyz[1]], line_no)?,
            parse_f64(tokens[xyz[2]], line_no)?,
        ));
        if let (Some(cols), Some(ns)) = (&normal_cols, normals.as_mut()) {
            let v = [
                parse_f64(tokens[cols[0]], line_no)?,
                parse_f64(tokens[cols[1]], line_no)?,
                parse_f64(tokens[cols[2]], line_no)?,
            ];
            ns.push(file_normal(v, line_no)?);
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if let Some(d) = declared_points {
        if d != points.len() {
            return Err(Error::parse(
                data_line,
                format!("POINTS declares {d} points but DATA holds {}", points.len()),
            ));
        }
    }
    assemble(points, normals, viewpoint)
}

/// Writes an ASCII PCD v0.7 document with double-precision fields.
///
/// Values use the shortest representation that parses back to the same `f64`.
pub fn write_pcd(cloud: &PointCloud) -> String {
    let n = cloud.len();
    let with_normals = cloud.has_normals();
    let k = if with_normals { 6 } else { 3 };
    let mut s = String::with_capacity(n * k * 22 + 256);
    let vp = cloud.viewpoint();
    s.push_str("# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\n");
    if with_normals {
        s.push_str("FIELDS x y z normal_x normal_y normal_z\n");
    } else {
        s.push_str("FIELDS x y z\n");
    }
    let _ = writeln!(s, "SIZE{}", " 8".repeat(k));
    let _ = writeln!(s, "TYPE{}", " F".repeat(k));
    let _ = writeln!(s, "COUNT{}", " 1".repeat(k));
    let _ = writeln!(s, "WIDTH {n}\nHEIGHT 1");
    let _ = writeln!(s, "VIEWPOINT {} {} {} 1 0 0 0", vp.x, vp.y, vp.z);
    let _ = writeln!(s, "POINTS {n}\nDATA ascii");
    for (i, p) in cloud.points().iter().enumerate() {
        let _ = write!(s, "{} {} {}", p.x, p.y, p.z);
        if let Some(ns) = cloud.normals() {
            let u = &ns[i];
            let _ = write!(s, " {} {} {}", u.x, u.y, u.z);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = "# .PCD v0.7\nVERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n\
WIDTH 3\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 3\nDATA ascii\n0 0 0\n1 0 0\n0 1 0.5\n";

    #[test]
    fn three_points_without_normals() {
        let c = parse_pcd(THREE).unwrap();
        assert_eq!(c.len(), 3);
        assert!(!c.has_normals());
        assert_eq!(c.point(2), &Point3::new(0.0, 1.0, 0.5));
        assert_eq!(c.viewpoint(), &Point3::origin());
    }

    #[test]
    fn normals_and_viewpoint() {
        let text = "VERSION 0.7\nFIELDS x y z normal_x normal_y normal_z\nSIZE 4 4 4 4 4 4\nTYPE F F F F F F\n\
COUNT 1 1 1 1 1 1\nWIDTH 2\nHEIGHT 1\nVIEWPOINT 1 2 3 1 0 0 0\nPOINTS 2\nDATA ascii\n0 0 0 0 0 1\n1 0 0 0 0 2\n";
        let c = parse_pcd(text).unwrap();
        assert!(c.has_normals());
        assert_eq!(c.normals().unwrap()[1].z, 1.0);
        assert_eq!(c.viewpoint(), &Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn extra_fields_are_skipped() {
        let text = "FIELDS x rgb y z\nCOUNT 1 1 1 1\nPOINTS 1\nDATA ascii\n1 999 2 3\n";
        let c = parse_pcd(text).unwrap();
        assert_eq!(c.point(0), &Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn empty_data_is_error() {
        let text = "VERSION 0.7\nFIELDS x y z\nPOINTS 0\nDATA ascii\n";
        let err = parse_pcd(text).unwrap_err();
        assert!(matches!(err, Error::EmptyCloud));
        assert_eq!(err.to_string(), "zero points");
    }

    #[test]
    fn malformed_record_reports_line() {
        let text = "FIELDS x y z\nDATA ascii\n0 0 0\n1 oops 0\n";
        match parse_pcd(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn binary_is_rejected() {
        assert!(parse_pcd("FIELDS x y z\nDATA binary\n").is_err());
    }

    #[test]
    fn writes_six_fields_with_normals() {
        let c = parse_pcd("FIELDS x y z normal_x normal_y normal_z\nDATA ascii\n0.1 0.2 0.3 0 1 0\n").unwrap();
        let text = write_pcd(&c);
        let last = text.lines().last().unwrap();
        assert_eq!(last.split_whitespace().count(), 6);
        assert_eq!(parse_pcd(&text).unwrap(), c);
    }
}
