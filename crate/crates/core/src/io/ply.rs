use std::fmt::Write as _;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Point3;

use super::{assemble, file_normal, parse_f64};

struct Element {
    name: String,
    count: usize,
    properties: Vec<String>,
}

/// Parses an ASCII PLY document, reading the `vertex` element only.
///
/// A `comment viewpoint x y z` header line sets the cloud viewpoint.
pub fn parse_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(1, "missing `ply` magic")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut viewpoint = Point3::origin();
    let mut header_end = None;
    for (n, raw) in lines.by_ref() {
        let line_no = n + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(Error::parse(line_no, format!("unsupported format `{other}`"))),
            ["comment", "viewpoint", x, y, z] => {
                viewpoint = Point3::new(parse_f64(x, line_no)?, parse_f64(y, line_no)?, parse_f64(z, line_no)?);
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad element count `{count}`")))?,
                properties: Vec::new(),
            }),
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "property before element"))?;
                if el.name == "vertex" {
                    return Err(Error::parse(line_no, "list properties on vertices are unsupported"));
                }
                el.properties.push(String::from("list"));
            }
            ["property", _ty, name] => elements
                .last_mut()
                .ok_or_else(|| Error::parse(line_no, "property before element"))?
                .properties
                .push(name.to_string()),
            ["end_header"] => {
                header_end = Some(line_no);
                break;
            }
            _ => return Err(Error::parse(line_no, format!("unrecognized header line `{}`", raw.trim()))),
        }
    }
    let header_end = header_end.ok_or_else(|| Error::parse(text.lines().count(), "missing end_header"))?;

    // Vertex rows follow any elements declared before it.
    let mut skip = 0usize;
    let mut vertex = None;
    for el in &elements {
        if el.name == "vertex" {
            vertex = Some(el);
            break;
        }
        skip += el.count;
    }
    let vertex = vertex.ok_or_else(|| Error::parse(header_end, "no vertex element"))?;
    let col = |name: &str| vertex.properties.iter().position(|p| p == name);
    let xyz: Vec<usize> = ["x", "y", "z"]
        .iter()
        .map(|f| col(f).ok_or_else(|| Error::parse(header_end, format!("vertex lacks `{f}`"))))
        .collect::<Result<_>>()?;
    let normal_cols: Option<Vec<usize>> = ["nx", "ny", "nz"].iter().map(|f| col(f)).collect();

    let mut points = Vec::with_capacity(vertex.count);
    let mut normals = normal_cols.as_ref().map(|_| Vec::with_capacity(vertex.count));
    let mut rows = lines.filter(|(_, l)| !l.trim().is_empty()).skip(skip);
    for _ in 0..vertex.count {
        let (n, raw) = rows
            .next()
            .ok_or_else(|| Error::parse(text.lines().count(), "fewer vertex rows than declared"))?;
        let line_no = n + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.len() != vertex.properties.len() {
            return Err(Error::parse(
                line_no,
                format!("expected {} values, found {}", vertex.properties.len(), tokens.len()),
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
    assemble(points, normals, viewpoint)
}

pub fn write_ply(cloud: &PointCloud) -> String {
    let n = cloud.len();
    let mut s = String::with_capacity(n * 6 * 22 + 256);
    let vp = cloud.viewpoint();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "comment viewpoint {} {} {}", vp.x, vp.y, vp.z);
    let _ = writeln!(s, "element vertex {n}");
    for f in ["x", "y", "z"] {
        let _ = writeln!(s, "property double {f}");
    }
    if cloud.has_normals() {
        for f in ["nx", "ny", "nz"] {
            let _ = writeln!(s, "property double {f}");
        }
    }
    s.push_str("end_header\n");
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

    #[test]
    fn vertices_with_normals_and_faces() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\n\
property float z\nproperty float nx\nproperty float ny\nproperty float nz\nelement face 1\n\
property list uchar int vertex_indices\nend_header\n0 0 0 0 0 1\n1 0 0 0 0 1\n0 1 0 0 0 1\n3 0 1 2\n";
        let c = parse_ply(text).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.has_normals());
    }

    #[test]
    fn zero_vertices() {
        let text = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(matches!(parse_ply(text), Err(Error::EmptyCloud)));
    }

    #[test]
    fn binary_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert!(parse_ply(text).is_err());
    }

    #[test]
    fn bad_row_line_number() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 2\n";
        assert!(matches!(parse_ply(text), Err(Error::Parse { line: 9, .. })));
    }
}
