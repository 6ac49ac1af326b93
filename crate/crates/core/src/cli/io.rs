//! Point-file readers. Every file starts with one header line naming the
//! columns; the column count fixes the dimension.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::vech_side;

/// Layout of a point file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// `x1,...,xd`.
    Vector,
    /// Like `Vector`, rows within 1e-8 of unit norm are renormalized.
    Sphere,
    /// Upper triangle of a `p×p` matrix, row-major.
    Spd,
    /// `leaf,x0,x1,...,xD`.
    OpenBook,
}

/// Renormalization slack for sphere rows written with limited precision.
pub const SPHERE_SLACK: f64 = 1e-8;

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers(line: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            let x: f64 = f
                .parse()
                .map_err(|_| parse_error(line, format!("bad number `{f}`")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(parse_error(line, format!("non-finite value `{f}`")))
            }
        })
        .collect()
}

/// Parses a point file. Blank lines are skipped; line numbers in errors are
/// 1-based and count the header.
pub fn read_points(text: &str, format: Format) -> Result<Vec<Point>> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = rows.next().ok_or_else(|| parse_error(1, "empty input"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.iter().all(|c| c.parse::<f64>().is_ok()) {
        return Err(parse_error(hline, "missing header line"));
    }
    let width = columns.len();
    let min_width = match format {
        Format::Vector => 1,
        Format::Sphere => 2,
        Format::Spd => 1,
        Format::OpenBook => 2,
    };
    if width < min_width {
        return Err(parse_error(hline, format!("header needs at least {min_width} columns")));
    }
    let side = match format {
        Format::Spd => Some(vech_side(width).ok_or_else(|| {
            parse_error(hline, format!("{width} columns is not p(p+1)/2 for any p"))
        })?),
        _ => None,
    };

    let mut points = Vec::new();
    for (line, raw) in rows {
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(parse_error(
                line,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let point = match format {
            Format::Vector => Point::euclidean(DVector::from_vec(numbers(line, &fields)?)),
            Format::Sphere => {
                let v = DVector::from_vec(numbers(line, &fields)?);
                let norm = v.norm();
                if (norm - 1.0).abs() > SPHERE_SLACK {
                    return Err(parse_error(line, format!("norm {norm} is not 1")));
                }
                Ok(Point::Sphere(v / norm))
            }
            Format::Spd => {
                let p = side.expect("set for SPD");
                let vals = numbers(line, &fields)?;
                let mut a = DMatrix::zeros(p, p);
                let mut k = 0;
                for i in 0..p {
                    for j in i..p {
                        a[(i, j)] = vals[k];
                        a[(j, i)] = vals[k];
                        k += 1;
                    }
                }
                Point::spd(a)
            }
            Format::OpenBook => {
                let leaf: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_error(line, format!("bad leaf index `{}`", fields[0])))?;
                Point::open_book(leaf, DVector::from_vec(numbers(line, &fields[1..])?))
            }
        };
        points.push(point.map_err(|e| match e {
            Error::Parse { .. } => e,
            other => parse_error(line, other.to_string()),
        })?);
    }
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_each_format() {
        let pts = read_points("x,y\n0,1\n2,3\n", Format::Vector).unwrap();
        assert_eq!(pts.len(), 2);

        let pts = read_points("x,y,z\n0,0,1.000000001\n", Format::Sphere).unwrap();
        assert_eq!(pts[0].as_vector().unwrap().norm(), 1.0);

        let pts = read_points("a11,a12,a13,a22,a23,a33\n2,1,0,2,0,1\n", Format::Spd).unwrap();
        assert_eq!(pts[0].as_matrix().unwrap()[(1, 0)], 1.0);

        let pts = read_points("leaf,x0,x1\n2,0.5,-1\n0,0,3\n", Format::OpenBook).unwrap();
        assert_eq!(pts[0].as_book().unwrap().leaf(), 2);
    }

    #[test]
    fn errors_name_the_row() {
        let e = read_points("x,y\n0,1\n2,oops\n", Format::Vector).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = read_points("x,y\n0,1\n2\n", Format::Vector).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = read_points("0,1\n2,3\n", Format::Vector).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = read_points("x,y,z\n0,0,2\n", Format::Sphere).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = read_points("a,b,c,d\n1,0,0,1\n", Format::Spd).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = read_points("a,b,c\n1,2,1\n", Format::Spd).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = read_points("leaf,x0\n0,1\n", Format::OpenBook).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }
}
