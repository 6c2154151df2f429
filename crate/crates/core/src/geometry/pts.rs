//! `.pts` landmark files:
//!
//! ```text
//! version: 1
//! n_points: 3
//! {
//! 10.5 20
//! 30 40.25
//! 50 60
//! }
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::shape::{Point, Shape};
use crate::error::{Error, Result};

/// Parses `.pts` text. `origin` only labels error messages.
pub fn parse_pts(text: &str, origin: &Path) -> Result<Vec<Point>> {
    let err = |line: usize, msg: String| Error::Parse {
        file: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut expect = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")))
    };
    let (ln, version) = expect("version")?;
    match version.split_once(':') {
        Some((k, v)) if k.trim() == "version" && v.trim() == "1" => {}
        _ => return Err(err(ln, format!("expected `version: 1`, found `{version}`"))),
    }
    let (ln, count_line) = expect("n_points")?;
    let count: usize = match count_line.split_once(':') {
        Some((k, v)) if k.trim() == "n_points" => v
            .trim()
            .parse()
            .map_err(|_| err(ln, format!("bad point count `{}`", v.trim())))?,
        _ => return Err(err(ln, format!("expected `n_points: <N>`, found `{count_line}`"))),
    };
    let (ln, open) = expect("{")?;
    if open != "{" {
        return Err(err(ln, format!("expected `{{`, found `{open}`")));
    }
    let mut points = Vec::with_capacity(count);
    loop {
        let (ln, line) = expect("}")?;
        if line == "}" {
            if points.len() != count {
                return Err(err(
                    ln,
                    format!("header declares {count} points but {} were listed", points.len()),
                ));
            }
            break;
        }
        let mut fields = line.split_whitespace();
        let mut coord = |name: &str| -> Result<f64> {
            let raw = fields
                .next()
                .ok_or_else(|| err(ln, format!("missing {name} coordinate")))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| err(ln, format!("bad {name} coordinate `{raw}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(ln, format!("non-finite {name} coordinate")))
            }
        };
        let x = coord("x")?;
        let y = coord("y")?;
        if fields.next().is_some() {
            return Err(err(ln, "more than two values on a point line".into()));
        }
        points.push(Point::new(x, y));
    }
    if let Some((ln, extra)) = lines.next() {
        return Err(err(ln, format!("trailing content `{extra}`")));
    }
    Ok(points)
}

pub fn read_pts(path: &Path) -> Result<Vec<Point>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pts(&text, path)
}

/// Writes coordinates with shortest round-trip formatting, so reading the
/// file back yields bit-identical values.
pub fn write_pts(path: &Path, shape: &Shape) -> Result<()> {
    let mut out = format!("version: 1\nn_points: {}\n{{\n", shape.len());
    for p in &shape.points {
        let _ = writeln!(out, "{} {}", p.x, p.y);
    }
    out.push_str("}\n");
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_written_three_points() {
        let text = "version: 1\nn_points: 3\n{\n10.5 20\n30 40.25\n-1e-3 60\n}\n";
        let pts = parse_pts(text, Path::new("a.pts")).unwrap();
        assert_eq!(
            pts,
            vec![
                Point::new(10.5, 20.0),
                Point::new(30.0, 40.25),
                Point::new(-0.001, 60.0)
            ]
        );
    }

    #[test]
    fn short_point_list_names_file_and_line() {
        let mut text = String::from("version: 1\nn_points: 68\n{\n");
        for i in 0..67 {
            text.push_str(&format!("{i} {i}\n"));
        }
        text.push_str("}\n");
        match parse_pts(&text, Path::new("face.pts")) {
            Err(Error::Parse { file, line, .. }) => {
                assert_eq!(file, Path::new("face.pts"));
                assert_eq!(line, 71);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_are_rejected() {
        for text in [
            "version: 2\nn_points: 1\n{\n1 2\n}\n",
            "version: 1\nn_points: x\n{\n1 2\n}\n",
            "version: 1\nn_points: 1\n1 2\n}\n",
            "version: 1\nn_points: 1\n{\n1\n}\n",
            "version: 1\nn_points: 1\n{\n1 2 3\n}\n",
            "version: 1\nn_points: 1\n{\n1 2\n",
        ] {
            assert!(matches!(
                parse_pts(text, Path::new("x.pts")),
                Err(Error::Parse { .. })
            ));
        }
    }

    #[test]
    fn write_then_read_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.pts");
        let shape = Shape::new(
            vec![
                Point::new(0.1 + 0.2, 1.0 / 3.0),
                Point::new(-123.456789012345, 1e-17),
            ],
            0,
        )
        .unwrap();
        write_pts(&path, &shape).unwrap();
        assert_eq!(read_pts(&path).unwrap(), shape.points);
    }
}
