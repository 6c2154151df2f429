use std::f64::consts::PI;

use crate::geometry::Point;

/// Left-right symmetric 68-point face in unit coordinates: origin between
/// the eyes and the mouth, y pointing down, face width about 1.
pub fn face_template68() -> Vec<Point> {
    let mut pts = Vec::with_capacity(68);
    // jaw 0..17, from the subject's right ear around the chin
    for k in 0..17 {
        let t = PI - k as f64 * PI / 16.0;
        pts.push(Point::new(0.5 * t.cos(), -0.12 + 0.58 * t.sin()));
    }
    // brows 17..27
    for k in 0..5 {
        let u = k as f64 / 4.0;
        pts.push(Point::new(-0.40 + 0.30 * u, -0.33 - 0.06 * (PI * u).sin()));
    }
    for k in 0..5 {
        let u = k as f64 / 4.0;
        pts.push(Point::new(0.10 + 0.30 * u, -0.33 - 0.06 * (PI * (1.0 - u)).sin()));
    }
    // nose bridge 27..31, nose base 31..36
    for k in 0..4 {
        pts.push(Point::new(0.0, -0.20 + 0.09 * k as f64));
    }
    for (x, y) in [(-0.10, 0.12), (-0.05, 0.14), (0.0, 0.155), (0.05, 0.14), (0.10, 0.12)] {
        pts.push(Point::new(x, y));
    }
    // eyes 36..48, each walked clockwise from its left corner
    let eye = |cx: f64, pts: &mut Vec<Point>| {
        let ring = [
            (-1.0, 0.0),
            (-0.45, -0.85),
            (0.45, -0.85),
            (1.0, 0.0),
            (0.45, 0.8),
            (-0.45, 0.8),
        ];
        for (u, v) in ring {
            pts.push(Point::new(cx + 0.09 * u, -0.17 + 0.045 * v));
        }
    };
    eye(-0.21, &mut pts);
    eye(0.21, &mut pts);
    // outer mouth 48..60: left corner, upper lip left→right, right corner, lower lip right→left
    let mouth = |rx: f64, ry_up: f64, ry_low: f64, n_up: usize, n_low: usize, pts: &mut Vec<Point>| {
        let cy = 0.32;
        pts.push(Point::new(-rx, cy));
        for k in 1..=n_up {
            let t = PI - k as f64 * PI / (n_up + 1) as f64;
            pts.push(Point::new(rx * t.cos(), cy - ry_up * t.sin()));
        }
        pts.push(Point::new(rx, cy));
        for k in 1..=n_low {
            let t = k as f64 * PI / (n_low + 1) as f64;
            pts.push(Point::new(rx * t.cos(), cy + ry_low * t.sin()));
        }
    };
    mouth(0.20, 0.07, 0.10, 5, 5, &mut pts);
    mouth(0.13, 0.03, 0.03, 3, 3, &mut pts);
    pts
}

/// Low-rank expression displacements in template units, one vector of 68
/// offsets per mode: mouth opening, smile, brow raise, eye closing.
pub fn expression_modes68() -> Vec<Vec<Point>> {
    let zero = vec![Point::default(); 68];
    let mut open = zero.clone();
    for i in 55..60 {
        open[i].y = 0.08;
    }
    for i in 65..68 {
        open[i].y = 0.07;
    }
    for i in 5..12 {
        open[i].y = 0.05;
    }
    open[8].y = 0.07;
    let mut smile = zero.clone();
    for (i, s) in [(48, -1.0), (54, 1.0), (60, -1.0), (64, 1.0)] {
        smile[i] = Point::new(0.03 * s, -0.04);
    }
    for (i, s) in [(49, -1.0), (53, 1.0), (59, -1.0), (55, 1.0)] {
        smile[i] = Point::new(0.015 * s, -0.02);
    }
    let mut brows = zero.clone();
    for i in 17..27 {
        brows[i].y = -0.05;
    }
    let mut blink = zero;
    for i in [37, 38, 43, 44] {
        blink[i].y = 0.03;
    }
    for i in [40, 41, 46, 47] {
        blink[i].y = -0.02;
    }
    vec![open, smile, brows, blink]
}
