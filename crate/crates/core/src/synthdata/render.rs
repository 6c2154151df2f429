//! Rasterizes a synthetic face around its landmarks: a skin-toned face
//! region on a cluttered background, dark brow/eye/nostril/lip features and
//! soft shading anchored to landmarks, so every patch carries local
//! position cues.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{GrayImage, Point};

struct Canvas {
    side: usize,
    data: Vec<f64>,
}

impl Canvas {
    fn bounds(&self, lo: Point, hi: Point, pad: f64) -> (usize, usize, usize, usize) {
        let clamp = |v: f64| v.clamp(0.0, self.side as f64 - 1.0) as usize;
        (
            clamp((lo.x - pad).floor()),
            clamp((lo.y - pad).floor()),
            clamp((hi.x + pad).ceil()),
            clamp((hi.y + pad).ceil()),
        )
    }

    fn blend(&mut self, x: usize, y: usize, value: f64, alpha: f64) {
        if alpha > 0.0 {
            let v = &mut self.data[y * self.side + x];
            *v += (value - *v) * alpha.min(1.0);
        }
    }

    /// Anti-aliased polyline of the given width.
    fn stroke(&mut self, pts: &[Point], closed: bool, width: f64, value: f64) {
        let (lo, hi) = extent(pts);
        let (x0, y0, x1, y1) = self.bounds(lo, hi, width + 1.0);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = Point::new(x as f64, y as f64);
                let d = polyline_distance(pts, closed, p);
                self.blend(x, y, value, 0.5 * width + 0.5 - d);
            }
        }
    }

    /// Anti-aliased filled polygon, optionally with a linear shading term.
    fn fill(&mut self, pts: &[Point], value: f64, shade: (f64, f64, Point)) {
        let (lo, hi) = extent(pts);
        let (x0, y0, x1, y1) = self.bounds(lo, hi, 1.0);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = Point::new(x as f64, y as f64);
                let d = polyline_distance(pts, true, p);
                let alpha = if contains(pts, p) { 0.5 + d } else { 0.5 - d };
                let v = value + shade.0 * (p.x - shade.2.x) + shade.1 * (p.y - shade.2.y);
                self.blend(x, y, v, alpha.clamp(0.0, 1.0));
            }
        }
    }

    fn disc(&mut self, c: Point, r: f64, value: f64) {
        let (x0, y0, x1, y1) = self.bounds(c, c, r + 1.0);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = Point::new(x as f64, y as f64).dist(c);
                self.blend(x, y, value, r + 0.5 - d);
            }
        }
    }

    /// Gaussian-weighted shift towards `value`.
    fn glow(&mut self, c: Point, sigma: f64, value: f64, strength: f64) {
        let (x0, y0, x1, y1) = self.bounds(c, c, 3.0 * sigma);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d2 = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                self.blend(x, y, value, strength * (-d2 / (2.0 * sigma * sigma)).exp());
            }
        }
    }
}

fn extent(pts: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::MAX, f64::MAX);
    let mut hi = Point::new(f64::MIN, f64::MIN);
    for p in pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

fn segment_distance(a: Point, b: Point, p: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

fn polyline_distance(pts: &[Point], closed: bool, p: Point) -> f64 {
    let mut d = f64::MAX;
    for w in pts.windows(2) {
        d = d.min(segment_distance(w[0], w[1], p));
    }
    if closed && pts.len() > 2 {
        d = d.min(segment_distance(pts[pts.len() - 1], pts[0], p));
    }
    if pts.len() == 1 {
        d = p.dist(pts[0]);
    }
    d
}

fn contains(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn centroid(pts: &[Point]) -> Point {
    let n = pts.len() as f64;
    Point::new(
        pts.iter().map(|p| p.x).sum::<f64>() / n,
        pts.iter().map(|p| p.y).sum::<f64>() / n,
    )
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
}

/// Renders a `side × side` image of a 68-point face. `noise` is the
/// standard deviation of additive pixel noise in gray levels.
pub fn render_face<R: Rng + ?Sized>(pts: &[Point], side: usize, noise: f64, rng: &mut R) -> GrayImage {
    let face_size = pts[0].dist(pts[16]).max(1.0);
    let mut canvas = Canvas {
        side,
        data: vec![0.0; side * side],
    };

    // background: gradient plus a few blobs of clutter
    let base = rng.random_range(40.0..100.0);
    let (gx, gy) = (rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15));
    for y in 0..side {
        for x in 0..side {
            canvas.data[y * side + x] = base + gx * x as f64 + gy * y as f64;
        }
    }
    for _ in 0..6 {
        let c = Point::new(rng.random_range(0.0..side as f64), rng.random_range(0.0..side as f64));
        let r = rng.random_range(0.05..0.2) * side as f64;
        let v = rng.random_range(20.0..130.0);
        canvas.disc(c, r, v);
    }

    // face region: jaw plus a forehead arc above the brows
    let chin = pts[8];
    let brow_mid = centroid(&pts[17..27]);
    let top = lerp(chin, brow_mid, 1.35);
    let (left, right) = (pts[0], pts[16]);
    let mut outline: Vec<Point> = pts[0..17].to_vec();
    for k in 1..12 {
        // quadratic Bézier from the right jaw end over the forehead
        let t = k as f64 / 12.0;
        let ctrl = Point::new(2.0 * top.x - 0.5 * (left.x + right.x), 2.0 * top.y - 0.5 * (left.y + right.y));
        let a = lerp(right, ctrl, t);
        let b = lerp(ctrl, left, t);
        outline.push(lerp(a, b, t));
    }
    let skin = rng.random_range(140.0..200.0);
    let shade = rng.random_range(-0.25..0.25);
    let center = centroid(&pts[0..17]);
    canvas.fill(&outline, skin, (shade, 0.0, center));
    canvas.stroke(&pts[0..17], false, 0.015 * face_size, skin - 60.0);

    let ink = rng.random_range(15.0..50.0);
    // eye sockets and cheek highlights
    for eye in [&pts[36..42], &pts[42..48]] {
        canvas.glow(centroid(eye), 0.09 * face_size, skin - 45.0, 0.6);
    }
    canvas.glow(lerp(pts[2], pts[31], 0.5), 0.08 * face_size, skin + 30.0, 0.5);
    canvas.glow(lerp(pts[14], pts[35], 0.5), 0.08 * face_size, skin + 30.0, 0.5);
    canvas.glow(pts[30], 0.05 * face_size, skin + 35.0, 0.6);

    // brows
    for brow in [&pts[17..22], &pts[22..27]] {
        canvas.stroke(brow, false, 0.045 * face_size, ink + 20.0);
    }
    // eyes: sclera, iris, lid outline
    for eye in [&pts[36..42], &pts[42..48]] {
        canvas.fill(eye, 235.0, (0.0, 0.0, center));
        let c = centroid(eye);
        let opening = eye[1].dist(eye[5]).min(eye[2].dist(eye[4]));
        canvas.disc(c, (0.4 * opening).max(0.5), ink);
        canvas.stroke(eye, true, 0.018 * face_size, ink + 10.0);
    }
    // nose: bridge line, base curve, nostrils
    canvas.stroke(&pts[27..31], false, 0.02 * face_size, skin - 40.0);
    canvas.stroke(&pts[31..36], false, 0.02 * face_size, skin - 55.0);
    canvas.disc(lerp(pts[32], pts[30], 0.3), 0.018 * face_size, ink + 25.0);
    canvas.disc(lerp(pts[34], pts[30], 0.3), 0.018 * face_size, ink + 25.0);
    // mouth: lips, then the opening
    let lip = skin - rng.random_range(50.0..80.0);
    canvas.fill(&pts[48..60], lip, (0.0, 0.0, center));
    canvas.fill(&pts[60..68], ink, (0.0, 0.0, center));
    canvas.stroke(&pts[60..68], true, 0.012 * face_size, ink);

    let normal = Normal::new(0.0, noise.max(0.0)).expect("finite sigma");
    let data = canvas
        .data
        .iter()
        .map(|&v| {
            let n = if noise > 0.0 { normal.sample(rng) } else { 0.0 };
            (v + n).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage {
        width: side,
        height: side,
        data,
    }
}
