//! Axis-aligned rectangles, convex polygon clipping and exact low-degree
//! quadrature on polygons.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let ok = [x0, y0, x1, y1].iter().all(|v| v.is_finite()) && x1 > x0 && y1 > y0;
        if !ok {
            return Err(Error::DegenerateGrid(format!(
                "rectangle ({x0}, {y0}, {x1}, {y1}) is empty or not finite"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn unit() -> Self {
        Self { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 }
    }

    pub fn square(half: f64) -> Self {
        Self { x0: -half, y0: -half, x1: half, y1: half }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    pub fn contains_rect(&self, other: &Rect, tol: f64) -> bool {
        other.x0 >= self.x0 - tol
            && other.x1 <= self.x1 + tol
            && other.y0 >= self.y0 - tol
            && other.y1 <= self.y1 + tol
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(other.x0),
            y0: self.y0.max(other.y0),
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
        };
        (r.x1 > r.x0 && r.y1 > r.y0).then_some(r)
    }

    pub fn corners(&self) -> Vec<[f64; 2]> {
        vec![[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]]
    }
}

fn clip_half(poly: &[[f64; 2]], inside: impl Fn(&[f64; 2]) -> f64) -> Vec<[f64; 2]> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let (da, db) = (inside(&a), inside(&b));
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let t = da / (da - db);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Intersection of a convex polygon with a rectangle.
pub fn clip_to_rect(poly: &[[f64; 2]], r: &Rect) -> Vec<[f64; 2]> {
    let mut p = poly.to_vec();
    p = clip_half(&p, |q| q[0] - r.x0);
    p = clip_half(&p, |q| r.x1 - q[0]);
    p = clip_half(&p, |q| q[1] - r.y0);
    p = clip_half(&p, |q| r.y1 - q[1]);
    p
}

/// Signed shoelace area (positive for counter-clockwise order).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

/// `∫ f` over a convex polygon, exact for polynomials of degree two
/// (fan triangulation with the edge-midpoint rule).
pub fn integrate_quadratic(poly: &[[f64; 2]], f: impl Fn([f64; 2]) -> f64) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let o = poly[0];
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let mut s = 0.0;
    for k in 1..poly.len() - 1 {
        let (a, b) = (poly[k], poly[k + 1]);
        let area = polygon_area(&[o, a, b]).abs();
        s += area / 3.0 * (f(mid(o, a)) + f(mid(a, b)) + f(mid(b, o)));
    }
    s
}

/// Diamond `|x - c|_1 <= r` in counter-clockwise order.
pub fn diamond(c: [f64; 2], r: f64) -> [[f64; 2]; 4] {
    [[c[0] + r, c[1]], [c[0], c[1] + r], [c[0] - r, c[1]], [c[0], c[1] - r]]
}
