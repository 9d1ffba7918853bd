//! Lower convex hull of a lifted planar point cloud `(x, y, z)`.
//!
//! Built with an incremental 3D hull over exact orientation predicates.
//! A virtual apex above the cloud keeps the hull full-dimensional when
//! every input point is coplanar. Points are inserted in lexicographic
//! order; faces the new point sees or is coplanar with are replaced.

use std::collections::HashMap;

use robust::{orient2d, orient3d, Coord, Coord3D};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Face {
    v: [usize; 3],
    alive: bool,
}

/// Affine plane `z = a x + b y + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Plane {
    fn through(p: [f64; 3], q: [f64; 3], r: [f64; 3]) -> Self {
        let (x1, y1, z1) = (q[0] - p[0], q[1] - p[1], q[2] - p[2]);
        let (x2, y2, z2) = (r[0] - p[0], r[1] - p[1], r[2] - p[2]);
        let det = x1 * y2 - x2 * y1;
        let a = (z1 * y2 - z2 * y1) / det;
        let b = (x1 * z2 - x2 * z1) / det;
        Plane { a, b, c: p[2] - a * p[0] - b * p[1] }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

/// Lower faces of the convex hull; evaluates the convex envelope of the
/// input values anywhere inside the convex hull of the planar nodes.
#[derive(Debug, Clone)]
pub struct LowerHull {
    faces: Vec<[usize; 3]>,
    planes: Vec<Plane>,
}

fn c3(p: &[f64; 3]) -> Coord3D<f64> {
    Coord3D { x: p[0], y: p[1], z: p[2] }
}

fn c2(p: &[f64; 3]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn lex_cmp(a: &[f64; 3], b: &[f64; 3]) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2]))
}

struct Builder<'a> {
    pts: &'a [[f64; 3]],
    faces: Vec<Face>,
    edges: HashMap<(usize, usize), usize>,
}

impl<'a> Builder<'a> {
    fn orient(&self, f: &Face, p: usize) -> f64 {
        let [a, b, c] = f.v;
        orient3d(c3(&self.pts[a]), c3(&self.pts[b]), c3(&self.pts[c]), c3(&self.pts[p]))
    }

    fn add_face(&mut self, v: [usize; 3]) {
        let id = self.faces.len();
        self.faces.push(Face { v, alive: true });
        for k in 0..3 {
            self.edges.insert((v[k], v[(k + 1) % 3]), id);
        }
    }

    fn remove_face(&mut self, id: usize) {
        let v = self.faces[id].v;
        self.faces[id].alive = false;
        for k in 0..3 {
            let key = (v[k], v[(k + 1) % 3]);
            if self.edges.get(&key) == Some(&id) {
                self.edges.remove(&key);
            }
        }
    }

    fn insert(&mut self, p: usize) -> Result<()> {
        let mut strictly = false;
        let mut visible = vec![false; self.faces.len()];
        for (id, f) in self.faces.iter().enumerate() {
            if !f.alive {
                continue;
            }
            let o = self.orient(f, p);
            if o <= 0.0 {
                visible[id] = true;
                strictly |= o < 0.0;
            }
        }
        if !strictly {
            return Ok(());
        }
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for (id, f) in self.faces.iter().enumerate() {
            if !f.alive || !visible[id] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (f.v[k], f.v[(k + 1) % 3]);
                let twin = self
                    .edges
                    .get(&(b, a))
                    .copied()
                    .ok_or_else(|| Error::Internal("hull edge without twin".into()))?;
                if !visible[twin] {
                    horizon.push((a, b));
                }
            }
        }
        let next: HashMap<usize, usize> = horizon.iter().copied().collect();
        if next.len() != horizon.len() || horizon.is_empty() {
            return Err(Error::Internal("hull horizon is not a simple cycle".into()));
        }
        let start = horizon[0].0;
        let mut cur = start;
        let mut steps = 0;
        loop {
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::Internal("hull horizon is open".into()))?;
            steps += 1;
            if cur == start || steps > horizon.len() {
                break;
            }
        }
        if steps != horizon.len() {
            return Err(Error::Internal("hull horizon splits into several cycles".into()));
        }
        for (id, _) in visible.iter().enumerate().filter(|(_, v)| **v) {
            self.remove_face(id);
        }
        for (a, b) in horizon {
            self.add_face([a, b, p]);
        }
        Ok(())
    }
}

impl LowerHull {
    /// Builds the lower hull of `points`. Requires three non-collinear
    /// planar positions.
    pub fn build(points: &[[f64; 3]]) -> Result<Self> {
        if points.len() < 3 || points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSampling("need at least 3 finite points".into()));
        }
        let n = points.len();
        let (mut zmin, mut zmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut cx, mut cy) = (0.0, 0.0);
        for p in points {
            zmin = zmin.min(p[2]);
            zmax = zmax.max(p[2]);
            cx += p[0];
            cy += p[1];
        }
        let mut pts = points.to_vec();
        pts.push([cx / n as f64, cy / n as f64, zmax + (zmax - zmin) + 1.0]);
        let apex = n;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| lex_cmp(&pts[i], &pts[j]).then(i.cmp(&j)));
        let i0 = order[0];
        let mut i1 = i0;
        let mut best = 0.0;
        for &i in &order {
            let d = (pts[i][0] - pts[i0][0]).powi(2) + (pts[i][1] - pts[i0][1]).powi(2);
            if d > best {
                best = d;
                i1 = i;
            }
        }
        let mut i2 = i0;
        best = 0.0;
        for &i in &order {
            let o = orient2d(c2(&pts[i0]), c2(&pts[i1]), c2(&pts[i])).abs();
            if o > best {
                best = o;
                i2 = i;
            }
        }
        if i1 == i0 || i2 == i0 {
            return Err(Error::InvalidSampling("planar nodes are collinear".into()));
        }
        let tet = [i0, i1, i2, apex];
        let mut b = Builder { pts: &pts, faces: Vec::new(), edges: HashMap::new() };
        for skip in 0..4 {
            let mut v: Vec<usize> = (0..4).filter(|&k| k != skip).map(|k| tet[k]).collect();
            let opp = tet[skip];
            let o = orient3d(c3(&pts[v[0]]), c3(&pts[v[1]]), c3(&pts[v[2]]), c3(&pts[opp]));
            if o == 0.0 {
                return Err(Error::Internal("degenerate initial simplex".into()));
            }
            if o < 0.0 {
                v.swap(1, 2);
            }
            b.add_face([v[0], v[1], v[2]]);
        }
        for &i in &order {
            if i == i0 || i == i1 || i == i2 {
                continue;
            }
            b.insert(i)?;
        }
        let mut faces = Vec::new();
        let mut planes = Vec::new();
        for f in b.faces.iter().filter(|f| f.alive) {
            if f.v.contains(&apex) {
                continue;
            }
            let [a, bb, c] = f.v;
            if orient2d(c2(&pts[a]), c2(&pts[bb]), c2(&pts[c])) < 0.0 {
                faces.push(f.v);
                planes.push(Plane::through(pts[a], pts[bb], pts[c]));
            }
        }
        if faces.is_empty() {
            return Err(Error::Internal("lower hull has no faces".into()));
        }
        Ok(Self { faces, planes })
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    /// Envelope value at `(x, y)`; meaningful inside the planar hull.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.planes.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.eval(x, y)))
    }
}
