//! Relaxed energy densities: the monotone convex envelope of a radial
//! profile, bond-level relaxations `f̂` in 2D and 3D, their convex
//! envelopes and the resulting homogenized densities.

mod fhat3d;
pub mod hull;
pub mod lp;
pub mod potential;

use std::f64::consts::{PI, SQRT_2};

use robust::{orient2d, Coord};

use crate::error::{Error, Result};
use crate::qtensor::{decompose2, midpoint, Director2, QTensor2};

pub use fhat3d::{f_hom_3d, fhat_3d, Fhat3dBudget, Fhat3dResult, SimplexSlice};
pub use hull::LowerHull;
pub use potential::{GeneralPair, NamedPotential, Potential};

/// Default number of nodes for tabulating a radial profile on `[0, 1]`.
pub const DEFAULT_1D_NODES: usize = 1001;
pub const DEFAULT_DISK_ANGLES: usize = 64;
pub const DEFAULT_DISK_RADII: usize = 32;
/// Orthonormal pairs scanned when relaxing at the isotropic point.
pub const DEFAULT_PAIR_RESOLUTION: usize = 720;

/// Disk radius in deviatoric coordinates `(Q11 - 1/2, Q12)`.
pub const DISK_RADIUS: f64 = 0.5;

/// Function tabulated on a strictly increasing grid covering `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction1D {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction1D {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidSampling("need at least two nodes".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidSampling("grid and values differ in length".into()));
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
            return Err(Error::InvalidSampling("grid must start at 0 and end at 1".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSampling("grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSampling("values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn uniform<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSampling("need at least two nodes".into()));
        }
        let grid = crate::numeric::linspace(0.0, 1.0, n);
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    /// Tabulates the radial profile of an isotropic potential.
    pub fn from_potential(f: &Potential, n: usize) -> Result<Self> {
        f.require_isotropic()?;
        Self::uniform(n, |t| f.h(t).expect("isotropic"))
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.grid.partition_point(|&g| g <= t);
        k.clamp(1, self.grid.len() - 1) - 1
    }

    /// Piecewise-linear interpolation, clamped to `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let k = self.segment(t);
        let (t0, t1) = (self.grid[k], self.grid[k + 1]);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        if t == t1 {
            return v1;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Slope of the interpolant on the segment containing `t`.
    pub fn slope(&self, t: f64) -> f64 {
        let k = self.segment(t.clamp(0.0, 1.0));
        (self.values[k + 1] - self.values[k]) / (self.grid[k + 1] - self.grid[k])
    }
}

/// Largest nondecreasing convex minorant `h⁺⁺` on the same grid: the
/// running minimum from the right followed by its lower convex hull.
pub fn monotone_convex_envelope(h: &SampledFunction1D) -> SampledFunction1D {
    let t = &h.grid;
    let n = t.len();
    let mut m = h.values.clone();
    for k in (0..n - 1).rev() {
        m[k] = m[k].min(m[k + 1]);
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let o = orient2d(
                Coord { x: t[a], y: m[a] },
                Coord { x: t[b], y: m[b] },
                Coord { x: t[k], y: m[k] },
            );
            if o <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut values = vec![0.0; n];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        values[a] = m[a];
        for k in a + 1..b {
            let s = (t[k] - t[a]) / (t[b] - t[a]);
            values[k] = (m[a] + s * (m[b] - m[a])).min(m[k]);
        }
    }
    values[n - 1] = m[n - 1];
    SampledFunction1D { grid: h.grid.clone(), values }
}

/// `f̂(Q) = h(√2 |Q - I/2|)` for isotropic potentials.
pub fn fhat_radial(f: &Potential, q: &QTensor2) -> Result<f64> {
    f.h(q.order())
        .ok_or_else(|| Error::UnsupportedPotential(format!("{} is not isotropic", f.name())))
}

/// Bond-level relaxation `f̂(Q) = f(u, v)` for the pair with
/// `(u⊗u + v⊗v)/2 = Q`; at `Q = I/2` the minimum over `m` orthonormal
/// pairs with angles on a uniform grid of `[0, π)`.
pub fn fhat_anisotropic_2d(f: &Potential, q: &QTensor2, m: usize) -> f64 {
    if q.deviatoric_norm() > 1e-8 {
        let d = decompose2(q);
        return f.pair(&d.u, &d.v);
    }
    (0..m.max(1))
        .map(|k| {
            let u = Director2::from_angle(PI * k as f64 / m.max(1) as f64);
            f.pair(&u, &u.perp())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Tabulated function on nodes of the deviatoric disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSurface {
    nodes: Vec<[f64; 2]>,
    values: Vec<f64>,
}

impl SampledSurface {
    pub fn new(nodes: Vec<[f64; 2]>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidSampling("nodes and values differ in length".into()));
        }
        if let Some(p) = nodes.iter().find(|p| p[0].hypot(p[1]) > DISK_RADIUS + 1e-12) {
            return Err(Error::InvalidSampling(format!("node {p:?} outside the disk")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSampling("values must be finite".into()));
        }
        Ok(Self { nodes, values })
    }

    pub fn from_fn<F: Fn(&QTensor2) -> f64>(nodes: Vec<[f64; 2]>, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(nodes.len());
        for p in &nodes {
            values.push(f(&QTensor2::from_disk(p[0], p[1])?));
        }
        Self::new(nodes, values)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Polar grid: the centre plus `n_radii` rings of `n_angles` nodes, the
/// outermost ring on the disk boundary.
pub fn disk_nodes(n_angles: usize, n_radii: usize) -> Vec<[f64; 2]> {
    let mut nodes = vec![[0.0, 0.0]];
    for r in 1..=n_radii {
        let rad = DISK_RADIUS * r as f64 / n_radii as f64;
        for a in 0..n_angles {
            let th = 2.0 * PI * a as f64 / n_angles as f64;
            nodes.push([rad * th.cos(), rad * th.sin()]);
        }
    }
    nodes
}

/// Convex envelope of a sampled surface, evaluable anywhere in the hull of
/// its nodes.
#[derive(Debug, Clone)]
pub struct DiskEnvelope {
    hull: LowerHull,
}

impl DiskEnvelope {
    pub fn build(surface: &SampledSurface) -> Result<Self> {
        let pts: Vec<[f64; 3]> =
            surface.nodes.iter().zip(&surface.values).map(|(p, v)| [p[0], p[1], *v]).collect();
        Ok(Self { hull: LowerHull::build(&pts)? })
    }

    pub fn eval_disk(&self, q1: f64, q2: f64) -> f64 {
        self.hull.eval(q1, q2)
    }

    pub fn eval(&self, q: &QTensor2) -> f64 {
        let [a, b] = q.disk();
        self.hull.eval(a, b)
    }

    pub fn hull(&self) -> &LowerHull {
        &self.hull
    }
}

/// Convex envelope values at the surface's own nodes.
pub fn convex_envelope_disk(surface: &SampledSurface) -> Result<SampledSurface> {
    let env = DiskEnvelope::build(surface)?;
    let values = surface
        .nodes
        .iter()
        .zip(&surface.values)
        .map(|(p, v)| env.eval_disk(p[0], p[1]).min(*v))
        .collect();
    Ok(SampledSurface { nodes: surface.nodes.clone(), values })
}

/// The four tensors where the two-valued example potential relaxes to zero.
pub fn noradial_zero_set(l: f64, m: f64) -> [QTensor2; 4] {
    let tl = l.acos();
    let tm = m.acos();
    let a = |x: f64| Director2::from_angle(x);
    [
        midpoint(&a(tl), &a(tl + tm)),
        midpoint(&a(tl), &a(tl - tm)),
        midpoint(&a(PI - tl), &a(PI - tl + tm)),
        midpoint(&a(PI - tl), &a(PI - tl - tm)),
    ]
}

/// Whether the disk point lies in the convex hull of the given points
/// (exact predicates, boundary included).
pub fn in_convex_hull(points: &[[f64; 2]], q: [f64; 2]) -> bool {
    let hull = planar_hull(points);
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|k| {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        orient2d(Coord { x: a[0], y: a[1] }, Coord { x: b[0], y: b[1] }, Coord { x: q[0], y: q[1] })
            >= 0.0
    })
}

/// Counter-clockwise convex hull of planar points.
pub fn planar_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let turn = |a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]| {
        orient2d(Coord { x: a[0], y: a[1] }, Coord { x: b[0], y: b[1] }, Coord { x: c[0], y: c[1] })
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for q in &p {
        while lower.len() >= 2 && turn(&lower[lower.len() - 2], &lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(*q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for q in p.iter().rev() {
        while upper.len() >= 2 && turn(&upper[upper.len() - 2], &upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(*q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from `q` to the polygon `co(points)` (zero inside).
pub fn distance_to_hull(points: &[[f64; 2]], q: [f64; 2]) -> f64 {
    if in_convex_hull(points, q) {
        return 0.0;
    }
    let hull = planar_hull(points);
    let mut best = f64::INFINITY;
    for k in 0..hull.len() {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let s = if len2 == 0.0 {
            0.0
        } else {
            (((q[0] - a[0]) * dx + (q[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
        };
        best = best.min((q[0] - a[0] - s * dx).hypot(q[1] - a[1] - s * dy));
    }
    best
}

/// Resolution of the disk tabulation used for anisotropic potentials.
#[derive(Debug, Clone)]
pub struct SurfaceOptions {
    pub n_angles: usize,
    pub n_radii: usize,
    pub pair_resolution: usize,
    pub extra_nodes: Vec<[f64; 2]>,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self {
            n_angles: DEFAULT_DISK_ANGLES,
            n_radii: DEFAULT_DISK_RADII,
            pair_resolution: DEFAULT_PAIR_RESOLUTION,
            extra_nodes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
enum Hom2Route {
    Radial(SampledFunction1D),
    Surface(DiskEnvelope),
}

/// Homogenized planar nearest-neighbour density `4 f̂**`.
#[derive(Debug, Clone)]
pub struct Homogenized2d {
    route: Hom2Route,
}

impl Homogenized2d {
    /// Radial fast path `4 h⁺⁺(√2 |Q - I/2|)` for isotropic potentials,
    /// disk tabulation otherwise.
    pub fn new(f: &Potential) -> Result<Self> {
        if f.is_isotropic() {
            let h = SampledFunction1D::from_potential(f, DEFAULT_1D_NODES)?;
            Ok(Self { route: Hom2Route::Radial(monotone_convex_envelope(&h)) })
        } else {
            Self::via_surface(f, SurfaceOptions::default())
        }
    }

    /// Tabulates `f̂` on the disk and takes its lower convex hull. The
    /// example potential's zero set is added to the nodes automatically.
    pub fn via_surface(f: &Potential, opts: SurfaceOptions) -> Result<Self> {
        let surface = relaxed_surface(f, &opts)?;
        Ok(Self { route: Hom2Route::Surface(DiskEnvelope::build(&surface)?) })
    }

    pub fn eval(&self, q: &QTensor2) -> f64 {
        4.0 * match &self.route {
            Hom2Route::Radial(hpp) => hpp.eval(q.order()),
            Hom2Route::Surface(env) => env.eval(q),
        }
    }
}

/// `f̂` tabulated on the disk grid of `opts`.
pub fn relaxed_surface(f: &Potential, opts: &SurfaceOptions) -> Result<SampledSurface> {
    let mut nodes = disk_nodes(opts.n_angles, opts.n_radii);
    nodes.extend(opts.extra_nodes.iter().copied());
    if let Potential::Noradial { l, m } = f {
        nodes.extend(noradial_zero_set(*l, *m).iter().map(|q| q.disk()));
    }
    SampledSurface::from_fn(nodes, |q| fhat_anisotropic_2d(f, q, opts.pair_resolution))
}

/// One-shot `f_hom(Q) = 4 f̂**(Q)` in 2D.
pub fn f_hom_2d(f: &Potential, q: &QTensor2) -> Result<f64> {
    Ok(Homogenized2d::new(f)?.eval(q))
}

/// `√2 |Q - I/2|` for a point of the disk at radius `r`.
pub fn order_of_radius(r: f64) -> f64 {
    SQRT_2 * SQRT_2 * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qtensor::q_of;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> SampledFunction1D {
        SampledFunction1D::uniform(n, f).unwrap()
    }

    #[test]
    fn sampling_validation() {
        assert!(SampledFunction1D::new(vec![0.0], vec![1.0]).is_err());
        assert!(SampledFunction1D::new(vec![0.0, 0.5], vec![1.0, 2.0]).is_err());
        assert!(SampledFunction1D::new(vec![0.0, 0.6, 0.6, 1.0], vec![0.0; 4]).is_err());
        let h = sample(3, |t| t);
        assert_eq!(h.eval(0.25), 0.25);
        assert_eq!(h.eval(1.0), 1.0);
    }

    #[test]
    fn envelope_of_convex_increasing_is_identity() {
        let h = sample(1001, |t| t * t);
        let e = monotone_convex_envelope(&h);
        for (a, b) in e.values().iter().zip(h.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn envelope_of_decreasing_is_its_infimum() {
        let e = monotone_convex_envelope(&sample(1001, |t| -t * t));
        assert!(e.values().iter().all(|v| *v == -1.0));
    }

    #[test]
    fn envelope_of_quartic_well() {
        let e = monotone_convex_envelope(&sample(1001, |t| (t * t - 0.25).powi(2)));
        for (t, v) in e.grid().iter().zip(e.values()) {
            if *t <= 0.5 {
                assert_eq!(*v, 0.0);
            } else {
                assert!((v - (t * t - 0.25).powi(2)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn envelope_matches_lp_oracle_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let vals: Vec<f64> = (0..81).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = SampledFunction1D::new(crate::numeric::linspace(0.0, 1.0, 81), vals).unwrap();
            let e = monotone_convex_envelope(&h);
            let o = lp::monotone_convex_envelope_lp(&h).unwrap();
            for (a, b) in e.values().iter().zip(&o) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn envelope_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(2..60);
            let mut grid: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            grid.push(0.0);
            grid.push(1.0);
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let vals: Vec<f64> = grid.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
            let h = SampledFunction1D::new(grid, vals).unwrap();
            let e = monotone_convex_envelope(&h);
            let v = e.values();
            let t = e.grid();
            for k in 0..v.len() {
                assert!(v[k] <= h.values()[k]);
                if k + 1 < v.len() {
                    assert!(v[k + 1] >= v[k] - 1e-12);
                }
                if k >= 1 && k + 1 < v.len() {
                    let s1 = (v[k] - v[k - 1]) / (t[k] - t[k - 1]);
                    let s2 = (v[k + 1] - v[k]) / (t[k + 1] - t[k]);
                    assert!(s2 - s1 >= -1e-9);
                }
            }
            assert_eq!(v[0], h.min());
            let again = monotone_convex_envelope(&e);
            for (a, b) in again.values().iter().zip(v) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn fhat_radial_values() {
        let f = Potential::QuarticWell { s: 0.3 };
        assert_eq!(fhat_radial(&f, &QTensor2::half_identity()).unwrap(), f.h(0.0).unwrap());
        let q = q_of(&Director2::from_angle(1.1));
        assert!((fhat_radial(&f, &q).unwrap() - f.h(1.0).unwrap()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let u = Director2::from_angle(rng.random_range(0.0..2.0 * PI));
            let v = Director2::from_angle(rng.random_range(0.0..2.0 * PI));
            let got = fhat_radial(&f, &midpoint(&u, &v)).unwrap();
            assert!((got - f.h(u.dot(&v).abs()).unwrap()).abs() < 1e-12);
        }
        assert!(fhat_radial(&Potential::Noradial { l: 0.5, m: 0.5 }, &q).is_err());
    }

    #[test]
    fn anisotropic_route_agrees_with_radial_for_isotropic_potentials() {
        let f = Potential::OneMinus;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = QTensor2::on_shell(rng.random_range(0.0..1.0), rng.random_range(0.0..PI)).unwrap();
            let a = fhat_anisotropic_2d(&f, &q, 64);
            let b = fhat_radial(&f, &q).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(fhat_anisotropic_2d(&f, &QTensor2::half_identity(), 64), 1.0);
    }

    #[test]
    fn noradial_relaxation_values() {
        let (l, m) = (0.8, 0.6);
        let f = Potential::Noradial { l, m };
        let qs = noradial_zero_set(l, m);
        for q in &qs {
            assert_eq!(fhat_anisotropic_2d(&f, q, 360), 0.0);
            assert!((q.deviatoric_norm() - m / SQRT_2).abs() < 1e-12);
        }
        assert_eq!(fhat_anisotropic_2d(&f, &QTensor2::half_identity(), 3600), 1.0);
        // Q1 - Q4 parallel to Q2 - Q3
        let d = |a: &QTensor2, b: &QTensor2| {
            let (x, y) = (a.disk(), b.disk());
            [x[0] - y[0], x[1] - y[1]]
        };
        let a = d(&qs[0], &qs[3]);
        let b = d(&qs[1], &qs[2]);
        assert!((a[0] * b[1] - a[1] * b[0]).abs() < 1e-12);
    }

    #[test]
    fn constant_and_radial_surfaces_are_fixed_points() {
        let nodes = disk_nodes(32, 16);
        let s = SampledSurface::new(nodes.clone(), vec![0.7; nodes.len()]).unwrap();
        let e = convex_envelope_disk(&s).unwrap();
        assert!(e.values().iter().all(|v| (v - 0.7).abs() < 1e-12));

        let h = |t: f64| t * t * t + 0.5 * t;
        let s = SampledSurface::new(
            nodes.clone(),
            nodes.iter().map(|p| h(order_of_radius(p[0].hypot(p[1])))).collect(),
        )
        .unwrap();
        let e = convex_envelope_disk(&s).unwrap();
        for (a, b) in e.values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn disk_hull_matches_dual_lp() {
        let nodes = disk_nodes(16, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = nodes.iter().map(|_| rng.random_range(0.0..1.0)).collect();
        let s = SampledSurface::new(nodes.clone(), values.clone()).unwrap();
        let env = DiskEnvelope::build(&s).unwrap();
        for _ in 0..40 {
            let r = rng.random_range(0.0..0.45);
            let a = rng.random_range(0.0..2.0 * PI);
            let q = [r * a.cos(), r * a.sin()];
            let want = lp::convex_envelope_lp(&nodes, &values, q).unwrap();
            assert!((env.eval_disk(q[0], q[1]) - want).abs() < 1e-8);
        }
    }

    #[test]
    fn homogenized_density_examples() {
        let ll = Homogenized2d::new(&Potential::LebwohlLasher).unwrap();
        for q in [QTensor2::half_identity(), q_of(&Director2::from_angle(0.3))] {
            assert!((ll.eval(&q) + 4.0).abs() < 1e-12);
        }
        let s = 0.5;
        let qw = Homogenized2d::new(&Potential::QuarticWell { s }).unwrap();
        assert_eq!(qw.eval(&QTensor2::on_shell(0.4, 0.2).unwrap()), 0.0);
        let top = qw.eval(&q_of(&Director2::from_angle(0.9)));
        assert!((top - 4.0 * (1.0f64 - s * s).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn noradial_indicator_envelope_vanishes_on_trapezoid() {
        let (l, m) = (0.8, 0.6);
        let f = Potential::Noradial { l, m };
        let opts = SurfaceOptions { n_angles: 48, n_radii: 16, pair_resolution: 90, ..Default::default() };
        let surface = relaxed_surface(&f, &opts).unwrap();
        let env = DiskEnvelope::build(&surface).unwrap();
        let corners: Vec<[f64; 2]> = noradial_zero_set(l, m).iter().map(|q| q.disk()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (mut inside, mut outside) = (0, 0);
        while inside < 200 || outside < 200 {
            let r = rng.random_range(0.0..0.49);
            let a = rng.random_range(0.0..2.0 * PI);
            let q = [r * a.cos(), r * a.sin()];
            let v = env.eval_disk(q[0], q[1]);
            let d = distance_to_hull(&corners, q);
            if d == 0.0 {
                assert!(v.abs() < 1e-12, "{v} at {q:?}");
                inside += 1;
            } else if d > 1e-3 {
                assert!(v > 0.0, "{v} at {q:?}");
                outside += 1;
            }
        }
    }

    #[test]
    fn radial_reduction_matches_fast_path() {
        let f = Potential::QuarticWell { s: 0.5 };
        let opts = SurfaceOptions::default();
        let slow = Homogenized2d::via_surface(&f, opts.clone()).unwrap();
        let fast = Homogenized2d::new(&f).unwrap();
        // one interpolation error: Lipschitz bound of 4h times the widest
        // radial or angular node gap measured in the order parameter
        let lip = 4.0 * (0..=1000).map(|k| f.h_derivative(k as f64 / 1000.0).unwrap().abs()).fold(0.0, f64::max);
        let gap = order_of_radius(DISK_RADIUS / opts.n_radii as f64)
            .max(order_of_radius(DISK_RADIUS * 2.0 * PI / opts.n_angles as f64));
        let tol = 2.0 * lip * gap;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let q = QTensor2::on_shell(rng.random_range(0.0..1.0), rng.random_range(0.0..PI)).unwrap();
            worst = worst.max((slow.eval(&q) - fast.eval(&q)).abs());
        }
        assert!(worst <= tol, "{worst} > {tol}");
    }

    #[test]
    fn hull_helpers() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(in_convex_hull(&sq, [0.5, 0.5]));
        assert!(in_convex_hull(&sq, [1.0, 0.5]));
        assert!(!in_convex_hull(&sq, [1.1, 0.5]));
        assert!((distance_to_hull(&sq, [1.5, 0.5]) - 0.5).abs() < 1e-15);
    }
}
