//! Point defects under the concentration scaling: the auxiliary map
//! `A(Q) = (2Q11 - 1, 2Q12)`, its piecewise-affine Jacobian, lattice
//! winding numbers, half-vortex fields and the `|log ε|` energy fit.

use std::f64::consts::PI;

use serde::Serialize;

use crate::energy::{energy, Bonds, EnergySpec, Scaling};
use crate::envelope::Potential;
use crate::error::{Error, Result};
use crate::lattice::{AffineQField, DirectorField2, Grid2, Site, Triangulation};
use crate::numeric::{fit_line, CompensatedSum};
use crate::qtensor::{Director2, QTensor2};

/// Loops closer than this many lattice spacings to a core are rejected.
pub const CORE_EXCLUSION: f64 = 4.0;
/// Minimum `|A|` accepted on a loop.
pub const MIN_LOOP_MODULUS: f64 = 0.5;

/// `A(Q) = (2Q11 - 1, 2Q12)`.
pub fn aux_of(q: &QTensor2) -> [f64; 2] {
    [2.0 * q.q11() - 1.0, 2.0 * q.q12()]
}

/// Auxiliary map on the vertices of an affine interpolation, with its
/// constant gradient on every triangle.
#[derive(Debug, Clone)]
pub struct AuxField {
    grid: Grid2,
    vertices: Vec<[f64; 2]>,
    values: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    /// Rows are `∇A1`, `∇A2`.
    gradients: Vec<[[f64; 2]; 2]>,
}

pub fn aux_map(field: &AffineQField) -> AuxField {
    let gradients = field
        .gradients()
        .iter()
        .map(|g| [[2.0 * g[0][0], 2.0 * g[0][1]], [2.0 * g[1][0], 2.0 * g[1][1]]])
        .collect();
    AuxField {
        grid: field.grid().clone(),
        vertices: field.vertices().to_vec(),
        values: field.values().iter().map(aux_of).collect(),
        triangles: field.triangles().to_vec(),
        areas: (0..field.triangles().len()).map(|t| field.area(t)).collect(),
        gradients,
    }
    .checked(field.triangulation())
}

impl AuxField {
    fn checked(self, t: Triangulation) -> Self {
        debug_assert_eq!(t == Triangulation::AntiDiagonal, self.vertices.len() == self.grid.len());
        self
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// `|∇A|²` on triangle `t`.
    pub fn gradient_sq(&self, t: usize) -> f64 {
        self.gradients[t].iter().flatten().map(|v| v * v).sum()
    }

    fn at_site(&self, i: Site) -> Option<[f64; 2]> {
        if self.vertices.len() != self.grid.len() {
            return None;
        }
        self.grid.linear(i).map(|k| self.values[k])
    }
}

/// Constant `det ∇A` per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianField {
    pub centroids: Vec<[f64; 2]>,
    pub areas: Vec<f64>,
    pub det: Vec<f64>,
}

pub fn jacobian_density(aux: &AuxField) -> JacobianField {
    let mut centroids = Vec::with_capacity(aux.triangles.len());
    let mut det = Vec::with_capacity(aux.triangles.len());
    for (t, tri) in aux.triangles.iter().enumerate() {
        let p = tri.map(|k| aux.vertices[k]);
        centroids.push([(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]);
        let g = &aux.gradients[t];
        det.push(g[0][0] * g[1][1] - g[0][1] * g[1][0]);
    }
    JacobianField { centroids, areas: aux.areas.clone(), det }
}

impl JacobianField {
    /// `Σ det · area` over triangles with centroid in the closed ball.
    pub fn ball_mass(&self, center: [f64; 2], radius: f64) -> f64 {
        let mut s = CompensatedSum::new();
        for ((c, a), d) in self.centroids.iter().zip(&self.areas).zip(&self.det) {
            if (c[0] - center[0]).hypot(c[1] - center[1]) <= radius {
                s.add(a * d);
            }
        }
        s.value()
    }

    /// Signed total `∫ J`.
    pub fn total_mass(&self) -> f64 {
        self.areas.iter().zip(&self.det).map(|(a, d)| a * d).collect::<CompensatedSum>().value()
    }

    /// Total variation `∫ |J|`.
    pub fn abs_mass(&self) -> f64 {
        self.areas.iter().zip(&self.det).map(|(a, d)| a * d.abs()).collect::<CompensatedSum>().value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Winding {
    pub degree: i64,
    /// Distance of the raw angle sum (in turns) from the integer.
    pub residual: f64,
    pub min_modulus: f64,
}

/// Lattice sites visited by a circle, consecutive duplicates removed.
pub fn lattice_circle(grid: &Grid2, center: [f64; 2], radius: f64) -> Vec<Site> {
    let e = grid.eps();
    let n = ((2.0 * PI * radius / e).ceil() as usize * 4).max(16);
    let mut sites: Vec<Site> = Vec::with_capacity(n);
    for k in 0..n {
        let a = 2.0 * PI * k as f64 / n as f64;
        let p = [center[0] + radius * a.cos(), center[1] + radius * a.sin()];
        let s = [(p[0] / e).round() as i64, (p[1] / e).round() as i64];
        if sites.last() != Some(&s) {
            sites.push(s);
        }
    }
    while sites.len() > 1 && sites.first() == sites.last() {
        sites.pop();
    }
    sites
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Degree of `A` along the lattice circle of radius `radius` around
/// `center`.
pub fn winding_number(aux: &AuxField, center: [f64; 2], radius: f64) -> Result<Winding> {
    if radius < CORE_EXCLUSION * aux.grid.eps() {
        return Err(Error::InvalidSampling(format!(
            "loop radius {radius} is inside the core exclusion zone"
        )));
    }
    let sites = lattice_circle(&aux.grid, center, radius);
    let mut values = Vec::with_capacity(sites.len());
    for s in &sites {
        let a = aux
            .at_site(*s)
            .ok_or(Error::Coverage)?;
        values.push(a);
    }
    let min_modulus = values.iter().map(|a| a[0].hypot(a[1])).fold(f64::INFINITY, f64::min);
    if min_modulus < MIN_LOOP_MODULUS {
        return Err(Error::DegenerateLoop { min_modulus });
    }
    let mut turns = CompensatedSum::new();
    for k in 0..values.len() {
        let (a, b) = (values[k], values[(k + 1) % values.len()]);
        turns.add(wrap(b[1].atan2(b[0]) - a[1].atan2(a[0])));
    }
    let raw = turns.value() / (2.0 * PI);
    let degree = raw.round();
    Ok(Winding { degree: degree as i64, residual: (raw - degree).abs(), min_modulus })
}

/// Point charges `Σ z_k δ_{x_k}` of the auxiliary map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    atoms: Vec<([f64; 2], i32)>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<([f64; 2], i32)>) -> Result<Self> {
        if atoms.iter().any(|(p, z)| *z == 0 || !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidSpec("charges must be nonzero at finite positions".into()));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[([f64; 2], i32)] {
        &self.atoms
    }

    /// `|μ|(Ω) = Σ |z_k|`.
    pub fn total_variation(&self) -> i64 {
        self.atoms.iter().map(|(_, z)| z.unsigned_abs() as i64).sum()
    }
}

/// Nearest plaquette centre `ε(k + 1/2)` to `p`.
pub fn plaquette_center(grid: &Grid2, p: [f64; 2]) -> [f64; 2] {
    let e = grid.eps();
    p.map(|x| e * ((x / e - 0.5).round() + 0.5))
}

fn check_off_lattice(grid: &Grid2, c: [f64; 2]) -> Result<()> {
    let e = grid.eps();
    let on = c.iter().all(|x| ((x / e) - (x / e).round()).abs() < 1e-9);
    if on {
        return Err(Error::SingularSite);
    }
    Ok(())
}

/// Director field `u = (x - c)/|x - c|` raised to the power `1/2` (sign
/// `+1`) or its conjugate (sign `-1`), branch cut along the negative
/// horizontal axis through the centre.
pub fn half_vortex_field(grid: &Grid2, center: [f64; 2], sign: i32) -> Result<DirectorField2> {
    let mu = AtomicMeasure::new(vec![(center, sign.signum())])?;
    multi_vortex_field(grid, &mu)
}

/// Product of half vortices: the director angle is `Σ z_k φ_k / 2` with
/// `φ_k` the polar angle around atom `k`, so `A` has degree `z_k` there.
pub fn multi_vortex_field(grid: &Grid2, mu: &AtomicMeasure) -> Result<DirectorField2> {
    for (c, _) in &mu.atoms {
        check_off_lattice(grid, *c)?;
    }
    Ok(DirectorField2::from_fn(grid.clone(), |_, x| {
        let angle: f64 = mu
            .atoms
            .iter()
            .map(|(c, z)| 0.5 * *z as f64 * (x[1] - c[1]).atan2(x[0] - c[0]))
            .sum();
        Director2::from_angle(angle)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationPoint {
    pub eps: f64,
    pub log_inv_eps: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub points: Vec<ConcentrationPoint>,
}

/// Unscaled `Σ (1 - (u_i·u_j)²)` over ordered nearest-neighbour bonds.
pub fn unscaled_defect_energy(field: &DirectorField2) -> Result<f64> {
    let spec = EnergySpec::new(Potential::LebwohlLasher, Bonds::Nn2d, Scaling::FirstOrder);
    Ok(energy(&spec, field)?.total)
}

/// Least-squares slope of the unscaled energy against `|log ε|`.
pub fn concentration_fit<F>(eps_list: &[f64], mut build: F) -> Result<ConcentrationFit>
where
    F: FnMut(f64) -> Result<DirectorField2>,
{
    if eps_list.len() < 3 {
        return Err(Error::InsufficientData(format!("{} spacings, need 3", eps_list.len())));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::InvalidScaling("spacings must decrease within (0, 1)".into()));
    }
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let f = build(eps)?;
        points.push(ConcentrationPoint { eps, log_inv_eps: eps.ln().abs(), energy: unscaled_defect_energy(&f)? });
    }
    let x: Vec<f64> = points.iter().map(|p| p.log_inv_eps).collect();
    let y: Vec<f64> = points.iter().map(|p| p.energy).collect();
    let fit = fit_line(&x, &y).ok_or_else(|| Error::InsufficientData("degenerate fit".into()))?;
    Ok(ConcentrationFit { slope: fit.slope, intercept: fit.intercept, residual: fit.residual, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::lattice::affine_interpolate;
    use crate::qtensor::q_of;

    fn centered(n: usize) -> Grid2 {
        Grid2::with_resolution(Rect::square(0.5), n).unwrap()
    }

    #[test]
    fn aux_examples() {
        assert_eq!(aux_of(&QTensor2::half_identity()), [0.0, 0.0]);
        assert_eq!(aux_of(&q_of(&Director2::e1())), [1.0, 0.0]);
        for k in 0..50 {
            let th = 0.13 * k as f64;
            let a = aux_of(&q_of(&Director2::from_angle(th)));
            assert!((a[0] - (2.0 * th).cos()).abs() < 1e-12);
            assert!((a[1] - (2.0 * th).sin()).abs() < 1e-12);
            assert!((a[0].hypot(a[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn aux_gradient_identity() {
        let g = centered(16);
        let c = plaquette_center(&g, [0.1, -0.05]);
        let f = half_vortex_field(&g, c, 1).unwrap();
        let aff = affine_interpolate(&f);
        let aux = aux_map(&aff);
        for t in 0..aff.triangles().len() {
            let (a, q) = (aux.gradient_sq(t), aff.gradient_sq(t));
            assert!((a - 2.0 * q).abs() <= 1e-10 * (1.0 + a));
        }
    }

    #[test]
    fn half_vortex_angles() {
        let g = centered(8);
        assert!(matches!(half_vortex_field(&g, [0.0, 0.0], 1), Err(Error::SingularSite)));
        let c = plaquette_center(&g, [0.0, 0.0]);
        let f = half_vortex_field(&g, c, 1).unwrap();
        // site straight to the right of the centre: polar angle 0
        let i: Site = [2, 0];
        let p = g.position(i);
        if (p[1] - c[1]).abs() < 1e-15 {
            assert_eq!(f.get(i).unwrap().angle(), 0.0);
        }
        let right = Grid2::with_resolution(Rect::new(0.0, -0.5, 1.0, 0.5).unwrap(), 8).unwrap();
        let f = half_vortex_field(&right, [-0.5 / 8.0, 0.0 + 0.5 / 8.0], 1).unwrap();
        let u = f.get([0, 0]).unwrap();
        assert!(u.y().abs() < 0.5);
    }

    #[test]
    fn winding_of_constant_and_vortices() {
        let g = centered(64);
        let flat = aux_map(&affine_interpolate(&DirectorField2::constant(g.clone(), Director2::e2())));
        assert_eq!(winding_number(&flat, [0.0, 0.0], 0.2).unwrap().degree, 0);
        let c = plaquette_center(&g, [0.0, 0.0]);
        for sign in [1, -1] {
            let aux = aux_map(&affine_interpolate(&half_vortex_field(&g, c, sign).unwrap()));
            for r in [0.1, 0.2, 0.3] {
                let w = winding_number(&aux, c, r).unwrap();
                assert_eq!(w.degree, sign as i64);
                assert!(w.residual < 0.1);
            }
        }
        let mu = AtomicMeasure::new(vec![
            (plaquette_center(&g, [-0.1, 0.0]), 1),
            (plaquette_center(&g, [0.1, 0.0]), 1),
        ])
        .unwrap();
        let aux = aux_map(&affine_interpolate(&multi_vortex_field(&g, &mu).unwrap()));
        assert_eq!(winding_number(&aux, [0.0, 0.0], 0.3).unwrap().degree, 2);
        assert!(winding_number(&aux, [0.0, 0.0], 0.01).is_err());
    }

    #[test]
    fn core_loop_is_degenerate() {
        let g = centered(16);
        let mu = AtomicMeasure::new(vec![
            (plaquette_center(&g, [-0.2, 0.0]), 1),
            (plaquette_center(&g, [0.2, 0.0]), -1),
        ])
        .unwrap();
        let f = multi_vortex_field(&g, &mu).unwrap();
        let aux = aux_map(&affine_interpolate(&f));
        let loop_ok = winding_number(&aux, [0.0, 0.0], 0.4);
        assert!(loop_ok.is_ok() || matches!(loop_ok, Err(Error::DegenerateLoop { .. }) | Err(Error::Coverage)));
    }

    #[test]
    fn jacobian_masses() {
        let g = centered(128);
        let flat = aux_map(&affine_interpolate(&DirectorField2::constant(g.clone(), Director2::e1())));
        assert!(jacobian_density(&flat).det.iter().all(|d| *d == 0.0));
        let c = plaquette_center(&g, [0.0, 0.0]);
        let j = jacobian_density(&aux_map(&affine_interpolate(&half_vortex_field(&g, c, 1).unwrap())));
        assert!((j.ball_mass(c, 0.3) - PI).abs() < 0.05 * PI);
        assert!((j.total_mass() - j.ball_mass(c, 0.3)).abs() < 0.05 * PI);
        let mu = AtomicMeasure::new(vec![
            (plaquette_center(&g, [-0.2, 0.0]), 1),
            (plaquette_center(&g, [0.2, 0.0]), -1),
        ])
        .unwrap();
        let j = jacobian_density(&aux_map(&affine_interpolate(&multi_vortex_field(&g, &mu).unwrap())));
        let (a, b) = (mu.atoms()[0].0, mu.atoms()[1].0);
        assert!((j.ball_mass(a, 0.15) - PI).abs() < 0.1 * PI);
        assert!((j.ball_mass(b, 0.15) + PI).abs() < 0.1 * PI);
        assert!(j.total_mass().abs() < 0.1 * PI);
    }

    #[test]
    fn fit_guards_and_uniform_slope() {
        let build = |e: f64| Ok(DirectorField2::constant(centered((1.0 / e).round() as usize), Director2::e1()));
        assert!(matches!(concentration_fit(&[0.1, 0.05], build), Err(Error::InsufficientData(_))));
        assert!(concentration_fit(&[0.05, 0.1, 0.02], build).is_err());
        let fit = concentration_fit(&[1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0], build).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn single_half_vortex_slope() {
        let eps = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let fit = concentration_fit(&eps, |e| {
            let g = centered((1.0 / e).round() as usize);
            let c = plaquette_center(&g, [0.0, 0.0]);
            half_vortex_field(&g, c, 1)
        })
        .unwrap();
        assert!((fit.slope / PI - 1.0).abs() < 0.1, "slope {}", fit.slope / PI);
    }
}
