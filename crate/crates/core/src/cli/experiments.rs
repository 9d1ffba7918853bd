use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Check, Experiment, Outcome, Table};
use crate::energy::{
    first_order_energy, hedgehog_bound, hedgehog_field, interior_density_3d, long_range_prefactor,
    oscillating_field, rotation_dirichlet, rotation_field, Bonds, EnergySpec, LongRange, Scaling,
};
use crate::envelope::{
    distance_to_hull, lp, monotone_convex_envelope, noradial_zero_set, planar_hull, relaxed_surface,
    DiskEnvelope, Homogenized2d, NamedPotential, Potential, SampledFunction1D, SurfaceOptions,
};
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::homogenize::{cell_problem_min, recovery_3d, AnnealSchedule, CellProblemSpec, CellSource, Optimizer};
use crate::lattice::{affine_interpolate, DirectorField3, Grid2, Grid3};
use crate::numeric::linspace;
use crate::qtensor::{decompose2, decompose3, midpoint, q_of, Director2, Director3, QTensor2, QTensor3};
use crate::vortex::{
    aux_map, concentration_fit, jacobian_density, multi_vortex_field, plaquette_center, winding_number,
    AtomicMeasure, CORE_EXCLUSION,
};

/// `β(2)`, the Catalan constant.
const CATALAN: f64 = 0.915_965_594_177_219;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn seed_of(s: Option<u64>) -> Result<u64> {
    s.ok_or_else(|| Error::InvalidSpec("seed is mandatory".into()))
}

fn random_director3(r: &mut ChaCha8Rng) -> Director3 {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>();
        if n > 1e-4 && n <= 1.0 {
            let n = n.sqrt();
            return Director3::from_array(v.map(|x| x / n)).expect("unit vector");
        }
    }
}

fn unit_grid(n: usize) -> Result<Grid2> {
    Grid2::with_resolution(Rect::unit(), n)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Identities {
    pub pairs: usize,
    pub seed: Option<u64>,
    pub midpoint_tolerance: f64,
    pub reconstruction_tolerance: f64,
}

impl Default for Identities {
    fn default() -> Self {
        Self { pairs: 10_000, seed: None, midpoint_tolerance: 1e-12, reconstruction_tolerance: 1e-10 }
    }
}

impl Experiment for Identities {
    const NAME: &'static str = "identities";
    const SUMMARY: &'static str = "midpoint distance identity and decomposition round trips on random samples";
    const STOCHASTIC: bool = true;

    fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn run(&self) -> Result<Outcome> {
        let mut r = rng(seed_of(self.seed)?);
        let (mut mid, mut dec2, mut dec3) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..self.pairs {
            let u = Director2::from_angle(r.random_range(0.0..2.0 * PI));
            let v = Director2::from_angle(r.random_range(0.0..2.0 * PI));
            let m = midpoint(&u, &v);
            mid = mid.max((m.distance(&QTensor2::half_identity()) - FRAC_1_SQRT_2 * u.dot(&v).abs()).abs());

            let rad = 0.5 * r.random_range(0.0f64..1.0).sqrt();
            let a = r.random_range(0.0..2.0 * PI);
            let q = QTensor2::from_disk(rad * a.cos(), rad * a.sin())?;
            let d = decompose2(&q);
            dec2 = dec2.max(midpoint(&d.u, &d.v).distance(&q));

            let w: [f64; 4] = std::array::from_fn(|_| r.random_range(0.0..1.0));
            let total: f64 = w.iter().sum();
            let mut m3 = [0.0; 6];
            for wk in w {
                let t = q_of(&random_director3(&mut r)).upper();
                for k in 0..6 {
                    m3[k] += wk / total * t[k];
                }
            }
            let q3 = QTensor3::new(m3)?;
            dec3 = dec3.max(decompose3(&q3).mean_tensor().distance(&q3));
        }
        let mut t = Table::new("identities", "qtensor", &["identity", "samples", "max_error", "tolerance"]);
        let rows = [
            ("midpoint-distance", "qtensor::midpoint", mid, self.midpoint_tolerance),
            ("decompose2", "qtensor::decompose2", dec2, self.reconstruction_tolerance),
            ("decompose3", "qtensor::decompose3", dec3, self.reconstruction_tolerance),
        ];
        let mut checks = Vec::new();
        for (name, src, err, tol) in rows {
            t.push(vec![json!(name), json!(self.pairs), json!(err), json!(tol)]);
            checks.push(Check::at_most(name, src, err, tol));
        }
        Ok(Outcome { tables: vec![t], checks })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeOracle {
    pub nodes: usize,
    pub random_profiles: usize,
    pub seed: Option<u64>,
    pub oracle_tolerance: f64,
    pub l: f64,
    pub m: f64,
    pub interior_samples: usize,
    pub exterior_samples: usize,
    /// Frobenius distance of the exterior probes from the hull.
    pub exterior_distance: f64,
    pub zero_tolerance: f64,
    pub exterior_minimum: f64,
}

impl Default for EnvelopeOracle {
    fn default() -> Self {
        Self {
            nodes: 201,
            random_profiles: 3,
            seed: None,
            oracle_tolerance: 1e-8,
            l: FRAC_1_SQRT_2,
            m: FRAC_1_SQRT_2,
            interior_samples: 100,
            exterior_samples: 100,
            exterior_distance: 0.05,
            zero_tolerance: 1e-9,
            exterior_minimum: 0.1,
        }
    }
}

impl Experiment for EnvelopeOracle {
    const NAME: &'static str = "envelope";
    const SUMMARY: &'static str = "monotone convex envelope against the LP oracle; two-valued example envelope";
    const STOCHASTIC: bool = true;

    fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn run(&self) -> Result<Outcome> {
        let mut r = rng(seed_of(self.seed)?);
        let mut profiles: Vec<(String, SampledFunction1D)> = Vec::new();
        let named = [
            Potential::LebwohlLasher,
            Potential::Power { p: 1.0 },
            Potential::Power { p: 2.0 },
            Potential::Power { p: 3.0 },
            Potential::QuarticWell { s: 0.5 },
            Potential::OneMinus,
        ];
        for p in &named {
            profiles.push((p.name(), SampledFunction1D::from_potential(p, self.nodes)?));
        }
        for k in 0..self.random_profiles {
            let knots = linspace(0.0, 1.0, 11);
            let vals: Vec<f64> = knots.iter().map(|_| r.random_range(-1.0..1.0)).collect();
            let pl = SampledFunction1D::new(knots, vals)?;
            profiles.push((format!("piecewise-linear-{k}"), SampledFunction1D::uniform(self.nodes, |t| pl.eval(t))?));
        }
        let mut t = Table::new("envelope_oracle", "envelope::monotone_convex_envelope", &["profile", "nodes", "max_abs_diff"]);
        let mut checks = Vec::new();
        for (name, h) in &profiles {
            let hull = monotone_convex_envelope(h);
            let lp = lp::monotone_convex_envelope_lp(h)?;
            let diff = hull.values().iter().zip(&lp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            t.push(vec![json!(name), json!(h.len()), json!(diff)]);
            checks.push(Check::at_most(&format!("lp-oracle {name}"), "envelope::monotone_convex_envelope", diff, self.oracle_tolerance));
        }

        let f = Potential::Noradial { l: self.l, m: self.m };
        let surface = relaxed_surface(&f, &SurfaceOptions::default())?;
        let env = DiskEnvelope::build(&surface)?;
        let zeros = noradial_zero_set(self.l, self.m);
        let corners: Vec<[f64; 2]> = zeros.iter().map(|q| q.disk()).collect();
        let mut nr = Table::new("noradial", "envelope::convex_envelope_disk", &["kind", "q1", "q2", "hull_distance", "value"]);
        let mut zero_max = 0.0f64;
        for c in &corners {
            let v = env.eval_disk(c[0], c[1]);
            zero_max = zero_max.max(v.abs());
            nr.push(vec![json!("corner"), json!(c[0]), json!(c[1]), json!(0.0), json!(v)]);
        }
        for _ in 0..self.interior_samples {
            let w: [f64; 4] = std::array::from_fn(|_| r.random_range(0.0..1.0));
            let s: f64 = w.iter().sum();
            let p = (0..4).fold([0.0, 0.0], |acc, k| {
                [acc[0] + w[k] / s * corners[k][0], acc[1] + w[k] / s * corners[k][1]]
            });
            let v = env.eval_disk(p[0], p[1]);
            zero_max = zero_max.max(v.abs());
            nr.push(vec![json!("interior"), json!(p[0]), json!(p[1]), json!(0.0), json!(v)]);
        }
        // disk coordinates are Frobenius distances scaled by 1/√2
        let delta = self.exterior_distance / SQRT_2;
        let hull = planar_hull(&corners);
        let mut outside_min = f64::INFINITY;
        for _ in 0..self.exterior_samples {
            let k = r.random_range(0..hull.len());
            let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
            let s = r.random_range(0.0..1.0);
            let e = [b[0] - a[0], b[1] - a[1]];
            let len = e[0].hypot(e[1]);
            let normal = [e[1] / len, -e[0] / len];
            let p = [a[0] + s * e[0] + delta * normal[0], a[1] + s * e[1] + delta * normal[1]];
            let d = distance_to_hull(&corners, p);
            let v = env.eval_disk(p[0], p[1]);
            outside_min = outside_min.min(v);
            nr.push(vec![json!("exterior"), json!(p[0]), json!(p[1]), json!(d * SQRT_2), json!(v)]);
        }
        checks.push(Check::at_most("vanishes on the hull", "envelope::convex_envelope_disk", zero_max, self.zero_tolerance));
        checks.push(Check::at_least("positive outside the hull", "envelope::convex_envelope_disk", outside_min, self.exterior_minimum));
        Ok(Outcome { tables: vec![t, nr], checks })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Homogenize2d {
    pub potential: NamedPotential,
    pub window: usize,
    pub angles: usize,
    pub radius: f64,
    /// Orders `√2|Q̄ - I/2|` of the targets, placed on the `q1` axis.
    pub orders: Vec<f64>,
    pub tolerance: f64,
    pub lebwohl_lasher_window: usize,
    pub lebwohl_lasher_tolerance: f64,
    pub seed: Option<u64>,
}

impl Default for Homogenize2d {
    fn default() -> Self {
        Self {
            potential: NamedPotential::QuarticWell { s: 0.5 },
            window: 8,
            angles: 64,
            radius: 0.05,
            orders: vec![0.0, 0.25, 0.5],
            tolerance: 0.05,
            lebwohl_lasher_window: 32,
            lebwohl_lasher_tolerance: 0.05,
            seed: None,
        }
    }
}

impl Experiment for Homogenize2d {
    const NAME: &'static str = "homogenize2d";
    const SUMMARY: &'static str = "annealed cell problem against the homogenized planar density";
    const STOCHASTIC: bool = true;

    fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn run(&self) -> Result<Outcome> {
        let seed = seed_of(self.seed)?;
        let f = self.potential.build()?;
        let hom = Homogenized2d::new(&f)?;
        let mut t = Table::new(
            "cell_problem",
            "homogenize::cell_problem_min",
            &["potential", "order", "q1", "q2", "window", "radius", "value", "predicted", "abs_diff", "mean_distance", "start"],
        );
        let mut checks = Vec::new();
        let row = |t: &mut Table, f: &Potential, q: QTensor2, window: usize, radius: f64, predicted: f64| -> Result<f64> {
            let spec = CellProblemSpec::new(q, radius, window, self.angles, Optimizer::Anneal(AnnealSchedule::seeded(seed)));
            let r = cell_problem_min(&spec, f)?;
            let d = q.disk();
            t.push(vec![
                json!(f.name()),
                json!(q.order()),
                json!(d[0]),
                json!(d[1]),
                json!(window),
                json!(radius),
                json!(r.value_per_volume),
                json!(predicted),
                json!((r.value_per_volume - predicted).abs()),
                json!(r.mean_distance),
                json!(r.start),
            ]);
            Ok(r.value_per_volume)
        };
        for &o in &self.orders {
            let q = QTensor2::from_disk(0.5 * o, 0.0)?;
            let predicted = hom.eval(&q);
            let v = row(&mut t, &f, q, self.window, self.radius, predicted)?;
            checks.push(Check::at_most(&format!("order {o}"), "homogenize::cell_problem_min", (v - predicted).abs(), self.tolerance));
        }
        if self.lebwohl_lasher_window > 0 {
            let ll = Potential::LebwohlLasher;
            let v = row(&mut t, &ll, QTensor2::half_identity(), self.lebwohl_lasher_window, SQRT_2, -4.0)?;
            checks.push(Check::at_most(
                "lebwohl-lasher relative",
                "homogenize::cell_problem_min",
                (v + 4.0).abs() / 4.0,
                self.lebwohl_lasher_tolerance,
            ));
        }
        Ok(Outcome { tables: vec![t], checks })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Homogenize3d {
    pub windows: Vec<usize>,
    pub check_window: usize,
    pub tolerance: f64,
    pub uniform_window: usize,
    pub uniform_tolerance: f64,
}

impl Default for Homogenize3d {
    fn default() -> Self {
        Self { windows: vec![4, 8, 16], check_window: 8, tolerance: 0.03, uniform_window: 16, uniform_tolerance: 0.01 }
    }
}

impl Experiment for Homogenize3d {
    const NAME: &'static str = "homogenize3d";
    const SUMMARY: &'static str = "periodic four-value recovery cell against 3/2 of the pairwise certificate sum";
    const STOCHASTIC: bool = false;

    fn run(&self) -> Result<Outcome> {
        let f = Potential::LebwohlLasher;
        let q = QTensor3::third_identity();
        let mut t = Table::new(
            "recovery_3d",
            "homogenize::recovery_3d",
            &["window", "density", "window_density", "predicted", "rel_error", "faces_checked"],
        );
        let mut checks = Vec::new();
        let mut windows = self.windows.clone();
        if !windows.contains(&self.check_window) {
            windows.push(self.check_window);
        }
        for &w in &windows {
            let r = recovery_3d(&q, &f, w, CellSource::Decomposition)?;
            let rel = (r.density - r.predicted).abs() / r.predicted.abs();
            t.push(vec![json!(w), json!(r.density), json!(r.window_density), json!(r.predicted), json!(rel), json!(r.faces_checked)]);
            if w == self.check_window {
                checks.push(Check::at_most("recovery density", "homogenize::recovery_3d", rel, self.tolerance));
            }
        }
        let uniform = DirectorField3::constant(Grid3::cube(self.uniform_window)?, Director3::axis(2));
        let spec = EnergySpec::new(f, Bonds::Nn3dQuarterNnn, Scaling::Bulk);
        let d = interior_density_3d(&spec, &uniform)?;
        let mut u = Table::new("uniform_3d", "energy::interior_density_3d", &["window", "density", "expected"]);
        u.push(vec![json!(self.uniform_window), json!(d), json!(-9.0)]);
        checks.push(Check::at_most("uniform density", "energy::interior_density_3d", (d + 9.0).abs() / 9.0, self.uniform_tolerance));
        Ok(Outcome { tables: vec![t, u], checks })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gradient {
    pub potential: NamedPotential,
    pub resolutions: Vec<usize>,
    pub quadrature_cells: usize,
    pub tolerance: f64,
}

impl Default for Gradient {
    fn default() -> Self {
        Self {
            potential: NamedPotential::LebwohlLasher {},
            resolutions: vec![32, 64, 128, 256],
            quadrature_cells: 256,
            tolerance: 0.02,
        }
    }
}

fn bump_angle(x: [f64; 2]) -> f64 {
    (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
}

fn bump_gradient(x: [f64; 2]) -> [f64; 2] {
    let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
    let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
    [2.0 * PI * cx * sy, 2.0 * PI * sx * cy]
}

impl Experiment for Gradient {
    const NAME: &'static str = "gradient";
    const SUMMARY: &'static str = "gradient-scaled energy of a smooth rotation field against (|h'(1)|/2)∫|∇Q|²";
    const STOCHASTIC: bool = false;

    fn run(&self) -> Result<Outcome> {
        let f = self.potential.build()?;
        let slope = f
            .h_derivative(1.0)
            .ok_or_else(|| Error::UnsupportedPotential(format!("{} has no derivative at 1", f.name())))?;
        let reference = 0.5 * slope.abs() * rotation_dirichlet(bump_gradient, &Rect::unit(), self.quadrature_cells);
        let spec = EnergySpec::new(f, Bonds::Nn2d, Scaling::FirstOrder);
        let mut t = Table::new("gradient", "energy::first_order_energy", &["n", "eps", "energy", "reference", "rel_error"]);
        let mut errs = Vec::new();
        for &n in &self.resolutions {
            let field = rotation_field(unit_grid(n)?, bump_angle);
            let e = first_order_energy(&spec, &field)?;
            let rel = (e - reference).abs() / reference;
            errs.push(rel);
            t.push(vec![json!(n), json!(1.0 / n as f64), json!(e), json!(reference), json!(rel)]);
        }
        let monotone = errs.windows(2).all(|w| w[1] < w[0]);
        let last = errs.last().copied().unwrap_or(f64::NAN);
        let checks = vec![
            Check::at_most("finest relative error", "energy::first_order_energy", last, self.tolerance),
            Check::equals("error decreases", "energy::first_order_energy", monotone as u8 as f64, 1.0),
        ];
        Ok(Outcome { tables: vec![t], checks })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Counterexample {
    pub resolutions: Vec<usize>,
    pub bound: f64,
}

impl Default for Counterexample {
    fn default() -> Self {
        Self { resolutions: vec![32, 64, 128, 256, 512], bound: 26.0 }
    }
}

impl Experiment for Counterexample {
    const NAME: &'static str = "counterexample";
    const SUMMARY: &'static str = "hedgehog energy under h = (1-x)², bounded uniformly, with the Lebwohl-Lasher contrast";
    const STOCHASTIC: bool = false;

    fn run(&self) -> Result<Outcome> {
        let one_minus = EnergySpec::new(Potential::OneMinus, Bonds::Nn2d, Scaling::FirstOrder);
        let ll = EnergySpec::new(Potential::LebwohlLasher, Bonds::Nn2d, Scaling::FirstOrder);
        let mut t = Table::new(
            "hedgehog",
            "energy::hedgehog_counterexample",
            &["n", "eps", "energy", "lebwohl_lasher_energy", "analytic_bound"],
        );
        let mut worst = f64::NEG_INFINITY;
        for &n in &self.resolutions {
            // the half-width-one square holds 2n + 1 sites per side
            let eps = 1.0 / n as f64;
            let field = hedgehog_field(eps)?;
            let e = first_order_energy(&one_minus, &field)?;
            let c = first_order_energy(&ll, &field)?;
            worst = worst.max(e);
            t.push(vec![json!(n), json!(eps), json!(e), json!(c), json!(hedgehog_bound())]);
        }
        Ok(Outcome {
            tables: vec![t],
            checks: vec![Check::at_most("uniform bound", "energy::hedgehog_counterexample", worst, self.bound)],
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Oscillation {
    /// `quartic-well` or `steep-well`.
    pub well: String,
    pub wells: Vec<f64>,
    pub resolutions: Vec<usize>,
    /// Constant twist rate of the underlying rotation field.
    pub twist: f64,
    pub tolerance: f64,
}

impl Default for Oscillation {
    fn default() -> Self {
        Self {
            well: "quartic-well".into(),
            wells: vec![0.5, FRAC_1_SQRT_2],
            resolutions: vec![64, 128, 256],
            twist: 0.5 * PI,
            tolerance: 0.05,
        }
    }
}

impl Experiment for Oscillation {
    const NAME: &'static str = "oscillation";
    const SUMMARY: &'static str = "checkerboard around a twisted field under nearest/next-nearest competition";
    const STOCHASTIC: bool = false;

    fn run(&self) -> Result<Outcome> {
        let mut t = Table::new(
            "oscillation",
            "energy::first_order_energy",
            &["well", "s", "n", "energy", "nearest", "next_nearest", "target", "rel_error"],
        );
        let mut checks = Vec::new();
        let k = self.twist;
        for &s in &self.wells {
            let f = match self.well.as_str() {
                "quartic-well" => NamedPotential::QuarticWell { s }.build()?,
                "steep-well" => NamedPotential::SteepWell { s }.build()?,
                other => return Err(Error::InvalidSpec(format!("unknown well `{other}`"))),
            };
            let spec = EnergySpec::new(f, Bonds::NnNnnCompetition, Scaling::FirstOrder);
            // (2/s²)∫|∇Q|² with |∇Q|² = 2s²|∇θ|² on the unit square
            let target = 4.0 * k * k;
            let mut last = f64::NAN;
            for &n in &self.resolutions {
                let field = oscillating_field(unit_grid(n)?, s, |x| k * x[0])?;
                let e = crate::energy::energy(&spec, &field)?;
                let rel = (e.total - target).abs() / target;
                last = rel;
                t.push(vec![
                    json!(self.well),
                    json!(s),
                    json!(n),
                    json!(e.total),
                    json!(e.classes[0].sum),
                    json!(e.classes[1].sum),
                    json!(target),
                    json!(rel),
                ]);
            }
            checks.push(Check::at_most(&format!("s = {s}"), "energy::first_order_energy", last, self.tolerance));
        }
        Ok(Outcome { tables: vec![t], checks })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Vortex {
    pub charges: Vec<i32>,
    /// Spacing of the defects along the horizontal axis.
    pub separation: f64,
    pub resolutions: Vec<usize>,
    pub radii: Vec<f64>,
    pub jacobian_resolution: usize,
    pub ball_radius: f64,
    pub residual_tolerance: f64,
    pub mass_tolerance: f64,
    pub slope_tolerance: f64,
}

impl Default for Vortex {
    fn default() -> Self {
        Self {
            charges: vec![1],
            separation: 0.4,
            resolutions: vec![64, 128, 256, 512],
            radii: vec![0.1, 0.2, 0.3],
            jacobian_resolution: 256,
            ball_radius: 0.3,
            residual_tolerance: 0.1,
            mass_tolerance: 0.05,
            slope_tolerance: 0.1,
        }
    }
}

impl Vortex {
    fn atoms(&self, grid: &Grid2) -> Result<AtomicMeasure> {
        let k = self.charges.len() as f64;
        let atoms = self
            .charges
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let x = self.separation * (j as f64 - 0.5 * (k - 1.0));
                (plaquette_center(grid, [x, 0.0]), *z)
            })
            .collect();
        AtomicMeasure::new(atoms)
    }

    fn grid(n: usize) -> Result<Grid2> {
        Grid2::with_resolution(Rect::square(0.5), n)
    }
}

impl Experiment for Vortex {
    const NAME: &'static str = "vortex";
    const SUMMARY: &'static str = "half-vortex degrees, Jacobian masses and the |log ε| slope of the defect energy";
    const STOCHASTIC: bool = false;

    fn run(&self) -> Result<Outcome> {
        if self.charges.is_empty() {
            return Err(Error::InvalidSpec("at least one charge is needed".into()));
        }
        let mut checks = Vec::new();
        let g = Self::grid(self.jacobian_resolution)?;
        let mu = self.atoms(&g)?;
        let field = multi_vortex_field(&g, &mu)?;
        let aux = aux_map(&affine_interpolate(&field));
        let eps = g.eps();
        let n_atoms = mu.atoms().len() as f64;
        let center = mu.atoms().iter().fold([0.0, 0.0], |c, (p, _)| [c[0] + p[0] / n_atoms, c[1] + p[1] / n_atoms]);

        let mut w = Table::new("winding", "vortex::winding_number", &["radius", "expected", "degree", "residual", "min_modulus"]);
        for &r in &self.radii {
            let dists: Vec<f64> = mu.atoms().iter().map(|(p, _)| (p[0] - center[0]).hypot(p[1] - center[1])).collect();
            if dists.iter().any(|d| (d - r).abs() < (CORE_EXCLUSION + 1.0) * eps) {
                continue;
            }
            let expected: i64 = mu.atoms().iter().zip(&dists).filter(|(_, d)| **d < r).map(|((_, z), _)| *z as i64).sum();
            let wn = winding_number(&aux, center, r)?;
            w.push(vec![json!(r), json!(expected), json!(wn.degree), json!(wn.residual), json!(wn.min_modulus)]);
            checks.push(Check::equals(&format!("degree at r = {r}"), "vortex::winding_number", wn.degree as f64, expected as f64));
            checks.push(Check::at_most(&format!("residual at r = {r}"), "vortex::winding_number", wn.residual, self.residual_tolerance));
        }

        let jac = jacobian_density(&aux);
        let min_sep = mu
            .atoms()
            .iter()
            .enumerate()
            .flat_map(|(i, a)| mu.atoms()[i + 1..].iter().map(move |b| (a.0[0] - b.0[0]).hypot(a.0[1] - b.0[1])))
            .fold(f64::INFINITY, f64::min);
        let ball = self.ball_radius.min(0.45 * min_sep);
        let mut m = Table::new("jacobian", "vortex::jacobian_density", &["x", "y", "charge", "ball_radius", "mass", "expected", "rel_error"]);
        let mut balls = 0.0;
        for (p, z) in mu.atoms() {
            let mass = jac.ball_mass(*p, ball);
            balls += mass;
            let expected = PI * *z as f64;
            let rel = (mass - expected).abs() / expected.abs();
            m.push(vec![json!(p[0]), json!(p[1]), json!(z), json!(ball), json!(mass), json!(expected), json!(rel)]);
            checks.push(Check::at_most(&format!("ball mass at ({:.4}, {:.4})", p[0], p[1]), "vortex::jacobian_density", rel, self.mass_tolerance));
        }
        m.push(vec![json!("total"), json!(""), json!(""), json!(""), json!(jac.total_mass()), json!(balls), json!((jac.total_mass() - balls).abs() / PI)]);

        let fit = concentration_fit(
            &self.resolutions.iter().map(|n| 1.0 / *n as f64).collect::<Vec<_>>(),
            |e| {
                let g = Self::grid((1.0 / e).round() as usize)?;
                multi_vortex_field(&g, &self.atoms(&g)?)
            },
        )?;
        let mut s = Table::new("concentration", "vortex::concentration_fit", &["eps", "log_inv_eps", "energy"]);
        for p in &fit.points {
            s.push(vec![json!(p.eps), json!(p.log_inv_eps), json!(p.energy)]);
        }
        let expected = PI * mu.total_variation() as f64;
        let mut f = Table::new("slope", "vortex::concentration_fit", &["slope", "intercept", "residual", "expected", "rel_error"]);
        let rel = (fit.slope - expected).abs() / expected;
        f.push(vec![json!(fit.slope), json!(fit.intercept), json!(fit.residual), json!(expected), json!(rel)]);
        checks.push(Check::at_most("slope", "vortex::concentration_fit", rel, self.slope_tolerance));
        Ok(Outcome { tables: vec![w, m, s, f], checks })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prefactor {
    pub radii: Vec<f64>,
    pub tolerance: f64,
}

impl Default for Prefactor {
    fn default() -> Self {
        Self { radii: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0], tolerance: 1e-3 }
    }
}

impl Experiment for Prefactor {
    const NAME: &'static str = "prefactor";
    const SUMMARY: &'static str = "long-range concentration prefactor for |ξ|^-6 coefficients";
    const STOCHASTIC: bool = false;

    fn run(&self) -> Result<Outcome> {
        // Σ_{ξ≠0} |ξ|⁻⁴ = 4 ζ(2) β(2)
        let limit = PI * 4.0 * (PI * PI / 6.0) * CATALAN;
        let mut t = Table::new("prefactor", "energy::long_range_prefactor", &["radius", "bonds", "prefactor", "limit", "rel_gap"]);
        let mut values = Vec::new();
        for &r in &self.radii {
            let c = LongRange::power_law(r);
            let v = long_range_prefactor(&c);
            values.push(v);
            t.push(vec![json!(r), json!(c.entries().len()), json!(v), json!(limit), json!((limit - v) / limit)]);
        }
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let nearest = long_range_prefactor(&LongRange::nearest());
        let last = values.last().copied().unwrap_or(f64::NAN);
        Ok(Outcome {
            tables: vec![t],
            checks: vec![
                Check::at_most("nearest neighbours give 4π", "energy::long_range_prefactor", (nearest - 4.0 * PI).abs(), 1e-12),
                Check::equals("partial sums increase", "energy::long_range_prefactor", increasing as u8 as f64, 1.0),
                Check::at_most("largest radius near the lattice sum", "energy::long_range_prefactor", (limit - last) / limit, self.tolerance),
            ],
        })
    }
}
