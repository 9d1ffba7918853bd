//! Discrete energies of director fields: bulk sums, the gradient-type
//! (first-order) and concentration scalings, the dual lower bound, and the
//! hedgehog harness.
//!
//! Every sum runs over ordered pairs of sites, so each unordered bond is
//! counted twice. Only bonds with both endpoints in the grid contribute.

use std::f64::consts::PI;

use serde::Serialize;

use crate::envelope::{fhat_radial, Potential};
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::lattice::{dual_interpolate, DirectorField2, DirectorField3, Grid2, Site3};
use crate::numeric::CompensatedSum;
use crate::qtensor::{Director2, Director3};

/// Weighted, symmetric set of long-range bond vectors `ξ ↦ c^ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRange {
    entries: Vec<([i64; 2], f64)>,
}

impl LongRange {
    /// Requires finite nonnegative weights, no zero vector, no duplicates,
    /// and `c^ξ = c^{ξ⊥}`.
    pub fn new(mut entries: Vec<([i64; 2], f64)>) -> Result<Self> {
        entries.sort_by_key(|a| a.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidSpec(format!("duplicate bond vector {:?}", w[0].0)));
            }
        }
        for (xi, c) in &entries {
            if *xi == [0, 0] || !c.is_finite() || *c < 0.0 {
                return Err(Error::InvalidSpec(format!("bad coefficient {c} for {xi:?}")));
            }
            let perp = [-xi[1], xi[0]];
            let partner = entries.binary_search_by(|e| e.0.cmp(&perp)).ok().map(|k| entries[k].1);
            if partner.map_or(true, |p| (p - c).abs() > 1e-12 * c.abs().max(1.0)) {
                return Err(Error::InvalidSpec(format!(
                    "coefficients not symmetric under rotation: {xi:?} vs {perp:?}"
                )));
            }
        }
        Ok(Self { entries })
    }

    /// `c = 1` on `±e1, ±e2`.
    pub fn nearest() -> Self {
        Self::new(vec![([1, 0], 1.0), ([-1, 0], 1.0), ([0, 1], 1.0), ([0, -1], 1.0)]).unwrap()
    }

    /// `c^ξ = |ξ|^-6` for `0 < |ξ| <= radius`.
    pub fn power_law(radius: f64) -> Self {
        let r = radius.floor() as i64;
        let mut e = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                let n2 = (a * a + b * b) as f64;
                if n2 > 0.0 && n2 <= radius * radius {
                    e.push(([a, b], n2.powi(-3)));
                }
            }
        }
        Self::new(e).unwrap()
    }

    pub fn entries(&self) -> &[([i64; 2], f64)] {
        &self.entries
    }
}

/// `π Σ_ξ |ξ|² c^ξ`, the concentration prefactor with long-range bonds.
pub fn long_range_prefactor(c: &LongRange) -> f64 {
    let mut s = CompensatedSum::new();
    for (xi, w) in &c.entries {
        s.add(((xi[0] * xi[0] + xi[1] * xi[1]) as f64) * w);
    }
    PI * s.value()
}

/// Which bonds interact.
#[derive(Debug, Clone)]
pub enum Bonds {
    /// Planar nearest neighbours.
    Nn2d,
    /// Spatial nearest neighbours plus next-nearest with weight 1/4.
    Nn3dQuarterNnn,
    /// Planar nearest neighbours with the potential, plus diagonal bonds
    /// with `1 - (u·v)²`.
    NnNnnCompetition,
    LongRange(LongRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// `Σ ε^N f`.
    Bulk,
    /// `Σ (f - inf f)`.
    FirstOrder,
    /// `Σ (f - inf f) / |log ε|`.
    Concentration,
}

#[derive(Debug, Clone)]
pub struct EnergySpec {
    pub potential: Potential,
    pub bonds: Bonds,
    pub scaling: Scaling,
}

impl EnergySpec {
    pub fn new(potential: Potential, bonds: Bonds, scaling: Scaling) -> Self {
        Self { potential, bonds, scaling }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BondClass {
    pub name: String,
    pub sum: f64,
    pub bonds: usize,
}

/// Total energy with per-class subtotals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub classes: Vec<BondClass>,
}

impl EnergyBreakdown {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("breakdown serialises")
    }

    pub fn bond_count(&self) -> usize {
        self.classes.iter().map(|c| c.bonds).sum()
    }
}

/// Either a planar or a spatial director field.
#[derive(Debug, Clone, Copy)]
pub enum AnyField<'a> {
    Planar(&'a DirectorField2),
    Spatial(&'a DirectorField3),
}

impl<'a> From<&'a DirectorField2> for AnyField<'a> {
    fn from(f: &'a DirectorField2) -> Self {
        AnyField::Planar(f)
    }
}

impl<'a> From<&'a DirectorField3> for AnyField<'a> {
    fn from(f: &'a DirectorField3) -> Self {
        AnyField::Spatial(f)
    }
}

const NN2: [[i64; 2]; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];
const NNN2: [[i64; 2]; 4] = [[1, 1], [-1, -1], [1, -1], [-1, 1]];
const NN3: [Site3; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];
const NNN3: [Site3; 12] = [
    [1, 1, 0],
    [-1, -1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [1, 0, 1],
    [-1, 0, -1],
    [1, 0, -1],
    [-1, 0, 1],
    [0, 1, 1],
    [0, -1, -1],
    [0, 1, -1],
    [0, -1, 1],
];

/// Pair term of a bond class, before scaling.
#[derive(Clone, Copy)]
pub(crate) enum Term<'a> {
    Potential(&'a Potential),
    OneMinusSquare,
}

impl Term<'_> {
    pub(crate) fn eval2(&self, u: &Director2, v: &Director2) -> f64 {
        match self {
            Term::Potential(p) => p.pair(u, v),
            Term::OneMinusSquare => {
                let d = u.dot(v);
                1.0 - d * d
            }
        }
    }

    fn eval3(&self, u: &Director3, v: &Director3) -> f64 {
        match self {
            Term::Potential(p) => p.pair3(u, v).expect("checked isotropic"),
            Term::OneMinusSquare => {
                let d = u.dot(v);
                1.0 - d * d
            }
        }
    }

    fn infimum(&self) -> Result<f64> {
        match self {
            Term::Potential(p) => p.inf_h().ok_or_else(|| {
                Error::UnsupportedPotential(format!("{} has no known infimum", p.name()))
            }),
            Term::OneMinusSquare => Ok(0.0),
        }
    }
}

pub(crate) struct Class<'a, O> {
    pub(crate) name: &'static str,
    pub(crate) offsets: Vec<O>,
    pub(crate) weights: Vec<f64>,
    pub(crate) term: Term<'a>,
}

pub(crate) fn classes2<'a>(spec: &'a EnergySpec) -> Result<Vec<Class<'a, [i64; 2]>>> {
    let pot = Term::Potential(&spec.potential);
    Ok(match &spec.bonds {
        Bonds::Nn2d => vec![Class { name: "nn", offsets: NN2.to_vec(), weights: vec![1.0; 4], term: pot }],
        Bonds::NnNnnCompetition => vec![
            Class { name: "nn", offsets: NN2.to_vec(), weights: vec![1.0; 4], term: pot },
            Class {
                name: "nnn",
                offsets: NNN2.to_vec(),
                weights: vec![1.0; 4],
                term: Term::OneMinusSquare,
            },
        ],
        Bonds::LongRange(c) => vec![Class {
            name: "long-range",
            offsets: c.entries.iter().map(|e| e.0).collect(),
            weights: c.entries.iter().map(|e| e.1).collect(),
            term: pot,
        }],
        Bonds::Nn3dQuarterNnn => {
            return Err(Error::DimensionMismatch("spatial bonds on a planar field".into()))
        }
    })
}

fn classes3<'a>(spec: &'a EnergySpec) -> Result<Vec<Class<'a, Site3>>> {
    spec.potential.require_isotropic()?;
    let pot = Term::Potential(&spec.potential);
    match &spec.bonds {
        Bonds::Nn3dQuarterNnn => Ok(vec![
            Class { name: "nn", offsets: NN3.to_vec(), weights: vec![1.0; 6], term: pot },
            Class { name: "nnn", offsets: NNN3.to_vec(), weights: vec![0.25; 12], term: pot },
        ]),
        _ => Err(Error::DimensionMismatch("planar bonds on a spatial field".into())),
    }
}

/// Maps a raw pair value to its scaled contribution.
fn scaler(scaling: Scaling, term: Term<'_>, eps: f64, dim: i32) -> Result<impl Fn(f64) -> f64> {
    let (shift, factor) = match scaling {
        Scaling::Bulk => (0.0, eps.powi(dim)),
        Scaling::FirstOrder => (term.infimum()?, 1.0),
        Scaling::Concentration => {
            if !(eps < 1.0) {
                return Err(Error::InvalidScaling(format!("concentration needs ε < 1, got {eps}")));
            }
            (term.infimum()?, 1.0 / eps.ln().abs())
        }
    };
    let shifted = scaling != Scaling::Bulk;
    Ok(move |v: f64| {
        if shifted {
            let d = v - shift;
            let d = if (-1e-12..0.0).contains(&d) { 0.0 } else { d };
            factor * d
        } else {
            factor * v
        }
    })
}

/// Evaluates the spec on a planar or spatial field.
pub fn energy<'a>(spec: &EnergySpec, field: impl Into<AnyField<'a>>) -> Result<EnergyBreakdown> {
    let mut classes = Vec::new();
    match field.into() {
        AnyField::Planar(f) => {
            let g = f.grid();
            for c in classes2(spec)? {
                let scale = scaler(spec.scaling, c.term, g.eps(), 2)?;
                let mut sum = CompensatedSum::new();
                let mut bonds = 0;
                for (i, u) in g.sites().zip(f.values()) {
                    for (d, w) in c.offsets.iter().zip(&c.weights) {
                        if let Some(v) = f.get([i[0] + d[0], i[1] + d[1]]) {
                            sum.add(w * scale(c.term.eval2(u, v)));
                            bonds += 1;
                        }
                    }
                }
                classes.push(BondClass { name: c.name.into(), sum: sum.value(), bonds });
            }
        }
        AnyField::Spatial(f) => {
            let g = f.grid();
            for c in classes3(spec)? {
                let scale = scaler(spec.scaling, c.term, g.eps(), 3)?;
                let mut sum = CompensatedSum::new();
                let mut bonds = 0;
                for (i, u) in g.sites().zip(f.values()) {
                    for (d, w) in c.offsets.iter().zip(&c.weights) {
                        if let Some(v) = f.get([i[0] + d[0], i[1] + d[1], i[2] + d[2]]) {
                            sum.add(w * scale(c.term.eval3(u, v)));
                            bonds += 1;
                        }
                    }
                }
                classes.push(BondClass { name: c.name.into(), sum: sum.value(), bonds });
            }
        }
    }
    let total = classes.iter().map(|c| c.sum).collect::<CompensatedSum>().value();
    Ok(EnergyBreakdown { total, classes })
}

/// `Σ ε^N w f` over ordered bonds.
pub fn bulk_energy<'a>(spec: &EnergySpec, field: impl Into<AnyField<'a>>) -> Result<EnergyBreakdown> {
    let spec = EnergySpec { scaling: Scaling::Bulk, ..spec.clone() };
    energy(&spec, field)
}

/// Unscaled `Σ w (f - inf f)` over ordered bonds.
pub fn first_order_energy<'a>(spec: &EnergySpec, field: impl Into<AnyField<'a>>) -> Result<f64> {
    let spec = EnergySpec { scaling: Scaling::FirstOrder, ..spec.clone() };
    Ok(energy(&spec, field)?.total)
}

/// `(1/|log ε|) Σ (1 - (u_i·u_j)²)` over ordered nearest-neighbour bonds.
pub fn concentration_energy(field: &DirectorField2) -> Result<f64> {
    let spec = EnergySpec::new(Potential::LebwohlLasher, Bonds::Nn2d, Scaling::Concentration);
    Ok(energy(&spec, field)?.total)
}

/// Mean over sites with a full neighbourhood of the unscaled weighted bond
/// sum starting at the site.
pub fn interior_density_3d(spec: &EnergySpec, field: &DirectorField3) -> Result<f64> {
    let classes = classes3(spec)?;
    let g = field.grid();
    let reach: Site3 = std::array::from_fn(|k| {
        classes.iter().flat_map(|c| c.offsets.iter()).map(|d| d[k].abs()).max().unwrap_or(0)
    });
    let mut total = CompensatedSum::new();
    let mut count = 0usize;
    for (i, u) in g.sites().zip(field.values()) {
        if (0..3).any(|k| i[k] - reach[k] < g.lo()[k] || i[k] + reach[k] > g.hi()[k]) {
            continue;
        }
        for c in &classes {
            for (d, w) in c.offsets.iter().zip(&c.weights) {
                let v = field.get([i[0] + d[0], i[1] + d[1], i[2] + d[2]]).expect("interior");
                total.add(w * c.term.eval3(u, v));
            }
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("no interior sites".into()));
    }
    Ok(total.value() / count as f64)
}

/// Planar analogue of [`interior_density_3d`].
pub fn interior_density_2d(spec: &EnergySpec, field: &DirectorField2) -> Result<f64> {
    let classes = classes2(spec)?;
    let g = field.grid();
    let reach: [i64; 2] = std::array::from_fn(|k| {
        classes.iter().flat_map(|c| c.offsets.iter()).map(|d| d[k].abs()).max().unwrap_or(0)
    });
    let mut total = CompensatedSum::new();
    let mut count = 0usize;
    for (i, u) in g.sites().zip(field.values()) {
        if (0..2).any(|k| i[k] - reach[k] < g.lo()[k] || i[k] + reach[k] > g.hi()[k]) {
            continue;
        }
        for c in &classes {
            for (d, w) in c.offsets.iter().zip(&c.weights) {
                let v = field.get([i[0] + d[0], i[1] + d[1]]).expect("interior");
                total.add(w * c.term.eval2(u, v));
            }
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("no interior sites".into()));
    }
    Ok(total.value() / count as f64)
}

/// Nearest-neighbour bulk energy and `2 Σ_k ε² f̂(Q^k)` over dual nodes.
pub fn dual_lower_bound(field: &DirectorField2, f: &Potential) -> Result<(f64, f64)> {
    f.require_isotropic()?;
    let spec = EnergySpec::new(f.clone(), Bonds::Nn2d, Scaling::Bulk);
    let lhs = energy(&spec, field)?.total;
    let e2 = field.grid().eps().powi(2);
    let dual = dual_interpolate(&field.q_field());
    let mut rhs = CompensatedSum::new();
    for n in dual.nodes() {
        rhs.add(2.0 * e2 * fhat_radial(f, &n.value)?);
    }
    Ok((lhs, rhs.value()))
}

/// Radial field `x/|x|` on `[-1, 1]²` with `e1` at the origin.
pub fn hedgehog_field(eps: f64) -> Result<DirectorField2> {
    let g = Grid2::new(Rect::square(1.0), eps)?;
    Ok(DirectorField2::from_fn(g, |i, x| {
        if i == [0, 0] {
            Director2::e1()
        } else {
            Director2::from_angle(x[1].atan2(x[0]))
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HedgehogRow {
    pub eps: f64,
    pub energy: f64,
}

/// Gradient-scaled energy of the hedgehog for each spacing.
pub fn hedgehog_counterexample(eps_list: &[f64], f: &Potential) -> Result<Vec<HedgehogRow>> {
    let spec = EnergySpec::new(f.clone(), Bonds::Nn2d, Scaling::FirstOrder);
    eps_list
        .iter()
        .map(|&eps| Ok(HedgehogRow { eps, energy: first_order_energy(&spec, &hedgehog_field(eps)?)? }))
        .collect()
}

/// Upper bound `8 + (√2 + 1)⁴ / 2` for the hedgehog with `h = (1 - x)²`.
pub fn hedgehog_bound() -> f64 {
    8.0 + (2f64.sqrt() + 1.0).powi(4) / 2.0
}

/// Planar rotation field `u = (cos θ, sin θ)`.
pub fn rotation_field(grid: Grid2, theta: impl Fn([f64; 2]) -> f64) -> DirectorField2 {
    DirectorField2::from_fn(grid, |_, x| Director2::from_angle(theta(x)))
}

/// Checkerboard around a rotation field: angle `θ + α` on even sites and
/// `θ - α` on odd ones, with `cos 2α = s` so that neighbours meet at
/// `|u·v| = s` and the dual field lies on the shell of order `s`.
pub fn oscillating_field(grid: Grid2, s: f64, theta: impl Fn([f64; 2]) -> f64) -> Result<DirectorField2> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidSpec(format!("well position {s} outside (0, 1)")));
    }
    let a = 0.5 * s.acos();
    Ok(DirectorField2::from_fn(grid, |i, x| {
        let sign = if (i[0] + i[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Director2::from_angle(theta(x) + sign * a)
    }))
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// `∫ |∇Q|² = 2 ∫ |∇θ|²` for a rotation field, by tensor Gauss-Legendre
/// quadrature on `cells × cells` panels.
pub fn rotation_dirichlet(grad_theta: impl Fn([f64; 2]) -> [f64; 2], region: &Rect, cells: usize) -> f64 {
    let (hx, hy) = (region.width() / cells as f64, region.height() / cells as f64);
    let mut s = CompensatedSum::new();
    for a in 0..cells {
        for b in 0..cells {
            let (cx, cy) = (region.x0 + (a as f64 + 0.5) * hx, region.y0 + (b as f64 + 0.5) * hy);
            for (xi, wi) in GAUSS3 {
                for (yj, wj) in GAUSS3 {
                    let g = grad_theta([cx + 0.5 * hx * xi, cy + 0.5 * hy * yj]);
                    s.add(wi * wj * 0.25 * hx * hy * 2.0 * (g[0] * g[0] + g[1] * g[1]));
                }
            }
        }
    }
    s.value()
}
