//! Windowed cell problem: minimum discrete energy per site over
//! angle-discretized configurations whose mean tensor stays near a target.

use std::f64::consts::{PI, SQRT_2};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{classes2, Bonds, EnergySpec, Scaling};
use crate::envelope::Potential;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::lattice::{DirectorField2, Grid2};
use crate::qtensor::{decompose2, q_of, Director2, QTensor2};

/// Largest configuration count the exhaustive optimizer accepts.
pub const EXHAUSTIVE_LIMIT: u64 = 10_000_000;
const PENALTY_START: f64 = 1.0;
const PENALTY_GROWTH: f64 = 10.0;
const PENALTY_STAGES: usize = 5;
const FEASIBLE_SLACK: f64 = 1e-9;
const POLISH_SWEEPS: usize = 100;
const CALIBRATION_MOVES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnealSchedule {
    /// Single-site proposals per temperature; `None` means `200 h²`.
    pub steps_per_temperature: Option<usize>,
    pub cooling: f64,
    pub temperatures: usize,
    pub seed: u64,
}

impl AnnealSchedule {
    pub fn seeded(seed: u64) -> Self {
        Self { steps_per_temperature: None, cooling: 0.95, temperatures: 20, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Optimizer {
    Exhaustive,
    Anneal(AnnealSchedule),
}

#[derive(Debug, Clone)]
pub struct CellProblemSpec {
    pub target: QTensor2,
    /// Radius of the admissible ball for the window mean.
    pub radius: f64,
    /// Side of the square window, in sites.
    pub window: usize,
    /// Directors are restricted to the angles `πk/M`.
    pub angles: usize,
    pub optimizer: Optimizer,
    pub bonds: Bonds,
}

impl CellProblemSpec {
    pub fn new(target: QTensor2, radius: f64, window: usize, angles: usize, optimizer: Optimizer) -> Self {
        Self { target, radius, window, angles, optimizer, bonds: Bonds::Nn2d }
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius <= SQRT_2) {
            return Err(Error::InvalidSpec(format!("radius {} outside (0, √2]", self.radius)));
        }
        if self.window < 2 {
            return Err(Error::InvalidSpec("window must have at least 2 sites per side".into()));
        }
        if self.angles < 4 {
            return Err(Error::InvalidSpec("at least 4 director angles are needed".into()));
        }
        if let Optimizer::Anneal(s) = &self.optimizer {
            if !(s.cooling > 0.0 && s.cooling < 1.0) || s.temperatures == 0 {
                return Err(Error::InvalidSpec("cooling must lie in (0, 1) with one or more temperatures".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellProblemResult {
    pub value_per_volume: f64,
    #[serde(skip)]
    pub best_config: DirectorField2,
    #[serde(serialize_with = "ser_q")]
    pub mean_achieved: QTensor2,
    /// `|⟨Q⟩ - Q̄|`.
    pub mean_distance: f64,
    /// `max(0, |⟨Q⟩ - Q̄| - ρ)`.
    pub constraint_residual: f64,
    pub seed: Option<u64>,
    /// Label of the start that produced the optimum.
    pub start: String,
    pub penalty: f64,
}

fn ser_q<S: serde::Serializer>(q: &QTensor2, s: S) -> std::result::Result<S::Ok, S::Error> {
    q.entries().serialize(s)
}

/// Grid of `h × h` sites at spacing `1/h`.
pub fn window_grid(h: usize) -> Result<Grid2> {
    let e = 1.0 / h as f64;
    let side = e * (h as f64 - 0.5);
    Grid2::new(Rect::new(0.0, 0.0, side, side)?, e)
}

struct Bond {
    offset: [i64; 2],
    weight: f64,
    table: usize,
}

/// Incremental state of a window configuration.
struct Model {
    h: i64,
    m: usize,
    tables: Vec<Vec<f64>>,
    bonds: Vec<Bond>,
    /// `(2Q11 - 1, 2Q12)` of each angle.
    aux: Vec<[f64; 2]>,
    target: [f64; 2],
    radius: f64,
}

impl Model {
    fn new(spec: &CellProblemSpec, f: &Potential) -> Result<Self> {
        let m = spec.angles;
        let dirs: Vec<Director2> = (0..m).map(|k| Director2::from_angle(PI * k as f64 / m as f64)).collect();
        let espec = EnergySpec::new(f.clone(), spec.bonds.clone(), Scaling::Bulk);
        let mut tables = Vec::new();
        let mut bonds = Vec::new();
        for c in classes2(&espec)? {
            let mut t = vec![0.0; m * m];
            for a in 0..m {
                for b in 0..m {
                    t[a * m + b] = c.term.eval2(&dirs[a], &dirs[b]);
                }
            }
            tables.push(t);
            for (d, w) in c.offsets.iter().zip(&c.weights) {
                bonds.push(Bond { offset: *d, weight: *w, table: tables.len() - 1 });
            }
        }
        let aux = dirs.iter().map(|u| { let q = q_of(u); [2.0 * q.q11() - 1.0, 2.0 * q.q12()] }).collect();
        let t = spec.target;
        Ok(Self {
            h: spec.window as i64,
            m,
            tables,
            bonds,
            aux,
            target: [2.0 * t.q11() - 1.0, 2.0 * t.q12()],
            radius: spec.radius,
        })
    }

    fn n(&self) -> usize {
        (self.h * self.h) as usize
    }

    fn idx(&self, i: i64, j: i64) -> Option<usize> {
        (i >= 0 && j >= 0 && i < self.h && j < self.h).then(|| (i * self.h + j) as usize)
    }

    fn energy(&self, c: &[usize]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.h {
            for j in 0..self.h {
                let a = c[(i * self.h + j) as usize];
                for b in &self.bonds {
                    if let Some(k) = self.idx(i + b.offset[0], j + b.offset[1]) {
                        s += b.weight * self.tables[b.table][a * self.m + c[k]];
                    }
                }
            }
        }
        s
    }

    /// Energy change when site `k` switches to angle `new`.
    fn delta(&self, c: &[usize], k: usize, new: usize) -> f64 {
        let old = c[k];
        if old == new {
            return 0.0;
        }
        let (i, j) = (k as i64 / self.h, k as i64 % self.h);
        let mut d = 0.0;
        for b in &self.bonds {
            let t = &self.tables[b.table];
            if let Some(n) = self.idx(i + b.offset[0], j + b.offset[1]) {
                d += b.weight * (t[new * self.m + c[n]] - t[old * self.m + c[n]]);
            }
            if let Some(n) = self.idx(i - b.offset[0], j - b.offset[1]) {
                d += b.weight * (t[c[n] * self.m + new] - t[c[n] * self.m + old]);
            }
        }
        d
    }

    fn aux_sum(&self, c: &[usize]) -> [f64; 2] {
        c.iter().fold([0.0, 0.0], |s, &a| [s[0] + self.aux[a][0], s[1] + self.aux[a][1]])
    }

    /// `|⟨Q⟩ - Q̄|_F` from the summed auxiliary coordinates.
    fn distance(&self, sum: [f64; 2]) -> f64 {
        let n = self.n() as f64;
        let d = [sum[0] / n - self.target[0], sum[1] / n - self.target[1]];
        // |ΔQ|_F² = 2 ΔQ11² + 2 ΔQ12² = (|ΔA|²) / 2
        (0.5 * (d[0] * d[0] + d[1] * d[1])).sqrt()
    }

    fn penalty(&self, sum: [f64; 2], lambda: f64) -> f64 {
        let x = (self.distance(sum) - self.radius).max(0.0);
        lambda * self.n() as f64 * x * x
    }

    fn snap(&self, u: &Director2) -> usize {
        let t = u.angle().rem_euclid(PI);
        ((t / PI * self.m as f64).round() as usize) % self.m
    }
}

struct Walker<'a> {
    model: &'a Model,
    config: Vec<usize>,
    energy: f64,
    sum: [f64; 2],
    lambda: f64,
}

impl<'a> Walker<'a> {
    fn new(model: &'a Model, config: Vec<usize>, lambda: f64) -> Self {
        let energy = model.energy(&config);
        let sum = model.aux_sum(&config);
        Self { model, config, energy, sum, lambda }
    }

    fn objective(&self) -> f64 {
        self.energy + self.model.penalty(self.sum, self.lambda)
    }

    fn proposal(&self, k: usize, new: usize) -> (f64, [f64; 2], f64) {
        let m = self.model;
        let de = m.delta(&self.config, k, new);
        let old = self.config[k];
        let sum = [
            self.sum[0] + m.aux[new][0] - m.aux[old][0],
            self.sum[1] + m.aux[new][1] - m.aux[old][1],
        ];
        let dobj = de + m.penalty(sum, self.lambda) - m.penalty(self.sum, self.lambda);
        (de, sum, dobj)
    }

    fn accept(&mut self, k: usize, new: usize, de: f64, sum: [f64; 2]) {
        self.config[k] = new;
        self.energy += de;
        self.sum = sum;
    }

    fn anneal(&mut self, s: &AnnealSchedule, rng: &mut ChaCha8Rng) {
        let n = self.model.n();
        let m = self.model.m;
        let steps = s.steps_per_temperature.unwrap_or(200 * n);
        let mut t0 = 0.0;
        let mut count = 0usize;
        for _ in 0..CALIBRATION_MOVES {
            let (k, new) = (rng.random_range(0..n), rng.random_range(0..m));
            let d = self.proposal(k, new).2;
            if d > 0.0 {
                t0 += d;
                count += 1;
            }
        }
        let mut temp = if count > 0 { t0 / count as f64 } else { 1e-3 };
        let mut best = (self.objective(), self.config.clone());
        for _ in 0..s.temperatures {
            for _ in 0..steps {
                let (k, new) = (rng.random_range(0..n), rng.random_range(0..m));
                let (de, sum, dobj) = self.proposal(k, new);
                if dobj <= 0.0 || rng.random_range(0.0..1.0) < (-dobj / temp).exp() {
                    self.accept(k, new, de, sum);
                }
            }
            if self.objective() < best.0 {
                best = (self.objective(), self.config.clone());
            }
            temp *= s.cooling;
        }
        if best.0 < self.objective() {
            *self = Walker::new(self.model, best.1, self.lambda);
        }
    }

    /// Coordinate descent: each site takes its best angle until no sweep
    /// improves the objective.
    fn polish(&mut self) {
        for _ in 0..POLISH_SWEEPS {
            let mut improved = false;
            for k in 0..self.model.n() {
                let mut choice = None;
                let mut best = -1e-14;
                for new in 0..self.model.m {
                    let (de, sum, dobj) = self.proposal(k, new);
                    if dobj < best {
                        best = dobj;
                        choice = Some((new, de, sum));
                    }
                }
                if let Some((new, de, sum)) = choice {
                    self.accept(k, new, de, sum);
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        // drop accumulated drift
        self.energy = self.model.energy(&self.config);
        self.sum = self.model.aux_sum(&self.config);
    }
}

struct Candidate {
    energy: f64,
    distance: f64,
    config: Vec<usize>,
    start: String,
    penalty: f64,
}

fn finish(
    spec: &CellProblemSpec,
    model: &Model,
    candidates: Vec<Candidate>,
    seed: Option<u64>,
) -> Result<CellProblemResult> {
    let feasible = |c: &Candidate| c.distance <= spec.radius + FEASIBLE_SLACK;
    let best = candidates
        .iter()
        .filter(|c| feasible(c))
        .fold(None::<&Candidate>, |b, c| match b {
            Some(b) if b.energy <= c.energy => Some(b),
            _ => Some(c),
        });
    let Some(best) = best else {
        let best_residual =
            candidates.iter().map(|c| c.distance - spec.radius).fold(f64::INFINITY, f64::min);
        return Err(Error::Infeasible { best_residual });
    };
    let grid = window_grid(spec.window)?;
    let values = best
        .config
        .iter()
        .map(|&a| Director2::from_angle(PI * a as f64 / model.m as f64))
        .collect();
    let field = DirectorField2::new(grid, values)?;
    let mean = QTensor2::mean(field.q_field().values()).expect("nonempty window");
    let n = model.n() as f64;
    Ok(CellProblemResult {
        value_per_volume: best.energy / n,
        best_config: field,
        mean_achieved: mean,
        mean_distance: best.distance,
        constraint_residual: (best.distance - spec.radius).max(0.0),
        seed,
        start: best.start.clone(),
        penalty: best.penalty,
    })
}

fn exhaustive(spec: &CellProblemSpec, model: &Model) -> Result<CellProblemResult> {
    let n = model.n();
    let total = (model.m as u64).checked_pow(n as u32).filter(|t| *t <= EXHAUSTIVE_LIMIT);
    if total.is_none() {
        return Err(Error::InvalidSpec(format!(
            "{}^{} configurations exceed the exhaustive limit",
            model.m, n
        )));
    }
    let mut c = vec![0usize; n];
    let mut best: Option<Candidate> = None;
    let mut closest = f64::INFINITY;
    loop {
        let d = model.distance(model.aux_sum(&c));
        closest = closest.min(d);
        if d <= spec.radius + FEASIBLE_SLACK {
            let e = model.energy(&c);
            if best.as_ref().map_or(true, |b| e < b.energy) {
                best = Some(Candidate { energy: e, distance: d, config: c.clone(), start: "exhaustive".into(), penalty: 0.0 });
            }
        }
        // odometer
        let mut k = 0;
        while k < n {
            c[k] += 1;
            if c[k] < model.m {
                break;
            }
            c[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    match best {
        Some(b) => finish(spec, model, vec![b], None),
        None => Err(Error::Infeasible { best_residual: closest - spec.radius }),
    }
}

fn mix(seed: u64, stage: usize, start: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((stage as u64) << 32 | start as u64)
}

/// Minimum of the free-boundary window energy per site subject to
/// `|⟨Q⟩ - Q̄| <= ρ`.
pub fn cell_problem_min(spec: &CellProblemSpec, f: &Potential) -> Result<CellProblemResult> {
    spec.validate()?;
    let model = Model::new(spec, f)?;
    let schedule = match spec.optimizer {
        Optimizer::Exhaustive => return exhaustive(spec, &model),
        Optimizer::Anneal(s) => s,
    };
    let n = model.n();
    let h = model.h;
    let dec = decompose2(&spec.target);
    let (u, v) = (model.snap(&dec.u), model.snap(&dec.v));
    let axis = model.snap(&spec.target.eigen().1);
    let mut candidates = Vec::new();
    let mut lambda = PENALTY_START;
    for stage in 0..PENALTY_STAGES {
        for start in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(schedule.seed, stage, start));
            let (label, init): (&str, Vec<usize>) = match start {
                0 => ("uniform", vec![axis; n]),
                1 => (
                    "checkerboard",
                    (0..n).map(|k| if (k as i64 / h + k as i64 % h) % 2 == 0 { u } else { v }).collect(),
                ),
                _ => ("random", (0..n).map(|_| rng.random_range(0..model.m)).collect()),
            };
            let mut w = Walker::new(&model, init, lambda);
            w.anneal(&schedule, &mut rng);
            w.polish();
            candidates.push(Candidate {
                energy: w.energy,
                distance: model.distance(w.sum),
                config: w.config,
                start: label.into(),
                penalty: lambda,
            });
        }
        lambda *= PENALTY_GROWTH;
    }
    finish(spec, &model, candidates, Some(schedule.seed))
}
