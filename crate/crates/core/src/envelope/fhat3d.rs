//! Four-director relaxation in three dimensions and its convex envelope on
//! planar slices of the eigenvalue simplex.
//!
//! The constrained minimum is searched with a quadratic penalty on the mean
//! constraint, quasi-Newton descent over unnormalised directors, and a final
//! Gauss-Newton projection onto the constraint set. Results are upper
//! estimates backed by an explicit feasible quadruple.

use nalgebra::{SMatrix, SVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hull::LowerHull;
use super::potential::Potential;
use crate::error::{Error, Result};
use crate::qtensor::{decompose3, Director3, QTensor3};

type V12 = SVector<f64, 12>;
type M12 = SMatrix<f64, 12, 12>;

/// Constraint residual (Frobenius) accepted as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
const PENALTY_START: f64 = 10.0;
const PENALTY_GROWTH: f64 = 10.0;
const PENALTY_STAGES: usize = 5;
const DEFAULT_SLICE_DIVISIONS: usize = 6;

/// Search effort for [`fhat_3d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fhat3dBudget {
    /// Number of multistart runs (the first starts from the explicit
    /// decomposition).
    pub starts: usize,
    pub seed: u64,
    /// Quasi-Newton iterations per penalty stage.
    pub max_iter: usize,
}

impl Default for Fhat3dBudget {
    fn default() -> Self {
        Self { starts: 12, seed: 0, max_iter: 400 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fhat3dResult {
    pub value: f64,
    /// Canonical directors sorted lexicographically.
    pub certificate: [Director3; 4],
    pub residual: f64,
}

fn pair_sum(f: &Potential, u: &[[f64; 3]; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            s += f.h(dot(&u[i], &u[j]).abs()).expect("isotropic");
        }
    }
    s
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit(w: &[f64]) -> ([f64; 3], f64) {
    let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    ([w[0] / n, w[1] / n, w[2] / n], n)
}

fn directors(w: &V12) -> ([[f64; 3]; 4], [f64; 4]) {
    let mut u = [[0.0; 3]; 4];
    let mut n = [0.0; 4];
    for i in 0..4 {
        let (d, len) = unit(&w.as_slice()[3 * i..3 * i + 3]);
        u[i] = d;
        n[i] = len;
    }
    (u, n)
}

fn mean(u: &[[f64; 3]; 4]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for d in u {
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += 0.25 * d[a] * d[b];
            }
        }
    }
    m
}

fn residual(u: &[[f64; 3]; 4], q: &[[f64; 3]; 3]) -> f64 {
    let m = mean(u);
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            s += (m[a][b] - q[a][b]).powi(2);
        }
    }
    s.sqrt()
}

/// Penalised objective and its gradient with respect to the unnormalised
/// directors.
fn objective(f: &Potential, q: &[[f64; 3]; 3], lambda: f64, w: &V12) -> (f64, V12) {
    let (u, n) = directors(w);
    let mut gu = [[0.0; 3]; 4];
    let mut val = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            let x = dot(&u[i], &u[j]);
            val += f.h(x.abs()).expect("isotropic");
            let mut d = f.h_derivative(x.abs()).expect("isotropic");
            if !d.is_finite() {
                d = 0.0;
            }
            let g = d * x.signum();
            for a in 0..3 {
                gu[i][a] += g * u[j][a];
                gu[j][a] += g * u[i][a];
            }
        }
    }
    let m = mean(&u);
    let mut diff = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            diff[a][b] = m[a][b] - q[a][b];
            val += 0.5 * lambda * diff[a][b] * diff[a][b];
        }
    }
    let mut grad = V12::zeros();
    for i in 0..4 {
        for a in 0..3 {
            gu[i][a] += 0.5 * lambda * (0..3).map(|b| diff[a][b] * u[i][b]).sum::<f64>();
        }
        let radial = dot(&gu[i], &u[i]);
        for a in 0..3 {
            grad[3 * i + a] = (gu[i][a] - radial * u[i][a]) / n[i];
        }
    }
    (val, grad)
}

fn bfgs(f: &Potential, q: &[[f64; 3]; 3], lambda: f64, mut w: V12, max_iter: usize) -> V12 {
    let mut hinv = M12::identity();
    let (mut fx, mut g) = objective(f, q, lambda, &w);
    for _ in 0..max_iter {
        if g.norm() < 1e-12 {
            break;
        }
        let mut p = -(hinv * g);
        if p.dot(&g) >= 0.0 {
            hinv = M12::identity();
            p = -g;
        }
        let slope = p.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let wn = w + p * step;
            let (fn_, gn) = objective(f, q, lambda, &wn);
            if fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((wn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((wn, fn_, gn)) = accepted else { break };
        let s = wn - w;
        let y = gn - g;
        let sy = s.dot(&y);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let i = M12::identity();
            hinv = (i - s * y.transpose() * rho) * hinv * (i - y * s.transpose() * rho)
                + s * s.transpose() * rho;
        }
        let improvement = fx - fn_;
        w = wn;
        fx = fn_;
        g = gn;
        // keep the unnormalised directors near the unit sphere
        let (u, _) = directors(&w);
        for i in 0..4 {
            for a in 0..3 {
                w[3 * i + a] = u[i][a];
            }
        }
        if improvement.abs() < 1e-16 * (1.0 + fx.abs()) {
            break;
        }
    }
    w
}

/// Gauss-Newton projection onto `(1/4) Σ u⊗u = Q` with minimum-norm steps.
fn project(q: &[[f64; 3]; 3], mut u: [[f64; 3]; 4]) -> [[f64; 3]; 4] {
    const IDX: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    for _ in 0..60 {
        if residual(&u, q) < 1e-14 {
            break;
        }
        let m = mean(&u);
        let mut r = SVector::<f64, 6>::zeros();
        let mut jac = SMatrix::<f64, 6, 12>::zeros();
        for (k, &(a, b)) in IDX.iter().enumerate() {
            let wgt = if a == b { 1.0 } else { std::f64::consts::SQRT_2 };
            r[k] = wgt * (m[a][b] - q[a][b]);
            for i in 0..4 {
                for c in 0..3 {
                    let mut d = 0.0;
                    if c == a {
                        d += u[i][b];
                    }
                    if c == b {
                        d += u[i][a];
                    }
                    jac[(k, 3 * i + c)] = 0.25 * wgt * d;
                }
            }
        }
        let mut tangent = SMatrix::<f64, 12, 12>::zeros();
        for i in 0..4 {
            for a in 0..3 {
                for b in 0..3 {
                    let id = if a == b { 1.0 } else { 0.0 };
                    tangent[(3 * i + a, 3 * i + b)] = id - u[i][a] * u[i][b];
                }
            }
        }
        let jac = jac * tangent;
        let Ok(pinv) = jac.pseudo_inverse(1e-10) else { break };
        let step = pinv * r;
        let before = residual(&u, q);
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..30 {
            let cand: [[f64; 3]; 4] = std::array::from_fn(|i| {
                unit(&std::array::from_fn::<f64, 3, _>(|c| u[i][c] - t * step[3 * i + c])).0
            });
            if residual(&cand, q) < before {
                next = Some(cand);
                break;
            }
            t *= 0.5;
        }
        let Some(next) = next else { break };
        u = next;
    }
    u
}

fn canonical_certificate(u: &[[f64; 3]; 4]) -> Option<[Director3; 4]> {
    let mut dirs = Vec::with_capacity(4);
    for d in u {
        dirs.push(Director3::from_array(unit(d).0).ok()?.canonical());
    }
    dirs.sort_by(|a, b| lex(&a.as_array(), &b.as_array()));
    Some([dirs[0], dirs[1], dirs[2], dirs[3]])
}

fn lex(a: &[f64; 3], b: &[f64; 3]) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2]))
}

fn rotation(axis: &[f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    let [x, y, z] = *axis;
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

fn apply(r: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [dot(&r[0], v), dot(&r[1], v), dot(&r[2], v)]
}

/// Upper estimate of `min { Σ_{i<j} f(u_i, u_j) : (1/4) Σ u_i⊗u_i = Q }`
/// with a feasible certificate. Deterministic for a fixed seed.
pub fn fhat_3d(f: &Potential, q: &QTensor3, budget: Fhat3dBudget) -> Result<Fhat3dResult> {
    f.require_isotropic()?;
    let target = q.matrix();
    let base = decompose3(q);
    let base_u = base.dirs.map(|d| d.as_array());
    let (_, frame) = q.eigen();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);

    let mut candidates: Vec<[[f64; 3]; 4]> = vec![base_u];
    for start in 0..budget.starts.max(1) {
        let init: [[f64; 3]; 4] = if start == 0 {
            base_u
        } else if start % 2 == 1 {
            let axis = frame[rng.random_range(0..3)];
            let r = rotation(&axis, rng.random_range(0.0..std::f64::consts::PI));
            base_u.map(|d| {
                let v = apply(&r, &d);
                let noise: [f64; 3] = std::array::from_fn(|_| 0.3 * rng.random_range(-1.0..1.0));
                unit(&[v[0] + noise[0], v[1] + noise[1], v[2] + noise[2]]).0
            })
        } else {
            std::array::from_fn(|_| loop {
                let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let n = dot(&v, &v);
                if n > 1e-4 && n <= 1.0 {
                    break unit(&v).0;
                }
            })
        };
        let mut w = V12::from_iterator(init.iter().flatten().copied());
        let mut lambda = PENALTY_START;
        for _ in 0..PENALTY_STAGES {
            w = bfgs(f, &target, lambda, w, budget.max_iter);
            lambda *= PENALTY_GROWTH;
        }
        candidates.push(project(&target, directors(&w).0));
    }

    let mut best: Option<Fhat3dResult> = None;
    let mut best_residual = f64::INFINITY;
    for u in &candidates {
        let res = residual(u, &target);
        best_residual = best_residual.min(res);
        if res > FEASIBILITY_TOL {
            continue;
        }
        let Some(cert) = canonical_certificate(u) else { continue };
        let value = pair_sum(f, &cert.map(|d| d.as_array()));
        let cand = Fhat3dResult { value, certificate: cert, residual: res };
        let better = match &best {
            None => true,
            Some(b) => match value.total_cmp(&b.value) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => {
                    let ka = cert.map(|d| d.as_array());
                    let kb = b.certificate.map(|d| d.as_array());
                    ka.iter().zip(&kb).map(|(x, y)| lex(x, y)).find(|o| o.is_ne())
                        == Some(std::cmp::Ordering::Less)
                }
            },
        };
        if better {
            best = Some(cand);
        }
    }
    best.ok_or(Error::OptimizationFailure { best_residual })
}

/// Planar slice `{ R diag(λ) Rᵀ : λ in the probability simplex }` of the
/// tensor set for a fixed orthonormal frame `R`; the homogenized density
/// is only tabulated on such slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSlice {
    /// Rows are the frame vectors.
    pub frame: [[f64; 3]; 3],
    pub divisions: usize,
}

impl SimplexSlice {
    /// Slice through `q` in its own eigenframe.
    pub fn through(q: &QTensor3, divisions: usize) -> Self {
        Self { frame: q.eigen().1, divisions }
    }

    fn tensor(&self, l: [f64; 3]) -> Result<QTensor3> {
        let mut m = [[0.0; 3]; 3];
        for (k, e) in self.frame.iter().enumerate() {
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += l[k] * e[a] * e[b];
                }
            }
        }
        QTensor3::from_matrix(m)
    }

    /// Simplex coordinates of `q` in this frame.
    pub fn coordinates(&self, q: &QTensor3) -> [f64; 3] {
        let m = q.matrix();
        self.frame.map(|e| {
            let me = [dot(&m[0], &e), dot(&m[1], &e), dot(&m[2], &e)];
            dot(&e, &me)
        })
    }

    /// Tabulated relaxation on the slice nodes plus the extra points.
    pub fn tabulate(
        &self,
        f: &Potential,
        budget: Fhat3dBudget,
        extra: &[[f64; 3]],
    ) -> Result<Vec<([f64; 3], f64)>> {
        let n = self.divisions.max(1);
        let mut pts = Vec::new();
        for i in 0..=n {
            for j in 0..=n - i {
                let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                pts.push([a, b, (1.0 - a - b).max(0.0)]);
            }
        }
        pts.extend_from_slice(extra);
        pts.iter()
            .map(|l| Ok((*l, fhat_3d(f, &self.tensor(*l)?, budget)?.value)))
            .collect()
    }

    /// `(3/2)` times the convex envelope of the tabulated relaxation at `q`.
    pub fn homogenized(&self, f: &Potential, q: &QTensor3, budget: Fhat3dBudget) -> Result<f64> {
        let l = self.coordinates(q);
        let table = self.tabulate(f, budget, &[l])?;
        let lifted: Vec<[f64; 3]> = table.iter().map(|(l, v)| [l[0], l[1], *v]).collect();
        let hull = LowerHull::build(&lifted)?;
        let own = table.last().map(|(_, v)| *v).unwrap_or(f64::INFINITY);
        Ok(1.5 * hull.eval(l[0], l[1]).min(own))
    }
}

/// Upper estimate of the homogenized spatial density at `q`, using the
/// eigenvalue-simplex slice through `q`.
pub fn f_hom_3d(f: &Potential, q: &QTensor3, budget: Fhat3dBudget) -> Result<f64> {
    SimplexSlice::through(q, DEFAULT_SLICE_DIVISIONS).homogenized(f, q, budget)
}
