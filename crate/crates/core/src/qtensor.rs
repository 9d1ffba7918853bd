//! Q-tensor algebra in two and three dimensions.
//!
//! A director `u` enters the energies only through `u ⊗ u`, so every
//! construction here is invariant under `u -> -u`. Order-parameter tensors
//! live in `K = {Q symmetric, Q >= 0, tr Q = 1}`.

use crate::error::{Error, Result};

pub const CONSTRUCTION_TOL: f64 = 1e-12;
pub const MEMBERSHIP_TOL: f64 = 1e-9;
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Largest deviatoric norm `|Q - I/2|` allowed in 2D.
pub const MAX_DEVIATORIC_2D: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn unit_or_err(norm_sq: f64) -> Result<Option<f64>> {
    let norm = norm_sq.sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > MEMBERSHIP_TOL {
        return Err(Error::InvalidDirector { norm });
    }
    if (norm_sq - 1.0).abs() <= CONSTRUCTION_TOL {
        Ok(None)
    } else {
        Ok(Some(norm))
    }
}

/// Unit vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Director2 {
    x: f64,
    y: f64,
}

impl Director2 {
    /// Accepts vectors whose norm is within `MEMBERSHIP_TOL` of one and
    /// renormalises them when needed.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        match unit_or_err(x * x + y * y)? {
            None => Ok(Self { x, y }),
            Some(n) => Ok(Self { x: x / n, y: y / n }),
        }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    pub fn e1() -> Self {
        Self { x: 1.0, y: 0.0 }
    }

    pub fn e2() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn angle(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn flipped(&self) -> Self {
        Self { x: -self.x, y: -self.y }
    }

    pub fn perp(&self) -> Self {
        Self { x: -self.y, y: self.x }
    }

    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c * self.x - s * self.y, y: s * self.x + c * self.y }
    }

    /// Representative with nonnegative first nonzero component; signed
    /// zeros are normalised to `+0.0`.
    pub fn canonical(&self) -> Self {
        let flip = self.x < 0.0 || (self.x == 0.0 && self.y < 0.0);
        let (x, y) = if flip { (-self.x, -self.y) } else { (self.x, self.y) };
        Self { x: x + 0.0, y: y + 0.0 }
    }
}

/// Unit vector in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Director3 {
    v: [f64; 3],
}

impl Director3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        match unit_or_err(x * x + y * y + z * z)? {
            None => Ok(Self { v: [x, y, z] }),
            Some(n) => Ok(Self { v: [x / n, y / n, z / n] }),
        }
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { v: [st * cp, st * sp, ct] }
    }

    pub fn axis(k: usize) -> Self {
        let mut v = [0.0; 3];
        v[k] = 1.0;
        Self { v }
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.v
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.v[0] * other.v[0] + self.v[1] * other.v[1] + self.v[2] * other.v[2]
    }

    pub fn flipped(&self) -> Self {
        Self { v: [-self.v[0], -self.v[1], -self.v[2]] }
    }

    pub fn canonical(&self) -> Self {
        let first = self.v.iter().copied().find(|c| *c != 0.0).unwrap_or(0.0);
        let s = if first < 0.0 { -1.0 } else { 1.0 };
        Self { v: [s * self.v[0] + 0.0, s * self.v[1] + 0.0, s * self.v[2] + 0.0] }
    }
}

/// Result of a membership test for `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
}

fn membership(trace: f64, min_eigenvalue: f64) -> Membership {
    let trace_defect = trace - 1.0;
    Membership {
        inside: trace_defect.abs() <= MEMBERSHIP_TOL && min_eigenvalue >= -MEMBERSHIP_TOL,
        trace_defect,
        min_eigenvalue,
    }
}

/// Membership of a (symmetrised) 2×2 matrix in `K`.
pub fn in_k2(m: [[f64; 2]; 2]) -> Membership {
    let b = 0.5 * (m[0][1] + m[1][0]);
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let rad = (0.5 * (m[0][0] - m[1][1])).hypot(b);
    membership(m[0][0] + m[1][1], half_tr - rad)
}

/// Membership of a (symmetrised) 3×3 matrix in `K`.
pub fn in_k3(m: [[f64; 3]; 3]) -> Membership {
    let s = symmetrize3(m);
    let (vals, _) = eigen_sym3(&s);
    membership(s[0][0] + s[1][1] + s[2][2], vals[0])
}

fn symmetrize3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut s = m;
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    s
}

/// Symmetric 2×2 order-parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTensor2 {
    q11: f64,
    q12: f64,
    q22: f64,
}

impl QTensor2 {
    pub fn new(q11: f64, q12: f64, q22: f64) -> Result<Self> {
        let m = in_k2([[q11, q12], [q12, q22]]);
        if !m.inside {
            return Err(Error::InvalidQTensor {
                trace_defect: m.trace_defect,
                min_eigenvalue: m.min_eigenvalue,
            });
        }
        Ok(Self { q11, q12, q22 })
    }

    #[cfg(test)]
    pub(crate) fn raw(q11: f64, q12: f64, q22: f64) -> Self {
        Self { q11, q12, q22 }
    }

    pub fn half_identity() -> Self {
        Self { q11: 0.5, q12: 0.0, q22: 0.5 }
    }

    /// Tensor with deviatoric coordinates `(q1, q2) = (Q11 - 1/2, Q12)`;
    /// the admissible set is the disk of radius 1/2.
    pub fn from_disk(q1: f64, q2: f64) -> Result<Self> {
        Self::new(0.5 + q1, q2, 0.5 - q1)
    }

    /// Ordered tensor `u ⊗ u` rotated to angle `theta`, scaled towards
    /// `I/2` so that `sqrt(2) |Q - I/2| = t`.
    pub fn on_shell(t: f64, theta: f64) -> Result<Self> {
        let r = 0.5 * t;
        Self::from_disk(r * (2.0 * theta).cos(), r * (2.0 * theta).sin())
    }

    pub fn q11(&self) -> f64 {
        self.q11
    }

    pub fn q12(&self) -> f64 {
        self.q12
    }

    pub fn q22(&self) -> f64 {
        self.q22
    }

    pub fn entries(&self) -> [f64; 3] {
        [self.q11, self.q12, self.q22]
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.q11, self.q12], [self.q12, self.q22]]
    }

    pub fn trace(&self) -> f64 {
        self.q11 + self.q22
    }

    pub fn disk(&self) -> [f64; 2] {
        [0.5 * (self.q11 - self.q22), self.q12]
    }

    /// Frobenius norm of `Q - I/2`.
    pub fn deviatoric_norm(&self) -> f64 {
        let a = self.q11 - 0.5;
        let d = self.q22 - 0.5;
        (a * a + d * d + 2.0 * self.q12 * self.q12).sqrt()
    }

    /// `sqrt(2) |Q - I/2|`, the order parameter in `[0, 1]`.
    pub fn order(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.deviatoric_norm()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.q11 * self.q11 + 2.0 * self.q12 * self.q12 + self.q22 * self.q22
    }

    pub fn distance_sq(&self, other: &Self) -> f64 {
        let a = self.q11 - other.q11;
        let b = self.q12 - other.q12;
        let d = self.q22 - other.q22;
        a * a + 2.0 * b * b + d * d
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn average(&self, other: &Self) -> Self {
        Self {
            q11: 0.5 * (self.q11 + other.q11),
            q12: 0.5 * (self.q12 + other.q12),
            q22: 0.5 * (self.q22 + other.q22),
        }
    }

    /// Arithmetic mean; `None` on an empty input.
    pub fn mean<'a, I: IntoIterator<Item = &'a QTensor2>>(items: I) -> Option<Self> {
        let mut acc = [0.0; 3];
        let mut n = 0usize;
        for q in items {
            acc[0] += q.q11;
            acc[1] += q.q12;
            acc[2] += q.q22;
            n += 1;
        }
        (n > 0).then(|| {
            let k = 1.0 / n as f64;
            Self { q11: acc[0] * k, q12: acc[1] * k, q22: acc[2] * k }
        })
    }

    /// Eigenpairs `(lambda, n1)` with `lambda >= 1/2` the top eigenvalue;
    /// the other pair is `(tr - lambda, n1^perp)`.
    pub fn eigen(&self) -> (f64, Director2) {
        let [q1, q2] = self.disk();
        let r = q1.hypot(q2);
        let phi = if r == 0.0 { 0.0 } else { q2.atan2(q1) };
        (0.5 * self.trace() + r, Director2::from_angle(0.5 * phi))
    }
}

/// Symmetric 3×3 order-parameter tensor stored as the upper triangle
/// `(11, 12, 13, 22, 23, 33)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTensor3 {
    m: [f64; 6],
}

impl QTensor3 {
    pub fn new(upper: [f64; 6]) -> Result<Self> {
        let q = Self { m: upper };
        let mem = in_k3(q.matrix());
        if !mem.inside {
            return Err(Error::InvalidQTensor {
                trace_defect: mem.trace_defect,
                min_eigenvalue: mem.min_eigenvalue,
            });
        }
        Ok(q)
    }

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let s = symmetrize3(m);
        Self::new([s[0][0], s[0][1], s[0][2], s[1][1], s[1][2], s[2][2]])
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new([a, 0.0, 0.0, b, 0.0, c])
    }

    pub fn third_identity() -> Self {
        let t = 1.0 / 3.0;
        Self { m: [t, 0.0, 0.0, t, 0.0, t] }
    }

    pub fn upper(&self) -> [f64; 6] {
        self.m
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let m = &self.m;
        [[m[0], m[1], m[2]], [m[1], m[3], m[4]], [m[2], m[4], m[5]]]
    }

    pub fn trace(&self) -> f64 {
        self.m[0] + self.m[3] + self.m[5]
    }

    pub fn frobenius_sq(&self) -> f64 {
        let m = &self.m;
        m[0] * m[0] + m[3] * m[3] + m[5] * m[5] + 2.0 * (m[1] * m[1] + m[2] * m[2] + m[4] * m[4])
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for (k, w) in [1.0, 2.0, 2.0, 1.0, 2.0, 1.0].iter().enumerate() {
            let d = self.m[k] - other.m[k];
            s += w * d * d;
        }
        s.sqrt()
    }

    /// Eigenvalues in ascending order with matching orthonormal eigenvectors.
    pub fn eigen(&self) -> ([f64; 3], [[f64; 3]; 3]) {
        eigen_sym3(&self.matrix())
    }
}

/// Directors whose rank-one tensors form an order-parameter tensor.
pub trait Director: Copy {
    type Tensor;
    fn tensor(&self) -> Self::Tensor;
    fn pair_tensor(&self, other: &Self) -> Self::Tensor;
}

impl Director for Director2 {
    type Tensor = QTensor2;

    fn tensor(&self) -> QTensor2 {
        QTensor2 { q11: self.x * self.x, q12: self.x * self.y, q22: self.y * self.y }
    }

    fn pair_tensor(&self, other: &Self) -> QTensor2 {
        QTensor2 {
            q11: 0.5 * (self.x * self.x + other.x * other.x),
            q12: 0.5 * (self.x * self.y + other.x * other.y),
            q22: 0.5 * (self.y * self.y + other.y * other.y),
        }
    }
}

impl Director for Director3 {
    type Tensor = QTensor3;

    fn tensor(&self) -> QTensor3 {
        let v = &self.v;
        QTensor3 { m: [v[0] * v[0], v[0] * v[1], v[0] * v[2], v[1] * v[1], v[1] * v[2], v[2] * v[2]] }
    }

    fn pair_tensor(&self, other: &Self) -> QTensor3 {
        let (a, b) = (&self.v, &other.v);
        let p = |i: usize, j: usize| 0.5 * (a[i] * a[j] + b[i] * b[j]);
        QTensor3 { m: [p(0, 0), p(0, 1), p(0, 2), p(1, 1), p(1, 2), p(2, 2)] }
    }
}

/// `u ⊗ u`.
pub fn q_of<D: Director>(u: &D) -> D::Tensor {
    u.tensor()
}

/// `(u ⊗ u + v ⊗ v) / 2`.
pub fn midpoint<D: Director>(u: &D, v: &D) -> D::Tensor {
    u.pair_tensor(v)
}

/// Pair of directors with `Q = (u ⊗ u + v ⊗ v) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition2 {
    pub u: Director2,
    pub v: Director2,
}

/// Quadruple of directors with `Q = (1/4) Σ u_k ⊗ u_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition3 {
    pub dirs: [Director3; 4],
}

impl Decomposition3 {
    pub fn mean_tensor(&self) -> QTensor3 {
        mean_of_directors3(&self.dirs)
    }
}

pub(crate) fn mean_of_directors3(dirs: &[Director3]) -> QTensor3 {
    let mut m = [0.0; 6];
    for d in dirs {
        let t = d.tensor().m;
        for k in 0..6 {
            m[k] += t[k];
        }
    }
    let k = 1.0 / dirs.len() as f64;
    QTensor3 { m: m.map(|x| x * k) }
}

fn director2_from(a: f64, b: f64) -> Director2 {
    let n = a.hypot(b);
    Director2 { x: a / n, y: b / n }.canonical()
}

/// Splits `Q` into the average of two rank-one tensors. With
/// `Q = λ n1⊗n1 + (1-λ) n2⊗n2`, `λ >= 1/2`, the pair is
/// `√λ n1 ± √(1-λ) n2`. At `Q = I/2` this yields the basis rotated by π/4.
pub fn decompose2(q: &QTensor2) -> Decomposition2 {
    let [q1, q2] = q.disk();
    let r = q1.hypot(q2).min(0.5);
    let phi = if r == 0.0 { 0.0 } else { q2.atan2(q1) };
    let n1 = Director2::from_angle(0.5 * phi);
    let n2 = n1.perp();
    let a = (0.5 + r).sqrt();
    let b = (0.5 - r).max(0.0).sqrt();
    Decomposition2 {
        u: director2_from(a * n1.x + b * n2.x, a * n1.y + b * n2.y),
        v: director2_from(a * n1.x - b * n2.x, a * n1.y - b * n2.y),
    }
}

fn director3_from(v: [f64; 3]) -> Director3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    Director3 { v: [v[0] / n, v[1] / n, v[2] / n] }.canonical()
}

/// Splits `Q` into the average of four rank-one tensors using the ordered
/// eigenbasis `λ1 <= λ2 <= λ3` and `δ = λ2 + λ3 - 1/2`.
pub fn decompose3(q: &QTensor3) -> Decomposition3 {
    let (vals, vecs) = q.eigen();
    let l1 = vals[0].max(0.0);
    let l2 = vals[1].max(0.0);
    let l3 = vals[2].max(0.0);
    let delta = (l2 + l3 - 0.5).max(0.0);
    let [e1, e2, e3] = vecs;
    let a = (2.0 * l2).sqrt();
    let b = (2.0 * (l3 - delta)).max(0.0).sqrt();
    let c = (2.0 * l1).sqrt();
    let d = (2.0 * delta).sqrt();
    let comb = |s: f64, x: &[f64; 3], t: f64, y: &[f64; 3]| -> [f64; 3] {
        [s * x[0] + t * y[0], s * x[1] + t * y[1], s * x[2] + t * y[2]]
    };
    Decomposition3 {
        dirs: [
            director3_from(comb(a, &e2, b, &e3)),
            director3_from(comb(a, &e2, -b, &e3)),
            director3_from(comb(c, &e1, d, &e3)),
            director3_from(comb(c, &e1, -d, &e3)),
        ],
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = dot3(&a, &a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn orthogonal_complement(w: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let u = if w[0].abs() > w[1].abs() {
        let inv = 1.0 / (w[0] * w[0] + w[2] * w[2]).sqrt();
        [-w[2] * inv, 0.0, w[0] * inv]
    } else {
        let inv = 1.0 / (w[1] * w[1] + w[2] * w[2]).sqrt();
        [0.0, w[2] * inv, -w[1] * inv]
    };
    let v = cross(w, &u);
    (u, v)
}

fn eigenvector_isolated(a: &[[f64; 3]; 3], lambda: f64) -> [f64; 3] {
    let r0 = [a[0][0] - lambda, a[0][1], a[0][2]];
    let r1 = [a[0][1], a[1][1] - lambda, a[1][2]];
    let r2 = [a[0][2], a[1][2], a[2][2] - lambda];
    let c = [cross(&r0, &r1), cross(&r0, &r2), cross(&r1, &r2)];
    let norms = c.map(|x| dot3(&x, &x));
    let mut best = 0;
    for k in 1..3 {
        if norms[k] > norms[best] {
            best = k;
        }
    }
    if norms[best] == 0.0 {
        return [1.0, 0.0, 0.0];
    }
    normalized(c[best])
}

/// Closed-form eigen-decomposition of a symmetric 3×3 matrix (trigonometric
/// eigenvalues, eigenvectors by cross products and a 2×2 reduction).
pub(crate) fn eigen_sym3(m: &[[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let scale = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let ident = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    if scale == 0.0 {
        return ([0.0; 3], ident);
    }
    let mut a = *m;
    for row in a.iter_mut() {
        for x in row.iter_mut() {
            *x /= scale;
        }
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let b00 = a[0][0] - q;
    let b11 = a[1][1] - q;
    let b22 = a[2][2] - q;
    let p2 = (b00 * b00 + b11 * b11 + b22 * b22
        + 2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]))
        / 6.0;
    if p2 <= 1e-30 {
        return ([q * scale; 3], ident);
    }
    let p = p2.sqrt();
    let c00 = b11 * b22 - a[1][2] * a[1][2];
    let c01 = a[0][1] * b22 - a[1][2] * a[0][2];
    let c02 = a[0][1] * a[1][2] - b11 * a[0][2];
    let det = (b00 * c00 - a[0][1] * c01 + a[0][2] * c02) / (p * p * p);
    let half_det = (0.5 * det).clamp(-1.0, 1.0);
    let angle = half_det.acos() / 3.0;
    let two_thirds_pi = 2.0 * std::f64::consts::PI / 3.0;
    let beta2 = 2.0 * angle.cos();
    let beta0 = 2.0 * (angle + two_thirds_pi).cos();
    let isolated = if half_det >= 0.0 { q + p * beta2 } else { q + p * beta0 };
    let w = eigenvector_isolated(&a, isolated);
    let apply = |x: &[f64; 3]| -> [f64; 3] {
        [
            a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2],
            a[0][1] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
            a[0][2] * x[0] + a[1][2] * x[1] + a[2][2] * x[2],
        ]
    };
    let lw = dot3(&w, &apply(&w));
    let (u, v) = orthogonal_complement(&w);
    let (au, av) = (apply(&u), apply(&v));
    let m00 = dot3(&u, &au);
    let m01 = 0.5 * (dot3(&u, &av) + dot3(&v, &au));
    let m11 = dot3(&v, &av);
    let mean = 0.5 * (m00 + m11);
    let r = (0.5 * (m00 - m11)).hypot(m01);
    let phi = 0.5 * (2.0 * m01).atan2(m00 - m11);
    let (s, c) = phi.sin_cos();
    let hi = [c * u[0] + s * v[0], c * u[1] + s * v[1], c * u[2] + s * v[2]];
    let lo = [-s * u[0] + c * v[0], -s * u[1] + c * v[1], -s * u[2] + c * v[2]];
    let mut pairs = [(lw, w), (mean + r, hi), (mean - r, lo)];
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    (pairs.map(|x| x.0 * scale), pairs.map(|x| x.1))
}
