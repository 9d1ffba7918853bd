//! Lattices `εZ² ∩ Ω` on rectangles, director and tensor fields on them,
//! and the interpolations used to pass from lattice data to functions:
//! piecewise-constant, dual (bond midpoints), piecewise-affine and the
//! odd/even sublattice splits.

use crate::error::{Error, Result};
use crate::geometry::{clip_to_rect, diamond, integrate_quadratic, polygon_area, Rect};
use crate::numeric::CompensatedSum;
use crate::qtensor::{q_of, Director2, Director3, QTensor2};

const INDEX_TOL: f64 = 1e-9;

/// Integer site `(i1, i2)`.
pub type Site = [i64; 2];

/// Sites `i` with `εi` in the closed rectangle, enumerated row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    domain: Rect,
    eps: f64,
    lo: Site,
    hi: Site,
}

impl Grid2 {
    pub fn new(domain: Rect, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::DegenerateGrid(format!("spacing must be positive, got {eps}")));
        }
        let lo = [
            (domain.x0 / eps - INDEX_TOL).ceil() as i64,
            (domain.y0 / eps - INDEX_TOL).ceil() as i64,
        ];
        let hi = [
            (domain.x1 / eps + INDEX_TOL).floor() as i64,
            (domain.y1 / eps + INDEX_TOL).floor() as i64,
        ];
        if hi[0] < lo[0] || hi[1] < lo[1] {
            return Err(Error::DegenerateGrid("no lattice site inside the domain".into()));
        }
        Ok(Self { domain, eps, lo, hi })
    }

    /// Grid with `ε = 1/n` on the given rectangle.
    pub fn with_resolution(domain: Rect, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DegenerateGrid("resolution must be positive".into()));
        }
        Self::new(domain, 1.0 / n as f64)
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn lo(&self) -> Site {
        self.lo
    }

    pub fn hi(&self) -> Site {
        self.hi
    }

    pub fn dims(&self) -> [usize; 2] {
        [(self.hi[0] - self.lo[0] + 1) as usize, (self.hi[1] - self.lo[1] + 1) as usize]
    }

    pub fn len(&self) -> usize {
        let [a, b] = self.dims();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: Site) -> bool {
        i[0] >= self.lo[0] && i[0] <= self.hi[0] && i[1] >= self.lo[1] && i[1] <= self.hi[1]
    }

    /// Row-major position of a site.
    pub fn linear(&self, i: Site) -> Option<usize> {
        self.contains(i).then(|| {
            let n1 = self.dims()[0];
            (i[1] - self.lo[1]) as usize * n1 + (i[0] - self.lo[0]) as usize
        })
    }

    pub fn site(&self, k: usize) -> Site {
        let n1 = self.dims()[0];
        [self.lo[0] + (k % n1) as i64, self.lo[1] + (k / n1) as i64]
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(|k| self.site(k))
    }

    pub fn position(&self, i: Site) -> [f64; 2] {
        [self.eps * i[0] as f64, self.eps * i[1] as f64]
    }

    /// Whether all four nearest neighbours are in the grid.
    pub fn is_interior(&self, i: Site) -> bool {
        i[0] > self.lo[0] && i[0] < self.hi[0] && i[1] > self.lo[1] && i[1] < self.hi[1]
    }

    /// Piecewise-constant cell `εi + ε[-1/2, 1/2)²` clipped to the domain.
    pub fn cell(&self, i: Site) -> Option<Rect> {
        let [x, y] = self.position(i);
        let h = 0.5 * self.eps;
        Rect { x0: x - h, y0: y - h, x1: x + h, y1: y + h }.intersect(&self.domain)
    }

    /// Rectangle spanned by the sites, covered by the triangulation.
    pub fn hull(&self) -> Result<Rect> {
        let [a, b] = self.position(self.lo);
        let [c, d] = self.position(self.hi);
        Rect::new(a, b, c, d)
    }

    /// Union of the cells of interior sites.
    pub fn interior_cells(&self) -> Result<Rect> {
        let h = 0.5 * self.eps;
        let [a, b] = self.position(self.lo);
        let [c, d] = self.position(self.hi);
        Rect::new(a + h, b + h, c - h, d - h)
    }
}

/// Unit vector per lattice site.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField2 {
    grid: Grid2,
    values: Vec<Director2>,
}

impl DirectorField2 {
    pub fn new(grid: Grid2, values: Vec<Director2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} sites",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(Site, [f64; 2]) -> Director2>(grid: Grid2, mut f: F) -> Self {
        let values = grid.sites().map(|i| f(i, grid.position(i))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid2, u: Director2) -> Self {
        Self::from_fn(grid, |_, _| u)
    }

    /// `even` on sites with `i1 + i2` even, `odd` elsewhere.
    pub fn checkerboard(grid: Grid2, even: Director2, odd: Director2) -> Self {
        Self::from_fn(grid, |i, _| if Parity::of(i) == Parity::Even { even } else { odd })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn values(&self) -> &[Director2] {
        &self.values
    }

    pub fn get(&self, i: Site) -> Option<&Director2> {
        self.grid.linear(i).map(|k| &self.values[k])
    }

    pub fn map<F: FnMut(Site, &Director2) -> Director2>(&self, mut f: F) -> Self {
        let values = self.grid.sites().zip(&self.values).map(|(i, u)| f(i, u)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn q_field(&self) -> PCQField {
        PCQField { grid: self.grid.clone(), values: self.values.iter().map(q_of).collect() }
    }
}

fn add3(acc: &mut [CompensatedSum; 3], w: f64, q: &QTensor2) {
    for (a, v) in acc.iter_mut().zip(q.entries()) {
        a.add(w * v);
    }
}

fn finish3(acc: [CompensatedSum; 3]) -> [f64; 3] {
    acc.map(|a| a.value())
}

/// Piecewise-constant tensor field on the cells `εi + ε[-1/2, 1/2)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PCQField {
    grid: Grid2,
    values: Vec<QTensor2>,
}

impl PCQField {
    pub fn new(grid: Grid2, values: Vec<QTensor2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} sites",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn values(&self) -> &[QTensor2] {
        &self.values
    }

    pub fn get(&self, i: Site) -> Option<&QTensor2> {
        self.grid.linear(i).map(|k| &self.values[k])
    }

    pub fn value_at(&self, p: [f64; 2]) -> Option<QTensor2> {
        if !self.grid.domain.contains(p) {
            return None;
        }
        let e = self.grid.eps;
        let i = [(p[0] / e + 0.5).floor() as i64, (p[1] / e + 0.5).floor() as i64];
        self.get(i).copied()
    }

    /// `∫_R Q` entrywise `(q11, q12, q22)` over the region.
    pub fn integral(&self, region: &Rect) -> [f64; 3] {
        let mut acc = [CompensatedSum::new(); 3];
        for (i, q) in self.grid.sites().zip(&self.values) {
            if let Some(c) = self.grid.cell(i).and_then(|c| c.intersect(region)) {
                add3(&mut acc, c.area(), q);
            }
        }
        finish3(acc)
    }

    pub fn average(&self, region: &Rect) -> [f64; 3] {
        self.integral(region).map(|v| v / region.area())
    }
}

/// Node of the dual lattice: the midpoint of the bond from `site` along
/// axis `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNode {
    pub site: Site,
    pub axis: usize,
    pub center: [f64; 2],
    pub value: QTensor2,
}

/// Dual field: the average of the two endpoint tensors on each bond,
/// constant on the diamond `|x - centre|_1 <= ε/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualQField {
    grid: Grid2,
    nodes: Vec<DualNode>,
}

pub fn dual_interpolate(field: &PCQField) -> DualQField {
    let g = &field.grid;
    let mut nodes = Vec::new();
    for (k, i) in g.sites().enumerate() {
        for axis in 0..2 {
            let mut j = i;
            j[axis] += 1;
            if let Some(l) = g.linear(j) {
                let [x, y] = g.position(i);
                let h = 0.5 * g.eps;
                let center = if axis == 0 { [x + h, y] } else { [x, y + h] };
                let value = field.values[k].average(&field.values[l]);
                nodes.push(DualNode { site: i, axis, center, value });
            }
        }
    }
    DualQField { grid: g.clone(), nodes }
}

impl DualQField {
    pub fn nodes(&self) -> &[DualNode] {
        &self.nodes
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    /// Bond whose diamond contains `p`.
    pub fn bond_at(&self, p: [f64; 2]) -> Option<(Site, usize)> {
        let e = self.grid.eps;
        let (s1, s2) = (p[0] / e, p[1] / e);
        let u = (s1 + s2).floor() + 0.5;
        let v = (s1 - s2).floor() + 0.5;
        let c1 = 0.5 * (u + v);
        let c2 = 0.5 * (u - v);
        let (site, axis) = if (c1 - c1.floor() - 0.5).abs() < 0.25 {
            ([(c1 - 0.5).round() as i64, c2.round() as i64], 0)
        } else {
            ([c1.round() as i64, (c2 - 0.5).round() as i64], 1)
        };
        let mut j = site;
        j[axis] += 1;
        (self.grid.contains(site) && self.grid.contains(j)).then_some((site, axis))
    }

    pub fn value_at(&self, p: [f64; 2]) -> Option<QTensor2> {
        let (site, axis) = self.bond_at(p)?;
        let g = &self.grid;
        let a = g.linear(site)?;
        // nodes are emitted per site in axis order, skipping missing bonds
        self.nodes[..]
            .binary_search_by(|n| {
                g.linear(n.site).unwrap().cmp(&a).then(n.axis.cmp(&axis))
            })
            .ok()
            .map(|k| self.nodes[k].value)
    }

    /// `∫_R Q'` entrywise, dual diamonds clipped to the domain.
    pub fn integral(&self, region: &Rect) -> [f64; 3] {
        let mut acc = [CompensatedSum::new(); 3];
        let Some(clip) = region.intersect(&self.grid.domain) else {
            return [0.0; 3];
        };
        let h = 0.5 * self.grid.eps;
        for n in &self.nodes {
            if n.center[0] + h < clip.x0
                || n.center[0] - h > clip.x1
                || n.center[1] + h < clip.y0
                || n.center[1] - h > clip.y1
            {
                continue;
            }
            let a = polygon_area(&clip_to_rect(&diamond(n.center, h), &clip));
            if a > 0.0 {
                add3(&mut acc, a, &n.value);
            }
        }
        finish3(acc)
    }

    pub fn average(&self, region: &Rect) -> [f64; 3] {
        self.integral(region).map(|v| v / region.area())
    }
}

/// Diagonal used to split lattice squares into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triangulation {
    /// Squares of the full lattice cut along `e1 - e2`.
    AntiDiagonal,
    /// Diamonds of a parity sublattice cut along `e1`.
    Horizontal,
}

/// Continuous piecewise-affine interpolation of vertex tensors.
#[derive(Debug, Clone)]
pub struct AffineQField {
    grid: Grid2,
    triangulation: Triangulation,
    vertices: Vec<[f64; 2]>,
    values: Vec<QTensor2>,
    triangles: Vec<[usize; 3]>,
    gradients: Vec<[[f64; 2]; 3]>,
}

fn gradient(p: [[f64; 2]; 3], v: [[f64; 3]; 3]) -> [[f64; 2]; 3] {
    let (a1, a2) = (p[1][0] - p[0][0], p[1][1] - p[0][1]);
    let (b1, b2) = (p[2][0] - p[0][0], p[2][1] - p[0][1]);
    let det = a1 * b2 - a2 * b1;
    std::array::from_fn(|c| {
        let (da, db) = (v[1][c] - v[0][c], v[2][c] - v[0][c]);
        [(da * b2 - db * a2) / det, (a1 * db - b1 * da) / det]
    })
}

impl AffineQField {
    fn build(
        grid: Grid2,
        triangulation: Triangulation,
        vertices: Vec<[f64; 2]>,
        values: Vec<QTensor2>,
        triangles: Vec<[usize; 3]>,
    ) -> Self {
        let gradients = triangles
            .iter()
            .map(|t| gradient(t.map(|k| vertices[k]), t.map(|k| values[k].entries())))
            .collect();
        Self { grid, triangulation, vertices, values, triangles, gradients }
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn triangulation(&self) -> Triangulation {
        self.triangulation
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn values(&self) -> &[QTensor2] {
        &self.values
    }

    /// Area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        polygon_area(&self.triangle(t)).abs()
    }

    /// Constant gradients of `(q11, q12, q22)` on each triangle.
    pub fn gradients(&self) -> &[[[f64; 2]; 3]] {
        &self.gradients
    }

    /// `|∇Q|²` (Frobenius) on triangle `t`.
    pub fn gradient_sq(&self, t: usize) -> f64 {
        let g = &self.gradients[t];
        let n = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
        n(g[0]) + 2.0 * n(g[1]) + n(g[2])
    }

    fn triangle(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|k| self.vertices[k])
    }

    /// Affine value `(q11, q12, q22)` at `p` extended from triangle `t`.
    fn value_on(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let v0 = self.values[self.triangles[t][0]].entries();
        let p0 = self.vertices[self.triangles[t][0]];
        let g = &self.gradients[t];
        std::array::from_fn(|c| v0[c] + g[c][0] * (p[0] - p0[0]) + g[c][1] * (p[1] - p0[1]))
    }

    /// Clipped triangle areas; fails unless the triangles cover the region.
    fn clipped_areas(&self, region: &Rect) -> Result<Vec<(usize, Vec<[f64; 2]>)>> {
        let mut pieces = Vec::new();
        let mut covered = CompensatedSum::new();
        for t in 0..self.triangles.len() {
            let tri = self.triangle(t);
            let poly = clip_to_rect(&tri, region);
            let a = polygon_area(&poly);
            if a > 0.0 {
                covered.add(a);
                pieces.push((t, poly));
            }
        }
        if (covered.value() - region.area()).abs() > 1e-9 * region.area() {
            return Err(Error::Coverage);
        }
        Ok(pieces)
    }
}

/// Affine interpolation of `Q(u)` on squares cut along `e1 - e2`.
pub fn affine_interpolate(field: &DirectorField2) -> AffineQField {
    affine_interpolate_q(&field.q_field())
}

pub fn affine_interpolate_q(field: &PCQField) -> AffineQField {
    let g = field.grid.clone();
    let vertices = g.sites().map(|i| g.position(i)).collect();
    let mut triangles = Vec::new();
    for i in g.sites() {
        let k = |d: [i64; 2]| g.linear([i[0] + d[0], i[1] + d[1]]);
        if let (Some(a), Some(b), Some(c), Some(d)) = (k([0, 0]), k([1, 0]), k([1, 1]), k([0, 1])) {
            triangles.push([a, b, d]);
            triangles.push([c, d, b]);
        }
    }
    AffineQField::build(g, Triangulation::AntiDiagonal, vertices, field.values.clone(), triangles)
}

/// `∫_R |∇Q^a|²`, triangles clipped to the region (whole covered area by
/// default).
pub fn dirichlet_energy(field: &AffineQField, region: Option<&Rect>) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    match region {
        None => {
            for t in 0..field.triangles.len() {
                acc.add(polygon_area(&field.triangle(t)).abs() * field.gradient_sq(t));
            }
        }
        Some(r) => {
            for (t, poly) in field.clipped_areas(r)? {
                acc.add(polygon_area(&poly) * field.gradient_sq(t));
            }
        }
    }
    Ok(acc.value())
}

/// `∫_R |Q_pc - Q^a|²` over the region (the union of interior-site cells
/// by default), exact since the integrand is quadratic on each piece.
pub fn pc_affine_l2_gap(pc: &PCQField, aff: &AffineQField, region: Option<&Rect>) -> Result<f64> {
    if pc.grid != aff.grid || aff.triangulation != Triangulation::AntiDiagonal {
        return Err(Error::Incompatible("fields are not built on the same lattice".into()));
    }
    let region = match region {
        Some(r) => *r,
        None => pc.grid.interior_cells()?,
    };
    let g = &pc.grid;
    let e = g.eps;
    let mut acc = CompensatedSum::new();
    for (t, poly) in aff.clipped_areas(&region)? {
        let (mut lo, mut hi) = ([i64::MAX; 2], [i64::MIN; 2]);
        for p in &poly {
            for c in 0..2 {
                lo[c] = lo[c].min((p[c] / e - 0.5).floor() as i64);
                hi[c] = hi[c].max((p[c] / e + 0.5).ceil() as i64);
            }
        }
        for i1 in lo[0]..=hi[0] {
            for i2 in lo[1]..=hi[1] {
                let Some(cell) = g.cell([i1, i2]) else { continue };
                let Some(q) = pc.get([i1, i2]) else { continue };
                let piece = clip_to_rect(&poly, &cell);
                if piece.len() < 3 {
                    continue;
                }
                let c = q.entries();
                acc.add(integrate_quadratic(&piece, |x| {
                    let a = aff.value_on(t, x);
                    let d = [a[0] - c[0], a[1] - c[1], a[2] - c[2]];
                    d[0] * d[0] + 2.0 * d[1] * d[1] + d[2] * d[2]
                }));
            }
        }
    }
    Ok(acc.value())
}

/// Both sides of `∫_R |Q_pc - Q^a|² <= (ε²/2) ∫_R |∇Q^a|²` on the union of
/// interior-site cells.
pub fn interpolation_inequality(field: &DirectorField2) -> Result<(f64, f64)> {
    let pc = field.q_field();
    let aff = affine_interpolate_q(&pc);
    let region = field.grid.interior_cells()?;
    let lhs = pc_affine_l2_gap(&pc, &aff, Some(&region))?;
    let e = field.grid.eps;
    let rhs = 0.5 * e * e * dirichlet_energy(&aff, Some(&region))?;
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(i: Site) -> Self {
        if (i[0] + i[1]).rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn offset(self) -> f64 {
        match self {
            Parity::Even => 0.0,
            Parity::Odd => 1.0,
        }
    }
}

/// Sites of one parity with their tensors, each constant on the diamond
/// `|x - εi|_1 <= ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct SublatticeQField {
    grid: Grid2,
    parity: Parity,
    sites: Vec<Site>,
    values: Vec<QTensor2>,
}

/// Splits a field into its odd and even sublattices.
pub fn split_parity(field: &DirectorField2) -> (SublatticeQField, SublatticeQField) {
    let mut parts = [Parity::Odd, Parity::Even].map(|parity| SublatticeQField {
        grid: field.grid.clone(),
        parity,
        sites: Vec::new(),
        values: Vec::new(),
    });
    for (i, u) in field.grid.sites().zip(&field.values) {
        let p = &mut parts[usize::from(Parity::of(i) == Parity::Even)];
        p.sites.push(i);
        p.values.push(q_of(u));
    }
    let [odd, even] = parts;
    (odd, even)
}

impl SublatticeQField {
    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn values(&self) -> &[QTensor2] {
        &self.values
    }

    fn lookup(&self, i: Site) -> Option<usize> {
        let g = &self.grid;
        let k = g.linear(i)?;
        // sites were pushed in row-major order
        self.sites.binary_search_by(|s| g.linear(*s).unwrap().cmp(&k)).ok()
    }

    /// Sublattice site whose diamond contains `p`.
    pub fn site_at(&self, p: [f64; 2]) -> Option<Site> {
        let e = self.grid.eps;
        let (s1, s2) = (p[0] / e, p[1] / e);
        let off = self.parity.offset();
        let u = 2.0 * ((s1 + s2 - off) / 2.0).round() + off;
        let v = 2.0 * ((s1 - s2 - off) / 2.0).round() + off;
        let i = [(0.5 * (u + v)).round() as i64, (0.5 * (u - v)).round() as i64];
        self.grid.contains(i).then_some(i)
    }

    pub fn value_at(&self, p: [f64; 2]) -> Option<QTensor2> {
        let i = self.site_at(p)?;
        self.lookup(i).map(|k| self.values[k])
    }

    /// Affine interpolation on the sublattice diamonds cut along `e1`.
    pub fn affine(&self) -> AffineQField {
        let g = &self.grid;
        let vertices: Vec<[f64; 2]> = self.sites.iter().map(|i| g.position(*i)).collect();
        let mut triangles = Vec::new();
        for (a, i) in self.sites.iter().enumerate() {
            let k = |d: [i64; 2]| self.lookup([i[0] + d[0], i[1] + d[1]]);
            if let (Some(b), Some(c), Some(d)) = (k([1, -1]), k([2, 0]), k([1, 1])) {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        AffineQField::build(g.clone(), Triangulation::Horizontal, vertices, self.values.clone(), triangles)
    }
}

/// Axis-aligned box in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3 {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Box3 {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        if (0..3).any(|k| !(hi[k] > lo[k]) || !lo[k].is_finite() || !hi[k].is_finite()) {
            return Err(Error::DegenerateGrid(format!("box {lo:?}..{hi:?} is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: [0.0; 3], hi: [1.0; 3] }
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|k| self.hi[k] - self.lo[k]).product()
    }
}

/// Spatial site `(i1, i2, i3)`.
pub type Site3 = [i64; 3];

/// Sites `i` with `εi` in the closed box, first index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid3 {
    domain: Box3,
    eps: f64,
    lo: Site3,
    hi: Site3,
}

impl Grid3 {
    pub fn new(domain: Box3, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::DegenerateGrid(format!("spacing must be positive, got {eps}")));
        }
        let lo = std::array::from_fn(|k| (domain.lo[k] / eps - INDEX_TOL).ceil() as i64);
        let hi: Site3 = std::array::from_fn(|k| (domain.hi[k] / eps + INDEX_TOL).floor() as i64);
        if (0..3).any(|k| hi[k] < lo[k]) {
            return Err(Error::DegenerateGrid("no lattice site inside the box".into()));
        }
        Ok(Self { domain, eps, lo, hi })
    }

    /// `n` sites per side with unit spacing scaled to `ε = 1/n`, i.e. the
    /// box `[0, (n-1)/n]³`.
    pub fn cube(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DegenerateGrid("cube needs at least one site".into()));
        }
        let e = 1.0 / n as f64;
        let side = e * (n - 1) as f64;
        Self::new(Box3 { lo: [0.0; 3], hi: [side.max(0.0) + 0.5 * e; 3] }, e)
    }

    pub fn domain(&self) -> &Box3 {
        &self.domain
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn lo(&self) -> Site3 {
        self.lo
    }

    pub fn hi(&self) -> Site3 {
        self.hi
    }

    pub fn dims(&self) -> [usize; 3] {
        std::array::from_fn(|k| (self.hi[k] - self.lo[k] + 1) as usize)
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: Site3) -> bool {
        (0..3).all(|k| i[k] >= self.lo[k] && i[k] <= self.hi[k])
    }

    pub fn linear(&self, i: Site3) -> Option<usize> {
        self.contains(i).then(|| {
            let [n1, n2, _] = self.dims();
            let r: [usize; 3] = std::array::from_fn(|k| (i[k] - self.lo[k]) as usize);
            (r[2] * n2 + r[1]) * n1 + r[0]
        })
    }

    pub fn site(&self, k: usize) -> Site3 {
        let [n1, n2, _] = self.dims();
        [
            self.lo[0] + (k % n1) as i64,
            self.lo[1] + ((k / n1) % n2) as i64,
            self.lo[2] + (k / (n1 * n2)) as i64,
        ]
    }

    pub fn sites(&self) -> impl Iterator<Item = Site3> + '_ {
        (0..self.len()).map(|k| self.site(k))
    }

    pub fn position(&self, i: Site3) -> [f64; 3] {
        i.map(|v| self.eps * v as f64)
    }
}

/// Unit vector per site of a spatial lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField3 {
    grid: Grid3,
    values: Vec<Director3>,
}

impl DirectorField3 {
    pub fn new(grid: Grid3, values: Vec<Director3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} sites",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(Site3, [f64; 3]) -> Director3>(grid: Grid3, mut f: F) -> Self {
        let values = grid.sites().map(|i| f(i, grid.position(i))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid3, u: Director3) -> Self {
        Self::from_fn(grid, |_, _| u)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[Director3] {
        &self.values
    }

    pub fn get(&self, i: Site3) -> Option<&Director3> {
        self.grid.linear(i).map(|k| &self.values[k])
    }

    pub fn map<F: FnMut(Site3, &Director3) -> Director3>(&self, mut f: F) -> Self {
        let values = self.grid.sites().zip(&self.values).map(|(i, u)| f(i, u)).collect();
        Self { grid: self.grid.clone(), values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit_grid(n: usize) -> Grid2 {
        Grid2::with_resolution(Rect::unit(), n).unwrap()
    }

    fn random_field(grid: Grid2, seed: u64) -> DirectorField2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DirectorField2::from_fn(grid, |_, _| Director2::from_angle(rng.random_range(0.0..PI)))
    }

    #[test]
    fn grid_enumeration() {
        let g = Grid2::new(Rect::unit(), 0.5).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.sites().collect::<Vec<_>>()[..3], [[0, 0], [1, 0], [2, 0]]);
        assert_eq!(Grid2::new(Rect::unit(), 2.0).unwrap().len(), 1);
        assert!(Grid2::new(Rect::unit(), 0.0).is_err());
        assert!(Grid2::new(Rect::new(0.1, 0.1, 0.2, 0.2).unwrap(), 0.5).is_err());
        let g = unit_grid(10);
        for (k, i) in g.sites().enumerate() {
            assert_eq!(g.linear(i), Some(k));
            assert!(g.domain().contains(g.position(i)));
        }
    }

    #[test]
    fn spatial_grid_enumeration() {
        let g = Grid3::cube(4).unwrap();
        assert_eq!(g.dims(), [4, 4, 4]);
        for (k, i) in g.sites().enumerate() {
            assert_eq!(g.linear(i), Some(k));
        }
        assert!(Grid3::new(Box3::unit(), -1.0).is_err());
        assert!(Box3::new([0.0; 3], [1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn dual_examples() {
        let g = unit_grid(6);
        let q = q_of(&Director2::from_angle(0.4));
        let dual = dual_interpolate(&DirectorField2::constant(g.clone(), Director2::from_angle(0.4)).q_field());
        assert!(dual.nodes().iter().all(|n| n.value.distance(&q) < 1e-15));
        let cb = DirectorField2::checkerboard(g.clone(), Director2::e1(), Director2::e2());
        let dual = dual_interpolate(&cb.q_field());
        assert_eq!(dual.nodes().len(), 2 * 6 * 7);
        let half = QTensor2::half_identity();
        assert!(dual.nodes().iter().all(|n| n.value.distance(&half) < 1e-15));
    }

    #[test]
    fn dual_lookup_finds_generating_bond() {
        let g = unit_grid(8);
        let f = random_field(g.clone(), 4).q_field();
        let dual = dual_interpolate(&f);
        for n in dual.nodes() {
            let p = [n.center[0] + 0.1 * g.eps(), n.center[1] - 0.3 * g.eps()];
            assert_eq!(dual.bond_at(p), Some((n.site, n.axis)));
            assert_eq!(dual.value_at(p), Some(n.value));
        }
    }

    #[test]
    fn weak_star_gap_is_order_eps() {
        let window = Rect::new(0.25, 0.3, 0.7, 0.8).unwrap();
        for n in [16, 32, 64, 128, 256] {
            let f = random_field(unit_grid(n), n as u64).q_field();
            let d = dual_interpolate(&f);
            let (a, b) = (f.average(&window), d.average(&window));
            let gap = (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max);
            // mass only moves across the window boundary
            let bound = 2.0 * (window.width() + window.height()) / window.area() / n as f64;
            assert!(gap <= bound, "n={n}: {gap} > {bound}");
        }
    }

    #[test]
    fn affine_constant_and_column_fields() {
        let g = unit_grid(8);
        let aff = affine_interpolate(&DirectorField2::constant(g.clone(), Director2::from_angle(1.0)));
        assert_eq!(dirichlet_energy(&aff, None).unwrap(), 0.0);
        let a = 2.3;
        let f = DirectorField2::from_fn(g.clone(), |_, x| Director2::from_angle(a * x[0]));
        let aff = affine_interpolate(&f);
        let cols = g.dims()[0] - 1;
        let mut per_col = vec![None; cols];
        for (t, tri) in aff.triangles().iter().enumerate() {
            let c = tri.iter().map(|&k| g.site(k)[0] - g.lo()[0]).min().unwrap() as usize;
            let v = aff.gradient_sq(t);
            let want = *per_col[c].get_or_insert(v);
            assert!((v - want).abs() < 1e-12);
            // closed form from the horizontal leg: 2(1 - cos²(aε)) / ε²
            let e = g.eps();
            assert!((v - 2.0 * (a * e).sin().powi(2) / (e * e)).abs() < 1e-9);
        }
    }

    /// Σ over bonds of multiplicity × (1 - (u_i·u_j)²), multiplicity 2 for
    /// bonds shared by two squares and 1 on the hull boundary.
    fn weighted_bond_sum(f: &DirectorField2) -> f64 {
        let g = f.grid();
        let mut s = 0.0;
        for i in g.sites() {
            for axis in 0..2 {
                let mut j = i;
                j[axis] += 1;
                let Some(v) = f.get(j) else { continue };
                let u = f.get(i).unwrap();
                let other = 1 - axis;
                let on_edge = i[other] == g.lo()[other] || i[other] == g.hi()[other];
                let m = if on_edge { 1.0 } else { 2.0 };
                s += m * (1.0 - u.dot(v).powi(2));
            }
        }
        s
    }

    #[test]
    fn dirichlet_matches_bond_sum() {
        for (n, seed) in [(2, 1), (4, 2), (9, 3)] {
            let f = random_field(unit_grid(n), seed);
            let e = dirichlet_energy(&affine_interpolate(&f), None).unwrap();
            assert!((e - weighted_bond_sum(&f)).abs() < 1e-12 * (1.0 + e));
        }
    }

    #[test]
    fn smooth_rotation_energy_converges() {
        let theta = |x: [f64; 2]| (2.0 * PI * x[0]).sin() * (PI * x[1]).cos();
        // ∫|∇θ|² on the unit square
        let exact = 4.0 * PI * PI * 0.25 + PI * PI * 0.25;
        let mut last = f64::INFINITY;
        for n in [16, 32, 64, 128] {
            let f = DirectorField2::from_fn(unit_grid(n), |_, x| Director2::from_angle(theta(x)));
            let e = dirichlet_energy(&affine_interpolate(&f), None).unwrap();
            let err = (e - 2.0 * exact).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last / (2.0 * exact) < 2e-3);
    }

    #[test]
    fn region_clipping_and_coverage() {
        let f = random_field(unit_grid(8), 9);
        let aff = affine_interpolate(&f);
        let full = dirichlet_energy(&aff, None).unwrap();
        let left = dirichlet_energy(&aff, Some(&Rect::new(0.0, 0.0, 0.5, 1.0).unwrap())).unwrap();
        let right = dirichlet_energy(&aff, Some(&Rect::new(0.5, 0.0, 1.0, 1.0).unwrap())).unwrap();
        assert!((left + right - full).abs() < 1e-12 * full);
        let outside = Rect::new(0.5, 0.5, 1.5, 1.0).unwrap();
        assert!(matches!(dirichlet_energy(&aff, Some(&outside)), Err(Error::Coverage)));
    }

    #[test]
    fn single_flip_closed_form() {
        let n = 8;
        let g = unit_grid(n);
        let e = g.eps();
        let f = DirectorField2::from_fn(g, |i, _| {
            if i == [4, 4] {
                Director2::e2()
            } else {
                Director2::e1()
            }
        });
        let aff = affine_interpolate(&f);
        let touched = aff
            .triangles()
            .iter()
            .enumerate()
            .filter(|(t, _)| aff.gradient_sq(*t) > 0.0)
            .count();
        assert_eq!(touched, 6);
        // four bonds of defect 1, each shared by two triangles
        assert!((dirichlet_energy(&aff, None).unwrap() - 8.0).abs() < 1e-12);
        // |ΔQ|² ∫ (χ_cell - φ)² with ∫φ = ε², ∫φ² = ε²/2, ∫_cell φ = 7ε²/12
        let (lhs, rhs) = interpolation_inequality(&f).unwrap();
        assert!((lhs - 2.0 * e * e / 3.0).abs() < 1e-14);
        assert!((rhs - 4.0 * e * e).abs() < 1e-14);
    }

    #[test]
    fn interpolation_inequality_random_fields() {
        let mut worst: f64 = 0.0;
        for seed in 0..100 {
            let f = random_field(unit_grid(32), seed);
            let (lhs, rhs) = interpolation_inequality(&f).unwrap();
            assert!(lhs <= rhs);
            worst = worst.max(lhs / rhs);
        }
        assert!(worst < 1.0);
    }

    #[test]
    fn gap_rejects_mismatched_grids() {
        let a = random_field(unit_grid(8), 1);
        let b = random_field(unit_grid(9), 1);
        assert!(matches!(
            pc_affine_l2_gap(&a.q_field(), &affine_interpolate(&b), None),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn parity_split_examples() {
        let g = unit_grid(8);
        let (v, w) = (Director2::from_angle(0.3), Director2::from_angle(1.2));
        let cb = DirectorField2::checkerboard(g.clone(), w, v);
        let (odd, even) = split_parity(&cb);
        assert!(odd.values().iter().all(|q| *q == q_of(&v)));
        assert!(even.values().iter().all(|q| *q == q_of(&w)));
        let f = random_field(g.clone(), 5);
        let (odd, even) = split_parity(&f);
        assert_eq!(odd.sites().len() + even.sites().len(), g.len());
        let diff = odd.sites().len().abs_diff(even.sites().len());
        assert!(diff <= (g.dims()[0] + g.dims()[1]) / 2);
    }

    #[test]
    fn parity_average_reproduces_dual_field() {
        let g = unit_grid(8);
        let f = random_field(g.clone(), 6);
        let (odd, even) = split_parity(&f);
        let dual = dual_interpolate(&f.q_field());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in dual.nodes() {
            for _ in 0..4 {
                let (a, b) = (rng.random_range(-0.49..0.49), rng.random_range(-0.49..0.49));
                let r = 0.5 * g.eps() * (a + b) / 2.0;
                let s = 0.5 * g.eps() * (a - b) / 2.0;
                let p = [n.center[0] + r, n.center[1] + s];
                let avg = odd.value_at(p).unwrap().average(&even.value_at(p).unwrap());
                assert!(avg.distance(&n.value) < 1e-15);
            }
        }
    }

    #[test]
    fn sublattice_affine_uses_horizontal_diagonals() {
        let g = unit_grid(8);
        let (odd, _) = split_parity(&random_field(g, 2));
        let aff = odd.affine();
        assert_eq!(aff.triangulation(), Triangulation::Horizontal);
        for tri in aff.triangles() {
            let p = tri.map(|k| aff.vertices()[k]);
            let longest = (0..3)
                .map(|k| {
                    let (a, b) = (p[k], p[(k + 1) % 3]);
                    (b[0] - a[0], b[1] - a[1])
                })
                .max_by(|x, y| (x.0.hypot(x.1)).total_cmp(&y.0.hypot(y.1)))
                .unwrap();
            assert!(longest.1.abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn interpolation_inequality_holds(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32, 64, 128])) {
            let (lhs, rhs) = interpolation_inequality(&random_field(unit_grid(n), seed)).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn parity_partition(seed in any::<u64>(), n in 2usize..20) {
            let g = unit_grid(n);
            let (odd, even) = split_parity(&random_field(g.clone(), seed));
            let mut all: Vec<Site> = odd.sites().iter().chain(even.sites()).copied().collect();
            all.sort();
            let mut want: Vec<Site> = g.sites().collect();
            want.sort();
            prop_assert_eq!(all, want);
            prop_assert!(odd.sites().iter().all(|i| Parity::of(*i) == Parity::Odd));
        }
    }
}
