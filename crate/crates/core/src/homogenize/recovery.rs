//! Explicit recovery configurations: the planar checkerboard and the
//! spatial 2-periodic four-value cell.

use serde::Serialize;

use crate::energy::{energy, interior_density_3d, Bonds, EnergySpec, Scaling};
use crate::envelope::{fhat_3d, Fhat3dBudget, Potential};
use crate::error::{Error, Result};
use crate::lattice::{DirectorField2, DirectorField3, Grid2, Grid3, Parity, Site3};
use crate::qtensor::{decompose2, decompose3, Director3, QTensor2, QTensor3};

/// Directors `u` on even and `v` on odd sites, where `Q̄ = (u⊗u + v⊗v)/2`.
/// Every bond joins the two, so the dual field is the constant `Q̄`.
pub fn checkerboard_recovery(grid: &Grid2, target: &QTensor2) -> DirectorField2 {
    let d = decompose2(target);
    DirectorField2::from_fn(grid.clone(), |i, _| match Parity::of(i) {
        Parity::Even => d.u,
        Parity::Odd => d.v,
    })
}

/// Label in `0..4` of a site in the 2-periodic cell. Antipodal corners of
/// the unit cube share a label, so each unit face carries all four.
pub fn cell_label(i: Site3) -> usize {
    let p = i.map(|x| x.rem_euclid(2) as usize);
    let (b, c) = (p[1] ^ p[0], p[2] ^ p[0]);
    match (b, c) {
        (0, 0) => 0,
        (1, 1) => 1,
        (1, 0) => 2,
        _ => 3,
    }
}

/// Checks that every axis-aligned unit face of the grid sees four labels.
pub fn audit_faces(grid: &Grid3) -> Result<usize> {
    let mut faces = 0;
    for i in grid.sites() {
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let mut corners = [i; 4];
            corners[1][a] += 1;
            corners[2][b] += 1;
            corners[3][a] += 1;
            corners[3][b] += 1;
            if !corners.iter().all(|c| grid.contains(*c)) {
                continue;
            }
            let mut seen = [false; 4];
            for c in &corners {
                seen[cell_label(*c)] = true;
            }
            if seen.contains(&false) {
                return Err(Error::Internal(format!("face at {i:?} misses a label")));
            }
            faces += 1;
        }
    }
    Ok(faces)
}

/// Where the four directors of the cell come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellSource {
    Decomposition,
    Optimized(Fhat3dBudget),
    Given([Director3; 4]),
}

#[derive(Debug, Clone, Serialize)]
pub struct Recovery3d {
    #[serde(skip)]
    pub field: DirectorField3,
    /// Per-site energy over sites with a complete neighbourhood.
    pub density: f64,
    /// Total window energy divided by the number of sites.
    pub window_density: f64,
    /// `(3/2) Σ_{i<j} f(u_i, u_j)`.
    pub predicted: f64,
    pub faces_checked: usize,
}

/// Tiles the four directors over an `n³` window with nearest plus
/// quarter-weight next-nearest bonds.
pub fn recovery_3d(target: &QTensor3, f: &Potential, window: usize, source: CellSource) -> Result<Recovery3d> {
    f.require_isotropic()?;
    let dirs = match source {
        CellSource::Decomposition => decompose3(target).dirs,
        CellSource::Optimized(b) => fhat_3d(f, target, b)?.certificate,
        CellSource::Given(d) => d,
    };
    let grid = Grid3::cube(window)?;
    let faces_checked = audit_faces(&grid)?;
    let field = DirectorField3::from_fn(grid, |i, _| dirs[cell_label(i)]);
    let spec = EnergySpec::new(f.clone(), Bonds::Nn3dQuarterNnn, Scaling::Bulk);
    let density = interior_density_3d(&spec, &field)?;
    let raw = EnergySpec { scaling: Scaling::FirstOrder, potential: f.clone(), bonds: Bonds::Nn3dQuarterNnn };
    let shift = f.inf_h().unwrap_or(0.0);
    let e = energy(&raw, &field)?;
    let window_density = (e.total + shift * weighted_bonds(&e)) / field.values().len() as f64;
    let mut pairs = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            pairs += f.pair3(&dirs[i], &dirs[j])?;
        }
    }
    Ok(Recovery3d { field, density, window_density, predicted: 1.5 * pairs, faces_checked })
}

fn weighted_bonds(e: &crate::energy::EnergyBreakdown) -> f64 {
    e.classes.iter().map(|c| if c.name == "nnn" { 0.25 } else { 1.0 } * c.bonds as f64).sum()
}
