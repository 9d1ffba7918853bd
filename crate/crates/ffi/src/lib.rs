//! C ABI over the `qlattice` core.
//!
//! Objects cross the boundary as opaque handles created by `*_new` style
//! constructors and released by the matching `*_free`. Every fallible call
//! returns a [`QlStatus`]; on failure a message is kept per thread and can
//! be copied out with [`ql_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qlattice::cli::{self, CliError, ExperimentConfig};
use qlattice::energy::{energy, Bonds, EnergySpec, Scaling};
use qlattice::envelope::{f_hom_2d, NamedPotential, Potential};
use qlattice::geometry::Rect;
use qlattice::homogenize::{cell_problem_min, AnnealSchedule, CellProblemSpec, Optimizer};
use qlattice::lattice::{affine_interpolate, DirectorField2, Grid2};
use qlattice::qtensor::{Director2, QTensor2};
use qlattice::vortex::{aux_map, half_vortex_field, winding_number};
use qlattice::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidQTensor = 3,
    DegenerateGrid = 4,
    Unsupported = 5,
    Infeasible = 6,
    DegenerateLoop = 7,
    SingularSite = 8,
    OptimizationFailure = 9,
    Io = 10,
    Internal = 11,
    Panic = 12,
}

/// Interaction range of an energy evaluation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlBonds {
    Nearest = 0,
    NearestWithDiagonalCompetition = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlScaling {
    Bulk = 0,
    FirstOrder = 1,
    Concentration = 2,
}

/// Opaque pair potential.
pub struct QlPotential {
    inner: Potential,
}

/// Opaque planar director field.
pub struct QlField2 {
    inner: DirectorField2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QlStatus {
    match e {
        Error::InvalidQTensor { .. } => QlStatus::InvalidQTensor,
        Error::DegenerateGrid(_) | Error::Coverage => QlStatus::DegenerateGrid,
        Error::UnsupportedPotential(_) => QlStatus::Unsupported,
        Error::Infeasible { .. } => QlStatus::Infeasible,
        Error::DegenerateLoop { .. } => QlStatus::DegenerateLoop,
        Error::SingularSite => QlStatus::SingularSite,
        Error::OptimizationFailure { .. } => QlStatus::OptimizationFailure,
        Error::Io(_) => QlStatus::Io,
        Error::Internal(_) => QlStatus::Internal,
        _ => QlStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (QlStatus, String)>>(f: F) -> QlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QlStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside qlattice".into());
            QlStatus::Panic
        }
    }
}

fn lib<T>(r: qlattice::Result<T>) -> Result<T, (QlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (QlStatus, String) {
    (QlStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, (QlStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|e| (QlStatus::InvalidArgument, e.to_string()))
}

unsafe fn out<T>(p: *mut T, v: T) -> Result<(), (QlStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    p.write(v);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (nul
/// terminated, truncated to `len`). Returns the full message length, 0 if
/// there is none.
#[no_mangle]
pub unsafe extern "C" fn ql_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Builds a potential from JSON such as `{"kind":"quartic-well","s":0.5}`.
#[no_mangle]
pub unsafe extern "C" fn ql_potential_from_json(json: *const c_char, out_potential: *mut *mut QlPotential) -> QlStatus {
    guard(|| {
        let text = str_arg(json)?;
        let named: NamedPotential =
            serde_json::from_str(text).map_err(|e| (QlStatus::InvalidArgument, e.to_string()))?;
        let p = lib(named.build())?;
        out(out_potential, Box::into_raw(Box::new(QlPotential { inner: p })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ql_potential_free(p: *mut QlPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Profile `h(x)` of an isotropic potential.
#[no_mangle]
pub unsafe extern "C" fn ql_potential_profile(p: *const QlPotential, x: f64, out_value: *mut f64) -> QlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(null)?;
        let v = p
            .inner
            .h(x)
            .ok_or_else(|| (QlStatus::Unsupported, format!("{} has no scalar profile", p.inner.name())))?;
        out(out_value, v)
    })
}

/// Homogenized planar density `4 f̂**(Q)` at `Q = [[q11, q12], [q12, q22]]`.
#[no_mangle]
pub unsafe extern "C" fn ql_homogenized_density_2d(
    p: *const QlPotential,
    q11: f64,
    q12: f64,
    q22: f64,
    out_value: *mut f64,
) -> QlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(null)?;
        let q = lib(QTensor2::new(q11, q12, q22))?;
        out(out_value, lib(f_hom_2d(&p.inner, &q))?)
    })
}

/// Field of `e1` on the lattice `εZ² ∩ [x0, x1] × [y0, y1]`.
#[no_mangle]
pub unsafe extern "C" fn ql_field2_new(
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    eps: f64,
    out_field: *mut *mut QlField2,
) -> QlStatus {
    guard(|| {
        let g = lib(Rect::new(x0, y0, x1, y1).and_then(|r| Grid2::new(r, eps)))?;
        let f = DirectorField2::constant(g, Director2::e1());
        out(out_field, Box::into_raw(Box::new(QlField2 { inner: f })))
    })
}

/// Half vortex of the given sign on `[-1/2, 1/2]²` at spacing `1/n`.
#[no_mangle]
pub unsafe extern "C" fn ql_field2_half_vortex(
    n: usize,
    cx: f64,
    cy: f64,
    sign: i32,
    out_field: *mut *mut QlField2,
) -> QlStatus {
    guard(|| {
        let g = lib(Grid2::with_resolution(Rect::square(0.5), n))?;
        let f = lib(half_vortex_field(&g, [cx, cy], sign))?;
        out(out_field, Box::into_raw(Box::new(QlField2 { inner: f })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ql_field2_free(f: *mut QlField2) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of sites (row-major order, first index slowest).
#[no_mangle]
pub unsafe extern "C" fn ql_field2_len(f: *const QlField2, out_len: *mut usize) -> QlStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(null)?;
        out(out_len, f.inner.values().len())
    })
}

/// Replaces every director by `(cos a, sin a)` with `a` from `angles`.
#[no_mangle]
pub unsafe extern "C" fn ql_field2_set_angles(f: *mut QlField2, angles: *const f64, len: usize) -> QlStatus {
    guard(|| {
        let f = f.as_mut().ok_or_else(null)?;
        if angles.is_null() {
            return Err(null());
        }
        let a = std::slice::from_raw_parts(angles, len);
        let values = a.iter().map(|t| Director2::from_angle(*t)).collect();
        f.inner = lib(DirectorField2::new(f.inner.grid().clone(), values))?;
        Ok(())
    })
}

/// Director angles in `(-π, π]`, written into `angles[0..len]`.
#[no_mangle]
pub unsafe extern "C" fn ql_field2_angles(f: *const QlField2, angles: *mut f64, len: usize) -> QlStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(null)?;
        if angles.is_null() {
            return Err(null());
        }
        let v = f.inner.values();
        if len != v.len() {
            return Err((QlStatus::InvalidArgument, format!("buffer holds {len}, field has {}", v.len())));
        }
        for (k, u) in v.iter().enumerate() {
            *angles.add(k) = u.angle();
        }
        Ok(())
    })
}

/// Discrete energy summed over ordered bonds.
#[no_mangle]
pub unsafe extern "C" fn ql_energy(
    f: *const QlField2,
    p: *const QlPotential,
    bonds: QlBonds,
    scaling: QlScaling,
    out_value: *mut f64,
) -> QlStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(null)?;
        let p = p.as_ref().ok_or_else(null)?;
        let bonds = match bonds {
            QlBonds::Nearest => Bonds::Nn2d,
            QlBonds::NearestWithDiagonalCompetition => Bonds::NnNnnCompetition,
        };
        let scaling = match scaling {
            QlScaling::Bulk => Scaling::Bulk,
            QlScaling::FirstOrder => Scaling::FirstOrder,
            QlScaling::Concentration => Scaling::Concentration,
        };
        let e = lib(energy(&EnergySpec::new(p.inner.clone(), bonds, scaling), &f.inner))?;
        out(out_value, e.total)
    })
}

/// Degree of the auxiliary map along the lattice circle of radius `r`.
#[no_mangle]
pub unsafe extern "C" fn ql_winding_number(
    f: *const QlField2,
    cx: f64,
    cy: f64,
    r: f64,
    out_degree: *mut i64,
    out_residual: *mut f64,
) -> QlStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(null)?;
        let w = lib(winding_number(&aux_map(&affine_interpolate(&f.inner)), [cx, cy], r))?;
        out(out_degree, w.degree)?;
        out(out_residual, w.residual)
    })
}

/// Annealed cell problem; writes the per-site minimum and the distance of
/// the achieved mean from the target.
#[no_mangle]
pub unsafe extern "C" fn ql_cell_problem(
    p: *const QlPotential,
    q11: f64,
    q12: f64,
    q22: f64,
    radius: f64,
    window: usize,
    angles: usize,
    seed: u64,
    out_value: *mut f64,
    out_mean_distance: *mut f64,
) -> QlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(null)?;
        let q = lib(QTensor2::new(q11, q12, q22))?;
        let spec = CellProblemSpec::new(q, radius, window, angles, Optimizer::Anneal(AnnealSchedule::seeded(seed)));
        let r = lib(cell_problem_min(&spec, &p.inner))?;
        out(out_value, r.value_per_volume)?;
        out(out_mean_distance, r.mean_distance)
    })
}

/// Runs a JSON experiment configuration and writes its artifacts into
/// `out_dir`. `out_exit_code` receives the command-line exit code
/// (0 pass, 1 tolerance failure, 2 configuration error).
#[no_mangle]
pub unsafe extern "C" fn ql_run_experiment(
    config_json: *const c_char,
    out_dir: *const c_char,
    out_exit_code: *mut i32,
) -> QlStatus {
    guard(|| {
        let text = str_arg(config_json)?;
        let dir = str_arg(out_dir)?;
        let result = ExperimentConfig::from_json(text).and_then(|c| {
            let mut report = cli::run(&c, None)?;
            cli::write_report(&mut report, Path::new(dir))?;
            Ok(report)
        });
        match result {
            Ok(r) => out(out_exit_code, r.exit_code()),
            Err(e) => {
                out(out_exit_code, e.exit_code())?;
                let status = match &e {
                    CliError::Config(_) => QlStatus::InvalidArgument,
                    CliError::Run(inner) => status_of(inner),
                };
                Err((status, e.to_string()))
            }
        }
    })
}
