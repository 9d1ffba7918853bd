//! CSV export of fields, tabulated functions and Jacobian densities.

use std::io::Write;
use std::path::Path;

use crate::envelope::{SampledFunction1D, SampledSurface};
use crate::error::{Error, Result};
use crate::lattice::{DirectorField2, PCQField};
use crate::vortex::JacobianField;

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(io_err)?;
    Ok(out)
}

fn rows<W: Write, I, R>(w: W, header: &[&str], items: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = writer(w, header)?;
    for r in items {
        out.write_record(r).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_director_field<W: Write>(w: W, field: &DirectorField2) -> Result<()> {
    let g = field.grid();
    rows(
        w,
        &["i1", "i2", "ux", "uy"],
        g.sites().zip(field.values()).map(|(i, u)| {
            [i[0].to_string(), i[1].to_string(), u.x().to_string(), u.y().to_string()]
        }),
    )
}

pub fn write_q_field<W: Write>(w: W, field: &PCQField) -> Result<()> {
    let g = field.grid();
    rows(
        w,
        &["i1", "i2", "q11", "q12", "q22"],
        g.sites().zip(field.values()).map(|(i, q)| {
            let [a, b, c] = q.entries();
            [i[0].to_string(), i[1].to_string(), a.to_string(), b.to_string(), c.to_string()]
        }),
    )
}

pub fn write_sampled<W: Write>(w: W, f: &SampledFunction1D) -> Result<()> {
    rows(
        w,
        &["t", "value"],
        f.grid().iter().zip(f.values()).map(|(t, v)| [t.to_string(), v.to_string()]),
    )
}

pub fn write_surface<W: Write>(w: W, s: &SampledSurface) -> Result<()> {
    rows(
        w,
        &["q1", "q2", "value"],
        s.nodes().iter().zip(s.values()).map(|(n, v)| [n[0].to_string(), n[1].to_string(), v.to_string()]),
    )
}

pub fn write_jacobian<W: Write>(w: W, j: &JacobianField) -> Result<()> {
    rows(
        w,
        &["tri_index", "cx", "cy", "area", "det"],
        j.centroids.iter().zip(&j.areas).zip(&j.det).enumerate().map(|(k, ((c, a), d))| {
            [k.to_string(), c[0].to_string(), c[1].to_string(), a.to_string(), d.to_string()]
        }),
    )
}

/// Generic table with a header row.
pub fn write_table<W: Write>(w: W, header: &[String], table: &[Vec<String>]) -> Result<()> {
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    rows(w, &h, table.iter().map(|r| r.iter().cloned()))
}

pub fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
