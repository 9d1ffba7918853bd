//! Linear-programming routes to the same envelopes, used as independent
//! cross-checks of the hull constructions.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::SampledFunction1D;
use crate::error::{Error, Result};

fn lp_error(e: minilp::Error) -> Error {
    Error::Internal(format!("linear program failed: {e}"))
}

/// Largest nondecreasing discretely-convex minorant of the samples:
/// maximise `Σ g_k` subject to `g <= h`, monotone and convex constraints.
pub fn monotone_convex_envelope_lp(h: &SampledFunction1D) -> Result<Vec<f64>> {
    let t = h.grid();
    let v = h.values();
    let n = t.len();
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let g: Vec<_> = v.iter().map(|&hv| p.add_var(1.0, (f64::NEG_INFINITY, hv))).collect();
    for k in 0..n - 1 {
        p.add_constraint([(g[k + 1], 1.0), (g[k], -1.0)], ComparisonOp::Ge, 0.0);
    }
    for k in 1..n - 1 {
        let a = 1.0 / (t[k + 1] - t[k]);
        let b = 1.0 / (t[k] - t[k - 1]);
        p.add_constraint([(g[k + 1], a), (g[k], -(a + b)), (g[k - 1], b)], ComparisonOp::Ge, 0.0);
    }
    let sol = p.solve().map_err(lp_error)?;
    Ok(g.iter().map(|x| *sol.var_value(*x)).collect())
}

/// Convex envelope of scattered data at `query`: maximise the value of an
/// affine function lying below every sample.
pub fn convex_envelope_lp(nodes: &[[f64; 2]], values: &[f64], query: [f64; 2]) -> Result<f64> {
    if nodes.len() != values.len() || nodes.len() < 3 {
        return Err(Error::InvalidSampling("need matching nodes and values, at least 3".into()));
    }
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let a = p.add_var(query[0], free);
    let b = p.add_var(query[1], free);
    let c = p.add_var(1.0, free);
    for (x, v) in nodes.iter().zip(values) {
        p.add_constraint([(a, x[0]), (b, x[1]), (c, 1.0)], ComparisonOp::Le, *v);
    }
    let sol = p.solve().map_err(lp_error)?;
    Ok(sol.objective())
}
