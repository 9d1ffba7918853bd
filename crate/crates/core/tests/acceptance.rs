//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p qlattice --test acceptance`; add `-- --strict`
//! to count known failures as failures.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use qlattice::energy::{
    dual_lower_bound, energy, first_order_energy, hedgehog_field, interior_density_3d, oscillating_field,
    rotation_field, Bonds, EnergySpec, Scaling,
};
use qlattice::envelope::{
    lp, monotone_convex_envelope, noradial_zero_set, planar_hull, relaxed_surface, DiskEnvelope, Potential,
    SampledFunction1D, SurfaceOptions,
};
use qlattice::geometry::Rect;
use qlattice::homogenize::{cell_problem_min, recovery_3d, AnnealSchedule, CellProblemSpec, CellSource, Optimizer};
use qlattice::lattice::{affine_interpolate, DirectorField2, DirectorField3, Grid2, Grid3};
use qlattice::qtensor::{decompose2, decompose3, midpoint, q_of, Director2, Director3, QTensor2, QTensor3};
use qlattice::vortex::{
    aux_map, concentration_fit, jacobian_density, multi_vortex_field, plaquette_center, winding_number,
    AtomicMeasure,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_250_601;

/// Criteria that currently miss their tolerance; see the ledger.
const KNOWN_FAILING: &[usize] = &[8];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn outer2(u: [f64; 2]) -> [[f64; 2]; 2] {
    [[u[0] * u[0], u[0] * u[1]], [u[1] * u[0], u[1] * u[1]]]
}

fn frob2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

fn criterion_1() -> Verdict {
    let mut r = rng(1);
    let (mut mid, mut dec2, mut dec3) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (a, b) = (r.random_range(0.0..2.0 * PI), r.random_range(0.0..2.0 * PI));
        let (u, v) = ([a.cos(), a.sin()], [b.cos(), b.sin()]);
        let (uu, vv) = (outer2(u), outer2(v));
        let m: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (uu[i][j] + vv[i][j])));
        let lib = midpoint(&Director2::from_angle(a), &Director2::from_angle(b)).matrix();
        let lhs = frob2(lib, [[0.5, 0.0], [0.0, 0.5]]);
        let rhs = FRAC_1_SQRT_2 * (u[0] * v[0] + u[1] * v[1]).abs();
        mid = mid.max((lhs - rhs).abs()).max(frob2(lib, m));

        let rad = 0.5 * r.random_range(0.0f64..1.0).sqrt();
        let t = r.random_range(0.0..2.0 * PI);
        let q = QTensor2::from_disk(rad * t.cos(), rad * t.sin()).unwrap();
        let d = decompose2(&q);
        let (du, dv) = (outer2([d.u.x(), d.u.y()]), outer2([d.v.x(), d.v.y()]));
        let back: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (du[i][j] + dv[i][j])));
        dec2 = dec2.max(frob2(back, q.matrix()));

        let w: [f64; 4] = std::array::from_fn(|_| r.random_range(0.0..1.0));
        let total: f64 = w.iter().sum();
        let mut m3 = [[0.0; 3]; 3];
        for wk in w {
            let n = loop {
                let v: [f64; 3] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
                let n2: f64 = v.iter().map(|x| x * x).sum();
                if n2 > 1e-4 && n2 <= 1.0 {
                    break v.map(|x| x / n2.sqrt());
                }
            };
            for i in 0..3 {
                for j in 0..3 {
                    m3[i][j] += wk / total * n[i] * n[j];
                }
            }
        }
        let q3 = QTensor3::from_matrix(m3).unwrap();
        let mut back3 = [[0.0; 3]; 3];
        for u in decompose3(&q3).dirs {
            let u = u.as_array();
            for i in 0..3 {
                for j in 0..3 {
                    back3[i][j] += 0.25 * u[i] * u[j];
                }
            }
        }
        let mut e = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                e += (back3[i][j] - m3[i][j]).powi(2);
            }
        }
        dec3 = dec3.max(e.sqrt());
    }
    verdict(
        mid <= 1e-12 && dec2 <= 1e-10 && dec3 <= 1e-10,
        format!("midpoint {mid:.2e} <= 1e-12, decompose2 {dec2:.2e} / decompose3 {dec3:.2e} <= 1e-10"),
    )
}

/// Largest nondecreasing convex minorant by brute force: suffix minimum,
/// then the lower chord envelope over all node pairs.
fn brute_envelope(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = h.to_vec();
    for i in (0..n - 1).rev() {
        m[i] = m[i].min(m[i + 1]);
    }
    (0..n)
        .map(|i| {
            let mut best = m[i];
            for a in 0..=i {
                for b in i..n {
                    if a < b {
                        let t = (x[i] - x[a]) / (x[b] - x[a]);
                        best = best.min((1.0 - t) * m[a] + t * m[b]);
                    }
                }
            }
            best
        })
        .collect()
}

fn criterion_2() -> Verdict {
    let mut r = rng(2);
    let mut profiles: Vec<(String, SampledFunction1D)> = vec![
        ("-x^2".into(), SampledFunction1D::uniform(201, |x| -x * x).unwrap()),
        ("-x".into(), SampledFunction1D::uniform(201, |x| -x).unwrap()),
        ("-x^3".into(), SampledFunction1D::uniform(201, |x| -x * x * x).unwrap()),
        ("(x^2-1/4)^2".into(), SampledFunction1D::uniform(201, |x| (x * x - 0.25).powi(2)).unwrap()),
        ("(1-x)^2".into(), SampledFunction1D::uniform(201, |x| (1.0 - x).powi(2)).unwrap()),
    ];
    for k in 0..3 {
        let knots: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let vals: Vec<f64> = knots.iter().map(|_| r.random_range(-1.0..1.0)).collect();
        let pl = SampledFunction1D::new(knots, vals).unwrap();
        profiles.push((format!("random-{k}"), SampledFunction1D::uniform(201, |t| pl.eval(t)).unwrap()));
    }
    let mut worst = 0.0f64;
    let mut worst_brute = 0.0f64;
    for (_, h) in &profiles {
        let env = monotone_convex_envelope(h);
        let lp = lp::monotone_convex_envelope_lp(h).unwrap();
        let brute = brute_envelope(h.grid(), h.values());
        for k in 0..h.len() {
            worst = worst.max((env.values()[k] - lp[k]).abs());
            worst_brute = worst_brute.max((env.values()[k] - brute[k]).abs());
        }
    }
    verdict(
        worst <= 1e-8 && worst_brute <= 1e-8,
        format!("{} profiles, LP gap {worst:.2e}, brute-force gap {worst_brute:.2e} <= 1e-8", profiles.len()),
    )
}

fn criterion_3() -> Verdict {
    let f = Potential::QuarticWell { s: 0.5 };
    let x: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
    let h: Vec<f64> = x.iter().map(|t| (t * t - 0.25).powi(2)).collect();
    let env = brute_envelope_fast(&x, &h);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for order in [0.0, 0.25, 0.5] {
        let q = QTensor2::from_disk(0.5 * order, 0.0).unwrap();
        let k = (order * 2000.0).round() as usize;
        let predicted = 4.0 * env[k];
        let spec = CellProblemSpec::new(q, 0.05, 8, 64, Optimizer::Anneal(AnnealSchedule::seeded(SEED)));
        let res = cell_problem_min(&spec, &f).unwrap();
        let gap = (res.value_per_volume - predicted).abs();
        worst = worst.max(gap);
        parts.push(format!("{order}: {:.2e}", res.value_per_volume));
    }
    let ll = CellProblemSpec::new(
        QTensor2::half_identity(),
        SQRT_2,
        32,
        64,
        Optimizer::Anneal(AnnealSchedule::seeded(SEED)),
    );
    let v = cell_problem_min(&ll, &Potential::LebwohlLasher).unwrap().value_per_volume;
    let rel = (v + 4.0).abs() / 4.0;
    verdict(
        worst <= 0.05 && rel <= 0.05,
        format!("quartic-well {} (max gap {worst:.2e} <= 0.05); lebwohl-lasher {v:.4} ({:.1}% <= 5%)", parts.join(", "), 100.0 * rel),
    )
}

/// Monotone convex envelope via a monotone-chain lower hull of the
/// suffix minimum; used where the quadratic brute force is too slow.
fn brute_envelope_fast(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = h.to_vec();
    for i in (0..n - 1).rev() {
        m[i] = m[i].min(m[i + 1]);
    }
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (x[b] - x[a]) * (m[i] - m[a]) - (m[b] - m[a]) * (x[i] - x[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = vec![0.0; n];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a..=b {
            let t = (x[i] - x[a]) / (x[b] - x[a]);
            out[i] = (1.0 - t) * m[a] + t * m[b];
        }
    }
    out
}

fn criterion_4() -> Verdict {
    let (l, m) = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    let f = Potential::Noradial { l, m };
    let env = DiskEnvelope::build(&relaxed_surface(&f, &SurfaceOptions::default()).unwrap()).unwrap();
    let corners: Vec<[f64; 2]> = noradial_zero_set(l, m).iter().map(|q| q.disk()).collect();
    let mut r = rng(4);
    let mut zero = corners.iter().map(|c| env.eval_disk(c[0], c[1]).abs()).fold(0.0, f64::max);
    for _ in 0..100 {
        let w: [f64; 4] = std::array::from_fn(|_| r.random_range(0.0..1.0));
        let s: f64 = w.iter().sum();
        let p = (0..4).fold([0.0, 0.0], |acc, k| [acc[0] + w[k] / s * corners[k][0], acc[1] + w[k] / s * corners[k][1]]);
        zero = zero.max(env.eval_disk(p[0], p[1]).abs());
    }
    // Frobenius distance 0.05 is disk distance 0.05/√2
    let delta = 0.05 / SQRT_2;
    let hull = planar_hull(&corners);
    let mut outside = f64::INFINITY;
    for k in 0..hull.len() {
        let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
        let e = [b[0] - a[0], b[1] - a[1]];
        let len = e[0].hypot(e[1]);
        let nrm = [e[1] / len, -e[0] / len];
        for j in 0..=25 {
            let s = j as f64 / 25.0;
            let p = [a[0] + s * e[0] + delta * nrm[0], a[1] + s * e[1] + delta * nrm[1]];
            outside = outside.min(env.eval_disk(p[0], p[1]));
        }
    }
    verdict(
        zero < 1e-9 && outside > 0.1,
        format!("max on hull {zero:.2e} < 1e-9; min at distance 0.05 outside {outside:.4} > 0.1"),
    )
}

fn criterion_5() -> Verdict {
    let q = QTensor3::third_identity();
    let f = Potential::LebwohlLasher;
    let rec = recovery_3d(&q, &f, 8, CellSource::Decomposition).unwrap();
    let dirs = decompose3(&q).dirs.map(|d| d.as_array());
    let mut pair_sum = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            let c: f64 = (0..3).map(|k| dirs[i][k] * dirs[j][k]).sum();
            pair_sum += -c * c;
        }
    }
    let predicted = 1.5 * pair_sum;
    let rel = (rec.density - predicted).abs() / predicted.abs();
    let uniform = DirectorField3::constant(Grid3::cube(16).unwrap(), Director3::axis(2));
    let d = interior_density_3d(&EnergySpec::new(f, Bonds::Nn3dQuarterNnn, Scaling::Bulk), &uniform).unwrap();
    let urel = (d + 9.0).abs() / 9.0;
    verdict(
        rel <= 0.03 && urel <= 0.01,
        format!("recovery {:.6} vs {predicted:.6} ({rel:.2e} <= 3%); uniform {d:.6} vs -9 ({urel:.2e} <= 1%)", rec.density),
    )
}

fn criterion_6() -> Verdict {
    // ∫|∇Q|² = 2∫|∇θ|² = 4π² for θ = sin(2πx) sin(2πy) on the unit square
    let reference = 4.0 * PI * PI;
    let spec = EnergySpec::new(Potential::LebwohlLasher, Bonds::Nn2d, Scaling::FirstOrder);
    let mut errs = Vec::new();
    for n in [32, 64, 128, 256] {
        let g = Grid2::with_resolution(Rect::unit(), n).unwrap();
        let field = rotation_field(g, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        let e = first_order_energy(&spec, &field).unwrap();
        errs.push((e - reference).abs() / reference);
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let last = *errs.last().unwrap();
    verdict(
        last <= 0.02 && monotone,
        format!("relative errors {:?}; finest {last:.2e} <= 2%, decreasing {monotone}", errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()),
    )
}

fn criterion_7() -> Verdict {
    let spec = EnergySpec::new(Potential::OneMinus, Bonds::Nn2d, Scaling::FirstOrder);
    let bound = 8.0 + (SQRT_2 + 1.0).powi(4) / 2.0;
    let mut worst = f64::NEG_INFINITY;
    for n in [32, 64, 128, 256, 512] {
        let e = first_order_energy(&spec, &hedgehog_field(1.0 / n as f64).unwrap()).unwrap();
        worst = worst.max(e);
    }
    verdict(worst <= 26.0 && worst <= bound, format!("max energy {worst:.4} <= 26 (analytic {bound:.4})"))
}

fn oscillation_errors() -> Vec<(f64, f64)> {
    let k = 0.5 * PI;
    // (2/s²)∫|∇Q|² with |∇Q|² = 2s²k² on the unit square
    let target = 4.0 * k * k;
    [0.5, FRAC_1_SQRT_2]
        .into_iter()
        .map(|s| {
            let spec = EnergySpec::new(Potential::QuarticWell { s }, Bonds::NnNnnCompetition, Scaling::FirstOrder);
            let g = Grid2::with_resolution(Rect::unit(), 256).unwrap();
            let field = oscillating_field(g, s, |x| k * x[0]).unwrap();
            let e = energy(&spec, &field).unwrap().total;
            (s, (e - target).abs() / target)
        })
        .collect()
}

fn criterion_8() -> Verdict {
    let errs = oscillation_errors();
    verdict(
        errs.iter().all(|(_, e)| *e <= 0.05),
        errs.iter().map(|(s, e)| format!("s={s:.4}: {e:.3}")).collect::<Vec<_>>().join(", ") + " (relative, <= 5%)",
    )
}

fn vortex_case(charges: &[i32]) -> (bool, String) {
    let grid = |n: usize| Grid2::with_resolution(Rect::square(0.5), n).unwrap();
    let atoms = |g: &Grid2| {
        let k = charges.len() as f64;
        AtomicMeasure::new(
            charges
                .iter()
                .enumerate()
                .map(|(j, z)| (plaquette_center(g, [0.4 * (j as f64 - 0.5 * (k - 1.0)), 0.0]), *z))
                .collect(),
        )
        .unwrap()
    };
    let expected_slope = PI * charges.iter().map(|z| z.abs()).sum::<i32>() as f64;
    let fit = concentration_fit(&[1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0], |e| {
        let g = grid((1.0 / e).round() as usize);
        multi_vortex_field(&g, &atoms(&g))
    })
    .unwrap();
    let slope_rel = (fit.slope - expected_slope).abs() / expected_slope;
    let mut ok = slope_rel <= 0.1;
    let mut detail = format!("slope {:.4} vs {expected_slope:.4} ({slope_rel:.2e} <= 10%)", fit.slope);
    if charges.len() == 1 {
        let g = grid(256);
        let mu = atoms(&g);
        let c = mu.atoms()[0].0;
        let aux = aux_map(&affine_interpolate(&multi_vortex_field(&g, &mu).unwrap()));
        let mut worst_res = 0.0f64;
        for r in [0.1, 0.2, 0.3] {
            let w = winding_number(&aux, c, r).unwrap();
            ok &= w.degree == 1;
            worst_res = worst_res.max(w.residual);
        }
        ok &= worst_res < 0.1;
        let mass = jacobian_density(&aux).ball_mass(c, 0.3);
        let mrel = (mass - PI).abs() / PI;
        ok &= mrel <= 0.05;
        detail = format!("degrees 1 (residual {worst_res:.2e} < 0.1), ball mass {mass:.5} ({mrel:.2e} <= 5%), {detail}");
    }
    (ok, detail)
}

fn criterion_9() -> Verdict {
    let (a, da) = vortex_case(&[1]);
    let (b, db) = vortex_case(&[1, 1]);
    verdict(a && b, format!("single: {da}; pair: {db}"))
}

fn random_field(r: &mut ChaCha8Rng, n: usize) -> DirectorField2 {
    let g = Grid2::with_resolution(Rect::unit(), n).unwrap();
    DirectorField2::from_fn(g, |_, _| Director2::from_angle(r.random_range(0.0..2.0 * PI)))
}

fn criterion_10() -> Verdict {
    let mut r = rng(10);
    let isotropic = [
        Potential::LebwohlLasher,
        Potential::QuarticWell { s: 0.5 },
        Potential::OneMinus,
        Potential::Power { p: 3.0 },
    ];
    let mut flips_ok = true;
    let mut rot = 0.0f64;
    for _ in 0..20 {
        let field = random_field(&mut r, 12);
        let flipped = field.map(|_, u| if r.random_bool(0.5) { u.flipped() } else { *u });
        let phi = r.random_range(0.0..2.0 * PI);
        let rotated = field.map(|_, u| u.rotated(phi));
        let mut potentials: Vec<Potential> = isotropic.to_vec();
        potentials.push(Potential::Noradial { l: FRAC_1_SQRT_2, m: FRAC_1_SQRT_2 });
        for p in &potentials {
            for bonds in [Bonds::Nn2d, Bonds::NnNnnCompetition] {
                let spec = EnergySpec::new(p.clone(), bonds, Scaling::Bulk);
                let a = energy(&spec, &field).unwrap().total;
                flips_ok &= a.to_bits() == energy(&spec, &flipped).unwrap().total.to_bits();
                if p.is_isotropic() {
                    let b = energy(&spec, &rotated).unwrap().total;
                    rot = rot.max((a - b).abs() / a.abs().max(1e-300));
                }
            }
        }
        // director flips of the checked tensor field must not alter Q either
        flips_ok &= field.values().iter().zip(flipped.values()).all(|(u, v)| q_of(u) == q_of(v));
    }
    let mut violations = 0;
    let mut slack = f64::INFINITY;
    for k in 0..1000 {
        let field = random_field(&mut r, 4 + k % 8);
        let p = &isotropic[k % isotropic.len()];
        let (lhs, rhs) = dual_lower_bound(&field, p).unwrap();
        let tol = 1e-12 * lhs.abs().max(1.0);
        if lhs < rhs - tol {
            violations += 1;
        }
        slack = slack.min(lhs - rhs);
    }
    verdict(
        flips_ok && rot < 1e-9 && violations == 0,
        format!("flips bit-identical {flips_ok}; rotation drift {rot:.2e} < 1e-9; lower bound violations {violations}/1000 (min slack {slack:.2e})"),
    )
}

fn main() {
    // `--strict` (or `--ignored`) treats known failures as failures too
    let strict = std::env::args().any(|a| a == "--strict" || a == "--ignored");
    let criteria: [fn() -> Verdict; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let verdicts: Vec<Verdict> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|c| s.spawn(c)).collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut unexpected = Vec::new();
    for (k, v) in verdicts.iter().enumerate() {
        let n = k + 1;
        let known = KNOWN_FAILING.contains(&n);
        let note = if !v.pass && known { " [known]" } else { "" };
        println!("{} criterion {n}: {}{note}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if (strict && !v.pass) || (!strict && v.pass == known) {
            unexpected.push(n);
        }
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    println!("acceptance: {passed}/10 criteria pass");
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcome: {unexpected:?}");
        std::process::exit(1);
    }
}
