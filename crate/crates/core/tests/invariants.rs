use std::f64::consts::PI;

use proptest::prelude::*;
use qlattice::energy::{dual_lower_bound, energy, Bonds, EnergySpec, Scaling};
use qlattice::envelope::{monotone_convex_envelope, Potential, SampledFunction1D};
use qlattice::geometry::Rect;
use qlattice::lattice::{affine_interpolate, DirectorField2, Grid2};
use qlattice::qtensor::Director2;
use qlattice::vortex::{aux_map, half_vortex_field, plaquette_center, winding_number};

fn potential(k: usize) -> Potential {
    match k % 5 {
        0 => Potential::LebwohlLasher,
        1 => Potential::QuarticWell { s: 0.5 },
        2 => Potential::OneMinus,
        3 => Potential::Power { p: 1.5 },
        _ => Potential::SteepWell { s: 0.7 },
    }
}

fn field(n: usize, angles: &[f64]) -> DirectorField2 {
    let g = Grid2::with_resolution(Rect::unit(), n).unwrap();
    let values = (0..g.len()).map(|k| Director2::from_angle(angles[k % angles.len()])).collect();
    DirectorField2::new(g, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn head_to_tail_flips_are_invisible(
        n in 2usize..9,
        angles in prop::collection::vec(0.0..2.0 * PI, 1..100),
        mask in prop::collection::vec(any::<bool>(), 100),
        k in 0usize..5,
        competition in any::<bool>(),
    ) {
        let f = field(n, &angles);
        let mut idx = 0;
        let flipped = f.map(|_, u| {
            idx += 1;
            if mask[idx % mask.len()] { u.flipped() } else { *u }
        });
        let bonds = if competition { Bonds::NnNnnCompetition } else { Bonds::Nn2d };
        let spec = EnergySpec::new(potential(k), bonds, Scaling::FirstOrder);
        let a = energy(&spec, &f).unwrap().total;
        let b = energy(&spec, &flipped).unwrap().total;
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn isotropic_energies_ignore_global_rotations(
        n in 2usize..9,
        angles in prop::collection::vec(0.0..2.0 * PI, 1..100),
        phi in 0.0..2.0 * PI,
        k in 0usize..5,
    ) {
        let f = field(n, &angles);
        let spec = EnergySpec::new(potential(k), Bonds::Nn2d, Scaling::Bulk);
        let a = energy(&spec, &f).unwrap().total;
        let b = energy(&spec, &f.map(|_, u| u.rotated(phi))).unwrap().total;
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
    }

    #[test]
    fn bulk_energy_dominates_dual_bound(
        n in 2usize..9,
        angles in prop::collection::vec(0.0..2.0 * PI, 1..100),
        k in 0usize..5,
    ) {
        let (lhs, rhs) = dual_lower_bound(&field(n, &angles), &potential(k)).unwrap();
        prop_assert!(lhs >= rhs - 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn monotone_envelope_is_a_nondecreasing_convex_minorant(
        vals in prop::collection::vec(-1.0f64..1.0, 2..60),
    ) {
        let n = vals.len();
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let h = SampledFunction1D::new(grid, vals.clone()).unwrap();
        let e = monotone_convex_envelope(&h);
        let v = e.values();
        for i in 0..n {
            prop_assert!(v[i] <= vals[i] + 1e-12);
        }
        for w in v.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        for w in v.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        }
        prop_assert!((v[0] - vals.iter().cloned().fold(f64::INFINITY, f64::min)).abs() <= 1e-12);
    }

    #[test]
    fn half_vortex_degree_matches_sign(
        cx in -0.15f64..0.15,
        cy in -0.15f64..0.15,
        r in 0.1f64..0.3,
        negative in any::<bool>(),
    ) {
        let g = Grid2::with_resolution(Rect::square(0.5), 64).unwrap();
        let c = plaquette_center(&g, [cx, cy]);
        let sign = if negative { -1 } else { 1 };
        let aux = aux_map(&affine_interpolate(&half_vortex_field(&g, c, sign).unwrap()));
        let w = winding_number(&aux, c, r).unwrap();
        prop_assert_eq!(w.degree, sign as i64);
    }
}
