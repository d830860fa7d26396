use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use shfront_core::amplitude::{coefficients_qcsh, ModelParams, ReducedSystem, Variant};
use shfront_core::connect::integrate;
use shfront_core::equilibria::{catalogue, landau_jacobian, predicted_counts, qep_eigenvalues, qep_residual, spatial_stability};
use shfront_core::frontspeed::marginal_exact;
use shfront_core::lattice::{enumerate_lattice, make_direction, AngleSpec, Direction, LatticeKind};
use shfront_core::spectrum::{residual, roots_at, DispersionContext};
use shfront_core::{Complex64, Error};

const HEX_ANGLES: [AngleSpec; 4] = [
    AngleSpec::AxisX,
    AngleSpec::Rational { p: 2, q: 1 },
    AngleSpec::Rational { p: 3, q: 2 },
    AngleSpec::Rational { p: 7, q: 4 },
];

fn hex_dir(i: usize) -> Direction {
    make_direction(LatticeKind::Hex, HEX_ANGLES[i % HEX_ANGLES.len()]).unwrap()
}

fn hex_params() -> impl Strategy<Value = ModelParams> {
    (0.05f64..3.0, 0.2f64..4.0, -1.5f64..1.5, -4.0f64..-0.2, -4.0f64..-0.2)
        .prop_map(|(mu0, c0, b, k0, k2)| ModelParams::hex(mu0, c0, b, k0, k2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_solve_the_dispersion_relation_and_pair_by_conjugation(
        gi in 0usize..37, ai in 0usize..4, eps in 1e-4f64..0.05, mu0 in 0.2f64..2.0, c0 in 0.2f64..3.0,
    ) {
        let pts = enumerate_lattice(LatticeKind::Hex, 3.5);
        let g = pts[gi % pts.len()];
        let ctx = DispersionContext::new(mu0, c0, eps, hex_dir(ai)).unwrap();
        let r = roots_at(&g, &ctx).unwrap();
        for l in r {
            prop_assert!(residual(&g, &ctx, l) <= 1e-9 * (1.0 + l.norm().powi(4)));
        }
        let mut m = roots_at(&g.neg(), &ctx).unwrap().map(|z| z.conj());
        for l in r {
            let (k, d) = m.iter().enumerate().map(|(k, z)| (k, (z - l).norm())).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            prop_assert!(d <= 1e-7 * (1.0 + l.norm()), "{l} vs {:?}", m);
            m[k] = Complex64::new(f64::NAN, f64::NAN);
        }
    }

    #[test]
    fn energy_dissipation_identity(p in hex_params(), ai in 0usize..4, y in prop::array::uniform6(-1.0f64..1.0)) {
        let sys = ReducedSystem::new(p, &hex_dir(ai)).unwrap();
        let g = sys.energy_gradient(&y);
        let f = sys.rhs_vec(&y);
        let pairing: f64 = g.iter().zip(&f).map(|(a, b)| a * b).sum();
        let b2: f64 = [1, 3, 5].iter().map(|&i| y[i] * y[i]).sum();
        let scale = 1.0 + g.iter().zip(&f).map(|(a, b)| (a * b).abs()).sum::<f64>();
        prop_assert!((pairing + p.c0 * b2).abs() <= 1e-12 * scale);
        prop_assert!((sys.dissipation(&y) + p.c0 * b2).abs() <= 1e-12 * scale);
    }

    #[test]
    fn cyclic_permutation_commutes_with_the_flow(p in hex_params(), ai in 0usize..4, y in prop::array::uniform6(-1.0f64..1.0)) {
        let sys = ReducedSystem::new(p, &hex_dir(ai)).unwrap();
        let rot = |v: &[f64]| vec![v[2], v[3], v[4], v[5], v[0], v[1]];
        let d = sys.diffusion;
        let rotated = ReducedSystem { diffusion: [d[1], d[2], d[0]], ..sys };
        let lhs = rotated.rhs_vec(&rot(&y));
        let rhs = rot(&sys.rhs_vec(&y));
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn catalogue_entries_and_their_sign_images_are_equilibria(p in hex_params()) {
        for r in catalogue(&p).iter().filter(|r| r.exists) {
            prop_assert!(r.residual <= 1e-10, "{r:?}");
            let a = r.amplitudes;
            let f = p.f_all(&[a[0], -a[1], -a[2]]);
            prop_assert!(f.iter().all(|v| v.abs() <= 1e-10));
        }
        let sq = ModelParams::square(p.mu0, p.c0, p.k0, p.k_cross);
        for r in catalogue(&sq).iter().filter(|r| r.exists) {
            prop_assert!(r.residual <= 1e-10, "{r:?}");
        }
    }

    #[test]
    fn stable_count_follows_the_landau_law(
        d in prop::array::uniform3(0.05f64..5.0), c0 in 0.05f64..5.0, p in hex_params(), a in prop::array::uniform3(-1.5f64..1.5),
    ) {
        let dm = DMatrix::from_diagonal(&DVector::from_column_slice(&d));
        let l = landau_jacobian(&a, &p);
        let ev = qep_eigenvalues(&dm, c0, &l).unwrap();
        for z in &ev {
            prop_assert!(qep_residual(&dm, c0, &l, *z) <= 1e-8 * (1.0 + z.norm_sqr()));
        }
        let lev = l.clone().symmetric_eigenvalues();
        let marginal = ev.iter().any(|z| z.re.abs() < 1e-8) || lev.iter().any(|e| e.abs() < 1e-8);
        prop_assume!(!marginal);
        let n = lev.iter().filter(|e| **e > 0.0).count();
        let stable = ev.iter().filter(|z| z.re < 0.0).count();
        prop_assert_eq!(stable, 3 + n);
    }

    #[test]
    fn spatial_counts_do_not_depend_on_the_direction(p in hex_params()) {
        for r in catalogue(&p).iter().filter(|r| r.exists) {
            let mut seen = None;
            for ai in 0..HEX_ANGLES.len() {
                match spatial_stability(&r.amplitudes, &p, &hex_dir(ai)) {
                    Ok(s) => {
                        let c = (s.n_stable, s.n_unstable);
                        prop_assert_eq!(c, predicted_counts(Variant::HexGeneric, r.n_unstable_landau()));
                        if let Some(prev) = seen { prop_assert_eq!(prev, c); }
                        seen = Some(c);
                    }
                    Err(Error::Marginal { .. }) => {}
                    Err(e) => prop_assert!(false, "{e}"),
                }
            }
        }
    }

    #[test]
    fn companion_eigenvalues_of_the_reduced_system_solve_the_qep(p in hex_params(), ai in 0usize..4) {
        let dir = hex_dir(ai);
        let sys = ReducedSystem::new(p, &dir).unwrap();
        for r in catalogue(&p).iter().filter(|r| r.exists) {
            let y = r.state(sys.variant);
            let jac = DMatrix::from_row_slice(6, 6, &sys.jacobian(y.as_slice()));
            let dm = DMatrix::from_diagonal(&DVector::from_column_slice(&sys.diffusion));
            let l = landau_jacobian(&r.amplitudes, &p);
            for z in jac.complex_eigenvalues().iter() {
                prop_assert!(qep_residual(&dm, p.c0, &l, *z) <= 1e-8 * (1.0 + z.norm_sqr()));
            }
        }
    }

    #[test]
    fn marginal_speed_decreases_with_transverse_wavenumber(mu in 1e-4f64..2.0, k in 0.0f64..0.98, dk in 1e-3f64..0.02) {
        let k2 = (k + dk).min(0.999);
        prop_assert!(marginal_exact(k2, mu).unwrap().c < marginal_exact(k, mu).unwrap().c);
        prop_assert!((marginal_exact(-k, mu).unwrap().c - marginal_exact(k, mu).unwrap().c).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_never_increases_along_orbits(p in hex_params(), ai in 0usize..4, y in prop::array::uniform6(-0.3f64..0.3)) {
        let sys = ReducedSystem::new(p, &hex_dir(ai)).unwrap();
        match integrate(&sys, &y, 0.0, 30.0, 1e-10, 1e-12) {
            Ok(t) => prop_assert!(t.max_energy_increase() <= 1e-7),
            Err(Error::Diverged { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn coefficients_approach_their_cubic_limits_quadratically() {
    for kind in [LatticeKind::Hex, LatticeKind::Square] {
        for beta in [0.2, 0.1, 0.05, 0.025] {
            let c = coefficients_qcsh(beta, kind).unwrap();
            let err = (c.k0 + 3.0).abs().max((c.k0 + c.k_cross + 9.0).abs());
            assert!(err <= 2.0 * beta * beta, "{kind} beta {beta}: {err}");
        }
    }
}
