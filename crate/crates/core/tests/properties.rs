use std::f64::consts::TAU;

use aahlab::model::{bloch_hamiltonian, BlochGauge, BlochMomentum, ModulationParams, Rational};
use aahlab::topology::{chern_numbers, MeshStates};
use num_complex::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModulationParams> {
    (
        prop::sample::select(vec![(1u32, 3u32), (1, 5), (2, 5), (3, 7), (2, 9)]),
        0.0..6.0f64,
        0.0..12.0f64,
        0.0..TAU,
    )
        .prop_map(|((p, q), d, od, phi)| ModulationParams::new(1.0, d, od, Rational::new(p, q).unwrap()).with_delta_phi(phi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bloch_block_is_hermitian(p in params(), kx in -4.0..4.0f64, ky in 0.0..TAU) {
        let h = bloch_hamiltonian(&p, BlochMomentum::reduced(kx, ky, p.q()));
        prop_assert!(h.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn spectrum_is_periodic_in_both_momenta(p in params(), kx in -1.0..1.0f64, ky in 0.0..TAU) {
        let q = p.q();
        let e0 = aahlab::spectral::eigvalsh(&bloch_hamiltonian(&p, BlochMomentum { kx, ky })).unwrap();
        let e1 = aahlab::spectral::eigvalsh(&bloch_hamiltonian(&p, BlochMomentum { kx: kx + TAU / q as f64, ky })).unwrap();
        let e2 = aahlab::spectral::eigvalsh(&bloch_hamiltonian(&p, BlochMomentum { kx, ky: ky + TAU })).unwrap();
        for n in 0..q {
            prop_assert!((e0[n] - e1[n]).abs() < 1e-10);
            prop_assert!((e0[n] - e2[n]).abs() < 1e-10);
        }
    }

    #[test]
    fn defined_chern_numbers_sum_to_zero(p in params()) {
        if let Ok(c) = chern_numbers(&p, 48, 48, 1e-3) {
            if let Some(v) = c.integers() {
                prop_assert_eq!(v.iter().sum::<i32>(), 0);
            }
        }
    }

    #[test]
    fn coarse_meshes_never_report_a_nonzero_total(p in params()) {
        match chern_numbers(&p, 8, 8, 1e-3) {
            Ok(c) => prop_assert!(c.integers().map_or(true, |v| v.iter().sum::<i32>() == 0)),
            Err(e) => prop_assert!(matches!(e, aahlab::Error::MeshTooCoarse(_)), "{e}"),
        }
    }

    #[test]
    fn plaquettes_ignore_state_phases(p in params(), seed in any::<u64>()) {
        let states = MeshStates::for_params(&p, 8, 8, BlochGauge::EveryBond).unwrap();
        let mut rotated = states.clone();
        let mut s = seed;
        for point in rotated.states.iter_mut() {
            for v in point.iter_mut() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let phase = Complex64::from_polar(1.0, (s >> 11) as f64 / (1u64 << 53) as f64 * TAU);
                v.iter_mut().for_each(|c| *c *= phase);
            }
        }
        for band in 0..states.bands() {
            if let (Some(a), Some(b)) = (states.plaquette_field(band), rotated.plaquette_field(band)) {
                for (x, y) in a.values.iter().zip(&b.values) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn windings_stable_under_threshold(threshold in 0.4..0.8f64, ratio in prop::sample::select(vec![1.0, 10.0])) {
        let params = ModulationParams::off_diagonal(ratio);
        let settings = aahlab::edge::EdgeSettings { threshold, n_ky: 120, ..Default::default() };
        let (report, _) = aahlab::edge::bulk_edge_check(&params, &settings).unwrap();
        prop_assert!(report.consistent);
        let want = if ratio == 1.0 { vec![-1, 1] } else { vec![2, -2] };
        prop_assert_eq!(report.windings, want);
    }
}
