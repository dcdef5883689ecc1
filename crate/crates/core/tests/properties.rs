use approx::assert_relative_eq;
use proptest::prelude::*;
use swm_core::io::{measure_atoms_json, measure_csv, read_measure};
use swm_core::models::{BesselModel, SolitonModel};
use swm_core::schrodinger::Potential;
use swm_core::spectral::SpectralMeasure;
use swm_core::weyl::{singular_m, SolutionSystem};
use swm_core::Complex64;

fn nonreal() -> impl Strategy<Value = Complex64> {
    (-50.0..50.0f64, 0.1..40.0f64, any::<bool>()).prop_map(|(re, im, up)| Complex64::new(re, if up { im } else { -im }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bessel_wronskian_is_one(l in 0.0..4.0f64, z in nonreal(), x in 0.05..3.0f64) {
        let b = BesselModel::new(l).unwrap();
        let (p, dp) = b.phi(z, x).unwrap();
        let (t, dt) = b.theta(z, x).unwrap();
        let w = t * dp - dt * p;
        prop_assert!((w - 1.0).norm() < 1e-8 * (1.0 + p.norm() * dt.norm()), "W = {}", w);
    }

    #[test]
    fn bessel_m_is_real_symmetric(l in 0.0..4.0f64, z in nonreal()) {
        let b = BesselModel::new(l).unwrap();
        let (m, mc) = (b.m(z), b.m(z.conj()));
        assert_relative_eq!(m.re, mc.re, max_relative = 1e-12, epsilon = 1e-12);
        assert_relative_eq!(m.im, -mc.im, max_relative = 1e-12, epsilon = 1e-12);
    }

    #[test]
    fn regular_case_is_herglotz(z in nonreal()) {
        let m = BesselModel::new(0.0).unwrap().m(z);
        prop_assert!(m.im * z.im > 0.0);
    }

    #[test]
    fn soliton_solutions_have_unit_wronskian(z in nonreal(), x in 0.1..4.0f64, v1 in -1.0..2.0f64) {
        let s = SolitonModel::real(1.0, v1).unwrap();
        let [p, dp, t, dt] = s.solutions(z, x).unwrap();
        let scale = p.norm() * dt.norm() + dp.norm() * t.norm();
        prop_assert!((t * dp - dt * p - 1.0).norm() < 1e-8 + 1e-12 * scale);
    }

    #[test]
    fn measure_export_round_trips(
        density in prop::collection::vec(0.0..10.0f64, 3..40),
        atoms in prop::collection::vec((-5.0..-0.01f64, 1e-3..10.0f64), 0..4),
    ) {
        let grid: Vec<f64> = (0..density.len()).map(|i| 0.37 * i as f64).collect();
        let m = SpectralMeasure::new(grid, density, atoms).unwrap();
        let back = read_measure(&measure_csv(&m), Some(&measure_atoms_json(&m).unwrap())).unwrap();
        prop_assert_eq!(back, m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn numeric_m_agrees_with_closed_form(z in nonreal()) {
        let b = BesselModel::new(1.0).unwrap();
        let pot = Potential::bessel(1.0).unwrap();
        let m = singular_m(&SolutionSystem::bessel(b), &pot, 1.0, z, 1e-11).unwrap();
        let want = b.m(z);
        prop_assert!((m - want).norm() < 1e-6 * want.norm(), "{} vs {}", m, want);
    }
}
