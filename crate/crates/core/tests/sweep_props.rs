use isotns::estimators::energy_of;
use isotns::isotns::{IsoTns, MosesOptions, Side};
use isotns::pauli::tfim;
use isotns::reference::exact_ground;
use isotns::sweep::{optimize, sweep_schedule, Method, SweepConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_sweeps_are_locally_variational(lx in 1usize..=2, ly in 1usize..=3, seed in any::<u64>(), g in 0.5f64..4.0) {
        let h = tfim(lx + 2, ly, g);
        let e0 = exact_ground(&h).unwrap().ground_energy;
        let mut s = IsoTns::init_random(lx, ly, 2, seed).unwrap();
        let config = SweepConfig { method: Method::Exact, sweeps: 2, reference_energy: Some(e0), ..Default::default() };
        let report = optimize(&mut s, &h, &config).unwrap();
        prop_assert_eq!(report.steps.len(), 2 * lx * ly);
        prop_assert_eq!(s.center(), (0, 0));
        for (i, step) in report.steps.iter().enumerate() {
            let exact = step.exact_energy.unwrap();
            prop_assert!((exact - step.energy).abs() < 1e-9);
            prop_assert!(exact >= e0 - 1e-8);
            if i > 0 && step.moses_fidelity.is_none() {
                prop_assert!(step.energy <= report.steps[i - 1].energy + 1e-9);
            }
        }
    }

    #[test]
    fn moses_energy_change_is_bounded_by_fidelity(lx in 2usize..=3, ly in 1usize..=3, seed in any::<u64>(), g in 0.0f64..4.0) {
        let h = tfim(lx + 2, ly, g);
        let mut s = IsoTns::init_random(lx, ly, 2, seed).unwrap();
        let norm = h.norm_bound();
        for side in [Side::Right, Side::Left] {
            let before = energy_of(&s, &h).unwrap();
            let f = s.moses_move(side, &MosesOptions::default()).unwrap().fidelity_estimate;
            let after = energy_of(&s, &h).unwrap();
            prop_assert!((after - before).abs() <= 2.0 * norm * (1.0 - f * f) + 1e-8,
                "dE {} vs bound {} (F = {})", (after - before).abs(), 2.0 * norm * (1.0 - f * f), f);
        }
    }

    #[test]
    fn sampled_runs_are_reproducible(seed in any::<u64>(), method in prop_oneof![Just(Method::Tomography), Just(Method::Lanczos)]) {
        let h = tfim(3, 2, 3.5);
        let config = SweepConfig { method, sweeps: 1, shots: 20, adaptive_doubling: true, seed, ..Default::default() };
        let run = || {
            let mut s = IsoTns::init_random(1, 2, 2, 3).unwrap();
            optimize(&mut s, &h, &config).unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(&a, &b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        prop_assert_eq!(x, y);
        prop_assert!(a.steps.windows(2).all(|w| w[0].shots_cumulative <= w[1].shots_cumulative));
    }
}

#[test]
fn schedule_covers_every_site_column_by_column() {
    for (lx, ly) in [(1, 1), (2, 3), (3, 5)] {
        let s = sweep_schedule(lx, ly);
        assert_eq!(s.len(), lx * ly);
        assert_eq!(s[0], (0, 0));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
