mod common;

use isotns::circuit::build_isometry_circuit;
use isotns::isotns::{check_feasible, BondPolicy, IsoTns, MosesOptions, Side, Vertical};
use isotns::statevector::Statevector;
use proptest::prelude::*;

use common::{fidelity, max_diff};

#[derive(Clone, Copy, Debug)]
enum Op {
    Down,
    Up,
    Right,
    Left,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![Just(Op::Down), Just(Op::Up), Just(Op::Right), Just(Op::Left)]
}

/// A feasible grid of at most 3x3 sites with its bond dimension.
fn grid() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=3, 1usize..=3, prop_oneof![Just(1usize), Just(2)])
        .prop_filter("feasible", |&(lx, ly, d)| check_feasible(lx, ly, d).is_ok())
}

/// Applies `op` when it is legal, lifting the center to the top first for
/// sideways moves. Returns the Moses fidelity estimate if one was made.
fn apply(s: &mut IsoTns, op: Op) -> Option<f64> {
    let (c, r) = s.center();
    match op {
        Op::Down if r + 1 < s.ly() => {
            s.shift_center_in_column(Vertical::Down).unwrap();
            None
        }
        Op::Up if r > 0 => {
            s.shift_center_in_column(Vertical::Up).unwrap();
            None
        }
        Op::Right if c + 1 < s.lx() => {
            s.shift_center_to_top().unwrap();
            Some(s.moses_move(Side::Right, &MosesOptions::default()).unwrap().fidelity_estimate)
        }
        Op::Left if c > 0 => {
            s.shift_center_to_top().unwrap();
            Some(s.moses_move(Side::Left, &MosesOptions::default()).unwrap().fidelity_estimate)
        }
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn moves_keep_isometries_norm_and_fidelity(
        (lx, ly, d) in grid(),
        seed in any::<u64>(),
        ops in prop::collection::vec(op(), 1..10),
    ) {
        let mut s = IsoTns::init_random(lx, ly, d, seed).unwrap();
        for op in ops {
            let before = s.contract_full().unwrap();
            let moses = apply(&mut s, op);
            let after = s.contract_full().unwrap();
            prop_assert!(s.max_isometry_deviation() < 1e-8);
            prop_assert!((s.norm() - after.norm()).abs() < 1e-10);
            match moses {
                Some(f) => {
                    prop_assert!(f <= 1.0 + 1e-12);
                    prop_assert!((fidelity(&before, &after) - f).abs() < 1e-8);
                }
                None => prop_assert!(max_diff(before.data(), after.data()) < 1e-10),
            }
        }
    }

    #[test]
    fn in_column_shifts_report_unit_fidelity((lx, ly, d) in grid(), seed in any::<u64>()) {
        prop_assume!(ly > 1);
        let mut s = IsoTns::init_random(lx, ly, d, seed).unwrap();
        let rep = s.shift_center_in_column(Vertical::Down).unwrap();
        prop_assert!((rep.fidelity_estimate - 1.0).abs() < 1e-10);
        let rep = s.shift_center_in_column(Vertical::Up).unwrap();
        prop_assert!((rep.fidelity_estimate - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unbounded_adaptive_moses_is_exact(ly in 1usize..=2, seed in any::<u64>()) {
        let mut s = IsoTns::init_random(2, ly, 2, seed).unwrap();
        let before = s.contract_full().unwrap();
        let rep = s.moses_move(Side::Right, &MosesOptions { bond: BondPolicy::Adaptive { max: None } }).unwrap();
        let after = s.contract_full().unwrap();
        prop_assert!((rep.fidelity_estimate - 1.0).abs() < 1e-10);
        prop_assert!(max_diff(before.data(), after.data()) < 1e-10);
    }

    #[test]
    fn moses_round_trip_stays_within_the_angle_bound(ly in 1usize..=3, seed in any::<u64>()) {
        let mut s = IsoTns::init_random(2, ly, 2, seed).unwrap();
        let start = s.contract_full().unwrap();
        let f1 = s.moses_move(Side::Right, &MosesOptions::default()).unwrap().fidelity_estimate;
        let f2 = s.moses_move(Side::Left, &MosesOptions::default()).unwrap().fidelity_estimate;
        let back = s.contract_full().unwrap();
        let angle = f1.min(1.0).acos() + f2.min(1.0).acos();
        let bound = if angle < std::f64::consts::FRAC_PI_2 { angle.cos() } else { 0.0 };
        prop_assert!(fidelity(&start, &back) >= bound - 1e-10);
    }

    #[test]
    fn snake_visits_every_site_once((lx, ly, d) in grid(), seed in any::<u64>()) {
        let mut s = IsoTns::init_random(lx, ly, d, seed).unwrap();
        let mut seen = vec![s.center()];
        for c in 0..lx {
            for _ in 1..ly {
                s.shift_center_in_column(Vertical::Down).unwrap();
                seen.push(s.center());
            }
            s.shift_center_to_top().unwrap();
            if c + 1 < lx {
                s.moses_move(Side::Right, &MosesOptions::default()).unwrap();
                seen.push(s.center());
            }
            prop_assert!(s.check_isometries(1e-8).is_ok());
        }
        let mut sorted = seen.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), lx * ly);
        prop_assert_eq!(seen.len(), lx * ly);
    }

    #[test]
    fn binary_round_trip_is_bit_exact((lx, ly, d) in grid(), seed in any::<u64>(), ops in prop::collection::vec(op(), 0..4)) {
        let mut s = IsoTns::init_random(lx, ly, d, seed).unwrap();
        for op in ops {
            apply(&mut s, op);
        }
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let back = IsoTns::read_from(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.center(), s.center());
        for (a, b) in back.tensors().iter().zip(s.tensors()) {
            prop_assert_eq!(a.shape(), b.shape());
            prop_assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        }
    }

    #[test]
    fn circuit_reproduces_contraction((lx, ly, d) in grid(), seed in any::<u64>(), ops in prop::collection::vec(op(), 0..6)) {
        let mut s = IsoTns::init_random(lx, ly, d, seed).unwrap();
        for op in ops {
            apply(&mut s, op);
        }
        let circ = build_isometry_circuit(&s).unwrap();
        prop_assert!(circ.validate(1e-10).is_ok());
        prop_assert_eq!(circ.n_qubits, (lx + 2) * ly);
        let psi0 = circ.initial_state(s.center_tensor().data()).unwrap();
        let out = Statevector::from_amplitudes(psi0).unwrap().run(&circ).unwrap();
        prop_assert!((out.norm() - s.norm()).abs() < 1e-10);
        prop_assert!(max_diff(out.amplitudes(), s.contract_full().unwrap().data()) < 1e-10);
    }
}
