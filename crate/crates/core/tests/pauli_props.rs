mod common;

use isotns::pauli::{center_terms, group_qubitwise, Pauli, PauliString, PauliSum};
use isotns::tensor::{hermiticity_deviation, hermitian_lowest};
use isotns::C64;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{max_diff, random_unit};

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn string(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(pauli(), n).prop_map(PauliString::new)
}

/// A sum of distinct strings on `n` qubits.
fn sum(n: usize) -> impl Strategy<Value = PauliSum> {
    prop::collection::vec((-3.0f64..3.0, string(n)), 1..8).prop_map(move |terms| {
        let mut seen = std::collections::HashSet::new();
        let terms: Vec<(f64, PauliString)> = terms.into_iter().filter(|(_, p)| seen.insert(p.to_string())).collect();
        PauliSum::new(n, terms).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn strings_square_to_identity_and_have_bounded_expectations(n in 1usize..=6, seed in any::<u64>(), letters in prop::collection::vec(pauli(), 6)) {
        let p = PauliString::new(letters[..n].to_vec());
        let psi = random_unit(1 << n, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(max_diff(&p.apply(&p.apply(&psi)), &psi) < 1e-12);
        let e = p.expectation(&psi);
        prop_assert!(e.abs() <= 1.0 + 1e-12);
        let direct: C64 = psi.iter().zip(p.apply(&psi)).map(|(a, b)| a.conj() * b).sum();
        prop_assert!((direct.re - e).abs() < 1e-12 && direct.im.abs() < 1e-12);
    }

    #[test]
    fn text_form_round_trips(n in 1usize..=8, letters in prop::collection::vec(pauli(), 8)) {
        let p = PauliString::new(letters[..n].to_vec());
        prop_assert_eq!(p.to_string().parse::<PauliString>().unwrap(), p);
    }

    #[test]
    fn sum_matrix_is_hermitian_and_matches_apply(h in sum(4), seed in any::<u64>()) {
        let m = h.to_matrix().unwrap();
        prop_assert!(hermiticity_deviation(&m) < 1e-12);
        let psi = random_unit(16, &mut ChaCha8Rng::seed_from_u64(seed));
        let dense = &m * DVector::from_column_slice(&psi);
        prop_assert!(max_diff(&h.apply(&psi), dense.as_slice()) < 1e-12);
        prop_assert!(h.expectation(&psi).abs() <= h.norm_bound() + 1e-12);
    }

    #[test]
    fn groups_commute_and_partition_terms(h in sum(5)) {
        let groups = group_qubitwise(&h);
        let mut covered: Vec<usize> = groups.iter().flat_map(|g| g.members.clone()).collect();
        covered.sort();
        prop_assert_eq!(covered, (0..h.len()).collect::<Vec<_>>());
        for g in &groups {
            for &a in &g.members {
                for &b in &g.members {
                    prop_assert!(h.terms()[a].1.qubitwise_commutes(&h.terms()[b].1));
                }
                // the group basis diagonalizes every member
                for (l, b) in h.terms()[a].1.letters().iter().zip(&g.basis) {
                    prop_assert!(*l == Pauli::I || l == b);
                }
            }
        }
    }

    #[test]
    fn centering_shifts_the_spectrum_by_the_offset(h in sum(3), shifts in prop::collection::vec(-1.0f64..1.0, 8)) {
        let c = center_terms(&h, &shifts[..h.len()]).unwrap();
        let full = hermitian_lowest(&h.to_matrix().unwrap(), 8).unwrap();
        let mut centered = h.to_matrix().unwrap();
        for i in 0..8 {
            centered[(i, i)] -= C64::new(c.offset, 0.0);
        }
        let shifted = hermitian_lowest(&centered, 8).unwrap();
        for (a, b) in full.values.iter().zip(&shifted.values) {
            prop_assert!((a - c.offset - b).abs() < 1e-10);
        }
        let expected: f64 = h.terms().iter().zip(&shifts).map(|((w, _), s)| w * s).sum();
        prop_assert!((c.offset - expected).abs() < 1e-12);
    }
}
