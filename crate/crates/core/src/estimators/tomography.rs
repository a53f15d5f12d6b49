use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{check_center, check_sizes, EffectiveHamiltonian, PauliCoefficient, Provenance, ShotPlan};
use super::{apply_columns, Backend};
use crate::circuit::build_tomography_circuit;
use crate::error::Result;
use crate::isotns::IsoTns;
use crate::pauli::{CommutingGroup, Pauli, PauliString, PauliSum};
use crate::rng::keyed_rng;
use crate::statevector::{OutcomeSampler, Statevector};

/// The Bell-pair state `dim^{-1/2} sum_i |i> (x) U|i>` as a
/// `2^N x dim` matrix (physical index by row, ancilla index by column).
fn bell_state(state: &IsoTns) -> Result<(DMatrix<C64>, usize)> {
    let circ = build_tomography_circuit(state)?;
    let k = circ.ancillas.len();
    let psi = Statevector::simulate(&circ)?.into_amplitudes();
    let rows = psi.len() >> k;
    Ok((DMatrix::from_row_slice(rows, 1 << k, &psi), k))
}

/// Adds `c P` to `m`.
fn add_pauli(m: &mut DMatrix<C64>, p: &PauliString, c: f64) {
    for b in 0..m.ncols() {
        let (t, ph) = p.apply_to_basis(b as u64);
        m[(t as usize, b)] += ph * c;
    }
}

/// `<P^T (x) O> = sum_{a'} sign(P) phase(a') G[a' ^ x, a']` for `G = Phi^dag O Phi`.
fn coefficient_from_gram(g: &DMatrix<C64>, p: &PauliString) -> f64 {
    let sign = p.transpose_sign();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..g.ncols() {
        let (t, ph) = p.apply_to_basis(a as u64);
        acc += ph * g[(t as usize, a)];
    }
    sign * acc.re
}

/// Estimates `H_eff` in the Pauli basis of the center wires by measuring the
/// Bell-pair state in one joint basis per (non-identity Pauli, group).
/// The identity coefficient is returned as `offset`.
pub fn tomography_estimate(
    state: &IsoTns,
    h: &PauliSum,
    plan: &ShotPlan,
    backend: Backend,
) -> Result<EffectiveHamiltonian> {
    check_sizes(state, h)?;
    plan.validate()?;
    let k = check_center(state)?;
    let dim = 1usize << k;
    let (phi, _) = bell_state(state)?;
    let paulis: Vec<PauliString> = (1..dim * dim).map(|i| PauliString::from_basis_index(k, i)).collect();
    let groups = plan.groups(h);
    let mut matrix = DMatrix::zeros(dim, dim);
    let mut coefficients = Vec::with_capacity(paulis.len());
    let (offset, shots_used) = match backend {
        Backend::Exact => {
            let g = phi.adjoint() * apply_columns(h, &phi);
            for p in &paulis {
                let c = coefficient_from_gram(&g, p);
                add_pauli(&mut matrix, p, c);
                coefficients.push(PauliCoefficient { pauli: p.to_string(), value: c, shots: 0 });
            }
            let offset = (0..dim).map(|a| g[(a, a)].re).sum::<f64>();
            (offset, 0)
        }
        Backend::Sampling { seed } => {
            let est = sample_coefficients(&phi, k, h, &groups, &paulis, plan, seed)?;
            for (p, &c) in paulis.iter().zip(&est.values) {
                add_pauli(&mut matrix, p, c);
                coefficients.push(PauliCoefficient {
                    pauli: p.to_string(),
                    value: c,
                    shots: plan.shots_per_setting * groups.len() as u64,
                });
            }
            (est.offset, est.shots)
        }
    };
    Ok(EffectiveHamiltonian {
        dim,
        matrix,
        offset,
        provenance: Provenance::Tomography { shots_per_setting: plan.shots_per_setting },
        shots_used,
        coefficients,
    })
}

pub(crate) struct SampledCoefficients {
    pub values: Vec<f64>,
    pub offset: f64,
    pub shots: u64,
}

/// Per-setting sums gathered from one batch.
struct SettingResult {
    pauli: usize,
    group: usize,
    /// mean of `sign * parity_P(a) * o(x)`
    raw: f64,
    /// mean of `sign * parity_P(a)`
    parity: f64,
}

fn ancilla_basis(p: &PauliString) -> Vec<Pauli> {
    p.letters().iter().map(|&l| if l == Pauli::I { Pauli::Z } else { l }).collect()
}

pub(crate) fn sample_coefficients(
    phi: &DMatrix<C64>,
    k: usize,
    h: &PauliSum,
    groups: &[CommutingGroup],
    paulis: &[PauliString],
    plan: &ShotPlan,
    seed: u64,
) -> Result<SampledCoefficients> {
    let n_phys = phi.nrows().trailing_zeros() as usize;
    let n_groups = groups.len() as u64;
    let shots = plan.shots_per_setting;
    // row-major joint register: index = x * 2^k + a
    let joint: Vec<C64> = (0..phi.nrows()).flat_map(|x| (0..phi.ncols()).map(move |a| (x, a))).map(|(x, a)| phi[(x, a)]).collect();

    // settings sharing an ancilla basis share one rotated distribution
    let mut by_basis: Vec<(Vec<Pauli>, Vec<usize>)> = Vec::new();
    for (i, p) in paulis.iter().enumerate() {
        let b = ancilla_basis(p);
        match by_basis.iter_mut().find(|(bb, _)| *bb == b) {
            Some((_, members)) => members.push(i),
            None => by_basis.push((b, vec![i])),
        }
    }

    let mut results: Vec<SettingResult> = Vec::with_capacity(paulis.len() * groups.len());
    let mut hists: Vec<Vec<u64>> = Vec::with_capacity(groups.len());
    for grp in groups {
        let mut rotated = Statevector::from_amplitudes(joint.clone())?;
        rotated.rotate_qubits(0, &grp.basis)?;
        let obs: Vec<f64> = (0..1u64 << n_phys)
            .map(|x| grp.members.iter().map(|&m| h.terms()[m].0 * h.terms()[m].1.parity(x)).sum())
            .collect();
        let tasks: Vec<(Vec<SettingResult>, Vec<u64>)> = by_basis
            .par_iter()
            .map(|(basis, members)| {
                let mut sv = rotated.clone();
                sv.rotate_qubits(n_phys, basis).expect("ancilla wires exist");
                let sampler = OutcomeSampler::new(sv.probabilities());
                let mut hist = vec![0u64; 1 << n_phys];
                let mut out = Vec::with_capacity(members.len());
                for &pi in members {
                    let p = &paulis[pi];
                    let sign = p.transpose_sign();
                    let id = (pi as u64 + 1) * n_groups + grp.index as u64;
                    let mut rng = keyed_rng(seed, id);
                    let (mut raw, mut par) = (0.0, 0.0);
                    for (o, c) in sampler.draw(shots, &mut rng) {
                        let x = (o >> k) as usize;
                        let a = o & ((1 << k) - 1);
                        let s = sign * p.parity(a) * c as f64;
                        raw += s * obs[x];
                        par += s;
                        hist[x] += c;
                    }
                    out.push(SettingResult {
                        pauli: pi,
                        group: grp.index,
                        raw: raw / shots as f64,
                        parity: par / shots as f64,
                    });
                }
                (out, hist)
            })
            .collect();
        let mut hist = vec![0u64; 1 << n_phys];
        for (out, hh) in tasks {
            results.extend(out);
            for (a, b) in hist.iter_mut().zip(hh) {
                *a += b;
            }
        }
        hists.push(hist);
    }

    // pooled physical marginals give every term's mean, hence the offset and the shifts
    let mut group_shift = vec![0.0; groups.len()];
    let mut offset = 0.0;
    for (grp, hist) in groups.iter().zip(&hists) {
        let total: u64 = hist.iter().sum();
        for &m in &grp.members {
            let (c, p) = &h.terms()[m];
            let mean = hist.iter().enumerate().map(|(x, &n)| n as f64 * p.parity(x as u64)).sum::<f64>() / total as f64;
            group_shift[grp.index] += c * mean;
            offset += c * mean;
        }
    }

    results.sort_by_key(|r| (r.pauli, r.group));
    let mut values = vec![0.0; paulis.len()];
    for r in &results {
        values[r.pauli] += if plan.pooled_shift { r.raw - r.parity * group_shift[r.group] } else { r.raw };
    }
    Ok(SampledCoefficients {
        values,
        offset,
        shots: shots * n_groups * paulis.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::exact_effective_hamiltonian;
    use crate::isotns::{MosesOptions, Side, Vertical};
    use crate::pauli::tfim;

    fn pauli_matrix(p: &PauliString) -> DMatrix<C64> {
        let dim = 1usize << p.n_qubits();
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (t, ph) = p.apply_to_basis(b as u64);
            m[(t as usize, b)] = ph;
        }
        m
    }

    #[test]
    fn pauli_expansion_reconstructs_matrix() {
        let p = PauliString::from_basis_index(2, 7);
        let mut m = DMatrix::zeros(4, 4);
        add_pauli(&mut m, &p, 1.0);
        assert_eq!(m, pauli_matrix(&p));
    }

    #[test]
    fn zero_operator_gives_zero() {
        let s = IsoTns::init_random(1, 2, 2, 0).unwrap();
        let h = PauliSum::zero(s.n_qubits());
        let est = tomography_estimate(&s, &h, &ShotPlan::new(10), Backend::Exact).unwrap();
        assert!(est.full_matrix().camax() < 1e-15);
    }

    #[test]
    fn exact_backend_reproduces_contraction() {
        let mut s = IsoTns::init_random(2, 2, 2, 6).unwrap();
        s.moses_move(Side::Right, &MosesOptions::default()).unwrap();
        s.shift_center_in_column(Vertical::Down).unwrap();
        let h = tfim(4, 2, 3.5);
        let tomo = tomography_estimate(&s, &h, &ShotPlan::new(1), Backend::Exact).unwrap();
        let exact = exact_effective_hamiltonian(&s, &h).unwrap();
        assert!((tomo.full_matrix() - exact.full_matrix()).camax() < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_and_close() {
        let s = IsoTns::init_random(1, 2, 2, 3).unwrap();
        let h = tfim(3, 2, 3.5);
        let plan = ShotPlan::new(2000);
        let a = tomography_estimate(&s, &h, &plan, Backend::Sampling { seed: 5 }).unwrap();
        let b = tomography_estimate(&s, &h, &plan, Backend::Sampling { seed: 5 }).unwrap();
        assert_eq!(a, b);
        let exact = tomography_estimate(&s, &h, &plan, Backend::Exact).unwrap();
        // each coefficient is a sum over groups of means bounded by the group norm
        let var: f64 = plan
            .groups(&h)
            .iter()
            .map(|g| g.members.iter().map(|&m| h.terms()[m].0.abs()).sum::<f64>().powi(2))
            .sum::<f64>()
            / plan.shots_per_setting as f64;
        let tol = 4.5 * var.sqrt();
        for (x, y) in a.coefficients.iter().zip(&exact.coefficients) {
            assert!((x.value - y.value).abs() < tol, "{}: {} vs {}", x.pauli, x.value, y.value);
        }
        assert_eq!(a.shots_used, 2000 * 2 * 255);
    }
}
