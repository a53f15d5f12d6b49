//! Dense statevector simulation standing in for the quantum processor.
//!
//! Qubit `0` is the most significant bit of an amplitude index.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::rng::keyed_rng;

/// Default largest register the simulator will allocate.
pub const SIM_GUARD: usize = 26;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn check_guard(n_qubits: usize, limit: usize) -> Result<()> {
    if n_qubits > limit {
        return Err(Error::GuardExceeded { what: "statevector", qubits: n_qubits, limit });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_guard(n_qubits, SIM_GUARD)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(amps.len()));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        check_guard(n_qubits, SIM_GUARD)?;
        Ok(Self { n_qubits, amps })
    }

    /// Runs `circuit` on `|0...0>`.
    pub fn simulate(circuit: &Circuit) -> Result<Self> {
        Self::zero(circuit.n_qubits)?.run(circuit)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies every gate in order.
    pub fn run(mut self, circuit: &Circuit) -> Result<Self> {
        if circuit.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "circuit on {} qubits, register of {}",
                circuit.n_qubits, self.n_qubits
            )));
        }
        for g in &circuit.gates {
            self.apply_gate(g)?;
        }
        Ok(self)
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        self.apply_matrix(&gate.matrix, &gate.targets)
    }

    /// Applies a dense `2^k x 2^k` matrix on `targets`, first target most significant.
    pub fn apply_matrix(&mut self, m: &DMatrix<C64>, targets: &[usize]) -> Result<()> {
        let n = self.n_qubits;
        let k = targets.len();
        let dim = 1usize << k;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch(format!("{}x{} gate on {k} targets", m.nrows(), m.ncols())));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= n) {
            return Err(Error::InvalidArgument(format!("target {t} outside {n} qubits")));
        }
        let bits: Vec<usize> = targets.iter().map(|&t| n - 1 - t).collect();
        let offsets: Vec<usize> = (0..dim)
            .map(|c| (0..k).filter(|j| (c >> (k - 1 - j)) & 1 == 1).map(|j| 1 << bits[j]).sum())
            .collect();
        let mut sorted = bits.clone();
        sorted.sort_unstable();
        let rows: Vec<C64> = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
        let mut buf = vec![ZERO; dim];
        for i in 0..(1usize << (n - k)) {
            let mut base = i;
            for &b in &sorted {
                base = ((base >> b) << (b + 1)) | (base & ((1 << b) - 1));
            }
            for (slot, &o) in buf.iter_mut().zip(&offsets) {
                *slot = self.amps[base + o];
            }
            for (r, &o) in offsets.iter().enumerate() {
                let row = &rows[r * dim..(r + 1) * dim];
                self.amps[base + o] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }

    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} qubits, state on {}",
                op.n_qubits(),
                self.n_qubits
            )));
        }
        Ok(op.expectation(&self.amps))
    }

    pub fn expectation_string(&self, p: &PauliString) -> Result<f64> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "string on {} qubits, state on {}",
                p.n_qubits(),
                self.n_qubits
            )));
        }
        Ok(p.expectation(&self.amps))
    }

    /// Rotates qubit `q` so that a Z measurement reads out `letter`.
    pub fn rotate_qubit(&mut self, q: usize, letter: Pauli) -> Result<()> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = match letter {
            Pauli::I | Pauli::Z => return Ok(()),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)]),
            // H S^dag
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(0.0, -h), C64::new(h, 0.0), C64::new(0.0, h)]),
        };
        self.apply_matrix(&m, &[q])
    }

    /// Rotates the first `basis.len()` qubits into the given measurement basis.
    pub fn rotate_to_basis(&mut self, basis: &[Pauli]) -> Result<()> {
        self.rotate_qubits(0, basis)
    }

    /// Rotates qubits `first..first + basis.len()`.
    pub fn rotate_qubits(&mut self, first: usize, basis: &[Pauli]) -> Result<()> {
        for (j, &l) in basis.iter().enumerate() {
            self.rotate_qubit(first + j, l)?;
        }
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Measures every qubit after rotating into `basis` (one letter per
    /// qubit, `I` read as `Z`), drawing `shots` outcomes from the stream
    /// keyed by `(seed, setting_id)`.
    pub fn sample(&self, basis: &[Pauli], shots: u64, seed: u64, setting_id: u64) -> Result<ShotBatch> {
        if basis.len() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "basis of {} letters for {} qubits",
                basis.len(),
                self.n_qubits
            )));
        }
        if shots == 0 {
            return Err(Error::InvalidArgument("at least one shot is required".into()));
        }
        let mut rotated = self.clone();
        rotated.rotate_to_basis(basis)?;
        let sampler = OutcomeSampler::new(rotated.probabilities());
        let mut rng = keyed_rng(seed, setting_id);
        Ok(ShotBatch { setting_id, shots, counts: sampler.draw(shots, &mut rng), seed })
    }
}

/// Outcome counts from one measurement setting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotBatch {
    pub setting_id: u64,
    pub shots: u64,
    /// `(outcome, count)` pairs in increasing outcome order, zero counts omitted.
    pub counts: Vec<(u64, u64)>,
    pub seed: u64,
}

impl ShotBatch {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c.1).sum()
    }

    /// Empirical mean of `f(outcome)`.
    pub fn mean(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.counts.iter().map(|&(o, c)| c as f64 * f(o)).sum::<f64>() / self.shots as f64
    }
}

/// Multinomial draws from a fixed distribution. Small batches draw shot by
/// shot from the cumulative table; large ones walk the outcomes with
/// conditional binomials.
#[derive(Clone, Debug)]
pub struct OutcomeSampler {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl OutcomeSampler {
    pub fn new(probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.into_iter().map(|p| p.max(0.0) / total).collect();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { probs, cdf }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn draw<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Vec<(u64, u64)> {
        let len = self.probs.len();
        let log = (usize::BITS - len.leading_zeros()) as u64;
        if shots.saturating_mul(log + 2) < 4 * len as u64 {
            self.draw_each(shots, rng)
        } else {
            self.draw_binomial(shots, rng)
        }
    }

    fn draw_each<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Vec<(u64, u64)> {
        let last = *self.cdf.last().unwrap_or(&1.0);
        let mut hits: Vec<u64> = (0..shots)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * last;
                let i = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
                i as u64
            })
            .collect();
        hits.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for h in hits {
            match out.last_mut() {
                Some((o, c)) if *o == h => *c += 1,
                _ => out.push((h, 1)),
            }
        }
        out
    }

    fn draw_binomial<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut remaining = shots;
        let mut mass = 1.0f64;
        let last_nonzero = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (i, &p) in self.probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            if p == 0.0 {
                continue;
            }
            let q = if i == last_nonzero || mass <= 0.0 { 1.0 } else { (p / mass).clamp(0.0, 1.0) };
            let k = if q >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, q).expect("valid binomial").sample(rng)
            };
            if k > 0 {
                out.push((i as u64, k));
            }
            remaining -= k;
            mass -= p;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::tests::kron_matrix as dense;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_state(n: usize, seed: u64) -> Statevector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<C64> = (0..1 << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Statevector::from_amplitudes(v.into_iter().map(|z| z / nrm).collect()).unwrap()
    }

    fn random_unitary(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
        let d = 1 << k;
        let g = DMatrix::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        g.qr().q()
    }

    /// Lifts a gate to the full register by explicit basis mapping.
    fn lift(m: &DMatrix<C64>, targets: &[usize], n: usize) -> DMatrix<C64> {
        let k = targets.len();
        let dim = 1 << n;
        DMatrix::from_fn(dim, dim, |i, j| {
            let rest_mask: usize = (0..n).filter(|q| !targets.contains(q)).map(|q| 1 << (n - 1 - q)).sum();
            if i & rest_mask != j & rest_mask {
                return ZERO;
            }
            let sub = |b: usize| (0..k).fold(0, |a, t| (a << 1) | ((b >> (n - 1 - targets[t])) & 1));
            m[(sub(i), sub(j))]
        })
    }

    #[test]
    fn empty_circuit_leaves_zero_state() {
        let c = Circuit { n_qubits: 3, gates: vec![], ancillas: vec![], center_wires: vec![], grid: (3, 1) };
        let s = Statevector::simulate(&c).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|z| *z == ZERO));
    }

    #[test]
    fn hadamard_makes_plus() {
        let c = Circuit { n_qubits: 1, gates: vec![Gate::hadamard(0)], ancillas: vec![], center_wires: vec![], grid: (1, 1) };
        let s = Statevector::simulate(&c).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - h).abs() < 1e-15);
    }

    #[test]
    fn gates_match_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let gates = vec![
            Gate::new(random_unitary(2, &mut rng), vec![3, 1], "a").unwrap(),
            Gate::new(random_unitary(1, &mut rng), vec![2], "b").unwrap(),
            Gate::new(random_unitary(3, &mut rng), vec![0, 2, 3], "c").unwrap(),
        ];
        let start = random_state(n, 5);
        let mut full = DMatrix::<C64>::identity(16, 16);
        for g in &gates {
            full = lift(&g.matrix, &g.targets, n) * full;
        }
        let expect = &full * nalgebra::DVector::from_row_slice(start.amplitudes());
        let c = Circuit { n_qubits: n, gates, ancillas: vec![], center_wires: vec![], grid: (4, 1) };
        let got = start.run(&c).unwrap();
        for (a, b) in got.amplitudes().iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((got.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expectation_matches_dense_oracle() {
        let s = random_state(3, 9);
        let sum = PauliSum::parse("0.5 XZI\n-1.25 IYY\n2.0 ZIX").unwrap();
        let m = dense(&sum);
        let v = nalgebra::DVector::from_row_slice(s.amplitudes());
        let oracle = v.dotc(&(&m * &v)).re;
        assert!((s.expectation(&sum).unwrap() - oracle).abs() < 1e-12);
        let z: PauliString = "Z".parse().unwrap();
        let zero = Statevector::zero(1).unwrap();
        assert_eq!(zero.expectation_string(&z).unwrap(), 1.0);
    }

    #[test]
    fn deterministic_basis_states_sample_one_outcome() {
        let zero = Statevector::zero(1).unwrap();
        let b = zero.sample(&[Pauli::Z], 100, 1, 0).unwrap();
        assert_eq!(b.counts, vec![(0, 100)]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Statevector::from_amplitudes(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        let b = plus.sample(&[Pauli::X], 100, 1, 0).unwrap();
        assert_eq!(b.counts, vec![(0, 100)]);
        assert_eq!(b.total(), 100);
    }

    #[test]
    fn plus_state_z_mean_is_unbiased() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Statevector::from_amplitudes(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        let b = plus.sample(&[Pauli::Z], 1_000_000, 77, 3).unwrap();
        let mean = b.mean(|o| if o == 0 { 1.0 } else { -1.0 });
        assert!(mean.abs() < 4e-3, "mean {mean}");
        assert_eq!(b, plus.sample(&[Pauli::Z], 1_000_000, 77, 3).unwrap());
    }

    #[test]
    fn both_draw_paths_agree_in_distribution() {
        let probs = vec![0.1, 0.0, 0.3, 0.6];
        let s = OutcomeSampler::new(probs.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = s.draw_each(200_000, &mut rng);
        let b = s.draw_binomial(200_000, &mut rng);
        for draws in [a, b] {
            assert_eq!(draws.iter().map(|c| c.1).sum::<u64>(), 200_000);
            for &(o, c) in &draws {
                let p = probs[o as usize];
                let sd = (200_000.0 * p * (1.0 - p)).sqrt();
                assert!((c as f64 - 200_000.0 * p).abs() < 5.0 * sd);
            }
        }
    }

    #[test]
    fn y_rotation_reads_y_eigenstate() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus_i = Statevector::from_amplitudes(vec![C64::new(h, 0.0), C64::new(0.0, h)]).unwrap();
        let b = plus_i.sample(&[Pauli::Y], 50, 0, 0).unwrap();
        assert_eq!(b.counts, vec![(0, 50)]);
    }

    #[test]
    fn guard_is_enforced() {
        assert!(Statevector::zero(SIM_GUARD + 1).unwrap_err().is_guard());
    }
}
