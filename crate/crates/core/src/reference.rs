//! Exact ground states of Pauli-sum Hamiltonians: dense diagonalization for
//! small registers and a restarted Lanczos solver on the implicit matvec.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::tensor::hermitian_lowest;

/// Largest register diagonalized densely.
pub const DENSE_GUARD: usize = 12;
/// [`exact_ground`] switches to the iterative path above this size.
pub const DENSE_PREFERRED: usize = 10;
/// Largest register handled by the iterative solver.
pub const ITERATIVE_GUARD: usize = 20;

/// Ground energy of the 4x4 TFIM at g = 3.5 (open boundaries).
pub const TFIM_4X4_G35: f64 = -57.824369776403664;

const RESIDUAL_TOL: f64 = 1e-8;
const MAX_RESTARTS: usize = 500;
const KRYLOV_BYTES: usize = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumMethod {
    Dense,
    Iterative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub ground_energy: f64,
    pub ground_vector: Option<Vec<C64>>,
    pub method: SpectrumMethod,
    /// `||H v - E v||` of the returned vector.
    pub residual: f64,
}

/// Ground state by the dense path up to [`DENSE_PREFERRED`] qubits and by
/// restarted Lanczos beyond.
pub fn exact_ground(h: &PauliSum) -> Result<SpectrumResult> {
    if h.n_qubits() <= DENSE_PREFERRED {
        dense_ground(h)
    } else {
        iterative_ground(h, 0)
    }
}

pub fn dense_ground(h: &PauliSum) -> Result<SpectrumResult> {
    let n = h.n_qubits();
    if n > DENSE_GUARD {
        return Err(Error::GuardExceeded { what: "dense diagonalization", qubits: n, limit: DENSE_GUARD });
    }
    let m = h.to_matrix()?;
    let e = hermitian_lowest(&m, 1)?;
    let v: Vec<C64> = e.vectors.column(0).iter().copied().collect();
    let residual = residual(h, &v, e.values[0]);
    Ok(SpectrumResult { ground_energy: e.values[0], ground_vector: Some(v), method: SpectrumMethod::Dense, residual })
}

fn matvec(h: &PauliSum, v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    h.apply_into(v, &mut out);
    out
}

fn residual(h: &PauliSum, v: &[C64], e: f64) -> f64 {
    matvec(h, v).iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization, restarted from the current Ritz
/// vector until `||Hv - Ev|| <= 1e-8 ||H||`. `||H||` is estimated by the
/// largest Ritz value seen.
pub fn iterative_ground(h: &PauliSum, seed: u64) -> Result<SpectrumResult> {
    let n = h.n_qubits();
    if n > ITERATIVE_GUARD {
        return Err(Error::GuardExceeded { what: "iterative diagonalization", qubits: n, limit: ITERATIVE_GUARD });
    }
    let dim = 1usize << n;
    let m = (KRYLOV_BYTES / (16 * dim)).clamp(8, 40).min(dim);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(dim, |_, _| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)));
    v /= C64::new(v.norm(), 0.0);
    let mut scale: f64 = 0.0;
    let mut last = (0.0, f64::INFINITY);
    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<DVector<C64>> = vec![v.clone()];
        let mut t = DMatrix::<C64>::zeros(m, m);
        for j in 0..m {
            let mut w = DVector::from_vec(matvec(h, basis[j].as_slice()));
            for _ in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c = b.dotc(&w);
                    t[(i, j)] += c;
                    w -= b * c;
                }
            }
            if j + 1 == m {
                break;
            }
            let beta = w.norm();
            if beta < 1e-12 * scale.max(1.0) {
                break;
            }
            basis.push(w / C64::new(beta, 0.0));
        }
        let k = basis.len();
        // only the upper triangle was projected
        let tk = DMatrix::from_fn(k, k, |i, j| if i <= j { t[(i, j)] } else { t[(j, i)].conj() });
        let eig = hermitian_lowest(&tk, k)?;
        scale = eig.values.iter().fold(scale, |s, x| s.max(x.abs()));
        let y = eig.vectors.column(0);
        let mut x = DVector::zeros(dim);
        for (i, b) in basis.iter().enumerate() {
            x += b * y[i];
        }
        x /= C64::new(x.norm(), 0.0);
        let e = eig.values[0];
        let r = residual(h, x.as_slice(), e);
        last = (e, r);
        v = x;
        if r <= RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE) || k < m {
            return Ok(SpectrumResult {
                ground_energy: e,
                ground_vector: Some(v.iter().copied().collect()),
                method: SpectrumMethod::Iterative,
                residual: r,
            });
        }
    }
    Err(Error::InvalidArgument(format!(
        "Lanczos did not converge: energy {} with residual {}",
        last.0, last.1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::tfim;

    #[test]
    fn two_site_ferromagnet() {
        let r = exact_ground(&tfim(1, 2, 0.0)).unwrap();
        assert!((r.ground_energy + 1.0).abs() < 1e-12);
        assert_eq!(r.method, SpectrumMethod::Dense);
    }

    #[test]
    fn dense_and_iterative_agree() {
        for (lx, ly, g) in [(2, 2, 3.5), (3, 2, 1.0), (3, 3, 3.5), (5, 2, 2.0)] {
            let h = tfim(lx, ly, g);
            let a = dense_ground(&h).unwrap();
            let b = iterative_ground(&h, 7).unwrap();
            assert!((a.ground_energy - b.ground_energy).abs() < 1e-9, "{lx}x{ly}");
            assert!(b.residual < 1e-8 * b.ground_energy.abs());
        }
    }

    #[test]
    fn four_by_four_regression() {
        let r = exact_ground(&tfim(4, 4, 3.5)).unwrap();
        assert_eq!(r.method, SpectrumMethod::Iterative);
        assert!((r.ground_energy - TFIM_4X4_G35).abs() < 1e-8, "{}", r.ground_energy);
    }

    #[test]
    fn guards() {
        assert!(dense_ground(&tfim(13, 1, 1.0)).unwrap_err().is_guard());
        assert!(iterative_ground(&tfim(21, 1, 1.0), 0).unwrap_err().is_guard());
    }
}
