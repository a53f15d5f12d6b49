use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{apply_heff, Backend, ShotPlan};
use crate::error::{Error, Result};
use crate::isotns::IsoTns;
use crate::pauli::PauliSum;
use crate::rng::derive_seed;
use crate::tensor::hermitian_lowest;

/// Residual norm below which a new Krylov direction is dropped.
const BREAKDOWN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovResult {
    pub energy: f64,
    pub vector: Vec<C64>,
    pub shots_used: u64,
    /// Number of Krylov vectors actually used.
    pub subspace: usize,
}

/// Lowest Ritz pair of `H_eff` in the Krylov space of `v0`, built from
/// `k` applications of [`apply_heff`].
pub fn krylov_ground(
    state: &IsoTns,
    h: &PauliSum,
    v0: &[C64],
    k: usize,
    plan: &ShotPlan,
    backend: Backend,
) -> Result<KrylovResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("Krylov subspace size must be at least 1".into()));
    }
    let mut basis: Vec<DVector<C64>> = vec![DVector::from_column_slice(v0)];
    let mut images: Vec<DVector<C64>> = Vec::with_capacity(k);
    let mut shots = 0;
    for j in 0..k {
        let backend_j = match backend {
            Backend::Sampling { seed } => Backend::Sampling { seed: derive_seed(seed, &[j as u64]) },
            b => b,
        };
        let r = apply_heff(state, h, basis[j].as_slice(), plan, backend_j)?;
        shots += r.shots_used;
        let w = DVector::from_vec(r.v_prime);
        images.push(w.clone());
        if j + 1 == k {
            break;
        }
        let mut next = w;
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&next);
                next -= b * proj;
            }
        }
        let norm = next.norm();
        if norm < BREAKDOWN_TOL {
            break;
        }
        basis.push(next / C64::new(norm, 0.0));
    }
    let m = images.len();
    let t = DMatrix::from_fn(m, m, |i, j| basis[i].dotc(&images[j]));
    let t = (&t + t.adjoint()) * C64::new(0.5, 0.0);
    let eig = hermitian_lowest(&t, 1)?;
    let y = eig.vectors.column(0);
    let mut vector = DVector::zeros(v0.len());
    for (i, b) in basis.iter().take(m).enumerate() {
        vector += b * y[i];
    }
    let n = vector.norm();
    vector /= C64::new(n, 0.0);
    Ok(KrylovResult { energy: eig.values[0], vector: vector.iter().copied().collect(), shots_used: shots, subspace: m })
}
