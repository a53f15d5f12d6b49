//! Estimators of the effective Hamiltonian seen by the isometric center:
//! full tomography, the parameter-shift matrix-vector oracle, the Krylov
//! solver built on it, and the exact contraction reference.

mod krylov;
mod shift;
mod tomography;

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::isotns::IsoTns;
use crate::pauli::{group_qubitwise, group_singletons, CommutingGroup, PauliSum};
use crate::tensor::{hermitian_lowest, hermiticity_deviation};

pub use krylov::{krylov_ground, KrylovResult};
pub use shift::{apply_heff, unitary_completion, ApplyResult};
pub use tomography::tomography_estimate;

/// Largest number of center wires the quantum estimators accept.
pub const MAX_CENTER_QUBITS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Infinite-shot expectations.
    Exact,
    /// Sampled shots from streams keyed by `seed`.
    Sampling { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Grouping {
    #[default]
    QubitWise,
    PerTerm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotPlan {
    pub shots_per_setting: u64,
    pub grouping: Grouping,
    pub pooled_shift: bool,
}

impl ShotPlan {
    pub fn new(shots_per_setting: u64) -> Self {
        Self { shots_per_setting, grouping: Grouping::QubitWise, pooled_shift: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_setting == 0 {
            return Err(Error::InvalidArgument("shots per setting must be at least 1".into()));
        }
        Ok(())
    }

    pub fn groups(&self, h: &PauliSum) -> Vec<CommutingGroup> {
        match self.grouping {
            Grouping::QubitWise => group_qubitwise(h),
            Grouping::PerTerm => group_singletons(h),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Tomography { shots_per_setting: u64 },
    Implicit,
}

/// One Pauli coefficient of a tomographic estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliCoefficient {
    pub pauli: String,
    pub value: f64,
    pub shots: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    pub dim: usize,
    /// Hermitian part without the identity component when estimated by tomography.
    pub matrix: DMatrix<C64>,
    /// Coefficient of the identity, added back by [`EffectiveHamiltonian::full_matrix`].
    pub offset: f64,
    pub provenance: Provenance,
    pub shots_used: u64,
    pub coefficients: Vec<PauliCoefficient>,
}

impl EffectiveHamiltonian {
    pub fn full_matrix(&self) -> DMatrix<C64> {
        &self.matrix + DMatrix::<C64>::identity(self.dim, self.dim) * C64::new(self.offset, 0.0)
    }

    /// `<v|H|v> / <v|v>` including the identity offset.
    pub fn energy(&self, v: &[C64]) -> f64 {
        let v = DVector::from_column_slice(v);
        (v.dotc(&(&self.matrix * &v)).re / v.norm_squared()) + self.offset
    }

    /// Lowest eigenpair of the full matrix.
    pub fn ground(&self) -> Result<(f64, Vec<C64>)> {
        let e = hermitian_lowest(&self.full_matrix(), 1)?;
        Ok((e.values[0], e.vectors.column(0).iter().copied().collect()))
    }

    /// Writes `pauli,value,shots` rows.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["pauli", "value", "shots"])?;
        for c in &self.coefficients {
            out.write_record([c.pauli.clone(), format!("{:.17e}", c.value), c.shots.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub(crate) fn check_center(state: &IsoTns) -> Result<usize> {
    let k = state.center_dim().trailing_zeros() as usize;
    if k > MAX_CENTER_QUBITS {
        return Err(Error::GuardExceeded { what: "center register", qubits: k, limit: MAX_CENTER_QUBITS });
    }
    Ok(k)
}

pub(crate) fn check_sizes(state: &IsoTns, h: &PauliSum) -> Result<()> {
    if h.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian on {} qubits, state on {}",
            h.n_qubits(),
            state.n_qubits()
        )));
    }
    Ok(())
}

/// `H` applied to every column of `a`.
pub(crate) fn apply_columns(h: &PauliSum, a: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        h.apply_into(a.column(j).as_slice(), out.column_mut(j).as_mut_slice());
    }
    out
}

/// `U^dag H U` with `U` the open-center map of the state.
pub fn exact_effective_hamiltonian(state: &IsoTns, h: &PauliSum) -> Result<EffectiveHamiltonian> {
    check_sizes(state, h)?;
    let u = state.open_center_map()?;
    let hu = apply_columns(h, &u);
    let m = u.adjoint() * hu;
    let dev = hermiticity_deviation(&m);
    if dev > 1e-8 * m.camax().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    Ok(EffectiveHamiltonian {
        dim: m.nrows(),
        matrix: m,
        offset: 0.0,
        provenance: Provenance::Exact,
        shots_used: 0,
        coefficients: Vec::new(),
    })
}

/// `<Psi|H|Psi> / <Psi|Psi>` by full contraction.
pub fn energy_of(state: &IsoTns, h: &PauliSum) -> Result<f64> {
    check_sizes(state, h)?;
    let psi = state.contract_full()?;
    Ok(h.expectation(psi.data()) / psi.norm().powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotns::{MosesOptions, Side, Vertical};
    use crate::pauli::{tfim, PauliString};

    #[test]
    fn identity_gives_identity() {
        let s = IsoTns::init_random(2, 2, 2, 0).unwrap();
        let n = s.n_qubits();
        let id = PauliSum::new(n, vec![(1.0, PauliString::identity(n))]).unwrap();
        let heff = exact_effective_hamiltonian(&s, &id).unwrap();
        let dev = (heff.full_matrix() - DMatrix::<C64>::identity(heff.dim, heff.dim)).camax();
        assert!(dev < 1e-10);
    }

    #[test]
    fn single_site_restricts_h() {
        let s = IsoTns::init_random(1, 1, 1, 0).unwrap();
        let h = tfim(3, 1, 3.5);
        let heff = exact_effective_hamiltonian(&s, &h).unwrap();
        assert!((heff.matrix - h.to_matrix().unwrap()).camax() < 1e-12);
    }

    #[test]
    fn center_energy_equals_state_energy() {
        let mut s = IsoTns::init_random(2, 3, 2, 13).unwrap();
        s.moses_move(Side::Right, &MosesOptions::default()).unwrap();
        s.shift_center_in_column(Vertical::Down).unwrap();
        let h = tfim(4, 3, 3.5);
        let heff = exact_effective_hamiltonian(&s, &h).unwrap();
        let e1 = heff.energy(s.center_tensor().data());
        let e2 = energy_of(&s, &h).unwrap();
        assert!((e1 - e2).abs() < 1e-10);
    }

    #[test]
    fn ground_state_of_zero_field_is_ferromagnet() {
        let up = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let s = IsoTns::product_state(1, 2, up).unwrap();
        let h = tfim(3, 2, 0.0);
        let bonds = 2 * 2 + 3;
        assert!((energy_of(&s, &h).unwrap() + bonds as f64).abs() < 1e-12);
    }
}
