use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{apply_columns, check_center, check_sizes, Backend, ShotPlan};
use crate::error::{Error, Result};
use crate::isotns::IsoTns;
use crate::pauli::{CommutingGroup, PauliSum};
use crate::rng::keyed_rng;
use crate::statevector::{OutcomeSampler, Statevector};
use crate::tensor::complete_columns;

#[derive(Clone, Debug, PartialEq)]
pub struct ApplyResult {
    /// `w_s = <s| V^dag H_eff |v>`.
    pub w: Vec<C64>,
    /// `V w`, the estimate of `H_eff |v>`.
    pub v_prime: Vec<C64>,
    pub shots_used: u64,
}

/// Unitary whose first column is `v`, completed with the canonical basis.
pub fn unitary_completion(v: &[C64]) -> Result<DMatrix<C64>> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!("vector norm {norm} is not 1")));
    }
    let first = DMatrix::from_column_slice(v.len(), 1, v);
    Ok(complete_columns(&first, v.len()))
}

/// Sampled `<phi|H|phi>` summed over the measurement groups.
fn sampled_energy(
    phi: &[C64],
    h: &PauliSum,
    groups: &[CommutingGroup],
    shots: u64,
    seed: u64,
    setting_base: u64,
) -> Result<f64> {
    let n_groups = groups.len() as u64;
    let mut total = 0.0;
    for grp in groups {
        let mut sv = Statevector::from_amplitudes(phi.to_vec())?;
        sv.rotate_to_basis(&grp.basis)?;
        let sampler = OutcomeSampler::new(sv.probabilities());
        let mut rng = keyed_rng(seed, setting_base * n_groups + grp.index as u64);
        let sum: f64 = sampler
            .draw(shots, &mut rng)
            .into_iter()
            .map(|(x, c)| {
                let o: f64 = grp.members.iter().map(|&m| h.terms()[m].0 * h.terms()[m].1.parity(x)).sum();
                o * c as f64
            })
            .sum();
        total += sum / shots as f64;
    }
    Ok(total)
}

/// Estimates `H_eff |v>` from energies of the shifted inputs
/// `(|0> + i^m |s>)/sqrt(2)` prepared through `V`.
pub fn apply_heff(
    state: &IsoTns,
    h: &PauliSum,
    v: &[C64],
    plan: &ShotPlan,
    backend: Backend,
) -> Result<ApplyResult> {
    check_sizes(state, h)?;
    check_center(state)?;
    plan.validate()?;
    let dim = state.center_dim();
    if v.len() != dim {
        return Err(Error::DimensionMismatch(format!("vector of length {} for center of dim {dim}", v.len())));
    }
    let vmat = unitary_completion(v)?;
    let a = state.open_center_map()? * &vmat;
    let half = C64::new(0.5, 0.0);
    let phases = [C64::new(1.0, 0.0), C64::i(), C64::new(-1.0, 0.0), -C64::i()];

    let (w, shots_used) = match backend {
        Backend::Exact => {
            let b = apply_columns(h, &a);
            let a0 = a.column(0);
            let b0 = b.column(0);
            let mut w = vec![C64::new(a0.dotc(&b0).re, 0.0)];
            for s in 1..dim {
                let (as_, bs) = (a.column(s), b.column(s));
                let mut acc = C64::new(0.0, 0.0);
                for ph in phases {
                    let phi = &a0 + &as_ * ph;
                    let hphi = &b0 + &bs * ph;
                    acc += ph * (phi.dotc(&hphi).re * 0.5);
                }
                w.push(acc * half);
            }
            (w, 0)
        }
        Backend::Sampling { seed } => {
            let groups = plan.groups(h);
            let n = plan.shots_per_setting;
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let a0: Vec<C64> = a.column(0).iter().copied().collect();
            let jobs: Vec<(usize, usize)> =
                std::iter::once((0, 0)).chain((1..dim).flat_map(|s| (0..4).map(move |m| (s, m)))).collect();
            let energies = jobs
                .par_iter()
                .map(|&(s, m)| {
                    let phi: Vec<C64> = if s == 0 {
                        a0.clone()
                    } else {
                        a0.iter().zip(a.column(s).iter()).map(|(x, y)| (x + y * phases[m]) * r).collect()
                    };
                    sampled_energy(&phi, h, &groups, n, seed, (s * 4 + m) as u64)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut w = vec![C64::new(energies[0], 0.0)];
            for s in 1..dim {
                let e = &energies[1 + 4 * (s - 1)..1 + 4 * s];
                let acc: C64 = phases.iter().zip(e).map(|(ph, &x)| ph * x).sum();
                w.push(acc * half);
            }
            (w, n * groups.len() as u64 * jobs.len() as u64)
        }
    };
    let v_prime = (&vmat * DVector::from_column_slice(&w)).iter().copied().collect();
    Ok(ApplyResult { w, v_prime, shots_used })
}
