//! Preset runs for the two benchmark figures at desk scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isotns::IsoTns;
use crate::pauli::tfim;
use crate::reference::{exact_ground, ITERATIVE_GUARD};
use crate::sweep::{optimize, Method, SweepConfig, SweepReport};

/// Relative error at which the shot costs of the two methods are compared.
pub const FIG3_TARGET_ERROR: f64 = 2e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Small,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Scale::Small),
            _ => Err(Error::InvalidArgument(format!("unknown scale '{s}'"))),
        }
    }
}

/// One optimization profile: a TFIM on a physical lattice and a sweep config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    /// Physical lattice, columns by rows.
    pub lattice: (usize, usize),
    pub d: usize,
    pub g: f64,
    /// Seed of the random initial state.
    pub state_seed: u64,
    pub config: SweepConfig,
}

/// IsoTNS grid for a physical lattice: two fewer columns, same rows.
pub fn isotns_grid(lattice: (usize, usize)) -> Result<(usize, usize)> {
    let (lx, ly) = lattice;
    if lx < 3 || ly < 1 {
        return Err(Error::InvalidArgument(format!(
            "physical lattice {lx}x{ly} needs at least 3 columns and 1 row"
        )));
    }
    Ok((lx - 2, ly))
}

/// Exact ground energy of the TFIM when within the solver guard.
pub fn reference_energy(lattice: (usize, usize), g: f64) -> Result<Option<f64>> {
    if lattice.0 * lattice.1 > ITERATIVE_GUARD {
        return Ok(None);
    }
    Ok(Some(exact_ground(&tfim(lattice.0, lattice.1, g))?.ground_energy))
}

/// Runs a curve from its seeded initial state. `reference` overrides the
/// exact-diagonalization energy when given.
pub fn run_curve(curve: &Curve, reference: Option<f64>) -> Result<SweepReport> {
    let (lx, ly) = isotns_grid(curve.lattice)?;
    let mut state = IsoTns::init_random(lx, ly, curve.d, curve.state_seed)?;
    let h = tfim(curve.lattice.0, curve.lattice.1, curve.g);
    let mut config = curve.config.clone();
    if config.reference_energy.is_none() {
        config.reference_energy = match reference {
            Some(e) => Some(e),
            None => reference_energy(curve.lattice, curve.g)?,
        };
    }
    optimize(&mut state, &h, &config)
}

/// Exact contraction and tomography at 10^3, 10^4 and 10^5 shots per setting
/// on the 3x3 lattice.
pub fn fig2(scale: Scale) -> Vec<Curve> {
    let Scale::Small = scale;
    let base = SweepConfig { sweeps: 5, seed: 2024, pooled_shift: true, ..Default::default() };
    let mut curves = vec![Curve {
        name: "exact".into(),
        lattice: (3, 3),
        d: 2,
        g: 3.5,
        state_seed: 1,
        config: SweepConfig { method: Method::Exact, ..base.clone() },
    }];
    for shots in [1_000u64, 10_000, 100_000] {
        curves.push(Curve {
            name: format!("tomography_{shots}"),
            lattice: (3, 3),
            d: 2,
            g: 3.5,
            state_seed: 1,
            config: SweepConfig { method: Method::Tomography, shots, ..base.clone() },
        });
    }
    curves
}

/// Lanczos with adaptive shot doubling on 3x2, 3x3 and 4x3 lattices, and a
/// 10^5-shot tomography baseline on 3x3.
pub fn fig3(scale: Scale) -> Vec<Curve> {
    let Scale::Small = scale;
    let lanczos = SweepConfig {
        method: Method::Lanczos,
        sweeps: 8,
        shots: 100,
        adaptive_doubling: true,
        krylov_k: 3,
        seed: 2024,
        ..Default::default()
    };
    let mut curves: Vec<Curve> = [(3, 2), (3, 3), (4, 3)]
        .into_iter()
        .map(|lattice: (usize, usize)| Curve {
            name: format!("lanczos_{}x{}", lattice.0, lattice.1),
            lattice,
            d: 2,
            g: 3.5,
            state_seed: 1,
            config: lanczos.clone(),
        })
        .collect();
    curves.push(Curve {
        name: "tomography_3x3".into(),
        lattice: (3, 3),
        d: 2,
        g: 3.5,
        state_seed: 1,
        config: SweepConfig {
            method: Method::Tomography,
            sweeps: 5,
            shots: 100_000,
            seed: 2024,
            pooled_shift: true,
            ..Default::default()
        },
    });
    curves
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig2Check {
    pub exact_error: f64,
    pub high_shot_error: f64,
    pub low_shot_error: f64,
    /// High-shot final error over the exact-contraction final error.
    pub ratio: f64,
    pub within_two_x: bool,
    pub low_shot_worse: bool,
}

fn final_error(results: &[(Curve, SweepReport)], name: &str) -> Result<f64> {
    results
        .iter()
        .find(|(c, _)| c.name == name)
        .and_then(|(_, r)| r.final_step().and_then(|s| s.rel_error))
        .ok_or_else(|| Error::InvalidArgument(format!("no final relative error for curve '{name}'")))
}

fn report<'a>(results: &'a [(Curve, SweepReport)], name: &str) -> Result<&'a SweepReport> {
    results
        .iter()
        .find(|(c, _)| c.name == name)
        .map(|(_, r)| r)
        .ok_or_else(|| Error::InvalidArgument(format!("missing curve '{name}'")))
}

/// Compares the 10^5- and 10^3-shot tomography curves with the exact one.
pub fn fig2_check(results: &[(Curve, SweepReport)]) -> Result<Fig2Check> {
    let exact_error = final_error(results, "exact")?;
    let high_shot_error = final_error(results, "tomography_100000")?;
    let low_shot_error = final_error(results, "tomography_1000")?;
    let ratio = high_shot_error / exact_error;
    Ok(Fig2Check {
        exact_error,
        high_shot_error,
        low_shot_error,
        ratio,
        within_two_x: ratio <= 2.0,
        low_shot_worse: low_shot_error > exact_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig3Check {
    pub target_error: f64,
    pub lanczos_shots: Option<u64>,
    pub tomography_shots: Option<u64>,
    /// Tomography shots over Lanczos shots at the target error.
    pub ratio: Option<f64>,
    pub lanczos_not_worse: bool,
}

/// Cumulative shots of the 3x3 Lanczos and tomography curves at the first
/// step reaching [`FIG3_TARGET_ERROR`].
pub fn fig3_check(results: &[(Curve, SweepReport)]) -> Result<Fig3Check> {
    let lanczos_shots = report(results, "lanczos_3x3")?.shots_to_reach(FIG3_TARGET_ERROR);
    let tomography_shots = report(results, "tomography_3x3")?.shots_to_reach(FIG3_TARGET_ERROR);
    let ratio = match (lanczos_shots, tomography_shots) {
        (Some(l), Some(t)) if l > 0 => Some(t as f64 / l as f64),
        _ => None,
    };
    let lanczos_not_worse = match (lanczos_shots, tomography_shots) {
        (Some(l), Some(t)) => l <= t,
        (Some(_), None) => true,
        _ => false,
    };
    Ok(Fig3Check { target_error: FIG3_TARGET_ERROR, lanczos_shots, tomography_shots, ratio, lanczos_not_worse })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_shapes() {
        let f2 = fig2(Scale::Small);
        assert_eq!(f2.len(), 4);
        assert!(f2.iter().all(|c| c.lattice == (3, 3)));
        let f3 = fig3(Scale::Small);
        assert_eq!(f3.iter().filter(|c| c.config.method == Method::Lanczos).count(), 3);
        assert!("large".parse::<Scale>().is_err());
    }

    #[test]
    fn grid_conversion() {
        assert_eq!(isotns_grid((4, 4)).unwrap(), (2, 4));
        assert_eq!(isotns_grid((5, 5)).unwrap(), (3, 5));
        assert!(isotns_grid((2, 4)).is_err());
    }
}
