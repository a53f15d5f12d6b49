//! DMRG-style sweeps: per-site ground-state solves of the effective
//! Hamiltonian, in-column shifts and Moses moves between columns.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    energy_of, exact_effective_hamiltonian, krylov_ground, tomography_estimate, Backend, ShotPlan,
};
use crate::isotns::{IsoTns, MosesOptions, Side};
use crate::pauli::PauliSum;
use crate::rng::derive_seed;
use crate::tensor::DenseTensor;
use crate::C64;

/// States up to this many qubits get their exact energy tracked.
pub const EXACT_TRACKING_QUBITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact effective Hamiltonian by contraction.
    Exact,
    /// Full tomography of the effective Hamiltonian.
    Tomography,
    /// Krylov solve on the parameter-shift matrix-vector oracle.
    Lanczos,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "tomography" => Ok(Method::Tomography),
            "lanczos" => Ok(Method::Lanczos),
            _ => Err(Error::InvalidArgument(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub method: Method,
    pub sweeps: usize,
    /// Initial shots per measurement setting.
    pub shots: u64,
    pub adaptive_doubling: bool,
    pub krylov_k: usize,
    pub seed: u64,
    pub reference_energy: Option<f64>,
    #[serde(default)]
    pub pooled_shift: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            method: Method::Exact,
            sweeps: 5,
            shots: 1000,
            adaptive_doubling: false,
            krylov_k: 3,
            seed: 0,
            reference_energy: None,
            pooled_shift: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidArgument("sweeps must be at least 1".into()));
        }
        if self.method != Method::Exact && self.shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1 for sampling methods".into()));
        }
        if self.method == Method::Lanczos && self.krylov_k == 0 {
            return Err(Error::InvalidArgument("krylov_k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub sweep: usize,
    pub step: usize,
    pub site: (usize, usize),
    /// Energy estimate of the optimized center, offset included.
    pub energy: f64,
    pub exact_energy: Option<f64>,
    pub rel_error: Option<f64>,
    pub shots_cumulative: u64,
    pub shots_per_setting: u64,
    /// Product of the fidelities of the Moses moves since the previous step.
    pub moses_fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub method: Method,
    pub sweeps: usize,
    pub steps: usize,
    pub steps_per_sweep: usize,
    pub final_energy: f64,
    pub final_exact_energy: Option<f64>,
    pub reference_energy: Option<f64>,
    pub final_relative_error: Option<f64>,
    pub total_shots: u64,
    pub initial_shots_per_setting: u64,
    pub final_shots_per_setting: u64,
    /// What the adaptive doubling compares.
    pub doubling_monitor: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub steps: Vec<StepRecord>,
    pub steps_per_sweep: usize,
}

impl SweepReport {
    pub fn total_shots(&self) -> u64 {
        self.steps.last().map_or(0, |s| s.shots_cumulative)
    }

    pub fn final_step(&self) -> Option<&StepRecord> {
        self.steps.last()
    }

    /// Relative error of the last step of each sweep.
    pub fn sweep_errors(&self) -> Vec<Option<f64>> {
        self.steps.chunks(self.steps_per_sweep).map(|c| c.last().and_then(|s| s.rel_error)).collect()
    }

    /// Cumulative shots at the first step whose relative error is at most `target`.
    pub fn shots_to_reach(&self, target: f64) -> Option<u64> {
        self.steps.iter().find(|s| s.rel_error.is_some_and(|e| e <= target)).map(|s| s.shots_cumulative)
    }

    pub fn summary(&self) -> SweepSummary {
        let last = self.steps.last();
        SweepSummary {
            method: self.config.method,
            sweeps: self.config.sweeps,
            steps: self.steps.len(),
            steps_per_sweep: self.steps_per_sweep,
            final_energy: last.map_or(f64::NAN, |s| s.energy),
            final_exact_energy: last.and_then(|s| s.exact_energy),
            reference_energy: self.config.reference_energy,
            final_relative_error: last.and_then(|s| s.rel_error),
            total_shots: self.total_shots(),
            initial_shots_per_setting: self.config.shots,
            final_shots_per_setting: last.map_or(self.config.shots, |s| s.shots_per_setting),
            doubling_monitor: "noisy estimate".into(),
        }
    }

    /// One row per step.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "sweep",
            "step",
            "site",
            "energy",
            "exact_energy",
            "rel_error",
            "shots_cumulative",
            "moses_fidelity",
            "shots_per_setting",
        ])?;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        for s in &self.steps {
            out.write_record([
                s.sweep.to_string(),
                s.step.to_string(),
                format!("{}:{}", s.site.0, s.site.1),
                s.energy.to_string(),
                opt(s.exact_energy),
                opt(s.rel_error),
                s.shots_cumulative.to_string(),
                opt(s.moses_fidelity),
                s.shots_per_setting.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn save_summary(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(f, &self.summary())?;
        Ok(())
    }
}

/// Sites optimized in one sweep, in order: columns left to right, each top
/// to bottom.
pub fn sweep_schedule(lx: usize, ly: usize) -> Vec<(usize, usize)> {
    (0..lx).flat_map(|c| (0..ly).map(move |r| (c, r))).collect()
}

/// Ground vector and energy estimate of the effective problem at the center.
fn solve_site(
    state: &IsoTns,
    h: &PauliSum,
    config: &SweepConfig,
    shots: u64,
    seed: u64,
) -> Result<(Vec<C64>, f64, u64)> {
    let mut plan = ShotPlan::new(shots.max(1));
    plan.pooled_shift = config.pooled_shift;
    match config.method {
        Method::Exact => {
            let heff = exact_effective_hamiltonian(state, h)?;
            let (e, v) = heff.ground()?;
            Ok((v, e, 0))
        }
        Method::Tomography => {
            let heff = tomography_estimate(state, h, &plan, Backend::Sampling { seed })?;
            let (e, v) = heff.ground()?;
            Ok((v, e, heff.shots_used))
        }
        Method::Lanczos => {
            let t = state.center_tensor();
            let n = t.norm();
            let v0: Vec<C64> = t.data().iter().map(|z| z / n).collect();
            let r = krylov_ground(state, h, &v0, config.krylov_k, &plan, Backend::Sampling { seed })?;
            Ok((r.vector, r.energy, r.shots_used))
        }
    }
}

/// Runs `config.sweeps` sweeps on `state`, which ends with its center back
/// at `(0, 0)`.
pub fn optimize(state: &mut IsoTns, h: &PauliSum, config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    if h.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian on {} qubits, state on {}",
            h.n_qubits(),
            state.n_qubits()
        )));
    }
    let (lx, ly) = (state.lx(), state.ly());
    let schedule = sweep_schedule(lx, ly);
    let track = state.n_qubits() <= EXACT_TRACKING_QUBITS;
    let moses = MosesOptions::default();
    let mut steps = Vec::with_capacity(config.sweeps * schedule.len());
    let mut shots = config.shots;
    let mut total = 0u64;
    let mut prev_energy = f64::INFINITY;
    let mut pending_fidelity: Option<f64> = None;

    state.shift_center_to_top()?;
    while state.center().0 > 0 {
        let f = state.moses_move(Side::Left, &moses)?.fidelity_estimate;
        pending_fidelity = Some(pending_fidelity.unwrap_or(1.0) * f);
    }

    for sweep in 0..config.sweeps {
        for (step, &(c, r)) in schedule.iter().enumerate() {
            if state.center().0 != c {
                state.shift_center_to_top()?;
                let f = state.moses_move(Side::Right, &moses)?.fidelity_estimate;
                pending_fidelity = Some(pending_fidelity.unwrap_or(1.0) * f);
            }
            state.shift_center_to_row(r)?;
            let seed = derive_seed(config.seed, &[sweep as u64, step as u64]);
            let (v, energy, used) = solve_site(state, h, config, shots, seed)?;
            let t = DenseTensor::new(state.center_dims(), v)?;
            state.set_center_tensor(t)?;
            total += used;
            let exact_energy = if track { Some(energy_of(state, h)?) } else { None };
            let rel_error = config
                .reference_energy
                .map(|e0| (exact_energy.unwrap_or(energy) - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
            steps.push(StepRecord {
                sweep,
                step,
                site: (c, r),
                energy,
                exact_energy,
                rel_error,
                shots_cumulative: total,
                shots_per_setting: shots,
                moses_fidelity: pending_fidelity.take(),
            });
            if config.adaptive_doubling && config.method != Method::Exact && energy > prev_energy {
                shots = shots.saturating_mul(2);
            }
            prev_energy = energy;
        }
        // return pass, no optimization
        state.shift_center_to_top()?;
        while state.center().0 > 0 {
            let f = state.moses_move(Side::Left, &moses)?.fidelity_estimate;
            pending_fidelity = Some(pending_fidelity.unwrap_or(1.0) * f);
        }
    }
    Ok(SweepReport { config: config.clone(), steps, steps_per_sweep: schedule.len() })
}
