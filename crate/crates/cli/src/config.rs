use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use isotns::estimators::MAX_CENTER_QUBITS;
use isotns::experiments::isotns_grid;
use isotns::isotns::{check_feasible, IsoTns, CONTRACT_GUARD};
use isotns::pauli::{tfim, PauliSum};
use isotns::statevector::SIM_GUARD;
use isotns::sweep::Method;
use isotns::tensor::is_power_of_two;

use crate::RunArgs;

/// Default cap on the physical register; the exact reference and per-step
/// exact energies are available up to this size.
pub const DEFAULT_MAX_QUBITS: usize = 20;

#[derive(Debug)]
pub enum ConfigError {
    Invalid(String),
    Guard(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Invalid(m) | ConfigError::Guard(m) => f.write_str(m),
        }
    }
}

/// Physical lattice, written `COLSxROWS`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Lattice {
    pub cols: usize,
    pub rows: usize,
}

impl Lattice {
    pub fn pair(self) -> (usize, usize) {
        (self.cols, self.rows)
    }
}

impl FromStr for Lattice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("lattice '{s}' is not COLSxROWS"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("lattice '{s}' is not COLSxROWS"));
        Ok(Lattice { cols: parse(a)?, rows: parse(b)? })
    }
}

impl TryFrom<String> for Lattice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Lattice> for String {
    fn from(l: Lattice) -> String {
        format!("{}x{}", l.cols, l.rows)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: Lattice,
    #[serde(rename = "D")]
    pub d: usize,
    pub g: f64,
    pub method: Method,
    pub sweeps: usize,
    pub shots: u64,
    pub krylov_k: usize,
    pub adaptive: bool,
    pub pooled_shift: bool,
    pub seed: u64,
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub max_qubits: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice { cols: 4, rows: 4 },
            d: 2,
            g: 3.5,
            method: Method::Exact,
            sweeps: 5,
            shots: 1000,
            krylov_k: 3,
            adaptive: false,
            pooled_shift: false,
            seed: 0,
            csv: PathBuf::from("sweep.csv"),
            summary: PathBuf::from("summary.json"),
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }
}

#[derive(Deserialize)]
struct Embedded {
    config: RunConfig,
}

/// Validated inputs ready to run.
pub struct Checked {
    pub state: IsoTns,
    pub hamiltonian: PauliSum,
}

impl RunConfig {
    /// Reads a config file, either a bare config or a run summary that
    /// embeds one under `config`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let located = |e: serde_json::Error| {
            ConfigError::Invalid(format!("{} line {}: {e}", path.display(), e.line()))
        };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(located)?;
        if value.get("config").is_some_and(|c| c.is_object()) {
            Ok(serde_json::from_str::<Embedded>(&text).map_err(located)?.config)
        } else {
            serde_json::from_str(&text).map_err(located)
        }
    }

    /// File values (or defaults) overridden by the given flags.
    pub fn resolve(args: &RunArgs) -> Result<Self, ConfigError> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(l) = &args.lattice {
            cfg.lattice = l.parse().map_err(ConfigError::Invalid)?;
        }
        if let Some(m) = &args.method {
            cfg.method = m.parse().map_err(|e: isotns::Error| ConfigError::Invalid(e.to_string()))?;
        }
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = args.$f { cfg.$f = v; })*};
        }
        set!(d, g, sweeps, shots, krylov_k, seed, max_qubits);
        cfg.adaptive |= args.adaptive;
        cfg.pooled_shift |= args.pooled_shift;
        if let Some(dir) = &args.out_dir {
            cfg.csv = dir.join("sweep.csv");
            cfg.summary = dir.join("summary.json");
        }
        if let Some(p) = &args.csv {
            cfg.csv = p.clone();
        }
        if let Some(p) = &args.summary {
            cfg.summary = p.clone();
        }
        Ok(cfg)
    }

    /// Checks every value against the module preconditions and builds the
    /// initial state, before any optimization runs.
    pub fn check(&self) -> Result<Checked, ConfigError> {
        let invalid = |m: String| ConfigError::Invalid(m);
        let (lx, ly) = isotns_grid(self.lattice.pair()).map_err(|e| invalid(e.to_string()))?;
        if !is_power_of_two(self.d) {
            return Err(invalid(format!("D = {} is not a power of two", self.d)));
        }
        if !self.g.is_finite() {
            return Err(invalid(format!("g = {} is not finite", self.g)));
        }
        if self.max_qubits > CONTRACT_GUARD {
            return Err(invalid(format!("max_qubits {} exceeds the hard limit {CONTRACT_GUARD}", self.max_qubits)));
        }
        let sweep = isotns::sweep::SweepConfig {
            method: self.method,
            sweeps: self.sweeps,
            shots: self.shots,
            krylov_k: self.krylov_k,
            ..Default::default()
        };
        sweep.validate().map_err(|e| invalid(e.to_string()))?;
        check_feasible(lx, ly, self.d).map_err(|e| invalid(e.to_string()))?;

        let n = self.lattice.cols * self.lattice.rows;
        if n > self.max_qubits {
            return Err(ConfigError::Guard(format!("{n} physical qubits exceed the limit of {}", self.max_qubits)));
        }
        let state = IsoTns::init_random(lx, ly, self.d, self.seed).map_err(|e| invalid(e.to_string()))?;
        let center_qubits = state.tensors().iter().map(|t| t.len().trailing_zeros() as usize).max().unwrap_or(0);
        if self.method != Method::Exact && center_qubits > MAX_CENTER_QUBITS {
            return Err(ConfigError::Guard(format!(
                "center registers of {center_qubits} qubits exceed the estimator limit of {MAX_CENTER_QUBITS}"
            )));
        }
        let register = match self.method {
            Method::Exact | Method::Tomography => n + center_qubits,
            Method::Lanczos => n,
        };
        if register > SIM_GUARD {
            return Err(ConfigError::Guard(format!(
                "a {register}-qubit register exceeds the simulator limit of {SIM_GUARD}"
            )));
        }
        let hamiltonian = tfim(self.lattice.cols, self.lattice.rows, self.g);
        Ok(Checked { state, hamiltonian })
    }
}
