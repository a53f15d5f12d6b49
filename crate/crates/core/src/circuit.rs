//! Compiles an isoTNS (minus its center) into a causal circuit of dense
//! gates, and builds the tomography and shifted-input circuit families.
//!
//! Wires `0..N` are the physical spins in row-major order over the
//! `(Lx + 2) x Ly` grid; ancillas, when present, follow at `N..`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::isotns::{IsoTns, LegRole};
use crate::tensor::{embed_isometry_in_unitary, isometry_deviation, log2_exact};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    /// Unitary acting on `targets`, first target most significant.
    pub matrix: DMatrix<C64>,
    pub targets: Vec<usize>,
    pub label: String,
}

impl Gate {
    pub fn new(matrix: DMatrix<C64>, targets: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on {} targets",
                matrix.nrows(),
                matrix.ncols(),
                targets.len()
            )));
        }
        for (k, t) in targets.iter().enumerate() {
            if targets[..k].contains(t) {
                return Err(Error::InvalidArgument(format!("target {t} repeated")));
            }
        }
        Ok(Self { matrix, targets, label: label.into() })
    }

    pub fn hadamard(q: usize) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)]);
        Self { matrix: m, targets: vec![q], label: "h".into() }
    }

    /// `diag(1, i^m)`.
    pub fn phase(q: usize, m: u32) -> Self {
        let ph = C64::i().powu(m % 4);
        let m_ = DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ph]);
        Self { matrix: m_, targets: vec![q], label: format!("p{}", m % 4) }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        Self { matrix: m, targets: vec![control, target], label: "cx".into() }
    }

    pub fn unitarity_deviation(&self) -> f64 {
        isometry_deviation(&self.matrix)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub ancillas: Vec<usize>,
    /// Wires holding the center legs in canonical leg order, most significant first.
    pub center_wires: Vec<usize>,
    /// Width and height of the physical grid.
    pub grid: (usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResourceEstimate {
    pub qubit_count: usize,
    pub cx_per_bulk_unitary: usize,
    pub cx_total: usize,
    pub depth_estimate: usize,
}

impl Circuit {
    /// Checks that every target is in range and every gate is unitary within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for g in &self.gates {
            if let Some(&t) = g.targets.iter().find(|&&t| t >= self.n_qubits) {
                return Err(Error::InvalidArgument(format!("gate {} targets wire {t}", g.label)));
            }
            let dev = g.unitarity_deviation();
            if dev > tol {
                return Err(Error::NotIsometric(dev));
            }
        }
        Ok(())
    }

    /// Register state with `center` loaded on the center wires and all other wires at `|0>`.
    pub fn initial_state(&self, center: &[C64]) -> Result<Vec<C64>> {
        if center.len() != 1 << self.center_wires.len() {
            return Err(Error::DimensionMismatch(format!(
                "center vector of length {} for {} wires",
                center.len(),
                self.center_wires.len()
            )));
        }
        let n = self.n_qubits;
        let k = self.center_wires.len();
        let mut psi = vec![ZERO; 1 << n];
        for (i, &a) in center.iter().enumerate() {
            let mut idx = 0usize;
            for (j, &w) in self.center_wires.iter().enumerate() {
                if (i >> (k - 1 - j)) & 1 == 1 {
                    idx |= 1 << (n - 1 - w);
                }
            }
            psi[idx] = a;
        }
        Ok(psi)
    }

    /// One line per gate: `label targets...`.
    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.n_qubits);
        for g in &self.gates {
            let _ = write!(s, "{}", g.label);
            for t in &g.targets {
                let _ = write!(s, " {t}");
            }
            s.push('\n');
        }
        s
    }

    /// Writes `circuit.txt` and one little-endian `(re, im)` blob per gate.
    pub fn dump(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("circuit.txt"), self.to_text())?;
        for (k, g) in self.gates.iter().enumerate() {
            let mut bytes = Vec::with_capacity(16 * g.matrix.len());
            for i in 0..g.matrix.nrows() {
                for j in 0..g.matrix.ncols() {
                    bytes.extend_from_slice(&g.matrix[(i, j)].re.to_le_bytes());
                    bytes.extend_from_slice(&g.matrix[(i, j)].im.to_le_bytes());
                }
            }
            fs::write(dir.join(format!("gate_{k:04}.bin")), bytes)?;
        }
        Ok(())
    }
}

fn idx(lx: usize, x: usize, y: usize) -> usize {
    y * lx + x
}

/// Neighbor across a virtual leg and the leg it meets there.
fn across(x: usize, y: usize, role: LegRole) -> (usize, usize, LegRole) {
    match role {
        LegRole::Up => (x, y - 1, LegRole::Down),
        LegRole::Down => (x, y + 1, LegRole::Up),
        LegRole::Left => (x - 1, y, LegRole::Right),
        LegRole::Right => (x + 1, y, LegRole::Left),
        LegRole::Phys(_) => unreachable!("physical legs have no neighbor"),
    }
}

fn is_horizontal(role: LegRole) -> bool {
    matches!(role, LegRole::Left | LegRole::Right)
}

/// Order in which the non-center sites act: every site after the one
/// feeding its inputs.
fn causal_order(state: &IsoTns) -> Vec<(usize, usize)> {
    let (lx, ly) = (state.lx(), state.ly());
    let mut done = vec![false; lx * ly];
    let (c, r) = state.center();
    done[idx(lx, c, r)] = true;
    let mut order = Vec::with_capacity(lx * ly);
    while order.len() + 1 < lx * ly {
        for y in 0..ly {
            for x in 0..lx {
                if done[idx(lx, x, y)] {
                    continue;
                }
                let roles = state.roles(x, y);
                let (_, ins) = state.split_arrows(x, y);
                let ready = ins.iter().all(|&k| {
                    let (nx, ny, _) = across(x, y, roles[k]);
                    done[idx(lx, nx, ny)]
                });
                if ready {
                    done[idx(lx, x, y)] = true;
                    order.push((x, y));
                }
            }
        }
    }
    order
}

struct Routing {
    /// Wires per leg per site, canonical leg order.
    legs: Vec<Vec<Vec<usize>>>,
    /// Wires first touched by each site's gate.
    fresh: Vec<Vec<usize>>,
}

fn route(state: &IsoTns, order: &[(usize, usize)]) -> Result<Routing> {
    let lx = state.lx();
    let mut legs: Vec<Vec<Vec<usize>>> = (0..state.ly())
        .flat_map(|y| (0..lx).map(move |x| (x, y)))
        .map(|(x, y)| vec![Vec::new(); state.roles(x, y).len()])
        .collect();
    let mut fresh = vec![Vec::new(); legs.len()];
    let (c, r) = state.center();
    let sites = order.iter().rev().copied().chain(std::iter::once((c, r)));
    for (x, y) in sites {
        let roles = state.roles(x, y);
        let shape = state.tensor(x, y).shape().to_vec();
        let (outs, ins) = state.split_arrows(x, y);
        // output wires: own spins, then wires already claimed downstream
        let mut phys = Vec::new();
        let mut horiz = Vec::new();
        let mut vert = Vec::new();
        for &k in &outs {
            let wires = match roles[k] {
                LegRole::Phys(p) => vec![state.phys_qubit(x, y, p)],
                role => {
                    let (nx, ny, back) = across(x, y, role);
                    let nroles = state.roles(nx, ny);
                    let kk = nroles.iter().position(|&l| l == back).expect("neighbor leg exists");
                    legs[idx(lx, nx, ny)][kk].clone()
                }
            };
            if wires.len() != log2_exact(shape[k])? {
                return Err(Error::DimensionMismatch(format!("leg {k} of site ({x},{y})")));
            }
            match roles[k] {
                LegRole::Phys(_) => phys.extend(&wires),
                role if is_horizontal(role) => horiz.extend(&wires),
                _ => vert.extend(&wires),
            }
            legs[idx(lx, x, y)][k] = wires;
        }
        let mut pool = phys.into_iter().chain(horiz).chain(vert);
        let mut ins_sorted = ins.clone();
        ins_sorted.sort_by_key(|&k| !is_horizontal(roles[k]));
        for k in ins_sorted {
            let b = log2_exact(shape[k])?;
            let wires: Vec<usize> = pool.by_ref().take(b).collect();
            if wires.len() != b {
                return Err(Error::InvalidArgument(format!(
                    "site ({x},{y}) has more input than output qubits"
                )));
            }
            legs[idx(lx, x, y)][k] = wires;
        }
        fresh[idx(lx, x, y)] = pool.collect();
    }
    Ok(Routing { legs, fresh })
}

fn site_gate(state: &IsoTns, routing: &Routing, x: usize, y: usize) -> Result<Gate> {
    let i = idx(state.lx(), x, y);
    let (outs, ins) = state.split_arrows(x, y);
    let w = state.tensor(x, y).to_matrix(&outs)?;
    let u = embed_isometry_in_unitary(&w)?;
    let targets: Vec<usize> = outs.iter().flat_map(|&k| routing.legs[i][k].iter().copied()).collect();
    let in_wires: Vec<usize> = ins.iter().flat_map(|&k| routing.legs[i][k].iter().copied()).collect();
    let fresh = &routing.fresh[i];
    let d_in = 1usize << in_wires.len();
    let kt = targets.len();
    let bit_of = |config: usize, wire: usize| -> usize {
        let p = targets.iter().position(|&t| t == wire).expect("wire is a target");
        (config >> (kt - 1 - p)) & 1
    };
    let dim = 1usize << kt;
    let mut g = DMatrix::zeros(dim, dim);
    for config in 0..dim {
        let ii = in_wires.iter().fold(0, |a, &wv| (a << 1) | bit_of(config, wv));
        let ff = fresh.iter().fold(0, |a, &wv| (a << 1) | bit_of(config, wv));
        g.set_column(config, &u.column(ff * d_in + ii));
    }
    Gate::new(g, targets, format!("site_{x}_{y}"))
}

/// The gates of the isometry with the center removed, in causal order.
pub fn build_isometry_circuit(state: &IsoTns) -> Result<Circuit> {
    let order = causal_order(state);
    let routing = route(state, &order)?;
    let gates = order
        .iter()
        .map(|&(x, y)| site_gate(state, &routing, x, y))
        .collect::<Result<Vec<_>>>()?;
    let (c, r) = state.center();
    let center_wires = routing.legs[idx(state.lx(), c, r)].concat();
    Ok(Circuit {
        n_qubits: state.n_qubits(),
        gates,
        ancillas: Vec::new(),
        center_wires,
        grid: (state.lx() + 2, state.ly()),
    })
}

/// Bell pairs between one ancilla per center wire and that wire, then the isometry.
pub fn build_tomography_circuit(state: &IsoTns) -> Result<Circuit> {
    let mut base = build_isometry_circuit(state)?;
    let n = base.n_qubits;
    let k = base.center_wires.len();
    let ancillas: Vec<usize> = (n..n + k).collect();
    let mut gates = Vec::with_capacity(2 * k + base.gates.len());
    for (j, &a) in ancillas.iter().enumerate() {
        gates.push(Gate::hadamard(a));
        gates.push(Gate::cnot(a, base.center_wires[j]));
    }
    gates.append(&mut base.gates);
    Ok(Circuit { n_qubits: n + k, gates, ancillas, ..base })
}

/// Prepares `(|0> + i^m |s>)/sqrt(2)` on the center wires, applies `v`
/// there, then the isometry.
pub fn build_shift_circuit(state: &IsoTns, v: &DMatrix<C64>, s: usize, m: u32) -> Result<Circuit> {
    let mut base = build_isometry_circuit(state)?;
    let k = base.center_wires.len();
    if v.nrows() != 1 << k || v.ncols() != 1 << k {
        return Err(Error::DimensionMismatch(format!("V is {}x{}, center has {k} wires", v.nrows(), v.ncols())));
    }
    if s == 0 || s >= 1 << k {
        return Err(Error::InvalidArgument(format!("shift index {s} must be in 1..{}", 1 << k)));
    }
    let support: Vec<usize> = (0..k).filter(|j| (s >> (k - 1 - j)) & 1 == 1).map(|j| base.center_wires[j]).collect();
    let mut gates = vec![Gate::hadamard(support[0]), Gate::phase(support[0], m)];
    for &w in &support[1..] {
        gates.push(Gate::cnot(support[0], w));
    }
    gates.push(Gate::new(v.clone(), base.center_wires.clone(), "v")?);
    gates.append(&mut base.gates);
    Ok(Circuit { gates, ..base })
}

/// Analytic counts: `2 * out_dim` CX per tensor (center included) and
/// depth `(Lx + Ly) * 2 D^4`.
pub fn resource_estimate(state: &IsoTns) -> ResourceEstimate {
    let d4 = state.d().pow(4);
    let mut cx_total = 0;
    for y in 0..state.ly() {
        for x in 0..state.lx() {
            let (outs, _) = state.split_arrows(x, y);
            let shape = state.tensor(x, y).shape();
            cx_total += 2 * outs.iter().map(|&k| shape[k]).product::<usize>();
        }
    }
    ResourceEstimate {
        qubit_count: state.n_qubits(),
        cx_per_bulk_unitary: 2 * d4,
        cx_total,
        depth_estimate: (state.lx() + state.ly()) * 2 * d4,
    }
}
