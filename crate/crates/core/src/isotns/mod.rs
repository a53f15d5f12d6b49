//! Isometric tensor network states on an `Lx x Ly` grid.
//!
//! Each grid site carries one physical spin, except the two edge columns
//! which carry two (three when `Lx == 1`), so the grid describes
//! `(Lx + 2) x Ly` spins. Row 0 is the top row.

mod io;
pub(crate) mod labeled;
mod moves;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::tensor::{is_power_of_two, isometry_deviation, DenseTensor};
use labeled::Labeled;

pub use moves::{BondPolicy, MosesOptions};

/// Largest number of spins `contract_full` and `open_center_map` will touch.
pub const CONTRACT_GUARD: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LegRole {
    Phys(usize),
    Up,
    Down,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arrow {
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Leg {
    pub role: LegRole,
    pub arrow: Arrow,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vertical {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    InColumn,
    Moses,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveReport {
    pub kind: MoveKind,
    pub fidelity_estimate: f64,
    pub truncation_weight: f64,
}

/// Number of physical legs at column `x`.
pub fn phys_legs(lx: usize, x: usize) -> usize {
    1 + usize::from(x == 0) + usize::from(x + 1 == lx)
}

/// Canonical leg order of site `(x, y)`: physical legs, then up, down, left, right
/// where present.
pub fn roles(lx: usize, ly: usize, x: usize, y: usize) -> Vec<LegRole> {
    let mut out: Vec<LegRole> = (0..phys_legs(lx, x)).map(LegRole::Phys).collect();
    if y > 0 {
        out.push(LegRole::Up);
    }
    if y + 1 < ly {
        out.push(LegRole::Down);
    }
    if x > 0 {
        out.push(LegRole::Left);
    }
    if x + 1 < lx {
        out.push(LegRole::Right);
    }
    out
}

/// Arrow of a leg at `(x, y)` when the isometric center sits at `center`.
pub fn arrow(x: usize, y: usize, role: LegRole, center: (usize, usize)) -> Arrow {
    let (c, r) = center;
    let input = match role {
        LegRole::Phys(_) => false,
        LegRole::Left => x > c,
        LegRole::Right => x < c,
        LegRole::Up => x != c || y > r,
        LegRole::Down => x == c && y < r,
    };
    if input {
        Arrow::In
    } else {
        Arrow::Out
    }
}

/// Physical spin index of leg `k` at `(x, y)`, row-major over `(Lx + 2) x Ly`.
pub fn phys_qubit(lx: usize, x: usize, y: usize, k: usize) -> usize {
    let first = if x == 0 { 0 } else { x + 1 };
    y * (lx + 2) + first + k
}

fn nominal_dim(role: LegRole, d: usize) -> usize {
    match role {
        LegRole::Phys(_) => 2,
        _ => d,
    }
}

/// Checks that every site can be an isometry (input dim at most output dim)
/// for every placement of the center.
pub fn check_feasible(lx: usize, ly: usize, d: usize) -> Result<()> {
    for c in 0..lx {
        for r in 0..ly {
            for y in 0..ly {
                for x in 0..lx {
                    if (x, y) == (c, r) {
                        continue;
                    }
                    let (mut din, mut dout) = (1usize, 1usize);
                    for role in roles(lx, ly, x, y) {
                        match arrow(x, y, role, (c, r)) {
                            Arrow::In => din *= nominal_dim(role, d),
                            Arrow::Out => dout *= nominal_dim(role, d),
                        }
                    }
                    if din > dout {
                        return Err(Error::InvalidArgument(format!(
                            "bond dimension {d} is too large for a {lx}x{ly} grid: site ({x},{y}) \
                             would map {din} inputs into {dout} outputs"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Bond {
    Phys(usize),
    Horizontal(usize, usize),
    Vertical(usize, usize),
    Open(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsoTns {
    lx: usize,
    ly: usize,
    d: usize,
    tensors: Vec<DenseTensor>,
    center: (usize, usize),
}

impl IsoTns {
    /// Random isometric network with the center at `(0, 0)` and unit norm.
    pub fn init_random(lx: usize, ly: usize, d: usize, seed: u64) -> Result<Self> {
        validate_dims(lx, ly, d)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let center = (0, 0);
        let mut tensors = Vec::with_capacity(lx * ly);
        for y in 0..ly {
            for x in 0..lx {
                let rs = roles(lx, ly, x, y);
                let shape: Vec<usize> = rs.iter().map(|&r| nominal_dim(r, d)).collect();
                if (x, y) == center {
                    let mut t = DenseTensor::random_normal(shape, &mut rng);
                    let n = t.norm();
                    t.scale(C64::new(1.0 / n, 0.0));
                    tensors.push(t);
                    continue;
                }
                let (outs, ins): (Vec<usize>, Vec<usize>) =
                    (0..rs.len()).partition(|&k| arrow(x, y, rs[k], center) == Arrow::Out);
                let out_dims: Vec<usize> = outs.iter().map(|&k| shape[k]).collect();
                let in_dims: Vec<usize> = ins.iter().map(|&k| shape[k]).collect();
                let rows: usize = out_dims.iter().product();
                let cols: usize = in_dims.iter().product();
                let g = DenseTensor::random_normal(vec![rows, cols], &mut rng);
                let q = g.to_matrix(&[0])?.qr().q();
                let t = DenseTensor::from_matrix(&q, &out_dims, &in_dims)?;
                // back to canonical order: output legs first, then inputs
                let mut perm = vec![0; rs.len()];
                for (slot, &k) in outs.iter().chain(ins.iter()).enumerate() {
                    perm[k] = slot;
                }
                tensors.push(t.permute(&perm)?);
            }
        }
        Ok(Self { lx, ly, d, tensors, center })
    }

    /// Product state with every spin in `local` (normalized), bond dimension 1.
    pub fn product_state(lx: usize, ly: usize, local: [C64; 2]) -> Result<Self> {
        validate_dims(lx, ly, 1)?;
        let n = (local[0].norm_sqr() + local[1].norm_sqr()).sqrt();
        if n == 0.0 {
            return Err(Error::InvalidArgument("local state has zero norm".into()));
        }
        let v = [local[0] / n, local[1] / n];
        let tensors = (0..ly)
            .flat_map(|y| (0..lx).map(move |x| (x, y)))
            .map(|(x, y)| {
                let shape: Vec<usize> = roles(lx, ly, x, y).iter().map(|&r| nominal_dim(r, 1)).collect();
                let p = phys_legs(lx, x);
                DenseTensor::from_fn(shape, |idx| {
                    idx[..p].iter().fold(C64::new(1.0, 0.0), |acc, &i| acc * v[i])
                })
            })
            .collect();
        Ok(Self { lx, ly, d: 1, tensors, center: (0, 0) })
    }

    /// Builds a network from raw tensors, checking leg counts, physical
    /// dimensions and bond consistency (not isometry).
    pub fn from_parts(
        lx: usize,
        ly: usize,
        d: usize,
        tensors: Vec<DenseTensor>,
        center: (usize, usize),
    ) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::InvalidArgument("grid must be at least 1x1".into()));
        }
        if tensors.len() != lx * ly {
            return Err(Error::InvalidShape(format!(
                "expected {} tensors, got {}",
                lx * ly,
                tensors.len()
            )));
        }
        if center.0 >= lx || center.1 >= ly {
            return Err(Error::InvalidArgument(format!("center {center:?} outside the grid")));
        }
        let s = Self { lx, ly, d, tensors, center };
        for y in 0..ly {
            for x in 0..lx {
                let rs = roles(lx, ly, x, y);
                let t = s.tensor(x, y);
                if t.ndim() != rs.len() {
                    return Err(Error::InvalidShape(format!(
                        "site ({x},{y}) needs {} legs, got {}",
                        rs.len(),
                        t.ndim()
                    )));
                }
                for (k, r) in rs.iter().enumerate() {
                    let dim = t.shape()[k];
                    if matches!(r, LegRole::Phys(_)) && dim != 2 {
                        return Err(Error::InvalidShape(format!("physical leg of dim {dim} at ({x},{y})")));
                    }
                    if !is_power_of_two(dim) {
                        return Err(Error::NotPowerOfTwo(dim));
                    }
                }
                if x + 1 < lx && s.leg_dim(x, y, LegRole::Right) != s.leg_dim(x + 1, y, LegRole::Left) {
                    return Err(Error::DimensionMismatch(format!(
                        "horizontal bond between ({x},{y}) and ({},{y})",
                        x + 1
                    )));
                }
                if y + 1 < ly && s.leg_dim(x, y, LegRole::Down) != s.leg_dim(x, y + 1, LegRole::Up) {
                    return Err(Error::DimensionMismatch(format!(
                        "vertical bond between ({x},{y}) and ({x},{})",
                        y + 1
                    )));
                }
            }
        }
        Ok(s)
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    /// Nominal bond dimension.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    /// Number of physical spins, `(Lx + 2) * Ly`.
    pub fn n_qubits(&self) -> usize {
        (self.lx + 2) * self.ly
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn tensor(&self, x: usize, y: usize) -> &DenseTensor {
        &self.tensors[y * self.lx + x]
    }

    pub(crate) fn tensor_mut(&mut self, x: usize, y: usize) -> &mut DenseTensor {
        &mut self.tensors[y * self.lx + x]
    }

    pub fn roles(&self, x: usize, y: usize) -> Vec<LegRole> {
        roles(self.lx, self.ly, x, y)
    }

    pub fn phys_qubit(&self, x: usize, y: usize, k: usize) -> usize {
        phys_qubit(self.lx, x, y, k)
    }

    /// Dimension of the leg with `role` at `(x, y)`, or 1 when absent.
    pub fn leg_dim(&self, x: usize, y: usize, role: LegRole) -> usize {
        self.roles(x, y)
            .iter()
            .position(|&r| r == role)
            .map_or(1, |k| self.tensor(x, y).shape()[k])
    }

    pub fn leg_layout(&self, x: usize, y: usize) -> Vec<Leg> {
        self.roles(x, y)
            .into_iter()
            .enumerate()
            .map(|(k, role)| Leg {
                role,
                arrow: arrow(x, y, role, self.center),
                dim: self.tensor(x, y).shape()[k],
            })
            .collect()
    }

    /// Frobenius norm of the center tensor, which is the norm of the state.
    pub fn norm(&self) -> f64 {
        self.center_tensor().norm()
    }

    pub fn center_tensor(&self) -> &DenseTensor {
        self.tensor(self.center.0, self.center.1)
    }

    pub fn set_center_tensor(&mut self, t: DenseTensor) -> Result<()> {
        if t.shape() != self.center_tensor().shape() {
            return Err(Error::DimensionMismatch(format!(
                "center tensor has shape {:?}, got {:?}",
                self.center_tensor().shape(),
                t.shape()
            )));
        }
        let (c, r) = self.center;
        *self.tensor_mut(c, r) = t;
        Ok(())
    }

    pub fn center_dims(&self) -> Vec<usize> {
        self.center_tensor().shape().to_vec()
    }

    /// Dimension of the space the center tensor lives in.
    pub fn center_dim(&self) -> usize {
        self.center_tensor().len()
    }

    /// Positions of the output and input legs of `(x, y)` in canonical order.
    pub fn split_arrows(&self, x: usize, y: usize) -> (Vec<usize>, Vec<usize>) {
        let rs = self.roles(x, y);
        (0..rs.len()).partition(|&k| arrow(x, y, rs[k], self.center) == Arrow::Out)
    }

    /// `max |W^dag W - I|` of the site viewed as a map from inputs to outputs;
    /// `None` at the center.
    pub fn isometry_deviation(&self, x: usize, y: usize) -> Option<f64> {
        if (x, y) == self.center {
            return None;
        }
        let (outs, _) = self.split_arrows(x, y);
        let m = self.tensor(x, y).to_matrix(&outs).ok()?;
        Some(isometry_deviation(&m))
    }

    pub fn max_isometry_deviation(&self) -> f64 {
        (0..self.ly)
            .flat_map(|y| (0..self.lx).map(move |x| (x, y)))
            .filter_map(|(x, y)| self.isometry_deviation(x, y))
            .fold(0.0, f64::max)
    }

    pub fn check_isometries(&self, tol: f64) -> Result<()> {
        let dev = self.max_isometry_deviation();
        if dev > tol {
            return Err(Error::NotIsometric(dev));
        }
        Ok(())
    }

    fn guard(&self, what: &'static str) -> Result<()> {
        if self.n_qubits() > CONTRACT_GUARD {
            return Err(Error::GuardExceeded { what, qubits: self.n_qubits(), limit: CONTRACT_GUARD });
        }
        Ok(())
    }

    fn labeled_site(&self, x: usize, y: usize, t: DenseTensor) -> Labeled<Bond> {
        let labels = self
            .roles(x, y)
            .into_iter()
            .map(|r| match r {
                LegRole::Phys(k) => Bond::Phys(self.phys_qubit(x, y, k)),
                LegRole::Up => Bond::Vertical(x, y - 1),
                LegRole::Down => Bond::Vertical(x, y),
                LegRole::Left => Bond::Horizontal(x - 1, y),
                LegRole::Right => Bond::Horizontal(x, y),
            })
            .collect();
        Labeled::new(t, labels)
    }

    /// Contracts every site in row-major order, with the center replaced by `center`.
    fn fold(&self, center: Labeled<Bond>) -> Result<Labeled<Bond>> {
        let mut acc: Option<Labeled<Bond>> = None;
        for y in 0..self.ly {
            for x in 0..self.lx {
                let site = if (x, y) == self.center {
                    center.clone()
                } else {
                    self.labeled_site(x, y, self.tensor(x, y).clone())
                };
                acc = Some(match acc {
                    None => site,
                    Some(a) => {
                        let shared: Vec<(Bond, Bond)> = a
                            .labels
                            .iter()
                            .filter(|l| !matches!(l, Bond::Phys(_) | Bond::Open(_)) && site.has(**l))
                            .map(|&l| (l, l))
                            .collect();
                        a.contract(&site, &shared)?
                    }
                });
            }
        }
        Ok(acc.expect("grid is non-empty"))
    }

    /// Amplitudes of the physical state, one leg of dim 2 per spin, spin 0 first.
    pub fn contract_full(&self) -> Result<DenseTensor> {
        self.guard("full contraction")?;
        let (c, r) = self.center;
        let acc = self.fold(self.labeled_site(c, r, self.center_tensor().clone()))?;
        let order: Vec<Bond> = (0..self.n_qubits()).map(Bond::Phys).collect();
        acc.ordered(&order)
    }

    /// The isometry from the center space into the physical Hilbert space,
    /// as a `2^N x center_dim` matrix: column `j` is the state obtained with
    /// the center set to the `j`-th basis tensor (canonical leg order).
    pub fn open_center_map(&self) -> Result<DMatrix<C64>> {
        self.guard("open-center map")?;
        let (c, r) = self.center;
        let dims = self.center_dims();
        let k = dims.len();
        let dim: usize = dims.iter().product();
        let delta = DenseTensor::from_matrix(&DMatrix::identity(dim, dim), &dims, &dims)?;
        let mut labels = self.labeled_site(c, r, self.center_tensor().clone()).labels;
        labels.extend((0..k).map(Bond::Open));
        let acc = self.fold(Labeled::new(delta, labels))?;
        let order: Vec<Bond> = (0..self.n_qubits()).map(Bond::Phys).chain((0..k).map(Bond::Open)).collect();
        acc.ordered(&order)?.to_matrix(&(0..self.n_qubits()).collect::<Vec<_>>())
    }
}

fn validate_dims(lx: usize, ly: usize, d: usize) -> Result<()> {
    if lx == 0 || ly == 0 {
        return Err(Error::InvalidArgument("grid must be at least 1x1".into()));
    }
    if !is_power_of_two(d) {
        return Err(Error::NotPowerOfTwo(d));
    }
    check_feasible(lx, ly, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leg_counts_follow_position() {
        assert_eq!(roles(1, 1, 0, 0), vec![LegRole::Phys(0), LegRole::Phys(1), LegRole::Phys(2)]);
        assert_eq!(phys_legs(3, 0), 2);
        assert_eq!(phys_legs(3, 1), 1);
        assert_eq!(phys_legs(3, 2), 2);
        assert_eq!(roles(3, 3, 1, 1).len(), 5);
    }

    #[test]
    fn qubit_map_covers_every_spin_once() {
        for (lx, ly) in [(1, 1), (1, 3), (2, 2), (3, 2)] {
            let mut seen = vec![false; (lx + 2) * ly];
            for y in 0..ly {
                for x in 0..lx {
                    for k in 0..phys_legs(lx, x) {
                        let q = phys_qubit(lx, x, y, k);
                        assert!(!seen[q]);
                        seen[q] = true;
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn arrows_point_away_from_center() {
        let c = (1, 1);
        assert_eq!(arrow(0, 0, LegRole::Right, c), Arrow::In);
        assert_eq!(arrow(2, 0, LegRole::Left, c), Arrow::In);
        assert_eq!(arrow(1, 0, LegRole::Down, c), Arrow::In);
        assert_eq!(arrow(1, 2, LegRole::Up, c), Arrow::In);
        assert_eq!(arrow(1, 1, LegRole::Left, c), Arrow::Out);
        assert_eq!(arrow(0, 1, LegRole::Up, c), Arrow::In);
        assert_eq!(arrow(0, 1, LegRole::Down, c), Arrow::Out);
    }

    #[test]
    fn large_bond_dimension_is_rejected() {
        assert!(check_feasible(3, 3, 2).is_ok());
        assert!(check_feasible(3, 1, 4).is_ok());
        assert!(IsoTns::init_random(3, 3, 4, 0).is_err());
        assert!(matches!(IsoTns::init_random(2, 2, 3, 0), Err(Error::NotPowerOfTwo(3))));
    }

    #[test]
    fn single_site_holds_physical_legs_only() {
        let s = IsoTns::init_random(1, 1, 1, 5).unwrap();
        assert_eq!(s.tensor(0, 0).shape(), &[2, 2, 2]);
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let full = s.contract_full().unwrap();
        assert_eq!(full.data(), s.tensor(0, 0).data());
    }

    #[test]
    fn random_init_is_isometric_and_deterministic() {
        let a = IsoTns::init_random(3, 5, 2, 7).unwrap();
        for y in 0..5 {
            for x in 0..3 {
                if let Some(dev) = a.isometry_deviation(x, y) {
                    assert!(dev < 1e-10, "({x},{y}) deviates by {dev}");
                }
            }
        }
        let b = IsoTns::init_random(3, 5, 2, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_scales_with_center() {
        let mut s = IsoTns::init_random(2, 2, 2, 1).unwrap();
        let mut t = s.center_tensor().clone();
        t.scale(C64::new(2.0, 0.0));
        s.set_center_tensor(t).unwrap();
        assert!((s.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn norm_matches_contraction() {
        let s = IsoTns::init_random(2, 3, 2, 11).unwrap();
        let full = s.contract_full().unwrap();
        assert!((full.norm() - s.norm()).abs() < 1e-10);
    }

    #[test]
    fn open_center_map_is_isometric_and_reproduces_state() {
        let s = IsoTns::init_random(2, 2, 2, 3).unwrap();
        let u = s.open_center_map().unwrap();
        assert_eq!(u.ncols(), s.center_dim());
        assert!(isometry_deviation(&u) < 1e-10);
        let v = nalgebra::DVector::from_row_slice(s.center_tensor().data());
        let psi = &u * v;
        let full = s.contract_full().unwrap();
        let diff: f64 = psi.iter().zip(full.data()).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(diff.sqrt() < 1e-10);
    }

    #[test]
    fn product_state_amplitudes() {
        let s = IsoTns::product_state(1, 2, [C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let full = s.contract_full().unwrap();
        let amp = 1.0 / 8.0;
        assert!(full.data().iter().all(|z| (z.re - amp).abs() < 1e-12 && z.im.abs() < 1e-12));
        assert!(s.max_isometry_deviation() < 1e-12);
    }

    #[test]
    fn from_parts_rejects_mismatched_bonds() {
        let s = IsoTns::init_random(2, 1, 2, 0).unwrap();
        let mut ts = s.tensors().to_vec();
        ts[1] = DenseTensor::zeros(vec![2, 2, 1]);
        assert!(IsoTns::from_parts(2, 1, 2, ts, (0, 0)).is_err());
        assert!(IsoTns::from_parts(2, 1, 2, s.tensors().to_vec(), (0, 0)).is_ok());
    }
}
