//! Pauli strings, real-weighted Pauli sums, the transverse-field Ising
//! builder and qubit-wise commuting groups.
//!
//! Qubit `0` is the most significant bit of a basis-state index.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Letters indexed `0..4` as I, X, Y, Z.
    pub fn from_index(k: usize) -> Self {
        [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][k & 3]
    }
}

/// Tensor product of single-qubit Paulis, one letter per qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    x_mask: u64,
    z_mask: u64,
    n_y: u32,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        assert!(letters.len() <= 64, "at most 64 qubits");
        let n = letters.len();
        let (mut x_mask, mut z_mask, mut n_y) = (0u64, 0u64, 0u32);
        for (q, &p) in letters.iter().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x_mask |= bit,
                Pauli::Z => z_mask |= bit,
                Pauli::Y => {
                    x_mask |= bit;
                    z_mask |= bit;
                    n_y += 1;
                }
            }
        }
        Self { letters, x_mask, z_mask, n_y }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(vec![Pauli::I; n_qubits])
    }

    /// Sets the listed qubits to `letter`, identity elsewhere.
    pub fn on(n_qubits: usize, sites: &[(usize, Pauli)]) -> Self {
        let mut letters = vec![Pauli::I; n_qubits];
        for &(q, p) in sites {
            letters[q] = p;
        }
        Self::new(letters)
    }

    /// The `index`-th string of the `4^n` basis, two bits per qubit with
    /// qubit 0 most significant and letters ordered I, X, Y, Z.
    pub fn from_basis_index(n_qubits: usize, index: usize) -> Self {
        let letters = (0..n_qubits)
            .map(|q| Pauli::from_index(index >> (2 * (n_qubits - 1 - q))))
            .collect();
        Self::new(letters)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// `P^T = (-1)^{#Y} P`.
    pub fn transpose_sign(&self) -> f64 {
        if self.n_y % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `P|b> = phase |b ^ x_mask>`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (u64, C64) {
        let sign = if (b & self.z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let phase = match self.n_y % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        };
        (b ^ self.x_mask, phase)
    }

    /// Eigenvalue (+1/-1) of the Z-string on the support of this Pauli for
    /// a computational outcome, i.e. the measured value after rotating to
    /// this string's eigenbasis.
    #[inline]
    pub fn parity(&self, outcome: u64) -> f64 {
        if (outcome & (self.x_mask | self.z_mask)).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn qubitwise_commutes(&self, other: &PauliString) -> bool {
        self.letters
            .iter()
            .zip(&other.letters)
            .all(|(&a, &b)| a == Pauli::I || b == Pauli::I || a == b)
    }

    /// `P|psi>` for a full register vector.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for (b, &a) in psi.iter().enumerate() {
            let (t, ph) = self.apply_to_basis(b as u64);
            out[t as usize] = ph * a;
        }
        out
    }

    pub fn expectation(&self, psi: &[C64]) -> f64 {
        psi.iter()
            .enumerate()
            .map(|(b, &a)| {
                let (t, ph) = self.apply_to_basis(b as u64);
                (psi[t as usize].conj() * ph * a).re
            })
            .sum()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.len() > 64 {
            return Err(Error::InvalidArgument("at most 64 qubits".into()));
        }
        Ok(PauliString::new(letters))
    }
}

/// Hermitian operator `sum_k h_k P_k` with real coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(n_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (_, p) in &terms {
            if p.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch(format!(
                    "term {p} on {} qubits in a {n_qubits}-qubit sum",
                    p.n_qubits()
                )));
            }
            if !seen.insert(p.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate term {p}")));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Upper bound on the operator norm, `sum |h_k|`.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(h, _)| h.abs()).sum()
    }

    /// `H|psi>` without materializing the matrix.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply_into(psi, &mut out);
        out
    }

    /// Accumulates `H|psi>` into `out`.
    pub fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
        for (h, p) in &self.terms {
            if p.x_mask == 0 {
                // diagonal term
                for (b, (o, &a)) in out.iter_mut().zip(psi).enumerate() {
                    let (_, ph) = p.apply_to_basis(b as u64);
                    *o += ph * a * *h;
                }
            } else {
                for (b, &a) in psi.iter().enumerate() {
                    let (t, ph) = p.apply_to_basis(b as u64);
                    out[t as usize] += ph * a * *h;
                }
            }
        }
    }

    pub fn expectation(&self, psi: &[C64]) -> f64 {
        self.terms.iter().map(|(h, p)| h * p.expectation(psi)).sum()
    }

    /// Dense matrix; refuses more than 14 qubits.
    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        if self.n_qubits > 14 {
            return Err(Error::GuardExceeded {
                what: "dense Pauli-sum matrix",
                qubits: self.n_qubits,
                limit: 14,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (h, p) in &self.terms {
            for b in 0..dim {
                let (t, ph) = p.apply_to_basis(b as u64);
                m[(t as usize, b)] += ph * *h;
            }
        }
        Ok(m)
    }

    /// Parses the text format: one `coeff letters` term per line; blank
    /// lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n_qubits = None;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: k + 1, msg };
            let mut parts = line.split_whitespace();
            let (Some(c), Some(l), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(format!("expected `coeff letters`, got {line:?}")));
            };
            let coeff: f64 = c.parse().map_err(|_| err(format!("bad coefficient {c:?}")))?;
            let p: PauliString = l.parse().map_err(|e: Error| err(e.to_string()))?;
            match n_qubits {
                None => n_qubits = Some(p.n_qubits()),
                Some(n) if n != p.n_qubits() => {
                    return Err(err(format!("term has {} qubits, expected {n}", p.n_qubits())))
                }
                _ => {}
            }
            terms.push((coeff, p));
        }
        let n = n_qubits.ok_or(Error::Parse { line: 0, msg: "no terms".into() })?;
        Self::new(n, terms).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (h, p) in &self.terms {
            writeln!(f, "{h} {p}")?;
        }
        Ok(())
    }
}

/// Open-boundary transverse-field Ising model `-sum ZZ - g sum X` on an
/// `lx x ly` grid; qubit `row * lx + col`. ZZ bonds come first (horizontal
/// then vertical), then the field terms. A zero field adds no X terms.
pub fn tfim(lx: usize, ly: usize, g: f64) -> PauliSum {
    assert!(lx >= 1 && ly >= 1, "lattice dimensions must be positive");
    let n = lx * ly;
    let q = |row: usize, col: usize| row * lx + col;
    let mut terms = Vec::new();
    for row in 0..ly {
        for col in 0..lx.saturating_sub(1) {
            terms.push((-1.0, PauliString::on(n, &[(q(row, col), Pauli::Z), (q(row, col + 1), Pauli::Z)])));
        }
    }
    for row in 0..ly.saturating_sub(1) {
        for col in 0..lx {
            terms.push((-1.0, PauliString::on(n, &[(q(row, col), Pauli::Z), (q(row + 1, col), Pauli::Z)])));
        }
    }
    if g != 0.0 {
        for k in 0..n {
            terms.push((-g, PauliString::on(n, &[(k, Pauli::X)])));
        }
    }
    PauliSum { n_qubits: n, terms }
}

/// Terms that can be measured together with single-qubit rotations.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutingGroup {
    pub index: usize,
    /// Indices into the parent sum's terms.
    pub members: Vec<usize>,
    /// Per-qubit measurement letter; positions no member touches are `Z`.
    pub basis: Vec<Pauli>,
}

/// Greedy first-fit partition into qubit-wise commuting groups, in term order.
pub fn group_qubitwise(sum: &PauliSum) -> Vec<CommutingGroup> {
    let mut groups: Vec<(Vec<usize>, Vec<Pauli>)> = Vec::new();
    for (k, (_, p)) in sum.terms.iter().enumerate() {
        let fits = |letters: &[Pauli]| {
            letters
                .iter()
                .zip(p.letters())
                .all(|(&a, &b)| a == Pauli::I || b == Pauli::I || a == b)
        };
        match groups.iter_mut().find(|(_, letters)| fits(letters)) {
            Some((members, letters)) => {
                members.push(k);
                for (l, &b) in letters.iter_mut().zip(p.letters()) {
                    if b != Pauli::I {
                        *l = b;
                    }
                }
            }
            None => groups.push((vec![k], p.letters().to_vec())),
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(index, (members, letters))| CommutingGroup {
            index,
            members,
            basis: letters
                .into_iter()
                .map(|l| if l == Pauli::I { Pauli::Z } else { l })
                .collect(),
        })
        .collect()
}

/// One group per term.
pub fn group_singletons(sum: &PauliSum) -> Vec<CommutingGroup> {
    sum.terms
        .iter()
        .enumerate()
        .map(|(k, (_, p))| CommutingGroup {
            index: k,
            members: vec![k],
            basis: p
                .letters()
                .iter()
                .map(|&l| if l == Pauli::I { Pauli::Z } else { l })
                .collect(),
        })
        .collect()
}

/// A sum paired with per-term shifts `<O_k>`: the centered operator is
/// `sum_k h_k (O_k - <O_k>) = H - offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredSum {
    pub sum: PauliSum,
    pub shifts: Vec<f64>,
    /// `sum_k h_k <O_k>`; add back to report unshifted energies.
    pub offset: f64,
}

pub fn center_terms(sum: &PauliSum, shifts: &[f64]) -> Result<CenteredSum> {
    if shifts.len() != sum.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} shifts for {} terms",
            shifts.len(),
            sum.len()
        )));
    }
    let offset = sum.terms.iter().zip(shifts).map(|((h, _), s)| h * s).sum();
    Ok(CenteredSum { sum: sum.clone(), shifts: shifts.to_vec(), offset })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Kronecker-product oracle, independent of the bit-mask arithmetic.
    pub(crate) fn kron_matrix(sum: &PauliSum) -> DMatrix<C64> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let single = |p: Pauli| match p {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[one, zero, zero, one]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[zero, -C64::i(), C64::i(), zero]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]),
        };
        let dim = 1 << sum.n_qubits();
        let mut total = DMatrix::zeros(dim, dim);
        for (h, p) in sum.terms() {
            let mut m = DMatrix::from_element(1, 1, one);
            for &l in p.letters() {
                m = m.kronecker(&single(l));
            }
            total += m * C64::new(*h, 0.0);
        }
        total
    }

    #[test]
    fn tfim_2x2_term_counts() {
        let h = tfim(2, 2, 3.5);
        let zz = h.terms().iter().filter(|(c, _)| *c == -1.0).count();
        let x = h.terms().iter().filter(|(c, _)| *c == -3.5).count();
        assert_eq!((zz, x, h.len()), (4, 4, 8));
    }

    #[test]
    fn tfim_matches_hand_built_1x2() {
        let h = tfim(2, 1, 0.7);
        let zz = PauliSum::new(2, vec![(-1.0, "ZZ".parse().unwrap())]).unwrap();
        let xs = PauliSum::new(
            2,
            vec![(-0.7, "XI".parse().unwrap()), (-0.7, "IX".parse().unwrap())],
        )
        .unwrap();
        let hand = kron_matrix(&zz) + kron_matrix(&xs);
        assert_eq!(h.to_matrix().unwrap(), hand);
    }

    #[test]
    fn tfim_matches_hand_built_2x2() {
        let h = tfim(2, 2, 3.5);
        let m = h.to_matrix().unwrap();
        let oracle = kron_matrix(&h);
        assert!((m - &oracle).camax() < 1e-14);
        assert!((&oracle - oracle.adjoint()).camax() < 1e-14);
        // the bonds are (0,1), (2,3), (0,2), (1,3)
        let bonds: Vec<String> = h.terms()[..4].iter().map(|(_, p)| p.to_string()).collect();
        assert_eq!(bonds, ["ZZII", "IIZZ", "ZIZI", "IZIZ"]);
    }

    #[test]
    fn matrix_agrees_with_kronecker_oracle_for_mixed_terms() {
        let sum = PauliSum::new(
            3,
            vec![
                (0.3, "XYZ".parse().unwrap()),
                (-1.2, "YIY".parse().unwrap()),
                (0.5, "IZX".parse().unwrap()),
            ],
        )
        .unwrap();
        assert!((sum.to_matrix().unwrap() - kron_matrix(&sum)).camax() < 1e-14);
    }

    #[test]
    fn tfim_is_two_groups() {
        for (lx, ly) in [(1, 2), (3, 3), (4, 4), (5, 2)] {
            let groups = group_qubitwise(&tfim(lx, ly, 3.5));
            assert_eq!(groups.len(), 2, "{lx}x{ly}");
        }
        let groups = group_qubitwise(&tfim(3, 3, 3.5));
        assert!(groups[0].basis.iter().all(|&p| p == Pauli::Z));
        assert!(groups[1].basis.iter().all(|&p| p == Pauli::X));
    }

    #[test]
    fn grouping_edge_cases() {
        let single = PauliSum::new(1, vec![(1.0, "X".parse().unwrap())]).unwrap();
        assert_eq!(group_qubitwise(&single).len(), 1);
        let pair = PauliSum::new(1, vec![(1.0, "X".parse().unwrap()), (1.0, "Z".parse().unwrap())])
            .unwrap();
        assert_eq!(group_qubitwise(&pair).len(), 2);
    }

    #[test]
    fn groups_are_internally_commuting_and_cover_terms() {
        let sum = PauliSum::new(
            3,
            vec![
                (1.0, "XXI".parse().unwrap()),
                (1.0, "ZII".parse().unwrap()),
                (1.0, "IXX".parse().unwrap()),
                (1.0, "ZIZ".parse().unwrap()),
                (1.0, "YII".parse().unwrap()),
            ],
        )
        .unwrap();
        let groups = group_qubitwise(&sum);
        let mut seen = vec![0; sum.len()];
        for g in &groups {
            for &a in &g.members {
                seen[a] += 1;
                for &b in &g.members {
                    assert!(sum.terms()[a].1.qubitwise_commutes(&sum.terms()[b].1));
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(groups.len(), 3);
    }

    #[test]
    fn centering() {
        let h = tfim(2, 1, 1.0);
        let c = center_terms(&h, &vec![0.0; h.len()]).unwrap();
        assert_eq!(c.offset, 0.0);
        assert_eq!(c.sum, h);
        let single = PauliSum::new(1, vec![(2.0, "Z".parse().unwrap())]).unwrap();
        assert_eq!(center_terms(&single, &[0.5]).unwrap().offset, 1.0);
        assert!(center_terms(&single, &[]).is_err());
    }

    #[test]
    fn text_format_round_trip_and_errors() {
        let h = tfim(3, 2, 3.5);
        let back = PauliSum::parse(&h.to_string()).unwrap();
        assert_eq!(back, h);
        assert!(PauliSum::parse("-3.5 XIII\n").is_ok());
        match PauliSum::parse("1.0 XX\nfoo ZZ\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match PauliSum::parse("1.0 XX\n1.0 ZZZ\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(PauliSum::parse("1.0 XQ").is_err());
    }

    #[test]
    fn duplicate_terms_rejected() {
        let r = PauliSum::new(1, vec![(1.0, "X".parse().unwrap()), (2.0, "X".parse().unwrap())]);
        assert!(r.is_err());
    }

    #[test]
    fn basis_index_enumerates_all_strings() {
        let all: std::collections::HashSet<String> =
            (0..16).map(|k| PauliString::from_basis_index(2, k).to_string()).collect();
        assert_eq!(all.len(), 16);
        assert!(PauliString::from_basis_index(2, 0).is_identity());
        assert_eq!(PauliString::from_basis_index(2, 0b0111).to_string(), "XZ");
    }
}
