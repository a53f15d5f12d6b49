use num_complex::Complex64 as C64;

use super::labeled::{numerical_rank, Labeled};
use super::{IsoTns, LegRole, MoveKind, MoveReport, Side, Vertical};
use crate::error::{Error, Result};

/// Largest carrier bond whose basis assignment is searched exhaustively.
const MAX_PERMUTED_CARRIER: usize = 4;

/// How the new bonds of a Moses move are sized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BondPolicy {
    /// Every new bond has the nominal dimension `D`.
    #[default]
    Nominal,
    /// Horizontal and vertical bonds of the vacated column stay at `D`;
    /// the vertical bond of the new central column is `m`.
    Fixed(usize),
    /// Each new bond is the numerical rank rounded up to a power of two,
    /// optionally capped; without a cap the move is exact.
    Adaptive { max: Option<usize> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MosesOptions {
    pub bond: BondPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sl {
    Leg(LegRole),
    Bond,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ml {
    Tp(usize),
    Bp(usize),
    Outer,
    Mid,
    Far,
    TUp,
    TDown,
    BUp,
    BDown,
    AUp,
    ADown,
    H,
    K,
    CUp,
    CDown,
    Gt,
    Gb,
}

fn adaptive_dim(s: &[f64], max: Option<usize>) -> usize {
    let r = numerical_rank(s).max(1).next_power_of_two();
    max.map_or(r, |m| r.min(m))
}

fn opposite(role: LegRole) -> LegRole {
    match role {
        LegRole::Up => LegRole::Down,
        LegRole::Down => LegRole::Up,
        LegRole::Left => LegRole::Right,
        LegRole::Right => LegRole::Left,
        p => p,
    }
}

impl IsoTns {
    /// Moves the center one row within its column with an exact SVD.
    pub fn shift_center_in_column(&mut self, dir: Vertical) -> Result<MoveReport> {
        let (c, r) = self.center;
        let (target, bond_role) = match dir {
            Vertical::Down if r + 1 < self.ly => (r + 1, LegRole::Down),
            Vertical::Up if r > 0 => (r - 1, LegRole::Up),
            _ => {
                return Err(Error::InvalidMove(format!(
                    "cannot shift {dir:?} from row {r} of a column with {} rows",
                    self.ly
                )))
            }
        };
        let rs = self.roles(c, r);
        let t = Labeled::new(self.tensor(c, r).clone(), rs.iter().map(|&l| Sl::Leg(l)).collect());
        let dim = t.dim(Sl::Leg(bond_role));
        let left: Vec<Sl> = rs.iter().filter(|&&l| l != bond_role).map(|&l| Sl::Leg(l)).collect();
        let (u, sv, discarded) = t.split_isometry(&left, Sl::Bond, |_| dim)?;
        let stay = u.relabel(Sl::Bond, Sl::Leg(bond_role));
        let stay = stay.ordered(&rs.iter().map(|&l| Sl::Leg(l)).collect::<Vec<_>>())?;

        let nrs = self.roles(c, target);
        let back = opposite(bond_role);
        let nb = Labeled::new(self.tensor(c, target).clone(), nrs.iter().map(|&l| Sl::Leg(l)).collect());
        let merged = sv.contract(&nb, &[(Sl::Leg(bond_role), Sl::Leg(back))])?;
        let merged = merged.relabel(Sl::Bond, Sl::Leg(back));
        let merged = merged.ordered(&nrs.iter().map(|&l| Sl::Leg(l)).collect::<Vec<_>>())?;

        *self.tensor_mut(c, r) = stay;
        *self.tensor_mut(c, target) = merged;
        self.center = (c, target);
        Ok(MoveReport { kind: MoveKind::InColumn, fidelity_estimate: 1.0, truncation_weight: discarded })
    }

    /// Moves the center to the top row of its column.
    pub fn shift_center_to_top(&mut self) -> Result<f64> {
        let mut w = 0.0;
        while self.center.1 > 0 {
            w += self.shift_center_in_column(Vertical::Up)?.truncation_weight;
        }
        Ok(w)
    }

    /// Moves the center to `row` within its column.
    pub fn shift_center_to_row(&mut self, row: usize) -> Result<()> {
        while self.center.1 < row {
            self.shift_center_in_column(Vertical::Down)?;
        }
        while self.center.1 > row {
            self.shift_center_in_column(Vertical::Up)?;
        }
        Ok(())
    }

    /// Moves the central column one step sideways by unzipping the two
    /// columns from the bottom up. The center must sit at the top of its
    /// column and ends at the top of the new one, with the old norm.
    pub fn moses_move(&mut self, side: Side, opts: &MosesOptions) -> Result<MoveReport> {
        let (c, r) = self.center;
        if r != 0 {
            return Err(Error::InvalidMove(format!(
                "the center must be at the top of its column, found row {r}"
            )));
        }
        let c2 = match side {
            Side::Right if c + 1 < self.lx => c + 1,
            Side::Left if c > 0 => c - 1,
            _ => {
                return Err(Error::InvalidMove(format!(
                    "no column to the {side:?} of column {c} in a grid of width {}",
                    self.lx
                )))
            }
        };
        let outer_role = match side {
            Side::Right => LegRole::Left,
            Side::Left => LegRole::Right,
        };
        let d = self.d;
        // unzip with the norm carried from the bottom so every split sees its weights
        self.shift_center_to_row(self.ly - 1)?;
        let old_norm = self.norm();

        let t_label = |l: LegRole| match l {
            LegRole::Phys(k) => Ml::Tp(k),
            LegRole::Up => Ml::TUp,
            LegRole::Down => Ml::TDown,
            l if l == outer_role => Ml::Outer,
            _ => Ml::Mid,
        };
        let b_label = |l: LegRole| match l {
            LegRole::Phys(k) => Ml::Bp(k),
            LegRole::Up => Ml::BUp,
            LegRole::Down => Ml::BDown,
            l if l == outer_role => Ml::Mid,
            _ => Ml::Far,
        };
        let site = |x: usize, y: usize, f: &dyn Fn(LegRole) -> Ml| {
            Labeled::new(self.tensor(x, y).clone(), self.roles(x, y).into_iter().map(f).collect())
        };
        let thetas = (0..self.ly)
            .map(|y| site(c, y, &t_label).contract(&site(c2, y, &b_label), &[(Ml::Mid, Ml::Mid)]))
            .collect::<Result<Vec<_>>>()?;

        let mut a_new: Vec<Option<Labeled<Ml>>> = vec![None; self.ly];
        let mut c_new: Vec<Option<Labeled<Ml>>> = vec![None; self.ly];
        let mut carry: Option<Labeled<Ml>> = None;
        let mut truncation = 0.0;
        for y in (0..self.ly).rev() {
            let theta = match &carry {
                Some(g) => thetas[y].contract(g, &[(Ml::TDown, Ml::Gt), (Ml::BDown, Ml::Gb)])?,
                None => thetas[y].clone(),
            };
            let left1: Vec<Ml> = theta
                .labels
                .iter()
                .copied()
                .filter(|l| matches!(l, Ml::Tp(_) | Ml::Outer | Ml::ADown))
                .collect();
            if y == 0 {
                let (a, rest, w) = theta.split_isometry(&left1, Ml::H, |s| match opts.bond {
                    BondPolicy::Adaptive { max } => adaptive_dim(s, max),
                    _ => d,
                })?;
                truncation += w;
                a_new[0] = Some(a);
                c_new[0] = Some(rest);
                break;
            }
            let mut h_dim = d;
            let (a, rest, w) = theta.split_isometry(&left1, Ml::K, |s| match opts.bond {
                BondPolicy::Adaptive { max } => {
                    let k = adaptive_dim(s, max);
                    h_dim = k.min(d);
                    k
                }
                _ => d * d,
            })?;
            truncation += w;
            let k = a.dim(Ml::K);
            let parts = [(Ml::AUp, k / h_dim), (Ml::H, h_dim)];
            // the carrier basis is assigned to (up, horizontal) by the permutation
            // that loses least in the second split
            let perms: Vec<Vec<usize>> =
                if k <= MAX_PERMUTED_CARRIER { permutations(k) } else { vec![(0..k).collect()] };
            let mut best: Option<(f64, Labeled<Ml>, Labeled<Ml>, Labeled<Ml>)> = None;
            for perm in &perms {
                let a = permute_leg(&a, Ml::K, perm)?.split_leg(Ml::K, &parts)?;
                let rest = permute_leg(&rest, Ml::K, perm)?.split_leg(Ml::K, &parts)?;
                let left2: Vec<Ml> = rest
                    .labels
                    .iter()
                    .copied()
                    .filter(|l| matches!(l, Ml::H | Ml::Bp(_) | Ml::Far | Ml::CDown))
                    .collect();
                let (cy, g, w) = rest.split_isometry(&left2, Ml::CUp, |s| match opts.bond {
                    BondPolicy::Nominal => d,
                    BondPolicy::Fixed(m) => m,
                    BondPolicy::Adaptive { max } => adaptive_dim(s, max),
                })?;
                if best.as_ref().is_none_or(|b| w < b.0 - 1e-14) {
                    best = Some((w, a, cy, g));
                }
            }
            let (w, a, cy, g) = best.expect("at least one permutation");
            truncation += w;
            a_new[y] = Some(a);
            c_new[y] = Some(cy);
            carry = Some(g.map_labels(|l| match l {
                Ml::TUp => Ml::Gt,
                Ml::BUp => Ml::Gb,
                Ml::AUp => Ml::ADown,
                Ml::CUp => Ml::CDown,
                other => other,
            }));
        }
        let a_new: Vec<Labeled<Ml>> = a_new.into_iter().map(|a| a.expect("every row split")).collect();
        let mut c_new: Vec<Labeled<Ml>> = c_new.into_iter().map(|a| a.expect("every row split")).collect();

        let new_norm = c_new[0].t.norm();
        let overlap = ladder_overlap(&thetas, &a_new, &c_new)?;
        let fidelity = if new_norm > 0.0 && old_norm > 0.0 {
            (overlap.norm() / (old_norm * new_norm)).min(1.0)
        } else {
            0.0
        };
        if new_norm > 0.0 {
            c_new[0].t.scale(C64::new(old_norm / new_norm, 0.0));
        }

        let a_role = |l: LegRole| match l {
            LegRole::Phys(k) => Ml::Tp(k),
            LegRole::Up => Ml::AUp,
            LegRole::Down => Ml::ADown,
            l if l == outer_role => Ml::Outer,
            _ => Ml::H,
        };
        let c_role = |l: LegRole| match l {
            LegRole::Phys(k) => Ml::Bp(k),
            LegRole::Up => Ml::CUp,
            LegRole::Down => Ml::CDown,
            l if l == outer_role => Ml::H,
            _ => Ml::Far,
        };
        for y in 0..self.ly {
            let order: Vec<Ml> = self.roles(c, y).into_iter().map(a_role).collect();
            *self.tensor_mut(c, y) = a_new[y].ordered(&order)?;
            let order: Vec<Ml> = self.roles(c2, y).into_iter().map(c_role).collect();
            *self.tensor_mut(c2, y) = c_new[y].ordered(&order)?;
        }
        self.center = (c2, 0);
        Ok(MoveReport { kind: MoveKind::Moses, fidelity_estimate: fidelity, truncation_weight: truncation })
    }
}

/// `<old two-column state | new two-column state>`, contracted row by row
/// from the top as an MPS overlap.
fn ladder_overlap(old: &[Labeled<Ml>], a: &[Labeled<Ml>], c: &[Labeled<Ml>]) -> Result<C64> {
    // environment legs: old T down, old B down, new A down, new C down
    let mut env: Option<Labeled<Ml>> = None;
    for y in 0..old.len() {
        let bra = Labeled::new(old[y].t.conj(), old[y].labels.clone());
        let ket = a[y].contract(&c[y], &[(Ml::H, Ml::H)])?;
        let x = match &env {
            Some(e) => e.contract(&bra, &[(Ml::Gt, Ml::TUp), (Ml::Gb, Ml::BUp)])?,
            None => bra,
        };
        let mut pairs: Vec<(Ml, Ml)> = x
            .labels
            .iter()
            .copied()
            .filter(|l| matches!(l, Ml::Tp(_) | Ml::Bp(_) | Ml::Outer | Ml::Far))
            .map(|l| (l, l))
            .collect();
        pairs.push((Ml::ADown, Ml::AUp));
        pairs.push((Ml::CDown, Ml::CUp));
        let next = x.contract(&ket, &pairs)?;
        env = Some(next.map_labels(|l| match l {
            Ml::TDown => Ml::Gt,
            Ml::BDown => Ml::Gb,
            other => other,
        }));
    }
    let env = env.expect("at least one row");
    if env.t.len() != 1 {
        return Err(Error::InvalidShape(format!("ladder overlap left legs {:?}", env.labels)));
    }
    Ok(env.t.data()[0])
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Relabels the values of leg `l`: new index `i` holds old index `perm[i]`.
fn permute_leg(t: &Labeled<Ml>, l: Ml, perm: &[usize]) -> Result<Labeled<Ml>> {
    let p = t.pos(l).expect("leg present");
    let shape = t.t.shape().to_vec();
    let inner: usize = shape[p + 1..].iter().product();
    let outer: usize = shape[..p].iter().product();
    let n = shape[p];
    let src = t.t.data();
    let mut data = vec![C64::new(0.0, 0.0); src.len()];
    for o in 0..outer {
        for (i, &pi) in perm.iter().enumerate() {
            let dst = (o * n + i) * inner;
            let from = (o * n + pi) * inner;
            data[dst..dst + inner].copy_from_slice(&src[from..from + inner]);
        }
    }
    Ok(Labeled::new(crate::tensor::DenseTensor::new(shape, data)?, t.labels.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseTensor;

    fn overlap(a: &DenseTensor, b: &DenseTensor) -> C64 {
        a.data().iter().zip(b.data()).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn shift_down_then_up_restores_state() {
        let mut s = IsoTns::init_random(2, 3, 2, 4).unwrap();
        let before = s.contract_full().unwrap();
        let rep = s.shift_center_in_column(Vertical::Down).unwrap();
        assert_eq!(rep.fidelity_estimate, 1.0);
        assert!(rep.truncation_weight < 1e-20);
        assert_eq!(s.center(), (0, 1));
        assert!(s.max_isometry_deviation() < 1e-10);
        let mid = s.contract_full().unwrap();
        s.shift_center_in_column(Vertical::Up).unwrap();
        let after = s.contract_full().unwrap();
        for (x, y) in before.data().iter().zip(mid.data()) {
            assert!((x - y).norm() < 1e-12);
        }
        for (x, y) in before.data().iter().zip(after.data()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_past_boundary_fails() {
        let mut s = IsoTns::init_random(2, 2, 2, 4).unwrap();
        assert!(s.shift_center_in_column(Vertical::Up).is_err());
        s.shift_center_in_column(Vertical::Down).unwrap();
        assert!(s.shift_center_in_column(Vertical::Down).is_err());
    }

    #[test]
    fn moses_requires_top_and_neighbor() {
        let mut s = IsoTns::init_random(2, 2, 2, 4).unwrap();
        assert!(s.moses_move(Side::Left, &MosesOptions::default()).is_err());
        s.shift_center_in_column(Vertical::Down).unwrap();
        assert!(s.moses_move(Side::Right, &MosesOptions::default()).is_err());
    }

    #[test]
    fn moses_on_product_state_is_exact() {
        let mut s = IsoTns::product_state(3, 2, [C64::new(0.6, 0.0), C64::new(0.8, 0.0)]).unwrap();
        let before = s.contract_full().unwrap();
        let rep = s.moses_move(Side::Right, &MosesOptions::default()).unwrap();
        assert!((rep.fidelity_estimate - 1.0).abs() < 1e-12);
        let after = s.contract_full().unwrap();
        assert!((overlap(&before, &after).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moses_fidelity_matches_full_overlap() {
        for seed in 0..3 {
            let mut s = IsoTns::init_random(3, 3, 2, seed).unwrap();
            let before = s.contract_full().unwrap();
            let rep = s.moses_move(Side::Right, &MosesOptions::default()).unwrap();
            assert_eq!(s.center(), (1, 0));
            assert!(s.max_isometry_deviation() < 1e-8);
            assert!((s.norm() - 1.0).abs() < 1e-12);
            let after = s.contract_full().unwrap();
            let f = overlap(&before, &after).norm() / (before.norm() * after.norm());
            assert!((f - rep.fidelity_estimate).abs() < 1e-8, "{f} vs {}", rep.fidelity_estimate);
            assert!(rep.fidelity_estimate <= 1.0);
        }
    }

    #[test]
    fn unbounded_adaptive_moses_is_exact() {
        let mut s = IsoTns::init_random(2, 2, 2, 9).unwrap();
        let before = s.contract_full().unwrap();
        let opts = MosesOptions { bond: BondPolicy::Adaptive { max: None } };
        let rep = s.moses_move(Side::Right, &opts).unwrap();
        assert!((rep.fidelity_estimate - 1.0).abs() < 1e-10);
        assert!(rep.truncation_weight < 1e-20);
        assert!(s.max_isometry_deviation() < 1e-8);
        let after = s.contract_full().unwrap();
        for (x, y) in before.data().iter().zip(after.data()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn moses_left_mirrors_right() {
        let mut s = IsoTns::init_random(3, 2, 2, 2).unwrap();
        s.moses_move(Side::Right, &MosesOptions::default()).unwrap();
        let before = s.contract_full().unwrap();
        let rep = s.moses_move(Side::Left, &MosesOptions::default()).unwrap();
        assert_eq!(s.center(), (0, 0));
        assert!(s.max_isometry_deviation() < 1e-8);
        let after = s.contract_full().unwrap();
        let f = overlap(&before, &after).norm() / (before.norm() * after.norm());
        assert!((f - rep.fidelity_estimate).abs() < 1e-8);
    }
}
