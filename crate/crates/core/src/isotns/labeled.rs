//! Tensors whose legs are addressed by label instead of position.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::tensor::{complete_columns, contract, split_svd, DenseTensor};

#[derive(Clone, Debug)]
pub(crate) struct Labeled<L> {
    pub t: DenseTensor,
    pub labels: Vec<L>,
}

impl<L: Copy + Eq + Debug> Labeled<L> {
    pub fn new(t: DenseTensor, labels: Vec<L>) -> Self {
        debug_assert_eq!(t.ndim(), labels.len());
        Self { t, labels }
    }

    pub fn pos(&self, l: L) -> Option<usize> {
        self.labels.iter().position(|&x| x == l)
    }

    pub fn has(&self, l: L) -> bool {
        self.pos(l).is_some()
    }

    pub fn dim(&self, l: L) -> usize {
        self.pos(l).map_or(1, |p| self.t.shape()[p])
    }

    pub fn relabel(mut self, from: L, to: L) -> Self {
        if let Some(p) = self.pos(from) {
            self.labels[p] = to;
        }
        self
    }

    pub fn map_labels(mut self, f: impl Fn(L) -> L) -> Self {
        self.labels = self.labels.into_iter().map(f).collect();
        self
    }

    /// Contracts the listed label pairs; pairs whose labels are absent on
    /// either side are skipped (boundary legs).
    pub fn contract(&self, other: &Self, pairs: &[(L, L)]) -> Result<Self> {
        let idx: Vec<(usize, usize)> = pairs
            .iter()
            .filter_map(|&(a, b)| Some((self.pos(a)?, other.pos(b)?)))
            .collect();
        let t = contract(&self.t, &other.t, &idx)?;
        let labels = self
            .labels
            .iter()
            .enumerate()
            .filter(|(k, _)| !idx.iter().any(|p| p.0 == *k))
            .map(|(_, &l)| l)
            .chain(
                other
                    .labels
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| !idx.iter().any(|p| p.1 == *k))
                    .map(|(_, &l)| l),
            )
            .collect();
        Ok(Self::new(t, labels))
    }

    /// Tensor with legs permuted into `order` (every label must be present).
    pub fn ordered(&self, order: &[L]) -> Result<DenseTensor> {
        if order.len() != self.labels.len() {
            return Err(Error::InvalidArgument(format!(
                "order {order:?} does not cover labels {:?}",
                self.labels
            )));
        }
        let perm = order
            .iter()
            .map(|&l| {
                self.pos(l)
                    .ok_or_else(|| Error::InvalidArgument(format!("missing label {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.t.permute(&perm)
    }

    /// Splits leg `l` (row-major) into consecutive legs with the given labels and dims.
    pub fn split_leg(&self, l: L, parts: &[(L, usize)]) -> Result<Self> {
        let p = self
            .pos(l)
            .ok_or_else(|| Error::InvalidArgument(format!("missing label {l:?}")))?;
        let total: usize = parts.iter().map(|x| x.1).product();
        if total != self.t.shape()[p] {
            return Err(Error::DimensionMismatch(format!(
                "cannot split leg of dim {} into {parts:?}",
                self.t.shape()[p]
            )));
        }
        let mut shape = self.t.shape().to_vec();
        let mut labels = self.labels.clone();
        shape.splice(p..=p, parts.iter().map(|x| x.1));
        labels.splice(p..=p, parts.iter().map(|x| x.0));
        Ok(Self::new(self.t.clone().reshape(shape)?, labels))
    }

    /// Splits across `left | rest` into an isometry `U` (legs `left..., bond`)
    /// and `S V` (legs `bond, rest...`). `choose` picks the bond dimension
    /// from the full singular spectrum: extra singular values are dropped,
    /// missing ones are padded with zeros and an orthonormal completion of `U`.
    ///
    /// Returns `(U, SV, discarded_weight)`.
    pub fn split_isometry(
        &self,
        left: &[L],
        bond: L,
        choose: impl FnOnce(&[f64]) -> usize,
    ) -> Result<(Self, Self, f64)> {
        let left_pos = left
            .iter()
            .map(|&l| {
                self.pos(l)
                    .ok_or_else(|| Error::InvalidArgument(format!("missing label {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows: usize = left_pos.iter().map(|&p| self.t.shape()[p]).product();
        let split = split_svd(&self.t, &left_pos, usize::MAX)?;
        let bond_dim = choose(&split.s);
        if bond_dim == 0 || bond_dim > rows {
            return Err(Error::InvalidMove(format!(
                "bond of dim {bond_dim} cannot be isometric into {rows} outputs"
            )));
        }
        let right_labels: Vec<L> = (0..self.labels.len())
            .filter(|k| !left_pos.contains(k))
            .map(|k| self.labels[k])
            .collect();
        let left_dims: Vec<usize> = left_pos.iter().map(|&p| self.t.shape()[p]).collect();
        let right_dims: Vec<usize> = split.v.shape()[1..].to_vec();
        let kept = split.rank().min(bond_dim);
        let discarded: f64 = split.s[kept..].iter().map(|x| x * x).sum();
        let u = split.u.to_matrix(&(0..left_dims.len()).collect::<Vec<_>>())?;
        let u = complete_columns(&u.columns(0, kept).into_owned(), bond_dim);
        let cols: usize = right_dims.iter().product();
        let mut sv = DenseTensor::zeros(
            std::iter::once(bond_dim).chain(right_dims.iter().copied()).collect(),
        );
        sv.data_mut()[..kept * cols].copy_from_slice(&split.sv().data()[..kept * cols]);
        let u_labels = left.iter().copied().chain(std::iter::once(bond)).collect();
        let sv_labels = std::iter::once(bond).chain(right_labels).collect();
        Ok((
            Self::new(DenseTensor::from_matrix(&u, &left_dims, &[bond_dim])?, u_labels),
            Self::new(sv, sv_labels),
            discarded,
        ))
    }
}

/// Number of singular values above `1e-12` relative to the largest.
pub(crate) fn numerical_rank(s: &[f64]) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().take_while(|&&x| x > 1e-12 * smax).count()
}
