//! Dense complex tensors and the handful of linear-algebra kernels the rest
//! of the crate is built on: pairwise contraction, truncated SVD splits,
//! unitary completion of isometries and Hermitian eigensolves.
//!
//! Tensors are stored row-major (last leg fastest). Matrices handed to and
//! returned from the decompositions are `nalgebra` matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance for isometry/unitarity checks.
pub const ISOMETRY_TOL: f64 = 1e-10;
/// Relative tolerance for eigenpair residuals.
pub const EIGEN_TOL: f64 = 1e-9;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Complex multi-dimensional array in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("zero leg dimension in {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        assert!(shape.iter().all(|&d| d > 0), "zero leg dimension");
        let len = shape.iter().product();
        Self { shape, data: vec![ZERO; len] }
    }

    pub fn scalar(value: C64) -> Self {
        Self { shape: Vec::new(), data: vec![value] }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; t.shape.len()];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            increment(&mut idx, &t.shape);
        }
        t
    }

    /// Entries drawn i.i.d. from the complex standard normal distribution.
    pub fn random_normal<R: Rng + ?Sized>(shape: Vec<usize>, rng: &mut R) -> Self {
        let mut t = Self::zeros(shape);
        for z in t.data.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z = C64::new(re, im);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        let off: usize = index.iter().zip(self.strides()).map(|(i, s)| i * s).sum();
        self.data[off]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: C64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    /// Reorders legs so that output leg `k` is input leg `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.ndim();
        if perm.len() != n {
            return Err(Error::InvalidArgument(format!(
                "permutation of length {} for a {n}-leg tensor",
                perm.len()
            )));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let in_strides = self.strides();
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; n];
        let mut off = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[off]);
            // odometer increment that keeps the source offset in sync
            for k in (0..n).rev() {
                idx[k] += 1;
                off += src_strides[k];
                if idx[k] < shape[k] {
                    break;
                }
                off -= src_strides[k] * shape[k];
                idx[k] = 0;
            }
        }
        Ok(Self { shape, data })
    }

    /// Matricizes with `row_legs` (in the given order) as rows and the
    /// remaining legs (in tensor order) as columns.
    pub fn to_matrix(&self, row_legs: &[usize]) -> Result<DMatrix<C64>> {
        let cols = complement(row_legs, self.ndim())?;
        let perm: Vec<usize> = row_legs.iter().chain(cols.iter()).copied().collect();
        let p = self.permute(&perm)?;
        let m: usize = row_legs.iter().map(|&l| self.shape[l]).product();
        let n: usize = cols.iter().map(|&l| self.shape[l]).product();
        Ok(DMatrix::from_row_slice(m, n, &p.data))
    }

    /// Inverse of [`DenseTensor::to_matrix`]: legs are `row_dims` followed by `col_dims`.
    pub fn from_matrix(m: &DMatrix<C64>, row_dims: &[usize], col_dims: &[usize]) -> Result<Self> {
        let rows: usize = row_dims.iter().product();
        let cols: usize = col_dims.iter().product();
        if m.nrows() != rows || m.ncols() != cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix {}x{} does not match legs {row_dims:?}|{col_dims:?}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        let shape = row_dims.iter().chain(col_dims.iter()).copied().collect();
        Self::new(shape, data)
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn complement(legs: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut used = vec![false; n];
    for &l in legs {
        if l >= n {
            return Err(Error::InvalidArgument(format!("leg {l} out of range for {n} legs")));
        }
        if used[l] {
            return Err(Error::RepeatedLeg(l));
        }
        used[l] = true;
    }
    Ok((0..n).filter(|&l| !used[l]).collect())
}

/// Row-major `m x k` times `k x n`.
pub(crate) fn matmul(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    let mut c = vec![ZERO; m * n];
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == ZERO {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cj, bj) in crow.iter_mut().zip(brow) {
                *cj += aip * bj;
            }
        }
    }
    c
}

/// Sums over the paired legs `(leg of a, leg of b)`. The result carries the
/// free legs of `a` in order followed by the free legs of `b`.
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let la: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let lb: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let free_a = complement(&la, a.ndim())?;
    let free_b = complement(&lb, b.ndim())?;
    for &(i, j) in pairs {
        if a.shape[i] != b.shape[j] {
            return Err(Error::DimensionMismatch(format!(
                "leg {i} of a has dimension {} but leg {j} of b has {}",
                a.shape[i], b.shape[j]
            )));
        }
    }
    let pa: Vec<usize> = free_a.iter().chain(la.iter()).copied().collect();
    let pb: Vec<usize> = lb.iter().chain(free_b.iter()).copied().collect();
    let ta = a.permute(&pa)?;
    let tb = b.permute(&pb)?;
    let m: usize = free_a.iter().map(|&l| a.shape[l]).product();
    let k: usize = la.iter().map(|&l| a.shape[l]).product();
    let n: usize = free_b.iter().map(|&l| b.shape[l]).product();
    let data = matmul(&ta.data, &tb.data, m, k, n);
    let shape = free_a
        .iter()
        .map(|&l| a.shape[l])
        .chain(free_b.iter().map(|&l| b.shape[l]))
        .collect();
    DenseTensor::new(shape, data)
}

/// Result of splitting a tensor in two with a (possibly truncated) SVD.
#[derive(Clone, Debug)]
pub struct SvdSplit {
    /// Left legs followed by the new bond; orthonormal columns.
    pub u: DenseTensor,
    /// Kept singular values, non-increasing.
    pub s: Vec<f64>,
    /// New bond followed by the right legs; orthonormal rows.
    pub v: DenseTensor,
    /// Sum of squares of the dropped singular values.
    pub discarded_weight: f64,
}

impl SvdSplit {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `diag(S) V`, legs: bond then right legs.
    pub fn sv(&self) -> DenseTensor {
        let mut out = self.v.clone();
        let block = out.len() / self.s.len().max(1);
        for (k, &s) in self.s.iter().enumerate() {
            out.data[k * block..(k + 1) * block].iter_mut().for_each(|z| *z *= s);
        }
        out
    }

    /// `U diag(S)`, legs: left legs then bond.
    pub fn us(&self) -> DenseTensor {
        let mut out = self.u.clone();
        let r = self.s.len();
        for (k, z) in out.data.iter_mut().enumerate() {
            *z *= self.s[k % r];
        }
        out
    }
}

fn svd_checked(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    let scale = m.norm().max(1.0);
    let attempt = |svd: SVD<C64, nalgebra::Dyn, nalgebra::Dyn>| -> Option<(DMatrix<C64>, Vec<f64>, DMatrix<C64>, f64)> {
        let u = svd.u?;
        let vt = svd.v_t?;
        let s: Vec<f64> = svd.singular_values.iter().copied().collect();
        let sd = DMatrix::from_diagonal(&DVector::from_iterator(
            s.len(),
            s.iter().map(|&x| C64::new(x, 0.0)),
        ));
        let resid = (m - &u * sd * &vt).norm() / scale;
        Some((u, s, vt, resid))
    };
    let first = attempt(m.clone().svd(true, true));
    let (u, s, vt, resid) = match first {
        Some(r) if r.3 <= 1e-11 => r,
        other => {
            // retry with an unbounded iteration budget, then fall back to Jacobi
            let retry = SVD::try_new(m.clone(), true, true, f64::EPSILON, 0).and_then(attempt);
            match retry {
                Some(r) if r.3 <= 1e-11 => r,
                r => {
                    let (u, s, vt) = jacobi_svd(m);
                    let sd = DMatrix::from_diagonal(&DVector::from_iterator(
                        s.len(),
                        s.iter().map(|&x| C64::new(x, 0.0)),
                    ));
                    let resid = (m - &u * sd * &vt).norm() / scale;
                    if resid > 1e-11 {
                        let worst = r.or(other).map_or(f64::INFINITY, |r| r.3);
                        return Err(Error::DefectiveSvd(worst.min(resid)));
                    }
                    (u, s, vt, resid)
                }
            }
        }
    };
    let _ = resid;
    // sort descending; stable so equal values keep the decomposition order
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let u = DMatrix::from_fn(u.nrows(), order.len(), |i, k| u[(i, order[k])]);
    let vt = DMatrix::from_fn(order.len(), vt.ncols(), |k, j| vt[(order[k], j)]);
    let s = order.iter().map(|&k| s[k]).collect();
    Ok((u, s, vt))
}

/// One-sided (Hestenes) Jacobi SVD, thin: `m = U diag(s) V^dag` with
/// `min(rows, cols)` singular values.
fn jacobi_svd(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    if m.nrows() < m.ncols() {
        let (u, s, vt) = jacobi_svd(&m.adjoint());
        return (vt.adjoint(), s, u.adjoint());
    }
    let n = m.ncols();
    let mut w = m.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let ph = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let a = mat[(i, p)];
                        let b = mat[(i, q)] * ph;
                        mat[(i, p)] = a * c - b * sn;
                        mat[(i, q)] = a * sn + b * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let top = s.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let good: Vec<DVector<C64>> = order
        .iter()
        .filter(|&&j| s[j] > 1e-14 * top.max(f64::MIN_POSITIVE))
        .map(|&j| w.column(j) / C64::new(s[j], 0.0))
        .collect();
    let u = if good.is_empty() {
        complete_columns(&DMatrix::zeros(m.nrows(), 0), n)
    } else {
        complete_columns(&DMatrix::from_columns(&good), n)
    };
    let vt = DMatrix::from_fn(n, n, |k, j| v[(j, order[k])].conj());
    let s = order.iter().map(|&j| s[j]).collect();
    (u, s, vt)
}

/// Splits `t` into `U S V` across `left_legs | rest`, keeping at most
/// `max_rank` singular values.
pub fn split_svd(t: &DenseTensor, left_legs: &[usize], max_rank: usize) -> Result<SvdSplit> {
    if left_legs.is_empty() || left_legs.len() >= t.ndim() {
        return Err(Error::InvalidArgument(
            "left legs must be a nonempty proper subset".into(),
        ));
    }
    if max_rank == 0 {
        return Err(Error::InvalidArgument("max_rank must be at least 1".into()));
    }
    let right = complement(left_legs, t.ndim())?;
    let m = t.to_matrix(left_legs)?;
    let (u, s, vt) = svd_checked(&m)?;
    let keep = max_rank.min(s.len());
    let discarded_weight = s[keep..].iter().map(|x| x * x).sum();
    let u = orthonormalize_columns(&u.columns(0, keep).into_owned());
    let vt = vt.rows(0, keep).into_owned();
    let left_dims: Vec<usize> = left_legs.iter().map(|&l| t.shape[l]).collect();
    let right_dims: Vec<usize> = right.iter().map(|&l| t.shape[l]).collect();
    Ok(SvdSplit {
        u: DenseTensor::from_matrix(&u, &left_dims, &[keep])?,
        s: s[..keep].to_vec(),
        v: DenseTensor::from_matrix(&vt, &[keep], &right_dims)?,
        discarded_weight,
    })
}

/// Re-orthonormalizes columns in place order; any column that has lost
/// its norm (zero singular value) is replaced by the canonical completion.
fn orthonormalize_columns(u: &DMatrix<C64>) -> DMatrix<C64> {
    let g = u.adjoint() * u;
    let dev = (&g - DMatrix::<C64>::identity(g.nrows(), g.ncols())).camax();
    if dev <= 1e-12 {
        return u.clone();
    }
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for j in 0..u.ncols() {
        if let Some(c) = orthogonalized(&u.column(j).into_owned(), &cols, 1e-8) {
            cols.push(c);
        }
    }
    let target = u.ncols();
    let mut e = 0;
    while cols.len() < target {
        let mut basis = DVector::zeros(u.nrows());
        basis[e] = ONE;
        if let Some(c) = orthogonalized(&basis, &cols, 1e-6) {
            cols.push(c);
        }
        e += 1;
    }
    DMatrix::from_columns(&cols)
}

/// Appends canonical-basis vectors, orthogonalized, until `u` has `target`
/// orthonormal columns. The columns of `u` must already be orthonormal.
pub fn complete_columns(u: &DMatrix<C64>, target: usize) -> DMatrix<C64> {
    let mut cols: Vec<DVector<C64>> = (0..u.ncols()).map(|j| u.column(j).into_owned()).collect();
    let mut e = 0;
    while cols.len() < target && e < u.nrows() {
        let mut basis = DVector::zeros(u.nrows());
        basis[e] = ONE;
        if let Some(c) = orthogonalized(&basis, &cols, 1e-6) {
            cols.push(c);
        }
        e += 1;
    }
    DMatrix::from_columns(&cols)
}

/// Two rounds of Gram-Schmidt; `None` when the residual norm falls below `tol`.
fn orthogonalized(v: &DVector<C64>, basis: &[DVector<C64>], tol: f64) -> Option<DVector<C64>> {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
    }
    let n = w.norm();
    (n > tol).then(|| w / C64::new(n, 0.0))
}

pub fn is_power_of_two(d: usize) -> bool {
    d > 0 && d & (d - 1) == 0
}

pub fn log2_exact(d: usize) -> Result<usize> {
    if is_power_of_two(d) {
        Ok(d.trailing_zeros() as usize)
    } else {
        Err(Error::NotPowerOfTwo(d))
    }
}

/// Largest entry of `w^dagger w - I`.
pub fn isometry_deviation(w: &DMatrix<C64>) -> f64 {
    let g = w.adjoint() * w;
    (g - DMatrix::<C64>::identity(w.ncols(), w.ncols())).camax()
}

/// Extends an isometry `w` (`d_out x d_in`) to a unitary whose first `d_in`
/// columns are exactly `w`. The completion is Gram-Schmidt of the canonical
/// basis vectors `e_0, e_1, ...` against the columns already present,
/// skipping vectors that are nearly dependent.
pub fn embed_isometry_in_unitary(w: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (d_out, d_in) = w.shape();
    log2_exact(d_out)?;
    log2_exact(d_in)?;
    if d_in > d_out {
        return Err(Error::DimensionMismatch(format!(
            "isometry {d_out}x{d_in} has more inputs than outputs"
        )));
    }
    let dev = isometry_deviation(w);
    if dev > ISOMETRY_TOL {
        return Err(Error::NotIsometric(dev));
    }
    let mut cols: Vec<DVector<C64>> = (0..d_in).map(|j| w.column(j).into_owned()).collect();
    let mut e = 0;
    while cols.len() < d_out {
        let mut basis = DVector::zeros(d_out);
        basis[e] = ONE;
        if let Some(c) = orthogonalized(&basis, &cols, 1e-6) {
            cols.push(c);
        }
        e += 1;
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Lowest eigenpairs of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns.
    pub vectors: DMatrix<C64>,
}

pub fn hermiticity_deviation(h: &DMatrix<C64>) -> f64 {
    (h - h.adjoint()).camax()
}

/// The `k` lowest eigenpairs of `h`, ascending. Degenerate eigenvalues keep
/// the order produced by the tridiagonal reduction, so results are
/// reproducible for identical input.
pub fn hermitian_lowest(h: &DMatrix<C64>, k: usize) -> Result<Eigenpairs> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", n, h.ncols())));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} for dimension {n}")));
    }
    let scale = h.camax().max(1.0);
    let dev = hermiticity_deviation(h);
    if dev > ISOMETRY_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    // exact Hermitian part; the deviation above is below tolerance anyway
    let hs = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hs);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigenpairs { values, vectors })
}
