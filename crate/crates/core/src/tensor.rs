//! Dense real tensors of order `m` and dimension `n`, stored as `n^m` values in
//! row-major order (the first index is the slowest).
//!
//! All contractions sum over the trailing modes one at a time, innermost index
//! first, so results are bitwise reproducible for a given input.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// A sorted, nonempty set of distinct indices into `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidIndexSet("empty".into()));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidIndexSet(format!("repeated index in {indices:?}")));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::IndexOutOfRange { index: last, dim });
            }
        }
        Ok(Self(indices))
    }

    /// The full index set `{0, .., dim-1}`.
    pub fn full(dim: usize) -> Self {
        Self((0..dim).collect())
    }

    /// Every nonempty subset of `0..dim`, ordered by size and then lexicographically.
    pub fn all_subsets(dim: usize) -> Vec<IndexSet> {
        let mut out: Vec<IndexSet> = (1u64..(1u64 << dim))
            .map(|mask| Self((0..dim).filter(|i| mask & (1 << i) != 0).collect()))
            .collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0)));
        out
    }

    /// Every nonempty proper subset of `0..dim`.
    pub fn proper_subsets(dim: usize) -> Vec<IndexSet> {
        Self::all_subsets(dim)
            .into_iter()
            .filter(|s| s.len() < dim)
            .collect()
    }

    /// The `dim` subsets of size `dim - 1`.
    pub fn maximal_proper_subsets(dim: usize) -> Vec<IndexSet> {
        (0..dim)
            .rev()
            .map(|skip| Self((0..dim).filter(|&i| i != skip).collect()))
            .filter(|s| !s.0.is_empty())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Restrict `x` to the coordinates in this set.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&i| x[i]).collect()
    }

    /// Embed `y` (indexed by position in the set) into a zero vector of length `dim`.
    pub fn embed(&self, y: &[f64], dim: usize) -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for (&i, &v) in self.0.iter().zip(y) {
            x[i] = v;
        }
        x
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Dense order-`m`, dimension-`n` real tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

fn checked_len(order: usize, dim: usize) -> Result<usize> {
    if order == 0 || dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "order and dimension must be positive (order {order}, dim {dim})"
        )));
    }
    u32::try_from(order)
        .ok()
        .and_then(|o| dim.checked_pow(o))
        .ok_or_else(|| Error::InvalidParameter(format!("dim^order overflows for {dim}^{order}")))
}

impl Tensor {
    pub fn new(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        let len = checked_len(order, dim)?;
        if entries.len() != len {
            return Err(Error::EntryCount {
                expected: len,
                found: entries.len(),
            });
        }
        let t = Self {
            order,
            dim,
            entries,
        };
        if let Some(pos) = t.entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: t.multi_index(pos),
            });
        }
        Ok(t)
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Ok(Self {
            order,
            dim,
            entries: vec![0.0; len],
        })
    }

    pub fn ones(order: usize, dim: usize) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Ok(Self {
            order,
            dim,
            entries: vec![1.0; len],
        })
    }

    pub fn identity(order: usize, dim: usize) -> Result<Self> {
        Self::diagonal(order, &vec![1.0; dim])
    }

    /// Diagonal tensor with `a_{i..i} = d_i`.
    pub fn diagonal(order: usize, d: &[f64]) -> Result<Self> {
        let mut t = Self::zeros(order, d.len())?;
        for (i, &v) in d.iter().enumerate() {
            let pos = t.diagonal_position(i);
            t.entries[pos] = v;
        }
        if d.iter().any(|v| !v.is_finite()) {
            let i = d.iter().position(|v| !v.is_finite()).unwrap_or(0);
            return Err(Error::NonFinite {
                index: vec![i; order],
            });
        }
        Ok(t)
    }

    /// Build from coordinate entries; unspecified entries are zero.
    pub fn from_coo(order: usize, dim: usize, coo: &[(Vec<usize>, f64)]) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        let mut seen = HashSet::with_capacity(coo.len());
        for (idx, value) in coo {
            let pos = t.linear_index(idx)?;
            if !seen.insert(pos) {
                return Err(Error::DuplicateIndex(idx.clone()));
            }
            if !value.is_finite() {
                return Err(Error::NonFinite { index: idx.clone() });
            }
            t.entries[pos] = *value;
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Number of entries in one row block (`n^{m-1}`).
    fn row_len(&self) -> usize {
        self.entries.len() / self.dim
    }

    pub fn linear_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: idx.len(),
            });
        }
        let mut pos = 0;
        for &i in idx {
            if i >= self.dim {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.dim,
                });
            }
            pos = pos * self.dim + i;
        }
        Ok(pos)
    }

    pub fn multi_index(&self, mut pos: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order];
        for slot in idx.iter_mut().rev() {
            *slot = pos % self.dim;
            pos /= self.dim;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.entries[self.linear_index(idx)?])
    }

    fn diagonal_position(&self, i: usize) -> usize {
        (0..self.order).fold(0, |pos, _| pos * self.dim + i)
    }

    pub fn is_diagonal_position(&self, pos: usize) -> bool {
        let i = pos % self.dim;
        self.diagonal_position(i) == pos
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::ShapeMismatch {
                left_order: self.order,
                left_dim: self.dim,
                right_order: other.order,
                right_dim: other.dim,
            });
        }
        Ok(())
    }

    /// `(A x^{m-1})_i = sum a_{i i2..im} x_{i2} .. x_{im}`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        let n = self.dim;
        let row = self.row_len();
        let mut buf = Vec::with_capacity(row);
        Ok((0..n)
            .map(|i| {
                buf.clear();
                buf.extend_from_slice(&self.entries[i * row..(i + 1) * row]);
                contract_all(&mut buf, n, self.order - 1, x)
            })
            .collect())
    }

    /// `A x^m = <x, A x^{m-1}>`.
    pub fn form_value(&self, x: &[f64]) -> Result<f64> {
        let ax = self.apply(x)?;
        Ok(x.iter().zip(&ax).map(|(a, b)| a * b).sum())
    }

    /// Jacobian of `x -> A x^{m-1}`: `J[k][l] = d (A x^{m-1})_k / d x_l`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_vector(x)?;
        let n = self.dim;
        let tail = self.order - 1;
        let mut jac = vec![vec![0.0; n]; n];
        if tail == 0 {
            return Ok(jac);
        }
        let row = self.row_len();
        let mut idx = vec![0usize; tail];
        let mut prefix = vec![1.0; tail + 1];
        let mut suffix = vec![1.0; tail + 1];
        for (k, jrow) in jac.iter_mut().enumerate() {
            idx.iter_mut().for_each(|v| *v = 0);
            for off in 0..row {
                let a = self.entries[k * row + off];
                if a != 0.0 {
                    for p in 0..tail {
                        prefix[p + 1] = prefix[p] * x[idx[p]];
                    }
                    for p in (0..tail).rev() {
                        suffix[p] = suffix[p + 1] * x[idx[p]];
                    }
                    for p in 0..tail {
                        jrow[idx[p]] += a * prefix[p] * suffix[p + 1];
                    }
                }
                advance(&mut idx, n);
            }
        }
        Ok(jac)
    }

    /// Gradient of the form `x -> A x^m`.
    pub fn form_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ax = self.apply(x)?;
        let jac = self.jacobian(x)?;
        let n = self.dim;
        Ok((0..n)
            .map(|l| ax[l] + (0..n).map(|k| x[k] * jac[k][l]).sum::<f64>())
            .collect())
    }

    /// Entries `a_{i1..im}` with every index in `set`.
    pub fn principal_subtensor(&self, set: &IndexSet) -> Result<Tensor> {
        if let Some(&last) = set.as_slice().last() {
            if last >= self.dim {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    dim: self.dim,
                });
            }
        }
        let r = set.len();
        let mut sub = Tensor::zeros(self.order, r)?;
        let mut idx = vec![0usize; self.order];
        let mut full = vec![0usize; self.order];
        for slot in sub.entries.iter_mut() {
            for (f, &i) in full.iter_mut().zip(&idx) {
                *f = set.as_slice()[i];
            }
            *slot = self.entries[self.linear_index(&full)?];
            advance(&mut idx, r);
        }
        Ok(sub)
    }

    /// Row `i` as an order `m-1`, dimension `n` tensor.
    pub fn row_subtensor(&self, i: usize) -> Result<Tensor> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim,
            });
        }
        if self.order < 2 {
            return Err(Error::OrderTooSmall(self.order));
        }
        let row = self.row_len();
        Ok(Tensor {
            order: self.order - 1,
            dim: self.dim,
            entries: self.entries[i * row..(i + 1) * row].to_vec(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let row = self.row_len();
        &self.entries[i * row..(i + 1) * row]
    }

    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Tensor::new(self.order, self.dim, entries)
    }

    pub fn scale(&self, t: f64) -> Tensor {
        Tensor {
            order: self.order,
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * t).collect(),
        }
    }

    /// Relabel indices: `b_{i1..im} = a_{s(i1)..s(im)}`.
    ///
    /// Satisfies `(B x^{m-1})_i = (A y^{m-1})_{s(i)}` where `y_{s(j)} = x_j`.
    pub fn permute(&self, sigma: &[usize]) -> Result<Tensor> {
        let n = self.dim;
        let mut seen = vec![false; n];
        if sigma.len() != n
            || sigma
                .iter()
                .any(|&s| s >= n || std::mem::replace(&mut seen[s], true))
        {
            return Err(Error::NotPermutation(n));
        }
        let mut out = Tensor::zeros(self.order, n)?;
        let mut idx = vec![0usize; self.order];
        let mut mapped = vec![0usize; self.order];
        for slot in out.entries.iter_mut() {
            for (m, &i) in mapped.iter_mut().zip(&idx) {
                *m = sigma[i];
            }
            *slot = self.entries[self.linear_index(&mapped)?];
            advance(&mut idx, n);
        }
        Ok(out)
    }

    /// `D A`: entry `(i1, ..)` multiplied by `d_{i1}`.
    pub fn scale_rows(&self, d: &[f64]) -> Result<Tensor> {
        self.check_vector(d)?;
        let row = self.row_len();
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(pos, a)| a * d[pos / row])
            .collect();
        Tensor::new(self.order, self.dim, entries)
    }

    /// `A D`: entry `(i1, i2, .., im)` multiplied by `d_{i2} .. d_{im}`.
    pub fn scale_modes(&self, d: &[f64]) -> Result<Tensor> {
        self.check_vector(d)?;
        if d.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveScaling);
        }
        let mut idx = vec![0usize; self.order];
        let mut entries = Vec::with_capacity(self.entries.len());
        for &a in &self.entries {
            let w: f64 = idx[1..].iter().map(|&i| d[i]).product();
            entries.push(a * w);
            advance(&mut idx, self.dim);
        }
        Tensor::new(self.order, self.dim, entries)
    }

    /// Exact invariance of every entry under index permutations.
    pub fn is_symmetric(&self) -> bool {
        let mut idx = vec![0usize; self.order];
        let mut sorted = vec![0usize; self.order];
        for &a in &self.entries {
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            let canon = sorted.iter().fold(0, |pos, &i| pos * self.dim + i);
            if self.entries[canon] != a {
                return false;
            }
            advance(&mut idx, self.dim);
        }
        true
    }

    /// Average every entry over the permutations of its index.
    pub fn symmetrize(&self) -> Tensor {
        let n = self.dim;
        let mut sums = std::collections::HashMap::<usize, (f64, usize)>::new();
        let mut canon_of = Vec::with_capacity(self.entries.len());
        let mut idx = vec![0usize; self.order];
        let mut sorted = vec![0usize; self.order];
        for &a in &self.entries {
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            let canon = sorted.iter().fold(0, |pos, &i| pos * n + i);
            let e = sums.entry(canon).or_insert((0.0, 0));
            e.0 += a;
            e.1 += 1;
            canon_of.push(canon);
            advance(&mut idx, n);
        }
        Tensor {
            order: self.order,
            dim: n,
            entries: canon_of
                .iter()
                .map(|c| {
                    let (s, k) = sums[c];
                    s / k as f64
                })
                .collect(),
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.entries[self.diagonal_position(i)])
            .collect()
    }

    pub fn is_nonneg(&self) -> bool {
        self.entries.iter().all(|&a| a >= 0.0)
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|&a| a > 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Off-diagonal entries of row `i`.
    pub fn off_diagonal_row(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        let row = self.row_len();
        let diag = self.diagonal_position(i);
        (i * row..(i + 1) * row)
            .filter(move |&pos| pos != diag)
            .map(move |pos| self.entries[pos])
    }

    /// Replace modes `first_mode..m` by the vertex coordinates in `vertices`:
    /// the result is indexed by `(i_1, .., i_{first_mode}, j_{first_mode+1}, .., j_m)` with
    /// each `j` ranging over the vertices and equals
    /// `sum a_{i_1 .. i_m} v^{(j)}_{i} ...` over the replaced modes.
    pub(crate) fn blossom(&self, first_mode: usize, vertices: &[Vec<f64>]) -> Vec<f64> {
        let r = vertices.len();
        let mut shape = vec![self.dim; self.order];
        let mut data = self.entries.clone();
        for mode in first_mode..self.order {
            data = mode_product(&data, &shape, mode, vertices);
            shape[mode] = r;
        }
        data
    }
}

/// Advance a little-endian-last odometer over `0..n` in every slot.
pub(crate) fn advance(idx: &mut [usize], n: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return;
        }
        *slot = 0;
    }
}

/// Contract a length-`n^modes` buffer against `x` in every mode, last mode first.
/// Counting modes rather than watching the length matters when `n == 1`.
fn contract_all(buf: &mut Vec<f64>, n: usize, modes: usize, x: &[f64]) -> f64 {
    for _ in 0..modes {
        let len = buf.len() / n;
        for j in 0..len {
            let mut s = 0.0;
            for (k, xk) in x.iter().enumerate() {
                s += buf[j * n + k] * xk;
            }
            buf[j] = s;
        }
        buf.truncate(len);
    }
    buf.first().copied().unwrap_or(0.0)
}

/// Multiply mode `mode` of a dense array of shape `shape` by the matrix whose
/// rows are `rows` (each of length `shape[mode]`).
fn mode_product(data: &[f64], shape: &[usize], mode: usize, rows: &[Vec<f64>]) -> Vec<f64> {
    let outer: usize = shape[..mode].iter().product();
    let inner: usize = shape[mode + 1..].iter().product();
    let n = shape[mode];
    let r = rows.len();
    let mut out = vec![0.0; outer * r * inner];
    for o in 0..outer {
        for (j, v) in rows.iter().enumerate() {
            let dst = &mut out[(o * r + j) * inner..(o * r + j + 1) * inner];
            for (i, &vi) in v.iter().enumerate().take(n) {
                if vi == 0.0 {
                    continue;
                }
                let src = &data[(o * n + i) * inner..(o * n + i + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += vi * s;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t3(coo: &[([usize; 3], f64)]) -> Tensor {
        let coo: Vec<_> = coo.iter().map(|(i, v)| (i.to_vec(), *v)).collect();
        Tensor::from_coo(3, 2, &coo).unwrap()
    }

    // x1^2 - x1 x2, -x1 x2
    fn almost_e0() -> Tensor {
        t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -1.0), ([1, 0, 1], -1.0)])
    }

    #[test]
    fn apply_identity_gives_power() {
        let i = Tensor::identity(3, 2).unwrap();
        assert_eq!(i.apply(&[2.0, 3.0]).unwrap(), vec![4.0, 9.0]);
    }

    #[test]
    fn dimension_one_contracts_every_mode() {
        let a = Tensor::new(3, 1, vec![-2.0]).unwrap();
        assert_eq!(a.apply(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(a.apply(&[3.0]).unwrap(), vec![-18.0]);
        assert_eq!(a.form_value(&[3.0]).unwrap(), -54.0);
    }

    #[test]
    fn apply_matches_hand_expansion() {
        assert_eq!(almost_e0().apply(&[1.0, 2.0]).unwrap(), vec![-1.0, -2.0]);
        let a = t3(&[
            ([0, 0, 0], 1.0),
            ([0, 0, 1], -2.0),
            ([0, 1, 1], 1.0),
            ([1, 0, 0], -1.0),
            ([1, 1, 1], 1.0),
        ]);
        assert_eq!(a.apply(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn form_values() {
        let z = Tensor::zeros(4, 3).unwrap();
        assert_eq!(z.form_value(&[1.0, -2.0, 3.0]).unwrap(), 0.0);
        let a = t3(&[
            ([0, 0, 0], 1.0),
            ([0, 0, 1], -2.0),
            ([1, 0, 1], -3.0),
            ([1, 1, 1], 1.0),
        ]);
        assert_eq!(a.form_value(&[1.0, 1.0]).unwrap(), -3.0);
        let b = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -2.0)]);
        assert_eq!(b.form_value(&[1.0, 2.0]).unwrap(), -3.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = almost_e0();
        assert!(matches!(
            a.apply(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(a.form_value(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn subtensors() {
        let a = almost_e0();
        assert_eq!(a.principal_subtensor(&IndexSet::full(2)).unwrap(), a);
        let s = a.principal_subtensor(&IndexSet::new(vec![1], 2).unwrap()).unwrap();
        assert_eq!(s.entries(), &[0.0]);
        assert!(IndexSet::new(vec![], 2).is_err());

        let coo = vec![
            (vec![0, 0, 0], 1.0),
            (vec![2, 2, 1], 1.0),
            (vec![2, 2, 2], 1.0),
            (vec![0, 0, 1], -2.0),
            (vec![2, 2, 0], -2.0),
            (vec![1, 1, 2], -1.0),
        ];
        let big = Tensor::from_coo(3, 3, &coo).unwrap();
        let j = IndexSet::new(vec![0, 1], 3).unwrap();
        let expected = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -2.0)]);
        assert_eq!(big.principal_subtensor(&j).unwrap(), expected);
    }

    #[test]
    fn rows() {
        let i = Tensor::identity(3, 2).unwrap();
        assert_eq!(i.row_subtensor(0).unwrap().entries(), &[1.0, 0.0, 0.0, 0.0]);
        let b = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -2.0)]);
        assert!(b.row_subtensor(1).unwrap().entries().iter().all(|&v| v == 0.0));
        assert_eq!(
            almost_e0().row_subtensor(0).unwrap().entries(),
            &[1.0, -1.0, 0.0, 0.0]
        );
        assert!(matches!(
            i.row_subtensor(2),
            Err(Error::IndexOutOfRange { index: 2, dim: 2 })
        ));
    }

    #[test]
    fn hadamard_and_sum() {
        let a = t3(&[
            ([0, 0, 0], 1.0),
            ([1, 1, 1], 1.0),
            ([1, 0, 0], -1.0),
            ([0, 1, 1], -1.0),
        ]);
        assert_eq!(a.hadamard(&Tensor::ones(3, 2).unwrap()).unwrap(), a);
        assert_eq!(a.add(&Tensor::zeros(3, 2).unwrap()).unwrap(), a);
        assert!(a.add(&Tensor::zeros(3, 3).unwrap()).is_err());
        assert!(a.hadamard(&Tensor::zeros(4, 2).unwrap()).is_err());

        let p = t3(&[([0, 1, 1], -0.5), ([1, 0, 0], -0.5), ([1, 1, 1], 1.0)]);
        let q = t3(&[([0, 0, 0], 1.0), ([0, 1, 1], -0.5), ([1, 0, 0], -0.5)]);
        let x = [0.7, 1.3];
        let s = p.add(&q).unwrap().apply(&x).unwrap();
        assert!((s[0] - (x[0] * x[0] - x[1] * x[1])).abs() < 1e-15);
        assert!((s[1] - (x[1] * x[1] - x[0] * x[0])).abs() < 1e-15);
        let h = p.hadamard(&q).unwrap().apply(&x).unwrap();
        assert!((h[0] - 0.25 * x[1] * x[1]).abs() < 1e-15);
        assert!((h[1] - 0.25 * x[0] * x[0]).abs() < 1e-15);

        let s = Tensor::identity(3, 2).unwrap().scale(2.5);
        assert_eq!(s.diag(), vec![2.5, 2.5]);
    }

    #[test]
    fn permutation() {
        let a = almost_e0();
        assert_eq!(a.permute(&[0, 1]).unwrap(), a);
        let swapped = a.permute(&[1, 0]).unwrap();
        let expected = t3(&[([1, 1, 1], 1.0), ([1, 1, 0], -1.0), ([0, 1, 0], -1.0)]);
        assert_eq!(swapped, expected);
        assert_eq!(swapped.permute(&[1, 0]).unwrap(), a);
        assert!(matches!(a.permute(&[0, 0]), Err(Error::NotPermutation(2))));
    }

    #[test]
    fn scalings() {
        let a = almost_e0();
        assert_eq!(a.scale_rows(&[1.0, 1.0]).unwrap(), a);
        assert_eq!(
            a.scale_rows(&[2.0, 3.0]).unwrap().apply(&[1.0, 2.0]).unwrap(),
            vec![-2.0, -6.0]
        );
        assert_eq!(
            Tensor::identity(3, 2).unwrap().scale_rows(&[2.0, 3.0]).unwrap().diag(),
            vec![2.0, 3.0]
        );
        assert_eq!(a.scale_modes(&[1.0, 1.0]).unwrap(), a);
        let ones = Tensor::ones(3, 2).unwrap();
        assert_eq!(ones.scale_modes(&[2.0, 3.0]).unwrap().get(&[0, 1, 1]).unwrap(), 9.0);
        assert!(matches!(
            a.scale_modes(&[1.0, 0.0]),
            Err(Error::NonPositiveScaling)
        ));
    }

    #[test]
    fn mode_scaling_identity() {
        // (A D x^{m-1})_i = (1/d_i) (D A y^{m-1})_i with y = D x
        let a = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -1.0), ([1, 0, 1], -3.0), ([1, 1, 1], 1.0)]);
        let d = [2.0, 2.0];
        let x = [1.0, 1.0];
        let lhs = a.scale_modes(&d).unwrap().apply(&x).unwrap();
        let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a * b).collect();
        let rhs = a.scale_rows(&d).unwrap().apply(&y).unwrap();
        for i in 0..2 {
            assert!((lhs[i] - rhs[i] / d[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn predicates() {
        let i = Tensor::identity(3, 2).unwrap();
        assert!(i.is_symmetric());
        assert_eq!(i.diag(), vec![1.0, 1.0]);
        assert!(i.is_nonneg());
        assert!(!i.is_positive());
        assert!(Tensor::ones(3, 2).unwrap().is_positive());
        let a = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -1.0), ([1, 0, 1], -3.0), ([1, 1, 1], 1.0)]);
        assert!(!a.is_symmetric());
        assert!(a.symmetrize().is_symmetric());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let a = t3(&[([0, 0, 0], 1.0), ([0, 0, 1], -1.0), ([1, 0, 1], -3.0), ([1, 1, 1], 1.0), ([0, 1, 0], 0.5)]);
        let x = [0.3, 0.8];
        let jac = a.jacobian(&x).unwrap();
        let h = 1e-6;
        for l in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[l] += h;
            xm[l] -= h;
            let fp = a.apply(&xp).unwrap();
            let fm = a.apply(&xm).unwrap();
            for k in 0..2 {
                assert!((jac[k][l] - (fp[k] - fm[k]) / (2.0 * h)).abs() < 1e-8);
            }
        }
        let g = a.form_gradient(&x).unwrap();
        for l in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[l] += h;
            xm[l] -= h;
            let fd = (a.form_value(&xp).unwrap() - a.form_value(&xm).unwrap()) / (2.0 * h);
            assert!((g[l] - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn coo_validation() {
        assert!(matches!(
            Tensor::from_coo(3, 2, &[(vec![0, 0, 0], 1.0), (vec![0, 0, 0], 2.0)]),
            Err(Error::DuplicateIndex(_))
        ));
        assert!(matches!(
            Tensor::from_coo(3, 2, &[(vec![0, 1, 0], f64::NAN)]),
            Err(Error::NonFinite { index }) if index == vec![0, 1, 0]
        ));
        assert!(Tensor::new(3, 2, vec![0.0; 7]).is_err());
    }

    #[test]
    fn subsets_are_ordered() {
        let s = IndexSet::all_subsets(3);
        assert_eq!(s.len(), 7);
        assert_eq!(s[0].as_slice(), &[0]);
        assert_eq!(s[3].as_slice(), &[0, 1]);
        assert_eq!(s[6].as_slice(), &[0, 1, 2]);
        assert_eq!(IndexSet::proper_subsets(3).len(), 6);
        assert_eq!(IndexSet::maximal_proper_subsets(3).len(), 3);
    }
}
