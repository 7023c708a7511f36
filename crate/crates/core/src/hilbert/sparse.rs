use nalgebra::{DMatrix, DVector};

use super::{Operator, SpaceLayout, C64};
use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Compressed-row operator. Used where the composite dimension makes dense
/// storage impractical (pumped three-mode model) and for cheap `H·ρ` products
/// in the master-equation right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    layout: SpaceLayout,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(layout: SpaceLayout, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        let dim = layout.total_dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::Layout(format!("entry ({r}, {c}) outside dimension {dim}")));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; dim + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..dim {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self { layout, indptr, indices, values }.pruned())
    }

    fn pruned(self) -> Self {
        if self.values.iter().all(|v| *v != ZERO) {
            return self;
        }
        let triplets = self.triplets().filter(|t| t.2 != ZERO).collect();
        Self::from_triplets(self.layout, triplets).expect("pruning keeps indices in range")
    }

    pub fn zeros(layout: SpaceLayout) -> Self {
        let dim = layout.total_dim();
        Self { layout, indptr: vec![0; dim + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(layout: SpaceLayout) -> Self {
        Self::diagonal(layout.clone(), &vec![C64::new(1.0, 0.0); layout.total_dim()])
            .expect("identity diagonal has the layout dimension")
    }

    pub fn diagonal(layout: SpaceLayout, diag: &[C64]) -> Result<Self> {
        if diag.len() != layout.total_dim() {
            return Err(Error::Layout(format!(
                "diagonal of length {} for dimension {}",
                diag.len(),
                layout.total_dim()
            )));
        }
        let triplets = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(layout, triplets)
    }

    /// Truncated ladder operator `b` on a single factor.
    pub fn annihilation(label: &str, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidDimension { what: "cutoff", dim: cutoff });
        }
        let layout = SpaceLayout::single(label, cutoff)?;
        let triplets = (1..cutoff)
            .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
            .collect();
        Self::from_triplets(layout, triplets)
    }

    pub fn from_dense(op: &Operator) -> Self {
        let m = op.matrix();
        let triplets = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .filter(|&(r, c)| m[(r, c)] != ZERO)
            .map(|(r, c)| (r, c, m[(r, c)]))
            .collect();
        Self::from_triplets(op.layout().clone(), triplets).expect("dense operator matches its layout")
    }

    pub fn to_dense(&self) -> Operator {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        Operator::from_matrix(self.layout.clone(), m).expect("sparse operator matches its layout")
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let span = self.indptr[row]..self.indptr[row + 1];
        match self.indices[span.clone()].binary_search(&col) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out.pruned()
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.layout.clone(), triplets).expect("adjoint keeps indices in range")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        let triplets = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.layout.clone(), triplets)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        let dim = self.dim();
        let mut acc = vec![ZERO; dim];
        let mut touched = Vec::new();
        let mut triplets = Vec::new();
        for r in 0..dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let mid = self.indices[k];
                let a = self.values[k];
                for j in other.indptr[mid]..other.indptr[mid + 1] {
                    let c = other.indices[j];
                    if acc[c] == ZERO {
                        touched.push(c);
                    }
                    acc[c] += a * other.values[j];
                }
            }
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = ZERO;
            }
            touched.clear();
        }
        Self::from_triplets(self.layout.clone(), triplets)
    }

    /// Kronecker product `self ⊗ other` with concatenated layout.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let d = other.dim();
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                triplets.push((r1 * d + r2, c1 * d + c2, v1 * v2));
            }
        }
        Self::from_triplets(layout, triplets)
    }

    /// Lifts a single-factor operator to `I ⊗ … ⊗ op ⊗ … ⊗ I` on `layout`.
    pub fn embed(&self, layout: &SpaceLayout, label: &str) -> Result<Self> {
        let own = &self.layout.factors()[0];
        if self.layout.factors().len() != 1 || own.label != label {
            return Err(Error::Layout(format!(
                "embedding expects a single-factor operator labelled {label:?}"
            )));
        }
        let pos = layout.position(label)?;
        let (left, dim, right) = layout.split_at(pos);
        if dim != own.dim {
            return Err(Error::Layout(format!(
                "factor {label:?} has dimension {dim}, operator has {}",
                own.dim
            )));
        }
        let mut triplets = Vec::with_capacity(left * right * self.nnz());
        for l in 0..left {
            for (r, c, v) in self.triplets() {
                for k in 0..right {
                    triplets.push(((l * dim + r) * right + k, (l * dim + c) * right + k, v));
                }
            }
        }
        Self::from_triplets(layout.clone(), triplets)
    }

    pub fn matvec(&self, x: &DVector<C64>) -> DVector<C64> {
        assert_eq!(x.len(), self.dim(), "vector length must match operator dimension");
        DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k] * x[self.indices[k]])
                    .sum::<C64>()
            }),
        )
    }

    /// Dense product `self · m`.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim(), m.ncols());
        self.mul_dense_into(m, &mut out);
        out
    }

    /// Writes `self · m` into `out`, which must already have the right shape.
    pub fn mul_dense_into(&self, m: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        assert_eq!(m.nrows(), self.dim(), "matrix rows must match operator dimension");
        assert_eq!(out.shape(), (self.dim(), m.ncols()), "output shape mismatch");
        // Column-major storage: iterate columns outermost for locality.
        let n = self.dim();
        for (src, dst) in m.as_slice().chunks_exact(n).zip(out.as_mut_slice().chunks_exact_mut(n)) {
            for (r, d) in dst.iter_mut().enumerate() {
                let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
                *d = self.indices[lo..hi].iter().zip(&self.values[lo..hi]).map(|(&j, &v)| v * src[j]).sum();
            }
        }
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut cols = vec![0.0; self.dim()];
        for (_, c, v) in self.triplets() {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// Diagonal entries when the operator has no off-diagonal entries.
    pub fn as_diagonal(&self) -> Option<Vec<C64>> {
        let mut diag = vec![ZERO; self.dim()];
        for (r, c, v) in self.triplets() {
            if r != c {
                return None;
            }
            diag[r] = v;
        }
        Some(diag)
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Layout("operator layouts differ".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let l = SpaceLayout::single("b", 3).unwrap();
        let s = SparseOperator::from_triplets(
            l,
            vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (2, 2, c(1.0)), (2, 2, c(-1.0))],
        )
        .unwrap();
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.get(0, 1), c(3.0));
    }

    #[test]
    fn kron_and_embed_agree() {
        let b = SparseOperator::annihilation("b", 4).unwrap();
        let iq = SparseOperator::identity(SpaceLayout::single("q", 2).unwrap());
        let layout = SpaceLayout::new([("q", 2), ("b", 4)]).unwrap();
        assert_eq!(iq.kron(&b).unwrap(), b.embed(&layout, "b").unwrap());
    }

    #[test]
    fn matmul_matches_dense() {
        let b = SparseOperator::annihilation("b", 5).unwrap();
        let bd = b.adjoint();
        let prod = bd.matmul(&b).unwrap().to_dense();
        let dense = bd.to_dense().matrix() * b.to_dense().matrix();
        assert_eq!(prod.matrix(), &dense);
        assert_eq!(b.one_norm(), 2.0);
    }
}
