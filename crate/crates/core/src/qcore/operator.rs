use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Tolerance under which [`LinearOperator::is_hermitian`] is set.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Sparse complex square matrix in compressed-row form.
///
/// The Hermitian flag is computed at construction and is set iff
/// `max |A - A†| <= HERMITIAN_TOL`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl LinearOperator {
    /// Builds an operator from `(row, col, value)` triplets. Duplicate
    /// positions are summed; exact zeros are dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_unstable_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut k_cols = Vec::with_capacity(cols.len());
        let mut k_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                row_ptr[r + 1] += 1;
                k_cols.push(c);
                k_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = Self {
            dim,
            row_ptr,
            cols: k_cols,
            vals: k_vals,
            hermitian: false,
        };
        op.hermitian = op.hermitian_defect() <= HERMITIAN_TOL;
        op
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, std::iter::empty())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_triplets(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
    }

    /// Sparse copy of a dense matrix, dropping entries with `|a| <= drop_tol`.
    pub fn from_dense(m: &DMatrix<C64>, drop_tol: f64) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let n = m.nrows();
        let mut t = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = m[(r, c)];
                if v.norm() > drop_tol {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Iterates over stored `(row, col, value)` entries in row order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `max |A - A†|` over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// Transpose without conjugation.
    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (c, r, v)))
    }

    pub fn conj(&self) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (r, c, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in operator sum");
        Self::from_triplets(self.dim, self.entries().chain(other.entries()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_real(-1.0))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.dim, other.dim,
            "dimension mismatch in operator product"
        );
        let mut t = Vec::new();
        for (r, k, a) in self.entries() {
            for j in other.row_ptr[k]..other.row_ptr[k + 1] {
                t.push((r, other.cols[j], a * other.vals[j]));
            }
        }
        Self::from_triplets(self.dim, t)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim;
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, a) in self.entries() {
            for (r2, c2, b) in other.entries() {
                t.push((r1 * d + r2, c1 * d + c2, a * b));
            }
        }
        Self::from_triplets(self.dim * d, t)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().fold(0.0, |s, v| s + v.norm_sqr()).sqrt()
    }

    /// Returns `A·x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        self.apply_add(C64::new(1.0, 0.0), x, &mut out);
        out
    }

    /// `out += alpha · A·x`.
    pub fn apply_add(&self, alpha: C64, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o += alpha * acc;
        }
    }

    /// `⟨x|A|x⟩` without normalization.
    pub fn sandwich(&self, x: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (r, xr) in x.iter().enumerate() {
            let mut row = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.vals[k] * x[self.cols[k]];
            }
            acc += xr.conj() * row;
        }
        acc
    }

    /// Dense product `A·M`.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        self.mul_dense_add(C64::new(1.0, 0.0), m, &mut out);
        out
    }

    /// `out += alpha · A·M`.
    pub fn mul_dense_add(&self, alpha: C64, m: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        for (r, c, v) in self.entries() {
            let s = alpha * v;
            for j in 0..m.ncols() {
                out[(r, j)] += s * m[(c, j)];
            }
        }
    }

    /// `out += alpha · M·A`.
    pub fn dense_mul_add(&self, alpha: C64, m: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        for (r, c, v) in self.entries() {
            let s = alpha * v;
            let src = m.column(r).into_owned();
            let mut dst = out.column_mut(c);
            for i in 0..m.nrows() {
                dst[i] += s * src[i];
            }
        }
    }

    /// Trace of `A·M` for dense `M`.
    pub fn trace_with(&self, m: &DMatrix<C64>) -> C64 {
        self.entries().map(|(r, c, v)| v * m[(c, r)]).sum()
    }
}

/// Row-major dense matrix with a tight matrix–vector kernel, used for
/// precomputed propagators.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<C64>,
}

impl DenseOperator {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(m[(r, c)]);
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = U·x`.
    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        for (row, o) in self.data.chunks_exact(self.dim).zip(out.iter_mut()) {
            let (mut re, mut im) = (0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                re += a.re * b.re - a.im * b.im;
                im += a.re * b.im + a.im * b.re;
            }
            *o = C64::new(re, im);
        }
    }
}
