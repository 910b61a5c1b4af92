use std::io::Write;

use nalgebra::DMatrix;

use crate::error::Result;

/// A PSD quadratic form `x ↦ xᵀAx` kept in Gram-factored form
/// `A = scale · Fᵀ K F`.
///
/// `F` is sparse (rows are kernel features, columns are correction
/// coordinates) and `K` is the kernel Gram matrix over features, with `None`
/// meaning the identity. Delta kernels therefore never materialize `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    dim: usize,
    feature_dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    kernel: Option<DMatrix<f64>>,
    scale: f64,
}

impl QuadraticForm {
    /// Builds the form from `(feature, coordinate, value)` triplets of `F`;
    /// duplicate positions are summed.
    pub(crate) fn from_triplets(
        dim: usize,
        feature_dim: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        kernel: Option<DMatrix<f64>>,
        scale: f64,
    ) -> Self {
        debug_assert!(kernel.as_ref().is_none_or(|k| k.nrows() == feature_dim && k.ncols() == feature_dim));
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; feature_dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("merged entry exists") += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..feature_dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, feature_dim, row_ptr, col_idx, vals, kernel, scale }
    }

    /// Wraps an explicit symmetric PSD matrix.
    pub fn from_dense(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        assert_eq!(n, matrix.ncols(), "quadratic form matrix must be square");
        let identity = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, identity, Some(matrix), 1.0)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let mut fx = vec![0.0; self.feature_dim];
        for (r, slot) in fx.iter_mut().enumerate() {
            let range = self.row_ptr[r]..self.row_ptr[r + 1];
            *slot = self.col_idx[range.clone()].iter().zip(&self.vals[range]).map(|(&c, &v)| v * x[c]).sum();
        }
        let kfx = match &self.kernel {
            Some(k) => (k * DMatrix::from_column_slice(self.feature_dim, 1, &fx)).as_slice().to_vec(),
            None => fx,
        };
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &z) in kfx.iter().enumerate() {
            if z == 0.0 {
                continue;
            }
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.col_idx[i]] += self.scale * self.vals[i] * z;
            }
        }
    }

    /// `xᵀ A x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.dim];
        self.apply(x, &mut ax);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum()
    }

    /// Materializes `A`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut f = DMatrix::<f64>::zeros(self.feature_dim, self.dim);
        for r in 0..self.feature_dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                f[(r, self.col_idx[i])] += self.vals[i];
            }
        }
        let kf = match &self.kernel {
            Some(k) => k * &f,
            None => f.clone(),
        };
        let a = f.transpose() * kf * self.scale;
        // exact symmetry; the two triangles differ only by rounding
        DMatrix::from_fn(self.dim, self.dim, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    /// Writes `A` row-major, whitespace separated, one row per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let a = self.to_dense();
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|j| format!("{:.17e}", a[(i, j)])).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}
