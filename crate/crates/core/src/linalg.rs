//! Dense square matrices and their determinants in signed-log form.

use crate::signed_log::SignedLogValue;

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    ///
    /// Rows are first equilibrated to unit max-norm so that the pivot choice
    /// is insensitive to the wildly different row scales produced by moment
    /// integrals; the scale factors are folded back in log space.
    pub fn log_det(&self) -> SignedLogValue {
        let n = self.n;
        if n == 0 {
            return SignedLogValue::ONE;
        }
        let mut a = self.data.clone();
        let mut acc = SignedLogValue::ONE;

        for i in 0..n {
            let row = &mut a[i * n..(i + 1) * n];
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 || !scale.is_finite() {
                return if scale == 0.0 {
                    SignedLogValue::ZERO
                } else {
                    SignedLogValue::new(1, f64::NAN)
                };
            }
            row.iter_mut().for_each(|v| *v /= scale);
            acc = acc * SignedLogValue::exp(scale.ln());
        }

        for col in 0..n {
            let (piv, max) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if max == 0.0 {
                return SignedLogValue::ZERO;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                acc = -acc;
            }
            let p = a[col * n + col];
            acc = acc * SignedLogValue::from_f64(p);
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                if factor != 0.0 {
                    for j in col + 1..n {
                        a[r * n + j] -= factor * a[col * n + j];
                    }
                }
            }
        }
        acc
    }
}
