//! Small dense kernels: determinant and linear solve by Gaussian elimination
//! with partial pivoting. Matrices are row-major `n x n` slices.

/// Determinant of the row-major `n x n` matrix `m`.
pub fn determinant(m: &[f64], n: usize) -> f64 {
    debug_assert_eq!(m.len(), n * n);
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap();
        let p = a[piv * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f != 0.0 {
                for k in col + 1..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
            }
        }
    }
    det
}

/// Solves `m x = rhs`. Returns `None` when a pivot vanishes.
pub fn solve(m: &[f64], n: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut x = rhs.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap();
        let p = a[piv * n + col];
        if p == 0.0 || !p.is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f != 0.0 {
                for k in col + 1..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                x[row] -= f * x[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut s = x[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Some(x)
}

/// Transpose of a row-major square matrix.
pub fn transpose(m: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = m[i * n + j];
        }
    }
    t
}
