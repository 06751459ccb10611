//! Minimal dense symmetric linear algebra for Newton steps.
//!
//! Designs here have at most a couple of dozen columns, so a plain
//! row-major Cholesky is all that is needed.

/// Row-major symmetric matrix of order `n`.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// In-place Cholesky factorization A = L Lᵀ. Fails when a pivot falls
    /// below `tol` times the largest diagonal entry, signalling a (near-)
    /// singular matrix.
    pub fn cholesky(&self, tol: f64) -> Option<Vec<f64>> {
        let n = self.n;
        let scale = (0..n).map(|i| self.at(i, i)).fold(0.0f64, f64::max).max(1e-300);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.at(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= tol * scale {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(l)
    }
}

/// Solves L Lᵀ x = b given the Cholesky factor.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Inverse from the Cholesky factor, returned row-major.
pub fn cholesky_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(l, n, &e);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // A = [[4,2],[2,3]], b = [2,1] → x = [0.5, 0]
        let mut a = SymMatrix::zeros(2);
        a.add(0, 0, 4.0);
        a.add(0, 1, 2.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 3.0);
        let l = a.cholesky(1e-12).unwrap();
        let x = cholesky_solve(&l, 2, &[2.0, 1.0]);
        assert!((x[0] - 0.5).abs() < 1e-14 && x[1].abs() < 1e-14);
        let inv = cholesky_inverse(&l, 2);
        // A⁻¹ = 1/8 [[3,-2],[-2,4]]
        assert!((inv[0] - 0.375).abs() < 1e-14);
        assert!((inv[1] + 0.25).abs() < 1e-14);
        assert!((inv[3] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_singular_matrix() {
        let mut a = SymMatrix::zeros(2);
        a.add(0, 0, 1.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 1.0);
        assert!(a.cholesky(1e-12).is_none());
    }
}
