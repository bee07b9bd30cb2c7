//! Symmetric information matrices and a diagonally pivoted Cholesky
//! factorization used for log-determinants and solves.

use nalgebra::{DMatrix, DVector};

/// Relative pivot threshold below which a matrix is treated as singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Symmetric positive semidefinite `k x k` Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix(DMatrix<f64>);

impl InfoMatrix {
    pub fn zeros(k: usize) -> Self {
        InfoMatrix(DMatrix::zeros(k, k))
    }

    /// Wraps a matrix, symmetrizing it.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "information matrix must be square");
        let sym = (&m + m.transpose()) * 0.5;
        InfoMatrix(sym)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `self += weight * x x^T`, writing the upper triangle and mirroring.
    pub fn add_outer(&mut self, weight: f64, x: &[f64]) {
        let k = self.dim();
        debug_assert_eq!(x.len(), k);
        for i in 0..k {
            let wi = weight * x[i];
            for j in i..k {
                self.0[(i, j)] += wi * x[j];
            }
        }
        for i in 0..k {
            for j in 0..i {
                self.0[(i, j)] = self.0[(j, i)];
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.0 *= s;
    }

    pub fn add(&mut self, other: &InfoMatrix) {
        self.0 += &other.0;
    }

    pub fn cholesky(&self) -> Option<PivotedCholesky> {
        PivotedCholesky::new(self)
    }

    /// Log-determinant, or `f64::NEG_INFINITY` when singular.
    pub fn log_det(&self) -> f64 {
        match self.cholesky() {
            Some(c) => c.log_det(),
            None => f64::NEG_INFINITY,
        }
    }
}

/// `P M P^T = L L^T` with symmetric (diagonal) pivoting.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    lower: DMatrix<f64>,
    perm: Vec<usize>,
}

impl PivotedCholesky {
    /// Returns `None` if a pivot drops below `PIVOT_TOL` times the largest
    /// diagonal entry of the input (or the matrix is empty/non-finite).
    pub fn new(m: &InfoMatrix) -> Option<Self> {
        let k = m.dim();
        let mut a = m.0.clone();
        let mut perm: Vec<usize> = (0..k).collect();
        let scale = (0..k).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        if k == 0 || !scale.is_finite() || scale == 0.0 {
            return None;
        }
        let threshold = PIVOT_TOL * scale;
        for j in 0..k {
            // choose the largest remaining diagonal
            let (p, &dmax) = (j..k)
                .map(|i| (i, &a[(i, i)]))
                .fold(
                    (j, &f64::NEG_INFINITY),
                    |best, cur| if *cur.1 > *best.1 { cur } else { best },
                );
            if !(dmax > threshold) {
                return None;
            }
            if p != j {
                a.swap_rows(p, j);
                a.swap_columns(p, j);
                perm.swap(p, j);
            }
            let d = a[(j, j)].sqrt();
            a[(j, j)] = d;
            for i in (j + 1)..k {
                a[(i, j)] /= d;
            }
            for c in (j + 1)..k {
                let ljc = a[(c, j)];
                for r in c..k {
                    a[(r, c)] -= a[(r, j)] * ljc;
                    // later pivots swap rows and columns, so keep both halves
                    a[(c, r)] = a[(r, c)];
                }
            }
        }
        let lower = a.lower_triangle();
        Some(PivotedCholesky { lower, perm })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `x^T M^{-1} x`.
    pub fn quad_form_inv(&self, x: &[f64]) -> f64 {
        let k = self.perm.len();
        // forward-substitute L y = P x; the quadratic form is |y|^2
        let mut y = vec![0.0; k];
        let mut acc = 0.0;
        for i in 0..k {
            let mut s = x[self.perm[i]];
            for j in 0..i {
                s -= self.lower[(i, j)] * y[j];
            }
            y[i] = s / self.lower[(i, i)];
            acc += y[i] * y[i];
        }
        acc
    }

    /// Solves `M z = b`.
    pub fn solve(&self, b: &[f64]) -> DVector<f64> {
        let k = self.perm.len();
        let pb = DVector::from_iterator(k, self.perm.iter().map(|&p| b[p]));
        let y = self.lower.solve_lower_triangular(&pb).expect("nonzero pivots");
        let z = self
            .lower
            .transpose()
            .solve_upper_triangular(&y)
            .expect("nonzero pivots");
        let mut out = DVector::zeros(k);
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = z[i];
        }
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let k = self.perm.len();
        let mut inv = DMatrix::zeros(k, k);
        let mut e = vec![0.0; k];
        for c in 0..k {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            inv.set_column(c, &self.solve(&e));
        }
        inv
    }
}
