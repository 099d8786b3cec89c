//! Small dense linear-algebra helpers shared by the band-structure and
//! exact-diagonalization code.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: DVector<f64>,
    /// Columns are the normalised eigenvectors, in the order of `values`.
    pub vectors: DMatrix<C64>,
}

/// Diagonalizes `m`, which is assumed Hermitian (only the lower triangle is
/// read by the underlying solver).
pub fn eigh(m: DMatrix<C64>) -> Eigh {
    let n = m.nrows();
    if n == 1 {
        return Eigh {
            values: DVector::from_element(1, m[(0, 0)].re),
            vectors: DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
        };
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Eigh { values, vectors }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: DMatrix<C64>) -> Vec<f64> {
    let n = m.nrows();
    if n == 1 {
        return vec![m[(0, 0)].re];
    }
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest absolute entry of `a - a^dagger`.
pub fn hermiticity_defect(a: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// `U^dagger A U`.
pub fn to_basis(a: &DMatrix<C64>, u: &DMatrix<C64>) -> DMatrix<C64> {
    u.adjoint() * a * u
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
