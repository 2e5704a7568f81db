//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// `‖A − Aᴴ‖_F / ‖A‖_F` (zero for the zero matrix).
pub fn hermitian_defect(a: &CMat) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a - a.adjoint()).norm() / norm
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Projects a Hermitian matrix onto the PSD cone by clamping negative
/// eigenvalues at zero.
pub fn clamp_psd(a: &CMat) -> CMat {
    let (values, vectors) = hermitian_eigen(a);
    if values.iter().all(|&v| v >= 0.0) {
        return hermitian_part(a);
    }
    let d = DVector::from_iterator(values.len(), values.iter().map(|&v| c(v.max(0.0), 0.0)));
    let out = &vectors * CMat::from_diagonal(&d) * vectors.adjoint();
    hermitian_part(&out)
}

/// `A · Ω⁻¹` for Hermitian positive definite `Ω`, via Cholesky.
pub fn right_solve_hpd(a: &CMat, omega: &CMat) -> Option<CMat> {
    // A Ω⁻¹ = (Ω⁻¹ Aᴴ)ᴴ because Ω is Hermitian.
    let chol = hermitian_part(omega).cholesky()?;
    Some(chol.solve(&a.adjoint()).adjoint())
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn real_matrix(a: &DMatrix<f64>) -> CMat {
    a.map(|v| c(v, 0.0))
}

pub fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)],
        );
        let (vals, vecs) = hermitian_eigen(&a);
        assert!(vals[0] >= vals[1]);
        let d = CMat::from_diagonal(&CVec::from_iterator(2, vals.iter().map(|&v| c(v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!((back - a).norm() < 1e-12);
    }

    #[test]
    fn clamp_removes_negative_eigenvalues() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        let p = clamp_psd(&a);
        let (vals, _) = hermitian_eigen(&p);
        assert!(vals.iter().all(|&v| v > -1e-12));
        assert!((vals[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn right_solve_matches_inverse() {
        let omega = CMat::from_row_slice(2, 2, &[c(4.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)]);
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 2.0), c(0.5, 0.0), c(-1.0, 0.0), c(0.0, 1.0)]);
        let x = right_solve_hpd(&a, &omega).unwrap();
        let y = &a * omega.try_inverse().unwrap();
        assert!((x - y).norm() < 1e-12);
    }
}
