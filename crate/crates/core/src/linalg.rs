//! Small fixed-size complex matrix helpers on top of nalgebra.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub type C = Complex64;
pub type Mat2 = Matrix2<C>;
pub type Mat4 = Matrix4<C>;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

#[inline]
pub(crate) fn r(re: f64) -> C {
    C::new(re, 0.0)
}

pub(crate) fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub(crate) fn pauli_x() -> Mat2 {
    Mat2::new(r(0.0), r(1.0), r(1.0), r(0.0))
}

pub(crate) fn pauli_y() -> Mat2 {
    Mat2::new(r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0))
}

pub(crate) fn pauli_z() -> Mat2 {
    Mat2::new(r(1.0), r(0.0), r(0.0), r(-1.0))
}

/// σ_y ⊗ σ_y, the two-qubit spin flip.
pub(crate) fn spin_flip() -> Mat4 {
    kron(&pauli_y(), &pauli_y())
}

/// (A + A†)/2. Entries (i, j) and (j, i) come out exact conjugates.
pub(crate) fn hermitian_part(m: &Mat4) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[(i, j)] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
    }
    for i in 0..4 {
        out[(i, i)].im = 0.0;
    }
    out
}

/// Eigen-decomposition of a Hermitian 4×4 matrix; eigenvalues ascending,
/// eigenvectors as the matching columns.
pub(crate) fn hermitian_eigen(m: &Mat4) -> ([f64; 4], Mat4) {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals = [0.0; 4];
    let mut vecs = Mat4::zeros();
    for (k, &idx) in order.iter().enumerate() {
        vals[k] = eig.eigenvalues[idx];
        vecs.set_column(k, &eig.eigenvectors.column(idx));
    }
    (vals, vecs)
}

pub(crate) fn hermitian_eigenvalues(m: &Mat4) -> [f64; 4] {
    hermitian_eigen(m).0
}

pub(crate) fn max_abs(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
