use nalgebra::{Matrix2, Matrix4};

fn blocks(v: &Matrix4<f64>) -> (Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
    (
        v.fixed_view::<2, 2>(0, 0).into_owned(),
        v.fixed_view::<2, 2>(2, 2).into_owned(),
        v.fixed_view::<2, 2>(0, 2).into_owned(),
    )
}

/// Both sides of Simon's separability inequality for a covariance matrix of
/// `(x1, p1, x2, p2)` with vacuum variance ½:
///
/// `det A det B + (¼ − |det C|)² − tr(AJCJBJCᵀJ) ≥ ¼ (det A + det B)`.
///
/// Returns `(lhs, rhs)`.
pub fn simon_invariant(v: &Matrix4<f64>) -> (f64, f64) {
    let (a, b, c) = blocks(v);
    let j = Matrix2::new(0.0, 1.0, -1.0, 0.0);
    let (da, db, dc) = (a.determinant(), b.determinant(), c.determinant());
    let lhs = da * db + (0.25 - dc.abs()).powi(2) - (a * j * c * j * b * j * c.transpose() * j).trace();
    (lhs, 0.25 * (da + db))
}

/// Symplectic eigenvalues `(ν₋, ν₊)` of a two-mode covariance matrix.
pub fn symplectic_eigenvalues(v: &Matrix4<f64>) -> (f64, f64) {
    let (a, b, c) = blocks(v);
    let delta = a.determinant() + b.determinant() + 2.0 * c.determinant();
    let det = v.determinant();
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let hi = (delta + disc) / 2.0;
    // ν₋² ν₊² = det V avoids cancelling in Δ − disc.
    ((det.max(0.0) / hi).sqrt(), hi.sqrt())
}
