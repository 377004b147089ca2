//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::C64;

pub type CMatrix = DMatrix<C64>;

/// Maximum that propagates NaN instead of skipping it.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, nan_max)
}

/// `max |A − B|` entrywise.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, nan_max)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `threshold · σ_max`.
pub fn numerical_rank(m: &CMatrix, threshold: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > threshold * top).count()
}

/// `columns − rank`: dimension of the null space.
pub fn nullity(m: &CMatrix, threshold: f64) -> usize {
    m.ncols() - numerical_rank(m, threshold).min(m.ncols())
}

/// Least-squares solution of `A x = b` for each column of `b`.
pub fn least_squares(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.clone().svd(true, true).solve(b, 1e-14 * singular_values(a).first().copied().unwrap_or(1.0)).expect("U and V were requested")
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `‖U†U − I‖_max`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.ncols()))
}

/// Integer power, with negative exponents through the adjoint (valid for unitary input).
pub fn unitary_pow(u: &CMatrix, e: i64) -> CMatrix {
    let base = if e < 0 { u.adjoint() } else { u.clone() };
    let mut acc = identity(u.nrows());
    for _ in 0..e.unsigned_abs() {
        acc = &acc * &base;
    }
    acc
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_nullity() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0), C64::new(2.0, 0.0), C64::new(4.0, 0.0), C64::new(6.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        );
        assert_eq!(numerical_rank(&m, 1e-12), 2);
        assert_eq!(nullity(&m, 1e-12), 1);
        assert_eq!(numerical_rank(&CMatrix::zeros(2, 2), 1e-12), 0);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let a = CMatrix::from_fn(6, 3, |i, j| C64::new((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let x = CMatrix::from_fn(3, 2, |i, j| C64::new(i as f64 - j as f64, 0.5));
        let b = &a * &x;
        assert!(max_abs_diff(&least_squares(&a, &b), &x) < 1e-12);
    }

    #[test]
    fn nan_is_not_swallowed() {
        assert!(nan_max(1.0, f64::NAN).is_nan());
        assert!(nan_max(f64::NAN, 1.0).is_nan());
    }
}
