//! Moment matrix of the correlated four-mode oscillator reduction.
//!
//! The margin of the symmetric quadripartite check is the quadratic form
//! z^T M z with the tridiagonal matrix M_nn = (n + 1/2)^2,
//! M_{n,n+1} = -(n+1)^2/2. Its sign structure as the cutoff grows is
//! captured exactly by the integer determinant of 4M.

use nalgebra::DMatrix;
use num_bigint::BigInt;

/// The tridiagonal moment matrix on amplitudes z_0..z_cutoff.
pub fn m_matrix(cutoff: usize) -> DMatrix<f64> {
    let n = cutoff + 1;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        m[(k, k)] = (kf + 0.5).powi(2);
        if k + 1 < n {
            let off = -((kf + 1.0).powi(2)) / 2.0;
            m[(k, k + 1)] = off;
            m[(k + 1, k)] = off;
        }
    }
    m
}

/// Exact determinant of 4M, an integer matrix with diagonal (2n+1)^2 and
/// off-diagonal -2(n+1)^2, via the tridiagonal recurrence
/// d_k = a_k d_{k-1} - b_{k-1}^2 d_{k-2}.
pub fn det4m(cutoff: usize) -> BigInt {
    let mut prev = BigInt::from(1); // d_{-1}
    let mut cur = BigInt::from(1); // d_0 = a_0 = 1
    for k in 1..=cutoff {
        let a = BigInt::from((2 * k + 1) * (2 * k + 1));
        let b = BigInt::from(2 * k * k); // |off-diagonal| between k-1 and k
        let next = a * &cur - &b * &b * &prev;
        prev = cur;
        cur = next;
    }
    cur
}
