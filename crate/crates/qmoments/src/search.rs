//! Smallest eigenpair of the oscillator moment matrix.
//!
//! The tridiagonal matrix M (diagonal (n + 1/2)^2, off-diagonal
//! -(n+1)^2/2) first develops a negative eigenvalue at cutoff 10. The
//! minimizing amplitude vector is found by Sturm-sequence bisection for
//! the smallest eigenvalue followed by shifted inverse iteration with
//! Rayleigh-quotient refinement. Everything is O(cutoff) per step, so
//! cutoffs in the thousands stay fast.

use serde::Serialize;

use crate::catalog::det4m;
use crate::error::{Error, Result};

/// Relative residual accepted for a converged eigenpair.
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200;

fn diag(k: usize) -> f64 {
    (k as f64 + 0.5).powi(2)
}

/// Off-diagonal coupling between levels k and k + 1.
fn off(k: usize) -> f64 {
    -((k as f64 + 1.0).powi(2)) / 2.0
}

/// Converged smallest eigenpair at a given cutoff.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub cutoff: usize,
    pub lambda_min: f64,
    /// Unit-norm eigenvector, first nonzero component positive.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// |M z - lambda z| in the Euclidean norm.
    pub residual: f64,
}

/// The quadratic form z^T M z, the margin of the symmetric quadripartite
/// oscillator check on amplitudes z.
pub fn violation_margin(z: &[f64]) -> f64 {
    let mut total = 0.0;
    for (k, &zk) in z.iter().enumerate() {
        total += zk * zk * diag(k);
        if k + 1 < z.len() {
            total += 2.0 * zk * z[k + 1] * off(k);
        }
    }
    total
}

/// Number of eigenvalues of M strictly below `x`, by the Sturm ratio
/// recurrence with a zero-pivot guard.
fn count_below(cutoff: usize, x: f64) -> usize {
    let tiny = 1e-300;
    let mut count = 0;
    let mut q = 1.0;
    for k in 0..=cutoff {
        let mut d = diag(k) - x;
        if k > 0 {
            d -= off(k - 1).powi(2) / q;
        }
        if d.abs() < tiny {
            d = -tiny;
        }
        if d < 0.0 {
            count += 1;
        }
        q = d;
    }
    count
}

/// Solve (M - sigma I) w = rhs by tridiagonal LU with partial pivoting.
fn solve_shifted(cutoff: usize, sigma: f64, rhs: &[f64]) -> Vec<f64> {
    let n = cutoff + 1;
    let mut d: Vec<f64> = (0..n).map(|k| diag(k) - sigma).collect();
    let mut u: Vec<f64> = (0..n.saturating_sub(1)).map(off).collect();
    let mut u2 = vec![0.0; n.saturating_sub(2).max(0)];
    let mut b = rhs.to_vec();
    for k in 0..n.saturating_sub(1) {
        let l = off(k);
        if d[k].abs() >= l.abs() {
            let pivot = if d[k] == 0.0 { 1e-300 } else { d[k] };
            let m = l / pivot;
            d[k + 1] -= m * u[k];
            if k + 2 < n {
                // u2[k] is zero before elimination without pivoting
            }
            b[k + 1] -= m * b[k];
        } else {
            // swap rows k and k+1
            let (rk, rk1) = (b[k], b[k + 1]);
            b[k] = rk1;
            b[k + 1] = rk;
            let (dk, uk) = (d[k], u[k]);
            d[k] = l;
            u[k] = d[k + 1];
            let saved_u2 = if k + 2 < n { u[k + 1] } else { 0.0 };
            if k + 2 < n {
                u2[k] = saved_u2;
                u[k + 1] = 0.0;
            }
            let m = dk / d[k];
            d[k + 1] = uk - m * u[k];
            if k + 2 < n {
                u[k + 1] = -m * u2[k];
            }
            b[k + 1] = rk - m * b[k];
        }
    }
    // back substitution
    let mut w = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        if k + 1 < n {
            s -= u[k] * w[k + 1];
        }
        if k + 2 < n {
            s -= u2[k] * w[k + 2];
        }
        let pivot = if d[k] == 0.0 { 1e-300 } else { d[k] };
        w[k] = s / pivot;
    }
    w
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Smallest eigenvalue and unit eigenvector of M at the given cutoff.
pub fn min_eigenpair(cutoff: usize) -> Result<EigenResult> {
    let n = cutoff + 1;
    // Gershgorin bracket for the whole spectrum
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut m_norm = 0.0f64;
    for k in 0..n {
        let mut radius = 0.0;
        if k > 0 {
            radius += off(k - 1).abs();
        }
        if k + 1 < n {
            radius += off(k).abs();
        }
        lo = lo.min(diag(k) - radius);
        hi = hi.max(diag(k) + radius);
        m_norm = m_norm.max(diag(k) + radius);
    }
    let scale = m_norm.max(1.0);

    // bisect for the smallest eigenvalue
    let mut a = lo;
    let mut b = hi;
    for _ in 0..200 {
        if b - a <= 1e-12 * scale {
            break;
        }
        let mid = 0.5 * (a + b);
        if count_below(cutoff, mid) >= 1 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let mut lambda = 0.5 * (a + b);

    // shifted inverse iteration with Rayleigh-quotient updates
    let mut z = vec![1.0 / (n as f64).sqrt(); n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    // keep the shift just outside the bracket so the solve stays regular
    let mut sigma = lambda - 1e-10 * scale;
    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let w = solve_shifted(cutoff, sigma, &z);
        let wn = norm(&w);
        if !wn.is_finite() || wn == 0.0 {
            sigma -= 1e-8 * scale;
            continue;
        }
        for (zk, wk) in z.iter_mut().zip(&w) {
            *zk = wk / wn;
        }
        // Rayleigh quotient and residual
        let mut mz = vec![0.0; n];
        for k in 0..n {
            mz[k] = diag(k) * z[k];
            if k > 0 {
                mz[k] += off(k - 1) * z[k - 1];
            }
            if k + 1 < n {
                mz[k] += off(k) * z[k + 1];
            }
        }
        lambda = z.iter().zip(&mz).map(|(a, b)| a * b).sum();
        residual = (0..n)
            .map(|k| (mz[k] - lambda * z[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= RESIDUAL_TOL * scale {
            break;
        }
        sigma = lambda;
    }
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::NoConvergence(format!(
            "inverse iteration stalled at residual {residual:.3e} for cutoff {cutoff}"
        )));
    }
    // sign convention: first nonzero component positive
    if let Some(first) = z.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            for x in &mut z {
                *x = -*x;
            }
        }
    }
    let nz = norm(&z);
    for x in &mut z {
        *x /= nz;
    }
    Ok(EigenResult {
        cutoff,
        lambda_min: lambda,
        vector: z,
        iterations,
        residual,
    })
}

/// One row of the cutoff sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub cutoff: usize,
    /// Sign of det(4M): +1, 0 or -1.
    pub det4m_sign: i32,
    /// Exact integer det(4M) in decimal.
    pub det4m: String,
    pub lambda_min: f64,
}

/// Determinant sign and smallest eigenvalue for every cutoff up to
/// `max_cutoff`.
pub fn cutoff_sweep(max_cutoff: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(max_cutoff + 1);
    for cutoff in 0..=max_cutoff {
        let det = det4m(cutoff);
        let eig = min_eigenpair(cutoff)?;
        rows.push(SweepRow {
            cutoff,
            det4m_sign: match det.sign() {
                num_bigint::Sign::Plus => 1,
                num_bigint::Sign::NoSign => 0,
                num_bigint::Sign::Minus => -1,
            },
            det4m: det.to_string(),
            lambda_min: eig.lambda_min,
        });
    }
    Ok(rows)
}

/// CSV rendering of a sweep, header included.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("cutoff,det4m_sign,det4m,lambda_min\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.12e}\n",
            r.cutoff, r.det4m_sign, r.det4m, r.lambda_min
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const REFERENCE_VECTOR: [f64; 11] = [
        0.828979, 0.419264, 0.26503, 0.181928, 0.129563, 0.0934879, 0.0671523,
        0.0471264, 0.0314302, 0.0188364, 0.00854237,
    ];

    #[test]
    fn trivial_cutoff() {
        let r = min_eigenpair(0).unwrap();
        assert_abs_diff_eq!(r.lambda_min, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vector[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cutoff_ten_matches_reference() {
        let r = min_eigenpair(10).unwrap();
        assert_abs_diff_eq!(r.lambda_min, -0.00287931, epsilon = 1e-8);
        assert_eq!(r.vector.len(), 11);
        for (k, &expected) in REFERENCE_VECTOR.iter().enumerate() {
            assert_abs_diff_eq!(r.vector[k], expected, epsilon = 1e-5);
        }
        assert_abs_diff_eq!(norm(&r.vector), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn large_cutoff_converges() {
        let r = min_eigenpair(3000).unwrap();
        assert_abs_diff_eq!(r.lambda_min, -0.093, epsilon = 1e-3);
    }

    #[test]
    fn rayleigh_quotient_matches_margin() {
        let r = min_eigenpair(10).unwrap();
        assert_abs_diff_eq!(violation_margin(&r.vector), r.lambda_min, epsilon = 1e-10);
    }

    #[test]
    fn interlacing_makes_lambda_min_monotone() {
        let mut prev = f64::INFINITY;
        for cutoff in 0..=14 {
            let r = min_eigenpair(cutoff).unwrap();
            assert!(
                r.lambda_min <= prev + 1e-12,
                "cutoff {cutoff}: {} after {prev}",
                r.lambda_min
            );
            prev = r.lambda_min;
        }
    }

    #[test]
    fn sweep_tracks_the_determinant_sign_flip() {
        let rows = cutoff_sweep(11).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert_eq!(r.det4m_sign == -1, r.lambda_min < 0.0, "cutoff {}", r.cutoff);
        }
        assert_eq!(rows[9].det4m_sign, 1);
        assert_eq!(rows[10].det4m_sign, -1);
        assert_eq!(rows[10].det4m, "-21772303951061875");
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("cutoff,det4m_sign,det4m,lambda_min\n"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn margin_agrees_with_the_fock_check() {
        let r = min_eigenpair(10).unwrap();
        let report = crate::catalog::quadripartite_cfrd_fock(&r.vector).unwrap();
        assert_abs_diff_eq!(report.margin, r.lambda_min, epsilon = 1e-12);
        assert!(report.violated);
    }
}
