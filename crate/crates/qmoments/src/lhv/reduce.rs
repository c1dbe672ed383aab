//! Contextual perturbation of nonmeasurable correlation entries.
//!
//! A kernel vector of the correlation matrix is "bad" when its support
//! spans two different settings of the same observer: such a vector encodes
//! a linear constraint that no single run can check. Entries pairing two
//! settings of one observer are never measured jointly, so they may be
//! shifted by a small epsilon to remove bad kernel vectors while keeping
//! every measurable entry exact.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{kernel_basis, Label, MomentTensor};

/// Support threshold when reading off kernel-vector structure.
pub(crate) const SUPPORT_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 256;

/// One applied entry shift, symmetric in (row, col).
#[derive(Debug, Clone, Serialize)]
pub struct Perturbation {
    pub row: Label,
    pub col: Label,
    pub delta: f64,
}

/// Record of the reduction run.
#[derive(Debug, Clone, Serialize, Default)]
pub struct ReduceLog {
    pub perturbations: Vec<Perturbation>,
    pub iterations: usize,
}

/// Remove bad kernel vectors from a correlation tensor by perturbing
/// nonmeasurable entries.
///
/// The epsilon schedule starts at 1e-3 times the largest diagonal entry and
/// shrinks tenfold after every accepted shift, and also whenever a shift
/// would push an eigenvalue below -tol. Kernel vectors confined to
/// measurable entry patterns are left in place.
pub fn kernel_reduce(c: &MomentTensor, tol: f64) -> Result<(MomentTensor, ReduceLog)> {
    let labels = c.labels.clone();
    let mut mat = c.as_matrix();
    let scale = mat.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut eps = 1e-3 * scale;
    let mut log = ReduceLog::default();

    for iter in 0..MAX_ITERATIONS {
        log.iterations = iter + 1;
        let tensor = MomentTensor::from_matrix(labels.clone(), &mat, c.mean_subtracted);
        let kernel = kernel_basis(&tensor, tol)?;
        let rows = rref(&kernel);
        let Some((v, i, j)) = find_bad_pair(&rows, &labels) else {
            return Ok((tensor, log));
        };
        // increase v^T C v away from zero along the bad direction
        loop {
            if eps < 1e-13 * scale {
                return Err(Error::EpsilonScheduleExhausted);
            }
            let delta = eps * (v[i] * v[j]).signum();
            let mut candidate = mat.clone();
            candidate[(i, j)] += delta;
            candidate[(j, i)] += delta;
            let min_eig = candidate
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .reduce(f64::min)
                .unwrap_or(0.0);
            if min_eig >= -tol * scale {
                mat = candidate;
                log.perturbations.push(Perturbation {
                    row: labels[i],
                    col: labels[j],
                    delta,
                });
                eps /= 10.0;
                break;
            }
            eps /= 10.0;
        }
    }
    Err(Error::NoConvergence(
        "kernel reduction hit the iteration cap".into(),
    ))
}

/// Reduced row echelon form of the kernel vectors, for a sparse canonical
/// reading of the constraint structure.
pub(crate) fn rref(vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut rows: Vec<DVector<f64>> = vectors.to_vec();
    let n = rows.first().map_or(0, |r| r.len());
    let mut pivot_row = 0;
    for col in 0..n {
        let Some(best) = (pivot_row..rows.len())
            .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
        else {
            break;
        };
        if rows[best][col].abs() <= SUPPORT_TOL {
            continue;
        }
        rows.swap(pivot_row, best);
        let piv = rows[pivot_row][col];
        rows[pivot_row] /= piv;
        for r in 0..rows.len() {
            if r != pivot_row && rows[r][col].abs() > 0.0 {
                let f = rows[r][col];
                let sub = &rows[pivot_row] * f;
                rows[r] -= sub;
            }
        }
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    rows
}

/// First kernel row whose support pairs two settings of one observer,
/// together with the offending index pair.
fn find_bad_pair<'a>(
    rows: &'a [DVector<f64>],
    labels: &[Label],
) -> Option<(&'a DVector<f64>, usize, usize)> {
    for row in rows {
        let support: Vec<usize> = (0..row.len())
            .filter(|&k| row[k].abs() > SUPPORT_TOL)
            .collect();
        for (a, &i) in support.iter().enumerate() {
            for &j in support.iter().skip(a + 1) {
                if labels[i].observer == labels[j].observer
                    && labels[i].setting != labels[j].setting
                {
                    return Some((row, i, j));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::KERNEL_TOL;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, DMatrix};

    #[test]
    fn positive_definite_input_is_untouched() {
        let labels = vec![Label::new(0, 1, 0), Label::new(0, 2, 0)];
        let mat = dmatrix![1.0, 0.3; 0.3, 1.0];
        let c = MomentTensor::from_matrix(labels, &mat, true);
        let (out, log) = kernel_reduce(&c, KERNEL_TOL).unwrap();
        assert!(log.perturbations.is_empty());
        assert_eq!(out.as_matrix(), mat);
    }

    #[test]
    fn anticorrelated_settings_kernel_is_removed() {
        // three observers, each with two perfectly anticorrelated settings:
        // every kernel vector spans two settings of one observer
        let mut labels = Vec::new();
        for observer in 0..3u8 {
            labels.push(Label::new(observer, 1, 0));
            labels.push(Label::new(observer, 2, 0));
        }
        let mut mat = DMatrix::identity(6, 6);
        for b in 0..3 {
            mat[(2 * b, 2 * b + 1)] = -1.0;
            mat[(2 * b + 1, 2 * b)] = -1.0;
        }
        let c = MomentTensor::from_matrix(labels.clone(), &mat, true);
        let (out, log) = kernel_reduce(&c, KERNEL_TOL).unwrap();
        assert_eq!(log.perturbations.len(), 3);
        let reduced = out.as_matrix();
        assert!(kernel_basis(&out, KERNEL_TOL).unwrap().is_empty());
        // only same-observer cross-setting entries moved
        for i in 0..6 {
            for j in 0..6 {
                if labels[i].observer == labels[j].observer && i != j {
                    continue;
                }
                assert_abs_diff_eq!(reduced[(i, j)], mat[(i, j)], epsilon = 0.0);
            }
        }
    }

    #[test]
    fn measurable_kernel_is_retained() {
        // duplicate observables within one setting: the kernel constraint is
        // checkable in a single run and must not be perturbed
        let labels = vec![Label::new(0, 1, 0), Label::new(0, 1, 1)];
        let mat = dmatrix![1.0, 1.0; 1.0, 1.0];
        let c = MomentTensor::from_matrix(labels, &mat, true);
        let (out, log) = kernel_reduce(&c, KERNEL_TOL).unwrap();
        assert!(log.perturbations.is_empty());
        assert_eq!(kernel_basis(&out, KERNEL_TOL).unwrap().len(), 1);
        assert_eq!(out.as_matrix(), mat);
    }

    #[test]
    fn negative_input_is_rejected() {
        let labels = vec![Label::new(0, 1, 0), Label::new(0, 2, 0)];
        let mat = dmatrix![1.0, 2.0; 2.0, 1.0];
        let c = MomentTensor::from_matrix(labels, &mat, true);
        assert!(matches!(
            kernel_reduce(&c, KERNEL_TOL),
            Err(Error::NotPsd(_))
        ));
    }
}
