//! Zero-mean Gaussian model matching a given correlation matrix.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::normal;
use crate::moments::{Label, MomentTensor};

/// Eigenvalue floor below which a correlation matrix is rejected.
pub(crate) const PSD_FLOOR: f64 = 1e-10;

/// Classical Gaussian distribution with zero means and covariance equal to a
/// prescribed correlation matrix. Singular directions are handled by
/// restricting the support to the range of the covariance.
#[derive(Debug, Clone)]
pub struct GaussianLHV {
    labels: Vec<Label>,
    covariance: DMatrix<f64>,
    /// Orthonormal basis of the range, kept only when the covariance is
    /// singular.
    support_basis: Option<Vec<DVector<f64>>>,
    /// Factor S with S S^T = covariance, used for sampling.
    sqrt: DMatrix<f64>,
}

/// Build the Gaussian model for a PSD order-2 moment tensor.
pub fn gaussian_model(c: &MomentTensor) -> Result<GaussianLHV> {
    GaussianLHV::new(c.labels.clone(), c.as_matrix())
}

impl GaussianLHV {
    pub fn new(labels: Vec<Label>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = covariance.nrows();
        assert_eq!(labels.len(), n);
        let scale = covariance.amax().max(1.0);
        let eig = covariance.clone().symmetric_eigen();
        let mut sqrt = DMatrix::zeros(n, n);
        let mut support = Vec::new();
        let mut singular = false;
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -PSD_FLOOR * scale {
                return Err(Error::NotPsd(lambda));
            }
            let col = eig.eigenvectors.column(k);
            if lambda > PSD_FLOOR * scale {
                sqrt.set_column(k, &(col * lambda.max(0.0).sqrt()));
                support.push(col.into_owned());
            } else {
                singular = true;
            }
        }
        Ok(Self {
            labels,
            covariance,
            support_basis: singular.then_some(support),
            sqrt,
        })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn support_basis(&self) -> Option<&[DVector<f64>]> {
        self.support_basis.as_deref()
    }

    fn index_of(&self, label: &Label) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or(Error::UnknownLabel(*label))
    }

    /// Exact analytic moment of the distribution for a tuple of 1..=4
    /// labels: odd orders vanish, even orders follow the pair-partition
    /// expansion of Gaussian moments.
    pub fn moment(&self, labels: &[Label]) -> Result<f64> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| self.index_of(l))
            .collect::<Result<_>>()?;
        Ok(gaussian_moment(&self.covariance, &idx))
    }

    /// `n_draws` rows of samples, deterministic in `seed`.
    pub fn sample(&self, seed: u64, n_draws: usize) -> DMatrix<f64> {
        let mut rng = crate::seeded_rng(seed);
        let n = self.labels.len();
        let mut out = DMatrix::zeros(n_draws, n);
        for row in 0..n_draws {
            let draw = self.draw(&mut rng);
            out.set_row(row, &draw.transpose());
        }
        out
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.labels.len();
        let g = DVector::from_fn(n, |_, _| normal(rng));
        &self.sqrt * g
    }
}

/// Pair-partition (Isserlis) moment of a zero-mean Gaussian, orders 0..=4.
pub(crate) fn gaussian_moment(cov: &DMatrix<f64>, idx: &[usize]) -> f64 {
    match idx {
        [] => 1.0,
        [_] | [_, _, _] => 0.0,
        [a, b] => cov[(*a, *b)],
        [a, b, c, d] => {
            cov[(*a, *b)] * cov[(*c, *d)]
                + cov[(*a, *c)] * cov[(*b, *d)]
                + cov[(*a, *d)] * cov[(*b, *c)]
        }
        _ => panic!("gaussian_moment supports orders up to 4"),
    }
}

impl Serialize for GaussianLHV {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GaussianLHV", 3)?;
        st.serialize_field("type", "gaussian")?;
        st.serialize_field("labels", &self.labels)?;
        let rows: Vec<Vec<f64>> = self
            .covariance
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        st.serialize_field("covariance", &rows)?;
        st.end()
    }
}
