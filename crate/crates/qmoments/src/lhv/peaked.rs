//! Delta-peak extension of the Gaussian model matching arbitrary third
//! moments.
//!
//! The mixture keeps a renormalized Gaussian part with adjusted covariance
//! C' and adds `c` delta peaks of weight 1/lambda^3 each. Peak positions use
//! the auxiliary parameter q in {3, -1, -2}: first moments cancel because
//! 3 - 1 - 2 = 0 while third moments survive because 3^3 - 1^3 - 2^3 = 18.
//! Cube roots are taken real-valued for negative arguments.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lhv::gaussian::{gaussian_moment, GaussianLHV};
use crate::moments::{Label, MomentTensor};

const Q_VALUES: [f64; 3] = [3.0, -1.0, -2.0];

/// A single delta peak of the mixture.
#[derive(Debug, Clone, Serialize)]
pub struct Peak {
    pub position: Vec<f64>,
    pub weight: f64,
}

/// Gaussian-plus-peaks mixture reproducing prescribed second and third
/// moments.
#[derive(Debug, Clone)]
pub struct PeakedLHV {
    labels: Vec<Label>,
    gaussian: GaussianLHV,
    gaussian_weight: f64,
    peaks: Vec<Peak>,
    lambda: f64,
    label_count: usize,
    input_covariance: DMatrix<f64>,
}

/// Triangular solve for the cube brackets of the peak positions.
///
/// The achieved moments are linear in the cubes of the peak magnitudes, in
/// the order: distinct triples, then <Xi^2 Xj> brackets, then <Xi^3>
/// brackets. Solving in that order zeroes the residual against the target
/// table exactly.
struct Brackets {
    n: usize,
    /// t[(i,j,k)] for i<j<k.
    triples: Vec<((usize, usize, usize), f64)>,
    /// bracket for ordered pair (i, j), i != j.
    pairs: Vec<((usize, usize), f64)>,
    /// bracket for each single observable.
    singles: Vec<f64>,
}

impl Brackets {
    fn solve(n: usize, t: &impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut triples = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    triples.push(((i, j, k), t(i, j, k)));
                }
            }
        }
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let cross: f64 = (0..n)
                        .filter(|&k| k != i && k != j)
                        .map(|k| t(i, j, k))
                        .sum();
                    pairs.push(((i, j), t(i, i, j) - cross));
                }
            }
        }
        let singles = (0..n)
            .map(|i| {
                let cross: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| t(j, j, i))
                    .sum();
                t(i, i, i) - cross / 2.0
            })
            .collect();
        Self {
            n,
            triples,
            pairs,
            singles,
        }
    }

    /// Number of peak labels c for n observables.
    fn label_count(&self) -> usize {
        3 * self.triples.len() + 6 * self.n * (self.n - 1) / 2 * 2 + 3 * self.n
    }

    /// Largest lambda-independent peak coordinate magnitude.
    fn position_scale(&self) -> f64 {
        let cbrt18 = 18f64.cbrt();
        let cbrt4 = 4f64.cbrt();
        let mut scale: f64 = 0.0;
        for &(_, t) in &self.triples {
            scale = scale.max(3.0 * t.cbrt().abs() / cbrt18);
        }
        for &(_, b) in &self.pairs {
            scale = scale.max(3.0 * 2f64.sqrt() * b.cbrt().abs() / (cbrt4 * cbrt18));
        }
        for &b in &self.singles {
            scale = scale.max(3.0 * b.cbrt().abs() / cbrt18);
        }
        scale
    }

    /// Peak positions for the given lambda, one vector per label L.
    fn positions(&self, lambda: f64) -> Vec<DVector<f64>> {
        let cbrt18 = 18f64.cbrt();
        let cbrt4 = 4f64.cbrt();
        let mut out = Vec::new();
        for &((i, j, k), t) in &self.triples {
            for q in Q_VALUES {
                let mut w = DVector::zeros(self.n);
                let x = q * lambda * t.cbrt() / cbrt18;
                w[i] = x;
                w[j] = x;
                w[k] = x;
                out.push(w);
            }
        }
        for &((i, j), b) in &self.pairs {
            let q_ij = lambda / cbrt4 * b.cbrt();
            for q in Q_VALUES {
                for sign in [1.0, -1.0] {
                    let mut w = DVector::zeros(self.n);
                    w[i] = sign * 2f64.sqrt() * q * q_ij / cbrt18;
                    w[j] = q * q_ij / cbrt18;
                    out.push(w);
                }
            }
        }
        for (i, &b) in self.singles.iter().enumerate() {
            for q in Q_VALUES {
                let mut w = DVector::zeros(self.n);
                w[i] = q * lambda * b.cbrt() / cbrt18;
                out.push(w);
            }
        }
        out
    }
}

/// Build the peaked model for a strictly positive definite covariance C and
/// a symmetric third-moment table T.
///
/// `lambda = None` selects lambda automatically: starting from
/// max(10, (4c)^{1/3}, 10 * position scale) and doubling until the peak
/// mass is below 1/2 and the adjusted covariance is strictly positive
/// definite, capped at 2^40.
pub fn peaked_model(
    c: &MomentTensor,
    t: &MomentTensor,
    lambda: Option<f64>,
) -> Result<PeakedLHV> {
    let labels = c.labels.clone();
    let n = labels.len();
    let cov = c.as_matrix();
    // construction hypothesis: strictly positive definite after scaling the
    // matrix to unit max diagonal.
    let diag_scale = cov.diagonal().amax().max(f64::MIN_POSITIVE);
    let min_eig = cov
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .reduce(f64::min)
        .unwrap_or(0.0);
    if min_eig / diag_scale <= 1e-9 {
        return Err(Error::NotStrictlyPd(min_eig));
    }

    let tget = |i: usize, j: usize, k: usize| {
        t.get(&[labels[i], labels[j], labels[k]]).unwrap_or(0.0)
    };
    let brackets = Brackets::solve(n, &tget);
    let count = brackets.label_count();

    let mut lam = match lambda {
        Some(l) => {
            assert!(l > 0.0, "lambda must be positive");
            l
        }
        None => 10f64
            .max((4.0 * count as f64).cbrt())
            .max(10.0 * brackets.position_scale()),
    };
    let auto = lambda.is_none();
    loop {
        if let Some(model) = try_lambda(&labels, &cov, &brackets, count, lam) {
            let model = model?;
            model.verify_third_moments(t)?;
            return Ok(model);
        }
        if !auto || lam > (1u64 << 40) as f64 {
            return Err(Error::LambdaScheduleExhausted);
        }
        lam *= 2.0;
    }
}

/// None when this lambda fails the mass or positivity conditions.
fn try_lambda(
    labels: &[Label],
    cov: &DMatrix<f64>,
    brackets: &Brackets,
    count: usize,
    lam: f64,
) -> Option<Result<PeakedLHV>> {
    let peak_weight = lam.powi(-3);
    let gaussian_weight = 1.0 - count as f64 * peak_weight;
    if gaussian_weight <= 0.5 {
        return None;
    }
    let positions = brackets.positions(lam);
    let n = labels.len();
    let mut peak_cov = DMatrix::zeros(n, n);
    for w in &positions {
        peak_cov += w * w.transpose() * peak_weight;
    }
    let adjusted = (cov - &peak_cov) / gaussian_weight;
    let min_eig = adjusted
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .reduce(f64::min)
        .unwrap_or(0.0);
    if min_eig <= 0.0 {
        return None;
    }
    let gaussian = match GaussianLHV::new(labels.to_vec(), adjusted) {
        Ok(g) => g,
        Err(e) => return Some(Err(e)),
    };
    let peaks = positions
        .into_iter()
        .map(|w| Peak {
            position: w.iter().copied().collect(),
            weight: peak_weight,
        })
        .collect();
    Some(Ok(PeakedLHV {
        labels: labels.to_vec(),
        gaussian,
        gaussian_weight,
        peaks,
        lambda: lam,
        label_count: count,
        input_covariance: cov.clone(),
    }))
}

impl PeakedLHV {
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn gaussian_weight(&self) -> f64 {
        self.gaussian_weight
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    /// Adjusted-covariance Gaussian part.
    pub fn gaussian(&self) -> &GaussianLHV {
        &self.gaussian
    }

    fn index_of(&self, label: &Label) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or(Error::UnknownLabel(*label))
    }

    /// Exact analytic moment of the mixture for 1..=4 labels.
    pub fn moment(&self, labels: &[Label]) -> Result<f64> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| self.index_of(l))
            .collect::<Result<_>>()?;
        let gauss =
            self.gaussian_weight * gaussian_moment(self.gaussian.covariance(), &idx);
        let peaks: f64 = self
            .peaks
            .iter()
            .map(|p| p.weight * idx.iter().map(|&i| p.position[i]).product::<f64>())
            .sum();
        Ok(gauss + peaks)
    }

    fn verify_third_moments(&self, t: &MomentTensor) -> Result<()> {
        let n = self.labels.len();
        let scale = t
            .entries()
            .map(|(_, v)| v.abs())
            .fold(1.0f64, f64::max);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let key = [self.labels[i], self.labels[j], self.labels[k]];
                    let want = t.get(&key).unwrap_or(0.0);
                    let got = self.moment(&key)?;
                    worst = worst.max((want - got).abs());
                }
            }
        }
        if worst > 1e-10 * scale {
            return Err(Error::CalibrationResidual(worst));
        }
        Ok(())
    }

    /// `n_draws` rows of samples, deterministic in `seed`.
    pub fn sample(&self, seed: u64, n_draws: usize) -> DMatrix<f64> {
        let mut rng = crate::seeded_rng(seed);
        let n = self.labels.len();
        let mut out = DMatrix::zeros(n_draws, n);
        for row in 0..n_draws {
            let u: f64 = rng.gen();
            if u < self.gaussian_weight {
                out.set_row(row, &self.gaussian.draw(&mut rng).transpose());
            } else {
                let k = ((u - self.gaussian_weight) / self.lambda.powi(-3)) as usize;
                let peak = &self.peaks[k.min(self.peaks.len() - 1)];
                for (col, &x) in peak.position.iter().enumerate() {
                    out[(row, col)] = x;
                }
            }
        }
        out
    }

    pub fn input_covariance(&self) -> &DMatrix<f64> {
        &self.input_covariance
    }
}

impl Serialize for PeakedLHV {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PeakedLHV", 5)?;
        st.serialize_field("type", "peaked")?;
        st.serialize_field("labels", &self.labels)?;
        let rows: Vec<Vec<f64>> = self
            .input_covariance
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        st.serialize_field("covariance", &rows)?;
        st.serialize_field("peaks", &self.peaks)?;
        st.serialize_field("lambda", &self.lambda)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::Convention;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn labels(n: usize) -> Vec<Label> {
        (0..n).map(|k| Label::new(0, k as u16, 0)).collect()
    }

    fn tensor2(labels: &[Label], mat: DMatrix<f64>) -> MomentTensor {
        MomentTensor::from_matrix(labels.to_vec(), &mat, true)
    }

    fn tensor3(labels: &[Label], f: impl Fn(usize, usize, usize) -> f64) -> MomentTensor {
        let mut t = MomentTensor::new(3, Convention::FullSymmetrization, labels.to_vec(), true);
        for i in 0..labels.len() {
            for j in i..labels.len() {
                for k in j..labels.len() {
                    t.insert(vec![labels[i], labels[j], labels[k]], f(i, j, k));
                }
            }
        }
        t
    }

    #[test]
    fn zero_third_moments_give_zero_peaks() {
        let ls = labels(3);
        let c = tensor2(&ls, DMatrix::identity(3, 3));
        let t = tensor3(&ls, |_, _, _| 0.0);
        let model = peaked_model(&c, &t, None).unwrap();
        for p in model.peaks() {
            assert!(p.position.iter().all(|&x| x == 0.0));
        }
        assert_abs_diff_eq!(model.moment(&[ls[0], ls[1], ls[2]]).unwrap(), 0.0);
        assert_abs_diff_eq!(model.moment(&[ls[0], ls[1]]).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(model.moment(&[ls[0], ls[0]]).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn single_observable_peak_positions() {
        // C = [1], <X^3> = 1: three peaks at q*lambda/cbrt(18)
        let ls = labels(1);
        let c = tensor2(&ls, DMatrix::identity(1, 1));
        let t = tensor3(&ls, |_, _, _| 1.0);
        let lam = 20.0;
        let model = peaked_model(&c, &t, Some(lam)).unwrap();
        assert_eq!(model.peaks().len(), 3);
        let cbrt18 = 18f64.cbrt();
        for (peak, q) in model.peaks().iter().zip(Q_VALUES) {
            assert_abs_diff_eq!(peak.position[0], q * lam / cbrt18, epsilon = 1e-12);
        }
        // lambda^-3 * lambda^3 * (27 - 1 - 8) / 18 = 1
        assert_abs_diff_eq!(model.moment(&[ls[0]; 3]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn random_targets_reproduced_exactly() {
        let mut rng = crate::test_rng(31);
        for trial in 0..20 {
            let n = 3;
            let ls = labels(n);
            let g = DMatrix::from_fn(n, n, |_, _| crate::hilbert::normal(&mut rng));
            let cov = &g * g.transpose() + DMatrix::identity(n, n) * n as f64;
            let c = tensor2(&ls, cov.clone());
            let t = tensor3(&ls, |_, _, _| 0.0);
            let mut t = t;
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        t.insert(vec![ls[i], ls[j], ls[k]], rng.gen_range(-2.0..2.0));
                    }
                }
            }
            let model = peaked_model(&c, &t, None).unwrap();
            // mixture weights sum to one exactly
            let peak_mass: f64 = model.peaks().iter().map(|p| p.weight).sum();
            assert_eq!(model.gaussian_weight() + peak_mass, 1.0);
            // first moments vanish: 3 - 1 - 2 = 0
            for l in &ls {
                assert_abs_diff_eq!(model.moment(&[*l]).unwrap(), 0.0, epsilon = 1e-12);
            }
            for i in 0..n {
                for j in i..n {
                    assert_abs_diff_eq!(
                        model.moment(&[ls[i], ls[j]]).unwrap(),
                        cov[(i, j)],
                        epsilon = 1e-12
                    );
                    for k in j..n {
                        let key = [ls[i], ls[j], ls[k]];
                        assert_abs_diff_eq!(
                            model.moment(&key).unwrap(),
                            t.get(&key).unwrap(),
                            epsilon = 1e-10
                        );
                    }
                }
            }
            // brute-force re-evaluation over the explicit peak list
            let key = [ls[0], ls[1], ls[2]];
            let brute: f64 = model
                .peaks()
                .iter()
                .map(|p| p.weight * p.position[0] * p.position[1] * p.position[2])
                .sum();
            assert_abs_diff_eq!(brute, t.get(&key).unwrap(), epsilon = 1e-10);
            assert!(trial < 20);
        }
    }

    #[test]
    fn singular_covariance_rejected() {
        let ls = labels(2);
        let v = nalgebra::dvector![1.0, 1.0];
        let c = tensor2(&ls, &v * v.transpose());
        let t = tensor3(&ls, |_, _, _| 0.0);
        assert!(matches!(
            peaked_model(&c, &t, None),
            Err(Error::NotStrictlyPd(_))
        ));
    }

    #[test]
    fn empirical_peak_mass_matches() {
        let ls = labels(2);
        let c = tensor2(&ls, DMatrix::identity(2, 2));
        let t = tensor3(&ls, |i, j, k| if i == j && j == k { 0.5 } else { 0.2 });
        let model = peaked_model(&c, &t, None).unwrap();
        let n = 200_000;
        let draws = model.sample(99, n);
        // peaks are atoms; count exact repeats of peak coordinates
        let peak_mass_expected = 1.0 - model.gaussian_weight();
        let hits = draws
            .row_iter()
            .filter(|row| {
                model.peaks().iter().any(|p| {
                    p.position
                        .iter()
                        .enumerate()
                        .all(|(k, &x)| row[k] == x)
                })
            })
            .count();
        let emp = hits as f64 / n as f64;
        let se = 5.0 * (peak_mass_expected * (1.0 - peak_mass_expected) / n as f64).sqrt();
        assert!((emp - peak_mass_expected).abs() < se.max(1e-4));
        assert_eq!(model.sample(99, 50), model.sample(99, 50));
    }
}
