//! Third-moment contextuality test on a pentagon of qutrit observables.
//!
//! Five Hermitian settings A_1..A_5 on a three-level system, each
//! commuting with its next-nearest neighbours (indices mod 5). They are
//! assembled from five Fourier components F(q) = sum_a A_a w^{aq} with
//! w = exp(2 pi i/5). A classical assignment respecting the compatibility
//! graph and reproducing the vanishing second-moment combination S must
//! have Q = 25 sum_a <A_a^3> = 0, while the quantum value on the ground
//! state is 8(sqrt(5)-1).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::catalog::InequalityReport;
use crate::error::{Error, Result};
use crate::hilbert::{commutator, expect_real, HilbertSpace, Operator, State, ALGEBRA_TOL};

const COS_PI_5: f64 = 0.8090169943749474; // cos(pi/5) = (1 + sqrt 5)/4
/// Quantum value of Q on the ground state: 8(sqrt(5) - 1).
pub const PENTAGON_Q: f64 = 9.888543819998318;

/// The five settings together with their Fourier components.
#[derive(Debug, Clone)]
pub struct PentagonModel {
    /// Fourier amplitudes fixing the model up to symmetry.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// F(0)..F(4).
    fourier: Vec<Operator>,
    /// A_1..A_5 (index 0 holds A_1).
    settings: Vec<Operator>,
}

/// Build the canonical model with b = 1, c = 2 sqrt(cos(pi/5)),
/// a = -1/cos(pi/5) and verify all structural relations.
pub fn pentagon_model() -> Result<PentagonModel> {
    let b = 1.0;
    let c = 2.0 * COS_PI_5.sqrt();
    let a = -1.0 / COS_PI_5;
    PentagonModel::new(a, b, c)
}

impl PentagonModel {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        // amplitude constraints tying the three parameters together
        let r1 = c * c - 4.0 * b * b * COS_PI_5;
        let r2 = b * c + a * c * COS_PI_5;
        if r1.abs() > 1e-10 || r2.abs() > 1e-10 {
            return Err(Error::Input(format!(
                "pentagon amplitudes violate the defining constraints ({r1:.3e}, {r2:.3e})"
            )));
        }
        let space = HilbertSpace::new(&[3])?;
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        let re = |x: f64| Complex64::new(x, 0.0);
        let f0 = Operator::new(
            space.clone(),
            DMatrix::from_row_slice(3, 3, &[z, z, z, z, re(a), z, z, z, re(a)]),
        )?;
        let f1 = Operator::new(
            space.clone(),
            DMatrix::from_row_slice(3, 3, &[z, re(c), i * c, re(c), z, z, i * c, z, z]),
        )?;
        let f2 = Operator::new(
            space.clone(),
            DMatrix::from_row_slice(3, 3, &[z, z, z, z, re(b), i * b, z, i * b, re(-b)]),
        )?;
        let f3 = f2.dagger();
        let f4 = f1.dagger();
        let fourier = vec![f0, f1, f2, f3, f4];

        // A_alpha = (1/5) sum_q F(q) w^{-alpha q}
        let mut settings = Vec::with_capacity(5);
        for alpha in 1..=5u32 {
            let mut op = Operator::zero(&space);
            for (q, f) in fourier.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * f64::from(alpha) * q as f64 / 5.0;
                op = op.add(&f.scale(Complex64::from_polar(0.2, phase)))?;
            }
            settings.push(op);
        }
        let model = Self {
            a,
            b,
            c,
            fourier,
            settings,
        };
        model.verify()?;
        Ok(model)
    }

    /// A_alpha for alpha in 1..=5.
    pub fn setting(&self, alpha: usize) -> &Operator {
        assert!((1..=5).contains(&alpha), "setting index out of range");
        &self.settings[alpha - 1]
    }

    /// F(q) for q in 0..=4.
    pub fn fourier(&self, q: usize) -> &Operator {
        &self.fourier[q]
    }

    pub fn space(&self) -> &HilbertSpace {
        self.settings[0].space()
    }

    /// Structural invariants: Hermitian settings, compatibility of
    /// next-nearest neighbours, Fourier round trip, and the equivalent
    /// component commutation relations.
    pub fn verify(&self) -> Result<()> {
        for op in &self.settings {
            op.check_hermitian()?;
        }
        for alpha in 0..5 {
            let resid = commutator(&self.settings[alpha], &self.settings[(alpha + 2) % 5])?
                .max_abs();
            if resid > ALGEBRA_TOL {
                return Err(Error::Input(format!(
                    "next-nearest settings fail to commute (residual {resid:.3e})"
                )));
            }
        }
        // round trip: F(q) = sum_alpha A_alpha w^{alpha q}
        for (q, f) in self.fourier.iter().enumerate() {
            let mut rebuilt = Operator::zero(self.space());
            for (k, op) in self.settings.iter().enumerate() {
                let alpha = (k + 1) as f64;
                let phase = 2.0 * std::f64::consts::PI * alpha * q as f64 / 5.0;
                rebuilt = rebuilt.add(&op.scale(Complex64::from_polar(1.0, phase)))?;
            }
            let resid = rebuilt.sub(f)?.max_abs();
            if resid > 1e-10 {
                return Err(Error::Input(format!(
                    "Fourier round trip fails at q = {q} (residual {resid:.3e})"
                )));
            }
        }
        // the same compatibility in component form
        let sin1 = (std::f64::consts::PI / 5.0).sin();
        let sin2 = (2.0 * std::f64::consts::PI / 5.0).sin();
        let f0 = &self.fourier[0];
        let f1 = &self.fourier[1];
        let f2 = &self.fourier[2];
        let pairs = [
            commutator(f1, &f1.dagger())?
                .scale_re(sin1)
                .sub(&commutator(f2, &f2.dagger())?.scale_re(sin2))?,
            commutator(f1, f0)?
                .scale_re(sin2)
                .sub(&commutator(f2, &f1.dagger())?.scale_re(sin1))?,
            commutator(f2, f0)?
                .scale_re(sin1)
                .sub(&commutator(&f2.dagger(), &f1.dagger())?.scale_re(sin2))?,
        ];
        for (k, diff) in pairs.iter().enumerate() {
            if diff.max_abs() > 1e-10 {
                return Err(Error::Input(format!(
                    "component commutation relation {k} fails (residual {:.3e})",
                    diff.max_abs()
                )));
            }
        }
        Ok(())
    }

    /// The vanishing second-moment combination
    /// S = <F(2)^dag F(2) + F(2) F(2)^dag + 2 F(0)^2 cos(pi/5)> / 2.
    pub fn s_value(&self, state: &State) -> Result<f64> {
        let f0 = &self.fourier[0];
        let f2 = &self.fourier[2];
        let op = f2
            .dagger()
            .mul(f2)?
            .add(&f2.mul(&f2.dagger())?)?
            .add(&f0.pow(2).scale_re(2.0 * COS_PI_5))?
            .scale_re(0.5);
        expect_real(state, &op)
    }

    /// S rewritten over the settings:
    /// sum_a <A_a^2>(1 + cos(pi/5)) + 2 sum_a <A_a A_{a+2}>(cos(pi/5) + cos(2 pi/5)).
    pub fn s_value_settings(&self, state: &State) -> Result<f64> {
        let cos1 = COS_PI_5;
        let cos2 = (2.0 * std::f64::consts::PI / 5.0).cos();
        let mut total = 0.0;
        for alpha in 0..5 {
            let sq = expect_real(state, &self.settings[alpha].pow(2))?;
            let cross = expect_real(
                state,
                &self.settings[alpha].mul(&self.settings[(alpha + 2) % 5])?,
            )?;
            total += sq * (1.0 + cos1) + 2.0 * cross * (cos1 + cos2);
        }
        Ok(total)
    }

    /// Q = 25 sum_a <A_a^3>.
    pub fn q_value(&self, state: &State) -> Result<f64> {
        let mut total = 0.0;
        for op in &self.settings {
            total += expect_real(state, &op.pow(3))?;
        }
        Ok(25.0 * total)
    }

    /// Q recomputed from the Fourier components,
    /// sum over q + p + r = 0 mod 5 of <F(q) F(p) F(r)>.
    pub fn q_value_fourier(&self, state: &State) -> Result<f64> {
        let mut total = Complex64::new(0.0, 0.0);
        for q in 0..5usize {
            for p in 0..5usize {
                let r = (10 - q - p) % 5;
                let op = self.fourier[q].mul(&self.fourier[p])?.mul(&self.fourier[r])?;
                total += crate::hilbert::expect(state, &op)?;
            }
        }
        if total.im.abs() > 1e-9 {
            return Err(Error::Input(format!(
                "Fourier triple sum has imaginary part {:.3e}",
                total.im
            )));
        }
        Ok(total.re)
    }
}

/// Run the test on the ground state. The premise S = 0 holds there, and
/// the classical consequence Q = 0 is contradicted by Q = 8(sqrt(5) - 1).
pub fn pentagon_test() -> Result<InequalityReport> {
    let model = pentagon_model()?;
    let state = State::basis(model.space().clone(), 0)?;
    let s = model.s_value(&state)?;
    let s_alt = model.s_value_settings(&state)?;
    let q = model.q_value(&state)?;
    let q_fourier = model.q_value_fourier(&state)?;
    if (q - q_fourier).abs() > 1e-9 {
        return Err(Error::Input(format!(
            "setting-sum and Fourier-sum Q disagree ({q} vs {q_fourier})"
        )));
    }
    Ok(InequalityReport::new("pentagon-third-moment", q.abs(), 0.0)
        .detail("q", q)
        .detail("q_fourier", q_fourier)
        .detail("s", s)
        .detail("s_settings_form", s_alt)
        .detail("premise_met", s.abs() <= 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn canonical_model_passes_invariants() {
        pentagon_model().unwrap();
    }

    #[test]
    fn bad_amplitudes_rejected() {
        assert!(PentagonModel::new(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ground_state_run_matches_expected_values() {
        let r = pentagon_test().unwrap();
        assert!(r.violated);
        assert_abs_diff_eq!(r.details["s"].as_f64().unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.lhs, PENTAGON_Q, epsilon = 1e-10);
        assert_abs_diff_eq!(
            r.details["q_fourier"].as_f64().unwrap(),
            PENTAGON_Q,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(r.lhs, 8.0 * (5f64.sqrt() - 1.0), epsilon = 1e-10);
    }

    #[test]
    fn two_s_forms_agree_on_random_states() {
        let model = pentagon_model().unwrap();
        let mut rng = crate::test_rng(55);
        for _ in 0..50 {
            let state = State::random_pure(model.space().clone(), &mut rng);
            let s = model.s_value(&state).unwrap();
            let s_alt = model.s_value_settings(&state).unwrap();
            assert_abs_diff_eq!(s, s_alt, epsilon = 1e-10);
        }
    }

    #[test]
    fn classical_nearest_fourier_support_gives_zero_q() {
        // classical assignments with Fourier support only at q = +-1:
        // A_a = Re(z w^{-a}); cubes have support at +-1, +-3 only, so the
        // third-moment sum over a vanishes identically
        let mut rng = crate::test_rng(91);
        for _ in 0..200 {
            let z = Complex64::new(
                crate::hilbert::normal(&mut rng),
                crate::hilbert::normal(&mut rng),
            );
            let mut total = 0.0;
            for alpha in 1..=5 {
                let phase = -2.0 * std::f64::consts::PI * alpha as f64 / 5.0;
                let value = (z * Complex64::from_polar(1.0, phase)).re;
                total += value.powi(3);
            }
            assert_abs_diff_eq!(total, 0.0, epsilon = 1e-12);
        }
    }
}
