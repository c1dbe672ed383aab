//! CHSH combination and its second-moment (Tsirelson) bound.
//!
//! Positivity of the correlation matrix alone caps the CHSH combination at
//! (sum of the four variances)/sqrt(2), which is 2*sqrt(2) for unit-variance
//! observables. The check is therefore never violated by quantum data.

use num_complex::Complex64;

use crate::catalog::InequalityReport;
use crate::error::{Error, Result};
use crate::hilbert::{commutator, embed, expect_real, pauli, HilbertSpace, Operator, State};

/// Evaluate the CHSH combination A1(B1+B2) + A2(B1-B2) against the
/// second-moment bound.
pub fn tsirelson_check(
    state: &State,
    a1: &Operator,
    a2: &Operator,
    b1: &Operator,
    b2: &Operator,
) -> Result<InequalityReport> {
    for a in [a1, a2] {
        for b in [b1, b2] {
            if !a.commutes_with(b)? {
                let resid = commutator(a, b)?.max_abs();
                return Err(Error::Input(format!(
                    "A and B settings must commute (residual {resid:.3e})"
                )));
            }
        }
    }
    let chsh = expect_real(
        state,
        &a1.mul(&b1.add(b2)?)?.add(&a2.mul(&b1.sub(b2)?)?)?,
    )?;
    let variances: Vec<f64> = [a1, a2, b1, b2]
        .iter()
        .map(|op| expect_real(state, &op.pow(2)))
        .collect::<Result<_>>()?;
    let rhs = variances.iter().sum::<f64>() / 2f64.sqrt();
    Ok(InequalityReport::new("tsirelson", chsh.abs(), rhs)
        .detail("chsh", chsh)
        .detail("sum_of_variances", variances.iter().sum::<f64>()))
}

/// Bell state and settings reaching the quantum maximum 2*sqrt(2).
pub fn chsh_bell_scenario() -> Result<(State, [Operator; 4])> {
    let space = HilbertSpace::qubits(2)?;
    let mut v = nalgebra::DVector::zeros(4);
    v[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[3] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let state = State::pure(space.clone(), v)?;
    let a1 = embed(&pauli(3)?, 0, &space)?;
    let a2 = embed(&pauli(1)?, 0, &space)?;
    let z = embed(&pauli(3)?, 1, &space)?;
    let x = embed(&pauli(1)?, 1, &space)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let b1 = z.add(&x)?.scale_re(s);
    let b2 = z.sub(&x)?.scale_re(s);
    Ok((state, [a1, a2, b1, b2]))
}
