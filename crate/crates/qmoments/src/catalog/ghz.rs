//! Third-moment contradiction on the three-qubit GHZ state.
//!
//! Setting 1 measures sigma_1 on one qubit, setting 2 the product of
//! sigma_2 on the other two. On the GHZ state <(A_a + B_a)^2> = 0 for each
//! qubit a, so any noncontextual assignment forces A_a = -B_a and hence
//! <A1 A2 A3> = -<B1 B2 B3>. Quantum mechanics gives +1 for both triples.

use num_complex::Complex64;

use crate::catalog::InequalityReport;
use crate::error::Result;
use crate::hilbert::{
    commutator, embed, expect_real, pauli, HilbertSpace, Operator, State,
};
use crate::moments::{Label, ObservableSet};

/// Premise threshold: <(A_a + B_a)^2> must vanish this tightly for the
/// classical constraint to apply.
const PREMISE_TOL: f64 = 1e-12;

/// The canonical GHZ state together with the six labeled observables.
pub fn ghz_scenario() -> Result<(State, ObservableSet)> {
    let space = HilbertSpace::qubits(3)?;
    let mut v = nalgebra::DVector::zeros(8);
    v[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[7] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let state = State::pure(space.clone(), v)?;
    let mut entries = Vec::new();
    for alpha in 0..3usize {
        let a = embed(&pauli(1)?, alpha, &space)?;
        entries.push((Label::new(0, 1, alpha as u16), a));
        let others: Vec<usize> = (0..3).filter(|&k| k != alpha).collect();
        let y0 = embed(&pauli(2)?, others[0], &space)?;
        let y1 = embed(&pauli(2)?, others[1], &space)?;
        entries.push((Label::new(0, 2, alpha as u16), y0.mul(&y1)?));
    }
    Ok((state, ObservableSet::new(space, entries)?))
}

/// Run the third-moment test on the canonical GHZ state.
pub fn ghz_test() -> Result<InequalityReport> {
    let (state, obs) = ghz_scenario()?;
    ghz_test_on(&state, &obs)
}

/// Run the third-moment test on an arbitrary state over the same
/// observable layout. When the premise <(A_a + B_a)^2> = 0 does not hold
/// the classical constraint is vacuous and the report is marked not
/// violated with a zero margin.
pub fn ghz_test_on(state: &State, obs: &ObservableSet) -> Result<InequalityReport> {
    let a: Vec<&Operator> = (0..3)
        .map(|k| obs.operator(&Label::new(0, 1, k)))
        .collect::<Result<_>>()?;
    let b: Vec<&Operator> = (0..3)
        .map(|k| obs.operator(&Label::new(0, 2, k)))
        .collect::<Result<_>>()?;

    let mut premise_max = 0.0f64;
    let mut commutation_max = 0.0f64;
    let mut premise_sq = [0.0f64; 3];
    for alpha in 0..3 {
        let sum = a[alpha].add(b[alpha])?;
        let sq = expect_real(state, &sum.pow(2))?;
        premise_max = premise_max.max(sq.abs());
        commutation_max = commutation_max.max(commutator(a[alpha], b[alpha])?.max_abs());
        premise_sq[alpha] = sq;
    }
    let aaa = expect_real(state, &a[0].mul(a[1])?.mul(a[2])?)?;
    let bbb = expect_real(state, &b[0].mul(b[1])?.mul(b[2])?)?;
    let premise_met = premise_max <= PREMISE_TOL;

    // classical constraint given the premise: aaa + bbb = 0
    let (lhs, rhs) = if premise_met {
        ((aaa + bbb).abs(), 0.0)
    } else {
        (0.0, 0.0)
    };
    let mut out = InequalityReport::new("ghz-third-moment", lhs, rhs)
        .detail("triple_a", aaa)
        .detail("triple_b", bbb)
        .detail("premise_max", premise_max)
        .detail("premise_met", premise_met)
        .detail("commutation_residual", commutation_max);
    for (alpha, sq) in premise_sq.iter().enumerate() {
        out = out.detail(&format!("premise_sq_{}", alpha + 1), *sq);
    }
    Ok(out)
}
