//! Magic-square fourth-moment contextuality test on two qubits.
//!
//! A 3x3 grid of two-qubit observables whose row mates and column mates
//! commute, with every row product +1 and every column product -1. Any
//! noncontextual value assignment obeys
//! |<S>| <= sum_ij sqrt(<M_ij^2><M_ij^4>/3) with S the sum of column minus
//! row products, while quantum mechanics gives |<S>| = 6 > 3*sqrt(3) for
//! every state. The classical bound rests on the identity S = det N where
//! N is an index-shuffled copy of the grid.

use crate::catalog::InequalityReport;
use crate::error::{Error, Result};
use crate::hilbert::{
    commutator, embed, expect_real, pauli, HilbertSpace, Operator, State, ALGEBRA_TOL,
};
use crate::moments::fourth_moment;

/// 3x3 grid of commuting-row/commuting-column two-qubit observables.
#[derive(Debug, Clone)]
pub struct MerminPeresSquare {
    entries: [[Operator; 3]; 3],
}

/// The canonical square. Row products are +1, column products -1, and all
/// entries square to the identity.
pub fn mermin_peres_square() -> Result<MerminPeresSquare> {
    let space = HilbertSpace::qubits(2)?;
    let s = |axis: usize, slot: usize| -> Result<Operator> {
        embed(&pauli(axis)?, slot, &space)
    };
    let grid = [
        [s(1, 0)?, s(1, 0)?.mul(&s(1, 1)?)?, s(1, 1)?],
        [
            s(1, 0)?.mul(&s(3, 1)?)?.scale_re(-1.0),
            s(2, 0)?.mul(&s(2, 1)?)?,
            s(3, 0)?.mul(&s(1, 1)?)?.scale_re(-1.0),
        ],
        [s(3, 1)?, s(3, 0)?.mul(&s(3, 1)?)?, s(3, 0)?],
    ];
    let square = MerminPeresSquare { entries: grid };
    square.verify()?;
    Ok(square)
}

impl MerminPeresSquare {
    pub fn entry(&self, row: usize, col: usize) -> &Operator {
        &self.entries[row][col]
    }

    pub fn row_product(&self, row: usize) -> Result<Operator> {
        self.entries[row][0]
            .mul(&self.entries[row][1])?
            .mul(&self.entries[row][2])
    }

    pub fn col_product(&self, col: usize) -> Result<Operator> {
        self.entries[0][col]
            .mul(&self.entries[1][col])?
            .mul(&self.entries[2][col])
    }

    /// Structural invariants: Hermitian entries squaring to the identity,
    /// commuting row and column mates, row products +1 and column
    /// products -1.
    pub fn verify(&self) -> Result<()> {
        let space = self.entries[0][0].space();
        let id = Operator::identity(space);
        for row in &self.entries {
            for op in row {
                op.check_hermitian()?;
                let sq_resid = op.pow(2).sub(&id)?.max_abs();
                if sq_resid > ALGEBRA_TOL {
                    return Err(Error::Input(format!(
                        "square entry is not an involution (residual {sq_resid:.3e})"
                    )));
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in (j + 1)..3 {
                    for (a, b) in [
                        (&self.entries[i][j], &self.entries[i][k]),
                        (&self.entries[j][i], &self.entries[k][i]),
                    ] {
                        let resid = commutator(a, b)?.max_abs();
                        if resid > ALGEBRA_TOL {
                            return Err(Error::Input(format!(
                                "row/column mates fail to commute (residual {resid:.3e})"
                            )));
                        }
                    }
                }
            }
        }
        for i in 0..3 {
            let row_resid = self.row_product(i)?.sub(&id)?.max_abs();
            let col_resid = self.col_product(i)?.add(&id)?.max_abs();
            if row_resid > ALGEBRA_TOL || col_resid > ALGEBRA_TOL {
                return Err(Error::Input(format!(
                    "row/column products off identity (row {row_resid:.3e}, col {col_resid:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// The fourth-moment inequality on a given state. For the canonical square
/// the left side is 6 and the right side 3*sqrt(3) regardless of the state.
pub fn mp_inequality(state: &State, square: &MerminPeresSquare) -> Result<InequalityReport> {
    square.verify()?;
    let space = square.entry(0, 0).space();
    let mut s_op = Operator::zero(space);
    for i in 0..3 {
        s_op = s_op.add(&square.col_product(i)?)?.sub(&square.row_product(i)?)?;
    }
    let s = expect_real(state, &s_op)?;
    let mut rhs = 0.0;
    for row in 0..3 {
        for col in 0..3 {
            let op = square.entry(row, col);
            let m2 = fourth_moment(state, op, 2)?;
            let m4 = fourth_moment(state, op, 4)?;
            rhs += (m2 * m4 / 3.0).sqrt();
        }
    }
    Ok(InequalityReport::new("mermin-peres-fourth-moment", s.abs(), rhs).detail("s", s))
}

/// Row/column product combination S and the determinant of the
/// index-shuffled table N; the two agree for every real table.
pub fn det_identity_check(m: &[[f64; 3]; 3]) -> (f64, f64) {
    let mut s = 0.0;
    for k in 0..3 {
        s += m[0][k] * m[1][k] * m[2][k];
        s -= m[k][0] * m[k][1] * m[k][2];
    }
    let idx = |x: i64| -> usize { x.rem_euclid(3) as usize };
    let n = |i: i64, j: i64| m[idx(i + j - 1)][idx(i - j - 1)];
    let mut det = 0.0;
    for j in 0..3i64 {
        det += n(0, j) * (n(1, (j + 1) % 3) * n(2, (j + 2) % 3) - n(1, (j + 2) % 3) * n(2, (j + 1) % 3));
    }
    (s, det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn canonical_square_passes_all_invariants() {
        mermin_peres_square().unwrap();
    }

    #[test]
    fn inequality_is_state_independent() {
        let square = mermin_peres_square().unwrap();
        let space = HilbertSpace::qubits(2).unwrap();
        let mixed = State::maximally_mixed(space.clone());
        let r = mp_inequality(&mixed, &square).unwrap();
        assert_abs_diff_eq!(r.lhs, 6.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.rhs, 3.0 * 3f64.sqrt(), epsilon = 1e-10);
        assert!(r.violated);

        let mut rng = crate::test_rng(77);
        let mut values = Vec::new();
        for _ in 0..100 {
            let state = State::random_pure(space.clone(), &mut rng);
            let r = mp_inequality(&state, &square).unwrap();
            values.push(r.lhs);
            assert_abs_diff_eq!(r.lhs, 6.0, epsilon = 1e-10);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / values.len() as f64)
            .sqrt();
        assert!(sd <= 1e-10);
    }

    #[test]
    fn det_identity_on_random_tables() {
        let mut rng = crate::test_rng(13);
        for _ in 0..100_000 {
            let mut m = [[0.0; 3]; 3];
            for row in &mut m {
                for x in row.iter_mut() {
                    *x = rng.gen_range(-2.0..2.0);
                }
            }
            let (s, det) = det_identity_check(&m);
            assert!(
                (s - det).abs() <= 1e-12 * (1.0 + det.abs()),
                "S {s} vs det {det}"
            );
        }
    }

    #[test]
    fn det_identity_trivial_cases() {
        let ones = [[1.0; 3]; 3];
        let (s, det) = det_identity_check(&ones);
        assert_abs_diff_eq!(s, 0.0);
        assert_abs_diff_eq!(det, 0.0);
    }

    #[test]
    fn classical_sign_tables_cap_at_four() {
        // exhaustive +-1 tables: |S| = |det N| never exceeds the maximal
        // determinant 4 of a sign matrix, well below the quantum value 6
        let mut best = 0.0f64;
        for mask in 0..(1u32 << 9) {
            let mut m = [[0.0; 3]; 3];
            for k in 0..9 {
                m[k / 3][k % 3] = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
            }
            let (s, _) = det_identity_check(&m);
            best = best.max(s.abs());
            assert!(s.abs() <= 4.0 + 1e-12);
        }
        assert_abs_diff_eq!(best, 4.0);
    }

    #[test]
    fn classical_tables_obey_the_moment_bound() {
        // |S| <= sum |M_ij|^3-style chain collapses to the fourth-moment
        // form for point distributions
        let mut rng = crate::test_rng(29);
        for _ in 0..10_000 {
            let mut m = [[0.0; 3]; 3];
            for row in &mut m {
                for x in row.iter_mut() {
                    *x = crate::hilbert::normal(&mut rng);
                }
            }
            let (s, _) = det_identity_check(&m);
            let rhs: f64 = m
                .iter()
                .flatten()
                .map(|x| (x.powi(2) * x.powi(4) / 3.0).sqrt())
                .sum();
            assert!(s.abs() <= rhs + 1e-9, "S {s} rhs {rhs}");
        }
    }
}
