//! Moment inequalities for complex-valued observables.
//!
//! A complex observable is an ordered pair of Hermitian operators
//! combined as A = A1 + i A2 and measured by one party. Second-moment
//! bounds of the form |<AB...>|^2 <= <|AB|^2><|C...|^2> hold for any
//! classical model; the two-party four-settings combination is never
//! violated quantum mechanically, while the GHZ raising combinations and
//! an oscillator ladder violate the tri- and quadripartite versions.

use num_complex::Complex64;

use crate::catalog::InequalityReport;
use crate::error::{Error, Result};
use crate::hilbert::{
    embed, expect, expect_real, pauli, random_hermitian, HilbertSpace, Operator, State,
};

/// Hermitian pair representing a complex observable A = re + i im.
#[derive(Debug, Clone)]
pub struct ComplexObservable {
    re: Operator,
    im: Operator,
}

impl ComplexObservable {
    pub fn new(re: Operator, im: Operator) -> Result<Self> {
        re.check_hermitian()?;
        im.check_hermitian()?;
        re.add(&im)?; // same-space check
        Ok(Self { re, im })
    }

    pub fn zero(space: &HilbertSpace) -> Self {
        Self {
            re: Operator::zero(space),
            im: Operator::zero(space),
        }
    }

    pub fn re(&self) -> &Operator {
        &self.re
    }

    pub fn im(&self) -> &Operator {
        &self.im
    }

    /// The non-Hermitian matrix re + i im.
    pub fn op(&self) -> Operator {
        self.re
            .add(&self.im.scale(Complex64::i()))
            .expect("parts share a space")
    }

    /// |A|^2 = re^2 + im^2, which equals (A^dag A + A A^dag)/2.
    pub fn modulus_squared(&self) -> Operator {
        self.re
            .pow(2)
            .add(&self.im.pow(2))
            .expect("parts share a space")
    }

    /// Both parts commute with both parts of `other`.
    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        for a in [&self.re, &self.im] {
            for b in [&other.re, &other.im] {
                if !a.commutes_with(b)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn require_cross_commuting(groups: &[&[&ComplexObservable]]) -> Result<()> {
    for (gi, left) in groups.iter().enumerate() {
        for right in groups.iter().skip(gi + 1) {
            for a in *left {
                for b in *right {
                    if !a.commutes_with(b)? {
                        return Err(Error::Input(
                            "observables of different parties must commute".into(),
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Four-settings two-party bound. With T_0 = sum_a A_a B_a^dag and three
/// rotated partners T_k, the combination sum_k |<T_k>|^2 is bounded by
/// <(sum_a |A_a|^2)(sum_b |B_b|^2)>. Quantum mechanics never violates it.
pub fn cfrd_two_party(
    state: &State,
    a: &[ComplexObservable; 4],
    b: &[ComplexObservable; 4],
) -> Result<InequalityReport> {
    let a_refs: Vec<&ComplexObservable> = a.iter().collect();
    let b_refs: Vec<&ComplexObservable> = b.iter().collect();
    require_cross_commuting(&[&a_refs, &b_refs])?;
    let space = a[0].re.space();

    let ops: Vec<Operator> = a.iter().map(ComplexObservable::op).collect();
    let bops: Vec<Operator> = b.iter().map(ComplexObservable::op).collect();
    let dag = |o: &Operator| o.dagger();

    let mut t0 = Operator::zero(space);
    for k in 0..4 {
        t0 = t0.add(&ops[k].mul(&dag(&bops[k]))?)?;
    }
    // the three quaternionic partners of t0
    let partner = |k: usize, l: usize, m: usize| -> Result<Operator> {
        ops[0]
            .mul(&bops[k])?
            .sub(&ops[k].mul(&bops[0])?)?
            .add(&dag(&ops[l]).mul(&dag(&bops[m]))?)?
            .sub(&dag(&ops[m]).mul(&dag(&bops[l]))?)
    };
    let terms = [t0, partner(1, 2, 3)?, partner(2, 3, 1)?, partner(3, 1, 2)?];

    let mut lhs = 0.0;
    let mut means = Vec::new();
    for t in &terms {
        let e = expect(state, t)?;
        means.push(e);
        lhs += e.norm_sqr();
    }
    let mut a_mod = Operator::zero(space);
    let mut b_mod = Operator::zero(space);
    for k in 0..4 {
        a_mod = a_mod.add(&a[k].modulus_squared())?;
        b_mod = b_mod.add(&b[k].modulus_squared())?;
    }
    let rhs = expect_real(state, &a_mod.mul(&b_mod)?)?;
    let mut report = InequalityReport::new("cfrd-two-party", lhs, rhs);
    for (k, e) in means.iter().enumerate() {
        report = report
            .detail(&format!("term_{k}_re"), e.re)
            .detail(&format!("term_{k}_im"), e.im);
    }
    Ok(report)
}

/// Random sweep over the two-party bound: pure states and Hermitian pairs
/// on local dimensions 2..=4. Reports the worst-margin instance.
pub fn cfrd_two_party_sweep(trials: usize, seed: u64) -> Result<InequalityReport> {
    let mut rng = crate::seeded_rng(seed);
    let mut worst: Option<InequalityReport> = None;
    for trial in 0..trials {
        use rand::Rng;
        let da = rng.gen_range(2..=4usize);
        let db = rng.gen_range(2..=4usize);
        let space = HilbertSpace::new(&[da, db])?;
        let state = State::random_pure(space.clone(), &mut rng);
        let mut make = |slot: usize| -> Result<[ComplexObservable; 4]> {
            let local = HilbertSpace::new(&[if slot == 0 { da } else { db }])?;
            let mut out = Vec::with_capacity(4);
            for _ in 0..4 {
                // a commuting Hermitian pair: h and a real polynomial in h
                let h = random_hermitian(&local, &mut rng);
                let g = h.pow(2).scale_re(crate::hilbert::normal(&mut rng)).add(
                    &Operator::identity(&local).scale_re(crate::hilbert::normal(&mut rng)),
                )?;
                out.push(ComplexObservable::new(
                    embed(&h, slot, &space)?,
                    embed(&g, slot, &space)?,
                )?);
            }
            Ok(out.try_into().expect("four entries"))
        };
        let a = make(0)?;
        let b = make(1)?;
        let r = cfrd_two_party(&state, &a, &b)?;
        let replace = match &worst {
            Some(w) => r.margin < w.margin,
            None => true,
        };
        if replace {
            worst = Some(r.param("trial", trial).param("dims", vec![da, db]));
        }
    }
    let report = worst.ok_or_else(|| Error::Input("sweep needs at least one trial".into()))?;
    Ok(report
        .with_seed(seed)
        .param("trials", trials)
        .param("kind", "two-party-sweep"))
}

/// n-qubit GHZ state (|0..0> + |1..1>)/sqrt(2).
pub fn ghz_state(n: usize) -> Result<State> {
    let space = HilbertSpace::qubits(n)?;
    let d = space.total_dim();
    let mut v = nalgebra::DVector::zeros(d);
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[0] = amp;
    v[d - 1] = amp;
    State::pure(space, v)
}

/// The pair (sigma_1, sigma_2) on one site, combining to the local raising
/// combination sigma_1 + i sigma_2.
pub fn raising_pair(slot: usize, space: &HilbertSpace) -> Result<ComplexObservable> {
    ComplexObservable::new(
        embed(&pauli(1)?, slot, space)?,
        embed(&pauli(2)?, slot, space)?,
    )
}

fn product_expectation(state: &State, obs: &[&ComplexObservable]) -> Result<Complex64> {
    let mut op = Operator::identity(obs[0].re.space());
    for o in obs {
        op = op.mul(&o.op())?;
    }
    expect(state, &op)
}

/// Tripartite bound |<ABC>|^2 <= <|AB|^2><|C|^2>.
pub fn tripartite_cfrd(
    state: &State,
    a: &ComplexObservable,
    b: &ComplexObservable,
    c: &ComplexObservable,
) -> Result<InequalityReport> {
    require_cross_commuting(&[&[a], &[b], &[c]])?;
    let mean = product_expectation(state, &[a, b, c])?;
    let lhs = mean.norm_sqr();
    let ab = expect_real(state, &a.modulus_squared().mul(&b.modulus_squared())?)?;
    let cc = expect_real(state, &c.modulus_squared())?;
    Ok(InequalityReport::new("cfrd-tripartite", lhs, ab * cc)
        .detail("mean_re", mean.re)
        .detail("mean_im", mean.im)
        .detail("mod_ab", ab)
        .detail("mod_c", cc))
}

/// Quadripartite bound |<ABCD>|^2 <= <|AB|^2><|CD|^2> on an explicit state.
pub fn quadripartite_cfrd_state(
    state: &State,
    a: &ComplexObservable,
    b: &ComplexObservable,
    c: &ComplexObservable,
    d: &ComplexObservable,
) -> Result<InequalityReport> {
    require_cross_commuting(&[&[a], &[b], &[c], &[d]])?;
    let mean = product_expectation(state, &[a, b, c, d])?;
    let lhs = mean.norm_sqr();
    let ab = expect_real(state, &a.modulus_squared().mul(&b.modulus_squared())?)?;
    let cd = expect_real(state, &c.modulus_squared().mul(&d.modulus_squared())?)?;
    Ok(InequalityReport::new("cfrd-quadripartite", lhs, ab * cd)
        .detail("mean_re", mean.re)
        .detail("mean_im", mean.im)
        .detail("mod_ab", ab)
        .detail("mod_cd", cd))
}

/// GHZ_3 with raising combinations on every site: 16 against 8.
pub fn ghz_tripartite_cfrd() -> Result<InequalityReport> {
    let state = ghz_state(3)?;
    let space = state.space().clone();
    tripartite_cfrd(
        &state,
        &raising_pair(0, &space)?,
        &raising_pair(1, &space)?,
        &raising_pair(2, &space)?,
    )
}

/// GHZ_4 with raising combinations on every site: 64 against 16.
pub fn ghz_quadripartite_cfrd() -> Result<InequalityReport> {
    let state = ghz_state(4)?;
    let space = state.space().clone();
    quadripartite_cfrd_state(
        &state,
        &raising_pair(0, &space)?,
        &raising_pair(1, &space)?,
        &raising_pair(2, &space)?,
        &raising_pair(3, &space)?,
    )
}

/// Oscillator amplitudes shared by the four-mode checks: normalizes `z`
/// and reports whether an adjustment was needed.
fn normalized(z: &[f64]) -> Result<(Vec<f64>, bool)> {
    if z.is_empty() {
        return Err(Error::Input("amplitude vector must be nonempty".into()));
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("amplitude vector must be finite".into()));
    }
    let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::Input("amplitude vector must be nonzero".into()));
    }
    let adjusted = (norm - 1.0).abs() > 1e-12;
    Ok((z.iter().map(|x| x / norm).collect(), adjusted))
}

/// Tripartite oscillator bound in closed form:
/// (sum_n z_n z_{n-1} n^{3/2})^2 <= (sum z_n^2 (n+1/2)^2)(sum z_n^2 (n+1/2)).
/// Holds for every nonnegative amplitude vector.
pub fn oscillator_tripartite_bound(z: &[f64]) -> Result<InequalityReport> {
    if z.iter().any(|&x| x < 0.0) {
        return Err(Error::Input(
            "tripartite oscillator amplitudes must be nonnegative".into(),
        ));
    }
    let (z, adjusted) = normalized(z)?;
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut third = 0.0;
    for (n, &zn) in z.iter().enumerate() {
        let nf = n as f64;
        if n > 0 {
            mean += zn * z[n - 1] * nf.powf(1.5);
        }
        second += zn * zn * (nf + 0.5);
        third += zn * zn * (nf + 0.5).powi(2);
    }
    Ok(
        InequalityReport::new("oscillator-tripartite", mean * mean, third * second)
            .detail("mean", mean)
            .detail("mod_ab", third)
            .detail("mod_c", second)
            .detail("normalized", adjusted)
            .param("cutoff", z.len() - 1),
    )
}

/// Apply the per-mode lowering operator to a four-mode amplitude vector
/// indexed as n0*d^3 + n1*d^2 + n2*d + n3.
fn lower_mode(v: &[f64], mode: usize, d: usize) -> Vec<f64> {
    let stride = d.pow(3 - mode as u32);
    let mut out = vec![0.0; v.len()];
    for (idx, &x) in v.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let n = idx / stride % d;
        if n > 0 {
            out[idx - stride] += (n as f64).sqrt() * x;
        }
    }
    out
}

/// Quadripartite bound on the correlated four-mode oscillator state
/// sum_n z_n |nnnn>, with lowering combinations on every mode. The two
/// sides are computed in closed form and cross-checked against a direct
/// operator evaluation on the four-mode amplitude vector. By symmetry the
/// report compares <ABCD> against <|AB|^2>, so the margin equals the
/// quadratic form z^T M z of the tridiagonal moment matrix.
pub fn quadripartite_cfrd_fock(z: &[f64]) -> Result<InequalityReport> {
    let (z, adjusted) = normalized(z)?;
    let cutoff = z.len() - 1;

    let mut mean = 0.0;
    let mut mod_ab = 0.0;
    for (n, &zn) in z.iter().enumerate() {
        let nf = n as f64;
        if n > 0 {
            mean += zn * z[n - 1] * nf * nf;
        }
        mod_ab += zn * zn * (nf + 0.5).powi(2);
    }

    // independent route: explicit four-mode vector with one guard level so
    // raising inside |A|^2 = n + 1/2 never clips
    let d = cutoff + 2;
    let len = d.pow(4);
    let mut psi = vec![0.0; len];
    for (n, &zn) in z.iter().enumerate() {
        psi[n * d.pow(3) + n * d.pow(2) + n * d + n] = zn;
    }
    let mut lowered = psi.clone();
    for mode in 0..4 {
        lowered = lower_mode(&lowered, mode, d);
    }
    let mean_op: f64 = psi.iter().zip(&lowered).map(|(a, b)| a * b).sum();
    let mut mod_ab_op = 0.0;
    for (idx, &x) in psi.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let n0 = idx / d.pow(3) % d;
        let n1 = idx / d.pow(2) % d;
        mod_ab_op += x * x * (n0 as f64 + 0.5) * (n1 as f64 + 0.5);
    }
    if (mean - mean_op).abs() > 1e-12 || (mod_ab - mod_ab_op).abs() > 1e-12 {
        return Err(Error::Input(format!(
            "closed-form and operator routes disagree ({:.3e}, {:.3e})",
            (mean - mean_op).abs(),
            (mod_ab - mod_ab_op).abs()
        )));
    }

    Ok(InequalityReport::new("cfrd-quadripartite-fock", mean, mod_ab)
        .detail("mean", mean)
        .detail("mean_operator", mean_op)
        .detail("mod_ab", mod_ab)
        .detail("mod_ab_operator", mod_ab_op)
        .detail("normalized", adjusted)
        .param("cutoff", cutoff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn two_party_reduces_to_the_planar_form() {
        // only the first complex observable per party nonzero: the bound
        // collapses to <A1 B1 - A2 B2>^2 + <A1 B2 + A2 B1>^2 <=
        // <(A1^2 + A2^2)(B1^2 + B2^2)>
        let mut rng = crate::test_rng(301);
        let space = HilbertSpace::qubits(2).unwrap();
        for _ in 0..50 {
            let state = State::random_pure(space.clone(), &mut rng);
            let a1 = embed(&pauli(1).unwrap(), 0, &space).unwrap();
            let a2 = embed(&pauli(2).unwrap(), 0, &space).unwrap();
            let b1 = embed(&pauli(1).unwrap(), 1, &space).unwrap();
            let b2 = embed(&pauli(2).unwrap(), 1, &space).unwrap();
            let zero = ComplexObservable::zero(&space);
            let a = [
                ComplexObservable::new(a1.clone(), a2.clone()).unwrap(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
            ];
            // flip the sign of the imaginary part so the first term is
            // <A B> rather than <A B^dag>
            let b = [
                ComplexObservable::new(b1.clone(), b2.scale_re(-1.0)).unwrap(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
            ];
            let r = cfrd_two_party(&state, &a, &b).unwrap();
            let e = |op: &Operator| expect_real(&state, op).unwrap();
            let t1 = e(&a1.mul(&b1).unwrap()) - e(&a2.mul(&b2).unwrap());
            let t2 = e(&a1.mul(&b2).unwrap()) + e(&a2.mul(&b1).unwrap());
            let rhs = e(&a1
                .pow(2)
                .add(&a2.pow(2))
                .unwrap()
                .mul(&b1.pow(2).add(&b2.pow(2)).unwrap())
                .unwrap());
            assert_abs_diff_eq!(r.lhs, t1 * t1 + t2 * t2, epsilon = 1e-10);
            assert_abs_diff_eq!(r.rhs, rhs, epsilon = 1e-10);
            assert!(r.margin >= -1e-9);
        }
    }

    #[test]
    fn two_party_sweep_never_violates() {
        let r = cfrd_two_party_sweep(100, 424242).unwrap();
        assert!(r.margin >= -1e-9, "worst margin {}", r.margin);
        assert!(!r.violated);
    }

    #[test]
    fn noncommuting_parties_rejected() {
        let space = HilbertSpace::qubits(1).unwrap();
        let state = State::basis(space.clone(), 0).unwrap();
        let x = ComplexObservable::new(pauli(1).unwrap(), Operator::zero(&space)).unwrap();
        let z = ComplexObservable::new(pauli(3).unwrap(), Operator::zero(&space)).unwrap();
        let zero = ComplexObservable::zero(&space);
        let a = [x, zero.clone(), zero.clone(), zero.clone()];
        let b = [z, zero.clone(), zero.clone(), zero];
        assert!(cfrd_two_party(&state, &a, &b).is_err());
    }

    #[test]
    fn ghz_three_sites_violates() {
        let r = ghz_tripartite_cfrd().unwrap();
        assert_abs_diff_eq!(r.lhs, 16.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.rhs, 8.0, epsilon = 1e-10);
        assert!(r.violated);
    }

    #[test]
    fn ghz_four_sites_violates() {
        let r = ghz_quadripartite_cfrd().unwrap();
        assert_abs_diff_eq!(r.lhs, 64.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.rhs, 16.0, epsilon = 1e-10);
        assert!(r.violated);
    }

    #[test]
    fn oscillator_tripartite_never_violated() {
        let mut rng = crate::test_rng(17);
        for _ in 0..10_000 {
            let len = rng.gen_range(1..=8usize);
            let z: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
            if z.iter().all(|&x| x == 0.0) {
                continue;
            }
            let r = oscillator_tripartite_bound(&z).unwrap();
            assert!(r.margin >= -1e-9, "margin {}", r.margin);
        }
    }

    #[test]
    fn oscillator_tripartite_rejects_negative_amplitudes() {
        assert!(oscillator_tripartite_bound(&[0.5, -0.5]).is_err());
    }

    #[test]
    fn fock_ground_state_is_safe() {
        let r = quadripartite_cfrd_fock(&[1.0]).unwrap();
        assert_abs_diff_eq!(r.lhs, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.rhs, 0.25, epsilon = 1e-14);
        assert!(!r.violated);
    }

    #[test]
    fn fock_margin_equals_the_quadratic_form() {
        let mut rng = crate::test_rng(23);
        for _ in 0..100 {
            let len = rng.gen_range(1..=12usize);
            let mut z: Vec<f64> = (0..len)
                .map(|_| crate::hilbert::normal(&mut rng))
                .collect();
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            for x in &mut z {
                *x /= norm;
            }
            let r = quadripartite_cfrd_fock(&z).unwrap();
            let m = crate::catalog::m_matrix(len - 1);
            let zv = nalgebra::DVector::from_vec(z.clone());
            let quad = (zv.transpose() * &m * &zv)[(0, 0)];
            assert_abs_diff_eq!(r.margin, quad, epsilon = 1e-12);
        }
    }

    #[test]
    fn fock_normalization_is_flagged() {
        let r = quadripartite_cfrd_fock(&[2.0, 1.0]).unwrap();
        assert!(r.details["normalized"].as_bool().unwrap());
    }
}
