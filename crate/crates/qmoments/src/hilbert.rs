//! Finite-dimensional operator algebra on tensor-product Hilbert spaces.
//!
//! Dense complex matrices throughout. Qubit factors use the standard
//! computational basis with |+> at index 0, so the spin observables come out
//! as the standard Pauli matrices; truncated Fock factors span |0>..|N>.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Absolute tolerance (relative to the largest entry) for Hermiticity and
/// commutation checks. All constructions here are exact in exact arithmetic.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Cap on the total dimension of general dense operators.
pub const MAX_TOTAL_DIM: usize = 4096;

/// A tensor product of finite-dimensional factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
    total_dim: usize,
}

impl HilbertSpace {
    pub fn new(factor_dims: &[usize]) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidSpace("no factors".into()));
        }
        if let Some(&d) = factor_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!("factor dimension {d} < 2")));
        }
        let total_dim = factor_dims.iter().product();
        if total_dim > MAX_TOTAL_DIM {
            return Err(Error::InvalidSpace(format!(
                "total dimension {total_dim} exceeds cap {MAX_TOTAL_DIM}"
            )));
        }
        Ok(Self {
            factor_dims: factor_dims.to_vec(),
            total_dim,
        })
    }

    /// n qubits.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(&vec![2; n])
    }

    /// Single truncated Fock factor spanning |0>..|cutoff|.
    pub fn fock(cutoff: usize) -> Result<Self> {
        Self::new(&[cutoff + 1])
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }
}

/// Dense complex operator tied to a Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    mat: DMatrix<Complex64>,
}

impl Operator {
    pub fn new(space: HilbertSpace, mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != space.total_dim() || mat.ncols() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                got: mat.nrows(),
            });
        }
        Ok(Self { space, mat })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        Self {
            mat: DMatrix::identity(space.total_dim(), space.total_dim()),
            space: space.clone(),
        }
    }

    pub fn zero(space: &HilbertSpace) -> Self {
        Self {
            mat: DMatrix::zeros(space.total_dim(), space.total_dim()),
            space: space.clone(),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            mat: self.mat.adjoint(),
        }
    }

    /// Largest |entry - conjugate-transpose entry|.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).camax()
    }

    pub fn is_hermitian(&self) -> bool {
        let scale = self.mat.camax().max(1.0);
        self.hermiticity_residual() <= ALGEBRA_TOL * scale
    }

    pub fn check_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                residual: self.hermiticity_residual(),
            })
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.camax()
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            mat: &self.mat - &other.mat,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            space: self.space.clone(),
            mat: &self.mat * s,
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut out = Self::identity(&self.space);
        for _ in 0..n {
            out.mat = &out.mat * &self.mat;
        }
        out
    }

    /// True when [self, other] vanishes within `ALGEBRA_TOL` relative to the
    /// operand scale.
    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        let c = commutator(self, other)?;
        let scale = (self.max_abs() * other.max_abs()).max(1.0);
        Ok(c.max_abs() <= ALGEBRA_TOL * scale)
    }
}

/// Standard Pauli matrix, axis in {1, 2, 3}.
pub fn pauli(axis: usize) -> Result<Operator> {
    let space = HilbertSpace::qubits(1)?;
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mat = match axis {
        1 => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        2 => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        _ => return Err(Error::PauliAxis(axis)),
    };
    Operator::new(space, mat)
}

/// Annihilation operator on the truncated Fock space |0>..|cutoff|:
/// entries[n-1][n] = sqrt(n).
pub fn ladder(cutoff: usize) -> Result<Operator> {
    let space = HilbertSpace::fock(cutoff)?;
    let dim = cutoff + 1;
    let mut mat = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        mat[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(space, mat)
}

/// Kronecker product a (x) b on the concatenated factor list.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let mut dims = a.space.factor_dims().to_vec();
    dims.extend_from_slice(b.space.factor_dims());
    let space = HilbertSpace::new(&dims)?;
    Operator::new(space, a.mat.kronecker(&b.mat))
}

/// Embed a single-factor operator into `slot` of `space`, identity elsewhere.
pub fn embed(op: &Operator, slot: usize, space: &HilbertSpace) -> Result<Operator> {
    let dims = space.factor_dims();
    if slot >= dims.len() {
        return Err(Error::InvalidSpace(format!("slot {slot} out of range")));
    }
    if op.space.total_dim() != dims[slot] {
        return Err(Error::DimensionMismatch {
            expected: dims[slot],
            got: op.space.total_dim(),
        });
    }
    let mut mat = DMatrix::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == slot {
            op.mat.clone()
        } else {
            DMatrix::identity(d, d)
        };
        mat = mat.kronecker(&factor);
    }
    Operator::new(space.clone(), mat)
}

/// [a, b] = ab - ba.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.mul(b)?.sub(&b.mul(a)?)
}

/// {a, b} = ab + ba.
pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.mul(b)?.add(&b.mul(a)?)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for n in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Average of the operator product over all orderings; Hermitian whenever
/// every input is. At most 4 factors.
pub fn sym_product(ops: &[&Operator]) -> Result<Operator> {
    let k = ops.len();
    assert!((1..=4).contains(&k), "sym_product takes 1..=4 operators");
    let space = ops[0].space.clone();
    for op in ops.iter().skip(1) {
        ops[0].same_space(op)?;
    }
    let mut acc = Operator::zero(&space);
    let perms = permutations(k);
    for perm in &perms {
        let mut prod = Operator::identity(&space);
        for &idx in perm {
            prod = prod.mul(ops[idx])?;
        }
        acc = acc.add(&prod)?;
    }
    Ok(acc.scale_re(1.0 / perms.len() as f64))
}

/// Pure vector or density matrix on a Hilbert space.
#[derive(Debug, Clone)]
pub struct State {
    space: HilbertSpace,
    repr: StateRepr,
}

#[derive(Debug, Clone)]
pub enum StateRepr {
    Pure(DVector<Complex64>),
    Density(DMatrix<Complex64>),
}

impl State {
    pub fn pure(space: HilbertSpace, vec: DVector<Complex64>) -> Result<Self> {
        if vec.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                got: vec.len(),
            });
        }
        let norm = vec.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("norm {norm} != 1")));
        }
        Ok(Self {
            space,
            repr: StateRepr::Pure(vec),
        })
    }

    pub fn density(space: HilbertSpace, mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != space.total_dim() || mat.ncols() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                got: mat.nrows(),
            });
        }
        let herm = (&mat - mat.adjoint()).camax();
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (residual {herm:.3e})"
            )));
        }
        let tr: Complex64 = mat.diagonal().sum();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let eigs = hermitian_eigenvalues(&mat);
        if let Some(min) = eigs.iter().copied().reduce(f64::min) {
            if min < -1e-10 {
                return Err(Error::InvalidState(format!("eigenvalue {min:.3e} < 0")));
            }
        }
        Ok(Self {
            space,
            repr: StateRepr::Density(mat),
        })
    }

    /// Basis vector |index>.
    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let mut v = DVector::zeros(space.total_dim());
        v[index] = Complex64::new(1.0, 0.0);
        Self::pure(space, v)
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        let mat =
            DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0));
        Self {
            space,
            repr: StateRepr::Density(mat),
        }
    }

    /// Haar-ish random pure state: complex normal amplitudes, normalized.
    pub fn random_pure<R: Rng>(space: HilbertSpace, rng: &mut R) -> Self {
        let d = space.total_dim();
        let mut v = DVector::zeros(d);
        for k in 0..d {
            v[k] = Complex64::new(normal(rng), normal(rng));
        }
        let n = v.norm();
        v /= Complex64::new(n, 0.0);
        Self {
            space,
            repr: StateRepr::Pure(v),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn repr(&self) -> &StateRepr {
        &self.repr
    }
}

/// Standard normal via Box-Muller.
pub(crate) fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random Hermitian operator with standard-normal Gaussian ensemble entries.
pub fn random_hermitian<R: Rng>(space: &HilbertSpace, rng: &mut R) -> Operator {
    let d = space.total_dim();
    let g = DMatrix::from_fn(d, d, |_, _| Complex64::new(normal(rng), normal(rng)));
    let mat = (&g + g.adjoint()).scale(0.5);
    Operator {
        space: space.clone(),
        mat,
    }
}

/// Eigendecomposition of a Hermitian matrix via cyclic Jacobi rotations.
/// Returns ascending eigenvalues and a unitary whose columns are the
/// matching orthonormal eigenvectors. Jacobi is slower than QR but stays
/// accurate on matrices with large degenerate eigenspaces.
pub fn hermitian_eigen(mat: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let d = mat.nrows();
    assert_eq!(d, mat.ncols(), "matrix must be square");
    let mut a = mat.clone();
    let mut v: DMatrix<Complex64> = DMatrix::identity(d, d);
    let scale = a.camax().max(f64::MIN_POSITIVE);
    let stop = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                let m = apq.norm();
                off = off.max(m);
                if m <= stop {
                    continue;
                }
                let phase = apq / m;
                let tau = (a[(p, p)].re - a[(q, q)].re) / (2.0 * m);
                let sgn = if tau >= 0.0 { 1.0 } else { -1.0 };
                let t = 1.0 / (tau + sgn * (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // unitary U: U[p][p] = U[q][q] = c, U[p][q] = -s*phase,
                // U[q][p] = s*conj(phase); apply A <- U^H A U, V <- V U
                let sp = phase.scale(s);
                let spc = phase.conj().scale(s);
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk.scale(c) + sp * aqk;
                    a[(q, k)] = aqk.scale(c) - spc * apk;
                }
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp.scale(c) + spc * akq;
                    a[(k, q)] = akq.scale(c) - sp * akp;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp.scale(c) + spc * vkq;
                    v[(k, q)] = vkq.scale(c) - sp * vkp;
                }
                // rotation leaves tiny imaginary residue on the diagonal
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                a[(p, q)] = Complex64::default();
                a[(q, p)] = Complex64::default();
            }
        }
        if off <= stop {
            break;
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = v.select_columns(order.iter());
    (eigenvalues, eigenvectors)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(mat: &DMatrix<Complex64>) -> Vec<f64> {
    hermitian_eigen(mat).0
}

/// Tr rho O (or <psi|O|psi> for pure states).
pub fn expect(state: &State, op: &Operator) -> Result<Complex64> {
    if state.space != op.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(match &state.repr {
        StateRepr::Pure(v) => (v.adjoint() * &op.mat * v)[(0, 0)],
        StateRepr::Density(rho) => (rho * &op.mat).diagonal().sum(),
    })
}

/// Expectation of a Hermitian operator; the imaginary part must vanish.
pub fn expect_real(state: &State, op: &Operator) -> Result<f64> {
    let val = expect(state, op)?;
    debug_assert!(val.im.abs() <= 1e-9 * val.re.abs().max(1.0));
    Ok(val.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_matrices_match_convention() {
        let s1 = pauli(1).unwrap();
        assert_eq!(s1.matrix()[(0, 1)], c(1.0, 0.0));
        assert_eq!(s1.matrix()[(1, 0)], c(1.0, 0.0));
        let s3 = pauli(3).unwrap();
        assert_eq!(s3.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(s3.matrix()[(1, 1)], c(-1.0, 0.0));
        assert!(matches!(pauli(0), Err(Error::PauliAxis(0))));
    }

    #[test]
    fn jacobi_eigen_diagonalizes_random_hermitian() {
        let mut rng = crate::seeded_rng(7);
        let space = HilbertSpace::new(&[9]).unwrap();
        let op = random_hermitian(&space, &mut rng);
        let (eigs, v) = hermitian_eigen(op.matrix());
        assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(
            eigs.len(),
            eigs.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        let recon = &v * lam * v.adjoint();
        let scale = op.max_abs();
        assert!((recon - op.matrix()).camax() < 1e-12 * scale);
        let gram = v.adjoint() * &v;
        let id: DMatrix<Complex64> = DMatrix::identity(eigs.len(), eigs.len());
        assert!((gram - id).camax() < 1e-13);
    }

    #[test]
    fn jacobi_eigen_handles_large_degenerate_pauli_strings() {
        // six-qubit X/Z string: two 32-fold degenerate eigenvalues, a case
        // where QR-based dense eigensolvers can lose accuracy
        let space = HilbertSpace::qubits(6).unwrap();
        let mut op = Operator::identity(&space);
        for (slot, axis) in [(0, 3), (3, 1), (4, 1)] {
            op = op
                .mul(&embed(&pauli(axis).unwrap(), slot, &space).unwrap())
                .unwrap();
        }
        let op = op.scale_re(1.285);
        let (eigs, v) = hermitian_eigen(op.matrix());
        for (k, &e) in eigs.iter().enumerate() {
            let want = if k < 32 { -1.285 } else { 1.285 };
            assert_abs_diff_eq!(e, want, epsilon = 1e-12);
        }
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(
            64,
            eigs.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        let recon = &v * lam * v.adjoint();
        assert!((recon - op.matrix()).camax() < 1e-12);
    }

    #[test]
    fn pauli_anticommutation() {
        for i in 1..=3 {
            for j in 1..=3 {
                let a = anticommutator(&pauli(i).unwrap(), &pauli(j).unwrap()).unwrap();
                let expected = if i == j { 2.0 } else { 0.0 };
                let id = Operator::identity(a.space()).scale_re(expected);
                assert!(a.sub(&id).unwrap().max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ladder_truncation_commutator() {
        let a = ladder(2).unwrap();
        assert_eq!(a.matrix()[(0, 1)], c(1.0, 0.0));
        assert_abs_diff_eq!(a.matrix()[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);
        // [A, A^dag] = diag(1, 1, -N) on the truncated space
        let comm = commutator(&a, &a.dagger()).unwrap();
        assert_abs_diff_eq!(comm.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(comm.matrix()[(1, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(comm.matrix()[(2, 2)].re, -2.0, epsilon = 1e-15);
    }

    #[test]
    fn number_operator_expectation() {
        let a = ladder(5).unwrap();
        let num = a.dagger().mul(&a).unwrap();
        let state = State::basis(HilbertSpace::fock(5).unwrap(), 3).unwrap();
        assert_abs_diff_eq!(expect_real(&state, &num).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn embed_disjoint_slots_commute() {
        let space = HilbertSpace::qubits(2).unwrap();
        let a = embed(&pauli(1).unwrap(), 0, &space).unwrap();
        let b = embed(&pauli(2).unwrap(), 1, &space).unwrap();
        assert!(commutator(&a, &b).unwrap().max_abs() < 1e-15);
        // tensor/embed homomorphism
        let t = tensor(&pauli(1).unwrap(), &pauli(2).unwrap()).unwrap();
        assert!(a.mul(&b).unwrap().sub(&t).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn embed_identity_is_identity() {
        let space = HilbertSpace::new(&[2, 3]).unwrap();
        let id3 = Operator::identity(&HilbertSpace::new(&[3]).unwrap());
        let e = embed(&id3, 1, &space).unwrap();
        assert!(e.sub(&Operator::identity(&space)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn commutator_self_is_zero() {
        let s3 = pauli(3).unwrap();
        assert_eq!(commutator(&s3, &s3).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dagger_involution_and_antihomomorphism() {
        let mut rng = crate::test_rng(7);
        let space = HilbertSpace::new(&[3]).unwrap();
        let a = random_op(&space, &mut rng);
        let b = random_op(&space, &mut rng);
        assert_eq!(a.dagger().dagger(), a);
        let lhs = a.mul(&b).unwrap().dagger();
        let rhs = b.dagger().mul(&a.dagger()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn sym_product_of_commuting_is_plain_product() {
        let space = HilbertSpace::qubits(2).unwrap();
        let a = embed(&pauli(1).unwrap(), 0, &space).unwrap();
        let b = embed(&pauli(3).unwrap(), 1, &space).unwrap();
        let s = sym_product(&[&a, &b]).unwrap();
        assert!(s.sub(&a.mul(&b).unwrap()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn sym_product_of_anticommuting_pair_is_zero() {
        let s = sym_product(&[&pauli(1).unwrap(), &pauli(2).unwrap()]).unwrap();
        assert!(s.max_abs() < 1e-15);
    }

    #[test]
    fn expect_identity_is_one() {
        let mut rng = crate::test_rng(3);
        let space = HilbertSpace::qubits(2).unwrap();
        let state = State::random_pure(space.clone(), &mut rng);
        let val = expect(&state, &Operator::identity(&space)).unwrap();
        assert_abs_diff_eq!(val.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(val.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn expect_linear_in_op_and_state_mixture() {
        let mut rng = crate::test_rng(11);
        let space = HilbertSpace::new(&[3]).unwrap();
        for _ in 0..50 {
            let a = random_op(&space, &mut rng);
            let b = random_op(&space, &mut rng);
            let s1 = State::random_pure(space.clone(), &mut rng);
            let s2 = State::random_pure(space.clone(), &mut rng);
            let sum = a.add(&b).unwrap();
            let lin = expect(&s1, &a).unwrap() + expect(&s1, &b).unwrap();
            assert!((expect(&s1, &sum).unwrap() - lin).norm() < 1e-12);
            // convex mixture of states
            let p = 0.3;
            let rho = density_of(&s1).scale(p)
                + density_of(&s2).scale(1.0 - p);
            let mixed = State::density(space.clone(), rho).unwrap();
            let want = expect(&s1, &a).unwrap() * p + expect(&s2, &a).unwrap() * (1.0 - p);
            assert!((expect(&mixed, &a).unwrap() - want).norm() < 1e-12);
        }
    }

    fn density_of(s: &State) -> DMatrix<Complex64> {
        match s.repr() {
            StateRepr::Pure(v) => v * v.adjoint(),
            StateRepr::Density(m) => m.clone(),
        }
    }

    fn random_op<R: Rng>(space: &HilbertSpace, rng: &mut R) -> Operator {
        let d = space.total_dim();
        let mat = DMatrix::from_fn(d, d, |_, _| c(normal(rng), normal(rng)));
        Operator::new(space.clone(), mat).unwrap()
    }
}
