//! Symmetrized quantum moments of labeled observable sets and analysis of
//! the resulting correlation matrix (positivity, kernel).

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    anticommutator, expect_real, sym_product, HilbertSpace, Operator, State, ALGEBRA_TOL,
};

/// Default absolute kernel tolerance, applied after scaling the correlation
/// matrix to unit maximum diagonal.
pub const KERNEL_TOL: f64 = 1e-9;

/// (observer, setting, observable) tag of a measured quantity.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Label {
    pub observer: u8,
    pub setting: u16,
    pub index: u16,
}

impl Label {
    pub fn new(observer: u8, setting: u16, index: u16) -> Self {
        Self {
            observer,
            setting,
            index,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let obs = (b'A' + self.observer % 26) as char;
        write!(f, "{}{}.{}", obs, self.setting, self.index)
    }
}

/// Labeled Hermitian observables on a shared space.
///
/// Construction rejects non-Hermitian operators, duplicate labels, and any
/// commutation violation between same-observer same-setting pairs or
/// different-observer pairs.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    space: HilbertSpace,
    entries: Vec<(Label, Operator)>,
}

impl ObservableSet {
    pub fn new(space: HilbertSpace, entries: Vec<(Label, Operator)>) -> Result<Self> {
        for (label, op) in &entries {
            if op.space() != &space {
                return Err(Error::SpaceMismatch);
            }
            op.check_hermitian()
                .map_err(|_| Error::NotHermitian {
                    residual: op.hermiticity_residual(),
                })?;
            if entries.iter().filter(|(l, _)| l == label).count() > 1 {
                return Err(Error::DuplicateLabel(*label));
            }
        }
        let set = Self { space, entries };
        for i in 0..set.entries.len() {
            for j in (i + 1)..set.entries.len() {
                let (la, a) = &set.entries[i];
                let (lb, b) = &set.entries[j];
                let must_commute = (la.observer == lb.observer && la.setting == lb.setting)
                    || la.observer != lb.observer;
                if must_commute && !a.commutes_with(b)? {
                    let resid = crate::hilbert::commutator(a, b)?.max_abs();
                    return Err(Error::CommutationViolation(*la, *lb, resid));
                }
            }
        }
        Ok(set)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn labels(&self) -> Vec<Label> {
        self.entries.iter().map(|(l, _)| *l).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn operator(&self, label: &Label) -> Result<&Operator> {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, op)| op)
            .ok_or(Error::UnknownLabel(*label))
    }

    /// Symmetric boolean relation: true when the operators commute within
    /// the algebra tolerance.
    pub fn commutation_graph(&self) -> Vec<Vec<bool>> {
        let n = self.entries.len();
        let mut g = vec![vec![true; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = self.entries[i]
                    .1
                    .commutes_with(&self.entries[j].1)
                    .unwrap_or(false);
                g[i][j] = c;
                g[j][i] = c;
            }
        }
        g
    }

    /// A tuple is measurable when its operators mutually commute and every
    /// observer contributes at most one setting.
    pub fn is_measurable(&self, labels: &[Label]) -> Result<bool> {
        for (k, a) in labels.iter().enumerate() {
            for b in labels.iter().skip(k + 1) {
                if a.observer == b.observer && a.setting != b.setting {
                    return Ok(false);
                }
                if !self.operator(a)?.commutes_with(self.operator(b)?)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Mean-subtracted operators X - <X> 1, in entry order.
    pub fn centered(&self, state: &State) -> Result<Vec<(Label, Operator)>> {
        let id = Operator::identity(&self.space);
        self.entries
            .iter()
            .map(|(l, op)| {
                let mean = expect_real(state, op)?;
                Ok((*l, op.sub(&id.scale_re(mean))?))
            })
            .collect()
    }
}

/// Which symmetrization rule produced a third-order table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    FullSymmetrization,
    KernelOrdered,
}

/// Symmetric table of moments up to fourth order, keyed by sorted label
/// tuples.
#[derive(Debug, Clone)]
pub struct MomentTensor {
    pub order: usize,
    pub convention: Convention,
    pub labels: Vec<Label>,
    entries: BTreeMap<Vec<Label>, f64>,
    pub mean_subtracted: bool,
}

impl MomentTensor {
    pub fn new(
        order: usize,
        convention: Convention,
        labels: Vec<Label>,
        mean_subtracted: bool,
    ) -> Self {
        Self {
            order,
            convention,
            labels,
            entries: BTreeMap::new(),
            mean_subtracted,
        }
    }

    pub fn insert(&mut self, mut key: Vec<Label>, value: f64) {
        assert_eq!(key.len(), self.order);
        key.sort();
        self.entries.insert(key, value);
    }

    pub fn get(&self, key: &[Label]) -> Option<f64> {
        let mut k = key.to_vec();
        k.sort();
        self.entries.get(&k).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<Label>, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    /// Order-2 table viewed as a symmetric matrix in `labels` order.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.order, 2);
        let n = self.labels.len();
        DMatrix::from_fn(n, n, |i, j| {
            self.get(&[self.labels[i], self.labels[j]]).unwrap_or(0.0)
        })
    }

    pub fn from_matrix(
        labels: Vec<Label>,
        mat: &DMatrix<f64>,
        mean_subtracted: bool,
    ) -> Self {
        let mut t = Self::new(2, Convention::FullSymmetrization, labels.clone(), mean_subtracted);
        for i in 0..labels.len() {
            for j in i..labels.len() {
                t.insert(vec![labels[i], labels[j]], 0.5 * (mat[(i, j)] + mat[(j, i)]));
            }
        }
        t
    }
}

#[derive(Serialize, Deserialize)]
struct MomentEntryJson {
    labels: Vec<Label>,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct MomentTensorJson {
    order: usize,
    convention: Convention,
    entries: Vec<MomentEntryJson>,
}

impl Serialize for MomentTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MomentTensorJson {
            order: self.order,
            convention: self.convention,
            entries: self
                .entries
                .iter()
                .map(|(k, &v)| MomentEntryJson {
                    labels: k.clone(),
                    value: v,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MomentTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MomentTensorJson::deserialize(d)?;
        let mut labels: Vec<Label> = raw
            .entries
            .iter()
            .flat_map(|e| e.labels.iter().copied())
            .collect();
        labels.sort();
        labels.dedup();
        let mut t = MomentTensor::new(raw.order, raw.convention, labels, true);
        for e in raw.entries {
            t.insert(e.labels, e.value);
        }
        Ok(t)
    }
}

/// C_ij = Tr rho {X_i, X_j}/2 with means subtracted eagerly.
pub fn correlation_matrix(state: &State, obs: &ObservableSet) -> Result<MomentTensor> {
    let centered = obs.centered(state)?;
    let mut t = MomentTensor::new(
        2,
        Convention::FullSymmetrization,
        obs.labels(),
        true,
    );
    for (i, (la, a)) in centered.iter().enumerate() {
        for (lb, b) in centered.iter().skip(i) {
            let val = expect_real(state, &anticommutator(a, b)?.scale_re(0.5))?;
            t.insert(vec![*la, *lb], val);
        }
    }
    Ok(t)
}

/// Symmetrized third moments of the mean-subtracted observables.
///
/// The full-symmetrization convention averages the operator product over all
/// six orderings. The kernel-ordered convention takes a designated subset of
/// kernel variables V (the rest being Y) and applies the split rules
/// <YYY> and <VVV> fully symmetrized, <VYY> = Tr rho {V,{Y,Y'}}/4,
/// <VVY> = Tr rho (V Y V' + V' Y V)/2.
pub fn third_moments(
    state: &State,
    obs: &ObservableSet,
    convention: Convention,
    kernel_vars: Option<&[Label]>,
) -> Result<MomentTensor> {
    if convention == Convention::KernelOrdered && kernel_vars.is_none() {
        return Err(Error::MissingKernelVariables);
    }
    let centered = obs.centered(state)?;
    let labels = obs.labels();
    let n = labels.len();
    let mut t = MomentTensor::new(3, convention, labels.clone(), true);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let trio = [&centered[i], &centered[j], &centered[k]];
                let value = match convention {
                    Convention::FullSymmetrization => full_sym3(state, &trio)?,
                    Convention::KernelOrdered => {
                        kernel_ordered3(state, &trio, kernel_vars.unwrap())?
                    }
                };
                t.insert(vec![labels[i], labels[j], labels[k]], value);
            }
        }
    }
    Ok(t)
}

fn full_sym3(state: &State, trio: &[&(Label, Operator); 3]) -> Result<f64> {
    let s = sym_product(&[&trio[0].1, &trio[1].1, &trio[2].1])?;
    expect_real(state, &s)
}

fn kernel_ordered3(
    state: &State,
    trio: &[&(Label, Operator); 3],
    kernel_vars: &[Label],
) -> Result<f64> {
    let mut vs: Vec<&Operator> = Vec::new();
    let mut ys: Vec<&Operator> = Vec::new();
    for (label, op) in trio.iter() {
        if kernel_vars.contains(label) {
            vs.push(op);
        } else {
            ys.push(op);
        }
    }
    match vs.len() {
        0 | 3 => full_sym3(state, trio),
        1 => {
            let inner = anticommutator(ys[0], ys[1])?;
            let outer = anticommutator(vs[0], &inner)?;
            expect_real(state, &outer.scale_re(0.25))
        }
        2 => {
            let a = vs[0].mul(ys[0])?.mul(vs[1])?;
            let b = vs[1].mul(ys[0])?.mul(vs[0])?;
            expect_real(state, &a.add(&b)?.scale_re(0.5))
        }
        _ => unreachable!(),
    }
}

/// Tr rho op^power for a Hermitian operator.
pub fn fourth_moment(state: &State, op: &Operator, power: usize) -> Result<f64> {
    assert!(power == 2 || power == 4, "power must be 2 or 4");
    op.check_hermitian()?;
    expect_real(state, &op.pow(power))
}

/// Ascending eigenvalues and PSD flag of an order-2 tensor.
pub fn psd_check(c: &MomentTensor, tol: f64) -> Result<(Vec<f64>, bool)> {
    let mat = c.as_matrix();
    let scale = mat.amax().max(1.0);
    if (&mat - mat.transpose()).amax() > ALGEBRA_TOL * scale {
        return Err(Error::NotSymmetric);
    }
    let mut eigs: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    let is_psd = eigs.first().is_none_or(|&min| min >= -tol);
    Ok((eigs, is_psd))
}

/// Orthonormal basis of the near-null eigenspace (|eigenvalue| <= tol after
/// scaling to unit max diagonal). Errors on an eigenvalue below -tol.
pub fn kernel_basis(c: &MomentTensor, tol: f64) -> Result<Vec<DVector<f64>>> {
    let mat = c.as_matrix();
    let scale = mat.diagonal().amax().max(f64::MIN_POSITIVE);
    let scaled = &mat / scale;
    let eig = scaled.symmetric_eigen();
    let mut out = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -tol {
            return Err(Error::NotPsd(lambda * scale));
        }
        if lambda.abs() <= tol {
            out.push(eig.eigenvectors.column(k).into_owned());
        }
    }
    Ok(out)
}
