//! Noncontextual joint distributions from the commutation graph of up to
//! four observables.
//!
//! Mutually commuting subsets carry an exact quantum joint distribution
//! read off in a common eigenbasis. For each commutation-graph isomorphism
//! class on at most four vertices the full distribution is a product of
//! such clique marginals divided by separator marginals, for example
//! p(AB) p(BC) p(CD) / (p(B) p(C)) for the chain A-B-C-D. Atoms with a
//! vanishing denominator get probability zero. The four-cycle graph admits
//! no such factorization and is rejected.
//!
//! Moments of the model are raw (not mean subtracted).

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{hermitian_eigen, hermitian_eigenvalues, Operator, State, StateRepr};
use crate::moments::{Label, ObservableSet};

/// Gap threshold for clustering eigenvalues into discrete outcomes.
const CLUSTER_TOL: f64 = 1e-8;

/// One support point of the discrete model.
#[derive(Debug, Clone, Serialize)]
pub struct Atom {
    /// Outcome value per observable, in label order.
    pub assignment: Vec<f64>,
    pub probability: f64,
}

/// Discrete factorized distribution over joint outcome assignments.
#[derive(Debug, Clone, Serialize)]
pub struct FactorModel {
    labels: Vec<Label>,
    /// Distinct eigenvalues per observable, ascending.
    outcomes: Vec<Vec<f64>>,
    atoms: Vec<Atom>,
    graph_class: &'static str,
}

struct Template {
    n: usize,
    name: &'static str,
    edges: &'static [(usize, usize)],
    numerator: &'static [&'static [usize]],
    denominator: &'static [&'static [usize]],
    four_cycle: bool,
}

const TEMPLATES: &[Template] = &[
    Template { n: 1, name: "single", edges: &[], numerator: &[&[0]], denominator: &[], four_cycle: false },
    Template { n: 2, name: "independent-pair", edges: &[], numerator: &[&[0], &[1]], denominator: &[], four_cycle: false },
    Template { n: 2, name: "joint-pair", edges: &[(0, 1)], numerator: &[&[0, 1]], denominator: &[], four_cycle: false },
    Template { n: 3, name: "independent-triple", edges: &[], numerator: &[&[0], &[1], &[2]], denominator: &[], four_cycle: false },
    Template { n: 3, name: "edge-plus-single", edges: &[(0, 1)], numerator: &[&[0, 1], &[2]], denominator: &[], four_cycle: false },
    Template { n: 3, name: "path-3", edges: &[(0, 1), (1, 2)], numerator: &[&[0, 1], &[1, 2]], denominator: &[&[1]], four_cycle: false },
    Template { n: 3, name: "triangle", edges: &[(0, 1), (0, 2), (1, 2)], numerator: &[&[0, 1, 2]], denominator: &[], four_cycle: false },
    Template { n: 4, name: "independent-quadruple", edges: &[], numerator: &[&[0], &[1], &[2], &[3]], denominator: &[], four_cycle: false },
    Template { n: 4, name: "edge-plus-singles", edges: &[(0, 1)], numerator: &[&[0, 1], &[2], &[3]], denominator: &[], four_cycle: false },
    Template { n: 4, name: "two-edges", edges: &[(0, 1), (2, 3)], numerator: &[&[0, 1], &[2, 3]], denominator: &[], four_cycle: false },
    Template { n: 4, name: "path-3-plus-single", edges: &[(0, 1), (1, 2)], numerator: &[&[0, 1], &[1, 2], &[3]], denominator: &[&[1]], four_cycle: false },
    Template { n: 4, name: "triangle-plus-single", edges: &[(0, 1), (0, 2), (1, 2)], numerator: &[&[0, 1, 2], &[3]], denominator: &[], four_cycle: false },
    Template { n: 4, name: "path-4", edges: &[(0, 1), (1, 2), (2, 3)], numerator: &[&[0, 1], &[1, 2], &[2, 3]], denominator: &[&[1], &[2]], four_cycle: false },
    Template { n: 4, name: "star", edges: &[(0, 1), (0, 2), (0, 3)], numerator: &[&[0, 1], &[0, 2], &[0, 3]], denominator: &[&[0], &[0]], four_cycle: false },
    Template { n: 4, name: "triangle-pendant", edges: &[(0, 1), (0, 2), (1, 2), (0, 3)], numerator: &[&[0, 1, 2], &[0, 3]], denominator: &[&[0]], four_cycle: false },
    Template { n: 4, name: "four-cycle", edges: &[(0, 1), (1, 2), (2, 3), (0, 3)], numerator: &[], denominator: &[], four_cycle: true },
    Template { n: 4, name: "shared-edge-triangles", edges: &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], numerator: &[&[0, 1, 2], &[1, 2, 3]], denominator: &[&[1, 2]], four_cycle: false },
    Template { n: 4, name: "complete-4", edges: &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], numerator: &[&[0, 1, 2, 3]], denominator: &[], four_cycle: false },
];

/// Build the factorized model for at most four observables.
pub fn factor_model(state: &State, obs: &ObservableSet) -> Result<FactorModel> {
    let labels = obs.labels();
    let n = labels.len();
    if n == 0 || n > 4 {
        return Err(Error::UnsupportedGraph(format!(
            "{n} observables, supported range is 1 to 4"
        )));
    }
    let graph = obs.commutation_graph();
    let (template, vertex_map) = classify(&graph)?;

    let ops: Vec<&Operator> = labels
        .iter()
        .map(|l| obs.operator(l))
        .collect::<Result<_>>()?;
    let outcomes: Vec<Vec<f64>> = ops.iter().map(|op| distinct_eigenvalues(op)).collect();

    // map template-numbered subsets back to actual observable indices
    let remap = |subset: &[usize]| -> Vec<usize> {
        let mut s: Vec<usize> = subset.iter().map(|&t| vertex_map[t]).collect();
        s.sort_unstable();
        s
    };
    let num_subsets: Vec<Vec<usize>> = template.numerator.iter().map(|s| remap(s)).collect();
    let den_subsets: Vec<Vec<usize>> = template.denominator.iter().map(|s| remap(s)).collect();

    let mut marginals: BTreeMap<Vec<usize>, BTreeMap<Vec<usize>, f64>> = BTreeMap::new();
    for subset in num_subsets.iter().chain(den_subsets.iter()) {
        if !marginals.contains_key(subset) {
            let sub_ops: Vec<&Operator> = subset.iter().map(|&k| ops[k]).collect();
            let sub_out: Vec<&[f64]> =
                subset.iter().map(|&k| outcomes[k].as_slice()).collect();
            marginals.insert(subset.clone(), clique_distribution(state, &sub_ops, &sub_out)?);
        }
    }

    let mut atoms = Vec::new();
    for assignment in outcomes
        .iter()
        .map(|vals| 0..vals.len())
        .multi_cartesian_product()
    {
        let eval = |subset: &Vec<usize>| -> f64 {
            let key: Vec<usize> = subset.iter().map(|&k| assignment[k]).collect();
            marginals[subset].get(&key).copied().unwrap_or(0.0)
        };
        let num: f64 = num_subsets.iter().map(eval).product();
        let den: f64 = den_subsets.iter().map(eval).product();
        let p = if den.abs() < 1e-14 || num <= 0.0 {
            0.0
        } else {
            num / den
        };
        if p > 0.0 {
            atoms.push(Atom {
                assignment: assignment
                    .iter()
                    .enumerate()
                    .map(|(k, &o)| outcomes[k][o])
                    .collect(),
                probability: p,
            });
        }
    }
    Ok(FactorModel {
        labels,
        outcomes,
        atoms,
        graph_class: template.name,
    })
}

impl FactorModel {
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn outcomes(&self) -> &[Vec<f64>] {
        &self.outcomes
    }

    pub fn graph_class(&self) -> &'static str {
        self.graph_class
    }

    pub fn total_probability(&self) -> f64 {
        self.atoms.iter().map(|a| a.probability).sum()
    }

    /// Raw moment <X_1 ... X_k> of the model distribution.
    pub fn moment(&self, labels: &[Label]) -> Result<f64> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|m| m == l)
                    .ok_or(Error::UnknownLabel(*l))
            })
            .collect::<Result<_>>()?;
        Ok(self
            .atoms
            .iter()
            .map(|a| {
                a.probability * idx.iter().map(|&k| a.assignment[k]).product::<f64>()
            })
            .sum())
    }
}

/// Find the template isomorphic to the given commutation graph, plus the
/// vertex map template-index -> actual-index.
fn classify(graph: &[Vec<bool>]) -> Result<(&'static Template, Vec<usize>)> {
    let n = graph.len();
    for template in TEMPLATES.iter().filter(|t| t.n == n) {
        for perm in (0..n).permutations(n) {
            // perm[t] = actual vertex assigned to template vertex t
            let matches = (0..n).tuple_combinations().all(|(a, b)| {
                let edge = template.edges.contains(&(a, b)) || template.edges.contains(&(b, a));
                graph[perm[a]][perm[b]] == edge
            });
            if matches {
                if template.four_cycle {
                    return Err(Error::FourCycleGraph);
                }
                return Ok((template, perm));
            }
        }
    }
    Err(Error::UnsupportedGraph(format!(
        "no matching class for {n} vertices"
    )))
}

/// Distinct eigenvalues of a Hermitian operator, ascending, clustered.
fn distinct_eigenvalues(op: &Operator) -> Vec<f64> {
    let eigs = hermitian_eigenvalues(op.matrix());
    let scale = eigs.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
    let mut out: Vec<f64> = Vec::new();
    for e in eigs {
        match out.last() {
            Some(&last) if e - last <= CLUSTER_TOL * scale => {}
            _ => out.push(e),
        }
    }
    out
}

/// Joint distribution of mutually commuting observables: refine a common
/// eigenbasis operator by operator and sum state weights per joint
/// eigenvalue tuple. Keys are outcome indices per observable.
fn clique_distribution(
    state: &State,
    ops: &[&Operator],
    outcomes: &[&[f64]],
) -> Result<BTreeMap<Vec<usize>, f64>> {
    let d = state.space().total_dim();
    let mut basis: DMatrix<Complex64> = DMatrix::identity(d, d);
    // (column indices, outcome indices fixed so far)
    let mut blocks: Vec<(Vec<usize>, Vec<usize>)> = vec![((0..d).collect(), Vec::new())];
    for (op_idx, op) in ops.iter().enumerate() {
        let scale = outcomes[op_idx]
            .iter()
            .fold(1.0f64, |m, &x| m.max(x.abs()));
        let mut next = Vec::new();
        for (cols, outs) in blocks {
            let sub = basis.select_columns(cols.iter());
            let h = sub.adjoint() * op.matrix() * &sub;
            let (eigenvalues, eigenvectors) = hermitian_eigen(&h);
            let new_cols = &sub * eigenvectors;
            for (k, &col) in cols.iter().enumerate() {
                basis.set_column(col, &new_cols.column(k));
            }
            // split into runs of equal eigenvalue
            let mut run_start = 0;
            for k in 1..=cols.len() {
                let split = k == cols.len()
                    || eigenvalues[k] - eigenvalues[k - 1] > CLUSTER_TOL * scale;
                if split {
                    let value = eigenvalues[run_start];
                    let outcome = nearest_index(outcomes[op_idx], value);
                    let mut o = outs.clone();
                    o.push(outcome);
                    next.push((cols[run_start..k].to_vec(), o));
                    run_start = k;
                }
            }
        }
        blocks = next;
    }
    let mut dist = BTreeMap::new();
    for (cols, outs) in blocks {
        let w = block_weight(state, &basis, &cols);
        if w > 0.0 {
            *dist.entry(outs).or_insert(0.0) += w;
        }
    }
    Ok(dist)
}

fn nearest_index(values: &[f64], x: f64) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - x).abs().total_cmp(&(*b - x).abs()))
        .map(|(k, _)| k)
        .expect("outcome list is nonempty")
}

/// Sum of <v| rho |v> over the listed basis columns, clamped at zero.
fn block_weight(state: &State, basis: &DMatrix<Complex64>, cols: &[usize]) -> f64 {
    let w: f64 = cols
        .iter()
        .map(|&k| {
            let v = basis.column(k);
            match state.repr() {
                StateRepr::Pure(psi) => (v.adjoint() * psi)[(0, 0)].norm_sqr(),
                StateRepr::Density(rho) => {
                    (v.adjoint() * rho * v)[(0, 0)].re
                }
            }
        })
        .sum();
    w.max(0.0)
}
