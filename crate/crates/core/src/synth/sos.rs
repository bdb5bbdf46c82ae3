//! Compilation of matrix sum-of-squares constraints into an [`SdpProblem`].
//!
//! A symmetric polynomial matrix `S(x)` of size `q` is certified through
//! `w^T (S(x) - r I) w = z^T G z`, `G >= 0`, with `z = v(x) (x) w` and `v`
//! a vector of monomials. Matching the coefficient of `mono * w_a * w_b`
//! gives one linear equality per `(mono, a <= b)`.
//!
//! Gram basis elements `v_p w_a` that cannot appear in any certificate are
//! pruned first: if `v_p^2 w_a^2` has no counterpart in `S` and cannot be
//! produced by a cross term of two other elements, then `G[p, p]` is forced
//! to zero and with it the whole row. Removing such elements keeps the
//! Gram block strictly feasible whenever the certificate exists.

use std::collections::{BTreeMap, HashMap, HashSet};

use nalgebra::DMatrix;

use super::affine::AffineMatrix;
use super::contraction::ContractionMatrix;
use crate::error::{DccmError, Result};
use crate::poly::{monomial_basis, Monomial};
use crate::sdp::{LinearEquality, LmiBlock, SdpProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ObjectiveMode {
    /// Maximize the margin `r` subject to `epsilon <= r <= r_cap`.
    #[default]
    MaximizeMargin,
    /// Fix `r = epsilon`; any feasible point is accepted.
    FeasibilityOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SosOptions {
    /// Half-degree of the Gram monomial vector for `Omega`; defaults to
    /// `ceil(deg Omega / 2)`.
    pub gram_degree: Option<u32>,
    pub epsilon: f64,
    pub objective: ObjectiveMode,
    pub r_cap: f64,
}

impl Default for SosOptions {
    fn default() -> Self {
        SosOptions {
            gram_degree: None,
            epsilon: 1e-4,
            objective: ObjectiveMode::MaximizeMargin,
            r_cap: 10.0,
        }
    }
}

/// Upper bound on the sum of the normalized diagonal block of `W`, per coordinate.
const NORMALIZED_BOUND: f64 = 1.0;
/// Loose bound on the trace of `W`, per coordinate, when only part of it is normalized.
const TRACE_CAP: f64 = 100.0;

/// One Gram-matrix certificate inside a compiled program.
#[derive(Clone, Debug)]
pub struct GramBlock {
    /// The certified matrix (before subtracting the margin).
    pub target: AffineMatrix,
    pub margin_var: usize,
    /// Gram vector entries `(monomial, w index)`.
    pub basis: Vec<(Monomial, usize)>,
    /// Index of the PSD block in the problem.
    pub block: usize,
    /// Variable of `G[p, q]`, `p <= q`, packed row by row.
    vars: Vec<usize>,
}

impl GramBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn var(&self, p: usize, q: usize) -> usize {
        let (p, q) = (p.min(q), p.max(q));
        let d = self.basis.len();
        self.vars[p * d - p * (p + 1) / 2 + q]
    }

    pub fn gram_matrix(&self, y: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |p, q| y[self.var(p, q)])
    }

    /// Largest coefficient mismatch between `z^T G z` and `w^T (S - r I) w`
    /// at the point `y`.
    pub fn residual(&self, y: &[f64], num_unknowns: usize) -> f64 {
        let q = self.target.rows();
        let s = self.target.instantiate(&y[..num_unknowns]);
        let r = y[self.margin_var];
        let mut diff: HashMap<(Monomial, usize, usize), f64> = HashMap::new();
        for a in 0..q {
            for b in 0..q {
                for (mono, c) in s.get(a, b).terms() {
                    *diff.entry((mono.clone(), a.min(b), a.max(b))).or_default() += c;
                }
            }
            let one = Monomial::one(self.target.n_vars());
            *diff.entry((one, a, a)).or_default() -= r;
        }
        let g = self.gram_matrix(y);
        for (p, (mp, ap)) in self.basis.iter().enumerate() {
            for (k, (mq, aq)) in self.basis.iter().enumerate() {
                *diff.entry((mp.mul(mq), *ap.min(aq), *ap.max(aq))).or_default() -= g[(p, k)];
            }
        }
        diff.values().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// A compiled synthesis program. Variables are laid out as the template
/// unknowns first, then the margins, then the Gram entries.
#[derive(Clone, Debug)]
pub struct SosProgram {
    pub problem: SdpProblem,
    pub num_unknowns: usize,
    pub margin_var: usize,
    pub metric_margin_var: Option<usize>,
    pub omega: GramBlock,
    pub metric: Option<GramBlock>,
}

impl SosProgram {
    pub fn unknowns<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        &y[..self.num_unknowns]
    }

    pub fn margin(&self, y: &[f64]) -> f64 {
        y[self.margin_var]
    }

    /// Largest Gram coefficient mismatch over all certified blocks.
    pub fn gram_residual(&self, y: &[f64]) -> f64 {
        let mut res = self.omega.residual(y, self.num_unknowns);
        if let Some(m) = &self.metric {
            res = res.max(m.residual(y, self.num_unknowns));
        }
        res
    }
}

/// Affine expression in the problem variables plus a constant.
#[derive(Default)]
struct Row {
    coeffs: BTreeMap<usize, f64>,
    constant: f64,
}

impl Row {
    fn is_structural(&self) -> bool {
        self.constant != 0.0 || self.coeffs.values().any(|&c| c != 0.0)
    }
}

type Key = (Monomial, usize, usize);

fn support(target: &AffineMatrix, margin_var: usize) -> HashMap<Key, Row> {
    let q = target.rows();
    let mut rows: HashMap<Key, Row> = HashMap::new();
    for a in 0..q {
        for b in a..q {
            let e = target.get(a, b);
            for (mono, c) in e.constant().terms() {
                rows.entry((mono.clone(), a, b)).or_default().constant += c;
            }
            for (k, p) in e.linear() {
                for (mono, c) in p.terms() {
                    *rows.entry((mono.clone(), a, b)).or_default().coeffs.entry(k).or_default() += c;
                }
            }
        }
        let one = Monomial::one(target.n_vars());
        *rows.entry((one, a, a)).or_default().coeffs.entry(margin_var).or_default() -= 1.0;
    }
    rows.retain(|_, r| r.is_structural());
    rows
}

fn prune(candidates: Vec<(Monomial, usize)>, support: &HashMap<Key, Row>) -> Vec<(Monomial, usize)> {
    let mut basis = candidates;
    loop {
        let mut cross: HashSet<(Monomial, usize)> = HashSet::new();
        for (i, (mi, ai)) in basis.iter().enumerate() {
            for (mj, aj) in &basis[i + 1..] {
                if ai == aj {
                    cross.insert((mi.mul(mj), *ai));
                }
            }
        }
        let before = basis.len();
        basis.retain(|(m, a)| {
            let sq = m.mul(m);
            support.contains_key(&(sq.clone(), *a, *a)) || cross.contains(&(sq, *a))
        });
        if basis.len() == before {
            return basis;
        }
    }
}

/// Adds the Gram block and matching equalities certifying
/// `w^T (target - r I) w` is SOS with Gram half-degree `gram_degree`.
fn add_gram_block(
    prob: &mut SdpProblem,
    target: &AffineMatrix,
    margin_var: usize,
    gram_degree: u32,
) -> Result<GramBlock> {
    let q = target.rows();
    let rows = support(target, margin_var);
    let limit = 2 * gram_degree;
    if let Some(((mono, a, b), _)) = rows
        .iter()
        .filter(|((m, _, _), _)| m.degree() > limit)
        .min_by(|x, y| x.0.cmp(y.0))
    {
        return Err(DccmError::DegreeTooLow {
            monomial: mono.to_string(),
            row: *a,
            col: *b,
        });
    }

    let mono_basis = monomial_basis(target.n_vars(), gram_degree);
    let candidates = (0..q)
        .flat_map(|a| mono_basis.monomials().iter().map(move |m| (m.clone(), a)))
        .collect();
    let basis = prune(candidates, &rows);
    let d = basis.len();

    let first = prob.num_vars;
    let n_gram = d * (d + 1) / 2;
    prob.num_vars += n_gram;
    prob.objective.resize(prob.num_vars, 0.0);

    let mut block = LmiBlock::new(d);
    let mut vars = Vec::with_capacity(n_gram);
    let mut eqs: HashMap<Key, Row> = rows;
    for p in 0..d {
        for k in p..d {
            let var = first + vars.len();
            vars.push(var);
            block.add_coeff(var, p, k, 1.0);
            let (mp, ap) = &basis[p];
            let (mk, ak) = &basis[k];
            let weight = if p != k && ap == ak { 2.0 } else { 1.0 };
            let key = (mp.mul(mk), *ap.min(ak), *ap.max(ak));
            // Gram side is moved to the left: sum_g w g - (S - r) = 0.
            *eqs.entry(key).or_default().coeffs.entry(var).or_default() -= weight;
        }
    }

    // Deterministic equality order.
    let mut keyed: Vec<(Key, Row)> = eqs.into_iter().collect();
    keyed.sort_by(|x, y| (x.0 .1, x.0 .2, &x.0 .0).cmp(&(y.0 .1, y.0 .2, &y.0 .0)));
    for (_, row) in keyed {
        // sum coeffs * y + constant = 0
        prob.equalities.push(LinearEquality {
            coeffs: row.coeffs.into_iter().filter(|&(_, c)| c != 0.0).collect(),
            rhs: -row.constant,
        });
    }

    let index = prob.blocks.len();
    prob.blocks.push(block);
    Ok(GramBlock {
        target: target.clone(),
        margin_var,
        basis,
        block: index,
        vars,
    })
}

fn scalar_block(prob: &mut SdpProblem, constant: f64, coeffs: &[(usize, f64)]) {
    let mut b = LmiBlock::new(1);
    b.add_constant(0, 0, constant);
    for &(v, c) in coeffs {
        b.add_coeff(v, 0, 0, c);
    }
    prob.blocks.push(b);
}

pub fn compile_sos(cm: &ContractionMatrix, opts: &SosOptions) -> Result<SosProgram> {
    if !(opts.epsilon >= 0.0) {
        return Err(DccmError::InvalidArgument(format!("epsilon must be non-negative, got {}", opts.epsilon)));
    }
    if !cm.omega.is_symmetric() {
        return Err(DccmError::InvalidArgument("contraction matrix must be symmetric".into()));
    }
    let eps = opts.epsilon;
    let margin_var = cm.num_unknowns;
    let metric_margin_var = cm.metric.as_ref().map(|_| cm.num_unknowns + 1);
    let mut prob = SdpProblem::new(cm.num_unknowns + 1 + usize::from(cm.metric.is_some()));

    let gram_degree = opts.gram_degree.unwrap_or(cm.degree().div_ceil(2));
    let omega = add_gram_block(&mut prob, &cm.omega, margin_var, gram_degree)?;

    match opts.objective {
        ObjectiveMode::MaximizeMargin => {
            if !(opts.r_cap > eps) {
                return Err(DccmError::InvalidArgument(format!(
                    "margin cap {} must exceed epsilon {eps}",
                    opts.r_cap
                )));
            }
            scalar_block(&mut prob, -eps, &[(margin_var, 1.0)]);
            scalar_block(&mut prob, opts.r_cap, &[(margin_var, -1.0)]);
            prob.objective[margin_var] = -1.0;
        }
        ObjectiveMode::FeasibilityOnly => prob.equalities.push(LinearEquality {
            coeffs: vec![(margin_var, 1.0)],
            rhs: eps,
        }),
    }

    let metric = match (&cm.metric, metric_margin_var) {
        (Some(w), Some(rw)) => {
            let gb = add_gram_block(&mut prob, w, rw, w.degree().div_ceil(2))?;
            scalar_block(&mut prob, -eps, &[(rw, 1.0)]);
            // W and L enter Omega homogeneously; bound W so the margin is meaningful.
            let n = w.rows();
            let diag = |filter: &dyn Fn(usize) -> bool| -> Vec<(usize, f64)> {
                (0..gb.dim())
                    .filter(|&p| filter(gb.basis[p].1))
                    .map(|p| (gb.var(p, p), -1.0))
                    .collect()
            };
            let nu = cm.normalized.len();
            let mut coeffs = diag(&|a| cm.normalized.contains(&a));
            coeffs.push((rw, -(nu as f64)));
            scalar_block(&mut prob, NORMALIZED_BOUND * nu as f64, &coeffs);
            if nu < n {
                let mut coeffs = diag(&|_| true);
                coeffs.push((rw, -(n as f64)));
                scalar_block(&mut prob, TRACE_CAP * n as f64, &coeffs);
            }
            Some(gb)
        }
        _ => None,
    };

    prob.validate()?;
    Ok(SosProgram {
        problem: prob,
        num_unknowns: cm.num_unknowns,
        margin_var,
        metric_margin_var,
        omega,
        metric,
    })
}
