//! Sparse multivariate polynomials with real coefficients.
//!
//! Every symbolic object in the toolkit (plant dynamics, Jacobians, the
//! metric dual `W(x)`, the gain dual `L(x)`, the contraction matrix) is a
//! [`Polynomial`] or a [`PolyMatrix`] of them. Terms are kept in a sorted map
//! keyed by [`Monomial`], whose ordering is graded lexicographic: total degree
//! ascending, then lexicographic with `x1` as the most significant variable.
//! For two variables and degree two that gives `1, x1, x2, x1^2, x1*x2, x2^2`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DccmError, Result};

/// Name of the only supported monomial ordering in serialized files.
pub const GRLEX: &str = "grlex";

/// A monomial `x1^e1 * ... * xn^en`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    pub fn one(n_vars: usize) -> Self {
        Monomial {
            exps: vec![0; n_vars],
        }
    }

    pub fn var(n_vars: usize, i: usize) -> Self {
        let mut exps = vec![0; n_vars];
        exps[i] = 1;
        Monomial { exps }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn n_vars(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.exps.len(), other.exps.len());
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exps
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }

    /// The same monomial viewed in a space with `n_new >= n_vars` variables;
    /// the new variables are appended with exponent zero.
    pub fn extend(&self, n_new: usize) -> Monomial {
        let mut exps = self.exps.clone();
        exps.resize(n_new, 0);
        Monomial { exps }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// All monomials of total degree `<= max_degree`, in grlex order.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    n_vars: usize,
    max_degree: u32,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl PartialEq for MonomialBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n_vars == other.n_vars && self.max_degree == other.max_degree
    }
}

impl MonomialBasis {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn get(&self, i: usize) -> &Monomial {
        &self.monomials[i]
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Values of every basis monomial at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.monomials.iter().map(|m| m.eval(x)).collect()
    }
}

/// Builds the grlex basis of all monomials in `n_vars` variables with total
/// degree at most `max_degree`.
pub fn monomial_basis(n_vars: usize, max_degree: u32) -> MonomialBasis {
    fn fill(prefix: &mut Vec<u32>, remaining_vars: usize, degree: u32, out: &mut Vec<Monomial>) {
        if remaining_vars == 1 {
            prefix.push(degree);
            out.push(Monomial::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=degree).rev() {
            prefix.push(e);
            fill(prefix, remaining_vars - 1, degree - e, out);
            prefix.pop();
        }
    }

    let mut monomials = Vec::with_capacity(binomial(n_vars + max_degree as usize, n_vars));
    if n_vars == 0 {
        monomials.push(Monomial::new(Vec::new()));
    } else {
        for d in 0..=max_degree {
            fill(&mut Vec::with_capacity(n_vars), n_vars, d, &mut monomials);
        }
    }
    let index = monomials
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i))
        .collect();
    MonomialBasis {
        n_vars,
        max_degree,
        monomials,
        index,
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// A polynomial in `n_vars` real variables.
///
/// Canonical form: no stored coefficient is exactly zero, so two equal
/// polynomials always have identical term maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n_vars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        Polynomial {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: f64) -> Self {
        Self::monomial(Monomial::one(n_vars), c)
    }

    /// The coordinate polynomial `x_i` (zero-based `i`).
    pub fn var(n_vars: usize, i: usize) -> Self {
        Self::monomial(Monomial::var(n_vars, i), 1.0)
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let n_vars = m.n_vars();
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(m, c);
        }
        Polynomial { n_vars, terms }
    }

    /// Sums the given terms (repeated monomials accumulate).
    pub fn from_terms(n_vars: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut p = Polynomial::zero(n_vars);
        for (m, c) in terms {
            if m.n_vars() != n_vars {
                return Err(DccmError::dim("polynomial term", n_vars, m.n_vars()));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_vars {
            return Err(DccmError::dim("polynomial evaluation", self.n_vars, x.len()));
        }
        Ok(self.eval(x))
    }

    /// Unchecked evaluation; `x` must have `n_vars` entries.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_vars);
        self.terms.iter().map(|(m, &c)| c * m.eval(x)).sum()
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero(self.n_vars);
        }
        let mut p = Polynomial::zero(self.n_vars);
        for (m, &c) in &self.terms {
            p.add_term(m.clone(), c * s);
        }
        p
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.n_vars != other.n_vars {
            return Err(DccmError::dim("polynomial addition", self.n_vars, other.n_vars));
        }
        let mut p = self.clone();
        for (m, &c) in &other.terms {
            p.add_term(m.clone(), c);
        }
        Ok(p)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.n_vars != other.n_vars {
            return Err(DccmError::dim("polynomial product", self.n_vars, other.n_vars));
        }
        let mut p = Polynomial::zero(self.n_vars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                p.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(p)
    }

    /// Partial derivative with respect to variable `i` (zero-based).
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut p = Polynomial::zero(self.n_vars);
        for (m, &c) in &self.terms {
            let e = m.exps[i];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps.clone();
            exps[i] -= 1;
            p.add_term(Monomial::new(exps), c * e as f64);
        }
        p
    }

    /// Substitutes `subst[i]` for variable `i` and expands.
    pub fn compose(&self, subst: &[Polynomial]) -> Result<Polynomial> {
        if subst.len() != self.n_vars {
            return Err(DccmError::dim("composition arity", self.n_vars, subst.len()));
        }
        let target = match subst.first() {
            Some(s) => s.n_vars,
            None => {
                return Err(DccmError::InvalidArgument(
                    "cannot compose a polynomial in zero variables".into(),
                ))
            }
        };
        if let Some(bad) = subst.iter().find(|s| s.n_vars != target) {
            return Err(DccmError::dim("composition target space", target, bad.n_vars));
        }

        // powers[i][e] = subst[i]^e, built on demand
        let mut powers: Vec<Vec<Polynomial>> = subst
            .iter()
            .map(|_| vec![Polynomial::constant(target, 1.0)])
            .collect();
        let mut out = Polynomial::zero(target);
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(target, c);
            for (i, &e) in m.exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = &powers[i][powers[i].len() - 1] * &subst[i];
                    powers[i].push(next);
                }
                term = &term * &powers[i][e as usize];
            }
            for (tm, tc) in term.terms {
                out.add_term(tm, tc);
            }
        }
        Ok(out)
    }

    /// Embeds the polynomial into a space with more variables (appended).
    pub fn extend_vars(&self, n_new: usize) -> Polynomial {
        assert!(n_new >= self.n_vars, "extend_vars cannot drop variables");
        Polynomial {
            n_vars: n_new,
            terms: self
                .terms
                .iter()
                .map(|(m, &c)| (m.extend(n_new), c))
                .collect(),
        }
    }

    /// Coefficients aligned to `basis`, zeros included.
    pub fn to_dense(&self, basis: &MonomialBasis) -> Result<Vec<f64>> {
        if basis.n_vars() != self.n_vars {
            return Err(DccmError::dim("dense coefficient basis", self.n_vars, basis.n_vars()));
        }
        let mut out = vec![0.0; basis.len()];
        for (m, &c) in &self.terms {
            let i = basis.position(m).ok_or_else(|| {
                DccmError::InvalidArgument(format!(
                    "monomial {m} exceeds basis degree {}",
                    basis.max_degree()
                ))
            })?;
            out[i] = c;
        }
        Ok(out)
    }

    pub fn from_dense(basis: &MonomialBasis, coeffs: &[f64]) -> Result<Polynomial> {
        if coeffs.len() != basis.len() {
            return Err(DccmError::dim("dense coefficient vector", basis.len(), coeffs.len()));
        }
        let mut p = Polynomial::zero(basis.n_vars());
        for (m, &c) in basis.monomials().iter().zip(coeffs) {
            p.add_term(m.clone(), c);
        }
        Ok(p)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

// Operator forms panic on a variable-count mismatch; use the `checked_*`
// methods for untrusted operands.
impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial variable counts differ")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(&rhs.scale(-1.0))
            .expect("polynomial variable counts differ")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial variable counts differ")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// Product of two polynomials in the same variables.
pub fn poly_mul(a: &Polynomial, b: &Polynomial) -> Result<Polynomial> {
    a.checked_mul(b)
}

/// Jacobian `d v_i / d x_j` of a vector of polynomials.
pub fn jacobian(v: &[Polynomial], n_vars: usize) -> Result<PolyMatrix> {
    if let Some(bad) = v.iter().find(|p| p.n_vars != n_vars) {
        return Err(DccmError::dim("jacobian input", n_vars, bad.n_vars));
    }
    let entries = v
        .iter()
        .flat_map(|p| (0..n_vars).map(move |j| p.derivative(j)))
        .collect();
    PolyMatrix::new(v.len(), n_vars, n_vars, entries)
}

/// On-disk form of a polynomial: dense coefficients in grlex order.
#[derive(Serialize, Deserialize)]
struct PolyRepr {
    n_vars: usize,
    ordering: String,
    max_degree: u32,
    coeffs: Vec<f64>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let basis = monomial_basis(self.n_vars, self.degree());
        let coeffs = self.to_dense(&basis).map_err(serde::ser::Error::custom)?;
        PolyRepr {
            n_vars: self.n_vars,
            ordering: GRLEX.to_string(),
            max_degree: self.degree(),
            coeffs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        if repr.ordering != GRLEX {
            return Err(serde::de::Error::custom(format!(
                "unsupported monomial ordering {:?} (expected \"{GRLEX}\")",
                repr.ordering
            )));
        }
        if repr.n_vars == 0 {
            return Err(serde::de::Error::custom("n_vars must be at least 1"));
        }
        let basis = monomial_basis(repr.n_vars, repr.max_degree);
        Polynomial::from_dense(&basis, &repr.coeffs).map_err(serde::de::Error::custom)
    }
}

/// A dense `rows x cols` grid of polynomials sharing one variable count.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    n_vars: usize,
    entries: Vec<Polynomial>,
}

impl PolyMatrix {
    /// Entries in row-major order.
    pub fn new(rows: usize, cols: usize, n_vars: usize, entries: Vec<Polynomial>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(DccmError::dim("polynomial matrix entries", rows * cols, entries.len()));
        }
        if let Some(bad) = entries.iter().find(|p| p.n_vars != n_vars) {
            return Err(DccmError::dim("polynomial matrix entry", n_vars, bad.n_vars));
        }
        Ok(PolyMatrix {
            rows,
            cols,
            n_vars,
            entries,
        })
    }

    pub fn from_rows(n_vars: usize, rows: Vec<Vec<Polynomial>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(DccmError::dim("polynomial matrix row length", c, bad.len()));
        }
        Self::new(r, c, n_vars, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize, n_vars: usize) -> Self {
        PolyMatrix {
            rows,
            cols,
            n_vars,
            entries: vec![Polynomial::zero(n_vars); rows * cols],
        }
    }

    pub fn from_constant(m: &DMatrix<f64>, n_vars: usize) -> Self {
        let entries = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| Polynomial::constant(n_vars, m[(i, j)]))
            .collect();
        PolyMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            n_vars,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Polynomial) {
        assert_eq!(p.n_vars, self.n_vars);
        self.entries[i * self.cols + j] = p;
    }

    pub fn entries(&self) -> &[Polynomial] {
        &self.entries
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn transpose(&self) -> PolyMatrix {
        let entries = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        PolyMatrix {
            rows: self.cols,
            cols: self.rows,
            n_vars: self.n_vars,
            entries,
        }
    }

    pub fn checked_mul(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != other.rows {
            return Err(DccmError::dim("polynomial matrix product", self.cols, other.rows));
        }
        if self.n_vars != other.n_vars {
            return Err(DccmError::dim("polynomial matrix variables", self.n_vars, other.n_vars));
        }
        let mut out = PolyMatrix::zeros(self.rows, other.cols, self.n_vars);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Polynomial::zero(self.n_vars);
                for k in 0..self.cols {
                    acc = &acc + &(self.get(i, k) * other.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn extend_vars(&self, n_new: usize) -> PolyMatrix {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            n_vars: n_new,
            entries: self.entries.iter().map(|p| p.extend_vars(n_new)).collect(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != self.n_vars {
            return Err(DccmError::dim("polynomial matrix evaluation", self.n_vars, x.len()));
        }
        Ok(self.eval(x))
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    fn c(n: usize, v: f64) -> Polynomial {
        Polynomial::constant(n, v)
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(monomial_basis(2, 0).len(), 1);
        assert!(monomial_basis(2, 0).get(0).is_one());
        assert_eq!(monomial_basis(2, 6).len(), 28);
        // exponent triples with sum <= 2, by enumeration
        let mut count = 0;
        for a in 0..=2u32 {
            for b in 0..=2u32 {
                for c in 0..=2u32 {
                    if a + b + c <= 2 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(monomial_basis(3, 2).len(), count);
        assert_eq!(count, 10);
    }

    #[test]
    fn basis_is_grlex() {
        let b = monomial_basis(2, 2);
        let names: Vec<String> = b.monomials().iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"]);
        let b6 = monomial_basis(2, 6);
        let degree6 = &b6.monomials()[21..];
        assert_eq!(degree6.first().unwrap().to_string(), "x1^6");
        assert_eq!(degree6.get(1).unwrap().to_string(), "x1^5*x2");
        assert_eq!(degree6.last().unwrap().to_string(), "x2^6");
        // BTreeMap order agrees with basis order
        let mut sorted = b.monomials().to_vec();
        sorted.reverse();
        sorted.sort();
        assert_eq!(sorted, b.monomials());
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(Polynomial::zero(3).eval(&[1.0, -2.0, 7.0]), 0.0);
        let p = &(&x(2, 0) * &x(2, 0)) + &x(2, 1);
        assert_eq!(p.evaluate(&[2.0, 3.0]).unwrap(), 7.0);
        let f1 = &x(2, 0).scale(1.1) - &(&x(2, 0) * &x(2, 1)).scale(0.1);
        assert!((f1.eval(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert!(matches!(
            p.evaluate(&[1.0]),
            Err(DccmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn product_examples() {
        let a = &x(2, 0) + &c(2, 3.0);
        assert_eq!(poly_mul(&a, &c(2, 1.0)).unwrap(), a);
        let s = &x(2, 0) + &x(2, 1);
        let sq = poly_mul(&s, &s).unwrap();
        assert_eq!(sq.coeff(&Monomial::new(vec![2, 0])), 1.0);
        assert_eq!(sq.coeff(&Monomial::new(vec![1, 1])), 2.0);
        assert_eq!(sq.coeff(&Monomial::new(vec![0, 2])), 1.0);
        assert_eq!(sq.num_terms(), 3);
        let z = poly_mul(&a, &Polynomial::zero(2)).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.num_terms(), 0);
        assert!(poly_mul(&a, &x(3, 0)).is_err());
    }

    #[test]
    fn cancellation_keeps_canonical_form() {
        let p = &x(2, 0) - &x(2, 0);
        assert!(p.is_zero());
        assert_eq!(p, Polynomial::zero(2));
    }

    #[test]
    fn jacobian_examples() {
        let consts = [c(2, 1.0), c(2, -4.0)];
        let j = jacobian(&consts, 2).unwrap();
        assert!(j.entries().iter().all(Polynomial::is_zero));

        let f = [
            &x(2, 0).scale(1.1) - &(&x(2, 0) * &x(2, 1)).scale(0.1),
            &x(2, 1).scale(0.9) + &x(2, 0).scale(0.1),
        ];
        let a = jacobian(&f, 2).unwrap();
        assert_eq!(a.get(0, 0), &(&c(2, 1.1) - &x(2, 1).scale(0.1)));
        assert_eq!(a.get(0, 1), &x(2, 0).scale(-0.1));
        assert_eq!(a.get(1, 0), &c(2, 0.1));
        assert_eq!(a.get(1, 1), &c(2, 0.9));

        let j = jacobian(&[&x(2, 0) * &x(2, 1)], 2).unwrap();
        assert_eq!(j.get(0, 0), &x(2, 1));
        assert_eq!(j.get(0, 1), &x(2, 0));
    }

    #[test]
    fn compose_examples() {
        let q = &(&x(3, 2) * &x(3, 1)) + &c(3, 0.5);
        assert_eq!(x(1, 0).compose(std::slice::from_ref(&q)).unwrap(), q);

        // x1^2 composed with (x1 + u), target space (x1, u)
        let sq = &x(1, 0) * &x(1, 0);
        let r = sq.compose(&[&x(2, 0) + &x(2, 1)]).unwrap();
        let expected = &(&(&x(2, 0) * &x(2, 0)) + &(&x(2, 0) * &x(2, 1)).scale(2.0))
            + &(&x(2, 1) * &x(2, 1));
        assert_eq!(r, expected);
    }

    #[test]
    fn dense_round_trip() {
        let b = monomial_basis(2, 3);
        let p = &(&x(2, 0) * &x(2, 1)).scale(-2.5) + &c(2, 0.25);
        let d = p.to_dense(&b).unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(Polynomial::from_dense(&b, &d).unwrap(), p);
    }

    #[test]
    fn json_shape() {
        let p = &x(2, 1).scale(0.9) + &x(2, 0).scale(0.1);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["ordering"], "grlex");
        assert_eq!(v["max_degree"], 1);
        assert_eq!(v["coeffs"], serde_json::json!([0.0, 0.1, 0.9]));
        let bad = serde_json::json!({"n_vars": 2, "ordering": "lex", "max_degree": 0, "coeffs": [1.0]});
        assert!(serde_json::from_value::<Polynomial>(bad).is_err());
        let short = serde_json::json!({"n_vars": 2, "ordering": "grlex", "max_degree": 1, "coeffs": [1.0]});
        assert!(serde_json::from_value::<Polynomial>(short).is_err());
    }
}
