//! Polynomials whose coefficients depend affinely on unknown decision
//! variables: `p0(x) + sum_k theta_k p_k(x)`.

use std::collections::BTreeMap;

use crate::error::{DccmError, Result};
use crate::poly::{PolyMatrix, Polynomial};

#[derive(Clone, Debug, PartialEq)]
pub struct AffinePoly {
    constant: Polynomial,
    linear: BTreeMap<usize, Polynomial>,
}

impl AffinePoly {
    pub fn zero(n_vars: usize) -> Self {
        AffinePoly {
            constant: Polynomial::zero(n_vars),
            linear: BTreeMap::new(),
        }
    }

    pub fn known(p: Polynomial) -> Self {
        AffinePoly {
            constant: p,
            linear: BTreeMap::new(),
        }
    }

    /// `theta_index * p`
    pub fn unknown(index: usize, p: Polynomial) -> Self {
        let mut a = AffinePoly::zero(p.n_vars());
        if !p.is_zero() {
            a.linear.insert(index, p);
        }
        a
    }

    pub fn n_vars(&self) -> usize {
        self.constant.n_vars()
    }

    pub fn constant(&self) -> &Polynomial {
        &self.constant
    }

    pub fn linear(&self) -> impl Iterator<Item = (usize, &Polynomial)> {
        self.linear.iter().map(|(&k, p)| (k, p))
    }

    pub fn degree(&self) -> u32 {
        self.linear
            .values()
            .map(Polynomial::degree)
            .chain(std::iter::once(self.constant.degree()))
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.linear.is_empty()
    }

    pub fn add(&self, other: &AffinePoly) -> AffinePoly {
        let mut out = self.clone();
        out.constant = &out.constant + &other.constant;
        for (&k, p) in &other.linear {
            let sum = match out.linear.get(&k) {
                Some(q) => q + p,
                None => p.clone(),
            };
            if sum.is_zero() {
                out.linear.remove(&k);
            } else {
                out.linear.insert(k, sum);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> AffinePoly {
        self.mul_poly(&Polynomial::constant(self.n_vars(), s))
    }

    pub fn mul_poly(&self, p: &Polynomial) -> AffinePoly {
        AffinePoly {
            constant: &self.constant * p,
            linear: self
                .linear
                .iter()
                .map(|(&k, q)| (k, q * p))
                .filter(|(_, q)| !q.is_zero())
                .collect(),
        }
    }

    pub fn extend_vars(&self, n_new: usize) -> AffinePoly {
        AffinePoly {
            constant: self.constant.extend_vars(n_new),
            linear: self
                .linear
                .iter()
                .map(|(&k, p)| (k, p.extend_vars(n_new)))
                .collect(),
        }
    }

    /// Substitutes numeric values for the unknowns.
    pub fn instantiate(&self, theta: &[f64]) -> Polynomial {
        self.linear
            .iter()
            .fold(self.constant.clone(), |acc, (&k, p)| &acc + &p.scale(theta[k]))
    }
}

/// A dense matrix of [`AffinePoly`] entries.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMatrix {
    rows: usize,
    cols: usize,
    n_vars: usize,
    entries: Vec<AffinePoly>,
}

impl AffineMatrix {
    pub fn zeros(rows: usize, cols: usize, n_vars: usize) -> Self {
        AffineMatrix {
            rows,
            cols,
            n_vars,
            entries: vec![AffinePoly::zero(n_vars); rows * cols],
        }
    }

    pub fn known(m: &PolyMatrix) -> Self {
        AffineMatrix {
            rows: m.rows(),
            cols: m.cols(),
            n_vars: m.n_vars(),
            entries: m.entries().iter().cloned().map(AffinePoly::known).collect(),
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

    pub fn get(&self, i: usize, j: usize) -> &AffinePoly {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: AffinePoly) {
        debug_assert_eq!(p.n_vars(), self.n_vars);
        self.entries[i * self.cols + j] = p;
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(AffinePoly::degree).max().unwrap_or(0)
    }

    pub fn transpose(&self) -> AffineMatrix {
        let mut out = AffineMatrix::zeros(self.cols, self.rows, self.n_vars);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn add(&self, other: &AffineMatrix) -> Result<AffineMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(DccmError::dim("affine matrix sum", self.rows * self.cols, other.rows * other.cols));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(AffineMatrix { entries, ..*self })
    }

    pub fn scale(&self, s: f64) -> AffineMatrix {
        AffineMatrix {
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
            ..*self
        }
    }

    /// `known * self`
    pub fn left_mul(&self, known: &PolyMatrix) -> Result<AffineMatrix> {
        if known.cols() != self.rows {
            return Err(DccmError::dim("affine matrix product", known.cols(), self.rows));
        }
        if known.n_vars() != self.n_vars {
            return Err(DccmError::dim("affine matrix product variables", self.n_vars, known.n_vars()));
        }
        let mut out = AffineMatrix::zeros(known.rows(), self.cols, self.n_vars);
        for i in 0..known.rows() {
            for j in 0..self.cols {
                let mut acc = AffinePoly::zero(self.n_vars);
                for k in 0..self.rows {
                    let factor = known.get(i, k);
                    if !factor.is_zero() {
                        acc = acc.add(&self.get(k, j).mul_poly(factor));
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn extend_vars(&self, n_new: usize) -> AffineMatrix {
        AffineMatrix {
            rows: self.rows,
            cols: self.cols,
            n_vars: n_new,
            entries: self.entries.iter().map(|e| e.extend_vars(n_new)).collect(),
        }
    }

    /// Stacks `[[tl, tr], [bl, br]]`.
    pub fn blocks(tl: &AffineMatrix, tr: &AffineMatrix, bl: &AffineMatrix, br: &AffineMatrix) -> Result<AffineMatrix> {
        if tl.rows != tr.rows || bl.rows != br.rows || tl.cols != bl.cols || tr.cols != br.cols {
            return Err(DccmError::InvalidArgument("block shapes do not tile".into()));
        }
        let rows = tl.rows + bl.rows;
        let cols = tl.cols + tr.cols;
        let mut out = AffineMatrix::zeros(rows, cols, tl.n_vars);
        for i in 0..rows {
            for j in 0..cols {
                let e = match (i < tl.rows, j < tl.cols) {
                    (true, true) => tl.get(i, j),
                    (true, false) => tr.get(i, j - tl.cols),
                    (false, true) => bl.get(i - tl.rows, j),
                    (false, false) => br.get(i - tl.rows, j - tl.cols),
                };
                out.set(i, j, e.clone());
            }
        }
        Ok(out)
    }

    pub fn instantiate(&self, theta: &[f64]) -> PolyMatrix {
        PolyMatrix::new(
            self.rows,
            self.cols,
            self.n_vars,
            self.entries.iter().map(|e| e.instantiate(theta)).collect(),
        )
        .expect("entries share the variable count")
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}
