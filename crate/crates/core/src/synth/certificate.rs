//! Certificate templates and synthesized certificates `(W, L)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::affine::{AffineMatrix, AffinePoly};
use crate::error::{DccmError, Result};
use crate::poly::{monomial_basis, MonomialBasis, PolyMatrix, Polynomial, GRLEX};

/// Polynomial parameterization of the metric dual `W(x)` (symmetric `n x n`)
/// and the gain dual `L(x)` (`m x n`).
///
/// Unknown coefficients are numbered as follows: the upper triangle of `W`
/// row by row, one block of `basis.len()` coefficients per entry, then the
/// entries of `L` row-major, `gain_basis.len()` coefficients each.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateTemplate {
    n: usize,
    m: usize,
    metric_degree: u32,
    gain_degree: u32,
    beta: f64,
    basis: MonomialBasis,
    gain_basis: MonomialBasis,
}

impl CertificateTemplate {
    pub fn new(n: usize, m: usize, metric_degree: u32, gain_degree: u32, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(DccmError::InvalidArgument(format!(
                "contraction rate beta must lie in (0, 1], got {beta}"
            )));
        }
        if n == 0 || m == 0 {
            return Err(DccmError::InvalidArgument("template needs n >= 1 and m >= 1".into()));
        }
        Ok(CertificateTemplate {
            n,
            m,
            metric_degree,
            gain_degree,
            beta,
            basis: monomial_basis(n, metric_degree),
            gain_basis: monomial_basis(n, gain_degree),
        })
    }

    /// Template with equal metric and gain degrees.
    pub fn uniform(n: usize, m: usize, degree: u32, beta: f64) -> Result<Self> {
        Self::new(n, m, degree, degree, beta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn metric_degree(&self) -> u32 {
        self.metric_degree
    }

    pub fn gain_degree(&self) -> u32 {
        self.gain_degree
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn gain_basis(&self) -> &MonomialBasis {
        &self.gain_basis
    }

    pub fn num_w_entries(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn num_unknowns(&self) -> usize {
        self.num_w_entries() * self.basis.len() + self.n * self.m * self.gain_basis.len()
    }

    fn l_offset(&self, i: usize, j: usize) -> usize {
        self.num_w_entries() * self.basis.len() + (i * self.n + j) * self.gain_basis.len()
    }

    /// Upper-triangle `(i, j)` pairs of W in storage order.
    pub fn w_entries(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| (i..self.n).map(move |j| (i, j))).collect()
    }

    /// `W(x)` with unknown coefficients, in the `n` state variables.
    pub fn w_affine(&self) -> AffineMatrix {
        let mut w = AffineMatrix::zeros(self.n, self.n, self.n);
        for (slot, (i, j)) in self.w_entries().into_iter().enumerate() {
            let entry = affine_entry(&self.basis, slot * self.basis.len());
            w.set(i, j, entry.clone());
            w.set(j, i, entry);
        }
        w
    }

    /// `L(x)` with unknown coefficients, in the `n` state variables.
    pub fn l_affine(&self) -> AffineMatrix {
        let mut l = AffineMatrix::zeros(self.m, self.n, self.n);
        for i in 0..self.m {
            for j in 0..self.n {
                l.set(i, j, affine_entry(&self.gain_basis, self.l_offset(i, j)));
            }
        }
        l
    }

    pub(crate) fn split_unknowns(&self, theta: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let nb = self.basis.len();
        let ng = self.gain_basis.len();
        let w = (0..self.num_w_entries())
            .map(|s| theta[s * nb..(s + 1) * nb].to_vec())
            .collect();
        let base = self.num_w_entries() * nb;
        let l = (0..self.m * self.n)
            .map(|s| theta[base + s * ng..base + (s + 1) * ng].to_vec())
            .collect();
        (w, l)
    }
}

fn affine_entry(basis: &MonomialBasis, offset: usize) -> AffinePoly {
    basis
        .monomials()
        .iter()
        .enumerate()
        .fold(AffinePoly::zero(basis.n_vars()), |acc, (k, mono)| {
            acc.add(&AffinePoly::unknown(offset + k, Polynomial::monomial(mono.clone(), 1.0)))
        })
}

/// A synthesized pair `(W, L)`: metric `M = W^-1`, differential gain `K = L W^-1`.
#[derive(Clone, Debug)]
pub struct DccmCertificate {
    template: CertificateTemplate,
    w_coeffs: Vec<Vec<f64>>,
    l_coeffs: Vec<Vec<f64>>,
    margin: f64,
    w: PolyMatrix,
    l: PolyMatrix,
    /// `dW/dx_i` for each state coordinate.
    dw: Vec<PolyMatrix>,
}

impl PartialEq for DccmCertificate {
    fn eq(&self, other: &Self) -> bool {
        self.template == other.template
            && self.w_coeffs == other.w_coeffs
            && self.l_coeffs == other.l_coeffs
            && self.margin == other.margin
    }
}

impl DccmCertificate {
    /// `w_coeffs` holds one vector per upper-triangle entry of W (in
    /// [`CertificateTemplate::w_entries`] order); `l_coeffs` one per entry of
    /// L, row-major.
    pub fn new(template: CertificateTemplate, w_coeffs: Vec<Vec<f64>>, l_coeffs: Vec<Vec<f64>>, margin: f64) -> Result<Self> {
        if w_coeffs.len() != template.num_w_entries() {
            return Err(DccmError::dim("W coefficient vectors", template.num_w_entries(), w_coeffs.len()));
        }
        if l_coeffs.len() != template.m * template.n {
            return Err(DccmError::dim("L coefficient vectors", template.m * template.n, l_coeffs.len()));
        }
        let n = template.n;
        let mut w = PolyMatrix::zeros(n, n, n);
        for ((i, j), c) in template.w_entries().into_iter().zip(&w_coeffs) {
            let p = Polynomial::from_dense(&template.basis, c)?;
            w.set(i, j, p.clone());
            w.set(j, i, p);
        }
        let mut l = PolyMatrix::zeros(template.m, n, n);
        for (s, c) in l_coeffs.iter().enumerate() {
            l.set(s / n, s % n, Polynomial::from_dense(&template.gain_basis, c)?);
        }
        let dw = (0..n)
            .map(|k| {
                let entries = w.entries().iter().map(|p| p.derivative(k)).collect();
                PolyMatrix::new(n, n, n, entries).expect("same shape as W")
            })
            .collect();
        Ok(DccmCertificate {
            template,
            w_coeffs,
            l_coeffs,
            margin,
            w,
            l,
            dw,
        })
    }

    /// Builds the certificate from the flat unknown vector of the template.
    pub fn from_unknowns(template: CertificateTemplate, theta: &[f64], margin: f64) -> Result<Self> {
        if theta.len() != template.num_unknowns() {
            return Err(DccmError::dim("certificate unknowns", template.num_unknowns(), theta.len()));
        }
        let (w, l) = template.split_unknowns(theta);
        Self::new(template, w, l, margin)
    }

    /// Constant `W` and `L` (degree-0 template).
    pub fn constant(w: &DMatrix<f64>, l: &DMatrix<f64>, beta: f64, margin: f64) -> Result<Self> {
        let n = w.nrows();
        let m = l.nrows();
        if w.ncols() != n || l.ncols() != n {
            return Err(DccmError::dim("constant certificate", n, l.ncols()));
        }
        let tmpl = CertificateTemplate::uniform(n, m, 0, beta)?;
        let wc = tmpl.w_entries().into_iter().map(|(i, j)| vec![w[(i, j)]]).collect();
        let lc = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| vec![l[(i, j)]]).collect();
        Self::new(tmpl, wc, lc, margin)
    }

    pub fn template(&self) -> &CertificateTemplate {
        &self.template
    }

    pub fn w_coeffs(&self) -> &[Vec<f64>] {
        &self.w_coeffs
    }

    pub fn l_coeffs(&self) -> &[Vec<f64>] {
        &self.l_coeffs
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn beta(&self) -> f64 {
        self.template.beta
    }

    pub fn n(&self) -> usize {
        self.template.n
    }

    pub fn m(&self) -> usize {
        self.template.m
    }

    pub fn w(&self) -> &PolyMatrix {
        &self.w
    }

    pub fn l(&self) -> &PolyMatrix {
        &self.l
    }

    pub fn w_at(&self, x: &[f64]) -> DMatrix<f64> {
        self.w.eval(x)
    }

    pub fn l_at(&self, x: &[f64]) -> DMatrix<f64> {
        self.l.eval(x)
    }

    /// `dW/dx_k` evaluated at `x`.
    pub fn dw_at(&self, k: usize, x: &[f64]) -> DMatrix<f64> {
        self.dw[k].eval(x)
    }

    /// The same certificate with `L` replaced by zero (open-loop gain).
    pub fn with_zero_gain(&self) -> DccmCertificate {
        let l = self.l_coeffs.iter().map(|c| vec![0.0; c.len()]).collect();
        Self::new(self.template.clone(), self.w_coeffs.clone(), l, self.margin).expect("shapes unchanged")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CertificateRepr::from(self)).expect("certificate serializes")
    }
}

fn pair_key(i: usize, j: usize, wide: bool) -> String {
    if wide {
        format!("{},{}", i + 1, j + 1)
    } else {
        format!("{}{}", i + 1, j + 1)
    }
}

#[derive(Serialize, Deserialize)]
struct TemplateRepr {
    n: usize,
    m: usize,
    metric_degree: u32,
    gain_degree: u32,
    beta: f64,
    ordering: String,
}

/// File form: `{"template": {...}, "w": {"11": [...], ...}, "l": {"1": [...], ...}, "margin": r}`.
/// W is keyed by upper-triangle position; L by column when `m == 1`, else by
/// `(row, col)` position.
#[derive(Serialize, Deserialize)]
struct CertificateRepr {
    template: TemplateRepr,
    w: BTreeMap<String, Vec<f64>>,
    l: BTreeMap<String, Vec<f64>>,
    margin: f64,
}

impl From<&DccmCertificate> for CertificateRepr {
    fn from(c: &DccmCertificate) -> Self {
        let t = &c.template;
        let wide = t.n >= 10 || t.m >= 10;
        let w = t
            .w_entries()
            .into_iter()
            .zip(&c.w_coeffs)
            .map(|((i, j), v)| (pair_key(i, j, wide), v.clone()))
            .collect();
        let l = c
            .l_coeffs
            .iter()
            .enumerate()
            .map(|(s, v)| {
                let (i, j) = (s / t.n, s % t.n);
                let key = if t.m == 1 { (j + 1).to_string() } else { pair_key(i, j, wide) };
                (key, v.clone())
            })
            .collect();
        CertificateRepr {
            template: TemplateRepr {
                n: t.n,
                m: t.m,
                metric_degree: t.metric_degree,
                gain_degree: t.gain_degree,
                beta: t.beta,
                ordering: GRLEX.to_string(),
            },
            w,
            l,
            margin: c.margin,
        }
    }
}

impl TryFrom<CertificateRepr> for DccmCertificate {
    type Error = DccmError;

    fn try_from(r: CertificateRepr) -> Result<Self> {
        let t = r.template;
        if t.ordering != GRLEX {
            return Err(DccmError::InvalidArgument(format!(
                "unsupported monomial ordering {:?}",
                t.ordering
            )));
        }
        let tmpl = CertificateTemplate::new(t.n, t.m, t.metric_degree, t.gain_degree, t.beta)?;
        let wide = t.n >= 10 || t.m >= 10;
        let take = |map: &BTreeMap<String, Vec<f64>>, key: String, len: usize| -> Result<Vec<f64>> {
            let v = map
                .get(&key)
                .ok_or_else(|| DccmError::InvalidArgument(format!("missing coefficient entry {key:?}")))?;
            if v.len() != len {
                return Err(DccmError::dim("coefficient vector", len, v.len()));
            }
            Ok(v.clone())
        };
        let w = tmpl
            .w_entries()
            .into_iter()
            .map(|(i, j)| take(&r.w, pair_key(i, j, wide), tmpl.basis.len()))
            .collect::<Result<Vec<_>>>()?;
        let l = (0..t.m * t.n)
            .map(|s| {
                let (i, j) = (s / t.n, s % t.n);
                let key = if t.m == 1 { (j + 1).to_string() } else { pair_key(i, j, wide) };
                take(&r.l, key, tmpl.gain_basis.len())
            })
            .collect::<Result<Vec<_>>>()?;
        if r.w.len() != w.len() || r.l.len() != l.len() {
            return Err(DccmError::InvalidArgument("unexpected extra coefficient entries".into()));
        }
        DccmCertificate::new(tmpl, w, l, r.margin)
    }
}

impl Serialize for DccmCertificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DccmCertificate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CertificateRepr::deserialize(d)?;
        DccmCertificate::try_from(repr).map_err(serde::de::Error::custom)
    }
}
