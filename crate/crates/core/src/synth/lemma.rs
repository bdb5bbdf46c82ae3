//! Pointwise numerical checks of a certificate.

use nalgebra::DMatrix;

use super::certificate::DccmCertificate;
use crate::error::{DccmError, Result};
use crate::linalg;
use crate::system::{ControlAffineSystem, Linearization};

/// Evaluates the contraction conditions of one certificate on one plant,
/// reusing the symbolic Jacobians across points.
#[derive(Clone, Debug)]
pub struct ContractionEvaluator<'a> {
    sys: &'a ControlAffineSystem,
    cert: &'a DccmCertificate,
    lin: Linearization,
}

impl<'a> ContractionEvaluator<'a> {
    pub fn new(sys: &'a ControlAffineSystem, cert: &'a DccmCertificate) -> Result<Self> {
        if cert.n() != sys.n() {
            return Err(DccmError::dim("certificate state dimension", sys.n(), cert.n()));
        }
        if cert.m() != sys.m() {
            return Err(DccmError::dim("certificate input dimension", sys.m(), cert.m()));
        }
        Ok(ContractionEvaluator {
            sys,
            cert,
            lin: sys.linearize(),
        })
    }

    fn check(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.sys.n() {
            return Err(DccmError::dim("state", self.sys.n(), x.len()));
        }
        if u.len() != self.sys.m() {
            return Err(DccmError::dim("input", self.sys.m(), u.len()));
        }
        Ok(x.iter().chain(u).copied().collect())
    }

    /// `[[W(x+), A W + B L], [(A W + B L)^T, (1 - beta) W]]` at `(x, u)`.
    pub fn block_matrix(&self, x: &[f64], u: &[f64]) -> Result<DMatrix<f64>> {
        let xu = self.check(x, u)?;
        let n = self.sys.n();
        let w = self.cert.w_at(x);
        let w_next = self.cert.w_at(&self.sys.step_unchecked(x, u));
        let off = self.lin.a.eval(&xu) * &w + self.lin.b.eval(x) * self.cert.l_at(x);
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&w_next);
        out.view_mut((0, n), (n, n)).copy_from(&off);
        out.view_mut((n, 0), (n, n)).copy_from(&off.transpose());
        out.view_mut((n, n), (n, n)).copy_from(&(w * (1.0 - self.cert.beta())));
        Ok(linalg::symmetrize(&out))
    }

    /// `lambda_max((A + B K)^T M(x+) (A + B K) - (1 - beta) M(x))`.
    pub fn lemma_value(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        let xu = self.check(x, u)?;
        let m = linalg::sym_inverse(&self.cert.w_at(x))?;
        let m_next = linalg::sym_inverse(&self.cert.w_at(&self.sys.step_unchecked(x, u)))?;
        let k = self.cert.l_at(x) * &m;
        let acl = self.lin.a.eval(&xu) + self.lin.b.eval(x) * k;
        let s = acl.transpose() * m_next * &acl - m * (1.0 - self.cert.beta());
        Ok(linalg::lambda_max(&s))
    }
}

pub fn check_lemma_condition(sys: &ControlAffineSystem, cert: &DccmCertificate, x: &[f64], u: &[f64]) -> Result<f64> {
    ContractionEvaluator::new(sys, cert)?.lemma_value(x, u)
}

pub fn contraction_block_matrix(
    sys: &ControlAffineSystem,
    cert: &DccmCertificate,
    x: &[f64],
    u: &[f64],
) -> Result<DMatrix<f64>> {
    ContractionEvaluator::new(sys, cert)?.block_matrix(x, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64) -> ControlAffineSystem {
        ControlAffineSystem::linear(&DMatrix::from_element(1, 1, a), &DMatrix::from_element(1, 1, b)).unwrap()
    }

    #[test]
    fn scalar_lemma_value_is_closed_form() {
        let sys = scalar(0.5, 1.0);
        let (w, l) = (2.0, -0.6);
        let cert = DccmCertificate::constant(&DMatrix::from_element(1, 1, w), &DMatrix::from_element(1, 1, l), 0.1, 0.0)
            .unwrap();
        let k = l / w;
        let expected = ((0.5 + k) * (0.5 + k) - 0.9) / w;
        let v = check_lemma_condition(&sys, &cert, &[0.0], &[0.0]).unwrap();
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn deadbeat_leaves_only_the_metric_term() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let g = DMatrix::identity(2, 2);
        let sys = ControlAffineSystem::linear(&f, &g).unwrap();
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        // K = -F  =>  L = -F W
        let l = -&f * &w;
        let m = w.clone().try_inverse().unwrap();
        for beta in [0.5, 1.0] {
            let cert = DccmCertificate::constant(&w, &l, beta, 0.0).unwrap();
            let v = check_lemma_condition(&sys, &cert, &[0.3, 0.1], &[0.0, 0.0]).unwrap();
            let expected = -(1.0 - beta) * linalg::lambda_min(&m);
            assert!((v - expected).abs() < 1e-12, "beta {beta}: {v} vs {expected}");
        }
    }

    #[test]
    fn singular_metric_is_reported() {
        let sys = scalar(0.5, 1.0);
        let cert = DccmCertificate::constant(&DMatrix::zeros(1, 1), &DMatrix::zeros(1, 1), 0.1, 0.0).unwrap();
        assert!(matches!(
            check_lemma_condition(&sys, &cert, &[0.0], &[0.0]),
            Err(DccmError::SingularMetric { .. })
        ));
    }
}
