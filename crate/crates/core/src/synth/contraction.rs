//! The contraction matrix
//!
//! ```text
//! Omega(x, u) = [[ W(x+),            A W + B L ],
//!                [ (A W + B L)^T,    (1 - beta) W ]]
//! ```
//!
//! with `x+ = f(x) + g(x) u`, as a matrix affine in the template unknowns.

use super::affine::AffineMatrix;
use super::certificate::CertificateTemplate;
use crate::error::{DccmError, Result};
use crate::poly::{PolyMatrix, Polynomial};
use crate::system::ControlAffineSystem;

#[derive(Clone, Debug)]
pub struct ContractionMatrix {
    /// `2n x 2n`, symmetric, in the `n + m` variables `(x, u)`.
    pub omega: AffineMatrix,
    /// `W(x)` when it carries unknowns; its positivity is certified alongside `omega`.
    pub metric: Option<AffineMatrix>,
    /// Coordinates whose block of `W` is normalized during synthesis.
    pub normalized: Vec<usize>,
    pub num_unknowns: usize,
}

impl ContractionMatrix {
    /// A fixed symmetric matrix with no unknowns and no metric side condition.
    pub fn known(omega: &PolyMatrix) -> Result<Self> {
        if !omega.is_symmetric() {
            return Err(DccmError::InvalidArgument("contraction matrix must be symmetric".into()));
        }
        Ok(ContractionMatrix {
            omega: AffineMatrix::known(omega),
            metric: None,
            normalized: Vec::new(),
            num_unknowns: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.rows()
    }

    pub fn degree(&self) -> u32 {
        self.omega.degree()
    }
}

pub fn build_contraction_matrix(sys: &ControlAffineSystem, tmpl: &CertificateTemplate) -> Result<ContractionMatrix> {
    if tmpl.n() != sys.n() {
        return Err(DccmError::dim("template state dimension", sys.n(), tmpl.n()));
    }
    if tmpl.m() != sys.m() {
        return Err(DccmError::dim("template input dimension", sys.m(), tmpl.m()));
    }
    let n = sys.n();
    let nv = n + sys.m();
    let w = tmpl.w_affine();
    let l = tmpl.l_affine();
    let lin = sys.linearize();

    // W(x+): substitute the dynamics into every basis monomial once.
    let next = sys.dynamics_in_xu();
    let composed: Vec<Polynomial> = tmpl
        .basis()
        .monomials()
        .iter()
        .map(|mono| Polynomial::monomial(mono.clone(), 1.0).compose(&next))
        .collect::<Result<_>>()?;
    let mut w_next = AffineMatrix::zeros(n, n, nv);
    for i in 0..n {
        for j in 0..n {
            let mut acc = super::affine::AffinePoly::zero(nv);
            for (k, p) in w.get(i, j).linear() {
                for (mono, c) in p.terms() {
                    let idx = tmpl.basis().position(mono).expect("W entries live in the template basis");
                    acc = acc.add(&super::affine::AffinePoly::unknown(k, composed[idx].scale(c)));
                }
            }
            w_next.set(i, j, acc);
        }
    }

    let w_xu = w.extend_vars(nv);
    let l_xu = l.extend_vars(nv);
    let b_xu = lin.b.extend_vars(nv);
    let off = w_xu.left_mul(&lin.a)?.add(&l_xu.left_mul(&b_xu)?)?;
    let omega = AffineMatrix::blocks(&w_next, &off, &off.transpose(), &w_xu.scale(1.0 - tmpl.beta()))?;

    let mut normalized = sys.unactuated_coordinates();
    if normalized.is_empty() {
        normalized = (0..n).collect();
    }
    Ok(ContractionMatrix {
        omega,
        metric: Some(w),
        normalized,
        num_unknowns: tmpl.num_unknowns(),
    })
}
