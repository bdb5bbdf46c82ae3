//! Discrete-time control-affine plants `x+ = f(x) + g(x) u`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DccmError, Result};
use crate::poly::{jacobian, PolyMatrix, Polynomial};

/// Axis-aligned box `lower <= x <= upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StateBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(DccmError::dim("box bounds", lower.len(), upper.len()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(DccmError::InvalidArgument(format!(
                "empty box: lower {lower:?} upper {upper:?}"
            )));
        }
        Ok(StateBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct ControlAffineSystem {
    n: usize,
    m: usize,
    f: Vec<Polynomial>,
    g: PolyMatrix,
    /// Used only to size verification grids; never enforced while stepping.
    domain: Option<StateBox>,
}

/// Symbolic differential dynamics: `A = d(f + g u)/dx` in `(x, u)` and `B = g` in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linearization {
    pub a: PolyMatrix,
    pub b: PolyMatrix,
}

impl ControlAffineSystem {
    pub fn new(f: Vec<Polynomial>, g: PolyMatrix, domain: Option<StateBox>) -> Result<Self> {
        let n = f.len();
        if n == 0 {
            return Err(DccmError::InvalidArgument("system needs at least one state".into()));
        }
        if let Some(bad) = f.iter().find(|p| p.n_vars() != n) {
            return Err(DccmError::dim("f variable count", n, bad.n_vars()));
        }
        if g.rows() != n {
            return Err(DccmError::dim("g rows", n, g.rows()));
        }
        if g.n_vars() != n {
            return Err(DccmError::dim("g variable count", n, g.n_vars()));
        }
        let m = g.cols();
        if m == 0 {
            return Err(DccmError::InvalidArgument("system needs at least one input".into()));
        }
        if let Some(d) = &domain {
            if d.dim() != n {
                return Err(DccmError::dim("domain dimension", n, d.dim()));
            }
        }
        Ok(ControlAffineSystem { n, m, f, g, domain })
    }

    /// `x+ = F x + G u` with constant matrices.
    pub fn linear(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Self> {
        let n = f.nrows();
        if f.ncols() != n {
            return Err(DccmError::dim("linear system F columns", n, f.ncols()));
        }
        let fx = (0..n)
            .map(|i| {
                Polynomial::from_terms(
                    n,
                    (0..n).map(|j| (crate::poly::Monomial::var(n, j), f[(i, j)])),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fx, PolyMatrix::from_constant(g, n), None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn f(&self) -> &[Polynomial] {
        &self.f
    }

    pub fn g(&self) -> &PolyMatrix {
        &self.g
    }

    pub fn domain(&self) -> Option<&StateBox> {
        self.domain.as_ref()
    }

    pub fn with_domain(mut self, domain: StateBox) -> Result<Self> {
        if domain.dim() != self.n {
            return Err(DccmError::dim("domain dimension", self.n, domain.dim()));
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(DccmError::dim("state", self.n, x.len()));
        }
        if u.len() != self.m {
            return Err(DccmError::dim("input", self.m, u.len()));
        }
        Ok(self.step_unchecked(x, u))
    }

    pub(crate) fn step_unchecked(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.f[i].eval(x)
                    + (0..self.m).map(|j| self.g.get(i, j).eval(x) * u[j]).sum::<f64>()
            })
            .collect()
    }

    /// `f(x) + g(x) u` as polynomials in the `n + m` variables `(x, u)`.
    pub fn dynamics_in_xu(&self) -> Vec<Polynomial> {
        let nv = self.n + self.m;
        (0..self.n)
            .map(|i| {
                let mut p = self.f[i].extend_vars(nv);
                for j in 0..self.m {
                    let term = &self.g.get(i, j).extend_vars(nv) * &Polynomial::var(nv, self.n + j);
                    p = &p + &term;
                }
                p
            })
            .collect()
    }

    pub fn linearize(&self) -> Linearization {
        let full = jacobian(&self.dynamics_in_xu(), self.n + self.m)
            .expect("dynamics share the (x, u) variable count");
        let a_entries = (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| full.get(i, j).clone())
            .collect();
        let a = PolyMatrix::new(self.n, self.n, self.n + self.m, a_entries)
            .expect("shape is consistent by construction");
        Linearization {
            a,
            b: self.g.clone(),
        }
    }

    /// Indices of state coordinates that no input enters directly
    /// (rows of `g` that are identically zero).
    pub fn unactuated_coordinates(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| (0..self.m).all(|j| self.g.get(i, j).is_zero()))
            .collect()
    }
}

/// The unitless two-state CSTR model
/// `x1+ = 1.1 x1 - 0.1 x1 x2 + u`, `x2+ = 0.9 x2 + 0.1 x1`.
pub fn cstr_preset() -> ControlAffineSystem {
    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    let f = vec![
        &x1.scale(1.1) - &(&x1 * &x2).scale(0.1),
        &x2.scale(0.9) + &x1.scale(0.1),
    ];
    let g = PolyMatrix::new(2, 1, 2, vec![Polynomial::constant(2, 1.0), Polynomial::zero(2)])
        .expect("static shape");
    ControlAffineSystem::new(f, g, None).expect("static CSTR model is valid")
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    n: usize,
    m: usize,
    f: Vec<Polynomial>,
    g: Vec<Vec<Polynomial>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<StateBox>,
}

impl TryFrom<SystemRepr> for ControlAffineSystem {
    type Error = DccmError;

    fn try_from(r: SystemRepr) -> Result<Self> {
        if r.f.len() != r.n {
            return Err(DccmError::dim("f length", r.n, r.f.len()));
        }
        if r.g.len() != r.n {
            return Err(DccmError::dim("g rows", r.n, r.g.len()));
        }
        let g = PolyMatrix::from_rows(r.n, r.g)?;
        if g.cols() != r.m {
            return Err(DccmError::dim("g columns", r.m, g.cols()));
        }
        ControlAffineSystem::new(r.f, g, r.domain)
    }
}

impl From<ControlAffineSystem> for SystemRepr {
    fn from(s: ControlAffineSystem) -> Self {
        let g = (0..s.n)
            .map(|i| (0..s.m).map(|j| s.g.get(i, j).clone()).collect())
            .collect();
        SystemRepr {
            n: s.n,
            m: s.m,
            f: s.f,
            g,
            domain: s.domain,
        }
    }
}
