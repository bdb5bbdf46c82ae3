//! Tracking control by integrating the differential gain `K = L W^-1`
//! along the geodesic from the reference to the plant state.

use nalgebra::{DMatrix, DVector};

use crate::error::{DccmError, Result};
use crate::geodesic::{compute_geodesic, GeodesicOptions, GeodesicPath};
use crate::linalg;
use crate::synth::DccmCertificate;
use crate::system::ControlAffineSystem;

/// Where the differential gain is evaluated along the path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GainEvaluation {
    /// `K(x_i)` at every geodesic node.
    #[default]
    GeodesicNodes,
    /// `K(x_k)` at the current plant state for the whole path.
    CurrentState,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerOptions {
    pub segments: usize,
    pub geodesic: GeodesicOptions,
    pub gain: GainEvaluation,
}

impl Default for ControllerOptions {
    fn default() -> Self {
        ControllerOptions {
            segments: 30,
            geodesic: GeodesicOptions::default(),
            gain: GainEvaluation::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlDecision {
    /// Applied input, `u_star + feedback_term`.
    pub u: Vec<f64>,
    /// Path from `x_star` (s = 0) to `x` (s = 1).
    pub geodesic: GeodesicPath,
    pub u_star: Vec<f64>,
    pub feedback_term: Vec<f64>,
}

/// `K(x) = L(x) W(x)^-1`, shape `m x n`.
pub fn gain_at(cert: &DccmCertificate, x: &[f64]) -> Result<DMatrix<f64>> {
    if x.len() != cert.n() {
        return Err(DccmError::dim("state", cert.n(), x.len()));
    }
    Ok(cert.l_at(x) * linalg::sym_inverse(&cert.w_at(x))?)
}

pub fn control_input(
    cert: &DccmCertificate,
    sys: &ControlAffineSystem,
    x: &[f64],
    x_star: &[f64],
    u_star: &[f64],
    segments: usize,
) -> Result<ControlDecision> {
    let opts = ControllerOptions {
        segments,
        ..ControllerOptions::default()
    };
    control_input_with(cert, sys, x, x_star, u_star, &opts)
}

/// `u = u* + sum_i K(x_i) dx_i ds` over the geodesic from `x_star` to `x`.
pub fn control_input_with(
    cert: &DccmCertificate,
    sys: &ControlAffineSystem,
    x: &[f64],
    x_star: &[f64],
    u_star: &[f64],
    opts: &ControllerOptions,
) -> Result<ControlDecision> {
    if cert.n() != sys.n() {
        return Err(DccmError::dim("certificate state dimension", sys.n(), cert.n()));
    }
    if cert.m() != sys.m() {
        return Err(DccmError::dim("certificate input dimension", sys.m(), cert.m()));
    }
    if u_star.len() != sys.m() {
        return Err(DccmError::dim("reference input", sys.m(), u_star.len()));
    }
    let geodesic = compute_geodesic(cert, x_star, x, opts.segments, &opts.geodesic)?;
    let mut fb = DVector::zeros(sys.m());
    match opts.gain {
        GainEvaluation::GeodesicNodes => {
            for (v, xi) in geodesic.deltas.iter().zip(&geodesic.nodes[1..]) {
                fb += gain_at(cert, xi)? * DVector::from_column_slice(v) * geodesic.delta_s;
            }
        }
        GainEvaluation::CurrentState => {
            let total: DVector<f64> = geodesic
                .deltas
                .iter()
                .fold(DVector::zeros(sys.n()), |a, v| a + DVector::from_column_slice(v))
                * geodesic.delta_s;
            fb = gain_at(cert, x)? * total;
        }
    }
    let feedback_term: Vec<f64> = fb.iter().copied().collect();
    let u = u_star.iter().zip(&feedback_term).map(|(a, b)| a + b).collect();
    Ok(ControlDecision {
        u,
        geodesic,
        u_star: u_star.to_vec(),
        feedback_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lti() -> (ControlAffineSystem, DccmCertificate) {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let g = DMatrix::from_row_slice(2, 1, &[0.0, 0.1]);
        let sys = ControlAffineSystem::linear(&f, &g).unwrap();
        let w = DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.0]);
        let l = DMatrix::from_row_slice(1, 2, &[-3.0, -4.0]);
        (sys, DccmCertificate::constant(&w, &l, 0.1, 0.0).unwrap())
    }

    #[test]
    fn gain_examples() {
        let l = DMatrix::from_row_slice(1, 2, &[0.3, -0.7]);
        let cert = DccmCertificate::constant(&DMatrix::identity(2, 2), &l, 0.1, 0.0).unwrap();
        assert!((gain_at(&cert, &[0.2, 0.4]).unwrap() - &l).amax() < 1e-15);
        let zero = cert.with_zero_gain();
        assert_eq!(gain_at(&zero, &[1.0, -1.0]).unwrap().amax(), 0.0);
        assert!(gain_at(&cert, &[0.0]).is_err());
    }

    #[test]
    fn reference_state_returns_reference_input() {
        let (sys, cert) = lti();
        let d = control_input(&cert, &sys, &[0.4, -0.2], &[0.4, -0.2], &[0.7], 30).unwrap();
        assert_eq!(d.u, vec![0.7]);
        assert_eq!(d.feedback_term, vec![0.0]);
        assert_eq!(d.geodesic.length, 0.0);
    }

    #[test]
    fn constant_certificate_telescopes_to_linear_feedback() {
        let (sys, cert) = lti();
        let (x, xs) = ([0.5, -0.3], [0.1, 0.2]);
        let k = gain_at(&cert, &x).unwrap();
        let expected = 0.05 + (k[(0, 0)] * 0.4 + k[(0, 1)] * -0.5);
        for gain in [GainEvaluation::GeodesicNodes, GainEvaluation::CurrentState] {
            let opts = ControllerOptions {
                gain,
                ..ControllerOptions::default()
            };
            let d = control_input_with(&cert, &sys, &x, &xs, &[0.05], &opts).unwrap();
            assert!((d.u[0] - expected).abs() < 1e-12, "{gain:?}: {} vs {expected}", d.u[0]);
            assert_eq!(d.u[0], d.u_star[0] + d.feedback_term[0]);
        }
    }
}
