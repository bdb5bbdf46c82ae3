//! Discretized minimizing curves under the metric `M(x) = W(x)^-1`.
//!
//! A path from `x_from` to `x_to` is split into `N` segments of parameter
//! length `ds = 1/N` with displacement rates `v_1..v_N`. Node `x_i` is
//! `x_from + ds * (v_1 + ... + v_i)` and the discrete energy is
//! `sum_i v_i^T M(x_i) v_i ds`, subject to `ds * sum_i v_i = x_to - x_from`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{DccmError, Result};
use crate::linalg;
use crate::synth::DccmCertificate;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicOptions {
    pub max_iters: usize,
    /// Bound on the Euclidean norm of the projected gradient.
    pub tol: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            max_iters: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub x_from: Vec<f64>,
    pub x_to: Vec<f64>,
    pub delta_s: f64,
    /// Displacement rates, one per segment.
    pub deltas: Vec<Vec<f64>>,
    /// `N + 1` nodes starting at `x_from`.
    pub nodes: Vec<Vec<f64>>,
    pub energy: f64,
    pub length: f64,
    pub iterations: usize,
    /// False when the iteration limit was hit first; the path is then the best found.
    pub converged: bool,
}

impl GeodesicPath {
    pub fn segments(&self) -> usize {
        self.deltas.len()
    }

    /// Errors when the solver stopped at its iteration limit.
    pub fn ensure_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(DccmError::GeodesicMaxIterations {
                iterations: self.iterations,
            })
        }
    }

    /// Columns `s, x.., dx.., segment_energy`, one row per segment end.
    pub fn to_csv(&self, cert: &DccmCertificate) -> Result<String> {
        let n = self.x_from.len();
        let mut out = String::from("s");
        for i in 1..=n {
            write!(out, ",x{i}").unwrap();
        }
        for i in 1..=n {
            write!(out, ",dx{i}").unwrap();
        }
        out.push_str(",segment_energy\n");
        for (i, v) in self.deltas.iter().enumerate() {
            let x = &self.nodes[i + 1];
            let m = metric_at(cert, x)?;
            let vv = DVector::from_column_slice(v);
            let e = vv.dot(&(&m * &vv)) * self.delta_s;
            write!(out, "{:.16e}", (i + 1) as f64 * self.delta_s).unwrap();
            for c in x.iter().chain(v) {
                write!(out, ",{c:.16e}").unwrap();
            }
            writeln!(out, ",{e:.16e}").unwrap();
        }
        Ok(out)
    }
}

/// `M(x) = W(x)^-1`, rejecting indefinite or ill-conditioned `W(x)`.
pub fn metric_at(cert: &DccmCertificate, x: &[f64]) -> Result<DMatrix<f64>> {
    if x.len() != cert.n() {
        return Err(DccmError::dim("state", cert.n(), x.len()));
    }
    linalg::spd_inverse(&cert.w_at(x))
}

fn nodes_of(x_from: &[f64], deltas: &[DVector<f64>], ds: f64) -> Vec<DVector<f64>> {
    let mut x = DVector::from_column_slice(x_from);
    let mut nodes = Vec::with_capacity(deltas.len() + 1);
    nodes.push(x.clone());
    for v in deltas {
        x += v * ds;
        nodes.push(x.clone());
    }
    nodes
}

/// Discrete energy and length of the path with rates `deltas`.
pub fn path_energy_of(cert: &DccmCertificate, x_from: &[f64], deltas: &[Vec<f64>]) -> Result<(f64, f64)> {
    let ds = 1.0 / deltas.len().max(1) as f64;
    let vs: Vec<DVector<f64>> = deltas.iter().map(|v| DVector::from_column_slice(v)).collect();
    let nodes = nodes_of(x_from, &vs, ds);
    let mut energy = 0.0;
    let mut length = 0.0;
    for (v, x) in vs.iter().zip(&nodes[1..]) {
        let q = v.dot(&(metric_at(cert, x.as_slice())? * v)).max(0.0);
        energy += q * ds;
        length += q.sqrt() * ds;
    }
    Ok((energy, length))
}

pub fn path_energy(path: &GeodesicPath, cert: &DccmCertificate) -> Result<(f64, f64)> {
    path_energy_of(cert, &path.x_from, &path.deltas)
}

struct Objective {
    energy: f64,
    grad: Vec<DVector<f64>>,
    /// `W(x_i)`, reused as the preconditioner.
    w: Vec<DMatrix<f64>>,
}

fn objective(cert: &DccmCertificate, x_from: &[f64], vs: &[DVector<f64>], ds: f64) -> Result<Objective> {
    let n = x_from.len();
    let nodes = nodes_of(x_from, vs, ds);
    let mut energy = 0.0;
    let mut grad = Vec::with_capacity(vs.len());
    let mut w_all = Vec::with_capacity(vs.len());
    // h_i = d/dx [v_i^T M(x) v_i] at x_i = -(M v)^T dW/dx_l (M v)
    let mut h = Vec::with_capacity(vs.len());
    for (v, x) in vs.iter().zip(&nodes[1..]) {
        let w = cert.w_at(x.as_slice());
        let m = linalg::spd_inverse(&w)?;
        let mv = &m * v;
        energy += v.dot(&mv) * ds;
        grad.push(&mv * (2.0 * ds));
        h.push(DVector::from_iterator(
            n,
            (0..n).map(|l| -mv.dot(&(cert.dw_at(l, x.as_slice()) * &mv))),
        ));
        w_all.push(w);
    }
    // x_i depends on v_j for every j <= i with weight ds.
    let mut suffix = DVector::zeros(n);
    for j in (0..vs.len()).rev() {
        suffix += &h[j];
        grad[j] += &suffix * (ds * ds);
    }
    Ok(Objective {
        energy,
        grad,
        w: w_all,
    })
}

/// Energy and its gradient with respect to the displacement rates.
pub fn energy_gradient(cert: &DccmCertificate, x_from: &[f64], deltas: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    let ds = 1.0 / deltas.len().max(1) as f64;
    let vs: Vec<DVector<f64>> = deltas.iter().map(|v| DVector::from_column_slice(v)).collect();
    let obj = objective(cert, x_from, &vs, ds)?;
    Ok((obj.energy, obj.grad.iter().map(|g| g.iter().copied().collect()).collect()))
}

fn projected_norm(grad: &[DVector<f64>]) -> f64 {
    let mean = grad.iter().fold(DVector::zeros(grad[0].len()), |a, g| a + g) / grad.len() as f64;
    grad.iter().map(|g| (g - &mean).norm_squared()).sum::<f64>().sqrt()
}

/// Minimizes the discrete energy by preconditioned projected gradient
/// descent from the straight line.
///
/// The search direction is `d_i = -W(x_i) (g_i - lambda)`, with `lambda`
/// chosen so that `sum_i d_i = 0` keeps the endpoint fixed; it is the exact
/// minimizer when the metric is constant.
pub fn compute_geodesic(
    cert: &DccmCertificate,
    x_from: &[f64],
    x_to: &[f64],
    segments: usize,
    opts: &GeodesicOptions,
) -> Result<GeodesicPath> {
    let n = cert.n();
    if x_from.len() != n {
        return Err(DccmError::dim("geodesic start", n, x_from.len()));
    }
    if x_to.len() != n {
        return Err(DccmError::dim("geodesic end", n, x_to.len()));
    }
    if segments == 0 {
        return Err(DccmError::InvalidArgument("geodesic needs at least one segment".into()));
    }
    let ds = 1.0 / segments as f64;
    let total = DVector::from_column_slice(x_to) - DVector::from_column_slice(x_from);
    let mut vs = vec![total.clone(); segments];
    let mut obj = objective(cert, x_from, &vs, ds)?;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        if projected_norm(&obj.grad) <= opts.tol || total.amax() == 0.0 {
            converged = true;
            break;
        }
        let w_sum = obj.w.iter().fold(DMatrix::zeros(n, n), |a, w| a + w);
        let wg_sum = obj.w.iter().zip(&obj.grad).fold(DVector::zeros(n), |a, (w, g)| a + w * g);
        let Some(lambda) = w_sum.lu().solve(&wg_sum) else {
            return Err(DccmError::SingularMetric { condition: f64::INFINITY });
        };
        let dirs: Vec<DVector<f64>> = obj.w.iter().zip(&obj.grad).map(|(w, g)| -(w * (g - &lambda)) / (2.0 * ds)).collect();
        let slope: f64 = dirs.iter().zip(&obj.grad).map(|(d, g)| d.dot(g)).sum();
        if slope >= 0.0 {
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-12 {
            let cand: Vec<DVector<f64>> = vs.iter().zip(&dirs).map(|(v, d)| v + d * alpha).collect();
            // Metric failures along the trial path only shorten the step.
            if let Ok(next) = objective(cert, x_from, &cand, ds) {
                if next.energy <= obj.energy + 1e-4 * alpha * slope {
                    accepted = Some((cand, next));
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, next)) => {
                vs = cand;
                obj = next;
            }
            // No decrease is representable any more: the point is stationary to roundoff.
            None => {
                converged = projected_norm(&obj.grad) <= opts.tol.sqrt() * (1.0 + obj.energy);
                break;
            }
        }
    }

    // Re-impose the endpoint exactly by spreading the accumulated drift.
    let sum = vs.iter().fold(DVector::zeros(n), |a, v| a + v) * ds;
    let drift = (&total - sum) / (segments as f64 * ds);
    for v in &mut vs {
        *v += &drift;
    }
    let deltas: Vec<Vec<f64>> = vs.iter().map(|v| v.iter().copied().collect()).collect();
    let mut nodes: Vec<Vec<f64>> = nodes_of(x_from, &vs, ds).iter().map(|x| x.iter().copied().collect()).collect();
    nodes[segments] = x_to.to_vec();
    let (energy, length) = path_energy_of(cert, x_from, &deltas)?;
    Ok(GeodesicPath {
        x_from: x_from.to_vec(),
        x_to: x_to.to_vec(),
        delta_s: ds,
        deltas,
        nodes,
        energy,
        length,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_cert(w: &[f64]) -> DccmCertificate {
        let n = (w.len() as f64).sqrt() as usize;
        let wm = DMatrix::from_row_slice(n, n, w);
        DccmCertificate::constant(&wm, &DMatrix::zeros(1, n), 0.1, 1.0).unwrap()
    }

    /// W(x) = diag(1 + x1^2, 1) on two states.
    fn curved_cert() -> DccmCertificate {
        let tmpl = crate::synth::CertificateTemplate::uniform(2, 1, 2, 0.1).unwrap();
        // basis: 1, x1, x2, x1^2, x1 x2, x2^2
        let w = vec![
            vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0; 6],
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ];
        DccmCertificate::new(tmpl, w, vec![vec![0.0; 6]; 2], 1.0).unwrap()
    }

    #[test]
    fn metric_of_constant_duals() {
        let m = metric_at(&constant_cert(&[2.0, 0.0, 0.0, 2.0]), &[0.3, -1.0]).unwrap();
        assert!((m - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
        let m = metric_at(&constant_cert(&[4.0, 0.0, 0.0, 1.0]), &[0.0, 0.0]).unwrap();
        assert!((m - DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 1.0])).amax() < 1e-15);
        assert!(matches!(
            metric_at(&constant_cert(&[-1.0, 0.0, 0.0, 1.0]), &[0.0, 0.0]),
            Err(DccmError::NonPositiveMetric { .. })
        ));
    }

    #[test]
    fn coincident_endpoints_give_the_zero_path() {
        let cert = curved_cert();
        let p = compute_geodesic(&cert, &[0.4, 0.2], &[0.4, 0.2], 10, &GeodesicOptions::default()).unwrap();
        assert!(p.converged);
        assert_eq!((p.energy, p.length), (0.0, 0.0));
        assert!(p.deltas.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn euclidean_straight_line() {
        let cert = constant_cert(&[1.0, 0.0, 0.0, 1.0]);
        let p = compute_geodesic(&cert, &[0.0, 0.0], &[3.0, 4.0], 7, &GeodesicOptions::default()).unwrap();
        assert!((p.energy - 25.0).abs() < 1e-12);
        assert!((p.length - 5.0).abs() < 1e-12);
    }

    #[test]
    fn curved_metric_beats_straight_line_and_keeps_endpoints() {
        let cert = curved_cert();
        let (a, b) = ([-1.0, 0.0], [1.0, 1.0]);
        let straight = path_energy_of(&cert, &a, &vec![vec![2.0, 1.0]; 20]).unwrap().0;
        let p = compute_geodesic(&cert, &a, &b, 20, &GeodesicOptions::default()).unwrap();
        assert!(p.converged, "{} iterations", p.iterations);
        assert!(p.energy < straight - 1e-3);
        assert!(p.energy >= p.length * p.length - 1e-12);
        let end: Vec<f64> = (0..2)
            .map(|c| a[c] + p.deltas.iter().map(|v| v[c]).sum::<f64>() * p.delta_s)
            .collect();
        assert!((end[0] - b[0]).abs() < 1e-9 && (end[1] - b[1]).abs() < 1e-9);
    }

    #[test]
    fn csv_has_one_row_per_segment() {
        let cert = curved_cert();
        let p = compute_geodesic(&cert, &[0.0, 0.0], &[1.0, 0.0], 4, &GeodesicOptions::default()).unwrap();
        let csv = p.to_csv(&cert).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "s,x1,x2,dx1,dx2,segment_energy");
        assert_eq!(lines.len(), 5);
    }
}
