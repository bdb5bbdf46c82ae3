//! A posteriori grid scan of a certificate.
//!
//! At every grid point the pointwise contraction value
//! `lambda_max((A + B K)^T M(x+) (A + B K) - (1 - beta) M(x))` and the
//! smallest eigenvalue of the block matrix in `(W, L)` are computed
//! independently; negativity of the first is equivalent to positivity of
//! the second, so their signs must agree.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DccmError, Result};
use crate::linalg;
use crate::synth::{ContractionEvaluator, DccmCertificate};
use crate::system::{ControlAffineSystem, StateBox};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub state_box: StateBox,
    pub input_box: StateBox,
    /// Points per axis; a single point sits at the box center.
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(state_box: StateBox, input_box: StateBox, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(DccmError::InvalidArgument("grid resolution must be at least 1".into()));
        }
        Ok(GridSpec {
            state_box,
            input_box,
            resolution,
        })
    }

    /// `[-0.5, 1.5]^2 x [-0.2, 0.2]` at 21 points per axis.
    pub fn cstr_default() -> Self {
        GridSpec {
            state_box: StateBox::new(vec![-0.5, -0.5], vec![1.5, 1.5]).expect("static box"),
            input_box: StateBox::new(vec![-0.2], vec![0.2]).expect("static box"),
            resolution: 21,
        }
    }

    pub fn num_points(&self) -> usize {
        self.resolution.pow((self.state_box.dim() + self.input_box.dim()) as u32)
    }

    fn axis(&self, lo: f64, hi: f64, i: usize) -> f64 {
        if self.resolution == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (self.resolution - 1) as f64
        }
    }

    /// Point `idx` in row-major order over `(x, u)`, last axis fastest.
    pub fn point(&self, mut idx: usize) -> (Vec<f64>, Vec<f64>) {
        let bounds: Vec<(f64, f64)> = self
            .state_box
            .lower
            .iter()
            .zip(&self.state_box.upper)
            .chain(self.input_box.lower.iter().zip(&self.input_box.upper))
            .map(|(l, u)| (*l, *u))
            .collect();
        let mut coords = vec![0.0; bounds.len()];
        for (c, &(lo, hi)) in coords.iter_mut().zip(&bounds).rev() {
            *c = self.axis(lo, hi, idx % self.resolution);
            idx /= self.resolution;
        }
        let u = coords.split_off(self.state_box.dim());
        (coords, u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub grid: GridSpec,
    pub points: usize,
    /// Largest pointwise contraction value; must be negative.
    pub max_lemma_eigenvalue: f64,
    /// Smallest eigenvalue of the block matrix; must be positive.
    pub min_block_eigenvalue: f64,
    /// Extremes of the eigenvalues of `M = W^-1` over the state grid.
    pub min_metric_eigenvalue: f64,
    pub max_metric_eigenvalue: f64,
    /// Points where `W` could not be inverted.
    pub failed_points: usize,
    /// Points where the two checks disagree in sign.
    pub sign_disagreements: usize,
    /// `(x, u)` of the largest contraction value.
    pub worst_point: Vec<f64>,
    pub pass: bool,
}

struct PointResult {
    lemma: Option<f64>,
    block: f64,
    metric: Option<(f64, f64)>,
}

fn scan_point(eval: &ContractionEvaluator, cert: &DccmCertificate, x: &[f64], u: &[f64]) -> Result<PointResult> {
    let block = linalg::lambda_min(&eval.block_matrix(x, u)?);
    let w_ev = linalg::sym_eigenvalues(&cert.w_at(x));
    let metric = if w_ev.contains(&0.0) {
        None
    } else {
        let m_ev = w_ev.iter().map(|l| 1.0 / l);
        Some(m_ev.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v))))
    };
    let lemma = eval.lemma_value(x, u).ok();
    Ok(PointResult { lemma, block, metric })
}

pub fn verify_contraction(sys: &ControlAffineSystem, cert: &DccmCertificate, grid: &GridSpec) -> Result<VerificationReport> {
    if grid.state_box.dim() != sys.n() {
        return Err(DccmError::dim("state box", sys.n(), grid.state_box.dim()));
    }
    if grid.input_box.dim() != sys.m() {
        return Err(DccmError::dim("input box", sys.m(), grid.input_box.dim()));
    }
    let eval = ContractionEvaluator::new(sys, cert)?;
    let points = grid.num_points();
    // Collected in index order so the reduction below is deterministic.
    let results: Vec<PointResult> = (0..points)
        .into_par_iter()
        .map(|idx| {
            let (x, u) = grid.point(idx);
            scan_point(&eval, cert, &x, &u)
        })
        .collect::<Result<_>>()?;

    let mut report = VerificationReport {
        grid: grid.clone(),
        points,
        max_lemma_eigenvalue: f64::NEG_INFINITY,
        min_block_eigenvalue: f64::INFINITY,
        min_metric_eigenvalue: f64::INFINITY,
        max_metric_eigenvalue: f64::NEG_INFINITY,
        failed_points: 0,
        sign_disagreements: 0,
        worst_point: Vec::new(),
        pass: false,
    };
    for (idx, r) in results.iter().enumerate() {
        report.min_block_eigenvalue = report.min_block_eigenvalue.min(r.block);
        match (r.lemma, r.metric) {
            (Some(lemma), Some((lo, hi))) => {
                if lemma > report.max_lemma_eigenvalue {
                    report.max_lemma_eigenvalue = lemma;
                    let (x, u) = grid.point(idx);
                    report.worst_point = x.into_iter().chain(u).collect();
                }
                report.min_metric_eigenvalue = report.min_metric_eigenvalue.min(lo);
                report.max_metric_eigenvalue = report.max_metric_eigenvalue.max(hi);
                if (lemma < 0.0) != (r.block > 0.0) {
                    report.sign_disagreements += 1;
                }
            }
            _ => report.failed_points += 1,
        }
    }
    report.pass = report.failed_points == 0 && report.max_lemma_eigenvalue < 0.0 && report.min_metric_eigenvalue > 0.0;
    Ok(report)
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
