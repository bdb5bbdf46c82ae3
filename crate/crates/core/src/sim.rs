//! Closed-loop simulation against a piecewise-constant reference.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctrl::{control_input_with, ControllerOptions};
use crate::error::{DccmError, Result};
use crate::geodesic::GeodesicPath;
use crate::synth::DccmCertificate;
use crate::system::ControlAffineSystem;

/// Largest steady-state residual `|step(x*, u*) - x*|` accepted in a schedule.
pub const STEADY_STATE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSegment {
    pub start_step: usize,
    pub x_star: Vec<f64>,
    pub u_star: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSchedule {
    pub segments: Vec<ReferenceSegment>,
    pub total_steps: usize,
}

impl ReferenceSchedule {
    /// Setpoints 0, 1 and 0.5 switched at steps 33 and 66 over 100 steps.
    pub fn cstr_default() -> Self {
        let seg = |start_step, x: f64, u: f64| ReferenceSegment {
            start_step,
            x_star: vec![x, x],
            u_star: vec![u],
        };
        ReferenceSchedule {
            segments: vec![seg(0, 0.0, 0.0), seg(33, 1.0, 0.0), seg(66, 0.5, -0.025)],
            total_steps: 100,
        }
    }

    /// Checks ordering and that every setpoint is an equilibrium of `sys`.
    pub fn validate(&self, sys: &ControlAffineSystem) -> Result<()> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| DccmError::InvalidArgument("schedule has no segments".into()))?;
        if first.start_step != 0 {
            return Err(DccmError::InvalidArgument(format!(
                "first segment starts at step {}, expected 0",
                first.start_step
            )));
        }
        for w in self.segments.windows(2) {
            if w[1].start_step <= w[0].start_step {
                return Err(DccmError::InvalidArgument(format!(
                    "segment start steps not increasing: {} then {}",
                    w[0].start_step, w[1].start_step
                )));
            }
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let next = sys.step(&seg.x_star, &seg.u_star)?;
            let res = next
                .iter()
                .zip(&seg.x_star)
                .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
            if !(res <= STEADY_STATE_TOL) {
                return Err(DccmError::InvalidArgument(format!(
                    "segment {i} is not a steady state: |step(x*, u*) - x*| = {res:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// The segment active at step `k`.
    pub fn at(&self, k: usize) -> &ReferenceSegment {
        let idx = self.segments.partition_point(|s| s.start_step <= k);
        &self.segments[idx.max(1) - 1]
    }

    /// Steps at which a segment other than the first begins.
    pub fn switch_steps(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|s| s.start_step).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub x_star: Vec<f64>,
    pub u_star: Vec<f64>,
    /// Geodesic energy and length between `x_star` and `x`.
    pub energy: f64,
    pub length: f64,
    pub geodesic_iterations: usize,
    pub geodesic_converged: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<TrajectoryRow>,
    /// The geodesic used at each step, for audit.
    pub geodesics: Vec<GeodesicPath>,
    /// State after the last logged step.
    pub final_state: Vec<f64>,
}

impl TrajectoryLog {
    /// Largest deviation between each logged successor state and a fresh
    /// plant step from the logged state and input.
    pub fn replay_error(&self, sys: &ControlAffineSystem) -> Result<f64> {
        let mut worst = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            let next = sys.step(&row.x, &row.u)?;
            let logged = self.rows.get(i + 1).map_or(&self.final_state, |r| &r.x);
            for (a, b) in next.iter().zip(logged) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    /// `k, x1.., u1.., x1_star.., u1_star.., energy, length` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let (n, m) = self.rows.first().map_or((0, 0), |r| (r.x.len(), r.u.len()));
        let mut out = String::from("k");
        for i in 1..=n {
            write!(out, ",x{i}").unwrap();
        }
        for i in 1..=m {
            write!(out, ",u{i}").unwrap();
        }
        for i in 1..=n {
            write!(out, ",x{i}_star").unwrap();
        }
        for i in 1..=m {
            write!(out, ",u{i}_star").unwrap();
        }
        out.push_str(",energy,length\n");
        for r in &self.rows {
            write!(out, "{}", r.k).unwrap();
            for v in r.x.iter().chain(&r.u).chain(&r.x_star).chain(&r.u_star) {
                write!(out, ",{v:.16e}").unwrap();
            }
            writeln!(out, ",{:.16e},{:.16e}", r.energy, r.length).unwrap();
        }
        out
    }
}

/// A simulation that stopped early, with everything logged before the failing step.
#[derive(Debug, Error)]
#[error("simulation aborted at step {step}: {source}")]
pub struct SimulationFailure {
    pub step: usize,
    pub log: Box<TrajectoryLog>,
    #[source]
    pub source: DccmError,
}

pub fn simulate(
    sys: &ControlAffineSystem,
    cert: &DccmCertificate,
    schedule: &ReferenceSchedule,
    x0: &[f64],
    geodesic_segments: usize,
) -> std::result::Result<TrajectoryLog, SimulationFailure> {
    let opts = ControllerOptions {
        segments: geodesic_segments,
        ..ControllerOptions::default()
    };
    simulate_with(sys, cert, schedule, x0, &opts)
}

pub fn simulate_with(
    sys: &ControlAffineSystem,
    cert: &DccmCertificate,
    schedule: &ReferenceSchedule,
    x0: &[f64],
    opts: &ControllerOptions,
) -> std::result::Result<TrajectoryLog, SimulationFailure> {
    let mut log = TrajectoryLog {
        final_state: x0.to_vec(),
        ..TrajectoryLog::default()
    };
    let fail = |step, log, source| SimulationFailure {
        step,
        log: Box::new(log),
        source,
    };
    if x0.len() != sys.n() {
        return Err(fail(0, log, DccmError::dim("initial state", sys.n(), x0.len())));
    }
    if let Err(e) = schedule.validate(sys) {
        return Err(fail(0, log, e));
    }
    let mut x = x0.to_vec();
    for k in 0..schedule.total_steps {
        let seg = schedule.at(k);
        let decision = match control_input_with(cert, sys, &x, &seg.x_star, &seg.u_star, opts) {
            Ok(d) => d,
            Err(e) => return Err(fail(k, log, e)),
        };
        let next = match sys.step(&x, &decision.u) {
            Ok(v) => v,
            Err(e) => return Err(fail(k, log, e)),
        };
        log.rows.push(TrajectoryRow {
            k,
            x: x.clone(),
            u: decision.u.clone(),
            x_star: seg.x_star.clone(),
            u_star: seg.u_star.clone(),
            energy: decision.geodesic.energy,
            length: decision.geodesic.length,
            geodesic_iterations: decision.geodesic.iterations,
            geodesic_converged: decision.geodesic.converged,
        });
        log.geodesics.push(decision.geodesic);
        log.final_state = next.clone();
        x = next;
    }
    Ok(log)
}
