//! Synthesis of discrete-time control contraction metrics.
//!
//! The certificate is the pair `(W, L)` of polynomial matrices with metric
//! `M = W^-1` and differential gain `K = L W^-1`. Synthesis requires the
//! contraction matrix of [`build_contraction_matrix`] and `W` itself to be
//! matrix sums of squares, which [`compile_sos`] turns into an SDP.

mod affine;
mod certificate;
mod contraction;
mod lemma;
mod sos;

pub use affine::{AffineMatrix, AffinePoly};
pub use certificate::{CertificateTemplate, DccmCertificate};
pub use contraction::{build_contraction_matrix, ContractionMatrix};
pub use lemma::{check_lemma_condition, contraction_block_matrix, ContractionEvaluator};
pub use sos::{compile_sos, GramBlock, ObjectiveMode, SosOptions, SosProgram};

use crate::error::{DccmError, Result};
use crate::sdp::{solve_sdp, SdpOptions, SdpSolution, SdpStatus};
use crate::system::ControlAffineSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthOptions {
    pub epsilon: f64,
    pub objective: ObjectiveMode,
    pub r_cap: f64,
    pub gram_degree: Option<u32>,
    pub solver: SdpOptions,
}

impl Default for SynthOptions {
    fn default() -> Self {
        let sos = SosOptions::default();
        SynthOptions {
            epsilon: sos.epsilon,
            objective: sos.objective,
            r_cap: sos.r_cap,
            gram_degree: sos.gram_degree,
            solver: SdpOptions::default(),
        }
    }
}

/// Everything produced by one synthesis run.
#[derive(Clone, Debug)]
pub struct SynthesisReport {
    pub certificate: DccmCertificate,
    pub program: SosProgram,
    pub solution: SdpSolution,
}

pub fn synthesize(sys: &ControlAffineSystem, tmpl: &CertificateTemplate, opts: &SynthOptions) -> Result<DccmCertificate> {
    synthesize_with_report(sys, tmpl, opts).map(|r| r.certificate)
}

pub fn synthesize_with_report(
    sys: &ControlAffineSystem,
    tmpl: &CertificateTemplate,
    opts: &SynthOptions,
) -> Result<SynthesisReport> {
    let cm = build_contraction_matrix(sys, tmpl)?;
    let sos_opts = SosOptions {
        gram_degree: opts.gram_degree,
        epsilon: opts.epsilon,
        objective: opts.objective,
        r_cap: opts.r_cap,
    };
    let program = compile_sos(&cm, &sos_opts)?;
    let solution = solve_sdp(&program.problem, &opts.solver)?;
    match solution.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => return Err(DccmError::SynthesisInfeasible { status: solution.status }),
        status => {
            return Err(DccmError::SolverFailure {
                status,
                detail: solution.detail.clone(),
            })
        }
    }
    let margin = program.margin(&solution.y);
    if margin < opts.epsilon - opts.solver.feas_tol {
        return Err(DccmError::SynthesisInfeasible { status: solution.status });
    }
    let certificate = DccmCertificate::from_unknowns(tmpl.clone(), program.unknowns(&solution.y), margin)?;
    Ok(SynthesisReport {
        certificate,
        program,
        solution,
    })
}
