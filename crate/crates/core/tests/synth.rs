mod common;

use common::*;
use dccm::io::parse_json;
use dccm::synth::{
    build_contraction_matrix, check_lemma_condition, compile_sos, synthesize, synthesize_with_report,
    CertificateTemplate, DccmCertificate, ObjectiveMode, SosOptions, SynthOptions,
};
use dccm::system::{cstr_preset, ControlAffineSystem};
use dccm::DccmError;

#[test]
fn cstr_certificate_is_sound_on_random_points() {
    let sys = cstr_preset();
    let cert = cstr_certificate();
    assert!(cert.margin() >= 1e-4);
    for i in 0..200 {
        let t = i as f64 * 0.618;
        let x = [-0.5 + 2.0 * t.fract(), -0.5 + 2.0 * (t * 1.7).fract()];
        let u = [-0.2 + 0.4 * (t * 2.3).fract()];
        assert!(check_lemma_condition(&sys, cert, &x, &u).unwrap() < 0.0);
    }
}

#[test]
fn cstr_gram_residual_is_small() {
    let tmpl = CertificateTemplate::uniform(2, 1, 2, 0.1).unwrap();
    let rep = synthesize_with_report(&cstr_preset(), &tmpl, &SynthOptions::default()).unwrap();
    assert!(rep.program.gram_residual(&rep.solution.y) < 1e-7);
    assert!(rep.solution.min_block_eigenvalue >= -1e-7);
}

#[test]
fn certificate_json_round_trips() {
    let cert = cstr_certificate();
    let back: DccmCertificate = parse_json(&cert.to_json(), "cert.json").unwrap();
    assert_eq!(&back, cert);
    assert_eq!(back.w_at(&[0.3, 0.7]), cert.w_at(&[0.3, 0.7]));
}

#[test]
fn unstabilizable_pair_is_infeasible() {
    let tmpl = CertificateTemplate::uniform(1, 1, 0, 0.1).unwrap();
    let err = synthesize(&scalar_system(2.0, 0.0), &tmpl, &SynthOptions::default()).unwrap_err();
    assert!(matches!(err, DccmError::SynthesisInfeasible { .. }), "{err}");
}

#[test]
fn feasibility_mode_on_cstr() {
    let tmpl = CertificateTemplate::uniform(2, 1, 2, 0.1).unwrap();
    let opts = SynthOptions {
        objective: ObjectiveMode::FeasibilityOnly,
        ..SynthOptions::default()
    };
    let cert = synthesize(&cstr_preset(), &tmpl, &opts).unwrap();
    assert!((cert.margin() - opts.epsilon).abs() < 1e-8);
}

#[test]
fn degree_six_program_compiles() {
    let tmpl = CertificateTemplate::uniform(2, 1, 6, 0.1).unwrap();
    let cm = build_contraction_matrix(&cstr_preset(), &tmpl).unwrap();
    assert_eq!(cm.degree(), 12);
    let program = compile_sos(&cm, &SosOptions::default()).unwrap();
    assert_eq!(program.num_unknowns, 3 * 28 + 2 * 28);
    assert!(program.problem.validate().is_ok());
}

/// A degree-2 certificate embeds in the degree-4 program, so the margin cannot drop.
/// Takes several minutes in release mode.
#[test]
#[ignore]
fn degree_four_margin_matches_degree_two() {
    let tmpl = CertificateTemplate::uniform(2, 1, 4, 0.1).unwrap();
    let cert = synthesize(&cstr_preset(), &tmpl, &SynthOptions::default()).unwrap();
    assert!(cert.margin() >= cstr_certificate().margin() - 1e-6, "{}", cert.margin());
}

#[test]
fn dimension_mismatch_is_reported() {
    let tmpl = CertificateTemplate::uniform(1, 1, 0, 0.1).unwrap();
    let err = synthesize(&cstr_preset(), &tmpl, &SynthOptions::default()).unwrap_err();
    assert!(matches!(err, DccmError::DimensionMismatch { .. }));
}

#[test]
fn system_file_matches_the_preset() {
    let text = include_str!("../../../data/cstr.json");
    let sys: ControlAffineSystem = parse_json(text, "cstr.json").unwrap();
    assert_eq!(sys, cstr_preset());
}
