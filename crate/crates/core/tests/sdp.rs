mod common;

use common::*;
use dccm::sdp::{solve_sdp, SdpOptions, SdpStatus};

#[test]
fn micro_problems_reach_their_analytic_optima() {
    let cases = micro_sdps();
    assert!(cases.len() >= 5);
    for (name, problem, optimum) in cases {
        let sol = solve_sdp(&problem, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "{name}");
        assert!((sol.objective_value - optimum).abs() < 1e-6, "{name}: {} vs {optimum}", sol.objective_value);
        assert!(sol.min_block_eigenvalue >= -1e-7, "{name}");
        assert!(problem.equality_residual(&sol.y) < 1e-9, "{name}");
    }
}

#[test]
fn contradictory_problem_is_infeasible() {
    let sol = solve_sdp(&infeasible_sdp(), &SdpOptions::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
}
