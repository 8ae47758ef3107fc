//! End-to-end acceptance run: the ten criteria at their stated tolerances.
//!
//! Every bound is restated here instead of read back from the report, so a
//! loosened tolerance inside the verifier cannot pass unnoticed.

use std::fs;

use vlasov::commands;
use vlasov::config::{Mode, RunConfig};
use vlasov::report::{Relation, VerifyReport};

use Relation::{Above, AtLeast, AtMost, Below};

struct Expect {
    claim: &'static str,
    relation: Relation,
    bound: f64,
}

const fn at_most(claim: &'static str, bound: f64) -> Expect {
    Expect {
        claim,
        relation: AtMost,
        bound,
    }
}

const fn expect(claim: &'static str, relation: Relation, bound: f64) -> Expect {
    Expect { claim, relation, bound }
}

const STEADY_STATE: &[Expect] = &[
    expect("steady_state.mass_positive", Above, 0.0),
    expect("steady_state.radius_finite", Below, f64::MAX),
    at_most("steady_state.poisson_residual", 1e-6),
    expect("steady_state.potential_increasing", Above, 0.0),
    expect("steady_state.point_mass_lower_bound", AtLeast, 0.0),
    at_most("steady_state.exterior_matching", 1e-10),
];

const EFFECTIVE: &[Expect] = &[
    at_most("effective.turning_points", 1e-10),
    expect("effective.outer_turning_point", Below, 1.0),
    expect("effective.concavity", AtLeast, -1e-10),
];

const PERIODS: &[Expect] = &[at_most("period.cross_validation", 1e-6), at_most("period.bound", 1.0)];

const POINT_MASS: &[Expect] = &[
    at_most("period.cross_validation", 1e-6),
    at_most("period.kepler", 1e-8),
    at_most("period.l_independence", 1e-8),
];

const PROJECTION: &[Expect] = &[
    at_most("projection.idempotence", 1e-6),
    at_most("projection.self_adjoint", 1e-6),
    at_most("projection.contraction", 1.0 + 1e-10),
    at_most("projection.time_average", 1e-7),
];

const MASS: &[Expect] = &[at_most("mass.identity", 1e-4), at_most("mass.jacobian_monte_carlo", 3.0)];

const TRANSPORT: &[Expect] = &[
    at_most("transport.energy_annihilated", 1e-12),
    at_most("transport.multiplier_l", 1e-12),
    at_most("transport.multiplier_e", 1e-12),
    at_most("transport.skew_symmetry", 1e-6),
    expect("transport.skew_refinement", Below, 1.0),
];

const FLOW: &[Expect] = &[at_most("flow.unitarity", 1e-5), at_most("flow.area", 1e-6)];

const KERNEL: &[Expect] = &[
    at_most("kernel.inequality", 1e-8),
    at_most("kernel.invariant_residual", 1e-8),
    at_most("kernel.invariant_transport", 1e-8),
];

const RELATIVISTIC: &[Expect] = &[
    at_most("relativistic.field_equations", 1e-6),
    expect("relativistic.compactness", Below, 1.0),
    at_most("relativistic.exterior_matching", 1e-8),
    at_most("relativistic.skew_symmetry", 1e-5),
];

/// Checks `expects` against `report`; returns the failures in words.
fn judge(report: &VerifyReport, expects: &[Expect]) -> Vec<String> {
    let mut failures = Vec::new();
    for e in expects {
        match report.claim(e.claim) {
            None => failures.push(format!("{} missing from the {} report", e.claim, report.mode)),
            Some(c) => {
                if c.relation != e.relation || c.bound.to_bits() != e.bound.to_bits() {
                    failures.push(format!(
                        "{}: report states {:?} {:e}, criterion is {:?} {:e}",
                        e.claim, c.relation, c.bound, e.relation, e.bound
                    ));
                }
                if !e.relation.holds(c.measured, e.bound) {
                    failures.push(format!("{}: measured {:e}", e.claim, c.measured));
                }
            }
        }
    }
    failures
}

fn run(cfg: &RunConfig, dir: &std::path::Path) -> (VerifyReport, Vec<u8>) {
    let (report, path) = commands::verify(cfg, dir).expect("verify runs");
    let bytes = fs::read(path).expect("report written");
    (report, bytes)
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let newtonian = RunConfig::default();
    let point_mass = RunConfig::for_mode(Mode::PointMassTest);
    let relativistic = RunConfig::for_mode(Mode::Relativistic);

    let (n_report, n_bytes) = run(&newtonian, &tmp.path().join("newtonian-a"));
    let (_, n_bytes_again) = run(&newtonian, &tmp.path().join("newtonian-b"));
    let (p_report, _) = run(&point_mass, &tmp.path().join("point-mass"));
    let (r_report, _) = run(&relativistic, &tmp.path().join("relativistic"));

    let determinism = if n_bytes == n_bytes_again {
        Vec::new()
    } else {
        vec!["two runs with the same seed wrote different report.json bytes".to_string()]
    };
    let mut periods = judge(&n_report, PERIODS);
    periods.extend(judge(&p_report, POINT_MASS));

    let criteria: Vec<(&str, Vec<String>)> = vec![
        ("steady-state integrity", judge(&n_report, STEADY_STATE)),
        ("effective-potential suite", judge(&n_report, EFFECTIVE)),
        ("period cross-validation and bounds", periods),
        ("projection operator", judge(&n_report, PROJECTION)),
        ("mass identity and Jacobian", judge(&n_report, MASS)),
        ("transport operator identities", judge(&n_report, TRANSPORT)),
        ("flow unitarity", judge(&n_report, FLOW)),
        ("kernel inequality", judge(&n_report, KERNEL)),
        ("relativistic extension", judge(&r_report, RELATIVISTIC)),
        ("determinism", determinism),
    ];

    let mut failed = 0;
    for (i, (name, failures)) in criteria.iter().enumerate() {
        let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name}", i + 1);
        for f in failures {
            println!("    {f}");
        }
        failed += usize::from(!failures.is_empty());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
