//! Property tests of the steady state, the effective potential, the period
//! and the transport operator on the default `k = 1` polytrope.

use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use vlasov_core::effective::{circular_angular_momentum, concavity_bound, find_turning_points, psi};
use vlasov_core::period::{period_bound, period_quadrature, project_spatial};
use vlasov_core::phase::{BoxBump, Energy, Interval};
use vlasov_core::steady_state::SolverOptions;
use vlasov_core::transport::{apply_t, inner_product, InnerProductSpec};
use vlasov_core::{Ansatz, Background, PhaseFunction, PointMass, Regime, SteadyState};

fn ansatz() -> Ansatz {
    Ansatz::polytrope(1.0, 1.0, -0.1, Regime::Newtonian).unwrap()
}

fn state() -> &'static SteadyState {
    static STATE: OnceLock<SteadyState> = OnceLock::new();
    STATE.get_or_init(|| SteadyState::solve(ansatz(), 1.0, &SolverOptions::default()).unwrap())
}

/// `(E, L)` with `E` a fraction `a` of the way from the centre energy to the
/// cutoff and `L` a fraction `b` of the circular value at `E`.
fn admissible(s: &SteadyState, a: f64, b: f64) -> (f64, f64) {
    let e = s.potential(0.0) + a * (s.cutoff_energy() - s.potential(0.0));
    (e, b * circular_angular_momentum(s, e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_increases_with_relative_potential(y in 1e-6f64..2.0, dy in 1e-6f64..1.0) {
        let a = ansatz();
        prop_assert!(a.density(y + dy).unwrap() > a.density(y).unwrap());
    }

    #[test]
    fn potential_increases_and_stays_above_point_mass(x in 1e-3f64..3.0, dx in 1e-3f64..1.0) {
        let s = state();
        let (r1, r2) = (x * s.radius(), (x + dx) * s.radius());
        prop_assert!(s.potential(r2) > s.potential(r1));
        prop_assert!(s.potential(r1) >= -s.total_mass() / r1 - 1e-14);
    }

    #[test]
    fn turning_points_solve_the_energy_equation(a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let s = state();
        let (e, l) = admissible(s, a, b);
        let tp = find_turning_points(s, e, l).unwrap();
        prop_assert!(tp.r_minus < tp.r_l && tp.r_l < tp.r_plus);
        prop_assert!((psi(s, l, tp.r_minus).unwrap() - e).abs() <= 1e-10 * e.abs());
        prop_assert!((psi(s, l, tp.r_plus).unwrap() - e).abs() <= 1e-10 * e.abs());
        prop_assert!(tp.r_plus < -s.total_mass() / e);
    }

    #[test]
    fn concavity_estimate_holds(a in 0.05f64..0.95, b in 0.05f64..0.95, t in 0.0f64..1.0) {
        let s = state();
        let (e, l) = admissible(s, a, b);
        let tp = find_turning_points(s, e, l).unwrap();
        let (lhs, rhs) = concavity_bound(s, &tp, tp.r_minus + t * (tp.r_plus - tp.r_minus)).unwrap();
        prop_assert!(lhs - rhs >= -1e-10);
    }

    #[test]
    fn period_stays_below_its_bound(a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let s = state();
        let (e, l) = admissible(s, a, b);
        prop_assert!(period_quadrature(s, e, l, 64).unwrap() <= period_bound(s, e, l).unwrap());
    }

    #[test]
    fn energy_is_its_own_orbit_average(a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let s = state();
        let (e, l) = admissible(s, a, b);
        let pf = project_spatial(s, &Energy(s), e, l, 64).unwrap();
        prop_assert!((pf - e).abs() <= 1e-12 * e.abs());
    }

    #[test]
    fn transport_is_skew_on_the_diagonal(c in 0.3f64..0.6, w in -0.2f64..0.2, l in 0.1f64..0.3) {
        let s = state();
        let r = s.radius();
        let f = BoxBump::new(
            Interval::new((c - 0.1) * r, (c + 0.1) * r),
            Interval::new(w - 0.2, w + 0.2),
            Interval::new(0.05 * l, 0.15 * l),
            1.0,
        )
        .certified(s);
        // Only functions supported inside the steady state are in the domain.
        prop_assume!(f.support().energy_max < s.cutoff_energy());
        let spec = InnerProductSpec::uniform(16);
        let tf = apply_t(s, &f).unwrap();
        let cross = inner_product(s, &spec, &f, &tf).unwrap();
        let norm_sq = inner_product(s, &spec, &f, &f).unwrap();
        prop_assert!(cross.abs() <= 1e-12 * norm_sq.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn point_mass_periods_are_keplerian(e in -2.0f64..-0.05, b in 0.05f64..0.95) {
        let pm = PointMass::unit(-0.01).unwrap();
        let m = pm.total_mass();
        let l = b * circular_angular_momentum(&pm, e).unwrap();
        let exact = 2.0 * PI * m / (-2.0 * e).powf(1.5);
        prop_assert!((period_quadrature(&pm, e, l, 64).unwrap() - exact).abs() <= 1e-8 * exact);
    }
}
