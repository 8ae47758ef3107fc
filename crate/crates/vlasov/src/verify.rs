//! The verification suite behind `vlasov verify`.
//!
//! Every check becomes one [`Claim`]. A numerical error inside a check is
//! recorded as a failed claim and the run continues. Parallel work is
//! collected in input order and reduced sequentially, so the report does not
//! depend on the number of threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vlasov_core::effective::{concavity_bound, find_r_l, find_turning_points, psi};
use vlasov_core::orbit::{flow_map_area_defect, radial_period_by_integration, Integrator, OrbitState, PeriodOptions};
use vlasov_core::period::{
    el_inner_product, el_mass, period_bound, period_quadrature, project_spatial, project_time_average,
    Composed, ElFunction, ElGrid, ElSpec, Projection,
};
use vlasov_core::phase::{BoxBump, Energy, EnergyBump, Interval, Product};
use vlasov_core::relativistic::RelativisticSteadyState;
use vlasov_core::transport::{
    apply_t, flow_unitarity_defect, integrate_rwl, kernel_inequality_check, multiplier_commutation_defect,
    norm, skew_symmetry_defect, smallest_margin, weight_scaled_t_defect, InnerProductSpec,
};
use vlasov_core::{Background, Error, PhaseFunction, PhaseSpace, PointMass, Result, SteadyState, Support};

use crate::config::{Mode, RunConfig};
use crate::report::{Claim, Relation, VerifyReport};

/// Random smooth bumps used by the projection and mass checks.
pub const PROJECTION_BUMPS: usize = 5;
/// Steps per reference period when pushing the quadrature grid through the
/// flow; the sixth-order integrator is converged well below the quadrature
/// error at this rate.
const FLOW_STEPS_PER_PERIOD: f64 = 50.0;
/// Bump pairs for the skew-symmetry checks.
pub const SKEW_PAIRS: usize = 10;
/// Certified test functions for the kernel inequality.
pub const KERNEL_FUNCTIONS: usize = 10;
/// Evolution times for the unitarity check.
pub const FLOW_TIMES: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 1.5];
pub const RELATIVISTIC_PAIRS: usize = 10;
pub const MONTE_CARLO_SAMPLES: usize = 4_000_000;

const MC_CHUNK: usize = 100_000;

/// Runs the claim set of `cfg.mode`. Fails only if the configuration cannot
/// produce an ansatz.
pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let ansatz = cfg.ansatz()?;
    let claims = match cfg.mode {
        Mode::Newtonian => match SteadyState::solve(ansatz, cfg.solver.y_center, &cfg.solver_options()) {
            Ok(state) => newtonian_claims(cfg, &state),
            Err(e) => vec![Claim::failed(
                "steady_state.solve",
                "shooting solution of the polytropic steady state",
                Relation::AtMost,
                0.0,
                e,
            )],
        },
        Mode::PointMassTest => point_mass_claims(cfg, &PointMass::new(cfg.solver.point_mass, ansatz)?),
        Mode::Relativistic => relativistic_claims(cfg, ansatz),
    };
    Ok(VerifyReport::new(cfg.mode_name(), claims))
}

fn check(id: &str, anchor: &str, relation: Relation, bound: f64, value: Result<f64>) -> Claim {
    match value {
        Ok(v) => Claim::new(id, anchor, v, relation, bound),
        Err(e) => Claim::failed(id, anchor, relation, bound, e),
    }
}

/// Largest value; NaN wins so that it cannot hide.
fn worst_max(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(f64::NEG_INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

fn worst_min(values: impl IntoIterator<Item = f64>) -> f64 {
    -worst_max(values.into_iter().map(|v| -v))
}

fn el_spec(cfg: &RunConfig) -> ElSpec {
    ElSpec {
        n_l: cfg.grid.n_lq,
        n_s: cfg.grid.n_r,
        n_orbit: cfg.grid.n_orbit,
    }
}

fn period_options(cfg: &RunConfig) -> PeriodOptions {
    PeriodOptions {
        steps_per_period: cfg.grid.steps_per_period,
        integrator: Integrator::Yoshida6,
    }
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn rng(cfg: &RunConfig, stream: u64) -> ChaCha8Rng {
    seeded_rng(cfg.seed, stream)
}

/// Nodes of the admissible `nE x nL` grid below the cutoff.
fn el_nodes<B: Background + ?Sized>(bg: &B, cfg: &RunConfig) -> Result<Vec<(f64, f64)>> {
    let grid = ElGrid::new(bg, cfg.grid.n_e, cfg.grid.n_l, bg.cutoff_energy())?;
    Ok(grid.cells().filter_map(|(i, j)| grid.node(i, j)).collect())
}

// ---------------------------------------------------------------------------
// Test-function family
// ---------------------------------------------------------------------------

/// How random boxes size their `w` and `L` extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxFamily {
    /// Fractions of the largest `w` and `L` anywhere in the support.
    Global,
    /// Fractions of what the ceiling energy allows at the radial centre;
    /// needed when the energy window is narrow, as in the relativistic state.
    LocalReach,
}

/// Extent of the steady-state support in `(r, w, L)`.
#[derive(Debug, Clone, Copy)]
pub struct Scales {
    pub radius: f64,
    pub w_max: f64,
    pub l_max: f64,
    /// Particle energy at rest at the centre.
    pub e_floor: f64,
    pub cutoff: f64,
    pub family: BoxFamily,
}

impl Scales {
    pub fn of<S: PhaseSpace + ?Sized>(space: &S, radius: f64) -> Self {
        let cutoff = space.cutoff();
        let r0 = 1e-9 * radius;
        let l_max = (1..=400)
            .map(|i| space.l_reach(radius * i as f64 / 400.0, cutoff))
            .fold(0.0, f64::max);
        Self {
            radius,
            w_max: space.w_reach(r0, 0.0, cutoff),
            l_max,
            e_floor: space.energy(r0, 0.0, 0.0),
            cutoff,
            family: BoxFamily::Global,
        }
    }

    pub fn with_family(self, family: BoxFamily) -> Self {
        Self { family, ..self }
    }

    /// Energy every test function must stay below.
    fn energy_ceiling(&self) -> f64 {
        self.cutoff - 0.05 * (self.cutoff - self.e_floor)
    }
}

fn centred(centre: f64, half: f64) -> Interval {
    Interval::new(centre - half, centre + half)
}

/// A product of smooth bumps in `r`, `w` and `L` whose support stays a
/// certified distance below the cutoff energy.
pub fn random_box<S: PhaseSpace + ?Sized>(space: &S, sc: &Scales, rng: &mut ChaCha8Rng) -> Result<BoxBump> {
    let ceiling = sc.energy_ceiling();
    for _ in 0..10_000 {
        let centre = rng.gen_range(0.25..0.6) * sc.radius;
        let r = centred(centre, rng.gen_range(0.1..0.2) * sc.radius);
        let (w_reach, l_reach) = match sc.family {
            BoxFamily::Global => (sc.w_max, sc.l_max),
            BoxFamily::LocalReach => (space.w_reach(centre, 0.0, ceiling), space.l_reach(centre, ceiling)),
        };
        if !(w_reach > 0.0 && l_reach > 0.0) {
            continue;
        }
        let w = centred(rng.gen_range(-0.3..0.3) * w_reach, rng.gen_range(0.15..0.3) * w_reach);
        let l_lo = rng.gen_range(0.05..0.2) * l_reach;
        let l = Interval::new(l_lo, l_lo + rng.gen_range(0.15..0.35) * l_reach);
        let b = BoxBump::new(r, w, l, 1.0).certified(space);
        if PhaseFunction::support(&b).energy_max <= ceiling {
            return Ok(b);
        }
    }
    Err(Error::InvalidAnsatz("no test box fits below the cutoff energy"))
}

/// `b` with every interval shifted by up to a third of its half-width.
pub fn perturbed<S: PhaseSpace + ?Sized>(space: &S, sc: &Scales, b: &BoxBump, rng: &mut ChaCha8Rng) -> Result<BoxBump> {
    let shift = |iv: Interval, rng: &mut ChaCha8Rng| {
        let d = rng.gen_range(-1.0..1.0) * (iv.hi - iv.lo) / 6.0;
        Interval::new(iv.lo + d, iv.hi + d)
    };
    for _ in 0..10_000 {
        let g = BoxBump::new(shift(b.r, rng), shift(b.w, rng), shift(b.l, rng), 1.0).certified(space);
        let sup = PhaseFunction::support(&g);
        if sup.energy_max <= sc.energy_ceiling() && g.l.lo > 0.0 && g.r.lo > 0.0 {
            return Ok(g);
        }
    }
    Err(Error::InvalidAnsatz("no perturbed test box fits below the cutoff energy"))
}

fn random_boxes<S: PhaseSpace + ?Sized>(space: &S, sc: &Scales, rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<BoxBump>> {
    (0..n).map(|_| random_box(space, sc, rng)).collect()
}

/// A function of `(E, L)` alone, inside the support.
pub fn energy_bump<'a, S: PhaseSpace + ?Sized>(space: &'a S, sc: &Scales) -> EnergyBump<'a, S> {
    EnergyBump::new(
        space,
        Interval::new(sc.e_floor, sc.energy_ceiling()),
        Interval::new(0.05 * sc.l_max, 0.4 * sc.l_max),
        1.0,
    )
}

// ---------------------------------------------------------------------------
// Newtonian suite
// ---------------------------------------------------------------------------

fn newtonian_claims(cfg: &RunConfig, state: &SteadyState) -> Vec<Claim> {
    let mut claims = steady_state_claims(state);
    claims.extend(orbit_claims(cfg, state));
    let scales = Scales::of(state, state.radius());
    claims.extend(projection_claims(cfg, state, &scales));
    claims.extend(mass_claims(cfg, state, &scales));
    claims.extend(transport_claims(cfg, state, &scales));
    claims.extend(flow_claims(cfg, state, &scales));
    claims.extend(kernel_claims(cfg, state, &scales));
    claims
}

fn steady_state_claims(s: &SteadyState) -> Vec<Claim> {
    let r = s.grid();
    let u = s.potential_samples();
    let m = s.total_mass();
    let radius = s.radius();
    let increasing = worst_min(u.windows(2).map(|p| p[1] - p[0]));
    let above_point_mass = worst_min(r.iter().zip(u).filter(|(&ri, _)| ri > 0.0).map(|(&ri, &ui)| ui + m / ri));
    let e0 = s.cutoff_energy().abs();
    let inside = *u.last().unwrap_or(&f64::NAN);
    let field = m / (radius * radius);
    let matching = worst_max([
        (inside + m / radius).abs() / e0,
        (s.potential(2.0 * radius) + m / (2.0 * radius)).abs() / e0,
        (s.potential_slope(radius) - field).abs() / field,
    ]);
    vec![
        Claim::new("steady_state.mass_positive", "total mass of the steady state is positive", m, Relation::Above, 0.0),
        Claim::new("steady_state.radius_finite", "support radius is finite", radius, Relation::Below, f64::MAX),
        Claim::at_most(
            "steady_state.poisson_residual",
            "radial Poisson equation residual relative to the largest source",
            s.poisson_residual(),
            1e-6,
        ),
        Claim::new(
            "steady_state.potential_increasing",
            "smallest increment of U0 between grid nodes",
            increasing,
            Relation::Above,
            0.0,
        ),
        Claim::new(
            "steady_state.point_mass_lower_bound",
            "smallest U0(r) + M0/r over the grid",
            above_point_mass,
            Relation::AtLeast,
            0.0,
        ),
        Claim::at_most(
            "steady_state.exterior_matching",
            "interior U0 at R and exterior U0 at 2R against -M0/r relative to |E0|, and the interior field at R against M0/R^2",
            matching,
            1e-10,
        ),
    ]
}

struct NodeChecks {
    turning_residual: f64,
    outer_ratio: f64,
    concavity_defect: f64,
    period_ratio: f64,
    period_mismatch: f64,
}

fn node_checks<B: Background + ?Sized>(bg: &B, cfg: &RunConfig, e: f64, l: f64) -> Result<NodeChecks> {
    let tp = find_turning_points(bg, e, l)?;
    let turning_residual = (psi(bg, l, tp.r_minus)? - e).abs().max((psi(bg, l, tp.r_plus)? - e).abs()) / e.abs();
    let outer_ratio = tp.r_plus / (-bg.total_mass() / e);
    let mut concavity_defect = f64::INFINITY;
    for i in 1..=50 {
        let r = tp.r_minus + tp.width() * i as f64 / 51.0;
        let (lhs, rhs) = concavity_bound(bg, &tp, r)?;
        concavity_defect = worst_min([concavity_defect, lhs - rhs]);
    }
    let t_quad = period_quadrature(bg, e, l, cfg.grid.n_orbit)?;
    let t_orbit = radial_period_by_integration(bg, e, l, &period_options(cfg))?.period;
    Ok(NodeChecks {
        turning_residual,
        outer_ratio,
        concavity_defect,
        period_ratio: t_quad / period_bound(bg, e, l)?,
        period_mismatch: (t_quad - t_orbit).abs() / t_quad,
    })
}

/// Turning points, the concavity estimate and the period checks on the
/// admissible grid.
fn orbit_claims<B: Background + Sync + ?Sized>(cfg: &RunConfig, bg: &B) -> Vec<Claim> {
    let results: Result<Vec<NodeChecks>> = el_nodes(bg, cfg).and_then(|nodes| {
        nodes
            .par_iter()
            .map(|&(e, l)| node_checks(bg, cfg, e, l))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    });
    let pick = |f: fn(&NodeChecks) -> f64, min: bool| -> Result<f64> {
        let nodes = results.as_ref().map_err(Clone::clone)?;
        let it = nodes.iter().map(f);
        Ok(if min { worst_min(it) } else { worst_max(it) })
    };
    vec![
        check(
            "effective.turning_points",
            "psi_L(r_-) = psi_L(r_+) = E, error relative to |E|",
            Relation::AtMost,
            1e-10,
            pick(|n| n.turning_residual, false),
        ),
        check(
            "effective.outer_turning_point",
            "largest r_+ / (-M0/E); the outer turning point lies strictly inside -M0/E",
            Relation::Below,
            1.0,
            pick(|n| n.outer_ratio, false),
        ),
        check(
            "effective.concavity",
            "smallest (E - psi_L(r)) - L (r_+ - r)(r - r_-)/(2 r^2 r_- r_+) at 50 interior radii per node",
            Relation::AtLeast,
            -1e-10,
            pick(|n| n.concavity_defect, true),
        ),
        check(
            "period.bound",
            "largest T(E, L) / (2 pi M0^2 / (E^2 sqrt(L)))",
            Relation::AtMost,
            1.0,
            pick(|n| n.period_ratio, false),
        ),
        check(
            "period.cross_validation",
            "quadrature period against the integrated orbit, relative",
            Relation::AtMost,
            1e-6,
            pick(|n| n.period_mismatch, false),
        ),
    ]
}

/// `P(Pf) - Pf` as a function of `(E, L)`.
struct Idempotence<'a, G: ElFunction> {
    twice: Projection<'a, SteadyState, Composed<'a, SteadyState, &'a G>>,
    once: &'a G,
}

impl<G: ElFunction> ElFunction for Idempotence<'_, G> {
    fn value(&self, energy: f64, l: f64) -> f64 {
        self.twice.value(energy, l) - self.once.value(energy, l)
    }
    fn support(&self) -> Support {
        self.once.support()
    }
}

struct ProjectionChecks {
    idempotence: f64,
    self_adjoint: f64,
    contraction: f64,
    time_average: f64,
}

fn projection_checks(
    cfg: &RunConfig,
    s: &SteadyState,
    f: &BoxBump,
    g: &BoxBump,
) -> Result<ProjectionChecks> {
    let spec = cfg.inner_product_spec();
    let el = el_spec(cfg);
    let n_orbit = cfg.grid.n_orbit;
    let pf = Projection::new(s, f, n_orbit);
    let pg = Projection::new(s, g, n_orbit);
    let f_norm = norm(s, &spec, f)?;
    let g_norm = norm(s, &spec, g)?;

    let diff = Idempotence {
        twice: Projection::new(s, Composed::new(s, &pf), n_orbit),
        once: &pf,
    };
    // The defect is at rounding level, so half the (E, L) orders resolve its
    // norm; every node of P(Pf) costs n_orbit inner projections.
    let coarse = ElSpec {
        n_l: (el.n_l / 2).max(2),
        n_s: (el.n_s / 2).max(2),
        ..el
    };
    let idempotence = el_inner_product(s, &coarse, &diff, &diff)?.max(0.0).sqrt() / f_norm;

    let pf_g = vlasov_core::transport::inner_product(s, &spec, &Composed::new(s, &pf), g)?;
    let f_pg = vlasov_core::transport::inner_product(s, &spec, f, &Composed::new(s, &pg))?;
    let self_adjoint = (pf_g - f_pg).abs() / (f_norm * g_norm);

    let contraction = el_inner_product(s, &el, &pf, &pf)?.max(0.0).sqrt() / f_norm;

    // Time average along the integrated orbit against the spatial form.
    let e0 = s.cutoff_energy();
    let sup = PhaseFunction::support(f);
    let l = 0.5 * (f.l.lo + f.l.hi);
    let psi_min = psi(s, l, find_r_l(s, l)?)?;
    let e_top = sup.energy_max.min(e0);
    let mut time_average = 0.0f64;
    for frac in [0.3, 0.6, 0.9] {
        let e = psi_min + frac * (e_top - psi_min);
        let spatial = project_spatial(s, f, e, l, 256)?;
        let timed = project_time_average(s, f, e, l, 4096, &period_options(cfg))?;
        time_average = worst_max([time_average, (spatial - timed).abs()]);
    }
    Ok(ProjectionChecks {
        idempotence,
        self_adjoint,
        contraction,
        time_average,
    })
}

fn projection_claims(cfg: &RunConfig, s: &SteadyState, sc: &Scales) -> Vec<Claim> {
    let mut rng = rng(cfg, 1);
    let results: Result<Vec<ProjectionChecks>> = (|| {
        let fs = random_boxes(s, sc, &mut rng, PROJECTION_BUMPS)?;
        let gs: Vec<BoxBump> = fs.iter().map(|f| perturbed(s, sc, f, &mut rng)).collect::<Result<_>>()?;
        fs.par_iter()
            .zip(gs.par_iter())
            .map(|(f, g)| projection_checks(cfg, s, f, g))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    })();
    let pick = |f: fn(&ProjectionChecks) -> f64| -> Result<f64> {
        Ok(worst_max(results.as_ref().map_err(Clone::clone)?.iter().map(f)))
    };
    vec![
        check(
            "projection.idempotence",
            "||P(Pf) - Pf||_H / ||f||_H for random smooth bumps",
            Relation::AtMost,
            1e-6,
            pick(|c| c.idempotence),
        ),
        check(
            "projection.self_adjoint",
            "|<Pf, g>_H - <f, Pg>_H| / (||f||_H ||g||_H)",
            Relation::AtMost,
            1e-6,
            pick(|c| c.self_adjoint),
        ),
        check(
            "projection.contraction",
            "largest ||Pf||_H / ||f||_H",
            Relation::AtMost,
            1.0 + 1e-10,
            pick(|c| c.contraction),
        ),
        check(
            "projection.time_average",
            "orbit average over one integrated period against the spatial average",
            Relation::AtMost,
            1e-7,
            pick(|c| c.time_average),
        ),
    ]
}

fn mass_gap<F: PhaseFunction + Sync>(cfg: &RunConfig, s: &SteadyState, f: &F) -> Result<f64> {
    let left = el_mass(s, &el_spec(cfg), f)?;
    let right =
        4.0 * PI * PI * integrate_rwl(s, &cfg.inner_product_spec(), &f.support(), |r, w, l| f.value(r, w, l))?;
    Ok((left - right).abs() / right.abs())
}

/// Monte Carlo estimate of the phase-space integral of `f` in Cartesian
/// `(x, v)`, with its standard error.
pub fn monte_carlo_integral<F: PhaseFunction + Sync>(f: &F, seed: u64, samples: usize) -> (f64, f64) {
    let sup = f.support();
    let x_max = sup.r.hi;
    let w_abs = sup.w.lo.abs().max(sup.w.hi.abs());
    let v_max = (w_abs * w_abs + sup.l.hi / (sup.r.lo * sup.r.lo)).sqrt();
    let ball = |rng: &mut ChaCha8Rng, radius: f64| loop {
        let p: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0 {
            return p.map(|c| c * radius);
        }
    };
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = seeded_rng(seed, 1000 + chunk as u64);
            let n = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = ball(&mut rng, x_max);
                let v = ball(&mut rng, v_max);
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let w = (x[0] * v[0] + x[1] * v[1] + x[2] * v[2]) / r;
                let c = [
                    x[1] * v[2] - x[2] * v[1],
                    x[2] * v[0] - x[0] * v[2],
                    x[0] * v[1] - x[1] * v[0],
                ];
                let l = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
                let val = f.value(r, w, l);
                s1 += val;
                s2 += val * val;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let volume = (4.0 / 3.0 * PI * x_max.powi(3)) * (4.0 / 3.0 * PI * v_max.powi(3));
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    (volume * mean, volume * (var / n).sqrt())
}

fn mass_claims(cfg: &RunConfig, s: &SteadyState, sc: &Scales) -> Vec<Claim> {
    let mut rng = rng(cfg, 2);
    let boxes = random_boxes(s, sc, &mut rng, 2);
    let h = energy_bump(s, sc);
    let identity = boxes.as_ref().map_err(Clone::clone).and_then(|b| {
        let mixed = Product(b[1], h);
        let gaps = [mass_gap(cfg, s, &b[0])?, mass_gap(cfg, s, &h)?, mass_gap(cfg, s, &mixed)?];
        Ok(worst_max(gaps))
    });
    let jacobian = boxes.as_ref().map_err(Clone::clone).and_then(|b| {
        let f = &b[0];
        let quad = 4.0 * PI * PI * integrate_rwl(s, &cfg.inner_product_spec(), &f.support(), |r, w, l| f.value(r, w, l))?;
        let (mc, se) = monte_carlo_integral(f, cfg.seed, MONTE_CARLO_SAMPLES);
        Ok((mc - quad).abs() / se)
    });
    vec![
        check(
            "mass.identity",
            "4 pi^2 int int T Pf dE dL against 4 pi^2 int f dr dw dL, relative, three test functions",
            Relation::AtMost,
            1e-4,
            identity,
        ),
        check(
            "mass.jacobian_monte_carlo",
            "Cartesian Monte Carlo integral against the (r, w, L) quadrature, in standard errors",
            Relation::AtMost,
            3.0,
            jacobian,
        ),
    ]
}

fn random_points(sc: &Scales, rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| {
            [
                rng.gen_range(0.01..1.2) * sc.radius,
                rng.gen_range(-1.0..1.0) * sc.w_max,
                rng.gen_range(0.001..1.0) * sc.l_max,
            ]
        })
        .collect()
}

/// Skew-symmetry defect at `spec` and at half its orders.
fn skew_pair<S, F, G>(space: &S, spec: &InnerProductSpec, f: &F, g: &G) -> Result<(f64, f64)>
where
    S: PhaseSpace + ?Sized,
    F: PhaseFunction,
    G: PhaseFunction,
{
    let coarse = InnerProductSpec {
        n_r: (spec.n_r / 2).max(2),
        n_l: (spec.n_l / 2).max(2),
        n_w: (spec.n_w / 2).max(2),
        panels: spec.panels,
    };
    let fine = skew_symmetry_defect(space, spec, f, g)?;
    let rough = skew_symmetry_defect(space, &coarse, f, g)?;
    Ok((fine.relative(), rough.relative()))
}

/// Skew pairs `(f, E g)` with `f` a random box and `g` a perturbed copy.
/// Box bumps are piecewise polynomial, so Gauss-Legendre integrates a pair of
/// them exactly and the defect sits at rounding level at every order; the
/// energy factor makes the integrand non-polynomial so truncation is visible.
fn skew_claims<S: PhaseSpace + Sync + ?Sized>(
    cfg: &RunConfig,
    space: &S,
    sc: &Scales,
    pairs: usize,
    stream: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut rng = rng(cfg, stream);
    let fs = random_boxes(space, sc, &mut rng, pairs)?;
    let gs: Vec<BoxBump> = fs.iter().map(|f| perturbed(space, sc, f, &mut rng)).collect::<Result<_>>()?;
    let spec = cfg.inner_product_spec();
    fs.par_iter()
        .zip(gs.par_iter())
        .map(|(f, g)| skew_pair(space, &spec, f, &Product(g, Energy(space))))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn transport_claims(cfg: &RunConfig, s: &SteadyState, sc: &Scales) -> Vec<Claim> {
    let mut rng = rng(cfg, 3);
    let points = random_points(sc, &mut rng, 1000);
    let annihilated = apply_t(s, Energy(s)).map(|te| worst_max(points.iter().map(|&[r, w, l]| te.value(r, w, l).abs())));
    let f = random_box(s, sc, &mut rng);
    let l_mult = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let a = multiplier_commutation_defect(s, f, |l| (-l).exp() * l, &points)?;
        let b = multiplier_commutation_defect(s, f, |l| (3.0 * l / sc.l_max).sin(), &points)?;
        Ok(worst_max([a, b]))
    });
    let ansatz = *Background::ansatz(s);
    let e_mult = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let a = weight_scaled_t_defect(s, f, |e| (ansatz.phi_prime(e).unwrap_or(0.0), 0.0), &points)?;
        let b = weight_scaled_t_defect(s, f, |e| ((3.0 * e).sin(), 3.0 * (3.0 * e).cos()), &points)?;
        Ok(worst_max([a, b]))
    });
    let skew = skew_claims(cfg, s, sc, SKEW_PAIRS, 4);
    vec![
        check(
            "transport.energy_annihilated",
            "|T E| at 1000 random points",
            Relation::AtMost,
            1e-12,
            annihilated,
        ),
        check(
            "transport.multiplier_l",
            "|T(chi(L) f) - chi(L) T f| at the same points",
            Relation::AtMost,
            1e-12,
            l_mult,
        ),
        check(
            "transport.multiplier_e",
            "|T(chi(E) f) - chi(E) T f| at the same points, chi = phi' and a smooth chi",
            Relation::AtMost,
            1e-12,
            e_mult,
        ),
        check(
            "transport.skew_symmetry",
            "|<f, Tg>_H + <Tf, g>_H| / (||f||_H ||g||_H) for bump pairs",
            Relation::AtMost,
            1e-6,
            skew.as_ref().map_err(Clone::clone).map(|d| worst_max(d.iter().map(|p| p.0))),
        ),
        check(
            "transport.skew_refinement",
            "largest ratio of the skew defect at full to half quadrature orders",
            Relation::Below,
            1.0,
            skew.as_ref().map_err(Clone::clone).map(|d| worst_max(d.iter().map(|p| p.0 / p.1))),
        ),
    ]
}

fn flow_claims(cfg: &RunConfig, s: &SteadyState, sc: &Scales) -> Vec<Claim> {
    let spec = cfg.inner_product_spec();
    let h = energy_bump(s, sc);
    let wide = BoxBump::new(
        Interval::new(0.0, 1.05 * sc.radius),
        Interval::new(-0.6 * sc.w_max, 1.2 * sc.w_max),
        Interval::new(0.0, 2.0 * sc.l_max),
        1.0,
    );
    let f = Product(h, wide);
    // Reference period of a typical orbit in the band of f.
    let reference = (|| {
        let l = 0.5 * (h.l.lo + h.l.hi);
        let psi_min = psi(s, l, find_r_l(s, l)?)?;
        period_quadrature(s, psi_min + 0.5 * (h.e.hi - psi_min), l, cfg.grid.n_orbit)
    })();
    let unitarity = reference.clone().and_then(|period| {
        let step = period / FLOW_STEPS_PER_PERIOD;
        let d: Result<Vec<f64>> = FLOW_TIMES
            .par_iter()
            .map(|&frac| flow_unitarity_defect(s, &spec, &f, frac * period, step))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        Ok(worst_max(d?))
    });
    let mut rng = rng(cfg, 5);
    let area = reference.and_then(|period| {
        let step = period / cfg.grid.steps_per_period as f64;
        let boxes = random_boxes(s, sc, &mut rng, 5)?;
        let mut worst = 0.0f64;
        for b in &boxes {
            let z = OrbitState::new(s, 0.5 * (b.r.lo + b.r.hi), 0.5 * (b.w.lo + b.w.hi), 0.5 * (b.l.lo + b.l.hi))?;
            for &frac in &FLOW_TIMES {
                let d = flow_map_area_defect(s, &z, frac * period, step, 1e-6, Integrator::Yoshida6)?;
                worst = worst_max([worst, d]);
            }
        }
        Ok(worst)
    });
    vec![
        check(
            "flow.unitarity",
            "| ||f o Phi_t||_H - ||f||_H | / ||f||_H at five evolution times",
            Relation::AtMost,
            1e-5,
            unitarity,
        ),
        check(
            "flow.area",
            "|det D Phi_t - 1| of the radial flow map",
            Relation::AtMost,
            1e-6,
            area,
        ),
    ]
}

fn kernel_claims(cfg: &RunConfig, s: &SteadyState, sc: &Scales) -> Vec<Claim> {
    // The inequality holds with a wide margin, so two thirds of the configured
    // orders suffice; the residual quadrature evaluates a projection per node.
    let full = cfg.inner_product_spec();
    let spec = InnerProductSpec {
        n_r: (2 * full.n_r / 3).max(2),
        n_l: (2 * full.n_l / 3).max(2),
        n_w: (2 * full.n_w / 3).max(2),
        ..full
    };
    let e0 = s.cutoff_energy();
    let n_orbit = cfg.grid.n_orbit;
    let mut rng = rng(cfg, 6);
    let margin = |sup: &Support| smallest_margin(sup, e0).ok_or(Error::InvalidAnsatz("test function has no margin"));
    let inequality = random_boxes(s, sc, &mut rng, KERNEL_FUNCTIONS).and_then(|fs| {
        let gaps: Result<Vec<f64>> = fs
            .par_iter()
            .map(|f| {
                let kb = kernel_inequality_check(s, &spec, f, margin(&PhaseFunction::support(f))?, n_orbit)?;
                Ok(kb.lhs - kb.rhs)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        Ok(worst_max(gaps?))
    });
    let h = energy_bump(s, sc);
    let invariant = margin(&PhaseFunction::support(&h)).and_then(|m| kernel_inequality_check(s, &spec, &h, m, n_orbit));
    vec![
        check(
            "kernel.inequality",
            "largest ||f - Pf||_H^2 - 16 pi^2 M0^4 (m/E0^4) ||Tf||_H^2 over certified test functions",
            Relation::AtMost,
            1e-8,
            inequality,
        ),
        check(
            "kernel.invariant_residual",
            "||f - Pf||_H^2 for f = h(E, L)",
            Relation::AtMost,
            1e-8,
            invariant.clone().map(|kb| kb.lhs),
        ),
        check(
            "kernel.invariant_transport",
            "||Tf||_H^2 for f = h(E, L)",
            Relation::AtMost,
            1e-8,
            invariant.map(|kb| kb.transport_norm_sq),
        ),
    ]
}

// ---------------------------------------------------------------------------
// Point-mass suite
// ---------------------------------------------------------------------------

fn point_mass_claims(cfg: &RunConfig, pm: &PointMass) -> Vec<Claim> {
    let mut claims = orbit_claims(cfg, pm);
    let m = pm.total_mass();
    let kepler: Result<Vec<(f64, f64)>> = el_nodes(pm, cfg).and_then(|nodes| {
        nodes
            .par_iter()
            .map(|&(e, l)| {
                let t = period_quadrature(pm, e, l, cfg.grid.n_orbit)?;
                let exact = 2.0 * PI * m / (-2.0 * e).powf(1.5);
                // Any smaller L is admissible at the same energy.
                let t_half = period_quadrature(pm, e, 0.5 * l, cfg.grid.n_orbit)?;
                Ok(((t - exact).abs() / exact, (t - t_half).abs() / t))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    });
    claims.push(check(
        "period.kepler",
        "T(E, L) against 2 pi M / (-2E)^(3/2), relative",
        Relation::AtMost,
        1e-8,
        kepler.as_ref().map_err(Clone::clone).map(|v| worst_max(v.iter().map(|p| p.0))),
    ));
    claims.push(check(
        "period.l_independence",
        "relative change of T(E, L) when L is halved at fixed E",
        Relation::AtMost,
        1e-8,
        kepler.map(|v| worst_max(v.iter().map(|p| p.1))),
    ));
    claims
}

// ---------------------------------------------------------------------------
// Relativistic suite
// ---------------------------------------------------------------------------

fn relativistic_claims(cfg: &RunConfig, ansatz: vlasov_core::Ansatz) -> Vec<Claim> {
    let state = match RelativisticSteadyState::solve(ansatz, cfg.solver.nu_center, &cfg.relativistic_options()) {
        Ok(s) => s,
        Err(e) => {
            return vec![Claim::failed(
                "relativistic.solve",
                "static solution of the Einstein-Vlasov system",
                Relation::AtMost,
                0.0,
                e,
            )]
        }
    };
    let [res_a, res_b] = state.field_equation_residuals();
    let radius = state.radius();
    let m = state.total_mass();
    let schwarzschild = |x: f64| 0.5 * (1.0 - 2.0 * m / x).ln();
    let exterior_slope = m / (radius * radius * (1.0 - 2.0 * m / radius));
    let inside = *state.mu_samples().last().unwrap_or(&f64::NAN);
    let matching = worst_max([
        (inside - schwarzschild(radius)).abs(),
        (state.mu(2.0 * radius) - schwarzschild(2.0 * radius)).abs(),
        (state.mu_prime(radius) - exterior_slope).abs() / exterior_slope,
    ]);
    let sc = Scales::of(&state, radius).with_family(BoxFamily::LocalReach);
    let skew = skew_claims(cfg, &state, &sc, RELATIVISTIC_PAIRS, 7);
    vec![
        Claim::at_most(
            "relativistic.field_equations",
            "largest residual of the two static field equations, relative to the largest 8 pi r^2 rho",
            res_a.max(res_b),
            1e-6,
        ),
        Claim::new(
            "relativistic.compactness",
            "largest 2m/r on the grid",
            state.max_compactness(),
            Relation::Below,
            1.0,
        ),
        Claim::at_most(
            "relativistic.exterior_matching",
            "interior mu at R, mu at 2R and the slope of mu at R against the Schwarzschild exterior",
            matching,
            1e-8,
        ),
        check(
            "relativistic.skew_symmetry",
            "|<f, Tg> + <Tf, g>| / (||f|| ||g||) in the space weighted by e^lambda / |phi'(E)|",
            Relation::AtMost,
            1e-5,
            skew.map(|d| worst_max(d.iter().map(|p| p.0))),
        ),
    ]
}
