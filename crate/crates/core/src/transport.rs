//! The transport operator `T f = {f, E}` in `(r, w, L)` coordinates and the
//! weighted inner product
//!
//! ```text
//! <f, g>_H = 4 pi^2 int int int f g chi(r) / |phi'(E^r)| dr dw dL
//! ```
//!
//! over `S0^r = {E^r < E0}`, where `chi = 1` in the Newtonian case and
//! `chi = e^lambda` relativistically.
//!
//! The region is swept in the order `r -> L -> w` with analytic limits
//! `L < L_max(r)` and `|w| < w_max(r, L)`, intersected with the support
//! boxes of the integrands.

use crate::effective::find_r_l;
use crate::error::{Error, Result};
use crate::math::{sqrt, PI};
use crate::period::{Composed, Projection};
use crate::phase::{Interval, PhaseFunction, PhaseSpace, Support};
use crate::quadrature::GaussLegendre;
use crate::steady_state::Background;

/// Gauss-Legendre orders (per panel) and panel counts of the `(r, L, w)`
/// quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerProductSpec {
    pub n_r: usize,
    pub n_l: usize,
    pub n_w: usize,
    pub panels: usize,
}

impl Default for InnerProductSpec {
    fn default() -> Self {
        Self {
            n_r: 48,
            n_l: 48,
            n_w: 48,
            panels: 1,
        }
    }
}

impl InnerProductSpec {
    pub fn uniform(n: usize) -> Self {
        Self {
            n_r: n,
            n_l: n,
            n_w: n,
            panels: 1,
        }
    }

    /// All orders doubled.
    pub fn refined(&self) -> Self {
        Self {
            n_r: 2 * self.n_r,
            n_l: 2 * self.n_l,
            n_w: 2 * self.n_w,
            panels: self.panels,
        }
    }
}

struct Rules {
    r: GaussLegendre,
    l: GaussLegendre,
    w: GaussLegendre,
    panels: usize,
}

impl Rules {
    fn new(spec: &InnerProductSpec) -> Self {
        Self {
            r: GaussLegendre::new(spec.n_r.max(1)),
            l: GaussLegendre::new(spec.n_l.max(1)),
            w: GaussLegendre::new(spec.n_w.max(1)),
            panels: spec.panels.max(1),
        }
    }
}

fn panelled<F: FnMut(f64, f64)>(rule: &GaussLegendre, iv: Interval, panels: usize, mut visit: F) {
    let h = (iv.hi - iv.lo) / panels as f64;
    for p in 0..panels {
        let lo = iv.lo + h * p as f64;
        let hi = if p + 1 == panels { iv.hi } else { lo + h };
        for (x, wx) in rule.mapped(lo, hi) {
            visit(x, wx);
        }
    }
}

/// `int int int F(r, w, L) dr dw dL` over `S0^r` cut down to `support`
/// (energies up to `min(E0, support.energy_max)`).
pub fn integrate_rwl<S, F>(
    space: &S,
    spec: &InnerProductSpec,
    support: &Support,
    mut integrand: F,
) -> Result<f64>
where
    S: PhaseSpace + ?Sized,
    F: FnMut(f64, f64, f64) -> f64,
{
    let rules = Rules::new(spec);
    let e_top = support.energy_max.min(space.cutoff());
    let r_range = Interval::new(support.r.lo.max(0.0), support.r.hi.min(space.radial_reach(e_top)));
    if r_range.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    panelled(&rules.r, r_range, rules.panels, |r, wr| {
        let l_range = Interval::new(support.l.lo.max(0.0), support.l.hi.min(space.l_reach(r, e_top)));
        if l_range.is_empty() {
            return;
        }
        let mut over_l = 0.0;
        panelled(&rules.l, l_range, rules.panels, |l, wl| {
            let reach = space.w_reach(r, l, e_top);
            let w_range = Interval::new(support.w.lo.max(-reach), support.w.hi.min(reach));
            if w_range.is_empty() {
                return;
            }
            let mut over_w = 0.0;
            panelled(&rules.w, w_range, rules.panels, |w, ww| {
                over_w += ww * integrand(r, w, l);
            });
            over_l += wl * over_w;
        });
        total += wr * over_l;
    });
    Ok(total)
}

fn weighted_region<S: PhaseSpace + ?Sized>(space: &S, support: Support) -> Result<Support> {
    let e0 = space.cutoff();
    if support.energy_max >= e0 && !space.ansatz().weight_bounded_at_cutoff() {
        return Err(Error::NotIntegrable);
    }
    Ok(support)
}

/// `<f, g>_H`, integrated over the intersection of both supports.
pub fn inner_product<S, F, G>(space: &S, spec: &InnerProductSpec, f: &F, g: &G) -> Result<f64>
where
    S: PhaseSpace + ?Sized,
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let region = weighted_region(space, f.support().intersect(&g.support()))?;
    let ansatz = *space.ansatz();
    let e0 = ansatz.cutoff();
    let sum = integrate_rwl(space, spec, &region, |r, w, l| {
        let e = space.energy(r, w, l);
        if !(e < e0) {
            return 0.0;
        }
        f.value(r, w, l) * g.value(r, w, l) * ansatz.weight_inside(e) * space.measure_factor(r)
    })?;
    Ok(4.0 * PI * PI * sum)
}

/// `||f||_H`.
pub fn norm<S, F>(space: &S, spec: &InnerProductSpec, f: &F) -> Result<f64>
where
    S: PhaseSpace + ?Sized,
    F: PhaseFunction + ?Sized,
{
    Ok(sqrt(inner_product(space, spec, f, f)?.max(0.0)))
}

/// `T f`, evaluated pointwise from the analytic partials of `f`:
/// `factor(r) (dE/dw df/dr - dE/dr df/dw)`.
#[derive(Debug, Clone, Copy)]
pub struct Transport<'a, S: ?Sized, F> {
    space: &'a S,
    f: F,
}

/// `T f`; fails if `f` has no analytic partials.
pub fn apply_t<S: PhaseSpace + ?Sized, F: PhaseFunction>(space: &S, f: F) -> Result<Transport<'_, S, F>> {
    if !f.has_partials() {
        return Err(Error::MissingPartials);
    }
    Ok(Transport { space, f })
}

impl<S: PhaseSpace + ?Sized, F: PhaseFunction> PhaseFunction for Transport<'_, S, F> {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        let [fr, fw] = match self.f.partials(r, w, l) {
            Some(p) => p,
            None => return f64::NAN,
        };
        let [er, ew] = self.space.energy_gradient(r, w, l);
        self.space.transport_factor(r) * (ew * fr - er * fw)
    }

    fn support(&self) -> Support {
        self.f.support()
    }
}

/// `f o Phi_t`, with the characteristic flow integrated to step `h`.
///
/// Points where the integration fails evaluate to NaN.
#[derive(Debug, Clone, Copy)]
pub struct Flowed<'a, S: ?Sized, F> {
    space: &'a S,
    f: F,
    t: f64,
    h: f64,
}

impl<'a, S: PhaseSpace + ?Sized, F: PhaseFunction> Flowed<'a, S, F> {
    pub fn new(space: &'a S, f: F, t: f64, h: f64) -> Self {
        Self { space, f, t, h }
    }
}

impl<S: PhaseSpace + ?Sized, F: PhaseFunction> PhaseFunction for Flowed<'_, S, F> {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        if self.t == 0.0 {
            return self.f.value(r, w, l);
        }
        match self.space.characteristic_flow(r, w, l, self.t, self.h) {
            Ok((rt, wt)) => self.f.value(rt, wt, l),
            Err(_) => f64::NAN,
        }
    }

    fn support(&self) -> Support {
        if self.t == 0.0 {
            self.f.support()
        } else {
            self.f.support().invariant_part()
        }
    }
}

/// Outcome of a skew-symmetry check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewDefect {
    /// `|<f, T g> + <T f, g>|`.
    pub defect: f64,
    /// `||f|| ||g||`.
    pub scale: f64,
}

impl SkewDefect {
    pub fn relative(&self) -> f64 {
        self.defect / self.scale
    }
}

/// `|<f, T g>_H + <T f, g>_H|` relative to `||f||_H ||g||_H`.
pub fn skew_symmetry_defect<S, F, G>(
    space: &S,
    spec: &InnerProductSpec,
    f: &F,
    g: &G,
) -> Result<SkewDefect>
where
    S: PhaseSpace + ?Sized,
    F: PhaseFunction,
    G: PhaseFunction,
{
    let tf = apply_t(space, f)?;
    let tg = apply_t(space, g)?;
    let a = inner_product(space, spec, f, &tg)?;
    let b = inner_product(space, spec, &tf, g)?;
    let scale = norm(space, spec, f)? * norm(space, spec, g)?;
    Ok(SkewDefect {
        defect: (a + b).abs(),
        scale,
    })
}

/// `max |T(chi(L) f) - chi(L) T f|` over `points`.
pub fn multiplier_commutation_defect<S, F, C>(
    space: &S,
    f: &F,
    chi: C,
    points: &[[f64; 3]],
) -> Result<f64>
where
    S: PhaseSpace + ?Sized,
    F: PhaseFunction,
    C: Fn(f64) -> f64,
{
    let product = crate::phase::LMultiplier { chi: &chi, f };
    let left = apply_t(space, &product)?;
    let right = apply_t(space, f)?;
    Ok(points
        .iter()
        .map(|&[r, w, l]| (left.value(r, w, l) - chi(l) * right.value(r, w, l)).abs())
        .fold(0.0, f64::max))
}

/// `max |T(chi(E) f) - chi(E) T f|` over `points`; `chi` returns its value
/// and derivative.
pub fn weight_scaled_t_defect<S, F, C>(space: &S, f: &F, chi: C, points: &[[f64; 3]]) -> Result<f64>
where
    S: PhaseSpace + ?Sized,
    F: PhaseFunction,
    C: Fn(f64) -> (f64, f64),
{
    let product = crate::phase::EMultiplier { space, chi: &chi, f };
    let left = apply_t(space, &product)?;
    let right = apply_t(space, f)?;
    Ok(points
        .iter()
        .map(|&[r, w, l]| {
            let c = chi(space.energy(r, w, l)).0;
            (left.value(r, w, l) - c * right.value(r, w, l)).abs()
        })
        .fold(0.0, f64::max))
}

/// `| ||f o Phi_t||_H - ||f||_H | / ||f||_H`.
pub fn flow_unitarity_defect<S, F>(space: &S, spec: &InnerProductSpec, f: &F, t: f64, h: f64) -> Result<f64>
where
    S: PhaseSpace + ?Sized,
    F: PhaseFunction,
{
    let before = norm(space, spec, f)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let after = norm(space, spec, &Flowed::new(space, f, t, h))?;
    if after.is_nan() {
        return Err(Error::StepTooCoarse { r: f64::NAN });
    }
    Ok((after - before).abs() / before)
}

/// Both sides of `||f - P f||_H^2 <= 16 pi^2 M0^4 (m / E0^4) ||T f||_H^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBound {
    pub lhs: f64,
    pub rhs: f64,
    /// `||T f||_H^2`.
    pub transport_norm_sq: f64,
    pub m: u32,
}

/// Checks that the support of `f` certifies the margin `m`: `L >= 1/(2m)`
/// and `E <= E0 - 1/m` wherever `f != 0`.
pub fn certify_margin(support: &Support, cutoff: f64, m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::SupportMargin {
            m,
            reason: "m must be a positive integer",
        });
    }
    let mf = m as f64;
    if !(support.l.lo >= 1.0 / (2.0 * mf)) {
        return Err(Error::SupportMargin {
            m,
            reason: "angular momentum bound L >= 1/(2m) not certified",
        });
    }
    if !(support.energy_max <= cutoff - 1.0 / mf) {
        return Err(Error::SupportMargin {
            m,
            reason: "energy bound E <= E0 - 1/m not certified",
        });
    }
    Ok(())
}

/// Smallest `m` certified by `support`, if any.
pub fn smallest_margin(support: &Support, cutoff: f64) -> Option<u32> {
    let gap = cutoff - support.energy_max;
    if !(support.l.lo > 0.0 && gap > 0.0) {
        return None;
    }
    let m = crate::math::ceil((1.0 / (2.0 * support.l.lo)).max(1.0 / gap)) as u32;
    (m.saturating_sub(1).max(1)..m + 2).find(|&m| certify_margin(support, cutoff, m).is_ok())
}

/// The quantitative kernel estimate for a Newtonian steady state. `Pf` is
/// evaluated on demand with an `n_orbit`-point orbit quadrature.
pub fn kernel_inequality_check<B, F>(
    bg: &B,
    spec: &InnerProductSpec,
    f: &F,
    m: u32,
    n_orbit: usize,
) -> Result<KernelBound>
where
    B: Background + PhaseSpace + ?Sized,
    F: PhaseFunction,
{
    let e0 = Background::cutoff_energy(bg);
    certify_margin(&f.support(), e0, m)?;
    let projection = Projection::new(bg, f, n_orbit);
    let pf = Composed::new(bg, &projection);
    let residual = crate::phase::Combination {
        a: 1.0,
        f,
        b: -1.0,
        g: &pf,
    };
    let lhs = inner_product(bg, spec, &residual, &residual)?;
    let tf = apply_t(bg, f)?;
    let transport_norm_sq = inner_product(bg, spec, &tf, &tf)?;
    let m0 = bg.total_mass();
    let constant = 16.0 * PI * PI * m0 * m0 * m0 * m0 * m as f64 / (e0 * e0 * e0 * e0);
    Ok(KernelBound {
        lhs,
        rhs: constant * transport_norm_sq,
        transport_norm_sq,
        m,
    })
}

/// Radius of the circular orbit with angular momentum `l`, for placing test
/// functions.
pub fn circular_radius<B: Background + ?Sized>(bg: &B, l: f64) -> Result<f64> {
    find_r_l(bg, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{BoxBump, Constant, Energy, EnergyBump, Product, RadialVelocity, Radius};
    use crate::steady_state::{PointMass, SolverOptions, SteadyState};
    use crate::{Ansatz, Regime};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::vec::Vec;

    fn polytrope() -> SteadyState {
        let a = Ansatz::polytrope(1.0, 1.0, -0.1, Regime::Newtonian).unwrap();
        SteadyState::solve(a, 1.0, &SolverOptions::default()).unwrap()
    }

    fn random_points(s: &SteadyState, n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                [
                    rng.gen_range(0.01..1.2) * s.radius(),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.001..0.1),
                ]
            })
            .collect()
    }

    fn test_box(s: &SteadyState, shift: f64) -> BoxBump {
        let radius = s.radius();
        BoxBump::new(
            Interval::new((0.15 + shift) * radius, (0.55 + shift) * radius),
            Interval::new(-0.3 + shift, 0.25 + shift),
            Interval::new(0.004, 0.03 + shift * 0.01),
            1.0,
        )
        .certified(s)
    }

    #[test]
    fn transport_of_coordinates() {
        let s = polytrope();
        for [r, w, l] in random_points(&s, 1000, 1) {
            let te = apply_t(&s, Energy(&s)).unwrap().value(r, w, l);
            assert!(te.abs() <= 1e-12, "{te}");
            assert_eq!(apply_t(&s, Radius).unwrap().value(r, w, l), w);
            let psi_p = crate::effective::psi_prime(&s, l, r).unwrap();
            assert_eq!(apply_t(&s, RadialVelocity).unwrap().value(r, w, l), -psi_p);
            assert_eq!(apply_t(&s, crate::phase::AngularMomentum).unwrap().value(r, w, l), 0.0);
        }
        struct Opaque;
        impl PhaseFunction for Opaque {
            fn value(&self, r: f64, _w: f64, _l: f64) -> f64 {
                r
            }
        }
        assert!(matches!(apply_t(&s, Opaque), Err(Error::MissingPartials)));
    }

    #[test]
    fn inner_product_basics() {
        let s = polytrope();
        let spec = InnerProductSpec::uniform(24);
        let f = test_box(&s, 0.0);
        let g = test_box(&s, 0.05);
        assert_eq!(inner_product(&s, &spec, &Constant(0.0), &g).unwrap(), 0.0);
        let fg = inner_product(&s, &spec, &f, &g).unwrap();
        let gf = inner_product(&s, &spec, &g, &f).unwrap();
        assert!((fg - gf).abs() <= 1e-14 * fg.abs());
        assert!(inner_product(&s, &spec, &f, &f).unwrap() > 0.0);
        // Linearity on a common support, so both sides see the same nodes.
        let g2 = Product(f, Radius);
        let lin = crate::phase::Combination {
            a: 2.5,
            f,
            b: 1.0,
            g: g2,
        };
        let left = inner_product(&s, &spec, &lin, &f).unwrap();
        let right = 2.5 * inner_product(&s, &spec, &f, &f).unwrap() + inner_product(&s, &spec, &g2, &f).unwrap();
        assert_relative_eq!(left, right, max_relative = 1e-12);
    }

    #[test]
    fn refuses_divergent_weight() {
        let a = Ansatz::polytrope(2.0, 1.0, -0.1, Regime::Newtonian).unwrap();
        let s = SteadyState::solve(a, 1.0, &SolverOptions::default()).unwrap();
        let spec = InnerProductSpec::uniform(8);
        let one = Constant(1.0);
        assert!(matches!(inner_product(&s, &spec, &one, &one), Err(Error::NotIntegrable)));
        let e0 = PhaseSpace::cutoff(&s);
        let h = EnergyBump::new(&s, Interval::new(2.0 * e0, 0.5 * e0 + 0.5 * s.potential(0.0)), Interval::new(0.0, 1.0), 1.0);
        let _ = h;
        let bounded = EnergyBump::new(&s, Interval::new(s.potential(0.0), e0 - 0.01), Interval::new(0.0, 1.0), 1.0);
        assert!(inner_product(&s, &spec, &one, &bounded).is_ok());
    }

    #[test]
    fn point_mass_volume_of_sublevel_set() {
        // For U = -1/r, int int delta(E - e) dr dw = T(e) = 2 pi (-2e)^(-3/2)
        // independently of L, and E >= -1/(2L). Integrating in e and L gives
        // vol{E < e, L < l} = 2 pi (l / sqrt(-2e) - 2/3 l^(3/2)).
        let p = PointMass::unit(-0.1).unwrap();
        let (e, l) = (-0.8, 0.2);
        let sup = Support {
            l: Interval::new(0.0, l),
            energy_max: e,
            ..Support::everywhere()
        };
        let expected = 2.0 * PI * (l / sqrt(-2.0 * e) - 2.0 / 3.0 * l * sqrt(l));
        for n in [64, 128] {
            let vol = integrate_rwl(&p, &InnerProductSpec::uniform(n), &sup, |_, _, _| 1.0).unwrap();
            assert!((vol - expected).abs() <= 2e-5 * expected, "n={n}: {vol} vs {expected}");
        }
    }

    #[test]
    fn skew_symmetry_on_bumps() {
        let s = polytrope();
        let spec = InnerProductSpec::default();
        let f = test_box(&s, 0.0);
        let g = test_box(&s, 0.05);
        let d = skew_symmetry_defect(&s, &spec, &f, &g).unwrap();
        assert!(d.relative() <= 1e-6, "{}", d.relative());
        let diag = skew_symmetry_defect(&s, &spec, &f, &f).unwrap();
        assert!(diag.relative() <= 1e-6);
        let e0 = PhaseSpace::cutoff(&s);
        let h = EnergyBump::new(&s, Interval::new(s.potential(0.0), e0 - 0.02), Interval::new(0.002, 0.04), 1.0);
        let k = skew_symmetry_defect(&s, &spec, &f, &h).unwrap();
        assert!(k.relative() <= 1e-6);
    }

    #[test]
    fn multiplier_identities() {
        let s = polytrope();
        let pts = random_points(&s, 1000, 3);
        let f = test_box(&s, 0.0);
        assert_eq!(multiplier_commutation_defect(&s, &f, |_| 1.0, &pts).unwrap(), 0.0);
        assert!(multiplier_commutation_defect(&s, &Radius, |l| l, &pts).unwrap() <= 1e-12);
        assert!(multiplier_commutation_defect(&s, &f, |l| crate::math::exp(-l) * l, &pts).unwrap() <= 1e-12);
        assert_eq!(weight_scaled_t_defect(&s, &f, |_| (1.0, 0.0), &pts).unwrap(), 0.0);
        let a = *PhaseSpace::ansatz(&s);
        let phi_prime = move |e: f64| (a.phi_prime(e).unwrap_or(0.0), 0.0);
        assert!(weight_scaled_t_defect(&s, &f, phi_prime, &pts).unwrap() <= 1e-12);
        let chi = |e: f64| (crate::math::sin(3.0 * e), 3.0 * crate::math::cos(3.0 * e));
        assert!(weight_scaled_t_defect(&s, &f, chi, &pts).unwrap() <= 1e-12);
    }

    #[test]
    fn margins() {
        let sup = Support {
            l: Interval::new(0.05, 0.1),
            energy_max: -0.6,
            ..Support::everywhere()
        };
        assert!(certify_margin(&sup, -0.5, 10).is_ok());
        assert!(certify_margin(&sup, -0.5, 5).is_err());
        assert_eq!(smallest_margin(&sup, -0.5), Some(10));
        assert!(smallest_margin(&Support::everywhere(), -0.5).is_none());
    }

    #[test]
    fn kernel_inequality_for_kernel_and_odd_functions() {
        let s = polytrope();
        let e0 = PhaseSpace::cutoff(&s);
        let spec = InnerProductSpec::uniform(32);
        let h = EnergyBump::new(&s, Interval::new(s.potential(0.0), e0 - 0.05), Interval::new(0.02, 0.05), 1.0);
        let m = smallest_margin(&PhaseFunction::support(&h), e0).unwrap();
        let kb = kernel_inequality_check(&s, &spec, &h, m, 64).unwrap();
        assert!(kb.lhs <= 1e-8 && kb.rhs <= 1e-8, "{kb:?}");
        let odd = Product(h, RadialVelocity);
        let kb = kernel_inequality_check(&s, &spec, &odd, m, 64).unwrap();
        let full = inner_product(&s, &spec, &odd, &odd).unwrap();
        assert_relative_eq!(kb.lhs, full, max_relative = 1e-8);
        assert!(kb.lhs <= kb.rhs + 1e-8);
        assert!(kernel_inequality_check(&s, &spec, &h, 1, 64).is_err());
    }
}
