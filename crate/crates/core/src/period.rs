//! Radial periods, the orbit-average projection and functions of `(E, L)`.
//!
//! Integrals over `[r_-, r_+]` with the inverse square root weight
//! `1 / sqrt(2 (E - psi_L(r)))` are evaluated after substituting
//! `r = r_- + (r_+ - r_-) sin^2(theta)`, which makes the integrand bounded
//! and smooth on `theta in [0, pi/2]`:
//!
//! ```text
//! T(E, L) = 2 int_{r_-}^{r_+} dr / w(r),     w(r) = sqrt(2 (E - psi_L(r))),
//! P f(E, L) = (1/T) int_{r_-}^{r_+} (f(r, w, L) + f(r, -w, L)) / w dr.
//! ```

use alloc::vec::Vec;

use crate::effective::{
    circular_angular_momentum, find_r_l, find_turning_points, psi_unchecked, TurningPoints,
};
use crate::error::{Error, Result};
use crate::math::{cos, sin, sqrt, FRAC_PI_2, PI};
use crate::orbit::{self, OrbitState, PeriodOptions};
use crate::phase::{Interval, PhaseFunction, PhaseSpace, Support};
use crate::quadrature::GaussLegendre;
use crate::steady_state::Background;

/// Gauss-Legendre rule in the angle of the `sin^2` substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitQuadrature {
    rule: GaussLegendre,
}

impl OrbitQuadrature {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            rule: GaussLegendre::new(n_nodes.max(1)),
        }
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    /// Calls `visit(r, w, k)` for every node, where `sum k g(r) ~ int g/w dr`.
    fn for_each_node<B, V>(&self, bg: &B, tp: &TurningPoints, mut visit: V)
    where
        B: Background + ?Sized,
        V: FnMut(f64, f64, f64),
    {
        let width = tp.width();
        for (theta, weight) in self.rule.mapped(0.0, FRAC_PI_2) {
            let (s, c) = (sin(theta), cos(theta));
            let r = tp.r_minus + width * s * s;
            let gap = tp.energy - psi_unchecked(bg, tp.l, r);
            let w = sqrt(2.0 * gap.max(0.0));
            if w > 0.0 {
                visit(r, w, weight * 2.0 * width * s * c / w);
            }
        }
    }

    /// `T(E, L)`.
    pub fn period<B: Background + ?Sized>(&self, bg: &B, tp: &TurningPoints) -> f64 {
        let mut sum = 0.0;
        self.for_each_node(bg, tp, |_, _, k| sum += k);
        2.0 * sum
    }

    /// `int_{r_-}^{r_+} (f(r, w, L) + f(r, -w, L)) / w dr = T Pf`.
    pub fn orbit_integral<B, F>(&self, bg: &B, tp: &TurningPoints, f: &F) -> f64
    where
        B: Background + ?Sized,
        F: PhaseFunction + ?Sized,
    {
        let mut sum = 0.0;
        self.for_each_node(bg, tp, |r, w, k| {
            sum += k * (f.value(r, w, tp.l) + f.value(r, -w, tp.l));
        });
        sum
    }

    /// `(T, Pf)` in one pass.
    pub fn project<B, F>(&self, bg: &B, tp: &TurningPoints, f: &F) -> (f64, f64)
    where
        B: Background + ?Sized,
        F: PhaseFunction + ?Sized,
    {
        let mut period = 0.0;
        let mut sum = 0.0;
        self.for_each_node(bg, tp, |r, w, k| {
            period += 2.0 * k;
            sum += k * (f.value(r, w, tp.l) + f.value(r, -w, tp.l));
        });
        (period, sum / period)
    }
}

/// Period from a fresh rule; used for step-size estimates.
pub(crate) fn period_quadrature_at<B: Background + ?Sized>(
    bg: &B,
    tp: &TurningPoints,
    n_nodes: usize,
) -> f64 {
    OrbitQuadrature::new(n_nodes).period(bg, tp)
}

/// `T(E, L)` by Gauss-Legendre quadrature with `n_nodes` points.
pub fn period_quadrature<B: Background + ?Sized>(
    bg: &B,
    energy: f64,
    l: f64,
    n_nodes: usize,
) -> Result<f64> {
    let tp = find_turning_points(bg, energy, l)?;
    Ok(period_quadrature_at(bg, &tp, n_nodes))
}

/// A period together with its self-convergence under node doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Relative change when the number of nodes is doubled.
    pub doubling_change: f64,
}

impl PeriodEstimate {
    /// Relative change on doubling the nodes that still counts as converged.
    pub const TOLERANCE: f64 = 1e-8;

    pub fn converged(&self) -> bool {
        self.doubling_change <= Self::TOLERANCE
    }
}

/// [`period_quadrature`] at `n_nodes` and `2 n_nodes`; the finer value is
/// returned.
pub fn period_quadrature_checked<B: Background + ?Sized>(
    bg: &B,
    energy: f64,
    l: f64,
    n_nodes: usize,
) -> Result<PeriodEstimate> {
    let tp = find_turning_points(bg, energy, l)?;
    let coarse = period_quadrature_at(bg, &tp, n_nodes);
    let fine = period_quadrature_at(bg, &tp, 2 * n_nodes);
    Ok(PeriodEstimate {
        period: fine,
        doubling_change: crate::math::rel_diff(coarse, fine),
    })
}

/// Upper bound `T(E, L) <= 2 pi M0^2 / (E^2 sqrt(L))`.
pub fn period_bound<B: Background + ?Sized>(bg: &B, energy: f64, l: f64) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(Error::UnboundOrbit { energy });
    }
    if !(l > 0.0) {
        return Err(Error::domain("L", l, "angular momentum must be positive"));
    }
    let m = bg.total_mass();
    Ok(2.0 * PI * m * m / (energy * energy * sqrt(l)))
}

/// `Pf(E, L)` from the spatial form of the orbit average.
pub fn project_spatial<B, F>(bg: &B, f: &F, energy: f64, l: f64, n_nodes: usize) -> Result<f64>
where
    B: Background + ?Sized,
    F: PhaseFunction + ?Sized,
{
    let tp = find_turning_points(bg, energy, l)?;
    Ok(OrbitQuadrature::new(n_nodes).project(bg, &tp, f).1)
}

/// `Pf(E, L)` as the mean of `f` over `n_samples` equispaced times of one
/// integrated radial period starting at `(r_-, 0)`.
pub fn project_time_average<B, F>(
    bg: &B,
    f: &F,
    energy: f64,
    l: f64,
    n_samples: usize,
    options: &PeriodOptions,
) -> Result<f64>
where
    B: Background + ?Sized,
    F: PhaseFunction + ?Sized,
{
    let tp = find_turning_points(bg, energy, l)?;
    let estimate = period_quadrature_at(bg, &tp, 16);
    let h = orbit::orbit_step(&tp, estimate, options.steps_per_period);
    let period = orbit::oscillation_from(bg, &tp, h, options.integrator, 4.0 * estimate)?.period;
    let n = n_samples.max(1);
    let states = orbit::sample(bg, &OrbitState::at_pericentre(&tp), period, n, h, options.integrator)?;
    let sum: f64 = states.iter().map(|z| f.value(z.r, z.w, z.l)).sum();
    Ok(sum / n as f64)
}

/// A function `g(E, L)` on the admissible region `psi_L(r_L) < E < E0`.
pub trait ElFunction {
    fn value(&self, energy: f64, l: f64) -> f64;

    /// Bounds on `L` and `E` outside of which `g` vanishes.
    fn support(&self) -> Support {
        Support::everywhere()
    }
}

impl<G: ElFunction + ?Sized> ElFunction for &G {
    fn value(&self, energy: f64, l: f64) -> f64 {
        (**self).value(energy, l)
    }
    fn support(&self) -> Support {
        (**self).support()
    }
}

impl<S: PhaseSpace + ?Sized> ElFunction for crate::phase::EnergyBump<'_, S> {
    fn value(&self, energy: f64, l: f64) -> f64 {
        self.profile(energy, l).0
    }
    fn support(&self) -> Support {
        PhaseFunction::support(self)
    }
}

/// `(E, L) -> Pf(E, L)` evaluated on demand with the spatial form.
///
/// On the circular orbit itself the average is the value at `(r_L, 0, L)`.
#[derive(Debug, Clone)]
pub struct Projection<'a, B: ?Sized, F> {
    bg: &'a B,
    f: F,
    quadrature: OrbitQuadrature,
}

impl<'a, B: Background + ?Sized, F: PhaseFunction> Projection<'a, B, F> {
    pub fn new(bg: &'a B, f: F, n_nodes: usize) -> Self {
        Self {
            bg,
            f,
            quadrature: OrbitQuadrature::new(n_nodes),
        }
    }

    pub fn try_value(&self, energy: f64, l: f64) -> Result<f64> {
        match find_turning_points(self.bg, energy, l) {
            Ok(tp) => Ok(self.quadrature.project(self.bg, &tp, &self.f).1),
            Err(Error::DegenerateOrbit { .. }) => {
                let r_l = find_r_l(self.bg, l)?;
                Ok(self.f.value(r_l, 0.0, l))
            }
            Err(e) => Err(e),
        }
    }
}

impl<B: Background + ?Sized, F: PhaseFunction> ElFunction for Projection<'_, B, F> {
    fn value(&self, energy: f64, l: f64) -> f64 {
        self.try_value(energy, l).unwrap_or(f64::NAN)
    }
    fn support(&self) -> Support {
        self.f.support().invariant_part()
    }
}

/// The phase function `(r, w, L) -> g(E^r(r, w, L), L)`.
#[derive(Debug, Clone, Copy)]
pub struct Composed<'a, S: ?Sized, G> {
    pub space: &'a S,
    pub g: G,
}

impl<'a, S: PhaseSpace + ?Sized, G: ElFunction> Composed<'a, S, G> {
    pub fn new(space: &'a S, g: G) -> Self {
        Self { space, g }
    }
}

impl<S: PhaseSpace + ?Sized, G: ElFunction> PhaseFunction for Composed<'_, S, G> {
    fn value(&self, r: f64, w: f64, l: f64) -> f64 {
        self.g.value(self.space.energy(r, w, l), l)
    }
    fn support(&self) -> Support {
        self.g.support().invariant_part()
    }
}

/// Cell-centred grid in `(s, L)` with `E = psi_min(L) + s (E_top - psi_min(L))`,
/// `0 < s < 1`, `0 < L < L_top`, where `psi_min(L_top) = E_top`. Every node is
/// admissible by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ElGrid {
    l: Vec<f64>,
    s: Vec<f64>,
    psi_min: Vec<f64>,
    e_top: f64,
    l_top: f64,
}

impl ElGrid {
    pub fn new<B: Background + ?Sized>(bg: &B, n_e: usize, n_l: usize, e_top: f64) -> Result<Self> {
        if n_e < 2 || n_l < 2 {
            return Err(Error::domain("grid", n_e.min(n_l) as f64, "need at least two cells per axis"));
        }
        let l_top = circular_angular_momentum(bg, e_top)?;
        Self::with_l_range(bg, n_e, Interval::new(0.0, l_top), n_l, e_top)
    }

    /// Grid over the given `L` range; cells with `psi_min(L) >= E_top` keep a
    /// NaN minimum and are reported as inadmissible.
    pub fn with_l_range<B: Background + ?Sized>(
        bg: &B,
        n_e: usize,
        l_range: Interval,
        n_l: usize,
        e_top: f64,
    ) -> Result<Self> {
        let l: Vec<f64> = (0..n_l)
            .map(|i| l_range.lo + (l_range.hi - l_range.lo) * (i as f64 + 0.5) / n_l as f64)
            .collect();
        let s: Vec<f64> = (0..n_e).map(|j| (j as f64 + 0.5) / n_e as f64).collect();
        let mut psi_min = Vec::with_capacity(n_l);
        for &li in &l {
            let r_l = find_r_l(bg, li)?;
            let p = psi_unchecked(bg, li, r_l);
            psi_min.push(if p < e_top { p } else { f64::NAN });
        }
        Ok(Self {
            l,
            s,
            psi_min,
            e_top,
            l_top: l_range.hi,
        })
    }

    pub fn n_e(&self) -> usize {
        self.s.len()
    }

    pub fn n_l(&self) -> usize {
        self.l.len()
    }

    pub fn len(&self) -> usize {
        self.n_e() * self.n_l()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn e_top(&self) -> f64 {
        self.e_top
    }

    pub fn l_top(&self) -> f64 {
        self.l_top
    }

    pub fn l_values(&self) -> &[f64] {
        &self.l
    }

    /// `(E, L)` of cell `(i_l, j_e)`, or `None` if the `L` column has no
    /// admissible energies.
    pub fn node(&self, i_l: usize, j_e: usize) -> Option<(f64, f64)> {
        let p = self.psi_min[i_l];
        if p.is_nan() {
            return None;
        }
        Some((p + self.s[j_e] * (self.e_top - p), self.l[i_l]))
    }

    /// Cells in row-major order (`L` outer, `E` inner).
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n_e = self.n_e();
        (0..self.n_l()).flat_map(move |i| (0..n_e).map(move |j| (i, j)))
    }

    /// Whether the cell touches `E = psi_min(L)`, `E = E_top` or the `L` ends.
    pub fn is_boundary(&self, i_l: usize, j_e: usize) -> bool {
        i_l == 0 || j_e == 0 || i_l + 1 == self.n_l() || j_e + 1 == self.n_e()
    }
}

/// Status of one tabulated cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFlag {
    Ok,
    /// Computed, but the cell touches the edge of the admissible region.
    Boundary,
    /// Not admissible or the computation failed; the value is NaN.
    Skipped,
}

/// Tabulated `g(E, L)` with bilinear interpolation in `(s, L)`.
#[derive(Debug, Clone)]
pub struct ElTable<'a, B: ?Sized> {
    bg: &'a B,
    grid: ElGrid,
    values: Vec<f64>,
    flags: Vec<CellFlag>,
}

impl<'a, B: Background + ?Sized> ElTable<'a, B> {
    /// Builds a table from per-cell results in [`ElGrid::cells`] order.
    pub fn from_results(bg: &'a B, grid: ElGrid, results: Vec<Option<f64>>) -> Self {
        assert_eq!(results.len(), grid.len(), "one result per cell");
        let mut values = Vec::with_capacity(results.len());
        let mut flags = Vec::with_capacity(results.len());
        for ((i, j), v) in grid.cells().zip(results) {
            match v {
                Some(x) if x.is_finite() => {
                    values.push(x);
                    flags.push(if grid.is_boundary(i, j) {
                        CellFlag::Boundary
                    } else {
                        CellFlag::Ok
                    });
                }
                _ => {
                    values.push(f64::NAN);
                    flags.push(CellFlag::Skipped);
                }
            }
        }
        Self {
            bg,
            grid,
            values,
            flags,
        }
    }

    pub fn grid(&self) -> &ElGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn flags(&self) -> &[CellFlag] {
        &self.flags
    }

    pub fn cell_value(&self, i_l: usize, j_e: usize) -> f64 {
        self.values[i_l * self.grid.n_e() + j_e]
    }

    /// Bilinear interpolation; `None` outside the hull of the cell centres
    /// or next to a skipped cell.
    pub fn interpolate(&self, energy: f64, l: f64) -> Option<f64> {
        let g = &self.grid;
        let (l0, l1) = (g.l[0], g.l[g.n_l() - 1]);
        if !(l >= l0 && l <= l1) {
            return None;
        }
        let r_l = find_r_l(self.bg, l).ok()?;
        let p = psi_unchecked(self.bg, l, r_l);
        let s = (energy - p) / (g.e_top - p);
        let (s0, s1) = (g.s[0], g.s[g.n_e() - 1]);
        if !(s >= s0 && s <= s1) {
            return None;
        }
        let locate = |xs: &[f64], x: f64| -> (usize, f64) {
            let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1) - 1;
            (i, (x - xs[i]) / (xs[i + 1] - xs[i]))
        };
        let (i, a) = locate(&g.l, l);
        let (j, b) = locate(&g.s, s);
        let v = |ii: usize, jj: usize| self.cell_value(ii, jj);
        let out = (1.0 - a) * ((1.0 - b) * v(i, j) + b * v(i, j + 1))
            + a * ((1.0 - b) * v(i + 1, j) + b * v(i + 1, j + 1));
        if out.is_nan() {
            None
        } else {
            Some(out)
        }
    }
}

impl<B: Background + ?Sized> ElFunction for ElTable<'_, B> {
    fn value(&self, energy: f64, l: f64) -> f64 {
        self.interpolate(energy, l).unwrap_or(f64::NAN)
    }
}

/// Tabulates `Pf` at the cell centres of `grid`.
pub fn project_grid<'a, B, F>(bg: &'a B, f: &F, grid: ElGrid, n_nodes: usize) -> ElTable<'a, B>
where
    B: Background + ?Sized,
    F: PhaseFunction + ?Sized,
{
    let quadrature = OrbitQuadrature::new(n_nodes);
    let results = grid
        .cells()
        .map(|(i, j)| {
            let (e, l) = grid.node(i, j)?;
            let tp = find_turning_points(bg, e, l).ok()?;
            Some(quadrature.project(bg, &tp, f).1)
        })
        .collect();
    ElTable::from_results(bg, grid, results)
}

/// Gauss-Legendre orders for integrals over the admissible `(E, L)` region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElSpec {
    pub n_l: usize,
    pub n_s: usize,
    /// Nodes of the orbit quadrature at each `(E, L)`.
    pub n_orbit: usize,
}

impl Default for ElSpec {
    fn default() -> Self {
        Self {
            n_l: 48,
            n_s: 48,
            n_orbit: 64,
        }
    }
}

/// `int_L int_{psi_min(L)}^{E_top} F(tp) dE dL` over `L` in `l_range` with
/// the substitution `E = psi_min + s (E_top - psi_min)`. `F` receives the
/// turning points of the node and the orbit quadrature.
pub fn el_integrate<B, F>(
    bg: &B,
    spec: &ElSpec,
    l_range: Interval,
    e_top: f64,
    mut integrand: F,
) -> Result<f64>
where
    B: Background + ?Sized,
    F: FnMut(&TurningPoints, &OrbitQuadrature) -> f64,
{
    let l_cap = circular_angular_momentum(bg, e_top)?;
    let lo = l_range.lo.max(0.0);
    let hi = l_range.hi.min(l_cap);
    if !(lo < hi) {
        return Ok(0.0);
    }
    let orbit_rule = OrbitQuadrature::new(spec.n_orbit);
    let l_rule = GaussLegendre::new(spec.n_l);
    let s_rule = GaussLegendre::new(spec.n_s);
    let mut total = 0.0;
    for (l, wl) in l_rule.mapped(lo, hi) {
        let r_l = find_r_l(bg, l)?;
        let psi_min = psi_unchecked(bg, l, r_l);
        let depth = e_top - psi_min;
        if !(depth > 0.0) {
            continue;
        }
        let mut inner = 0.0;
        for (s, ws) in s_rule.mapped(0.0, 1.0) {
            let e = psi_min + s * depth;
            let tp = find_turning_points(bg, e, l)?;
            inner += ws * integrand(&tp, &orbit_rule);
        }
        total += wl * depth * inner;
    }
    Ok(total)
}

fn weight_top<B: Background + ?Sized>(bg: &B, support: &Support) -> Result<f64> {
    let e0 = bg.cutoff_energy();
    let e_top = support.energy_max.min(e0);
    if e_top >= e0 && !bg.ansatz().weight_bounded_at_cutoff() {
        return Err(Error::NotIntegrable);
    }
    Ok(e_top)
}

/// `<g, h>_H = 4 pi^2 int int T g h / |phi'(E)| dE dL` for functions of
/// `(E, L)`.
pub fn el_inner_product<B, G, H>(bg: &B, spec: &ElSpec, g: &G, h: &H) -> Result<f64>
where
    B: Background + ?Sized,
    G: ElFunction + ?Sized,
    H: ElFunction + ?Sized,
{
    let support = g.support().intersect(&h.support());
    let e_top = weight_top(bg, &support)?;
    let ansatz = *bg.ansatz();
    let l_range = Interval::new(support.l.lo.max(0.0), support.l.hi);
    let sum = el_integrate(bg, spec, l_range, e_top, |tp, q| {
        let period = q.period(bg, tp);
        period * g.value(tp.energy, tp.l) * h.value(tp.energy, tp.l) * ansatz.weight_inside(tp.energy)
    })?;
    Ok(4.0 * PI * PI * sum)
}

/// `4 pi^2 int int T Pf dE dL` with `T Pf` evaluated as the orbit integral
/// `int (f(r, w, L) + f(r, -w, L)) / w dr`. Equals `int f dx dv`.
pub fn el_mass<B, F>(bg: &B, spec: &ElSpec, f: &F) -> Result<f64>
where
    B: Background + ?Sized,
    F: PhaseFunction + ?Sized,
{
    let support = f.support();
    let e_top = support.energy_max.min(bg.cutoff_energy());
    let l_range = Interval::new(support.l.lo.max(0.0), support.l.hi);
    let sum = el_integrate(bg, spec, l_range, e_top, |tp, q| q.orbit_integral(bg, tp, f))?;
    Ok(4.0 * PI * PI * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::Integrator;
    use crate::phase::{BoxBump, EnergyBump, Product, RadialVelocity};
    use crate::steady_state::{PointMass, SolverOptions, SteadyState};
    use crate::{Ansatz, Regime};
    use approx::assert_relative_eq;

    fn kepler() -> PointMass {
        PointMass::unit(-0.1).unwrap()
    }

    fn polytrope() -> SteadyState {
        let a = Ansatz::polytrope(1.0, 1.0, -0.1, Regime::Newtonian).unwrap();
        SteadyState::solve(a, 1.0, &SolverOptions::default()).unwrap()
    }

    fn admissible(s: &SteadyState, fl: f64, fe: f64) -> (f64, f64) {
        let e0 = s.cutoff_energy();
        let l = fl * circular_angular_momentum(s, e0).unwrap();
        let r_l = find_r_l(s, l).unwrap();
        let p = psi_unchecked(s, l, r_l);
        (p + fe * (e0 - p), l)
    }

    #[test]
    fn kepler_period_closed_form() {
        let p = kepler();
        for l in [0.05, 0.3, 0.9] {
            let t = period_quadrature(&p, -0.5, l, 64).unwrap();
            assert_relative_eq!(t, 2.0 * PI, max_relative = 1e-8);
        }
        let t = period_quadrature(&p, -0.3, 1.2, 64).unwrap();
        assert_relative_eq!(t, 2.0 * PI / crate::math::powf(0.6, 1.5), max_relative = 1e-8);
    }

    #[test]
    fn period_converges_under_doubling() {
        let s = polytrope();
        for (fl, fe) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.9), (0.02, 0.98)] {
            let (e, l) = admissible(&s, fl, fe);
            let est = period_quadrature_checked(&s, e, l, 64).unwrap();
            assert!(est.doubling_change <= 1e-10, "{fl} {fe} {}", est.doubling_change);
            assert!(est.converged());
        }
    }

    #[test]
    fn bound_arithmetic_and_grid() {
        let p = kepler();
        assert_relative_eq!(period_bound(&p, -0.5, 0.25).unwrap(), 16.0 * PI, max_relative = 1e-15);
        assert!(period_bound(&p, 0.1, 0.25).is_err());
        assert!(period_bound(&p, -0.5, 0.3).unwrap() < period_bound(&p, -0.5, 0.25).unwrap());
        assert!(period_bound(&p, -0.6, 0.25).unwrap() < period_bound(&p, -0.5, 0.25).unwrap());
        let s = polytrope();
        let grid = ElGrid::new(&s, 20, 20, s.cutoff_energy()).unwrap();
        for (i, j) in grid.cells() {
            let (e, l) = grid.node(i, j).unwrap();
            let t = period_quadrature(&s, e, l, 64).unwrap();
            assert!(t <= period_bound(&s, e, l).unwrap());
        }
    }

    #[test]
    fn trivial_projections() {
        let s = polytrope();
        let (e, l) = admissible(&s, 0.4, 0.6);
        let one = crate::phase::Constant(1.0);
        assert_relative_eq!(project_spatial(&s, &one, e, l, 64).unwrap(), 1.0, max_relative = 1e-14);
        let opts = PeriodOptions::default();
        let avg = project_time_average(&s, &one, e, l, 256, &opts).unwrap();
        assert_relative_eq!(avg, 1.0, max_relative = 1e-14);
        let w_avg = project_time_average(&s, &RadialVelocity, e, l, 1024, &opts).unwrap();
        assert!(w_avg.abs() < 1e-8, "{w_avg}");
        assert!(project_spatial(&s, &RadialVelocity, e, l, 64).unwrap().abs() < 1e-14);
        let el = crate::period::tests::EnergyTimesL(&s);
        let v = project_time_average(&s, &el, e, l, 256, &opts).unwrap();
        assert_relative_eq!(v, e * l, max_relative = 1e-8);
    }

    pub(crate) struct EnergyTimesL<'a>(pub &'a SteadyState);

    impl PhaseFunction for EnergyTimesL<'_> {
        fn value(&self, r: f64, w: f64, l: f64) -> f64 {
            self.0.energy(r, w, l) * l
        }
    }

    #[test]
    fn even_functions_weigh_both_branches_equally() {
        let s = polytrope();
        let (e, l) = admissible(&s, 0.3, 0.5);
        let tp = find_turning_points(&s, e, l).unwrap();
        let q = OrbitQuadrature::new(64);
        struct WSquared;
        impl PhaseFunction for WSquared {
            fn value(&self, r: f64, w: f64, _l: f64) -> f64 {
                r * w * w
            }
        }
        struct Upper;
        impl PhaseFunction for Upper {
            fn value(&self, r: f64, w: f64, _l: f64) -> f64 {
                if w > 0.0 {
                    2.0 * r * w * w
                } else {
                    0.0
                }
            }
        }
        let both = q.orbit_integral(&s, &tp, &WSquared);
        let upper = q.orbit_integral(&s, &tp, &Upper);
        assert!((both - upper).abs() <= 1e-12 * both.abs());
    }

    #[test]
    fn time_average_matches_spatial_form() {
        let s = polytrope();
        let radius = s.radius();
        let opts = PeriodOptions {
            steps_per_period: 2000,
            integrator: Integrator::Yoshida6,
        };
        let b = BoxBump::new(
            Interval::new(0.1 * radius, 0.7 * radius),
            Interval::new(-0.5, 0.3),
            Interval::new(0.0, 1.0),
            1.0,
        );
        for (fl, fe) in [(0.2, 0.3), (0.5, 0.7), (0.7, 0.2)] {
            let (e, l) = admissible(&s, fl, fe);
            let spatial = project_spatial(&s, &b, e, l, 256).unwrap();
            let time = project_time_average(&s, &b, e, l, 4096, &opts).unwrap();
            assert!((spatial - time).abs() <= 1e-7, "{spatial} {time}");
        }
    }

    #[test]
    fn projection_of_kernel_function_is_itself() {
        let s = polytrope();
        let e0 = s.cutoff_energy();
        let h = EnergyBump::new(&s, Interval::new(s.potential(0.0), e0), Interval::new(0.0, 0.2), 1.0);
        let proj = Projection::new(&s, h, 64);
        for (fl, fe) in [(0.2, 0.3), (0.5, 0.7)] {
            let (e, l) = admissible(&s, fl, fe);
            assert_relative_eq!(proj.value(e, l), ElFunction::value(&h, e, l), max_relative = 1e-12);
        }
    }

    #[test]
    fn table_interpolates_and_flags() {
        let s = polytrope();
        let e0 = s.cutoff_energy();
        let h = EnergyBump::new(&s, Interval::new(s.potential(0.0), e0), Interval::new(0.0, 0.4), 1.0);
        let grid = ElGrid::new(&s, 24, 24, e0).unwrap();
        let table = project_grid(&s, &h, grid, 64);
        assert!(table.flags().iter().all(|f| *f != CellFlag::Skipped));
        assert_eq!(table.flags()[0], CellFlag::Boundary);
        let (e, l) = table.grid().node(5, 7).unwrap();
        assert_relative_eq!(table.interpolate(e, l).unwrap(), table.cell_value(5, 7), max_relative = 1e-12);
        assert!(table.interpolate(e0 - 1e-9, l).is_none());
        assert!(table.interpolate(e, 1e-9).is_none());
    }

    #[test]
    fn mass_identity_for_kernel_and_mixed_functions() {
        // Reference: the same integral in (r, w, L) by nested Gauss-Legendre.
        let s = polytrope();
        let e0 = s.cutoff_energy();
        let radius = s.radius();
        let h = EnergyBump::new(&s, Interval::new(s.potential(0.0) * 0.95, e0 - 0.02), Interval::new(0.005, 0.05), 1.0);
        let b = BoxBump::new(
            Interval::new(0.1 * radius, 0.6 * radius),
            Interval::new(-0.4, 0.2),
            Interval::new(0.005, 0.05),
            1.0,
        );
        let mixed = Product(b, h);
        let spec = ElSpec {
            n_l: 40,
            n_s: 40,
            n_orbit: 64,
        };
        let left = el_mass(&s, &spec, &mixed).unwrap();
        let right = crate::transport::integrate_rwl(
            &s,
            &crate::transport::InnerProductSpec::default(),
            &mixed.support(),
            |r, w, l| mixed.value(r, w, l),
        )
        .unwrap();
        assert_relative_eq!(left, 4.0 * PI * PI * right, max_relative = 1e-4);
    }
}
