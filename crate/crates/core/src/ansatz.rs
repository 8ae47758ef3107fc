//! Ansatz functions `phi` with an energy cutoff `E0`.
//!
//! The steady-state distribution is `f0 = phi(E)`. Only the polytropic
//! family `phi(E) = c (E0 - E)_+^k` is provided; `phi' < 0` strictly below
//! the cutoff and `phi = 0` above it.

use crate::error::{Error, Result};
use crate::math::{pow_pos, powf, tgamma, PI};

/// Largest polytropic exponent (exclusive) for which a Newtonian state has
/// compact support.
pub const NEWTONIAN_EXPONENT_LIMIT: f64 = 3.5;

/// Newtonian (`E0 < 0`) or relativistic (`0 < E0 < 1`) cutoff convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Newtonian,
    Relativistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzKind {
    Polytrope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ansatz {
    kind: AnsatzKind,
    regime: Regime,
    exponent: f64,
    amplitude: f64,
    cutoff: f64,
}

impl Ansatz {
    /// `phi(E) = amplitude * (cutoff - E)_+^exponent`.
    pub fn polytrope(exponent: f64, amplitude: f64, cutoff: f64, regime: Regime) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::InvalidAnsatz("polytropic exponent k must be positive"));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidAnsatz("amplitude c must be positive"));
        }
        match regime {
            Regime::Newtonian => {
                if !(cutoff.is_finite() && cutoff < 0.0) {
                    return Err(Error::InvalidAnsatz("Newtonian cutoff E0 must be negative"));
                }
                if exponent >= NEWTONIAN_EXPONENT_LIMIT {
                    return Err(Error::InvalidAnsatz(
                        "Newtonian polytropes need k < 7/2 for compact support",
                    ));
                }
            }
            Regime::Relativistic => {
                if !(cutoff > 0.0 && cutoff < 1.0) {
                    return Err(Error::InvalidAnsatz(
                        "relativistic cutoff E0 must lie in (0, 1)",
                    ));
                }
            }
        }
        Ok(Self {
            kind: AnsatzKind::Polytrope,
            regime,
            exponent,
            amplitude,
            cutoff,
        })
    }

    pub fn kind(&self) -> AnsatzKind {
        self.kind
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Same profile with another cutoff, bypassing the regime check. Used
    /// when a solver closes the cutoff from the boundary conditions.
    pub(crate) fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub(crate) fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn phi(&self, energy: f64) -> f64 {
        self.amplitude * pow_pos(self.cutoff - energy, self.exponent)
    }

    /// `phi'(E)`, defined only below the cutoff.
    pub fn phi_prime(&self, energy: f64) -> Result<f64> {
        if !(energy < self.cutoff) {
            return Err(Error::domain("E", energy, "phi' is only used for E < E0"));
        }
        Ok(self.phi_prime_inside(energy))
    }

    #[inline]
    pub(crate) fn phi_prime_inside(&self, energy: f64) -> f64 {
        let x = self.cutoff - energy;
        let k = self.exponent;
        let p = if k == 1.0 {
            1.0
        } else if k == 2.0 {
            x
        } else {
            powf(x, k - 1.0)
        };
        -self.amplitude * k * p
    }

    /// Hilbert-space weight `1/|phi'(E)|`, defined only below the cutoff.
    pub fn weight(&self, energy: f64) -> Result<f64> {
        Ok(1.0 / self.phi_prime(energy)?.abs())
    }

    #[inline]
    pub(crate) fn weight_inside(&self, energy: f64) -> f64 {
        1.0 / self.phi_prime_inside(energy).abs()
    }

    /// Whether `1/|phi'|` stays bounded as `E -> E0`.
    pub fn weight_bounded_at_cutoff(&self) -> bool {
        self.exponent <= 1.0
    }

    /// Constant `c_k` in `rho = c_k y^(k + 3/2)` for the Newtonian polytrope,
    /// `c_k = (2 pi)^(3/2) c Gamma(k + 1) / Gamma(k + 5/2)`.
    pub fn density_constant(&self) -> f64 {
        let k = self.exponent;
        powf(2.0 * PI, 1.5) * self.amplitude * tgamma(k + 1.0) / tgamma(k + 2.5)
    }

    /// Newtonian mass density for relative potential `y = E0 - U0 >= 0`:
    /// `4 pi sqrt(2) * int_0^y phi(E0 - y + s) sqrt(s) ds`.
    pub fn density(&self, relative_potential: f64) -> Result<f64> {
        if !(relative_potential >= 0.0) {
            return Err(Error::domain(
                "y",
                relative_potential,
                "relative potential must be non-negative",
            ));
        }
        Ok(self.density_unchecked(relative_potential))
    }

    /// As [`Ansatz::density`] but with `rho = 0` for `y <= 0`.
    #[inline]
    pub fn density_unchecked(&self, relative_potential: f64) -> f64 {
        if relative_potential <= 0.0 {
            return 0.0;
        }
        self.density_constant() * pow_pos(relative_potential, self.exponent + 1.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad() -> Ansatz {
        Ansatz::polytrope(2.0, 1.0, -0.1, Regime::Newtonian).unwrap()
    }

    #[test]
    fn phi_values() {
        let a = quad();
        assert_relative_eq!(a.phi(-1.1), 1.0, max_relative = 1e-15);
        assert_eq!(a.phi(0.0), 0.0);
        assert_relative_eq!(a.phi(-0.6), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn phi_prime_values() {
        let a = quad();
        assert_relative_eq!(a.phi_prime(-0.6).unwrap(), -1.0, max_relative = 1e-15);
        let lin = Ansatz::polytrope(1.0, 3.0, -0.1, Regime::Newtonian).unwrap();
        assert_eq!(lin.phi_prime(-2.0).unwrap(), -3.0);
        assert!(matches!(a.phi_prime(0.0), Err(Error::Domain { .. })));
        assert!(matches!(a.phi_prime(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn weight_values() {
        let a = quad();
        assert_relative_eq!(a.weight(-0.6).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(a.weight(-0.35).unwrap(), 2.0, max_relative = 1e-14);
        let lin = Ansatz::polytrope(1.0, 3.0, -0.1, Regime::Newtonian).unwrap();
        for e in [-5.0, -1.0, -0.2, -0.100001] {
            assert_relative_eq!(lin.weight(e).unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        }
        assert!(a.weight(1.0).is_err());
    }

    #[test]
    fn construction_rules() {
        assert!(Ansatz::polytrope(4.0, 1.0, -0.1, Regime::Newtonian).is_err());
        assert!(Ansatz::polytrope(3.5, 1.0, -0.1, Regime::Newtonian).is_err());
        assert!(Ansatz::polytrope(1.0, 1.0, 0.5, Regime::Newtonian).is_err());
        assert!(Ansatz::polytrope(1.0, 1.0, -0.5, Regime::Relativistic).is_err());
        assert!(Ansatz::polytrope(1.0, 1.0, 1.0, Regime::Relativistic).is_err());
        assert!(Ansatz::polytrope(0.0, 1.0, -0.1, Regime::Newtonian).is_err());
        assert!(Ansatz::polytrope(1.0, 0.0, -0.1, Regime::Newtonian).is_err());
        assert!(Ansatz::polytrope(5.0, 1.0, 0.9, Regime::Relativistic).is_ok());
    }

    #[test]
    fn density_constant_for_k_one() {
        let a = Ansatz::polytrope(1.0, 1.0, -0.1, Regime::Newtonian).unwrap();
        let expected = 4.0 * PI * crate::math::sqrt(2.0) * 4.0 / 15.0;
        assert_relative_eq!(a.density_constant(), expected, max_relative = 1e-14);
        assert_eq!(a.density(0.0).unwrap(), 0.0);
        assert!(a.density(-1e-3).is_err());
    }
}
