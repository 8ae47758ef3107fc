use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes of the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible domain ({reason})")]
    Domain {
        what: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid ansatz: {0}")]
    InvalidAnsatz(&'static str),

    #[error("density did not vanish before r_max = {r_max}")]
    NonCompactSupport { r_max: f64 },

    #[error("step size underflow at r = {r}")]
    Stiffness { r: f64 },

    #[error("degenerate orbit: E = {energy} does not exceed min psi_L = {psi_min}")]
    DegenerateOrbit { energy: f64, psi_min: f64 },

    #[error("unbound orbit: E = {energy} is not negative")]
    UnboundOrbit { energy: f64 },

    #[error("orbit left the numerical domain (r = {r}); reduce the time step")]
    StepTooCoarse { r: f64 },

    #[error("analytic partial derivatives are required")]
    MissingPartials,

    #[error("weight 1/|phi'| is not integrable up to the cutoff; supply a support bound away from E0")]
    NotIntegrable,

    #[error("support descriptor does not certify margin m = {m}: {reason}")]
    SupportMargin { m: u32, reason: &'static str },

    #[error("horizon formation: 2m/r = {ratio} at r = {r}")]
    Horizon { r: f64, ratio: f64 },

    #[error("cutoff closure did not converge within {iterations} iterations (residual {residual})")]
    Closure { iterations: usize, residual: f64 },

    #[error("root bracket [{lo}, {hi}] does not contain a sign change")]
    Bracket { lo: f64, hi: f64 },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            what,
            value,
            reason,
        }
    }
}
