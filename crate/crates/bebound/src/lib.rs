//! Rigorous two-sided bounds on distribution functions and moment-weighted
//! tail probabilities, computed directly from characteristic functions.
//!
//! The library is organized bottom-up:
//!
//! - [`filters`]: the smoothing multiplier `M(t)`, its split into a real
//!   sandwich part and an imaginary half-width part, and the spectral
//!   envelope constants of the triangular-squared kernel.
//! - [`pv_transform`]: adaptive complex quadrature, the sine integral, and
//!   the principal-value transform `G(c)(x)` that maps an integrable
//!   coefficient function to a smoothed tail functional.
//! - [`cf_core`]: finite discrete distributions, characteristic functions
//!   and their derivatives (including standardized iid sums and the standard
//!   normal), and the moment-weighted spectral data `W`, `V` entering the
//!   tail identities.
//! - [`oracle`]: exact ground truth — n-fold convolutions, a high-accuracy
//!   normal CDF, and tail-gap profiles used to audit every bound.
//! - [`bounds`]: the user-facing estimates — a two-sided CDF sandwich and
//!   certified enclosures of `x^k P(X >= x)`, plus the small-n audit
//!   machinery for moment-heavy regimes.
//! - [`cli`]: the `bebound` command-line front end.

pub mod bounds;
pub mod cf_core;
pub mod cli;
pub mod filters;
pub mod oracle;
pub mod pv_transform;
pub(crate) mod util;

pub use bounds::{
    cdf_bounds, default_fix_p, e_rat_bounds, fix_correction, h_triple_prime, h_triple_prime_check,
    psi, rosenthal_ub, small_n_nagaev, tail_moment_bound_exact, tail_moment_bound_surrogate,
    BoundError, CdfBounds, DerivationStep, ERatBounds, FixCorrection, HDerivScan,
    NagaevCertificate, TailMode, TailMomentBound, DEFAULT_TOL,
};
pub use cf_core::{CharFn, DiscreteDist, DistError, MomentData, SourceDist};
pub use filters::{FilterConstant, FilterError, SmoothingFilter};
pub use oracle::{delta_profile, normal_cdf, normal_sf, DeltaProfile, StandardizedSum};
pub use pv_transform::{PvError, QuadratureResult, SymmetryClass};
