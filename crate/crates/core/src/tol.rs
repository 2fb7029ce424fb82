//! Central tolerances and thresholds.
//!
//! Every cutoff used by the solvers lives here with its rationale, so the
//! accuracy budget is auditable in one place. The chain of defaults is:
//! quadrature at 1e-13, fixed-point residuals at 1e-12, which leaves ~1e-9
//! slack for the determinant certificates built on top of them.

/// Default relative tolerance of the periodic trapezoid quadrature.
pub const QUAD_REL_TOL: f64 = 1e-13;

/// Default residual tolerance for self-consistency and scalar root solves.
pub const SOLVER_TOL: f64 = 1e-12;

/// Negativity threshold for the free-energy minimum: a global minimum in
/// `(-EPS_NEG, EPS_NEG)` is reported as exactly 0. Keeps the bisection
/// predicate for `K_c` deterministic against quadrature noise.
pub const EPS_NEG: f64 = 1e-9;

/// L¹ jump threshold separating continuous from discontinuous transitions.
/// Discontinuous transitions in this model jump by O(1), so any small
/// threshold works; the probe extrapolation reduces the continuous side
/// to ~0.
pub const JUMP_THRESHOLD: f64 = 1e-2;

/// Second-mode weight below which the spectral-gap certificate is proven
/// for every `K > 1`.
pub const M0: f64 = 1.590e-4;

/// Largest `m` with a guaranteed unique nonuniform stationary state
/// (up to translation) for `K > 1`.
pub const M_UNIQUENESS: f64 = 0.25;

/// `m` is treated as zero below this cutoff: the closed-form covariance
/// entries divide by `m` and lose accuracy, so quadrature is used instead.
pub const M_ZERO_CUTOFF: f64 = 1e-6;

/// Relative self-adjointness residual allowed for the discretized operator.
pub const SYM_RESIDUAL: f64 = 1e-8;

/// Default landscape grid resolution (per axis).
pub const GRID_DEFAULT: usize = 64;

/// Default mode truncation of the operator discretization.
pub const SPECTRAL_MODES_DEFAULT: usize = 128;

/// Default mode truncation of the PDE integrator.
pub const PDE_MODES_DEFAULT: usize = 256;

/// Densities are clamped to zero on the collocation grid when within this
/// band below zero (spectral ringing at machine scale); anything more
/// negative is treated as a blow-up.
pub const DENSITY_NEG_TOL: f64 = 1e-10;
