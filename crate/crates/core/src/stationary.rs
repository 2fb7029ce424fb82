//! Stationary states of the Kuramoto-Daido equation.
//!
//! Nonuniform stationary solutions are exponential-family densities
//!
//! ```text
//! q_{r₁,r₂}(θ) = Z⁻¹ exp(2K r₁ cos θ + 2K m r₂ cos 2θ),
//! ```
//!
//! whose order parameters must solve the self-consistency system
//! `r_j = I_j(2K r₁, 2K m r₂) / I_0(2K r₁, 2K m r₂)`, `j = 1, 2`. For
//! `K > 1` and `m ∈ (0, 1/4]` that system has a unique solution in `(0,1)²`
//! (up to translation of the density), which this module computes by damped
//! fixed-point iteration warm-started at the Kuramoto solution, followed by a
//! Newton polish with the analytic Jacobian.
//!
//! The module also evaluates the covariance matrix `D_{jl} = ∫cos jθ cos lθ dq`
//! both by quadrature and by the integration-by-parts closed forms, and checks
//! the three exact identities those closed forms rest on.

use crate::error::{KdError, Result};
use crate::special::{bessel_ratios, log_bessel2_zero, QuadratureConfig};
use crate::tol;

/// Interaction strength and second-mode weight `(K, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub k: f64,
    pub m: f64,
}

impl ModelParams {
    pub fn new(k: f64, m: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(KdError::DomainError(format!("K = {k} must be positive")));
        }
        if !(m >= 0.0) {
            return Err(KdError::DomainError(format!("m = {m} must be nonnegative")));
        }
        Ok(Self { k, m })
    }

    /// True when `(K, m)` lies in the region where the nonuniform stationary
    /// state is provably unique: `K > 1`, `m ≤ 1/4`.
    pub fn in_uniqueness_region(&self) -> bool {
        self.k > 1.0 && self.m <= tol::M_UNIQUENESS
    }
}

/// First and second cosine moments `(r₁, r₂)` of a stationary density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderParameters {
    pub r1: f64,
    pub r2: f64,
}

/// A stationary density `q_{r₁,r₂}` with its log-normalizer cached.
#[derive(Debug, Clone)]
pub struct Density {
    pub params: ModelParams,
    pub op: OrderParameters,
    /// `log ∫ exp(2K r₁ cos θ + 2K m r₂ cos 2θ) dθ`.
    pub log_normalizer: f64,
}

impl Density {
    pub fn new(params: ModelParams, op: OrderParameters, cfg: &QuadratureConfig) -> Result<Self> {
        let log_i0 = log_bessel2_zero(
            2.0 * params.k * op.r1,
            2.0 * params.k * params.m * op.r2,
            cfg,
        )?;
        Ok(Self {
            params,
            op,
            log_normalizer: log_i0 + (2.0 * std::f64::consts::PI).ln(),
        })
    }

    pub fn uniform(params: ModelParams) -> Self {
        Self {
            params,
            op: OrderParameters { r1: 0.0, r2: 0.0 },
            log_normalizer: (2.0 * std::f64::consts::PI).ln(),
        }
    }

    /// Pointwise value `q(θ) = exp(2K r₁ cos θ + 2K m r₂ cos 2θ − log Z)`.
    pub fn eval(&self, theta: f64) -> f64 {
        let e = 2.0 * self.params.k * self.op.r1 * theta.cos()
            + 2.0 * self.params.k * self.params.m * self.op.r2 * (2.0 * theta).cos();
        (e - self.log_normalizer).exp()
    }
}

/// Second moments of the first two Fourier modes under `q`, with the first
/// moments carried along.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceMatrix {
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
    pub r1: f64,
    pub r2: f64,
}

impl CovarianceMatrix {
    /// Determinant of the centered covariance
    /// `(D₁₁−r₁²)(D₂₂−r₂²) − (D₁₂−r₁r₂)²`.
    pub fn centered_det(&self) -> f64 {
        (self.d11 - self.r1 * self.r1) * (self.d22 - self.r2 * self.r2)
            - (self.d12 - self.r1 * self.r2) * (self.d12 - self.r1 * self.r2)
    }

    pub fn det(&self) -> f64 {
        self.d11 * self.d22 - self.d12 * self.d12
    }
}

/// Cosine moments `I_n/I_0` of `q_{r₁,r₂}` for `n = 0..=n_max`.
fn moments(
    params: ModelParams,
    op: OrderParameters,
    n_max: usize,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    bessel_ratios(
        n_max,
        2.0 * params.k * op.r1,
        2.0 * params.k * params.m * op.r2,
        cfg,
    )
}

/// Kuramoto order parameter: the unique nonnegative solution of
/// `r = I₁(2Kr)/I₀(2Kr)` (zero for `K ≤ 1`).
pub fn kuramoto_order(k: f64, solver_tol: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(KdError::DomainError(format!("K = {k} must be positive")));
    }
    if k <= 1.0 {
        return Ok(0.0);
    }
    let cfg = QuadratureConfig::default();
    let g = |r: f64| -> Result<f64> {
        let ratios = bessel_ratios(1, 2.0 * k * r, 0.0, &cfg)?;
        Ok(r - ratios[1])
    };
    // g < 0 just right of 0 for K > 1 and g(1) > 0: bisect, then polish with
    // Newton using g'(r) = 1 − 2K·Var[cos θ].
    let (mut lo, mut hi) = (1e-8, 1.0);
    if !(g(lo)? < 0.0 && g(hi)? > 0.0) {
        return Err(KdError::NonConvergence(format!(
            "no sign change for the Kuramoto equation at K = {k}"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let ratios = bessel_ratios(2, 2.0 * k * r, 0.0, &cfg)?;
        let residual = r - ratios[1];
        if residual.abs() <= solver_tol {
            return Ok(r);
        }
        let var = (1.0 + ratios[2]) / 2.0 - ratios[1] * ratios[1];
        let deriv = 1.0 - 2.0 * k * var;
        let step = residual / deriv;
        r = (r - step).clamp(0.0, 1.0);
    }
    Err(KdError::NonConvergence(format!(
        "Kuramoto Newton polish stalled at K = {k}"
    )))
}

fn solve_inner(params: ModelParams, solver_tol: f64) -> Result<OrderParameters> {
    let ModelParams { k, m } = params;
    let cfg = QuadratureConfig::default();

    // Warm start at the Kuramoto solution (r̄₁, r̄₂ = 1 − 1/K).
    let r1_bar = kuramoto_order(k, solver_tol)?;
    let mut r1 = r1_bar;
    let mut r2 = (1.0 - 1.0 / k).max(0.0);

    let phi = |r1: f64, r2: f64| -> Result<(f64, f64)> {
        let ratios = bessel_ratios(2, 2.0 * k * r1, 2.0 * k * m * r2, &cfg)?;
        Ok((ratios[1], ratios[2]))
    };

    // Damped fixed-point iteration; the fixed point is an attractor near the
    // Kuramoto solution.
    let mut converged = false;
    for _ in 0..200 {
        let (p1, p2) = phi(r1, r2)?;
        let (res1, res2) = (r1 - p1, r2 - p2);
        if res1.abs().max(res2.abs()) <= 1e-6 {
            converged = true;
            break;
        }
        r1 += 0.5 * (p1 - r1);
        r2 += 0.5 * (p2 - r2);
    }
    if !converged {
        return Err(KdError::NonConvergence(format!(
            "damped iteration stalled at (K, m) = ({k}, {m})"
        )));
    }

    // Newton polish with the analytic Jacobian of the residual map
    // R(r) = r − Φ(r):  J = I − [[2K v₁₁, 2K m v₁₂], [2K v₁₂, 2K m v₂₂]].
    for _ in 0..50 {
        let ratios = moments(params, OrderParameters { r1, r2 }, 4, &cfg)?;
        let (p1, p2) = (ratios[1], ratios[2]);
        let (res1, res2) = (r1 - p1, r2 - p2);
        if res1.abs().max(res2.abs()) <= solver_tol {
            return Ok(OrderParameters { r1, r2 });
        }
        let d11 = (1.0 + ratios[2]) / 2.0;
        let d12 = (ratios[1] + ratios[3]) / 2.0;
        let d22 = (1.0 + ratios[4]) / 2.0;
        let v11 = d11 - p1 * p1;
        let v12 = d12 - p1 * p2;
        let v22 = d22 - p2 * p2;
        let j11 = 1.0 - 2.0 * k * v11;
        let j12 = -2.0 * k * m * v12;
        let j21 = -2.0 * k * v12;
        let j22 = 1.0 - 2.0 * k * m * v22;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            break;
        }
        r1 -= (res1 * j22 - res2 * j12) / det;
        r2 -= (res2 * j11 - res1 * j21) / det;
    }
    Err(KdError::NonConvergence(format!(
        "Newton polish stalled at (K, m) = ({k}, {m})"
    )))
}

/// Solve the self-consistency equations inside the guaranteed-uniqueness
/// region `K > 1`, `m ∈ [0, 1/4]`.
pub fn solve_self_consistency(params: ModelParams, solver_tol: f64) -> Result<OrderParameters> {
    if !params.in_uniqueness_region() {
        return Err(KdError::DomainError(format!(
            "(K, m) = ({}, {}) outside the uniqueness region K > 1, m ≤ 1/4; \
             pass the outside-theory override to proceed without uniqueness claims",
            params.k, params.m
        )));
    }
    solve_inner(params, solver_tol)
}

/// Solve without the uniqueness-region check. Results outside `K > 1`,
/// `m ≤ 1/4` carry no uniqueness guarantee.
pub fn solve_self_consistency_unchecked(
    params: ModelParams,
    solver_tol: f64,
) -> Result<OrderParameters> {
    if params.k <= 1.0 {
        // Subcritical: the unique stationary state is uniform.
        return Ok(OrderParameters { r1: 0.0, r2: 0.0 });
    }
    solve_inner(params, solver_tol)
}

/// Unique fixed point `r₂*(r₁)` of the partial self-consistency map
/// `ψ_{r₁}(r₂) = ∫cos 2θ dq_{r₁,r₂} `, in the contraction regime
/// `K ≤ 1`, `m ≤ 1/2`. Nonnegative and even in `r₁`.
pub fn r2_star(r1: f64, params: ModelParams, solver_tol: f64) -> Result<f64> {
    let ModelParams { k, m } = params;
    if k > 1.0 || m > 0.5 {
        return Err(KdError::DomainError(format!(
            "(K, m) = ({k}, {m}) outside the contraction regime K ≤ 1, m ≤ 1/2"
        )));
    }
    let cfg = QuadratureConfig::default();
    let mut r2 = 0.0;
    for _ in 0..500 {
        let ratios = bessel_ratios(2, 2.0 * k * r1, 2.0 * k * m * r2, &cfg)?;
        let next = ratios[2];
        if (next - r2).abs() <= solver_tol {
            return Ok(next);
        }
        r2 += 0.7 * (next - r2);
    }
    Err(KdError::NonConvergence(format!(
        "r2* iteration stalled at r1 = {r1}, (K, m) = ({k}, {m})"
    )))
}

/// `∫ cos(jθ) dq` by quadrature.
pub fn fourier_moment(d: &Density, j: i32, cfg: &QuadratureConfig) -> Result<f64> {
    let ms = moments(d.params, d.op, j.unsigned_abs() as usize, cfg)?;
    Ok(ms[j.unsigned_abs() as usize])
}

/// Covariance matrix by quadrature:
/// `D₁₁ = (1 + ρ₂)/2`, `D₁₂ = (ρ₁ + ρ₃)/2`, `D₂₂ = (1 + ρ₄)/2`
/// with `ρ_n` the n-th cosine moment of `q`.
pub fn covariance(d: &Density, cfg: &QuadratureConfig) -> Result<CovarianceMatrix> {
    let ms = moments(d.params, d.op, 4, cfg)?;
    Ok(CovarianceMatrix {
        d11: (1.0 + ms[2]) / 2.0,
        d12: (ms[1] + ms[3]) / 2.0,
        d22: (1.0 + ms[4]) / 2.0,
        r1: d.op.r1,
        r2: d.op.r2,
    })
}

/// Closed-form covariance entries on a solved state:
///
/// ```text
/// D₁₁ = (1 + r₂)/2
/// D₁₂ = r₁ (1 − (r₂ − r̄₂)/(4 m r₂))
/// D₂₂ = 1 − (r₂ − K r₁² (r₂ − r̄₂)/(4 m r₂)) / (2 K m r₂)
/// ```
///
/// with `r̄₂ = 1 − 1/K`. The `D₁₂`, `D₂₂` formulas divide by `m` (the
/// singularity at `m = 0` is removable), so below [`tol::M_ZERO_CUTOFF`]
/// the entries are delegated to quadrature.
pub fn covariance_closed_form(
    params: ModelParams,
    op: OrderParameters,
) -> Result<CovarianceMatrix> {
    let ModelParams { k, m } = params;
    let OrderParameters { r1, r2 } = op;
    if r2 <= 0.0 {
        return Err(KdError::DomainError(format!(
            "closed-form covariance needs r2 > 0, got {r2}"
        )));
    }
    if m <= tol::M_ZERO_CUTOFF {
        let d = Density::new(params, op, &QuadratureConfig::default())?;
        return covariance(&d, &QuadratureConfig::default());
    }
    let r2_bar = 1.0 - 1.0 / k;
    let excess = (r2 - r2_bar) / (4.0 * m * r2);
    let d12 = r1 * (1.0 - excess);
    let d22 = 1.0 - (r2 - k * r1 * r1 * excess) / (2.0 * k * m * r2);
    Ok(CovarianceMatrix {
        d11: (1.0 + r2) / 2.0,
        d12,
        d22,
        r1,
        r2,
    })
}

/// The three integration-by-parts identities evaluated as residuals:
///
/// ```text
/// r₁ − [2K r₁ (1−D₁₁) + 4K m r₂ (r₁−D₁₂)]
/// r₂ − [K r₁ (r₁−D₁₂) + 2K m r₂ (1−D₂₂)]
/// 1 − 2K(1−D₁₁) − 2Km(1−D₂₂) + 4K²m[(1−D₁₁)(1−D₂₂) − (r₁−D₁₂)²]
/// ```
///
/// All three vanish on solved nonuniform states; the third is the
/// singularity condition of the linear system the first two define, and is
/// generally nonzero at the uniform state.
pub fn ibp_residuals(
    params: ModelParams,
    op: OrderParameters,
    cov: &CovarianceMatrix,
) -> (f64, f64, f64) {
    let ModelParams { k, m } = params;
    let OrderParameters { r1, r2 } = op;
    let s1 = 1.0 - cov.d11;
    let s2 = 1.0 - cov.d22;
    let c = r1 - cov.d12;
    let res1 = r1 - (2.0 * k * r1 * s1 + 4.0 * k * m * r2 * c);
    let res2 = r2 - (k * r1 * c + 2.0 * k * m * r2 * s2);
    let res3 = 1.0 - 2.0 * k * s1 - 2.0 * k * m * s2 + 4.0 * k * k * m * (s1 * s2 - c * c);
    (res1, res2, res3)
}
