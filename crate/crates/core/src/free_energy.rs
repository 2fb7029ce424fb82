//! The reduced mean-field free energy on `[−1, 1]²`.
//!
//! ```text
//! F_{K,m}(r₁, r₂) = K r₁² + K m r₂² − log I₀(2K r₁, 2K m r₂),
//! ```
//!
//! whose critical points are exactly the solutions of the self-consistency
//! system, and whose global minimum decides the phase: `min F = 0` iff the
//! uniform state is a global minimizer of the full free energy. `F` is even
//! in `r₁`, so minimization is restricted to `r₁ ≥ 0` and argmins are
//! reported with the canonical nonnegative representative.

use crate::error::{KdError, Result};
use crate::special::{bessel_ratios, log_bessel2_zero, QuadratureConfig};
use crate::stationary::ModelParams;
use crate::tol;

/// Outcome of a landscape minimization.
#[derive(Debug, Clone)]
pub struct LandscapeResult {
    /// Global minimum over the square; values in `(−EPS_NEG, EPS_NEG)` are
    /// snapped to exactly 0.
    pub min_value: f64,
    /// Distinct polished minimizers (canonical `r₁ ≥ 0`), best first.
    pub argmins: Vec<(f64, f64)>,
    pub grid_resolution: usize,
    /// False when every Newton polish failed and the raw grid minimum was
    /// used instead.
    pub polished: bool,
}

/// `F_{K,m}(r₁, r₂)`.
pub fn f_value(params: ModelParams, r1: f64, r2: f64) -> Result<f64> {
    let ModelParams { k, m } = params;
    let cfg = QuadratureConfig::default();
    let log_i0 = log_bessel2_zero(2.0 * k * r1, 2.0 * k * m * r2, &cfg)?;
    Ok(k * r1 * r1 + k * m * r2 * r2 - log_i0)
}

/// Gradient `∂_{r_j} F = 2K m^{1[j=2]} (r_j − ∫cos jθ dq_{r₁,r₂})`.
pub fn f_gradient(params: ModelParams, r1: f64, r2: f64) -> Result<(f64, f64)> {
    let ModelParams { k, m } = params;
    let cfg = QuadratureConfig::default();
    let ms = bessel_ratios(2, 2.0 * k * r1, 2.0 * k * m * r2, &cfg)?;
    Ok((2.0 * k * (r1 - ms[1]), 2.0 * k * m * (r2 - ms[2])))
}

/// Hessian of `F` in terms of variances under `q_{r₁,r₂}`:
///
/// ```text
/// ∂²_{r₁} F = 2K (1 − 2K Var[cos θ])
/// ∂_{r₁}∂_{r₂} F = −4K²m Cov[cos θ, cos 2θ]
/// ∂²_{r₂} F = 2Km (1 − 2Km Var[cos 2θ])
/// ```
pub fn f_hessian(params: ModelParams, r1: f64, r2: f64) -> Result<[[f64; 2]; 2]> {
    let ModelParams { k, m } = params;
    let cfg = QuadratureConfig::default();
    let ms = bessel_ratios(4, 2.0 * k * r1, 2.0 * k * m * r2, &cfg)?;
    let d11 = (1.0 + ms[2]) / 2.0;
    let d12 = (ms[1] + ms[3]) / 2.0;
    let d22 = (1.0 + ms[4]) / 2.0;
    let v11 = d11 - ms[1] * ms[1];
    let v12 = d12 - ms[1] * ms[2];
    let v22 = d22 - ms[2] * ms[2];
    let h12 = -4.0 * k * k * m * v12;
    Ok([
        [2.0 * k * (1.0 - 2.0 * k * v11), h12],
        [h12, 2.0 * k * m * (1.0 - 2.0 * k * m * v22)],
    ])
}

/// Eigendecomposition of a symmetric 2×2 matrix: `(λ₁, λ₂, v₁, v₂)` with
/// orthonormal eigenvectors.
fn sym_eig2(h: [[f64; 2]; 2]) -> (f64, f64, [f64; 2], [f64; 2]) {
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    let v1 = if h[0][1].abs() > 1e-300 {
        let n = (h[0][1] * h[0][1] + (l1 - h[0][0]) * (l1 - h[0][0])).sqrt();
        [h[0][1] / n, (l1 - h[0][0]) / n]
    } else if h[0][0] >= h[1][1] {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    (l1, l2, v1, [-v1[1], v1[0]])
}

/// Modified-Newton descent from one start: eigenvalues of the Hessian are
/// replaced by their floored absolute values, which descends through saddles
/// and survives the degenerate `r₂` direction at `m = 0`.
fn polish(params: ModelParams, start: (f64, f64)) -> Result<Option<(f64, f64)>> {
    let (mut r1, mut r2) = start;
    let mut f = f_value(params, r1, r2)?;
    for _ in 0..200 {
        let (g1, g2) = f_gradient(params, r1, r2)?;
        if g1.abs().max(g2.abs()) <= 1e-10 {
            return Ok(Some((r1, r2)));
        }
        let h = f_hessian(params, r1, r2)?;
        let (l1, l2, v1, v2) = sym_eig2(h);
        let floor = 1e-8 * l1.abs().max(l2.abs()).max(1e-4);
        let (d1, d2) = (l1.abs().max(floor), l2.abs().max(floor));
        let gv1 = g1 * v1[0] + g2 * v1[1];
        let gv2 = g1 * v2[0] + g2 * v2[1];
        let s1 = -(gv1 / d1 * v1[0] + gv2 / d2 * v2[0]);
        let s2 = -(gv1 / d1 * v1[1] + gv2 / d2 * v2[1]);
        // Backtracking line search, clipped to the square.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let c1 = (r1 + step * s1).clamp(-1.0, 1.0);
            let c2 = (r2 + step * s2).clamp(-1.0, 1.0);
            let fc = f_value(params, c1, c2)?;
            if fc <= f {
                r1 = c1;
                r2 = c2;
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent at all: already at a numerical minimum.
            let (g1, g2) = f_gradient(params, r1, r2)?;
            return Ok(if g1.abs().max(g2.abs()) <= 1e-8 {
                Some((r1, r2))
            } else {
                None
            });
        }
    }
    let (g1, g2) = f_gradient(params, r1, r2)?;
    Ok(if g1.abs().max(g2.abs()) <= 1e-8 {
        Some((r1, r2))
    } else {
        None
    })
}

/// Multi-start global minimization of `F_{K,m}` over `[−1,1]²`.
///
/// Seeds a `grid_n × grid_n` grid restricted to `r₁ ≥ 0` (by the `r₁ ↦ −r₁`
/// symmetry) with boundary points excluded, Newton-polishes the best
/// candidates, and returns the minimum over starts.
pub fn global_min(params: ModelParams, grid_n: usize) -> Result<LandscapeResult> {
    if grid_n < 32 {
        return Err(KdError::DomainError(format!("grid_n = {grid_n} < 32")));
    }
    // Grid values, tracking the few best cells as polish seeds.
    let mut cells: Vec<(f64, f64, f64)> = Vec::with_capacity(grid_n * grid_n);
    for i in 0..grid_n {
        // r₁ ∈ [0, 1): the right boundary carries no minimizer.
        let r1 = i as f64 / grid_n as f64;
        for j in 0..grid_n {
            // r₂ strictly inside (−1, 1).
            let r2 = -1.0 + 2.0 * (j as f64 + 0.5) / grid_n as f64;
            cells.push((f_value(params, r1, r2)?, r1, r2));
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let grid_best = cells[0];

    // Polish the best cells plus the origin (always a critical point).
    let mut candidates: Vec<(f64, f64)> = cells.iter().take(6).map(|&(_, a, b)| (a, b)).collect();
    candidates.push((0.0, 0.0));

    let mut minima: Vec<(f64, f64, f64)> = Vec::new();
    let mut polished_any = false;
    for start in candidates {
        if let Some((p1, p2)) = polish(params, start)? {
            polished_any = true;
            let v = f_value(params, p1, p2)?;
            let c1 = p1.abs(); // canonical representative
            if !minima
                .iter()
                .any(|&(_, a, b)| (a - c1).abs() < 1e-6 && (b - p2).abs() < 1e-6)
            {
                minima.push((v, c1, p2));
            }
        }
    }

    let (mut min_value, argmins) = if polished_any {
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        let best = minima[0].0;
        let argmins: Vec<(f64, f64)> = minima
            .iter()
            .filter(|&&(v, _, _)| v <= best + tol::EPS_NEG)
            .map(|&(_, a, b)| (a, b))
            .collect();
        (best, argmins)
    } else {
        (grid_best.0, vec![(grid_best.1.abs(), grid_best.2)])
    };

    if min_value.abs() < tol::EPS_NEG {
        min_value = 0.0;
    }
    Ok(LandscapeResult {
        min_value,
        argmins,
        grid_resolution: grid_n,
        polished: polished_any,
    })
}

/// Rescaled free energy `G_m(r₁, r₂) = F_{1/m, m}(r₁, r₂)`.
pub fn g_value(m: f64, r1: f64, r2: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(KdError::DomainError(format!("m = {m} must be positive")));
    }
    f_value(ModelParams { k: 1.0 / m, m }, r1, r2)
}

/// `s(m) = min G_m` over the square.
pub fn s_of_m(m: f64, grid_n: usize) -> Result<f64> {
    if !(m > 0.0) {
        return Err(KdError::DomainError(format!("m = {m} must be positive")));
    }
    Ok(global_min(ModelParams { k: 1.0 / m, m }, grid_n)?.min_value)
}
