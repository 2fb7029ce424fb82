//! The critical curve `K_c(m)` and transition classification.
//!
//! `K_c(m)` is computed operationally from its definition: it is the smallest
//! `K` at which the uniform state stops being the unique global minimizer,
//! i.e. the sign change of the predicate `min F_{K,m} < 0`. Analytic bounds
//! bracket the bisection:
//!
//! ```text
//! 1/(2(1+m)) ≤ K_c(m) ≤ min{1, 1/m, 1 − (36/142897)(m² − 1/4)²/m⁸ for m > 1/2}
//! ```
//!
//! with `K_c = 1` on `m ≤ 1/2`, `K_c = 1/m` on `m ≥ 2`, and a crossover
//! weight `m* ∈ (1, 2)` separating `K_c < 1/m` from `K_c = 1/m` in between.
//! Continuity of the transition is classified by the L¹ jump of the global
//! minimizer just above `K_c`, extrapolated over a decade ladder of probes.

use crate::error::{KdError, Result};
use crate::free_energy::{global_min, s_of_m};
use crate::special::QuadratureConfig;
use crate::stationary::{Density, ModelParams, OrderParameters};
use crate::tol;

/// One point of the phase diagram.
#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub m: f64,
    pub kc: f64,
    pub continuous: bool,
    /// Extrapolated L¹ distance between the global-minimizer density just
    /// above `K_c` and the uniform density.
    pub minimizer_jump: f64,
    /// Analytic sandwich `(lower, upper)` for `K_c(m)`.
    pub bounds: (f64, f64),
}

/// Analytic bounds for `K_c(m)`:
/// lower `1/(2(1+m))`; upper `min(1, 1/m)`, sharpened for `m > 1/2` by
/// `1 − (36/142897)(m² − 1/4)²/m⁸`.
pub fn kc_bounds(m: f64) -> (f64, f64) {
    let lower = 1.0 / (2.0 * (1.0 + m));
    let mut upper = if m > 0.0 { (1.0 / m).min(1.0) } else { 1.0 };
    if m > 0.5 {
        let corr = 1.0 - (36.0 / 142897.0) * (m * m - 0.25) * (m * m - 0.25) / m.powi(8);
        upper = upper.min(corr);
    }
    (lower, upper)
}

/// Whether `min F_{K,m}` is strictly negative (below `−EPS_NEG`).
fn supercritical(k: f64, m: f64, grid_n: usize) -> Result<bool> {
    let params = ModelParams::new(k, m)?;
    Ok(global_min(params, grid_n)?.min_value < -tol::EPS_NEG)
}

/// `K_c(m)` by bisection of the supercriticality predicate, bracketed by
/// [`kc_bounds`]. For `m > 8` the exact value `1/m` is returned analytically.
pub fn critical_strength(m: f64, tol_k: f64, grid_n: usize) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(KdError::DomainError(format!("m = {m} must be nonnegative")));
    }
    if m > 8.0 {
        return Ok(1.0 / m);
    }
    let (lower, upper) = kc_bounds(m);
    // The predicate is false on [lower, K_c] and true past K_c; K_c can sit
    // exactly at the analytic upper bound, so open the bracket slightly.
    let mut lo = lower;
    let mut hi = upper + (2.0 * tol_k).max(1e-3);
    if supercritical(lo, m, grid_n)? {
        return Err(KdError::BracketError(format!(
            "min F already negative at the analytic lower bound K = {lo}, m = {m}"
        )));
    }
    if !supercritical(hi, m, grid_n)? {
        return Err(KdError::BracketError(format!(
            "min F not negative above the analytic upper bound K = {hi}, m = {m}"
        )));
    }
    while hi - lo > tol_k {
        let mid = 0.5 * (lo + hi);
        if supercritical(mid, m, grid_n)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// L¹ distance of the minimizing density at `(k, m)` to uniform.
fn minimizer_l1_jump(k: f64, m: f64, grid_n: usize) -> Result<f64> {
    let params = ModelParams::new(k, m)?;
    let result = global_min(params, grid_n)?;
    let (r1, r2) = result.argmins[0];
    if result.min_value >= 0.0 {
        return Ok(0.0); // uniform still minimizes
    }
    let d = Density::new(
        params,
        OrderParameters { r1, r2 },
        &QuadratureConfig::default(),
    )?;
    let n = 2048;
    let uniform = 1.0 / (2.0 * std::f64::consts::PI);
    let mut acc = 0.0;
    for j in 0..n {
        let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        acc += (d.eval(t) - uniform).abs();
    }
    Ok(acc * 2.0 * std::f64::consts::PI / n as f64)
}

/// Classify the transition at `m`: compute `K_c`, then probe the minimizer
/// jump at `K_c + δ` for `δ ∈ {p, p/10, p/100}` (`p = probe_delta`) and
/// extrapolate the geometric tail to `δ → 0`. Continuous iff the
/// extrapolated jump is below [`tol::JUMP_THRESHOLD`].
pub fn classify_continuity(
    m: f64,
    tol_k: f64,
    probe_delta: f64,
    grid_n: usize,
) -> Result<PhasePoint> {
    if !(probe_delta > 0.0) {
        return Err(KdError::DomainError(format!(
            "probe_delta = {probe_delta} must be positive"
        )));
    }
    let kc = critical_strength(m, tol_k, grid_n)?;
    // Probe strictly above the true K_c: guard by the bisection tolerance.
    let base = kc + tol_k;
    let j1 = minimizer_l1_jump(base + probe_delta, m, grid_n)?;
    let j2 = minimizer_l1_jump(base + probe_delta / 10.0, m, grid_n)?;
    let j3 = minimizer_l1_jump(base + probe_delta / 100.0, m, grid_n)?;
    let minimizer_jump = if j2 <= 0.0 {
        0.0
    } else {
        let ratio = j3 / j2;
        if ratio >= 0.7 || j2 >= 0.9 * j1 {
            // Stagnant ladder: the jump does not decay with δ.
            j3
        } else {
            // Geometric-tail extrapolation, exact for j(δ) = C δ^p.
            (j3 - (j2 - j3) * ratio / (1.0 - ratio)).max(0.0)
        }
    };
    Ok(PhasePoint {
        m,
        kc,
        continuous: minimizer_jump <= tol::JUMP_THRESHOLD,
        minimizer_jump,
        bounds: kc_bounds(m),
    })
}

/// Bracket the crossover weight `m*` by bisecting `s(m) < −EPS_NEG` on
/// `[1, 2]`. The returned interval contains the sign change and has width
/// ≤ `tol_m`.
pub fn bracket_m_star(tol_m: f64, grid_n: usize) -> Result<(f64, f64)> {
    if tol_m < 1e-4 {
        return Err(KdError::DomainError(format!(
            "tol_m = {tol_m} below the supported resolution 1e-4"
        )));
    }
    let neg = |m: f64| -> Result<bool> { Ok(s_of_m(m, grid_n)? < -tol::EPS_NEG) };
    let (mut lo, mut hi) = (1.0, 2.0);
    if !neg(lo)? {
        return Err(KdError::BracketError("s(1) should be negative".into()));
    }
    if neg(hi)? {
        return Err(KdError::BracketError("s(2) should vanish".into()));
    }
    while hi - lo > tol_m {
        let mid = 0.5 * (lo + hi);
        if neg(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Linear stability threshold of the uniform state, `K_# = 1/max_n c_n`.
pub fn uniform_stability_threshold(c: &[f64]) -> Result<f64> {
    let max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(KdError::DomainError(
            "no positive interaction coefficient: the uniform state never destabilizes".into(),
        ));
    }
    Ok(1.0 / max)
}

/// Eigenvalues `λ_n = (n²/2)(K c_n − 1)` of the linearization at the uniform
/// state, for `n = 1..=n_max` (`c_n = 0` beyond the coefficient list).
pub fn uniform_spectrum(k: f64, c: &[f64], n_max: usize) -> Vec<f64> {
    (1..=n_max)
        .map(|n| {
            let cn = c.get(n - 1).copied().unwrap_or(0.0);
            (n * n) as f64 / 2.0 * (k * cn - 1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_formulas() {
        let (lo, hi) = kc_bounds(1.0);
        assert!((lo - 0.25).abs() < 1e-15);
        assert!((hi - (1.0 - (36.0 / 142897.0) * 0.5625)).abs() < 1e-15);
        assert!((hi - 0.999858).abs() < 1e-6);

        let (_, hi_half) = kc_bounds(0.5);
        assert_eq!(hi_half, 1.0);

        let (lo2, hi2) = kc_bounds(2.0);
        assert!((lo2 - 1.0 / 6.0).abs() < 1e-15);
        assert!((hi2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kuramoto_regime_critical_strength() {
        let kc = critical_strength(0.25, 1e-4, 64).unwrap();
        assert!((kc - 1.0).abs() < 1e-3, "kc = {kc}");
    }

    #[test]
    fn large_m_critical_strength_is_inverse_m() {
        let kc = critical_strength(3.0, 1e-4, 64).unwrap();
        assert!((kc - 1.0 / 3.0).abs() < 1e-3, "kc = {kc}");
        assert_eq!(critical_strength(10.0, 1e-4, 64).unwrap(), 0.1);
    }

    #[test]
    fn intermediate_m_strictly_below_thresholds() {
        let kc = critical_strength(0.8, 1e-4, 64).unwrap();
        assert!((1.0 / 3.6..1.0).contains(&kc), "kc = {kc}");
        assert!(kc < 1.0 - 1e-4);
    }

    #[test]
    fn sandwich_holds_along_the_curve() {
        for &m in &[0.1, 0.5, 0.8, 1.5, 2.5] {
            let kc = critical_strength(m, 1e-4, 64).unwrap();
            let (lo, hi) = kc_bounds(m);
            assert!(
                lo <= kc + 1e-3 && kc <= hi + 1e-3,
                "m = {m}: {lo} ≤ {kc} ≤ {hi}"
            );
            assert!(kc <= 1.0 + 1e-3);
            if m >= 1.0 {
                assert!(kc <= 1.0 / m + 1e-3);
            }
        }
    }

    #[test]
    fn continuous_transition_small_m() {
        let p = classify_continuity(0.3, 1e-4, 1e-2, 64).unwrap();
        assert!(p.continuous, "jump = {}", p.minimizer_jump);
        assert!((p.kc - 1.0).abs() < 1e-3);
    }

    #[test]
    fn discontinuous_transition_above_half() {
        let p = classify_continuity(0.8, 1e-4, 1e-2, 64).unwrap();
        assert!(!p.continuous, "jump = {}", p.minimizer_jump);
        assert!(p.minimizer_jump > 0.1);
    }

    #[test]
    fn discontinuous_below_m_star() {
        let p = classify_continuity(1.1, 1e-4, 1e-2, 64).unwrap();
        assert!(!p.continuous);
        assert!(p.kc < 1.0 / 1.1 - 1e-4, "kc = {}", p.kc);
    }

    #[test]
    fn continuous_transition_above_m_star() {
        // m = 1.5 lies above the crossover (m* < 1.282), so K_c = 1/m and
        // the transition is continuous again.
        let p = classify_continuity(1.5, 1e-4, 1e-2, 64).unwrap();
        assert!(p.continuous, "jump = {}", p.minimizer_jump);
        assert!((p.kc - 1.0 / 1.5).abs() < 1e-3, "kc = {}", p.kc);
    }

    #[test]
    fn continuity_criterion_consistency() {
        // Whenever K_c < K_# the classifier must return discontinuous.
        for &m in &[0.6, 0.8, 1.0] {
            let p = classify_continuity(m, 1e-4, 1e-2, 64).unwrap();
            let k_sharp = uniform_stability_threshold(&[1.0, m]).unwrap();
            if p.kc < k_sharp - 1e-3 {
                assert!(!p.continuous, "m = {m}");
            }
        }
    }

    #[test]
    fn threshold_and_spectrum_of_uniform_state() {
        assert_eq!(uniform_stability_threshold(&[1.0, 0.5]).unwrap(), 1.0);
        assert_eq!(uniform_stability_threshold(&[1.0, 4.0]).unwrap(), 0.25);
        assert!(uniform_stability_threshold(&[-1.0, 0.0]).is_err());

        let s = uniform_spectrum(1.0, &[1.0], 3);
        assert_eq!(s, vec![0.0, -2.0, -4.5]);
        let s2 = uniform_spectrum(2.0, &[1.0, 0.25], 2);
        assert!((s2[0] - 0.5).abs() < 1e-15 && (s2[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    #[ignore = "minutes-scale; exercised by the acceptance suite"]
    fn m_star_bracket_matches_paper_numerics() {
        let (lo, hi) = bracket_m_star(1e-3, 64).unwrap();
        assert!(lo > 1.2 && hi < 1.3, "bracket ({lo}, {hi})");
        assert!(hi - lo <= 1e-3);
    }
}
