//! Truncated Fourier representation of real periodic functions.
//!
//! A [`FourierField`] stores the complex coefficients `â_k` for `k = −N..N`
//! of a real function `f(θ) = Σ_k â_k e^{ikθ}`, with the reality constraint
//! `â_{−k} = conj(â_k)`. Grid transforms go through a uniform collocation
//! grid sized generously above the truncation, so products of resolved
//! fields never alias back into the kept modes.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{KdError, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Truncated spectrum of a real periodic function.
#[derive(Debug, Clone)]
pub struct FourierField {
    /// `modes[N + k]` is `â_k`, `k = −N..=N`.
    pub modes: Vec<Complex64>,
    pub n: usize,
}

impl FourierField {
    pub fn zeros(n: usize) -> Self {
        Self {
            modes: vec![Complex64::ZERO; 2 * n + 1],
            n,
        }
    }

    /// Coefficient `â_k` (zero beyond the truncation).
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k + self.n as i64;
        if idx < 0 || idx as usize >= self.modes.len() {
            Complex64::ZERO
        } else {
            self.modes[idx as usize]
        }
    }

    pub fn set_coeff(&mut self, k: i64, v: Complex64) {
        let idx = (k + self.n as i64) as usize;
        self.modes[idx] = v;
    }

    /// Enforce `â_{−k} = conj(â_k)` by Hermitian averaging.
    pub fn symmetrize(&mut self) {
        let n = self.n as i64;
        for k in 1..=n {
            let a = self.coeff(k);
            let b = self.coeff(-k);
            let avg = 0.5 * (a + b.conj());
            self.set_coeff(k, avg);
            self.set_coeff(-k, avg.conj());
        }
        let a0 = self.coeff(0);
        self.set_coeff(0, Complex64::new(a0.re, 0.0));
    }

    /// Build from samples on the uniform grid `θ_j = 2πj/M`:
    /// `â_k = (1/M) Σ_j f(θ_j) e^{−ikθ_j}`, truncated to `|k| ≤ n`.
    pub fn from_grid(values: &[f64], n: usize) -> Result<Self> {
        let m = values.len();
        if m < 2 * n + 1 {
            return Err(KdError::DomainError(format!(
                "grid of {m} points cannot resolve {n} modes"
            )));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let mut field = Self::zeros(n);
        for k in 0..=n as i64 {
            // rustfft uses e^{−2πi jk/M}, so bin k is â_k · M directly.
            let v = buf[k as usize] / m as f64;
            field.set_coeff(k, v);
            if k > 0 {
                field.set_coeff(-k, v.conj());
            }
        }
        Ok(field)
    }

    /// Evaluate on the uniform grid of `m` points.
    pub fn to_grid(&self, m: usize) -> Vec<f64> {
        assert!(m > 2 * self.n, "grid too coarse for the truncation");
        let mut buf = vec![Complex64::ZERO; m];
        for k in 0..=self.n as i64 {
            buf[k as usize] = self.coeff(k) * m as f64;
            if k > 0 {
                buf[m - k as usize] = self.coeff(-k) * m as f64;
            }
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        buf.iter().map(|c| c.re / m as f64).collect()
    }

    /// Pointwise evaluation `Σ_k â_k e^{ikθ}` (O(N), for spot checks).
    pub fn eval(&self, theta: f64) -> f64 {
        let mut acc = self.coeff(0).re;
        for k in 1..=self.n as i64 {
            let e = Complex64::from_polar(1.0, k as f64 * theta);
            acc += 2.0 * (self.coeff(k) * e).re;
        }
        acc
    }

    /// `∫ f dθ = 2π â₀`.
    pub fn integral(&self) -> f64 {
        TWO_PI * self.coeff(0).re
    }

    /// Spectral derivative `f ↦ f'`.
    pub fn derivative(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for k in -(self.n as i64)..=self.n as i64 {
            out.set_coeff(k, Complex64::new(0.0, k as f64) * self.coeff(k));
        }
        out
    }

    /// The Fourier multiplier `1/(ik)` on `k ≠ 0` (zero mode dropped).
    pub fn antiderivative(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for k in -(self.n as i64)..=self.n as i64 {
            if k != 0 {
                out.set_coeff(k, self.coeff(k) / Complex64::new(0.0, k as f64));
            }
        }
        out
    }

    /// `∫ f g dθ` by Parseval (both fields real).
    pub fn l2_pairing(&self, other: &Self) -> f64 {
        let n = self.n.max(other.n) as i64;
        let mut acc = 0.0;
        for k in -n..=n {
            acc += (self.coeff(k) * other.coeff(k).conj()).re;
        }
        TWO_PI * acc
    }

    /// Cosine moment `∫ f cos(kθ) dθ` and sine moment `∫ f sin(kθ) dθ`.
    pub fn cos_moment(&self, k: i64) -> f64 {
        if k == 0 {
            self.integral()
        } else {
            TWO_PI * self.coeff(k).re
        }
    }

    pub fn sin_moment(&self, k: i64) -> f64 {
        -TWO_PI * self.coeff(k).im
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.modes {
            *c *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.n.max(other.n);
        let mut out = Self::zeros(n);
        for k in -(n as i64)..=n as i64 {
            out.set_coeff(k, self.coeff(k) + other.coeff(k));
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `(Σ_k |â_k|²)^{1/2}` — the L² norm up to the constant `√(2π)`.
    pub fn coeff_norm(&self) -> f64 {
        self.modes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Collocation grid size used for products of fields with `n` kept modes:
/// at least `4n` (quadratic products of resolved fields then cannot alias
/// back into the kept modes), with a floor for steep densities whose own
/// spectra must also be resolved.
pub fn product_grid_size(n: usize, steepness: f64) -> usize {
    let need = (4 * n).max((8.0 * steepness) as usize + 64).max(2 * n + 2);
    need.next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_recovers_coefficients() {
        // f = 1/2π + 0.3 cos θ − 0.1 sin 3θ
        let m = 64;
        let values: Vec<f64> = (0..m)
            .map(|j| {
                let t = TWO_PI * j as f64 / m as f64;
                1.0 / TWO_PI + 0.3 * t.cos() - 0.1 * (3.0 * t).sin()
            })
            .collect();
        let f = FourierField::from_grid(&values, 8).unwrap();
        assert!((f.coeff(0).re - 1.0 / TWO_PI).abs() < 1e-14);
        assert!((f.coeff(1).re - 0.15).abs() < 1e-14);
        assert!((f.coeff(3).im - 0.05).abs() < 1e-14);
        let back = f.to_grid(m);
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_and_antiderivative_are_inverse_off_mean() {
        let mut f = FourierField::zeros(4);
        f.set_coeff(1, Complex64::new(0.2, -0.1));
        f.set_coeff(-1, Complex64::new(0.2, 0.1));
        f.set_coeff(3, Complex64::new(0.0, 0.4));
        f.set_coeff(-3, Complex64::new(0.0, -0.4));
        let g = f.derivative().antiderivative();
        for k in -4i64..=4 {
            assert!((g.coeff(k) - f.coeff(k)).norm() < 1e-15);
        }
    }

    #[test]
    fn moments_and_pairing() {
        let mut f = FourierField::zeros(4);
        f.set_coeff(0, Complex64::new(2.0, 0.0));
        f.set_coeff(2, Complex64::new(0.25, -0.5));
        f.set_coeff(-2, Complex64::new(0.25, 0.5));
        assert!((f.integral() - 2.0 * TWO_PI).abs() < 1e-14);
        assert!((f.cos_moment(2) - 0.25 * TWO_PI).abs() < 1e-14);
        assert!((f.sin_moment(2) - TWO_PI * 0.5).abs() < 1e-14);
        // ∫ f² dθ via Parseval against a direct grid sum.
        let grid = f.to_grid(64);
        let direct: f64 = grid.iter().map(|v| v * v).sum::<f64>() * TWO_PI / 64.0;
        assert!((f.l2_pairing(&f) - direct).abs() < 1e-12);
    }
}
