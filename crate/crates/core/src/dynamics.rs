//! Time-dependent validation: the McKean-Vlasov PDE and the particle system.
//!
//! The PDE integrator treats the diffusion `½∂²_θ` exactly in Fourier space
//! and the transport term `−K∂_θ(q ∂_θ(W∗q))` pseudo-spectrally with an
//! ETD-RK4 scheme (exponential integrating factor, Cox-Matthews weights).
//! Products are evaluated on a collocation grid at least four times the mode
//! truncation, so quadratic nonlinearities of resolved fields are alias-free.
//! Mass is conserved exactly (the zero mode is untouched) and the free
//! energy decreases along trajectories, which the tests monitor.
//!
//! The particle side integrates `dθ_i = (K/n)Σ_j W′(θ_i−θ_j) dt + dB_i` by
//! Euler-Maruyama on the torus. The drift is O(n·modes) per step through the
//! per-mode empirical sums
//! `W′(θ_i−θ_j) = Σ_k k c_k (cos kθ_i sin kθ_j − sin kθ_i cos kθ_j)`,
//! and the noise comes from a counter-based generator (ChaCha8) keyed by
//! `(seed, step, chunk)` so runs are bitwise reproducible at any thread
//! count.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{KdError, Result};
use crate::fourier::{product_grid_size, FourierField, TWO_PI};
use crate::spectral::OperatorDiscretization;
use crate::stationary::ModelParams;
use crate::tol;

/// Cosine-series interaction `W(θ) = Σ_n c_n cos nθ` with finite support;
/// `coefficients[0]` is `c_1`. The Kuramoto-Daido case is `[1, m]`.
#[derive(Debug, Clone)]
pub struct Interaction {
    pub coefficients: Vec<f64>,
}

impl Interaction {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if !coefficients.iter().any(|&c| c > 0.0) {
            return Err(KdError::DomainError(
                "interaction needs at least one positive coefficient".into(),
            ));
        }
        Ok(Self { coefficients })
    }

    pub fn kuramoto_daido(m: f64) -> Self {
        Self {
            coefficients: vec![1.0, m],
        }
    }

    /// `c_n` for `n ≥ 1` (zero beyond the stored support).
    pub fn c(&self, n: usize) -> f64 {
        if n >= 1 {
            self.coefficients.get(n - 1).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }

    pub fn max_mode(&self) -> usize {
        self.coefficients.len()
    }
}

/// Spectral state of the PDE density at one time.
#[derive(Debug, Clone)]
pub struct PdeState {
    pub field: FourierField,
    pub t: f64,
    pub params: ModelParams,
    pub interaction: Interaction,
}

impl PdeState {
    /// Uniform initial state with `n` kept modes.
    pub fn uniform(params: ModelParams, interaction: Interaction, n: usize) -> Self {
        let mut field = FourierField::zeros(n);
        field.set_coeff(0, Complex64::new(1.0 / TWO_PI, 0.0));
        Self {
            field,
            t: 0.0,
            params,
            interaction,
        }
    }

    /// Uniform plus `eps·cos θ`.
    pub fn perturbed_uniform(
        params: ModelParams,
        interaction: Interaction,
        n: usize,
        eps: f64,
    ) -> Self {
        let mut s = Self::uniform(params, interaction, n);
        s.field.set_coeff(1, Complex64::new(eps / 2.0, 0.0));
        s.field.set_coeff(-1, Complex64::new(eps / 2.0, 0.0));
        s
    }

    /// State from grid samples of a density.
    pub fn from_density_grid(
        params: ModelParams,
        interaction: Interaction,
        values: &[f64],
        n: usize,
    ) -> Result<Self> {
        Ok(Self {
            field: FourierField::from_grid(values, n)?,
            t: 0.0,
            params,
            interaction,
        })
    }

    /// Cosine and sine moments `(r_k, s_k)` of the density.
    pub fn moment(&self, k: i64) -> (f64, f64) {
        (self.field.cos_moment(k), self.field.sin_moment(k))
    }
}

/// Transport term `N(q) = −K ∂_θ(q ∂_θ(W∗q))` in coefficient space.
fn transport(
    modes: &[Complex64],
    n: usize,
    grid: usize,
    k: f64,
    interaction: &Interaction,
) -> Result<Vec<Complex64>> {
    // v = ∂(W∗q): modes (ik)·π c_|k| q̂_k, supported on the interaction modes.
    let mut v = FourierField::zeros(interaction.max_mode());
    let mut qf = FourierField::zeros(n);
    qf.modes.copy_from_slice(modes);
    for mode in 1..=interaction.max_mode() as i64 {
        let c = interaction.c(mode as usize);
        if c != 0.0 {
            let s = Complex64::new(0.0, mode as f64) * std::f64::consts::PI * c;
            v.set_coeff(mode, s * qf.coeff(mode));
            v.set_coeff(-mode, s.conj() * qf.coeff(-mode));
        }
    }
    let qg = qf.to_grid(grid);
    let vg = v.to_grid(grid);
    let flux: Vec<f64> = qg.iter().zip(&vg).map(|(a, b)| a * b).collect();
    let flux_f = FourierField::from_grid(&flux, n)?;
    let mut out = vec![Complex64::ZERO; 2 * n + 1];
    for mode in -(n as i64)..=n as i64 {
        out[(mode + n as i64) as usize] =
            Complex64::new(0.0, -k * mode as f64) * flux_f.coeff(mode);
    }
    Ok(out)
}

/// φ-functions for ETD-RK4, stable near 0 by Taylor switch-over.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        (z.exp() - 1.0) / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

fn phi3(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        1.0 / 6.0 + z / 24.0 + z * z / 120.0 + z * z * z / 720.0
    } else {
        (z.exp() - 1.0 - z - z * z / 2.0) / (z * z * z)
    }
}

/// Integrate the PDE to `t_end`, recording every `record_every` steps
/// (the initial state and the final state are always recorded).
pub fn evolve_pde(
    initial: &PdeState,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Vec<PdeState>> {
    if !(dt > 0.0) || record_every == 0 {
        return Err(KdError::DomainError(
            "need dt > 0 and record_every ≥ 1".into(),
        ));
    }
    let n = initial.field.n;
    if n < 32 {
        return Err(KdError::DomainError(format!("mode truncation {n} < 32")));
    }
    let k = initial.params.k;
    let grid = product_grid_size(n, 0.0);
    let steps = (t_end / dt).round() as usize;

    // Diffusion multipliers and Cox-Matthews ETD-RK4 weights per mode.
    let dim = 2 * n + 1;
    let mut e_full = vec![0.0; dim];
    let mut e_half = vec![0.0; dim];
    let mut w_half = vec![0.0; dim];
    let mut w_n = vec![0.0; dim];
    let mut w_ab = vec![0.0; dim];
    let mut w_c = vec![0.0; dim];
    for idx in 0..dim {
        let mode = idx as i64 - n as i64;
        let z = -0.5 * (mode * mode) as f64 * dt;
        e_full[idx] = z.exp();
        e_half[idx] = (0.5 * z).exp();
        w_half[idx] = 0.5 * dt * phi1(0.5 * z);
        w_n[idx] = dt * (phi1(z) - 3.0 * phi2(z) + 4.0 * phi3(z));
        w_ab[idx] = dt * (2.0 * phi2(z) - 4.0 * phi3(z));
        w_c[idx] = dt * (4.0 * phi3(z) - phi2(z));
    }

    let mut state = initial.field.modes.clone();
    let mut out = vec![PdeState {
        field: initial.field.clone(),
        ..initial.clone()
    }];
    let check_health = |modes: &[Complex64], t: f64| -> Result<()> {
        if modes.iter().any(|c| !c.is_finite() || c.norm() > 1e6) {
            return Err(KdError::BlowupDetected(format!(
                "mode magnitude exploded at t = {t}"
            )));
        }
        Ok(())
    };

    for step in 0..steps {
        let t = initial.t + step as f64 * dt;
        let nn = transport(&state, n, grid, k, &initial.interaction)?;
        let mut a = vec![Complex64::ZERO; dim];
        for i in 0..dim {
            a[i] = e_half[i] * state[i] + w_half[i] * nn[i];
        }
        let na = transport(&a, n, grid, k, &initial.interaction)?;
        let mut b = vec![Complex64::ZERO; dim];
        for i in 0..dim {
            b[i] = e_half[i] * state[i] + w_half[i] * na[i];
        }
        let nb = transport(&b, n, grid, k, &initial.interaction)?;
        let mut c = vec![Complex64::ZERO; dim];
        for i in 0..dim {
            c[i] = e_half[i] * a[i] + w_half[i] * (2.0 * nb[i] - nn[i]);
        }
        let nc = transport(&c, n, grid, k, &initial.interaction)?;
        for i in 0..dim {
            state[i] =
                e_full[i] * state[i] + w_n[i] * nn[i] + w_ab[i] * (na[i] + nb[i]) + w_c[i] * nc[i];
        }
        check_health(&state, t + dt)?;

        if (step + 1) % record_every == 0 || step + 1 == steps {
            let mut field = FourierField::zeros(n);
            field.modes.copy_from_slice(&state);
            field.symmetrize();
            // Negative density beyond spectral ringing is a blow-up.
            let min = field
                .to_grid(grid)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if min < -tol::DENSITY_NEG_TOL {
                return Err(KdError::BlowupDetected(format!(
                    "density reached {min} at t = {}",
                    t + dt
                )));
            }
            out.push(PdeState {
                field,
                t: initial.t + (step + 1) as f64 * dt,
                params: initial.params,
                interaction: initial.interaction.clone(),
            });
        }
    }
    Ok(out)
}

/// Mean-field free energy of a PDE state, in the normalization that matches
/// the reduced landscape on stationary states:
///
/// ```text
/// F(q) = ∫ q log(2π q) dθ − K Σ_n c_n (r_n² + s_n²).
/// ```
///
/// Density values in `(−DENSITY_NEG_TOL, 0)` on the grid are clamped to zero
/// in the entropy integrand; anything more negative is a domain error.
pub fn free_energy_functional(s: &PdeState) -> Result<f64> {
    let grid = product_grid_size(s.field.n, 0.0);
    let values = s.field.to_grid(grid);
    let mut entropy = 0.0;
    for &q in &values {
        if q < -tol::DENSITY_NEG_TOL {
            return Err(KdError::DomainError(format!(
                "density value {q} on the grid"
            )));
        }
        if q > 0.0 {
            entropy += q * (TWO_PI * q).ln();
        }
    }
    entropy *= TWO_PI / grid as f64;
    let mut interaction = 0.0;
    for mode in 1..=s.interaction.max_mode() as i64 {
        let (r, si) = s.moment(mode);
        interaction += s.interaction.c(mode as usize) * (r * r + si * si);
    }
    Ok(entropy - s.params.k * interaction)
}

/// Linearized evolution `u(t) = e^{tL} u₀` through the eigendecomposition of
/// the discretized generator.
pub fn evolve_linearized(
    u0: &FourierField,
    disc: &OperatorDiscretization,
    d: &crate::stationary::Density,
    t: f64,
) -> Result<FourierField> {
    if u0.coeff(0).norm() > 1e-13 {
        return Err(KdError::DomainError(
            "linearized evolution needs zero-mean data".into(),
        ));
    }
    let spec = crate::spectral::spectrum_lq(disc, d)?;
    let n = disc.n;
    let mut x = nalgebra::DVector::zeros(2 * n);
    for k in 1..=n {
        x[k - 1] = 2.0 * u0.coeff(k as i64).re;
        x[n + k - 1] = -2.0 * u0.coeff(k as i64).im;
    }
    // G-orthonormal eigenvectors: coefficients are G-inner products.
    let gx = &disc.g * &x;
    let coeffs = spec.eigenvectors.transpose() * gx;
    let mut evolved = nalgebra::DVector::zeros(2 * n);
    for (i, &lam) in spec.eigenvalues.iter().enumerate() {
        let w = (lam * t).exp() * coeffs[i];
        evolved += w * spec.eigenvectors.column(i);
    }
    let mut out = FourierField::zeros(n);
    for k in 1..=n {
        let re = evolved[k - 1] / 2.0;
        let im = -evolved[n + k - 1] / 2.0;
        out.set_coeff(k as i64, Complex64::new(re, im));
        out.set_coeff(-(k as i64), Complex64::new(re, -im));
    }
    Ok(out)
}

/// Particle positions on the torus at one time.
#[derive(Debug, Clone)]
pub struct ParticleState {
    pub positions: Vec<f64>,
    pub t: f64,
    pub rng_seed: u64,
    pub params: ModelParams,
    pub interaction: Interaction,
}

/// One recorded sample of the empirical order parameters
/// `(Σcos kθ_i, Σsin kθ_i)/n` for `k = 1, 2`.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalMoments {
    pub t: f64,
    pub re1: f64,
    pub im1: f64,
    pub re2: f64,
    pub im2: f64,
}

const SDE_CHUNK: usize = 4096;

/// Euler-Maruyama integration of the particle system, recording empirical
/// first and second moments every `record_every` steps. The initial state's
/// `rng_seed` keys all noise.
pub fn simulate_particles(
    initial: &ParticleState,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Vec<EmpiricalMoments>> {
    let n = initial.positions.len();
    if n < 100 {
        return Err(KdError::DomainError(format!("n = {n} < 100 particles")));
    }
    if !(dt > 0.0 && dt <= 1e-2) {
        return Err(KdError::DomainError(format!("dt = {dt} outside (0, 1e-2]")));
    }
    let k = initial.params.k;
    let interaction = &initial.interaction;
    let n_modes = interaction.max_mode();
    let steps = (t_end / dt).round() as usize;
    let sqrt_dt = dt.sqrt();
    let n_chunks = n.div_ceil(SDE_CHUNK);

    let mut positions = initial.positions.clone();
    let mut out = Vec::with_capacity(steps / record_every + 2);
    let record = |positions: &[f64], t: f64, out: &mut Vec<EmpiricalMoments>| {
        let mut acc = [0.0; 4];
        for &p in positions {
            acc[0] += p.cos();
            acc[1] += p.sin();
            acc[2] += (2.0 * p).cos();
            acc[3] += (2.0 * p).sin();
        }
        let nf = positions.len() as f64;
        out.push(EmpiricalMoments {
            t,
            re1: acc[0] / nf,
            im1: acc[1] / nf,
            re2: acc[2] / nf,
            im2: acc[3] / nf,
        });
    };
    record(&positions, initial.t, &mut out);

    for step in 0..steps {
        // Per-mode empirical sums (the mean-field drift needs only these).
        let mut sums = vec![(0.0f64, 0.0f64); n_modes];
        for &p in &positions {
            for (mode, s) in sums.iter_mut().enumerate() {
                let a = (mode + 1) as f64 * p;
                s.0 += a.cos();
                s.1 += a.sin();
            }
        }
        let nf = n as f64;
        let mean_sums: Vec<(f64, f64)> = sums.iter().map(|&(c, s)| (c / nf, s / nf)).collect();

        // Deterministic parallel update: fixed chunks, one ChaCha stream per
        // (step, chunk), sequential order within each chunk.
        let seed = initial.rng_seed;
        let updated: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let lo = chunk * SDE_CHUNK;
                let hi = ((chunk + 1) * SDE_CHUNK).min(n);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((step * n_chunks + chunk) as u64);
                let mut piece = Vec::with_capacity(hi - lo);
                for &p in &positions[lo..hi] {
                    let mut drift = 0.0;
                    for (mode, &(mc, ms)) in mean_sums.iter().enumerate() {
                        let kk = (mode + 1) as f64;
                        let c = interaction.c(mode + 1);
                        if c != 0.0 {
                            let a = kk * p;
                            drift += kk * c * (a.cos() * ms - a.sin() * mc);
                        }
                    }
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    let next = p + dt * k * drift + sqrt_dt * noise;
                    piece.push(next.rem_euclid(TWO_PI));
                }
                piece
            })
            .collect();
        positions = updated.concat();

        if (step + 1) % record_every == 0 || step + 1 == steps {
            record(&positions, initial.t + (step + 1) as f64 * dt, &mut out);
        }
    }
    Ok(out)
}

/// Deterministic stratified sample of `n` positions from a stationary
/// density: the quantiles `(i + ½)/n` of the CDF, inverted on a fine grid.
pub fn sample_from_density(d: &crate::stationary::Density, n: usize) -> Vec<f64> {
    let grid = 1 << 14;
    let h = TWO_PI / grid as f64;
    let mut cdf = Vec::with_capacity(grid + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    let mut prev = d.eval(0.0);
    for j in 1..=grid {
        let q = d.eval(h * j as f64);
        acc += 0.5 * (prev + q) * h;
        cdf.push(acc);
        prev = q;
    }
    let total = cdf[grid];
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let target = (i as f64 + 0.5) / n as f64 * total;
        while j < grid && cdf[j + 1] < target {
            j += 1;
        }
        let frac = (target - cdf[j]) / (cdf[j + 1] - cdf[j]).max(1e-300);
        out.push(h * (j as f64 + frac));
    }
    out
}

/// Empirical measure spectrum `â_k = (1/2πn) Σ_i e^{−ikθ_i}` for `|k| ≤ n_modes`.
pub fn empirical_measure(positions: &[f64], n_modes: usize) -> Result<FourierField> {
    if positions.is_empty() {
        return Err(KdError::DomainError("empty particle set".into()));
    }
    let mut field = FourierField::zeros(n_modes);
    let scale = 1.0 / (TWO_PI * positions.len() as f64);
    for k in 0..=n_modes as i64 {
        let mut acc = Complex64::ZERO;
        for &p in positions {
            acc += Complex64::from_polar(1.0, -(k as f64) * p);
        }
        field.set_coeff(k, acc * scale);
        if k > 0 {
            field.set_coeff(-k, (acc * scale).conj());
        }
    }
    Ok(field)
}

/// Rotate a field by the phase of its first mode so that `â₁` becomes real
/// and nonnegative. Convergence to the stationary family holds only modulo
/// translation, so comparisons align phases first.
pub fn align_phase(f: &FourierField) -> FourierField {
    let psi = f.coeff(1).arg();
    let mut out = FourierField::zeros(f.n);
    // f(θ + φ) has coefficients â_k e^{ikφ}; φ = −arg â₁ lands mode 1 on the
    // positive real axis.
    for k in -(f.n as i64)..=f.n as i64 {
        out.set_coeff(
            k,
            f.coeff(k) * Complex64::from_polar(1.0, -(k as f64) * psi),
        );
    }
    out
}

/// L² distance `‖f − g‖_{L²}` by Parseval.
pub fn l2_distance(f: &FourierField, g: &FourierField) -> f64 {
    let n = f.n.max(g.n) as i64;
    let mut acc = 0.0;
    for k in -n..=n {
        acc += (f.coeff(k) - g.coeff(k)).norm_sqr();
    }
    (TWO_PI * acc).sqrt()
}
