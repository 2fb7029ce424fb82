//! Linear stability of the nonuniform stationary state.
//!
//! The linearized McKean-Vlasov operator at a stationary density `q`,
//!
//! ```text
//! L_q u = ½ u″ − K ∂_θ( q ∂_θ(W∗u) + u ∂_θ(W∗q) ),
//! ```
//!
//! is self-adjoint on `H⁻¹_{1/q}` with kernel spanned by `q'`. Two
//! independent routes to its spectrum live here:
//!
//! 1. **Closed forms.** `L²_{1/q}` splits into five orthogonal eigenspaces of
//!    the convolution operator `v ↦ q (J∗v)`, `J = KW`, with eigenvalues
//!    `{0, 1/2, μ, λ₊, λ₋}` expressible in the covariance entries `D_{jl}`.
//!    From these, the 2×2 C-matrix certificate bounds the Dirichlet form
//!    below and yields `gap(L_q) ≥ C₁/C²` with `C` the Poincaré embedding
//!    constant of `L²_{1/q}` into `H⁻¹_{1/q}`.
//! 2. **Direct discretization.** `L_q` is assembled pseudo-spectrally on
//!    truncated zero-mean Fourier modes together with the `H⁻¹_{1/q}` Gram
//!    matrix, and the generalized symmetric eigenproblem is solved exactly.
//!
//! The certificate quantities are proven positive for `K > 1` and
//! `m ≤ m₀ = 1.590e-4`; beyond that they are still computed and reported
//! with a `beyond_theory` flag.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{KdError, Result};
use crate::fourier::{product_grid_size, FourierField, TWO_PI};
use crate::stationary::{CovarianceMatrix, Density, ModelParams, OrderParameters};
use crate::tol;

/// Closed-form spectral quantities and the gap certificate at one state.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub k: f64,
    pub m: f64,
    /// `Δ = D₁₁ − √((D₁₁ − m D₂₂)² + 4m D₁₂²)`.
    pub delta: f64,
    pub mu: f64,
    /// Equals 1/2 identically on solved states.
    pub mu_tilde: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// `η₁⁺ = η₁⁻ = D₁₂`.
    pub eta1: f64,
    pub eta2_plus: f64,
    pub eta2_minus: f64,
    pub alpha_half: f64,
    pub alpha_mu: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub c_pp: f64,
    pub c_pm: f64,
    pub c_mm: f64,
    /// Least eigenvalue of the C-matrix.
    pub gamma: f64,
    pub c0: f64,
    /// `C₁ = min(C₀, 1/2)`.
    pub c1: f64,
    pub poincare_c: f64,
    /// `C₁ / C²` in the `∂⁻¹ = 1/(ik)` normalization.
    pub gap_lower: f64,
    /// True when `m > m₀`, where the certificate is unproven.
    pub beyond_theory: bool,
}

/// Closed-form decomposition quantities from a solved state.
///
/// Fills everything that does not require an operator discretization; the
/// C-matrix block is completed by [`c_matrix_and_gap`].
pub fn decomposition_report(
    params: ModelParams,
    op: OrderParameters,
    cov: &CovarianceMatrix,
) -> Result<SpectralReport> {
    let ModelParams { k, m } = params;
    if !(k > 1.0) {
        return Err(KdError::DomainError(format!(
            "decomposition requires the supercritical regime, got K = {k}"
        )));
    }
    let (d11, d12, d22) = (cov.d11, cov.d12, cov.d22);
    let (r1, r2) = (op.r1, op.r2);

    let disc_cos_sq = (d11 - m * d22) * (d11 - m * d22) + 4.0 * m * d12 * d12;
    let s1 = 1.0 - d11;
    let s2 = 1.0 - d22;
    let c = r1 - d12;
    let disc_sin_sq = (s1 - m * s2) * (s1 - m * s2) + 4.0 * m * c * c;
    if disc_cos_sq < 0.0 || disc_sin_sq < 0.0 {
        return Err(KdError::DomainError(
            "negative eigenvalue discriminant: corrupted covariance".into(),
        ));
    }
    let disc_cos = disc_cos_sq.sqrt();
    let disc_sin = disc_sin_sq.sqrt();

    let delta = d11 - disc_cos;
    let mu = 0.5 * k * (s1 + m * s2 - disc_sin);
    let mu_tilde = 0.5 * k * (s1 + m * s2 + disc_sin);
    let lambda_plus = 0.5 * k * (d11 + m * d22 + disc_cos);
    let lambda_minus = 0.5 * k * (d11 + m * d22 - disc_cos);
    let eta2_plus = 0.5 * (-(d11 - m * d22) + disc_cos);
    let eta2_minus = 0.5 * (-(d11 - m * d22) - disc_cos);

    // α's are the L²_{1/q} norms of the eigenvectors: quadratic forms of the
    // covariance matrix in the eigenvector coordinates.
    let alpha_half = r1 * r1 * s1 + 4.0 * m * r1 * r2 * c + 4.0 * m * m * r2 * r2 * s2;
    let alpha_mu = 4.0 * r2 * r2 * s1 - 4.0 * r1 * r2 * c + r1 * r1 * s2;
    let quad_cos = |e1: f64, e2: f64| e1 * e1 * d11 + 2.0 * e1 * e2 * d12 + e2 * e2 * d22;
    let alpha_plus = quad_cos(d12, eta2_plus);
    let alpha_minus = quad_cos(d12, eta2_minus);

    Ok(SpectralReport {
        k,
        m,
        delta,
        mu,
        mu_tilde,
        lambda_plus,
        lambda_minus,
        eta1: d12,
        eta2_plus,
        eta2_minus,
        alpha_half,
        alpha_mu,
        alpha_plus,
        alpha_minus,
        c_pp: f64::NAN,
        c_pm: f64::NAN,
        c_mm: f64::NAN,
        gamma: f64::NAN,
        c0: f64::NAN,
        c1: f64::NAN,
        poincare_c: f64::NAN,
        gap_lower: f64::NAN,
        beyond_theory: m > tol::M0,
    })
}

/// Fill the C-matrix certificate block of a report and, given the Poincaré
/// constant, the gap lower bound `C₁/C²`.
///
/// Errors with `CertificateFailure` if the least C-eigenvalue is nonpositive
/// while `m ≤ m₀`: the theory excludes that, so it means a bug upstream.
pub fn c_matrix_and_gap(
    report: &SpectralReport,
    cov: &CovarianceMatrix,
    op: OrderParameters,
    poincare_c: f64,
) -> Result<SpectralReport> {
    let mut rep = report.clone();
    let centered = cov.centered_det();
    if centered <= 0.0 {
        return Err(KdError::DomainError(
            "centered covariance determinant nonpositive".into(),
        ));
    }
    let x = cov.det();
    let a = op.r1 * rep.eta1 + op.r2 * rep.eta2_plus;
    let b = op.r1 * rep.eta1 + op.r2 * rep.eta2_minus;
    let kill = x / (2.0 * centered);
    rep.c_pp = kill * a * a + (0.5 - rep.lambda_plus) * rep.alpha_plus;
    rep.c_pm = kill * a * b;
    rep.c_mm = kill * b * b + (0.5 - rep.lambda_minus) * rep.alpha_minus;

    // Least eigenvalue of the symmetric 2×2 C-matrix, in closed form.
    let tr = rep.c_pp + rep.c_mm;
    let dif = rep.c_pp - rep.c_mm;
    rep.gamma = 0.5 * (tr - (dif * dif + 4.0 * rep.c_pm * rep.c_pm).sqrt());
    if rep.gamma <= 0.0 && rep.m <= tol::M0 {
        return Err(KdError::CertificateFailure(format!(
            "γ = {} ≤ 0 at (K, m) = ({}, {}) with m ≤ m₀",
            rep.gamma, rep.k, rep.m
        )));
    }

    let denom =
        2.0 * x / centered * a.max(b).powi(2) + (1.0 / rep.alpha_plus).min(1.0 / rep.alpha_minus);
    rep.c0 = (0.5 - rep.mu).min(rep.gamma / denom);
    rep.c1 = rep.c0.min(0.5);
    rep.poincare_c = poincare_c;
    rep.gap_lower = rep.c1 / (poincare_c * poincare_c);
    Ok(rep)
}

/// Left-hand side of the main determinant certificate, verbatim:
///
/// ```text
/// (D₁₁D₂₂ − D₁₂²)[ a²(½−λ₋)α₋ + b²(½−λ₊)α₊ ]
///   + 2·centered·(½−λ₊)(½−λ₋) α₊α₋
/// ```
///
/// with `a = r₁η₁ + r₂η₂⁺`, `b = r₁η₁ + r₂η₂⁻`. Equals
/// `2·centered·det C`, and is positive for `K > 1`, `m ∈ [0, m₀]`.
pub fn main_det(report: &SpectralReport, cov: &CovarianceMatrix, op: OrderParameters) -> f64 {
    let x = cov.det();
    let centered = cov.centered_det();
    let a = op.r1 * report.eta1 + op.r2 * report.eta2_plus;
    let b = op.r1 * report.eta1 + op.r2 * report.eta2_minus;
    x * (a * a * (0.5 - report.lambda_minus) * report.alpha_minus
        + b * b * (0.5 - report.lambda_plus) * report.alpha_plus)
        + 2.0
            * centered
            * (0.5 - report.lambda_plus)
            * (0.5 - report.lambda_minus)
            * report.alpha_plus
            * report.alpha_minus
}

/// Minimal `L²_{1/q}` norm of `1 + v₀` over zero-mean `v₀ ∈ V₀`:
///
/// ```text
/// (2π)² (D₁₁D₂₂ − D₁₂²) / [(D₁₁−r₁²)(D₂₂−r₂²) − (D₁₂−r₁r₂)²].
/// ```
pub fn min_norm_v0(cov: &CovarianceMatrix) -> Result<f64> {
    let centered = cov.centered_det();
    if centered <= 0.0 {
        return Err(KdError::DomainError(
            "centered covariance determinant nonpositive".into(),
        ));
    }
    Ok(TWO_PI * TWO_PI * cov.det() / centered)
}

/// One line of the omnibus inequality ledger. `margin ≥ 0` iff the
/// inequality holds; `(lhs, rhs)` are the two sides of the binding part,
/// oriented as in the source inequality.
#[derive(Debug, Clone)]
pub struct OmnibusItem {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl OmnibusItem {
    // Ties at roundoff scale count as holding: several items degenerate to
    // exact equalities at m = 0.
    fn tol(lhs: f64, rhs: f64) -> f64 {
        1e-12 * lhs.abs().max(rhs.abs()).max(1.0)
    }

    fn geq(name: &'static str, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            name,
            lhs,
            rhs,
            margin,
            holds: margin >= -Self::tol(lhs, rhs),
        }
    }

    fn leq(name: &'static str, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            name,
            lhs,
            rhs,
            margin,
            holds: margin >= -Self::tol(lhs, rhs),
        }
    }
}

/// Evaluate the ten omnibus estimates behind the main determinant
/// certificate, with explicit constants
/// `C₁..C₉ = 81/2, 3, 6, 28, 32, 8, 9/2, 5/2, 3915/4`.
///
/// Valid for `K > 1`, `m ∈ [0, 1/4]`, except `c6` which the theory only
/// asserts for `m < 1/32` (it is still evaluated literally outside that
/// range). Failures are data, not errors.
pub fn omnibus_check(
    params: ModelParams,
    op: OrderParameters,
    cov: &CovarianceMatrix,
    report: &SpectralReport,
) -> Vec<OmnibusItem> {
    let ModelParams { k, m } = params;
    let (r1, r2) = (op.r1, op.r2);
    let (d11, d12) = (cov.d11, cov.d12);
    let x = cov.det();
    let final_term = (k - 0.5) * r1 * r1 - (k - 1.0) * d11;

    let mut items = Vec::with_capacity(10);
    items.push(OmnibusItem::geq(
        "first",
        r1 * report.eta1 + r2 * report.eta2_plus,
        r1 * d12,
    ));
    items.push(OmnibusItem::geq(
        "c1",
        0.5 - report.lambda_minus,
        (1.0 - 40.5 * m) / 2.0,
    ));
    // c2 is two-sided; report the binding side.
    let c2_low = OmnibusItem::geq("c2", report.alpha_minus, (1.0 - 3.0 * m) * d11 * x);
    let c2_high = OmnibusItem::leq("c2", report.alpha_minus, d11 * x);
    items.push(if c2_low.margin <= c2_high.margin {
        c2_low
    } else {
        c2_high
    });
    items.push(OmnibusItem::leq(
        "c3",
        d11 + report.eta2_minus,
        6.0 * m * d11 * x,
    ));
    items.push(OmnibusItem::geq(
        "c4",
        0.5 - report.lambda_plus,
        -(1.0 + 28.0 * m) * (k - 1.0),
    ));
    items.push(OmnibusItem::leq(
        "c5",
        report.alpha_plus,
        (1.0 + 32.0 * m) * d12 * d12 * d11,
    ));
    items.push(OmnibusItem::geq("final", final_term, 0.0));
    items.push(OmnibusItem::leq(
        "c6",
        r1 * r1,
        8.0 * (1.0 + 4.0 * m + 8.0 * m * m) / (1.0 - 32.0 * m) * final_term,
    ));
    // c7 and c8 form one ledger item; report the binding part.
    let c7 = OmnibusItem::leq("c7_c8", (k - 1.0) * (r1 * d12 - r2 * d11), 4.5);
    let c8 = OmnibusItem::leq("c7_c8", (k - 1.0) * x, 2.5);
    items.push(if c7.margin <= c8.margin { c7 } else { c8 });
    items.push(OmnibusItem::geq(
        "c9",
        (k - 1.0) * (r2 * r2 * (d11 - report.eta2_minus) - 2.0 * r1 * r2 * d12),
        -(3915.0 / 4.0) * final_term,
    ));
    items
}

// ---------------------------------------------------------------------------
// Orthogonal decomposition of L²_{1/q}
// ---------------------------------------------------------------------------

/// The five components of a field under the orthogonal decomposition
/// `L²_{1/q} = V₀ ⊕ V_{1/2} ⊕ V_μ ⊕ V_{λ₊} ⊕ V_{λ₋}`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub v0: FourierField,
    pub v_half: FourierField,
    pub v_mu: FourierField,
    pub v_plus: FourierField,
    pub v_minus: FourierField,
}

fn solve2(m: [[f64; 2]; 2], rhs: (f64, f64)) -> Result<(f64, f64)> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-300 {
        return Err(KdError::DomainError("singular 2x2 system".into()));
    }
    Ok((
        (rhs.0 * m[1][1] - rhs.1 * m[0][1]) / det,
        (rhs.1 * m[0][0] - rhs.0 * m[1][0]) / det,
    ))
}

/// Field `q(θ)(a w₁(θ) + b w₂(θ))` sampled on the grid, as a spectrum with
/// `grid/2 − 1` modes.
fn q_weighted_field(
    d: &Density,
    a: f64,
    b: f64,
    w: impl Fn(f64) -> (f64, f64),
    grid: usize,
) -> Result<FourierField> {
    let values: Vec<f64> = (0..grid)
        .map(|j| {
            let t = TWO_PI * j as f64 / grid as f64;
            let (w1, w2) = w(t);
            d.eval(t) * (a * w1 + b * w2)
        })
        .collect();
    FourierField::from_grid(&values, grid / 2 - 1)
}

/// Decompose `u` into its five orthogonal components.
///
/// The sine and cosine blocks are two-dimensional: the projection solves the
/// 2×2 Gram systems of `{q sin θ, q sin 2θ}` and `{q cos θ, q cos 2θ}` in
/// `L²_{1/q}` (whose Gram entries are covariance quantities), then splits the
/// block coordinates along the eigenvector directions. `V₀` is the remainder.
pub fn project(
    u: &FourierField,
    params: ModelParams,
    op: OrderParameters,
    cov: &CovarianceMatrix,
    d: &Density,
) -> Result<Projection> {
    let ModelParams { k, m } = params;
    let (r1, r2) = (op.r1, op.r2);
    let report = decomposition_report(params, op, cov)?;
    let grid = product_grid_size(u.n.max(16), 2.0 * k * (r1 + 2.0 * m * r2));

    // Sine block: Gram [[1−D11, r1−D12], [r1−D12, 1−D22]].
    let gs = [[1.0 - cov.d11, r1 - cov.d12], [r1 - cov.d12, 1.0 - cov.d22]];
    let rhs_s = (u.sin_moment(1), u.sin_moment(2));
    let (s1, s2) = solve2(gs, rhs_s)?;
    // Split along the eigenvector directions (r1, 2mr2) and (−2r2, r1).
    let (c_half, c_mu) = solve2([[r1, -2.0 * r2], [2.0 * m * r2, r1]], (s1, s2))?;
    let v_half = q_weighted_field(
        d,
        c_half * r1,
        c_half * 2.0 * m * r2,
        |t| (t.sin(), (2.0 * t).sin()),
        grid,
    )?;
    let v_mu = q_weighted_field(
        d,
        -c_mu * 2.0 * r2,
        c_mu * r1,
        |t| (t.sin(), (2.0 * t).sin()),
        grid,
    )?;

    // Cosine block: Gram [[D11, D12], [D12, D22]]; directions (η₁, η₂^±).
    let gc = [[cov.d11, cov.d12], [cov.d12, cov.d22]];
    let rhs_c = (u.cos_moment(1), u.cos_moment(2));
    let (c1c, c2c) = solve2(gc, rhs_c)?;
    let (c_plus, c_minus) = solve2(
        [
            [report.eta1, report.eta1],
            [report.eta2_plus, report.eta2_minus],
        ],
        (c1c, c2c),
    )?;
    let v_plus = q_weighted_field(
        d,
        c_plus * report.eta1,
        c_plus * report.eta2_plus,
        |t| (t.cos(), (2.0 * t).cos()),
        grid,
    )?;
    let v_minus = q_weighted_field(
        d,
        c_minus * report.eta1,
        c_minus * report.eta2_minus,
        |t| (t.cos(), (2.0 * t).cos()),
        grid,
    )?;

    let v0 = u.sub(&v_half).sub(&v_mu).sub(&v_plus).sub(&v_minus);
    Ok(Projection {
        v0,
        v_half,
        v_mu,
        v_plus,
        v_minus,
    })
}

/// Apply the convolution operator `v ↦ q (J∗v)`, `J = K(cos θ + m cos 2θ)`.
pub fn apply_qjstar(v: &FourierField, d: &Density) -> Result<FourierField> {
    let ModelParams { k, m } = d.params;
    // (J∗v)(θ) has only modes ±1, ±2: (J∗v)^_k = Kπ c_{|k|} v̂_k.
    let mut jv = FourierField::zeros(2);
    jv.set_coeff(1, k * std::f64::consts::PI * v.coeff(1));
    jv.set_coeff(-1, k * std::f64::consts::PI * v.coeff(-1));
    jv.set_coeff(2, k * m * std::f64::consts::PI * v.coeff(2));
    jv.set_coeff(-2, k * m * std::f64::consts::PI * v.coeff(-2));
    let grid = product_grid_size(v.n.max(16), 2.0 * k * (d.op.r1 + 2.0 * m * d.op.r2));
    let jv_grid = jv.to_grid(grid);
    let values: Vec<f64> = (0..grid)
        .map(|j| d.eval(TWO_PI * j as f64 / grid as f64) * jv_grid[j])
        .collect();
    FourierField::from_grid(&values, grid / 2 - 1)
}

/// Weighted `L²_{1/q}` inner product `∫ f g / q dθ` by collocation.
pub fn l2_weighted_inner(f: &FourierField, g: &FourierField, d: &Density) -> f64 {
    let grid = product_grid_size(
        f.n.max(g.n).max(16),
        2.0 * d.params.k * (d.op.r1 + 2.0 * d.params.m * d.op.r2),
    );
    let fg = f.to_grid(grid);
    let gg = g.to_grid(grid);
    let mut acc = 0.0;
    for j in 0..grid {
        let t = TWO_PI * j as f64 / grid as f64;
        acc += fg[j] * gg[j] / d.eval(t);
    }
    acc * TWO_PI / grid as f64
}

/// Dirichlet form `𝐃(u) = ½⟨u,u⟩_{L²_{1/q}} − ⟨u, q J∗u⟩_{L²_{1/q}}`
/// for zero-mean `u`; the second term reduces to
/// `4π²K(|û₁|² + m|û₂|²)` by Parseval.
pub fn dirichlet_form(u: &FourierField, d: &Density, params: ModelParams) -> f64 {
    let ModelParams { k, m } = params;
    let norm_sq = l2_weighted_inner(u, u, d);
    let pair = 4.0
        * std::f64::consts::PI
        * std::f64::consts::PI
        * k
        * (u.coeff(1).norm_sqr() + m * u.coeff(2).norm_sqr());
    0.5 * norm_sq - pair
}

// ---------------------------------------------------------------------------
// Direct discretization of L_q
// ---------------------------------------------------------------------------

/// Real zero-mean Fourier basis: `cos kθ` at column `k−1`, `sin kθ` at
/// column `N + k − 1`, `k = 1..=N`.
#[derive(Debug, Clone)]
pub struct OperatorDiscretization {
    /// Matrix action of `L_q` on the basis coefficients.
    pub l: DMatrix<f64>,
    /// Gram matrix of the `H⁻¹_{1/q}` inner product (symmetric positive
    /// definite).
    pub g: DMatrix<f64>,
    pub n: usize,
    /// Gram matrix of the `L²_{1/q}` inner product on the same basis.
    pub a: DMatrix<f64>,
    /// Collocation grid size used for the assembly.
    pub grid: usize,
}

/// Coefficients of a grid function in the zero-mean basis (mean handled by
/// the caller; it is dropped).
fn grid_to_basis(values: &[f64], n: usize) -> Result<DVector<f64>> {
    let f = FourierField::from_grid(values, n)?;
    let mut out = DVector::zeros(2 * n);
    for k in 1..=n {
        out[k - 1] = 2.0 * f.coeff(k as i64).re;
        out[n + k - 1] = -2.0 * f.coeff(k as i64).im;
    }
    Ok(out)
}

/// Assemble the Galerkin matrix of `L_q` in the `H⁻¹_{1/q}` metric, together
/// with the `H⁻¹_{1/q}` and `L²_{1/q}` Gram matrices, on `2N` zero-mean real
/// modes.
///
/// `L_q b` is a full θ-derivative, so its antiderivative is explicit:
/// `∂⁻¹(L_q b) = ½b′ − K(q ∂(W∗b) + b ∂(W∗q))` up to its mean. The form
/// matrix `Λ_ij = ⟨b_i, L_q b_j⟩_{H⁻¹}` is therefore evaluated exactly on the
/// collocation grid with no mode truncation of `L_q b_j`, which keeps
/// `G·L = Λ` symmetric to quadrature accuracy; `L = G⁻¹Λ` is the matrix
/// action.
pub fn discretize_lq(
    params: ModelParams,
    op: OrderParameters,
    d: &Density,
    n: usize,
) -> Result<OperatorDiscretization> {
    if n < 32 {
        return Err(KdError::DomainError(format!("mode truncation {n} < 32")));
    }
    let ModelParams { k, m } = params;
    let (r1, r2) = (op.r1, op.r2);
    let grid = product_grid_size(n, 2.0 * k * (r1 + 2.0 * m * r2));
    let w = TWO_PI / grid as f64;

    let theta: Vec<f64> = (0..grid).map(|j| TWO_PI * j as f64 / grid as f64).collect();
    let q: Vec<f64> = theta.iter().map(|&t| d.eval(t)).collect();
    if q.iter().any(|&v| v <= 0.0) {
        return Err(KdError::DomainError(
            "density nonpositive on the grid".into(),
        ));
    }
    // ∂_θ(W∗q) = −(r₁ sin θ + 2m r₂ sin 2θ) for the solved density.
    let dwq: Vec<f64> = theta
        .iter()
        .map(|&t| -(r1 * t.sin() + 2.0 * m * r2 * (2.0 * t).sin()))
        .collect();

    let dim = 2 * n;
    // F[j][col] = ∂⁻¹(L_q b_col)(θ_j) before mean removal.
    let mut fmat = DMatrix::zeros(grid, dim);
    for col in 0..dim {
        let (mode, is_sin) = if col < n {
            (col + 1, false)
        } else {
            (col - n + 1, true)
        };
        let kk = mode as f64;
        // ∂_θ(W∗b): convolution leaves only the matching mode, scaled by πc_k.
        let ck = match mode {
            1 => 1.0,
            2 => m,
            _ => 0.0,
        };
        let mut mean = 0.0;
        for j in 0..grid {
            let t = theta[j];
            let b = if is_sin {
                (kk * t).sin()
            } else {
                (kk * t).cos()
            };
            let db = if is_sin {
                kk * (kk * t).cos()
            } else {
                -kk * (kk * t).sin()
            };
            let dwb = if ck == 0.0 {
                0.0
            } else if is_sin {
                std::f64::consts::PI * ck * kk * (kk * t).cos()
            } else {
                -std::f64::consts::PI * ck * kk * (kk * t).sin()
            };
            let v = 0.5 * db - k * (q[j] * dwb + b * dwq[j]);
            fmat[(j, col)] = v;
            mean += v;
        }
        mean /= grid as f64;
        for j in 0..grid {
            fmat[(j, col)] -= mean;
        }
    }

    // Grams: rows = grid nodes weighted by √(w/q), columns = basis functions
    // (A) or their antiderivatives (G); the form matrix shares the weighting.
    let mut bg = DMatrix::zeros(grid, dim);
    let mut ba = DMatrix::zeros(grid, dim);
    for j in 0..grid {
        let t = theta[j];
        let s = (w / q[j]).sqrt();
        for mode in 1..=n {
            let kk = mode as f64;
            ba[(j, mode - 1)] = (kk * t).cos() * s;
            ba[(j, n + mode - 1)] = (kk * t).sin() * s;
            // ∂⁻¹ cos kθ = sin kθ / k, ∂⁻¹ sin kθ = −cos kθ / k.
            bg[(j, mode - 1)] = (kk * t).sin() / kk * s;
            bg[(j, n + mode - 1)] = -(kk * t).cos() / kk * s;
        }
        for col in 0..dim {
            fmat[(j, col)] *= s;
        }
    }
    let g = bg.transpose() * &bg;
    let a = ba.transpose() * &ba;
    let form = bg.transpose() * &fmat;
    let l = nalgebra::Cholesky::new(g.clone())
        .ok_or_else(|| KdError::EigensolverFailure("H⁻¹ Gram not positive definite".into()))?
        .solve(&form);
    Ok(OperatorDiscretization { l, g, n, a, grid })
}

/// Relative self-adjointness residual `‖GL − (GL)ᵀ‖_F / ‖GL‖_F`.
pub fn self_adjointness_residual(disc: &OperatorDiscretization) -> f64 {
    let gl = &disc.g * &disc.l;
    (&gl - gl.transpose()).norm() / gl.norm()
}

/// Spectrum of the discretized operator.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Eigenvalues sorted descending (top ≈ 0 is the kernel `q'`).
    pub eigenvalues: Vec<f64>,
    /// Coefficient vectors of the eigenvectors (columns match
    /// `eigenvalues`), G-orthonormal.
    pub eigenvectors: DMatrix<f64>,
    /// |G-cosine| between the top eigenvector and `q'`.
    pub kernel_alignment: f64,
    /// `−λ₂`: magnitude of the largest nonzero eigenvalue.
    pub gap: f64,
    pub sym_residual: f64,
}

/// Coefficients of `q' = −q·(2K r₁ sin θ + 4K m r₂ sin 2θ)` in the zero-mean
/// basis.
pub fn qprime_coefficients(d: &Density, n: usize, grid: usize) -> Result<DVector<f64>> {
    let ModelParams { k, m } = d.params;
    let values: Vec<f64> = (0..grid)
        .map(|j| {
            let t = TWO_PI * j as f64 / grid as f64;
            -d.eval(t) * (2.0 * k * d.op.r1 * t.sin() + 4.0 * k * m * d.op.r2 * (2.0 * t).sin())
        })
        .collect();
    grid_to_basis(&values, n)
}

/// Solve the generalized symmetric eigenproblem `(GL) v = λ G v`,
/// equivalently the spectrum of `L_q` restricted to the truncated basis.
pub fn spectrum_lq(disc: &OperatorDiscretization, d: &Density) -> Result<SpectrumResult> {
    let gl = &disc.g * &disc.l;
    let sym_residual = (&gl - gl.transpose()).norm() / gl.norm();
    let s = 0.5 * (&gl + gl.transpose());

    let chol = nalgebra::Cholesky::new(disc.g.clone())
        .ok_or_else(|| KdError::EigensolverFailure("H⁻¹ Gram not positive definite".into()))?;
    let lfac = chol.l();
    let t1 = lfac
        .solve_lower_triangular(&s)
        .ok_or_else(|| KdError::EigensolverFailure("triangular solve failed".into()))?;
    let t2 = lfac
        .solve_lower_triangular(&t1.transpose())
        .ok_or_else(|| KdError::EigensolverFailure("triangular solve failed".into()))?;
    let t = 0.5 * (&t2 + t2.transpose());
    let eig = SymmetricEigen::new(t);

    // Sort descending, mapping vectors back through v = L⁻ᵀ w.
    let dim = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut eigenvalues = Vec::with_capacity(dim);
    let mut eigenvectors = DMatrix::zeros(dim, dim);
    let lt = lfac.transpose();
    for (c, &i) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[i]);
        let w = eig.eigenvectors.column(i).into_owned();
        let v = lt
            .solve_upper_triangular(&w)
            .ok_or_else(|| KdError::EigensolverFailure("back-substitution failed".into()))?;
        eigenvectors.set_column(c, &v);
    }

    let p = qprime_coefficients(d, disc.n, disc.grid)?;
    let gp = &disc.g * &p;
    let top = eigenvectors.column(0);
    let align = (top.dot(&gp)).abs() / (p.dot(&gp).sqrt() * (top.dot(&(&disc.g * top))).sqrt());

    Ok(SpectrumResult {
        gap: -eigenvalues[1],
        kernel_alignment: align,
        eigenvalues,
        eigenvectors,
        sym_residual,
    })
}

/// Optimal constant of `‖·‖_{H⁻¹_{1/q}} ≤ C ‖·‖_{L²_{1/q}}` on the truncated
/// zero-mean basis: the largest generalized singular value of the pencil
/// `(G, A)`.
pub fn poincare_constant(d: &Density, n: usize) -> Result<f64> {
    let disc = discretize_lq(d.params, d.op, d, n)?;
    poincare_from_grams(&disc)
}

/// Poincaré constant from already-assembled Gram matrices.
pub fn poincare_from_grams(disc: &OperatorDiscretization) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(disc.a.clone())
        .ok_or_else(|| KdError::EigensolverFailure("L²_{1/q} Gram not positive definite".into()))?;
    let lfac = chol.l();
    let t1 = lfac
        .solve_lower_triangular(&disc.g)
        .ok_or_else(|| KdError::EigensolverFailure("triangular solve failed".into()))?;
    let t2 = lfac
        .solve_lower_triangular(&t1.transpose())
        .ok_or_else(|| KdError::EigensolverFailure("triangular solve failed".into()))?;
    let t = 0.5 * (&t2 + t2.transpose());
    let eig = SymmetricEigen::new(t);
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(KdError::EigensolverFailure(
            "nonpositive Poincaré pencil".into(),
        ));
    }
    Ok(max.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::QuadratureConfig;
    use crate::stationary::{covariance, solve_self_consistency};
    use num_complex::Complex64;

    fn solved(k: f64, m: f64) -> (ModelParams, OrderParameters, CovarianceMatrix, Density) {
        let params = ModelParams::new(k, m).unwrap();
        let op = solve_self_consistency(params, 1e-13).unwrap();
        let d = Density::new(params, op, &QuadratureConfig::default()).unwrap();
        let cov = covariance(&d, &QuadratureConfig::default()).unwrap();
        (params, op, cov, d)
    }

    fn report_for(k: f64, m: f64) -> (SpectralReport, CovarianceMatrix, OrderParameters, Density) {
        let (params, op, cov, d) = solved(k, m);
        let rep = decomposition_report(params, op, &cov).unwrap();
        (rep, cov, op, d)
    }

    /// Direct weighted-norm quadrature ∫ q (a w₁ + b w₂)² dθ.
    fn alpha_oracle(d: &Density, a: f64, b: f64, sin_block: bool) -> f64 {
        let n = 4096;
        let mut acc = 0.0;
        for j in 0..n {
            let t = TWO_PI * j as f64 / n as f64;
            let (w1, w2) = if sin_block {
                (t.sin(), (2.0 * t).sin())
            } else {
                (t.cos(), (2.0 * t).cos())
            };
            let v = a * w1 + b * w2;
            acc += d.eval(t) * v * v;
        }
        acc * TWO_PI / n as f64
    }

    #[test]
    fn kuramoto_limit_eigenvalues() {
        let (rep, _, _, _) = report_for(2.0, 0.0);
        assert!(
            (rep.lambda_plus - 1.5).abs() < 1e-10,
            "λ₊ = {}",
            rep.lambda_plus
        );
        assert!(rep.lambda_minus.abs() < 1e-10);
        assert!(rep.mu.abs() < 1e-10);
        assert!((rep.mu_tilde - 0.5).abs() < 1e-10);
    }

    #[test]
    fn mu_tilde_is_exactly_half() {
        for &(k, m) in &[(2.0, 1e-4), (1.1, 0.25), (5.0, 0.1), (3.0, 0.05)] {
            let (rep, _, _, _) = report_for(k, m);
            assert!(
                (rep.mu_tilde - 0.5).abs() < 1e-10,
                "μ̃ = {} at ({k}, {m})",
                rep.mu_tilde
            );
        }
    }

    #[test]
    fn eigenvalue_bounds_for_small_m() {
        for &(k, m) in &[(2.0, 0.1), (1.5, 0.25), (5.0, 0.05)] {
            let (rep, _, _, _) = report_for(k, m);
            assert!(rep.lambda_plus > k - 0.5, "({k}, {m})");
            assert!(rep.mu > 0.0 && rep.mu < 0.5, "({k}, {m})");
            assert!(
                rep.lambda_minus > 0.0 && rep.lambda_minus < 81.0 * m / 4.0,
                "({k}, {m})"
            );
        }
    }

    #[test]
    fn delta_estimates() {
        for &(k, m) in &[(1.1, 0.25), (2.0, 0.1), (5.0, 0.05), (2.0, 1e-4)] {
            let (rep, cov, _, _) = report_for(k, m);
            let lo1 = m * cov.d22 - rep.delta;
            assert!(
                lo1 >= -1e-12 && lo1 <= 8.0 * m * cov.d12 * cov.d12 + 1e-12,
                "({k}, {m})"
            );
            let lo2 = m * cov.d22 + rep.delta;
            assert!(
                lo2 >= -1e-12 && lo2 <= 3.0 * m * cov.det() / cov.d11 + 1e-12,
                "({k}, {m})"
            );
        }
    }

    #[test]
    fn alphas_match_weighted_quadrature() {
        let (rep, _, op, d) = report_for(2.0, 0.1);
        let m = d.params.m;
        let a_half = alpha_oracle(&d, op.r1, 2.0 * m * op.r2, true);
        assert!(
            (rep.alpha_half - a_half).abs() < 1e-9,
            "α_½: {} vs {a_half}",
            rep.alpha_half
        );
        let a_mu = alpha_oracle(&d, -2.0 * op.r2, op.r1, true);
        assert!((rep.alpha_mu - a_mu).abs() < 1e-9);
        let a_p = alpha_oracle(&d, rep.eta1, rep.eta2_plus, false);
        assert!(
            (rep.alpha_plus - a_p).abs() < 1e-9,
            "α₊: {} vs {a_p}",
            rep.alpha_plus
        );
        let a_m = alpha_oracle(&d, rep.eta1, rep.eta2_minus, false);
        assert!((rep.alpha_minus - a_m).abs() < 1e-9);
    }

    #[test]
    fn projection_of_qprime_is_pure_v_half() {
        let (params, op, cov, d) = solved(2.0, 0.1);
        let grid = 512;
        let values: Vec<f64> = (0..grid)
            .map(|j| {
                let t = TWO_PI * j as f64 / grid as f64;
                -d.eval(t)
                    * (2.0 * params.k * op.r1 * t.sin()
                        + 4.0 * params.k * params.m * op.r2 * (2.0 * t).sin())
            })
            .collect();
        let u = FourierField::from_grid(&values, 128).unwrap();
        let p = project(&u, params, op, &cov, &d).unwrap();
        let total = u.coeff_norm();
        assert!(p.v_half.sub(&u).coeff_norm() < 1e-9 * total);
        assert!(p.v0.coeff_norm() < 1e-9 * total);
        assert!(p.v_mu.coeff_norm() < 1e-9 * total);
        assert!(p.v_plus.coeff_norm() < 1e-9 * total);
        assert!(p.v_minus.coeff_norm() < 1e-9 * total);
    }

    #[test]
    fn projection_of_high_mode_is_pure_v0() {
        let (params, op, cov, d) = solved(2.0, 0.1);
        let mut u = FourierField::zeros(8);
        u.set_coeff(3, Complex64::new(0.5, 0.0));
        u.set_coeff(-3, Complex64::new(0.5, 0.0));
        let p = project(&u, params, op, &cov, &d).unwrap();
        assert!(p.v0.sub(&u).coeff_norm() < 1e-12);
        assert!(p.v_half.coeff_norm() < 1e-12);
    }

    #[test]
    fn projection_completeness_orthogonality_eigenrelation() {
        let (params, op, cov, d) = solved(2.0, 0.1);
        // A fixed "random" zero-mean field with modes 1..6.
        let mut u = FourierField::zeros(64);
        let vals = [
            (1, 0.4, -0.2),
            (2, -0.3, 0.1),
            (3, 0.2, 0.25),
            (4, 0.1, -0.15),
            (5, -0.05, 0.3),
            (6, 0.02, 0.07),
        ];
        for &(k, re, im) in &vals {
            u.set_coeff(k, Complex64::new(re, im));
            u.set_coeff(-k, Complex64::new(re, -im));
        }
        let p = project(&u, params, op, &cov, &d).unwrap();

        // Components sum to u.
        let sum =
            p.v0.add(&p.v_half)
                .add(&p.v_mu)
                .add(&p.v_plus)
                .add(&p.v_minus);
        assert!(sum.sub(&u).coeff_norm() < 1e-10 * u.coeff_norm());

        // Pairwise L²_{1/q} orthogonality.
        let parts = [&p.v0, &p.v_half, &p.v_mu, &p.v_plus, &p.v_minus];
        for i in 0..parts.len() {
            for j in (i + 1)..parts.len() {
                let ip = l2_weighted_inner(parts[i], parts[j], &d);
                assert!(ip.abs() <= 1e-9, "components {i},{j} not orthogonal: {ip}");
            }
        }

        // q(J∗·) scales each component by its eigenvalue.
        let rep = decomposition_report(params, op, &cov).unwrap();
        let lambdas = [0.0, 0.5, rep.mu, rep.lambda_plus, rep.lambda_minus];
        for (part, lam) in parts.iter().zip(lambdas) {
            let applied = apply_qjstar(part, &d).unwrap();
            let expect = part.scale(lam);
            assert!(
                applied.sub(&expect).coeff_norm() <= 1e-8 * (1.0 + part.coeff_norm()),
                "eigen-relation fails for λ = {lam}"
            );
        }

        // a₀ of the V₀ component matches the zero-mean constraint formula.
        let a = op.r1 * rep.eta1 + op.r2 * rep.eta2_plus;
        let b = op.r1 * rep.eta1 + op.r2 * rep.eta2_minus;
        // Recover c_± from the projections: v_± = c_± q(η₁cos + η₂^±cos2θ).
        let c_plus = p.v_plus.cos_moment(1) / (rep.eta1 * cov.d11 + rep.eta2_plus * cov.d12);
        let c_minus = p.v_minus.cos_moment(1) / (rep.eta1 * cov.d11 + rep.eta2_minus * cov.d12);
        // u has zero mean, so a₀ = −(a c₊ + b c₋)/2π.
        let a0_expected = -(a * c_plus + b * c_minus) / TWO_PI;
        assert!(
            (p.v0.coeff(0).re - a0_expected).abs() < 1e-9,
            "{} vs {a0_expected}",
            p.v0.coeff(0).re
        );
    }

    #[test]
    fn dirichlet_form_trivial_directions() {
        let (params, op, cov, d) = solved(2.0, 1e-4);
        // u = q′ is the kernel direction.
        let grid = 512;
        let values: Vec<f64> = (0..grid)
            .map(|j| {
                let t = TWO_PI * j as f64 / grid as f64;
                -d.eval(t)
                    * (2.0 * params.k * op.r1 * t.sin()
                        + 4.0 * params.k * params.m * op.r2 * (2.0 * t).sin())
            })
            .collect();
        let qp = FourierField::from_grid(&values, 128).unwrap();
        let dq = dirichlet_form(&qp, &d, params);
        assert!(dq.abs() <= 1e-9, "D(q′) = {dq}");

        // u = cos 3θ sees no interaction: D = ½‖u‖².
        let mut u3 = FourierField::zeros(8);
        u3.set_coeff(3, Complex64::new(0.5, 0.0));
        u3.set_coeff(-3, Complex64::new(0.5, 0.0));
        let d3 = dirichlet_form(&u3, &d, params);
        let half_norm = 0.5 * l2_weighted_inner(&u3, &u3, &d);
        assert!((d3 - half_norm).abs() < 1e-12);
        let _ = cov;
    }

    #[test]
    fn dirichlet_form_decomposition_formula() {
        let (params, op, cov, d) = solved(2.0, 0.1);
        let mut u = FourierField::zeros(32);
        for &(k, re, im) in &[
            (1, 0.3, 0.1),
            (2, -0.2, 0.2),
            (3, 0.15, -0.1),
            (5, 0.05, 0.02),
        ] {
            u.set_coeff(k, Complex64::new(re, im));
            u.set_coeff(-k, Complex64::new(re, -im));
        }
        let rep = decomposition_report(params, op, &cov).unwrap();
        let p = project(&u, params, op, &cov, &d).unwrap();
        let norm = |f: &FourierField| l2_weighted_inner(f, f, &d);
        let via_parts = 0.5 * norm(&p.v0)
            + (0.5 - rep.mu) * norm(&p.v_mu)
            + (0.5 - rep.lambda_plus) * norm(&p.v_plus)
            + (0.5 - rep.lambda_minus) * norm(&p.v_minus);
        let direct = dirichlet_form(&u, &d, params);
        assert!(
            (via_parts - direct).abs() <= 1e-8 * (1.0 + direct.abs()),
            "{via_parts} vs {direct}"
        );
    }

    #[test]
    fn min_norm_v0_uniform_and_lower_bound() {
        let uniform = CovarianceMatrix {
            d11: 0.5,
            d12: 0.0,
            d22: 0.5,
            r1: 0.0,
            r2: 0.0,
        };
        let v = min_norm_v0(&uniform).unwrap();
        assert!((v - TWO_PI * TWO_PI).abs() < 1e-12);
        for &(k, m) in &[(1.5, 1e-4), (2.0, 0.1), (3.0, 0.05), (5.0, 0.25)] {
            let (_, _, cov, _) = solved(k, m);
            assert!(min_norm_v0(&cov).unwrap() >= TWO_PI * TWO_PI, "({k}, {m})");
        }
    }

    #[test]
    fn main_det_identity_and_positivity() {
        // main_det = 2 · centered · det C, and both are positive.
        for &(k, m) in &[(3.0, 1e-4), (2.0, 1e-4), (1.05, 0.0), (2.0, 0.0)] {
            let (params, op, cov, _) = solved(k, m);
            let rep0 = decomposition_report(params, op, &cov).unwrap();
            let rep = c_matrix_and_gap(&rep0, &cov, op, 1.0).unwrap();
            let md = main_det(&rep, &cov, op);
            assert!(md > 0.0, "main_det = {md} at ({k}, {m})");
            let det_c = rep.c_pp * rep.c_mm - rep.c_pm * rep.c_pm;
            assert!(det_c > 0.0, "det C = {det_c} at ({k}, {m})");
            let identity = 2.0 * cov.centered_det() * det_c;
            assert!(
                (md - identity).abs() <= 1e-8 * md.abs(),
                "identity violated at ({k}, {m}): {md} vs {identity}"
            );
        }
    }

    #[test]
    fn certificate_positive_across_k() {
        for &k in &[1.1, 2.0, 5.0, 20.0] {
            let (params, op, cov, _) = solved(k, 1e-4);
            let rep0 = decomposition_report(params, op, &cov).unwrap();
            let rep = c_matrix_and_gap(&rep0, &cov, op, 1.0).unwrap();
            assert!(rep.gamma > 0.0, "γ at K = {k}");
            assert!(rep.c1 > 0.0 && rep.c1 <= 0.5, "C₁ at K = {k}");
            assert!(!rep.beyond_theory);
        }
        let (params, op, cov, _) = solved(2.0, 0.1);
        let rep = decomposition_report(params, op, &cov).unwrap();
        assert!(rep.beyond_theory);
    }

    #[test]
    fn omnibus_all_hold_in_theory_range() {
        for &(k, m) in &[
            (2.0, 1e-4),
            (1.01, 1e-4),
            (10.0, 1e-4),
            (100.0, 1e-4),
            (2.0, 0.0),
            (5.0, 0.0),
        ] {
            let (params, op, cov, _) = solved(k, m);
            let rep = decomposition_report(params, op, &cov).unwrap();
            let items = omnibus_check(params, op, &cov, &rep);
            assert_eq!(items.len(), 10);
            for item in &items {
                assert!(
                    item.holds,
                    "{} fails at (K, m) = ({k}, {m}): lhs = {}, rhs = {}",
                    item.name, item.lhs, item.rhs
                );
            }
        }
    }

    #[test]
    fn discretized_uniform_state_is_diagonal() {
        let params = ModelParams::new(0.5, 0.0).unwrap();
        let d = Density::uniform(params);
        let op = OrderParameters { r1: 0.0, r2: 0.0 };
        let disc = discretize_lq(params, op, &d, 32).unwrap();
        // λ_n = (n²/2)(K c_n − 1) on both cos and sin columns.
        for mode in 1..=32usize {
            let cn = match mode {
                1 => 1.0,
                2 => 0.0,
                _ => 0.0,
            };
            let expect = (mode * mode) as f64 / 2.0 * (params.k * cn - 1.0);
            assert!(
                (disc.l[(mode - 1, mode - 1)] - expect).abs() < 1e-10,
                "mode {mode}"
            );
            assert!((disc.l[(32 + mode - 1, 32 + mode - 1)] - expect).abs() < 1e-10);
        }
        // The full spectrum is the analytic multiset {λ_n, each twice}.
        let spec = spectrum_lq(&disc, &d).unwrap();
        let mut expected: Vec<f64> = (1..=32usize)
            .flat_map(|n| {
                let cn = if n == 1 { 1.0 } else { 0.0 };
                let lam = (n * n) as f64 / 2.0 * (params.k * cn - 1.0);
                [lam, lam]
            })
            .collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in spec.eigenvalues.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn discretized_operator_annihilates_qprime() {
        let (params, op, _, d) = solved(2.0, 1e-4);
        let disc = discretize_lq(params, op, &d, 64).unwrap();
        let p = qprime_coefficients(&d, 64, disc.grid).unwrap();
        let lp = &disc.l * &p;
        assert!(lp.norm() <= 1e-8 * p.norm(), "‖L q′‖ = {}", lp.norm());
    }

    #[test]
    fn discretized_operator_spectrum() {
        let (params, op, cov, d) = solved(2.0, 1e-4);
        let disc = discretize_lq(params, op, &d, 128).unwrap();
        assert!(self_adjointness_residual(&disc) <= 1e-8);
        let spec = spectrum_lq(&disc, &d).unwrap();
        assert!(
            spec.eigenvalues[0].abs() <= 1e-8,
            "top eigenvalue {}",
            spec.eigenvalues[0]
        );
        assert!(
            spec.kernel_alignment >= 1.0 - 1e-6,
            "alignment {}",
            spec.kernel_alignment
        );
        assert!(spec.gap > 0.0);

        // Certificate consistency: numerical gap ≥ C₁/C².
        let c = poincare_from_grams(&disc).unwrap();
        let rep0 = decomposition_report(params, op, &cov).unwrap();
        let rep = c_matrix_and_gap(&rep0, &cov, op, c).unwrap();
        assert!(
            spec.gap >= rep.gap_lower,
            "gap {} below certificate {}",
            spec.gap,
            rep.gap_lower
        );
    }

    #[test]
    fn matrix_dirichlet_form_agrees_with_quadrature() {
        let (params, op, _, d) = solved(2.0, 1e-4);
        let n = 64;
        let disc = discretize_lq(params, op, &d, n).unwrap();
        let mut u = FourierField::zeros(n);
        for &(k, re, im) in &[(1, 0.2, -0.1), (2, 0.1, 0.3), (4, -0.25, 0.05)] {
            u.set_coeff(k, Complex64::new(re, im));
            u.set_coeff(-k, Complex64::new(re, -im));
        }
        let mut x = DVector::zeros(2 * n);
        for k in 1..=n {
            x[k - 1] = 2.0 * u.coeff(k as i64).re;
            x[n + k - 1] = -2.0 * u.coeff(k as i64).im;
        }
        let gl = &disc.g * &disc.l;
        let matrix_form = -(x.transpose() * &gl * &x)[(0, 0)];
        let quad_form = dirichlet_form(&u, &d, params);
        assert!(
            (matrix_form - quad_form).abs() <= 1e-7 * (1.0 + quad_form.abs()),
            "{matrix_form} vs {quad_form}"
        );
    }

    #[test]
    fn dirichlet_lower_bound_at_matrix_level() {
        // Rayleigh quotients of the pencil (−GL, A) are D(u)/‖u‖²_{L²_{1/q}}:
        // the smallest is the q′ kernel (≈ 0), and the next one is the
        // minimum over the L²_{1/q}-complement of q′, which the certificate
        // bounds below by C₁.
        let (params, op, cov, d) = solved(2.0, 1e-4);
        let n = 64;
        let disc = discretize_lq(params, op, &d, n).unwrap();
        let c = poincare_from_grams(&disc).unwrap();
        let rep0 = decomposition_report(params, op, &cov).unwrap();
        let rep = c_matrix_and_gap(&rep0, &cov, op, c).unwrap();

        let gl = &disc.g * &disc.l;
        let s = -0.5 * (&gl + gl.transpose());
        let chol = nalgebra::Cholesky::new(disc.a.clone()).unwrap();
        let lfac = chol.l();
        let t1 = lfac.solve_lower_triangular(&s).unwrap();
        let t2 = lfac.solve_lower_triangular(&t1.transpose()).unwrap();
        let eig = SymmetricEigen::new(0.5 * (&t2 + t2.transpose()));
        let mut nus: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        nus.sort_by(f64::total_cmp);
        assert!(nus[0].abs() <= 1e-8, "kernel Rayleigh quotient {}", nus[0]);
        assert!(
            nus[1] >= rep.c1 - 1e-8,
            "second Rayleigh quotient {} below C₁ = {}",
            nus[1],
            rep.c1
        );
    }

    #[test]
    fn poincare_constant_properties() {
        // Uniform density: the k = ±1 Fourier mode extremizes, C = 1.
        let params = ModelParams::new(0.5, 0.0).unwrap();
        let u = Density::uniform(params);
        let c = poincare_constant(&u, 32).unwrap();
        assert!((c - 1.0).abs() < 1e-12, "C_uniform = {c}");

        // Truncation stability and the weight-comparison bound.
        let (params, op, _, d) = solved(2.0, 1e-4);
        let c64 = poincare_constant(&d, 64).unwrap();
        let c128 = poincare_constant(&d, 128).unwrap();
        assert!((c64 - c128).abs() <= 1e-8 * c128, "{c64} vs {c128}");
        let ratio: f64 = {
            let maxq = d.eval(0.0);
            let minq = d.eval(std::f64::consts::PI);
            maxq / minq
        };
        assert!(
            c128 * c128 <= ratio * 1.0 + 1e-9,
            "C² = {} vs ratio {ratio}",
            c128 * c128
        );
        let _ = (params, op);
    }
}
