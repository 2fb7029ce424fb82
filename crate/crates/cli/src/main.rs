//! `kdlab` — command-line laboratory for the mean-field Kuramoto-Daido model.
//!
//! Subcommands cover the static theory (stationary states, free-energy
//! landscape, critical curve, spectral certificates) and the dynamic
//! cross-checks (pseudo-spectral PDE, particle SDE). All outputs embed a run
//! manifest; identical invocations with identical seeds produce
//! byte-identical files.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 convergence or
//! bracketing failure, 4 certificate failure.

mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use kdlab_core::dynamics::{
    align_phase, evolve_pde, free_energy_functional, l2_distance, sample_from_density,
    simulate_particles, Interaction, ParticleState, PdeState,
};
use kdlab_core::fourier::{FourierField, TWO_PI};
use kdlab_core::free_energy::{f_value, global_min};
use kdlab_core::phase_transition::{
    bracket_m_star, classify_continuity, uniform_stability_threshold,
};
use kdlab_core::special::{bessel2, QuadratureConfig};
use kdlab_core::spectral::{
    c_matrix_and_gap, decomposition_report, discretize_lq, omnibus_check, poincare_from_grams,
    self_adjointness_residual, spectrum_lq,
};
use kdlab_core::stationary::{
    covariance, ibp_residuals, kuramoto_order, solve_self_consistency,
    solve_self_consistency_unchecked, Density, ModelParams, OrderParameters,
};
use kdlab_core::{tol, KdError};

use output::{fmt_f64, json_f64, render_csv, render_json, RunManifest, Sink};

/// The normalization in which every H⁻¹ quantity (Poincaré constant, gap
/// bounds) is reported: the antiderivative is the Fourier multiplier 1/(ik)
/// on k ≠ 0.
const H_MINUS1_NORMALIZATION: &str = "dtheta_inverse = 1/(ik) multiplier, k != 0";

#[derive(Parser)]
#[command(
    name = "kdlab",
    version,
    about = "Numerical laboratory for the mean-field Kuramoto-Daido model \
             (stationary states, phase transitions, spectral gaps, simulators)",
    after_help = "Column glossary:\n\
        K            interaction strength\n\
        m            second-mode weight of W(θ) = cos θ + m cos 2θ\n\
        r1, r2       order parameters (first/second cosine moments of q)\n\
        r1_bar       Kuramoto order parameter at the same K (m = 0)\n\
        r2_bar       1 − 1/K, its second moment\n\
        D11,D12,D22  covariances of cos θ, cos 2θ under q (dimensionless)\n\
        kc           critical interaction strength K_c(m)\n\
        lower,upper  analytic sandwich for K_c(m)\n\
        k_sharp      linear stability threshold K_# = 1/max c_n\n\
        minimizer_jump  L¹ distance of the minimizer to uniform at K_c+ (0 when continuous)\n\
        lhs,rhs,margin  sides and slack of one certificate inequality\n\
        t            time; re_k/im_k empirical moments (1/n)Σ cos/sin kθ_i\n\
        free_energy  mean-field free energy (0 at uniform)\n\
        dist_to_stationary  phase-aligned L² distance to the stationary target\n\
        gap, gap_lower      spectral gap of L_q and its certificate C1/C², in the\n\
                            1/(ik) antiderivative normalization"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Emit JSON (with embedded manifest).
    #[arg(long, global = true)]
    json: bool,
    /// Emit CSV (17 significant digits, manifest as a # comment).
    #[arg(long, global = true)]
    csv: bool,
    /// Write to this path instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores). Output order never
    /// depends on this.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    /// Permit (K, m) outside the proven-uniqueness region K > 1, m ≤ 1/4;
    /// results then carry beyond_theory = true and no uniqueness claim.
    #[arg(long, global = true)]
    allow_outside_theory: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the generalized Bessel integral I_n(x, y).
    Bessel {
        #[arg(long)]
        n: i32,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        /// Relative quadrature tolerance.
        #[arg(long, default_value_t = tol::QUAD_REL_TOL)]
        tol: f64,
    },
    /// Solve the self-consistency equations and report the covariance matrix.
    Stationary {
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        m: f64,
        /// Solver residual tolerance.
        #[arg(long, default_value_t = tol::SOLVER_TOL)]
        tol: f64,
    },
    /// Evaluate the free-energy landscape F_{K,m} on a grid and minimize it.
    Landscape {
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        m: f64,
        /// Grid resolution per axis (r1 in [0,1), r2 in (-1,1)).
        #[arg(long, default_value_t = tol::GRID_DEFAULT)]
        grid: usize,
    },
    /// Critical interaction strength K_c(m) with continuity classification.
    Kc {
        #[arg(long)]
        m: f64,
        /// Bisection tolerance in K.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = tol::GRID_DEFAULT)]
        grid: usize,
    },
    /// Sweep K_c(m) over an m-grid (columns m,kc,lower,upper,k_sharp,continuous,minimizer_jump).
    KcSweep {
        #[arg(long = "m-min", default_value_t = 0.0)]
        m_min: f64,
        #[arg(long = "m-max", default_value_t = 3.0)]
        m_max: f64,
        #[arg(long, default_value_t = 121)]
        steps: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = tol::GRID_DEFAULT)]
        grid: usize,
    },
    /// Bracket the crossover weight m* where K_c(m) meets 1/m.
    Mstar {
        /// Bracket width tolerance (≥ 1e-4).
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = tol::GRID_DEFAULT)]
        grid: usize,
    },
    /// Full spectral report: decomposition quantities, C-matrix certificate,
    /// discretized spectrum of L_q.
    Spectrum {
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = tol::SPECTRAL_MODES_DEFAULT)]
        modes: usize,
    },
    /// Spectral gap of L_q versus its certificate C1/C².
    Gap {
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = tol::SPECTRAL_MODES_DEFAULT)]
        modes: usize,
    },
    /// Evaluate the ten omnibus inequalities over a (K, m) grid
    /// (columns K,m,name,lhs,rhs,margin,holds).
    Omnibus {
        #[arg(long = "K", value_delimiter = ',')]
        k: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        m: Vec<f64>,
    },
    /// Integrate the McKean-Vlasov PDE (columns t,r1,r2,free_energy,dist_to_stationary).
    Pde {
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = tol::PDE_MODES_DEFAULT)]
        modes: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "T", default_value_t = 50.0)]
        t_end: f64,
        /// Initial state: uniform | perturbed-uniform:EPS | stationary.
        #[arg(long, default_value = "perturbed-uniform:0.01")]
        init: String,
        /// Record every this many steps.
        #[arg(long, default_value_t = 100)]
        record: usize,
    },
    /// Simulate the N-particle SDE (columns t,re1,im1,re2,im2).
    Sde {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "K")]
        k: f64,
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "T", default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Initial positions: uniform-grid | stationary.
        #[arg(long, default_value = "uniform-grid")]
        init: String,
        /// Record every this many steps.
        #[arg(long, default_value_t = 100)]
        record: usize,
    },
    /// Two-curve CSV of K_c(m) against K_#(m) = min(1, 1/m) (columns m,kc,k_sharp).
    Figure1 {
        #[arg(long = "m-min", default_value_t = 0.0)]
        m_min: f64,
        #[arg(long = "m-max", default_value_t = 3.0)]
        m_max: f64,
        #[arg(long, default_value_t = 121)]
        steps: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = tol::GRID_DEFAULT)]
        grid: usize,
    },
}

fn exit_code(e: &KdError) -> i32 {
    match e {
        KdError::DomainError(_) => 2,
        KdError::CertificateFailure(_) => 4,
        _ => 3,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; anything else is usage.
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Some(k) = cli.threads {
        // A second initialization (e.g. in tests) is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("kdlab: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

/// Solve the stationary state, honoring the outside-theory override.
fn solve_state(
    k: f64,
    m: f64,
    solver_tol: f64,
    allow_outside: bool,
) -> kdlab_core::Result<(ModelParams, OrderParameters, bool)> {
    let params = ModelParams::new(k, m)?;
    let beyond = !params.in_uniqueness_region();
    let op = if allow_outside {
        solve_self_consistency_unchecked(params, solver_tol)?
    } else {
        solve_self_consistency(params, solver_tol)?
    };
    Ok((params, op, beyond))
}

fn write(sink: &Sink, content: String) -> kdlab_core::Result<()> {
    sink.write(&content)
        .map_err(|e| KdError::DomainError(format!("cannot write output: {e}")))
}

fn run(cli: &Cli) -> kdlab_core::Result<()> {
    let sink = Sink::new(cli.out.clone());
    match &cli.command {
        Cmd::Bessel { n, x, y, tol: rel } => {
            let cfg = QuadratureConfig {
                target_rel_tol: *rel,
                ..QuadratureConfig::default()
            };
            let value = bessel2(*n, *x, *y, &cfg)?;
            let manifest = RunManifest::new("bessel")
                .param("n", n)
                .param("x", x)
                .param("y", y)
                .tolerance("quad_rel_tol", *rel);
            let content = if cli.json {
                render_json(
                    &manifest,
                    json!({ "n": n, "x": x, "y": y, "value": json_f64(value) }),
                )
            } else if cli.csv {
                render_csv(
                    &manifest,
                    "n,x,y,value",
                    &[vec![
                        n.to_string(),
                        fmt_f64(*x),
                        fmt_f64(*y),
                        fmt_f64(value),
                    ]],
                )
            } else {
                format!("I_{n}({x}, {y}) = {}\n", fmt_f64(value))
            };
            write(&sink, content)
        }

        Cmd::Stationary {
            k,
            m,
            tol: solver_tol,
        } => {
            let (params, op, beyond) = solve_state(*k, *m, *solver_tol, cli.allow_outside_theory)?;
            let cfg = QuadratureConfig::default();
            let d = Density::new(params, op, &cfg)?;
            let cov = covariance(&d, &cfg)?;
            let res = ibp_residuals(params, op, &cov);
            let r1_bar = kuramoto_order(*k, *solver_tol)?;
            let r2_bar = if *k > 1.0 { 1.0 - 1.0 / *k } else { 0.0 };
            let mut manifest = RunManifest::new("stationary")
                .param("K", k)
                .param("m", m)
                .tolerance("solver_tol", *solver_tol)
                .tolerance("quad_rel_tol", cfg.target_rel_tol);
            manifest.beyond_theory = beyond;
            let content = if cli.csv {
                render_csv(
                    &manifest,
                    "K,m,r1,r2,r1_bar,r2_bar,D11,D12,D22,residual1,residual2,residual3",
                    &[vec![
                        fmt_f64(*k),
                        fmt_f64(*m),
                        fmt_f64(op.r1),
                        fmt_f64(op.r2),
                        fmt_f64(r1_bar),
                        fmt_f64(r2_bar),
                        fmt_f64(cov.d11),
                        fmt_f64(cov.d12),
                        fmt_f64(cov.d22),
                        fmt_f64(res.0),
                        fmt_f64(res.1),
                        fmt_f64(res.2),
                    ]],
                )
            } else {
                render_json(
                    &manifest,
                    json!({
                        "K": json_f64(*k),
                        "m": json_f64(*m),
                        "r1": json_f64(op.r1),
                        "r2": json_f64(op.r2),
                        "r1_bar": json_f64(r1_bar),
                        "r2_bar": json_f64(r2_bar),
                        "D11": json_f64(cov.d11),
                        "D12": json_f64(cov.d12),
                        "D22": json_f64(cov.d22),
                        "residuals": [json_f64(res.0), json_f64(res.1), json_f64(res.2)],
                    }),
                )
            };
            write(&sink, content)
        }

        Cmd::Landscape { k, m, grid } => {
            let params = ModelParams::new(*k, *m)?;
            let result = global_min(params, *grid)?;
            let manifest = RunManifest::new("landscape")
                .param("K", k)
                .param("m", m)
                .param("grid", grid)
                .tolerance("eps_neg", tol::EPS_NEG);
            let argmins: Vec<serde_json::Value> = result
                .argmins
                .iter()
                .map(|&(a, b)| json!([json_f64(a), json_f64(b)]))
                .collect();
            let summary = json!({
                "min_value": json_f64(result.min_value),
                "argmins": argmins,
                "grid_resolution": result.grid_resolution,
                "polished": result.polished,
            });
            let content = if cli.csv {
                let mut rows = Vec::with_capacity(grid * grid);
                for i in 0..*grid {
                    let r1 = i as f64 / *grid as f64;
                    for j in 0..*grid {
                        let r2 = -1.0 + 2.0 * (j as f64 + 0.5) / *grid as f64;
                        rows.push(vec![
                            fmt_f64(r1),
                            fmt_f64(r2),
                            fmt_f64(f_value(params, r1, r2)?),
                        ]);
                    }
                }
                let mut doc = render_csv(&manifest, "r1,r2,F", &rows);
                doc.push_str("# summary: ");
                doc.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
                doc.push('\n');
                doc
            } else {
                render_json(&manifest, summary)
            };
            write(&sink, content)
        }

        Cmd::Kc {
            m,
            tol: tol_k,
            grid,
        } => {
            let point = classify_continuity(*m, *tol_k, 1e-2, *grid)?;
            let k_sharp = uniform_stability_threshold(&[1.0, *m])?;
            let manifest = RunManifest::new("kc")
                .param("m", m)
                .param("grid", grid)
                .tolerance("tol_K", *tol_k)
                .tolerance("eps_neg", tol::EPS_NEG)
                .tolerance("jump_threshold", tol::JUMP_THRESHOLD);
            let content = if cli.json {
                render_json(
                    &manifest,
                    json!({
                        "m": json_f64(point.m),
                        "kc": json_f64(point.kc),
                        "lower": json_f64(point.bounds.0),
                        "upper": json_f64(point.bounds.1),
                        "k_sharp": json_f64(k_sharp),
                        "continuous": point.continuous,
                        "minimizer_jump": json_f64(point.minimizer_jump),
                    }),
                )
            } else if cli.csv {
                render_csv(
                    &manifest,
                    "m,kc,lower,upper,k_sharp,continuous,minimizer_jump",
                    &[vec![
                        fmt_f64(point.m),
                        fmt_f64(point.kc),
                        fmt_f64(point.bounds.0),
                        fmt_f64(point.bounds.1),
                        fmt_f64(k_sharp),
                        point.continuous.to_string(),
                        fmt_f64(point.minimizer_jump),
                    ]],
                )
            } else {
                format!(
                    "K_c({}) = {} ({} transition, jump {:.3e}, bounds [{:.6}, {:.6}], K_# = {:.6})\n",
                    m,
                    fmt_f64(point.kc),
                    if point.continuous { "continuous" } else { "discontinuous" },
                    point.minimizer_jump,
                    point.bounds.0,
                    point.bounds.1,
                    k_sharp,
                )
            };
            write(&sink, content)
        }

        Cmd::KcSweep {
            m_min,
            m_max,
            steps,
            tol: tol_k,
            grid,
        } => {
            let ms: Vec<f64> = (0..*steps)
                .map(|i| m_min + (m_max - m_min) * i as f64 / (*steps as f64 - 1.0).max(1.0))
                .collect();
            let points: kdlab_core::Result<Vec<_>> = ms
                .par_iter()
                .map(|&m| {
                    let p = classify_continuity(m, *tol_k, 1e-2, *grid)?;
                    let k_sharp = uniform_stability_threshold(&[1.0, m.max(0.0)])?;
                    Ok((p, k_sharp))
                })
                .collect();
            let points = points?;
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|(p, k_sharp)| {
                    vec![
                        fmt_f64(p.m),
                        fmt_f64(p.kc),
                        fmt_f64(p.bounds.0),
                        fmt_f64(p.bounds.1),
                        fmt_f64(*k_sharp),
                        p.continuous.to_string(),
                        fmt_f64(p.minimizer_jump),
                    ]
                })
                .collect();
            let manifest = RunManifest::new("kc-sweep")
                .param("m_min", m_min)
                .param("m_max", m_max)
                .param("steps", steps)
                .param("grid", grid)
                .tolerance("tol_K", *tol_k)
                .tolerance("eps_neg", tol::EPS_NEG)
                .tolerance("jump_threshold", tol::JUMP_THRESHOLD);
            write(
                &sink,
                render_csv(
                    &manifest,
                    "m,kc,lower,upper,k_sharp,continuous,minimizer_jump",
                    &rows,
                ),
            )
        }

        Cmd::Mstar { tol: tol_m, grid } => {
            let (lo, hi) = bracket_m_star(*tol_m, *grid)?;
            let manifest = RunManifest::new("mstar")
                .param("grid", grid)
                .tolerance("tol_m", *tol_m)
                .tolerance("eps_neg", tol::EPS_NEG);
            let content = if cli.json {
                render_json(
                    &manifest,
                    json!({
                        "lower": json_f64(lo),
                        "upper": json_f64(hi),
                        "width": json_f64(hi - lo),
                    }),
                )
            } else if cli.csv {
                render_csv(
                    &manifest,
                    "lower,upper,width",
                    &[vec![fmt_f64(lo), fmt_f64(hi), fmt_f64(hi - lo)]],
                )
            } else {
                format!("m* in ({}, {})\n", fmt_f64(lo), fmt_f64(hi))
            };
            write(&sink, content)
        }

        Cmd::Spectrum { k, m, modes } => {
            let (params, op, beyond) =
                solve_state(*k, *m, tol::SOLVER_TOL, cli.allow_outside_theory)?;
            let cfg = QuadratureConfig::default();
            let d = Density::new(params, op, &cfg)?;
            let cov = covariance(&d, &cfg)?;
            let disc = discretize_lq(params, op, &d, *modes)?;
            let poincare = poincare_from_grams(&disc)?;
            let rep0 = decomposition_report(params, op, &cov)?;
            let rep = c_matrix_and_gap(&rep0, &cov, op, poincare)?;
            let spec = spectrum_lq(&disc, &d)?;
            let mut manifest = RunManifest::new("spectrum")
                .param("K", k)
                .param("m", m)
                .param("modes", modes)
                .param("h_minus1_normalization", H_MINUS1_NORMALIZATION)
                .tolerance("solver_tol", tol::SOLVER_TOL)
                .tolerance("quad_rel_tol", cfg.target_rel_tol)
                .tolerance("sym_residual", tol::SYM_RESIDUAL);
            manifest.beyond_theory = beyond || rep.beyond_theory;
            let content = if cli.csv {
                let rows: Vec<Vec<String>> = spec
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(i, &ev)| vec![i.to_string(), fmt_f64(ev)])
                    .collect();
                render_csv(&manifest, "index,eigenvalue", &rows)
            } else {
                let head: Vec<serde_json::Value> = spec
                    .eigenvalues
                    .iter()
                    .take(8)
                    .map(|&e| json_f64(e))
                    .collect();
                render_json(
                    &manifest,
                    json!({
                        "K": json_f64(*k),
                        "m": json_f64(*m),
                        "r1": json_f64(op.r1),
                        "r2": json_f64(op.r2),
                        "delta": json_f64(rep.delta),
                        "mu": json_f64(rep.mu),
                        "mu_tilde": json_f64(rep.mu_tilde),
                        "lambda_plus": json_f64(rep.lambda_plus),
                        "lambda_minus": json_f64(rep.lambda_minus),
                        "eta1": json_f64(rep.eta1),
                        "eta2_plus": json_f64(rep.eta2_plus),
                        "eta2_minus": json_f64(rep.eta2_minus),
                        "alpha_half": json_f64(rep.alpha_half),
                        "alpha_mu": json_f64(rep.alpha_mu),
                        "alpha_plus": json_f64(rep.alpha_plus),
                        "alpha_minus": json_f64(rep.alpha_minus),
                        "c_pp": json_f64(rep.c_pp),
                        "c_pm": json_f64(rep.c_pm),
                        "c_mm": json_f64(rep.c_mm),
                        "gamma": json_f64(rep.gamma),
                        "c0": json_f64(rep.c0),
                        "c1": json_f64(rep.c1),
                        "poincare_c": json_f64(rep.poincare_c),
                        "gap_lower": json_f64(rep.gap_lower),
                        "beyond_theory": rep.beyond_theory,
                        "numerical": {
                            "eigenvalues_head": head,
                            "max_eigenvalue": json_f64(spec.eigenvalues[0]),
                            "gap": json_f64(spec.gap),
                            "kernel_alignment": json_f64(spec.kernel_alignment),
                            "sym_residual": json_f64(spec.sym_residual),
                            "self_adjointness_residual": json_f64(self_adjointness_residual(&disc)),
                        },
                    }),
                )
            };
            write(&sink, content)
        }

        Cmd::Gap { k, m, modes } => {
            let (params, op, beyond) =
                solve_state(*k, *m, tol::SOLVER_TOL, cli.allow_outside_theory)?;
            let cfg = QuadratureConfig::default();
            let d = Density::new(params, op, &cfg)?;
            let cov = covariance(&d, &cfg)?;
            let disc = discretize_lq(params, op, &d, *modes)?;
            let poincare = poincare_from_grams(&disc)?;
            let rep0 = decomposition_report(params, op, &cov)?;
            let rep = c_matrix_and_gap(&rep0, &cov, op, poincare)?;
            let spec = spectrum_lq(&disc, &d)?;
            let mut manifest = RunManifest::new("gap")
                .param("K", k)
                .param("m", m)
                .param("modes", modes)
                .param("h_minus1_normalization", H_MINUS1_NORMALIZATION)
                .tolerance("solver_tol", tol::SOLVER_TOL);
            manifest.beyond_theory = beyond || rep.beyond_theory;
            let content = if cli.json {
                render_json(
                    &manifest,
                    json!({
                        "gap": json_f64(spec.gap),
                        "gap_lower": json_f64(rep.gap_lower),
                        "gamma": json_f64(rep.gamma),
                        "c0": json_f64(rep.c0),
                        "c1": json_f64(rep.c1),
                        "poincare_c": json_f64(rep.poincare_c),
                        "max_eigenvalue": json_f64(spec.eigenvalues[0]),
                        "kernel_alignment": json_f64(spec.kernel_alignment),
                    }),
                )
            } else if cli.csv {
                render_csv(
                    &manifest,
                    "K,m,gap,gap_lower,gamma,c0,c1,poincare_c",
                    &[vec![
                        fmt_f64(*k),
                        fmt_f64(*m),
                        fmt_f64(spec.gap),
                        fmt_f64(rep.gap_lower),
                        fmt_f64(rep.gamma),
                        fmt_f64(rep.c0),
                        fmt_f64(rep.c1),
                        fmt_f64(rep.poincare_c),
                    ]],
                )
            } else {
                format!(
                    "gap(L_q) = {} >= certificate {} (gamma = {:.6e}, C1 = {:.6e}, C = {:.6})\n",
                    fmt_f64(spec.gap),
                    fmt_f64(rep.gap_lower),
                    rep.gamma,
                    rep.c1,
                    rep.poincare_c,
                )
            };
            write(&sink, content)
        }

        Cmd::Omnibus { k, m } => {
            if k.is_empty() || m.is_empty() {
                return Err(KdError::DomainError("need at least one K and one m".into()));
            }
            let mut rows = Vec::new();
            for &kv in k {
                for &mv in m {
                    let (params, op, _) =
                        solve_state(kv, mv, tol::SOLVER_TOL, cli.allow_outside_theory)?;
                    let cfg = QuadratureConfig::default();
                    let d = Density::new(params, op, &cfg)?;
                    let cov = covariance(&d, &cfg)?;
                    let rep = decomposition_report(params, op, &cov)?;
                    for item in omnibus_check(params, op, &cov, &rep) {
                        rows.push(vec![
                            fmt_f64(kv),
                            fmt_f64(mv),
                            item.name.to_string(),
                            fmt_f64(item.lhs),
                            fmt_f64(item.rhs),
                            fmt_f64(item.margin),
                            item.holds.to_string(),
                        ]);
                    }
                }
            }
            let manifest = RunManifest::new("omnibus")
                .param(
                    "K",
                    k.iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                )
                .param(
                    "m",
                    m.iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                )
                .tolerance("solver_tol", tol::SOLVER_TOL);
            write(
                &sink,
                render_csv(&manifest, "K,m,name,lhs,rhs,margin,holds", &rows),
            )
        }

        Cmd::Pde {
            k,
            m,
            modes,
            dt,
            t_end,
            init,
            record,
        } => {
            let params = ModelParams::new(*k, *m)?;
            let interaction = Interaction::kuramoto_daido(*m);
            let initial = parse_pde_init(init, params, &interaction, *modes)?;
            // Comparison target: the nonuniform state when it exists, else uniform.
            let target = if params.in_uniqueness_region() {
                let op = solve_self_consistency(params, tol::SOLVER_TOL)?;
                let d = Density::new(params, op, &QuadratureConfig::default())?;
                let grid = (4 * *modes).next_power_of_two();
                let vals: Vec<f64> = (0..grid)
                    .map(|j| d.eval(TWO_PI * j as f64 / grid as f64))
                    .collect();
                FourierField::from_grid(&vals, *modes)?
            } else {
                PdeState::uniform(params, interaction.clone(), *modes).field
            };
            let traj = evolve_pde(&initial, *dt, *t_end, *record)?;
            let rows: kdlab_core::Result<Vec<Vec<String>>> = traj
                .iter()
                .map(|s| {
                    let (r1, _) = s.moment(1);
                    let (r2, _) = s.moment(2);
                    Ok(vec![
                        fmt_f64(s.t),
                        fmt_f64(r1),
                        fmt_f64(r2),
                        fmt_f64(free_energy_functional(s)?),
                        fmt_f64(l2_distance(&align_phase(&s.field), &target)),
                    ])
                })
                .collect();
            let mut manifest = RunManifest::new("pde")
                .param("K", k)
                .param("m", m)
                .param("modes", modes)
                .param("dt", dt)
                .param("T", t_end)
                .param("init", init)
                .param("record", record)
                .tolerance("density_neg_tol", tol::DENSITY_NEG_TOL);
            manifest.beyond_theory = !params.in_uniqueness_region() && *k > 1.0;
            write(
                &sink,
                render_csv(&manifest, "t,r1,r2,free_energy,dist_to_stationary", &rows?),
            )
        }

        Cmd::Sde {
            n,
            k,
            m,
            dt,
            t_end,
            seed,
            init,
            record,
        } => {
            let params = ModelParams::new(*k, *m)?;
            let interaction = Interaction::kuramoto_daido(*m);
            let positions = match init.as_str() {
                "uniform-grid" => (0..*n)
                    .map(|i| TWO_PI * (i as f64 + 0.5) / *n as f64)
                    .collect(),
                "stationary" => {
                    let op = if cli.allow_outside_theory {
                        solve_self_consistency_unchecked(params, tol::SOLVER_TOL)?
                    } else {
                        solve_self_consistency(params, tol::SOLVER_TOL)?
                    };
                    let d = Density::new(params, op, &QuadratureConfig::default())?;
                    sample_from_density(&d, *n)
                }
                other => {
                    return Err(KdError::DomainError(format!(
                        "unknown --init '{other}' (expected uniform-grid or stationary)"
                    )))
                }
            };
            let state = ParticleState {
                positions,
                t: 0.0,
                rng_seed: *seed,
                params,
                interaction,
            };
            let samples = simulate_particles(&state, *dt, *t_end, *record)?;
            let rows: Vec<Vec<String>> = samples
                .iter()
                .map(|s| {
                    vec![
                        fmt_f64(s.t),
                        fmt_f64(s.re1),
                        fmt_f64(s.im1),
                        fmt_f64(s.re2),
                        fmt_f64(s.im2),
                    ]
                })
                .collect();
            let mut manifest = RunManifest::new("sde")
                .param("N", n)
                .param("K", k)
                .param("m", m)
                .param("dt", dt)
                .param("T", t_end)
                .param("init", init)
                .param("record", record)
                .param("rng", "chacha8");
            manifest.seed = Some(*seed);
            write(&sink, render_csv(&manifest, "t,re1,im1,re2,im2", &rows))
        }

        Cmd::Figure1 {
            m_min,
            m_max,
            steps,
            tol: tol_k,
            grid,
        } => {
            let ms: Vec<f64> = (0..*steps)
                .map(|i| m_min + (m_max - m_min) * i as f64 / (*steps as f64 - 1.0).max(1.0))
                .collect();
            let kcs: kdlab_core::Result<Vec<f64>> = ms
                .par_iter()
                .map(|&m| kdlab_core::phase_transition::critical_strength(m, *tol_k, *grid))
                .collect();
            let kcs = kcs?;
            let rows: Vec<Vec<String>> = ms
                .iter()
                .zip(&kcs)
                .map(|(&m, &kc)| {
                    let k_sharp = if m > 1.0 { 1.0 / m } else { 1.0 };
                    vec![fmt_f64(m), fmt_f64(kc), fmt_f64(k_sharp)]
                })
                .collect();
            let manifest = RunManifest::new("figure1")
                .param("m_min", m_min)
                .param("m_max", m_max)
                .param("steps", steps)
                .param("grid", grid)
                .tolerance("tol_K", *tol_k);
            write(&sink, render_csv(&manifest, "m,kc,k_sharp", &rows))
        }
    }
}

fn parse_pde_init(
    init: &str,
    params: ModelParams,
    interaction: &Interaction,
    modes: usize,
) -> kdlab_core::Result<PdeState> {
    if init == "uniform" {
        return Ok(PdeState::uniform(params, interaction.clone(), modes));
    }
    if let Some(eps) = init.strip_prefix("perturbed-uniform:") {
        let eps: f64 = eps
            .parse()
            .map_err(|_| KdError::DomainError(format!("bad perturbation size '{eps}'")))?;
        return Ok(PdeState::perturbed_uniform(
            params,
            interaction.clone(),
            modes,
            eps,
        ));
    }
    if init == "stationary" {
        let op = solve_self_consistency_unchecked(params, tol::SOLVER_TOL)?;
        let d = Density::new(params, op, &QuadratureConfig::default())?;
        let grid = (4 * modes).next_power_of_two();
        let vals: Vec<f64> = (0..grid)
            .map(|j| d.eval(TWO_PI * j as f64 / grid as f64))
            .collect();
        return PdeState::from_density_grid(params, interaction.clone(), &vals, modes);
    }
    Err(KdError::DomainError(format!(
        "unknown --init '{init}' (expected uniform, perturbed-uniform:EPS, or stationary)"
    )))
}
