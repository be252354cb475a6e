//! Eta invariant of a truncated spectrum via the heat-trace integral
//! `η = π^{-1/2} ∫₀^∞ t^{-1/2} Tr[D e^{-tD²}] dt`, evaluated per eigenvalue in
//! closed form and split at `t₀ = 1/(2R)`.
//!
//! Per eigenvalue, `∫₀^{t₀} t^{-1/2} λ e^{-tλ²} dt = √π sign(λ) erf(|λ|√t₀)`
//! and the large-time remainder is `√π sign(λ) erfc(|λ|√t₀)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;

/// How eigenvalues beyond the window are accounted for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailModel {
    /// The omitted spectrum continues each end of the window as an arithmetic
    /// progression with the given spacing; its zeta-regularized sign sum is
    /// added in closed form.
    Arithmetic { spacing: f64 },
    /// The omitted spectrum is symmetric and contributes nothing.
    Symmetric,
}

#[derive(Clone, Debug)]
pub struct EtaOptions {
    pub window: f64,
    pub tail: TailModel,
    /// Largest accepted change of `η` over windows between 90% and 100% of
    /// `window`.
    /// `None` skips the check.
    pub tolerance: Option<f64>,
}

impl EtaOptions {
    pub fn symmetric(window: f64) -> Self {
        Self { window, tail: TailModel::Symmetric, tolerance: Some(1e-6) }
    }

    pub fn arithmetic(window: f64, spacing: f64) -> Self {
        Self { window, tail: TailModel::Arithmetic { spacing }, tolerance: Some(1e-6) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaResult {
    pub eta: f64,
    pub dim_ker: usize,
    pub reduced_eta: f64,
    pub t0: f64,
    pub small_time_part: f64,
    pub large_time_part: f64,
    pub window: f64,
    /// Largest change of `η` over windows between 90% and 100% of `window`.
    pub tail_estimate: f64,
    /// Rounding-level bound; the time integrals are exact.
    pub quadrature_error: f64,
    pub kernel_tolerance: f64,
}

/// `t₀ = 1/(2R)`, or 1 for a flat family.
pub fn split_time(curvature_norm: f64) -> f64 {
    if curvature_norm > 0.0 {
        1.0 / (2.0 * curvature_norm)
    } else {
        1.0
    }
}

/// `1e-8·(1 + min |λ|)` over eigenvalues that are not rounding-level zeros.
pub fn kernel_tolerance(eigs: &[f64]) -> f64 {
    let scale = eigs.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let noise = 1e-12 * (1.0 + scale);
    let min_nonzero = eigs
        .iter()
        .map(|l| l.abs())
        .filter(|&l| l > noise)
        .fold(f64::INFINITY, f64::min);
    1e-8 * (1.0 + if min_nonzero.is_finite() { min_nonzero } else { 0.0 })
}

struct Parts {
    sign_sum: f64,
    small: f64,
    large: f64,
    dim_ker: usize,
}

fn tail_correction(inside: &[f64], tail: TailModel) -> f64 {
    match tail {
        TailModel::Symmetric => 0.0,
        TailModel::Arithmetic { spacing } => {
            if inside.is_empty() {
                return 0.0;
            }
            let top = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let bottom = inside.iter().copied().fold(f64::INFINITY, f64::min);
            // Σ_{j≥0} (b + jh)^{-z} at z = 0 is ζ_H(0, b/h) = 1/2 - b/h.
            let above = top + spacing;
            let below = -bottom + spacing;
            (0.5 - above / spacing) - (0.5 - below / spacing)
        }
    }
}

/// Window membership with rounding-level slack, so that `±λ` pairs split by
/// a few ulps are kept or dropped together.
fn in_window(l: f64, window: f64) -> bool {
    l.abs() <= window + 1e-9 * (1.0 + window)
}

fn sign_sum(eigs: &[f64], window: f64, tail: TailModel, eps_ker: f64) -> f64 {
    let inside: Vec<f64> = eigs.iter().copied().filter(|&l| in_window(l, window)).collect();
    let signs: Vec<f64> = inside.iter().filter(|l| l.abs() >= eps_ker).map(|l| l.signum()).collect();
    pairwise_sum(&signs) + tail_correction(&inside, tail)
}

fn parts(eigs: &[f64], window: f64, tail: TailModel, t0: f64, eps_ker: f64) -> Parts {
    let inside: Vec<f64> = eigs.iter().copied().filter(|&l| in_window(l, window)).collect();
    let mut signs = Vec::with_capacity(inside.len());
    let mut small = Vec::with_capacity(inside.len());
    let mut large = Vec::with_capacity(inside.len());
    let mut dim_ker = 0;
    let sq = t0.sqrt();
    for &l in &inside {
        if l.abs() < eps_ker {
            dim_ker += 1;
            continue;
        }
        let sgn = l.signum();
        signs.push(sgn);
        small.push(sgn * libm::erf(l.abs() * sq));
        large.push(sgn * libm::erfc(l.abs() * sq));
    }
    let correction = tail_correction(&inside, tail);
    Parts {
        sign_sum: pairwise_sum(&signs) + correction,
        small: pairwise_sum(&small) + correction,
        large: pairwise_sum(&large),
        dim_ker,
    }
}

/// Largest change of the (tail-corrected) sign sum over windows between
/// `0.9·window` and `window`.
fn window_sensitivity(eigs: &[f64], window: f64, tail: TailModel, eps_ker: f64, reference: f64) -> f64 {
    let inner = 0.9 * window;
    let mut cuts: Vec<f64> = eigs
        .iter()
        .map(|l| l.abs())
        .filter(|&l| l >= inner && l <= window)
        .collect();
    cuts.push(inner);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.iter()
        .map(|&w| (sign_sum(eigs, w, tail, eps_ker) - reference).abs())
        .fold(0.0, f64::max)
}

/// Eta invariant of the spectrum `eigs` (any order) with curvature scale `R`.
pub fn eta_heat_trace(eigs: &[f64], curvature_norm: f64, opts: &EtaOptions) -> Result<EtaResult> {
    let t0 = split_time(curvature_norm);
    let eps_ker = kernel_tolerance(eigs);
    let p = parts(eigs, opts.window, opts.tail, t0, eps_ker);
    let tail_estimate = window_sensitivity(eigs, opts.window, opts.tail, eps_ker, p.sign_sum);
    if let Some(tol) = opts.tolerance {
        if tail_estimate > tol {
            return Err(Error::WindowTooSmall {
                estimate: tail_estimate,
                tolerance: tol,
                suggested: 2.0 * opts.window,
            });
        }
    }
    let root_pi = PI.sqrt();
    let small_time_part = root_pi * p.small;
    let large_time_part = root_pi * p.large;
    let eta = (small_time_part + large_time_part) / root_pi;
    Ok(EtaResult {
        eta,
        dim_ker: p.dim_ker,
        reduced_eta: (eta + p.dim_ker as f64) / 2.0,
        t0,
        small_time_part,
        large_time_part,
        window: opts.window,
        tail_estimate,
        quadrature_error: f64::EPSILON * eigs.len().max(1) as f64,
        kernel_tolerance: eps_ker,
    })
}

/// Hurwitz zeta `ζ(z, q) = Σ_{k≥0} (q + k)^{-z}` for real `z ≠ 1`, `q > 0`,
/// continued to all `z` by Euler–Maclaurin summation.
pub fn hurwitz_zeta(z: f64, q: f64) -> f64 {
    const DIRECT: usize = 12;
    // B_{2j} / (2j)!
    const COEFFS: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    let direct: f64 = (0..DIRECT).map(|k| (q + k as f64).powf(-z)).sum();
    let x = q + DIRECT as f64;
    let mut total = direct + x.powf(1.0 - z) / (z - 1.0) + 0.5 * x.powf(-z);
    // Rising factorial z (z+1) … (z+2j-2).
    let mut rising = z;
    for (j, c) in COEFFS.iter().enumerate() {
        let order = 2 * j + 1;
        total += c * rising * x.powf(-z - order as f64);
        rising *= (z + order as f64) * (z + order as f64 + 1.0);
    }
    total
}

/// Eta invariant of the spectrum `{m + c : m ∈ ℤ}` via
/// `η(z) = ζ_H(z, c) - ζ_H(z, 1 - c)` at `z = 0` (`c` reduced to `[0, 1)`).
pub fn circle_eta_oracle(c: f64) -> f64 {
    let frac = c - c.floor();
    if frac == 0.0 {
        return 0.0;
    }
    hurwitz_zeta(0.0, frac) - hurwitz_zeta(0.0, 1.0 - frac)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LargeTimeCheck {
    /// No curvature: the diagnostic does not apply.
    pub flat: bool,
    /// `Tr e^{-(t₀/2)D²} = Σ e^{-λ²/(4R)}`.
    pub trace_value: f64,
    /// `trace_value / R^{n/2}`.
    pub ratio: f64,
    pub large_time_part: f64,
    /// `|large_time_part| <= (√π/2)·trace_value`.
    pub bound_holds: bool,
}

pub fn large_time_check(eigs: &[f64], curvature_norm: f64, dim: usize) -> LargeTimeCheck {
    if curvature_norm <= 0.0 {
        return LargeTimeCheck {
            flat: true,
            trace_value: f64::NAN,
            ratio: f64::NAN,
            large_time_part: f64::NAN,
            bound_holds: true,
        };
    }
    let t0 = split_time(curvature_norm);
    let eps_ker = kernel_tolerance(eigs);
    let heat: Vec<f64> = eigs.iter().map(|l| (-0.5 * t0 * l * l).exp()).collect();
    let trace_value = pairwise_sum(&heat);
    let large: Vec<f64> = eigs
        .iter()
        .filter(|l| l.abs() >= eps_ker)
        .map(|l| l.signum() * libm::erfc(l.abs() * t0.sqrt()))
        .collect();
    let large_time_part = PI.sqrt() * pairwise_sum(&large);
    LargeTimeCheck {
        flat: false,
        trace_value,
        ratio: trace_value / curvature_norm.powf(dim as f64 / 2.0),
        large_time_part,
        bound_holds: large_time_part.abs() <= 0.5 * PI.sqrt() * trace_value,
    }
}
