//! Heat kernel of the generalized harmonic oscillator
//! `ℒ = -Σ_i (∂_i + (i/4) Σ_j Ω_ij X^j)²` for a real antisymmetric `Ω`,
//! in closed form and by brute-force PDE integration.
//!
//! Matrix functions of `Ω` are taken through the Hermitian matrix `iΩ`, whose
//! eigenvalues come in pairs `±θ`:
//! `K(u; X, 0) = (4πu)^{-n/2} det^{1/2}(h(uΩ/2)) exp(-(1/4u) Xᵀ g(uΩ/2) X)`
//! with `h(x) = x/sinh x` and `g(x) = x/tanh x` evaluated at `uθ/2`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::eigen::eigh;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, I, ZERO};

#[derive(Clone, Debug)]
pub struct MehlerInput {
    /// Real antisymmetric n×n matrix, row-major.
    pub omega: Vec<Vec<f64>>,
    pub u: f64,
    pub x: Vec<f64>,
    /// Hermitian twist; the kernel is multiplied by `exp(-F)`.
    pub twist: Option<CMatrix>,
}

impl MehlerInput {
    pub fn new(omega: Vec<Vec<f64>>, u: f64, x: Vec<f64>) -> Self {
        Self { omega, u, x, twist: None }
    }

    /// `Ω = θ·J` in two dimensions, `J = [[0, 1], [-1, 0]]`.
    pub fn planar(theta: f64, u: f64, x: [f64; 2]) -> Self {
        Self::new(vec![vec![0.0, theta], vec![-theta, 0.0]], u, x.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }
}

const SERIES_THRESHOLD: f64 = 1e-4;

/// `x / sinh x`.
pub fn sinhc_inv(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0 - 31.0 * x2 * x2 * x2 / 15120.0
    } else {
        x / x.sinh()
    }
}

/// `x / tanh x`.
pub fn tanhc_inv(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2 * x2 * x2 / 945.0
    } else {
        x / x.tanh()
    }
}

fn validate(inp: &MehlerInput) -> Result<()> {
    if !(inp.u > 0.0) {
        return Err(Error::NonPositiveTime(inp.u));
    }
    let n = inp.dim();
    if inp.omega.iter().any(|row| row.len() != n) || inp.x.len() != n {
        return Err(Error::Config(format!("Ω must be {n}×{n} and X must have {n} components")));
    }
    let mut scale: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(inp.omega[i][j].abs());
            residual = residual.max((inp.omega[i][j] + inp.omega[j][i]).abs());
        }
    }
    if residual > 1e-12 * (1.0 + scale) {
        return Err(Error::NotAntisymmetric(residual));
    }
    Ok(())
}

/// Determinant factor and quadratic-form matrix `g(uΩ/2)`.
fn spectral_factors(omega: &[Vec<f64>], u: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = omega.len();
    let h = CMatrix::from_fn(n, n, |i, j| I * omega[i][j]);
    let eig = eigh(&h, true)?;
    let vecs = eig.vectors.expect("vectors requested");
    let mut det = 1.0;
    for &theta in &eig.values {
        det *= sinhc_inv(0.5 * u * theta);
    }
    let mut q = vec![vec![0.0; n]; n];
    for (theta, v) in eig.values.iter().zip(&vecs) {
        let gval = tanhc_inv(0.5 * u * theta);
        for i in 0..n {
            for j in 0..n {
                q[i][j] += gval * (v[i] * v[j].conj()).re;
            }
        }
    }
    Ok((det.max(0.0).sqrt(), q))
}

/// `exp(-F)` for Hermitian `F`.
fn exp_neg_hermitian(f: &CMatrix) -> Result<CMatrix> {
    let eig = eigh(f, true)?;
    let vecs = eig.vectors.expect("vectors requested");
    let k = f.rows();
    let mut out = CMatrix::zeros(k, k);
    for (lam, v) in eig.values.iter().zip(&vecs) {
        let w = (-lam).exp();
        for i in 0..k {
            for j in 0..k {
                out[(i, j)] += v[i] * v[j].conj() * w;
            }
        }
    }
    Ok(out)
}

/// Closed-form kernel `K(u; X, 0)`, times `exp(-F)` when a twist is given
/// (a 1×1 matrix otherwise).
pub fn mehler_kernel(inp: &MehlerInput) -> Result<CMatrix> {
    validate(inp)?;
    let n = inp.dim();
    let u = inp.u;
    let (det, q) = spectral_factors(&inp.omega, u)?;
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += inp.x[i] * q[i][j] * inp.x[j];
        }
    }
    let scalar = (4.0 * PI * u).powf(-(n as f64) / 2.0) * det * (-quad / (4.0 * u)).exp();
    match &inp.twist {
        None => Ok(CMatrix::from_rows(&[vec![Complex64::new(scalar, 0.0)]])),
        Some(f) => {
            if f.hermiticity_residual() > 1e-12 * (1.0 + f.max_abs()) {
                return Err(Error::Config("twist must be Hermitian".into()));
            }
            Ok(exp_neg_hermitian(f)?.scale_real(scalar))
        }
    }
}

/// Scalar kernel value (no twist).
pub fn mehler_scalar(omega: Vec<Vec<f64>>, u: f64, x: Vec<f64>) -> Result<f64> {
    Ok(mehler_kernel(&MehlerInput::new(omega, u, x))?[(0, 0)].re)
}

/// Periodic grid for the PDE oracle.
#[derive(Clone, Debug)]
pub struct OracleGrid {
    pub points: usize,
    /// The box is `[-half_width, half_width)^n`.
    pub half_width: f64,
    /// Strang steps of the coarsest run; refined runs use 2× and 4×.
    pub base_steps: usize,
    pub tolerance: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self { points: 256, half_width: 9.6, base_steps: 64, tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    /// Difference between the two finest Richardson-extrapolated values.
    pub richardson_estimate: f64,
    /// `h^n Σ K` on the finest run.
    pub mass: f64,
}

struct Solver {
    n: usize,
    points: usize,
    h: f64,
    x0: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Solver {
    fn new(n: usize, grid: &OracleGrid) -> Self {
        let points = grid.points;
        let len = 2.0 * grid.half_width;
        let h = len / points as f64;
        let wavenumbers = (0..points)
            .map(|j| {
                let jj = if j < points / 2 { j as f64 } else { j as f64 - points as f64 };
                2.0 * PI * jj / len
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            n,
            points,
            h,
            x0: -grid.half_width,
            wavenumbers,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }
    }

    fn coord(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.h
    }

    /// `exp(-τ (k + shift(other))²)` along one axis; `shift` is the vector
    /// potential component for that axis as a function of the other
    /// coordinate.
    fn axis_flow(&self, data: &mut [Complex64], axis: usize, tau: f64, shift: &dyn Fn(f64) -> f64) {
        let p = self.points;
        let norm = 1.0 / p as f64;
        let mut line = vec![ZERO; p];
        let lines = if self.n == 1 { 1 } else { p };
        for other in 0..lines {
            let a = shift(self.coord(other));
            let idx = |t: usize| if axis == 0 { other * p + t } else { t * p + other };
            for t in 0..p {
                line[t] = data[idx(t)];
            }
            self.forward.process(&mut line);
            for (t, z) in line.iter_mut().enumerate() {
                let k = self.wavenumbers[t] + a;
                *z *= (-tau * k * k).exp() * norm;
            }
            self.inverse.process(&mut line);
            for t in 0..p {
                data[idx(t)] = line[t];
            }
        }
    }

    fn run(&self, omega: &[Vec<f64>], u: f64, steps: usize) -> Vec<Complex64> {
        let p = self.points;
        let total = p.pow(self.n as u32);
        let mut data = vec![ZERO; total];
        let center = p / 2;
        let origin = if self.n == 1 { center } else { center * p + center };
        data[origin] = Complex64::new(1.0 / self.h.powi(self.n as i32), 0.0);
        let tau = u / steps as f64;
        if self.n == 1 {
            self.axis_flow(&mut data, 0, u, &|_| 0.0);
            return data;
        }
        // Vector potential A_i = ¼ Σ_j Ω_ij X^j; axis 0 is x (fastest).
        let w01 = 0.25 * omega[0][1];
        let w10 = 0.25 * omega[1][0];
        let a0 = move |y: f64| w01 * y;
        let a1 = move |x: f64| w10 * x;
        for _ in 0..steps {
            self.axis_flow(&mut data, 0, 0.5 * tau, &a0);
            self.axis_flow(&mut data, 1, tau, &a1);
            self.axis_flow(&mut data, 0, 0.5 * tau, &a0);
        }
        data
    }

    /// Trigonometric interpolation of grid data at `x`.
    fn interpolate(&self, data: &[Complex64], x: &[f64]) -> f64 {
        let p = self.points;
        let mut spec = data.to_vec();
        if self.n == 1 {
            self.forward.process(&mut spec);
        } else {
            for row in spec.chunks_mut(p) {
                self.forward.process(row);
            }
            let mut col = vec![ZERO; p];
            for c in 0..p {
                for r in 0..p {
                    col[r] = spec[r * p + c];
                }
                self.forward.process(&mut col);
                for r in 0..p {
                    spec[r * p + c] = col[r];
                }
            }
        }
        let phase = |axis: usize, t: usize| Complex64::from_polar(1.0, self.wavenumbers[t] * (x[axis] - self.x0));
        let mut acc = ZERO;
        if self.n == 1 {
            for t in 0..p {
                acc += spec[t] * phase(0, t);
            }
        } else {
            for r in 0..p {
                let py = phase(1, r);
                for c in 0..p {
                    acc += spec[r * p + c] * phase(0, c) * py;
                }
            }
        }
        acc.re / p.pow(self.n as u32) as f64
    }
}

/// Brute-force `K(u; X, 0)` by Strang split-step Fourier integration of
/// `∂_u K = -ℒK` from a discrete delta, with Richardson extrapolation over
/// three step counts. Supports `n ≤ 2`.
pub fn oscillator_oracle(omega: &[Vec<f64>], u: f64, x: &[f64], grid: &OracleGrid) -> Result<OracleResult> {
    let inp = MehlerInput::new(omega.to_vec(), u, x.to_vec());
    validate(&inp)?;
    let n = omega.len();
    if n == 0 || n > 2 {
        return Err(Error::Unsupported(format!("oscillator oracle supports n <= 2 (got {n})")));
    }
    if grid.points < 8 || grid.points % 2 == 1 {
        return Err(Error::Config("oracle grid needs an even number of points, at least 8".into()));
    }
    let solver = Solver::new(n, grid);
    let runs: Vec<Vec<Complex64>> = [1, 2, 4]
        .iter()
        .map(|&f| solver.run(omega, u, grid.base_steps * f))
        .collect();
    let vals: Vec<f64> = runs.iter().map(|d| solver.interpolate(d, x)).collect();
    // Strang splitting is second order in the step.
    let r1 = (4.0 * vals[1] - vals[0]) / 3.0;
    let r2 = (4.0 * vals[2] - vals[1]) / 3.0;
    let estimate = (r2 - r1).abs();
    let mass = runs[2].iter().map(|z| z.re).sum::<f64>() * solver.h.powi(n as i32);
    if estimate > grid.tolerance {
        return Err(Error::OracleTooCoarse {
            estimate,
            tolerance: grid.tolerance,
            suggestion: format!("base_steps = {}", grid.base_steps * 4),
        });
    }
    Ok(OracleResult { value: r2, richardson_estimate: estimate, mass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, u: f64, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (4.0 * PI * u).powf(-(n as f64) / 2.0) * (-r2 / (4.0 * u)).exp()
    }

    /// Laguerre polynomial `L_k(t)` by recurrence.
    fn laguerre(k: usize, t: f64) -> f64 {
        let (mut a, mut b) = (1.0, 1.0 - t);
        if k == 0 {
            return a;
        }
        for j in 1..k {
            let c = ((2 * j + 1) as f64 - t) * b - j as f64 * a;
            a = b;
            b = c / (j + 1) as f64;
        }
        b
    }

    /// Landau-level expansion of the planar magnetic heat kernel with field
    /// strength `B = θ/2`.
    fn landau_series(theta: f64, u: f64, x: [f64; 2]) -> f64 {
        let b = 0.5 * theta.abs();
        let rho = b * (x[0] * x[0] + x[1] * x[1]) / 2.0;
        let sum: f64 = (0..400)
            .map(|k| (-u * (2 * k + 1) as f64 * b).exp() * laguerre(k, rho))
            .sum();
        b / (2.0 * PI) * sum * (-rho / 2.0).exp()
    }

    #[test]
    fn zero_field_is_gaussian() {
        for n in 1..=3 {
            let x: Vec<f64> = (0..n).map(|i| 0.3 + 0.2 * i as f64).collect();
            let v = mehler_scalar(vec![vec![0.0; n]; n], 0.7, x.clone()).unwrap();
            assert!((v - gaussian(n, 0.7, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn planar_origin_value() {
        let (theta, u) = (1.3, 0.8);
        let v = mehler_kernel(&MehlerInput::planar(theta, u, [0.0, 0.0])).unwrap()[(0, 0)].re;
        let y = u * theta / 2.0;
        assert!((v - y / y.sinh() / (4.0 * PI * u)).abs() < 1e-14);
    }

    #[test]
    fn matches_landau_level_series() {
        for &(theta, u, x) in &[(1.0, 0.5, [0.3, 0.0]), (2.5, 0.3, [-0.4, 0.7]), (0.2, 1.5, [1.0, 1.0])] {
            let closed = mehler_kernel(&MehlerInput::planar(theta, u, x)).unwrap()[(0, 0)].re;
            let series = landau_series(theta, u, x);
            assert!((closed - series).abs() < 1e-12, "θ={theta} u={u}: {closed} vs {series}");
        }
    }

    #[test]
    fn diagonal_twist_multiplies_entrywise() {
        let f = CMatrix::diag_real(&[0.5, -1.0, 2.0]);
        let mut inp = MehlerInput::new(vec![vec![0.0; 2]; 2], 0.4, vec![0.1, -0.2]);
        inp.twist = Some(f);
        let k = mehler_kernel(&inp).unwrap();
        let g = gaussian(2, 0.4, &[0.1, -0.2]);
        for (i, fv) in [0.5f64, -1.0, 2.0].iter().enumerate() {
            assert!((k[(i, i)].re - g * (-fv).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            mehler_kernel(&MehlerInput::planar(1.0, 0.0, [0.0, 0.0])),
            Err(Error::NonPositiveTime(_))
        ));
        assert!(matches!(
            mehler_scalar(vec![vec![0.0, 1.0], vec![1.0, 0.0]], 1.0, vec![0.0, 0.0]),
            Err(Error::NotAntisymmetric(_))
        ));
    }

    #[test]
    fn series_branch_is_continuous() {
        for x in [0.99e-4, 1.01e-4, -0.99e-4] {
            let direct_s = x / f64::sinh(x);
            let direct_t = x / f64::tanh(x);
            assert!((sinhc_inv(x) - direct_s).abs() < 1e-15);
            assert!((tanhc_inv(x) - direct_t).abs() < 1e-15);
        }
        assert_eq!(sinhc_inv(0.0), 1.0);
        assert_eq!(tanhc_inv(0.0), 1.0);
    }

    #[test]
    fn even_in_omega_and_in_x() {
        let om = vec![vec![0.0, 0.9, -0.4], vec![-0.9, 0.0, 1.7], vec![0.4, -1.7, 0.0]];
        let neg: Vec<Vec<f64>> = om.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let x = vec![0.2, -0.5, 0.3];
        let mx: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = mehler_scalar(om.clone(), 0.6, x.clone()).unwrap();
        assert!((a - mehler_scalar(neg, 0.6, x.clone()).unwrap()).abs() < 1e-15);
        assert!((a - mehler_scalar(om, 0.6, mx).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn free_oracle_is_gaussian_with_unit_mass() {
        let grid = OracleGrid { points: 128, half_width: 9.6, base_steps: 4, tolerance: 1e-8 };
        let res = oscillator_oracle(&[vec![0.0; 2], vec![0.0; 2]], 0.5, &[0.3, 0.0], &grid).unwrap();
        assert!((res.value - gaussian(2, 0.5, &[0.3, 0.0])).abs() < 1e-8);
        assert!((res.mass - 1.0).abs() < 1e-10);
        let res = oscillator_oracle(&[vec![0.0]], 0.5, &[0.45], &grid).unwrap();
        assert!((res.value - gaussian(1, 0.5, &[0.45])).abs() < 1e-8);
    }

    #[test]
    fn planar_oracle_agrees_with_closed_form() {
        let inp = MehlerInput::planar(1.0, 0.5, [0.3, 0.0]);
        let res = oscillator_oracle(&inp.omega, inp.u, &inp.x, &OracleGrid::default()).unwrap();
        let closed = mehler_kernel(&inp).unwrap()[(0, 0)].re;
        assert!((res.value - closed).abs() < 1e-6, "{} vs {closed}", res.value);
    }

    #[test]
    fn coarse_oracle_is_refused() {
        let grid = OracleGrid { points: 64, half_width: 9.6, base_steps: 1, tolerance: 1e-12 };
        let err = oscillator_oracle(&[vec![0.0, 3.0], vec![-3.0, 0.0]], 1.0, &[0.3, 0.0], &grid).unwrap_err();
        assert!(matches!(err, Error::OracleTooCoarse { .. }));
    }
}
