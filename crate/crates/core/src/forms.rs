//! Differential forms with k×k matrix coefficients on flat tori, the Â
//! series, and the closed-form variation of the reduced eta invariant.
//!
//! A form is stored as a map `(index set, Fourier mode) → matrix`, where the
//! index set is a bitmask of increasing coordinate indices, so
//! `ω = Σ c[I, m] e^{i m·x} dx^I`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauge::{curvature, CurvatureForm, GaugeField};
use crate::linalg::{CMatrix, I, ONE};

type Key = (u32, Vec<i32>);

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixForm {
    n: usize,
    rank: usize,
    terms: BTreeMap<Key, CMatrix>,
}

/// Sign of `dx^I ∧ dx^J` relative to `dx^{I∪J}` in increasing order.
fn shuffle_sign(left: u32, right: u32) -> f64 {
    let mut inversions = 0;
    let mut l = left;
    while l != 0 {
        let i = l.trailing_zeros();
        inversions += (right & ((1u32 << i) - 1)).count_ones();
        l &= l - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn add_modes(a: &[i32], b: &[i32]) -> Vec<i32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl MatrixForm {
    pub fn zero(n: usize, rank: usize) -> Self {
        Self { n, rank, terms: BTreeMap::new() }
    }

    /// Constant 0-form `c`.
    pub fn constant(n: usize, c: CMatrix) -> Self {
        let rank = c.rows();
        let mut f = Self::zero(n, rank);
        f.add_term(0, vec![0; n], c);
        f
    }

    /// The identity 0-form.
    pub fn one(n: usize, rank: usize) -> Self {
        Self::constant(n, CMatrix::identity(rank))
    }

    /// `c · e^{i m·x} dx^{i_1} ∧ … ∧ dx^{i_p}` for zero-based `indices` in any
    /// order (the sign of the reordering is applied).
    pub fn monomial(n: usize, indices: &[usize], mode: Vec<i32>, c: CMatrix) -> Self {
        let rank = c.rows();
        let mut f = Self::zero(n, rank);
        let mut mask = 0u32;
        let mut sign = 1.0;
        for &i in indices {
            let bit = 1u32 << i;
            if mask & bit != 0 {
                return f;
            }
            sign *= shuffle_sign(mask, bit);
            mask |= bit;
        }
        f.add_term(mask, mode, c.scale_real(sign));
        f
    }

    /// `Σ_j a_j dx^j`, scaled by `factor`.
    pub fn from_gauge(a: &GaugeField, factor: f64) -> Self {
        let mut f = Self::zero(a.dim(), a.rank());
        for (j, m, c) in a.coefficients() {
            f.add_term(1 << j, m.to_vec(), c.scale_real(factor));
        }
        f
    }

    /// `Σ_{i<j} F(∂_i, ∂_j) dx^i ∧ dx^j`.
    pub fn from_curvature(fc: &CurvatureForm) -> Self {
        let mut f = Self::zero(fc.n, fc.rank);
        for ((i, j), m, c) in fc.coefficients() {
            f.add_term((1 << i) | (1 << j), m.to_vec(), c.clone());
        }
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &[i32], &CMatrix)> {
        self.terms.iter().map(|((mask, m), c)| (*mask, m.as_slice(), c))
    }

    pub fn coefficient(&self, indices: &[usize], mode: &[i32]) -> Option<&CMatrix> {
        let mask = indices.iter().fold(0u32, |acc, &i| acc | (1 << i));
        self.terms.get(&(mask, mode.to_vec()))
    }

    fn add_term(&mut self, mask: u32, mode: Vec<i32>, c: CMatrix) {
        if mask.count_ones() as usize > self.n {
            return;
        }
        let key = (mask, mode);
        let sum = match self.terms.remove(&key) {
            Some(existing) => &existing + &c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(key, sum);
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.rank != other.rank {
            return Err(Error::IncompatibleForms(format!(
                "(n={}, k={}) vs (n={}, k={})",
                self.n, self.rank, other.n, other.rank
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for ((mask, m), c) in &other.terms {
            out.add_term(*mask, m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.n, self.rank);
        for ((mask, m), v) in &self.terms {
            out.add_term(*mask, m.clone(), v.scale(c));
        }
        out
    }

    /// Part of degree `p`.
    pub fn degree_part(&self, p: usize) -> Self {
        let mut out = Self::zero(self.n, self.rank);
        for ((mask, m), c) in &self.terms {
            if mask.count_ones() as usize == p {
                out.terms.insert((*mask, m.clone()), c.clone());
            }
        }
        out
    }

    /// Whether every term has even (or every term odd) degree.
    fn parity(&self) -> Option<usize> {
        let mut parity = None;
        for (mask, _) in self.terms.keys() {
            let p = mask.count_ones() as usize % 2;
            match parity {
                None => parity = Some(p),
                Some(q) if q != p => return None,
                _ => {}
            }
        }
        parity
    }

    /// Wedge product with matrix multiplication of coefficients; terms of
    /// degree above `n` vanish.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.n, self.rank);
        for ((ma, pa), ca) in &self.terms {
            for ((mb, pb), cb) in &other.terms {
                if ma & mb != 0 {
                    continue;
                }
                let sign = shuffle_sign(*ma, *mb);
                out.add_term(ma | mb, add_modes(pa, pb), (ca * cb).scale_real(sign));
            }
        }
        Ok(out)
    }

    /// Exterior derivative: `∂_j` acts on mode `m` as multiplication by `i m_j`.
    pub fn d(&self) -> Self {
        let mut out = Self::zero(self.n, self.rank);
        for ((mask, m), c) in &self.terms {
            for (j, &mj) in m.iter().enumerate() {
                let bit = 1u32 << j;
                if mj == 0 || mask & bit != 0 {
                    continue;
                }
                let sign = shuffle_sign(bit, *mask);
                out.add_term(mask | bit, m.clone(), c.scale(I * (f64::from(mj) * sign)));
            }
        }
        out
    }

    /// Fiber trace, giving a rank-one form.
    pub fn trace(&self) -> Self {
        let mut out = Self::zero(self.n, 1);
        for ((mask, m), c) in &self.terms {
            out.add_term(*mask, m.clone(), CMatrix::from_rows(&[vec![c.trace()]]));
        }
        out
    }

    /// Integral over the torus `(ℝ/2πℤ)^n` of the top-degree part: the zero
    /// mode of the `dx^1∧…∧dx^n` coefficient times `(2π)^n`.
    pub fn integrate(&self) -> CMatrix {
        let top = (1u32 << self.n) - 1;
        let vol = (2.0 * PI).powi(self.n as i32);
        match self.terms.get(&(top, vec![0; self.n])) {
            Some(c) => c.scale_real(vol),
            None => CMatrix::zeros(self.rank, self.rank),
        }
    }

    /// `ω` evaluated at a point, as `(mask, matrix)` pairs.
    pub fn eval(&self, x: &[f64]) -> BTreeMap<u32, CMatrix> {
        let mut out: BTreeMap<u32, CMatrix> = BTreeMap::new();
        for ((mask, m), c) in &self.terms {
            let arg: f64 = m.iter().zip(x).map(|(&mi, &xi)| f64::from(mi) * xi).sum();
            let term = c.scale(Complex64::from_polar(1.0, arg));
            let e = out.entry(*mask).or_insert_with(|| CMatrix::zeros(self.rank, self.rank));
            *e = &*e + &term;
        }
        out
    }
}

/// `Σ_{j≥0} F^{∧j}/j!` for an even form; the series terminates because
/// wedge powers beyond degree `n` vanish.
pub fn exp_form(f: &MatrixForm) -> Result<MatrixForm> {
    if let Some(1) = f.parity() {
        return Err(Error::OddDegree(1));
    }
    let mut total = MatrixForm::one(f.n, f.rank);
    let mut power = MatrixForm::one(f.n, f.rank);
    for j in 1..=f.n {
        power = power.wedge(f)?.scale(Complex64::new(1.0 / j as f64, 0.0));
        if power.is_zero() {
            break;
        }
        total = total.add(&power)?;
    }
    Ok(total)
}

/// Taylor coefficients of `log(sinh x / x) = Σ_{j≥1} c_j x^{2j}`,
/// `c_j = 2^{2j} B_{2j} / (2j (2j)!)`.
pub const LOG_SINHC_COEFFS: [f64; 4] = [1.0 / 6.0, -1.0 / 180.0, 1.0 / 2835.0, -1.0 / 37800.0];

/// `Â = det^{1/2}((Ω/4π) / sinh(Ω/4π)) = exp(-½ Σ_j c_j tr (Ω/4π)^{2j})` for a
/// tangent curvature `Ω` (an n×n matrix of 2-forms), truncated above
/// `max_degree`.
pub fn a_hat(omega: &MatrixForm, max_degree: usize) -> Result<MatrixForm> {
    let n = omega.n;
    if omega.is_zero() {
        return Ok(MatrixForm::one(n, 1));
    }
    for (mask, _) in omega.terms.keys() {
        let deg = mask.count_ones() as usize;
        if deg % 2 == 1 {
            return Err(Error::OddDegree(deg));
        }
    }
    let x = omega.scale(Complex64::new(1.0 / (4.0 * PI), 0.0));
    let x2 = x.wedge(&x)?;
    let mut power = x2.clone();
    let mut log_sum = MatrixForm::zero(n, 1);
    for &c in LOG_SINHC_COEFFS.iter() {
        if power.is_zero() {
            break;
        }
        log_sum = log_sum.add(&power.trace().scale(Complex64::new(-0.5 * c, 0.0)))?;
        power = power.wedge(&x2)?;
    }
    let mut out = exp_form(&log_sum)?;
    out.terms.retain(|(mask, _), _| mask.count_ones() as usize <= max_degree);
    Ok(out)
}

/// The constant `(1/(2πi))^{(n+1)/2}`.
pub fn normalization(n: usize) -> Complex64 {
    (ONE / (I * (2.0 * PI))).powi(((n + 1) / 2) as i32)
}

fn require_real(z: Complex64) -> Result<f64> {
    if z.im.abs() > 1e-9 * (1.0 + z.re.abs()) {
        return Err(Error::NormalizationInconsistency { residue: z.im });
    }
    Ok(z.re)
}

/// `(1/(2πi))^{(n+1)/2} ∫_M Â ∧ tr[â ∧ exp F_s]` on a flat model, `â = r·a`.
pub fn variation_integrand(a: &GaugeField, r: f64, s: f64) -> Result<f64> {
    let n = a.dim();
    let a_form = MatrixForm::from_gauge(a, r);
    let f = MatrixForm::from_curvature(&curvature(a, s, r));
    let inner = a_form.wedge(&exp_form(&f)?)?.trace();
    let genus = a_hat(&MatrixForm::zero(n, n), n)?;
    let total = genus.wedge(&inner)?.integrate()[(0, 0)];
    require_real(normalization(n) * total)
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for i in 0..order {
        // Initial guess for the i-th root of P_order on [-1, 1].
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 0 { 1.0 } else { p1 };
            let pm1 = if order == 0 { 0.0 } else { p0 };
            dp = order as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionResult {
    pub predictor: f64,
    /// `(s, weight, integrand)` at each quadrature node.
    pub samples: Vec<(f64, f64, f64)>,
    /// Leading term in `r` as displayed in the standard asymptotic formula.
    pub leading_term: f64,
    /// Leading term with the combinatorial factor obtained by integrating
    /// the top power of `F_s` in `s`.
    pub leading_term_derived: f64,
    /// The two leading-term forms disagree.
    pub leading_term_mismatch: bool,
    /// `(1/(2πi))^{(n+1)/2}` resolved to a complex number.
    pub normalization: Complex64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Predictor `∫₀¹ variation_integrand(a, r, s) ds` by Gauss–Legendre.
pub fn predict_flow(a: &GaugeField, r: f64, order: usize) -> Result<PredictionResult> {
    let n = a.dim();
    let order = order.max((n + 2) / 2);
    let mut samples = Vec::with_capacity(order);
    let mut predictor = 0.0;
    for (s, w) in gauss_legendre(order) {
        let v = variation_integrand(a, r, s)?;
        predictor += w * v;
        samples.push((s, w, v));
    }
    let half = (n + 1) / 2;
    let norm = normalization(n);
    let a_form = MatrixForm::from_gauge(a, 1.0);
    let (leading_term, leading_term_derived) = if a.rank() == 1 {
        let da = a_form.d();
        let mut integrand = a_form.clone();
        for _ in 0..(n - 1) / 2 {
            integrand = integrand.wedge(&da)?;
        }
        let integral = integrand.integrate()[(0, 0)];
        let value = require_real(norm * integral * (r.powi(half as i32) / factorial(half)))?;
        (value, value)
    } else {
        let mut power = a_form.clone();
        for _ in 1..n {
            power = power.wedge(&a_form)?;
        }
        let integral = power.trace().integrate()[(0, 0)];
        let displayed = require_real(norm * integral * (r.powi(n as i32) / factorial(half)))?;
        let derived = require_real(norm * integral * (r.powi(n as i32) / (n as f64 * factorial((n - 1) / 2))))?;
        (displayed, derived)
    };
    let mismatch = (leading_term - leading_term_derived).abs() > 1e-9 * (1.0 + leading_term_derived.abs());
    Ok(PredictionResult {
        predictor,
        samples,
        leading_term,
        leading_term_derived,
        leading_term_mismatch: mismatch,
        normalization: norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{sample_grid, ManifoldModel};
    use crate::linalg::ZERO;

    fn scalar(z: Complex64) -> CMatrix {
        CMatrix::from_rows(&[vec![z]])
    }

    fn sine_field() -> GaugeField {
        GaugeField::trivial(ManifoldModel::Torus3, 1)
            .unwrap()
            .with_sine(1, vec![1, 0, 0], scalar(I))
            .unwrap()
    }

    fn helical_field() -> GaugeField {
        sine_field().with_cosine(2, vec![1, 0, 0], scalar(I)).unwrap()
    }

    #[test]
    fn basis_wedge() {
        let one = scalar(ONE);
        let dx1 = MatrixForm::monomial(3, &[0], vec![0; 3], one.clone());
        let dx2 = MatrixForm::monomial(3, &[1], vec![0; 3], one.clone());
        let w = dx1.wedge(&dx2).unwrap();
        assert_eq!(w.coefficient(&[0, 1], &[0, 0, 0]).unwrap()[(0, 0)], ONE);
        let w = dx2.wedge(&dx1).unwrap();
        assert_eq!(w.coefficient(&[0, 1], &[0, 0, 0]).unwrap()[(0, 0)], -ONE);
        assert!(dx1.wedge(&dx1).unwrap().is_zero());
    }

    #[test]
    fn abelian_one_form_squares_to_zero() {
        let a = MatrixForm::from_gauge(&sine_field(), 1.0);
        assert!(a.wedge(&a).unwrap().is_zero());
    }

    #[test]
    fn constant_nonabelian_square_is_commutator() {
        let a1 = CMatrix::from_rows(&[vec![ZERO, I], vec![I, ZERO]]);
        let a2 = CMatrix::from_rows(&[vec![ZERO, ONE], vec![-ONE, ZERO]]);
        let field = GaugeField::constant(ManifoldModel::Torus3, vec![a1.clone(), a2.clone(), CMatrix::zeros(2, 2)]).unwrap();
        let a = MatrixForm::from_gauge(&field, 1.0);
        let sq = a.wedge(&a).unwrap();
        let c = sq.coefficient(&[0, 1], &[0, 0, 0]).unwrap();
        assert!((c - &a1.commutator(&a2)).max_abs() < 1e-15);
    }

    #[test]
    fn exterior_derivative_examples() {
        let a = MatrixForm::from_gauge(&sine_field(), 1.0);
        let da = a.d();
        // i cos x¹ dx¹∧dx²: coefficient 1/2 · i at modes ±1.
        for m in [[1, 0, 0], [-1, 0, 0]] {
            let c = da.coefficient(&[0, 1], &m).unwrap()[(0, 0)];
            assert!((c - I * 0.5).norm() < 1e-15);
        }
        assert!(da.d().is_zero());
        let konst = MatrixForm::constant(3, scalar(I * 2.0));
        assert!(konst.d().is_zero());
    }

    #[test]
    fn exp_form_is_finite() {
        let f = MatrixForm::from_curvature(&curvature(&sine_field(), 0.5, 3.0));
        let e = exp_form(&f).unwrap();
        assert_eq!(e, MatrixForm::one(3, 1).add(&f).unwrap());
        assert_eq!(exp_form(&MatrixForm::zero(3, 1)).unwrap(), MatrixForm::one(3, 1));

        let (c1, c2) = (Complex64::new(0.7, 0.1), Complex64::new(-1.3, 0.4));
        let f = MatrixForm::monomial(5, &[0, 1], vec![0; 5], scalar(c1))
            .add(&MatrixForm::monomial(5, &[2, 3], vec![0; 5], scalar(c2)))
            .unwrap();
        let e = exp_form(&f).unwrap();
        let top = e.coefficient(&[0, 1, 2, 3], &[0; 5]).unwrap()[(0, 0)];
        assert!((top - c1 * c2).norm() < 1e-15);
    }

    /// Coefficients of `log(sinh x / x)` in powers of `x²`, from the series of
    /// `sinh x / x` and `log(1 + u)` by plain power-series arithmetic.
    fn log_sinhc_oracle(terms: usize) -> Vec<f64> {
        let mut u = vec![0.0; terms + 1];
        let mut fact = 1.0;
        for (k, slot) in u.iter_mut().enumerate().skip(1) {
            fact *= ((2 * k) * (2 * k + 1)) as f64;
            *slot = 1.0 / fact;
        }
        let mul = |a: &[f64], b: &[f64]| {
            let mut c = vec![0.0; terms + 1];
            for i in 0..=terms {
                for j in 0..=terms - i {
                    c[i + j] += a[i] * b[j];
                }
            }
            c
        };
        let mut out = vec![0.0; terms + 1];
        let mut power = u.clone();
        for p in 1..=terms {
            let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
            for k in 0..=terms {
                out[k] += sign * power[k] / p as f64;
            }
            power = mul(&power, &u);
        }
        out[1..].to_vec()
    }

    #[test]
    fn log_sinhc_coefficients_match_series() {
        let oracle = log_sinhc_oracle(4);
        for (c, o) in LOG_SINHC_COEFFS.iter().zip(&oracle) {
            assert!((c - o).abs() < 1e-12 * o.abs().max(1e-3));
        }
    }

    #[test]
    fn a_hat_flat_and_degree_four() {
        assert_eq!(a_hat(&MatrixForm::zero(3, 3), 3).unwrap(), MatrixForm::one(3, 1));
        // Ω_12 = -Ω_21 = θ dx¹∧dx² + φ dx³∧dx⁴ in n = 5.
        let (theta, phi) = (0.8, -1.7);
        let n = 5;
        let mut omega = MatrixForm::zero(n, n);
        let mut put = |row: usize, col: usize, idx: [usize; 2], v: f64| {
            let mut c = CMatrix::zeros(n, n);
            c[(row, col)] = Complex64::new(v, 0.0);
            omega = omega.add(&MatrixForm::monomial(n, &idx, vec![0; n], c)).unwrap();
        };
        put(0, 1, [0, 1], theta);
        put(1, 0, [0, 1], -theta);
        put(0, 1, [2, 3], phi);
        put(1, 0, [2, 3], -phi);
        let ah = a_hat(&omega, n).unwrap();
        // Degree-4 part: -tr(Ω∧Ω)/(192π²); tr(Ω∧Ω) = -4θφ dx¹²³⁴.
        let expect = 4.0 * theta * phi / (192.0 * PI * PI);
        let got = ah.coefficient(&[0, 1, 2, 3], &[0; 5]).unwrap()[(0, 0)];
        assert!((got.re - expect).abs() < 1e-15 && got.im.abs() < 1e-15);
        assert!(a_hat(&omega, 3).unwrap().degree_part(4).is_zero());
        let odd = MatrixForm::monomial(5, &[0], vec![0; 5], CMatrix::identity(5));
        assert!(matches!(a_hat(&odd, 5), Err(Error::OddDegree(1))));
    }

    #[test]
    fn circle_integrand_is_r_alpha() {
        let a = GaugeField::constant_abelian(ManifoldModel::Circle, &[0.3]).unwrap();
        for s in [0.0, 0.4, 1.0] {
            assert!((variation_integrand(&a, 10.0, s).unwrap() - 3.0).abs() < 1e-12);
        }
        let p = predict_flow(&a, 10.0, 1).unwrap();
        assert!((p.predictor - 3.0).abs() < 1e-12);
        assert!((p.leading_term - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sine_instance_predicts_zero() {
        let p = predict_flow(&sine_field(), 8.0, 2).unwrap();
        assert_eq!(p.predictor, 0.0);
    }

    #[test]
    fn helical_integrand_matches_real_space_quadrature() {
        let a = helical_field();
        let (r, s) = (5.0, 0.7);
        let got = variation_integrand(&a, r, s).unwrap();
        // Midpoint rule for ∫ â ∧ F_s on a 64³ grid; F_s = s r da for k = 1.
        let pts = 64;
        let h = 2.0 * PI / pts as f64;
        let mut acc = ZERO;
        for x in sample_grid(3, pts) {
            let x: Vec<f64> = x.iter().map(|v| v + 0.5 * h).collect();
            let av = a.eval_all(&x);
            let f = curvature(&a, s, r);
            let f12 = f.eval(0, 1, &x)[(0, 0)];
            let f13 = f.eval(0, 2, &x)[(0, 0)];
            let f23 = f.eval(1, 2, &x)[(0, 0)];
            // (a ∧ F)_{123} = a_1 F_23 - a_2 F_13 + a_3 F_12.
            acc += (av[0][(0, 0)] * f23 - av[1][(0, 0)] * f13 + av[2][(0, 0)] * f12) * r;
        }
        let oracle = (normalization(3) * acc * h.powi(3)).re;
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - PI * r * r * 2.0 * s).abs() < 1e-9);
        let p = predict_flow(&a, r, 2).unwrap();
        assert!((p.predictor - PI * r * r).abs() < 1e-9);
        assert!((p.leading_term - PI * r * r).abs() < 1e-9);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for order in 1..8 {
            let q = gauss_legendre(order);
            assert!((q.iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs() < 1e-14);
            for deg in 0..(2 * order) {
                let got: f64 = q.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "order {order} deg {deg}");
            }
        }
    }

    #[test]
    fn nonabelian_leading_term_factor_is_flagged() {
        let a1 = CMatrix::from_rows(&[vec![ZERO, I], vec![I, ZERO]]).scale_real(0.5);
        let a2 = CMatrix::from_rows(&[vec![ZERO, ONE], vec![-ONE, ZERO]]).scale_real(0.5);
        let a3 = CMatrix::from_rows(&[vec![I, ZERO], vec![ZERO, -I]]).scale_real(0.5);
        let field = GaugeField::constant(ManifoldModel::Torus3, vec![a1, a2, a3]).unwrap();
        let r = 6.0;
        let p = predict_flow(&field, r, 3).unwrap();
        // Constant field: F_s = s²r² a∧a, so the predictor is pure r³ and
        // equals the derived leading term.
        assert!((p.predictor - p.leading_term_derived).abs() < 1e-9 * (1.0 + p.predictor.abs()));
        assert!(p.predictor.abs() > 1e-3);
        assert!(p.leading_term_mismatch);
        assert!((p.leading_term / p.leading_term_derived - 1.5).abs() < 1e-12);
    }
}
