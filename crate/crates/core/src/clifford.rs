//! Complex Clifford algebra `Cl(n)`, `n` odd, as concrete spinor matrices.
//!
//! Sign convention: `c(v)^2 = -|v|^2`. Generators are `c(e_j) = -i γ_j` for a
//! Hermitian gamma family, so each `c(e_j)` is skew-Hermitian and
//! `Σ c(e_j) ∂_j` is Hermitian on periodic functions. The orientation is fixed
//! so that `tr[c(e_1)…c(e_n)] = 2^((n-1)/2) (-i)^((n+1)/2)`.
//!
//! [`ExteriorRep`] models spinors as `Λ*(R^n)^*` with `c(e_i) = ε(e^i) - ι(e_i)`,
//! which is the picture in which the rescaled Clifford action degenerates to
//! exterior multiplication.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, I, ONE, ZERO};

pub const MAX_DIMENSION: usize = 7;

#[derive(Clone, Debug)]
pub struct CliffordRep {
    n: usize,
    generators: Vec<CMatrix>,
}

fn pauli() -> [CMatrix; 3] {
    let s1 = CMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]);
    let s2 = CMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]);
    let s3 = CMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]);
    [s1, s2, s3]
}

/// Expected `tr[c(e_1)…c(e_n)]`.
fn top_trace(n: usize) -> Complex64 {
    let dim = (1usize << ((n - 1) / 2)) as f64;
    (-I).powu(((n + 1) / 2) as u32) * dim
}

/// Builds generators of `Cl(n)` acting on `C^(2^((n-1)/2))`.
pub fn build_generators(n: usize) -> Result<CliffordRep> {
    if n % 2 == 0 {
        return Err(Error::EvenDimension(n as i64));
    }
    if n > MAX_DIMENSION {
        return Err(Error::DimensionOutOfRange(n));
    }
    // Hermitian, pairwise anticommuting, squaring to one.
    let mut gammas = vec![CMatrix::identity(1)];
    let [s1, s2, s3] = pauli();
    while gammas.len() < n {
        let d = gammas[0].rows();
        let id = CMatrix::identity(d);
        let mut next: Vec<CMatrix> = gammas.iter().map(|g| g.kron(&s1)).collect();
        next.push(id.kron(&s2));
        next.push(id.kron(&s3));
        gammas = next;
    }
    let mut generators: Vec<CMatrix> = gammas.iter().map(|g| g.scale(-I)).collect();

    let product = generators
        .iter()
        .skip(1)
        .fold(generators[0].clone(), |acc, g| &acc * g);
    let target = top_trace(n);
    if (product.trace() - target).norm() > 1e-12 {
        let last = generators.last_mut().expect("n >= 1");
        *last = last.scale_real(-1.0);
    }
    Ok(CliffordRep { n, generators })
}

impl CliffordRep {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim_spinor(&self) -> usize {
        1 << ((self.n - 1) / 2)
    }

    /// `c(e_j)` for a zero-based direction `j`.
    pub fn generator(&self, j: usize) -> &CMatrix {
        &self.generators[j]
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// Largest entry of `c_i c_j + c_j c_i + 2 δ_ij` over all pairs.
    pub fn anticommutator_residual(&self) -> f64 {
        let d = self.dim_spinor();
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let mut ac = self.generators[i].anticommutator(&self.generators[j]);
                if i == j {
                    for k in 0..d {
                        ac[(k, k)] += Complex64::new(2.0, 0.0);
                    }
                }
                worst = worst.max(ac.max_abs());
            }
        }
        worst
    }

    /// Product `c(e_{i1})…c(e_{ik})` for a one-based multi-index.
    pub fn monomial(&self, index: &[usize]) -> Result<CMatrix> {
        validate_multi_index(self.n, index)?;
        Ok(index
            .iter()
            .fold(CMatrix::identity(self.dim_spinor()), |acc, &i| &acc * &self.generators[i - 1]))
    }
}

fn validate_multi_index(n: usize, index: &[usize]) -> Result<()> {
    let bad = |reason| Error::InvalidMultiIndex {
        index: index.to_vec(),
        n,
        reason,
    };
    if index.iter().any(|&i| i == 0 || i > n) {
        return Err(bad("index out of range 1..=n"));
    }
    if index.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("indices must be strictly increasing"));
    }
    Ok(())
}

/// `tr[c(e_{i1})…c(e_{ik})]` computed from the matrices.
pub fn monomial_trace(rep: &CliffordRep, index: &[usize]) -> Result<Complex64> {
    Ok(rep.monomial(index)?.trace())
}

/// Closed-form trace rule for odd `n`: `2^((n-1)/2)` for the empty monomial,
/// `2^((n-1)/2)(-i)^((n+1)/2)` for the top monomial, zero otherwise.
pub fn monomial_trace_rule(n: usize, index: &[usize]) -> Result<Complex64> {
    if n % 2 == 0 {
        return Err(Error::EvenDimension(n as i64));
    }
    validate_multi_index(n, index)?;
    let dim = (1usize << ((n - 1) / 2)) as f64;
    Ok(if index.is_empty() {
        Complex64::new(dim, 0.0)
    } else if index.len() == n {
        top_trace(n)
    } else {
        ZERO
    })
}

/// Spinors as the exterior algebra `Λ*(R^n)^*`, basis indexed by bitmask.
#[derive(Clone, Debug)]
pub struct ExteriorRep {
    n: usize,
    wedge: Vec<CMatrix>,
    contract: Vec<CMatrix>,
}

impl ExteriorRep {
    pub fn new(n: usize) -> Result<Self> {
        if n % 2 == 0 {
            return Err(Error::EvenDimension(n as i64));
        }
        if n > MAX_DIMENSION {
            return Err(Error::DimensionOutOfRange(n));
        }
        let dim = 1usize << n;
        let mut wedge = Vec::with_capacity(n);
        let mut contract = Vec::with_capacity(n);
        for i in 0..n {
            let bit = 1usize << i;
            let mut e = CMatrix::zeros(dim, dim);
            let mut c = CMatrix::zeros(dim, dim);
            for mask in 0..dim {
                let sign = if (mask & (bit - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                if mask & bit == 0 {
                    e[(mask | bit, mask)] = Complex64::new(sign, 0.0);
                } else {
                    c[(mask & !bit, mask)] = Complex64::new(sign, 0.0);
                }
            }
            wedge.push(e);
            contract.push(c);
        }
        Ok(Self { n, wedge, contract })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// `ε(e^i)`, zero-based.
    pub fn exterior(&self, i: usize) -> &CMatrix {
        &self.wedge[i]
    }

    /// `ι(e_i)`, zero-based.
    pub fn contraction(&self, i: usize) -> &CMatrix {
        &self.contract[i]
    }

    /// `c(e_i) = ε(e^i) - ι(e_i)`.
    pub fn clifford_action(&self, i: usize) -> CMatrix {
        &self.wedge[i] - &self.contract[i]
    }

    /// Rescaled action `t^(-1/2) ε(e^i) - t^(1/2) ι(e_i)`.
    pub fn rescaled_action(&self, i: usize, t: f64) -> CMatrix {
        &self.wedge[i].scale_real(t.powf(-0.5)) - &self.contract[i].scale_real(t.sqrt())
    }

    /// `t^(n/2) c_t(e_{i1})…c_t(e_{ik})` for a one-based increasing index.
    pub fn scaled_rescaled_monomial(&self, index: &[usize], t: f64) -> Result<CMatrix> {
        validate_multi_index(self.n, index)?;
        let prod = index
            .iter()
            .fold(CMatrix::identity(self.dim()), |acc, &i| &acc * &self.rescaled_action(i - 1, t));
        Ok(prod.scale_real(t.powf(self.n as f64 / 2.0)))
    }

    /// `ε(e^1 ∧ … ∧ e^n)`.
    pub fn top_exterior(&self) -> CMatrix {
        self.wedge
            .iter()
            .fold(CMatrix::identity(self.dim()), |acc, e| &acc * e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_multi_indices(n: usize) -> Vec<Vec<usize>> {
        (0..(1usize << n))
            .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect())
            .collect()
    }

    #[test]
    fn circle_generator_is_minus_i() {
        let rep = build_generators(1).unwrap();
        assert_eq!(rep.generator(0)[(0, 0)], Complex64::new(0.0, -1.0));
        let sq = rep.generator(0) * rep.generator(0);
        assert_eq!(sq[(0, 0)], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn anticommutation_is_exact() {
        for n in [1, 3, 5, 7] {
            let rep = build_generators(n).unwrap();
            assert_eq!(rep.dim_spinor(), 1 << ((n - 1) / 2));
            assert_eq!(rep.anticommutator_residual(), 0.0, "n = {n}");
            for g in rep.generators() {
                let skew = g + &g.adjoint();
                assert!(skew.is_zero(), "generator not skew-Hermitian for n = {n}");
            }
        }
    }

    #[test]
    fn even_and_zero_dimensions_rejected() {
        assert_eq!(build_generators(2).unwrap_err(), Error::EvenDimension(2));
        assert!(matches!(build_generators(0), Err(Error::EvenDimension(0))));
        assert!(build_generators(9).is_err());
        assert!(build_generators(4).unwrap_err().to_string().contains("dimension must be odd"));
    }

    #[test]
    fn named_trace_values() {
        let rep = build_generators(3).unwrap();
        assert_eq!(monomial_trace(&rep, &[]).unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(monomial_trace(&rep, &[1, 2, 3]).unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(monomial_trace(&rep, &[1, 2]).unwrap(), ZERO);
    }

    #[test]
    fn traces_match_rule_exhaustively() {
        for n in [1, 3, 5, 7] {
            let rep = build_generators(n).unwrap();
            for idx in all_multi_indices(n) {
                let got = monomial_trace(&rep, &idx).unwrap();
                let want = monomial_trace_rule(n, &idx).unwrap();
                assert_eq!(got, want, "n = {n}, I = {idx:?}");
            }
        }
    }

    #[test]
    fn malformed_multi_indices_rejected() {
        let rep = build_generators(3).unwrap();
        assert!(monomial_trace(&rep, &[1, 1]).is_err());
        assert!(monomial_trace(&rep, &[2, 1]).is_err());
        assert!(monomial_trace(&rep, &[0]).is_err());
        assert!(monomial_trace(&rep, &[4]).is_err());
    }

    #[test]
    fn exterior_model_squares_to_minus_one() {
        for n in [1, 3, 5] {
            let ext = ExteriorRep::new(n).unwrap();
            let minus_id = CMatrix::identity(ext.dim()).scale_real(-1.0);
            for i in 0..n {
                let c = ext.clifford_action(i);
                assert_eq!(&c * &c, minus_id, "n = {n}, i = {i}");
                for j in 0..i {
                    assert!(c.anticommutator(&ext.clifford_action(j)).is_zero());
                }
            }
        }
    }

    #[test]
    fn rescaled_top_monomial_limits_to_exterior_product() {
        let n = 3;
        let ext = ExteriorRep::new(n).unwrap();
        let top = ext.top_exterior();
        let mut last_err = f64::INFINITY;
        for t in [1e-2, 1e-4, 1e-6] {
            let m = ext.scaled_rescaled_monomial(&[1, 2, 3], t).unwrap();
            let err = (&m - &top).max_abs();
            assert!(err < last_err);
            last_err = err;
            let lower = ext.scaled_rescaled_monomial(&[1, 2], t).unwrap();
            assert!(lower.max_abs() <= 2.0 * t.sqrt() + 1e-15);
        }
        assert!(last_err < 1e-5);
    }
}
