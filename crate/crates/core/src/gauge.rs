//! Flat model manifolds, u(k)-valued gauge 1-forms given by finite Fourier
//! data, and their curvature.
//!
//! Coordinates have period 2π, so Fourier modes are integer vectors. A gauge
//! field stores `â[j, m]` (a k×k matrix per direction `j` and mode `m`) with
//! `a_j(x) = Σ_m â[j, m] e^{i m·x}`. Directions are zero-based in the API and
//! one-based in the text format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ManifoldModel {
    /// Circle of circumference 2π.
    Circle,
    /// Flat torus (ℝ/2πℤ)³.
    Torus3,
}

impl ManifoldModel {
    pub fn dim(self) -> usize {
        match self {
            ManifoldModel::Circle => 1,
            ManifoldModel::Torus3 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ManifoldModel::Circle => "circle",
            ManifoldModel::Torus3 => "torus3",
        }
    }

    /// Riemannian volume, `(2π)^n`.
    pub fn volume(self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.dim() as i32)
    }
}

impl FromStr for ManifoldModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circle" | "s1" => Ok(ManifoldModel::Circle),
            "torus3" | "t3" => Ok(ManifoldModel::Torus3),
            other => Err(Error::Unsupported(format!("unknown manifold model '{other}'"))),
        }
    }
}

/// All integer vectors in `[-cutoff, cutoff]^n`, lexicographic with the first
/// component most significant.
pub fn lattice_cube(n: usize, cutoff: usize) -> Vec<Vec<i32>> {
    let c = cutoff as i32;
    let side = 2 * cutoff + 1;
    let total = side.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut m = vec![0i32; n];
            for slot in m.iter_mut().rev() {
                *slot = (idx % side) as i32 - c;
                idx /= side;
            }
            m
        })
        .collect()
}

/// Uniform sample points `2π·(i_1, …, i_n)/points` of the torus.
pub fn sample_grid(n: usize, points: usize) -> Vec<Vec<f64>> {
    let h = 2.0 * std::f64::consts::PI / points as f64;
    let total = points.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; n];
            for slot in x.iter_mut().rev() {
                *slot = (idx % points) as f64 * h;
                idx /= points;
            }
            x
        })
        .collect()
}

fn mode_inf_norm(m: &[i32]) -> usize {
    m.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0)
}

fn phase(m: &[i32], x: &[f64]) -> Complex64 {
    let arg: f64 = m.iter().zip(x).map(|(&mi, &xi)| f64::from(mi) * xi).sum();
    Complex64::from_polar(1.0, arg)
}

const REALITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeField {
    model: ManifoldModel,
    rank: usize,
    coeffs: BTreeMap<(usize, Vec<i32>), CMatrix>,
}

impl GaugeField {
    /// Builds a field from `(direction, mode, coefficient)` entries.
    /// Repeated `(direction, mode)` keys are summed.
    pub fn new(
        model: ManifoldModel,
        rank: usize,
        entries: impl IntoIterator<Item = (usize, Vec<i32>, CMatrix)>,
    ) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidGauge("bundle rank must be at least 1".into()));
        }
        let n = model.dim();
        let mut coeffs: BTreeMap<(usize, Vec<i32>), CMatrix> = BTreeMap::new();
        for (j, m, c) in entries {
            if j >= n {
                return Err(Error::InvalidGauge(format!("direction {} out of range 1..={n}", j + 1)));
            }
            if m.len() != n {
                return Err(Error::InvalidGauge(format!("mode {m:?} has length {}, expected {n}", m.len())));
            }
            if c.rows() != rank || c.cols() != rank {
                return Err(Error::RankMismatch { expected: rank, found: c.rows().max(c.cols()) });
            }
            match coeffs.get_mut(&(j, m.clone())) {
                Some(existing) => *existing = &*existing + &c,
                None => {
                    coeffs.insert((j, m), c);
                }
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        let field = Self { model, rank, coeffs };
        field.check_reality()?;
        Ok(field)
    }

    /// Zero connection.
    pub fn trivial(model: ManifoldModel, rank: usize) -> Result<Self> {
        Self::new(model, rank, std::iter::empty())
    }

    /// Constant abelian field `a = i Σ_j α_j dx^j` of rank one.
    pub fn constant_abelian(model: ManifoldModel, alphas: &[f64]) -> Result<Self> {
        if alphas.len() != model.dim() {
            return Err(Error::InvalidGauge(format!(
                "expected {} constant components, got {}",
                model.dim(),
                alphas.len()
            )));
        }
        let zero = vec![0; model.dim()];
        Self::new(
            model,
            1,
            alphas
                .iter()
                .enumerate()
                .map(|(j, &al)| (j, zero.clone(), CMatrix::from_rows(&[vec![I * al]]))),
        )
    }

    /// Constant field with the given skew-Hermitian components.
    pub fn constant(model: ManifoldModel, components: Vec<CMatrix>) -> Result<Self> {
        if components.len() != model.dim() {
            return Err(Error::InvalidGauge(format!(
                "expected {} constant components, got {}",
                model.dim(),
                components.len()
            )));
        }
        let rank = components[0].rows();
        let zero = vec![0; model.dim()];
        Self::new(model, rank, components.into_iter().enumerate().map(|(j, c)| (j, zero.clone(), c)))
    }

    pub fn model(&self) -> ManifoldModel {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (usize, &[i32], &CMatrix)> {
        self.coeffs.iter().map(|((j, m), c)| (*j, m.as_slice(), c))
    }

    pub fn coefficient(&self, j: usize, m: &[i32]) -> Option<&CMatrix> {
        self.coeffs.get(&(j, m.to_vec()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `‖m‖_∞` in the support.
    pub fn mode_radius(&self) -> usize {
        self.coeffs.keys().map(|(_, m)| mode_inf_norm(m)).max().unwrap_or(0)
    }

    /// Whether every mode in the support has a zero component along `dir`.
    pub fn conserves_momentum(&self, dir: usize) -> bool {
        self.coeffs.keys().all(|(_, m)| m[dir] == 0)
    }

    /// Whether any coefficient lives on `dx^dir`.
    pub fn has_direction(&self, dir: usize) -> bool {
        self.coeffs.keys().any(|(j, _)| *j == dir)
    }

    /// Adds `A·sin(wave·x) dx^dir`: `A/(2i)` at `wave`, `-A/(2i)` at `-wave`.
    pub fn with_sine(self, dir: usize, wave: Vec<i32>, amplitude: CMatrix) -> Result<Self> {
        let half = Complex64::new(0.0, -0.5);
        let neg = wave.iter().map(|v| -v).collect();
        self.with_terms([(dir, wave, amplitude.scale(half)), (dir, neg, amplitude.scale(-half))])
    }

    /// Adds `A·cos(wave·x) dx^dir`.
    pub fn with_cosine(self, dir: usize, wave: Vec<i32>, amplitude: CMatrix) -> Result<Self> {
        let neg: Vec<i32> = wave.iter().map(|v| -v).collect();
        if neg == wave {
            return self.with_terms([(dir, wave, amplitude)]);
        }
        let half = amplitude.scale_real(0.5);
        self.with_terms([(dir, wave, half.clone()), (dir, neg, half)])
    }

    fn with_terms(self, terms: impl IntoIterator<Item = (usize, Vec<i32>, CMatrix)>) -> Result<Self> {
        let model = self.model;
        let rank = self.rank;
        let existing = self.coeffs.into_iter().map(|((j, m), c)| (j, m, c));
        Self::new(model, rank, existing.chain(terms))
    }

    fn check_reality(&self) -> Result<()> {
        for ((j, m), c) in &self.coeffs {
            let neg: Vec<i32> = m.iter().map(|v| -v).collect();
            let partner = self.coeffs.get(&(*j, neg));
            let residual = match partner {
                Some(p) => (p + &c.adjoint()).max_abs(),
                None => c.max_abs(),
            };
            if residual > REALITY_TOLERANCE * (1.0 + c.max_abs()) {
                return Err(Error::RealityViolation { direction: j + 1, mode: m.clone(), residual });
            }
        }
        Ok(())
    }

    /// Pointwise value `a_j(x)`.
    pub fn eval(&self, j: usize, x: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.rank, self.rank);
        for ((jj, m), c) in &self.coeffs {
            if *jj == j {
                out = &out + &c.scale(phase(m, x));
            }
        }
        out
    }

    /// All components `a_1(x), …, a_n(x)`.
    pub fn eval_all(&self, x: &[f64]) -> Vec<CMatrix> {
        (0..self.dim()).map(|j| self.eval(j, x)).collect()
    }

    /// `max_j ‖a_j(x) + a_j(x)†‖_max`.
    pub fn skew_residual_at(&self, x: &[f64]) -> f64 {
        self.eval_all(x)
            .iter()
            .map(|a| (a + &a.adjoint()).max_abs())
            .fold(0.0, f64::max)
    }

    /// Conjugates every coefficient by a constant unitary: `â ↦ U† â U`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        let ud = u.adjoint();
        Self::new(
            self.model,
            self.rank,
            self.coeffs.iter().map(|((j, m), c)| (*j, m.clone(), &(&ud * c) * u)),
        )
    }

    /// Text serialization with exact float round-trip.
    ///
    /// ```text
    /// model torus3
    /// rank 1
    /// term 2 1 0 0
    /// 0.5 0.0
    /// ```
    /// Each `term j m_1 … m_n` is followed by `k` rows of `2k` numbers
    /// (real and imaginary parts interleaved).
    pub fn to_text(&self) -> String {
        let mut out = format!("model {}\nrank {}\n", self.model.name(), self.rank);
        for ((j, m), c) in &self.coeffs {
            let _ = write!(out, "term {}", j + 1);
            for v in m {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
            for r in 0..self.rank {
                let row: Vec<String> = c.row(r).iter().map(|z| format!("{:?} {:?}", z.re, z.im)).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, message: String| Error::Parse { line, message };

        let mut header = |key: &str| -> Result<(usize, String)> {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| parse_err(0, format!("missing '{key}' line")))?;
            let rest = l
                .strip_prefix(key)
                .ok_or_else(|| parse_err(ln, format!("expected '{key} …'")))?;
            Ok((ln, rest.trim().to_string()))
        };
        let (_, model) = header("model")?;
        let model: ManifoldModel = model.parse()?;
        let (ln, rank) = header("rank")?;
        let rank: usize = rank.parse().map_err(|e| parse_err(ln, format!("bad rank: {e}")))?;
        let n = model.dim();

        let mut entries = Vec::new();
        while let Some((ln, l)) = lines.next() {
            let rest = l
                .strip_prefix("term")
                .ok_or_else(|| parse_err(ln, "expected 'term j m_1 … m_n'".into()))?;
            let ints: Vec<i64> = rest
                .split_whitespace()
                .map(|t| t.parse::<i64>().map_err(|e| parse_err(ln, format!("bad integer '{t}': {e}"))))
                .collect::<Result<_>>()?;
            if ints.len() != n + 1 {
                return Err(parse_err(ln, format!("expected {} integers after 'term'", n + 1)));
            }
            if ints[0] < 1 || ints[0] as usize > n {
                return Err(parse_err(ln, format!("direction {} out of range 1..={n}", ints[0])));
            }
            let j = ints[0] as usize - 1;
            let m: Vec<i32> = ints[1..]
                .iter()
                .map(|&v| i32::try_from(v).map_err(|_| parse_err(ln, format!("mode component {v} too large"))))
                .collect::<Result<_>>()?;
            let mut c = CMatrix::zeros(rank, rank);
            for r in 0..rank {
                let (ln, row) = lines
                    .next()
                    .ok_or_else(|| parse_err(ln, format!("term truncated: missing matrix row {}", r + 1)))?;
                let vals: Vec<f64> = row
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| parse_err(ln, format!("bad number '{t}': {e}"))))
                    .collect::<Result<_>>()?;
                if vals.len() != 2 * rank {
                    return Err(parse_err(ln, format!("expected {} numbers, found {}", 2 * rank, vals.len())));
                }
                for col in 0..rank {
                    c[(r, col)] = Complex64::new(vals[2 * col], vals[2 * col + 1]);
                }
            }
            entries.push((j, m, c));
        }
        Self::new(model, rank, entries)
    }
}

/// Fourier coefficients of a curvature 2-form `F(∂_i, ∂_j)`, `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureForm {
    pub n: usize,
    pub rank: usize,
    pub s: f64,
    pub r: f64,
    coeffs: BTreeMap<((usize, usize), Vec<i32>), CMatrix>,
}

impl CurvatureForm {
    pub fn coefficient(&self, i: usize, j: usize, m: &[i32]) -> Option<&CMatrix> {
        self.coeffs.get(&((i, j), m.to_vec()))
    }

    pub fn coefficients(&self) -> impl Iterator<Item = ((usize, usize), &[i32], &CMatrix)> {
        self.coeffs.iter().map(|((p, m), c)| (*p, m.as_slice(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mode_radius(&self) -> usize {
        self.coeffs.keys().map(|(_, m)| mode_inf_norm(m)).max().unwrap_or(0)
    }

    /// `F(∂_i, ∂_j)(x)` for `i < j`.
    pub fn eval(&self, i: usize, j: usize, x: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.rank, self.rank);
        for (((a, b), m), c) in &self.coeffs {
            if (*a, *b) == (i, j) {
                out = &out + &c.scale(phase(m, x));
            }
        }
        out
    }

    /// `max_{i<j} ‖F(∂_i,∂_j)(x)‖₂` maximized over a uniform grid of
    /// `points` samples per axis.
    pub fn sup_norm(&self, points: usize) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let pairs: Vec<(usize, usize)> = {
            let mut p: Vec<_> = self.coeffs.keys().map(|(p, _)| *p).collect();
            p.dedup();
            p
        };
        sample_grid(self.n, points)
            .iter()
            .flat_map(|x| pairs.iter().map(move |&(i, j)| (i, j, x)))
            .map(|(i, j, x)| {
                let f = self.eval(i, j, x);
                if self.rank == 1 {
                    f[(0, 0)].norm()
                } else {
                    f.spectral_norm()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `F_s = s·r·da + s²·r²·a∧a` with `(a∧a)(∂_i, ∂_j) = [a_i, a_j]`.
pub fn curvature(a: &GaugeField, s: f64, r: f64) -> CurvatureForm {
    let n = a.dim();
    let lin = s * r;
    let quad = lin * lin;
    let mut coeffs: BTreeMap<((usize, usize), Vec<i32>), CMatrix> = BTreeMap::new();
    let mut add = |key: ((usize, usize), Vec<i32>), c: CMatrix| match coeffs.get_mut(&key) {
        Some(e) => *e = &*e + &c,
        None => {
            coeffs.insert(key, c);
        }
    };
    for ((j, m), c) in &a.coeffs {
        for i in 0..n {
            if i == *j || m[i] == 0 {
                continue;
            }
            // ∂_i a_j contributes +i m_i â_j to F(∂_i,∂_j) and -i m_i â_j to F(∂_j,∂_i).
            let d = c.scale(I * (f64::from(m[i]) * lin));
            if i < *j {
                add(((i, *j), m.clone()), d);
            } else {
                add(((*j, i), m.clone()), -&d);
            }
        }
    }
    if quad != 0.0 && a.rank > 1 {
        for ((i, m), ci) in &a.coeffs {
            for ((j, mp), cj) in &a.coeffs {
                if i >= j {
                    continue;
                }
                let mm: Vec<i32> = m.iter().zip(mp).map(|(x, y)| x + y).collect();
                let comm = ci.commutator(cj).scale_real(quad);
                add(((*i, *j), mm), comm);
            }
        }
    }
    coeffs.retain(|_, c| c.max_abs() > 0.0);
    CurvatureForm { n, rank: a.rank, s, r, coeffs }
}

/// Samples per axis used for sup-norm estimates: at least 8 per unit of mode
/// radius of the sampled function, never fewer than 8.
pub fn sampling_density(mode_radius: usize) -> usize {
    (8 * mode_radius).max(8)
}

/// `R = sup_M |F_1|` at coupling `r`.
pub fn sup_norm_f1(a: &GaugeField, r: f64) -> f64 {
    let f = curvature(a, 1.0, r);
    f.sup_norm(sampling_density(f.mode_radius()))
}
