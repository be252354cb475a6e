//! Experiment configuration (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::dirac::Decomposition;
use crate::error::{Error, Result};
use crate::gauge::{GaugeField, ManifoldModel};
use crate::linalg::CMatrix;

fn default_rank() -> usize {
    1
}

fn default_margin() -> f64 {
    0.35
}

fn default_budget() -> f64 {
    600.0
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `circle` or `torus3`.
    pub model: String,
    #[serde(default = "default_rank")]
    pub rank: usize,
    /// Fourier cutoff `N`: modes in `[-N, N]^n`.
    pub cutoff: usize,
    /// Tracking and eta window `Λ`; defaults to `N/2`.
    pub window: Option<f64>,
    /// Coupling values `r`.
    pub r: Vec<f64>,
    pub gauge: GaugeSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub decomposition: DecompositionChoice,
    /// Gauss–Legendre order for the predictor; at least `⌈(n+1)/2⌉`.
    pub quadrature_order: Option<usize>,
    /// Slack on fitted exponents.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Per-row wall-clock budget of a sweep, in seconds.
    #[serde(default = "default_budget")]
    pub row_budget_secs: f64,
    /// Cutoffs for the refinement trend of `verify`.
    #[serde(default)]
    pub verify_cutoffs: Vec<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    pub mehler: Option<MehlerConfig>,
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    /// Path to a gauge field in the text format, relative to the config file.
    pub file: Option<String>,
    /// Raw Fourier coefficients.
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    /// `A sin(wave·x) dx^direction` terms.
    #[serde(default)]
    pub sine: Vec<WaveSpec>,
    /// `A cos(wave·x) dx^direction` terms.
    #[serde(default)]
    pub cosine: Vec<WaveSpec>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// One-based direction.
    pub direction: usize,
    pub mode: Vec<i32>,
    #[serde(default)]
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WaveSpec {
    /// One-based direction.
    pub direction: usize,
    pub wave: Vec<i32>,
    #[serde(default)]
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub points: usize,
    pub ds_min: f64,
    pub overlap_threshold: f64,
    pub gap_refine_levels: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { points: 101, ds_min: 1e-6, overlap_threshold: 0.7, gap_refine_levels: 4 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Flow–eta identity residual.
    pub identity: f64,
    /// Window sensitivity of the eta sign sum.
    pub eta_window: f64,
    /// Truncation stability of windowed eigenvalues under `N → N+2`.
    pub stability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { identity: 1e-2, eta_window: 1e-6, stability: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionChoice {
    Dense,
    #[default]
    Sectors,
}

impl From<DecompositionChoice> for Decomposition {
    fn from(d: DecompositionChoice) -> Self {
        match d {
            DecompositionChoice::Dense => Decomposition::Dense,
            DecompositionChoice::Sectors => Decomposition::Sectors,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory; the CLI `--out` flag overrides it.
    pub dir: Option<String>,
    /// Also write eigenvalue trajectories (`flow` subcommand).
    pub trajectory: bool,
    /// Also write SVG plots.
    pub svg: bool,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MehlerConfig {
    pub omega: Vec<Vec<f64>>,
    pub u: f64,
    pub x: Vec<f64>,
    #[serde(default = "default_oracle_points")]
    pub points: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_base_steps")]
    pub base_steps: usize,
    #[serde(default = "default_oracle_tolerance")]
    pub tolerance: f64,
}

fn default_oracle_points() -> usize {
    256
}

fn default_half_width() -> f64 {
    9.6
}

fn default_base_steps() -> usize {
    64
}

fn default_oracle_tolerance() -> f64 {
    1e-6
}

fn matrix_from_parts(rank: usize, re: &[Vec<f64>], im: &[Vec<f64>], what: &str) -> Result<CMatrix> {
    let check = |m: &[Vec<f64>], part: &str| -> Result<()> {
        if !m.is_empty() && (m.len() != rank || m.iter().any(|row| row.len() != rank)) {
            return Err(Error::Config(format!("{what}: '{part}' must be a {rank}×{rank} matrix")));
        }
        Ok(())
    };
    check(re, "re")?;
    check(im, "im")?;
    Ok(CMatrix::from_fn(rank, rank, |i, j| {
        let a = re.get(i).map_or(0.0, |row| row[j]);
        let b = im.get(i).map_or(0.0, |row| row[j]);
        Complex64::new(a, b)
    }))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<ManifoldModel> {
        self.model.parse()
    }

    pub fn window(&self) -> f64 {
        self.window.unwrap_or(self.cutoff as f64 / 2.0)
    }

    /// Builds the gauge field; `base` resolves a relative `gauge.file`.
    pub fn gauge_field(&self, base: &Path) -> Result<GaugeField> {
        let model = self.model()?;
        let n = model.dim();
        let mut field = match &self.gauge.file {
            Some(f) => {
                let path: PathBuf = base.join(f);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read gauge file {}: {e}", path.display())))?;
                let g = GaugeField::from_text(&text)?;
                if g.model() != model || g.rank() != self.rank {
                    return Err(Error::Config(format!(
                        "gauge file is for {} rank {}, config says {} rank {}",
                        g.model().name(),
                        g.rank(),
                        model.name(),
                        self.rank
                    )));
                }
                g
            }
            None => GaugeField::trivial(model, self.rank)?,
        };
        let dir = |d: usize, what: &str| -> Result<usize> {
            if d == 0 || d > n {
                return Err(Error::Config(format!("{what}: direction {d} out of range 1..={n}")));
            }
            Ok(d - 1)
        };
        let mut entries: Vec<(usize, Vec<i32>, CMatrix)> = field.coefficients().map(|(j, m, c)| (j, m.to_vec(), c.clone())).collect();
        for t in &self.gauge.terms {
            let c = matrix_from_parts(self.rank, &t.re, &t.im, "gauge term")?;
            entries.push((dir(t.direction, "gauge term")?, t.mode.clone(), c));
        }
        field = GaugeField::new(model, self.rank, entries)?;
        for w in &self.gauge.sine {
            let c = matrix_from_parts(self.rank, &w.re, &w.im, "sine term")?;
            field = field.with_sine(dir(w.direction, "sine term")?, w.wave.clone(), c)?;
        }
        for w in &self.gauge.cosine {
            let c = matrix_from_parts(self.rank, &w.re, &w.im, "cosine term")?;
            field = field.with_cosine(dir(w.direction, "cosine term")?, w.wave.clone(), c)?;
        }
        Ok(field)
    }

    /// Checks the standing assumptions that do not need the gauge field.
    pub fn validate(&self) -> Result<()> {
        self.model()?;
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if self.r.is_empty() {
            return Err(Error::Config("at least one r value is required".into()));
        }
        if let Some(bad) = self.r.iter().find(|&&r| !(r >= 1.0) || !r.is_finite()) {
            return Err(Error::Config(format!("every r must be a finite number >= 1 (got {bad})")));
        }
        if !(self.window() > 0.0) {
            return Err(Error::Config("window must be positive".into()));
        }
        if self.grid.points < 2 || !(self.grid.ds_min > 0.0) {
            return Err(Error::Config("grid needs at least 2 points and a positive ds_min".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    const SINE: &str = r#"
model = "torus3"
cutoff = 5
window = 2.0
r = [8, 12]

[[gauge.sine]]
direction = 2
wave = [1, 0, 0]
im = [[1.0]]
"#;

    #[test]
    fn parses_sine_instance() {
        let cfg = ExperimentConfig::parse(SINE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(cfg.margin, 0.35);
        let g = cfg.gauge_field(Path::new(".")).unwrap();
        assert_eq!(g.coefficient(1, &[1, 0, 0]).unwrap()[(0, 0)], Complex64::new(0.5, 0.0));
        let expect = GaugeField::trivial(ManifoldModel::Torus3, 1)
            .unwrap()
            .with_sine(1, vec![1, 0, 0], CMatrix::from_rows(&[vec![I]]))
            .unwrap();
        assert_eq!(g, expect);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{SINE}\nbogus = 1\n");
        assert!(matches!(ExperimentConfig::parse(&text), Err(Error::Config(_))));
        let text = SINE.replace("im = [[1.0]]", "im = [[1.0]]\nphase = 2");
        assert!(matches!(ExperimentConfig::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn small_r_rejected() {
        let cfg = ExperimentConfig::parse(&SINE.replace("r = [8, 12]", "r = [0.5]")).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn gauge_file_is_resolved_relative_to_base() {
        let dir = std::env::temp_dir().join(format!("specflow-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let field = GaugeField::constant_abelian(ManifoldModel::Circle, &[0.3]).unwrap();
        std::fs::write(dir.join("a.gauge"), field.to_text()).unwrap();
        let cfg = ExperimentConfig::parse("model = \"circle\"\ncutoff = 20\nr = [10]\n[gauge]\nfile = \"a.gauge\"\n").unwrap();
        assert_eq!(cfg.gauge_field(&dir).unwrap(), field);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
