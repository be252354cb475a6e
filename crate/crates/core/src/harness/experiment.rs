//! Single-coupling pipelines and the flow–eta identity check.

use std::path::Path;

use crate::dirac::DiracFamily;
use crate::eigen::{track, FlowTrajectory, HermitianFamily, TrackOptions};
use crate::error::{Error, Result};
use crate::eta::{eta_heat_trace, EtaOptions, EtaResult};
use crate::flow::{spectral_flow, SpectralFlowResult};
use crate::forms::{predict_flow, PredictionResult};
use crate::gauge::{curvature, sampling_density, sup_norm_f1, GaugeField, ManifoldModel};

use super::config::ExperimentConfig;

/// A validated configuration with its gauge field resolved.
#[derive(Clone, Debug)]
pub struct Experiment {
    config: ExperimentConfig,
    text: String,
    model: ManifoldModel,
    gauge: GaugeField,
}

pub struct FlowRun {
    pub trajectory: FlowTrajectory,
    pub flow: SpectralFlowResult,
}

impl Experiment {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_text(&text, base)
    }

    /// `base` resolves a relative gauge file reference.
    pub fn from_text(text: &str, base: &Path) -> Result<Self> {
        let config = ExperimentConfig::parse(text)?;
        config.validate()?;
        let gauge = config.gauge_field(base)?;
        let need = gauge.mode_radius() + 1;
        if config.cutoff < need {
            return Err(Error::Config(format!(
                "cutoff {} is below mode radius + 1 = {need}",
                config.cutoff
            )));
        }
        Ok(Self { model: gauge.model(), config, text: text.to_string(), gauge })
    }

    /// Same experiment at another cutoff; the window is kept as configured.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        let mut next = self.clone();
        next.config.cutoff = cutoff;
        if next.config.window.is_none() {
            next.config.window = Some(self.window());
        }
        if cutoff < self.gauge.mode_radius() + 1 {
            return Err(Error::Config(format!("cutoff {cutoff} is below mode radius + 1")));
        }
        Ok(next)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn config_text(&self) -> &str {
        &self.text
    }

    pub fn model(&self) -> ManifoldModel {
        self.model
    }

    pub fn gauge(&self) -> &GaugeField {
        &self.gauge
    }

    pub fn window(&self) -> f64 {
        self.config.window()
    }

    pub fn family(&self, r: f64) -> Result<DiracFamily> {
        DiracFamily::new(&self.gauge, self.config.cutoff, r, self.config.decomposition.into())
    }

    pub fn track_options(&self) -> TrackOptions {
        let g = &self.config.grid;
        TrackOptions {
            window: self.window(),
            initial_points: g.points,
            ds_min: g.ds_min,
            overlap_threshold: g.overlap_threshold,
            gap_refine_levels: g.gap_refine_levels,
        }
    }

    /// Circle spectra are asymptotically arithmetic with unit spacing; torus
    /// spectra here are asymptotically symmetric.
    pub fn eta_options(&self) -> EtaOptions {
        let mut opts = match self.model {
            ManifoldModel::Circle => EtaOptions::arithmetic(self.window(), 1.0),
            ManifoldModel::Torus3 => EtaOptions::symmetric(self.window()),
        };
        opts.tolerance = Some(self.config.tolerances.eta_window);
        opts
    }

    /// `R = sup |F_1|`.
    pub fn curvature_norm(&self, r: f64) -> f64 {
        sup_norm_f1(&self.gauge, r)
    }

    pub fn flow(&self, r: f64) -> Result<FlowRun> {
        let opts = self.track_options();
        let family = self.family(r)?;
        let keep = opts.retained_window(family.lipschitz(), 1.0);
        let family = family.restrict_to_window(keep);
        let trajectory = track(&family, &opts)?;
        let flow = spectral_flow(&trajectory)?;
        Ok(FlowRun { trajectory, flow })
    }

    /// Eta invariant of `D_s`, using `sup |F_s|` for the time split.
    pub fn eta_at(&self, r: f64, s: f64) -> Result<EtaResult> {
        let f = curvature(&self.gauge, s, r);
        let norm = f.sup_norm(sampling_density(f.mode_radius()));
        let spectrum = self.family(r)?.spectrum(s)?;
        eta_heat_trace(&spectrum, norm, &self.eta_options())
    }

    pub fn predict(&self, r: f64) -> Result<PredictionResult> {
        let order = self.config.quadrature_order.unwrap_or(8);
        predict_flow(&self.gauge, r, order)
    }

    /// Largest shift of the windowed spectrum at `s` under `N → N+2`,
    /// measured as a two-sided nearest-eigenvalue distance.
    pub fn truncation_stability(&self, r: f64, s: f64) -> Result<f64> {
        let w = self.window();
        let coarse = self.family(r)?.spectrum(s)?;
        let fine = self.with_cutoff(self.config.cutoff + 2)?.family(r)?.spectrum(s)?;
        let one_way = |from: &[f64], to: &[f64]| {
            from.iter()
                .filter(|l| l.abs() <= w)
                .map(|l| to.iter().map(|m| (l - m).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        Ok(one_way(&coarse, &fine).max(one_way(&fine, &coarse)))
    }
}

/// Global sign in front of the integrated variation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConvention {
    /// `sf = +∫ v ds + η̄(D₁) − η̄(D₀)`.
    Plus,
    /// `sf = −∫ v ds + η̄(D₁) − η̄(D₀)`.
    Minus,
}

impl SignConvention {
    pub fn name(self) -> &'static str {
        match self {
            SignConvention::Plus => "plus",
            SignConvention::Minus => "minus",
        }
    }
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub r: f64,
    pub cutoff: usize,
    pub window: f64,
    pub sf: i64,
    /// `∫₀¹ v(s) ds` from the closed-form variation.
    pub variation_integral: f64,
    pub eta_start: EtaResult,
    pub eta_end: EtaResult,
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub convention: Option<SignConvention>,
    pub tolerance: f64,
    /// Truncation shift of the windowed spectrum at `s = 1`.
    pub stability: f64,
    pub stable: bool,
}

impl IdentityReport {
    /// Residual under the recorded convention, or the smaller one.
    pub fn residual(&self) -> f64 {
        match self.convention {
            Some(SignConvention::Plus) => self.residual_plus,
            Some(SignConvention::Minus) => self.residual_minus,
            None => self.residual_plus.abs().min(self.residual_minus.abs()),
        }
    }

    pub fn breakdown(&self) -> String {
        format!(
            "r={} N={} sf={} integral={} eta_bar(D0)={} eta_bar(D1)={} residual(plus)={} residual(minus)={} tolerance={}",
            self.r,
            self.cutoff,
            self.sf,
            self.variation_integral,
            self.eta_start.reduced_eta,
            self.eta_end.reduced_eta,
            self.residual_plus,
            self.residual_minus,
            self.tolerance
        )
    }
}

/// Computes the report without judging it.
pub fn identity_report(exp: &Experiment, r: f64) -> Result<IdentityReport> {
    let sf = exp.flow(r)?.flow.sf;
    let variation_integral = exp.predict(r)?.predictor;
    let eta_start = exp.eta_at(r, 0.0)?;
    let eta_end = exp.eta_at(r, 1.0)?;
    let jump = eta_end.reduced_eta - eta_start.reduced_eta;
    let residual_plus = sf as f64 - (variation_integral + jump);
    let residual_minus = sf as f64 - (-variation_integral + jump);
    let tolerance = exp.config().tolerances.identity;
    let convention = if residual_plus.abs() < tolerance {
        Some(SignConvention::Plus)
    } else if residual_minus.abs() < tolerance {
        Some(SignConvention::Minus)
    } else {
        None
    };
    let stability = exp.truncation_stability(r, 1.0)?;
    Ok(IdentityReport {
        r,
        cutoff: exp.config().cutoff,
        window: exp.window(),
        sf,
        variation_integral,
        eta_start,
        eta_end,
        residual_plus,
        residual_minus,
        convention,
        tolerance,
        stability,
        stable: stability <= exp.config().tolerances.stability,
    })
}

/// Checks the flow–eta identity under both global sign conventions and
/// records the one that holds.
pub fn verify_flow_eta_identity(exp: &Experiment, r: f64) -> Result<IdentityReport> {
    let report = identity_report(exp, r)?;
    if report.convention.is_none() {
        return Err(Error::IdentityViolated(report.breakdown()));
    }
    Ok(report)
}

/// Identity reports at each cutoff, in the given order.
pub fn refinement_trend(exp: &Experiment, r: f64, cutoffs: &[usize]) -> Result<Vec<IdentityReport>> {
    cutoffs.iter().map(|&n| identity_report(&exp.with_cutoff(n)?, r)).collect()
}

/// `true` when the residuals never grow along the sequence.
pub fn nonincreasing(reports: &[IdentityReport]) -> bool {
    reports
        .windows(2)
        .all(|w| w[1].residual().abs() <= w[0].residual().abs() + 1e-12)
}
