//! Coupling sweeps and log-log scaling fits.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::report::{csv_row, fmt_f64};

use super::experiment::Experiment;

/// Quotient spread below which a family of ratios counts as bounded.
pub const SPREAD_LIMIT: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    /// `sup |F_1|`.
    pub curvature_norm: f64,
    pub sf: Option<i64>,
    pub predictor: Option<f64>,
    pub error: Option<f64>,
    pub eta_bar: Option<f64>,
    pub runtime_secs: f64,
    /// `ok`, or the first stage failure.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals in log space.
    pub rms_residual: f64,
    pub points: usize,
}

/// Least squares of `ln y` against `ln x`. Needs at least four points.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<LogLogFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if usable.len() < 4 {
        return Err(Error::FitRefused(usable.len()));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::FitRefused(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(LogLogFit { slope, intercept, rms_residual: (ss / n).sqrt(), points: usable.len() })
}

/// Max and max/min of the positive entries; `(0, 1)` when none are positive.
fn quotient_spread(values: &[f64]) -> (f64, f64) {
    let pos: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if pos.is_empty() {
        return (0.0, 1.0);
    }
    let max = pos.iter().copied().fold(0.0, f64::max);
    let min = pos.iter().copied().fold(f64::INFINITY, f64::min);
    (max, max / min)
}

#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub rows: Vec<SweepRow>,
    pub dim: usize,
    pub margin: f64,
    /// Every successful row has `R = 0`.
    pub flat: bool,
    pub error_fit: Option<LogLogFit>,
    pub eta_fit: Option<LogLogFit>,
    /// `max error/R^{n/2}` and its max/min spread over positive values.
    pub error_quotient: (f64, f64),
    /// Same for `|η̄(D₁)|/R^{n/2}`.
    pub eta_quotient: (f64, f64),
    /// Growth bound on `|sf − predictor|`.
    pub flow_pass: bool,
    /// Boundedness of the eta quotient; informational.
    pub eta_pass: bool,
    pub notes: Vec<String>,
}

impl ScalingReport {
    pub fn exponent_limit(&self) -> f64 {
        self.dim as f64 / 2.0 + self.margin
    }

    pub fn to_csv(&self) -> String {
        let head = ["r", "R", "sf", "predictor", "error", "eta_bar_D1", "status"];
        let mut out = csv_row(&head.map(String::from));
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for row in &self.rows {
            out.push_str(&csv_row(&[
                fmt_f64(row.r),
                fmt_f64(row.curvature_norm),
                row.sf.map(|v| v.to_string()).unwrap_or_default(),
                opt(row.predictor),
                opt(row.error),
                opt(row.eta_bar),
                row.status.clone(),
            ]));
        }
        out
    }

    pub fn fits_csv(&self) -> String {
        let head = ["quantity", "slope", "intercept", "rms_residual", "points", "limit", "quotient_max", "quotient_spread", "pass"];
        let mut out = csv_row(&head.map(String::from));
        let limit = self.exponent_limit();
        for (name, fit, q, pass) in [
            ("error", &self.error_fit, self.error_quotient, self.flow_pass),
            ("eta_bar_D1", &self.eta_fit, self.eta_quotient, self.eta_pass),
        ] {
            let (slope, intercept, rms, points) = match fit {
                Some(f) => (fmt_f64(f.slope), fmt_f64(f.intercept), fmt_f64(f.rms_residual), f.points.to_string()),
                None => (String::new(), String::new(), String::new(), "0".into()),
            };
            out.push_str(&csv_row(&[
                name.into(),
                slope,
                intercept,
                rms,
                points,
                fmt_f64(limit),
                fmt_f64(q.0),
                fmt_f64(q.1),
                pass.to_string(),
            ]));
        }
        out
    }

    pub fn timing(&self) -> String {
        self.rows
            .iter()
            .map(|r| format!("r={} runtime_secs={:.3}\n", r.r, r.runtime_secs))
            .collect()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("rows: {}\n", self.rows.len()));
        s.push_str(&format!("exponent limit n/2 + margin: {}\n", self.exponent_limit()));
        if let Some(f) = &self.error_fit {
            s.push_str(&format!("error exponent: {:e} (rms {:e})\n", f.slope, f.rms_residual));
        }
        if let Some(f) = &self.eta_fit {
            s.push_str(&format!("eta exponent: {:e} (rms {:e})\n", f.slope, f.rms_residual));
        }
        s.push_str(&format!("error/R^(n/2): max {:e} spread {:e}\n", self.error_quotient.0, self.error_quotient.1));
        s.push_str(&format!("|eta_bar|/R^(n/2): max {:e} spread {:e}\n", self.eta_quotient.0, self.eta_quotient.1));
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s.push_str(&format!("flow bound: {}\n", if self.flow_pass { "pass" } else { "FAIL" }));
        s.push_str(&format!("eta bound (informational): {}\n", if self.eta_pass { "pass" } else { "FAIL" }));
        s
    }
}

fn run_row(exp: &Experiment, r: f64) -> SweepRow {
    let start = Instant::now();
    let curvature_norm = exp.curvature_norm(r);
    let mut row = SweepRow {
        r,
        curvature_norm,
        sf: None,
        predictor: None,
        error: None,
        eta_bar: None,
        runtime_secs: 0.0,
        status: "ok".into(),
    };
    let outcome = (|| -> std::result::Result<(), String> {
        row.sf = Some(exp.flow(r).map_err(|e| stage("flow", e))?.flow.sf);
        row.predictor = Some(exp.predict(r).map_err(|e| stage("predict", e))?.predictor);
        row.error = Some((row.sf.unwrap_or(0) as f64 - row.predictor.unwrap_or(0.0)).abs());
        row.eta_bar = Some(exp.eta_at(r, 1.0).map_err(|e| stage("eta", e))?.reduced_eta);
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = e;
    }
    row.runtime_secs = start.elapsed().as_secs_f64();
    row
}

fn stage(name: &str, e: Error) -> String {
    format!("{name} stage failed: {e}")
}

/// Runs every coupling of the configuration. Rows run in parallel; once any
/// row exceeds the per-row budget, rows not yet started are skipped.
pub fn sweep(exp: &Experiment) -> ScalingReport {
    let cfg = exp.config();
    let budget = cfg.row_budget_secs;
    let exhausted = AtomicBool::new(false);
    let mut rs = cfg.r.clone();
    rs.sort_by(f64::total_cmp);
    let mut rows: Vec<SweepRow> = rs
        .par_iter()
        .map(|&r| {
            if exhausted.load(Ordering::SeqCst) {
                return SweepRow {
                    r,
                    curvature_norm: exp.curvature_norm(r),
                    sf: None,
                    predictor: None,
                    error: None,
                    eta_bar: None,
                    runtime_secs: 0.0,
                    status: "skipped: runtime budget exhausted".into(),
                };
            }
            let mut row = run_row(exp, r);
            if row.runtime_secs > budget {
                exhausted.store(true, Ordering::SeqCst);
                row.status = format!("over budget ({budget} s)");
            }
            row
        })
        .collect();
    rows.sort_by(|a, b| a.r.total_cmp(&b.r));
    assess(rows, exp.model().dim(), cfg.margin)
}

/// Fits and pass/fail for a finished set of rows.
pub fn assess(rows: Vec<SweepRow>, dim: usize, margin: f64) -> ScalingReport {
    let half = dim as f64 / 2.0;
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.is_ok()).collect();
    let mut notes = Vec::new();
    let failed = rows.len() - ok.len();
    if failed > 0 {
        notes.push(format!("{failed} row(s) failed or were skipped and are excluded"));
    }
    let r_pos: Vec<f64> = ok.iter().map(|r| r.curvature_norm).filter(|&v| v > 0.0).collect();
    if ok.len() < 5 {
        notes.push(format!("only {} usable rows; at least 5 are expected", ok.len()));
    }
    if let (Some(lo), Some(hi)) = (
        r_pos.iter().copied().reduce(f64::min),
        r_pos.iter().copied().reduce(f64::max),
    ) {
        if hi < 10.0 * lo {
            notes.push(format!("R spans a factor {:.3}, less than one decade", hi / lo));
        }
    }
    let flat = !ok.is_empty() && r_pos.is_empty();

    let error_points: Vec<(f64, f64)> = ok
        .iter()
        .filter(|r| r.curvature_norm > 0.0)
        .map(|r| (r.curvature_norm, r.error.unwrap_or(0.0)))
        .collect();
    let eta_points: Vec<(f64, f64)> = ok
        .iter()
        .filter(|r| r.curvature_norm > 0.0)
        .map(|r| (r.curvature_norm, r.eta_bar.unwrap_or(0.0).abs()))
        .collect();
    let quotients = |pts: &[(f64, f64)]| -> Vec<f64> { pts.iter().map(|(x, y)| y / x.powf(half)).collect() };
    let error_quotient = quotient_spread(&quotients(&error_points));
    let eta_quotient = quotient_spread(&quotients(&eta_points));

    let error_fit = loglog_fit(&error_points);
    let eta_fit = loglog_fit(&eta_points);

    let flow_pass = if flat {
        notes.push("flat family: curvature bound vacuous; |sf - predictor| <= 1 checked instead".into());
        ok.iter().all(|r| r.error.is_some_and(|e| e <= 1.0))
    } else if ok.is_empty() {
        false
    } else if error_points.iter().all(|p| p.1 == 0.0) {
        notes.push("error identically zero; bound holds trivially".into());
        ok.len() >= 4
    } else {
        match &error_fit {
            Ok(f) => f.slope <= half + margin && error_quotient.1 < SPREAD_LIMIT,
            Err(e) => {
                notes.push(format!("error fit: {e}"));
                false
            }
        }
    };
    let eta_pass = !ok.is_empty() && eta_quotient.1 < SPREAD_LIMIT;
    if let Err(e) = &eta_fit {
        notes.push(format!("eta fit: {e}"));
    }
    ScalingReport {
        rows,
        dim,
        margin,
        flat,
        error_fit: error_fit.ok(),
        eta_fit: eta_fit.ok(),
        error_quotient,
        eta_quotient,
        flow_pass,
        eta_pass,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(r: f64, big_r: f64, error: f64, eta: f64) -> SweepRow {
        SweepRow {
            r,
            curvature_norm: big_r,
            sf: Some(0),
            predictor: Some(error),
            error: Some(error),
            eta_bar: Some(eta),
            runtime_secs: 0.0,
            status: "ok".into(),
        }
    }

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 5.0, 10.0, 30.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.2))).collect();
        let f = loglog_fit(&pts).unwrap();
        assert!((f.slope - 1.2).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.rms_residual < 1e-12);
    }

    #[test]
    fn fit_refuses_with_three_points() {
        let pts = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 0.0)];
        assert!(matches!(loglog_fit(&pts), Err(Error::FitRefused(3))));
    }

    #[test]
    fn steep_growth_fails() {
        let rows: Vec<SweepRow> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&x: &f64| row(x, x, 0.01 * x * x, 1.0)).collect();
        let rep = assess(rows, 3, 0.35);
        assert!((rep.error_fit.as_ref().unwrap().slope - 2.0).abs() < 1e-12);
        assert!(!rep.flow_pass);
    }

    #[test]
    fn moderate_growth_passes() {
        let rows: Vec<SweepRow> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&x: &f64| row(x, x, 0.5 * x.powf(1.5), x.powf(1.5))).collect();
        let rep = assess(rows, 3, 0.35);
        assert!(rep.flow_pass);
        assert!(rep.eta_pass);
        assert!((rep.error_quotient.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_error_is_reported_not_fitted() {
        let rows: Vec<SweepRow> = [8.0, 12.0, 16.0, 24.0, 32.0].iter().map(|&x| row(x, x, 0.0, 1.0)).collect();
        let rep = assess(rows, 3, 0.35);
        assert!(rep.error_fit.is_none());
        assert!(rep.flow_pass);
        assert!(rep.notes.iter().any(|n| n.contains("identically zero")));
        assert!((rep.eta_quotient.1 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn flat_family_checks_unit_error() {
        let rows: Vec<SweepRow> = [5.0, 10.0, 20.0, 50.0, 100.0].iter().map(|&x| row(x, 0.0, 0.3, 0.2)).collect();
        let rep = assess(rows.clone(), 1, 0.35);
        assert!(rep.flat && rep.flow_pass);
        let mut bad = rows;
        bad[2].error = Some(1.5);
        assert!(!assess(bad, 1, 0.35).flow_pass);
    }

    #[test]
    fn rows_stay_sorted_and_failures_are_kept() {
        let mut rows = vec![row(1.0, 1.0, 0.1, 1.0), row(2.0, 2.0, 0.2, 1.0)];
        rows[1].status = "flow stage failed".into();
        let rep = assess(rows, 3, 0.35);
        assert_eq!(rep.rows.len(), 2);
        assert!(!rep.flow_pass);
        let csv = rep.to_csv();
        assert!(csv.starts_with("r,R,sf,predictor,error,eta_bar_D1,status\r\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
