//! End-to-end experiments driven by a TOML configuration: flow, eta,
//! predictor, Mehler check, flow–eta identity and coupling sweeps, each
//! producing deterministic CSV artifacts.

mod config;
mod experiment;
mod svg;
mod sweep;

use std::path::Path;
use std::str::FromStr;

pub use config::{
    DecompositionChoice, ExperimentConfig, GaugeSpec, GridConfig, MehlerConfig, OutputConfig, TermSpec,
    Tolerances, WaveSpec,
};
pub use experiment::{
    identity_report, nonincreasing, refinement_trend, verify_flow_eta_identity, Experiment, FlowRun,
    IdentityReport, SignConvention,
};
pub use svg::{line_plot, Series};
pub use sweep::{assess, loglog_fit, sweep, LogLogFit, ScalingReport, SweepRow, SPREAD_LIMIT};

use crate::error::{Error, Result};
use crate::mehler::{mehler_kernel, oscillator_oracle, MehlerInput, OracleGrid};
use crate::report::{csv_row, fmt_f64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Flow,
    Eta,
    Predict,
    Mehler,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Flow => "flow",
            Command::Eta => "eta",
            Command::Predict => "predict",
            Command::Mehler => "mehler",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "flow" => Command::Flow,
            "eta" => Command::Eta,
            "predict" => Command::Predict,
            "mehler" => Command::Mehler,
            "verify" => Command::Verify,
            "sweep" => Command::Sweep,
            _ => return Err(Error::Config(format!("unknown command '{s}'"))),
        })
    }
}

/// Files produced by one command, plus its gate verdict.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, String)>,
    pub pass: bool,
    /// Human-readable digest for the terminal.
    pub summary: String,
}

impl Artifacts {
    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

fn manifest(exp: &Experiment, cmd: Command) -> String {
    format!(
        "tool specflow {}\ncommand {}\n--- config ---\n{}\n--- gauge ---\n{}",
        env!("CARGO_PKG_VERSION"),
        cmd.name(),
        exp.config_text().trim_end(),
        exp.gauge().to_text()
    )
}

fn header(names: &[&str]) -> String {
    csv_row(&names.iter().map(|s| s.to_string()).collect::<Vec<_>>())
}

/// Runs `cmd` and collects its artifacts. Configuration problems are
/// returned as errors; numerical gate failures are reported through `pass`.
pub fn run(exp: &Experiment, cmd: Command) -> Result<Artifacts> {
    let mut art = match cmd {
        Command::Flow => run_flow(exp),
        Command::Eta => run_eta(exp),
        Command::Predict => run_predict(exp),
        Command::Mehler => run_mehler(exp)?,
        Command::Verify => run_verify(exp),
        Command::Sweep => run_sweep(exp),
    };
    art.add("manifest.txt", manifest(exp, cmd));
    Ok(art)
}

fn run_flow(exp: &Experiment) -> Artifacts {
    let mut art = Artifacts { pass: true, ..Default::default() };
    let mut table = header(&["r", "sf", "crossings", "zero_tolerance", "snapshots", "retained_window", "lipschitz", "status"]);
    let mut crossings = header(&["r", "s", "path_id", "direction"]);
    for (idx, &r) in exp.config().r.iter().enumerate() {
        match exp.flow(r) {
            Ok(run) => {
                let t = &run.trajectory;
                table.push_str(&csv_row(&[
                    fmt_f64(r),
                    run.flow.sf.to_string(),
                    run.flow.crossings.len().to_string(),
                    fmt_f64(run.flow.zero_tolerance),
                    t.total_snapshots().to_string(),
                    fmt_f64(t.retained_window),
                    fmt_f64(t.lipschitz),
                    "ok".into(),
                ]));
                for c in &run.flow.crossings {
                    crossings.push_str(&csv_row(&[fmt_f64(r), fmt_f64(c.s), c.path_id.to_string(), c.direction.to_string()]));
                }
                art.summary.push_str(&format!("r={r}: sf={} ({} crossings)\n", run.flow.sf, run.flow.crossings.len()));
                if exp.config().output.trajectory {
                    art.add(format!("trajectory_{idx}.csv"), t.to_csv());
                }
                if exp.config().output.svg {
                    let series: Vec<Series> = t
                        .paths
                        .iter()
                        .map(|p| Series { name: format!("path {}", p.id), points: p.samples.clone() })
                        .collect();
                    art.add(
                        format!("trajectory_{idx}.svg"),
                        line_plot(&format!("eigenvalue paths, r = {r}"), "s", "eigenvalue", &series, false, false),
                    );
                }
            }
            Err(e) => {
                art.pass = false;
                table.push_str(&csv_row(&[fmt_f64(r), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()]));
                art.summary.push_str(&format!("r={r}: FAILED {e}\n"));
            }
        }
    }
    art.add("flow.csv", table);
    art.add("crossings.csv", crossings);
    art
}

fn run_eta(exp: &Experiment) -> Artifacts {
    let mut art = Artifacts { pass: true, ..Default::default() };
    let mut table = header(&[
        "r",
        "s",
        "eta",
        "dim_ker",
        "reduced_eta",
        "t0",
        "small_time_part",
        "large_time_part",
        "window",
        "tail_estimate",
        "kernel_tolerance",
        "status",
    ]);
    for &r in &exp.config().r {
        for s in [0.0, 1.0] {
            match exp.eta_at(r, s) {
                Ok(e) => {
                    table.push_str(&csv_row(&[
                        fmt_f64(r),
                        fmt_f64(s),
                        fmt_f64(e.eta),
                        e.dim_ker.to_string(),
                        fmt_f64(e.reduced_eta),
                        fmt_f64(e.t0),
                        fmt_f64(e.small_time_part),
                        fmt_f64(e.large_time_part),
                        fmt_f64(e.window),
                        fmt_f64(e.tail_estimate),
                        fmt_f64(e.kernel_tolerance),
                        "ok".into(),
                    ]));
                    art.summary.push_str(&format!("r={r} s={s}: eta={} dim_ker={} eta_bar={}\n", e.eta, e.dim_ker, e.reduced_eta));
                }
                Err(err) => {
                    art.pass = false;
                    let mut row = vec![fmt_f64(r), fmt_f64(s)];
                    row.extend(std::iter::repeat_n(String::new(), 9));
                    row.push(err.to_string());
                    table.push_str(&csv_row(&row));
                    art.summary.push_str(&format!("r={r} s={s}: FAILED {err}\n"));
                }
            }
        }
    }
    art.add("eta.csv", table);
    art
}

fn run_predict(exp: &Experiment) -> Artifacts {
    let mut art = Artifacts { pass: true, ..Default::default() };
    let mut table = header(&["r", "R", "predictor", "leading_term", "leading_term_derived", "leading_term_mismatch", "status"]);
    let mut nodes = header(&["r", "s", "weight", "integrand"]);
    for &r in &exp.config().r {
        let big_r = exp.curvature_norm(r);
        match exp.predict(r) {
            Ok(p) => {
                table.push_str(&csv_row(&[
                    fmt_f64(r),
                    fmt_f64(big_r),
                    fmt_f64(p.predictor),
                    fmt_f64(p.leading_term),
                    fmt_f64(p.leading_term_derived),
                    p.leading_term_mismatch.to_string(),
                    "ok".into(),
                ]));
                for &(s, w, v) in &p.samples {
                    nodes.push_str(&csv_row(&[fmt_f64(r), fmt_f64(s), fmt_f64(w), fmt_f64(v)]));
                }
                art.summary.push_str(&format!("r={r}: predictor={} leading={}\n", p.predictor, p.leading_term));
            }
            Err(e) => {
                art.pass = false;
                table.push_str(&csv_row(&[fmt_f64(r), fmt_f64(big_r), String::new(), String::new(), String::new(), String::new(), e.to_string()]));
                art.summary.push_str(&format!("r={r}: FAILED {e}\n"));
            }
        }
    }
    art.add("predict.csv", table);
    art.add("predict_nodes.csv", nodes);
    art
}

fn run_mehler(exp: &Experiment) -> Result<Artifacts> {
    let m = exp
        .config()
        .mehler
        .as_ref()
        .ok_or_else(|| Error::Config("the mehler command needs a [mehler] section".into()))?;
    let mut art = Artifacts { pass: true, ..Default::default() };
    let input = MehlerInput::new(m.omega.clone(), m.u, m.x.clone());
    let kernel = mehler_kernel(&input)?[(0, 0)].re;
    let mut table = header(&["quantity", "value"]);
    table.push_str(&csv_row(&["kernel".into(), fmt_f64(kernel)]));
    art.summary.push_str(&format!("kernel = {kernel}\n"));
    let grid = OracleGrid { points: m.points, half_width: m.half_width, base_steps: m.base_steps, tolerance: m.tolerance };
    match oscillator_oracle(&m.omega, m.u, &m.x, &grid) {
        Ok(o) => {
            let delta = (o.value - kernel).abs();
            art.pass = delta <= m.tolerance;
            for (k, v) in [
                ("oracle", o.value),
                ("difference", delta),
                ("richardson_estimate", o.richardson_estimate),
                ("mass", o.mass),
                ("tolerance", m.tolerance),
            ] {
                table.push_str(&csv_row(&[k.into(), fmt_f64(v)]));
            }
            art.summary.push_str(&format!("oracle = {} difference = {delta:e}\n", o.value));
        }
        Err(Error::Unsupported(msg)) => {
            table.push_str(&csv_row(&["oracle".into(), String::new()]));
            art.summary.push_str(&format!("oracle skipped: {msg}\n"));
        }
        Err(e) => {
            art.pass = false;
            art.summary.push_str(&format!("oracle FAILED: {e}\n"));
            table.push_str(&csv_row(&["oracle_error".into(), e.to_string()]));
        }
    }
    art.add("mehler.csv", table);
    Ok(art)
}

fn identity_row(rep: &IdentityReport) -> String {
    csv_row(&[
        fmt_f64(rep.r),
        rep.cutoff.to_string(),
        fmt_f64(rep.window),
        rep.sf.to_string(),
        fmt_f64(rep.variation_integral),
        fmt_f64(rep.eta_start.reduced_eta),
        fmt_f64(rep.eta_end.reduced_eta),
        fmt_f64(rep.residual_plus),
        fmt_f64(rep.residual_minus),
        rep.convention.map_or("none", SignConvention::name).into(),
        fmt_f64(rep.stability),
        rep.stable.to_string(),
        "ok".into(),
    ])
}

const IDENTITY_HEADER: [&str; 13] = [
    "r",
    "N",
    "window",
    "sf",
    "variation_integral",
    "eta_bar_D0",
    "eta_bar_D1",
    "residual_plus",
    "residual_minus",
    "convention",
    "stability",
    "stable",
    "status",
];

fn run_verify(exp: &Experiment) -> Artifacts {
    let mut art = Artifacts { pass: true, ..Default::default() };
    let mut table = header(&IDENTITY_HEADER);
    for &r in &exp.config().r {
        match identity_report(exp, r) {
            Ok(rep) => {
                if rep.convention.is_none() {
                    art.pass = false;
                    art.summary.push_str(&format!("identity violated beyond tolerance: {}\n", rep.breakdown()));
                } else {
                    art.summary.push_str(&format!(
                        "r={r}: residual {:e} under the {} convention; truncation shift {:e}{}\n",
                        rep.residual(),
                        rep.convention.map_or("none", SignConvention::name),
                        rep.stability,
                        if rep.stable { "" } else { " (not converged)" }
                    ));
                }
                table.push_str(&identity_row(&rep));
            }
            Err(e) => {
                art.pass = false;
                let mut row = vec![fmt_f64(r), exp.config().cutoff.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 10));
                row.push(e.to_string());
                table.push_str(&csv_row(&row));
                art.summary.push_str(&format!("r={r}: FAILED {e}\n"));
            }
        }
    }
    art.add("verify.csv", table);

    let cutoffs = &exp.config().verify_cutoffs;
    if !cutoffs.is_empty() {
        let mut trend = header(&IDENTITY_HEADER);
        for &r in &exp.config().r {
            match refinement_trend(exp, r, cutoffs) {
                Ok(reps) => {
                    let mono = nonincreasing(&reps);
                    art.pass &= mono;
                    for rep in &reps {
                        trend.push_str(&identity_row(rep));
                    }
                    art.summary.push_str(&format!(
                        "r={r}: residual trend over N={cutoffs:?} is {}\n",
                        if mono { "nonincreasing" } else { "NOT nonincreasing" }
                    ));
                }
                Err(e) => {
                    art.pass = false;
                    art.summary.push_str(&format!("r={r}: trend FAILED {e}\n"));
                }
            }
        }
        art.add("verify_trend.csv", trend);
    }
    art
}

fn run_sweep(exp: &Experiment) -> Artifacts {
    let rep = sweep(exp);
    let mut art = Artifacts { pass: rep.flow_pass, summary: rep.summary(), ..Default::default() };
    art.add("report.csv", rep.to_csv());
    art.add("fits.csv", rep.fits_csv());
    art.add("summary.txt", rep.summary());
    art.add("timing.txt", rep.timing());
    if exp.config().output.svg {
        let ok = rep.rows.iter().filter(|r| r.is_ok());
        let err: Vec<(f64, f64)> = ok.clone().map(|r| (r.curvature_norm, r.error.unwrap_or(0.0))).collect();
        let eta: Vec<(f64, f64)> = ok.map(|r| (r.curvature_norm, r.eta_bar.unwrap_or(0.0).abs())).collect();
        art.add(
            "error_vs_R.svg",
            line_plot(
                "|sf - predictor| and |eta_bar(D1)| against R",
                "R",
                "value",
                &[Series { name: "error".into(), points: err }, Series { name: "|eta_bar|".into(), points: eta }],
                true,
                true,
            ),
        );
    }
    art
}
