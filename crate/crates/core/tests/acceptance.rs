//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specflow_core::clifford::{build_generators, monomial_trace, monomial_trace_rule};
use specflow_core::eta::{circle_eta_oracle, eta_heat_trace, EtaOptions};
use specflow_core::flow::circle_flow_oracle;
use specflow_core::forms::{a_hat, MatrixForm, LOG_SINHC_COEFFS};
use specflow_core::harness::{refinement_trend, nonincreasing, run, sweep, verify_flow_eta_identity, Command, Experiment};
use specflow_core::linalg::CMatrix;
use specflow_core::mehler::{mehler_kernel, oscillator_oracle, MehlerInput, OracleGrid};

const TORUS_SINE: &str = r#"
model = "torus3"
cutoff = 5
window = 2.0
r = [8, 12, 16, 24, 32]

[[gauge.sine]]
direction = 2
wave = [1, 0, 0]
im = [[1.0]]
"#;

fn circle_text(alpha: f64, r: f64, cutoff: usize) -> String {
    format!("model = \"circle\"\ncutoff = {cutoff}\nr = [{r:?}]\n[[gauge.terms]]\ndirection = 1\nmode = [0]\nim = [[{alpha:?}]]\n")
}

fn experiment(text: &str) -> Experiment {
    Experiment::from_text(text, Path::new(".")).expect("valid acceptance config")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Signed count of `m + x` crossing zero, straight from the definition.
fn enumerate_circle_flow(x: f64) -> i64 {
    let bound = x.abs().ceil() as i64 + 2;
    (-bound..=bound)
        .map(|m| match ((m as f64) < 0.0, (m as f64 + x) < 0.0) {
            (true, false) => 1,
            (false, true) => -1,
            _ => 0,
        })
        .sum()
}

fn criterion_1() -> Outcome {
    let mut checked = 0;
    for n in [1usize, 3, 5] {
        let rep = build_generators(n).unwrap();
        let half = (n - 1) / 2;
        let dim = f64::from(1u32 << half);
        // (-i)^((n+1)/2)
        let phase = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0)]
            [(n + 1) / 2 % 4];
        for mask in 0u32..(1 << n) {
            let index: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            let expected = if index.is_empty() {
                Complex64::new(dim, 0.0)
            } else if index.len() == n {
                phase * dim
            } else {
                Complex64::new(0.0, 0.0)
            };
            let traced = monomial_trace(&rep, &index).unwrap();
            let rule = monomial_trace_rule(n, &index).unwrap();
            if traced != expected || rule != expected {
                return outcome(false, format!("n={n} index={index:?}: trace {traced} rule {rule} expected {expected}"));
            }
            checked += 1;
        }
    }
    outcome(true, format!("{checked} monomials exact"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut done = 0;
    let mut worst: f64 = 0.0;
    while done < 50 {
        let alpha: f64 = rng.gen_range(-0.9..0.9);
        let r: f64 = rng.gen_range(1.0..50.0);
        let x = r * alpha;
        if (x - x.round()).abs() < 1e-6 {
            continue;
        }
        let exp = experiment(&circle_text(alpha, r, 200));
        let sf = match exp.flow(r) {
            Ok(run) => run.flow.sf,
            Err(e) => return outcome(false, format!("alpha={alpha} r={r}: {e}")),
        };
        let oracle = enumerate_circle_flow(x);
        if sf != oracle || circle_flow_oracle(alpha, r) != oracle {
            return outcome(false, format!("alpha={alpha} r={r}: tracked {sf}, enumeration {oracle}"));
        }
        worst = worst.max((sf as f64 - x).abs());
        if (sf as f64 - x).abs() > 1.0 {
            return outcome(false, format!("alpha={alpha} r={r}: |sf - r alpha| = {}", (sf as f64 - x).abs()));
        }
        done += 1;
    }
    outcome(true, format!("50 families exact at N=200, max |sf - r alpha| = {worst:.3}"))
}

fn criterion_3() -> Outcome {
    let cutoff = 200;
    let window = 100.0;
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        let c = f64::from(k) / 10.0;
        let eigs: Vec<f64> = (-cutoff..=cutoff).map(|m| f64::from(m) + c).collect();
        let got = eta_heat_trace(&eigs, 0.0, &EtaOptions::arithmetic(window, 1.0)).unwrap().eta;
        // ζ_H(0, c) − ζ_H(0, 1 − c) with ζ_H(0, q) = 1/2 − q.
        let expected = 1.0 - 2.0 * c;
        let err = (got - expected).abs().max((circle_eta_oracle(c) - expected).abs());
        worst = worst.max(err);
    }
    let sym: Vec<f64> = (-cutoff..=cutoff).map(f64::from).collect();
    let sym_eta = eta_heat_trace(&sym, 0.0, &EtaOptions::symmetric(window)).unwrap().eta;
    outcome(
        worst <= 1e-6 && sym_eta.abs() <= 1e-12,
        format!("max |eta - (1 - 2c)| = {worst:.2e}, symmetric eta = {sym_eta:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let circle = experiment(&circle_text(0.3, 10.0, 200));
    let c = match verify_flow_eta_identity(&circle, 10.0) {
        Ok(rep) => rep,
        Err(e) => return outcome(false, format!("circle: {e}")),
    };
    let circle_terms_ok = c.sf == 3
        && (c.variation_integral - 3.0).abs() < 1e-9
        && (c.eta_start.reduced_eta - 0.5).abs() < 1e-9
        && (c.eta_end.reduced_eta - 0.5).abs() < 1e-9;
    let circle_ok = circle_terms_ok && c.residual().abs() < 1e-6;

    let torus = experiment(TORUS_SINE);
    let t = match verify_flow_eta_identity(&torus, 8.0) {
        Ok(rep) => rep,
        Err(e) => return outcome(false, format!("torus: {e}")),
    };
    let torus_ok = t.residual().abs() < 1e-2;
    let trend = match refinement_trend(&torus, 8.0, &[4, 5, 6]) {
        Ok(reps) => reps,
        Err(e) => return outcome(false, format!("torus trend: {e}")),
    };
    let mono = nonincreasing(&trend);
    let residuals: Vec<String> = trend.iter().map(|r| format!("{:.1e}", r.residual())).collect();
    outcome(
        circle_ok && torus_ok && mono,
        format!(
            "circle residual {:.1e} ({}); torus residual {:.1e} ({}), N=4,5,6 residuals [{}], truncation shift at N=5 {:.2e}",
            c.residual(),
            c.convention.map_or("none", |s| s.name()),
            t.residual(),
            t.convention.map_or("none", |s| s.name()),
            residuals.join(", "),
            t.stability
        ),
    )
}

fn criteria_5_and_6() -> (Outcome, Outcome) {
    let rep = sweep(&experiment(TORUS_SINE));
    let limit = rep.exponent_limit();
    let exponent = match &rep.error_fit {
        Some(f) => format!("fitted exponent {:.3} (limit {limit})", f.slope),
        None => format!("no fit ({})", rep.notes.join("; ")),
    };
    let five = outcome(
        rep.flow_pass,
        format!("{exponent}, max error/R^1.5 = {:.3e}", rep.error_quotient.0),
    );
    let six = outcome(
        rep.eta_pass,
        format!(
            "|eta_bar(D1)|/R^1.5 spread {:.3} (limit 10), informational",
            rep.eta_quotient.1
        ),
    );
    (five, six)
}

/// Taylor coefficients of `log(sinh y / y)` in powers of `y²`, from the
/// series `sinh y / y = Σ y^{2k}/(2k+1)!` and `log(1+g)' = g'/(1+g)`.
fn log_sinhc_series(terms: usize) -> Vec<f64> {
    let mut fact = vec![1.0f64; 2 * terms + 2];
    for k in 1..fact.len() {
        fact[k] = fact[k - 1] * k as f64;
    }
    let s: Vec<f64> = (0..=terms).map(|k| 1.0 / fact[2 * k + 1]).collect();
    // L = Σ l_k t^k with t = y²; k l_k = k s_k − Σ_{j=1}^{k−1} j l_j s_{k−j}.
    let mut l = vec![0.0; terms + 1];
    for k in 1..=terms {
        let mut acc = k as f64 * s[k];
        for j in 1..k {
            acc -= j as f64 * l[j] * s[k - j];
        }
        l[k] = acc / k as f64;
    }
    l[1..].to_vec()
}

/// Taylor coefficients of `w / sin w` in powers of `w²`, by inverting the
/// series of `sin w / w`.
fn w_over_sin_series(terms: usize) -> Vec<f64> {
    let mut fact = vec![1.0f64; 2 * terms + 2];
    for k in 1..fact.len() {
        fact[k] = fact[k - 1] * k as f64;
    }
    let s: Vec<f64> = (0..=terms).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / fact[2 * k + 1]).collect();
    let mut d = vec![0.0; terms + 1];
    d[0] = 1.0;
    for k in 1..=terms {
        d[k] = -(1..=k).map(|j| s[j] * d[k - j]).sum::<f64>();
    }
    d
}

fn criterion_7() -> Outcome {
    let inp = MehlerInput::planar(1.0, 0.5, [0.3, 0.0]);
    let kernel = mehler_kernel(&inp).unwrap()[(0, 0)].re;
    let oracle = match oscillator_oracle(&inp.omega, 0.5, &[0.3, 0.0], &OracleGrid::default()) {
        Ok(o) => o.value,
        Err(e) => return outcome(false, format!("oracle: {e}")),
    };
    let pde = (kernel - oracle).abs();

    let mut gauss: f64 = 0.0;
    for (n, u, x) in [(1usize, 0.7, vec![0.4]), (2, 0.3, vec![0.2, -0.5]), (3, 1.3, vec![1.0, 0.0, -2.0])] {
        let k = mehler_kernel(&MehlerInput::new(vec![vec![0.0; n]; n], u, x.clone())).unwrap()[(0, 0)].re;
        let x2: f64 = x.iter().map(|v| v * v).sum();
        let g = (4.0 * PI * u).powf(-(n as f64) / 2.0) * (-x2 / (4.0 * u)).exp();
        gauss = gauss.max((k - g).abs() / g);
    }

    let series = log_sinhc_series(LOG_SINHC_COEFFS.len());
    let coeff_err = LOG_SINHC_COEFFS
        .iter()
        .zip(&series)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);

    // Ω = [[0, θβ], [−θβ, 0]], β = Σ_k dx^{2k−1}∧dx^{2k} over eight pairs in
    // n = 17: Â reduces to w/sin w with w = θβ/4π, and the coefficient of
    // dx^1…dx^{4m} is d_m (θ/4π)^{2m} (2m)!.
    let n = 17;
    let theta = 0.9;
    let mut omega = MatrixForm::zero(n, 2);
    for k in 0..8 {
        for (row, col, sign) in [(0, 1, 1.0), (1, 0, -1.0)] {
            let mut c = CMatrix::zeros(2, 2);
            c[(row, col)] = Complex64::new(sign * theta, 0.0);
            omega = omega.add(&MatrixForm::monomial(n, &[2 * k, 2 * k + 1], vec![0; n], c)).unwrap();
        }
    }
    let ah = a_hat(&omega, n).unwrap();
    let d = w_over_sin_series(4);
    let mut ahat_err: f64 = 0.0;
    for m in 1..=4usize {
        let idx: Vec<usize> = (0..4 * m).collect();
        let got = ah.coefficient(&idx, &[0; 17]).map_or(Complex64::new(0.0, 0.0), |c| c[(0, 0)]);
        let fact: f64 = (1..=2 * m).map(|v| v as f64).product();
        let expected = d[m] * (theta / (4.0 * PI)).powi(2 * m as i32) * fact;
        ahat_err = ahat_err.max(((got.re - expected) / expected).abs()).max(got.im.abs() / expected.abs());
    }
    outcome(
        pde <= 1e-6 && gauss <= 1e-12 && coeff_err <= 1e-12 && ahat_err <= 1e-12,
        format!(
            "PDE oracle diff {pde:.2e}, Gaussian rel diff {gauss:.1e}, log(sinh x/x) coeff rel diff {coeff_err:.1e}, A-hat degree 4..16 rel diff {ahat_err:.1e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut compared = 0;
    let configs = [TORUS_SINE.to_string(), circle_text(0.3, 10.0, 200)];
    for text in &configs {
        for cmd in [Command::Flow, Command::Eta, Command::Predict, Command::Verify, Command::Sweep] {
            let a = run(&experiment(text), cmd).unwrap();
            let b = run(&experiment(text), cmd).unwrap();
            for ((name_a, body_a), (name_b, body_b)) in a.files.iter().zip(&b.files) {
                if !name_a.ends_with(".csv") {
                    continue;
                }
                if name_a != name_b || body_a.as_bytes() != body_b.as_bytes() {
                    return outcome(false, format!("{} differs between runs", name_a));
                }
                compared += 1;
            }
        }
    }
    outcome(true, format!("{compared} CSV files byte-identical across two runs"))
}

fn report(id: &str, limit: Duration, start: Instant, o: Outcome) -> bool {
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = o.pass && in_time;
    println!(
        "criterion {id}: {} [{:.2} s, limit {} s] {}{}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        o.detail,
        if in_time { "" } else { " (over time limit)" }
    );
    pass
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    all &= report("1 clifford traces", Duration::from_secs(1), t, criterion_1());
    let t = Instant::now();
    all &= report("2 circle flow", Duration::from_secs(120), t, criterion_2());
    let t = Instant::now();
    all &= report("3 circle eta", Duration::from_secs(60), t, criterion_3());
    let t = Instant::now();
    all &= report("4 flow-eta identity", Duration::from_secs(20 * 60), t, criterion_4());
    let t = Instant::now();
    let (five, six) = criteria_5_and_6();
    all &= report("5 flow growth exponent", Duration::from_secs(45 * 60), t, five);
    all &= report("6 eta growth (informational)", Duration::from_secs(45 * 60), t, six);
    let t = Instant::now();
    all &= report("7 mehler kernel", Duration::from_secs(10 * 60), t, criterion_7());
    let t = Instant::now();
    all &= report("8 reproducibility", Duration::from_secs(30 * 60), t, criterion_8());
    if !all {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}
