//! Spectral flow: signed zero crossings along tracked eigenvalue paths.

use crate::eigen::FlowTrajectory;
use crate::error::{Error, Result};
use crate::report::{csv_row, fmt_f64};

/// Zero counts as nonnegative at both endpoints and along paths.
pub const ENDPOINT_CONVENTION: &str = "zero-is-nonnegative";

#[derive(Clone, Debug, PartialEq)]
pub struct Crossing {
    /// Interpolated parameter where the path crosses zero.
    pub s: f64,
    pub path_id: usize,
    /// `+1` for a negative-to-nonnegative crossing, `-1` otherwise.
    pub direction: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFlowResult {
    pub sf: i64,
    pub crossings: Vec<Crossing>,
    pub convention: &'static str,
    pub zero_tolerance: f64,
}

impl SpectralFlowResult {
    pub fn to_csv(&self) -> String {
        let mut out = csv_row(&["s".into(), "path_id".into(), "direction".into()]);
        for c in &self.crossings {
            out.push_str(&csv_row(&[fmt_f64(c.s), c.path_id.to_string(), c.direction.to_string()]));
        }
        out
    }
}

/// Counts signed crossings of zero over the tracked window.
///
/// Paths may enter or leave the retained window mid-interval, but only while
/// `|λ| >= window/2`; anything else means the window was too small to follow
/// every eigenvalue that can reach zero.
pub fn spectral_flow(traj: &FlowTrajectory) -> Result<SpectralFlowResult> {
    let zero_tol = 1e-8 * (1.0 + traj.max_abs_eigenvalue());
    let negative = |l: f64| l <= -zero_tol;
    let edge = 0.5 * traj.window;
    let mut crossings = Vec::new();

    for path in &traj.paths {
        let samples = &path.samples;
        let (s_first, l_first) = samples[0];
        let (s_last, l_last) = *samples.last().expect("paths are nonempty");
        if s_first > traj.s_lo && l_first.abs() < edge {
            return Err(Error::WindowExit { path: path.id, s: s_first, value: l_first });
        }
        if s_last < traj.s_hi && l_last.abs() < edge {
            return Err(Error::WindowExit { path: path.id, s: s_last, value: l_last });
        }
        for w in samples.windows(3) {
            let (s, l) = w[1];
            if l.abs() < zero_tol && negative(w[0].1) && negative(w[2].1) {
                return Err(Error::TangentialUnresolved { path: path.id, s });
            }
        }
        for w in samples.windows(2) {
            let ((s0, l0), (s1, l1)) = (w[0], w[1]);
            let (n0, n1) = (negative(l0), negative(l1));
            if n0 == n1 {
                continue;
            }
            let t = if l1 != l0 { (-l0 / (l1 - l0)).clamp(0.0, 1.0) } else { 0.5 };
            crossings.push(Crossing {
                s: s0 + t * (s1 - s0),
                path_id: path.id,
                direction: if n0 { 1 } else { -1 },
            });
        }
    }
    crossings.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.path_id.cmp(&b.path_id)));
    let sf = crossings.iter().map(|c| i64::from(c.direction)).sum();
    Ok(SpectralFlowResult {
        sf,
        crossings,
        convention: ENDPOINT_CONVENTION,
        zero_tolerance: zero_tol,
    })
}

/// Exact flow of the constant circle family with spectrum `{m + s·r·α}` under
/// the zero-is-nonnegative convention:
/// `#{m : m < 0 <= m + rα} - #{m : m + rα < 0 <= m}`.
pub fn circle_flow_oracle(alpha: f64, r: f64) -> i64 {
    let shift = r * alpha;
    if shift >= 0.0 {
        shift.floor() as i64
    } else {
        -((-shift).ceil() as i64)
    }
}
