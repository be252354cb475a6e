//! Eigenvalue-path tracking across a parameter grid.
//!
//! Consecutive snapshots are matched by eigenvector overlap
//! `O[i,j] = |⟨v_i(s_t), v_j(s_t+1)⟩|²`, restricted to pairs whose eigenvalues
//! differ by at most the Lipschitz bound `L·Δs` (an analytic eigenvalue branch
//! cannot move faster than `‖dD/ds‖`). Assignment is greedy by descending
//! overlap. A pair is accepted when its overlap clears the threshold, or when
//! it sits inside a degenerate cluster whose subspace overlap clears it.
//!
//! Intervals that fail the overlap test are bisected down to `ds_min`; an
//! interval that still fails there is an unresolved crossing cluster.
//! Intervals where an eigenvalue jumps by more than half its gap are bisected
//! a bounded number of times (`gap_refine_levels`) without ever failing.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::{HermitianFamily, SpectrumSnapshot};
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::report::{csv_row, fmt_f64};

#[derive(Clone, Debug)]
pub struct TrackOptions {
    /// Half-width `Λ` of the tracked window `[-Λ, Λ]`.
    pub window: f64,
    /// Points of the initial uniform grid, endpoints included.
    pub initial_points: usize,
    pub ds_min: f64,
    pub overlap_threshold: f64,
    pub gap_refine_levels: u32,
}

impl TrackOptions {
    pub fn new(window: f64) -> Self {
        Self {
            window,
            initial_points: 101,
            ds_min: 1e-6,
            overlap_threshold: 0.7,
            gap_refine_levels: 4,
        }
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.initial_points = points;
        self
    }

    /// Half-width of the retention window for a family with the given
    /// Lipschitz constant tracked over an interval of length `span`.
    pub fn retained_window(&self, lipschitz: f64, span: f64) -> f64 {
        let ds = span / (self.initial_points.max(2) - 1) as f64;
        self.window + lipschitz * ds * 1.05 + 1e-9 * (1.0 + self.window)
    }
}

/// One sector's refined grid and matchings. Stored snapshots keep values
/// only; eigenvectors are dropped once an interval is matched.
#[derive(Clone, Debug)]
pub struct SectorTrajectory {
    pub sector: usize,
    pub label: String,
    pub snapshots: Vec<SpectrumSnapshot>,
    /// `matchings[t][i] = Some(j)`: eigenvalue `i` at grid point `t` continues
    /// as eigenvalue `j` at grid point `t + 1`.
    pub matchings: Vec<Vec<Option<usize>>>,
    pub min_overlap: f64,
}

impl SectorTrajectory {
    pub fn grid(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.s).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub id: usize,
    pub sector: usize,
    /// `(s, λ)` samples in increasing `s`.
    pub samples: Vec<(f64, f64)>,
    /// Grid index (within the sector) of the first sample.
    pub start_index: usize,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub s_lo: f64,
    pub s_hi: f64,
    pub window: f64,
    /// Retention window; eigenpairs with `window < |λ| <= retained_window`
    /// are kept so that paths can cross the window edge.
    pub retained_window: f64,
    pub lipschitz: f64,
    pub ds_min: f64,
    pub sectors: Vec<SectorTrajectory>,
    pub paths: Vec<Path>,
}

impl FlowTrajectory {
    /// Total number of snapshots over all sectors.
    pub fn total_snapshots(&self) -> usize {
        self.sectors.iter().map(|s| s.snapshots.len()).sum()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.paths
            .iter()
            .flat_map(|p| p.samples.iter())
            .filter(|(_, l)| l.abs() <= self.window)
            .fold(0.0, |m: f64, (_, l)| m.max(l.abs()))
    }

    /// Eigenvalues inside `[-window, window]` at the first grid point, sorted.
    pub fn start_spectrum(&self) -> Vec<f64> {
        self.endpoint_spectrum(true)
    }

    pub fn end_spectrum(&self) -> Vec<f64> {
        self.endpoint_spectrum(false)
    }

    fn endpoint_spectrum(&self, start: bool) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .sectors
            .iter()
            .flat_map(|sec| {
                let snap = if start { sec.snapshots.first() } else { sec.snapshots.last() };
                snap.map(|s| s.eigenvalues.clone()).unwrap_or_default()
            })
            .filter(|l| l.abs() <= self.window)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// Trajectory dump: `s,path_id,eigenvalue`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = csv_row(&["s".into(), "path_id".into(), "eigenvalue".into()]);
        for p in &self.paths {
            for &(s, l) in &p.samples {
                out.push_str(&csv_row(&[fmt_f64(s), p.id.to_string(), fmt_f64(l)]));
            }
        }
        out
    }
}

struct MatchOutcome {
    map: Vec<Option<usize>>,
    failure: Option<Vec<f64>>,
    wants_gap_refinement: bool,
    min_overlap: f64,
}

fn clusters(values: &[f64], tol: impl Fn(f64) -> f64) -> Vec<usize> {
    let mut ids = Vec::with_capacity(values.len());
    let mut id = 0;
    for (i, &v) in values.iter().enumerate() {
        if i > 0 && v - values[i - 1] > tol(v) {
            id += 1;
        }
        ids.push(id);
    }
    ids
}

fn match_snapshots(
    a: &SpectrumSnapshot,
    b: &SpectrumSnapshot,
    lipschitz: f64,
    window: f64,
    ds_min: f64,
    threshold: f64,
) -> MatchOutcome {
    let va = a.eigenvectors.as_ref().expect("tracker keeps vectors for active snapshots");
    let vb = b.eigenvectors.as_ref().expect("tracker keeps vectors for active snapshots");
    let (la, lb) = (&a.eigenvalues, &b.eigenvalues);
    let ds = (b.s - a.s).abs();
    let scale = 1.0 + la.iter().chain(lb.iter()).fold(0.0f64, |m, l| m.max(l.abs()));
    let band = lipschitz * ds * 1.05 + 1e-9 * scale;

    // Candidate pairs within the Lipschitz band (both lists sorted).
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    let mut lo = 0;
    for (i, &x) in la.iter().enumerate() {
        while lo < lb.len() && lb[lo] < x - band {
            lo += 1;
        }
        let mut j = lo;
        while j < lb.len() && lb[j] <= x + band {
            cand.push((inner(&va[i], &vb[j]).norm_sqr(), i, j));
            j += 1;
        }
    }
    cand.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));

    let mut map = vec![None; la.len()];
    let mut pre = vec![None; lb.len()];
    let mut overlap_of = vec![0.0; la.len()];
    for &(o, i, j) in &cand {
        if map[i].is_none() && pre[j].is_none() {
            map[i] = Some(j);
            pre[j] = Some(i);
            overlap_of[i] = o;
        }
    }

    let cluster_tol = |v: f64| 1e-9 * (1.0 + v.abs()) + lipschitz * ds_min;
    let ca = clusters(la, cluster_tol);
    let cb = clusters(lb, cluster_tol);
    let members = |ids: &[usize], id: usize| -> Vec<usize> {
        ids.iter().enumerate().filter(|(_, &c)| c == id).map(|(k, _)| k).collect()
    };

    let mut failure: Option<Vec<f64>> = None;
    let mut wants_gap_refinement = false;
    let mut min_overlap: f64 = 1.0;

    for i in 0..la.len() {
        let Some(j) = map[i] else {
            if la[i].abs() <= window {
                failure.get_or_insert_with(|| vec![la[i]]);
            }
            continue;
        };
        if la[i].abs().min(lb[j].abs()) > window {
            continue;
        }
        let o = overlap_of[i];
        let mut accepted = o >= threshold;
        if !accepted {
            let p = members(&ca, ca[i]);
            if p.len() > 1 {
                let image: Vec<usize> = p.iter().filter_map(|&k| map[k]).collect();
                let total: f64 = p
                    .iter()
                    .flat_map(|&k| image.iter().map(move |&m| (k, m)))
                    .map(|(k, m)| inner(&va[k], &vb[m]).norm_sqr())
                    .sum();
                accepted = total / p.len() as f64 >= threshold;
            }
        }
        if !accepted {
            let q = members(&cb, cb[j]);
            if q.len() > 1 {
                let preimage: Vec<usize> = q.iter().filter_map(|&m| pre[m]).collect();
                let total: f64 = q
                    .iter()
                    .flat_map(|&m| preimage.iter().map(move |&k| (k, m)))
                    .map(|(k, m)| inner(&va[k], &vb[m]).norm_sqr())
                    .sum();
                accepted = total / q.len() as f64 >= threshold;
            }
        }
        if accepted {
            min_overlap = min_overlap.min(o);
        } else if failure.is_none() {
            let p = members(&ca, ca[i]);
            let mut vals: Vec<f64> = p.iter().map(|&k| la[k]).collect();
            vals.push(lb[j]);
            failure = Some(vals);
        }

        let gap_a = la
            .iter()
            .enumerate()
            .filter(|(k, _)| ca[*k] != ca[i])
            .map(|(_, &v)| (v - la[i]).abs())
            .fold(f64::INFINITY, f64::min);
        let gap_b = lb
            .iter()
            .enumerate()
            .filter(|(k, _)| cb[*k] != cb[j])
            .map(|(_, &v)| (v - lb[j]).abs())
            .fold(f64::INFINITY, f64::min);
        if (lb[j] - la[i]).abs() > 0.5 * gap_a.min(gap_b) {
            wants_gap_refinement = true;
        }
    }
    for j in 0..lb.len() {
        if pre[j].is_none() && lb[j].abs() <= window && failure.is_none() {
            failure = Some(vec![lb[j]]);
        }
    }

    MatchOutcome {
        map,
        failure,
        wants_gap_refinement,
        min_overlap,
    }
}

fn snapshot<F: HermitianFamily + ?Sized>(family: &F, sector: usize, s: f64, keep: f64) -> Result<SpectrumSnapshot> {
    Ok(SpectrumSnapshot::compute(&family.matrix(sector, s), s, true)?.windowed(keep))
}

fn track_sector<F: HermitianFamily + ?Sized>(
    family: &F,
    sector: usize,
    grid: &[f64],
    keep: f64,
    opts: &TrackOptions,
) -> Result<SectorTrajectory> {
    let lipschitz = family.lipschitz();
    let ds_init = grid[1] - grid[0];
    let gap_floor = ds_init / f64::from(1u32 << opts.gap_refine_levels.min(30)) * (1.0 + 1e-9);

    let mut pending: VecDeque<SpectrumSnapshot> = grid
        .iter()
        .map(|&s| snapshot(family, sector, s, keep))
        .collect::<Result<_>>()?;
    let mut done = vec![pending.pop_front().expect("grid has at least two points")];
    let mut matchings = Vec::with_capacity(grid.len());
    let mut min_overlap: f64 = 1.0;

    while let Some(next) = pending.front() {
        let cur = done.last().expect("nonempty");
        let ds = next.s - cur.s;
        let out = match_snapshots(cur, next, lipschitz, opts.window, opts.ds_min, opts.overlap_threshold);
        let can_bisect = ds * 0.5 >= opts.ds_min;
        let bisect = match &out.failure {
            Some(cluster) if !can_bisect => {
                return Err(Error::UnresolvedCrossing {
                    s: cur.s,
                    sector: family.sector_label(sector),
                    cluster: cluster.clone(),
                });
            }
            Some(_) => true,
            None => out.wants_gap_refinement && can_bisect && ds > gap_floor,
        };
        if bisect {
            let mid = 0.5 * (cur.s + next.s);
            let snap = snapshot(family, sector, mid, keep)?;
            pending.push_front(snap);
            continue;
        }
        min_overlap = min_overlap.min(out.min_overlap);
        matchings.push(out.map);
        let next = pending.pop_front().expect("front exists");
        if let Some(prev) = done.last_mut() {
            prev.eigenvectors = None;
        }
        done.push(next);
    }
    if let Some(last) = done.last_mut() {
        last.eigenvectors = None;
    }
    Ok(SectorTrajectory {
        sector,
        label: family.sector_label(sector),
        snapshots: done,
        matchings,
        min_overlap,
    })
}

fn build_paths(sectors: &[SectorTrajectory]) -> Vec<Path> {
    let mut paths: Vec<Path> = Vec::new();
    for sec in sectors {
        let mut path_of: Vec<usize> = Vec::new();
        for (t, snap) in sec.snapshots.iter().enumerate() {
            let mut next_path_of = vec![usize::MAX; snap.eigenvalues.len()];
            if t > 0 {
                for (i, m) in sec.matchings[t - 1].iter().enumerate() {
                    if let Some(j) = *m {
                        next_path_of[j] = path_of[i];
                    }
                }
            }
            for (j, &lam) in snap.eigenvalues.iter().enumerate() {
                if next_path_of[j] == usize::MAX {
                    next_path_of[j] = paths.len();
                    paths.push(Path {
                        id: paths.len(),
                        sector: sec.sector,
                        samples: Vec::new(),
                        start_index: t,
                    });
                }
                paths[next_path_of[j]].samples.push((snap.s, lam));
            }
            path_of = next_path_of;
        }
    }
    paths
}

/// Tracks the family over `[0, 1]`.
pub fn track<F: HermitianFamily + ?Sized>(family: &F, opts: &TrackOptions) -> Result<FlowTrajectory> {
    track_interval(family, 0.0, 1.0, opts)
}

/// Tracks the family over `[s_lo, s_hi]` starting from a uniform grid.
pub fn track_interval<F: HermitianFamily + ?Sized>(
    family: &F,
    s_lo: f64,
    s_hi: f64,
    opts: &TrackOptions,
) -> Result<FlowTrajectory> {
    if !(s_hi > s_lo) || opts.initial_points < 2 {
        return Err(Error::BadGrid { lo: s_lo, hi: s_hi });
    }
    let n = opts.initial_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                s_hi
            } else {
                s_lo + (s_hi - s_lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let lipschitz = family.lipschitz();
    let keep = opts.retained_window(lipschitz, s_hi - s_lo);

    let sectors: Vec<SectorTrajectory> = (0..family.sector_count())
        .into_par_iter()
        .map(|sector| track_sector(family, sector, &grid, keep, opts))
        .collect::<Result<_>>()?;
    let paths = build_paths(&sectors);
    Ok(FlowTrajectory {
        s_lo,
        s_hi,
        window: opts.window,
        retained_window: keep,
        lipschitz,
        ds_min: opts.ds_min,
        sectors,
        paths,
    })
}
