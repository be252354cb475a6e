//! Matrix of `D_s = D_0 + s·r·c(a)` in the truncated Fourier ⊗ spinor ⊗ fiber
//! basis.
//!
//! Basis order is lexicographic in (mode, spinor index, fiber index); modes
//! run over `[-N, N]^n` with the first component most significant. The free
//! operator is block-diagonal, with block `Σ_j (i m_j) c(e_j) ⊗ Id_k` at mode
//! `m`, and the gauge term couples mode `m` to `m + m'` through
//! `c(e_j) ⊗ â[j, m']`.
//!
//! When every coefficient of the gauge field has a zero momentum component
//! along some direction, that momentum is conserved and the matrix splits into
//! exact diagonal blocks ("sectors"). If in addition the field has no
//! `dx^j` component, `c(e_j)` anticommutes with the rest of the block and
//! `D² = m_j² + (rest)²`, so sectors with large conserved momentum carry no
//! small eigenvalues.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::clifford::{build_generators, CliffordRep};
use crate::eigen::{eigvalsh, HermitianFamily};
use crate::error::{Error, Result};
use crate::gauge::{lattice_cube, sample_grid, sampling_density, GaugeField, ManifoldModel};
use crate::linalg::{CMatrix, I};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    pub n: usize,
    pub cutoff: usize,
    pub dim_spinor: usize,
    pub rank: usize,
}

impl Basis {
    pub fn mode_count(&self) -> usize {
        (2 * self.cutoff + 1).pow(self.n as u32)
    }

    pub fn dim(&self) -> usize {
        self.mode_count() * self.dim_spinor * self.rank
    }

    pub fn index(&self, mode: usize, spinor: usize, fiber: usize) -> usize {
        (mode * self.dim_spinor + spinor) * self.rank + fiber
    }
}

#[derive(Clone, Debug)]
pub struct DiracMatrix {
    pub matrix: CMatrix,
    pub basis: Basis,
    pub s: f64,
    pub r: f64,
    pub model: ManifoldModel,
}

impl DiracMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Debug dump: a header line, then `row col re im` for each nonzero.
    pub fn dump(&self) -> String {
        let b = &self.basis;
        let mut out = format!(
            "dirac model={} n={} cutoff={} spinor={} rank={} s={:?} r={:?} dim={}\n",
            self.model.name(),
            b.n,
            b.cutoff,
            b.dim_spinor,
            b.rank,
            self.s,
            self.r,
            self.dim()
        );
        for i in 0..self.dim() {
            for (j, z) in self.matrix.row(i).iter().enumerate() {
                if *z != crate::linalg::ZERO {
                    let _ = writeln!(out, "{i} {j} {:?} {:?}", z.re, z.im);
                }
            }
        }
        out
    }
}

fn check_inputs(model: ManifoldModel, a: &GaugeField, rank: usize, cutoff: usize) -> Result<()> {
    if a.model() != model {
        return Err(Error::InvalidGauge(format!(
            "gauge field lives on {}, operator requested on {}",
            a.model().name(),
            model.name()
        )));
    }
    if a.rank() != rank {
        return Err(Error::RankMismatch { expected: rank, found: a.rank() });
    }
    let radius = a.mode_radius();
    if cutoff < radius + 1 {
        return Err(Error::TruncationBelowNyquist { cutoff, radius });
    }
    Ok(())
}

/// Block of the operator on the span of `modes` (which must be closed under
/// the couplings that stay inside the truncation).
fn assemble_on_modes(a: &GaugeField, rep: &CliffordRep, modes: &[Vec<i32>], s: f64, r: f64) -> CMatrix {
    let ds = rep.dim_spinor();
    let k = a.rank();
    let block = ds * k;
    let dim = modes.len() * block;
    let lookup: HashMap<&[i32], usize> = modes.iter().enumerate().map(|(i, m)| (m.as_slice(), i)).collect();
    let mut d = CMatrix::zeros(dim, dim);

    for (p, m) in modes.iter().enumerate() {
        let mut free = CMatrix::zeros(ds, ds);
        for (j, &mj) in m.iter().enumerate() {
            if mj != 0 {
                free = &free + &rep.generator(j).scale(I * f64::from(mj));
            }
        }
        for a_ in 0..ds {
            for b_ in 0..ds {
                let v = free[(a_, b_)];
                for f in 0..k {
                    d[(p * block + a_ * k + f, p * block + b_ * k + f)] = v;
                }
            }
        }
    }

    let coupling = s * r;
    if coupling != 0.0 {
        let terms: Vec<(&[i32], CMatrix)> = a
            .coefficients()
            .map(|(j, mp, c)| (mp, rep.generator(j).kron(c).scale_real(coupling)))
            .collect();
        let mut target = vec![0i32; a.dim()];
        for (q, m) in modes.iter().enumerate() {
            for (mp, t) in &terms {
                for (slot, (x, y)) in target.iter_mut().zip(m.iter().zip(mp.iter())) {
                    *slot = x + y;
                }
                let Some(&p) = lookup.get(target.as_slice()) else { continue };
                for u in 0..block {
                    for v in 0..block {
                        d[(p * block + u, q * block + v)] += t[(u, v)];
                    }
                }
            }
        }
    }
    d.hermitize();
    d
}

/// Dense matrix of `D_s` on the full truncated basis.
pub fn assemble(
    model: ManifoldModel,
    a: &GaugeField,
    rank: usize,
    cutoff: usize,
    s: f64,
    r: f64,
) -> Result<DiracMatrix> {
    check_inputs(model, a, rank, cutoff)?;
    let rep = build_generators(model.dim())?;
    let modes = lattice_cube(model.dim(), cutoff);
    let matrix = assemble_on_modes(a, &rep, &modes, s, r);
    Ok(DiracMatrix {
        matrix,
        basis: Basis { n: model.dim(), cutoff, dim_spinor: rep.dim_spinor(), rank },
        s,
        r,
        model,
    })
}

/// `r · sup_x ‖Σ_j c(e_j) ⊗ a_j(x)‖₂` over a uniform sample grid. This bounds
/// `‖dD_s/ds‖` for the truncated operator up to sampling error.
pub fn lipschitz_bound(a: &GaugeField, r: f64) -> Result<f64> {
    if a.is_zero() {
        return Ok(0.0);
    }
    let rep = build_generators(a.dim())?;
    let radius = a.mode_radius();
    let points = if radius == 0 { 1 } else { sampling_density(radius) };
    let mut sup: f64 = 0.0;
    for x in sample_grid(a.dim(), points) {
        let comps = a.eval_all(&x);
        let mut m = CMatrix::zeros(rep.dim_spinor() * a.rank(), rep.dim_spinor() * a.rank());
        for (j, aj) in comps.iter().enumerate() {
            if !aj.is_zero() {
                m = &m + &rep.generator(j).kron(aj);
            }
        }
        sup = sup.max(m.spectral_norm());
    }
    Ok(r * sup)
}

#[derive(Clone, Debug)]
struct Sector {
    label: String,
    modes: Vec<Vec<i32>>,
    /// `sqrt(Σ m_j²)` over directions where the block has a clean gap.
    gap_floor: f64,
}

/// The family `s ↦ D_s` for fixed gauge field, cutoff and coupling.
#[derive(Clone, Debug)]
pub struct DiracFamily {
    gauge: GaugeField,
    rep: CliffordRep,
    cutoff: usize,
    r: f64,
    lipschitz: f64,
    sectors: Vec<Sector>,
    active: Vec<usize>,
}

/// How the truncated matrix is split into blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decomposition {
    /// One dense block.
    Dense,
    /// Exact blocks by conserved momenta.
    Sectors,
}

impl DiracFamily {
    pub fn new(a: &GaugeField, cutoff: usize, r: f64, decomposition: Decomposition) -> Result<Self> {
        let model = a.model();
        check_inputs(model, a, a.rank(), cutoff)?;
        let n = model.dim();
        let rep = build_generators(n)?;
        let all = lattice_cube(n, cutoff);
        let conserved: Vec<usize> = match decomposition {
            Decomposition::Dense => Vec::new(),
            Decomposition::Sectors => (0..n).filter(|&j| a.conserves_momentum(j)).collect(),
        };
        let free: Vec<usize> = conserved.iter().copied().filter(|&j| !a.has_direction(j)).collect();

        let mut groups: Vec<(Vec<i32>, Vec<Vec<i32>>)> = Vec::new();
        let mut index: HashMap<Vec<i32>, usize> = HashMap::new();
        for m in all {
            let key: Vec<i32> = conserved.iter().map(|&j| m[j]).collect();
            let slot = *index.entry(key.clone()).or_insert_with(|| {
                groups.push((key, Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(m);
        }
        let sectors: Vec<Sector> = groups
            .into_iter()
            .map(|(key, modes)| {
                let label = if conserved.is_empty() {
                    "all".to_string()
                } else {
                    let parts: Vec<String> = (0..n)
                        .map(|j| match conserved.iter().position(|&c| c == j) {
                            Some(p) => key[p].to_string(),
                            None => "*".to_string(),
                        })
                        .collect();
                    format!("({})", parts.join(","))
                };
                let gap_floor = free
                    .iter()
                    .map(|&j| f64::from(modes[0][j]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                Sector { label, modes, gap_floor }
            })
            .collect();
        let active = (0..sectors.len()).collect();
        Ok(Self {
            gauge: a.clone(),
            lipschitz: lipschitz_bound(a, r)?,
            rep,
            cutoff,
            r,
            sectors,
            active,
        })
    }

    /// Drops sectors whose whole spectrum lies outside `[-window, window]`
    /// for every `s`. Only affects the `HermitianFamily` view.
    pub fn restrict_to_window(mut self, window: f64) -> Self {
        self.active = (0..self.sectors.len())
            .filter(|&i| self.sectors[i].gap_floor <= window)
            .collect();
        self
    }

    pub fn gauge(&self) -> &GaugeField {
        &self.gauge
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coupling(&self) -> f64 {
        self.r
    }

    pub fn total_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn dim(&self) -> usize {
        self.sectors.iter().map(|s| s.modes.len()).sum::<usize>() * self.rep.dim_spinor() * self.gauge.rank()
    }

    pub fn sector_matrix(&self, sector: usize, s: f64) -> CMatrix {
        assemble_on_modes(&self.gauge, &self.rep, &self.sectors[sector].modes, s, self.r)
    }

    /// Full truncated spectrum at `s`, sorted, from all sectors.
    pub fn spectrum(&self, s: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim());
        for i in 0..self.sectors.len() {
            out.extend(eigvalsh(&self.sector_matrix(i, s))?);
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

impl HermitianFamily for DiracFamily {
    fn sector_count(&self) -> usize {
        self.active.len()
    }

    fn sector_label(&self, sector: usize) -> String {
        self.sectors[self.active[sector]].label.clone()
    }

    fn matrix(&self, sector: usize, s: f64) -> CMatrix {
        self.sector_matrix(self.active[sector], s)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
