//! Hermitian eigensolver and eigenvalue-path tracking over a parameter grid.

mod eigh;
mod track;

pub use eigh::{eigh, eigvalsh, HermitianEigen};
pub use track::{
    track, track_interval, FlowTrajectory, Path, SectorTrajectory, TrackOptions,
};

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::CMatrix;

/// Spectrum of one operator of the family. When produced by the tracker it
/// holds only the eigenpairs inside the (extended) tracking window.
#[derive(Clone, Debug)]
pub struct SpectrumSnapshot {
    pub s: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
}

impl SpectrumSnapshot {
    pub fn compute(matrix: &CMatrix, s: f64, want_vectors: bool) -> Result<Self> {
        let eig = eigh(matrix, want_vectors)?;
        Ok(Self {
            s,
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
        })
    }

    /// Keeps only eigenpairs with `|λ| <= window`.
    pub fn windowed(mut self, window: f64) -> Self {
        let keep: Vec<bool> = self.eigenvalues.iter().map(|l| l.abs() <= window).collect();
        let mut it = keep.iter();
        self.eigenvalues.retain(|_| *it.next().unwrap());
        if let Some(vecs) = self.eigenvectors.as_mut() {
            let mut it = keep.iter();
            vecs.retain(|_| *it.next().unwrap());
        }
        self
    }
}

/// A one-parameter family of Hermitian matrices, possibly block-diagonal.
///
/// Each sector is an independent diagonal block; eigenvector overlaps across
/// sectors vanish, so sectors are tracked separately.
pub trait HermitianFamily: Sync {
    fn sector_count(&self) -> usize;

    fn sector_label(&self, sector: usize) -> String;

    fn matrix(&self, sector: usize, s: f64) -> CMatrix;

    /// Upper bound on `‖dA/ds‖` (operator norm), used for Lipschitz checks
    /// and to size the matching band.
    fn lipschitz(&self) -> f64;
}

/// Single-block family backed by a closure.
pub struct FnFamily<F> {
    f: F,
    lipschitz: f64,
}

impl<F: Fn(f64) -> CMatrix + Sync> FnFamily<F> {
    pub fn new(f: F, lipschitz: f64) -> Self {
        Self { f, lipschitz }
    }
}

impl<F: Fn(f64) -> CMatrix + Sync> HermitianFamily for FnFamily<F> {
    fn sector_count(&self) -> usize {
        1
    }

    fn sector_label(&self, _sector: usize) -> String {
        "all".to_string()
    }

    fn matrix(&self, _sector: usize, s: f64) -> CMatrix {
        (self.f)(s)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Reparameterizes a family by `s ↦ 1 - s`.
pub struct Reversed<'a, T: ?Sized>(pub &'a T);

impl<T: HermitianFamily + ?Sized> HermitianFamily for Reversed<'_, T> {
    fn sector_count(&self) -> usize {
        self.0.sector_count()
    }

    fn sector_label(&self, sector: usize) -> String {
        self.0.sector_label(sector)
    }

    fn matrix(&self, sector: usize, s: f64) -> CMatrix {
        self.0.matrix(sector, 1.0 - s)
    }

    fn lipschitz(&self) -> f64 {
        self.0.lipschitz()
    }
}
