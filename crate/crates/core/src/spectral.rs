//! Dense Hermitian eigensolver, band grids over the Brillouin-like zone and
//! band gaps.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{bloch_hamiltonian, BlochMomentum, HermitianMatrix, ModulationParams, HERMITIAN_TOL};

/// Ascending eigenvalues with orthonormal eigenvectors stored column by column.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    dim: usize,
    pub values: Vec<f64>,
    vectors: Vec<Complex64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvector belonging to `values[n]`.
    pub fn vector(&self, n: usize) -> &[Complex64] {
        &self.vectors[n * self.dim..(n + 1) * self.dim]
    }

    pub fn vector_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.vectors[n * self.dim..(n + 1) * self.dim]
    }

    /// `max_n ‖H v_n − E_n v_n‖ / max(1, |E_n|)`.
    pub fn max_relative_residual(&self, h: &HermitianMatrix) -> f64 {
        (0..self.dim)
            .map(|n| {
                let v = self.vector(n);
                let e = self.values[n];
                let r: f64 = (0..self.dim)
                    .map(|r| {
                        let hv: Complex64 = (0..self.dim).map(|c| h.get(r, c) * v[c]).sum();
                        (hv - v[r] * e).norm_sqr()
                    })
                    .sum();
                r.sqrt() / e.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `max |V† V − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..self.dim {
            for b in a..self.dim {
                let dot: Complex64 = self
                    .vector(a)
                    .iter()
                    .zip(self.vector(b))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Real input goes through the real symmetric solver; eigenvectors come back
/// with zero imaginary part in that case.
pub fn eigh(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NonHermitianInput(defect));
    }
    let n = h.dim();
    let (values, columns): (Vec<f64>, Vec<Vec<Complex64>>) = if h.is_real() {
        let m = DMatrix::from_fn(n, n, |r, c| h.get(r, c).re);
        let eig = SymmetricEigen::new(m);
        let cols = (0..n)
            .map(|k| eig.eigenvectors.column(k).iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        (eig.eigenvalues.iter().copied().collect(), cols)
    } else {
        let m = DMatrix::from_fn(n, n, |r, c| h.get(r, c));
        let eig = SymmetricEigen::new(m);
        let cols = (0..n).map(|k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
        (eig.eigenvalues.iter().copied().collect(), cols)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        vectors.extend_from_slice(&columns[k]);
    }
    Ok(EigenDecomposition { dim: n, values: order.iter().map(|&k| values[k]).collect(), vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NonHermitianInput(defect));
    }
    let n = h.dim();
    let mut values: Vec<f64> = if h.is_real() {
        let m = DMatrix::from_fn(n, n, |r, c| h.get(r, c).re);
        m.symmetric_eigenvalues().iter().copied().collect()
    } else {
        let m = DMatrix::from_fn(n, n, |r, c| h.get(r, c));
        m.symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Uniform mesh over `(-π/q, π/q] × (0, 2π]`, excluding the lower edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZoneMesh {
    pub nx: usize,
    pub ny: usize,
    pub q: usize,
}

impl ZoneMesh {
    pub fn new(nx: usize, ny: usize, q: usize) -> Self {
        Self { nx, ny, q }
    }

    pub fn kx(&self, ix: usize) -> f64 {
        let w = TAU / self.q as f64;
        -PI / self.q as f64 + w * (ix + 1) as f64 / self.nx as f64
    }

    pub fn ky(&self, iy: usize) -> f64 {
        TAU * (iy + 1) as f64 / self.ny as f64
    }

    pub fn momentum(&self, ix: usize, iy: usize) -> BlochMomentum {
        BlochMomentum { kx: self.kx(ix), ky: self.ky(iy) }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Bloch spectra on a zone mesh; point `(ix, iy)` is stored at `ix * ny + iy`.
#[derive(Debug, Clone)]
pub struct BandGrid {
    pub mesh: ZoneMesh,
    points: Vec<EigenDecomposition>,
}

impl BandGrid {
    pub fn bands(&self) -> usize {
        self.mesh.q
    }

    pub fn point(&self, ix: usize, iy: usize) -> &EigenDecomposition {
        &self.points[ix * self.mesh.ny + iy]
    }

    pub fn energy(&self, band: usize, ix: usize, iy: usize) -> f64 {
        self.point(ix, iy).values[band]
    }

    pub fn state(&self, band: usize, ix: usize, iy: usize) -> &[Complex64] {
        self.point(ix, iy).vector(band)
    }

    pub fn points(&self) -> &[EigenDecomposition] {
        &self.points
    }

    /// Pointwise `min (E_{n+1} − E_n)` for every adjacent pair, `n = 0..q-1`.
    pub fn gaps(&self) -> Vec<f64> {
        (0..self.bands().saturating_sub(1))
            .map(|n| {
                self.points
                    .iter()
                    .map(|p| p.values[n + 1] - p.values[n])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

pub fn band_grid(params: &ModulationParams, nx: usize, ny: usize) -> Result<BandGrid> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParameter(format!("band grid needs nx, ny >= 2, got {nx}x{ny}")));
    }
    let mesh = ZoneMesh::new(nx, ny, params.q());
    let points = (0..mesh.len())
        .into_par_iter()
        .map(|i| eigh(&bloch_hamiltonian(params, mesh.momentum(i / ny, i % ny))))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandGrid { mesh, points })
}

/// Gap `G_n` between bands `n` and `n + 1`, with `n` counted from 1.
///
/// Negative values mean the bands overlap somewhere on the mesh.
pub fn band_gap(grid: &BandGrid, n: usize) -> Result<f64> {
    let bands = grid.bands();
    if n == 0 || n >= bands {
        return Err(Error::BandIndexOutOfRange { index: n, bands });
    }
    Ok(grid
        .points
        .iter()
        .map(|p| p.values[n] - p.values[n - 1])
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapScanRow {
    pub nu_od_over_j: f64,
    /// `G_1..G_{q-1}` in units of `J`.
    pub gaps: Vec<f64>,
}

/// Gaps as a function of `ν_od/J`, other parameters taken from `template`.
pub fn gap_scan(
    template: &ModulationParams,
    ratios: &[f64],
    nx: usize,
    ny: usize,
) -> Result<Vec<GapScanRow>> {
    if let Some(bad) = ratios.iter().find(|r| !r.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite ratio {bad}")));
    }
    ratios
        .par_iter()
        .map(|&r| {
            let params = ModulationParams { nu_od: r * template.j, ..*template };
            let grid = band_grid(&params, nx, ny)?;
            let gaps = grid.gaps().into_iter().map(|g| g / template.j).collect();
            Ok(GapScanRow { nu_od_over_j: r, gaps })
        })
        .collect()
}

/// Ratio minimizing gap `n` (1-based) over the scan, with the minimum value.
pub fn closure_point(table: &[GapScanRow], n: usize) -> Option<(f64, f64)> {
    table
        .iter()
        .filter_map(|row| row.gaps.get(n - 1).map(|&g| (row.nu_od_over_j, g)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Gap `n` (1-based) minimized continuously over the zone.
///
/// Starts a compass search at the few lowest mesh points of `grid`; used to
/// follow closures that fall between mesh points.
pub fn refined_gap(params: &ModulationParams, grid: &BandGrid, n: usize) -> Result<f64> {
    let bands = grid.bands();
    if n == 0 || n >= bands {
        return Err(Error::BandIndexOutOfRange { index: n, bands });
    }
    let gap_at = |kx: f64, ky: f64| -> Result<f64> {
        let e = eigvalsh(&bloch_hamiltonian(params, BlochMomentum { kx, ky }))?;
        Ok(e[n] - e[n - 1])
    };
    let mesh = grid.mesh;
    let mut seeds: Vec<(f64, usize)> = grid
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.values[n] - p.values[n - 1], i))
        .collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let step0 = (TAU / mesh.q as f64 / mesh.nx as f64).max(TAU / mesh.ny as f64);
    let mut best = f64::INFINITY;
    for &(g0, i) in seeds.iter().take(4) {
        let (mut kx, mut ky, mut g) = (mesh.kx(i / mesh.ny), mesh.ky(i % mesh.ny), g0);
        let mut step = step0;
        while step > 1e-12 {
            let mut moved = false;
            for (dx, dy) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let trial = gap_at(kx + dx, ky + dy)?;
                if trial < g {
                    (kx, ky, g) = (kx + dx, ky + dy, trial);
                    moved = true;
                    break;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.min(g);
    }
    Ok(best)
}

/// Like [`gap_scan`], with every gap refined by [`refined_gap`].
pub fn gap_scan_refined(
    template: &ModulationParams,
    ratios: &[f64],
    nx: usize,
    ny: usize,
) -> Result<Vec<GapScanRow>> {
    ratios
        .par_iter()
        .map(|&r| {
            let params = ModulationParams { nu_od: r * template.j, ..*template };
            let grid = band_grid(&params, nx, ny)?;
            let gaps = (1..grid.bands())
                .map(|n| refined_gap(&params, &grid, n).map(|g| g / template.j))
                .collect::<Result<Vec<_>>>()?;
            Ok(GapScanRow { nu_od_over_j: r, gaps })
        })
        .collect()
}
