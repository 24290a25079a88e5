//! Open-chain spectral flow, edge-state labelling and winding numbers.
//!
//! As `k_y` runs once around `[0, 2π)` the in-gap levels of an open chain
//! sweep across each bulk gap. Counting their signed crossings of a fixed
//! in-gap energy gives one winding number per gap; the bulk Chern numbers are
//! the differences of neighbouring windings with `I_0 = I_q = 0`.

use std::f64::consts::TAU;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{open_hamiltonian, ModulationParams, OpenChainSpec};
use crate::spectral::{band_grid, eigh};
use crate::topology::{chern_numbers, ChernVector};

pub const DEFAULT_EDGE_WIDTH: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_KY_SAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeLabel {
    Bulk,
    LeftEdge,
    RightEdge,
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeLabel::Bulk => "bulk",
            EdgeLabel::LeftEdge => "left",
            EdgeLabel::RightEdge => "right",
        })
    }
}

/// Weight of `state` on the first and on the last `m` sites.
pub fn edge_weight<T>(state: &[T], m: usize) -> Result<(f64, f64)>
where
    T: Copy + Into<num_complex::Complex64>,
{
    let n = state.len();
    if m == 0 || 4 * m > n {
        return Err(Error::InvalidParameter(format!("edge width {m} must lie in 1..={}", n / 4)));
    }
    let w = |s: &[T]| s.iter().map(|&z| z.into().norm_sqr()).sum::<f64>();
    let total = w(state);
    Ok((w(&state[..m]) / total, w(&state[n - m..]) / total))
}

/// Open-chain spectrum versus `k_y`, one row per sample.
#[derive(Debug, Clone)]
pub struct SpectralFlow {
    pub ky_samples: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
    pub edge_labels: Vec<Vec<EdgeLabel>>,
}

impl SpectralFlow {
    pub fn num_sites(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    /// `max |E_n + E_{N-1-n}|` over all samples.
    pub fn mirror_asymmetry(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|e| e.iter().zip(e.iter().rev()).map(|(a, b)| (a + b).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn spectral_flow(
    params: &ModulationParams,
    num_sites: usize,
    n_ky: usize,
    edge_width: usize,
    threshold: f64,
) -> Result<SpectralFlow> {
    let q = params.q();
    if num_sites < 2 * q {
        return Err(Error::InvalidParameter(format!("open chain needs N >= 2q = {}, got {num_sites}", 2 * q)));
    }
    if n_ky < 50 {
        return Err(Error::InvalidParameter(format!("need at least 50 ky samples, got {n_ky}")));
    }
    let ky_samples: Vec<f64> = (0..n_ky).map(|i| TAU * i as f64 / n_ky as f64).collect();
    let rows = ky_samples
        .par_iter()
        .map(|&ky| {
            let h = open_hamiltonian(params, OpenChainSpec { num_sites, ky })?;
            let eig = eigh(&h)?;
            let labels = (0..num_sites)
                .map(|n| {
                    let (left, right) = edge_weight(eig.vector(n), edge_width)?;
                    Ok(if left > threshold {
                        EdgeLabel::LeftEdge
                    } else if right > threshold {
                        EdgeLabel::RightEdge
                    } else {
                        EdgeLabel::Bulk
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((eig.values, labels))
        })
        .collect::<Result<Vec<_>>>()?;
    let (levels, edge_labels) = rows.into_iter().unzip();
    Ok(SpectralFlow { ky_samples, levels, edge_labels })
}

/// Gap centres of the periodic band structure, one per gap.
pub fn fiducial_energies(params: &ModulationParams, nx: usize, ny: usize) -> Result<Vec<f64>> {
    let grid = band_grid(params, nx, ny)?;
    let q = grid.bands();
    Ok((0..q - 1)
        .map(|n| {
            let top = grid.points().iter().map(|p| p.values[n]).fold(f64::NEG_INFINITY, f64::max);
            let bottom = grid.points().iter().map(|p| p.values[n + 1]).fold(f64::INFINITY, f64::min);
            0.5 * (top + bottom)
        })
        .collect())
}

/// Signed crossing counts per gap.
///
/// `windings[n]` is the count over right-edge branches; with the site
/// numbering used here it equals `−left_counts[n]`, and these are the
/// values that satisfy `C_n = I_n − I_{n−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindingVector {
    pub windings: Vec<i32>,
    pub left_counts: Vec<i32>,
    pub right_counts: Vec<i32>,
    /// Unsigned crossings per gap, i.e. the number of edge branches traversing it.
    pub edge_branches: Vec<usize>,
}

impl WindingVector {
    pub fn left_right_antisymmetric(&self) -> bool {
        self.left_counts.iter().zip(&self.right_counts).all(|(l, r)| l + r == 0)
    }
}

pub fn winding_numbers(flow: &SpectralFlow, fiducials: &[f64]) -> Result<WindingVector> {
    let n_ky = flow.ky_samples.len();
    let mut left_counts = Vec::with_capacity(fiducials.len());
    let mut right_counts = Vec::with_capacity(fiducials.len());
    let mut edge_branches = Vec::with_capacity(fiducials.len());
    for (gap, &f) in fiducials.iter().enumerate() {
        let (mut left, mut right, mut branches) = (0, 0, 0);
        for i in 0..n_ky {
            let next = (i + 1) % n_ky;
            for level in 0..flow.num_sites() {
                let a = flow.levels[i][level] - f;
                let b = flow.levels[next][level] - f;
                let touches_bulk = |idx: usize, d: f64| {
                    flow.edge_labels[idx][level] == EdgeLabel::Bulk && d.abs() < 1e-12
                };
                if touches_bulk(i, a) {
                    return Err(Error::FiducialInGapViolation { gap: gap + 1, energy: f, ky: flow.ky_samples[i] });
                }
                if (a < 0.0) == (b < 0.0) {
                    continue;
                }
                // the endpoint nearer the crossing decides the label
                let (near, far) = if a.abs() <= b.abs() { (i, next) } else { (next, i) };
                let label = match flow.edge_labels[near][level] {
                    EdgeLabel::Bulk => flow.edge_labels[far][level],
                    l => l,
                };
                let sign = if b > a { 1 } else { -1 };
                branches += 1;
                match label {
                    EdgeLabel::LeftEdge => left += sign,
                    EdgeLabel::RightEdge => right += sign,
                    EdgeLabel::Bulk => {
                        return Err(Error::FiducialInGapViolation {
                            gap: gap + 1,
                            energy: f,
                            ky: flow.ky_samples[i],
                        })
                    }
                }
            }
        }
        left_counts.push(left);
        right_counts.push(right);
        edge_branches.push(branches);
    }
    Ok(WindingVector { windings: right_counts.clone(), left_counts, right_counts, edge_branches })
}

/// Chern numbers implied by windings, `C_n = I_n − I_{n−1}` with `I_0 = I_q = 0`.
pub fn cherns_from_windings(windings: &[i32]) -> Vec<i32> {
    let mut padded = Vec::with_capacity(windings.len() + 2);
    padded.push(0);
    padded.extend_from_slice(windings);
    padded.push(0);
    padded.windows(2).map(|w| w[1] - w[0]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BulkEdgeReport {
    /// Fiducial energy inside each gap.
    pub gaps: Vec<f64>,
    pub windings: Vec<i32>,
    pub cherns: ChernVector,
    pub cherns_from_windings: Vec<i32>,
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeSettings {
    pub num_sites: usize,
    pub n_ky: usize,
    pub edge_width: usize,
    pub threshold: f64,
    pub mesh: usize,
    pub gap_tol: f64,
}

impl Default for EdgeSettings {
    fn default() -> Self {
        Self {
            num_sites: 89,
            n_ky: DEFAULT_KY_SAMPLES,
            edge_width: DEFAULT_EDGE_WIDTH,
            threshold: DEFAULT_THRESHOLD,
            mesh: crate::topology::DEFAULT_MESH,
            gap_tol: crate::topology::DEFAULT_GAP_TOL,
        }
    }
}

/// Computes the bulk Chern numbers and the edge windings independently and
/// compares them.
pub fn bulk_edge_check(params: &ModulationParams, settings: &EdgeSettings) -> Result<(BulkEdgeReport, SpectralFlow)> {
    let cherns = chern_numbers(params, settings.mesh, settings.mesh, settings.gap_tol * params.j)?;
    let fiducials = fiducial_energies(params, settings.mesh, settings.mesh)?;
    let flow = spectral_flow(params, settings.num_sites, settings.n_ky, settings.edge_width, settings.threshold)?;
    let winding = winding_numbers(&flow, &fiducials)?;
    let implied = cherns_from_windings(&winding.windings);
    let consistent = cherns.integers().is_some_and(|c| c == implied) && winding.left_right_antisymmetric();
    let report = BulkEdgeReport {
        gaps: fiducials,
        windings: winding.windings,
        cherns,
        cherns_from_windings: implied,
        consistent,
    };
    Ok((report, flow))
}
