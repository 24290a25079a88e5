//! Reduction of an index-modulated waveguide array to the generalized AAH
//! tight-binding model.
//!
//! Each guide contributes its isolated bound mode. The modes of the whole
//! array are symmetrically (Löwdin) orthogonalized, and the array operator is
//! projected onto them. On-site energies and bond hoppings at `z = 0` are then
//! fitted to first cosine harmonics in `2πβj`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::beam::{refractive_profile, ArrayVariant, OpticalConstants, WaveguideArrayDesign};
use crate::error::{Error, Result};
use crate::model::ModulationParams;

pub const DEFAULT_MODE_DX: f64 = 0.05;
/// Mode window width in guide spacings.
pub const DEFAULT_WINDOW_SPACINGS: f64 = 8.0;
pub const PHASE_TOLERANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeGrid {
    pub dx: f64,
    pub window_spacings: f64,
}

impl Default for ModeGrid {
    fn default() -> Self {
        Self { dx: DEFAULT_MODE_DX, window_spacings: DEFAULT_WINDOW_SPACINGS }
    }
}

/// Lowest bound mode of one guide, on the global lattice `x = m·dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedMode {
    /// Lattice index of `values[0]`.
    pub start: i64,
    pub dx: f64,
    /// Real profile with unit L² norm, positive at the guide centre.
    pub values: Vec<f64>,
    /// Eigenvalue of `−(1/2k₀)∂² − V`, in 1/μm.
    pub propagation_constant: f64,
    pub guide_center: f64,
}

impl LocalizedMode {
    pub fn x(&self, i: usize) -> f64 {
        (self.start + i as i64) as f64 * self.dx
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.dx
    }

    pub fn mean_position(&self) -> f64 {
        self.values.iter().enumerate().map(|(i, v)| self.x(i) * v * v).sum::<f64>() * self.dx
    }

    /// True when `ln|Φ|²` falls monotonically from `2·w_x` off the centre out to
    /// the outer tenth of the window.
    pub fn has_decaying_tails(&self, wx: f64) -> bool {
        let n = self.values.len();
        let margin = n / 10;
        let log = |i: usize| (self.values[i] * self.values[i]).ln();
        let inner_right = (0..n).find(|&i| self.x(i) >= self.guide_center + 2.0 * wx);
        let inner_left = (0..n).rev().find(|&i| self.x(i) <= self.guide_center - 2.0 * wx);
        let (Some(r), Some(l)) = (inner_right, inner_left) else {
            return false;
        };
        let right_ok = (r..n - margin).all(|i| log(i + 1) < log(i));
        let left_ok = (margin..l).all(|i| log(i) < log(i + 1));
        right_ok && left_ok
    }
}

fn kinetic_scale(constants: &OpticalConstants, dx: f64) -> f64 {
    1.0 / (2.0 * constants.k0() * dx * dx)
}

/// Bound mode of guide `j` alone, frozen at distance `z`.
pub fn localized_mode(
    constants: &OpticalConstants,
    design: &WaveguideArrayDesign,
    z: f64,
    j: i64,
    grid: &ModeGrid,
) -> Result<LocalizedMode> {
    if !(grid.dx > 0.0 && grid.window_spacings > 0.0) {
        return Err(Error::InvalidParameter("mode grid needs positive dx and window".into()));
    }
    let center = design.guide_center(j, z);
    let half = 0.5 * grid.window_spacings * design.ws;
    let start = ((center - half) / grid.dx).round() as i64;
    let n = (2.0 * half / grid.dx).round() as usize + 1;
    let depth = constants.depth() * design.guide_weight(j, z);
    let c = kinetic_scale(constants, grid.dx);
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let x = (start + i as i64) as f64 * grid.dx;
            let u = ((x - center) / design.wx).powi(2);
            2.0 * c - depth * (-(u * u * u)).exp()
        })
        .collect();
    let lowest = lowest_tridiagonal_eigenvalue(&diag, -c);
    if lowest >= 0.0 {
        return Err(Error::NoBoundMode { lowest, asymptote: 0.0 });
    }
    let mut values = tridiagonal_eigenvector(&diag, -c, lowest);
    let mid = values[n / 2];
    let scale = mid.signum() / (values.iter().map(|v| v * v).sum::<f64>() * grid.dx).sqrt();
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(LocalizedMode { start, dx: grid.dx, values, propagation_constant: lowest, guide_center: center })
}

/// Number of eigenvalues below `x` of the constant-off-diagonal tridiagonal matrix.
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 { a - x } else { a - x - off * off / d };
        if d == 0.0 {
            d = f64::EPSILON * off.abs().max(1e-300);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn lowest_tridiagonal_eigenvalue(diag: &[f64], off: f64) -> f64 {
    let (mut lo, mut hi) = diag.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
        (lo.min(a - 2.0 * off.abs()), hi.max(a + 2.0 * off.abs()))
    });
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse iteration at a converged shift.
fn tridiagonal_eigenvector(diag: &[f64], off: f64, shift: f64) -> Vec<f64> {
    let n = diag.len();
    let nudge = 1e-10 * (shift.abs() + off.abs());
    let a: Vec<f64> = diag.iter().map(|d| d - shift + nudge).collect();
    let mut v = vec![1.0; n];
    for _ in 0..3 {
        // Thomas algorithm on (T − shift)·w = v
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = off / a[0];
        d[0] = v[0] / a[0];
        for i in 1..n {
            let m = a[i] - off * c[i - 1];
            c[i] = off / m;
            d[i] = (v[i] - off * d[i - 1]) / m;
        }
        let mut w = vec![0.0; n];
        w[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            w[i] = d[i] - c[i] * w[i + 1];
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    v
}

/// Tight-binding parameters in 1/μm.
///
/// Bond hoppings are `J_{j,j+1} = −⟨w_j|H|w_{j+1}⟩` for orthogonalized modes
/// `w_j`, so a positive `J` binds, and they vary as
/// `J_{j,j+1} = J̄ + ν_od cos(2πβj + δφ)` with `ν_od ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtractedParams {
    /// Hopping of the same array with the index modulation switched off.
    #[serde(rename = "J")]
    pub j: f64,
    pub nu_od: f64,
    pub nu_d: f64,
    pub delta_phi: f64,
}

impl ExtractedParams {
    /// The discrete model with matrix elements `⟨w_j|H|w_{j+1}⟩ = −J − ν_od cos(2πβj + δφ)`,
    /// written as `−J + ν_od cos(2πβj + δφ + π)`.
    pub fn model(&self, design: &WaveguideArrayDesign) -> ModulationParams {
        ModulationParams::new(self.j, self.nu_d, self.nu_od, design.beta).with_delta_phi(wrap_phase(self.delta_phi + PI))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractionReport {
    pub gamma: f64,
    pub params: ExtractedParams,
    /// Mean hopping `J̄` of the modulated array.
    pub mean_hopping: f64,
    /// Phase of the on-site harmonic relative to `cos(2πβj)`; 0 or π for an exact fit.
    pub onsite_phase_residual: f64,
    /// `∫Φ_jΦ_{j+1}dx` of the raw isolated modes for the fitted bonds.
    pub overlap_deficits: Vec<f64>,
    /// Propagation constants of the isolated modes for the fitted sites.
    pub propagation_constants: Vec<f64>,
    pub phase_flagged: bool,
    pub mode_dx: f64,
    pub window_um: f64,
    pub num_guides: usize,
}

/// On-site energies, hoppings and raw overlaps for guides `j = 1..=q` at `z = 0`.
struct ProjectedChain {
    sites: Vec<i64>,
    onsite: Vec<f64>,
    hopping: Vec<f64>,
    overlaps: Vec<f64>,
    propagation_constants: Vec<f64>,
}

fn project(constants: &OpticalConstants, design: &WaveguideArrayDesign, grid: &ModeGrid) -> Result<ProjectedChain> {
    let guides: Vec<i64> = design.guide_indices().collect();
    let modes = guides
        .iter()
        .map(|&j| localized_mode(constants, design, 0.0, j, grid))
        .collect::<Result<Vec<_>>>()?;
    let lo = modes.iter().map(|m| m.start).min().expect("array has guides") - 1;
    let hi = modes.iter().map(|m| m.start + m.values.len() as i64).max().expect("array has guides") + 1;
    let len = (hi - lo) as usize;
    let dx = grid.dx;
    let x = |i: usize| (lo + i as i64) as f64 * dx;
    let depth = constants.depth();
    let potential: Vec<f64> = (0..len).map(|i| -depth * refractive_profile(design, x(i), 0.0)).collect();
    let c = kinetic_scale(constants, dx);

    let embed = |m: &LocalizedMode| -> Vec<f64> {
        let mut a = vec![0.0; len];
        let off = (m.start - lo) as usize;
        a[off..off + m.values.len()].copy_from_slice(&m.values);
        a
    };
    let apply = |a: &[f64]| -> Vec<f64> {
        (0..len)
            .map(|i| {
                let left = if i > 0 { a[i - 1] } else { 0.0 };
                let right = if i + 1 < len { a[i + 1] } else { 0.0 };
                c * (2.0 * a[i] - left - right) + potential[i] * a[i]
            })
            .collect()
    };
    let embedded: Vec<Vec<f64>> = modes.iter().map(embed).collect();
    let applied: Vec<Vec<f64>> = embedded.iter().map(|a| apply(a)).collect();
    let g = guides.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() * dx;
    let s = DMatrix::from_fn(g, g, |r, k| dot(&embedded[r], &embedded[k]));
    let h = DMatrix::from_fn(g, g, |r, k| 0.5 * (dot(&embedded[r], &applied[k]) + dot(&applied[r], &embedded[k])));

    let eig = s.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 1e-10) {
        return Err(Error::FitDegenerate);
    }
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let ortho = &inv_sqrt * h * &inv_sqrt;

    let q = design.beta.q() as i64;
    let sites: Vec<i64> = (1..=q).collect();
    let index = |j: i64| guides.iter().position(|&k| k == j);
    let mut onsite = Vec::new();
    let mut hopping = Vec::new();
    let mut overlaps = Vec::new();
    let mut propagation_constants = Vec::new();
    for &j in &sites {
        let (Some(a), Some(b)) = (index(j), index(j + 1)) else {
            return Err(Error::InvalidParameter(format!("array too small to hold guides 1..={}", q + 1)));
        };
        onsite.push(ortho[(a, a)]);
        hopping.push(-ortho[(a, b)]);
        overlaps.push(s[(a, b)]);
        propagation_constants.push(modes[a].propagation_constant);
    }
    Ok(ProjectedChain { sites, onsite, hopping, overlaps, propagation_constants })
}

/// First harmonic `(2/q)Σ y_j e^{−i2πβj}` and the mean.
fn harmonic_fit(values: &[f64], sites: &[i64], design: &WaveguideArrayDesign) -> Result<(f64, Complex64)> {
    let q = values.len();
    if q < 3 {
        return Err(Error::FitDegenerate);
    }
    let mean = values.iter().sum::<f64>() / q as f64;
    let amp = values
        .iter()
        .zip(sites)
        .map(|(y, &j)| (y - mean) * Complex64::from_polar(1.0, -design.beta.phase_of_site(j)))
        .sum::<Complex64>()
        * (2.0 / q as f64);
    if !amp.re.is_finite() || !amp.im.is_finite() {
        return Err(Error::FitDegenerate);
    }
    Ok((mean, amp))
}

/// Fits `(J, ν_od, ν_d, δφ)` for an index-modulated design.
pub fn extract_parameters(
    constants: &OpticalConstants,
    design: &WaveguideArrayDesign,
    grid: &ModeGrid,
) -> Result<ExtractionReport> {
    let ArrayVariant::IndexModulated { .. } = design.variant else {
        return Err(Error::InvalidParameter("extraction needs an index-modulated design".into()));
    };
    let chain = project(constants, design, grid)?;
    let (_, onsite_amp) = harmonic_fit(&chain.onsite, &chain.sites, design)?;
    let (mean_hopping, hop_amp) = harmonic_fit(&chain.hopping, &chain.sites, design)?;

    let mut flat = design.clone();
    flat.variant = ArrayVariant::IndexModulated { alpha: 0.0 };
    let flat_chain = project(constants, &flat, grid)?;
    let j = flat_chain.hopping.iter().sum::<f64>() / flat_chain.hopping.len() as f64;

    let nu_d = onsite_amp.re;
    let nu_od = hop_amp.norm();
    let delta_phi = hop_amp.arg();
    let onsite_phase_residual = if nu_d < 0.0 { (-onsite_amp).arg() } else { onsite_amp.arg() };
    let phase_flagged = (wrap_phase(delta_phi - TAU / 6.0)).abs() > PHASE_TOLERANCE;
    Ok(ExtractionReport {
        gamma: constants.gamma,
        params: ExtractedParams { j, nu_od, nu_d, delta_phi },
        mean_hopping,
        onsite_phase_residual,
        overlap_deficits: chain.overlaps,
        propagation_constants: chain.propagation_constants,
        phase_flagged,
        mode_dx: grid.dx,
        window_um: grid.window_spacings * design.ws,
        num_guides: design.num_guides,
    })
}

/// Maps a phase into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > TAU / 2.0 {
        w - TAU
    } else {
        w
    }
}

/// Index-modulated design used by the extraction presets.
pub fn reference_design(period: f64) -> WaveguideArrayDesign {
    let third = crate::model::Rational::new(1, 3).expect("1/3 is reduced");
    WaveguideArrayDesign::index_modulated(0.5, third, 10.0, 3.0, period)
}
