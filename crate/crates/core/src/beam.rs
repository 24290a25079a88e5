//! Paraxial light propagation through longitudinally modulated waveguide
//! arrays, and the pumped-shift readout of the Chern number.
//!
//! The field obeys
//! `i ∂_z ψ = −(1/2k₀) ∂²_x ψ − (k₀ γ R(x, z)/n₀) ψ`
//! and is advanced with symmetric (Strang) splitting: exact kinetic half
//! steps in the spatial-frequency domain around a pointwise potential phase.
//! All lengths are in μm.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Rational;

/// Super-Gaussian tails are below 1e-100 beyond this many widths.
const PROFILE_CUTOFF: f64 = 2.5;
pub const DEFAULT_DX: f64 = 0.15625;
pub const DEFAULT_DZ: f64 = 1.0;
pub const DEFAULT_SLICES: usize = 200;
pub const DEFAULT_NUM_GUIDES: usize = 21;
pub const LEAKAGE_LIMIT: f64 = 1e-4;
/// Empty guide spacings on each side of the array, inside the absorber.
pub const DEFAULT_PADDING_SPACINGS: f64 = 3.0;
/// Absorber width in guide spacings.
pub const DEFAULT_ABSORBER_SPACINGS: f64 = 12.0;
/// Peak absorber attenuation rate (1/μm).
pub const DEFAULT_ABSORBER_STRENGTH: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticalConstants {
    pub n0: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl OpticalConstants {
    /// Fused silica at 0.63 μm.
    pub fn silica(gamma: f64) -> Self {
        Self { n0: 1.45, lambda: 0.63, gamma }
    }

    pub fn k0(&self) -> f64 {
        TAU * self.n0 / self.lambda
    }

    /// Potential depth per unit profile, `k₀γ/n₀`.
    pub fn depth(&self) -> f64 {
        self.k0() * self.gamma / self.n0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ArrayVariant {
    /// Guide `j` has index factor `1 + α cos(2πβj + k_y(z))` at fixed position `j·w_s`.
    IndexModulated { alpha: f64 },
    /// Guide `j` sits at `j·w_s + w_m cos(2πβj + k_y(z) + φ₀)`.
    SpacingModulated { wm: f64, phi0: f64 },
}

/// Monotone map from propagation distance to pump phase `k_y`.
#[derive(Clone)]
pub enum PhaseSchedule {
    /// `k_y = Ω z` with `Ω = 2π/Z`.
    Linear,
    /// Custom `k_y(z)`; must rise monotonically from 0 at `z = 0` to `2π` at `z = Z`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for PhaseSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhaseSchedule::Linear => f.write_str("Linear"),
            PhaseSchedule::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WaveguideArrayDesign {
    pub variant: ArrayVariant,
    pub beta: Rational,
    /// Guide spacing `w_s`.
    pub ws: f64,
    /// Super-Gaussian width `w_x`.
    pub wx: f64,
    pub num_guides: usize,
    /// Pump period `Z`.
    pub period: f64,
    pub schedule: PhaseSchedule,
}

impl WaveguideArrayDesign {
    pub fn index_modulated(alpha: f64, beta: Rational, ws: f64, wx: f64, period: f64) -> Self {
        Self {
            variant: ArrayVariant::IndexModulated { alpha },
            beta,
            ws,
            wx,
            num_guides: DEFAULT_NUM_GUIDES,
            period,
            schedule: PhaseSchedule::Linear,
        }
    }

    pub fn spacing_modulated(wm: f64, phi0: f64, beta: Rational, ws: f64, wx: f64, period: f64) -> Self {
        Self {
            variant: ArrayVariant::SpacingModulated { wm, phi0 },
            beta,
            ws,
            wx,
            num_guides: DEFAULT_NUM_GUIDES,
            period,
            schedule: PhaseSchedule::Linear,
        }
    }

    pub fn omega(&self) -> f64 {
        TAU / self.period
    }

    /// Rejects unusable geometry and returns warnings for the questionable kind.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.wx > 0.0 && self.ws > 0.0 && self.period > 0.0) {
            return Err(Error::InvalidParameter("wx, ws and Z must be positive".into()));
        }
        if self.num_guides == 0 {
            return Err(Error::InvalidParameter("array needs at least one guide".into()));
        }
        let mut warnings = Vec::new();
        if self.ws <= 2.0 * self.wx {
            warnings.push(format!("ws = {} um is not above 2 wx = {} um", self.ws, 2.0 * self.wx));
        }
        if let ArrayVariant::SpacingModulated { wm, .. } = self.variant {
            if wm >= self.ws / 2.0 - self.wx {
                warnings.push(format!(
                    "wm = {wm} um >= ws/2 - wx = {} um: neighbouring guides pass through each other",
                    self.ws / 2.0 - self.wx
                ));
            }
        }
        Ok(warnings)
    }

    /// Guide indices `j`, centred on 0.
    pub fn guide_indices(&self) -> impl Iterator<Item = i64> + Clone {
        let first = -((self.num_guides as i64 - 1) / 2);
        first..first + self.num_guides as i64
    }

    pub fn pump_phase(&self, z: f64) -> f64 {
        match &self.schedule {
            PhaseSchedule::Linear => self.omega() * z,
            PhaseSchedule::Custom(f) => f(z),
        }
    }

    /// Centre of guide `j` at distance `z`.
    pub fn guide_center(&self, j: i64, z: f64) -> f64 {
        let base = j as f64 * self.ws;
        match self.variant {
            ArrayVariant::IndexModulated { .. } => base,
            ArrayVariant::SpacingModulated { wm, phi0 } => {
                base + wm * (self.beta.phase_of_site(j) + self.pump_phase(z) + phi0).cos()
            }
        }
    }

    /// Index weight of guide `j` at distance `z`.
    pub fn guide_weight(&self, j: i64, z: f64) -> f64 {
        match self.variant {
            ArrayVariant::IndexModulated { alpha } => {
                1.0 + alpha * (self.beta.phase_of_site(j) + self.pump_phase(z)).cos()
            }
            ArrayVariant::SpacingModulated { .. } => 1.0,
        }
    }

    /// Guide receiving the input beam.
    ///
    /// Index-modulated arrays use the guide of largest index factor at `z = 0`;
    /// spacing-modulated arrays the guide whose nearer neighbour is farthest.
    /// Ties go to the guide nearest the array centre.
    pub fn input_guide(&self) -> i64 {
        let score = |j: i64| -> f64 {
            match self.variant {
                ArrayVariant::IndexModulated { .. } => self.guide_weight(j, 0.0),
                ArrayVariant::SpacingModulated { .. } => {
                    let x = self.guide_center(j, 0.0);
                    let mut sorted: Vec<f64> = self.guide_indices().map(|k| self.guide_center(k, 0.0)).collect();
                    sorted.sort_by(f64::total_cmp);
                    let below = sorted.iter().filter(|&&c| c < x).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    let above = sorted.iter().filter(|&&c| c > x).fold(f64::INFINITY, |a, &b| a.min(b));
                    (x - below).min(above - x)
                }
            }
        };
        // interior guides only, so both neighbours exist
        let interior: Vec<i64> = {
            let all: Vec<i64> = self.guide_indices().collect();
            if all.len() > 2 {
                all[1..all.len() - 1].to_vec()
            } else {
                all
            }
        };
        let best = interior.iter().map(|&j| score(j)).fold(f64::NEG_INFINITY, f64::max);
        interior
            .into_iter()
            .filter(|&j| score(j) >= best - 1e-12 * best.abs().max(1.0))
            .min_by_key(|j| j.abs())
            .unwrap_or(0)
    }

    /// Extent `[lo, hi]` swept by the guide centres over a period.
    pub fn guide_span(&self) -> (f64, f64) {
        let (first, last) = {
            let v: Vec<i64> = self.guide_indices().collect();
            (v[0], v[v.len() - 1])
        };
        let swing = match self.variant {
            ArrayVariant::IndexModulated { .. } => 0.0,
            ArrayVariant::SpacingModulated { wm, .. } => wm.abs(),
        };
        (first as f64 * self.ws - swing, last as f64 * self.ws + swing)
    }
}

fn super_gaussian(d: f64, wx: f64) -> f64 {
    let u = (d / wx).powi(2);
    (-(u * u * u)).exp()
}

/// Index profile `R(x, z)` summed over every guide, evaluated directly.
pub fn refractive_profile(design: &WaveguideArrayDesign, x: f64, z: f64) -> f64 {
    design
        .guide_indices()
        .map(|j| design.guide_weight(j, z) * super_gaussian(x - design.guide_center(j, z), design.wx))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Boundary {
    Periodic,
    /// Quadratic absorbing ramp `exp(−η·(d/w)²·dz)` in the outer `width` μm of each side.
    Absorbing { width: f64, strength: f64 },
}

/// Uniform periodic x-grid plus the z stepping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationGrid {
    pub x_min: f64,
    pub dx: f64,
    pub nx: usize,
    pub dz: f64,
    /// Number of equal z intervals between recorded slices over the run.
    pub slices: usize,
    pub boundary: Boundary,
}

impl SimulationGrid {
    /// Power-of-two grid covering the array plus `padding` on each side, centred
    /// on the array.
    pub fn for_design(design: &WaveguideArrayDesign, dx: f64, dz: f64, padding: f64, boundary: Boundary) -> Self {
        let (lo, hi) = design.guide_span();
        let absorber = match boundary {
            Boundary::Periodic => 0.0,
            Boundary::Absorbing { width, .. } => width,
        };
        let needed = hi - lo + 2.0 * (padding + absorber);
        let nx = ((needed / dx).ceil() as usize).next_power_of_two();
        let center = 0.5 * (lo + hi);
        Self { x_min: center - 0.5 * nx as f64 * dx, dx, nx, dz, slices: DEFAULT_SLICES, boundary }
    }

    /// Default grid: `dx = 0.15625 μm`, `dz = 1 μm`, three empty spacings and a
    /// twelve-spacing absorber on each side.
    pub fn default_for(design: &WaveguideArrayDesign) -> Self {
        Self::for_design(
            design,
            DEFAULT_DX,
            DEFAULT_DZ,
            DEFAULT_PADDING_SPACINGS * design.ws,
            Boundary::Absorbing {
                width: DEFAULT_ABSORBER_SPACINGS * design.ws,
                strength: DEFAULT_ABSORBER_STRENGTH,
            },
        )
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.width()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Angular spatial frequency of FFT bin `i`.
    pub fn kx(&self, i: usize) -> f64 {
        let n = self.nx as i64;
        let i = i as i64;
        let m = if i < (n + 1) / 2 { i } else { i - n };
        TAU * m as f64 / self.width()
    }

    /// Per-step attenuation factors, all 1 for a periodic grid.
    pub fn absorber_mask(&self) -> Vec<f64> {
        match self.boundary {
            Boundary::Periodic => vec![1.0; self.nx],
            Boundary::Absorbing { width, strength } => {
                let (lo, hi) = (self.x_min + width, self.x_min + self.width() - width);
                (0..self.nx)
                    .map(|i| {
                        let x = self.x(i);
                        let d = if x < lo { lo - x } else if x > hi { x - hi } else { 0.0 };
                        (-strength * (d / width).powi(2) * self.dz).exp()
                    })
                    .collect()
            }
        }
    }

    /// Indices of the `strip` μm wide bands starting `inset` μm in from each
    /// domain edge.
    fn edge_strips(&self, inset: f64, strip: f64) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let a = (inset / self.dx).round() as usize;
        let b = ((inset + strip) / self.dx).round() as usize;
        let b = b.min(self.nx / 2);
        (a..b, self.nx - b..self.nx - a)
    }
}

/// Unit-norm Gaussian `A exp(−(x−x₀)²/W²)`.
pub fn gaussian_input(center: f64, width: f64, grid: &SimulationGrid) -> Result<Vec<Complex64>> {
    if width <= 0.0 {
        return Err(Error::InvalidParameter(format!("beam width must be positive, got {width}")));
    }
    let mut field: Vec<Complex64> = (0..grid.nx)
        .map(|i| Complex64::new((-((grid.x(i) - center) / width).powi(2)).exp(), 0.0))
        .collect();
    let n = norm(&field, grid.dx).sqrt();
    field.iter_mut().for_each(|z| *z /= n);
    Ok(field)
}

/// `∫|ψ|² dx`.
pub fn norm(field: &[Complex64], dx: f64) -> f64 {
    field.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx
}

/// `∫x|ψ|²dx / ∫|ψ|²dx`.
pub fn mean_position(field: &[Complex64], grid: &SimulationGrid) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, z) in field.iter().enumerate() {
        let w = z.norm_sqr();
        num += grid.x(i) * w;
        den += w;
    }
    num / den
}

/// Fast `R(x, z)` on the grid.
enum ProfileEvaluator {
    /// `R = G₀ + α[cos k_y · G_c − sin k_y · G_s]` from static sums.
    Index { alpha: f64, g0: Vec<f64>, gc: Vec<f64>, gs: Vec<f64> },
    /// Moving guides, each evaluated within its cutoff window.
    Spacing,
}

impl ProfileEvaluator {
    fn new(design: &WaveguideArrayDesign, grid: &SimulationGrid) -> Self {
        match design.variant {
            ArrayVariant::IndexModulated { alpha } => {
                let mut g0 = vec![0.0; grid.nx];
                let mut gc = vec![0.0; grid.nx];
                let mut gs = vec![0.0; grid.nx];
                for j in design.guide_indices() {
                    let c = design.guide_center(j, 0.0);
                    let phase = design.beta.phase_of_site(j);
                    let (s, co) = phase.sin_cos();
                    for_window(grid, c, design.wx, |i, g| {
                        g0[i] += g;
                        gc[i] += co * g;
                        gs[i] += s * g;
                    });
                }
                ProfileEvaluator::Index { alpha, g0, gc, gs }
            }
            ArrayVariant::SpacingModulated { .. } => ProfileEvaluator::Spacing,
        }
    }

    fn fill(&self, design: &WaveguideArrayDesign, grid: &SimulationGrid, z: f64, out: &mut [f64]) {
        match self {
            ProfileEvaluator::Index { alpha, g0, gc, gs } => {
                let (s, c) = design.pump_phase(z).sin_cos();
                for (i, r) in out.iter_mut().enumerate() {
                    *r = g0[i] + alpha * (c * gc[i] - s * gs[i]);
                }
            }
            ProfileEvaluator::Spacing => {
                out.iter_mut().for_each(|r| *r = 0.0);
                for j in design.guide_indices() {
                    let c = design.guide_center(j, z);
                    for_window(grid, c, design.wx, |i, g| out[i] += g);
                }
            }
        }
    }
}

fn for_window(grid: &SimulationGrid, center: f64, wx: f64, mut f: impl FnMut(usize, f64)) {
    let reach = PROFILE_CUTOFF * wx;
    let lo = (((center - reach) - grid.x_min) / grid.dx).floor().max(0.0) as usize;
    let hi = ((((center + reach) - grid.x_min) / grid.dx).ceil() as usize).min(grid.nx - 1);
    for i in lo..=hi {
        f(i, super_gaussian(grid.x(i) - center, wx));
    }
}

/// Propagated field sampled at evenly spaced distances.
#[derive(Debug, Clone)]
pub struct FieldTrajectory {
    pub z: Vec<f64>,
    pub fields: Vec<Vec<Complex64>>,
    pub norms: Vec<f64>,
    /// Power removed by the absorber up to each slice.
    pub absorbed: Vec<f64>,
    /// Largest single-step change of `norm + absorbed`, relative to the input norm.
    pub max_step_drift: f64,
    /// Largest fraction of the power seen within the monitored strip width of
    /// either domain edge.
    pub max_leakage: f64,
    /// Same, for the strips just inside the absorbing layers; equals
    /// `max_leakage` on a periodic grid.
    pub max_window_leakage: f64,
}

impl FieldTrajectory {
    /// `|norm(z) + absorbed(z) − norm(0)| / norm(0)`, maximized over slices.
    pub fn cumulative_drift(&self) -> f64 {
        let n0 = self.norms[0];
        self.norms
            .iter()
            .zip(&self.absorbed)
            .map(|(n, a)| ((n + a - n0) / n0).abs())
            .fold(0.0, f64::max)
    }

    pub fn absorbed_fraction(&self) -> f64 {
        self.absorbed.last().copied().unwrap_or(0.0) / self.norms[0]
    }

    pub fn intensity(&self, slice: usize) -> Vec<f64> {
        self.fields[slice].iter().map(|z| z.norm_sqr()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    /// Distance to propagate; defaults to one pump period.
    pub length: Option<f64>,
    /// Edge strip width for the leakage monitor, normally `2·w_s`.
    pub leakage_strip: Option<f64>,
    /// Abort when the monitored leakage exceeds this fraction.
    pub leakage_limit: Option<f64>,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { length: None, leakage_strip: None, leakage_limit: Some(LEAKAGE_LIMIT) }
    }
}

struct SpectralStepper {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SpectralStepper {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self { forward, inverse, scratch: vec![Complex64::new(0.0, 0.0); len] }
    }

    fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }
}

/// Kinetic propagators `exp(−i kₓ² h/(2k₀))` for step `h`, with the inverse-FFT
/// normalization folded in.
fn kinetic_factors(grid: &SimulationGrid, k0: f64, h: f64) -> Vec<Complex64> {
    let scale = 1.0 / grid.nx as f64;
    (0..grid.nx)
        .map(|i| {
            let k = grid.kx(i);
            Complex64::from_polar(scale, -k * k * h / (2.0 * k0))
        })
        .collect()
}

/// Integrates the paraxial equation from `z = 0`.
pub fn split_step_propagate(
    field: &[Complex64],
    design: &WaveguideArrayDesign,
    constants: &OpticalConstants,
    grid: &SimulationGrid,
    options: &PropagationOptions,
) -> Result<FieldTrajectory> {
    if field.len() != grid.nx {
        return Err(Error::InvalidParameter(format!(
            "field has {} samples, grid has {}",
            field.len(),
            grid.nx
        )));
    }
    if !grid.nx.is_power_of_two() {
        return Err(Error::GridUnderresolved(format!("nx = {} is not a power of two", grid.nx)));
    }
    let peak_depth = constants.depth()
        * match design.variant {
            ArrayVariant::IndexModulated { alpha } => 1.0 + alpha.abs(),
            // crossing guides can stack two profiles
            ArrayVariant::SpacingModulated { .. } => 2.0,
        };
    if grid.dz * peak_depth >= 0.1 {
        return Err(Error::GridUnderresolved(format!(
            "dz * max|V| = {:.3} rad, must stay below 0.1",
            grid.dz * peak_depth
        )));
    }
    if grid.dx > design.wx / 8.0 {
        return Err(Error::GridUnderresolved(format!(
            "dx = {} um does not resolve wx = {} um (need dx <= wx/8)",
            grid.dx, design.wx
        )));
    }
    let length = options.length.unwrap_or(design.period);
    let steps = (length / grid.dz).round() as usize;
    if steps == 0 {
        return Err(Error::InvalidParameter("propagation length shorter than one step".into()));
    }
    let slices = grid.slices.clamp(1, steps);
    let record_at: Vec<usize> = (0..=slices).map(|s| (s * steps) / slices).collect();

    let k0 = constants.k0();
    let depth = constants.depth();
    let half = kinetic_factors(grid, k0, 0.5 * grid.dz);
    let full = kinetic_factors(grid, k0, grid.dz);
    let mask = grid.absorber_mask();
    let absorbing = matches!(grid.boundary, Boundary::Absorbing { .. });
    let profile = ProfileEvaluator::new(design, grid);
    let strip = options.leakage_strip.unwrap_or(2.0 * design.ws);
    let outer = grid.edge_strips(0.0, strip);
    let inner = match grid.boundary {
        Boundary::Periodic => outer.clone(),
        Boundary::Absorbing { width, .. } => grid.edge_strips(width, strip),
    };
    let mut fft = SpectralStepper::new(grid.nx);

    let dx = grid.dx;
    let fraction = |f: &[Complex64], (left, right): &(std::ops::Range<usize>, std::ops::Range<usize>)| -> f64 {
        let total: f64 = f.iter().map(|z| z.norm_sqr()).sum();
        let edge: f64 = f[left.clone()].iter().chain(&f[right.clone()]).map(|z| z.norm_sqr()).sum();
        edge / total
    };

    let n_initial = norm(field, dx);
    let mut traj = FieldTrajectory {
        z: vec![0.0],
        fields: vec![field.to_vec()],
        norms: vec![n_initial],
        absorbed: vec![0.0],
        max_step_drift: 0.0,
        max_leakage: fraction(field, &outer),
        max_window_leakage: fraction(field, &inner),
    };
    let check_leak = |traj: &FieldTrajectory, z: f64| -> Result<()> {
        match options.leakage_limit {
            Some(limit) if traj.max_leakage > limit => {
                Err(Error::BoundaryLeakage { leakage: traj.max_leakage, limit, z })
            }
            _ => Ok(()),
        }
    };
    check_leak(&traj, 0.0)?;

    // ψ holds the field advanced by one pending kinetic half step
    let mut psi = field.to_vec();
    fft.forward(&mut psi);
    psi.iter_mut().zip(&half).for_each(|(p, k)| *p *= k);
    fft.inverse(&mut psi);

    let mut r = vec![0.0; grid.nx];
    let mut spare = vec![Complex64::new(0.0, 0.0); grid.nx];
    let mut absorbed = 0.0;
    let mut last_total = n_initial;
    let mut next_record = 1;
    for step in 0..steps {
        let z_mid = (step as f64 + 0.5) * grid.dz;
        profile.fill(design, grid, z_mid, &mut r);
        let before = if absorbing { norm(&psi, dx) } else { 0.0 };
        for ((p, &ri), &m) in psi.iter_mut().zip(&r).zip(&mask) {
            *p *= Complex64::from_polar(m, depth * ri * grid.dz);
        }
        if absorbing {
            absorbed += before - norm(&psi, dx);
        }
        fft.forward(&mut psi);
        if record_at[next_record] == step + 1 {
            spare.iter_mut().zip(&psi).zip(&half).for_each(|((s, p), k)| *s = p * k);
            fft.inverse(&mut spare);
            let z = (step + 1) as f64 * grid.dz;
            traj.z.push(z);
            traj.norms.push(norm(&spare, dx));
            traj.absorbed.push(absorbed);
            traj.max_leakage = traj.max_leakage.max(fraction(&spare, &outer));
            traj.max_window_leakage = traj.max_window_leakage.max(fraction(&spare, &inner));
            traj.fields.push(spare.clone());
            check_leak(&traj, z)?;
            next_record += 1;
        }
        if step + 1 < steps {
            psi.iter_mut().zip(&full).for_each(|(p, k)| *p *= k);
            fft.inverse(&mut psi);
            let total = norm(&psi, dx) + absorbed;
            traj.max_step_drift = traj.max_step_drift.max(((total - last_total) / n_initial).abs());
            last_total = total;
        }
    }
    Ok(traj)
}

/// Chern number from the mean shift over one pump period: `Δ⟨x⟩ / (q·w_s)`.
pub fn pump_chern(traj: &FieldTrajectory, grid: &SimulationGrid, q: u32, ws: f64) -> f64 {
    let start = mean_position(&traj.fields[0], grid);
    let end = mean_position(traj.fields.last().expect("trajectory has slices"), grid);
    (end - start) / (f64::from(q) * ws)
}

/// A named pumping experiment.
#[derive(Debug, Clone)]
pub struct PumpPreset {
    pub name: &'static str,
    pub constants: OpticalConstants,
    pub design: WaveguideArrayDesign,
    /// Input Gaussian width `W`.
    pub beam_width: f64,
    /// Reported Chern estimate.
    pub expected_chern: f64,
}

impl PumpPreset {
    pub fn all() -> Vec<PumpPreset> {
        let third = Rational::new(1, 3).expect("1/3 is reduced");
        vec![
            PumpPreset {
                name: "fig5a",
                constants: OpticalConstants::silica(9e-4),
                design: WaveguideArrayDesign::index_modulated(0.5, third, 10.0, 3.0, 30e4),
                beam_width: 3.77,
                expected_chern: -0.97,
            },
            PumpPreset {
                name: "fig5b",
                constants: OpticalConstants::silica(5e-4),
                design: WaveguideArrayDesign::index_modulated(0.5, third, 10.0, 3.0, 10e4),
                beam_width: 4.47,
                expected_chern: -0.99,
            },
            PumpPreset {
                name: "fig5c",
                constants: OpticalConstants::silica(5e-4),
                design: WaveguideArrayDesign::spacing_modulated(18.0, PI / 5.0, third, 20.0, 3.0, 15e4),
                beam_width: 4.3,
                expected_chern: 1.97,
            },
        ]
    }

    pub fn named(name: &str) -> Option<PumpPreset> {
        Self::all().into_iter().find(|p| p.name == name)
    }
}

/// Everything a pumping run reports.
#[derive(Debug, Clone)]
pub struct PumpOutcome {
    pub grid: SimulationGrid,
    pub trajectory: FieldTrajectory,
    pub input_center: f64,
    pub mean_start: f64,
    pub mean_end: f64,
    pub chern_estimate: f64,
}

/// Injects the Gaussian into the input guide and propagates one period.
pub fn run_pump(
    design: &WaveguideArrayDesign,
    constants: &OpticalConstants,
    beam_width: f64,
    grid: &SimulationGrid,
    options: &PropagationOptions,
) -> Result<PumpOutcome> {
    let input_center = design.guide_center(design.input_guide(), 0.0);
    let field = gaussian_input(input_center, beam_width, grid)?;
    let trajectory = split_step_propagate(&field, design, constants, grid, options)?;
    let mean_start = mean_position(&trajectory.fields[0], grid);
    let mean_end = mean_position(trajectory.fields.last().expect("trajectory has slices"), grid);
    let chern_estimate = pump_chern(&trajectory, grid, design.beta.q(), design.ws);
    Ok(PumpOutcome { grid: grid.clone(), trajectory, input_center, mean_start, mean_end, chern_estimate })
}

/// Landau-Zener estimate `exp(−G₁² Z)` of leakage out of the pumped band.
pub fn lz_ratio(gap: f64, period: f64) -> f64 {
    (-gap * gap * period).exp()
}

/// Fraction of the power within `±w_s/2` of the guide nearest the intensity peak.
pub fn peak_guide_fraction(field: &[Complex64], grid: &SimulationGrid, design: &WaveguideArrayDesign, z: f64) -> f64 {
    let (peak, _) = field
        .iter()
        .enumerate()
        .map(|(i, f)| (i, f.norm_sqr()))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let xp = grid.x(peak);
    let center = design
        .guide_indices()
        .map(|j| design.guide_center(j, z))
        .min_by(|a, b| (a - xp).abs().total_cmp(&(b - xp).abs()))
        .unwrap_or(xp);
    let total: f64 = field.iter().map(|f| f.norm_sqr()).sum();
    let inside: f64 = field
        .iter()
        .enumerate()
        .filter(|(i, _)| (grid.x(*i) - center).abs() <= 0.5 * design.ws)
        .map(|(_, f)| f.norm_sqr())
        .sum();
    inside / total
}

/// Lowest bound mode of a z-frozen array by imaginary-distance relaxation.
pub fn relax_bound_mode(
    design: &WaveguideArrayDesign,
    z: f64,
    constants: &OpticalConstants,
    grid: &SimulationGrid,
    guess: &[Complex64],
    tau: f64,
    iterations: usize,
) -> Vec<Complex64> {
    let k0 = constants.k0();
    let depth = constants.depth();
    let scale = 1.0 / grid.nx as f64;
    let decay: Vec<f64> = (0..grid.nx)
        .map(|i| {
            let k = grid.kx(i);
            scale * (-k * k * tau / (4.0 * k0)).exp()
        })
        .collect();
    let mut r = vec![0.0; grid.nx];
    ProfileEvaluator::new(design, grid).fill(design, grid, z, &mut r);
    let gain: Vec<f64> = r.iter().map(|ri| (depth * ri * tau).exp()).collect();
    let mut fft = SpectralStepper::new(grid.nx);
    let mut psi = guess.to_vec();
    for _ in 0..iterations {
        fft.forward(&mut psi);
        psi.iter_mut().zip(&decay).for_each(|(p, d)| *p *= d);
        fft.inverse(&mut psi);
        psi.iter_mut().zip(&gain).for_each(|(p, g)| *p *= g);
        fft.forward(&mut psi);
        psi.iter_mut().zip(&decay).for_each(|(p, d)| *p *= d);
        fft.inverse(&mut psi);
        let n = norm(&psi, grid.dx).sqrt();
        psi.iter_mut().for_each(|p| *p /= n);
    }
    psi
}

/// Analytic `1/e` half-width of a freely diffracting Gaussian.
pub fn free_gaussian_width(w0: f64, z: f64, k0: f64) -> f64 {
    w0 * (1.0 + (2.0 * z / (k0 * w0 * w0)).powi(2)).sqrt()
}

/// Exact free-space field `ψ(x, z)` for the unit-norm input `exp(−(x−x₀)²/W²)`.
pub fn free_gaussian_field(x: f64, center: f64, w0: f64, z: f64, k0: f64) -> Complex64 {
    // ψ ∝ (1 + 2iz/(k₀W²))^{-1/2} exp(−(x−x₀)²/(W²(1 + 2iz/(k₀W²))))
    let q = Complex64::new(1.0, 2.0 * z / (k0 * w0 * w0));
    let amp = (2.0 / (PI * w0 * w0)).powf(0.25);
    amp / q.sqrt() * (-(x - center).powi(2) / (w0 * w0 * q)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn third() -> Rational {
        Rational::new(1, 3).unwrap()
    }

    #[test]
    fn k0_from_silica() {
        let c = OpticalConstants::silica(9e-4);
        assert_abs_diff_eq!(c.k0(), TAU * 1.45 / 0.63, epsilon = 1e-12);
    }

    #[test]
    fn profile_at_guide_centres() {
        let d = WaveguideArrayDesign::index_modulated(0.0, third(), 10.0, 3.0, 1e5);
        let r = refractive_profile(&d, 20.0, 0.0);
        assert!((r - 1.0).abs() < 1e-12, "{r}");
        let d = WaveguideArrayDesign::index_modulated(0.5, third(), 10.0, 3.0, 1e5);
        assert_abs_diff_eq!(refractive_profile(&d, 0.0, 0.0), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.guide_weight(1, 0.0), 1.0 + 0.5 * (TAU / 3.0).cos(), epsilon = 1e-15);
    }

    #[test]
    fn spacing_centres_follow_the_formula() {
        let d = WaveguideArrayDesign::spacing_modulated(18.0, PI / 5.0, third(), 20.0, 3.0, 1.5e5);
        for j in -3..=3 {
            for z in [0.0, 1234.5, 7.5e4] {
                let direct = j as f64 * 20.0 + 18.0 * (TAU * j as f64 / 3.0 + TAU * z / 1.5e5 + PI / 5.0).cos();
                assert_abs_diff_eq!(d.guide_center(j, z), direct, epsilon = 1e-9);
            }
        }
        assert_eq!(d.validate().unwrap().len(), 1);
    }

    #[test]
    fn fast_profile_matches_direct_sum() {
        for d in [
            WaveguideArrayDesign::index_modulated(0.5, third(), 10.0, 3.0, 1e5),
            WaveguideArrayDesign::spacing_modulated(18.0, PI / 5.0, third(), 20.0, 3.0, 1.5e5),
        ] {
            let grid = SimulationGrid::for_design(&d, 0.15625, 1.0, 30.0, Boundary::Periodic);
            let mut fast = vec![0.0; grid.nx];
            let eval = ProfileEvaluator::new(&d, &grid);
            for z in [0.0, 3.3e4, 9.1e4] {
                eval.fill(&d, &grid, z, &mut fast);
                for i in (0..grid.nx).step_by(7) {
                    assert_abs_diff_eq!(fast[i], refractive_profile(&d, grid.x(i), z), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn input_guides() {
        let d = WaveguideArrayDesign::index_modulated(0.5, third(), 10.0, 3.0, 1e5);
        assert_eq!(d.input_guide(), 0);
        let d = WaveguideArrayDesign::spacing_modulated(18.0, PI / 5.0, third(), 20.0, 3.0, 1.5e5);
        // type-2 guides (phase 4π/3) sit in the widest gaps at φ₀ = π/5
        assert_eq!(d.input_guide().rem_euclid(3), 2);
        assert!(d.input_guide().abs() <= 1);
    }

    #[test]
    fn gaussian_is_normalized() {
        let d = WaveguideArrayDesign::index_modulated(0.5, third(), 10.0, 3.0, 1e5);
        let grid = SimulationGrid::for_design(&d, DEFAULT_DX, 1.0, 30.0, Boundary::Periodic);
        let f = gaussian_input(0.0, 3.77, &grid).unwrap();
        assert_abs_diff_eq!(norm(&f, grid.dx), 1.0, epsilon = 1e-13);
        assert!(gaussian_input(0.0, 0.0, &grid).is_err());
    }

    #[test]
    fn mean_position_examples() {
        let d = WaveguideArrayDesign::index_modulated(0.5, third(), 10.0, 3.0, 1e5);
        let grid = SimulationGrid::for_design(&d, DEFAULT_DX, 1.0, 30.0, Boundary::Periodic);
        let f = gaussian_input(0.0, 3.0, &grid).unwrap();
        assert_abs_diff_eq!(mean_position(&f, &grid), 0.0, epsilon = 1e-9);
        let f = gaussian_input(20.0, 0.3, &grid).unwrap();
        assert_abs_diff_eq!(mean_position(&f, &grid), 20.0, epsilon = 1e-9);
        let f = gaussian_input(-13.7, 4.47, &grid).unwrap();
        assert_abs_diff_eq!(mean_position(&f, &grid), -13.7, epsilon = 1e-9);
    }

    #[test]
    fn lz_ratio_examples() {
        assert_eq!(lz_ratio(0.0, 1e5), 1.0);
        assert!(lz_ratio(1e-2, 1e12) < 1e-300);
        assert_abs_diff_eq!(lz_ratio(3e-3, 1e5), (-0.9_f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(lz_ratio(3e-3, 1e5), 0.406_569_659_740_599, epsilon = 1e-12);
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let d = WaveguideArrayDesign::index_modulated(0.5, third(), 10.0, 3.0, 1e5);
        let c = OpticalConstants::silica(9e-4);
        let mut grid = SimulationGrid::for_design(&d, DEFAULT_DX, 10.0, 30.0, Boundary::Periodic);
        let f = gaussian_input(0.0, 3.77, &grid).unwrap();
        assert!(matches!(
            split_step_propagate(&f, &d, &c, &grid, &PropagationOptions::default()),
            Err(Error::GridUnderresolved(_))
        ));
        grid.dz = 1.0;
        grid.dx = 0.5;
        assert!(matches!(
            split_step_propagate(&f, &d, &c, &grid, &PropagationOptions::default()),
            Err(Error::GridUnderresolved(_))
        ));
    }

    #[test]
    fn free_space_matches_analytic_gaussian() {
        let d = WaveguideArrayDesign::index_modulated(0.0, third(), 10.0, 3.0, 1e4);
        let c = OpticalConstants::silica(0.0);
        let mut grid = SimulationGrid::for_design(&d, DEFAULT_DX, 1.0, 400.0, Boundary::Periodic);
        grid.slices = 4;
        let w0 = 10.0;
        let f = gaussian_input(0.0, w0, &grid).unwrap();
        let opts = PropagationOptions { leakage_limit: None, ..Default::default() };
        let traj = split_step_propagate(&f, &d, &c, &grid, &opts).unwrap();
        let k0 = c.k0();
        for (z, field) in traj.z.iter().zip(&traj.fields) {
            let exact: Vec<Complex64> =
                (0..grid.nx).map(|i| free_gaussian_field(grid.x(i), 0.0, w0, *z, k0)).collect();
            let err = norm(&field.iter().zip(&exact).map(|(a, b)| a - b).collect::<Vec<_>>(), grid.dx).sqrt();
            assert!(err < 1e-3, "z = {z}: {err:e}");
        }
        // second-moment width follows the diffraction law
        let last = traj.fields.last().unwrap();
        let var: f64 = last.iter().enumerate().map(|(i, z)| grid.x(i).powi(2) * z.norm_sqr()).sum::<f64>() * grid.dx;
        let w = (4.0 * var).sqrt();
        let expected = free_gaussian_width(w0, 1e4, k0);
        assert!(((w - expected) / expected).abs() < 1e-3, "{w} vs {expected}");
    }

    #[test]
    fn relaxed_single_guide_mode_is_stationary() {
        let mut d = WaveguideArrayDesign::index_modulated(0.0, third(), 10.0, 3.0, 1e4);
        d.num_guides = 1;
        let c = OpticalConstants::silica(5e-4);
        let mut grid = SimulationGrid::for_design(&d, DEFAULT_DX, 0.25, 60.0, Boundary::Periodic);
        grid.slices = 10;
        let guess = gaussian_input(0.0, 3.0, &grid).unwrap();
        let mode = relax_bound_mode(&d, 0.0, &c, &grid, &guess, 0.1, 200_000);
        let traj = split_step_propagate(&mode, &d, &c, &grid, &PropagationOptions::default()).unwrap();
        let start = traj.intensity(0);
        let peak = start.iter().cloned().fold(0.0, f64::max);
        for s in 1..traj.fields.len() {
            let change = traj.intensity(s).iter().zip(&start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(change / peak < 1e-6, "slice {s}: {:e}", change / peak);
        }
    }

    #[test]
    fn strang_splitting_is_second_order() {
        let p = PumpPreset::named("fig5b").unwrap();
        let run = |dz: f64| {
            let mut grid = SimulationGrid::default_for(&p.design);
            grid.dz = dz;
            grid.slices = 1;
            let f = gaussian_input(0.0, p.beam_width, &grid).unwrap();
            let opts = PropagationOptions { length: Some(4000.0), leakage_limit: None, ..Default::default() };
            let traj = split_step_propagate(&f, &p.design, &p.constants, &grid, &opts).unwrap();
            (grid.dx, traj.fields.last().unwrap().clone())
        };
        let (dx, reference) = run(0.25);
        let err = |f: &[Complex64]| norm(&f.iter().zip(&reference).map(|(a, b)| a - b).collect::<Vec<_>>(), dx).sqrt();
        let coarse = err(&run(2.0).1);
        let fine = err(&run(1.0).1);
        let ratio = coarse / fine;
        assert!((3.5..4.6).contains(&ratio), "error ratio {ratio} ({coarse:e} / {fine:e})");
    }

    #[test]
    fn absorbed_power_accounts_for_norm_loss() {
        let p = PumpPreset::named("fig5b").unwrap();
        let grid = SimulationGrid::default_for(&p.design);
        let f = gaussian_input(0.0, p.beam_width, &grid).unwrap();
        let opts = PropagationOptions { length: Some(20_000.0), leakage_limit: None, ..Default::default() };
        let traj = split_step_propagate(&f, &p.design, &p.constants, &grid, &opts).unwrap();
        assert!(traj.absorbed_fraction() > 0.0);
        assert!(traj.cumulative_drift() < 1e-10, "{:e}", traj.cumulative_drift());
        assert!(traj.max_step_drift < 1e-12, "{:e}", traj.max_step_drift);
    }

    #[test]
    fn leakage_abort_reports_position() {
        let d = WaveguideArrayDesign::index_modulated(0.0, third(), 10.0, 3.0, 1e4);
        let c = OpticalConstants::silica(0.0);
        let grid = SimulationGrid::for_design(&d, DEFAULT_DX, 1.0, 30.0, Boundary::Periodic);
        let f = gaussian_input(0.0, 2.0, &grid).unwrap();
        match split_step_propagate(&f, &d, &c, &grid, &PropagationOptions::default()) {
            Err(Error::BoundaryLeakage { leakage, limit, z }) => {
                assert!(leakage > limit);
                assert!(z > 0.0 && z <= 1e4);
            }
            other => panic!("expected leakage abort, got {other:?}"),
        }
    }

    #[test]
    fn presets_resolve() {
        for name in ["fig5a", "fig5b", "fig5c"] {
            let p = PumpPreset::named(name).unwrap();
            let grid = SimulationGrid::default_for(&p.design);
            assert!(grid.width() >= (p.design.num_guides as f64 + 6.0) * p.design.ws);
            assert!(grid.nx.is_power_of_two());
        }
        assert!(PumpPreset::named("fig9").is_none());
    }
}
