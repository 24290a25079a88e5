//! Band Chern numbers from lattice link variables.
//!
//! Link variables `U_μ(k) = ⟨ψ(k)|ψ(k+μ)⟩/|⟨ψ(k)|ψ(k+μ)⟩|` on the periodic zone
//! mesh give a plaquette field
//! `F(k) = Arg[U_x(k) U_y(k+x) U_x(k+y)⁻¹ U_y(k)⁻¹]` in `(-π, π]` whose sum is
//! `2π` times an integer for every isolated band, independent of the phases
//! chosen for the eigenvectors.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    bloch_hamiltonian_in_gauge, zone_shift_phases, BlochGauge, BlochMomentum, HermitianMatrix,
    ModulationParams, Rational,
};
use crate::spectral::{eigh, ZoneMesh};

/// Default mesh along each zone direction.
pub const DEFAULT_MESH: usize = 48;
/// Default pointwise band spacing below which a band is `Undefined`, in units of `J`.
pub const DEFAULT_GAP_TOL: f64 = 1e-6;
const MIN_LINK_MODULUS: f64 = 1e-8;
const INTEGER_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChernEntry {
    Integer(i32),
    /// Band not isolated; carries the smallest spacing to a neighbouring band.
    Undefined(f64),
}

impl fmt::Display for ChernEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChernEntry::Integer(c) => write!(f, "{c}"),
            ChernEntry::Undefined(_) => f.write_str("undef"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernVector(pub Vec<ChernEntry>);

impl ChernVector {
    /// All entries as integers, or `None` when any band is undefined.
    pub fn integers(&self) -> Option<Vec<i32>> {
        self.0
            .iter()
            .map(|e| match e {
                ChernEntry::Integer(c) => Some(*c),
                ChernEntry::Undefined(_) => None,
            })
            .collect()
    }

    pub fn is_fully_defined(&self) -> bool {
        self.integers().is_some()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ChernVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

/// Per-plaquette Berry flux, stored at `ix * ny + iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaquetteField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl PlaquetteField {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny + iy]
    }

    pub fn total_flux(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn chern_estimate(&self) -> f64 {
        self.total_flux() / TAU
    }
}

/// Eigenstates of every band on a zone mesh, ready for link products.
///
/// `wrap` is the diagonal unitary mapping a state at `k_x` to the one a full
/// zone width further on: `ψ(k_x + 2π/q) = wrap · ψ(k_x)` componentwise.
#[derive(Debug, Clone)]
pub struct MeshStates {
    pub mesh: ZoneMesh,
    pub energies: Vec<Vec<f64>>,
    pub states: Vec<Vec<Vec<Complex64>>>,
    pub wrap: Vec<Complex64>,
}

impl MeshStates {
    /// Diagonalizes `hamiltonian` at every mesh point (in parallel, assembled by index).
    pub fn solve<F>(mesh: ZoneMesh, wrap: Vec<Complex64>, hamiltonian: F) -> Result<Self>
    where
        F: Fn(BlochMomentum) -> HermitianMatrix + Sync,
    {
        let solved = (0..mesh.len())
            .into_par_iter()
            .map(|i| eigh(&hamiltonian(mesh.momentum(i / mesh.ny, i % mesh.ny))))
            .collect::<Result<Vec<_>>>()?;
        let bands = solved.first().map_or(0, |e| e.dim());
        let energies = solved.iter().map(|e| e.values.clone()).collect();
        let states = solved
            .iter()
            .map(|e| (0..bands).map(|n| e.vector(n).to_vec()).collect())
            .collect();
        Ok(Self { mesh, energies, states, wrap })
    }

    pub fn for_params(params: &ModulationParams, nx: usize, ny: usize, gauge: BlochGauge) -> Result<Self> {
        let q = params.q();
        let wrap = match gauge {
            BlochGauge::EveryBond => zone_shift_phases(q).iter().map(|w| w.conj()).collect(),
            BlochGauge::CellBoundary => vec![Complex64::new(1.0, 0.0); q],
        };
        Self::solve(ZoneMesh::new(nx, ny, q), wrap, |k| bloch_hamiltonian_in_gauge(params, k, gauge))
    }

    pub fn bands(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.mesh.ny + iy
    }

    /// Smallest pointwise spacing between `band` and either neighbour.
    pub fn isolation(&self, band: usize) -> f64 {
        let last = self.bands() - 1;
        self.energies
            .iter()
            .map(|e| {
                let below = if band > 0 { e[band] - e[band - 1] } else { f64::INFINITY };
                let above = if band < last { e[band + 1] - e[band] } else { f64::INFINITY };
                below.min(above)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// State at `(ix, iy)` with `ix == nx` meaning one zone width past `ix = 0`.
    fn state(&self, band: usize, ix: usize, iy: usize) -> (&[Complex64], bool) {
        let iy = iy % self.mesh.ny;
        if ix == self.mesh.nx {
            (&self.states[self.index(0, iy)][band], true)
        } else {
            (&self.states[self.index(ix, iy)][band], false)
        }
    }

    fn overlap(&self, band: usize, (ix, iy): (usize, usize), (jx, jy): (usize, usize)) -> Complex64 {
        let (a, wa) = self.state(band, ix, iy);
        let (b, wb) = self.state(band, jx, jy);
        a.iter()
            .zip(b)
            .zip(&self.wrap)
            .map(|((x, y), w)| {
                let x = if wa { w * x } else { *x };
                let y = if wb { w * y } else { *y };
                x.conj() * y
            })
            .sum()
    }

    /// Plaquette field of one band; `None` when some link overlap vanishes.
    pub fn plaquette_field(&self, band: usize) -> Option<PlaquetteField> {
        let (nx, ny) = (self.mesh.nx, self.mesh.ny);
        let link = |from: (usize, usize), to: (usize, usize)| -> Option<Complex64> {
            let z = self.overlap(band, from, to);
            let m = z.norm();
            (m >= MIN_LINK_MODULUS).then(|| z / m)
        };
        let mut values = Vec::with_capacity(nx * ny);
        for ix in 0..nx {
            for iy in 0..ny {
                let ux = link((ix, iy), (ix + 1, iy))?;
                let uy_right = link((ix + 1, iy), (ix + 1, iy + 1))?;
                let ux_up = link((ix, iy + 1), (ix + 1, iy + 1))?;
                let uy = link((ix, iy), (ix, iy + 1))?;
                values.push(principal_arg(ux * uy_right * ux_up.conj() * uy.conj()));
            }
        }
        Some(PlaquetteField { nx, ny, values })
    }

    pub fn chern_numbers(&self, gap_tol: f64) -> Result<ChernVector> {
        let entries = (0..self.bands())
            .map(|band| {
                let isolation = self.isolation(band);
                if isolation < gap_tol {
                    return Ok(ChernEntry::Undefined(isolation));
                }
                let Some(field) = self.plaquette_field(band) else {
                    return Ok(ChernEntry::Undefined(isolation));
                };
                chern_from_field(&field, band).map(ChernEntry::Integer)
            })
            .collect::<Result<Vec<_>>>()?;
        let chern = ChernVector(entries);
        // a wrapped plaquette in one band shows up as a non-zero total
        if let Some(v) = chern.integers() {
            let total: i32 = v.iter().sum();
            if total != 0 {
                return Err(Error::MeshTooCoarse(format!("Chern numbers {chern} sum to {total}")));
            }
        }
        Ok(chern)
    }
}

/// `Arg z` in `(-π, π]`.
fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        a + TAU
    } else {
        a
    }
}

fn chern_from_field(field: &PlaquetteField, band: usize) -> Result<i32> {
    let worst = field.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if worst >= PI {
        return Err(Error::MeshTooCoarse(format!(
            "band {} has a plaquette flux of magnitude pi",
            band + 1
        )));
    }
    let c = field.chern_estimate();
    let rounded = c.round();
    if (c - rounded).abs() > INTEGER_TOL {
        return Err(Error::MeshTooCoarse(format!(
            "band {} flux sums to {c:.4} x 2pi, not an integer",
            band + 1
        )));
    }
    Ok(rounded as i32)
}

fn check_mesh(params: &ModulationParams, nx: usize, ny: usize) -> Result<()> {
    params.require_odd_q()?;
    if nx < 4 || ny < 4 {
        return Err(Error::InvalidParameter(format!("Chern mesh must be at least 4x4, got {nx}x{ny}")));
    }
    Ok(())
}

/// Chern number of every band; `gap_tol` is an absolute energy.
pub fn chern_numbers(params: &ModulationParams, nx: usize, ny: usize, gap_tol: f64) -> Result<ChernVector> {
    check_mesh(params, nx, ny)?;
    MeshStates::for_params(params, nx, ny, BlochGauge::EveryBond)?.chern_numbers(gap_tol)
}

/// Plaquette field of band `band` (0-based).
pub fn plaquette_field(params: &ModulationParams, band: usize, nx: usize, ny: usize) -> Result<PlaquetteField> {
    check_mesh(params, nx, ny)?;
    let q = params.q();
    if band >= q {
        return Err(Error::BandIndexOutOfRange { index: band, bands: q });
    }
    let states = MeshStates::for_params(params, nx, ny, BlochGauge::EveryBond)?;
    states
        .plaquette_field(band)
        .ok_or_else(|| Error::MeshTooCoarse(format!("vanishing link overlap in band {}", band + 1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PhaseCell {
    Computed(ChernVector),
    Failed(String),
}

impl PhaseCell {
    pub fn chern(&self) -> Option<&ChernVector> {
        match self {
            PhaseCell::Computed(c) => Some(c),
            PhaseCell::Failed(_) => None,
        }
    }
}

/// Chern tuples over a `(ν_od, ν_d)` plane, both axes in units of `J`.
///
/// Cell `(i, k)` (ν_od index `i`, ν_d index `k`) lives at `i * nu_d.len() + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub beta: Rational,
    pub nu_od: Vec<f64>,
    pub nu_d: Vec<f64>,
    pub cells: Vec<PhaseCell>,
}

impl PhaseDiagram {
    pub fn cell(&self, i_od: usize, i_d: usize) -> &PhaseCell {
        &self.cells[i_od * self.nu_d.len() + i_d]
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

pub fn check_axes(nu_od: &[f64], nu_d: &[f64]) -> Result<()> {
    if nu_od.is_empty() || nu_d.is_empty() {
        return Err(Error::InvalidParameter("phase diagram axes must be nonempty".into()));
    }
    if !strictly_increasing(nu_od) || !strictly_increasing(nu_d) {
        return Err(Error::InvalidParameter("phase diagram axes must be strictly increasing".into()));
    }
    Ok(())
}

/// One phase-diagram cell at `J = 1`, `δφ = 0`.
pub fn phase_cell(beta: Rational, nu_od: f64, nu_d: f64, nx: usize, ny: usize, gap_tol: f64) -> PhaseCell {
    let params = ModulationParams::new(1.0, nu_d, nu_od, beta);
    match chern_numbers(&params, nx, ny, gap_tol) {
        Ok(c) => PhaseCell::Computed(c),
        Err(e) => PhaseCell::Failed(e.to_string()),
    }
}

pub fn phase_diagram(
    beta: Rational,
    nu_od: &[f64],
    nu_d: &[f64],
    nx: usize,
    ny: usize,
    gap_tol: f64,
) -> Result<PhaseDiagram> {
    check_axes(nu_od, nu_d)?;
    if beta.q() % 2 == 0 {
        return Err(Error::EvenDenominator(beta.q()));
    }
    let nd = nu_d.len();
    let cells = (0..nu_od.len() * nd)
        .into_par_iter()
        .map(|c| phase_cell(beta, nu_od[c / nd], nu_d[c % nd], nx, ny, gap_tol))
        .collect();
    Ok(PhaseDiagram { beta, nu_od: nu_od.to_vec(), nu_d: nu_d.to_vec(), cells })
}
