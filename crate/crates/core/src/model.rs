//! Generalized commensurate Aubry-André-Harper chain.
//!
//! On-site energies `V_j = ν_d cos(2πβj + k_y)` and bond hoppings
//! `J_{j,j+1} = -J + ν_od cos(2πβj + k_y + δφ)` with `β = p/q` stored exactly.
//! Sites inside a unit cell are numbered `1..=q`; the modulation argument
//! always uses the absolute site index.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational modulation frequency `p/q` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    p: u32,
    q: u32,
}

impl Rational {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("beta denominator q must be >= 1".into()));
        }
        if gcd(p, q) != 1 {
            return Err(Error::InvalidParameter(format!(
                "beta = {p}/{q} is not in lowest terms"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(self) -> u32 {
        self.p
    }

    pub fn q(self) -> u32 {
        self.q
    }

    /// `2π·(p·j mod q)/q`, reduced before scaling so large `j` loses no precision.
    pub fn phase_of_site(self, j: i64) -> f64 {
        let q = i64::from(self.q);
        let r = (i64::from(self.p) * j.rem_euclid(q)).rem_euclid(q);
        TAU * r as f64 / q as f64
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.p) / f64::from(self.q)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Parameter tuple of the discrete model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationParams {
    pub j: f64,
    pub nu_d: f64,
    pub nu_od: f64,
    pub beta: Rational,
    pub delta_phi: f64,
}

impl ModulationParams {
    pub fn new(j: f64, nu_d: f64, nu_od: f64, beta: Rational) -> Self {
        Self { j, nu_d, nu_od, beta, delta_phi: 0.0 }
    }

    /// Purely off-diagonal model with `J = 1`, `β = 1/3`.
    pub fn off_diagonal(nu_od_over_j: f64) -> Self {
        Self::new(1.0, 0.0, nu_od_over_j, Rational { p: 1, q: 3 })
    }

    pub fn with_delta_phi(mut self, delta_phi: f64) -> Self {
        self.delta_phi = delta_phi;
        self
    }

    pub fn q(&self) -> usize {
        self.beta.q as usize
    }

    /// Topology routines only accept odd `q`.
    pub fn require_odd_q(&self) -> Result<()> {
        if self.beta.q % 2 == 0 {
            Err(Error::EvenDenominator(self.beta.q))
        } else {
            Ok(())
        }
    }
}

/// Point of the Brillouin-like zone `(-π/q, π/q] × (0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMomentum {
    pub kx: f64,
    pub ky: f64,
}

impl BlochMomentum {
    /// Reduces both components into the zone.
    pub fn reduced(kx: f64, ky: f64, q: usize) -> Self {
        let w = TAU / q as f64;
        let half = w / 2.0;
        let mut kx = (kx + half).rem_euclid(w) - half;
        if kx <= -half {
            kx += w;
        }
        let mut ky = ky.rem_euclid(TAU);
        if ky == 0.0 {
            ky = TAU;
        }
        Self { kx, ky }
    }
}

/// Dense complex Hermitian operator, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

pub const HERMITIAN_TOL: f64 = 1e-12;

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    /// Wraps raw entries without checking Hermiticity; `eigh` rejects violations.
    pub fn from_row_major(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[r * self.dim + c] = v;
    }

    fn add(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[r * self.dim + c] += v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `max |H - H†|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }
}

/// Where the Bloch phase `e^{i k_x}` sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlochGauge {
    /// Every bond carries `e^{i k_x}`; the block repeats in `k_x` only up to
    /// the unitary `diag(e^{2πi j/q})`.
    #[default]
    EveryBond,
    /// Only the bond closing the cell carries `e^{i q k_x}`; the block is
    /// strictly periodic under `k_x → k_x + 2π/q`.
    CellBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenChainSpec {
    pub num_sites: usize,
    pub ky: f64,
}

pub fn onsite_potential(j: i64, params: &ModulationParams, ky: f64) -> f64 {
    params.nu_d * (params.beta.phase_of_site(j) + ky).cos()
}

/// Hopping on the bond `(j, j+1)`.
pub fn hopping(j: i64, params: &ModulationParams, ky: f64) -> f64 {
    -params.j + params.nu_od * (params.beta.phase_of_site(j) + ky + params.delta_phi).cos()
}

pub fn bloch_hamiltonian(params: &ModulationParams, k: BlochMomentum) -> HermitianMatrix {
    bloch_hamiltonian_in_gauge(params, k, BlochGauge::EveryBond)
}

pub fn bloch_hamiltonian_in_gauge(
    params: &ModulationParams,
    k: BlochMomentum,
    gauge: BlochGauge,
) -> HermitianMatrix {
    let q = params.q();
    let mut h = HermitianMatrix::zeros(q);
    for a in 0..q {
        let j = a as i64 + 1;
        h.add(a, a, Complex64::new(onsite_potential(j, params, k.ky), 0.0));
        let phase = match gauge {
            BlochGauge::EveryBond => k.kx,
            BlochGauge::CellBoundary if a + 1 == q => k.kx * q as f64,
            BlochGauge::CellBoundary => 0.0,
        };
        let t = hopping(j, params, k.ky) * Complex64::from_polar(1.0, phase);
        let b = (a + 1) % q;
        // for q = 1 both terms land on the diagonal: 2 Re(t e^{ikx})
        h.add(a, b, t);
        h.add(b, a, t.conj());
    }
    h
}

/// Unitary relating `EveryBond` blocks one zone width apart:
/// `H(k_x + 2π/q) = W† H(k_x) W` with `W = diag(e^{2πi j/q})`, `j = 1..=q`.
pub fn zone_shift_phases(q: usize) -> Vec<Complex64> {
    (1..=q)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / q as f64))
        .collect()
}

/// Real symmetric tridiagonal chain with hard-wall ends.
pub fn open_hamiltonian(params: &ModulationParams, spec: OpenChainSpec) -> Result<HermitianMatrix> {
    let n = spec.num_sites;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("open chain needs N >= 2, got {n}")));
    }
    let (diag, off) = open_chain_bands(params, spec);
    let mut h = HermitianMatrix::zeros(n);
    for (a, d) in diag.iter().enumerate() {
        h.set(a, a, Complex64::new(*d, 0.0));
    }
    for (a, t) in off.iter().enumerate() {
        h.set(a, a + 1, Complex64::new(*t, 0.0));
        h.set(a + 1, a, Complex64::new(*t, 0.0));
    }
    Ok(h)
}

/// Diagonal and off-diagonal of the open chain (sites `1..=N`).
pub fn open_chain_bands(params: &ModulationParams, spec: OpenChainSpec) -> (Vec<f64>, Vec<f64>) {
    let n = spec.num_sites;
    let diag = (1..=n as i64).map(|j| onsite_potential(j, params, spec.ky)).collect();
    let off = (1..n as i64).map(|j| hopping(j, params, spec.ky)).collect();
    (diag, off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn third() -> Rational {
        Rational::new(1, 3).unwrap()
    }

    #[test]
    fn rational_rejects_non_coprime_and_zero() {
        assert!(Rational::new(2, 6).is_err());
        assert!(Rational::new(1, 0).is_err());
        assert!(Rational::new(0, 1).is_ok());
    }

    #[test]
    fn onsite_examples() {
        let p = ModulationParams::new(1.0, 1.0, 0.0, Rational::new(2, 7).unwrap());
        assert_abs_diff_eq!(onsite_potential(0, &p, 0.0), 1.0, epsilon = 1e-15);
        let p = ModulationParams::new(1.0, 2.0, 0.0, third());
        assert_abs_diff_eq!(onsite_potential(3, &p, 0.0), 2.0, epsilon = 1e-15);
        let p = ModulationParams::new(1.0, 1.0, 0.0, third());
        // cos(2π/3 + π/2) = -sin(2π/3) = -√3/2
        assert_abs_diff_eq!(onsite_potential(1, &p, FRAC_PI_2), -0.75_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(onsite_potential(1, &p, FRAC_PI_2), -0.866_025_403_784_438_6, epsilon = 1e-15);
    }

    #[test]
    fn hopping_examples() {
        let p = ModulationParams::new(1.0, 0.0, 0.0, third());
        assert_eq!(hopping(0, &p, 0.3), -1.0);
        let p = ModulationParams::new(1.0, 0.0, 1.0, third());
        assert_abs_diff_eq!(hopping(0, &p, 0.0), 0.0, epsilon = 1e-15);
        let p = ModulationParams::new(1.0, 0.0, 4.0, third());
        assert_abs_diff_eq!(hopping(2, &p, 0.0), -3.0, epsilon = 1e-14);
    }

    #[test]
    fn large_site_index_keeps_precision() {
        let p = ModulationParams::new(1.0, 1.0, 0.0, third());
        assert_eq!(onsite_potential(3_000_000_001, &p, 0.0), onsite_potential(1, &p, 0.0));
    }

    #[test]
    fn single_band_block_is_cosine() {
        let p = ModulationParams::new(1.0, 0.0, 0.0, Rational::new(0, 1).unwrap());
        for &kx in &[-2.0, 0.0, 0.7, PI] {
            let h = bloch_hamiltonian(&p, BlochMomentum { kx, ky: 1.0 });
            assert_eq!(h.dim(), 1);
            assert_abs_diff_eq!(h.get(0, 0).re, -2.0 * kx.cos(), epsilon = 1e-14);
            assert_abs_diff_eq!(h.get(0, 0).im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn open_dimer() {
        let p = ModulationParams::new(1.0, 0.0, 0.0, third());
        let h = open_hamiltonian(&p, OpenChainSpec { num_sites: 2, ky: 0.0 }).unwrap();
        assert_eq!(h.get(0, 1).re, -1.0);
        assert_eq!(h.get(1, 0).re, -1.0);
        assert_eq!(h.get(0, 0).re, 0.0);
        assert!(open_hamiltonian(&p, OpenChainSpec { num_sites: 1, ky: 0.0 }).is_err());
    }

    #[test]
    fn gauges_are_unitarily_related_by_zone_shift() {
        let p = ModulationParams::new(1.0, 0.4, 1.3, third()).with_delta_phi(0.2);
        let k = BlochMomentum { kx: 0.31, ky: 2.2 };
        let h0 = bloch_hamiltonian(&p, k);
        let h1 = bloch_hamiltonian(&p, BlochMomentum { kx: k.kx + TAU / 3.0, ky: k.ky });
        let w = zone_shift_phases(3);
        for r in 0..3 {
            for c in 0..3 {
                let rotated = w[r].conj() * h0.get(r, c) * w[c];
                assert!((rotated - h1.get(r, c)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn reduce_momentum_into_zone() {
        let k = BlochMomentum::reduced(PI, 0.0, 3);
        assert_abs_diff_eq!(k.kx, PI / 3.0, epsilon = 1e-12);
        assert_eq!(k.ky, TAU);
        let k = BlochMomentum::reduced(-PI / 3.0, -0.5, 3);
        assert_abs_diff_eq!(k.kx, PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.ky, TAU - 0.5, epsilon = 1e-12);
    }
}
