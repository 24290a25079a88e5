//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Rational;

/// A recognized key with its default (empty means "derived") and help text.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, default, help }
}

const MODEL_KEYS: [KeySpec; 5] = [
    key("beta", "1/3", "modulation frequency p/q"),
    key("J", "1", "uniform hopping"),
    key("nu_d_over_J", "0", "diagonal modulation amplitude over J"),
    key("nu_od_over_J", "1", "off-diagonal modulation amplitude over J"),
    key("delta_phi_rad", "0", "hopping modulation phase offset"),
];

pub const BANDS_KEYS: &[KeySpec] = &[
    MODEL_KEYS[0],
    MODEL_KEYS[1],
    MODEL_KEYS[2],
    MODEL_KEYS[3],
    MODEL_KEYS[4],
    key("mesh", "48", "k-points per zone direction"),
    key("gap_tol_over_J", "1e-6", "minimum band isolation for a defined Chern number"),
    key("pgm", "false", "also write one PGM energy map per band"),
    key("scan_min", "", "first nu_od/J of a gap scan (scan runs when min and max are set)"),
    key("scan_max", "", "last nu_od/J of a gap scan"),
    key("scan_step", "0.01", "gap scan step"),
    key("scan_refined", "false", "minimize each gap continuously instead of on the mesh"),
];

pub const PHASE_KEYS: &[KeySpec] = &[
    MODEL_KEYS[0],
    key("nu_od_over_J_min", "0", "first nu_od/J"),
    key("nu_od_over_J_max", "12", "last nu_od/J"),
    key("nu_od_over_J_step", "0.25", "nu_od/J step"),
    key("nu_d_over_J_min", "0", "first nu_d/J"),
    key("nu_d_over_J_max", "6", "last nu_d/J"),
    key("nu_d_over_J_step", "0.25", "nu_d/J step"),
    key("mesh", "48", "k-points per zone direction"),
    key("gap_tol_over_J", "1e-6", "minimum band isolation for a defined Chern number"),
    key("pgm", "true", "also write one PGM map per band"),
];

pub const EDGES_KEYS: &[KeySpec] = &[
    MODEL_KEYS[0],
    MODEL_KEYS[1],
    MODEL_KEYS[2],
    MODEL_KEYS[3],
    MODEL_KEYS[4],
    key("N_sites", "89", "open chain length"),
    key("n_ky", "400", "ky samples over [0, 2pi)"),
    key("edge_width_sites", "5", "sites counted as an edge"),
    key("threshold", "0.5", "edge weight above which a level is an edge state"),
    key("mesh", "48", "k-points per direction for the bulk Chern numbers"),
    key("gap_tol_over_J", "1e-6", "minimum band isolation for a defined Chern number"),
];

const OPTICS_KEYS: [KeySpec; 8] = [
    key("gamma", "5e-4", "index contrast"),
    key("n0", "1.45", "background index"),
    key("lambda_um", "0.63", "vacuum wavelength"),
    key("alpha", "0.5", "index modulation strength"),
    key("beta", "1/3", "modulation frequency p/q"),
    key("ws_um", "10", "guide spacing"),
    key("wx_um", "3", "super-Gaussian guide width"),
    key("num_guides", "21", "number of guides"),
];

pub const PUMP_KEYS: &[KeySpec] = &[
    OPTICS_KEYS[0],
    OPTICS_KEYS[1],
    OPTICS_KEYS[2],
    OPTICS_KEYS[3],
    OPTICS_KEYS[4],
    OPTICS_KEYS[5],
    OPTICS_KEYS[6],
    OPTICS_KEYS[7],
    key("variant", "index", "index (refractive index modulated) or spacing (position modulated)"),
    key("wm_um", "18", "spacing modulation amplitude"),
    key("phi0_rad", "0.6283185307179586", "spacing modulation initial phase"),
    key("Z_cm", "10", "pump period"),
    key("W_um", "4.47", "input Gaussian width"),
    key("dx_um", "0.15625", "transverse step"),
    key("dz_um", "1", "propagation step"),
    key("padding_um", "", "empty space on each side of the array (default 3 ws)"),
    key("absorber_um", "", "absorbing layer width (default 12 ws, 0 for a bare periodic domain)"),
    key("absorber_rate_per_um", "0.01", "peak absorption rate"),
    key("slices", "200", "recorded z intervals per run"),
    key("leakage_limit", "1e-4", "abort when the edge-strip intensity exceeds this fraction"),
    key("x_stride", "4", "transverse sample stride of the intensity map"),
];

pub const EXTRACT_KEYS: &[KeySpec] = &[
    OPTICS_KEYS[0],
    OPTICS_KEYS[1],
    OPTICS_KEYS[2],
    OPTICS_KEYS[3],
    OPTICS_KEYS[4],
    OPTICS_KEYS[5],
    OPTICS_KEYS[6],
    OPTICS_KEYS[7],
    key("mode_dx_um", "0.05", "finite-difference step for the guide modes"),
    key("window_spacings", "8", "mode window width in guide spacings"),
];

/// Resolved settings for one command: defaults, then preset, file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    keys: &'static [KeySpec],
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(keys: &'static [KeySpec]) -> Self {
        let values = keys.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect();
        Self { keys, values }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.keys.iter().any(|k| k.name == key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("{origin}:{}: expected `key = value`", n + 1)));
            };
            let k = k.trim();
            if seen.insert(k.to_string(), n + 1).is_some() {
                return Err(Error::Config(format!("{origin}:{}: duplicate key `{k}`", n + 1)));
            }
            self.set(k, v).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{origin}:{}: {msg}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(Error::Config(format!("override `{assignment}` is not key=value")));
        };
        self.set(k.trim(), v)
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key `{key}` is not declared"))
    }

    pub fn is_set(&self, key: &str) -> bool {
        !self.raw(key).is_empty()
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{raw}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse(key)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Config(format!("key `{key}` must be finite")))
        }
    }

    pub fn optional_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.is_set(key) {
            self.f64(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parse(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(Error::Config(format!("key `{key}`: expected true or false, got `{other}`"))),
        }
    }

    pub fn rational(&self, key: &str) -> Result<Rational> {
        let raw = self.raw(key);
        let bad = || Error::Config(format!("key `{key}`: expected p/q, got `{raw}`"));
        let (p, q) = raw.split_once('/').ok_or_else(bad)?;
        let p = p.trim().parse().map_err(|_| bad())?;
        let q = q.trim().parse().map_err(|_| bad())?;
        Rational::new(p, q).map_err(|e| Error::Config(format!("key `{key}`: {e}")))
    }

    /// Every key with its resolved value, for echoing into reports.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.values.clone()
    }
}

/// Inclusive arithmetic axis `min, min+step, …, max`.
pub fn axis(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || max < min {
        return Err(Error::Config(format!("bad axis {min}..{max} step {step}")));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| min + i as f64 * step).collect())
}

pub fn help_table(keys: &[KeySpec]) -> String {
    let mut out = String::new();
    for k in keys {
        let default = if k.default.is_empty() { "derived" } else { k.default };
        out.push_str(&format!("  {:<22} {:<10} {}\n", k.name, default, k.help));
    }
    out
}
