//! Command-line front end: `aahlab <command> [--preset NAME] [--config FILE] [--set key=value]...`.

pub mod config;
pub mod output;
pub mod presets;

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::beam::{
    self, ArrayVariant, Boundary, OpticalConstants, PropagationOptions, SimulationGrid, WaveguideArrayDesign,
};
use crate::edge::{bulk_edge_check, winding_numbers, EdgeSettings};
use crate::error::{Error, Result};
use crate::extract::{self, ExtractionReport, ModeGrid};
use crate::model::ModulationParams;
use crate::spectral::{self, band_grid, closure_point, gap_scan, gap_scan_refined, GapScanRow};
use crate::topology::{self, ChernEntry, ChernVector, PhaseCell};

use config::{axis, help_table, KeySpec, RunConfig};
use output::{fmt_f64, pgm, scale_to_gray, write_json, Csv};
use presets::{CommandKind, Expectation, Preset};

#[derive(Debug, Parser)]
#[command(name = "aahlab", version, about = "Topological bands and Thouless pumping in commensurate AAH waveguide arrays")]
pub struct Cli {
    /// Worker threads for parallel sweeps (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the named presets and exit.
    #[arg(long)]
    pub list_presets: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bloch bands, gaps, Chern numbers and gap scans.
    #[command(after_help = keys_help(config::BANDS_KEYS))]
    Bands(RunArgs),
    /// Chern numbers over a (nu_od/J, nu_d/J) grid; resumable.
    #[command(after_help = keys_help(config::PHASE_KEYS))]
    PhaseDiagram(RunArgs),
    /// Open-chain spectral flow and edge winding numbers.
    #[command(after_help = keys_help(config::EDGES_KEYS))]
    Edges(RunArgs),
    /// Beam propagation through one pump period.
    #[command(after_help = keys_help(config::PUMP_KEYS))]
    Pump(RunArgs),
    /// Tight-binding parameters of an index-modulated array.
    #[command(after_help = keys_help(config::EXTRACT_KEYS))]
    Extract(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Start from a named preset (see --list-presets).
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat `key = value` file applied over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value` override applied last; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Compare the preset's result with its expected value (exit 4 on mismatch).
    #[arg(long)]
    pub check: bool,
}

fn keys_help(keys: &[KeySpec]) -> String {
    format!("Config keys (file or --set):\n{}", help_table(keys))
}

impl Command {
    fn parts(&self) -> (CommandKind, &RunArgs) {
        match self {
            Command::Bands(a) => (CommandKind::Bands, a),
            Command::PhaseDiagram(a) => (CommandKind::PhaseDiagram, a),
            Command::Edges(a) => (CommandKind::Edges, a),
            Command::Pump(a) => (CommandKind::Pump, a),
            Command::Extract(a) => (CommandKind::Extract, a),
        }
    }
}

fn keys_for(kind: CommandKind) -> &'static [KeySpec] {
    match kind {
        CommandKind::Bands => config::BANDS_KEYS,
        CommandKind::PhaseDiagram => config::PHASE_KEYS,
        CommandKind::Edges => config::EDGES_KEYS,
        CommandKind::Pump => config::PUMP_KEYS,
        CommandKind::Extract => config::EXTRACT_KEYS,
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("aahlab: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line and returns the summary lines to print.
pub fn execute(cli: &Cli) -> Result<Vec<String>> {
    if cli.list_presets {
        return Ok(presets::listing().lines().map(str::to_string).collect());
    }
    let Some(command) = &cli.command else {
        return Err(Error::Config("no command given (try --help)".into()));
    };
    let (kind, args) = command.parts();
    let preset = match &args.preset {
        Some(name) => {
            let p = presets::find(name).ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
            if p.command != kind {
                return Err(Error::Config(format!("preset `{name}` belongs to `{}`", p.command.name())));
            }
            Some(p)
        }
        None => None,
    };
    if args.check && preset.is_none() {
        return Err(Error::Config("--check needs --preset".into()));
    }
    let mut cfg = RunConfig::new(keys_for(kind));
    if let Some(p) = &preset {
        for (k, v) in p.settings {
            cfg.set(k, v)?;
        }
    }
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    std::fs::create_dir_all(&args.out)?;
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| {
        let outcome = match kind {
            CommandKind::Bands => cmd_bands(&cfg, &args.out)?,
            CommandKind::PhaseDiagram => cmd_phase_diagram(&cfg, &args.out)?,
            CommandKind::Edges => cmd_edges(&cfg, &args.out)?,
            CommandKind::Pump => cmd_pump(&cfg, &args.out)?,
            CommandKind::Extract => cmd_extract(&cfg, &args.out)?,
        };
        let mut lines = outcome.lines.clone();
        if args.check {
            let p = preset.as_ref().expect("checked above");
            check(p, &outcome.result)?;
            lines.push(format!("check {}: ok", p.name));
        }
        Ok(lines)
    })
}

/// Values a check can be evaluated against.
#[derive(Debug, Clone)]
pub enum CommandResult {
    Bands { gaps_over_j: Vec<f64>, cherns: Option<ChernVector>, scan: Option<Vec<GapScanRow>> },
    PhaseDiagram { nu_od: Vec<f64>, nu_d: Vec<f64>, cells: Vec<PhaseCell> },
    Edges { branches: Vec<usize>, windings: Vec<i32>, consistent: bool },
    Pump { chern_estimate: f64 },
    Extract(Box<ExtractionReport>),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub result: CommandResult,
}

fn mismatch(preset: &Preset, what: String) -> Error {
    Error::CheckFailed(format!("preset {}: {what}", preset.name))
}

pub fn check(preset: &Preset, result: &CommandResult) -> Result<()> {
    match (&preset.expectation, result) {
        (Expectation::Cherns(want), CommandResult::Bands { cherns, .. }) => {
            let got = cherns.as_ref().and_then(ChernVector::integers);
            if got.as_ref() != Some(want) {
                return Err(mismatch(preset, format!("Chern numbers {got:?}, expected {want:?}")));
            }
        }
        (Expectation::GapsClosed { max_gap }, CommandResult::Bands { gaps_over_j, cherns, .. }) => {
            if gaps_over_j.iter().any(|g| g >= max_gap) {
                return Err(mismatch(preset, format!("gaps {gaps_over_j:?} not all below {max_gap}")));
            }
            if cherns.as_ref().is_some_and(ChernVector::is_fully_defined) {
                return Err(mismatch(preset, "Chern numbers defined at a closure".into()));
            }
        }
        (Expectation::SimultaneousClosure { at, tol, max_gap }, CommandResult::Bands { scan: Some(scan), .. }) => {
            let bands = scan.first().map_or(0, |r| r.gaps.len());
            for n in 1..=bands {
                let (r, g) = closure_point(scan, n).expect("scan has rows");
                if (r - at).abs() > *tol || g >= *max_gap {
                    return Err(mismatch(preset, format!("gap {n} minimum {g:e} at {r}, expected < {max_gap:e} at {at} +- {tol}")));
                }
            }
        }
        (Expectation::SplitClosure { min_separation }, CommandResult::Bands { scan: Some(scan), .. }) => {
            let r1 = closure_point(scan, 1).map(|p| p.0);
            let r2 = closure_point(scan, 2).map(|p| p.0);
            match (r1, r2) {
                (Some(a), Some(b)) if (a - b).abs() >= *min_separation => {}
                _ => return Err(mismatch(preset, format!("closures at {r1:?} and {r2:?} are not split"))),
            }
        }
        (Expectation::PhaseRegions(tuples), CommandResult::PhaseDiagram { nu_d, cells, .. }) => {
            let nd = nu_d.len();
            let Some(zero) = nu_d.iter().position(|v| v.abs() < 1e-12) else {
                return Err(mismatch(preset, "grid has no nu_d = 0 column".into()));
            };
            let on_axis: Vec<Vec<i32>> = cells
                .iter()
                .skip(zero)
                .step_by(nd)
                .filter_map(|c| c.chern().and_then(ChernVector::integers))
                .collect();
            for t in tuples {
                if !on_axis.contains(t) {
                    return Err(mismatch(preset, format!("no {t:?} region on the nu_d = 0 axis")));
                }
            }
        }
        (Expectation::Edges { branches, windings }, CommandResult::Edges { branches: b, windings: w, consistent }) => {
            if b != branches || w != windings || !consistent {
                return Err(mismatch(
                    preset,
                    format!("branches {b:?}, windings {w:?}, consistent {consistent}; expected {branches:?}, {windings:?}"),
                ));
            }
        }
        (Expectation::PumpChern { value, tol }, CommandResult::Pump { chern_estimate }) => {
            if (chern_estimate - value).abs() > *tol {
                return Err(mismatch(preset, format!("C_est = {chern_estimate}, expected {value} +- {tol}")));
            }
        }
        (Expectation::Extraction { j, rel_tol, delta_phi, phase_tol }, CommandResult::Extract(r)) => {
            let p = r.params;
            let mut problems = Vec::new();
            if ((p.j - j) / j).abs() > *rel_tol {
                problems.push(format!("J = {:e} not within {rel_tol} of {j:e}", p.j));
            }
            if !(p.nu_d < 0.0 && p.nu_d.abs() > p.nu_od.abs() && p.nu_od < p.j) {
                problems.push(format!("sign/order contracts fail: {p:?}"));
            }
            if extract::wrap_phase(p.delta_phi - delta_phi).abs() > *phase_tol {
                problems.push(format!("delta_phi = {} not within {phase_tol} of {delta_phi}", p.delta_phi));
            }
            if !problems.is_empty() {
                return Err(mismatch(preset, problems.join("; ")));
            }
        }
        (e, _) => return Err(mismatch(preset, format!("expectation {e:?} does not apply to this result"))),
    }
    Ok(())
}

fn model_params(cfg: &RunConfig) -> Result<ModulationParams> {
    let j = cfg.f64("J")?;
    if !(j > 0.0) {
        return Err(Error::Config("key `J` must be positive".into()));
    }
    Ok(ModulationParams::new(j, cfg.f64("nu_d_over_J")? * j, cfg.f64("nu_od_over_J")? * j, cfg.rational("beta")?)
        .with_delta_phi(cfg.f64("delta_phi_rad")?))
}

fn chern_json(c: &ChernVector) -> Value {
    Value::Array(
        c.0.iter()
            .map(|e| match e {
                ChernEntry::Integer(n) => json!(n),
                ChernEntry::Undefined(_) => json!("undef"),
            })
            .collect(),
    )
}

fn params_json(p: &ModulationParams) -> Value {
    json!({
        "J": p.j,
        "nu_d": p.nu_d,
        "nu_od": p.nu_od,
        "beta": p.beta.to_string(),
        "delta_phi": p.delta_phi,
    })
}

fn cmd_bands(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let params = model_params(cfg)?;
    let mesh = cfg.usize("mesh")?;
    let grid = band_grid(&params, mesh, mesh)?;
    let q = grid.bands();
    let mut csv = Csv::new(&["kx", "ky", "band", "energy"]);
    for ix in 0..mesh {
        for iy in 0..mesh {
            let k = grid.mesh.momentum(ix, iy);
            for n in 0..q {
                csv.row([fmt_f64(k.kx), fmt_f64(k.ky), (n + 1).to_string(), fmt_f64(grid.energy(n, ix, iy))]);
            }
        }
    }
    csv.save(&out.join("bands.csv"))?;
    let mut lines = vec![format!("wrote {}", out.join("bands.csv").display())];
    if cfg.bool("pgm")? {
        for n in 0..q {
            let values: Vec<f64> =
                (0..mesh).flat_map(|iy| (0..mesh).map(move |ix| (ix, iy))).map(|(ix, iy)| grid.energy(n, ix, iy)).collect();
            let path = out.join(format!("band{}.pgm", n + 1));
            std::fs::write(&path, pgm(mesh, mesh, &scale_to_gray(&values)))?;
        }
    }
    let gaps: Vec<f64> = grid.gaps();
    let gaps_over_j: Vec<f64> = gaps.iter().map(|g| g / params.j).collect();
    let cherns = if q >= 3 && q % 2 == 1 {
        Some(topology::chern_numbers(&params, mesh, mesh, cfg.f64("gap_tol_over_J")? * params.j)?)
    } else {
        None
    };
    let scan = if cfg.is_set("scan_min") && cfg.is_set("scan_max") {
        let ratios = axis(cfg.f64("scan_min")?, cfg.f64("scan_max")?, cfg.f64("scan_step")?)?;
        let table = if cfg.bool("scan_refined")? {
            gap_scan_refined(&params, &ratios, mesh, mesh)?
        } else {
            gap_scan(&params, &ratios, mesh, mesh)?
        };
        let mut header = vec!["nu_od_over_J".to_string()];
        header.extend((1..q).map(|n| format!("G{n}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut csv = Csv::new(&header);
        for row in &table {
            csv.row(std::iter::once(fmt_f64(row.nu_od_over_j)).chain(row.gaps.iter().map(|&g| fmt_f64(g))));
        }
        csv.save(&out.join("gaps.csv"))?;
        lines.push(format!("wrote {}", out.join("gaps.csv").display()));
        for n in 1..q {
            if let Some((r, g)) = closure_point(&table, n) {
                lines.push(format!("G{n} minimum {} at nu_od/J = {}", fmt_f64(g), fmt_f64(r)));
            }
        }
        Some(table)
    } else {
        None
    };
    let summary = json!({
        "inputs": cfg.echo(),
        "params": params_json(&params),
        "gaps": gaps,
        "gaps_over_J": gaps_over_j,
        "chern_numbers": cherns.as_ref().map(chern_json),
    });
    write_json(&out.join("bands.json"), &summary)?;
    if let Some(c) = &cherns {
        lines.push(format!("Chern numbers {c}"));
    }
    lines.push(format!(
        "gaps/J {}",
        gaps_over_j.iter().map(|g| fmt_f64(*g)).collect::<Vec<_>>().join(" ")
    ));
    Ok(Outcome { lines, result: CommandResult::Bands { gaps_over_j, cherns, scan } })
}

#[derive(Serialize)]
struct CacheHeader<'a> {
    beta: String,
    nu_od: &'a [f64],
    nu_d: &'a [f64],
    mesh: usize,
    gap_tol: f64,
}

const CACHE_FILE: &str = "phase_diagram.cache";

/// Cached cells from an earlier run with the same grid, keyed by cell index.
fn load_cache(path: &Path, header: &str, cells: usize) -> Vec<Option<PhaseCell>> {
    let mut found = vec![None; cells];
    let Ok(text) = std::fs::read_to_string(path) else {
        return found;
    };
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return found;
    }
    for line in lines {
        let Some((idx, cell)) = line.split_once('\t') else { continue };
        let (Ok(i), Ok(c)) = (idx.parse::<usize>(), serde_json::from_str::<PhaseCell>(cell)) else { continue };
        if i < cells {
            found[i] = Some(c);
        }
    }
    found
}

fn cmd_phase_diagram(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let beta = cfg.rational("beta")?;
    let nu_od = axis(cfg.f64("nu_od_over_J_min")?, cfg.f64("nu_od_over_J_max")?, cfg.f64("nu_od_over_J_step")?)?;
    let nu_d = axis(cfg.f64("nu_d_over_J_min")?, cfg.f64("nu_d_over_J_max")?, cfg.f64("nu_d_over_J_step")?)?;
    topology::check_axes(&nu_od, &nu_d)?;
    if beta.q() % 2 == 0 {
        return Err(Error::EvenDenominator(beta.q()));
    }
    let mesh = cfg.usize("mesh")?;
    let gap_tol = cfg.f64("gap_tol_over_J")?;
    let header = serde_json::to_string(&CacheHeader { beta: beta.to_string(), nu_od: &nu_od, nu_d: &nu_d, mesh, gap_tol })?;
    let n_cells = nu_od.len() * nu_d.len();
    let nd = nu_d.len();
    let cache_path = out.join(CACHE_FILE);
    let cached = load_cache(&cache_path, &header, n_cells);
    let reused = cached.iter().filter(|c| c.is_some()).count();

    // rewrite the cache with what is valid, then append cells as they finish
    {
        let mut f = std::fs::File::create(&cache_path)?;
        writeln!(f, "{header}")?;
        for (i, c) in cached.iter().enumerate() {
            if let Some(c) = c {
                writeln!(f, "{i}\t{}", serde_json::to_string(c)?)?;
            }
        }
    }
    let appender = Mutex::new(OpenOptions::new().append(true).open(&cache_path)?);
    let missing: Vec<usize> = (0..n_cells).filter(|&i| cached[i].is_none()).collect();
    let computed: Vec<(usize, PhaseCell)> = missing
        .par_iter()
        .map(|&i| {
            let cell = topology::phase_cell(beta, nu_od[i / nd], nu_d[i % nd], mesh, mesh, gap_tol);
            let line = format!("{i}\t{}\n", serde_json::to_string(&cell)?);
            appender.lock().expect("cache writer poisoned").write_all(line.as_bytes())?;
            Ok((i, cell))
        })
        .collect::<Result<Vec<_>>>()?;
    drop(appender);
    let mut cells = cached;
    for (i, c) in computed {
        cells[i] = Some(c);
    }
    let cells: Vec<PhaseCell> = cells.into_iter().map(|c| c.expect("every cell filled")).collect();

    // canonical cache order
    let mut text = format!("{header}\n");
    for (i, c) in cells.iter().enumerate() {
        text.push_str(&format!("{i}\t{}\n", serde_json::to_string(c)?));
    }
    std::fs::write(&cache_path, text)?;

    let q = beta.q() as usize;
    let mut head = vec!["nu_od_over_J".to_string(), "nu_d_over_J".to_string()];
    head.extend((1..=q).map(|n| format!("C{n}")));
    let head: Vec<&str> = head.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&head);
    for (i, c) in cells.iter().enumerate() {
        let entries: Vec<String> = match c {
            PhaseCell::Computed(v) => v.0.iter().map(|e| e.to_string()).collect(),
            PhaseCell::Failed(_) => vec!["undef".to_string(); q],
        };
        csv.row([fmt_f64(nu_od[i / nd]), fmt_f64(nu_d[i % nd])].into_iter().chain(entries));
    }
    csv.save(&out.join("phase_diagram.csv"))?;
    if cfg.bool("pgm")? {
        for n in 0..q {
            // rows: nu_d descending, columns: nu_od ascending
            let values: Vec<Option<i32>> = (0..nd)
                .rev()
                .flat_map(|k| (0..nu_od.len()).map(move |i| (i, k)))
                .map(|(i, k)| match &cells[i * nd + k] {
                    PhaseCell::Computed(v) => match v.0[n] {
                        ChernEntry::Integer(c) => Some(c),
                        ChernEntry::Undefined(_) => None,
                    },
                    PhaseCell::Failed(_) => None,
                })
                .collect();
            let lo = values.iter().flatten().min().copied().unwrap_or(0);
            let hi = values.iter().flatten().max().copied().unwrap_or(0);
            let pixels: Vec<u8> = values
                .iter()
                .map(|v| match v {
                    None => 0,
                    Some(_) if hi == lo => 160,
                    Some(c) => (64.0 + 191.0 * f64::from(c - lo) / f64::from(hi - lo)).round() as u8,
                })
                .collect();
            std::fs::write(out.join(format!("phase_C{}.pgm", n + 1)), pgm(nu_od.len(), nd, &pixels))?;
        }
    }
    let lines = vec![
        format!("wrote {}", out.join("phase_diagram.csv").display()),
        format!("{n_cells} cells, {reused} from cache"),
    ];
    Ok(Outcome { lines, result: CommandResult::PhaseDiagram { nu_od, nu_d, cells } })
}

fn cmd_edges(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let params = model_params(cfg)?;
    let settings = EdgeSettings {
        num_sites: cfg.usize("N_sites")?,
        n_ky: cfg.usize("n_ky")?,
        edge_width: cfg.usize("edge_width_sites")?,
        threshold: cfg.f64("threshold")?,
        mesh: cfg.usize("mesh")?,
        gap_tol: cfg.f64("gap_tol_over_J")?,
    };
    let (report, flow) = bulk_edge_check(&params, &settings)?;
    let winding = winding_numbers(&flow, &report.gaps)?;
    let mut csv = Csv::new(&["ky", "level_index", "energy", "label"]);
    for (s, ky) in flow.ky_samples.iter().enumerate() {
        for (n, e) in flow.levels[s].iter().enumerate() {
            csv.row([fmt_f64(*ky), n.to_string(), fmt_f64(*e), flow.edge_labels[s][n].to_string()]);
        }
    }
    csv.save(&out.join("spectral_flow.csv"))?;
    let summary = json!({
        "inputs": cfg.echo(),
        "params": params_json(&params),
        "fiducial_energies": report.gaps,
        "windings": report.windings,
        "left_counts": winding.left_counts,
        "right_counts": winding.right_counts,
        "edge_branches": winding.edge_branches,
        "chern_numbers": chern_json(&report.cherns),
        "cherns_from_windings": report.cherns_from_windings,
        "consistent": report.consistent,
        "mirror_asymmetry": flow.mirror_asymmetry(),
    });
    write_json(&out.join("windings.json"), &summary)?;
    let lines = vec![
        format!("wrote {}", out.join("spectral_flow.csv").display()),
        format!(
            "windings {:?}, edge branches {:?}, Chern numbers {}, consistent {}",
            report.windings, winding.edge_branches, report.cherns, report.consistent
        ),
    ];
    Ok(Outcome {
        lines,
        result: CommandResult::Edges {
            branches: winding.edge_branches,
            windings: report.windings,
            consistent: report.consistent,
        },
    })
}

fn optics(cfg: &RunConfig) -> Result<OpticalConstants> {
    let c = OpticalConstants { n0: cfg.f64("n0")?, lambda: cfg.f64("lambda_um")?, gamma: cfg.f64("gamma")? };
    if !(c.n0 > 0.0 && c.lambda > 0.0 && c.gamma >= 0.0) {
        return Err(Error::Config("n0 and lambda_um must be positive, gamma non-negative".into()));
    }
    Ok(c)
}

fn index_design(cfg: &RunConfig, period: f64) -> Result<WaveguideArrayDesign> {
    let mut d = WaveguideArrayDesign::index_modulated(
        cfg.f64("alpha")?,
        cfg.rational("beta")?,
        cfg.f64("ws_um")?,
        cfg.f64("wx_um")?,
        period,
    );
    d.num_guides = cfg.usize("num_guides")?;
    Ok(d)
}

fn pump_design(cfg: &RunConfig) -> Result<WaveguideArrayDesign> {
    let period = cfg.f64("Z_cm")? * 1e4;
    let mut d = match cfg.raw("variant") {
        "index" => index_design(cfg, period)?,
        "spacing" => WaveguideArrayDesign::spacing_modulated(
            cfg.f64("wm_um")?,
            cfg.f64("phi0_rad")?,
            cfg.rational("beta")?,
            cfg.f64("ws_um")?,
            cfg.f64("wx_um")?,
            period,
        ),
        other => return Err(Error::Config(format!("key `variant`: expected index or spacing, got `{other}`"))),
    };
    d.num_guides = cfg.usize("num_guides")?;
    Ok(d)
}

/// Smallest first gap of the extracted tight-binding model, in 1/μm.
fn first_gap(constants: &OpticalConstants, design: &WaveguideArrayDesign) -> Result<f64> {
    let report = extract::extract_parameters(constants, design, &ModeGrid::default())?;
    let params = report.params.model(design);
    let grid = band_grid(&params, topology::DEFAULT_MESH, topology::DEFAULT_MESH)?;
    spectral::refined_gap(&params, &grid, 1)
}

fn cmd_pump(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let constants = optics(cfg)?;
    let design = pump_design(cfg)?;
    let warnings = design.validate()?;
    let padding = cfg.optional_f64("padding_um")?.unwrap_or(beam::DEFAULT_PADDING_SPACINGS * design.ws);
    let absorber = cfg.optional_f64("absorber_um")?.unwrap_or(beam::DEFAULT_ABSORBER_SPACINGS * design.ws);
    let boundary = if absorber > 0.0 {
        Boundary::Absorbing { width: absorber, strength: cfg.f64("absorber_rate_per_um")? }
    } else {
        Boundary::Periodic
    };
    let mut grid = SimulationGrid::for_design(&design, cfg.f64("dx_um")?, cfg.f64("dz_um")?, padding, boundary);
    grid.slices = cfg.usize("slices")?;
    let limit = cfg.f64("leakage_limit")?;
    let options = PropagationOptions { leakage_limit: (limit > 0.0).then_some(limit), ..Default::default() };
    let run = beam::run_pump(&design, &constants, cfg.f64("W_um")?, &grid, &options)?;
    let traj = &run.trajectory;

    let stride = cfg.usize("x_stride")?.max(1);
    let (lo, hi) = match boundary {
        Boundary::Periodic => (0, grid.nx),
        Boundary::Absorbing { width, .. } => {
            let cut = (width / grid.dx).round() as usize;
            (cut, grid.nx - cut)
        }
    };
    let columns: Vec<usize> = (lo..hi).step_by(stride).collect();
    let mut head = vec!["z_um".to_string()];
    head.extend(columns.iter().map(|&i| fmt_f64(grid.x(i))));
    let head: Vec<&str> = head.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&head);
    let mut pixels = Vec::with_capacity(columns.len() * traj.z.len());
    for (s, z) in traj.z.iter().enumerate() {
        let intensity = traj.intensity(s);
        let row: Vec<f64> = columns.iter().map(|&i| intensity[i]).collect();
        csv.row(std::iter::once(fmt_f64(*z)).chain(row.iter().map(|v| fmt_f64(*v))));
        let peak = row.iter().cloned().fold(0.0, f64::max);
        pixels.extend(row.iter().map(|v| if peak > 0.0 { (255.0 * v / peak).round() as u8 } else { 0 }));
    }
    csv.save(&out.join("intensity.csv"))?;
    std::fs::write(out.join("intensity.pgm"), pgm(columns.len(), traj.z.len(), &pixels))?;

    let lz = match design.variant {
        ArrayVariant::IndexModulated { .. } => {
            let g1 = first_gap(&constants, &design)?;
            Some((g1, beam::lz_ratio(g1, design.period)))
        }
        ArrayVariant::SpacingModulated { .. } => None,
    };
    let summary = json!({
        "inputs": cfg.echo(),
        "input_center_um": run.input_center,
        "mean_x_start_um": run.mean_start,
        "mean_x_end_um": run.mean_end,
        "chern_estimate": run.chern_estimate,
        "norm_drift": traj.cumulative_drift(),
        "max_step_drift": traj.max_step_drift,
        "leakage_max": traj.max_leakage,
        "window_leakage_max": traj.max_window_leakage,
        "absorbed_fraction": traj.absorbed_fraction(),
        "first_gap_per_um": lz.map(|l| l.0),
        "lz_ratio": lz.map(|l| l.1),
        "grid": {
            "nx": grid.nx,
            "dx_um": grid.dx,
            "dz_um": grid.dz,
            "x_min_um": grid.x_min,
            "x_max_um": grid.x_max(),
            "absorber_um": absorber.max(0.0),
            "padding_um": padding,
        },
        "warnings": warnings,
    });
    write_json(&out.join("pump.json"), &summary)?;
    let mut lines: Vec<String> = warnings.iter().map(|w| format!("warning: {w}")).collect();
    lines.push(format!("wrote {}", out.join("intensity.csv").display()));
    lines.push(format!(
        "C_est = {}, norm drift = {}, leakage = {}",
        fmt_f64(run.chern_estimate),
        fmt_f64(traj.cumulative_drift()),
        fmt_f64(traj.max_leakage)
    ));
    if let Some((_, r)) = lz {
        lines.push(format!("Landau-Zener ratio exp(-G1^2 Z) = {}", fmt_f64(r)));
    }
    Ok(Outcome { lines, result: CommandResult::Pump { chern_estimate: run.chern_estimate } })
}

fn cmd_extract(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let constants = optics(cfg)?;
    let design = index_design(cfg, 1e5)?;
    let grid = ModeGrid { dx: cfg.f64("mode_dx_um")?, window_spacings: cfg.f64("window_spacings")? };
    let report = extract::extract_parameters(&constants, &design, &grid)?;
    write_json(&out.join("extract.json"), &json!({ "inputs": cfg.echo(), "report": report }))?;
    let p = report.params;
    let mut lines = vec![
        format!("wrote {}", out.join("extract.json").display()),
        format!(
            "J = {}/um, nu_od = {}/um, nu_d = {}/um, delta_phi = {}",
            fmt_f64(p.j),
            fmt_f64(p.nu_od),
            fmt_f64(p.nu_d),
            fmt_f64(p.delta_phi)
        ),
    ];
    if report.phase_flagged {
        lines.push(format!("warning: delta_phi deviates from pi/3 by more than {}", extract::PHASE_TOLERANCE));
    }
    Ok(Outcome { lines, result: CommandResult::Extract(Box::new(report)) })
}
