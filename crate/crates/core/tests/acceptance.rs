//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use aahlab::beam::{
    free_gaussian_field, gaussian_input, norm, run_pump, split_step_propagate, Boundary, OpticalConstants,
    PropagationOptions, PumpPreset, SimulationGrid, WaveguideArrayDesign, DEFAULT_DX, LEAKAGE_LIMIT,
};
use aahlab::cli::{self, presets};
use aahlab::edge::{bulk_edge_check, spectral_flow, winding_numbers, EdgeSettings};
use aahlab::extract::{extract_parameters, reference_design, ModeGrid};
use aahlab::model::{BlochGauge, ModulationParams, Rational};
use aahlab::spectral::{band_grid, closure_point, gap_scan, gap_scan_refined};
use aahlab::topology::{chern_numbers, MeshStates, DEFAULT_GAP_TOL, DEFAULT_MESH};
use num_complex::Complex64;
use clap::Parser;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn third() -> Rational {
    Rational::new(1, 3).unwrap()
}

fn chern_phase_points() -> Outcome {
    let mut notes = Vec::new();
    for (ratio, want) in [(1.0, vec![-1, 2, -1]), (10.0, vec![2, -4, 2])] {
        let start = Instant::now();
        let c = chern_numbers(&ModulationParams::off_diagonal(ratio), DEFAULT_MESH, DEFAULT_MESH, DEFAULT_GAP_TOL)
            .map_err(e)?;
        let secs = start.elapsed().as_secs_f64();
        ensure(c.integers().as_ref() == Some(&want), format!("nu_od/J = {ratio}: {c}, expected {want:?}"))?;
        ensure(secs < 1.0, format!("nu_od/J = {ratio} took {secs:.2} s"))?;
        notes.push(format!("{ratio}: {c} in {:.0} ms", secs * 1e3));
    }
    Ok(notes.join(", "))
}

fn transition_location() -> Outcome {
    let ratios: Vec<f64> = (0..=100).map(|i| 3.5 + 0.01 * i as f64).collect();
    let table = gap_scan(&ModulationParams::off_diagonal(4.0), &ratios, DEFAULT_MESH, DEFAULT_MESH).map_err(e)?;
    let mut at = Vec::new();
    for n in 1..=2 {
        let (r, g) = closure_point(&table, n).ok_or("empty scan")?;
        ensure((r - 4.0).abs() <= 0.02 && g < 1e-3, format!("G{n} minimum {g:e} at {r}"))?;
        at.push(r);
    }
    let template = ModulationParams { nu_d: 0.2, ..ModulationParams::off_diagonal(4.0) };
    let split = gap_scan_refined(&template, &ratios, DEFAULT_MESH, DEFAULT_MESH).map_err(e)?;
    let r1 = closure_point(&split, 1).ok_or("empty scan")?;
    let r2 = closure_point(&split, 2).ok_or("empty scan")?;
    ensure((r1.0 - r2.0).abs() > 0.05, format!("split closures coincide: {r1:?} {r2:?}"))?;
    Ok(format!(
        "closure at {:.2}/{:.2}; nu_d/J = 0.2 splits it to {:.2} and {:.2}",
        at[0], at[1], r1.0, r2.0
    ))
}

fn chiral_symmetry() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut worst_mirror = 0.0f64;
    for ratio in [0.5, 1.0, 2.0, 6.0, 10.0] {
        let params = ModulationParams::off_diagonal(ratio);
        let g = band_grid(&params, DEFAULT_MESH, DEFAULT_MESH).map_err(e)?.gaps();
        worst_gap = worst_gap.max((g[0] - g[1]).abs());
        let flow = spectral_flow(&params, 89, 200, 5, 0.5).map_err(e)?;
        worst_mirror = worst_mirror.max(flow.mirror_asymmetry());
    }
    ensure(worst_gap < 1e-10, format!("|G1 - G2| = {worst_gap:e}"))?;
    ensure(worst_mirror < 1e-10, format!("open-chain mirror asymmetry {worst_mirror:e}"))?;
    Ok(format!("|G1 - G2| <= {worst_gap:.1e}, mirror asymmetry <= {worst_mirror:.1e}"))
}

fn linear_gap_growth() -> Outcome {
    let ratios: Vec<f64> = (0..=28).map(|i| 5.0 + 0.25 * i as f64).collect();
    let table = gap_scan(&ModulationParams::off_diagonal(5.0), &ratios, DEFAULT_MESH, DEFAULT_MESH).map_err(e)?;
    let xs: Vec<f64> = table.iter().map(|r| r.nu_od_over_j).collect();
    let ys: Vec<f64> = table.iter().map(|r| r.gaps[0]).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    ensure(r2 > 0.999, format!("R^2 = {r2}"))?;
    Ok(format!("slope {slope:.4}, R^2 = {r2:.6}"))
}

fn edge_windings() -> Outcome {
    let mut notes = Vec::new();
    for (ratio, branches, windings) in [(1.0, vec![2, 2], vec![-1, 1]), (10.0, vec![4, 4], vec![2, -2])] {
        let params = ModulationParams::off_diagonal(ratio);
        for n in [89, 149, 299] {
            let settings = EdgeSettings { num_sites: n, ..Default::default() };
            let (report, flow) = bulk_edge_check(&params, &settings).map_err(e)?;
            ensure(report.windings == windings, format!("nu_od/J = {ratio}, N = {n}: windings {:?}", report.windings))?;
            ensure(report.consistent, format!("nu_od/J = {ratio}, N = {n}: bulk-edge check failed"))?;
            let implied = &report.cherns_from_windings;
            ensure(
                implied.len() == 3 && report.cherns.integers().as_deref() == Some(implied.as_slice()),
                format!("nu_od/J = {ratio}, N = {n}: padded windings imply {implied:?}"),
            )?;
            if n == 89 {
                let w = winding_numbers(&flow, &report.gaps).map_err(e)?;
                ensure(w.edge_branches == branches, format!("nu_od/J = {ratio}: branches {:?}", w.edge_branches))?;
            }
        }
        notes.push(format!("{ratio}: {windings:?} with {branches:?} branches"));
    }
    Ok(format!("{} at N = 89, 149, 299", notes.join("; ")))
}

fn zero_sum_and_gauge() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(20140501);
    let mut draws = 0;
    let mut tries = 0;
    while draws < 50 {
        tries += 1;
        ensure(tries < 1000, "could not find 50 gapped draws")?;
        let (p, q) = [(1, 3), (1, 5), (2, 5), (3, 7)][rng.gen_range(0..4)];
        let beta = Rational::new(p, q).unwrap();
        let params = ModulationParams::new(1.0, rng.gen_range(0.0..6.0), rng.gen_range(0.0..12.0), beta)
            .with_delta_phi(rng.gen_range(0.0..2.0 * PI));
        // summed straight from the plaquette fields, without the library's own sum check
        let states = MeshStates::for_params(&params, DEFAULT_MESH, DEFAULT_MESH, BlochGauge::EveryBond).map_err(e)?;
        if (0..states.bands()).any(|b| states.isolation(b) < 1e-3) {
            continue;
        }
        let Some(fields) = (0..states.bands()).map(|b| states.plaquette_field(b)).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let estimates: Vec<f64> = fields.iter().map(|f| f.chern_estimate()).collect();
        ensure(
            estimates.iter().all(|c| (c - c.round()).abs() < 1e-6),
            format!("{params:?}: non-integer estimates {estimates:?}"),
        )?;
        let ints: Vec<i64> = estimates.iter().map(|c| c.round() as i64).collect();
        ensure(ints.iter().sum::<i64>() == 0, format!("{params:?}: sum of {ints:?} is not zero"))?;
        draws += 1;
    }

    let mut worst = 0.0f64;
    for ratio in [1.0, 10.0] {
        let params = ModulationParams { nu_d: 0.7, ..ModulationParams::off_diagonal(ratio) };
        let states = MeshStates::for_params(&params, 16, 16, BlochGauge::EveryBond).map_err(e)?;
        let mut rotated = states.clone();
        for point in rotated.states.iter_mut() {
            for v in point.iter_mut() {
                let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
                v.iter_mut().for_each(|c| *c *= phase);
            }
        }
        for band in 0..states.bands() {
            let a = states.plaquette_field(band).ok_or("band not isolated")?;
            let b = rotated.plaquette_field(band).ok_or("band not isolated")?;
            for (x, y) in a.values.iter().zip(&b.values) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    ensure(worst <= 1e-12, format!("gauge rotation moved a plaquette by {worst:e}"))?;

    for (od, d) in [(1.0, 0.0), (10.0, 0.0), (3.0, 1.0), (5.0, 3.0), (8.0, 3.0), (0.5, 4.0)] {
        let params = ModulationParams { nu_d: d, ..ModulationParams::off_diagonal(od) };
        let coarse = chern_numbers(&params, 12, 12, DEFAULT_GAP_TOL).map_err(e)?.integers();
        let fine = chern_numbers(&params, 48, 48, DEFAULT_GAP_TOL).map_err(e)?.integers();
        ensure(coarse.is_some() && coarse == fine, format!("({od}, {d}): {coarse:?} at 12x12, {fine:?} at 48x48"))?;
    }
    Ok(format!("50 gapped draws sum to zero ({tries} tried), gauge shift {worst:.1e}, 12x12 = 48x48"))
}

fn pumping() -> Outcome {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for preset in PumpPreset::all() {
        let start = Instant::now();
        let grid = SimulationGrid::default_for(&preset.design);
        let run = run_pump(&preset.design, &preset.constants, preset.beam_width, &grid, &PropagationOptions::default())
            .map_err(|err| format!("{}: {err}", preset.name))?;
        let t = &run.trajectory;
        let drift = t.cumulative_drift();
        let line = format!(
            "{} C = {:.3} (drift {:.0e}, leakage {:.0e}, {:.0} s)",
            preset.name,
            run.chern_estimate,
            drift,
            t.max_leakage,
            start.elapsed().as_secs_f64()
        );
        if (run.chern_estimate - preset.expected_chern).abs() > 0.05 || drift >= 1e-10 || t.max_leakage >= LEAKAGE_LIMIT {
            failures.push(line.clone());
        }
        notes.push(line);
    }
    ensure(failures.is_empty(), failures.join("; "))?;
    Ok(notes.join("; "))
}

fn free_diffraction() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let d = WaveguideArrayDesign::index_modulated(0.0, third(), 10.0, 3.0, 1e4);
    let c = OpticalConstants::silica(0.0);
    let k0 = c.k0();
    let mut worst = 0.0f64;
    for _ in 0..6 {
        let w0 = rng.gen_range(8.0..16.0);
        let x0 = rng.gen_range(-40.0..40.0);
        let mut grid = SimulationGrid::for_design(&d, DEFAULT_DX, rng.gen_range(0.5..2.0), 400.0, Boundary::Periodic);
        grid.slices = 4;
        let f = gaussian_input(x0, w0, &grid).map_err(e)?;
        let opts = PropagationOptions { leakage_limit: None, ..Default::default() };
        let traj = split_step_propagate(&f, &d, &c, &grid, &opts).map_err(e)?;
        for (z, field) in traj.z.iter().zip(&traj.fields) {
            let diff: Vec<Complex64> =
                (0..grid.nx).map(|i| field[i] - free_gaussian_field(grid.x(i), x0, w0, *z, k0)).collect();
            worst = worst.max(norm(&diff, grid.dx).sqrt());
        }
    }
    ensure(worst < 1e-3, format!("L2 error {worst:e}"))?;
    Ok(format!("6 random beams over 1 cm, worst L2 error {worst:.1e}"))
}

fn parameter_extraction() -> Outcome {
    let mut notes = Vec::new();
    for (gamma, reference) in [(9e-4, 3.76e-4), (5e-4, 5.23e-4)] {
        let r = extract_parameters(&OpticalConstants::silica(gamma), &reference_design(1e5), &ModeGrid::default())
            .map_err(e)?;
        let p = r.params;
        let rel = (p.j - reference) / reference;
        ensure(rel.abs() <= 0.3, format!("gamma {gamma:e}: J = {:e} is {:.0}% off", p.j, rel * 100.0))?;
        ensure(p.nu_d < 0.0, format!("gamma {gamma:e}: nu_d = {:e} not negative", p.nu_d))?;
        ensure(p.nu_d.abs() > 10.0 * p.nu_od.abs(), format!("gamma {gamma:e}: |nu_d| not >> |nu_od|"))?;
        ensure(p.nu_od.abs() < 0.5 * p.j, format!("gamma {gamma:e}: nu_od not << J"))?;
        let dphi = aahlab::extract::wrap_phase(p.delta_phi - PI / 3.0);
        ensure(dphi.abs() <= 0.3, format!("gamma {gamma:e}: delta_phi = {}", p.delta_phi))?;
        notes.push(format!("J({gamma:e}) = {:.3e} ({:+.1}%)", p.j, rel * 100.0));
    }
    Ok(notes.join(", "))
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|f| {
            let f = f.unwrap();
            (f.file_name().to_string_lossy().into_owned(), std::fs::read(f.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(e)?;
    let mut compared = 0;
    for p in presets::all() {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let out = root.path().join(format!("{}-{threads}", p.name));
            let args = [
                "aahlab",
                "--threads",
                threads,
                p.command.name(),
                "--preset",
                p.name,
                "--out",
                out.to_str().unwrap(),
            ];
            let parsed = cli::Cli::try_parse_from(args).map_err(e)?;
            cli::execute(&parsed).map_err(|err| format!("{} with {threads} threads: {err}", p.name))?;
            outputs.push(files_in(&out));
        }
        ensure(!outputs[0].is_empty(), format!("{} wrote nothing", p.name))?;
        let names = |o: &[(String, Vec<u8>)]| o.iter().map(|f| f.0.clone()).collect::<Vec<_>>();
        ensure(names(&outputs[0]) == names(&outputs[1]), format!("{}: different file sets", p.name))?;
        for (a, b) in outputs[0].iter().zip(&outputs[1]) {
            ensure(a.1 == b.1, format!("{}: {} differs between 1 and 8 threads", p.name, a.0))?;
            compared += 1;
        }
    }
    Ok(format!("{} presets, {compared} files byte-identical", presets::all().len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("chern phase points", chern_phase_points),
        ("transition location", transition_location),
        ("chiral symmetry", chiral_symmetry),
        ("linear gap growth", linear_gap_growth),
        ("edge windings", edge_windings),
        ("zero sum and gauge invariance", zero_sum_and_gauge),
        ("pumping reproduction", pumping),
        ("free diffraction", free_diffraction),
        ("parameter extraction", parameter_extraction),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
