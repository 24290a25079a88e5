//! Gap closing at ν_od/J = 4 and its splitting once a diagonal term is added.
use aahlab::model::ModulationParams;
use aahlab::spectral::{closure_point, gap_scan, gap_scan_refined};

fn main() -> aahlab::error::Result<()> {
    let ratios: Vec<f64> = (0..=100).map(|i| 3.5 + 0.01 * i as f64).collect();
    let plain = gap_scan(&ModulationParams::off_diagonal(4.0), &ratios, 48, 48)?;
    for n in 1..=2 {
        let (r, g) = closure_point(&plain, n).unwrap();
        println!("nu_d = 0:   G{n} smallest ({g:.2e} J) at nu_od/J = {r:.2}");
    }
    let template = ModulationParams { nu_d: 0.2, ..ModulationParams::off_diagonal(4.0) };
    let split = gap_scan_refined(&template, &ratios, 48, 48)?;
    for n in 1..=2 {
        let (r, g) = closure_point(&split, n).unwrap();
        println!("nu_d = 0.2: G{n} smallest ({g:.2e} J) at nu_od/J = {r:.2}");
    }
    Ok(())
}
