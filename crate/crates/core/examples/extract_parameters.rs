//! Tight-binding parameters of the index-modulated array from its guide modes.
use aahlab::beam::OpticalConstants;
use aahlab::extract::{extract_parameters, reference_design, ModeGrid};

fn main() -> aahlab::error::Result<()> {
    for gamma in [9e-4, 5e-4] {
        let design = reference_design(1e5);
        let r = extract_parameters(&OpticalConstants::silica(gamma), &design, &ModeGrid::default())?;
        let p = r.params;
        println!("gamma = {gamma:e}");
        println!("  J = {:.3e}/um  nu_d = {:.3e}/um  nu_od = {:.3e}/um  delta_phi = {:.4}", p.j, p.nu_d, p.nu_od, p.delta_phi);
        println!("  mean hopping {:.3e}/um, largest overlap deficit {:.2}", r.mean_hopping,
            r.overlap_deficits.iter().cloned().fold(0.0, f64::max));
    }
    Ok(())
}
