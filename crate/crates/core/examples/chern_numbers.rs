//! Chern numbers on either side of the transition at ν_od/J = 4.
use aahlab::model::ModulationParams;
use aahlab::topology::{chern_numbers, DEFAULT_GAP_TOL, DEFAULT_MESH};

fn main() -> aahlab::error::Result<()> {
    for ratio in [0.5, 1.0, 3.0, 4.0, 5.0, 10.0] {
        let params = ModulationParams::off_diagonal(ratio);
        let c = chern_numbers(&params, DEFAULT_MESH, DEFAULT_MESH, DEFAULT_GAP_TOL)?;
        println!("nu_od/J = {ratio:>4}: C = {c}");
    }
    Ok(())
}
