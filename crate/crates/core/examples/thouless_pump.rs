//! One pump cycle through a 21-guide array; pass fig5a, fig5b or fig5c.
use aahlab::beam::{run_pump, PropagationOptions, PumpPreset, SimulationGrid};

fn main() -> aahlab::error::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "fig5b".into());
    let preset = PumpPreset::named(&name).expect("fig5a, fig5b or fig5c");
    let grid = SimulationGrid::default_for(&preset.design);
    println!("{name}: {} points, dx = {} um, {} steps", grid.nx, grid.dx, (preset.design.period / grid.dz).round());
    let run = run_pump(&preset.design, &preset.constants, preset.beam_width, &grid, &PropagationOptions::default())?;
    let t = &run.trajectory;
    for s in (0..t.z.len()).step_by(t.z.len() / 10) {
        let x = aahlab::beam::mean_position(&t.fields[s], &grid);
        println!("z = {:>7.0} um  <x> = {x:+8.3} um", t.z[s]);
    }
    println!(
        "C_est = {:.4} (expected {}), drift {:.1e}, absorbed {:.1e}",
        run.chern_estimate,
        preset.expected_chern,
        t.cumulative_drift(),
        t.absorbed_fraction()
    );
    Ok(())
}
