//! Bloch bands of the off-diagonal model at β = 1/3 along the k_x axis.
use aahlab::model::ModulationParams;
use aahlab::spectral::band_grid;

fn main() -> aahlab::error::Result<()> {
    let ratio: f64 = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).expect("nu_od/J");
    let params = ModulationParams::off_diagonal(ratio);
    let grid = band_grid(&params, 24, 24)?;
    println!("nu_od/J = {ratio}");
    for iy in (0..24).step_by(6) {
        let k = grid.mesh.momentum(0, iy);
        let e: Vec<String> = (0..grid.bands()).map(|n| format!("{:+.4}", grid.energy(n, 0, iy))).collect();
        println!("kx = {:+.3} ky = {:.3}  E = {}", k.kx, k.ky, e.join(" "));
    }
    println!("gaps: {:?}", grid.gaps());
    Ok(())
}
