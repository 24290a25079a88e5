//! Coarse Chern phase diagram printed as a character map of C_2.
use aahlab::model::Rational;
use aahlab::topology::{phase_diagram, PhaseCell};

fn main() -> aahlab::error::Result<()> {
    let nu_od: Vec<f64> = (0..=24).map(|i| 0.5 * i as f64).collect();
    let nu_d: Vec<f64> = (0..=12).map(|i| 0.5 * i as f64).collect();
    let diagram = phase_diagram(Rational::new(1, 3)?, &nu_od, &nu_d, 24, 24, 1e-6)?;
    println!("C2 over nu_od/J (columns, 0..12) and nu_d/J (rows, 6..0); . marks a closed gap");
    for k in (0..nu_d.len()).rev() {
        let row: String = (0..nu_od.len())
            .map(|i| match diagram.cell(i, k) {
                PhaseCell::Computed(c) => c.integers().map_or(".".into(), |v| format!("{:>3}", v[1])),
                PhaseCell::Failed(_) => "  ?".into(),
            })
            .map(|s| format!("{s:>3}"))
            .collect();
        println!("{:>4} {row}", nu_d[k]);
    }
    Ok(())
}
