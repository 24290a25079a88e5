//! Named configurations reproducing each figure, with their expected outcomes.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Bands,
    PhaseDiagram,
    Edges,
    Pump,
    Extract,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Bands => "bands",
            CommandKind::PhaseDiagram => "phase-diagram",
            CommandKind::Edges => "edges",
            CommandKind::Pump => "pump",
            CommandKind::Extract => "extract",
        }
    }
}

/// What `--check` asserts for a preset.
#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    /// Every tuple occurs somewhere on the `ν_d = 0` axis.
    PhaseRegions(Vec<Vec<i32>>),
    Cherns(Vec<i32>),
    /// All gaps below `max_gap` (in units of J) and the Chern numbers undefined.
    GapsClosed { max_gap: f64 },
    /// Every gap of the scan closes at `at ± tol` with a minimum below `max_gap`.
    SimultaneousClosure { at: f64, tol: f64, max_gap: f64 },
    /// The gaps close at ratios at least `min_separation` apart.
    SplitClosure { min_separation: f64 },
    Edges { branches: Vec<usize>, windings: Vec<i32> },
    PumpChern { value: f64, tol: f64 },
    /// `J` within `rel_tol` of `j`, sign and ordering contracts, `δφ` near `delta_phi`.
    Extraction { j: f64, rel_tol: f64, delta_phi: f64, phase_tol: f64 },
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub command: CommandKind,
    pub description: &'static str,
    pub settings: &'static [(&'static str, &'static str)],
    pub expectation: Expectation,
}

pub fn all() -> Vec<Preset> {
    use CommandKind::*;
    vec![
        Preset {
            name: "fig2",
            command: PhaseDiagram,
            description: "Chern phase diagram over (nu_od/J, nu_d/J), beta = 1/3",
            settings: &[],
            expectation: Expectation::PhaseRegions(vec![vec![-1, 2, -1], vec![2, -4, 2]]),
        },
        Preset {
            name: "fig3a",
            command: Bands,
            description: "gaps versus nu_od/J for the off-diagonal model",
            settings: &[("nu_od_over_J", "4"), ("scan_min", "3.5"), ("scan_max", "4.5"), ("scan_step", "0.01")],
            expectation: Expectation::SimultaneousClosure { at: 4.0, tol: 0.02, max_gap: 1e-3 },
        },
        Preset {
            name: "fig3a-split",
            command: Bands,
            description: "the closure at nu_od/J = 4 splits in two at nu_d/J = 0.2",
            settings: &[
                ("nu_d_over_J", "0.2"),
                ("nu_od_over_J", "4"),
                ("scan_min", "3.5"),
                ("scan_max", "4.5"),
                ("scan_step", "0.01"),
                ("scan_refined", "true"),
            ],
            expectation: Expectation::SplitClosure { min_separation: 0.1 },
        },
        Preset {
            name: "fig3b",
            command: Bands,
            description: "bands at nu_od/J = 1",
            settings: &[("nu_od_over_J", "1"), ("pgm", "true")],
            expectation: Expectation::Cherns(vec![-1, 2, -1]),
        },
        Preset {
            name: "fig3c",
            command: Bands,
            description: "bands at the transition nu_od/J = 4",
            settings: &[("nu_od_over_J", "4"), ("pgm", "true")],
            expectation: Expectation::GapsClosed { max_gap: 1e-3 },
        },
        Preset {
            name: "fig3d",
            command: Bands,
            description: "bands at nu_od/J = 10",
            settings: &[("nu_od_over_J", "10"), ("pgm", "true")],
            expectation: Expectation::Cherns(vec![2, -4, 2]),
        },
        Preset {
            name: "fig4a",
            command: Edges,
            description: "open-chain spectrum, N = 89, nu_od/J = 1",
            settings: &[("nu_od_over_J", "1")],
            expectation: Expectation::Edges { branches: vec![2, 2], windings: vec![-1, 1] },
        },
        Preset {
            name: "fig4b",
            command: Edges,
            description: "open-chain spectrum, N = 89, nu_od/J = 10",
            settings: &[("nu_od_over_J", "10")],
            expectation: Expectation::Edges { branches: vec![4, 4], windings: vec![2, -2] },
        },
        Preset {
            name: "fig5a",
            command: Pump,
            description: "index-modulated pump, gamma = 9e-4, Z = 30 cm",
            settings: &[("gamma", "9e-4"), ("Z_cm", "30"), ("W_um", "3.77")],
            expectation: Expectation::PumpChern { value: -0.97, tol: 0.05 },
        },
        Preset {
            name: "fig5b",
            command: Pump,
            description: "index-modulated pump, gamma = 5e-4, Z = 10 cm",
            settings: &[("gamma", "5e-4"), ("Z_cm", "10"), ("W_um", "4.47")],
            expectation: Expectation::PumpChern { value: -0.99, tol: 0.05 },
        },
        Preset {
            name: "fig5c",
            command: Pump,
            description: "spacing-modulated pump, gamma = 5e-4, Z = 15 cm",
            settings: &[
                ("variant", "spacing"),
                ("gamma", "5e-4"),
                ("Z_cm", "15"),
                ("W_um", "4.3"),
                ("ws_um", "20"),
                ("wx_um", "3"),
                ("wm_um", "18"),
                ("phi0_rad", "0.6283185307179586"),
            ],
            expectation: Expectation::PumpChern { value: 1.97, tol: 0.05 },
        },
        Preset {
            name: "extract-g9",
            command: Extract,
            description: "tight-binding parameters at gamma = 9e-4",
            settings: &[("gamma", "9e-4")],
            expectation: Expectation::Extraction { j: 3.76e-4, rel_tol: 0.3, delta_phi: PI / 3.0, phase_tol: 0.3 },
        },
        Preset {
            name: "extract-g5",
            command: Extract,
            description: "tight-binding parameters at gamma = 5e-4",
            settings: &[("gamma", "5e-4")],
            expectation: Expectation::Extraction { j: 5.23e-4, rel_tol: 0.3, delta_phi: PI / 3.0, phase_tol: 0.3 },
        },
    ]
}

pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}

pub fn listing() -> String {
    all()
        .iter()
        .map(|p| format!("{:<12} {:<14} {}\n", p.name, p.command.name(), p.description))
        .collect()
}
