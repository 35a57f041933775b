//! Built-in scenarios: sand–shale–sand column with buoyant oil injected at
//! the bottom.

use std::collections::BTreeMap;

use crate::rockphys::KirchhoffMode;
use crate::scheme::{BoundaryData, SolverOptions};

use super::{
    AuditSpec, CapillarySpec, DiscretizationSpec, InitialProfile, LayerSpec, MobilitySpec,
    OutputSpec, RockSpec, Scenario, SCHEMA_VERSION,
};

pub const PRESET_NAMES: [&str; 2] = ["paper-case-1", "paper-case-2"];

/// Porosity of both rocks. Not part of the published setup; it sets the time
/// scale (inflow `≈ 5·10⁻⁵` per unit time fills `∫u` at rate `5·10⁻⁵/φ`).
pub const CASE_POROSITY: f64 = 0.05;

fn rock(scale: f64, offset: f64, amplitude: f64) -> RockSpec {
    RockSpec {
        porosity: CASE_POROSITY,
        capillary: CapillarySpec::PowerLaw {
            offset,
            amplitude,
            exponent: 5.0,
        },
        mobility: MobilitySpec::RationalShape { scale },
        total_rate: 0.0,
        gravity_drive: 5.0,
        kirchhoff: KirchhoffMode::Auto,
    }
}

fn column(name: &str, amplitude: f64, t_final: f64, snapshots: Vec<f64>) -> Scenario {
    let rocks = BTreeMap::from([
        ("sand".to_string(), rock(10.0, 0.0, amplitude)),
        ("shale".to_string(), rock(0.1, 0.5, amplitude)),
    ]);
    let layer = |start, end, rock: &str| LayerSpec {
        start,
        end,
        rock: rock.to_string(),
    };
    Scenario {
        version: SCHEMA_VERSION,
        name: name.to_string(),
        domain: [0.0, 1.0],
        rocks,
        layers: vec![
            layer(0.0, 0.5, "sand"),
            layer(0.5, 0.7, "shale"),
            layer(0.7, 1.0, "sand"),
        ],
        initial: InitialProfile::Constant { value: 0.0 },
        boundary: BoundaryData::constant(0.001, 0.0),
        discretization: DiscretizationSpec {
            cells: 100,
            layer_cells: None,
            steps: (t_final / 0.1).round() as usize,
            t_final,
        },
        outputs: OutputSpec {
            snapshots,
            audit: AuditSpec::default(),
            ..OutputSpec::default()
        },
        solver: SolverOptions::default(),
    }
}

/// Unit capillary amplitudes: oil collects under the shale until the
/// pressures connect, then crosses.
pub fn paper_case_1() -> Scenario {
    column("paper-case-1", 1.0, 200.0, vec![20.0, 100.0, 200.0])
}

/// Amplitudes reduced to 0.2: the sand pressure never reaches the shale
/// entry pressure, so the first interface blocks all oil.
pub fn paper_case_2() -> Scenario {
    column("paper-case-2", 0.2, 900.0, vec![100.0, 500.0, 900.0])
}

pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        "paper-case-1" => Some(paper_case_1()),
        "paper-case-2" => Some(paper_case_2()),
        _ => None,
    }
}
