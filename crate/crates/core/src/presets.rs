//! The three published experiments as ready-to-run configurations.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::integrators::{InitialCondition, Scheme, SimConfig};
use crate::linsolve::SolverKind;
use crate::models::ModelParams;
use crate::pdmd::PDMDConfig;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetName {
    MomosStripes,
    MomosSpots,
    MimuraHexagons,
}

impl PresetName {
    pub const ALL: [PresetName; 3] = [
        PresetName::MomosStripes,
        PresetName::MomosSpots,
        PresetName::MimuraHexagons,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::MomosStripes => "momos-stripes",
            PresetName::MomosSpots => "momos-spots",
            PresetName::MimuraHexagons => "mimura-hexagons",
        }
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown preset '{s}' (expected momos-stripes, momos-spots or mimura-hexagons)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub sim: SimConfig,
    pub pdmd: PDMDConfig,
}

fn pdmd(tol: f64, tol_bar: f64) -> PDMDConfig {
    PDMDConfig::new(tol, tol_bar)
}

pub fn preset(name: PresetName) -> ExperimentPreset {
    let (sim, pdmd) = match name {
        PresetName::MomosStripes => (
            SimConfig {
                grid: Grid2D::new(20.0, 20.0, 21, 21).expect("valid grid"),
                params: ModelParams::momos(1e-3, 1e-3, 0.056, 0.4, 0.6, 0.075, 1e-3)
                    .expect("valid params"),
                scheme: Scheme::Imsp,
                ht: 0.1,
                t_final: 80000.0,
                snapshot_stride: 8,
                ic: InitialCondition {
                    amp_u: 1e-5,
                    amp_v: 1e-5,
                    seed: DEFAULT_SEED,
                },
                solver: SolverKind::Direct,
            },
            pdmd(1e-1, 1e-3),
        ),
        PresetName::MomosSpots => (
            SimConfig {
                grid: Grid2D::new(25.0, 25.0, 51, 51).expect("valid grid"),
                params: ModelParams::momos(0.6, 0.6, 1.2, 0.4, 0.6, 0.075, 0.8)
                    .expect("valid params"),
                scheme: Scheme::ImspIe,
                ht: 0.01,
                t_final: 5000.0,
                snapshot_stride: 5,
                ic: InitialCondition {
                    amp_u: 1e-5,
                    amp_v: 0.0,
                    seed: DEFAULT_SEED,
                },
                solver: SolverKind::Direct,
            },
            pdmd(1e-1, 1e-4),
        ),
        PresetName::MimuraHexagons => (
            SimConfig {
                grid: Grid2D::new(3.0, 3.0, 50, 50).expect("valid grid"),
                params: ModelParams::mimura(0.0625, 1.0, 17.0, 1.0, 32.0, 7.0)
                    .expect("valid params"),
                scheme: Scheme::SymplecticEuler,
                ht: 1e-3,
                t_final: 500.0,
                snapshot_stride: 5,
                ic: InitialCondition {
                    amp_u: 0.05,
                    amp_v: 0.0,
                    seed: DEFAULT_SEED,
                },
                solver: SolverKind::Direct,
            },
            pdmd(1e-1, 1e-5),
        ),
    };
    ExperimentPreset { name, sim, pdmd }
}
