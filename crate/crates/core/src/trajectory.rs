//! Sampled observables along an evolution.

use serde::Serialize;

use crate::states::ThermalQuery;

/// One sampled point: time, mean energy, entropy, reference temperature and
/// (for dissipative strokes) the fidelity to the reference thermal state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sample {
    pub t: f64,
    pub energy: f64,
    pub entropy: f64,
    pub t_star: ThermalQuery,
    pub fidelity_to_ref: Option<f64>,
}

pub type Trajectory = Vec<Sample>;

/// Stroke labels of the Otto cycle, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stroke {
    /// 1 -> 2: unitary ramp from `lambda_i` to `lambda_f`.
    UnitaryUp,
    /// 2 -> 3: contact with the hot bath at fixed `lambda_f`.
    HotContact,
    /// 3 -> 4: unitary ramp back from `lambda_f` to `lambda_i`.
    UnitaryDown,
    /// 4 -> 1: contact with the cold bath at fixed `lambda_i`.
    ColdContact,
}

impl Stroke {
    pub fn label(&self) -> &'static str {
        match self {
            Stroke::UnitaryUp => "1-2",
            Stroke::HotContact => "2-3",
            Stroke::UnitaryDown => "3-4",
            Stroke::ColdContact => "4-1",
        }
    }
}

/// A sample tagged with the stroke it belongs to; `t` is cycle time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CycleSample {
    pub stroke: Stroke,
    #[serde(flatten)]
    pub sample: Sample,
}
