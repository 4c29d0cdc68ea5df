use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rheology {
    Linear,
    Nonlinear,
}

impl std::fmt::Display for Rheology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rheology::Linear => f.write_str("linear"),
            Rheology::Nonlinear => f.write_str("nonlinear"),
        }
    }
}

impl std::str::FromStr for Rheology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Rheology::Linear),
            "nonlinear" => Ok(Rheology::Nonlinear),
            other => Err(format!("unknown rheology `{other}` (expected linear|nonlinear)")),
        }
    }
}

/// Residual summary of a converged state, both as ∞-norms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// max |P_s − P_t − R Q| over edges (mmHg).
    pub constitutive: f64,
    /// max |net inflow| over interior nodes (µm³/s).
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub rheology: Rheology,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Residuals,
    /// Edges whose hematocrit hit the clamp in the last sweep.
    pub clamp_count: usize,
    /// Relative hematocrit change of the last fixed-point sweep.
    pub last_change: Option<f64>,
}

/// Full-order state on a graph. Pressures in mmHg, flows in µm³/s signed
/// along edge orientation, velocities in µm/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub pressures: Vec<f64>,
    pub flows: Vec<f64>,
    pub velocities: Vec<f64>,
    pub hematocrits: Option<Vec<f64>>,
    pub node_potentials: Option<Vec<f64>>,
    pub meta: SolveMeta,
}
