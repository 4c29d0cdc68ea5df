use std::fmt;

use capillary_core::Rheology;
use serde::{Deserialize, Serialize};

use crate::error::{GnnError, Result};

/// Surrogate variant: which outputs are predicted and which loss is trained.
///
/// 1: pressure only. 2: pressure and velocity. 3: as 2 plus linear physics
/// residuals. 4: pressure, velocity and hematocrit with nonlinear physics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Variant {
    Model1,
    Model2,
    Model3,
    Model4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Model1, Variant::Model2, Variant::Model3, Variant::Model4];

    pub fn id(self) -> u8 {
        match self {
            Variant::Model1 => 1,
            Variant::Model2 => 2,
            Variant::Model3 => 3,
            Variant::Model4 => 4,
        }
    }

    pub fn predicts_velocity(self) -> bool {
        self != Variant::Model1
    }

    pub fn predicts_hematocrit(self) -> bool {
        self == Variant::Model4
    }

    pub fn uses_physics(self) -> bool {
        matches!(self, Variant::Model3 | Variant::Model4)
    }

    /// Rheology of the full-order solutions the variant learns from.
    pub fn rheology(self) -> Rheology {
        if self == Variant::Model4 {
            Rheology::Nonlinear
        } else {
            Rheology::Linear
        }
    }

    /// Edge input width: `[D, L]`, plus `H_in` for the nonlinear variant.
    pub fn edge_feature_dim(self) -> usize {
        if self == Variant::Model4 {
            3
        } else {
            2
        }
    }

    /// Edge decoder width: transformed velocity, plus hematocrit.
    pub fn edge_output_dim(self) -> usize {
        match self {
            Variant::Model1 => 0,
            Variant::Model2 | Variant::Model3 => 1,
            Variant::Model4 => 2,
        }
    }
}

impl TryFrom<u8> for Variant {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Variant::Model1),
            2 => Ok(Variant::Model2),
            3 => Ok(Variant::Model3),
            4 => Ok(Variant::Model4),
            other => Err(format!("unknown model variant {other} (expected 1-4)")),
        }
    }
}

impl From<Variant> for u8 {
    fn from(v: Variant) -> u8 {
        v.id()
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let id: u8 = s.parse().map_err(|_| format!("invalid model variant `{s}`"))?;
        Variant::try_from(id)
    }
}

/// Divisors mapping physical inputs to roughly `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureScales {
    /// mmHg; also the scale of the pressure output.
    pub pressure: f64,
    /// µm.
    pub diameter: f64,
    /// µm.
    pub length: f64,
}

impl Default for FeatureScales {
    fn default() -> Self {
        Self {
            pressure: 35.0,
            diameter: 12.0,
            length: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnnConfig {
    pub variant: Variant,
    /// Latent width `l` of node and edge states.
    pub latent: usize,
    /// Message-passing steps `m_p`.
    pub steps: usize,
    /// Skip period `k`: after every `k`-th step the state `k` steps back is added.
    pub skip: usize,
    /// Hidden layers of the node update network.
    pub update_hidden_layers: usize,
    /// Hidden layers of the edge and message networks.
    pub message_hidden_layers: usize,
    /// Hidden layers of encoders and decoders.
    pub codec_hidden_layers: usize,
    /// Reuse one set of processor weights for all steps.
    pub share_step_weights: bool,
    /// Velocity transform constant `k_v`.
    pub k_v: f64,
    pub scales: FeatureScales,
    /// Seed for weight initialisation.
    pub seed: u64,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Model1,
            latent: 16,
            steps: 30,
            skip: 3,
            update_hidden_layers: 7,
            message_hidden_layers: 1,
            codec_hidden_layers: 1,
            share_step_weights: false,
            k_v: 5.0,
            scales: FeatureScales::default(),
            seed: 0,
        }
    }
}

impl GnnConfig {
    pub fn for_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GnnError::InvalidConfig(m));
        if self.latent == 0 || self.steps == 0 || self.skip == 0 {
            return bad("latent width, steps and skip period must be positive".into());
        }
        if self.skip > self.steps {
            return bad(format!("skip period {} exceeds step count {}", self.skip, self.steps));
        }
        let s = self.scales;
        for (name, v) in [
            ("k_v", self.k_v),
            ("pressure scale", s.pressure),
            ("diameter scale", s.diameter),
            ("length scale", s.length),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_serializes_as_number() {
        assert_eq!(serde_json::to_string(&Variant::Model3).unwrap(), "3");
        assert_eq!(serde_json::from_str::<Variant>("4").unwrap(), Variant::Model4);
        assert!(serde_json::from_str::<Variant>("5").is_err());
    }

    #[test]
    fn skip_longer_than_steps_is_rejected() {
        let c = GnnConfig {
            steps: 2,
            skip: 3,
            ..GnnConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(GnnConfig::default().validate().is_ok());
    }
}
