use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Length thresholds that turn continuous geometry into qualitative symbols.
///
/// All values are in scene units (or scene units per frame). The defaults are
/// multiples of `reference_length`, nominally one block width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizationConfig {
    /// Distance below which two locations count as identical (CD `EQ`).
    pub cd_epsilon: f64,
    /// Per-frame displacement above which an object is moving.
    pub motion_threshold: f64,
    /// Upper bounds of the adjacent, close and far bands.
    pub qdc_thresholds: [f64; 3],
    /// Dead band for QTC symbols, per frame.
    pub qtc_deadband: f64,
    pub reference_length: f64,
}

impl Default for QuantizationConfig {
    fn default() -> Self {
        QuantizationConfig::with_reference_length(1.0)
    }
}

impl QuantizationConfig {
    pub fn with_reference_length(u: f64) -> Self {
        QuantizationConfig {
            cd_epsilon: 1e-3 * u,
            motion_threshold: 0.01 * u,
            qdc_thresholds: [1.0 * u, 2.5 * u, 5.0 * u],
            qtc_deadband: 1e-4 * u,
            reference_length: u,
        }
    }

    /// Multiplies every length by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        QuantizationConfig {
            cd_epsilon: self.cd_epsilon * factor,
            motion_threshold: self.motion_threshold * factor,
            qdc_thresholds: self.qdc_thresholds.map(|q| q * factor),
            qtc_deadband: self.qtc_deadband * factor,
            reference_length: self.reference_length * factor,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(FeatureError::InvalidConfig(format!("{name} must be positive and finite")))
            }
        };
        positive("cd_epsilon", self.cd_epsilon)?;
        positive("motion_threshold", self.motion_threshold)?;
        positive("qtc_deadband", self.qtc_deadband)?;
        positive("reference_length", self.reference_length)?;
        for q in self.qdc_thresholds {
            positive("qdc_thresholds", q)?;
        }
        if !(self.qdc_thresholds[0] < self.qdc_thresholds[1] && self.qdc_thresholds[1] < self.qdc_thresholds[2]) {
            return Err(FeatureError::InvalidConfig("qdc_thresholds must be strictly ascending".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let cfg: QuantizationConfig =
            serde_json::from_str(text).map_err(|e| FeatureError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
