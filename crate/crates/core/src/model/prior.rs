use crate::error::{invalid, Result};

/// Spherical Gaussian prior `N(0, lambda^-1 I)` on every embedding entry.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PriorSpec {
    lambda: f64,
}

impl PriorSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return invalid(format!("prior precision must be positive and finite, got {lambda}"));
        }
        Ok(Self { lambda })
    }

    /// Precision.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.lambda
    }
}
