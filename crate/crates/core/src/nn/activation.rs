use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-wise nonlinearity applied after a dense layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Identity,
}

impl ActivationKind {
    /// Leaky ReLU with the 0.01 negative slope used throughout the models.
    pub const LEAKY: ActivationKind = ActivationKind::LeakyRelu(0.01);

    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::LeakyRelu(s) if !(s > 0.0 && s < 1.0) => Err(Error::Config(format!(
                "leaky relu slope must lie in (0, 1), got {s}"
            ))),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match *self {
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::LeakyRelu(s) => {
                if z > 0.0 {
                    z
                } else {
                    s * z
                }
            }
            ActivationKind::Sigmoid => sigmoid(z),
            ActivationKind::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::LeakyRelu(s) => {
                if z > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            ActivationKind::Sigmoid => {
                let y = sigmoid(z);
                y * (1.0 - y)
            }
            ActivationKind::Identity => 1.0,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
