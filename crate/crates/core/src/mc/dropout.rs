use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::model::ModelError;

/// Which transformer layer outputs receive dropout in addition to the
/// embedding output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerSelection {
    /// The first `ceil(fraction * n_layers)` layers; 0 means embedding only.
    DepthFraction(f64),
    /// Explicit layer indices.
    Layers(Vec<usize>),
}

/// Dropout rate plus injection sites. Scaling is always inverted: kept
/// activations are multiplied by `1 / (1 - rate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    rate: f64,
    layers: LayerSelection,
}

fn check_rate(rate: f64) -> Result<(), InferenceError> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(InferenceError::InvalidRate(rate))
    }
}

impl InjectionPlan {
    pub fn new(rate: f64, depth_fraction: f64) -> Result<Self, InferenceError> {
        check_rate(rate)?;
        if !(0.0..=1.0).contains(&depth_fraction) {
            return Err(InferenceError::InvalidDepthFraction(depth_fraction));
        }
        Ok(InjectionPlan {
            rate,
            layers: LayerSelection::DepthFraction(depth_fraction),
        })
    }

    /// Dropout after the embedding layer only.
    pub fn embedding_only(rate: f64) -> Result<Self, InferenceError> {
        Self::new(rate, 0.0)
    }

    pub fn with_layers(rate: f64, mut layers: Vec<usize>) -> Result<Self, InferenceError> {
        check_rate(rate)?;
        layers.sort_unstable();
        layers.dedup();
        Ok(InjectionPlan {
            rate,
            layers: LayerSelection::Layers(layers),
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn layers(&self) -> &LayerSelection {
        &self.layers
    }

    /// Sorted transformer-layer indices whose outputs receive dropout.
    ///
    /// For a depth fraction `f` this is `0..ceil(f * n_layers)`, with a
    /// 1e-9 slack so that e.g. 0.6 * 5 does not round up to 4.
    pub fn layer_sites(&self, n_layers: usize) -> Result<Vec<usize>, ModelError> {
        match &self.layers {
            LayerSelection::DepthFraction(f) => {
                let k = ((f * n_layers as f64) - 1e-9).ceil().max(0.0) as usize;
                Ok((0..k.min(n_layers)).collect())
            }
            LayerSelection::Layers(layers) => {
                if let Some(&layer) = layers.iter().find(|&&l| l >= n_layers) {
                    return Err(ModelError::InvalidInjectionSite { layer, n_layers });
                }
                Ok(layers.clone())
            }
        }
    }
}

/// Inverted dropout on a copy of `x`.
///
/// Each entry, in row-major order, consumes one `f64` uniform `u` in
/// `[0, 1)` from `rng` and is kept iff `u >= rate`; kept entries are scaled
/// by `1 / (1 - rate)` and dropped ones set to zero. At rate 0 the input is
/// returned unchanged and `rng` is not used.
pub fn apply_dropout<R: Rng + ?Sized>(
    x: &Array2<f64>,
    rate: f64,
    rng: &mut R,
) -> Result<Array2<f64>, InferenceError> {
    check_rate(rate)?;
    let mut out = x.clone();
    dropout_in_place(&mut out, rate, rng);
    Ok(out)
}

pub(crate) fn dropout_in_place<R: Rng + ?Sized>(x: &mut Array2<f64>, rate: f64, rng: &mut R) {
    debug_assert!((0.0..1.0).contains(&rate));
    if rate == 0.0 {
        return;
    }
    let scale = 1.0 / (1.0 - rate);
    // `iter_mut` on a standard-layout array walks in row-major order.
    debug_assert!(x.is_standard_layout());
    for v in x.iter_mut() {
        let u: f64 = rng.random();
        *v = if u >= rate { *v * scale } else { 0.0 };
    }
}
