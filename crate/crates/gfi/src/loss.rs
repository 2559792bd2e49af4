use serde::{Deserialize, Serialize};

/// Pointwise regression loss. Non-negative, zero at a perfect prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    Mse,
    Mae,
}

impl Loss {
    pub fn eval(self, prediction: f64, truth: f64) -> f64 {
        match self {
            Loss::Mse => (prediction - truth).powi(2),
            Loss::Mae => (prediction - truth).abs(),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Loss::Mse => "mse",
            Loss::Mae => "mae",
        }
    }
}

/// Mean pointwise loss over paired slices.
pub fn mean_loss(loss: Loss, predictions: &[f64], truths: &[f64]) -> f64 {
    assert_eq!(predictions.len(), truths.len());
    let n = predictions.len() as f64;
    predictions
        .iter()
        .zip(truths)
        .map(|(&p, &y)| loss.eval(p, y))
        .sum::<f64>()
        / n
}
