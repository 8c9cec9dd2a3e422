//! Scalar evaluators for the training objectives: sigmoid focal loss for
//! classification and 1D DIoU loss for boundary regression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossParams {
    /// Positive-class weight; `None` disables alpha balancing.
    pub alpha: Option<f64>,
    pub gamma: f64,
    /// Weight of the auxiliary localization term.
    pub aux_weight: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            alpha: Some(0.25),
            gamma: 2.0,
            aux_weight: 0.2,
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::config(format!("alpha must be in [0, 1], got {a}")));
            }
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.aux_weight >= 0.0) {
            return Err(Error::config(format!("aux_weight must be >= 0, got {}", self.aux_weight)));
        }
        Ok(())
    }
}

/// `-ln(sigmoid(x))` without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// `-α_t (1 - p_t)^γ ln p_t` with `p = sigmoid(logit)`.
pub fn sigmoid_focal_loss(logit: f64, target: bool, params: &LossParams) -> f64 {
    // p_t = sigmoid(z) where z is the logit signed towards the target
    let z = if target { logit } else { -logit };
    let ce = neg_log_sigmoid(z);
    let one_minus_pt = crate::postprocess::sigmoid(-z);
    let modulation = if params.gamma == 0.0 { 1.0 } else { one_minus_pt.powf(params.gamma) };
    let alpha_t = match params.alpha {
        Some(a) if target => a,
        Some(a) => 1.0 - a,
        None => 1.0,
    };
    alpha_t * modulation * ce
}

/// Sum of per-class focal losses for one point; `targets[c]` marks class c.
pub fn sigmoid_focal_loss_sum(logits: &[f64], targets: &[bool], params: &LossParams) -> f64 {
    logits
        .iter()
        .zip(targets)
        .map(|(&x, &t)| sigmoid_focal_loss(x, t, params))
        .sum()
}

/// `1 - IoU + (center distance)^2 / (enclosing length)^2` for intervals
/// given as `(start, end)`. Two coincident degenerate intervals give 0.
pub fn diou_loss_1d(pred: (f64, f64), gt: (f64, f64)) -> f64 {
    let inter = (pred.1.min(gt.1) - pred.0.max(gt.0)).max(0.0);
    let union = (pred.1 - pred.0) + (gt.1 - gt.0) - inter;
    let enclosing = pred.1.max(gt.1) - pred.0.min(gt.0);
    if enclosing <= 0.0 {
        return 0.0;
    }
    let iou = if union > 0.0 { inter / union } else { 0.0 };
    let dc = 0.5 * (pred.0 + pred.1) - 0.5 * (gt.0 + gt.1);
    1.0 - iou + dc * dc / (enclosing * enclosing)
}

/// Classification loss plus the weighted localization loss, the latter
/// averaged over positive points.
pub fn combined_loss(cls: f64, reg_terms: &[f64], params: &LossParams) -> f64 {
    if reg_terms.is_empty() {
        return cls;
    }
    cls + params.aux_weight * reg_terms.iter().sum::<f64>() / reg_terms.len() as f64
}
