//! Central-difference validation of the analytic gradients.

use crate::data::Graph;
use crate::error::{Error, Result};
use crate::gin::backward::loss_and_grads;
use crate::gin::GinModel;

const STEP: f64 = 1e-5;
/// Gradients below this magnitude carry no meaningful relative signal: the
/// central-difference oracle's cancellation noise (~1e-11 absolute at the
/// step above) would dominate the ratio. Such locally flat coordinates are
/// excluded from the relative comparison and held to an absolute one.
const FLAT_THRESHOLD: f64 = 1e-6;

/// Compare every parameter's analytic gradient against a central finite
/// difference; returns the worst relative error over coordinates with a
/// meaningful gradient magnitude. Dropout is disabled.
pub fn gradient_check(model: &GinModel, graph: &Graph, label: usize) -> Result<f64> {
    let mut probe = model.clone();
    let base = probe.params_flat();
    let (_, grads) = loss_and_grads(&probe, &[graph], &[label], None)?;
    let analytic = grads.to_flat();

    let mut worst = 0.0f64;
    let mut params = base.clone();
    for i in 0..params.len() {
        let saved = params[i];
        params[i] = saved + STEP;
        probe.set_params_flat(&params);
        let (loss_plus, _) = loss_and_grads(&probe, &[graph], &[label], None)?;
        params[i] = saved - STEP;
        probe.set_params_flat(&params);
        let (loss_minus, _) = loss_and_grads(&probe, &[graph], &[label], None)?;
        params[i] = saved;

        let numeric = (loss_plus - loss_minus) / (2.0 * STEP);
        let scale = analytic[i].abs().max(numeric.abs());
        if scale < FLAT_THRESHOLD {
            // Still require agreement at the flat scale itself.
            if (analytic[i] - numeric).abs() > FLAT_THRESHOLD {
                return Err(Error::Numeric(format!(
                    "flat coordinate {i} disagrees: analytic {} vs numeric {}",
                    analytic[i], numeric
                )));
            }
            continue;
        }
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    probe.set_params_flat(&base);
    Ok(worst)
}
