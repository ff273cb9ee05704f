use super::loss::{loss_and_grad, PairTargets};
use super::{EncoderModel, GraphInput};
use crate::{Error, Result};

fn loss_of(model: &EncoderModel, input: &GraphInput) -> Result<f64> {
    Ok(loss_and_grad(&model.forward(input)?, PairTargets::all(input))?.0)
}

/// Largest relative disagreement between the analytic parameter gradient of
/// the reconstruction loss and central finite differences, over every
/// parameter. Relative error is `|analytic - numeric| / max(1e-12, |numeric|)`.
///
/// Finite differences are meaningless across a ReLU kink, so inputs should
/// keep pre-activations away from exact zero.
pub fn gradient_check(model: &EncoderModel, input: &GraphInput, epsilon: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} is outside [1e-7, 1e-3]")));
    }
    let (out, cache) = model.forward_cached(input)?;
    let (_, d_out) = loss_and_grad(&out, PairTargets::all(input))?;
    let grads = model.backward(input, &cache, &d_out);
    let analytic: Vec<Vec<f64>> = grads.params().iter().map(|p| p.to_vec()).collect();

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (block, values) in analytic.iter().enumerate() {
        for (i, &a) in values.iter().enumerate() {
            let orig = probe.params()[block][i];
            let up = orig + epsilon;
            let down = orig - epsilon;
            probe.params_mut()[block][i] = up;
            let l_up = loss_of(&probe, input)?;
            probe.params_mut()[block][i] = down;
            let l_down = loss_of(&probe, input)?;
            probe.params_mut()[block][i] = orig;
            let numeric = (l_up - l_down) / (up - down);
            let rel = (a - numeric).abs() / numeric.abs().max(1e-12);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
