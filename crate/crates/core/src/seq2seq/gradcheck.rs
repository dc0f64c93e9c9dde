//! Analytic gradients against central finite differences, in double
//! precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::TokenId;

use super::graph::{backward, forward};
use super::params::Params;

#[derive(Clone, Debug)]
pub struct GradSample {
    pub tensor: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradSample {
    /// `|a - n| / max(|a|, |n|, 1e-7)`; the floor keeps weights the loss
    /// does not depend on from dividing noise by zero.
    pub fn relative_error(&self) -> f64 {
        let denom = self.analytic.abs().max(self.numeric.abs()).max(1e-7);
        (self.analytic - self.numeric).abs() / denom
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub samples: Vec<GradSample>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.samples
            .iter()
            .map(GradSample::relative_error)
            .fold(0.0, f64::max)
    }
}

/// Summed cross-entropy of `src -> tgt` and its gradient.
pub fn loss_and_gradient(params: &Params<f64>, src: &[TokenId], tgt: &[TokenId]) -> (f64, Params<f64>) {
    let f = forward(params, src, tgt);
    let mut grad = Params::zeros(params.dims);
    backward(params, &f, 1.0, &mut grad);
    (f.loss(), grad)
}

pub fn loss(params: &Params<f64>, src: &[TokenId], tgt: &[TokenId]) -> f64 {
    forward(params, src, tgt).loss()
}

/// Central difference `(f(w + h) - f(w - h)) / 2h` for one weight.
pub fn numeric_partial<L>(params: &mut Params<f64>, tensor: usize, index: usize, step: f64, mut loss: L) -> f64
where
    L: FnMut(&Params<f64>) -> f64,
{
    let orig = params.tensors()[tensor][index];
    params.tensors_mut()[tensor][index] = orig + step;
    let up = loss(params);
    params.tensors_mut()[tensor][index] = orig - step;
    let down = loss(params);
    params.tensors_mut()[tensor][index] = orig;
    (up - down) / (2.0 * step)
}

/// Compares the analytic gradient of the pair's loss with central
/// differences at `n_samples` weights drawn uniformly over all tensors.
pub fn loss_gradient_check(
    params: &Params<f64>,
    src: &[TokenId],
    tgt: &[TokenId],
    n_samples: usize,
    step: f64,
    seed: u64,
) -> GradCheckReport {
    let (_, grad) = loss_and_gradient(params, src, tgt);
    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = params.clone();
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut flat = rng.gen_range(0..total);
        let mut tensor = 0;
        while flat >= sizes[tensor] {
            flat -= sizes[tensor];
            tensor += 1;
        }
        let numeric = numeric_partial(&mut work, tensor, flat, step, |p| loss(p, src, tgt));
        samples.push(GradSample {
            tensor,
            index: flat,
            analytic: grad.tensors()[tensor][flat],
            numeric,
        });
    }
    GradCheckReport { samples }
}
