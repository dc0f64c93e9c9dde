use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::{Array1, Array2, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Longest framed sequence the position tables cover.
pub const MAX_POSITIONS: usize = 128;

/// Floating point type the model can run in.
pub trait Real:
    Float
    + FromPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Debug
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab: usize,
    pub emb: usize,
    /// Hidden size; also the datastore key dimension.
    pub hidden: usize,
}

impl Dims {
    pub fn new(vocab: usize, emb: usize, hidden: usize) -> Self {
        Dims { vocab, emb, hidden }
    }
}

/// Encoder-decoder weights. Field order is the checkpoint tensor order.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<F> {
    pub dims: Dims,
    /// V x E, shared by source and target inputs.
    pub embed: Array2<F>,
    /// P x H
    pub pos_src: Array2<F>,
    /// P x H
    pub pos_tgt: Array2<F>,
    /// H x 3E over the (previous, current, next) source window.
    pub w_enc: Array2<F>,
    pub b_enc: Array1<F>,
    /// H x 2E over the (last, second to last) prefix tokens.
    pub w_query: Array2<F>,
    pub b_query: Array1<F>,
    /// H x H bilinear attention.
    pub w_attn: Array2<F>,
    /// H x 2H over (query, context).
    pub w_hidden: Array2<F>,
    pub b_hidden: Array1<F>,
    /// V x H
    pub w_out: Array2<F>,
    pub b_out: Array1<F>,
}

impl<F: Real> Params<F> {
    pub fn zeros(dims: Dims) -> Self {
        let Dims { vocab: v, emb: e, hidden: h } = dims;
        Params {
            dims,
            embed: Array2::zeros((v, e)),
            pos_src: Array2::zeros((MAX_POSITIONS, h)),
            pos_tgt: Array2::zeros((MAX_POSITIONS, h)),
            w_enc: Array2::zeros((h, 3 * e)),
            b_enc: Array1::zeros(h),
            w_query: Array2::zeros((h, 2 * e)),
            b_query: Array1::zeros(h),
            w_attn: Array2::zeros((h, h)),
            w_hidden: Array2::zeros((h, 2 * h)),
            b_hidden: Array1::zeros(h),
            w_out: Array2::zeros((v, h)),
            b_out: Array1::zeros(v),
        }
    }

    /// Glorot-uniform weights, small position tables, zero biases.
    pub fn init(dims: Dims, seed: u64) -> Self {
        let mut p = Self::zeros(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |a: &mut [F], fan_in: usize, fan_out: usize, scale: f64| {
            let bound = scale * (6.0 / (fan_in + fan_out) as f64).sqrt();
            let u = Uniform::new_inclusive(-bound, bound);
            for x in a.iter_mut() {
                *x = F::from_f64(u.sample(&mut rng)).unwrap();
            }
        };
        let Dims { vocab: v, emb: e, hidden: h } = dims;
        fill(p.embed.as_slice_mut().unwrap(), 1, e, 1.0);
        fill(p.pos_src.as_slice_mut().unwrap(), MAX_POSITIONS, h, 0.5);
        fill(p.pos_tgt.as_slice_mut().unwrap(), MAX_POSITIONS, h, 0.5);
        fill(p.w_enc.as_slice_mut().unwrap(), 3 * e, h, 1.0);
        fill(p.w_query.as_slice_mut().unwrap(), 2 * e, h, 1.0);
        fill(p.w_attn.as_slice_mut().unwrap(), h, h, 1.0);
        fill(p.w_hidden.as_slice_mut().unwrap(), 2 * h, h, 1.0);
        fill(p.w_out.as_slice_mut().unwrap(), h, v, 1.0);
        p
    }

    /// Every tensor as a flat slice, in checkpoint order.
    pub fn tensors(&self) -> [&[F]; 12] {
        [
            self.embed.as_slice().unwrap(),
            self.pos_src.as_slice().unwrap(),
            self.pos_tgt.as_slice().unwrap(),
            self.w_enc.as_slice().unwrap(),
            self.b_enc.as_slice().unwrap(),
            self.w_query.as_slice().unwrap(),
            self.b_query.as_slice().unwrap(),
            self.w_attn.as_slice().unwrap(),
            self.w_hidden.as_slice().unwrap(),
            self.b_hidden.as_slice().unwrap(),
            self.w_out.as_slice().unwrap(),
            self.b_out.as_slice().unwrap(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [F]; 12] {
        [
            self.embed.as_slice_mut().unwrap(),
            self.pos_src.as_slice_mut().unwrap(),
            self.pos_tgt.as_slice_mut().unwrap(),
            self.w_enc.as_slice_mut().unwrap(),
            self.b_enc.as_slice_mut().unwrap(),
            self.w_query.as_slice_mut().unwrap(),
            self.b_query.as_slice_mut().unwrap(),
            self.w_attn.as_slice_mut().unwrap(),
            self.w_hidden.as_slice_mut().unwrap(),
            self.b_hidden.as_slice_mut().unwrap(),
            self.w_out.as_slice_mut().unwrap(),
            self.b_out.as_slice_mut().unwrap(),
        ]
    }

    pub fn num_weights(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn cast<G: Real>(&self) -> Params<G> {
        let mut out = Params::<G>::zeros(self.dims);
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = G::from_f64(s.to_f64().unwrap()).unwrap();
            }
        }
        out
    }

    pub(crate) fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(F::zero());
        }
    }
}
