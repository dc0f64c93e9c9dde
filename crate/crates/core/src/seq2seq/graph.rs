//! Teacher-forced forward and backward passes over a whole sentence pair.
//!
//! The decoder is not recurrent: the query at step `i` depends only on the
//! last two prefix tokens and the step position, so all target steps of a
//! pair are computed as one batch of rows.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::corpus::{TokenId, BOS, EOS, PAD};

use super::params::{Params, Real};

/// `[BOS, src.., EOS]`
pub(crate) fn frame_source(src: &[TokenId]) -> Vec<TokenId> {
    let mut f = Vec::with_capacity(src.len() + 2);
    f.push(BOS);
    f.extend_from_slice(src);
    f.push(EOS);
    f
}

/// Source window `(previous, current, next)` at framed position `j`.
pub(crate) fn source_window(framed: &[TokenId], j: usize) -> [TokenId; 3] {
    let prev = if j == 0 { PAD } else { framed[j - 1] };
    let next = framed.get(j + 1).copied().unwrap_or(PAD);
    [prev, framed[j], next]
}

/// Decoder input tokens `(last, second to last)` for a prefix ending at
/// step `i`.
pub(crate) fn query_tokens(prefix: &[TokenId], i: usize) -> [TokenId; 2] {
    let prev = if i == 0 { PAD } else { prefix[i - 1] };
    [prefix[i], prev]
}

fn gather<F: Real>(embed: &Array2<F>, rows: &[Vec<TokenId>]) -> Array2<F> {
    let e = embed.ncols();
    let width = rows.first().map_or(0, |r| r.len());
    let mut out = Array2::zeros((rows.len(), width * e));
    for (i, toks) in rows.iter().enumerate() {
        for (k, &t) in toks.iter().enumerate() {
            out.slice_mut(s![i, k * e..(k + 1) * e])
                .assign(&embed.row(t as usize));
        }
    }
    out
}

fn scatter<F: Real>(grad: &mut Array2<F>, rows: &[Vec<TokenId>], d: ArrayView2<F>) {
    let e = grad.ncols();
    for (i, toks) in rows.iter().enumerate() {
        for (k, &t) in toks.iter().enumerate() {
            let mut g = grad.row_mut(t as usize);
            g += &d.slice(s![i, k * e..(k + 1) * e]);
        }
    }
}

pub(crate) fn tanh_inplace<F: Real>(a: &mut Array2<F>) {
    a.mapv_inplace(|x| x.tanh());
}

/// Row-wise softmax in place.
pub(crate) fn softmax_rows<F: Real>(a: &mut Array2<F>) {
    for mut row in a.rows_mut() {
        let m = row.fold(F::neg_infinity(), |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - m).exp());
        let z = row.sum();
        row.mapv_inplace(|x| x / z);
    }
}

fn add_row<F: Real>(a: &mut Array2<F>, b: &Array1<F>) {
    for mut row in a.rows_mut() {
        row += b;
    }
}

/// Derivative through `y = tanh(x)` given `y`: `dy * (1 - y^2)`.
fn tanh_backward<F: Real>(dy: &Array2<F>, y: &Array2<F>) -> Array2<F> {
    let mut out = dy.clone();
    ndarray::Zip::from(&mut out)
        .and(y)
        .for_each(|d, &y| *d = *d * (F::one() - y * y));
    out
}

/// Activations of one teacher-forced pass, kept for the backward pass.
pub(crate) struct Forward<F> {
    src_windows: Vec<Vec<TokenId>>,
    query_windows: Vec<Vec<TokenId>>,
    x_in: Array2<F>,
    enc: Array2<F>,
    keys: Array2<F>,
    q_in: Array2<F>,
    query: Array2<F>,
    attn: Array2<F>,
    h_in: Array2<F>,
    hidden: Array2<F>,
    /// Output distribution per step, `(M + 1) x V`.
    pub probs: Array2<F>,
    /// Gold next token per step, ending with EOS.
    pub targets: Vec<TokenId>,
}

impl<F: Real> Forward<F> {
    /// Summed negative log-likelihood of the targets.
    pub fn loss(&self) -> F {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, &t)| -self.probs[[i, t as usize]].ln())
            .sum()
    }

    /// Number of steps whose argmax (lowest id on ties) is the target.
    pub fn correct_steps(&self) -> usize {
        self.targets
            .iter()
            .enumerate()
            .filter(|(i, &t)| argmax(self.probs.row(*i)) == t as usize)
            .count()
    }

    pub fn steps(&self) -> usize {
        self.targets.len()
    }
}

pub(crate) fn argmax<F: Real>(row: ArrayView1<F>) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Full teacher-forced pass of `src -> tgt`.
pub(crate) fn forward<F: Real>(p: &Params<F>, src: &[TokenId], tgt: &[TokenId]) -> Forward<F> {
    let framed = frame_source(src);
    let src_windows: Vec<Vec<TokenId>> = (0..framed.len())
        .map(|j| source_window(&framed, j).to_vec())
        .collect();
    let x_in = gather(&p.embed, &src_windows);
    let mut enc = x_in.dot(&p.w_enc.t());
    add_row(&mut enc, &p.b_enc);
    enc += &p.pos_src.slice(s![..framed.len(), ..]);
    tanh_inplace(&mut enc);
    let keys = enc.dot(&p.w_attn.t());

    let mut prefix = Vec::with_capacity(tgt.len() + 1);
    prefix.push(BOS);
    prefix.extend_from_slice(tgt);
    let steps = prefix.len();
    let query_windows: Vec<Vec<TokenId>> =
        (0..steps).map(|i| query_tokens(&prefix, i).to_vec()).collect();
    let q_in = gather(&p.embed, &query_windows);
    let mut query = q_in.dot(&p.w_query.t());
    add_row(&mut query, &p.b_query);
    query += &p.pos_tgt.slice(s![..steps, ..]);
    tanh_inplace(&mut query);

    let mut attn = query.dot(&keys.t());
    softmax_rows(&mut attn);
    let ctx = attn.dot(&enc);
    let h_in = ndarray::concatenate![Axis(1), query, ctx];
    let mut hidden = h_in.dot(&p.w_hidden.t());
    add_row(&mut hidden, &p.b_hidden);
    tanh_inplace(&mut hidden);

    let mut probs = hidden.dot(&p.w_out.t());
    add_row(&mut probs, &p.b_out);
    softmax_rows(&mut probs);

    let mut targets = tgt.to_vec();
    targets.push(EOS);
    Forward {
        src_windows,
        query_windows,
        x_in,
        enc,
        keys,
        q_in,
        query,
        attn,
        h_in,
        hidden,
        probs,
        targets,
    }
}

/// Accumulates `scale * d(loss)/d(params)` into `grad`.
pub(crate) fn backward<F: Real>(p: &Params<F>, f: &Forward<F>, scale: F, grad: &mut Params<F>) {
    let h = p.dims.hidden;
    let mut d_logits = f.probs.clone();
    for (i, &t) in f.targets.iter().enumerate() {
        d_logits[[i, t as usize]] -= F::one();
    }
    d_logits.mapv_inplace(|x| x * scale);

    grad.w_out += &d_logits.t().dot(&f.hidden);
    grad.b_out += &d_logits.sum_axis(Axis(0));
    let d_hidden = d_logits.dot(&p.w_out);
    let d_pre_hidden = tanh_backward(&d_hidden, &f.hidden);
    grad.w_hidden += &d_pre_hidden.t().dot(&f.h_in);
    grad.b_hidden += &d_pre_hidden.sum_axis(Axis(0));
    let d_h_in = d_pre_hidden.dot(&p.w_hidden);
    let mut d_query = d_h_in.slice(s![.., ..h]).to_owned();
    let d_ctx = d_h_in.slice(s![.., h..]);

    // ctx = attn . enc
    let d_attn = d_ctx.dot(&f.enc.t());
    let mut d_enc = f.attn.t().dot(&d_ctx);
    // softmax backward per row
    let mut d_scores = d_attn;
    for (mut ds, a) in d_scores.rows_mut().into_iter().zip(f.attn.rows()) {
        let dot: F = ds.iter().zip(a.iter()).map(|(&x, &y)| x * y).sum();
        ndarray::Zip::from(&mut ds)
            .and(&a)
            .for_each(|d, &a| *d = a * (*d - dot));
    }
    // scores = query . keys^T, keys = enc . w_attn^T
    d_query += &d_scores.dot(&f.keys);
    let d_keys = d_scores.t().dot(&f.query);
    grad.w_attn += &d_keys.t().dot(&f.enc);
    d_enc += &d_keys.dot(&p.w_attn);

    let d_pre_query = tanh_backward(&d_query, &f.query);
    grad.w_query += &d_pre_query.t().dot(&f.q_in);
    grad.b_query += &d_pre_query.sum_axis(Axis(0));
    let steps = d_pre_query.nrows();
    {
        let mut pos = grad.pos_tgt.slice_mut(s![..steps, ..]);
        pos += &d_pre_query;
    }
    let d_q_in = d_pre_query.dot(&p.w_query);
    scatter(&mut grad.embed, &f.query_windows, d_q_in.view());

    let d_pre_enc = tanh_backward(&d_enc, &f.enc);
    grad.w_enc += &d_pre_enc.t().dot(&f.x_in);
    grad.b_enc += &d_pre_enc.sum_axis(Axis(0));
    let len = d_pre_enc.nrows();
    {
        let mut pos = grad.pos_src.slice_mut(s![..len, ..]);
        pos += &d_pre_enc;
    }
    let d_x_in = d_pre_enc.dot(&p.w_enc);
    scatter(&mut grad.embed, &f.src_windows, d_x_in.view());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq2seq::Dims;

    #[test]
    fn rows_normalize() {
        let p = Params::<f64>::init(Dims::new(12, 3, 6), 0);
        let f = forward(&p, &[4, 5, 6], &[4, 7]);
        assert_eq!(f.probs.nrows(), 3);
        for row in f.probs.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        assert_eq!(f.targets, vec![4, 7, EOS]);
        assert!(f.loss() > 0.0);
    }

    #[test]
    fn windows_pad_at_the_edges() {
        let framed = frame_source(&[9]);
        assert_eq!(framed, vec![BOS, 9, EOS]);
        assert_eq!(source_window(&framed, 0), [PAD, BOS, 9]);
        assert_eq!(source_window(&framed, 2), [9, EOS, PAD]);
        assert_eq!(query_tokens(&[BOS, 5], 0), [BOS, PAD]);
        assert_eq!(query_tokens(&[BOS, 5], 1), [5, BOS]);
    }
}
