use std::cmp::Ordering;
use std::rc::Rc;

use crate::corpus::{Corpus, Example, TokenId, TokenSeq, BOS, EOS, PAD};
use crate::datastore::{Datastore, NeighborSet};
use crate::error::{Error, Result};
use crate::seq2seq::{DecoderState, EncoderMemory, Seq2Seq, TokenDistribution};

use super::example::choose_example;
use super::{interpolate, knn_distribution, DecodeConfig};

/// One emitted token of the winning hypothesis.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub token: TokenId,
    /// Probability of `token` under the distribution it was drawn from.
    pub probability: f64,
    /// Neighbors retrieved for the state that emitted `token`.
    pub neighbors: NeighborSet,
    pub example: Option<Example>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionResult {
    /// Emitted tokens, ending with EOS unless the length cap was hit.
    pub output: TokenSeq,
    /// One record per token of `output`.
    pub per_step: Vec<StepRecord>,
    /// Summed log-probability of `output`.
    pub score: f64,
}

impl CorrectionResult {
    /// `output` without the trailing EOS.
    pub fn tokens(&self) -> &[TokenId] {
        let ids = self.output.ids();
        match ids.last() {
            Some(&EOS) => &ids[..ids.len() - 1],
            _ => ids,
        }
    }

    pub fn finished(&self) -> bool {
        self.output.ids().last() == Some(&EOS)
    }
}

struct Node {
    token: TokenId,
    probability: f64,
    neighbors: Rc<NeighborSet>,
    parent: Option<usize>,
}

struct Hyp {
    prefix: Vec<TokenId>,
    score: f64,
    last: Option<usize>,
}

struct Candidate {
    score: f64,
    probability: f64,
    token: TokenId,
    parent: usize,
}

/// Higher score first, then higher step probability, lower token id,
/// lower parent index.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.probability.total_cmp(&a.probability))
        .then(a.token.cmp(&b.token))
        .then(a.parent.cmp(&b.parent))
}

/// Beam search where `step` supplies the next-token distribution (and the
/// neighbors behind it) for every live hypothesis. Finished hypotheses
/// leave the beam; search stops once the best finished score is at least
/// every live score, since log-probabilities only decrease.
fn search<S>(
    model: &Seq2Seq,
    memory: &EncoderMemory,
    beam_width: usize,
    max_len: usize,
    mut step: S,
) -> Result<CorrectionResult>
where
    S: FnMut(&DecoderState) -> Result<(TokenDistribution, NeighborSet)>,
{
    let mut arena: Vec<Node> = Vec::new();
    let mut live = vec![Hyp {
        prefix: vec![BOS],
        score: 0.0,
        last: None,
    }];
    let mut finished: Vec<Hyp> = Vec::new();

    for _ in 0..max_len {
        if live.is_empty() {
            break;
        }
        let mut cands = Vec::new();
        let mut step_neighbors = Vec::with_capacity(live.len());
        for (hi, h) in live.iter().enumerate() {
            let state = model.decoder_state(memory, &h.prefix)?;
            let (dist, neighbors) = step(&state)?;
            step_neighbors.push(Rc::new(neighbors));
            let mut local: Vec<Candidate> = dist
                .probs
                .iter()
                .enumerate()
                .filter(|&(t, &p)| p > 0.0 && t as TokenId != PAD && t as TokenId != BOS)
                .map(|(t, &p)| Candidate {
                    score: h.score + p.ln(),
                    probability: p,
                    token: t as TokenId,
                    parent: hi,
                })
                .collect();
            // the global top `beam_width` lies within each parent's top `beam_width`
            local.sort_by(rank);
            local.truncate(beam_width);
            cands.extend(local);
        }
        cands.sort_by(rank);
        cands.truncate(beam_width);

        let mut next = Vec::with_capacity(cands.len());
        for c in cands {
            let parent = &live[c.parent];
            arena.push(Node {
                token: c.token,
                probability: c.probability,
                neighbors: Rc::clone(&step_neighbors[c.parent]),
                parent: parent.last,
            });
            let mut prefix = parent.prefix.clone();
            prefix.push(c.token);
            let hyp = Hyp {
                prefix,
                score: c.score,
                last: Some(arena.len() - 1),
            };
            if c.token == EOS {
                finished.push(hyp);
            } else {
                next.push(hyp);
            }
        }
        live = next;

        let best_finished = finished.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        if live.iter().all(|h| h.score <= best_finished) {
            break;
        }
    }

    // first-found wins among equal scores
    let pick = |hs: &[Hyp]| {
        hs.iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.score.total_cmp(&b.score).then(j.cmp(i)))
            .map(|(i, _)| i)
    };
    let best = match pick(&finished) {
        Some(i) => finished.swap_remove(i),
        None => {
            let i = pick(&live).ok_or_else(|| Error::InvalidState("beam emptied".into()))?;
            live.swap_remove(i)
        }
    };

    let mut per_step = Vec::new();
    let mut cursor = best.last;
    while let Some(i) = cursor {
        let n = &arena[i];
        per_step.push(StepRecord {
            token: n.token,
            probability: n.probability,
            neighbors: (*n.neighbors).clone(),
            example: None,
        });
        cursor = n.parent;
    }
    per_step.reverse();
    Ok(CorrectionResult {
        output: TokenSeq(best.prefix[1..].to_vec()),
        per_step,
        score: best.score,
    })
}

/// Beam search over the model's own distribution, no retrieval.
pub fn vanilla_beam(
    model: &Seq2Seq,
    src: &[TokenId],
    beam_width: usize,
    max_len: usize,
) -> Result<CorrectionResult> {
    if beam_width == 0 || max_len == 0 {
        return Err(Error::InvalidConfig(
            "beam_width and max_len must be at least 1".into(),
        ));
    }
    let memory = model.encode(src)?;
    search(model, &memory, beam_width, max_len, |state| {
        Ok((model.output_distribution(state), Vec::new()))
    })
}

/// Beam search over `p_EB`, retrieving neighbors for every expanded
/// hypothesis, then attaching to each step of the winner the example that
/// supports its token.
pub fn correct(
    model: &Seq2Seq,
    store: &Datastore,
    corpus: &Corpus,
    src: &[TokenId],
    config: &DecodeConfig,
) -> Result<CorrectionResult> {
    correct_observed(model, store, corpus, src, config, |_| {})
}

/// As [`correct`], passing every interpolated distribution the search
/// computes to `observe`, in expansion order.
pub fn correct_observed<F>(
    model: &Seq2Seq,
    store: &Datastore,
    corpus: &Corpus,
    src: &[TokenId],
    config: &DecodeConfig,
    mut observe: F,
) -> Result<CorrectionResult>
where
    F: FnMut(&TokenDistribution),
{
    config.validate()?;
    if store.dim() != model.hidden_dim() {
        return Err(Error::DimMismatch {
            expected: model.hidden_dim(),
            found: store.dim(),
        });
    }
    if store.is_empty() && config.lambda == 1.0 {
        return Err(Error::DegenerateConfig(
            "lambda = 1 with an empty datastore leaves no distribution".into(),
        ));
    }
    let memory = model.encode(src)?;
    let mut result = search(model, &memory, config.beam_width, config.max_len, |state| {
        let neighbors = if store.is_empty() {
            Vec::new()
        } else {
            store.search(&state.vector, config.k, config.search_mode)?
        };
        let vanilla = model.output_distribution(state);
        let knn = knn_distribution(
            &neighbors,
            vanilla.len(),
            config.temperature,
            config.distance_exponent,
        );
        let mixed = interpolate(&vanilla, &knn, config.lambda)?;
        observe(&mixed);
        Ok((mixed, neighbors))
    })?;
    for step in result.per_step.iter_mut() {
        step.example = choose_example(step, corpus, config.distance_threshold)?;
    }
    Ok(result)
}
