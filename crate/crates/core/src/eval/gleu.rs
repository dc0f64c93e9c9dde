use std::collections::HashMap;

use crate::error::{Error, Result};

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn against(src: &[String], hyp: &[String], reference: &[String], n_max: usize) -> f64 {
    // orders beyond the shorter sentence have no n-grams to compare
    let top = n_max.min(hyp.len()).min(reference.len());
    if top == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=top {
        let h = ngrams(hyp, n);
        let r = ngrams(reference, n);
        let s = ngrams(src, n);
        let (mut matched, mut penalty, mut total) = (0usize, 0usize, 0usize);
        for (g, &hc) in &h {
            let rc = r.get(g).copied().unwrap_or(0);
            let sc = s.get(g).copied().unwrap_or(0);
            total += hc;
            matched += hc.min(rc);
            penalty += hc.min(sc).saturating_sub(rc);
        }
        let p = matched.saturating_sub(penalty) as f64 / total as f64;
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    let bp = if hyp.len() < reference.len() {
        (1.0 - reference.len() as f64 / hyp.len() as f64).exp()
    } else {
        1.0
    };
    bp * (log_sum / top as f64).exp()
}

/// Sentence-level GLEU: for each order `n`, hypothesis n-grams found in the
/// reference count for it and those kept from the source but absent from
/// the reference count against it,
///
/// ```text
/// p_n = max(0, Σ min(H, R) - Σ max(0, min(H, S) - R)) / Σ H
/// ```
///
/// combined as a brevity-penalized geometric mean and averaged over the
/// references. Orders longer than the hypothesis or reference are skipped.
pub fn gleu_lite(src: &[String], hyp: &[String], refs: &[Vec<String>], n_max: usize) -> Result<f64> {
    if refs.is_empty() {
        return Err(Error::InvalidInput("at least one reference is required".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    if hyp.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = refs.iter().map(|r| against(src, hyp, r, n_max)).sum();
    Ok(total / refs.len() as f64)
}
