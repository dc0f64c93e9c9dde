use serde::{Deserialize, Serialize};

use crate::align::Edit;

use super::SentencePair;

/// A training pair presented as evidence for a correction, anchored at one
/// target position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub pair_id: u32,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub anchor_position: usize,
    pub squared_distance: f32,
    /// The gold edit covering the anchor; `None` when the anchor is
    /// unedited context.
    pub anchor_edit: Option<Edit>,
}

impl Example {
    pub fn anchored(pair: &SentencePair, position: usize, squared_distance: f32) -> Self {
        Example {
            pair_id: pair.pair_id,
            src: pair.src.clone(),
            tgt: pair.tgt.clone(),
            anchor_position: position,
            squared_distance,
            anchor_edit: pair.edit_covering(position).cloned(),
        }
    }
}
