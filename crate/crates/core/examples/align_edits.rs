//! Token alignment, edit extraction with error types, and replay of edit
//! subsets.

use ebgec::align::{apply_edits, extract_edits, gestalt_align, similarity, WordLists};

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn main() {
    let lists = WordLists::default();
    let src = words("she go to school in every days");
    let tgt = words("she goes to school every day");
    let blocks = gestalt_align(&src, &tgt);
    println!("blocks: {blocks:?}");
    println!("similarity: {:.3}", similarity(&blocks, src.len(), tgt.len()));

    let edits = extract_edits(&src, &tgt, &lists);
    for (i, e) in edits.iter().enumerate() {
        println!(
            "edit {i}: {:?} src {:?} -> tgt {:?}  {:?} -> {:?}  type {}",
            e.op, e.src_span, e.tgt_span, e.src_tokens, e.tgt_tokens, e.error_type.as_str()
        );
    }
    assert_eq!(apply_edits(&src, &edits), tgt);
    for keep in 0..edits.len() {
        let subset: Vec<_> = edits.iter().enumerate().filter(|(i, _)| *i != keep).map(|(_, e)| e).collect();
        println!("without edit {keep}: {}", apply_edits(&src, subset).join(" "));
    }
}
