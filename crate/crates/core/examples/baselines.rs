//! The two comparison retrieval methods on the same corrections: a random
//! training pair with an identical edit, and the training sentence whose
//! contextual embedding is nearest to the corrected token.

#[path = "common/mod.rs"]
mod common;

use ebgec::engine::Method;
use ebgec::knn_decode::DecodeConfig;

fn main() -> ebgec::Result<()> {
    let (engine, splits) = common::engine();
    let config = DecodeConfig::default();
    println!("edit index: {} distinct edits; context store: {} entries", engine.edit_index.len(), engine.context_store.len());
    for p in splits.test.iter().take(4) {
        let eb = engine.correct(&p.src, Method::Eb, &config)?;
        println!("\n{}  ->  {}", p.src.join(" "), eb.output.join(" "));
        let edits: Vec<_> = eb.edits.iter().map(|(e, _)| e.clone()).collect();
        let text = p.src.join(" ");
        let token = engine.baseline_examples(Method::Token, &text, &eb.output, edits.clone(), config.k)?;
        let embed = engine.baseline_examples(Method::Embed, &text, &eb.output, edits, config.k)?;
        for (((e, x_eb), (_, x_tok)), (_, x_emb)) in eb.edits.iter().zip(&token).zip(&embed) {
            println!("  {:?} -> {:?}", e.src_tokens, e.tgt_tokens);
            for (name, x) in [("eb", x_eb), ("token", x_tok), ("embed", x_emb)] {
                let shown = x.as_ref().map_or("-".to_string(), |x| x.tgt.join(" "));
                println!("    {name:<5} {shown}");
            }
        }
    }
    Ok(())
}
