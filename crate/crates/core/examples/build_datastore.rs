//! Builds the datastore of decoder states, one entry per target token plus
//! end of sentence, and round-trips it through its binary format.

#[path = "common/mod.rs"]
mod common;

use ebgec::datastore::Datastore;

fn main() -> ebgec::Result<()> {
    let (engine, splits) = common::engine();
    let store = &engine.store;
    let expected: usize = splits.train.iter().map(|p| p.tgt.len() + 1).sum();
    println!("{} entries (sum of target lengths + 1 = {expected}), dimension {}", store.len(), store.dim());
    for i in 0..4 {
        let v = store.value(i);
        let pair = engine.corpus.resolve(v.pair_id)?;
        let tok = pair.tgt.get(v.position as usize).map_or("</s>", String::as_str);
        println!("entry {i}: pair {} position {} token {tok:?}", v.pair_id, v.position);
    }
    let dir = std::env::temp_dir().join("ebgec_example_store.bin");
    store.save(&dir)?;
    let back = Datastore::load(&dir, Some(store.dim()))?;
    println!("saved {} bytes, reload equal: {}", std::fs::metadata(&dir)?.len(), &back == store);
    std::fs::remove_file(dir)?;
    Ok(())
}
