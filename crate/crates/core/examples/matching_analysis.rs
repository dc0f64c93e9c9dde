//! How often the example shown for an edit contains the same edit, or at
//! least the same error type, for each retrieval method. The evaluated
//! pairs are planted in the datastore first.

#[path = "common/mod.rs"]
mod common;

use ebgec::eval::{collect_examples, matching_analysis};
use ebgec::knn_decode::DecodeConfig;

fn main() -> ebgec::Result<()> {
    let (engine, splits) = common::engine();
    let engine = engine.with_planted(&splits.test)?;
    let report = matching_analysis(&collect_examples(&engine, &splits.test, &DecodeConfig::default())?);
    print!("{}", report.summary());
    println!();
    print!("{}", report.to_csv());
    Ok(())
}
