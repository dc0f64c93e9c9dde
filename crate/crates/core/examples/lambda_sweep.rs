//! Edit-level F0.5 on held-out pairs for each interpolation weight, with
//! plain beam search for reference.

#[path = "common/mod.rs"]
mod common;

use ebgec::eval::{evaluate_vanilla, sweep_csv, sweep_lambda, DEFAULT_GRID};
use ebgec::knn_decode::DecodeConfig;

fn main() -> ebgec::Result<()> {
    let (engine, splits) = common::engine();
    let config = DecodeConfig::default();
    let rows = sweep_lambda(&engine, &splits.dev, &config, &DEFAULT_GRID)?;
    print!("{}", sweep_csv(&rows));
    let v = evaluate_vanilla(&engine, &splits.dev, &config)?;
    println!("vanilla f_half {:.4}", v.f_half);
    Ok(())
}
