//! Trains the encoder-decoder, reports teacher-forced accuracy, and checks
//! that a checkpoint round trip reproduces the weights.

#[path = "common/mod.rs"]
mod common;

use ebgec::seq2seq::{fit, read_checkpoint, teacher_forced_accuracy, write_checkpoint, EncodedPair, TrainConfig};

fn main() -> ebgec::Result<()> {
    let splits = common::splits();
    let config = TrainConfig {
        epochs: common::EPOCHS,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let (vocab, params, report) = fit(&splits.train, &config)?;
    println!("vocabulary {} tokens, {} weights, {:.1?}", vocab.len(), params.num_weights(), start.elapsed());
    for (i, l) in report.epoch_losses.iter().enumerate() {
        println!("epoch {:>2}  loss {l:.4}", i + 1);
    }
    let enc = |ps: &[ebgec::corpus::SentencePair]| -> Vec<EncodedPair> {
        ps.iter().map(|p| EncodedPair::from_pair(p, &vocab)).collect()
    };
    println!("teacher-forced accuracy: train {:.3}  test {:.3}",
        teacher_forced_accuracy(&params, &enc(&splits.train)),
        teacher_forced_accuracy(&params, &enc(&splits.test)));

    let mut bytes = Vec::new();
    write_checkpoint(&params, &mut bytes)?;
    let back = read_checkpoint(bytes.as_slice())?;
    println!("checkpoint {} bytes, round trip identical: {}", bytes.len(), back == params);
    Ok(())
}
