//! Exact nearest-neighbor search against the inverted-file index: recall of
//! the approximate search and its speedup.

#[path = "common/mod.rs"]
mod common;

use std::time::Instant;

use ebgec::datastore::IvfConfig;

fn main() -> ebgec::Result<()> {
    let (mut engine, _) = common::engine();
    let k = 16;
    engine.store.build_index(&IvfConfig::default())?;
    let store = &engine.store;
    let queries: Vec<usize> = (0..store.len()).step_by(store.len() / 200).collect();

    let t = Instant::now();
    let exact: Vec<_> = queries.iter().map(|&q| store.knn_exact(store.key(q), k)).collect::<Result<_, _>>()?;
    let t_exact = t.elapsed();
    let t = Instant::now();
    let approx: Vec<_> = queries
        .iter()
        .map(|&q| store.knn_approx(store.key(q), k, IvfConfig::default().n_probe))
        .collect::<Result<_, _>>()?;
    let t_approx = t.elapsed();

    let (mut hit, mut total) = (0, 0);
    for (e, a) in exact.iter().zip(&approx) {
        total += e.len();
        hit += e.iter().filter(|n| a.iter().any(|m| m.index == n.index)).count();
    }
    println!("{} queries, k = {k}", queries.len());
    println!("exact  {t_exact:>10.2?}");
    println!("approx {t_approx:>10.2?}  recall@{k} = {:.4}", hit as f64 / total as f64);
    let first = &exact[0];
    println!("nearest to entry {}: {:?}", queries[0], first.iter().take(4).map(|n| (n.index, n.squared_distance)).collect::<Vec<_>>());
    Ok(())
}
