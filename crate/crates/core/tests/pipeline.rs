mod common;

use std::process::Command;

use ebgec::corpus::{write_pairs, Corpus, Vocab, BOS, EOS, PAD};
use ebgec::datastore::{Datastore, IvfConfig};
use ebgec::engine::Method;
use ebgec::knn_decode::{correct, vanilla_beam, DecodeConfig, DistanceExponent};
use ebgec::seq2seq::{load_checkpoint, save_checkpoint, Seq2Seq};
use ebgec::service::{AppConfig, Paths};
use ebgec::Error;

/// Argmax decoding written against the model API alone; ties go to the
/// lower token id.
fn greedy(model: &Seq2Seq, src: &[u32], max_len: usize) -> Vec<u32> {
    let memory = model.encode(src).unwrap();
    let mut prefix = vec![BOS];
    for _ in 0..max_len {
        let state = model.decoder_state(&memory, &prefix).unwrap();
        let dist = model.output_distribution(&state);
        let mut best = None::<(u32, f64)>;
        for (t, &p) in dist.probs.iter().enumerate() {
            let t = t as u32;
            if t == PAD || t == BOS {
                continue;
            }
            if best.map_or(true, |(_, bp)| p > bp) {
                best = Some((t, p));
            }
        }
        let t = best.unwrap().0;
        prefix.push(t);
        if t == EOS {
            break;
        }
    }
    prefix[1..].to_vec()
}

#[test]
fn width_one_beam_is_greedy_decoding() {
    let e = common::engine();
    for p in common::tiny().splits.test.iter() {
        let src = e.vocab.encode_words(&p.src);
        let r = vanilla_beam(&e.model, src.ids(), 1, 40).unwrap();
        assert_eq!(r.output.ids(), greedy(&e.model, src.ids(), 40).as_slice());
    }
}

#[test]
fn zero_lambda_is_vanilla_for_any_retrieval_setting() {
    let e = common::engine();
    let settings = [
        DecodeConfig::default(),
        DecodeConfig {
            k: 1,
            temperature: 0.5,
            distance_exponent: DistanceExponent::Plain,
            ..Default::default()
        },
        DecodeConfig {
            k: 64,
            beam_width: 3,
            ..Default::default()
        },
    ];
    for cfg in settings {
        let cfg = cfg.with_lambda(0.0);
        for p in common::tiny().splits.test.iter() {
            let src = e.vocab.encode_words(&p.src);
            let eb = correct(&e.model, &e.store, &e.corpus, src.ids(), &cfg).unwrap();
            let v = vanilla_beam(&e.model, src.ids(), cfg.beam_width, cfg.max_len).unwrap();
            assert_eq!(eb.output, v.output);
            assert_eq!(eb.score.to_bits(), v.score.to_bits());
        }
    }
}

#[test]
fn every_step_has_a_record_and_examples_agree_with_tokens() {
    let e = common::engine();
    for p in common::tiny().splits.test.iter() {
        let c = e.correct(&p.src, Method::Eb, &DecodeConfig::default()).unwrap();
        let r = &c.result;
        assert_eq!(r.per_step.len(), r.output.len());
        for s in &r.per_step {
            assert_eq!(s.neighbors.len(), 16);
            if let Some(ex) = &s.example {
                let tok = ex.tgt.get(ex.anchor_position).map_or(EOS, |w| e.vocab.id(w));
                assert_eq!(tok, s.token);
            }
        }
    }
}

#[test]
fn full_retrieval_on_an_empty_store_is_degenerate() {
    let e = common::engine();
    let empty = Datastore::new(e.model.hidden_dim());
    let src = e.vocab.encode_words(&common::words(common::DEMO_SRC));
    let err = correct(&e.model, &empty, &e.corpus, src.ids(), &DecodeConfig::default().with_lambda(1.0));
    assert!(matches!(err, Err(Error::DegenerateConfig(_))));
    let ok = correct(&e.model, &empty, &e.corpus, src.ids(), &DecodeConfig::default()).unwrap();
    let v = vanilla_beam(&e.model, src.ids(), 5, 100).unwrap();
    assert_eq!(ok.output, v.output);
    let wrong = Datastore::new(e.model.hidden_dim() + 1);
    assert!(matches!(
        correct(&e.model, &wrong, &e.corpus, src.ids(), &DecodeConfig::default()),
        Err(Error::DimMismatch { .. })
    ));
}

#[test]
fn saved_artifacts_answer_queries_identically() {
    let dir = tempfile::tempdir().unwrap();
    let t = common::tiny();
    let e = common::engine();
    save_checkpoint(e.model.params(), dir.path().join("model.bin")).unwrap();
    e.store.save(dir.path().join("store.bin")).unwrap();
    e.vocab.save(dir.path().join("vocab.txt")).unwrap();
    e.corpus.save(dir.path().join("train.jsonl")).unwrap();

    let model = Seq2Seq::new(load_checkpoint(dir.path().join("model.bin")).unwrap());
    assert_eq!(model.params(), e.model.params());
    let store = Datastore::load(dir.path().join("store.bin"), Some(model.hidden_dim())).unwrap();
    assert_eq!(store, e.store);
    assert_eq!(Vocab::load(dir.path().join("vocab.txt")).unwrap(), e.vocab);
    assert_eq!(Corpus::load(dir.path().join("train.jsonl")).unwrap().pairs(), e.corpus.pairs());

    for i in (0..store.len()).step_by(97) {
        assert_eq!(store.knn_exact(store.key(i), 16).unwrap(), e.store.knn_exact(e.store.key(i), 16).unwrap());
    }
    let paths = Paths {
        model: dir.path().join("model.bin"),
        vocab: dir.path().join("vocab.txt"),
        datastore: dir.path().join("store.bin"),
        corpus: dir.path().join("train.jsonl"),
        word_lists: None,
        decision_log: dir.path().join("log.jsonl"),
    };
    let reloaded = paths.load_engine().unwrap();
    for p in &t.splits.test {
        let a = e.correct(&p.src, Method::Eb, &DecodeConfig::default()).unwrap();
        let b = reloaded.correct(&p.src, Method::Eb, &DecodeConfig::default()).unwrap();
        assert_eq!(a.result, b.result);
        assert_eq!(a.edits, b.edits);
    }
    assert!(matches!(
        Datastore::load(dir.path().join("store.bin"), Some(model.hidden_dim() + 1)),
        Err(Error::DimMismatch { .. })
    ));
}

#[test]
fn approximate_search_decodes_like_exact_when_every_cluster_is_probed() {
    let mut e = common::engine();
    e.store.build_index(&IvfConfig {
        n_clusters: 8,
        n_probe: 8,
        ..Default::default()
    }).unwrap();
    let approx = DecodeConfig {
        search_mode: ebgec::datastore::SearchMode::Approximate,
        ..Default::default()
    };
    for p in common::tiny().splits.test.iter().take(8) {
        let a = e.correct(&p.src, Method::Eb, &approx).unwrap();
        let b = e.correct(&p.src, Method::Eb, &DecodeConfig::default()).unwrap();
        assert_eq!(a.result, b.result);
    }
}

#[test]
fn config_file_paths_resolve_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[paths]\nmodel = \"m.bin\"\nvocab = \"v.txt\"\ndatastore = \"s.bin\"\ncorpus = \"c.jsonl\"\ndecision_log = \"d.jsonl\"\n[service]\nport = 9000\n";
    std::fs::write(dir.path().join("app.toml"), text).unwrap();
    let cfg = AppConfig::load(dir.path().join("app.toml")).unwrap();
    assert_eq!(cfg.paths.model, dir.path().join("m.bin"));
    assert_eq!(cfg.service.port, 9000);
    assert!(matches!(cfg.check_files(), Err(Error::InvalidConfig(_))));
}

mod cli {
    use super::*;

    fn bin() -> Command {
        Command::new(env!("CARGO_BIN_EXE_ebgec"))
    }

    fn run(args: &[&str]) -> std::process::Output {
        bin().args(args).output().unwrap()
    }

    #[test]
    fn pipeline_subcommands_chain_and_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let d = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
        let gen = ["gen-corpus", "--out-dir", &d(""), "--train", "150", "--dev", "8", "--test", "8"];
        assert!(run(&gen).status.success());
        let first = std::fs::read(d("train.jsonl")).unwrap();
        assert!(run(&gen).status.success());
        assert_eq!(std::fs::read(d("train.jsonl")).unwrap(), first);

        let train = [
            "train", "--pairs", &d("train.jsonl"), "--out-model", &d("model.bin"),
            "--out-vocab", &d("vocab.txt"), "--epochs", "2", "--hidden-dim", "16", "--emb-dim", "8",
        ];
        assert!(run(&train).status.success());
        let build = [
            "build-store", "--model", &d("model.bin"), "--vocab", &d("vocab.txt"),
            "--corpus", &d("train.jsonl"), "--out", &d("store.bin"),
        ];
        assert!(run(&build).status.success());

        let (dev, test, input_path) = (d("dev.jsonl"), d("test.jsonl"), d("in.txt"));
        let artifacts = [
            "--model", &d("model.bin"), "--vocab", &d("vocab.txt"),
            "--datastore", &d("store.bin"), "--corpus", &d("train.jsonl"),
        ];
        let sweep: Vec<&str> = ["sweep", "--pairs", &dev, "--grid", "0,0.25,0.5,0.75,1"]
            .into_iter()
            .chain(artifacts)
            .collect();
        let out = run(&sweep);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = String::from_utf8(out.stdout).unwrap();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("lambda,"));

        let pairs = ebgec::corpus::read_pairs(std::io::BufReader::new(std::fs::File::open(&test).unwrap())).unwrap();
        let input: String = pairs.iter().map(|p| p.src.join(" ") + "\n").collect();
        std::fs::write(&input_path, &input).unwrap();
        let correct_with = |extra: &[&str]| {
            let args: Vec<&str> = ["correct", "--input", &input_path].into_iter().chain(artifacts).chain(extra.iter().copied()).collect();
            let out = run(&args);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            String::from_utf8(out.stdout).unwrap()
        };
        let eb0 = correct_with(&["--lambda", "0"]);
        let vanilla = correct_with(&["--vanilla"]);
        assert_eq!(eb0.lines().count(), pairs.len());
        let corrected = |s: &str| -> Vec<String> {
            s.lines()
                .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["corrected"].as_str().unwrap().to_string())
                .collect()
        };
        assert_eq!(corrected(&eb0), corrected(&vanilla));
        assert_eq!(correct_with(&[]), correct_with(&[]));

        let eval: Vec<&str> = ["evaluate", "--pairs", &test].into_iter().chain(artifacts).collect();
        let out = run(&eval);
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(report["score"]["f_half"].is_number() && report["gleu"].is_number());

        let matching: Vec<&str> = ["match-analysis", "--plant", "--pairs", &test].into_iter().chain(artifacts).collect();
        let out = run(&matching);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
    }

    #[test]
    fn failures_map_to_distinct_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let d = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
        // configuration: missing artifacts
        let out = run(&["correct", "--model", &d("nope"), "--vocab", &d("nope"), "--datastore", &d("nope"), "--corpus", &d("nope")]);
        assert_eq!(out.status.code(), Some(2));
        assert!(!out.stderr.is_empty());
        // input: malformed corpus line
        std::fs::write(d("bad.jsonl"), "{\"pair_id\": 0}\n").unwrap();
        let out = run(&["train", "--pairs", &d("bad.jsonl"), "--out-model", &d("m"), "--out-vocab", &d("v")]);
        assert_eq!(out.status.code(), Some(3));
        // model: checkpoint with the wrong magic
        let t = common::tiny();
        std::fs::write(d("model.bin"), b"NOPE!....").unwrap();
        t.vocab.save(d("vocab.txt")).unwrap();
        write_pairs(&t.splits.train[..5], std::fs::File::create(d("train.jsonl")).unwrap()).unwrap();
        let out = run(&["build-store", "--model", &d("model.bin"), "--vocab", &d("vocab.txt"), "--corpus", &d("train.jsonl"), "--out", &d("s.bin")]);
        assert_eq!(out.status.code(), Some(4));
        // configuration: out-of-range flag
        save_checkpoint(&t.params, d("model.bin")).unwrap();
        let e = common::engine();
        e.store.save(d("store.bin")).unwrap();
        e.corpus.save(d("train.jsonl")).unwrap();
        let out = run(&["correct", "--model", &d("model.bin"), "--vocab", &d("vocab.txt"), "--datastore", &d("store.bin"), "--corpus", &d("train.jsonl"), "--lambda", "1.5"]);
        assert_eq!(out.status.code(), Some(2));
    }
}
