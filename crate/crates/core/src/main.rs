use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ebgec::corpus::{filter_identical, read_pairs, split_words, synthetic_splits, CorruptionRules, SentencePair, Vocab};
use ebgec::datastore::{Datastore, IvfConfig, SearchMode};
use ebgec::engine::{Engine, Method};
use ebgec::eval::{
    collect_examples, decode_outputs, matching_analysis, mean_gleu, score_outputs, sweep_csv, sweep_lambda,
    vanilla_outputs, DEFAULT_GRID,
};
use ebgec::seq2seq::{fit, load_checkpoint, save_checkpoint, Seq2Seq, TrainConfig};
use ebgec::service::{self, AppConfig, AppState, CorrectResponse, DecisionLog, Paths};
use ebgec::Error;

#[derive(Parser)]
#[command(name = "ebgec", version, about = "Grammatical error correction with retrieved examples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/dev/test pairs as JSON lines.
    GenCorpus(GenArgs),
    /// Train the encoder-decoder and write checkpoint and vocabulary.
    Train(TrainArgs),
    /// Record decoder states of every training target token.
    BuildStore(BuildArgs),
    /// Correct sentences, one JSON result per input line.
    Correct(CorrectArgs),
    /// Edit-level F0.5 and GLEU on held-out pairs.
    Evaluate(EvalArgs),
    /// F0.5 for each interpolation weight, as CSV.
    Sweep(SweepArgs),
    /// Edit and error-type agreement of examples from every method, as CSV.
    MatchAnalysis(MatchArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 5000)]
    train: usize,
    #[arg(long, default_value_t = 500)]
    dev: usize,
    #[arg(long, default_value_t = 500)]
    test: usize,
    /// Seed of the clean-sentence sampler.
    #[arg(long, default_value_t = 7)]
    text_seed: u64,
    /// Seed of the corruption rules.
    #[arg(long, default_value_t = 11)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long)]
    out_vocab: PathBuf,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    emb_dim: usize,
    #[arg(long, default_value_t = 64)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3e-3)]
    learning_rate: f32,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ArtifactArgs {
    /// TOML file with [paths], [decode] and [service] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    datastore: Option<PathBuf>,
    /// Pairs the datastore was built from.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    word_lists: Option<PathBuf>,
    #[arg(long)]
    decision_log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Search {
    Exact,
    Approximate,
}

#[derive(Args, Clone)]
struct DecodeArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, value_enum)]
    search: Option<Search>,
}

#[derive(Args)]
struct CorrectArgs {
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[command(flatten)]
    decode: DecodeArgs,
    /// Sentences, one per line; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Plain beam search without retrieval.
    #[arg(long)]
    vanilla: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[command(flatten)]
    decode: DecodeArgs,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    vanilla: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[command(flatten)]
    decode: DecodeArgs,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[command(flatten)]
    decode: DecodeArgs,
    #[arg(long)]
    pairs: PathBuf,
    /// Add the evaluated pairs to the datastore first.
    #[arg(long)]
    plant: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[command(flatten)]
    decode: DecodeArgs,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    port: Option<u16>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Distinct exit codes per failure class.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::DegenerateConfig(_) => 2,
        Error::InvalidInput(_)
        | Error::Malformed { .. }
        | Error::CorpusResolution(_)
        | Error::NoData(_)
        | Error::Json(_)
        | Error::Io(_) => 3,
        Error::BadMagic { .. }
        | Error::DimMismatch { .. }
        | Error::Truncated(_)
        | Error::TrainingDiverged { .. }
        | Error::InvalidState(_) => 4,
    }
}

fn with_path<T>(path: &Path, r: ebgec::Result<T>) -> ebgec::Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn load_pairs(path: &Path) -> ebgec::Result<Vec<SentencePair>> {
    let file = with_path(path, fs::File::open(path).map_err(Error::from))?;
    with_path(path, read_pairs(BufReader::new(file)))
}

impl ArtifactArgs {
    fn resolve(&self, decode: &DecodeArgs) -> ebgec::Result<AppConfig> {
        let mut cfg = match &self.config {
            Some(path) => AppConfig::load(path)?,
            None => {
                let need = |p: &Option<PathBuf>, flag: &str| {
                    p.clone()
                        .ok_or_else(|| Error::InvalidConfig(format!("--{flag} is required without --config")))
                };
                AppConfig {
                    paths: Paths {
                        model: need(&self.model, "model")?,
                        vocab: need(&self.vocab, "vocab")?,
                        datastore: need(&self.datastore, "datastore")?,
                        corpus: need(&self.corpus, "corpus")?,
                        word_lists: None,
                        decision_log: PathBuf::from("decisions.jsonl"),
                    },
                    decode: Default::default(),
                    service: Default::default(),
                }
            }
        };
        let p = &mut cfg.paths;
        for (slot, flag) in [
            (&mut p.model, &self.model),
            (&mut p.vocab, &self.vocab),
            (&mut p.datastore, &self.datastore),
            (&mut p.corpus, &self.corpus),
            (&mut p.decision_log, &self.decision_log),
        ] {
            if let Some(v) = flag {
                *slot = v.clone();
            }
        }
        if self.word_lists.is_some() {
            p.word_lists = self.word_lists.clone();
        }
        let d = &mut cfg.decode;
        if let Some(v) = decode.lambda {
            d.lambda = v;
        }
        if let Some(v) = decode.k {
            d.k = v;
        }
        if let Some(v) = decode.temperature {
            d.temperature = v;
        }
        if let Some(v) = decode.beam {
            d.beam_width = v;
        }
        if let Some(v) = decode.max_len {
            d.max_len = v;
        }
        if let Some(s) = decode.search {
            d.search_mode = match s {
                Search::Exact => SearchMode::Exact,
                Search::Approximate => SearchMode::Approximate,
            };
        }
        cfg.decode.validate()?;
        cfg.check_files()?;
        Ok(cfg)
    }
}

fn load_engine(cfg: &AppConfig) -> ebgec::Result<Engine> {
    let mut engine = cfg.paths.load_engine()?;
    if cfg.decode.search_mode == SearchMode::Approximate {
        engine.store.build_index(&IvfConfig::default())?;
    }
    Ok(engine)
}

fn gen_corpus(a: GenArgs) -> ebgec::Result<()> {
    let splits = synthetic_splits(a.train, a.dev, a.test, a.text_seed, a.seed, &CorruptionRules::default())?;
    fs::create_dir_all(&a.out_dir)?;
    for (name, pairs) in [("train", &splits.train), ("dev", &splits.dev), ("test", &splits.test)] {
        let path = a.out_dir.join(format!("{name}.jsonl"));
        ebgec::corpus::write_pairs(pairs, fs::File::create(&path)?)?;
        eprintln!("{}: {} pairs", path.display(), pairs.len());
    }
    Ok(())
}

fn train_cmd(a: TrainArgs) -> ebgec::Result<()> {
    let pairs = filter_identical(load_pairs(&a.pairs)?);
    let config = TrainConfig {
        emb_dim: a.emb_dim,
        hidden_dim: a.hidden_dim,
        epochs: a.epochs,
        seed: a.seed,
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        ..Default::default()
    };
    let (vocab, params, report) = fit(&pairs, &config)?;
    for (i, l) in report.epoch_losses.iter().enumerate() {
        eprintln!("epoch {:>3}  loss {l:.4}", i + 1);
    }
    save_checkpoint(&params, &a.out_model)?;
    vocab.save(&a.out_vocab)?;
    Ok(())
}

fn build_store(a: BuildArgs) -> ebgec::Result<()> {
    let vocab = with_path(&a.vocab, Vocab::load(&a.vocab))?;
    let model = Seq2Seq::new(with_path(&a.model, load_checkpoint(&a.model))?);
    let pairs = load_pairs(&a.corpus)?;
    let store = Datastore::build(&model, &vocab, &pairs)?;
    store.save(&a.out)?;
    eprintln!("{} entries of dimension {}", store.len(), store.dim());
    Ok(())
}

fn correct_cmd(a: CorrectArgs) -> ebgec::Result<()> {
    let cfg = a.artifacts.resolve(&a.decode)?;
    let engine = load_engine(&cfg)?;
    let method = a.method.unwrap_or(cfg.service.default_method);
    let input: Box<dyn BufRead> = match &a.input {
        Some(p) => Box::new(BufReader::new(with_path(p, fs::File::open(p).map_err(Error::from))?)),
        None => Box::new(io::stdin().lock()),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in input.lines() {
        let line = line?;
        let words = split_words(&line);
        if words.is_empty() {
            writeln!(out)?;
            continue;
        }
        let c = if a.vanilla {
            engine.vanilla_correction(&words, &cfg.decode)?
        } else {
            engine.correct(&words, method, &cfg.decode)?
        };
        let resp = CorrectResponse::new(&line, words, method, c);
        serde_json::to_writer(&mut out, &resp)?;
        writeln!(out)?;
    }
    Ok(())
}

fn evaluate_cmd(a: EvalArgs) -> ebgec::Result<()> {
    let cfg = a.artifacts.resolve(&a.decode)?;
    let engine = load_engine(&cfg)?;
    let pairs = load_pairs(&a.pairs)?;
    let outputs = if a.vanilla {
        vanilla_outputs(&engine, &pairs, &cfg.decode)?
    } else {
        decode_outputs(&engine, &pairs, &cfg.decode)?
    };
    let score = score_outputs(&engine.lists, &pairs, &outputs)?;
    let report = serde_json::json!({
        "decoder": if a.vanilla { "vanilla" } else { "eb" },
        "lambda": cfg.decode.lambda,
        "pairs": pairs.len(),
        "score": score,
        "gleu": mean_gleu(&pairs, &outputs)?,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> ebgec::Result<()> {
    let cfg = a.artifacts.resolve(&a.decode)?;
    let engine = load_engine(&cfg)?;
    let pairs = load_pairs(&a.pairs)?;
    let grid = a.grid.unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let rows = sweep_lambda(&engine, &pairs, &cfg.decode, &grid)?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}

fn match_cmd(a: MatchArgs) -> ebgec::Result<()> {
    let cfg = a.artifacts.resolve(&a.decode)?;
    let mut engine = load_engine(&cfg)?;
    let pairs = load_pairs(&a.pairs)?;
    if a.plant {
        engine = engine.with_planted(&pairs)?;
        if cfg.decode.search_mode == SearchMode::Approximate {
            engine.store.build_index(&IvfConfig::default())?;
        }
    }
    let report = matching_analysis(&collect_examples(&engine, &pairs, &cfg.decode)?);
    eprint!("{}", report.summary());
    print!("{}", report.to_csv());
    Ok(())
}

fn serve_cmd(a: ServeArgs) -> ebgec::Result<()> {
    let mut cfg = a.artifacts.resolve(&a.decode)?;
    if let Some(b) = a.bind {
        cfg.service.bind = b;
    }
    if let Some(p) = a.port {
        cfg.service.port = p;
    }
    let addr: SocketAddr = format!("{}:{}", cfg.service.bind, cfg.service.port)
        .parse()
        .map_err(|e| Error::InvalidConfig(format!("bind address: {e}")))?;
    let engine = load_engine(&cfg)?;
    let log = DecisionLog::open(&cfg.paths.decision_log)?;
    eprintln!("serving {} datastore entries on http://{addr}", engine.store.len());
    let state = AppState::new(Some(engine), cfg.decode, cfg.service, log);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(state, addr))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenCorpus(a) => gen_corpus(a),
        Command::Train(a) => train_cmd(a),
        Command::BuildStore(a) => build_store(a),
        Command::Correct(a) => correct_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::MatchAnalysis(a) => match_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
