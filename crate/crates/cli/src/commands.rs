//! Subcommand definitions and their implementations.

use std::fs;
use std::path::{Path, PathBuf};

use chordseq::encoder::{read_corpus, read_vocabulary, write_corpus, write_vocabulary, EncodedCorpus};
use chordseq::evalkit::{read_fold_plan, read_results_csv, write_fold_plan, write_results_csv, write_summary_csv, write_trace, FoldPlan, PredictorContext};
use chordseq::ingest::{read_slice_stream, write_slice_stream, MidiOptions, SliceStream};
use chordseq::ppm::{read_snapshot, write_snapshot, ContextTrie, ModelMode, OrderPolicy};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, KeySettings, EncoderSettings, ModelSettings, BootstrapSettings, RegressionSettings};
use crate::error::{config, input, CliError, Result};
use crate::pipeline;

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "CHORDSEQ_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "chordseq", version, about = "Chord-sequence encoding and PPM evaluation")]
pub struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse MIDI files into slice-stream interchange files.
    Ingest(IngestArgs),
    /// Key-find and encode slice streams into a token corpus.
    Encode(EncodeArgs),
    /// Assign compositions to cross-validation folds.
    Folds(FoldsArgs),
    /// Train the long-term model for one or all folds and save snapshots.
    Train(TrainArgs),
    /// Evaluate models per composition.
    Eval(EvalArgs),
    /// Summaries with bootstrap intervals and the stepwise regression.
    Report(ReportArgs),
    /// Run the whole pipeline from a config file.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, env = OUTPUT_ENV)]
    pub out: Option<PathBuf>,
}

impl OutArg {
    fn dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("chordseq-out"))
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// MIDI files or directories.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long)]
    pub dataset: String,
    /// Keep MIDI channel 10.
    #[arg(long)]
    pub include_percussion: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Slice-stream files or directories holding `.slices` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = KeySettings::default().profile)]
    pub profile: String,
    /// Profile table file to take `--profile` from.
    #[arg(long)]
    pub profile_file: Option<PathBuf>,
    /// `duration` or `count`.
    #[arg(long, default_value = "duration")]
    pub weighting: String,
    /// Key window length in quarter notes.
    #[arg(long, default_value_t = 16)]
    pub window: u32,
    /// `smallest` or `most-frequent`.
    #[arg(long, default_value = "smallest")]
    pub overflow: String,
    /// `corpus` or `theoretical`.
    #[arg(long, default_value = "corpus")]
    pub alphabet: String,
    /// Also write per-onset key traces.
    #[arg(long)]
    pub key_traces: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocabulary: PathBuf,
}

#[derive(Debug, Args)]
pub struct FoldsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(short, long, default_value_t = 4)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub folds: PathBuf,
    /// Fold to hold out; every fold when absent.
    #[arg(long)]
    pub fold: Option<usize>,
    /// `*` for PPM*, or a maximum context length.
    #[arg(long, default_value = "*")]
    pub order: String,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub folds: PathBuf,
    /// Model modes to run (LTM, LTM+, STM, BOTH+).
    #[arg(long = "model", default_values_t = ["LTM+".to_string(), "STM".to_string(), "BOTH+".to_string()])]
    pub models: Vec<String>,
    #[arg(long, default_value = "*")]
    pub order: String,
    #[arg(long, default_value_t = chordseq::ppm::DEFAULT_BIAS)]
    pub bias: f64,
    #[arg(long)]
    pub update_exclusion: bool,
    /// Directory of snapshots written by `train`.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Train any missing snapshot instead of failing.
    #[arg(long)]
    pub regenerate: bool,
    /// Write per-token traces.
    #[arg(long)]
    pub traces: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `results.csv` from `eval`.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = BootstrapSettings::default().replicates)]
    pub replicates: usize,
    #[arg(long, default_value_t = BootstrapSettings::default().level)]
    pub level: f64,
    /// `p-value` or `aic`.
    #[arg(long, default_value = "p-value")]
    pub criterion: String,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's fold count.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Write per-token traces.
    #[arg(long)]
    pub traces: bool,
    #[command(flatten)]
    pub out: OutArg,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| input(dir.display(), e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input(path.display(), e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| input(path.display(), e))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| input(path.display(), e))
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path).map(std::io::BufWriter::new).map_err(|e| input(path.display(), e))
}

/// What a subcommand did, for the final status line.
#[derive(Debug, Default)]
pub struct Outcome {
    pub message: String,
    pub warnings: usize,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Encode(a) => encode(a),
        Command::Folds(a) => folds(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
        Command::Experiment(a) => experiment(a),
    }
}

/// Interchange file name for a composition id.
pub fn slices_file_name(composition: &str) -> String {
    let name = composition.split_once('/').map_or(composition, |(_, rest)| rest);
    format!("{}.slices", name.replace('/', "__"))
}

fn ingest(a: IngestArgs) -> Result<Outcome> {
    if a.dataset.is_empty() || a.dataset.contains(['/', '\t', '\n']) {
        return Err(config("--dataset", format!("invalid label {:?}", a.dataset)));
    }
    let options = MidiOptions { include_percussion: a.include_percussion };
    let entries: Vec<_> = a.paths.iter().map(|p| (p.clone(), a.dataset.clone(), options)).collect();
    let outcome = pipeline::ingest(&entries)?;
    let root = a.out.dir();
    let dir = root.join(&a.dataset);
    create_dir(&dir)?;
    for s in &outcome.streams {
        let text = write_slice_stream(s).map_err(|e| CliError::Invariant(format!("{}: {e}", s.composition)))?;
        write_file(&dir.join(slices_file_name(&s.composition)), text)?;
    }
    let log: String = outcome.log.iter().map(|l| format!("{l}\n")).collect();
    write_file(&root.join(format!("ingest-{}.log", a.dataset)), log)?;
    Ok(Outcome {
        message: format!("ingested {} compositions into {} ({} unreadable)", outcome.streams.len(), dir.display(), outcome.failures),
        warnings: outcome.warnings + outcome.failures,
    })
}

fn slices_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    let entries = fs::read_dir(path).map_err(|e| input(path.display(), e))?;
    for entry in entries {
        let p = entry.map_err(|e| input(path.display(), e))?.path();
        if p.is_dir() {
            slices_files(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "slices") {
            out.push(p);
        }
    }
    Ok(())
}

/// Reads slice streams, ordered by composition id.
pub fn read_streams(inputs: &[PathBuf]) -> Result<Vec<SliceStream>> {
    let mut files = Vec::new();
    for p in inputs {
        slices_files(p, &mut files)?;
    }
    if files.is_empty() {
        return Err(CliError::Input("no input: no .slices files found".into()));
    }
    let mut streams: Vec<SliceStream> = files
        .par_iter()
        .map(|f| read_slice_stream(&read_text(f)?).map_err(|e| input(f.display(), e)))
        .collect::<Result<_>>()?;
    streams.sort_by(|a, b| a.composition.cmp(&b.composition));
    if let Some(w) = streams.windows(2).find(|w| w[0].composition == w[1].composition) {
        return Err(CliError::Input(format!("composition {:?} read twice", w[0].composition)));
    }
    Ok(streams)
}

fn encode(a: EncodeArgs) -> Result<Outcome> {
    let keys = KeySettings { profile: a.profile, profile_file: a.profile_file, weighting: a.weighting, window: a.window };
    let enc = EncoderSettings { overflow: a.overflow, alphabet: a.alphabet };
    let finder = keys.finder()?;
    let streams = read_streams(&a.inputs)?;
    let outcome = pipeline::encode(&streams, &finder, enc.overflow()?, enc.alphabet()?, a.key_traces)?;
    let dir = a.out.dir();
    create_dir(&dir)?;
    let corpus = &outcome.corpus;
    write_file(&dir.join("corpus.txt"), write_corpus(&corpus.pieces))?;
    write_file(&dir.join("vocabulary.txt"), write_vocabulary(&corpus.vocabulary))?;
    let summary = pipeline::encode_summary_csv(corpus);
    write_file(&dir.join("encode_summary.csv"), &summary)?;
    if a.key_traces {
        let kdir = dir.join("key_traces");
        create_dir(&kdir)?;
        for (comp, csv) in &outcome.key_traces {
            write_file(&kdir.join(format!("{}.csv", comp.replace('/', "__"))), csv)?;
        }
    }
    Ok(Outcome { message: summary.trim_end().to_string(), warnings: 0 })
}

/// Reads an encoded corpus and its vocabulary.
pub fn load_corpus(args: &CorpusArgs) -> Result<EncodedCorpus> {
    let pieces = read_corpus(&read_text(&args.corpus)?).map_err(|e| input(args.corpus.display(), e))?;
    let vocabulary = read_vocabulary(&read_text(&args.vocabulary)?).map_err(|e| input(args.vocabulary.display(), e))?;
    let corpus = EncodedCorpus { pieces, vocabulary };
    corpus.validate().map_err(|e| input(args.corpus.display(), e))?;
    Ok(corpus)
}

fn folds(a: FoldsArgs) -> Result<Outcome> {
    let pieces = read_corpus(&read_text(&a.corpus)?).map_err(|e| input(a.corpus.display(), e))?;
    let items: Vec<(String, String)> = pieces.iter().map(|p| (p.composition.clone(), p.dataset.clone())).collect();
    if a.k < 2 {
        return Err(config("-k", "need at least 2 folds"));
    }
    let plan = chordseq::evalkit::make_folds(&items, a.k, a.seed).map_err(|e| CliError::Input(e.to_string()))?;
    let dir = a.out.dir();
    create_dir(&dir)?;
    let path = dir.join("folds.csv");
    write_fold_plan(&plan, create(&path)?).map_err(|e| input(path.display(), e))?;
    Ok(Outcome { message: format!("fold sizes {:?}", plan.fold_sizes()), warnings: 0 })
}

fn load_folds(path: &Path) -> Result<FoldPlan> {
    read_fold_plan(open(path)?).map_err(|e| input(path.display(), e))
}

/// Snapshot file name for a held-out fold and order policy.
pub fn snapshot_name(fold: usize, order: OrderPolicy) -> String {
    match order {
        OrderPolicy::PpmStar => format!("fold{fold}.star.trie"),
        OrderPolicy::Fixed(n) => format!("fold{fold}.order{n}.trie"),
    }
}

fn train(a: TrainArgs) -> Result<Outcome> {
    let order: OrderPolicy = a.order.parse().map_err(|e| config("--order", e))?;
    let corpus = load_corpus(&a.corpus)?;
    let plan = load_folds(&a.folds)?;
    let folds: Vec<usize> = match a.fold {
        Some(f) if f >= plan.k => return Err(config("--fold", format!("fold {f} out of range for k = {}", plan.k))),
        Some(f) => vec![f],
        None => (0..plan.k).collect(),
    };
    let dir = a.out.dir();
    create_dir(&dir)?;
    let depth = pipeline::trie_depth(order);
    let mut nodes = 0;
    for f in &folds {
        let trie = pipeline::train_fold(&corpus, &plan, *f, depth)?;
        nodes += trie.node_count();
        let path = dir.join(snapshot_name(*f, order));
        let mut w = create(&path)?;
        write_snapshot(&trie, &mut w).and_then(|_| std::io::Write::flush(&mut w)).map_err(|e| input(path.display(), e))?;
    }
    Ok(Outcome { message: format!("trained {} fold model(s), {nodes} trie nodes", folds.len()), warnings: 0 })
}

fn fold_tries(corpus: &EncodedCorpus, plan: &FoldPlan, order: OrderPolicy, snapshots: Option<&Path>, regenerate: bool) -> Result<Vec<ContextTrie>> {
    let depth = pipeline::trie_depth(order);
    (0..plan.k)
        .map(|f| {
            let Some(dir) = snapshots else {
                return pipeline::train_fold(corpus, plan, f, depth);
            };
            let path = dir.join(snapshot_name(f, order));
            if !path.exists() {
                if regenerate {
                    log::warn!("{} missing; training it", path.display());
                    return pipeline::train_fold(corpus, plan, f, depth);
                }
                return Err(CliError::Input(format!("missing model snapshot {} (use --regenerate)", path.display())));
            }
            let trie = read_snapshot(std::io::BufReader::new(open(&path)?)).map_err(|e| input(path.display(), e))?;
            if trie.alphabet() != corpus.vocabulary.len() || trie.max_depth() != depth {
                return Err(CliError::Input(format!("{} was trained for another vocabulary or order", path.display())));
            }
            Ok(trie)
        })
        .collect()
}

fn eval(a: EvalArgs) -> Result<Outcome> {
    let models: Vec<_> = a
        .models
        .iter()
        .map(|m| ModelSettings { mode: m.clone(), order: a.order.clone(), bias: a.bias, update_exclusion: a.update_exclusion, name: None }.resolve())
        .collect::<Result<_>>()?;
    let corpus = load_corpus(&a.corpus)?;
    let plan = load_folds(&a.folds)?;
    let order: OrderPolicy = a.order.parse().map_err(|e| config("--order", e))?;
    let tries = if models.iter().any(|m| m.config.mode != ModelMode::Stm) {
        Some(fold_tries(&corpus, &plan, order, a.snapshots.as_deref(), a.regenerate)?)
    } else {
        None
    };
    let dir = a.out.dir();
    create_dir(&dir)?;
    let predictors = PredictorContext::new(&corpus.vocabulary);
    let mut records = Vec::new();
    for m in &models {
        let (recs, trace) = pipeline::evaluate_model(&corpus, &plan, m, tries.as_deref(), &predictors, a.traces)?;
        if a.traces {
            let path = dir.join(format!("trace_{}.csv", pipeline::file_label(&m.name)));
            write_trace(&trace, create(&path)?).map_err(|e| input(path.display(), e))?;
        }
        records.extend(recs);
    }
    let path = dir.join("results.csv");
    write_results_csv(&records, create(&path)?).map_err(|e| input(path.display(), e))?;
    Ok(Outcome { message: format!("{} records written to {}", records.len(), path.display()), warnings: 0 })
}

fn report(a: ReportArgs) -> Result<Outcome> {
    let bootstrap = BootstrapSettings { replicates: a.replicates, level: a.level }.resolve()?;
    let stepwise = RegressionSettings { criterion: a.criterion, ..RegressionSettings::default() }.resolve()?;
    let records = read_results_csv(open(&a.results)?).map_err(|e| input(a.results.display(), e))?;
    if records.is_empty() {
        return Err(CliError::Input(format!("{}: no records", a.results.display())));
    }
    let mut models: Vec<String> = Vec::new();
    for r in &records {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    let summary = pipeline::summarize(&records, &models, bootstrap, a.seed)?;
    let dir = a.out.dir();
    create_dir(&dir)?;
    let path = dir.join("summary.csv");
    write_summary_csv(&summary, create(&path)?).map_err(|e| input(path.display(), e))?;
    let header = vec![format!("seed = {}", a.seed), pipeline::IMPROBABLE_NOTE.to_string()];
    let mut text = String::new();
    for m in &models {
        match pipeline::regress(&records, m, stepwise)? {
            Some(res) => text.push_str(&chordseq::evalkit::format_regression_report(&res, &format!("H_m under {m}"), &header)),
            None => text.push_str(&format!("# {m}: fewer than {} compositions; no regression\n", chordseq::evalkit::MIN_RECORDS)),
        }
        text.push('\n');
    }
    text.push_str(&format!("# note: {}\n", pipeline::SCALE_NOTE));
    write_file(&dir.join("regression.txt"), text)?;
    let lines: Vec<String> = summary.iter().map(|r| format!("{} {} {:.3} [{:.3}, {:.3}]", r.model, r.dataset, r.mean, r.ci_low, r.ci_high)).collect();
    Ok(Outcome { message: lines.join("\n"), warnings: 0 })
}

fn experiment(a: ExperimentArgs) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(k) = a.folds {
        cfg.folds = k;
    }
    if a.traces {
        cfg.output.traces = true;
    }
    let dir = a.out.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| a.out.dir());
    let outcome = pipeline::run_experiment(&cfg, &dir)?;
    let mut lines = vec![format!(
        "{} compositions, {} tokens, {} types; outputs in {}",
        outcome.compositions,
        outcome.tokens,
        outcome.types,
        dir.display()
    )];
    lines.extend(outcome.summary.iter().map(|r| format!("{} {} {:.3} [{:.3}, {:.3}]", r.model, r.dataset, r.mean, r.ci_low, r.ci_high)));
    Ok(Outcome { message: lines.join("\n"), warnings: outcome.ingest_failures })
}
