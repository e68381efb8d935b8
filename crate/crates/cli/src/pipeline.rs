//! The stages behind the subcommands, as library functions.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chordseq::encoder::{build_vocabulary, encode_stream, write_corpus, write_vocabulary, ChordType, EncodedCorpus, EncodedPiece, OverflowPolicy, Vocabulary};
use chordseq::evalkit::{
    bootstrap_ci, cross_entropy, format_regression_report, make_folds, stepwise_regression, write_fold_plan, write_results_csv,
    write_summary_csv, write_trace, BootstrapConfig, EvalRecord, FoldPlan, PredictorContext, Predictors, RegressionResult,
    StepwiseConfig, SummaryRow, TraceRow,
};
use chordseq::ingest::{parse_midi, MidiOptions, SliceStream};
use chordseq::keyscape::{key_trace_csv, KeyFinder};
use chordseq::ppm::{run_sequence, ContextTrie, ModelMode, OrderPolicy};
use rayon::prelude::*;

use crate::config::{AlphabetChoice, ExperimentConfig, NamedModel};
use crate::error::{input, CliError, Result};

/// Printed with every report.
pub const SCALE_NOTE: &str = "Absolute cross-entropy values published for the nine-dataset corpus cannot be reproduced from a \
single desk-scale dataset; compare model orderings, not magnitudes.";

/// Printed with every regression report.
pub const IMPROBABLE_NOTE: &str = "Improbable = share of tokens whose type is among the ceil(10%) least frequent observed types \
(corpus-wide unigram counts, ties broken by lower type id).";

/// Label of the whole-corpus row in summaries.
pub const ALL: &str = "all";

/// MIDI files under `path` (or `path` itself), sorted.
pub fn midi_files(path: &Path) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let p = entry?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi")) {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    if path.is_dir() {
        walk(path, &mut out).map_err(|e| input(path.display(), e))?;
    } else if path.is_file() {
        out.push(path.to_path_buf());
    } else {
        return Err(input(path.display(), "no such file or directory"));
    }
    out.sort();
    Ok(out)
}

/// Composition id: dataset label plus the file's path below `root`, without extension.
pub fn composition_id(dataset: &str, root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).ok().filter(|r| !r.as_os_str().is_empty()).unwrap_or(file);
    let stem = rel.with_extension("");
    let name = if rel == file { file.file_stem().map(PathBuf::from).unwrap_or(stem) } else { stem };
    let parts: Vec<String> = name.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    format!("{dataset}/{}", parts.join("/"))
}

#[derive(Debug, Default)]
pub struct IngestOutcome {
    pub streams: Vec<SliceStream>,
    /// One line per file problem or parse warning.
    pub log: Vec<String>,
    pub failures: usize,
    pub warnings: usize,
}

/// Parses every MIDI file of every `(path, dataset, options)` entry.
/// Unreadable files are logged and skipped; it is an error only if there
/// was no input at all or nothing could be read.
pub fn ingest(entries: &[(PathBuf, String, MidiOptions)]) -> Result<IngestOutcome> {
    let mut jobs = Vec::new();
    for (root, dataset, options) in entries {
        for f in midi_files(root)? {
            jobs.push((composition_id(dataset, root, &f), dataset.clone(), f, *options));
        }
    }
    if jobs.is_empty() {
        return Err(CliError::Input("no input: no MIDI files found".into()));
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(comp, dataset, file, options)| {
            let bytes = fs::read(file).map_err(|e| format!("{}: {e}", file.display()))?;
            let parsed = parse_midi(&bytes, *options).map_err(|e| format!("{}: {e}", file.display()))?;
            let warnings: Vec<String> = parsed.warnings.iter().map(|w| format!("{}: {w:?}", file.display())).collect();
            if parsed.events.is_empty() {
                return Err(format!("{}: no notes", file.display()));
            }
            Ok((SliceStream::from_notes(comp.clone(), dataset.clone(), parsed.events), warnings))
        })
        .collect();
    let mut out = IngestOutcome::default();
    for r in results {
        match r {
            Ok((stream, warnings)) => {
                out.warnings += warnings.len();
                out.log.extend(warnings.into_iter().map(|w| format!("warning: {w}")));
                out.streams.push(stream);
            }
            Err(e) => {
                log::error!("{e}");
                out.failures += 1;
                out.log.push(format!("error: {e}"));
            }
        }
    }
    let mut ids: Vec<&str> = out.streams.iter().map(|s| s.composition.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Input(format!("composition id {:?} occurs twice", w[0])));
    }
    if out.streams.is_empty() {
        return Err(CliError::Input(format!("none of the {} input files could be read", out.failures)));
    }
    Ok(out)
}

#[derive(Debug)]
pub struct EncodeOutcome {
    pub corpus: EncodedCorpus,
    /// `(composition, csv)` per stream, when requested.
    pub key_traces: Vec<(String, String)>,
}

/// Encodes every stream and closes the vocabulary over the whole corpus.
pub fn encode(streams: &[SliceStream], finder: &KeyFinder, policy: OverflowPolicy, alphabet: AlphabetChoice, key_traces: bool) -> Result<EncodeOutcome> {
    let encoded: Vec<Vec<ChordType>> = streams.par_iter().map(|s| encode_stream(s, finder, policy)).collect();
    let mut vocabulary = match alphabet {
        AlphabetChoice::Corpus => build_vocabulary(encoded.iter().map(Vec::as_slice)),
        AlphabetChoice::Theoretical => Vocabulary::theoretical(),
    };
    let mut pieces = Vec::with_capacity(streams.len());
    for (s, types) in streams.iter().zip(&encoded) {
        if types.is_empty() {
            log::warn!("{}: no slices; left out", s.composition);
            continue;
        }
        let tokens = vocabulary.encode(types).map_err(|e| CliError::Invariant(format!("{}: {e}", s.composition)))?;
        pieces.push(EncodedPiece { composition: s.composition.clone(), dataset: s.dataset.clone(), tokens });
    }
    if alphabet == AlphabetChoice::Theoretical {
        for p in &pieces {
            vocabulary.observe(&p.tokens).map_err(|e| CliError::Invariant(e.to_string()))?;
        }
    }
    let traces = if key_traces {
        streams.par_iter().map(|s| (s.composition.clone(), key_trace_csv(&finder.trace(s)))).collect()
    } else {
        Vec::new()
    };
    let corpus = EncodedCorpus { pieces, vocabulary };
    corpus.validate().map_err(|e| CliError::Invariant(e.to_string()))?;
    Ok(EncodeOutcome { corpus, key_traces: traces })
}

/// Corpus statistics CSV: `dataset,pieces,tokens,types`, one row per dataset
/// and a final `all` row.
pub fn encode_summary_csv(corpus: &EncodedCorpus) -> String {
    let mut by_dataset: BTreeMap<&str, (usize, usize, std::collections::BTreeSet<u32>)> = BTreeMap::new();
    for p in &corpus.pieces {
        let e = by_dataset.entry(&p.dataset).or_default();
        e.0 += 1;
        e.1 += p.tokens.len();
        e.2.extend(p.tokens.iter().copied());
    }
    let mut out = String::from("dataset,pieces,tokens,types\n");
    for (d, (pieces, tokens, types)) in &by_dataset {
        out.push_str(&format!("{d},{pieces},{tokens},{}\n", types.len()));
    }
    out.push_str(&format!("{ALL},{},{},{}\n", corpus.pieces.len(), corpus.token_count(), corpus.vocabulary.observed()));
    out
}

pub fn fold_plan(corpus: &EncodedCorpus, k: usize, seed: u64) -> Result<FoldPlan> {
    let items: Vec<(String, String)> = corpus.pieces.iter().map(|p| (p.composition.clone(), p.dataset.clone())).collect();
    make_folds(&items, k, seed).map_err(|e| CliError::Input(e.to_string()))
}

/// Stored context depth for a model: the fixed bound, or unbounded for PPM*.
pub fn trie_depth(order: OrderPolicy) -> Option<usize> {
    match order {
        OrderPolicy::PpmStar => None,
        OrderPolicy::Fixed(n) => Some(n),
    }
}

/// Trie trained on every piece outside `fold`.
pub fn train_fold(corpus: &EncodedCorpus, plan: &FoldPlan, fold: usize, depth: Option<usize>) -> Result<ContextTrie> {
    let mut trie = ContextTrie::with_max_depth(corpus.vocabulary.len(), depth);
    for p in &corpus.pieces {
        let f = plan.fold_of(&p.composition).ok_or_else(|| CliError::Input(format!("{} is not in the fold plan", p.composition)))?;
        if f != fold {
            trie.train_sequence(&p.tokens).map_err(|e| CliError::Invariant(e.to_string()))?;
        }
    }
    Ok(trie)
}

/// Per-composition evaluation of one model. `tries[f]` is the training
/// trie for test fold `f` (unused by STM).
pub fn evaluate_model(
    corpus: &EncodedCorpus,
    plan: &FoldPlan,
    model: &NamedModel,
    tries: Option<&[ContextTrie]>,
    predictors: &PredictorContext,
    traces: bool,
) -> Result<(Vec<EvalRecord>, Vec<TraceRow>)> {
    let alphabet = corpus.vocabulary.len();
    let rows: Vec<Result<(EvalRecord, Vec<TraceRow>)>> = corpus
        .pieces
        .par_iter()
        .map(|p| {
            let fold = plan.fold_of(&p.composition).ok_or_else(|| CliError::Input(format!("{} is not in the fold plan", p.composition)))?;
            let base = match (model.config.mode, tries) {
                (ModelMode::Stm, _) => None,
                (_, Some(t)) => Some(&t[fold]),
                (_, None) => return Err(CliError::Invariant(format!("{} needs training tries", model.name))),
            };
            let probs = run_sequence(&p.tokens, &model.config, base, alphabet).map_err(|e| CliError::Invariant(format!("{}: {e}", p.composition)))?;
            let entropy = cross_entropy(&probs).map_err(|e| CliError::Invariant(format!("{} under {}: {e}", p.composition, model.name)))?;
            let pred: Predictors = predictors.compute(&p.tokens).map_err(|e| CliError::Invariant(e.to_string()))?;
            let trace = if traces {
                p.tokens
                    .iter()
                    .zip(&probs)
                    .enumerate()
                    .map(|(index, (&token, &prob))| TraceRow { composition: p.composition.clone(), index, token, p: prob })
                    .collect()
            } else {
                Vec::new()
            };
            let record = EvalRecord { composition: p.composition.clone(), dataset: p.dataset.clone(), model: model.name.clone(), entropy, predictors: pred };
            Ok((record, trace))
        })
        .collect();
    let mut records = Vec::with_capacity(rows.len());
    let mut trace = Vec::new();
    for r in rows {
        let (rec, t) = r?;
        records.push(rec);
        trace.extend(t);
    }
    Ok((records, trace))
}

/// Seed for the `index`-th bootstrap in a report, derived from the root seed.
pub fn derived_seed(root: u64, index: u64) -> u64 {
    root ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Mean and BCa interval per model, for the whole corpus and per dataset.
/// `models` fixes the row order.
pub fn summarize(records: &[EvalRecord], models: &[String], config: BootstrapConfig, seed: u64) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for model in models {
        let mine: Vec<&EvalRecord> = records.iter().filter(|r| &r.model == model).collect();
        let mut groups: Vec<(String, Vec<f64>)> = vec![(ALL.to_string(), mine.iter().map(|r| r.entropy).collect())];
        let mut by_dataset: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for r in &mine {
            by_dataset.entry(&r.dataset).or_default().push(r.entropy);
        }
        if by_dataset.len() > 1 {
            groups.extend(by_dataset.into_iter().map(|(d, v)| (d.to_string(), v)));
        }
        for (dataset, values) in groups {
            if values.is_empty() {
                continue;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let (low, high) = if values.len() < 2 {
                log::warn!("{model}/{dataset}: a single composition has no interval");
                (mean, mean)
            } else {
                let ci = bootstrap_ci(&values, config, derived_seed(seed, rows.len() as u64)).map_err(|e| CliError::Invariant(e.to_string()))?;
                (ci.low, ci.high)
            };
            rows.push(SummaryRow { model: model.clone(), dataset, compositions: values.len(), mean, ci_low: low, ci_high: high });
        }
    }
    Ok(rows)
}

/// Stepwise regression of one model's per-composition entropies on the
/// five predictors. `None` when there are too few compositions.
pub fn regress(records: &[EvalRecord], model: &str, config: StepwiseConfig) -> Result<Option<RegressionResult>> {
    let mine: Vec<&EvalRecord> = records.iter().filter(|r| r.model == model).collect();
    if mine.len() < chordseq::evalkit::MIN_RECORDS {
        return Ok(None);
    }
    let columns: Vec<Vec<f64>> = (0..5).map(|k| mine.iter().map(|r| r.predictors.values()[k]).collect()).collect();
    let y: Vec<f64> = mine.iter().map(|r| r.entropy).collect();
    stepwise_regression(&Predictors::NAMES, &columns, &y, config).map(Some).map_err(|e| CliError::Invariant(e.to_string()))
}

/// File-name-safe model label.
pub fn file_label(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '+' => 'p',
            c if c.is_ascii_alphanumeric() || c == '-' || c == '_' => c,
            _ => '_',
        })
        .collect()
}

/// Every output of one experiment run.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    pub compositions: usize,
    pub tokens: usize,
    pub types: usize,
    pub summary: Vec<SummaryRow>,
    pub regressions: Vec<(String, Option<RegressionResult>)>,
    pub ingest_failures: usize,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| input(path.display(), e))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), chordseq::evalkit::EvalError>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Invariant(e.to_string()))?;
    Ok(buf)
}

/// Runs the whole pipeline and writes its outputs under `out_dir`:
/// `encode_summary.csv`, `corpus.txt`, `vocabulary.txt`, `folds.csv`,
/// `results.csv`, `summary.csv`, `regression.txt`, `report.txt`,
/// and optionally `traces/` and `key_traces/`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    let models = config.validate()?;
    let finder = config.keys.finder()?;
    fs::create_dir_all(out_dir).map_err(|e| input(out_dir.display(), e))?;

    let entries: Vec<(PathBuf, String, MidiOptions)> = config
        .corpus
        .iter()
        .map(|c| (c.path.clone(), c.dataset.clone(), MidiOptions { include_percussion: c.include_percussion }))
        .collect();
    let ingested = ingest(&entries)?;
    write(&out_dir.join("ingest.log"), ingested.log.iter().map(|l| format!("{l}\n")).collect::<String>())?;

    let encoded = encode(&ingested.streams, &finder, config.encoder.overflow()?, config.encoder.alphabet()?, config.output.key_traces)?;
    let corpus = encoded.corpus;
    if corpus.pieces.len() < config.folds {
        return Err(CliError::Input(format!("{} compositions cannot fill {} folds", corpus.pieces.len(), config.folds)));
    }
    write(&out_dir.join("corpus.txt"), write_corpus(&corpus.pieces))?;
    write(&out_dir.join("vocabulary.txt"), write_vocabulary(&corpus.vocabulary))?;
    write(&out_dir.join("encode_summary.csv"), encode_summary_csv(&corpus))?;
    if config.output.key_traces {
        let dir = out_dir.join("key_traces");
        fs::create_dir_all(&dir).map_err(|e| input(dir.display(), e))?;
        for (comp, csv) in &encoded.key_traces {
            write(&dir.join(format!("{}.csv", comp.replace('/', "__"))), csv)?;
        }
    }

    let plan = fold_plan(&corpus, config.folds, config.seed)?;
    write(&out_dir.join("folds.csv"), csv_bytes(|b| write_fold_plan(&plan, b))?)?;

    // one set of fold tries per stored depth
    let mut tries: BTreeMap<Option<usize>, Vec<ContextTrie>> = BTreeMap::new();
    for m in models.iter().filter(|m| m.config.mode != ModelMode::Stm) {
        let depth = trie_depth(m.config.order);
        if !tries.contains_key(&depth) {
            let per_fold: Vec<ContextTrie> = (0..config.folds).into_par_iter().map(|f| train_fold(&corpus, &plan, f, depth)).collect::<Result<_>>()?;
            tries.insert(depth, per_fold);
        }
    }

    let predictors = PredictorContext::new(&corpus.vocabulary);
    let mut records = Vec::new();
    if config.output.traces {
        fs::create_dir_all(out_dir.join("traces")).map_err(|e| input(out_dir.display(), e))?;
    }
    for m in &models {
        let fold_tries = tries.get(&trie_depth(m.config.order)).map(Vec::as_slice);
        let (recs, trace) = evaluate_model(&corpus, &plan, m, fold_tries, &predictors, config.output.traces)?;
        if config.output.traces {
            let path = out_dir.join("traces").join(format!("{}.csv", file_label(&m.name)));
            write(&path, csv_bytes(|b| write_trace(&trace, b))?)?;
        }
        records.extend(recs);
    }
    if records.len() != models.len() * corpus.pieces.len() {
        return Err(CliError::Invariant("results do not cover every composition once per model".into()));
    }
    write(&out_dir.join("results.csv"), csv_bytes(|b| write_results_csv(&records, b))?)?;

    let names: Vec<String> = models.iter().map(|m| m.name.clone()).collect();
    let summary = summarize(&records, &names, config.bootstrap.resolve()?, config.seed)?;
    write(&out_dir.join("summary.csv"), csv_bytes(|b| write_summary_csv(&summary, b))?)?;

    let stepwise = config.regression.resolve()?;
    let header = vec![format!("seed = {}", config.seed), IMPROBABLE_NOTE.to_string()];
    let mut regression_text = String::new();
    let mut regressions = Vec::new();
    for name in &names {
        let r = regress(&records, name, stepwise)?;
        match &r {
            Some(res) => regression_text.push_str(&format_regression_report(res, &format!("H_m under {name}"), &header)),
            None => regression_text.push_str(&format!("# {name}: fewer than {} compositions; no regression\n", chordseq::evalkit::MIN_RECORDS)),
        }
        regression_text.push('\n');
        regressions.push((name.clone(), r));
    }
    write(&out_dir.join("regression.txt"), &regression_text)?;

    write(&out_dir.join("report.txt"), experiment_report(config, &corpus, &plan, &summary, ingested.failures))?;

    Ok(ExperimentOutcome {
        out_dir: out_dir.to_path_buf(),
        compositions: corpus.pieces.len(),
        tokens: corpus.token_count(),
        types: corpus.vocabulary.observed(),
        summary,
        regressions,
        ingest_failures: ingested.failures,
    })
}

fn experiment_report(config: &ExperimentConfig, corpus: &EncodedCorpus, plan: &FoldPlan, summary: &[SummaryRow], failures: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!("chordseq experiment report\nseed = {}\n\n", config.seed));
    out.push_str("resolved configuration\n----------------------\n");
    out.push_str(&config.to_toml());
    out.push_str(&format!(
        "\nmodels: escape method C, {} blending\nstepwise criterion: {}\n",
        "interpolated",
        config.regression.resolve().map(|s| s.criterion.to_string()).unwrap_or_default()
    ));
    out.push_str(&format!(
        "\ncorpus\n------\ncompositions = {}\ntokens = {}\nobserved types = {}\nalphabet size = {}\nfold sizes = {:?}\nunreadable files = {failures}\n",
        corpus.pieces.len(),
        corpus.token_count(),
        corpus.vocabulary.observed(),
        corpus.vocabulary.len(),
        plan.fold_sizes()
    ));
    out.push_str("\ncross-entropy (bits per token, BCa interval)\n---------------------------------------------\n");
    for r in summary {
        out.push_str(&format!("{:<16} {:<12} n={:<5} {:.3}  [{:.3}, {:.3}]\n", r.model, r.dataset, r.compositions, r.mean, r.ci_low, r.ci_high));
    }
    out.push_str(&format!("\nnote: {SCALE_NOTE}\nnote: {IMPROBABLE_NOTE}\n"));
    out
}
