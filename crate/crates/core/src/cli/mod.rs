//! The `docdistill` command-line pipeline.
//!
//! Every command resolves a [`RunConfig`] (defaults, then `--config`, then
//! dot-notation overrides such as `--distill.lambda 4`), validates it before
//! doing any work, and writes its outputs into `--run-dir`:
//!
//! ```text
//! config.json   resolved configuration
//! report.json   metrics and per-epoch history (no timings, so reruns are byte-identical)
//! best.ckpt     best-on-validation checkpoint
//! log.txt       human-readable progress, including the transfer-set size
//! timing.json   wall-clock seconds per epoch
//! ```
//!
//! Exit codes: 0 success, 2 data error, 3 missing teacher, 4 config mismatch,
//! 5 I/O error, 1 anything else.

mod config;

pub use config::{extract_overrides, merge, parse_value, Overrides, RunConfig, SweepMode};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::corpus::{corpus_stats, read_documents, CorpusStats, Encoder, LabelSpace, PreparedCorpus, RawSplits};
use crate::distillation::{build_transfer_set, SwapTable, TransferSet};
use crate::error::{Error, Result};
use crate::evalbench::{bench_csv, bench_latency, sweep_csv, sweep_hidden_sizes, BenchReport, MetricReport};
use crate::models::{count_parameters, Checkpoint, SoftTargetHeader, SoftTargetRecord, SoftTargetStore, StudentModel, TeacherSource};
use crate::rng::{stream, Stream};
use crate::training::{plain_examples, train_student, transfer_examples, TrainMode, TrainOutcome, TrainReport};
use crate::TaskKind;

#[derive(Debug, Parser)]
#[command(name = "docdistill", version, about = "Distill large document classifiers into small BiLSTM students")]
struct Cli {
    /// JSON config file; command-line overrides win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory with train.jsonl, val.jsonl and test.jsonl.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    /// Allow writing into a non-empty run directory.
    #[arg(long, global = true)]
    overwrite: bool,
    /// multi-label or single-label.
    #[arg(long, global = true)]
    task: Option<TaskKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print C/N/W/S statistics per split (or per file given).
    Stats { files: Vec<PathBuf> },
    /// Train a student on gold labels only.
    Train,
    /// Train the large in-toolkit teacher.
    TeacherTrain,
    /// Score a split with a frozen teacher checkpoint and write a soft-target store.
    ExportTeacherTargets {
        #[arg(long)]
        teacher: Option<PathBuf>,
        #[arg(long, default_value = "train")]
        split: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and write the (augmented) transfer set with teacher probabilities.
    BuildTransfer,
    /// Train a student with the combined classification + distillation loss.
    Distill,
    /// Evaluate a checkpoint on a split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Measure inference latency; speedups are relative to the first checkpoint.
    Bench {
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long, default_value = "val")]
        split: String,
    },
    /// Train one student per hidden size and seed; write sweep.csv.
    Sweep,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    match execute(args) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            code
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

enum Failure {
    Usage(clap::Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn execute(args: Vec<String>) -> std::result::Result<(), Failure> {
    let (rest, mut overrides) = extract_overrides(args)?;
    let cli = Cli::try_parse_from(rest).map_err(Failure::Usage)?;
    if let Some(t) = cli.task {
        overrides.insert(0, ("task".into(), Value::from(t.as_str())));
    }
    if let Some(s) = cli.seed {
        overrides.push(("seed".into(), Value::from(s)));
    }
    if let Some(d) = &cli.data_dir {
        overrides.push(("data_dir".into(), Value::from(d.display().to_string())));
    }
    let cfg = RunConfig::resolve(cli.config.as_deref(), &overrides)?;
    let ctx = Context {
        cfg,
        run_dir: cli.run_dir,
        overwrite: cli.overwrite,
        log: Vec::new(),
    };
    match cli.command {
        Command::Stats { files } => cmd_stats(ctx, &files),
        Command::Train => cmd_train(ctx, false),
        Command::TeacherTrain => cmd_train(ctx, true),
        Command::ExportTeacherTargets { teacher, split, out } => cmd_export(ctx, teacher, &split, out),
        Command::BuildTransfer => cmd_build_transfer(ctx),
        Command::Distill => cmd_distill(ctx),
        Command::Eval { checkpoint, split } => cmd_eval(ctx, &checkpoint, &split),
        Command::Bench { checkpoints, split } => cmd_bench(ctx, &checkpoints, &split),
        Command::Sweep => cmd_sweep(ctx),
    }?;
    Ok(())
}

struct Context {
    cfg: RunConfig,
    run_dir: Option<PathBuf>,
    overwrite: bool,
    log: Vec<String>,
}

impl Context {
    fn say(&mut self, line: impl Into<String>) {
        let line = line.into();
        eprintln!("{line}");
        self.log.push(line);
    }

    /// The run directory, created (and checked for reuse) on first call.
    fn run_dir(&self) -> Result<PathBuf> {
        let dir = self
            .run_dir
            .clone()
            .ok_or_else(|| Error::config("this command needs --run-dir"))?;
        if dir.exists() {
            let occupied = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?.next().is_some();
            if occupied && !self.overwrite {
                return Err(Error::io(
                    &dir,
                    std::io::Error::new(std::io::ErrorKind::AlreadyExists, "run directory is not empty; pass --overwrite"),
                ));
            }
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    fn data_dir(&self) -> Result<PathBuf> {
        self.cfg
            .data_dir
            .clone()
            .ok_or_else(|| Error::config("no dataset: pass --data-dir or set data_dir in the config"))
    }

    fn corpus(&self) -> Result<PreparedCorpus> {
        let raw = RawSplits::load(&self.data_dir()?, self.cfg.task)?;
        PreparedCorpus::prepare(&raw, self.cfg.task, self.cfg.corpus.min_count, self.cfg.corpus.msl)
    }

    /// Writes config.json and log.txt (plus any extra files) into `dir`.
    fn finish(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("config.json"), &self.cfg)?;
        let mut log = self.log.join("\n");
        log.push('\n');
        write_file(&dir.join("log.txt"), log.as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

fn new_model(ctx: &Context, corpus: &PreparedCorpus, hidden: usize, seed: u64, rng_stream: Stream) -> Result<StudentModel> {
    let config = ctx
        .cfg
        .student_config(corpus.encoder.vocab.len(), corpus.encoder.labels.len(), hidden);
    let mut model = StudentModel::init(config, &mut stream(seed, rng_stream))?;
    if let Some(path) = &ctx.cfg.model.word_vectors {
        model.load_word_vectors(path, &corpus.encoder.vocab)?;
    }
    Ok(model)
}

/// Serialized training result. Deliberately free of configuration and timing
/// so that equivalent runs produce identical files.
#[derive(Serialize)]
struct RunReport<'a> {
    #[serde(flatten)]
    train: &'a TrainReport,
    params_excl_emb: u64,
    params_incl_emb: u64,
    val: MetricReport,
    test: MetricReport,
}

fn finish_training(ctx: &mut Context, dir: &Path, corpus: &PreparedCorpus, out: TrainOutcome, role: &str) -> Result<()> {
    let labels = &corpus.encoder.labels;
    let seed = ctx.cfg.seed;
    let val = MetricReport::compute(&out.model.probabilities(&corpus.val, 256)?, &corpus.val, labels, "val", seed)?;
    let test = MetricReport::compute(&out.model.probabilities(&corpus.test, 256)?, &corpus.test, labels, "test", seed)?;
    for e in &out.report.epochs {
        let secs = out.report.epoch_seconds.get(e.epoch - 1).copied().unwrap_or(0.0);
        ctx.say(format!(
            "epoch {:>3}  loss {:.6}  val {} {:.4}  ({secs:.1}s)",
            e.epoch, e.train_loss, out.report.metric, e.val_metric
        ));
    }
    ctx.say(format!(
        "best epoch {}: val {} {:.4}, test {} {:.4}",
        out.report.best_epoch, val.metric, val.value, test.metric, test.value
    ));
    let report = RunReport {
        train: &out.report,
        params_excl_emb: count_parameters(&out.model.config, false)?,
        params_incl_emb: count_parameters(&out.model.config, true)?,
        val,
        test,
    };
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("timing.json"), &serde_json::json!({ "epoch_seconds": out.report.epoch_seconds }))?;
    let ck = Checkpoint {
        labels: labels.clone(),
        vocab: corpus.encoder.vocab.clone(),
        seed,
        metadata: serde_json::json!({ "role": role, "best_epoch": out.report.best_epoch }),
        model: out.model,
    };
    ck.save(&dir.join("best.ckpt"))?;
    ctx.finish(dir)
}

fn cmd_train(mut ctx: Context, teacher: bool) -> Result<()> {
    let dir = ctx.run_dir()?;
    let corpus = ctx.corpus()?;
    let (hidden, rng_stream, role) = if teacher {
        (ctx.cfg.teacher.hidden_units, Stream::Teacher, "teacher")
    } else {
        (ctx.cfg.model.hidden_units, Stream::Init, "student")
    };
    let model = new_model(&ctx, &corpus, hidden, ctx.cfg.seed, rng_stream)?;
    ctx.say(format!(
        "training {role} (h={hidden}) on {} documents, seed {}",
        corpus.train.len(),
        ctx.cfg.seed
    ));
    let out = train_student(
        model,
        &plain_examples(&corpus.train),
        &corpus.val,
        &ctx.cfg.distill_config(),
        &ctx.cfg.train_config(ctx.cfg.seed),
    )?;
    finish_training(&mut ctx, &dir, &corpus, out, role)
}

fn load_teacher(ctx: &Context, corpus: &PreparedCorpus) -> Result<TeacherSource> {
    let labels = &corpus.encoder.labels;
    let t = &ctx.cfg.teacher;
    if let Some(path) = &t.checkpoint {
        if !path.exists() {
            return Err(Error::MissingTeacher(format!("teacher checkpoint {} not found", path.display())));
        }
        let ck = Checkpoint::load(path)?;
        if ck.labels.kind() != ctx.cfg.task {
            return Err(Error::config(format!("teacher is {}, dataset is {}", ck.labels.kind(), ctx.cfg.task)));
        }
        if &ck.labels != labels || ck.vocab.hash() != corpus.encoder.vocab.hash() {
            return Err(Error::config("teacher checkpoint was trained with a different label space or vocabulary"));
        }
        return Ok(TeacherSource::frozen(ck.model, t.name.clone()));
    }
    if let Some(path) = &t.soft_targets {
        if !path.exists() {
            return Err(Error::MissingTeacher(format!("soft-target store {} not found", path.display())));
        }
        let store = SoftTargetStore::open(path, None)?;
        let h = store.header();
        if h.kind != ctx.cfg.task || h.k != labels.len() || h.label_space_hash != labels.hash() {
            return Err(Error::config(format!(
                "soft targets are {} with K={} (label hash {}), dataset is {} with K={} (label hash {})",
                h.kind,
                h.k,
                h.label_space_hash,
                ctx.cfg.task,
                labels.len(),
                labels.hash()
            )));
        }
        return Ok(TeacherSource::Store(store));
    }
    Err(Error::MissingTeacher(
        "set teacher.checkpoint or teacher.soft_targets (e.g. --teacher.checkpoint runs/teacher/best.ckpt)".into(),
    ))
}

fn transfer_set(ctx: &mut Context, corpus: &PreparedCorpus) -> Result<TransferSet> {
    let teacher = load_teacher(ctx, corpus)?;
    let table = SwapTable::build(&corpus.train, &corpus.encoder.vocab);
    let aug = ctx.cfg.augment_config();
    let ts = build_transfer_set(&corpus.train, &table, &teacher, &aug)?;
    ctx.say(format!(
        "transfer set: {} records ({}x of {} training documents, {} augmented), teacher {}",
        ts.len(),
        aug.multiplier,
        corpus.train.len(),
        ts.augmented(),
        ts.teacher_name
    ));
    Ok(ts)
}

fn cmd_build_transfer(mut ctx: Context) -> Result<()> {
    let dir = ctx.run_dir()?;
    let corpus = ctx.corpus()?;
    let ts = transfer_set(&mut ctx, &corpus)?;
    let path = ts.write(&dir.join("transfer"), &corpus.encoder)?;
    ctx.say(format!("wrote {}", path.display()));
    ctx.finish(&dir)
}

fn cmd_distill(mut ctx: Context) -> Result<()> {
    let dir = ctx.run_dir()?;
    let corpus = ctx.corpus()?;
    let ts = transfer_set(&mut ctx, &corpus)?;
    let model = new_model(&ctx, &corpus, ctx.cfg.model.hidden_units, ctx.cfg.seed, Stream::Init)?;
    ctx.say(format!(
        "distilling into student (h={}), lambda {}, seed {}",
        ctx.cfg.model.hidden_units, ctx.cfg.distill.lambda, ctx.cfg.seed
    ));
    let out = train_student(
        model,
        &transfer_examples(&ts),
        &corpus.val,
        &ctx.cfg.distill_config(),
        &ctx.cfg.train_config(ctx.cfg.seed),
    )?;
    debug_assert_eq!(out.report.mode, TrainMode::Distill);
    finish_training(&mut ctx, &dir, &corpus, out, "student")
}

/// Encoder matching a checkpoint's vocabulary and labels.
fn checkpoint_encoder(ck: &Checkpoint, msl: Option<usize>) -> Encoder {
    Encoder {
        vocab: ck.vocab.clone(),
        labels: ck.labels.clone(),
        msl,
    }
}

fn load_split_for(ctx: &Context, ck: &Checkpoint, split: &str) -> Result<Vec<crate::corpus::EncodedDocument>> {
    let raw = RawSplits::load(&ctx.data_dir()?, ck.labels.kind())?;
    checkpoint_encoder(ck, ctx.cfg.corpus.msl).encode_all(raw.split(split)?)
}

fn cmd_export(mut ctx: Context, teacher: Option<PathBuf>, split: &str, out: Option<PathBuf>) -> Result<()> {
    let path = teacher
        .or_else(|| ctx.cfg.teacher.checkpoint.clone())
        .ok_or_else(|| Error::MissingTeacher("pass --teacher <checkpoint>".into()))?;
    if !path.exists() {
        return Err(Error::MissingTeacher(format!("teacher checkpoint {} not found", path.display())));
    }
    let ck = Checkpoint::load(&path)?;
    if ck.labels.kind() != ctx.cfg.task {
        return Err(Error::config(format!("teacher is {}, dataset is {}", ck.labels.kind(), ctx.cfg.task)));
    }
    let docs = load_split_for(&ctx, &ck, split)?;
    let probs = ck.model.probabilities(&docs, 256)?;
    let records = docs
        .iter()
        .zip(probs)
        .map(|(d, probs)| SoftTargetRecord { id: d.id.clone(), probs })
        .collect();
    let store = SoftTargetStore::new(SoftTargetHeader::for_labels(&ck.labels, ctx.cfg.teacher.name.clone()), records)?;
    let (out, dir) = match out {
        Some(p) => (p, None),
        None => {
            let dir = ctx.run_dir()?;
            (dir.join("soft_targets.jsonl"), Some(dir))
        }
    };
    store.write(&out)?;
    ctx.say(format!("wrote {} soft-target rows to {}", store.len(), out.display()));
    match dir {
        Some(d) => ctx.finish(&d),
        None => Ok(()),
    }
}

fn cmd_eval(ctx: Context, checkpoint: &Path, split: &str) -> Result<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let docs = load_split_for(&ctx, &ck, split)?;
    let report = MetricReport::compute(&ck.model.probabilities(&docs, 256)?, &docs, &ck.labels, split, ck.seed)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if ctx.run_dir.is_some() {
        let dir = ctx.run_dir()?;
        write_json(&dir.join(format!("eval_{split}.json")), &report)?;
    }
    Ok(())
}

fn cmd_bench(mut ctx: Context, checkpoints: &[PathBuf], split: &str) -> Result<()> {
    let mut reports: Vec<BenchReport> = Vec::with_capacity(checkpoints.len());
    for path in checkpoints {
        let ck = Checkpoint::load(path)?;
        let docs = load_split_for(&ctx, &ck, split)?;
        let name = path.display().to_string();
        reports.push(bench_latency(&name, &ck.model, &docs, &ctx.cfg.bench)?);
    }
    let (reference, ref_secs) = (reports[0].model.clone(), reports[0].seconds);
    for r in &mut reports {
        r.reference = reference.clone();
        r.speedup = ref_secs / r.seconds;
    }
    let mut table = format!("{:<40} {:>12} {:>12} {:>10} {:>9}\n", "model", "params", "params+emb", "seconds", "speedup");
    for r in &reports {
        let _ = writeln!(
            table,
            "{:<40} {:>12} {:>12} {:>10.4} {:>8.2}x",
            r.model, r.params_excl_emb, r.params_incl_emb, r.seconds, r.speedup
        );
    }
    let _ = write!(table, "hardware: {}", reports[0].hardware);
    println!("{table}");
    if ctx.run_dir.is_some() {
        let dir = ctx.run_dir()?;
        write_json(&dir.join("bench.json"), &reports)?;
        write_file(&dir.join("bench.csv"), bench_csv(&reports).as_bytes())?;
        ctx.say(table);
        ctx.finish(&dir)?;
    }
    Ok(())
}

fn cmd_sweep(mut ctx: Context) -> Result<()> {
    let dir = ctx.run_dir()?;
    let corpus = ctx.corpus()?;
    let ts = match ctx.cfg.sweep.mode {
        SweepMode::Distill => Some(transfer_set(&mut ctx, &corpus)?),
        SweepMode::Train => None,
    };
    let data = match &ts {
        Some(ts) => transfer_examples(ts),
        None => plain_examples(&corpus.train),
    };
    let sizes = ctx.cfg.sweep.sizes.clone();
    let seeds = ctx.cfg.sweep.seeds.clone();
    let rows = sweep_hidden_sizes(
        &sizes,
        &seeds,
        |h, seed| new_model(&ctx, &corpus, h, seed, Stream::Init),
        &data,
        &corpus.val,
        &ctx.cfg.distill_config(),
        &ctx.cfg.train_config(ctx.cfg.seed),
    )?;
    let csv = sweep_csv(&rows);
    print!("{csv}");
    write_file(&dir.join("sweep.csv"), csv.as_bytes())?;
    write_json(&dir.join("sweep.json"), &rows)?;
    ctx.say(csv.trim_end().to_string());
    ctx.finish(&dir)
}

fn cmd_stats(mut ctx: Context, files: &[PathBuf]) -> Result<()> {
    let inputs: Vec<(String, PathBuf)> = if files.is_empty() {
        let dir = ctx.data_dir()?;
        ["train", "val", "test"]
            .iter()
            .map(|s| (s.to_string(), dir.join(format!("{s}.jsonl"))))
            .collect()
    } else {
        files
            .iter()
            .map(|p| (p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into()), p.clone()))
            .collect()
    };
    let mut splits = Vec::with_capacity(inputs.len());
    for (name, path) in &inputs {
        let docs = read_documents(path)?;
        if docs.is_empty() {
            return Err(Error::Data {
                path: path.display().to_string(),
                line: 0,
                message: "no records".into(),
            });
        }
        splits.push((name.clone(), docs));
    }
    let all: Vec<_> = splits.iter().flat_map(|(_, d)| d.iter().cloned()).collect();
    let labels = LabelSpace::from_documents(&all, ctx.cfg.task)?;
    let mut rows: Vec<(String, CorpusStats)> = Vec::new();
    let mut table = format!("{:<12} {:>5} {:>8} {:>9} {:>7}\n", "split", "C", "N", "W", "S");
    for (name, docs) in &splits {
        let s = corpus_stats(docs, &labels)?;
        let _ = writeln!(
            table,
            "{:<12} {:>5} {:>8} {:>9.2} {:>7.2}",
            name, s.classes, s.samples, s.mean_words, s.mean_sentences
        );
        rows.push((name.clone(), s));
    }
    print!("{table}");
    if ctx.run_dir.is_some() {
        let dir = ctx.run_dir()?;
        let map: serde_json::Map<String, Value> = rows
            .iter()
            .map(|(n, s)| Ok((n.clone(), serde_json::to_value(s)?)))
            .collect::<Result<_>>()?;
        write_json(&dir.join("stats.json"), &map)?;
        ctx.say(table.trim_end().to_string());
        ctx.finish(&dir)?;
    }
    Ok(())
}
