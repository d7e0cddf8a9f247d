use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use voxprosody::classifiers::ClassifierKind;
use voxprosody::config::RunConfig;
use voxprosody::corpus::{read_labels, write_corpus, CorpusSpec};
use voxprosody::evaluation::{
    cross_validate, predictions_csv, report_json, report_plot_csv, report_text,
};
use voxprosody::features::{read_csv, read_unlabeled_csv, write_csv, FeatureTable, FEATURE_NAMES};
use voxprosody::manifest::ManifestBuilder;
use voxprosody::pipeline::{
    extract_files, extract_labeled_dir, list_wavs, train_pipeline, TrainedPipeline,
};
use voxprosody::stats::{
    class_statistics, class_statistics_csv, class_statistics_text, rank_features, ranking_csv,
    ranking_text, TTestKind,
};
use voxprosody::{Error, Result};

/// Voice prosody features and ASD/TD classification.
#[derive(Debug, Parser)]
#[command(name = "voxprosody", version)]
struct Cli {
    /// Seed for corpus synthesis, fold assignment and random forests.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a two-class synthetic corpus (WAV + JSON sidecars + labels.csv).
    Synth(SynthArgs),
    /// Extract the 36 features from every labelled WAV in a directory.
    Extract(ExtractArgs),
    /// Rank attributes by |t| and write the per-attribute class comparison.
    Rank(RankArgs),
    /// Stratified cross-validation of the classifiers.
    Evaluate(EvaluateArgs),
    /// Fit normalisation, selection and one classifier on a feature table.
    Train(TrainArgs),
    /// Score a feature table, a WAV file or a directory of WAVs.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Corpus spec (TOML); built-in 40 + 40 corpus when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override every class's recording count.
    #[arg(long)]
    per_class: Option<usize>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    audio_dir: PathBuf,
    /// Two-column id,label table (default: <AUDIO_DIR>/labels.csv).
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectionArgs {
    /// Attributes kept after ranking.
    #[arg(long)]
    select: Option<usize>,
    /// welch or pooled.
    #[arg(long, value_parser = parse_ttest)]
    t_test: Option<TTestKind>,
}

#[derive(Debug, Args)]
struct RankArgs {
    features: PathBuf,
    #[command(flatten)]
    sel: SelectionArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    features: PathBuf,
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated subset of nb,lr,svm,rf.
    #[arg(long)]
    classifiers: Option<String>,
    /// Refit normalisation inside each training split.
    #[arg(long)]
    strict_folds: bool,
    #[command(flatten)]
    sel: SelectionArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    features: PathBuf,
    /// nb, lr, svm or rf.
    #[arg(long, default_value = "svm")]
    classifier: String,
    #[command(flatten)]
    sel: SelectionArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV, WAV file or directory of WAVs.
    input: PathBuf,
}

/// Stdout writes that tolerate a closed pipe.
macro_rules! say_raw {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

fn parse_ttest(s: &str) -> std::result::Result<TTestKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "welch" => Ok(TTestKind::Welch),
        "pooled" => Ok(TTestKind::Pooled),
        other => Err(format!("unknown t-test {other:?} (welch or pooled)")),
    }
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    out: PathBuf,
    args: Vec<String>,
}

impl Ctx {
    fn manifest(&self, command: &str, config: &impl Serialize) -> Result<ManifestBuilder> {
        ManifestBuilder::new(command, self.args.clone(), self.seed, config, &self.out)
    }

    fn write(&self, m: &mut ManifestBuilder, name: &str, content: &str) -> Result<()> {
        let p = self.out.join(name);
        std::fs::write(&p, content).map_err(|e| Error::Io { path: p, source: e })?;
        m.output(name);
        Ok(())
    }
}

fn apply_selection(cfg: &mut RunConfig, sel: &SelectionArgs) {
    if let Some(k) = sel.select {
        cfg.evaluation.select = k;
    }
    if let Some(t) = sel.t_test {
        cfg.evaluation.t_test = t;
    }
}

fn synth(ctx: &Ctx, a: &SynthArgs, seed_given: bool) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            CorpusSpec::from_toml(&text).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", p.display())),
                other => other,
            })?
        }
        None => CorpusSpec::default(),
    };
    if seed_given {
        spec.seed = ctx.seed;
    }
    if let Some(n) = a.per_class {
        spec.classes.iter_mut().for_each(|c| c.count = n);
    }
    spec.validate()?;
    let mut m = ManifestBuilder::new("synth", ctx.args.clone(), spec.seed, &spec, &ctx.out)?;
    if let Some(p) = &a.spec {
        m.input(p)?;
    }
    let w = write_corpus(&spec, &ctx.out)?;
    for e in &w.entries {
        m.output(format!("{}.wav", e.id));
        m.output(format!("{}.json", e.id));
    }
    m.output("labels.csv");
    m.finish()?;
    say!(
        "wrote {} recordings to {}",
        w.entries.len(),
        ctx.out.display()
    );
    Ok(())
}

fn extract(ctx: &Ctx, a: &ExtractArgs) -> Result<()> {
    let labels_path = a
        .labels
        .clone()
        .unwrap_or_else(|| a.audio_dir.join("labels.csv"));
    let labels = read_labels(&labels_path)?;
    let features = ctx.cfg.features();
    let mut m = ctx.manifest("extract", &features)?;
    m.input(&labels_path)?;
    let out = extract_labeled_dir(&a.audio_dir, &labels, &features)?;
    for p in list_wavs(&a.audio_dir)? {
        m.input(p)?;
    }
    let csv_path = ctx.out.join("features.csv");
    write_csv(&out.dataset, &csv_path)?;
    m.output("features.csv");
    #[derive(Serialize)]
    struct Summary<'a> {
        extracted: usize,
        failures: &'a [voxprosody::pipeline::Failure],
        unlabeled: &'a [String],
        missing_audio: &'a [String],
        recordings: &'a [voxprosody::pipeline::RecordingSummary],
    }
    let summary = Summary {
        extracted: out.dataset.len(),
        failures: &out.extraction.failures,
        unlabeled: &out.unlabeled,
        missing_audio: &out.missing_audio,
        recordings: &out.extraction.summaries,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
    ctx.write(&mut m, "extraction.json", &(text + "\n"))?;
    m.finish()?;
    say!(
        "extracted {} recordings ({} failed, {} unlabelled) -> {}",
        out.dataset.len(),
        out.extraction.failures.len(),
        out.unlabeled.len(),
        csv_path.display()
    );
    for f in &out.extraction.failures {
        say!("  failed {}: {}", f.id, f.error);
    }
    if out.dataset.is_empty() {
        return Err(Error::EmptyResult("no recording could be analysed".into()));
    }
    Ok(())
}

fn rank(ctx: &Ctx, a: &RankArgs) -> Result<()> {
    let mut cfg = ctx.cfg.clone();
    apply_selection(&mut cfg, &a.sel);
    let ds = read_csv(&a.features)?;
    let mut m = ctx.manifest("rank", &cfg.evaluation)?;
    m.input(&a.features)?;
    let r = rank_features(
        &ds,
        cfg.evaluation.select.min(ds.n_features()),
        cfg.evaluation.t_test,
    )?;
    let cmp = class_statistics(&ds, cfg.evaluation.t_test)?;
    ctx.write(&mut m, "ranking.txt", &ranking_text(&r))?;
    ctx.write(&mut m, "ranking.csv", &ranking_csv(&r))?;
    let table = class_statistics_text(&cmp);
    ctx.write(&mut m, "class_statistics.txt", &table)?;
    ctx.write(&mut m, "class_statistics.csv", &class_statistics_csv(&cmp))?;
    m.finish()?;
    say_raw!("{}\n{table}", ranking_text(&r));
    Ok(())
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let mut cfg = ctx.cfg.clone();
    apply_selection(&mut cfg, &a.sel);
    if let Some(k) = a.folds {
        cfg.evaluation.folds = k;
    }
    if let Some(list) = &a.classifiers {
        cfg.evaluation.classifiers = ClassifierKind::parse_list(list)?;
    }
    cfg.evaluation.strict_folds |= a.strict_folds;
    cfg.evaluation.validate()?;
    let ds = read_csv(&a.features)?;
    let mut m = ctx.manifest("evaluate", &cfg.evaluation)?;
    m.input(&a.features)?;
    let r = cross_validate(&ds, &cfg.evaluation, ctx.seed)?;
    let text = report_text(&r);
    ctx.write(&mut m, "evaluation.txt", &text)?;
    ctx.write(&mut m, "evaluation.json", &(report_json(&r)? + "\n"))?;
    ctx.write(&mut m, "metrics_plot.csv", &report_plot_csv(&r))?;
    ctx.write(&mut m, "predictions.csv", &predictions_csv(&r))?;
    m.finish()?;
    say_raw!("{text}");
    Ok(())
}

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let mut cfg = ctx.cfg.clone();
    apply_selection(&mut cfg, &a.sel);
    let kind: ClassifierKind = a.classifier.parse()?;
    let ds = read_csv(&a.features)?;
    let mut m = ctx.manifest("train", &cfg.evaluation)?;
    m.input(&a.features)?;
    let p = train_pipeline(
        &ds,
        kind,
        cfg.evaluation.select.min(ds.n_features()),
        cfg.evaluation.t_test,
        &cfg.evaluation.hyper,
        ctx.seed,
    )?;
    p.save(ctx.out.join("model.json"))?;
    m.output("model.json");
    m.finish()?;
    say!(
        "trained {} on {} rows; attributes: {}",
        kind.display_name(),
        ds.len(),
        p.selected.join(", ")
    );
    Ok(())
}

fn predict(ctx: &Ctx, a: &PredictArgs) -> Result<()> {
    let model = TrainedPipeline::load(&a.model)?;
    let mut m = ctx.manifest("predict", &ctx.cfg.features())?;
    m.input(&a.model)?;
    let is_csv = a
        .input
        .extension()
        .is_some_and(|x| x.eq_ignore_ascii_case("csv"));
    let table = if is_csv {
        m.input(&a.input)?;
        read_unlabeled_csv(&a.input)?
    } else {
        let paths = if a.input.is_dir() {
            list_wavs(&a.input)?
        } else {
            vec![a.input.clone()]
        };
        for p in &paths {
            m.input(p)?;
        }
        let ex = extract_files(&paths, &ctx.cfg.features())?;
        for f in &ex.failures {
            eprintln!("failed {}: {}", f.id, f.error);
        }
        if ex.ids.is_empty() {
            return Err(Error::EmptyResult("no recording could be analysed".into()));
        }
        FeatureTable {
            names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows: ex.values,
            ids: ex.ids,
            labels: None,
        }
    };
    let preds = model.predict_table(&table)?;
    let mut out = String::from("id,predicted,score");
    out.push_str(if table.labels.is_some() {
        ",truth\n"
    } else {
        "\n"
    });
    let mut correct = 0;
    for (i, (id, p)) in table.ids.iter().zip(&preds).enumerate() {
        out.push_str(&format!("{id},{},{:.6}", p.label, p.score));
        if let Some(l) = &table.labels {
            out.push_str(&format!(",{}", l[i]));
            correct += usize::from(l[i] == p.label);
        }
        out.push('\n');
    }
    ctx.write(&mut m, "predictions.csv", &out)?;
    m.finish()?;
    say_raw!("{out}");
    if table.labels.is_some() {
        say!(
            "accuracy {:.4} ({correct}/{})",
            correct as f64 / preds.len() as f64,
            preds.len()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::State(format!("thread pool: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.clone(),
        source: e,
    })?;
    let ctx = Ctx {
        cfg,
        seed: cli.seed.unwrap_or(0),
        out: cli.out.clone(),
        args: std::env::args().skip(1).collect(),
    };
    match &cli.command {
        Command::Synth(a) => synth(&ctx, a, cli.seed.is_some()),
        Command::Extract(a) => extract(&ctx, a),
        Command::Rank(a) => rank(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Predict(a) => predict(&ctx, a),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Config(_) => 1,
        Error::State(_) => 3,
        Error::Recording { source, .. } => exit_code(source),
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
