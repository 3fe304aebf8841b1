//! Command-line front end for the disaster-analytics pipeline: segmentation
//! training and inference, land-cover change analysis, tweet summarization,
//! keyword frequency, and the fused emergency report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sitrep::blend::{argmax_labels, predict_smooth_with_stats};
use sitrep::change::{analyze_change, load_annotations, ChangeReport, RegionAnnotation};
use sitrep::cowts::{
    build_instance, feasible, render_summary, solve_with_cap, IlpSolution, DEFAULT_EXACTNESS_CAP,
    DEFAULT_NODE_CAP,
};
use sitrep::error::Error;
use sitrep::raster::{LabelMask, RasterImage};
use sitrep::report::{
    generate_report, keyword_frequency, parse_timestamp, region_tweet_proportion, render_text,
    KeywordQuery, RunTagged, TimeWindow,
};
use sitrep::seg::{train, Checkpoint, TrainConfig, TrainSample, Trainer};
use sitrep::synthetic::{generate_dataset, CLASS_COLORS};
use sitrep::tweets::{
    content_words, load_corpus, score_words, write_content_words_csv, CorpusStats, LoadedCorpus,
    Stoplist, TweetRecord,
};
use sitrep::Result;

#[derive(Parser)]
#[command(name = "sitrep", version, about = "Land-cover change and tweet-summary emergency reports")]
struct Cli {
    /// JSON file overriding the built-in training configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed overriding the training configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Base directory against which relative data paths resolve.
    #[arg(long, env = "SITREP_DATA_DIR", default_value = ".", global = true)]
    data_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the pixel segmenter on a synthetic color-coded dataset.
    Train(TrainArgs),
    /// Segment one raster with smooth-blended tiled inference.
    Predict(PredictArgs),
    /// Quantify and localize class changes between two label masks.
    Change(ChangeArgs),
    /// Select a tweet summary under a token budget.
    Summarize(SummarizeArgs),
    /// Count keyword matches in pre/post time windows.
    Frequency(FrequencyArgs),
    /// Run change analysis, summarization, and frequency analysis into one
    /// fused emergency report.
    Report(ReportArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Synthetic samples to generate.
    #[arg(long, default_value_t = 48)]
    samples: usize,

    /// Sample edge length in pixels (even, >= 2).
    #[arg(long, default_value_t = 32)]
    sample_size: usize,

    /// Channels per network block.
    #[arg(long, default_value_t = 16)]
    width: usize,

    /// Fraction of samples used for training (the rest validate).
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,

    /// Epochs to run (added on top of a resumed checkpoint's epochs).
    #[arg(long)]
    epochs: Option<usize>,

    /// Resume from this checkpoint instead of initializing fresh.
    #[arg(long)]
    resume: Option<PathBuf>,

    /// Directory receiving checkpoint.json (rewritten every epoch) and
    /// history.csv.
    #[arg(long, default_value = "train-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Input raster PNG.
    input: PathBuf,

    /// Trained checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,

    /// Output label-mask PNG (pixel value = class id).
    #[arg(long, short)]
    output: PathBuf,

    /// Also write a color-coded PNG for viewing.
    #[arg(long)]
    color: Option<PathBuf>,

    /// Sliding-window edge length (even, >= 4).
    #[arg(long, default_value_t = 64)]
    window_size: usize,

    /// Window overlap factor; stride = window size / subdivisions.
    #[arg(long, default_value_t = 2)]
    subdivisions: usize,

    /// Skip 8-way dihedral test-time augmentation.
    #[arg(long)]
    no_augmentation: bool,
}

#[derive(Args)]
struct ChangeArgs {
    /// Pre-event label mask PNG.
    #[arg(long)]
    pre: PathBuf,

    /// Post-event label mask PNG.
    #[arg(long)]
    post: PathBuf,

    /// Region annotation JSON (list of {name, bbox}).
    #[arg(long)]
    annotations: Option<PathBuf>,

    /// Keep changed regions of at least this many pixels.
    #[arg(long, default_value_t = 1)]
    min_area: usize,

    /// Output change-report JSON.
    #[arg(long, short)]
    output: PathBuf,

    /// Optional change-mask PNG (255 = changed).
    #[arg(long)]
    mask_output: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Tweet corpus in JSON Lines form.
    corpus: PathBuf,

    /// Summary length budget in tokens.
    #[arg(long, default_value_t = 250)]
    budget: usize,

    /// Largest corpus solved exactly; larger ones use the greedy fallback.
    #[arg(long, default_value_t = DEFAULT_EXACTNESS_CAP)]
    exact_cap: usize,

    /// Branch-and-bound node budget before the greedy fallback.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: u64,

    /// Replace the bundled stoplist (one lowercase word per line).
    #[arg(long)]
    stoplist: Option<PathBuf>,

    /// Also write the solution JSON here.
    #[arg(long)]
    solution: Option<PathBuf>,

    /// Also write the ranked content words as CSV here.
    #[arg(long)]
    words: Option<PathBuf>,
}

#[derive(Args)]
struct WindowArgs {
    /// Pre window start (e.g. "2019-03-01 00:00:00+00:00").
    #[arg(long)]
    pre_start: String,

    /// Pre window end (exclusive).
    #[arg(long)]
    pre_end: String,

    /// Post window start.
    #[arg(long)]
    post_start: String,

    /// Post window end (exclusive).
    #[arg(long)]
    post_end: String,
}

#[derive(Args)]
struct FrequencyArgs {
    /// Tweet corpus in JSON Lines form.
    corpus: PathBuf,

    /// Comma-separated keywords (hashtags literal, matching is
    /// case-insensitive substring over raw text).
    #[arg(long, value_delimiter = ',', required = true)]
    keywords: Vec<String>,

    #[command(flatten)]
    windows: WindowArgs,

    /// Write the frequency report JSON here as well as printing it.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Pre-event label mask PNG.
    #[arg(long)]
    pre: PathBuf,

    /// Post-event label mask PNG.
    #[arg(long)]
    post: PathBuf,

    /// Region annotation JSON (list of {name, bbox}).
    #[arg(long)]
    annotations: Option<PathBuf>,

    /// Keep changed regions of at least this many pixels.
    #[arg(long, default_value_t = 1)]
    min_area: usize,

    /// Tweet corpus in JSON Lines form.
    #[arg(long)]
    corpus: PathBuf,

    /// Region-to-keywords JSON map, e.g. {"Kochi": ["kochi", "#kochi"]}.
    #[arg(long)]
    regions: PathBuf,

    /// Comma-separated keywords for the frequency analysis.
    #[arg(long, value_delimiter = ',', required = true)]
    keywords: Vec<String>,

    #[command(flatten)]
    windows: WindowArgs,

    /// Summary length budget in tokens.
    #[arg(long, default_value_t = 250)]
    budget: usize,

    /// Largest corpus solved exactly.
    #[arg(long, default_value_t = DEFAULT_EXACTNESS_CAP)]
    exact_cap: usize,

    /// Branch-and-bound node budget.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: u64,

    /// Replace the bundled stoplist.
    #[arg(long)]
    stoplist: Option<PathBuf>,

    /// Run identifier stamped on every fused artifact.
    #[arg(long, default_value = "run-0")]
    run_id: String,

    /// Report timestamp; defaults to the current UTC time. Pass a fixed
    /// value for byte-reproducible output.
    #[arg(long)]
    timestamp: Option<String>,

    /// Output report JSON.
    #[arg(long, short)]
    output: PathBuf,

    /// Also write the text rendering here (it always prints to stdout).
    #[arg(long)]
    text_output: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Context {
        data_dir: cli.data_dir.clone(),
        config: load_config(&cli)?,
    };
    match cli.command {
        Command::Train(args) => run_train(&ctx, args),
        Command::Predict(args) => run_predict(&ctx, args),
        Command::Change(args) => run_change(&ctx, args),
        Command::Summarize(args) => run_summarize(&ctx, args),
        Command::Frequency(args) => run_frequency(&ctx, args),
        Command::Report(args) => run_report(&ctx, args),
    }
}

struct Context {
    data_dir: PathBuf,
    config: TrainConfig,
}

impl Context {
    /// Resolve a path against the data directory unless it is absolute.
    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.data_dir.join(path)
        }
    }
}

fn load_config(cli: &Cli) -> Result<TrainConfig> {
    let mut config = match &cli.config {
        None => TrainConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|_| Error::FileNotFound(path.clone()))?;
            serde_json::from_str(&text)?
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run_train(ctx: &Context, args: TrainArgs) -> Result<()> {
    let config = ctx.config.clone();
    let epochs = args.epochs.unwrap_or(config.epochs);
    if args.samples < 2 {
        return Err(Error::invalid_arg("samples", "need at least 2 for a train/val split"));
    }
    let boundary = ((args.samples as f64) * args.train_fraction).floor() as usize;
    if boundary == 0 || boundary >= args.samples {
        return Err(Error::invalid_arg(
            "train_fraction",
            format!("splits {} samples into {boundary} train", args.samples),
        ));
    }
    log::info!(
        "generating {} synthetic samples of {}x{} pixels (seed {})",
        args.samples,
        args.sample_size,
        args.sample_size,
        config.seed
    );
    let samples: Vec<TrainSample> =
        generate_dataset(args.samples, args.sample_size, args.sample_size, config.seed)?;
    let (train_set, val_set) = samples.split_at(boundary);

    let mut trainer = match &args.resume {
        Some(path) => {
            let ckpt = Checkpoint::load_json(&ctx.resolve(path))?;
            log::info!("resuming from epoch {}", ckpt.epoch);
            Trainer::from_checkpoint(&ckpt)?
        }
        None => Trainer::new(args.width, config)?,
    };

    let out_dir = ctx.resolve(&args.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let ckpt_path = out_dir.join("checkpoint.json");
    let history = train(&mut trainer, train_set, val_set, epochs, |trainer, stats| {
        log::info!(
            "epoch {}: train loss {:.6} miou {:.4} | val loss {:.6} miou {:.4}",
            stats.epoch,
            stats.train_loss,
            stats.train_miou,
            stats.val_loss,
            stats.val_miou
        );
        trainer.to_checkpoint().save_json(&ckpt_path)
    })?;
    write_history_csv_path(&out_dir.join("history.csv"), &history)?;
    match history.last() {
        Some(last) => println!(
            "trained through epoch {} (val mIoU {:.4}); checkpoint at {}",
            last.epoch,
            last.val_miou,
            ckpt_path.display()
        ),
        None => println!("no epochs requested; nothing written"),
    }
    Ok(())
}

fn write_history_csv_path(path: &Path, history: &[sitrep::seg::EpochStats]) -> Result<()> {
    if history.is_empty() {
        return Ok(());
    }
    sitrep::seg::write_history_csv(path, history)
}

fn run_predict(ctx: &Context, args: PredictArgs) -> Result<()> {
    let ckpt = Checkpoint::load_json(&ctx.resolve(&args.checkpoint))?;
    let trainer = Trainer::from_checkpoint(&ckpt)?;
    let image = RasterImage::load_png(&ctx.resolve(&args.input))?;
    let (probs, stats) = predict_smooth_with_stats(
        &image,
        args.window_size,
        args.subdivisions,
        !args.no_augmentation,
        |patch| trainer.net.predict(patch),
    )?;
    log::info!(
        "predicted {} windows (max blend deviation {:.2e})",
        stats.windows_predicted,
        stats.max_normalization_deviation
    );
    let mask = argmax_labels(&probs);
    mask.save_png(&ctx.resolve(&args.output))?;
    if let Some(color_path) = &args.color {
        colorize(&mask).save_png(&ctx.resolve(color_path))?;
    }
    println!("wrote {}", args.output.display());
    Ok(())
}

fn colorize(mask: &LabelMask) -> RasterImage {
    let mut image = RasterImage::filled(mask.width, mask.height, [0, 0, 0]);
    for y in 0..mask.height {
        for x in 0..mask.width {
            image.set_pixel(x, y, CLASS_COLORS[mask.class(x, y) as usize]);
        }
    }
    image
}

fn load_annotation_arg(ctx: &Context, path: &Option<PathBuf>) -> Result<Vec<RegionAnnotation>> {
    match path {
        Some(p) => load_annotations(&ctx.resolve(p)),
        None => Ok(Vec::new()),
    }
}

fn run_change(ctx: &Context, args: ChangeArgs) -> Result<()> {
    let pre = LabelMask::load_png(&ctx.resolve(&args.pre))?;
    let post = LabelMask::load_png(&ctx.resolve(&args.post))?;
    let annotations = load_annotation_arg(ctx, &args.annotations)?;
    let report = analyze_change(&pre, &post, args.min_area, &annotations)?;
    write_json(&ctx.resolve(&args.output), &report)?;
    if let Some(mask_path) = &args.mask_output {
        report.change_mask.save_png(&ctx.resolve(mask_path))?;
    }
    println!(
        "{} changed pixels in {} regions; wrote {}",
        report.changed_pixels,
        report.changed_regions.len(),
        args.output.display()
    );
    Ok(())
}

struct SummaryOutput {
    corpus: LoadedCorpus,
    solution: IlpSolution,
    lines: Vec<String>,
}

fn summarize_corpus(
    ctx: &Context,
    corpus_path: &Path,
    stoplist_path: &Option<PathBuf>,
    budget: usize,
    exact_cap: usize,
    node_cap: u64,
    words_out: &Option<PathBuf>,
) -> Result<SummaryOutput> {
    let corpus = load_corpus(&ctx.resolve(corpus_path))?;
    if !corpus.warnings.is_empty() {
        log::warn!("{} corpus lines skipped", corpus.warnings.len());
    }
    let stoplist = match stoplist_path {
        Some(p) => Stoplist::from_file(&ctx.resolve(p))?,
        None => Stoplist::embedded(),
    };
    let mut words = content_words(&corpus.records, &stoplist);
    let stats = CorpusStats::build(&corpus.records);
    score_words(&mut words, &stats)?;
    if let Some(path) = words_out {
        write_content_words_csv(&ctx.resolve(path), &words)?;
    }
    let instance = build_instance(&corpus.records, &words, budget)?;
    let solution = solve_with_cap(&instance, exact_cap, node_cap)?;
    debug_assert!(feasible(&solution, &instance)?.feasible);
    let lines = render_summary(&solution, &instance, &corpus.records)?;
    Ok(SummaryOutput { corpus, solution, lines })
}

fn run_summarize(ctx: &Context, args: SummarizeArgs) -> Result<()> {
    let out = summarize_corpus(
        ctx,
        &args.corpus,
        &args.stoplist,
        args.budget,
        args.exact_cap,
        args.node_cap,
        &args.words,
    )?;
    let json = serde_json::to_string_pretty(&out.solution)?;
    if let Some(path) = &args.solution {
        std::fs::write(ctx.resolve(path), format!("{json}\n"))?;
    }
    println!("{json}");
    println!();
    for line in &out.lines {
        println!("{line}");
    }
    Ok(())
}

fn parse_windows(windows: &WindowArgs) -> Result<(TimeWindow, TimeWindow)> {
    let parse = |label: &'static str, text: &str| {
        parse_timestamp(text)
            .ok_or_else(|| Error::invalid_arg(label, format!("unparseable timestamp {text:?}")))
    };
    let pre = TimeWindow::new(
        parse("pre_start", &windows.pre_start)?,
        parse("pre_end", &windows.pre_end)?,
    )?;
    let post = TimeWindow::new(
        parse("post_start", &windows.post_start)?,
        parse("post_end", &windows.post_end)?,
    )?;
    Ok((pre, post))
}

fn run_frequency(ctx: &Context, args: FrequencyArgs) -> Result<()> {
    let corpus = load_corpus(&ctx.resolve(&args.corpus))?;
    let (window_pre, window_post) = parse_windows(&args.windows)?;
    let query = KeywordQuery { keywords: args.keywords.clone(), window_pre, window_post };
    let report = keyword_frequency(&corpus.records, &query)?;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &args.output {
        std::fs::write(ctx.resolve(path), format!("{json}\n"))?;
    }
    println!("{json}");
    Ok(())
}

fn read_region_keywords(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(|_| Error::FileNotFound(path.to_path_buf()))?;
    Ok(serde_json::from_str(&text)?)
}

fn run_report(ctx: &Context, args: ReportArgs) -> Result<()> {
    let pre = LabelMask::load_png(&ctx.resolve(&args.pre))?;
    let post = LabelMask::load_png(&ctx.resolve(&args.post))?;
    let annotations = load_annotation_arg(ctx, &args.annotations)?;
    let change: ChangeReport = analyze_change(&pre, &post, args.min_area, &annotations)?;

    let summary = summarize_corpus(
        ctx,
        &args.corpus,
        &args.stoplist,
        args.budget,
        args.exact_cap,
        args.node_cap,
        &None,
    )?;
    let records: &[TweetRecord] = &summary.corpus.records;

    let (window_pre, window_post) = parse_windows(&args.windows)?;
    let query = KeywordQuery { keywords: args.keywords.clone(), window_pre, window_post };
    let frequency = keyword_frequency(records, &query)?;

    let region_keywords = read_region_keywords(&ctx.resolve(&args.regions))?;
    let proportions = region_tweet_proportion(records, &region_keywords)?;

    let generated_at = args
        .timestamp
        .clone()
        .unwrap_or_else(|| chrono::Utc::now().to_rfc3339());
    let report = generate_report(
        &RunTagged::new(&args.run_id, change),
        &RunTagged::new(&args.run_id, summary.lines),
        &RunTagged::new(&args.run_id, frequency),
        &RunTagged::new(&args.run_id, proportions),
        &generated_at,
    )?;

    write_json(&ctx.resolve(&args.output), &report)?;
    let text = render_text(&report);
    if let Some(path) = &args.text_output {
        std::fs::write(ctx.resolve(path), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, format!("{json}\n"))?;
    Ok(())
}
