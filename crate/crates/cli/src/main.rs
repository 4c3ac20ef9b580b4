use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gazette::analysis::{
    hcluster, phrase_series, readability_by_periodical, topic_distributions, write_merges_csv, write_phrase_csv,
    write_readability_csv, write_similarity_csv, write_topics_csv,
};
use gazette::dataset::{DatasetRow, TextType, Topic};
use gazette::eval::{f1_scores, write_report_csv};
use gazette::exec::{with_workers, Execution};
use gazette::imaging::{convert_bitonal, load_gray, plan_tiles_for};
use gazette::jsonl::{read_jsonl, write_jsonl};
use gazette::layout::io::{read_layouts, write_layouts};
use gazette::layout::{postprocess_bboxes, PageLayout};
use gazette::metrics::Denominator;
use gazette::ocr::{transcribe_all, OcrRecord};
use gazette::pipeline::{
    assemble_page, evaluate_test_set, ingest_labels, ocr_jobs, parse_page_id, run_pipeline, score_rows,
    write_score_csv, Hypotheses, LabelLine, PipelineConfig,
};

#[derive(Parser)]
#[command(name = "gazette", version, about = "Scanned newspaper pages to an ordered, classified text dataset")]
struct Cli {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (overrides the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for resampling (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report what would run without writing outputs.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert page images to low bit-depth PNGs at the target resolution.
    Convert(ConvertArgs),
    /// Clean raw detections into ordered, column-aligned layouts.
    Postprocess(IoArgs),
    /// Per-page coverage and overlap CSV with per-periodical summaries.
    Score(ScoreArgs),
    /// Attach tile plans to every box of a layout file.
    Plan(IoArgs),
    /// Transcribe every box of planned layouts.
    Ocr(OcrArgs),
    /// Build dataset rows and articles from OCR records.
    Assemble(AssembleArgs),
    /// Character error rates against a ground-truth set, or label F1.
    Evaluate(EvaluateArgs),
    /// Topic similarity, clustering, readability and phrase counts.
    Analyze(AnalyzeArgs),
    /// The whole pipeline, resumable, as configured.
    Run,
    /// Print the effective config as TOML.
    Config,
}

#[derive(Args)]
struct IoArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    /// An image file or a directory of images.
    #[arg(long)]
    input: PathBuf,
    /// Output directory; files keep their stem and get `.png`.
    #[arg(long)]
    output: PathBuf,
    /// Periodical whose overrides apply.
    #[arg(long, default_value = "")]
    periodical: String,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Divide by the print area instead of the whole page.
    #[arg(long)]
    print_area: bool,
}

#[derive(Args)]
struct OcrArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Directory the layouts' `image` fields are relative to.
    #[arg(long)]
    images: PathBuf,
}

#[derive(Args)]
struct AssembleArgs {
    /// OCR records JSONL.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    articles: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelField {
    TextType,
    Topic,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of `<id>.txt` references, optionally with `<id>.png` crops.
    #[arg(long, required_unless_present = "gold_labels")]
    ground_truth: Option<PathBuf>,
    /// Directory of `<id>.txt` transcripts.
    #[arg(long, conflicts_with_all = ["hypotheses_jsonl", "ocr"])]
    hypotheses: Option<PathBuf>,
    /// JSONL of `{id, text}` lines or OCR records.
    #[arg(long, conflicts_with = "ocr")]
    hypotheses_jsonl: Option<PathBuf>,
    /// Transcribe the crops with the configured backend.
    #[arg(long)]
    ocr: bool,
    /// Per-group CSV report.
    #[arg(long)]
    output: PathBuf,
    /// Also write every scored pair as JSONL.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Gold labels JSONL (switches to label F1 mode).
    #[arg(long, requires = "predicted_labels")]
    gold_labels: Option<PathBuf>,
    #[arg(long)]
    predicted_labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text-type")]
    field: LabelField,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Output directory for the CSVs.
    #[arg(long)]
    output: PathBuf,
    /// Phrases to count (defaults from the config).
    #[arg(long = "phrase")]
    phrases: Vec<String>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cfg.workers == 0 {
        bail!("workers must be at least 1");
    }
    Ok(cfg)
}

fn exec_for(workers: usize) -> Execution {
    if workers > 1 {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

fn image_files(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg" | "tif" | "tiff"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn convert(cfg: &PipelineConfig, args: &ConvertArgs, dry_run: bool) -> Result<()> {
    let image_cfg = cfg.image_for(&args.periodical);
    let files = image_files(&args.input)?;
    if dry_run {
        println!("would convert {} images into {}", files.len(), args.output.display());
        return Ok(());
    }
    let results = with_workers(cfg.workers, || {
        exec_for(cfg.workers).map(&files, |src| {
            let stem = src.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            convert_bitonal(src, &args.output.join(format!("{stem}.png")), &image_cfg)
        })
    });
    let mut failed = 0;
    for (src, r) in files.iter().zip(results) {
        match r {
            Ok(report) => log::info!("{}: {}x{}", src.display(), report.width, report.height),
            Err(e) => {
                log::error!("{e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} images failed", files.len());
    }
    Ok(())
}

fn postprocess(cfg: &PipelineConfig, args: &IoArgs, dry_run: bool) -> Result<()> {
    let pages = read_layouts(&args.input)?;
    if dry_run {
        println!("would post-process {} pages", pages.len());
        return Ok(());
    }
    let pattern = cfg.page_id_regex()?;
    let out = with_workers(cfg.workers, || {
        exec_for(cfg.workers).map(&pages, |p| {
            let info = parse_page_id(&pattern, &p.page_id);
            postprocess_bboxes(p.clone(), &cfg.postprocess_for(&info.periodical))
        })
    });
    write_layouts(&args.output, &out)?;
    Ok(())
}

fn score(cfg: &PipelineConfig, args: &ScoreArgs) -> Result<()> {
    let pages = read_layouts(&args.io.input)?;
    let denominator = if args.print_area { Denominator::PrintArea } else { Denominator::Page };
    let rows = with_workers(cfg.workers, || score_rows(&pages, &cfg.page_id_regex().expect("validated"), denominator, exec_for(cfg.workers)));
    write_score_csv(&args.io.output, &rows)?;
    Ok(())
}

fn plan(cfg: &PipelineConfig, args: &IoArgs) -> Result<()> {
    let pattern = cfg.page_id_regex()?;
    let mut pages = read_layouts(&args.input)?;
    for p in pages.iter_mut() {
        let image_cfg = cfg.image_for(&parse_page_id(&pattern, &p.page_id).periodical);
        for b in p.boxes.iter_mut() {
            b.tiles = Some(plan_tiles_for(b, &image_cfg));
        }
    }
    write_layouts(&args.output, &pages)?;
    Ok(())
}

fn ocr(cfg: &PipelineConfig, args: &OcrArgs, dry_run: bool) -> Result<()> {
    let pages: Vec<PageLayout> = read_layouts(&args.io.input)?;
    let mut jobs = Vec::new();
    for p in &pages {
        let path = args.images.join(&p.image);
        let img = load_gray(&path)?;
        jobs.extend(ocr_jobs(p, Arc::new(img), cfg));
    }
    let requests: usize = jobs.iter().map(|j| j.plan.tiles.len()).sum();
    if dry_run {
        println!("would send at least {requests} requests for {} boxes", jobs.len());
        return Ok(());
    }
    let backend = cfg.ocr.build()?;
    let records = transcribe_all(&jobs, backend.as_ref(), &cfg.ocr, cfg.workers)?;
    let tokens: u64 = records.iter().map(|r| r.prompt_tokens + r.completion_tokens).sum();
    log::info!("{} boxes, {} tokens", records.len(), tokens);
    write_jsonl(&args.io.output, &records)?;
    Ok(())
}

fn assemble(cfg: &PipelineConfig, args: &AssembleArgs) -> Result<()> {
    let records: Vec<OcrRecord> = read_jsonl(&args.input)?;
    let pattern = cfg.page_id_regex()?;
    let mut pages: Vec<&str> = records.iter().map(|r| r.page_id.as_str()).collect();
    pages.sort();
    pages.dedup();
    let (mut rows, mut articles) = (Vec::new(), Vec::new());
    for page in pages {
        let recs: Vec<OcrRecord> = records.iter().filter(|r| r.page_id == page).cloned().collect();
        let (r, a) = assemble_page(page, &recs, cfg, &pattern);
        rows.extend(r);
        articles.extend(a);
    }
    if let Some(labels) = &args.labels {
        let report = ingest_labels(&mut rows, labels)?;
        log::info!("{} rows labelled, {} unknown ids", report.applied, report.unknown_ids.len());
    }
    write_jsonl(&args.dataset, &rows)?;
    write_jsonl(&args.articles, &articles)?;
    Ok(())
}

fn label_values(path: &Path, field: LabelField) -> Result<HashMap<String, String>> {
    let lines: Vec<LabelLine> = read_jsonl(path)?;
    Ok(lines
        .into_iter()
        .filter_map(|l| {
            let v = match field {
                LabelField::TextType => l.text_type.map(|t| t.label().to_string()),
                LabelField::Topic => l.topic.map(|t| t.label().to_string()),
            };
            v.map(|v| (l.box_id, v))
        })
        .collect())
}

fn evaluate(cfg: &PipelineConfig, args: &EvaluateArgs) -> Result<()> {
    if let (Some(gold), Some(pred)) = (&args.gold_labels, &args.predicted_labels) {
        let g = label_values(gold, args.field)?;
        let p = label_values(pred, args.field)?;
        let mut ids: Vec<&String> = g.keys().filter(|id| p.contains_key(*id)).collect();
        ids.sort();
        let gold_seq: Vec<&str> = ids.iter().map(|id| g[*id].as_str()).collect();
        let pred_seq: Vec<&str> = ids.iter().map(|id| p[*id].as_str()).collect();
        let classes: Vec<&str> = match args.field {
            LabelField::TextType => TextType::ALL.iter().map(|t| t.label()).collect(),
            LabelField::Topic => Topic::ALL.iter().map(|t| t.label()).collect(),
        };
        let result = f1_scores(&gold_seq, &pred_seq, &classes)?;
        std::fs::write(&args.output, serde_json::to_vec_pretty(&result)?)
            .with_context(|| format!("writing {}", args.output.display()))?;
        println!("{} items: micro F1 {:.4}, macro F1 {:.4}", ids.len(), result.micro_f1, result.macro_f1);
        return Ok(());
    }
    let gt = args.ground_truth.as_ref().context("--ground-truth is required")?;
    let hyps = match (&args.hypotheses, &args.hypotheses_jsonl, args.ocr) {
        (Some(d), _, _) => Hypotheses::Dir(d.clone()),
        (_, Some(f), _) => Hypotheses::Jsonl(f.clone()),
        (_, _, true) => Hypotheses::Backend,
        _ => bail!("give --hypotheses, --hypotheses-jsonl or --ocr"),
    };
    let (pairs, report) = evaluate_test_set(gt, &hyps, cfg, None, cfg.workers)?;
    write_report_csv(&args.output, &report)?;
    if let Some(p) = &args.pairs {
        write_jsonl(p, &pairs)?;
    }
    for g in &report {
        println!("{}: {} pairs, median CER {:.4}, mean CER {:.4}", g.group, g.pairs, g.median_cer, g.mean_cer);
    }
    Ok(())
}

fn analyze(cfg: &PipelineConfig, args: &AnalyzeArgs) -> Result<()> {
    let rows: Vec<DatasetRow> = read_jsonl(&args.dataset)?;
    let out = &args.output;
    let dists = topic_distributions(&rows);
    if !dists.is_empty() {
        write_topics_csv(&out.join("topics.csv"), &dists)?;
        write_similarity_csv(&out.join("similarity.csv"), &dists)?;
    }
    if dists.len() >= 2 {
        write_merges_csv(&out.join("clusters.csv"), &hcluster(&dists)?)?;
    }
    let exec = exec_for(cfg.workers);
    let readability = with_workers(cfg.workers, || {
        readability_by_periodical(&rows, cfg.analysis.bootstrap_samples, cfg.seed, exec)
    })?;
    write_readability_csv(&out.join("readability.csv"), &readability)?;
    let phrases = if args.phrases.is_empty() { cfg.analysis.phrases.clone() } else { args.phrases.clone() };
    write_phrase_csv(&out.join("phrases.csv"), &phrase_series(&rows, &phrases))?;
    Ok(())
}

fn run(cfg: &PipelineConfig, dry_run: bool) -> Result<ExitCode> {
    let manifest = run_pipeline(cfg, cfg.workers, dry_run)?;
    for (stage, n) in &manifest.last_run.executed {
        println!("{stage}: {} {n} pages", if dry_run { "would run" } else { "ran" });
    }
    if dry_run {
        return Ok(ExitCode::SUCCESS);
    }
    println!(
        "{}/{} pages complete, {} rows, {} articles, {} tokens ({} requests)",
        manifest.completed_pages,
        manifest.page_count,
        manifest.row_count,
        manifest.article_count,
        manifest.tokens.total_tokens,
        manifest.tokens.requests
    );
    if manifest.succeeded() {
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!("{} pages failed:", manifest.failures.len());
    for (page, e) in &manifest.failures {
        eprintln!("  {page}: {e}");
    }
    Ok(ExitCode::FAILURE)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|cfg| {
        match &cli.command {
            Command::Convert(a) => convert(&cfg, a, cli.dry_run),
            Command::Postprocess(a) => postprocess(&cfg, a, cli.dry_run),
            Command::Score(a) => score(&cfg, a),
            Command::Plan(a) => plan(&cfg, a),
            Command::Ocr(a) => ocr(&cfg, a, cli.dry_run),
            Command::Assemble(a) => assemble(&cfg, a),
            Command::Evaluate(a) => evaluate(&cfg, a),
            Command::Analyze(a) => analyze(&cfg, a),
            Command::Run => return run(&cfg, cli.dry_run),
            Command::Config => {
                print!("{}", toml_text(&cfg)?);
                Ok(())
            }
        }
        .map(|_| ExitCode::SUCCESS)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn toml_text(cfg: &PipelineConfig) -> Result<String> {
    Ok(cfg.to_toml()?)
}
