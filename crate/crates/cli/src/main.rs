use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rmopp::io::{
    coco_document, load_detections, load_ground_truth, read_sweep_csv, write_detections,
    write_detections_to, write_frontier_json, write_frontier_json_to, write_ground_truth,
    write_json, write_sweep_csv, write_sweep_csv_to, CategoryMapping, CellRecord,
    GroundTruthFormat,
};
use rmopp::metrics::coco_ap_with;
use rmopp::{
    ap_registry, filter_registry, filter_then_nms, generate_synthetic, match_detections,
    pareto_frontier, prf, run_sweep, run_sweep_with_workers, select_best, validate_dataset,
    Dataset, Detection, Error, FilterParams, GammaCell, GridAxis, GroundTruthBox, NmsConfig,
    RankBy, SelectionObjective, SweepConfig, SynthConfig, Target,
};
use serde_json::json;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "rmopp",
    version,
    about = "Likelihood-ratio filtering, NMS and threshold sweeps for detector output"
)]
struct Cli {
    /// More log output on stderr (-v info, -vv debug). RUST_LOG also works.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter detections at fixed thresholds, then apply NMS; writes JSONL.
    Filter(FilterCmd),
    /// Precision, recall, F1 and COCO-style AP at fixed thresholds.
    Eval(EvalCmd),
    /// Evaluate every (gamma1, gamma2) cell of a grid; writes CSV.
    Sweep(SweepCmd),
    /// Pareto frontier of a sweep CSV and the best cell per objective.
    Frontier(FrontierCmd),
    /// Generate a seeded synthetic dataset.
    Synth(SynthCmd),
    /// List registered filters and AP integrators.
    List,
}

#[derive(Args)]
struct DetectionArgs {
    /// Detections, one JSON record per line.
    #[arg(short, long)]
    detections: PathBuf,
    /// Divide each probability vector by its sum instead of rejecting it.
    #[arg(long)]
    renormalize: bool,
}

#[derive(Args)]
struct GroundTruthArgs {
    /// Ground-truth annotations.
    #[arg(short, long)]
    gt: PathBuf,
    #[arg(long, default_value = "coco", value_parser = parse_gt_format)]
    gt_format: GroundTruthFormat,
}

#[derive(Args)]
struct NmsArgs {
    /// Suppress a box when its IoU with a kept box exceeds this.
    #[arg(long, default_value_t = 0.5)]
    nms_iou: f64,
    /// Suppress across classes instead of within each class.
    #[arg(long)]
    class_agnostic: bool,
    /// NMS ranking score: legacy-score (p1 * objectness) or objectness.
    #[arg(long, default_value = "legacy-score", value_parser = parse_rank_by)]
    rank_by: RankBy,
}

impl NmsArgs {
    fn config(&self) -> rmopp::Result<NmsConfig> {
        let cfg = NmsConfig {
            eta: self.nms_iou,
            class_wise: !self.class_agnostic,
            rank_by: self.rank_by,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ThresholdArgs {
    /// Registered filter name (see `rmopp list`).
    #[arg(long, default_value = "rmopp")]
    filter: String,
    /// Class-ratio threshold p1/p2.
    #[arg(long, default_value_t = 1.0)]
    g1: f64,
    /// Detection-ratio threshold objectness/p1.
    #[arg(long, default_value_t = 0.0)]
    g2: f64,
    /// Score threshold for the legacy filter.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
}

impl ThresholdArgs {
    fn params(&self) -> FilterParams {
        FilterParams {
            gamma1: self.g1,
            gamma2: self.g2,
            gamma: self.gamma,
        }
    }
}

#[derive(Args)]
struct FilterCmd {
    #[command(flatten)]
    input: DetectionArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[command(flatten)]
    nms: NmsArgs,
    /// Output JSONL (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalCmd {
    #[command(flatten)]
    input: DetectionArgs,
    #[command(flatten)]
    truth: GroundTruthArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[command(flatten)]
    nms: NmsArgs,
    /// IoU a detection must exceed to match a ground-truth box.
    #[arg(long, default_value_t = 0.5)]
    match_iou: f64,
    /// AP integration method (see `rmopp list`).
    #[arg(long, default_value = "coco101")]
    ap_method: String,
    /// Output JSON report (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    input: DetectionArgs,
    #[command(flatten)]
    truth: GroundTruthArgs,
    /// gamma1 axis as lo:hi:step.
    #[arg(long, default_value = "1:10:0.5", value_parser = parse_axis)]
    g1: GridAxis,
    /// gamma2 axis as lo:hi:step.
    #[arg(long, default_value = "0.1:1:0.05", value_parser = parse_axis)]
    g2: GridAxis,
    #[command(flatten)]
    nms: NmsArgs,
    #[arg(long, default_value_t = 0.5)]
    match_iou: f64,
    /// Worker threads; output does not depend on this.
    #[arg(long, env = "RMOPP_WORKERS")]
    workers: Option<usize>,
    /// Output CSV (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FrontierCmd {
    /// CSV written by `rmopp sweep`.
    results: PathBuf,
    /// precision, recall, f1 or all.
    #[arg(long, default_value = "all")]
    objective: String,
    /// Cells below this F1 are not eligible for selection.
    #[arg(long, default_value_t = 0.5)]
    min_f1: f64,
    /// Frontier JSON path. When omitted the JSON goes to stdout and the
    /// summary to stderr.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the selected cells as JSON.
    #[arg(long)]
    selection: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long, default_value_t = 100)]
    images: usize,
    #[arg(long, default_value_t = 5)]
    objects: usize,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    /// Corner noise standard deviation, pixels.
    #[arg(long, default_value_t = 3.0)]
    loc_noise: f64,
    #[arg(long, default_value_t = 0.1)]
    confusion: f64,
    /// Expected background detections per image.
    #[arg(long, default_value_t = 2.0)]
    spurious: f64,
    /// Raw detections per object.
    #[arg(long, default_value_t = 1)]
    per_object: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output detections JSONL.
    #[arg(long)]
    detections: PathBuf,
    /// Output ground truth.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = "coco", value_parser = parse_gt_format)]
    gt_format: GroundTruthFormat,
}

fn parse_axis(s: &str) -> Result<GridAxis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_gt_format(s: &str) -> Result<GroundTruthFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_rank_by(s: &str) -> Result<RankBy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn output_writer(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Joined dataset plus the COCO category mapping, when the annotations had one.
fn load_dataset(
    input: &DetectionArgs,
    truth: &GroundTruthArgs,
) -> rmopp::Result<(Dataset, Option<Vec<CategoryMapping>>)> {
    let dets = load_detections(&input.detections, input.renormalize)?;
    let gts = load_ground_truth(&truth.gt, truth.gt_format)?;
    if gts.crowd_skipped > 0 {
        warn!("skipped {} crowd annotations", gts.crowd_skipped);
    }
    let num_classes = match (dets.num_classes, gts.num_classes()) {
        (Some(d), Some(g)) if d != g => {
            return Err(Error::InvalidInput(format!(
                "detections carry {d} class probabilities but the annotations list {g} categories"
            )))
        }
        (Some(n), _) | (None, Some(n)) => n,
        (None, None) => {
            let max_class = gts
                .by_image
                .values()
                .flatten()
                .map(|g| g.class_index + 1)
                .max();
            max_class.unwrap_or(0).max(2)
        }
    };
    info!(
        "loaded {} detections and {} ground-truth boxes over {} classes",
        dets.len(),
        gts.len(),
        num_classes
    );
    let data = validate_dataset(
        Dataset::from_parts(num_classes, dets.by_image, gts.by_image),
        input.renormalize,
    )?;
    Ok((data, gts.categories))
}

fn run_filter(cmd: FilterCmd) -> rmopp::Result<()> {
    let filter = filter_registry().build(&cmd.thresholds.filter, &cmd.thresholds.params())?;
    let nms = cmd.nms.config()?;
    let dets = load_detections(&cmd.input.detections, cmd.input.renormalize)?;
    let mut kept: Vec<Detection> = Vec::new();
    for image in dets.by_image.values() {
        kept.extend(filter_then_nms(image, filter.as_ref(), &nms));
    }
    info!("kept {} of {} detections", kept.len(), dets.len());
    match &cmd.output {
        Some(p) => write_detections(p, &kept),
        None => write_detections_to(output_writer(None)?, &kept),
    }
}

fn run_eval(cmd: EvalCmd) -> rmopp::Result<()> {
    let filter = filter_registry().build(&cmd.thresholds.filter, &cmd.thresholds.params())?;
    let integrator = ap_registry().build(&cmd.ap_method, &())?;
    let nms = cmd.nms.config()?;
    if !(cmd.match_iou > 0.0 && cmd.match_iou < 1.0) {
        return Err(Error::Config(format!(
            "--match-iou must lie in (0, 1), got {}",
            cmd.match_iou
        )));
    }
    let (data, categories) = load_dataset(&cmd.input, &cmd.truth)?;

    let kept: Vec<(Vec<Detection>, &[GroundTruthBox])> = data
        .images
        .values()
        .map(|im| {
            (
                filter_then_nms(&im.detections, filter.as_ref(), &nms),
                &im.ground_truth[..],
            )
        })
        .collect();
    let pairs: Vec<(&[Detection], &[GroundTruthBox])> =
        kept.iter().map(|(d, g)| (d.as_slice(), *g)).collect();
    let counts = match_detections(pairs.iter().copied(), cmd.match_iou);
    let scores = prf(counts);
    let ap = coco_ap_with(&pairs, integrator.as_ref());

    let report = json!({
        "filter": filter.name(),
        "gamma1": cmd.thresholds.g1,
        "gamma2": cmd.thresholds.g2,
        "gamma": cmd.thresholds.gamma,
        "nms": nms,
        "match_iou": cmd.match_iou,
        "detections": data.num_detections(),
        "ground_truth": data.num_ground_truth(),
        "kept": kept.iter().map(|(d, _)| d.len()).sum::<usize>(),
        "counts": counts,
        "precision": scores.precision,
        "recall": scores.recall,
        "f1": scores.f1,
        "ap": ap,
        "categories": categories,
    });
    match &cmd.output {
        Some(p) => write_json(p, &report),
        None => {
            let mut w = output_writer(None)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn run_sweep_cmd(cmd: SweepCmd) -> rmopp::Result<()> {
    let cfg = SweepConfig {
        gamma1: cmd.g1,
        gamma2: cmd.g2,
        nms: cmd.nms.config()?,
        match_iou: cmd.match_iou,
    };
    cfg.validate()?;
    let (data, _) = load_dataset(&cmd.input, &cmd.truth)?;
    info!("sweeping {} cells", cfg.num_cells());
    let cells = match cmd.workers {
        Some(0) => return Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => run_sweep_with_workers(&data, &cfg, n)?,
        None => run_sweep(&data, &cfg)?,
    };
    match &cmd.output {
        Some(p) => write_sweep_csv(p, &cells),
        None => write_sweep_csv_to(output_writer(None)?, &cells),
    }
}

fn parse_objectives(s: &str) -> rmopp::Result<Vec<Target>> {
    if s.eq_ignore_ascii_case("all") {
        Ok(Target::ALL.to_vec())
    } else {
        Ok(vec![s.parse()?])
    }
}

fn summary_table(
    frontier: &[GammaCell],
    selections: &[(Target, rmopp::Result<GammaCell>)],
    min_f1: f64,
) -> String {
    let mut out = format!(
        "{:<10} {:>9} {:>7} {:>6} {:>7} {:>7}\n",
        "objective", "precision", "recall", "f1", "gamma1", "gamma2"
    );
    for (target, sel) in selections {
        match sel {
            Ok(c) => out.push_str(&format!(
                "{:<10} {:>9.3} {:>7.3} {:>6.3} {:>7} {:>7}\n",
                target.to_string(),
                c.scores.precision,
                c.scores.recall,
                c.scores.f1,
                trim(c.gamma1),
                trim(c.gamma2)
            )),
            Err(e) => out.push_str(&format!("{:<10} {e}\n", target.to_string())),
        }
    }
    out.push_str(&format!(
        "frontier: {} cells; selection requires F1 >= {min_f1}\n",
        frontier.len()
    ));
    out
}

/// Grid values such as 0.15000000000000002 printed as 0.15.
fn trim(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Returns whether every requested objective was feasible.
fn run_frontier(cmd: FrontierCmd) -> rmopp::Result<bool> {
    let targets = parse_objectives(&cmd.objective)?;
    let cells = read_sweep_csv(&cmd.results)?;
    let frontier = pareto_frontier(&cells);
    let selections: Vec<(Target, rmopp::Result<GammaCell>)> = targets
        .iter()
        .map(|&t| {
            let obj = SelectionObjective {
                target: t,
                min_f1: cmd.min_f1,
            };
            (t, select_best(&cells, obj))
        })
        .collect();

    let table = summary_table(&frontier, &selections, cmd.min_f1);
    match &cmd.output {
        Some(p) => {
            write_frontier_json(p, &frontier)?;
            print!("{table}");
        }
        None => {
            write_frontier_json_to(output_writer(None)?, &frontier)?;
            eprint!("{table}");
        }
    }
    if let Some(p) = &cmd.selection {
        let doc: BTreeMap<String, serde_json::Value> = selections
            .iter()
            .map(|(t, sel)| {
                let v = match sel {
                    Ok(c) => serde_json::to_value(CellRecord::from(c)).expect("cell serializes"),
                    Err(_) => serde_json::Value::Null,
                };
                (t.to_string(), v)
            })
            .collect();
        write_json(p, &json!({ "min_f1": cmd.min_f1, "selected": doc }))?;
    }
    Ok(selections.iter().all(|(_, s)| s.is_ok()))
}

fn run_synth(cmd: SynthCmd) -> rmopp::Result<()> {
    let cfg = SynthConfig {
        num_images: cmd.images,
        objects_per_image: cmd.objects,
        num_classes: cmd.classes,
        loc_noise_sigma: cmd.loc_noise,
        confusion_rate: cmd.confusion,
        spurious_rate: cmd.spurious,
        detections_per_object: cmd.per_object,
        seed: cmd.seed,
    };
    let ds = generate_synthetic(&cfg)?;
    write_detections(
        &cmd.detections,
        ds.images.values().flat_map(|im| &im.detections),
    )?;
    match cmd.gt_format {
        GroundTruthFormat::Native => {
            write_ground_truth(&cmd.gt, ds.images.values().flat_map(|im| &im.ground_truth))?
        }
        GroundTruthFormat::Coco => {
            let by_image: BTreeMap<String, Vec<GroundTruthBox>> = ds
                .images
                .iter()
                .map(|(id, im)| (id.clone(), im.ground_truth.clone()))
                .collect();
            write_json(&cmd.gt, &coco_document(&by_image, cfg.num_classes))?
        }
    }
    info!(
        "wrote {} detections and {} ground-truth boxes",
        ds.num_detections(),
        ds.num_ground_truth()
    );
    Ok(())
}

fn run_list() {
    println!("filters:");
    for (name, summary) in filter_registry().describe() {
        println!("  {name:<10} {summary}");
    }
    println!("AP methods:");
    for (name, summary) in ap_registry().describe() {
        println!("  {name:<10} {summary}");
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownStrategy { .. } => EXIT_USAGE,
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    let result = match cli.command {
        Command::Filter(c) => run_filter(c),
        Command::Eval(c) => run_eval(c),
        Command::Sweep(c) => run_sweep_cmd(c),
        Command::Frontier(c) => match run_frontier(c) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_INFEASIBLE),
            Err(e) => Err(e),
        },
        Command::Synth(c) => run_synth(c),
        Command::List => {
            run_list();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
