use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ripplefeed::commands::{self, cmd_eval, cmd_train, save_outcome};
use ripplefeed::control::ControlConfig;
use ripplefeed::counter::{CrossingDirection, DEFAULT_RHO, DEFAULT_WINDOW};
use ripplefeed::detection::{read_stream, read_truth, write_stream, write_truth, FrameRecord};
use ripplefeed::pipeline::{
    self, index_frame_files, ActivitySource, ImageActivity, PipelineConfig, PyramidActivity,
};
use ripplefeed::regressor::{
    EvalFormula, EvalSet, LrSchedule, ModelVariant, Persistence, Predictor, TrainConfig,
    TruthPredictor, DEFAULT_GATE,
};
use ripplefeed::synth::{render_frame, synth_scenario, SynthConfig};
use ripplefeed::texture::{self, GrayImage, ReferenceExtractor};

#[derive(Parser)]
#[command(
    name = "ripplefeed",
    version,
    about = "Nutriment counting and ripple activity for fish-feeding control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full per-frame pipeline and write counts, activity, decisions and timing.
    Run(RunArgs),
    /// Train the next-frame networks of one model variant.
    Train(TrainArgs),
    /// Compare trained models against annotated next positions.
    Eval(EvalArgs),
    /// Generate a synthetic detection stream with ground truth.
    Synth(SynthArgs),
    /// Compute the ripple activity index per frame.
    Activity(ActivityArgs),
}

#[derive(Args)]
struct TextureArgs {
    /// Directory of frames named `<index>.pgm` (or `.ppm`).
    #[arg(long, conflicts_with = "pyramids")]
    images: Option<PathBuf>,
    /// Directory of precomputed feature pyramids named `<index>.pyr`.
    #[arg(long)]
    pyramids: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    detections: PathBuf,
    #[command(flatten)]
    texture: TextureArgs,
    #[arg(long, requires = "my")]
    mx: Option<PathBuf>,
    #[arg(long, requires = "mx")]
    my: Option<PathBuf>,
    /// Replay annotated next positions instead of model predictions.
    #[arg(long, conflicts_with_all = ["mx", "persistence"])]
    truth: Option<PathBuf>,
    /// Predict every nutriment stays where it is.
    #[arg(long, conflicts_with = "mx")]
    persistence: bool,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Count crossings from the ripple side toward the machine instead.
    #[arg(long)]
    reverse: bool,
    #[arg(long, allow_hyphen_values = true)]
    act_on: f64,
    #[arg(long, allow_hyphen_values = true)]
    act_off: f64,
    #[arg(long)]
    count_max: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    detections: PathBuf,
    /// R1..R6, or `all`.
    #[arg(long, default_value = "R1")]
    variant: String,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// `constant` or `linear` (decay toward zero).
    #[arg(long)]
    schedule: Option<LrSchedule>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from 1e6 iterations at a constant learning rate of 1e-7.
    #[arg(long = "paper-defaults")]
    long_preset: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
    /// Association radius in normalized units.
    #[arg(long, default_value_t = DEFAULT_GATE)]
    gate: f64,
    #[arg(long, required_unless_present = "dry_run")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    detections: PathBuf,
    /// Annotation sidecar with true next positions.
    #[arg(long)]
    truth: PathBuf,
    /// Directory holding `<name>_mx.model` / `<name>_my.model` pairs.
    #[arg(long)]
    models_dir: PathBuf,
    /// Add the persistence baseline as an extra row.
    #[arg(long)]
    persistence: bool,
    #[arg(long, default_value = "euclidean")]
    eval_formula: EvalFormula,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 418)]
    frames: usize,
    #[arg(long, default_value_t = 60)]
    tracks: usize,
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    #[arg(long, default_value_t = 1920.0)]
    width: f64,
    #[arg(long, default_value_t = 1080.0)]
    height: f64,
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also render PGM frames into `<out>/images`.
    #[arg(long)]
    images: bool,
}

#[derive(Args)]
struct ActivityArgs {
    #[arg(long)]
    detections: PathBuf,
    #[command(flatten)]
    texture: TextureArgs,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn read_detections(path: &Path) -> anyhow::Result<Vec<FrameRecord>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_stream(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn read_annotations(path: &Path) -> anyhow::Result<Vec<ripplefeed::detection::TruthRecord>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_truth(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn image_loader(
    dir: &Path,
) -> anyhow::Result<impl FnMut(u64) -> ripplefeed::Result<Option<GrayImage>>> {
    let mut files: BTreeMap<u64, PathBuf> = index_frame_files(dir, "ppm")?;
    files.extend(index_frame_files(dir, "pgm")?);
    Ok(move |frame| {
        files
            .get(&frame)
            .map(|p| texture::load_image(p))
            .transpose()
    })
}

fn activity_source(args: &TextureArgs) -> anyhow::Result<Option<Box<dyn ActivitySource>>> {
    Ok(match (&args.images, &args.pyramids) {
        (Some(dir), _) => Some(Box::new(ImageActivity::new(
            image_loader(dir)?,
            ReferenceExtractor::default(),
        ))),
        (None, Some(dir)) => Some(Box::new(PyramidActivity::from_dir(dir)?)),
        (None, None) => None,
    })
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let records = read_detections(&args.detections)?;
    let predictor: Box<dyn Predictor> = match (&args.mx, &args.my, &args.truth) {
        (Some(mx), Some(my), _) => Box::new(commands::load_pair(mx, my).context("loading models")?),
        (_, _, Some(truth)) => Box::new(TruthPredictor::new(&read_annotations(truth)?)),
        _ if args.persistence => Box::new(Persistence),
        _ => bail!("one of --mx/--my, --truth or --persistence is required"),
    };
    let mut config = PipelineConfig::new(ControlConfig::new(
        args.act_on,
        args.act_off,
        args.count_max,
    )?);
    config.rho = args.rho;
    config.window = args.window;
    if args.reverse {
        config.direction = CrossingDirection::TowardMachine;
    }
    let mut source = activity_source(&args.texture)?;
    let out = pipeline::run(&records, predictor, source.as_deref_mut(), &config)?;
    pipeline::write_outputs(&args.out, &out)?;
    let crossings: u64 = out.frames.iter().map(|f| u64::from(f.raw_count)).sum();
    println!("frames: {}  crossings: {crossings}", out.frames.len());
    print!("{}", out.timing);
    Ok(())
}

fn train_config(args: &TrainArgs) -> TrainConfig {
    let mut c = if args.long_preset {
        TrainConfig::reference_preset()
    } else {
        TrainConfig::default()
    };
    if let Some(i) = args.iterations {
        c.iterations = i;
    }
    if let Some(lr) = args.lr {
        c.learning_rate = lr;
    }
    if let Some(s) = args.schedule {
        c.schedule = s;
    }
    if let Some(b) = args.batch_size {
        c.batch_size = b;
    }
    c.seed = args.seed;
    c
}

fn train_cmd(args: TrainArgs) -> anyhow::Result<()> {
    let variants: Vec<ModelVariant> = if args.variant.eq_ignore_ascii_case("all") {
        ModelVariant::ALL.to_vec()
    } else {
        vec![args.variant.parse()?]
    };
    let config = train_config(&args);
    config.validate()?;
    println!("{config}");
    if args.dry_run {
        return Ok(());
    }
    let out = args.out.expect("--out is required without --dry-run");
    let records = read_detections(&args.detections)?;
    for variant in variants {
        let outcome = cmd_train(&records, variant, &config, args.gate)?;
        save_outcome(&out, &outcome)?;
        println!(
            "{}: {} samples, final loss mx {:.6e} my {:.6e}",
            variant.name(),
            outcome.samples,
            outcome.mx.loss_curve.last().copied().unwrap_or(f64::NAN),
            outcome.my.loss_curve.last().copied().unwrap_or(f64::NAN),
        );
    }
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> anyhow::Result<()> {
    let records = read_detections(&args.detections)?;
    let truth = read_annotations(&args.truth)?;
    let set = EvalSet::build(&records, &truth)?;
    let models = commands::discover_models(&args.models_dir)?;
    let mut named: Vec<(String, &dyn Predictor)> = models
        .iter()
        .map(|(n, m)| (n.clone(), m as &dyn Predictor))
        .collect();
    if args.persistence {
        named.push(("persistence".into(), &Persistence));
    }
    if named.is_empty() {
        bail!("no model pairs found in {}", args.models_dir.display());
    }
    let report = cmd_eval(&named, &set, args.eval_formula)?;
    print!("{report}");
    println!("best: {}", report.rows[report.best].name);
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> anyhow::Result<()> {
    let mut cfg = SynthConfig::for_frame(args.width, args.height);
    cfg.frames = args.frames;
    cfg.tracks = args.tracks;
    cfg.speed = args.speed;
    cfg.ripple_jitter = args.jitter;
    cfg.ripple_dropout = args.dropout;
    let scenario = synth_scenario(&cfg, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    write_stream(
        BufWriter::new(File::create(args.out.join("detections.jsonl"))?),
        &scenario.records,
    )?;
    write_truth(
        BufWriter::new(File::create(args.out.join("truth.jsonl"))?),
        &scenario.truth_records(),
    )?;
    if args.images {
        let dir = args.out.join("images");
        std::fs::create_dir_all(&dir)?;
        for (i, r) in scenario.records.iter().enumerate() {
            texture::save_pgm(
                &render_frame(&scenario, i)?,
                &dir.join(format!("{}.pgm", r.frame)),
            )?;
        }
    }
    let crossings: u64 = scenario
        .crossing_counts()
        .iter()
        .map(|&c| u64::from(c))
        .sum();
    println!(
        "frames: {}  tracks: {}  crossings: {crossings}",
        scenario.records.len(),
        scenario.tracks.len()
    );
    Ok(())
}

fn activity_cmd(args: ActivityArgs) -> anyhow::Result<()> {
    let records = read_detections(&args.detections)?;
    let sigmas: Vec<Option<f64>> = match (&args.texture.images, &args.texture.pyramids) {
        (Some(dir), _) => commands::activity_for_frames(
            &records,
            &ReferenceExtractor::default(),
            image_loader(dir)?,
        )?,
        (None, Some(dir)) => {
            let mut src = PyramidActivity::from_dir(dir)?;
            let mut tracker = ripplefeed::detection::PairTracker::new();
            let mut out = Vec::with_capacity(records.len());
            for r in &records {
                src.prepare(r.frame)?;
                out.push(match tracker.update(r).filter(|p| p.is_usable()) {
                    Some(pair) => src.sigma(&pair)?,
                    None => None,
                });
            }
            out
        }
        (None, None) => bail!("one of --images or --pyramids is required"),
    };
    let mut carried = 0.0;
    let filled: Vec<f64> = sigmas
        .iter()
        .map(|s| {
            if let Some(s) = s {
                carried = *s;
            }
            carried
        })
        .collect();
    let windowed = texture::activity_series(&filled, args.window)?;
    let mut csv = String::from("frame,sigma,windowed_sigma\n");
    for ((r, s), w) in records.iter().zip(&filled).zip(&windowed) {
        csv.push_str(&format!("{},{s},{w}\n", r.frame));
    }
    std::fs::write(&args.out, csv)?;
    println!(
        "frames: {}  with texture: {}",
        records.len(),
        sigmas.iter().flatten().count()
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Activity(a) => activity_cmd(a),
    }
}
