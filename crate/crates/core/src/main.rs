use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gazeregion::bench::{bench_single_worker, format_table};
use gazeregion::eval::{build_report, global_logs, sweep_logs, user_based_logs, EvalParams, Protocol};
use gazeregion::forest::ForestParams;
use gazeregion::model::TrainParams;
use gazeregion::report::{fmt_f64, sweep_csv, sweep_svg, write_report_dir, DECISION_LOG_HEADER};
use gazeregion::synth::{generate, GenConfig};
use gazeregion::{Dataset, GazeModel, RegionScheme};

#[derive(Parser)]
#[command(name = "gazeregion", version, about = "Driver gaze-region classification from facial landmarks")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic frame file.
    Gen(GenArgs),
    /// Train a model on a frame file.
    Train(TrainArgs),
    /// Classify every frame and write a decision log.
    Predict(PredictArgs),
    /// Run an evaluation protocol and write report files.
    Eval(EvalArgs),
    /// Accuracy vs confidence threshold (user-based protocol).
    Sweep(SweepArgs),
    /// Per-stage latency on a single worker.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 12)]
    subjects: usize,
    #[arg(long, default_value_t = 100)]
    frames_per_glance: usize,
    #[arg(long, default_value_t = 4)]
    glances_per_region: usize,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 20.0)]
    offset_sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    jitter: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 80.0)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output frame file.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value = "six")]
    scheme: RegionScheme,
    #[arg(long, default_value_t = 1000)]
    trees: usize,
    #[arg(long, default_value_t = 30)]
    depth: usize,
    /// Trees per landmark-elimination round.
    #[arg(long, default_value_t = 100)]
    rfe_trees: usize,
    #[arg(long, default_value_t = 19)]
    keep: usize,
    /// Use every n-th labeled frame for training.
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

impl ModelArgs {
    fn train_params(&self) -> TrainParams {
        TrainParams {
            forest: ForestParams::default().with_trees(self.trees).with_depth(self.depth),
            rfe_trees: self.rfe_trees,
            keep: self.keep,
            stride: self.stride,
            ..TrainParams::default()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    frames: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    frames: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    /// Decision log path (default: stdout).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    frames: PathBuf,
    /// `global` or `user`.
    #[arg(long, default_value = "user")]
    protocol: Protocol,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    #[arg(long)]
    seed: u64,
    /// Also write the per-frame decision log.
    #[arg(long)]
    log: bool,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    frames: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated ascending thresholds, each >= 1.
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,3,5,10")]
    thresholds: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    frames: PathBuf,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    /// Fail when any stage misses the 10 ms budget.
    #[arg(long)]
    strict: bool,
}

fn load_frames(path: &PathBuf) -> Result<Dataset> {
    Dataset::load(path).with_context(|| format!("reading {}", path.display()))
}

fn eval_params(m: &ModelArgs) -> EvalParams {
    EvalParams { train: m.train_params(), ..EvalParams::default() }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => {
            let cfg = GenConfig {
                n_subjects: a.subjects,
                frames_per_glance: a.frames_per_glance,
                glances_per_region: a.glances_per_region,
                head_coupling_kappa: a.kappa,
                subject_offset_sigma_deg: a.offset_sigma,
                pose_jitter_deg: a.jitter,
                noise_sigma_px: a.noise,
                camera_scale_px: a.scale,
                seed: a.seed,
                ..GenConfig::default()
            };
            generate(&cfg)?.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
        }
        Command::Train(a) => {
            let ds = load_frames(&a.frames)?;
            let model = GazeModel::train(&ds, a.model.scheme, &a.model.train_params(), a.seed)?;
            model.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
        }
        Command::Predict(a) => {
            let model = GazeModel::load(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
            let ds = load_frames(&a.frames)?;
            let mut w: Box<dyn Write> = match &a.out {
                Some(p) => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
                None => Box::new(io::BufWriter::new(io::stdout().lock())),
            };
            writeln!(w, "{DECISION_LOG_HEADER}")?;
            for s in ds.subjects() {
                let ctx = model.context_for(&s.subject_id, &s.frames)?;
                for f in &s.frames {
                    let v = model.classify_frame(&ctx, f, a.threshold)?;
                    let d = v.decision();
                    let truth = f.label.map_or("-".to_string(), |r| model.scheme.class_of(r).to_string());
                    writeln!(w, "{},{},{},{},{},{}", f.subject_id, f.frame_index, truth, d.predicted, fmt_f64(d.confidence), v.is_decided())?;
                }
            }
            w.flush()?;
        }
        Command::Eval(a) => {
            gazeregion::decide::check_threshold(a.threshold)?;
            let ds = load_frames(&a.frames)?;
            let params = eval_params(&a.model);
            let logs = match a.protocol {
                Protocol::Global => global_logs(&ds, a.model.scheme, &params, a.reps, a.seed)?,
                Protocol::UserBased => user_based_logs(&ds, a.model.scheme, &params, a.reps, a.seed)?,
            };
            let report = build_report(&logs, a.model.scheme, a.protocol, a.threshold);
            write_report_dir(&a.out, &report, a.log.then_some(logs.as_slice()))
                .with_context(|| format!("writing {}", a.out.display()))?;
            println!(
                "{} {} accuracy {} +/- {} over {} reps, decided {}/{}",
                a.protocol,
                a.model.scheme,
                report.mean_accuracy.map_or("undefined".into(), fmt_f64),
                report.std_accuracy.map_or("undefined".into(), fmt_f64),
                report.repetitions,
                report.decided_frames,
                report.evaluated_frames
            );
        }
        Command::Sweep(a) => {
            let ds = load_frames(&a.frames)?;
            sweep_logs(&[], a.model.scheme, &a.thresholds)?;
            let logs = user_based_logs(&ds, a.model.scheme, &eval_params(&a.model), a.reps, a.seed)?;
            let points = sweep_logs(&logs, a.model.scheme, &a.thresholds)?;
            std::fs::create_dir_all(&a.out)?;
            let csv = sweep_csv(&points);
            std::fs::write(a.out.join("sweep.csv"), &csv)?;
            std::fs::write(a.out.join("sweep.svg"), sweep_svg(&points))?;
            print!("{csv}");
        }
        Command::Bench(a) => {
            let model = GazeModel::load(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
            let ds = load_frames(&a.frames)?;
            let first = ds.subjects().first().context("frame file is empty")?;
            let timings = bench_single_worker(&model, &first.frames, a.iterations, a.threshold)?;
            print!("{}", format_table(&timings));
            if a.strict && timings.iter().any(|t| !t.within_budget()) {
                bail!("stage over the 10 ms budget");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
