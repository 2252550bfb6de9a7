use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use burstbg_core::io::save_gray;
use burstbg_core::slic::SlicAlgorithm;
use burstbg_core::synth::{ever_covered, evaluate, evaluate_region, render_scene, SceneScript};
use burstbg_core::{
    load_image, load_image_with, recover_background, save_image, BinaryMask, ImageStack, LoadOptions, PipelineConfig,
};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "burstbg", version, about = "Recover a static background from a burst of aligned frames")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recover the background from a set of frames.
    #[command(allow_negative_numbers = true)]
    Recover(RecoverArgs),
    /// Render a synthetic scene with known background.
    Synth(SynthArgs),
    /// Compare a recovered background to the ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct RecoverArgs {
    /// Input frames: a path or glob, repeatable. Frames are ordered by sorting
    /// the matched paths lexicographically.
    #[arg(long, required_unless_present = "print_config", num_args = 1..)]
    input: Vec<String>,
    #[arg(long, required_unless_present = "print_config")]
    output: Option<PathBuf>,
    /// Report file; defaults to `<output stem>.report.txt` next to the output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// Write intermediate rasters to this directory.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Accept JPEG input despite compression noise.
    #[arg(long)]
    allow_lossy: bool,

    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Seed threshold on the per-pixel change range.
    #[arg(long, default_value_t = 10, value_parser = parse_byte)]
    tau0: u8,
    /// Labeled-pixel count above which a superpixel is taken whole.
    #[arg(long, default_value_t = 25)]
    tau1: usize,
    /// Labeled-pixel ratio above which a superpixel is taken whole.
    #[arg(long, default_value_t = 0.4, value_parser = parse_unit)]
    tau2: f64,
    /// Per-channel agreement with the background when growing masks.
    #[arg(long, default_value_t = 10, value_parser = parse_byte)]
    tau3: u8,
    /// Per-channel agreement when scoring frames during ghost removal.
    #[arg(long, default_value_t = 10, value_parser = parse_byte)]
    tau4: u8,
    /// Disagreement above which a ghost candidate is replaced.
    #[arg(long, default_value_t = 5, value_parser = parse_byte)]
    tau5: u8,
    /// Superpixel algorithm selector; only 0 (SLIC) is available.
    #[arg(long, default_value_t = SlicAlgorithm::Slic.selector(), value_parser = parse_algorithm)]
    algorithm: u32,
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u64).range(2..))]
    region_size: u64,
    #[arg(long, default_value_t = 15.0, value_parser = parse_positive)]
    ruler: f64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    slic_iters: u64,
    /// Move SLIC seeds to the lowest-gradient pixel nearby.
    #[arg(long)]
    perturb_seeds: bool,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    ms_max_iters: u64,
    #[arg(long, default_value_t = 0.5, value_parser = parse_positive)]
    ms_eps: f64,
    /// Maximum model iterations.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    max_iters: u64,
    /// The model loop stops once fewer background pixels than this change.
    #[arg(long, default_value_t = 3)]
    min_changed: usize,
    /// Side of the ghost-scoring window (odd).
    #[arg(long, default_value_t = 41, value_parser = parse_odd_window)]
    window: usize,
    /// Gaussian weight standard deviation in both directions.
    #[arg(long, value_parser = parse_positive)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 20.0, value_parser = parse_positive)]
    sigma_x: f64,
    #[arg(long, default_value_t = 20.0, value_parser = parse_positive)]
    sigma_y: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    amplitude: f64,
    #[arg(long, default_value_t = 50.0, value_parser = parse_non_negative)]
    canny_low: f64,
    #[arg(long, default_value_t = 150.0, value_parser = parse_non_negative)]
    canny_high: f64,
    /// Chebyshev radius for growing edges and replacements into candidates.
    #[arg(long, default_value_t = 3)]
    dilation: usize,
    #[arg(long, default_value_t = 100)]
    max_deghost_rounds: usize,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, required_unless_present = "default_scene", conflicts_with = "default_scene")]
    script: Option<PathBuf>,
    /// Render the built-in acceptance scene.
    #[arg(long)]
    default_scene: bool,
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the frame count of the script.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    frames: Option<u64>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    recovered: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Restrict the metrics to the nonzero pixels of this mask image.
    #[arg(long)]
    region: Option<PathBuf>,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_byte(s: &str) -> Result<u8, String> {
    let v: i64 = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    u8::try_from(v).map_err(|_| format!("{v} is not in 0..=255"))
}

fn parse_algorithm(s: &str) -> Result<u32, String> {
    let v: u32 = s.parse().map_err(|_| format!("`{s}` is not a selector"))?;
    SlicAlgorithm::from_selector(v).map(SlicAlgorithm::selector).map_err(|e| e.to_string())
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be >= 0"))
    }
}

fn parse_odd_window(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))?;
    if v >= 3 && v % 2 == 1 {
        Ok(v)
    } else {
        Err(format!("{v} must be odd and >= 3"))
    }
}

impl ParamArgs {
    fn to_config(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = PipelineConfig {
            tau0: self.tau0,
            max_model_iters: self.max_iters as usize,
            min_changed_pixels: self.min_changed,
            ..PipelineConfig::default()
        };
        cfg.rules.tau1 = self.tau1;
        cfg.rules.tau2 = self.tau2;
        cfg.rules.tau3 = self.tau3;
        cfg.slic.algorithm = SlicAlgorithm::from_selector(self.algorithm)?;
        cfg.slic.region_size = self.region_size as usize;
        cfg.slic.ruler = self.ruler;
        cfg.slic.num_iterations = self.slic_iters as usize;
        cfg.slic.perturb_seeds = self.perturb_seeds;
        cfg.mean_shift.max_iters = self.ms_max_iters as usize;
        cfg.mean_shift.eps = self.ms_eps;
        let d = &mut cfg.deghost;
        d.tau4 = self.tau4;
        d.tau5 = self.tau5;
        d.neighborhood = self.window;
        d.sigma_x = self.sigma.unwrap_or(self.sigma_x);
        d.sigma_y = self.sigma.unwrap_or(self.sigma_y);
        d.amplitude = self.amplitude;
        d.canny_low = self.canny_low;
        d.canny_high = self.canny_high;
        d.dilation_radius = self.dilation;
        d.max_rounds = self.max_deghost_rounds;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Expands every pattern and returns the matches in lexicographic order.
fn collect_inputs(patterns: &[String]) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for p in patterns {
        let before = paths.len();
        for entry in glob::glob(p).with_context(|| format!("bad glob pattern `{p}`"))? {
            let path = entry?;
            if path.is_file() {
                paths.push(path);
            }
        }
        if paths.len() == before {
            bail!("no input files match `{p}`");
        }
    }
    paths.sort();
    paths.dedup();
    Ok(paths)
}

fn report_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}.report.txt"))
}

fn run_recover(args: RecoverArgs) -> anyhow::Result<()> {
    // Flags that parse individually can still clash (e.g. canny_low >= canny_high).
    let mut cfg = match args.params.to_config() {
        Ok(cfg) => cfg,
        Err(e) => Cli::command().error(ErrorKind::ValueValidation, format!("{e:#}")).exit(),
    };
    cfg.debug_dump_dir = args.dump.clone();
    if args.print_config {
        print!("{}", cfg.to_key_values());
        return Ok(());
    }
    let output = args.output.expect("required by clap");
    let paths = collect_inputs(&args.input)?;
    log::info!("{} input frames", paths.len());
    let opts = LoadOptions {
        allow_lossy: args.allow_lossy,
    };
    let frames = paths
        .iter()
        .map(|p| {
            log::debug!("loading {}", p.display());
            load_image_with(p, opts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let stack = ImageStack::new(frames)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build()?;
    let (background, report) = pool.install(|| recover_background(&stack, &cfg))?;

    save_image(&background, &output)?;
    let report_file = args.report.unwrap_or_else(|| report_path(&output));
    let mut text = String::new();
    for p in &paths {
        text.push_str(&format!("input={}\n", p.display()));
    }
    text.push_str(&report.to_key_values());
    fs::write(&report_file, text).with_context(|| format!("cannot write {}", report_file.display()))?;
    log::info!(
        "{} model iterations, {} deghost replacements",
        report.iterations_run,
        report.deghost_replaced
    );
    Ok(())
}

fn run_synth(args: SynthArgs) -> anyhow::Result<()> {
    let scene = match &args.script {
        Some(p) => SceneScript::load(p)?,
        None => SceneScript::default_acceptance(),
    };
    let k = args.frames.map_or(scene.frames, |f| f as usize);
    let (stack, truth) = render_scene(&scene, k)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    for (i, f) in stack.frames().iter().enumerate() {
        save_image(f, args.out_dir.join(format!("frame_{i:02}.png")))?;
    }
    save_image(&truth, args.out_dir.join("background.png"))?;
    let covered = ever_covered(&scene, k);
    let samples: Vec<u8> = covered.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    save_gray(covered.width(), covered.height(), &samples, args.out_dir.join("covered.png"))?;
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let recovered = load_image(&args.recovered)?;
    let truth = load_image(&args.truth)?;
    let metrics = match &args.region {
        Some(p) => {
            let img = load_image(p)?;
            let (w, h) = img.dims();
            let region = BinaryMask::from_fn(w, h, |x, y| img.pixel(x, y) != [0, 0, 0])?;
            evaluate_region(&recovered, &truth, &region)?
        }
        None => evaluate(&recovered, &truth)?,
    };
    print!("{}", metrics.to_key_values());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Recover(a) => run_recover(a),
        Command::Synth(a) => run_synth(a),
        Command::Evaluate(a) => run_evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
