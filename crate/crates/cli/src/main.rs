use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use hmmscene::imaging::{decode_pgm, decode_png_gray, load_dataset, make_split};
use hmmscene::pipeline::{self, Bundle, GratingSpec, PipelineConfig, ALLOWED_GRIDS};
use hmmscene::{Error, GrayImage, Result};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "hmmscene",
    version,
    about = "Scene classification with grid-sequence HMM features"
)]
struct Cli {
    /// Pipeline configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Model bundle directory.
    #[arg(long, global = true)]
    bundle: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode images and write HMM feature vectors into the bundle.
    Extract {
        /// Dataset root laid out as <class>/<image>.{pgm,png}.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Train one classifier per enabled descriptor.
    Train,
    /// Fit the ensemble weights on training scores.
    Fuse,
    /// Evaluate on the test split and write the report.
    Eval,
    /// Classify a single image.
    Predict { image: PathBuf },
    /// Per-descriptor accuracy for each grid size.
    Sweep {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Comma-separated grid sizes.
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        grids: Vec<usize>,
        /// CSV output (default: <bundle>/sweep.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract, train, fuse and eval in one go.
    Run {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Write the oriented-grating benchmark dataset as PGM files.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 80)]
        per_class: usize,
        #[arg(long, default_value_t = 55.0)]
        noise: f64,
    },
    /// Print the effective configuration.
    Config,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(EXIT_CONVERGENCE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

enum Outcome {
    Done,
    NotConverged,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_config_error() => EXIT_CONFIG,
        Error::Convergence(_) => EXIT_CONVERGENCE,
        _ => EXIT_DATA,
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(bundle) = &cli.bundle {
        config.paths.bundle = Some(bundle.clone());
    }
    Ok(config)
}

fn bundle_dir(config: &PipelineConfig) -> PathBuf {
    config.paths.bundle.clone().unwrap_or_else(|| PathBuf::from("bundle"))
}

fn dataset_dir(config: &PipelineConfig, flag: &Option<PathBuf>) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| config.paths.dataset.clone())
        .ok_or_else(|| Error::Config("no dataset given (use --dataset or paths.dataset)".into()))
}

fn load_split(config: &PipelineConfig, root: &Path) -> Result<(hmmscene::LabeledImageSet, hmmscene::SplitSpec)> {
    let (set, warnings) = load_dataset(root)?;
    for w in &warnings {
        warn!("skipped {}: {}", w.path.display(), w.reason);
    }
    info!("{} images in {} classes", set.items().len(), set.num_classes());
    let split = make_split(&set, config.split.train_per_class, config.seed)?;
    Ok((set, split))
}

fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("pgm") => decode_pgm(&bytes),
        Some("png") => decode_png_gray(&bytes),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: expected .pgm or .png",
            path.display()
        ))),
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let config = load_config(&cli)?;
    config.validate()?;
    let bundle_path = bundle_dir(&config);
    match &cli.command {
        Command::Extract { dataset } => {
            let (set, split) = load_split(&config, &dataset_dir(&config, dataset)?)?;
            pipeline::extract(&config, &set, &split, &Bundle::create(&bundle_path)?)?;
            println!("extracted {} images into {}", set.items().len(), bundle_path.display());
        }
        Command::Train => {
            let summary = pipeline::train(&Bundle::open(&bundle_path)?)?;
            let names: Vec<&str> = summary.descriptors.iter().map(|d| d.as_str()).collect();
            println!("trained {}", names.join(", "));
            if !summary.converged {
                warn!("some SMO runs hit the iteration cap");
                return Ok(Outcome::NotConverged);
            }
        }
        Command::Fuse => {
            let fit = pipeline::fuse(&Bundle::open(&bundle_path)?)?;
            for (id, w) in fit.weights.classifiers.iter().zip(&fit.weights.w) {
                println!("{id:>10}  w = {w:.6}");
            }
            println!("objective {:.6} (uniform {:.6})", fit.objective, fit.uniform_objective);
        }
        Command::Eval => {
            let report = pipeline::eval(&Bundle::open(&bundle_path)?)?;
            print!("{}", report.to_table());
        }
        Command::Predict { image } => {
            let prediction = pipeline::predict(&Bundle::open(&bundle_path)?, &read_image(image)?)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&prediction).map_err(|e| Error::Format(e.to_string()))?
            );
        }
        Command::Sweep { dataset, grids, out } => {
            if let Some(bad) = grids.iter().find(|g| !ALLOWED_GRIDS.contains(g)) {
                return Err(Error::Config(format!("grid size {bad} is not one of 3, 5, 7")));
            }
            let (set, split) = load_split(&config, &dataset_dir(&config, dataset)?)?;
            let work = bundle_path.join("sweep");
            let rows = pipeline::sweep(&config, &set, &split, grids, &work)?;
            let out = out.clone().unwrap_or_else(|| bundle_path.join("sweep.csv"));
            fs::write(&out, pipeline::sweep_csv(&rows)).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            for (d, g) in pipeline::best_grids(&rows) {
                println!("{d:>10}  best g = {g}");
            }
            println!("wrote {}", out.display());
        }
        Command::Run { dataset } => {
            let (set, split) = load_split(&config, &dataset_dir(&config, dataset)?)?;
            let outcome = pipeline::run_all(&config, &set, &split, &Bundle::create(&bundle_path)?)?;
            print!("{}", outcome.report.to_table());
            if !outcome.converged {
                return Ok(Outcome::NotConverged);
            }
        }
        Command::Synth { out, per_class, noise } => {
            let spec = GratingSpec {
                per_class: *per_class,
                noise: *noise,
                seed: cli.seed.unwrap_or(GratingSpec::default().seed),
                ..GratingSpec::default()
            };
            let set = pipeline::grating_dataset(&spec)?;
            pipeline::write_dataset(&set, out)?;
            println!("wrote {} images to {}", set.items().len(), out.display());
        }
        Command::Config => {
            print!("{}", String::from_utf8_lossy(&pipeline::json_bytes(&config)?));
        }
    }
    Ok(Outcome::Done)
}
