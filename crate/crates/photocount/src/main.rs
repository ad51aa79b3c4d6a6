use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use photocount::inversion::{
    invert_general_with, invert_lossy_with, invert_unit_efficiency_with, InversionConfig,
};
use photocount::model::{critical_detection_time, estimate_mode_count, BathSpec};
use photocount::oracle::mc_sample_counts;
use photocount::states::moments;
use photocount::statistics::{count_distribution, mandel_q, noise_threshold, suggested_m_max};
use photocount::{
    ConditionalMatrix, CountDistribution, DetectorConfig, Error, PhotonStatistics, Result,
    SignalAmplitudes, StateSpec,
};

#[derive(Parser)]
#[command(
    name = "photocount",
    version,
    about = "Photocounting statistics of quantum light through lossy, noisy detectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Detector configuration: a file path or inline JSON.
    #[arg(long, global = true, value_name = "FILE|JSON")]
    detector: Option<String>,
    /// Input photon statistics: a file path or inline JSON.
    #[arg(long, global = true, value_name = "FILE|JSON")]
    state: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Lossy,
    UnitEff,
    General,
}

#[derive(Subcommand)]
enum Command {
    /// Photocount distribution of a state seen through a detector.
    Pcd {
        /// Truncation; defaults to a bound keeping the tail near 1e-12.
        #[arg(long)]
        m_max: Option<usize>,
    },
    /// Coherent-signal count probabilities over an n-range or intensity grid.
    PovmSymbol {
        /// Signal intensity for the n-range mode (needs --n-max).
        #[arg(long)]
        intensity: Option<f64>,
        #[arg(long)]
        n_max: Option<u32>,
        /// Fixed count for the grid mode (needs --intensity-min/max/steps).
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        intensity_min: Option<f64>,
        #[arg(long)]
        intensity_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Conditional probability matrix P(m|n).
    Condmat {
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        m_max: usize,
    },
    /// Count mean, variance and Mandel Q from closed-form moments.
    Moments,
    /// Noise level at which sub-Poissonian counts disappear.
    Threshold {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        modes: u64,
    },
    /// Recover photon statistics from a count distribution.
    Invert {
        /// Count distribution: a file path or inline JSON.
        #[arg(long, value_name = "FILE|JSON")]
        counts: String,
        #[arg(long, value_enum)]
        method: Method,
        /// Efficiency for the lossy inverse.
        #[arg(long)]
        eta: Option<f64>,
        /// Noise mean for the unit-efficiency inverse.
        #[arg(long)]
        n_noise: Option<f64>,
        /// Photon-number cutoff for the general inverse.
        #[arg(long)]
        n_max: Option<usize>,
        /// Constrain the general inverse to nonnegative, at-most-unit mass.
        #[arg(long)]
        nonneg: bool,
    },
    /// Monte Carlo sampling of the finite-mode detection model.
    Simulate {
        #[arg(long)]
        intensity: f64,
        #[arg(long)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Effective number of noise modes in a detection window.
    ModeCount {
        #[arg(long)]
        bandwidth: f64,
        #[arg(long)]
        time: f64,
    },
    /// Detection time below which a single noise mode dominates.
    CritTime {
        #[arg(long)]
        n_noise: f64,
        #[arg(long)]
        bandwidth: f64,
    },
}

/// JSON writer emitting every float with 17 significant digits, enough to
/// reproduce the exact double on re-ingestion.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser).expect("in-memory serialization");
    let mut text = String::from_utf8(out).expect("serde_json emits utf-8");
    text.push('\n');
    text
}

fn read_source(raw: &str, what: &str) -> Result<String> {
    if raw.trim_start().starts_with('{') {
        return Ok(raw.to_string());
    }
    fs::read_to_string(raw)
        .map_err(|e| Error::Validation(format!("cannot read {what} file {raw}: {e}")))
}

fn load_detector(arg: &Option<String>) -> Result<DetectorConfig> {
    let raw = arg
        .as_ref()
        .ok_or_else(|| Error::Validation("--detector is required for this command".into()))?;
    let text = read_source(raw, "detector")?;
    let detector: DetectorConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("malformed detector JSON: {e}")))?;
    detector.validate()?;
    Ok(detector)
}

fn load_state(arg: &Option<String>) -> Result<PhotonStatistics> {
    let raw = arg
        .as_ref()
        .ok_or_else(|| Error::Validation("--state is required for this command".into()))?;
    let text = read_source(raw, "state")?;
    let spec: StateSpec = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("malformed state JSON: {e}")))?;
    spec.build()
}

fn load_counts(raw: &str) -> Result<CountDistribution> {
    let text = read_source(raw, "counts")?;
    let counts: CountDistribution = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("malformed counts JSON: {e}")))?;
    counts.validate()?;
    Ok(counts)
}

fn csv_pmf(header: &str, values: &[f64]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{v:.11e}").expect("string write");
    }
    out
}

fn render_pcd(counts: &CountDistribution, format: Format) -> String {
    match format {
        Format::Json => to_json(counts),
        Format::Csv => csv_pmf("m,p", &counts.pmf),
    }
}

fn render_symbols(cli: &Cli, request: SymbolRequest) -> Result<String> {
    let detector = load_detector(&cli.detector)?;
    match request {
        SymbolRequest::Range { intensity, n_max } => {
            let signal = SignalAmplitudes::with_intensity(intensity)?;
            let symbols: Vec<f64> = (0..=n_max)
                .map(|n| photocount::povm::povm_symbol(n, &signal, &detector))
                .collect();
            Ok(match cli.format {
                Format::Json => to_json(&json!({ "intensity": intensity, "symbols": symbols })),
                Format::Csv => csv_pmf("n,p", &symbols),
            })
        }
        SymbolRequest::Grid { n, lo, hi, steps } => {
            let intensities: Vec<f64> = if steps == 1 {
                vec![lo]
            } else {
                (0..steps)
                    .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                    .collect()
            };
            let mut symbols = Vec::with_capacity(steps);
            for &s in &intensities {
                let signal = SignalAmplitudes::with_intensity(s)?;
                symbols.push(photocount::povm::povm_symbol(n, &signal, &detector));
            }
            Ok(match cli.format {
                Format::Json => {
                    to_json(&json!({ "n": n, "intensities": intensities, "symbols": symbols }))
                }
                Format::Csv => {
                    let mut out = String::from("intensity,p\n");
                    for (s, p) in intensities.iter().zip(&symbols) {
                        writeln!(out, "{s:.11e},{p:.11e}").expect("string write");
                    }
                    out
                }
            })
        }
    }
}

enum SymbolRequest {
    Range { intensity: f64, n_max: u32 },
    Grid { n: u32, lo: f64, hi: f64, steps: usize },
}

fn symbol_request(
    intensity: Option<f64>,
    n_max: Option<u32>,
    n: Option<u32>,
    lo: Option<f64>,
    hi: Option<f64>,
    steps: Option<usize>,
) -> Result<SymbolRequest> {
    match (intensity, n) {
        (Some(intensity), None) => {
            let n_max = n_max.ok_or_else(|| {
                Error::Validation("--n-max is required together with --intensity".into())
            })?;
            Ok(SymbolRequest::Range { intensity, n_max })
        }
        (None, Some(n)) => {
            let (lo, hi, steps) = match (lo, hi, steps) {
                (Some(lo), Some(hi), Some(steps)) if steps >= 1 => (lo, hi, steps),
                _ => {
                    return Err(Error::Validation(
                        "grid mode needs --intensity-min, --intensity-max and --steps >= 1".into(),
                    ))
                }
            };
            Ok(SymbolRequest::Grid { n, lo, hi, steps })
        }
        _ => Err(Error::Validation(
            "choose one mode: --intensity with --n-max, or --n with an intensity grid".into(),
        )),
    }
}

fn render_condmat(matrix: &ConditionalMatrix, format: Format) -> String {
    match format {
        Format::Json => to_json(matrix),
        Format::Csv => matrix.to_csv(),
    }
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Pcd { m_max } => {
            let detector = load_detector(&cli.detector)?;
            let state = load_state(&cli.state)?;
            let m_max = m_max.unwrap_or_else(|| suggested_m_max(&moments(&state), &detector));
            let counts = count_distribution(&state, &detector, m_max)?;
            Ok(render_pcd(&counts, cli.format))
        }
        Command::PovmSymbol { intensity, n_max, n, intensity_min, intensity_max, steps } => {
            let request =
                symbol_request(*intensity, *n_max, *n, *intensity_min, *intensity_max, *steps)?;
            render_symbols(cli, request)
        }
        Command::Condmat { n_max, m_max } => {
            let detector = load_detector(&cli.detector)?;
            let matrix = photocount::povm::cond_matrix(&detector, *n_max, *m_max)?;
            Ok(render_condmat(&matrix, cli.format))
        }
        Command::Moments => {
            let detector = load_detector(&cli.detector)?;
            let state = load_state(&cli.state)?;
            let mo = moments(&state);
            let mean = photocount::statistics::count_mean(&mo, &detector);
            let variance = photocount::statistics::count_variance(&mo, &detector);
            let q = mandel_q(&mo, &detector).ok();
            Ok(match cli.format {
                Format::Json => {
                    to_json(&json!({ "mean": mean, "variance": variance, "mandel_q": q }))
                }
                Format::Csv => {
                    let q_cell = q.map_or(String::new(), |q| format!("{q:.11e}"));
                    format!("mean,variance,mandel_q\n{mean:.11e},{variance:.11e},{q_cell}\n")
                }
            })
        }
        Command::Threshold { eta, modes } => {
            let state = load_state(&cli.state)?;
            let outcome = noise_threshold(&moments(&state), *eta, *modes)?;
            Ok(format!("{outcome}\n"))
        }
        Command::Invert { counts, method, eta, n_noise, n_max, nonneg } => {
            let counts = load_counts(counts)?;
            let config = InversionConfig::default();
            let report = match method {
                Method::Lossy => {
                    let eta = eta.ok_or_else(|| {
                        Error::Validation("--eta is required for the lossy inverse".into())
                    })?;
                    invert_lossy_with(&counts, eta, &config)?
                }
                Method::UnitEff => {
                    let n_noise = n_noise.ok_or_else(|| {
                        Error::Validation("--n-noise is required for the unit-eff inverse".into())
                    })?;
                    invert_unit_efficiency_with(&counts, n_noise, &config)?
                }
                Method::General => {
                    let detector = load_detector(&cli.detector)?;
                    let n_max = n_max.ok_or_else(|| {
                        Error::Validation("--n-max is required for the general inverse".into())
                    })?;
                    invert_general_with(&counts, &detector, n_max, *nonneg, &config)?
                }
            };
            Ok(match cli.format {
                Format::Json => to_json(&json!({
                    "type": "pmf",
                    "p": report.statistics.pmf(),
                    "tail_bound": report.statistics.tail_bound(),
                    "condition": report.condition,
                    "clipped": report.clipped,
                    "residual": report.residual,
                })),
                Format::Csv => csv_pmf("n,p", report.statistics.pmf()),
            })
        }
        Command::Simulate { intensity, samples, seed } => {
            let detector = load_detector(&cli.detector)?;
            let signal = SignalAmplitudes::with_intensity(*intensity)?;
            let histogram = mc_sample_counts(&signal, &detector, *samples, *seed)?;
            Ok(match cli.format {
                Format::Json => to_json(&histogram),
                Format::Csv => {
                    let mut out = String::from("m,count\n");
                    for (m, c) in &histogram.counts {
                        writeln!(out, "{m},{c}").expect("string write");
                    }
                    out
                }
            })
        }
        Command::ModeCount { bandwidth, time } => {
            let modes = estimate_mode_count(&BathSpec::new(*bandwidth, *time)?)?;
            Ok(format!("{modes}\n"))
        }
        Command::CritTime { n_noise, bandwidth } => {
            let time = critical_detection_time(*n_noise, *bandwidth)?;
            Ok(format!("{time}\n"))
        }
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Warn
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().to_string().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn main() {
    let _ = log::set_logger(&LOGGER);
    log::set_max_level(log::LevelFilter::Warn);
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            let line = e.to_string();
            eprintln!("{}", line.lines().next().unwrap_or("error: invalid arguments"));
            std::process::exit(1);
        }
    };
    match run(&cli) {
        Ok(text) => {
            if let Err(e) = emit(&text, &cli.out) {
                eprintln!("error: {e}");
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
