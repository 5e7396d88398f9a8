//! Experiment configuration and CSV rendering for the `qfft` binary.
//!
//! A configuration comes from an optional JSON file and command-line flags;
//! flags win. Every field has a default, so `{}` is a valid file.
//!
//! Output is a CSV document: a block of `#` comment lines echoing the tool
//! version and every effective configuration value, then a header row and
//! data rows. Numbers are printed with 12 significant digits.

use std::ffi::OsString;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{quantizer_stats, sweep_bits, sweep_input, SignalSource};
use crate::complex::{checked_log2, SignalBlock};
use crate::error::Error as NumericError;
use crate::pipeline::{Direction, PipelineTemplate, QuantizerKind};
use crate::quantizer::{FloatQuantizerSpec, QuantizerSpec, UniformQuantizerSpec, MAX_BITS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Transform one block and print the spectrum.
    #[default]
    Transform,
    /// Error statistics against quantizer resolution.
    SweepBits,
    /// Error statistics against transform size.
    SweepInput,
    /// Monte Carlo check of a single quantizer against its closed-form variance.
    QuantizerStats,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Transform => "transform",
            Command::SweepBits => "sweep-bits",
            Command::SweepInput => "sweep-input",
            Command::QuantizerStats => "quantizer-stats",
        }
    }
}

/// Inclusive range of bit counts, written `A..B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BitRange {
    pub start: u32,
    pub end: u32,
}

impl BitRange {
    pub fn bits(&self) -> Vec<u32> {
        (self.start..=self.end).collect()
    }
}

impl fmt::Display for BitRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for BitRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected A..B, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("bad bound {v:?}: {e}"));
        Ok(Self {
            start: parse(a)?,
            end: parse(b.strip_prefix('=').unwrap_or(b))?,
        })
    }
}

impl TryFrom<String> for BitRange {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<BitRange> for String {
    fn from(r: BitRange) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n: usize,
    pub direction: Direction,
    pub quantizer: QuantizerKind,
    pub bits: u32,
    pub quantize_twiddles: bool,
    pub bit_range: BitRange,
    pub n_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Monte Carlo sample count for `quantizer-stats`.
    pub samples: usize,
    /// Input samples are uniform on `[-amplitude, amplitude]`.
    pub amplitude: f64,
    pub complex_input: bool,
    /// `transform` only: use a unit impulse instead of a seeded block.
    pub impulse: bool,
    /// Output file; standard output when absent.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::Transform,
            n: 1024,
            direction: Direction::Forward,
            quantizer: QuantizerKind::Exact,
            bits: 8,
            quantize_twiddles: false,
            bit_range: BitRange { start: 4, end: 12 },
            n_sizes: vec![8, 32, 128, 512, 1024],
            trials: 100,
            seed: 42,
            samples: 1_000_000,
            amplitude: 1.0,
            complex_input: false,
            impulse: false,
            output: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed JSON config: {0}")]
    Malformed(String),

    #[error("unknown config key \"{0}\"")]
    UnknownKey(String),

    #[error("invalid value for \"{key}\": {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("{0}")]
    Usage(String),
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Parses a JSON configuration. Missing keys take their defaults; the result
/// is not yet validated.
pub fn parse_config_json(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        if !inner.is_data() {
            return ConfigError::Malformed(inner.to_string());
        }
        let message = inner.to_string();
        if let Some(rest) = message.strip_prefix("unknown field `") {
            let key = rest.split('`').next().unwrap_or_default();
            return ConfigError::UnknownKey(key.to_string());
        }
        let key = if path == "." { "config".to_string() } else { path };
        ConfigError::InvalidValue { key, reason: message }
    })?;
    de.end().map_err(|e| ConfigError::Malformed(e.to_string()))?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        const SIZE_REASON: &str = "must be a power of two between 2 and 1048576";
        checked_log2(self.n).map_err(|_| invalid("n", SIZE_REASON))?;
        if self.n_sizes.is_empty() {
            return Err(invalid("n_sizes", "must list at least one size"));
        }
        if let Some(bad) = self.n_sizes.iter().find(|&&n| checked_log2(n).is_err()) {
            return Err(invalid("n_sizes", format!("{bad} {SIZE_REASON}")));
        }
        if !(1..=MAX_BITS).contains(&self.bits) {
            return Err(invalid("bits", format!("must be between 1 and {MAX_BITS}")));
        }
        let r = self.bit_range;
        if r.start < 1 || r.end > MAX_BITS || r.start > r.end {
            return Err(invalid(
                "bit_range",
                format!("must be A..B with 1 <= A <= B <= {MAX_BITS}, got {r}"),
            ));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.samples == 0 {
            return Err(invalid("samples", "must be at least 1"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(invalid("amplitude", "must be finite and non-negative"));
        }
        if self.command == Command::QuantizerStats && self.quantizer == QuantizerKind::Exact {
            return Err(invalid("quantizer", "quantizer-stats needs uniform or float"));
        }
        Ok(())
    }

    fn template(&self, n_size: usize) -> PipelineTemplate {
        PipelineTemplate {
            n_size,
            direction: self.direction,
            quantizer: self.quantizer,
            bits: self.bits,
            quantize_twiddles: self.quantize_twiddles,
        }
    }

    fn source(&self) -> SignalSource {
        SignalSource {
            seed: self.seed,
            amplitude: self.amplitude,
            complex: self.complex_input,
        }
    }
}

/// Command-line flags. Every option overrides the matching config-file key.
#[derive(Debug, Parser)]
#[command(name = "qfft", version, about = "Quantized pipelined radix-2 FFT/IFFT experiments")]
pub struct CliArgs {
    #[arg(value_enum)]
    pub command: Command,

    /// JSON configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Transform size (power of two).
    #[arg(long)]
    pub n: Option<usize>,

    /// Quantizer resolution in bits.
    #[arg(long, conflicts_with = "bit_range")]
    pub bits: Option<u32>,

    /// Inclusive bit range for sweep-bits, e.g. 4..12.
    #[arg(long, value_name = "A..B")]
    pub bit_range: Option<BitRange>,

    #[arg(long, value_enum)]
    pub quantizer: Option<QuantizerArg>,

    /// Quantize the twiddle tables at build time.
    #[arg(long)]
    pub quantize_twiddles: bool,

    /// Run the IFFT direction.
    #[arg(long)]
    pub inverse: bool,

    #[arg(long)]
    pub trials: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Output CSV path (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Comma-separated transform sizes for sweep-input.
    #[arg(long, value_delimiter = ',')]
    pub n_sizes: Option<Vec<usize>>,

    /// Monte Carlo samples for quantizer-stats.
    #[arg(long)]
    pub samples: Option<usize>,

    /// Input amplitude; samples are uniform on [-A, A].
    #[arg(long)]
    pub amplitude: Option<f64>,

    /// Draw complex input samples instead of real ones.
    #[arg(long)]
    pub complex_input: bool,

    /// transform: use a unit impulse as input.
    #[arg(long)]
    pub impulse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantizerArg {
    Uniform,
    Float,
    Exact,
}

impl From<QuantizerArg> for QuantizerKind {
    fn from(q: QuantizerArg) -> Self {
        match q {
            QuantizerArg::Uniform => QuantizerKind::Uniform,
            QuantizerArg::Float => QuantizerKind::Float,
            QuantizerArg::Exact => QuantizerKind::Exact,
        }
    }
}

/// Builds the effective configuration: file values (if any), then flags,
/// then validation.
pub fn parse_config(args: &CliArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            parse_config_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    config.command = args.command;
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(bits) = args.bits {
        config.bits = bits;
    }
    if let Some(range) = args.bit_range {
        config.bit_range = range;
    }
    if let Some(q) = args.quantizer {
        config.quantizer = q.into();
    }
    if args.quantize_twiddles {
        config.quantize_twiddles = true;
    }
    if args.inverse {
        config.direction = Direction::Inverse;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    if let Some(sizes) = &args.n_sizes {
        config.n_sizes = sizes.clone();
    }
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(a) = args.amplitude {
        config.amplitude = a;
    }
    if args.complex_input {
        config.complex_input = true;
    }
    if args.impulse {
        config.impulse = true;
    }
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("numerical error: {0}")]
    Numerical(#[from] NumericError),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// `1` for usage, configuration and I/O problems; `2` for numerical
    /// contract violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Numerical(_) => 2,
            ExperimentError::Config(_) | ExperimentError::Io(_) => 1,
        }
    }
}

/// Formats `v` with 12 significant digits, like C's `%.12g`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_row(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

fn header(config: &ExperimentConfig, notes: &[String]) -> String {
    let mut out = String::new();
    let sizes: Vec<String> = config.n_sizes.iter().map(usize::to_string).collect();
    let output = config
        .output
        .as_ref()
        .map_or_else(|| "-".to_string(), |p| p.display().to_string());
    let _ = writeln!(out, "# qfft {VERSION}");
    for (key, value) in [
        ("command", config.command.as_str().to_string()),
        ("n", config.n.to_string()),
        ("direction", config.direction.to_string()),
        ("quantizer", config.quantizer.to_string()),
        ("bits", config.bits.to_string()),
        ("quantize_twiddles", config.quantize_twiddles.to_string()),
        ("bit_range", config.bit_range.to_string()),
        ("n_sizes", sizes.join(";")),
        ("trials", config.trials.to_string()),
        ("seed", config.seed.to_string()),
        ("samples", config.samples.to_string()),
        ("amplitude", format_number(config.amplitude)),
        ("complex_input", config.complex_input.to_string()),
        ("impulse", config.impulse.to_string()),
        ("output", output),
    ] {
        let _ = writeln!(out, "# {key} = {value}");
    }
    for note in notes {
        let _ = writeln!(out, "# {note}");
    }
    out
}

const PERCENT_NOTE: &str = "percent_error = 100*||reference - output||_2 / ||reference||_2";
const ERROR_NOTE: &str = "error h = reference - output per real/imag component; population statistics";

fn reference_note(direction: Direction) -> String {
    match direction {
        Direction::Forward => "reference = direct DFT of the input".into(),
        Direction::Inverse => "reference = original input after forward + inverse round trip".into(),
    }
}

fn run_transform(config: &ExperimentConfig) -> Result<String, ExperimentError> {
    let x = if config.impulse {
        SignalBlock::impulse(config.n)?
    } else {
        config.source().block(config.n, 0)?
    };
    let pipeline = config.template(config.n).build()?;
    let run = pipeline.run(&x)?;
    let notes = [
        format!("saturation_events = {}", run.saturation_events),
        format!(
            "complex_multiplies = {}, complex_additions = {}",
            run.counters.complex_multiplies, run.counters.complex_additions
        ),
    ];
    let mut out = header(config, &notes);
    out.push_str("k,re,im\n");
    for (k, z) in run.output.as_slice().iter().enumerate() {
        out.push_str(&csv_row(&[k.to_string(), format_number(z.re), format_number(z.im)]));
    }
    Ok(out)
}

fn run_sweep_bits(config: &ExperimentConfig) -> Result<String, ExperimentError> {
    let rows = sweep_bits(
        &config.bit_range.bits(),
        config.quantizer,
        &config.template(config.n),
        &config.source(),
        config.trials,
    )?;
    let theory = match config.quantizer {
        QuantizerKind::Uniform => "theory_var = q^2/12 with x_max = 1",
        QuantizerKind::Float => "theory_var = q^2/6 relative-error variance with q = 2^-b",
        QuantizerKind::Exact => "theory_var empty for exact runs",
    };
    let notes = [
        reference_note(config.direction),
        ERROR_NOTE.to_string(),
        PERCENT_NOTE.to_string(),
        theory.to_string(),
    ];
    let mut out = header(config, &notes);
    out.push_str("bits,mean_error,std_error,var_error,percent_error,sqnr_db,theory_var\n");
    for r in rows {
        out.push_str(&csv_row(&[
            r.bits.to_string(),
            format_number(r.mean_error),
            format_number(r.std_error),
            format_number(r.var_error),
            format_number(r.percent_error),
            format_number(r.sqnr_db),
            r.theory_var.map(format_number).unwrap_or_default(),
        ]));
    }
    Ok(out)
}

fn run_sweep_input(config: &ExperimentConfig) -> Result<String, ExperimentError> {
    let rows = sweep_input(&config.template(config.n), &config.n_sizes, &config.source(), config.trials)?;
    let notes = [
        reference_note(config.direction),
        ERROR_NOTE.to_string(),
        PERCENT_NOTE.to_string(),
    ];
    let mut out = header(config, &notes);
    out.push_str("n,mean_error,std_error,var_error,percent_error,sqnr_db\n");
    for r in rows {
        out.push_str(&csv_row(&[
            r.n_size.to_string(),
            format_number(r.stats.mean),
            format_number(r.stats.std_dev),
            format_number(r.stats.variance),
            format_number(r.percent_error),
            format_number(r.sqnr_db),
        ]));
    }
    Ok(out)
}

fn run_quantizer_stats(config: &ExperimentConfig) -> Result<String, ExperimentError> {
    let spec: QuantizerSpec = match config.quantizer {
        QuantizerKind::Uniform => UniformQuantizerSpec::new(config.bits, 1.0)?.into(),
        QuantizerKind::Float => FloatQuantizerSpec::new(config.bits)?.into(),
        QuantizerKind::Exact => return Err(invalid("quantizer", "quantizer-stats needs uniform or float").into()),
    };
    let row = quantizer_stats(&spec, config.samples, config.seed)?;
    let notes = [match config.quantizer {
        QuantizerKind::Uniform => "uniform: x uniform on [-1, 1], error h = x - Q(x), theory_var = q^2/12",
        _ => "float: mantissa uniform on [1/2, 1) with random sign, error = (Q(x) - x)/x, theory_var = q^2/6",
    }
    .to_string()];
    let mut out = header(config, &notes);
    out.push_str("quantizer,bits,samples,theory_var,empirical_var,relative_deviation,mean_error,std_error,sqnr_db\n");
    out.push_str(&csv_row(&[
        row.kind.to_string(),
        row.bits.to_string(),
        row.error.n_samples.to_string(),
        format_number(row.theory_var),
        format_number(row.error.variance),
        format_number(row.relative_deviation),
        format_number(row.error.mean),
        format_number(row.error.std_dev),
        format_number(row.sqnr_db),
    ]));
    Ok(out)
}

/// Runs a validated configuration and returns the CSV document.
pub fn run_experiment(config: &ExperimentConfig) -> Result<String, ExperimentError> {
    match config.command {
        Command::Transform => run_transform(config),
        Command::SweepBits => run_sweep_bits(config),
        Command::SweepInput => run_sweep_input(config),
        Command::QuantizerStats => run_quantizer_stats(config),
    }
}

/// Full CLI entry point; returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(args) {
        Ok(args) => args,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let rendered = err.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let result = parse_config(&args)
        .map_err(ExperimentError::from)
        .and_then(|config| {
            let csv = run_experiment(&config)?;
            match &config.output {
                Some(path) => std::fs::write(path, csv)?,
                None => stdout.write_all(csv.as_bytes())?,
            }
            Ok(())
        });
    match result {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "qfft: {err}");
            err.exit_code()
        }
    }
}
