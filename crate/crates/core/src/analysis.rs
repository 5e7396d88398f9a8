//! Error statistics and the sweeps built on them.
//!
//! All variances use the population convention `(1/n)·Σ(x_i − mean)²`.
//! Complex error samples are pooled componentwise: each sample contributes
//! its real and imaginary parts as two real observations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{checked_log2, ComplexSample, SignalBlock};
use crate::error::{Error, Result};
use crate::fft::dft_direct;
use crate::pipeline::{run_roundtrip, Direction, PipelineTemplate, QuantizerKind};
use crate::quantizer::{
    float_error, snr_db, uniform_error, FloatQuantizerSpec, QuantizerSpec, UniformQuantizerSpec,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionStats {
    pub mean: f64,
    pub std_dev: f64,
    pub variance: f64,
    pub n_samples: usize,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Population mean, variance and standard deviation.
///
/// Uses a compensated mean followed by the corrected two-pass variance, so
/// large offsets do not cancel the spread.
pub fn measure_dispersion(samples: &[f64]) -> Result<DispersionStats> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / n;
    let sum_sq = compensated_sum(samples.iter().map(|&x| (x - mean) * (x - mean)));
    let sum_dev = compensated_sum(samples.iter().map(|&x| x - mean));
    let variance = ((sum_sq - sum_dev * sum_dev / n) / n).max(0.0);
    Ok(DispersionStats {
        mean,
        std_dev: variance.sqrt(),
        variance,
        n_samples: samples.len(),
    })
}

fn check_lengths(a: &[ComplexSample], b: &[ComplexSample]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: b.len(),
            actual: a.len(),
        });
    }
    Ok(())
}

/// `100·‖actual − reference‖₂ / ‖reference‖₂`.
pub fn percent_error(actual: &[ComplexSample], reference: &[ComplexSample]) -> Result<f64> {
    check_lengths(actual, reference)?;
    let ref_energy = compensated_sum(reference.iter().map(|z| z.norm_sqr()));
    if ref_energy == 0.0 {
        return Err(Error::ZeroEnergyReference);
    }
    let err_energy = compensated_sum(actual.iter().zip(reference).map(|(a, r)| (*a - *r).norm_sqr()));
    Ok(100.0 * (err_energy / ref_energy).sqrt())
}

fn components(z: &[ComplexSample]) -> impl Iterator<Item = f64> + '_ {
    z.iter().flat_map(|c| [c.re, c.im])
}

/// Measured SQNR: `10·log10(var(reference) / var(quantized − reference))`
/// over the real and imaginary components.
///
/// Noise whose variance is below the floating-point resolution of the data
/// (for example a pure DC offset) counts as an exact match and returns
/// `f64::INFINITY`.
pub fn sqnr_measured(quantized: &[ComplexSample], reference: &[ComplexSample]) -> Result<f64> {
    check_lengths(quantized, reference)?;
    let signal: Vec<f64> = components(reference).collect();
    let noise: Vec<f64> = quantized
        .iter()
        .zip(reference)
        .flat_map(|(q, r)| [q.re - r.re, q.im - r.im])
        .collect();
    let scale = components(reference)
        .chain(components(quantized))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    sqnr_from_samples(&signal, &noise, scale)
}

fn sqnr_from_samples(signal: &[f64], noise: &[f64], scale: f64) -> Result<f64> {
    let signal_var = measure_dispersion(signal)?.variance;
    if signal_var <= 0.0 {
        return Err(Error::NonPositiveVariance(signal_var));
    }
    let noise_var = measure_dispersion(noise)?.variance;
    let resolution = 4.0 * f64::EPSILON * scale;
    if noise_var <= resolution * resolution {
        return Ok(f64::INFINITY);
    }
    snr_db(signal_var, noise_var)
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidSweep("slope needs at least two points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidSweep("slope needs two distinct x values".into()));
    }
    Ok(sxy / sxx)
}

/// Deterministic source of test signals.
///
/// Trial `t` of a source with seed `s` always yields the same block, no
/// matter which other trials were drawn or in which order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSource {
    pub seed: u64,
    /// Samples are uniform on `[-amplitude, amplitude]`.
    pub amplitude: f64,
    /// Draw the imaginary part as well; otherwise it is zero.
    pub complex: bool,
}

impl SignalSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            amplitude: 1.0,
            complex: false,
        }
    }

    pub fn block(&self, n_size: usize, trial: u64) -> Result<SignalBlock> {
        checked_log2(n_size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        let a = self.amplitude;
        let draw = |rng: &mut ChaCha8Rng| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 };
        let samples = (0..n_size)
            .map(|_| {
                let re = draw(&mut rng);
                let im = if self.complex { draw(&mut rng) } else { 0.0 };
                ComplexSample::new(re, im)
            })
            .collect();
        SignalBlock::new(samples)
    }
}

/// One row of a bit-resolution sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub bits: u32,
    pub mean_error: f64,
    pub std_error: f64,
    pub var_error: f64,
    pub percent_error: f64,
    pub sqnr_db: f64,
    /// Closed-form per-sample variance of the quantizer at `bits` with unit
    /// full scale (`q²/12` uniform, `q²/6` relative for float). `None` for
    /// exact runs.
    pub theory_var: Option<f64>,
}

/// One row of a transform-size sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputSweepRow {
    pub n_size: usize,
    pub stats: DispersionStats,
    pub percent_error: f64,
    pub sqnr_db: f64,
}

/// Pooled error statistics over several trials.
#[derive(Debug, Default)]
struct ErrorPool {
    errors: Vec<f64>,
    reference: Vec<f64>,
    scale: f64,
}

impl ErrorPool {
    fn push(&mut self, output: &[ComplexSample], reference: &[ComplexSample]) {
        for (o, r) in output.iter().zip(reference) {
            // h = reference − output
            self.errors.push(r.re - o.re);
            self.errors.push(r.im - o.im);
            self.reference.push(r.re);
            self.reference.push(r.im);
            self.scale = self.scale.max(r.re.abs()).max(r.im.abs()).max(o.re.abs()).max(o.im.abs());
        }
    }

    fn summarize(&self) -> Result<(DispersionStats, f64, f64)> {
        let stats = measure_dispersion(&self.errors)?;
        let ref_energy = compensated_sum(self.reference.iter().map(|v| v * v));
        if ref_energy == 0.0 {
            return Err(Error::ZeroEnergyReference);
        }
        let err_energy = compensated_sum(self.errors.iter().map(|v| v * v));
        let percent = 100.0 * (err_energy / ref_energy).sqrt();
        let sqnr = sqnr_from_samples(&self.reference, &self.errors, self.scale)?;
        Ok((stats, percent, sqnr))
    }
}

/// Inputs and their error references for one sweep configuration.
///
/// Forward runs are compared with the direct DFT of the input; inverse runs
/// go forward and back through the processor and are compared with the
/// input itself.
struct TrialSet {
    inputs: Vec<SignalBlock>,
    references: Vec<SignalBlock>,
}

impl TrialSet {
    fn generate(n_size: usize, direction: Direction, source: &SignalSource, trials: usize) -> Result<Self> {
        let inputs = (0..trials as u64)
            .into_par_iter()
            .map(|t| source.block(n_size, t))
            .collect::<Result<Vec<_>>>()?;
        let references = match direction {
            Direction::Forward => inputs.par_iter().map(dft_direct).collect::<Result<Vec<_>>>()?,
            Direction::Inverse => inputs.clone(),
        };
        Ok(Self { inputs, references })
    }

    fn evaluate(&self, template: &PipelineTemplate) -> Result<ErrorPool> {
        let mut pool = ErrorPool::default();
        match template.direction {
            Direction::Forward => {
                let pipeline = template.build()?;
                for (x, reference) in self.inputs.iter().zip(&self.references) {
                    let run = pipeline.run(x)?;
                    pool.push(run.output.as_slice(), reference.as_slice());
                }
            }
            Direction::Inverse => {
                let forward = template.with_direction(Direction::Forward).build()?;
                let inverse = template.build()?;
                for (x, reference) in self.inputs.iter().zip(&self.references) {
                    let run = run_roundtrip(&forward, &inverse, x)?;
                    pool.push(run.output.as_slice(), reference.as_slice());
                }
            }
        }
        Ok(pool)
    }
}

fn unit_theory_var(kind: QuantizerKind, bits: u32) -> Result<Option<f64>> {
    Ok(match kind {
        QuantizerKind::Exact => None,
        QuantizerKind::Uniform => Some(QuantizerSpec::from(UniformQuantizerSpec::new(bits, 1.0)?).theoretical_variance()),
        QuantizerKind::Float => Some(QuantizerSpec::from(FloatQuantizerSpec::new(bits)?).theoretical_variance()),
    })
}

/// Error statistics as a function of quantizer resolution.
///
/// For every `b` in `bits` (strictly increasing), every stage of the
/// template pipeline gets a `kind` quantizer at `b` bits, `trials` seeded
/// inputs are transformed, and their pooled errors become one row. Rows are
/// computed in parallel but the output is identical to a sequential run.
pub fn sweep_bits(
    bits: &[u32],
    kind: QuantizerKind,
    template: &PipelineTemplate,
    source: &SignalSource,
    trials: usize,
) -> Result<Vec<SweepRow>> {
    if bits.is_empty() {
        return Err(Error::InvalidSweep("bit range is empty".into()));
    }
    if bits.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSweep("bit range must be strictly increasing".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidSweep("at least one trial is required".into()));
    }
    let set = TrialSet::generate(template.n_size, template.direction, source, trials)?;
    bits.par_iter()
        .map(|&b| {
            let pool = set.evaluate(&template.with_quantizer(kind, b))?;
            let (stats, percent_error, sqnr_db) = pool.summarize()?;
            Ok(SweepRow {
                bits: b,
                mean_error: stats.mean,
                std_error: stats.std_dev,
                var_error: stats.variance,
                percent_error,
                sqnr_db,
                theory_var: unit_theory_var(kind, b)?,
            })
        })
        .collect()
}

/// Error statistics as a function of transform size, with the template's
/// quantizer kind and resolution at every size.
pub fn sweep_input(
    template: &PipelineTemplate,
    n_sizes: &[usize],
    source: &SignalSource,
    trials: usize,
) -> Result<Vec<InputSweepRow>> {
    if n_sizes.is_empty() {
        return Err(Error::InvalidSweep("size list is empty".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidSweep("at least one trial is required".into()));
    }
    for &n in n_sizes {
        checked_log2(n)?;
    }
    n_sizes
        .par_iter()
        .map(|&n| {
            let sized = template.with_size(n);
            let set = TrialSet::generate(n, sized.direction, source, trials)?;
            let (stats, percent_error, sqnr_db) = set.evaluate(&sized)?.summarize()?;
            Ok(InputSweepRow {
                n_size: n,
                stats,
                percent_error,
                sqnr_db,
            })
        })
        .collect()
}

/// Monte Carlo error statistics of a single quantizer on a caller-supplied
/// sample stream.
///
/// For the uniform model the statistic is the absolute error
/// `h = x − Q(x)`; for the float model it is the relative error
/// `ε = (Q(x) − x)/x`.
pub fn empirical_error_dispersion(
    samples: impl IntoIterator<Item = f64>,
    spec: &QuantizerSpec,
) -> Result<DispersionStats> {
    let errors: Vec<f64> = samples
        .into_iter()
        .map(|x| match spec {
            QuantizerSpec::Uniform(u) => uniform_error(x, u).absolute,
            QuantizerSpec::Float(f) => float_error(x, f).relative,
        })
        .collect();
    measure_dispersion(&errors)
}

/// Raw-quantizer Monte Carlo summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerStatsRow {
    pub kind: QuantizerKind,
    pub bits: u32,
    pub theory_var: f64,
    pub error: DispersionStats,
    /// `(empirical − theory) / theory`.
    pub relative_deviation: f64,
    /// `10·log10(var(x) / var(x − Q(x)))` over the same samples.
    pub sqnr_db: f64,
}

/// Draws `samples` seeded inputs and measures one quantizer against its
/// closed-form variance.
///
/// Uniform inputs cover the full scale `[-x_max, x_max]`. Float inputs have
/// mantissas uniform on `[1/2, 1)` with a random sign.
pub fn quantizer_stats(spec: &QuantizerSpec, samples: usize, seed: u64) -> Result<QuantizerStatsRow> {
    if samples == 0 {
        return Err(Error::EmptySamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<f64> = match spec {
        QuantizerSpec::Uniform(u) => {
            let a = u.x_max();
            (0..samples).map(|_| rng.gen_range(-a..=a)).collect()
        }
        QuantizerSpec::Float(_) => (0..samples)
            .map(|_| {
                let m: f64 = rng.gen_range(0.5..1.0);
                if rng.gen::<bool>() { -m } else { m }
            })
            .collect(),
    };
    let error = empirical_error_dispersion(inputs.iter().copied(), spec)?;
    let theory_var = spec.theoretical_variance();
    let noise: Vec<f64> = inputs.iter().map(|&x| x - spec.quantize(x).value).collect();
    let scale = inputs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sqnr_db = sqnr_from_samples(&inputs, &noise, scale)?;
    let kind = match spec {
        QuantizerSpec::Uniform(_) => QuantizerKind::Uniform,
        QuantizerSpec::Float(_) => QuantizerKind::Float,
    };
    Ok(QuantizerStatsRow {
        kind,
        bits: spec.bits(),
        theory_var,
        error,
        relative_deviation: (error.variance - theory_var) / theory_var,
        sqnr_db,
    })
}
