//! The staged radix-2 DIT processor.
//!
//! A pipeline for `N = 2^m` points has `m` stages. The input is routed once
//! through the bit-reversal permutation, then stage `s` combines pairs
//! `2^s` apart with butterflies whose twiddles come from the `2^{s+1}`-point
//! table. Each stage may quantize its butterfly outputs (the values latched
//! into the stage register) and may use a quantized twiddle table, fixed
//! at build time.
//!
//! The inverse direction uses conjugated twiddles and scales the input by
//! `1/N` once before the first stage, so an exact forward/inverse pair is
//! the identity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::complex::{checked_log2, max_abs_diff, ComplexSample, SignalBlock};
use crate::error::{Error, Result};
use crate::fft::{bit_reverse_indices, butterfly_dit, butterfly_dit_counted, OpCounters, TwiddleTable};
use crate::quantizer::{
    quantize_complex, FloatQuantizerSpec, QuantizerSpec, UniformQuantizerSpec,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    Inverse,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Inverse => "inverse",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Quantize-unit settings for one stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageConfig {
    /// Applied to both butterfly outputs; `None` makes the stage exact.
    pub data_quantizer: Option<QuantizerSpec>,
    /// Quantize this stage's twiddle table once when the pipeline is built.
    pub quantize_twiddles: bool,
    /// Quantizer for the twiddle table. Falls back to `data_quantizer` when
    /// unset; with neither present the twiddles stay exact.
    pub twiddle_quantizer: Option<QuantizerSpec>,
}

impl StageConfig {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn with_data(quantizer: impl Into<QuantizerSpec>) -> Self {
        Self {
            data_quantizer: Some(quantizer.into()),
            ..Self::default()
        }
    }

    /// Exact data path with quantized twiddles only.
    pub fn with_twiddles(quantizer: impl Into<QuantizerSpec>) -> Self {
        Self {
            data_quantizer: None,
            quantize_twiddles: true,
            twiddle_quantizer: Some(quantizer.into()),
        }
    }

    fn effective_twiddle_quantizer(&self) -> Option<QuantizerSpec> {
        if self.quantize_twiddles {
            self.twiddle_quantizer.or(self.data_quantizer)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub n_size: usize,
    pub direction: Direction,
    /// One entry per stage; must have exactly `log2(n_size)` entries.
    pub stages: Vec<StageConfig>,
}

impl PipelineConfig {
    pub fn exact(n_size: usize, direction: Direction) -> Result<Self> {
        let m = checked_log2(n_size)? as usize;
        Ok(Self {
            n_size,
            direction,
            stages: vec![StageConfig::exact(); m],
        })
    }

    /// Factor applied to the input before the first stage.
    pub fn input_scale(&self) -> f64 {
        match self.direction {
            Direction::Forward => 1.0,
            Direction::Inverse => 1.0 / self.n_size as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantizerKind {
    #[default]
    Exact,
    Uniform,
    Float,
}

impl QuantizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuantizerKind::Exact => "exact",
            QuantizerKind::Uniform => "uniform",
            QuantizerKind::Float => "float",
        }
    }
}

impl fmt::Display for QuantizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full scale of the uniform quantize unit after stage `stage` (0-based).
///
/// Forward stages grow by at most a factor of two each, so inputs in
/// `[-1, 1]` stay within `2^{s+1}` after stage `s`. The inverse direction
/// divides by `N` up front and its outputs land back in `[-1, 1]`; it keeps
/// a unit full scale at every stage.
pub fn default_full_scale(direction: Direction, stage: usize) -> f64 {
    match direction {
        Direction::Forward => (2.0f64).powi(stage as i32 + 1),
        Direction::Inverse => 1.0,
    }
}

/// A size-independent recipe for a pipeline where every stage uses the same
/// quantizer kind and resolution.
///
/// Uniform stages take their full scale from [`default_full_scale`].
/// Quantized twiddles use the same kind and resolution with a unit full
/// scale, since `|W| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineTemplate {
    pub n_size: usize,
    pub direction: Direction,
    pub quantizer: QuantizerKind,
    pub bits: u32,
    pub quantize_twiddles: bool,
}

impl PipelineTemplate {
    pub fn exact(n_size: usize, direction: Direction) -> Self {
        Self {
            n_size,
            direction,
            quantizer: QuantizerKind::Exact,
            bits: 0,
            quantize_twiddles: false,
        }
    }

    pub fn new(n_size: usize, direction: Direction, quantizer: QuantizerKind, bits: u32) -> Self {
        Self {
            n_size,
            direction,
            quantizer,
            bits,
            quantize_twiddles: false,
        }
    }

    pub fn with_size(self, n_size: usize) -> Self {
        Self { n_size, ..self }
    }

    pub fn with_direction(self, direction: Direction) -> Self {
        Self { direction, ..self }
    }

    pub fn with_quantizer(self, quantizer: QuantizerKind, bits: u32) -> Self {
        Self {
            quantizer,
            bits,
            ..self
        }
    }

    fn spec(&self, full_scale: f64) -> Result<Option<QuantizerSpec>> {
        Ok(match self.quantizer {
            QuantizerKind::Exact => None,
            QuantizerKind::Uniform => Some(UniformQuantizerSpec::new(self.bits, full_scale)?.into()),
            QuantizerKind::Float => Some(FloatQuantizerSpec::new(self.bits)?.into()),
        })
    }

    pub fn config(&self) -> Result<PipelineConfig> {
        let m = checked_log2(self.n_size)? as usize;
        let twiddle_quantizer = if self.quantize_twiddles { self.spec(1.0)? } else { None };
        let stages = (0..m)
            .map(|s| {
                Ok(StageConfig {
                    data_quantizer: self.spec(default_full_scale(self.direction, s))?,
                    quantize_twiddles: self.quantize_twiddles,
                    twiddle_quantizer,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PipelineConfig {
            n_size: self.n_size,
            direction: self.direction,
            stages,
        })
    }

    pub fn build(&self) -> Result<Pipeline> {
        Pipeline::build(self.config()?)
    }
}

#[derive(Debug, Clone)]
struct Stage {
    span: usize,
    twiddles: TwiddleTable,
    exact_twiddles: TwiddleTable,
    data_quantizer: Option<QuantizerSpec>,
}

/// A built, immutable pipeline; runs on independent inputs may share it.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    routing: Vec<usize>,
    stages: Vec<Stage>,
    twiddle_saturations: u64,
}

/// Outcome of one pass through a pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub output: SignalBlock,
    pub counters: OpCounters,
    /// Per stage, the largest componentwise deviation of the stage register
    /// from an exact evaluation of the same input (exact data path and exact
    /// twiddles). Deviations accumulate from stage to stage.
    pub per_stage_error: Vec<f64>,
    /// Components clamped by a data quantizer during this run.
    pub saturation_events: u64,
}

pub fn build_pipeline(config: PipelineConfig) -> Result<Pipeline> {
    Pipeline::build(config)
}

pub fn run_pipeline(pipeline: &Pipeline, x: &SignalBlock) -> Result<PipelineRun> {
    pipeline.run(x)
}

/// Runs `x` through `forward` and then `inverse`, returning the inverse run.
/// Its output, compared against `x`, is the processor's round-trip error.
pub fn run_roundtrip(forward: &Pipeline, inverse: &Pipeline, x: &SignalBlock) -> Result<PipelineRun> {
    if forward.direction() != Direction::Forward {
        return Err(Error::DirectionMismatch { expected: "forward" });
    }
    if inverse.direction() != Direction::Inverse {
        return Err(Error::DirectionMismatch { expected: "inverse" });
    }
    if forward.n_size() != inverse.n_size() {
        return Err(Error::LengthMismatch {
            expected: forward.n_size(),
            actual: inverse.n_size(),
        });
    }
    let spectrum = forward.run(x)?;
    inverse.run(&spectrum.output)
}

impl Pipeline {
    pub fn build(config: PipelineConfig) -> Result<Self> {
        let m = checked_log2(config.n_size)? as usize;
        if config.stages.len() != m {
            return Err(Error::StageCountMismatch {
                n_size: config.n_size,
                expected: m,
                actual: config.stages.len(),
            });
        }
        let conjugated = config.direction == Direction::Inverse;
        let mut twiddle_saturations = 0u64;
        let stages = config
            .stages
            .iter()
            .enumerate()
            .map(|(s, stage)| {
                let span = 2usize << s;
                let exact_twiddles = TwiddleTable::new(span, conjugated)?;
                let twiddles = match stage.effective_twiddle_quantizer() {
                    Some(q) => exact_twiddles.map_factors(|w| {
                        let (value, saturated) = quantize_complex(w, &q);
                        twiddle_saturations += u64::from(saturated);
                        value
                    }),
                    None => exact_twiddles.clone(),
                };
                Ok(Stage {
                    span,
                    twiddles,
                    exact_twiddles,
                    data_quantizer: stage.data_quantizer,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            routing: bit_reverse_indices(config.n_size)?,
            config,
            stages,
            twiddle_saturations,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn n_size(&self) -> usize {
        self.config.n_size
    }

    pub fn direction(&self) -> Direction {
        self.config.direction
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    /// The twiddle table stage `stage` actually uses (quantized if enabled).
    pub fn stage_twiddles(&self, stage: usize) -> Option<&TwiddleTable> {
        self.stages.get(stage).map(|s| &s.twiddles)
    }

    /// Twiddle components clamped while quantizing the tables at build time.
    pub fn twiddle_saturations(&self) -> u64 {
        self.twiddle_saturations
    }

    pub fn run(&self, x: &SignalBlock) -> Result<PipelineRun> {
        let n = self.n_size();
        if x.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        let scale = self.config.input_scale();
        let input = x.as_slice();
        let mut data: Vec<ComplexSample> = self.routing.iter().map(|&i| input[i].scale(scale)).collect();
        let mut shadow = data.clone();
        let mut counters = OpCounters::default();
        let mut saturation_events = 0u64;
        let mut per_stage_error = Vec::with_capacity(self.stages.len());

        for stage in &self.stages {
            let half = stage.span / 2;
            for start in (0..n).step_by(stage.span) {
                for j in 0..half {
                    let (top, bottom) = (start + j, start + j + half);
                    let (mut u, mut v) =
                        butterfly_dit_counted(data[top], data[bottom], stage.twiddles.get(j), &mut counters);
                    if let Some(q) = &stage.data_quantizer {
                        let (qu, su) = quantize_complex(u, q);
                        let (qv, sv) = quantize_complex(v, q);
                        u = qu;
                        v = qv;
                        saturation_events += u64::from(su + sv);
                    }
                    data[top] = u;
                    data[bottom] = v;

                    let (su, sv) = butterfly_dit(shadow[top], shadow[bottom], stage.exact_twiddles.get(j));
                    shadow[top] = su;
                    shadow[bottom] = sv;
                }
            }
            per_stage_error.push(max_abs_diff(&data, &shadow)?);
        }

        Ok(PipelineRun {
            output: SignalBlock::new(data)?,
            counters,
            per_stage_error,
            saturation_events,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::{dft_direct, idft_direct};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_block(n: usize, seed: u64) -> SignalBlock {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SignalBlock::new(
            (0..n)
                .map(|_| ComplexSample::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
                .collect(),
        )
        .unwrap()
    }

    fn exact(n: usize, direction: Direction) -> Pipeline {
        Pipeline::build(PipelineConfig::exact(n, direction).unwrap()).unwrap()
    }

    #[test]
    fn build_shapes() {
        assert_eq!(exact(1024, Direction::Forward).num_stages(), 10);
        let inv = exact(8, Direction::Inverse);
        assert_eq!(inv.num_stages(), 3);
        for s in 0..3 {
            assert!(inv.stage_twiddles(s).unwrap().is_conjugated());
        }
        assert_eq!(inv.stage_twiddles(2).unwrap().get(1).im, std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn build_rejects_stage_mismatch() {
        let config = PipelineConfig {
            n_size: 8,
            direction: Direction::Forward,
            stages: vec![StageConfig::exact(); 4],
        };
        assert_eq!(
            Pipeline::build(config).unwrap_err(),
            Error::StageCountMismatch { n_size: 8, expected: 3, actual: 4 }
        );
        assert!(PipelineConfig::exact(12, Direction::Forward).is_err());
    }

    #[test]
    fn constant_input() {
        let run = exact(8, Direction::Forward)
            .run(&SignalBlock::from_real(&[1.0; 8]).unwrap())
            .unwrap();
        let mut expected = [0.0; 8];
        expected[0] = 8.0;
        assert!(run.output.max_abs_diff(&SignalBlock::from_real(&expected).unwrap()).unwrap() <= 1e-12);
    }

    #[test]
    fn impulse_and_counters() {
        let run = exact(8, Direction::Forward).run(&SignalBlock::impulse(8).unwrap()).unwrap();
        assert!(run.output.as_slice().iter().all(|&z| z == ComplexSample::ONE));
        assert_eq!(run.counters, OpCounters { complex_multiplies: 12, complex_additions: 24 });
        assert_eq!(run.per_stage_error.len(), 3);
    }

    #[test]
    fn forward_matches_oracle_1024() {
        let x = random_block(1024, 3);
        let run = exact(1024, Direction::Forward).run(&x).unwrap();
        assert!(run.output.max_abs_diff(&dft_direct(&x).unwrap()).unwrap() <= 1e-9);
        assert_eq!(run.counters, OpCounters { complex_multiplies: 5120, complex_additions: 10240 });
        assert!(run.per_stage_error.iter().all(|&e| e <= 1e-12));
        assert_eq!(run.saturation_events, 0);
    }

    #[test]
    fn inverse_matches_oracle() {
        for &n in &[8usize, 64, 512] {
            let x = random_block(n, n as u64);
            let run = exact(n, Direction::Inverse).run(&x).unwrap();
            assert!(run.output.max_abs_diff(&idft_direct(&x).unwrap()).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn roundtrip_exact_and_errors() {
        let fwd = exact(1024, Direction::Forward);
        let inv = exact(1024, Direction::Inverse);
        let x = random_block(1024, 99);
        let back = run_roundtrip(&fwd, &inv, &x).unwrap();
        assert!(back.output.max_abs_diff(&x).unwrap() <= 1e-9);

        assert_eq!(
            run_roundtrip(&inv, &inv, &x).unwrap_err(),
            Error::DirectionMismatch { expected: "forward" }
        );
        assert_eq!(
            run_roundtrip(&fwd, &fwd, &x).unwrap_err(),
            Error::DirectionMismatch { expected: "inverse" }
        );
        let small = exact(8, Direction::Inverse);
        assert!(matches!(run_roundtrip(&fwd, &small, &x), Err(Error::LengthMismatch { .. })));
        assert!(matches!(fwd.run(&random_block(8, 1)), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn quantization_keeps_counts_and_records_error() {
        let x = random_block(256, 5);
        let p = PipelineTemplate::new(256, Direction::Forward, QuantizerKind::Uniform, 8)
            .build()
            .unwrap();
        let run = p.run(&x).unwrap();
        assert_eq!(run.counters, OpCounters::expected_for(256).unwrap());
        assert!(run.per_stage_error.iter().all(|&e| e > 0.0 && e.is_finite()));
        // Complex inputs can exceed the real-input growth bound slightly, but
        // the quantize units must still produce finite in-range values.
        let x_max = default_full_scale(Direction::Forward, 7);
        assert!(run.output.as_slice().iter().all(|z| z.re.abs() <= x_max && z.im.abs() <= x_max));
    }

    #[test]
    fn saturation_is_reported() {
        let mut config = PipelineConfig::exact(8, Direction::Forward).unwrap();
        config.stages[0] = StageConfig::with_data(UniformQuantizerSpec::new(4, 0.5).unwrap());
        let run = Pipeline::build(config).unwrap().run(&SignalBlock::from_real(&[1.0; 8]).unwrap()).unwrap();
        assert_eq!(run.saturation_events, 4);
    }

    #[test]
    fn twiddle_quantization_uses_data_quantizer_by_default() {
        let q = UniformQuantizerSpec::new(3, 1.0).unwrap();
        let mut config = PipelineConfig::exact(8, Direction::Forward).unwrap();
        config.stages[2] = StageConfig {
            data_quantizer: Some(q.into()),
            quantize_twiddles: true,
            twiddle_quantizer: None,
        };
        let p = Pipeline::build(config).unwrap();
        let w1 = p.stage_twiddles(2).unwrap().get(1);
        assert_eq!(w1, ComplexSample::new(0.75, -0.75));
        // Stage 0 and 1 twiddles are untouched.
        assert_eq!(p.stage_twiddles(1).unwrap().get(1), ComplexSample::new(0.0, -1.0));
    }

    #[test]
    fn twiddle_only_quantization_vanishes_at_full_precision() {
        let x = random_block(256, 17);
        let oracle = dft_direct(&x).unwrap();
        let error_at = |bits: u32| {
            let q = UniformQuantizerSpec::new(bits, 1.0).unwrap();
            let config = PipelineConfig {
                n_size: 256,
                direction: Direction::Forward,
                stages: vec![StageConfig::with_twiddles(q); 8],
            };
            let run = Pipeline::build(config).unwrap().run(&x).unwrap();
            run.output.max_abs_diff(&oracle).unwrap()
        };
        let coarse = error_at(6);
        let fine = error_at(20);
        let full = error_at(53);
        assert!(coarse > 1e-3, "{coarse}");
        assert!(fine < coarse && fine > 0.0);
        assert!(full <= 1e-9, "{full}");
    }

    #[test]
    fn template_stage_scales() {
        let config = PipelineTemplate::new(16, Direction::Forward, QuantizerKind::Uniform, 6)
            .config()
            .unwrap();
        let scales: Vec<f64> = config
            .stages
            .iter()
            .map(|s| match s.data_quantizer {
                Some(QuantizerSpec::Uniform(u)) => u.x_max(),
                _ => panic!("expected uniform stage"),
            })
            .collect();
        assert_eq!(scales, vec![2.0, 4.0, 8.0, 16.0]);
        assert!(PipelineTemplate::new(16, Direction::Forward, QuantizerKind::Uniform, 0)
            .config()
            .is_err());
        let exact = PipelineTemplate::exact(16, Direction::Inverse).config().unwrap();
        assert!(exact.stages.iter().all(|s| s.data_quantizer.is_none()));
    }
}
