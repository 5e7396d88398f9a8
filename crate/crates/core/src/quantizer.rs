//! Uniform (fixed-point) and floating-point mantissa quantizer models.
//!
//! Both models round to the nearest level with ties away from zero, which
//! keeps them odd-symmetric: `Q(-x) = -Q(x)`.

use crate::complex::ComplexSample;
use crate::error::{Error, Result};

/// Largest bit count accepted by either quantizer model.
pub const MAX_BITS: u32 = 64;

/// Result of quantizing one real value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantized {
    pub value: f64,
    /// Set when the rounded level fell outside the representable range and
    /// was clamped.
    pub saturated: bool,
}

/// Uniform quantizer with `2^b` steps of width `q = 2·x_max·2^{-b}` covering
/// `[-x_max, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizerSpec {
    bits: u32,
    x_max: f64,
    step: f64,
}

impl UniformQuantizerSpec {
    pub fn new(bits: u32, x_max: f64) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::InvalidQuantizer(format!(
                "uniform quantizer needs 1..={MAX_BITS} bits, got {bits}"
            )));
        }
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::InvalidQuantizer(format!(
                "full scale must be positive and finite, got {x_max}"
            )));
        }
        // Scaling by a power of two is exact, so q·L = 2·x_max holds exactly.
        let step = 2.0 * x_max * pow2(-(bits as i32));
        if step == 0.0 {
            return Err(Error::InvalidQuantizer(format!(
                "step underflows for x_max = {x_max}, b = {bits}"
            )));
        }
        Ok(Self { bits, x_max, step })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Quantization interval `q`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of quantization boxes `L = 2^b`.
    pub fn num_levels(&self) -> u128 {
        1u128 << self.bits
    }
}

/// Floating-point quantizer that rounds only the mantissa `M ∈ [1/2, 1)` to
/// `b` fractional bits (step `q = 2^{-b}`).
///
/// `b = 0` is accepted so the closed-form variance can be evaluated at
/// `q = 1`, but as a quantizer it is degenerate: `1/2` is not a level, so it
/// maps every value to a power of two and is not idempotent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FloatQuantizerSpec {
    mantissa_bits: u32,
}

impl FloatQuantizerSpec {
    pub fn new(mantissa_bits: u32) -> Result<Self> {
        if mantissa_bits > MAX_BITS {
            return Err(Error::InvalidQuantizer(format!(
                "mantissa width must be at most {MAX_BITS} bits, got {mantissa_bits}"
            )));
        }
        Ok(Self { mantissa_bits })
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    /// Mantissa step `q = 2^{-b}`.
    pub fn step(&self) -> f64 {
        pow2(-(self.mantissa_bits as i32))
    }
}

/// Either quantizer model, as assigned to a pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantizerSpec {
    Uniform(UniformQuantizerSpec),
    Float(FloatQuantizerSpec),
}

impl QuantizerSpec {
    pub fn quantize(&self, x: f64) -> Quantized {
        match self {
            QuantizerSpec::Uniform(spec) => quantize_uniform(x, spec),
            QuantizerSpec::Float(spec) => quantize_float(x, spec),
        }
    }

    pub fn bits(&self) -> u32 {
        match self {
            QuantizerSpec::Uniform(spec) => spec.bits(),
            QuantizerSpec::Float(spec) => spec.mantissa_bits(),
        }
    }

    /// Closed-form error variance of the model: `q²/12` (absolute error) for
    /// the uniform quantizer, `q²/6` (relative error) for the float one.
    pub fn theoretical_variance(&self) -> f64 {
        match self {
            QuantizerSpec::Uniform(spec) => theoretical_variance_uniform(spec),
            QuantizerSpec::Float(spec) => theoretical_variance_float(spec),
        }
    }
}

impl From<UniformQuantizerSpec> for QuantizerSpec {
    fn from(spec: UniformQuantizerSpec) -> Self {
        QuantizerSpec::Uniform(spec)
    }
}

impl From<FloatQuantizerSpec> for QuantizerSpec {
    fn from(spec: FloatQuantizerSpec) -> Self {
        QuantizerSpec::Float(spec)
    }
}

/// `|x| = 2^exponent · mantissa` with `mantissa ∈ [1/2, 1)`, plus the sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatDecomposition {
    pub exponent: i32,
    pub mantissa: f64,
    pub sign: f64,
}

impl FloatDecomposition {
    /// Expander: `sign · 2^exponent · mantissa`.
    pub fn recompose(&self) -> f64 {
        self.sign * scale_pow2(self.mantissa, self.exponent)
    }
}

/// Error of one quantization.
///
/// `absolute` is `h = x − Q(x)`; `relative` is `ε = (Q(x) − x)/x` (zero at
/// `x = 0`). `alpha` is the error in the quantizer's own domain with the
/// `Q − x` sign: `Q(M) − M` for the float model, `Q(x) − x` for the uniform
/// model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationError {
    pub absolute: f64,
    pub relative: f64,
    pub alpha: f64,
}

/// `2^e` for `|e| ≤ 1022`, built from the exponent field so it is exact.
fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// `v · 2^e` without intermediate overflow; exact unless the result is
/// subnormal or out of range.
fn scale_pow2(mut v: f64, mut e: i32) -> f64 {
    while e > 1000 {
        v *= pow2(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= pow2(-1000);
        e += 1000;
    }
    v * pow2(e)
}

/// Rounds `x` to the nearest multiple of `q` (ties away from zero) and clamps
/// to `[-x_max, x_max]`.
pub fn quantize_uniform(x: f64, spec: &UniformQuantizerSpec) -> Quantized {
    let level = (x / spec.step).round() * spec.step;
    if level > spec.x_max {
        Quantized { value: spec.x_max, saturated: true }
    } else if level < -spec.x_max {
        Quantized { value: -spec.x_max, saturated: true }
    } else {
        Quantized { value: level, saturated: false }
    }
}

/// Compressor: splits `x` into sign, exponent and a mantissa in `[1/2, 1)`.
/// Zero maps to `(e = 0, M = 0, +1)`.
pub fn decompose_float(x: f64) -> FloatDecomposition {
    if x == 0.0 || !x.is_finite() {
        return FloatDecomposition { exponent: 0, mantissa: 0.0, sign: 1.0 };
    }
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let (mut magnitude, mut offset) = (x.abs(), 0);
    if magnitude < f64::MIN_POSITIVE {
        magnitude *= pow2(64);
        offset = 64;
    }
    let bits = magnitude.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = f64::from_bits((bits & !(0x7ff << 52)) | (1022u64 << 52));
    FloatDecomposition {
        exponent: biased - 1022 - offset,
        mantissa,
        sign,
    }
}

fn quantize_mantissa(mantissa: f64, spec: &FloatQuantizerSpec) -> f64 {
    // A double mantissa carries 53 significant bits, so wider steps are exact.
    if spec.mantissa_bits >= 53 {
        return mantissa;
    }
    let b = spec.mantissa_bits as i32;
    (mantissa * pow2(b)).round() * pow2(-b)
}

/// Compressor, uniform mantissa quantizer, expander: returns `2^e·Q(M)`
/// with the sign of `x`. Results beyond the double range clamp to
/// `±f64::MAX` and are flagged as saturated.
pub fn quantize_float(x: f64, spec: &FloatQuantizerSpec) -> Quantized {
    if x == 0.0 {
        return Quantized { value: x, saturated: false };
    }
    let parts = decompose_float(x);
    let value = FloatDecomposition {
        mantissa: quantize_mantissa(parts.mantissa, spec),
        ..parts
    }
    .recompose();
    if value.is_finite() {
        Quantized { value, saturated: false }
    } else {
        Quantized { value: parts.sign * f64::MAX, saturated: true }
    }
}

/// Quantizes real and imaginary parts independently.
///
/// Returns the quantized sample and the number of saturated components
/// (0, 1 or 2).
pub fn quantize_complex(z: ComplexSample, spec: &QuantizerSpec) -> (ComplexSample, u32) {
    let re = spec.quantize(z.re);
    let im = spec.quantize(z.im);
    (
        ComplexSample::new(re.value, im.value),
        u32::from(re.saturated) + u32::from(im.saturated),
    )
}

fn relative(x: f64, quantized: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (quantized - x) / x
    }
}

pub fn uniform_error(x: f64, spec: &UniformQuantizerSpec) -> QuantizationError {
    let q = quantize_uniform(x, spec).value;
    QuantizationError {
        absolute: x - q,
        relative: relative(x, q),
        alpha: q - x,
    }
}

pub fn float_error(x: f64, spec: &FloatQuantizerSpec) -> QuantizationError {
    let parts = decompose_float(x);
    let q = quantize_float(x, spec).value;
    QuantizationError {
        absolute: x - q,
        relative: relative(x, q),
        alpha: quantize_mantissa(parts.mantissa, spec) - parts.mantissa,
    }
}

/// `q²/12`, equal to `(1/3)·x_max²·2^{-2b}`.
pub fn theoretical_variance_uniform(spec: &UniformQuantizerSpec) -> f64 {
    spec.step * spec.step / 12.0
}

/// `q²/6` with `q = 2^{-b}`; the relative-error variance of the mantissa
/// quantizer for mantissas uniform on `[1/2, 1)`.
pub fn theoretical_variance_float(spec: &FloatQuantizerSpec) -> f64 {
    let q = spec.step();
    q * q / 6.0
}

/// `10·log10(σ_x² / σ_h²)`.
pub fn snr_db(signal_variance: f64, noise_variance: f64) -> Result<f64> {
    for v in [signal_variance, noise_variance] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::NonPositiveVariance(v));
        }
    }
    Ok(10.0 * (signal_variance / noise_variance).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(bits: u32, x_max: f64) -> UniformQuantizerSpec {
        UniformQuantizerSpec::new(bits, x_max).unwrap()
    }

    fn float(bits: u32) -> FloatQuantizerSpec {
        FloatQuantizerSpec::new(bits).unwrap()
    }

    #[test]
    fn uniform_spec_relations() {
        for (b, x_max) in [(1, 1.0), (3, 1.0), (8, 0.7), (12, 5.0), (64, 1.0)] {
            let s = uniform(b, x_max);
            assert!(s.step() > 0.0);
            assert_eq!(s.num_levels(), 1u128 << b);
            let span = s.step() * s.num_levels() as f64;
            assert!((span - 2.0 * x_max).abs() <= 1e-12 * x_max);
        }
        assert_eq!(uniform(3, 1.0).step(), 0.25);
        assert!(UniformQuantizerSpec::new(0, 1.0).is_err());
        assert!(UniformQuantizerSpec::new(65, 1.0).is_err());
        assert!(UniformQuantizerSpec::new(8, 0.0).is_err());
        assert!(UniformQuantizerSpec::new(8, f64::NAN).is_err());
    }

    #[test]
    fn uniform_examples() {
        let s = uniform(3, 1.0);
        assert_eq!(quantize_uniform(0.3, &s), Quantized { value: 0.25, saturated: false });
        assert_eq!(quantize_uniform(0.0, &s).value, 0.0);
        assert_eq!(quantize_uniform(0.0, &uniform(17, 3.3)).value, 0.0);
        assert_eq!(quantize_uniform(5.0, &s), Quantized { value: 1.0, saturated: true });
        assert_eq!(quantize_uniform(-5.0, &s), Quantized { value: -1.0, saturated: true });
        assert_eq!(quantize_uniform(1.0, &s), Quantized { value: 1.0, saturated: false });
    }

    #[test]
    fn uniform_midpoints_round_away_from_zero() {
        let s = uniform(3, 1.0);
        assert_eq!(quantize_uniform(0.125, &s).value, 0.25);
        assert_eq!(quantize_uniform(-0.125, &s).value, -0.25);
        assert_eq!(quantize_uniform(0.375, &s).value, 0.5);
    }

    #[test]
    fn uniform_error_bounded_within_full_scale() {
        let s = uniform(6, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            let e = uniform_error(x, &s);
            assert!(e.absolute.abs() <= s.step() / 2.0 + 1e-15);
            assert_eq!(e.alpha, -e.absolute);
        }
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(
            decompose_float(1.625),
            FloatDecomposition { exponent: 1, mantissa: 0.8125, sign: 1.0 }
        );
        assert_eq!(
            decompose_float(0.5),
            FloatDecomposition { exponent: 0, mantissa: 0.5, sign: 1.0 }
        );
        assert_eq!(
            decompose_float(-3.0),
            FloatDecomposition { exponent: 2, mantissa: 0.75, sign: -1.0 }
        );
        assert_eq!(
            decompose_float(0.0),
            FloatDecomposition { exponent: 0, mantissa: 0.0, sign: 1.0 }
        );
    }

    #[test]
    fn decompose_extremes_round_trip() {
        for x in [
            f64::MAX,
            -f64::MAX,
            f64::MIN_POSITIVE,
            f64::MIN_POSITIVE / 3.0,
            5e-324,
            -5e-324,
            1.0,
            std::f64::consts::PI,
        ] {
            let d = decompose_float(x);
            assert!((0.5..1.0).contains(&d.mantissa), "{x}: {d:?}");
            assert_eq!(d.recompose(), x);
        }
    }

    #[test]
    fn float_examples() {
        let s = float(2);
        assert_eq!(s.step(), 0.25);
        assert_eq!(quantize_float(1.625, &s).value, 1.5);
        let e = float_error(1.625, &s);
        assert!((e.relative - (-0.125 / 1.625)).abs() < 1e-15);
        assert_eq!(e.alpha, -0.0625);
        for b in 1..=20 {
            assert_eq!(quantize_float(0.5, &float(b)).value, 0.5);
        }
        assert_eq!(quantize_float(0.0, &s).value, 0.0);
        // M = 0.96875 rounds up to 1.0, carrying into the exponent.
        assert_eq!(quantize_float(0.96875, &s).value, 1.0);
    }

    #[test]
    fn float_overflow_saturates() {
        let q = quantize_float(f64::MAX, &float(2));
        assert!(q.saturated);
        assert_eq!(q.value, f64::MAX);
        let q = quantize_float(-f64::MAX, &float(2));
        assert_eq!(q.value, -f64::MAX);
    }

    #[test]
    fn float_wide_mantissa_is_identity() {
        let s = float(53);
        for x in [0.1, -7.3e-300, 1e300, 5e-324] {
            assert_eq!(quantize_float(x, &s).value, x);
        }
    }

    #[test]
    fn float_relative_error_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for b in [1, 4, 10] {
            let s = float(b);
            for _ in 0..20_000 {
                let x: f64 = rng.gen_range(-1e6..1e6);
                let e = float_error(x, &s);
                let m = decompose_float(x).mantissa;
                assert!(e.alpha.abs() <= s.step() / 2.0);
                assert!(e.relative.abs() <= s.step());
                assert_eq!(e.relative, e.alpha / m);
            }
        }
    }

    #[test]
    fn complex_examples() {
        let u = QuantizerSpec::from(uniform(3, 1.0));
        assert_eq!(quantize_complex(ComplexSample::ZERO, &u), (ComplexSample::ZERO, 0));
        assert_eq!(
            quantize_complex(ComplexSample::new(0.3, -0.3), &u),
            (ComplexSample::new(0.25, -0.25), 0)
        );
        assert_eq!(quantize_complex(ComplexSample::new(3.0, -3.0), &u).1, 2);
        let f = QuantizerSpec::from(float(2));
        assert_eq!(
            quantize_complex(ComplexSample::new(1.625, 0.5), &f),
            (ComplexSample::new(1.5, 0.5), 0)
        );
    }

    #[test]
    fn theoretical_variances() {
        assert!((theoretical_variance_uniform(&uniform(1, 1.0)) - 1.0 / 12.0).abs() < 1e-15);
        let v8 = theoretical_variance_uniform(&uniform(8, 1.0));
        assert!((v8 - 5.0863e-6).abs() < 1e-9);
        assert!((v8 - (1.0 / 3.0) * 2f64.powi(-16)).abs() < 1e-20);
        let v_coarse = theoretical_variance_uniform(&uniform(7, 1.0));
        assert!((v_coarse / v8 - 4.0).abs() < 1e-12);

        assert!((theoretical_variance_float(&float(0)) - 0.16667).abs() < 1e-5);
        assert!((theoretical_variance_float(&float(1)) - 0.041667).abs() < 1e-6);
        for b in 0..20 {
            let ratio = theoretical_variance_float(&float(b)) / theoretical_variance_float(&float(b + 1));
            assert!((ratio - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn snr_examples() {
        assert!((snr_db(1.0, 0.001).unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(snr_db(0.25, 0.25).unwrap(), 0.0);
        assert_eq!(snr_db(1.0, 0.0), Err(Error::NonPositiveVariance(0.0)));
        assert_eq!(snr_db(-1.0, 1.0), Err(Error::NonPositiveVariance(-1.0)));
        for b in 1..30 {
            let lo = snr_db(1.0, theoretical_variance_uniform(&uniform(b, 1.0))).unwrap();
            let hi = snr_db(1.0, theoretical_variance_uniform(&uniform(b + 1, 1.0))).unwrap();
            assert!((hi - lo - 20.0 * 2f64.log10()).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn uniform_idempotent_and_odd(x in -4.0f64..4.0, bits in 1u32..24, x_max in 0.1f64..3.0) {
            let s = uniform(bits, x_max);
            let once = quantize_uniform(x, &s).value;
            prop_assert_eq!(quantize_uniform(once, &s).value, once);
            prop_assert_eq!(quantize_uniform(-x, &s).value, -once);
        }

        #[test]
        fn float_idempotent_and_odd(x in -1e12f64..1e12, bits in 1u32..60) {
            let s = float(bits);
            let once = quantize_float(x, &s).value;
            prop_assert_eq!(quantize_float(once, &s).value, once);
            prop_assert_eq!(quantize_float(-x, &s).value, -once);
        }

        #[test]
        fn compressor_expander_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite() && x != 0.0);
            let d = decompose_float(x);
            prop_assert!((0.5..1.0).contains(&d.mantissa));
            prop_assert_eq!(d.recompose(), x);
        }
    }
}
