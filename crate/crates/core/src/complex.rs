use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported transform size.
pub const MAX_SIZE: usize = 1 << 20;

/// A complex amplitude `re + j·im`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexSample {
    pub re: f64,
    pub im: f64,
}

impl ComplexSample {
    pub const ZERO: Self = Self { re: 0.0, im: 0.0 };
    pub const ONE: Self = Self { re: 1.0, im: 0.0 };

    #[inline]
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    pub const fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    #[inline]
    pub fn scale(self, factor: f64) -> Self {
        Self::new(self.re * factor, self.im * factor)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for ComplexSample {
    type Output = Self;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for ComplexSample {
    type Output = Self;

    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for ComplexSample {
    type Output = Self;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Neg for ComplexSample {
    type Output = Self;

    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl fmt::Display for ComplexSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_sign_negative() {
            write!(f, "{}-{}j", self.re, -self.im)
        } else {
            write!(f, "{}+{}j", self.re, self.im)
        }
    }
}

/// Returns `log2(n)` when `n` is a supported transform size.
pub fn checked_log2(n_size: usize) -> Result<u32> {
    if n_size.is_power_of_two() && (2..=MAX_SIZE).contains(&n_size) {
        Ok(n_size.trailing_zeros())
    } else {
        Err(Error::InvalidSize(n_size))
    }
}

/// An `N`-sample block in either the time or the frequency domain.
///
/// `N` is a power of two in `[2, 2^20]` and every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBlock {
    samples: Vec<ComplexSample>,
}

impl SignalBlock {
    pub fn new(samples: Vec<ComplexSample>) -> Result<Self> {
        checked_log2(samples.len())?;
        if let Some(pos) = samples.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { samples })
    }

    /// Builds a block from real samples, imaginary parts zero.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| ComplexSample::real(v)).collect())
    }

    /// Unit impulse `δ[n]` of length `n_size`.
    pub fn impulse(n_size: usize) -> Result<Self> {
        checked_log2(n_size)?;
        let mut samples = vec![ComplexSample::ZERO; n_size];
        samples[0] = ComplexSample::ONE;
        Ok(Self { samples })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[ComplexSample] {
        &self.samples
    }

    pub fn into_inner(self) -> Vec<ComplexSample> {
        self.samples
    }

    /// `log2(N)`; always valid for a constructed block.
    pub fn log2_len(&self) -> u32 {
        self.samples.len().trailing_zeros()
    }

    /// Largest componentwise `|self - other|`, the metric used by every
    /// oracle comparison in this crate.
    pub fn max_abs_diff(&self, other: &SignalBlock) -> Result<f64> {
        max_abs_diff(self.as_slice(), other.as_slice())
    }
}

impl std::ops::Index<usize> for SignalBlock {
    type Output = ComplexSample;

    fn index(&self, index: usize) -> &ComplexSample {
        &self.samples[index]
    }
}

impl AsRef<[ComplexSample]> for SignalBlock {
    fn as_ref(&self) -> &[ComplexSample] {
        &self.samples
    }
}

/// Largest componentwise absolute difference between two equal-length slices.
pub fn max_abs_diff(a: &[ComplexSample], b: &[ComplexSample]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x.re - y.re).abs().max((x.im - y.im).abs()))
        .fold(0.0, f64::max))
}
