//! Transform mathematics: twiddle factors, the radix-2 butterfly, bit
//! reversal, the direct `O(N^2)` DFT used as a reference, and the recursive
//! radix-p decimation-in-time split.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use crate::complex::{checked_log2, ComplexSample, SignalBlock, MAX_SIZE};
use crate::error::{Error, Result};

/// Returns `W_N^k = e^{-j 2πk/N}` as `(cos(2πk/N), -sin(2πk/N))`.
///
/// The angle is reduced to the first octant before calling `sin`/`cos`, so
/// quarter and eighth turns come out exact (`W_4^1` is exactly `(0, -1)`)
/// and the table is symmetric to the last bit.
pub fn twiddle_factor(n_size: usize, k: usize) -> Result<ComplexSample> {
    if !n_size.is_power_of_two() || n_size > MAX_SIZE {
        return Err(Error::InvalidSize(n_size));
    }
    if k >= n_size {
        return Err(Error::IndexOutOfRange { index: k, n_size });
    }
    let (cos, sin) = unit_circle(n_size, k);
    Ok(ComplexSample::new(cos, -sin))
}

/// `(cos θ, sin θ)` for `θ = 2πk/N`, `k < N`, `N` a power of two.
fn unit_circle(n_size: usize, k: usize) -> (f64, f64) {
    // θ = (π/2)·(4k/N): quadrant from the integer part, residue in [0, N).
    let scaled = 4 * k;
    let quadrant = scaled / n_size;
    let residue = scaled % n_size;
    let (c, s) = if 2 * residue == n_size {
        (FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    } else if 2 * residue < n_size {
        let phi = FRAC_PI_2 * residue as f64 / n_size as f64;
        (phi.cos(), phi.sin())
    } else {
        let phi = FRAC_PI_2 * (n_size - residue) as f64 / n_size as f64;
        (phi.sin(), phi.cos())
    };
    match quadrant {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

/// The first half of the twiddle factors for an `N`-point transform,
/// `W_N^k` for `k = 0 .. N/2`, optionally conjugated for the inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct TwiddleTable {
    n_size: usize,
    factors: Vec<ComplexSample>,
    conjugated: bool,
}

impl TwiddleTable {
    pub fn new(n_size: usize, conjugated: bool) -> Result<Self> {
        checked_log2(n_size)?;
        let factors = (0..n_size / 2)
            .map(|k| {
                let (cos, sin) = unit_circle(n_size, k);
                if conjugated {
                    ComplexSample::new(cos, sin)
                } else {
                    ComplexSample::new(cos, -sin)
                }
            })
            .collect();
        Ok(Self {
            n_size,
            factors,
            conjugated,
        })
    }

    pub fn n_size(&self) -> usize {
        self.n_size
    }

    pub fn is_conjugated(&self) -> bool {
        self.conjugated
    }

    pub fn factors(&self) -> &[ComplexSample] {
        &self.factors
    }

    #[inline]
    pub fn get(&self, k: usize) -> ComplexSample {
        self.factors[k]
    }

    /// Applies `f` to every factor, e.g. to model a quantized coefficient ROM.
    pub fn map_factors(&self, f: impl FnMut(ComplexSample) -> ComplexSample) -> Self {
        Self {
            n_size: self.n_size,
            factors: self.factors.iter().copied().map(f).collect(),
            conjugated: self.conjugated,
        }
    }
}

/// Bit-reversal permutation: entry `i` holds `i` with its `log2(N)` low bits
/// reversed.
pub fn bit_reverse_indices(n_size: usize) -> Result<Vec<usize>> {
    let bits = checked_log2(n_size)?;
    Ok((0..n_size)
        .map(|i| i.reverse_bits() >> (usize::BITS - bits))
        .collect())
}

/// Tallies of complex arithmetic performed by butterflies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub complex_multiplies: u64,
    pub complex_additions: u64,
}

impl OpCounters {
    /// Counts expected after one full `N`-point radix-2 transform:
    /// `(N/2)·log2 N` multiplies and `N·log2 N` additions.
    pub fn expected_for(n_size: usize) -> Result<Self> {
        let m = u64::from(checked_log2(n_size)?);
        let n = n_size as u64;
        Ok(Self {
            complex_multiplies: n / 2 * m,
            complex_additions: n * m,
        })
    }
}

/// Radix-2 DIT butterfly: returns `(a + w·b, a − w·b)`.
#[inline]
pub fn butterfly_dit(
    a: ComplexSample,
    b: ComplexSample,
    w: ComplexSample,
) -> (ComplexSample, ComplexSample) {
    let t = w * b;
    (a + t, a - t)
}

/// [`butterfly_dit`] that also records one multiply and two additions.
#[inline]
pub fn butterfly_dit_counted(
    a: ComplexSample,
    b: ComplexSample,
    w: ComplexSample,
    counters: &mut OpCounters,
) -> (ComplexSample, ComplexSample) {
    counters.complex_multiplies += 1;
    counters.complex_additions += 2;
    butterfly_dit(a, b, w)
}

fn full_twiddles(n_size: usize, conjugated: bool) -> Vec<ComplexSample> {
    (0..n_size)
        .map(|k| {
            let (cos, sin) = unit_circle(n_size, k);
            ComplexSample::new(cos, if conjugated { sin } else { -sin })
        })
        .collect()
}

fn direct_sum(x: &[ComplexSample], conjugated: bool) -> Vec<ComplexSample> {
    let n = x.len();
    let w = full_twiddles(n, conjugated);
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .fold(ComplexSample::ZERO, |acc, (i, &xi)| acc + xi * w[(k * i) % n])
        })
        .collect()
}

/// Direct DFT, `X[k] = Σ_n x[n]·W_N^{kn}`, by the literal double loop.
pub fn dft_direct(x: &SignalBlock) -> Result<SignalBlock> {
    SignalBlock::new(direct_sum(x.as_slice(), false))
}

/// Direct inverse DFT, `x[n] = (1/N)·Σ_k X[k]·conj(W_N)^{kn}`.
pub fn idft_direct(spectrum: &SignalBlock) -> Result<SignalBlock> {
    let scale = 1.0 / spectrum.len() as f64;
    SignalBlock::new(
        direct_sum(spectrum.as_slice(), true)
            .into_iter()
            .map(|z| z.scale(scale))
            .collect(),
    )
}

/// DFT through repeated radix-p decimation in time.
///
/// Each level splits the input into `p` decimated subsequences
/// `x[pn + j]`, transforms them recursively, and combines them as
///
/// ```text
/// X[k + r·N/p] = Σ_j W_p^{jr} · W_N^{jk} · Y_j[k],   k < N/p, r < p
/// ```
///
/// where `Y_j[k] = Σ_n x[pn + j]·W_{N/p}^{nk}`. Recursion stops at blocks of
/// size `p` or smaller (or when `p` no longer divides the block), which are
/// evaluated directly.
pub fn radix_p_decompose(x: &SignalBlock, radix: usize) -> Result<SignalBlock> {
    if radix != 2 && radix != 4 {
        return Err(Error::UnsupportedRadix(radix));
    }
    let n = x.len();
    if !n.is_multiple_of(radix) {
        return Err(Error::RadixDoesNotDivide { radix, n_size: n });
    }
    SignalBlock::new(decompose(x.as_slice(), radix))
}

fn decompose(x: &[ComplexSample], radix: usize) -> Vec<ComplexSample> {
    let n = x.len();
    if n <= radix || !n.is_multiple_of(radix) {
        return direct_sum(x, false);
    }
    let sub_len = n / radix;
    let subs: Vec<Vec<ComplexSample>> = (0..radix)
        .map(|j| {
            let decimated: Vec<ComplexSample> = x.iter().skip(j).step_by(radix).copied().collect();
            decompose(&decimated, radix)
        })
        .collect();

    let w_n = full_twiddles(n, false);
    let w_p = full_twiddles(radix, false);
    let mut out = vec![ComplexSample::ZERO; n];
    for r in 0..radix {
        for k in 0..sub_len {
            out[k + r * sub_len] = subs.iter().enumerate().fold(ComplexSample::ZERO, |acc, (j, y)| {
                acc + w_p[(j * r) % radix] * w_n[(j * k) % n] * y[k]
            });
        }
    }
    out
}
