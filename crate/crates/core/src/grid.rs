//! Uniform frequency axis shared by the engraving and propagation stages.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform grid of `n` points spaced `df` Hz, centred on `f0`.
///
/// Point `i` sits at `f0 + (i - (n - 1) / 2) * df`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub f0: f64,
    pub df: f64,
    pub n: usize,
}

impl FrequencyGrid {
    pub fn new(f0: f64, df: f64, n: usize) -> Result<Self> {
        if !(df > 0.0) || !df.is_finite() {
            return Err(Error::param("df", format!("must be finite and > 0, got {df}")));
        }
        if n < 2 {
            return Err(Error::param("n", format!("need at least 2 points, got {n}")));
        }
        if !f0.is_finite() {
            return Err(Error::param("f0", "must be finite"));
        }
        Ok(FrequencyGrid { f0, df, n })
    }

    /// Smallest centred grid with step `df` covering `[lo, hi]`.
    pub fn spanning(lo: f64, hi: f64, df: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::param("span", format!("empty range [{lo}, {hi}]")));
        }
        let n = ((hi - lo) / df).ceil() as usize + 1;
        FrequencyGrid::new(0.5 * (lo + hi), df, n.max(2))
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.f0 - 0.5 * (self.n - 1) as f64 * self.df
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.f0 + 0.5 * (self.n - 1) as f64 * self.df
    }

    #[inline]
    pub fn freq(&self, i: usize) -> f64 {
        self.start() + i as f64 * self.df
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.freq(i))
    }

    pub fn span(&self) -> f64 {
        self.end() - self.start()
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.start() && f <= self.end()
    }

    /// Fractional index of `f` (may lie outside `0..n`).
    #[inline]
    pub fn position(&self, f: f64) -> f64 {
        (f - self.start()) / self.df
    }

    pub fn nearest_index(&self, f: f64) -> Option<usize> {
        let p = self.position(f).round();
        (p >= 0.0 && p < self.n as f64).then_some(p as usize)
    }

    /// Linear interpolation of `values` (sampled on this grid) at `f`;
    /// returns `outside` beyond the ends.
    #[inline]
    pub fn interpolate(&self, values: &[f64], f: f64, outside: f64) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let p = self.position(f);
        if !(p >= 0.0) || p > (self.n - 1) as f64 {
            return outside;
        }
        let i = p.floor() as usize;
        if i + 1 >= self.n {
            return values[self.n - 1];
        }
        let w = p - i as f64;
        values[i] * (1.0 - w) + values[i + 1] * w
    }
}
