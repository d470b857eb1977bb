use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fits with fewer points than this are refused.
pub const MIN_WINDOW: usize = 50;

/// Half-open index range `[begin, end)` into a gap sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub begin: usize,
    pub end: usize,
}

impl Window {
    pub fn new(begin: usize, end: usize) -> Self {
        Self { begin, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.begin)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `gap_k ≈ C·(1 + rho_hat)^{−k}` over `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rho_hat: f64,
    /// `(k_begin, k_end)`, half-open.
    pub window: (usize, usize),
    pub r_squared: f64,
    /// Slope of `ln(gap_k)` against `k`.
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(k, ln gap_k)` for `k` in `window`.
///
/// The window is cut at the first nonpositive (or non-finite) gap.
pub fn fit_linear_rate(gaps: &[f64], window: Window) -> Result<RateFit> {
    let begin = window.begin;
    let end = window.end.min(gaps.len());
    let mut stop = begin;
    while stop < end && gaps[stop] > 0.0 && gaps[stop].is_finite() {
        stop += 1;
    }
    if stop <= begin {
        return Err(Error::FitUnavailable(format!(
            "no positive gaps in window [{begin}, {end})"
        )));
    }
    if stop - begin < MIN_WINDOW {
        return Err(Error::FitUnavailable(format!(
            "window [{begin}, {stop}) has {} points, need {MIN_WINDOW}",
            stop - begin
        )));
    }

    let n = (stop - begin) as f64;
    let ks = (begin..stop).map(|k| k as f64);
    let k_mean = ks.clone().sum::<f64>() / n;
    let logs: Vec<f64> = gaps[begin..stop].iter().map(|g| g.ln()).collect();
    let l_mean = logs.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (k, l) in ks.zip(&logs) {
        let dk = k - k_mean;
        sxx += dk * dk;
        sxy += dk * (l - l_mean);
    }
    let slope = sxy / sxx;
    let intercept = l_mean - slope * k_mean;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (i, l) in logs.iter().enumerate() {
        let k = (begin + i) as f64;
        let r = l - (intercept + slope * k);
        ss_res += r * r;
        ss_tot += (l - l_mean) * (l - l_mean);
    }
    // Spread at the level of rounding in the logs means a flat line, which
    // the fit reproduces exactly.
    let flat = (f64::EPSILON * (1.0 + l_mean.abs())).powi(2) * n * 16.0;
    let r_squared = if ss_tot > flat {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        rho_hat: (-slope).exp() - 1.0,
        window: (begin, stop),
        r_squared,
        slope,
        intercept,
    })
}

/// Gaps below `1e-12·|F*|·k` (100× the accumulated rounding estimate) carry
/// no rate information.
pub fn gap_floor(f_star: f64, k: usize) -> f64 {
    (1e-12 * f_star.abs() * k as f64).max(f64::MIN_POSITIVE)
}

/// Last 60% of the prefix whose gaps are positive and above the noise floor,
/// widened to `MIN_WINDOW` points when the prefix is short.
pub fn default_window(gaps: &[f64], f_star: f64) -> Window {
    let usable = gaps
        .iter()
        .enumerate()
        .position(|(k, &g)| !(g.is_finite() && g > gap_floor(f_star, k)))
        .unwrap_or(gaps.len());
    let len = ((usable * 3) / 5).max(MIN_WINDOW).min(usable);
    let begin = usable - len;
    Window::new(begin, usable)
}

/// `fit_linear_rate` over `default_window`.
pub fn fit_default(gaps: &[f64], f_star: f64) -> Result<RateFit> {
    fit_linear_rate(gaps, default_window(gaps, f_star))
}
