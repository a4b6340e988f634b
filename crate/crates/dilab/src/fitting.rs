//! Small regression helpers shared by the studies: log-log power-law fits
//! for convergence orders and decay exponents, and Richardson extrapolation
//! with an order fitted from the data instead of assumed.

use crate::error::{DilabError, Result};

#[derive(Clone, Copy, Debug)]
pub struct PowerLawFit {
    /// Slope of log y against log x.
    pub exponent: f64,
    /// y ≈ prefactor · x^exponent.
    pub prefactor: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared: f64,
}

/// Least-squares fit of y = C·x^q through the logs. Every sample must be
/// strictly positive; callers that may hit a zero residual should clamp or
/// filter first.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(DilabError::InvalidParameter(
            "power-law fit needs at least two matched samples".into(),
        ));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(DilabError::InvalidParameter(
            "power-law fit needs strictly positive finite samples".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(DilabError::InvalidParameter(
            "power-law fit needs at least two distinct abscissae".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: (my - slope * mx).exp(),
        r_squared,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct RichardsonResult {
    /// Best available value: the extrapolant, or the finest sample when the
    /// ladder does not support extrapolation.
    pub value: f64,
    /// Fitted convergence order in the step parameter.
    pub order: f64,
    /// False when successive differences were not safely contracting and the
    /// finest sample was returned as-is.
    pub extrapolated: bool,
}

/// Richardson extrapolation over a three-rung ladder v(h), v(h/2), v(h/4).
///
/// The order is fitted as q = log2(Δ₀/Δ₁) from the successive differences
/// rather than assumed, because discretization orders here are frequently
/// non-integer (smoothing parameters, plateau widths). The fit needs the
/// differences to contract by a margin; otherwise the finest value stands.
pub fn richardson_halving(values: &[f64; 3]) -> RichardsonResult {
    let d0 = values[1] - values[0];
    let d1 = values[2] - values[1];
    let ratio = d0 / d1;
    // Same-signed, contracting differences with enough room that the
    // geometric-tail formula is meaningful.
    if !ratio.is_finite() || ratio <= 1.05 {
        return RichardsonResult {
            value: values[2],
            order: f64::NAN,
            extrapolated: false,
        };
    }
    let order = ratio.log2();
    let factor = 2f64.powf(order) - 1.0;
    RichardsonResult {
        value: values[2] + d1 / factor,
        order,
        extrapolated: true,
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TrendFlags {
    /// Every successive sample strictly smaller than the one before.
    pub monotone_decreasing: bool,
    /// Finest sample is under the floor where roundoff dominates and fitted
    /// orders stop being meaningful.
    pub at_floor: bool,
}

pub fn trend_flags(values: &[f64], floor: f64) -> TrendFlags {
    TrendFlags {
        monotone_decreasing: values.windows(2).all(|w| w[1] < w[0]),
        at_floor: values.last().is_some_and(|v| v.abs() < floor),
    }
}
