//! Black–Scholes pricing with zero carry, implied-volatility inversion and
//! the normal-distribution numerics everything else is built on.
//!
//! Out-of-the-money prices are evaluated through the Mills ratio
//! `M(x) = N(-x) / φ(x)` so that deep-OTM, short-dated quotes keep full
//! relative precision (and stay usable in log space long after the price
//! itself has underflowed).

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use thiserror::Error;

/// Largest volatility the inversion will return.
pub const VOL_MAX: f64 = 10.0;
/// Smallest volatility the inversion searches.
pub const VOL_MIN: f64 = 1e-9;
const IV_MAX_ITER: usize = 200;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BsError {
    #[error("invalid quote: {0}")]
    InvalidInput(&'static str),
    #[error("price {price} outside the no-arbitrage band ({lower}, {upper})")]
    PriceOutOfBand { price: f64, lower: f64, upper: f64 },
    #[error("implied volatility did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// A single European quote with zero carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsQuote {
    pub spot: f64,
    pub strike: f64,
    pub tau: f64,
    pub vol: f64,
    pub kind: OptionKind,
}

impl BsQuote {
    pub fn new(spot: f64, strike: f64, tau: f64, vol: f64, kind: OptionKind) -> Result<Self, BsError> {
        if !(spot > 0.0 && spot.is_finite()) {
            return Err(BsError::InvalidInput("spot must be positive"));
        }
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(BsError::InvalidInput("strike must be positive"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(BsError::InvalidInput("tau must be positive"));
        }
        if !(vol >= 0.0 && vol.is_finite()) {
            return Err(BsError::InvalidInput("vol must be nonnegative"));
        }
        Ok(Self { spot, strike, tau, vol, kind })
    }
}

// ---------------------------------------------------------------------------
// Error function family
// ---------------------------------------------------------------------------

/// Scaled complementary error function `e^{x²} erfc(x)` for `x >= 0`.
fn erfcx_nonneg(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 1.0 {
        // erf(x) = 2/√π e^{-x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!, all terms positive.
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
        }
        let erf = 2.0 / SQRT_PI * (-x2).exp() * sum;
        (x2).exp() * (1.0 - erf)
    } else {
        // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        // evaluated with the modified Lentz algorithm.
        const TINY: f64 = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..5000 {
            let a = 0.5 * k as f64;
            d = x + a * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = x + a / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 / (SQRT_PI * f)
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x > 27.3 {
        return 0.0;
    }
    (-x * x).exp() * erfcx_nonneg(x)
}

/// Scaled complementary error function `e^{x²} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x >= 0.0 {
        erfcx_nonneg(x)
    } else {
        2.0 * (x * x).exp() - erfcx_nonneg(-x)
    }
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = -x * FRAC_1_SQRT_2;
    if z < 1.0 {
        0.5 * erfc(z)
    } else {
        // lower tail: keep relative accuracy through the Mills ratio
        norm_pdf(x) * mills_ratio(-x)
    }
}

/// Mills ratio `N(-x) / φ(x)`.
pub fn mills_ratio(x: f64) -> f64 {
    if x >= 0.0 {
        (PI / 2.0).sqrt() * erfcx_nonneg(x * FRAC_1_SQRT_2)
    } else {
        // N(|x|)/φ(x) = 1/φ(x) - M(|x|)
        1.0 / norm_pdf(x) - mills_ratio(-x)
    }
}

// ---------------------------------------------------------------------------
// Pricing
// ---------------------------------------------------------------------------

/// Natural log of the out-of-the-money option price (call if `strike >= spot`,
/// put otherwise). Returns `-inf` when `vol * sqrt(tau) == 0`.
pub fn ln_otm_price(spot: f64, strike: f64, tau: f64, vol: f64) -> f64 {
    let v = vol * tau.sqrt();
    if v <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let x = (spot / strike).ln().abs();
    let a = x / v - 0.5 * v;
    let reference = if strike >= spot { spot } else { strike };
    if a >= -5.0 {
        let b = a + v;
        let diff = mills_ratio(a) - mills_ratio(b);
        reference.ln() - 0.5 * a * a - LN_SQRT_2PI + diff.ln()
    } else {
        // large total volatility: the direct formula has no cancellation here
        let d1 = -a;
        let d2 = -a - v;
        let p = if strike >= spot {
            spot * norm_cdf(d1) - strike * norm_cdf(d2)
        } else {
            strike * norm_cdf(-d2) - spot * norm_cdf(-d1)
        };
        p.ln()
    }
}

fn otm_kind(spot: f64, strike: f64) -> OptionKind {
    if strike >= spot {
        OptionKind::Call
    } else {
        OptionKind::Put
    }
}

pub fn call_price(spot: f64, strike: f64, tau: f64, vol: f64) -> f64 {
    let otm = ln_otm_price(spot, strike, tau, vol).exp();
    if strike >= spot {
        otm
    } else {
        (spot - strike) + otm
    }
}

pub fn put_price(spot: f64, strike: f64, tau: f64, vol: f64) -> f64 {
    let otm = ln_otm_price(spot, strike, tau, vol).exp();
    if strike <= spot {
        otm
    } else {
        (strike - spot) + otm
    }
}

/// Black–Scholes price with zero interest and dividend rates.
pub fn bs_price(q: &BsQuote) -> f64 {
    match q.kind {
        OptionKind::Call => call_price(q.spot, q.strike, q.tau, q.vol),
        OptionKind::Put => put_price(q.spot, q.strike, q.tau, q.vol),
    }
}

/// Price of `kind` from the out-of-the-money price via parity.
pub fn price_from_otm(otm: f64, spot: f64, strike: f64, kind: OptionKind) -> f64 {
    match (kind, otm_kind(spot, strike)) {
        (OptionKind::Call, OptionKind::Call) | (OptionKind::Put, OptionKind::Put) => otm,
        (OptionKind::Call, OptionKind::Put) => otm + (spot - strike),
        (OptionKind::Put, OptionKind::Call) => otm + (strike - spot),
    }
}

// ---------------------------------------------------------------------------
// Implied volatility
// ---------------------------------------------------------------------------

/// Implied volatility of a zero-carry European price.
///
/// The price must lie strictly inside the static band: a call in
/// `((spot - strike)⁺, spot)`, a put in `((strike - spot)⁺, strike)`.
pub fn implied_vol(price: f64, spot: f64, strike: f64, tau: f64, kind: OptionKind) -> Result<f64, BsError> {
    BsQuote::new(spot, strike, tau, 0.0, kind)?;
    if !price.is_finite() {
        return Err(BsError::InvalidInput("price must be finite"));
    }
    let (lower, upper) = match kind {
        OptionKind::Call => ((spot - strike).max(0.0), spot),
        OptionKind::Put => ((strike - spot).max(0.0), strike),
    };
    if price <= lower || price >= upper {
        return Err(BsError::PriceOutOfBand { price, lower, upper });
    }
    // time value = price of the OTM option by parity
    let otm = price - lower;
    if otm <= 0.0 {
        return Err(BsError::PriceOutOfBand { price, lower, upper });
    }
    implied_vol_from_ln_otm(otm.ln(), spot, strike, tau)
}

/// Implied volatility from the log of the out-of-the-money price.
///
/// Works for prices far below the smallest positive double, which is what
/// short-maturity model smiles produce in the wings.
pub fn implied_vol_from_ln_otm(ln_price: f64, spot: f64, strike: f64, tau: f64) -> Result<f64, BsError> {
    if !ln_price.is_finite() {
        return Err(BsError::InvalidInput("log price must be finite"));
    }
    let reference = spot.min(strike);
    if ln_price >= reference.ln() {
        return Err(BsError::PriceOutOfBand {
            price: ln_price.exp(),
            lower: 0.0,
            upper: reference,
        });
    }
    let g = |v: f64| ln_otm_price(spot, strike, tau, v) - ln_price;
    let ftol = 4.0 * f64::EPSILON * ln_price.abs().max(1.0);

    let (mut a, mut b) = (VOL_MIN, VOL_MAX);
    let (mut fa, mut fb) = (g(a), g(b));
    if fb < 0.0 || fa > 0.0 {
        return Err(BsError::NoConvergence { iterations: 0 });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }

    // Brent's method: secant / inverse-quadratic steps guarded by bisection.
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..IV_MAX_ITER {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let xtol = 2.0 * f64::EPSILON * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= xtol || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= xtol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (xtol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > xtol { d } else { xtol.copysign(m) };
        fb = g(b);
    }
    Err(BsError::NoConvergence { iterations: IV_MAX_ITER })
}
