//! Piecewise constant local variance gamma models.
//!
//! The underlying is `X_t = D_{t²ξ}` where `D` solves
//! `dD = √2 σ(D) dW` absorbed at zero, `σ(x) = σ₁` below the barrier `U` and
//! `σ₂` at or above it, and `ξ` is an independent unit exponential. European
//! prices are available in closed form when the spot sits at the barrier.

mod hedge;
mod sim;

pub use hedge::{
    hedge_envelopes, hedge_kinks, put_via_calls_series, reflected_strike, reflected_strike_inverse,
    sandwich_check, static_hedge_payoff, SandwichGaps,
};
pub use sim::{simulate_pclvg, mc_mean, McEstimate, SimConfig, SimSample};

use crate::bs;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PclvgError {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("spot {spot} is not at the barrier {barrier}; closed forms only hold at the barrier")]
    SpotNotAtBarrier { spot: f64, barrier: f64 },
    #[error("short-term limit is undefined at the barrier")]
    StrikeAtBarrier,
    #[error("strike {strike} lies above the barrier {barrier}")]
    StrikeAboveBarrier { strike: f64, barrier: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("series did not reach tolerance within {terms} terms")]
    SeriesBudgetExceeded { terms: usize },
    #[error(transparent)]
    ImpliedVol(#[from] bs::BsError),
}

/// Model identity: the two local-variance levels and the barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PclvgParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub barrier: f64,
}

impl PclvgParams {
    pub fn new(sigma1: f64, sigma2: f64, barrier: f64) -> Result<Self, PclvgError> {
        if !(sigma1 > 0.0 && sigma1.is_finite()) {
            return Err(PclvgError::InvalidParams("sigma1 must be positive and finite"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(PclvgError::InvalidParams("sigma2 must be positive and finite"));
        }
        if !(barrier > 0.0 && barrier.is_finite()) {
            return Err(PclvgError::InvalidParams("barrier must be positive and finite"));
        }
        Ok(Self { sigma1, sigma2, barrier })
    }

    /// Parameters with `sigma2 = ratio * sigma1`.
    pub fn from_ratio(sigma1: f64, ratio: f64, barrier: f64) -> Result<Self, PclvgError> {
        Self::new(sigma1, ratio * sigma1, barrier)
    }

    /// Skew ratio `σ₂ / σ₁`.
    pub fn skew_ratio(&self) -> f64 {
        self.sigma2 / self.sigma1
    }

    /// Both levels multiplied by `factor` (the ratio is unchanged).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            sigma1: self.sigma1 * factor,
            sigma2: self.sigma2 * factor,
            barrier: self.barrier,
        }
    }

    /// Local volatility coefficient at level `x`.
    pub fn local_sigma(&self, x: f64) -> f64 {
        if x < self.barrier {
            self.sigma1
        } else {
            self.sigma2
        }
    }

    fn check_spot(&self, spot: f64) -> Result<(), PclvgError> {
        if (spot - self.barrier).abs() > 1e-12 * self.barrier {
            return Err(PclvgError::SpotNotAtBarrier { spot, barrier: self.barrier });
        }
        Ok(())
    }
}

/// `ln` of the closed-form out-of-the-money price at spot = barrier: the put
/// for `strike < U`, the call for `strike >= U`. Requires `tau > 0`,
/// `strike > 0`.
///
/// Every exponential factor is kept in log space so the result stays finite
/// long after the price itself underflows.
pub fn ln_otm_price(p: &PclvgParams, strike: f64, tau: f64) -> f64 {
    let u = p.barrier;
    let (s1, s2) = (p.sigma1, p.sigma2);
    let e_u = (-2.0 * u / (s1 * tau)).exp();
    let denom = 1.0 / s1 + 1.0 / s2 - (1.0 / s2 - 1.0 / s1) * e_u;
    if strike < u {
        tau.ln() - (u - strike) / (s1 * tau) + (-(-2.0 * strike / (s1 * tau)).exp_m1()).ln() - denom.ln()
    } else {
        tau.ln() - (strike - u) / (s2 * tau) + (-(-2.0 * u / (s1 * tau)).exp_m1()).ln() - denom.ln()
    }
}

fn check_strike_tau(strike: f64, tau: f64) -> Result<(), PclvgError> {
    if !(strike >= 0.0 && strike.is_finite()) {
        return Err(PclvgError::InvalidArgument("strike must be nonnegative"));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(PclvgError::InvalidArgument("tau must be nonnegative"));
    }
    Ok(())
}

/// European call price `E(X_τ − K)⁺` with `X_0 = U`.
pub fn pclvg_call(p: &PclvgParams, spot_at_barrier: f64, strike: f64, tau: f64) -> Result<f64, PclvgError> {
    p.check_spot(spot_at_barrier)?;
    check_strike_tau(strike, tau)?;
    let u = p.barrier;
    if tau == 0.0 {
        return Ok((u - strike).max(0.0));
    }
    if strike == 0.0 {
        return Ok(u);
    }
    let otm = ln_otm_price(p, strike, tau).exp();
    Ok(if strike < u { (u - strike) + otm } else { otm })
}

/// European put price; parity `P = C − (U − K)` holds by construction.
pub fn pclvg_put(p: &PclvgParams, spot_at_barrier: f64, strike: f64, tau: f64) -> Result<f64, PclvgError> {
    p.check_spot(spot_at_barrier)?;
    check_strike_tau(strike, tau)?;
    let u = p.barrier;
    if tau == 0.0 {
        return Ok((strike - u).max(0.0));
    }
    if strike == 0.0 {
        return Ok(0.0);
    }
    let otm = ln_otm_price(p, strike, tau).exp();
    Ok(if strike < u { otm } else { otm + (strike - u) })
}

/// Black–Scholes implied volatility of the model price at spot = barrier.
pub fn pclvg_iv(p: &PclvgParams, strike: f64, tau: f64) -> Result<f64, PclvgError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PclvgError::InvalidArgument("tau must be positive"));
    }
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(PclvgError::InvalidArgument("strike must be positive"));
    }
    let ln_price = ln_otm_price(p, strike, tau);
    Ok(bs::implied_vol_from_ln_otm(ln_price, p.barrier, strike, tau)?)
}

/// Limit of the model implied volatility as `τ ↓ 0`.
pub fn short_term_iv_limit(p: &PclvgParams, strike: f64) -> Result<f64, PclvgError> {
    let u = p.barrier;
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(PclvgError::InvalidArgument("strike must be positive"));
    }
    if strike == u {
        return Err(PclvgError::StrikeAtBarrier);
    }
    Ok(if strike > u {
        p.sigma2.sqrt() * (strike / u).ln() / (2.0 * (strike - u)).sqrt()
    } else {
        p.sigma1.sqrt() * (u / strike).ln() / (2.0 * (u - strike)).sqrt()
    })
}

/// Wing level that makes [`short_term_iv_limit`] equal `target_iv` at `strike`:
/// returns `σ₁` for strikes below the barrier and `σ₂` above it.
pub fn sigma_for_limit(barrier: f64, strike: f64, target_iv: f64) -> Result<f64, PclvgError> {
    if strike == barrier {
        return Err(PclvgError::StrikeAtBarrier);
    }
    let shape = (strike / barrier).ln().abs() / (2.0 * (strike - barrier).abs()).sqrt();
    Ok((target_iv / shape).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PclvgParams {
        PclvgParams::new(0.5, 0.3, 1.0).unwrap()
    }

    #[test]
    fn zero_strike_call_is_barrier() {
        let p = PclvgParams::new(400.0, 240.0, 1000.0).unwrap();
        assert_eq!(pclvg_call(&p, 1000.0, 0.0, 0.3).unwrap(), 1000.0);
    }

    #[test]
    fn zero_tau_is_intrinsic() {
        let p = PclvgParams::new(400.0, 240.0, 1000.0).unwrap();
        assert_eq!(pclvg_call(&p, 1000.0, 750.0, 0.0).unwrap(), 250.0);
        assert_eq!(pclvg_put(&p, 1000.0, 750.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn spot_off_barrier_rejected() {
        let err = pclvg_call(&params(), 1.01, 1.0, 0.1).unwrap_err();
        assert!(matches!(err, PclvgError::SpotNotAtBarrier { .. }));
    }

    #[test]
    fn branches_agree_at_barrier() {
        for &(s1, s2, tau) in &[(0.5, 0.3, 0.01), (1.0, 2.0, 0.5), (0.2, 0.05, 3.0)] {
            let p = PclvgParams::new(s1, s2, 1.0).unwrap();
            let e_u = (-2.0 / (s1 * tau)).exp();
            let denom = 1.0 / s1 + 1.0 / s2 - (1.0 / s2 - 1.0 / s1) * e_u;
            // lower-branch formula evaluated at K = U
            let lower = tau * (1.0 - e_u) / denom;
            let upper = pclvg_call(&p, 1.0, 1.0, tau).unwrap();
            assert!((lower - upper).abs() <= 1e-13, "{lower} vs {upper}");
            let below = pclvg_call(&p, 1.0, 1.0 - 1e-12, tau).unwrap();
            assert!((below - upper).abs() <= 1e-11);
        }
    }

    #[test]
    fn put_equals_call_at_barrier() {
        let p = params();
        let c = pclvg_call(&p, 1.0, 1.0, 0.2).unwrap();
        let q = pclvg_put(&p, 1.0, 1.0, 0.2).unwrap();
        assert_eq!(c, q);
    }

    #[test]
    fn limit_example() {
        let l = short_term_iv_limit(&params(), 1.1).unwrap();
        let expected = 0.3f64.sqrt() * 1.1f64.ln() / 0.2f64.sqrt();
        assert!((l - expected).abs() < 1e-15);
        assert!((l - 0.11673065390675717).abs() < 1e-15);
        assert!((l - 0.116729).abs() < 1e-5);
        assert_eq!(short_term_iv_limit(&params(), 1.0), Err(PclvgError::StrikeAtBarrier));
    }

    #[test]
    fn limit_scaling_by_wing() {
        let p = params();
        let q = PclvgParams::new(0.5, 0.6, 1.0).unwrap();
        let up = short_term_iv_limit(&q, 1.2).unwrap() / short_term_iv_limit(&p, 1.2).unwrap();
        assert!((up - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(short_term_iv_limit(&q, 0.8).unwrap(), short_term_iv_limit(&p, 0.8).unwrap());
        // vanishes towards the barrier
        assert!(short_term_iv_limit(&p, 1.0 + 1e-10).unwrap() < 1e-4);
        assert!(short_term_iv_limit(&p, 1.0 - 1e-10).unwrap() < 1e-4);
    }

    #[test]
    fn sigma_for_limit_inverts() {
        let p = params();
        for &k in &[0.8, 1.15] {
            let l = short_term_iv_limit(&p, k).unwrap();
            let s = sigma_for_limit(1.0, k, l).unwrap();
            let expected = if k < 1.0 { p.sigma1 } else { p.sigma2 };
            assert!((s / expected - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn iv_round_trip() {
        let p = params();
        for &k in &[0.7, 0.95, 1.0, 1.05, 1.4] {
            for &tau in &[0.01, 0.1, 1.0] {
                let v = pclvg_iv(&p, k, tau).unwrap();
                let model = pclvg_call(&p, 1.0, k, tau).unwrap();
                let bs = bs::call_price(1.0, k, tau, v);
                assert!((model - bs).abs() <= 1e-10, "k={k} tau={tau}");
            }
        }
    }

    #[test]
    fn iv_tiny_tau_near_limit() {
        let v = pclvg_iv(&params(), 1.1, 1e-5).unwrap();
        assert!((v / 0.116729 - 1.0).abs() < 0.02, "{v}");
    }
}
