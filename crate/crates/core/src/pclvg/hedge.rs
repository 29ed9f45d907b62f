//! Exact static hedge of the up-and-out put in a PCLVG model.

use super::{ln_otm_price, pclvg_call, pclvg_put, PclvgError, PclvgParams};
use serde::{Deserialize, Serialize};

const SERIES_MAX_TERMS: usize = 1_000_000;

fn check_below(p: &PclvgParams, strike: f64) -> Result<(), PclvgError> {
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(PclvgError::InvalidArgument("strike must be positive"));
    }
    if strike > p.barrier {
        return Err(PclvgError::StrikeAboveBarrier { strike, barrier: p.barrier });
    }
    Ok(())
}

/// Call strike symmetric to the put strike `strike_below` in the geodesic
/// distance `dx / σ(x)`: `U + (U − K)·σ₂/σ₁`.
pub fn reflected_strike(p: &PclvgParams, strike_below: f64) -> Result<f64, PclvgError> {
    check_below(p, strike_below)?;
    Ok(p.barrier + (p.barrier - strike_below) * p.skew_ratio())
}

/// Put strike whose reflection is `strike_above`.
pub fn reflected_strike_inverse(p: &PclvgParams, strike_above: f64) -> Result<f64, PclvgError> {
    if !(strike_above >= p.barrier && strike_above.is_finite()) {
        return Err(PclvgError::InvalidArgument("strike must be at or above the barrier"));
    }
    let k = p.barrier - (strike_above - p.barrier) / p.skew_ratio();
    if k <= 0.0 {
        return Err(PclvgError::InvalidArgument("reflection falls below zero"));
    }
    Ok(k)
}

fn kink_pair(p: &PclvgParams, strike: f64, n: usize) -> (f64, f64) {
    let u = p.barrier;
    let r = p.skew_ratio();
    let odd = u * (2 * n + 1) as f64;
    (u + (odd - strike) * r, u + (odd + strike) * r)
}

/// Payoff `g(x)` of the European claim that, held together with `(K − x)⁺`
/// short, reproduces the up-and-out put up to the barrier hit.
///
/// The series is cut at the first term whose kink lies at or beyond `x`;
/// every later term vanishes there, so the value is exact.
pub fn static_hedge_payoff(p: &PclvgParams, strike: f64, x: f64) -> Result<f64, PclvgError> {
    check_below(p, strike)?;
    let mut g = 0.0;
    for n in 0.. {
        let (a, b) = kink_pair(p, strike, n);
        if a >= x {
            break;
        }
        g += (x - a).max(0.0) - (x - b).max(0.0);
    }
    Ok(g)
}

/// All kinks of `g` that lie at or below `x_max`, in increasing order.
pub fn hedge_kinks(p: &PclvgParams, strike: f64, x_max: f64) -> Result<Vec<f64>, PclvgError> {
    check_below(p, strike)?;
    let mut kinks = Vec::new();
    for n in 0.. {
        let (a, b) = kink_pair(p, strike, n);
        if a > x_max {
            break;
        }
        kinks.push(a);
        if b <= x_max {
            kinks.push(b);
        }
    }
    Ok(kinks)
}

/// Convex single-kink bounds `(K/U)(x − 𝐊)⁺ ≤ g(x) ≤ (x − 𝐊)⁺`.
pub fn hedge_envelopes(p: &PclvgParams, strike: f64, x: f64) -> Result<(f64, f64), PclvgError> {
    let k_refl = reflected_strike(p, strike)?;
    let upper = (x - k_refl).max(0.0);
    Ok((strike / p.barrier * upper, upper))
}

/// Put price at the barrier written as a strip of OTM calls:
/// `P(U,K,τ) = Σₙ C(U, U + (U(2n+1) − K)κ, τ) − C(U, U + (U(2n+1) + K)κ, τ)`.
///
/// Stops once a term drops below `tol` relative to the partial sum.
pub fn put_via_calls_series(p: &PclvgParams, strike: f64, tau: f64, tol: f64) -> Result<(f64, usize), PclvgError> {
    check_below(p, strike)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PclvgError::InvalidArgument("tau must be positive"));
    }
    if !(tol > 0.0) {
        return Err(PclvgError::InvalidArgument("tol must be positive"));
    }
    let mut sum = 0.0;
    for n in 0..SERIES_MAX_TERMS {
        let (a, b) = kink_pair(p, strike, n);
        let term = ln_otm_price(p, a, tau).exp() - ln_otm_price(p, b, tau).exp();
        sum += term;
        if term <= tol * sum.abs() || term == 0.0 {
            return Ok((sum, n + 1));
        }
    }
    Err(PclvgError::SeriesBudgetExceeded { terms: SERIES_MAX_TERMS })
}

/// Both sides of `(K/U)·C(𝐊) < P(K) < C(𝐊)` at spot = barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichGaps {
    pub put: f64,
    pub reflected_call: f64,
    /// `P − (K/U)·C(𝐊)`
    pub lower_gap: f64,
    /// `C(𝐊) − P`
    pub upper_gap: f64,
    /// `(C(𝐊) − P) / P` in log form, finite even when the gap underflows.
    pub ln_relative_upper_gap: f64,
    /// `(P − (K/U)·C(𝐊)) / P`
    pub relative_lower_gap: f64,
}

impl SandwichGaps {
    pub fn relative_upper_gap(&self) -> f64 {
        self.ln_relative_upper_gap.exp()
    }
}

/// Gaps of the two-sided bound on the put by the reflected call.
///
/// The ratio `C(𝐊)/P` reduces to `(1 − e^{−2U/(σ₁τ)}) / (1 − e^{−2K/(σ₁τ)})`,
/// which is what the relative gaps are computed from.
pub fn sandwich_check(p: &PclvgParams, strike: f64, tau: f64) -> Result<SandwichGaps, PclvgError> {
    let k_refl = reflected_strike(p, strike)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PclvgError::InvalidArgument("tau must be positive"));
    }
    let u = p.barrier;
    let put = pclvg_put(p, u, strike, tau)?;
    let reflected_call = pclvg_call(p, u, k_refl, tau)?;
    let s = p.sigma1 * tau;
    let ln_rel_upper = if strike == u {
        f64::NEG_INFINITY
    } else {
        -2.0 * strike / s + (-(-2.0 * (u - strike) / s).exp_m1()).ln() - (-(-2.0 * strike / s).exp_m1()).ln()
    };
    let rel_upper = ln_rel_upper.exp();
    Ok(SandwichGaps {
        put,
        reflected_call,
        lower_gap: put - strike / u * reflected_call,
        upper_gap: reflected_call - put,
        ln_relative_upper_gap: ln_rel_upper,
        relative_lower_gap: 1.0 - strike / u * (1.0 + rel_upper),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_params() -> PclvgParams {
        PclvgParams::from_ratio(1.0, 0.6, 1000.0).unwrap()
    }

    #[test]
    fn reflected_strike_caption_value() {
        let k = reflected_strike(&fig_params(), 675.0).unwrap();
        assert!((k - 1195.0).abs() < 1e-9);
        assert_eq!(reflected_strike(&fig_params(), 1000.0).unwrap(), 1000.0);
        let sym = PclvgParams::new(2.0, 2.0, 1000.0).unwrap();
        assert_eq!(reflected_strike(&sym, 800.0).unwrap(), 1200.0);
        assert!(matches!(
            reflected_strike(&fig_params(), 1001.0),
            Err(PclvgError::StrikeAboveBarrier { .. })
        ));
    }

    #[test]
    fn reflected_strike_inverse_round_trip() {
        let p = fig_params();
        let k = reflected_strike_inverse(&p, reflected_strike(&p, 640.0).unwrap()).unwrap();
        assert!((k - 640.0).abs() < 1e-9);
    }

    #[test]
    fn g_below_first_kink_is_zero() {
        let p = fig_params();
        for &x in &[0.0, 500.0, 1000.0, 1149.0, 1150.0] {
            assert_eq!(static_hedge_payoff(&p, 750.0, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn g_at_second_kink() {
        let g = static_hedge_payoff(&fig_params(), 750.0, 2050.0).unwrap();
        assert!((g - 900.0).abs() < 1e-9);
    }

    #[test]
    fn kinks_of_figure_parameters() {
        let kinks = hedge_kinks(&fig_params(), 750.0, 3300.0).unwrap();
        let expected = [1150.0, 2050.0, 2350.0, 3250.0];
        assert_eq!(kinks.len(), 4);
        for (k, e) in kinks.iter().zip(expected) {
            assert!((k - e).abs() < 1e-9);
        }
    }

    #[test]
    fn envelopes_at_kink_and_ratio() {
        let p = fig_params();
        assert_eq!(hedge_envelopes(&p, 750.0, 1150.0).unwrap(), (0.0, 0.0));
        let (lo, hi) = hedge_envelopes(&p, 750.0, 1500.0).unwrap();
        assert!((hi / lo - 1000.0 / 750.0).abs() < 1e-12);
    }

    #[test]
    fn envelopes_bracket_g() {
        let p = PclvgParams::from_ratio(1.0, 0.6, 1000.0).unwrap();
        for &k in &[750.0, 950.0, 300.0] {
            for i in 0..1000 {
                let x = i as f64 * 6.0;
                let g = static_hedge_payoff(&p, k, x).unwrap();
                let (lo, hi) = hedge_envelopes(&p, k, x).unwrap();
                assert!(lo <= g + 1e-9 && g <= hi + 1e-9, "k={k} x={x}: {lo} {g} {hi}");
            }
        }
    }

    #[test]
    fn series_matches_put_unit_model() {
        let p = PclvgParams::new(1.0, 1.0, 1.0).unwrap();
        let (v, n) = put_via_calls_series(&p, 0.9, 0.1, 1e-14).unwrap();
        let put = pclvg_put(&p, 1.0, 0.9, 0.1).unwrap();
        assert!((v - put).abs() <= 1e-10 * put, "{v} vs {put}, {n} terms");
    }

    #[test]
    fn series_at_barrier_equals_call() {
        let p = PclvgParams::new(0.4, 0.7, 1.0).unwrap();
        let (v, _) = put_via_calls_series(&p, 1.0, 0.3, 1e-14).unwrap();
        let c = pclvg_call(&p, 1.0, 1.0, 0.3).unwrap();
        assert!((v / c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sandwich_gaps_agree_with_closed_ratio() {
        let p = PclvgParams::from_ratio(1.0, 0.6, 1.0).unwrap();
        let g = sandwich_check(&p, 0.9, 0.5).unwrap();
        assert!(g.lower_gap > 0.0 && g.upper_gap > 0.0);
        assert!((g.upper_gap / g.put - g.relative_upper_gap()).abs() < 1e-10);
        assert!((g.lower_gap / g.put - g.relative_lower_gap).abs() < 1e-10);
    }

    #[test]
    fn sandwich_symmetric_degenerate_limit() {
        let p = PclvgParams::new(1.0, 1.0, 1.0).unwrap();
        let g = sandwich_check(&p, 1.0 - 1e-9, 0.2).unwrap();
        assert!(g.upper_gap.abs() < 1e-8 && g.lower_gap.abs() < 1e-8);
    }
}
