//! Risk-reversal portfolios for trading the implied skew across a barrier.

use crate::bs::OptionKind;
use crate::surface::{MarketSurface, SurfaceError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RtisError {
    #[error("no listed strike satisfies the selection rule (reflected strike {reflected})")]
    NoEligibleStrike { reflected: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegKind {
    Call,
    Put,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub kind: LegKind,
    pub strike: f64,
    pub tau: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Scaled so that one dollar is held in the put leg.
    PutDollarOne,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub legs: Vec<Leg>,
    pub normalization: Normalization,
}

impl Portfolio {
    pub fn raw(legs: Vec<Leg>) -> Self {
        Self { legs, normalization: Normalization::Raw }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            legs: self.legs.iter().map(|l| Leg { weight: l.weight * factor, ..*l }).collect(),
            normalization: self.normalization,
        }
    }

    /// Rescales so that the put leg is worth one dollar on `surf`.
    pub fn put_dollar_one(&self, surf: &MarketSurface) -> Result<Self, RtisError> {
        let put = self
            .legs
            .iter()
            .find(|l| l.kind == LegKind::Put && l.weight != 0.0)
            .ok_or_else(|| RtisError::InvalidInput("portfolio has no put leg".into()))?;
        let value = put.weight.abs() * surf.put_price(put.strike, put.tau)?;
        if !(value > 0.0) {
            return Err(RtisError::InvalidInput("put leg has no value".into()));
        }
        Ok(Self { normalization: Normalization::PutDollarOne, ..self.scaled(1.0 / value) })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("portfolio serializes")
    }
}

/// Linear price of the portfolio on `surf`. Forwards are worth `S − K`
/// whatever the implied vols; legs with zero weight are not priced.
pub fn price_portfolio(port: &Portfolio, surf: &MarketSurface) -> Result<f64, RtisError> {
    let mut total = 0.0;
    for leg in &port.legs {
        if leg.weight == 0.0 {
            continue;
        }
        let unit = match leg.kind {
            LegKind::Forward => surf.spot - leg.strike,
            LegKind::Call => surf.price(OptionKind::Call, leg.strike, leg.tau)?,
            LegKind::Put => surf.price(OptionKind::Put, leg.strike, leg.tau)?,
        };
        total += leg.weight * unit;
    }
    Ok(total)
}

const ON_GRID: f64 = 1e-12;

fn reflected(i: usize, ratio: f64, u: f64, strikes: &[f64]) -> Result<f64, RtisError> {
    let k = *strikes.get(i).ok_or_else(|| RtisError::InvalidInput(format!("strike index {i} out of range")))?;
    if !(k < u) {
        return Err(RtisError::InvalidInput(format!("put strike {k} must lie below the barrier {u}")));
    }
    if !(ratio > 0.0) {
        return Err(RtisError::InvalidInput("ratio must be positive".into()));
    }
    Ok(u + (u - k) * ratio)
}

/// Largest strike in `(U, 𝐊]`, where `𝐊 = U + (U − K_i)·ratio`.
pub fn underline_j(i: usize, ratio: f64, u: f64, strikes: &[f64]) -> Result<usize, RtisError> {
    let kk = reflected(i, ratio, u, strikes)?;
    (0..strikes.len())
        .filter(|&j| strikes[j] > u && strikes[j] <= kk * (1.0 + ON_GRID))
        .max_by(|&a, &b| strikes[a].total_cmp(&strikes[b]))
        .ok_or(RtisError::NoEligibleStrike { reflected: kk })
}

/// Smallest strike at or above `𝐊`.
pub fn overline_j(i: usize, ratio: f64, u: f64, strikes: &[f64]) -> Result<usize, RtisError> {
    let kk = reflected(i, ratio, u, strikes)?;
    (0..strikes.len())
        .filter(|&j| strikes[j] >= kk * (1.0 - ON_GRID))
        .min_by(|&a, &b| strikes[a].total_cmp(&strikes[b]))
        .ok_or(RtisError::NoEligibleStrike { reflected: kk })
}

/// Index of the listed strike closest to `moneyness · spot`; ties go to
/// the lower strike.
pub fn put_strike_index(strikes: &[f64], spot: f64, moneyness: f64) -> Option<usize> {
    let target = moneyness * spot;
    (0..strikes.len()).min_by(|&a, &b| {
        let (da, db) = ((strikes[a] - target).abs(), (strikes[b] - target).abs());
        da.total_cmp(&db).then(strikes[a].total_cmp(&strikes[b]))
    })
}

/// Long one call at `K_{j̲}`, short one put at `K_i`.
pub fn build_rtis_low(i: usize, ratio: f64, u: f64, strikes: &[f64], tau: f64) -> Result<Portfolio, RtisError> {
    let j = underline_j(i, ratio, u, strikes)?;
    Ok(Portfolio::raw(vec![
        Leg { kind: LegKind::Call, strike: strikes[j], tau, weight: 1.0 },
        Leg { kind: LegKind::Put, strike: strikes[i], tau, weight: -1.0 },
    ]))
}

/// Result of building the upper portfolio. When no strike reaches the
/// reflected strike the portfolio would be a lone put, so it is skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RtisBuild {
    Built(Portfolio),
    Skipped { put_strike: f64, reflected_strike: f64 },
}

impl RtisBuild {
    pub fn portfolio(&self) -> Option<&Portfolio> {
        match self {
            RtisBuild::Built(p) => Some(p),
            RtisBuild::Skipped { .. } => None,
        }
    }
}

/// Long one put at `K_i`, short `K_i/U` calls at `K_{j̄}`.
pub fn build_rtis_high(i: usize, ratio: f64, u: f64, strikes: &[f64], tau: f64) -> Result<RtisBuild, RtisError> {
    match overline_j(i, ratio, u, strikes) {
        Ok(j) => Ok(RtisBuild::Built(Portfolio::raw(vec![
            Leg { kind: LegKind::Put, strike: strikes[i], tau, weight: 1.0 },
            Leg { kind: LegKind::Call, strike: strikes[j], tau, weight: -strikes[i] / u },
        ]))),
        Err(RtisError::NoEligibleStrike { reflected }) => {
            Ok(RtisBuild::Skipped { put_strike: strikes[i], reflected_strike: reflected })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// Standing assumptions fail: strikes on the wrong side, reflected
    /// strike off the grid, or the upper ratio not below the lower one.
    Precondition,
    /// Call weight negative, or put weight not strictly negative.
    WrongSideWeights,
    /// Call strike above `K_{j̲}`: positivity fails under the generator.
    StrikeAbove,
    /// Call strike below `K_{j̲}`: the sign flip fails for some upper beliefs.
    StrikeBelow,
    /// At `K_{j̲}` fewer call shares than put shares.
    CallWeightTooSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

/// Decides whether `α·C(K_j) + β·P(K_i)` belongs to the family of
/// two-strike portfolios with both sign properties: this requires
/// `j = j̲(i)` and `α ≥ −β > 0`.
#[allow(clippy::too_many_arguments)]
pub fn minimality_audit(
    alpha: f64,
    beta: f64,
    i: usize,
    j: usize,
    kappa_lower: f64,
    kappa_upper: f64,
    u: f64,
    strikes: &[f64],
) -> Verdict {
    use RejectReason::*;
    let (Some(&ki), Some(&kj)) = (strikes.get(i), strikes.get(j)) else {
        return Verdict::Reject(Precondition);
    };
    if !(ki < u && kj > u && kappa_upper < kappa_lower) {
        return Verdict::Reject(Precondition);
    }
    let Ok(jl) = underline_j(i, kappa_lower, u, strikes) else {
        return Verdict::Reject(Precondition);
    };
    let kk = u + (u - ki) * kappa_lower;
    if (strikes[jl] - kk).abs() > ON_GRID * kk {
        return Verdict::Reject(Precondition);
    }
    if alpha < 0.0 || beta >= 0.0 {
        return Verdict::Reject(WrongSideWeights);
    }
    if kj > strikes[jl] {
        return Verdict::Reject(StrikeAbove);
    }
    if kj < strikes[jl] {
        return Verdict::Reject(StrikeBelow);
    }
    if alpha < -beta {
        return Verdict::Reject(CallWeightTooSmall);
    }
    Verdict::Accept
}
