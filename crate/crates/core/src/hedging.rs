//! Semi-static super- and sub-replication of the up-and-out put, with
//! pathwise evaluation.

use crate::rtis::{build_rtis_low, overline_j, price_portfolio, Leg, LegKind, Portfolio, RtisError};
use crate::surface::{MarketSurface, SurfaceError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HedgeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("path too coarse around the barrier hit at t = {time}: spots {before} -> {after}")]
    PathGap { time: f64, before: f64, after: f64 },
    #[error("no market surface at the barrier-hit time {0}")]
    MissingSurface(f64),
    #[error(transparent)]
    Rtis(#[from] RtisError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HedgeSide {
    Super,
    Sub,
}

/// Static portfolio held until `min(H_U, T)`, where `H_U` is the first time
/// the spot reaches the barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeStrategy {
    pub portfolio: Portfolio,
    pub side: HedgeSide,
    pub strike: f64,
    pub barrier: f64,
    pub maturity: f64,
    pub initial_cost: f64,
    /// Put strike the strategy was built around.
    pub put_strike: f64,
    /// Smallest spacing of the strike grid, used to certify path continuity.
    pub grid_step: f64,
}

fn grid_step(strikes: &[f64]) -> f64 {
    strikes.windows(2).map(|w| (w[1] - w[0]).abs()).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min)
}

fn check_inputs(k: f64, u: f64, t: f64, strikes: &[f64], surf: &MarketSurface) -> Result<(), HedgeError> {
    if !(k > 0.0 && k <= u && t > 0.0) {
        return Err(HedgeError::InvalidInput("need 0 < K ≤ U and T > 0".into()));
    }
    if surf.spot > u {
        return Err(HedgeError::InvalidInput("spot must not exceed the barrier".into()));
    }
    if strikes.is_empty() {
        return Err(HedgeError::InvalidInput("empty strike grid".into()));
    }
    Ok(())
}

fn bhr_legs(k: f64, u: f64, t: f64, ki: f64) -> Vec<Leg> {
    vec![
        Leg { kind: LegKind::Forward, strike: u, tau: t, weight: (ki - k) / (u - ki) },
        Leg { kind: LegKind::Put, strike: ki, tau: t, weight: (u - k) / (u - ki) },
    ]
}

struct Candidate {
    legs: Vec<Leg>,
    put_strike: f64,
}

/// Cheapest candidate; ties go to the larger put strike.
fn cheapest(
    cands: Vec<Candidate>,
    surf: &MarketSurface,
    side: HedgeSide,
) -> Result<Option<(Candidate, f64)>, HedgeError> {
    let mut best: Option<(Candidate, f64)> = None;
    for c in cands {
        let cost = price_portfolio(&Portfolio::raw(c.legs.clone()), surf)?;
        let better = match &best {
            None => true,
            Some((b, bc)) => {
                let (x, y) = match side {
                    HedgeSide::Super => (cost, *bc),
                    HedgeSide::Sub => (-cost, -*bc),
                };
                x < y || (x == y && c.put_strike > b.put_strike)
            }
        };
        if better {
            best = Some((c, cost));
        }
    }
    Ok(best)
}

fn strategy(c: Candidate, cost: f64, side: HedgeSide, k: f64, u: f64, t: f64, strikes: &[f64]) -> HedgeStrategy {
    HedgeStrategy {
        portfolio: Portfolio::raw(c.legs),
        side,
        strike: k,
        barrier: u,
        maturity: t,
        initial_cost: cost,
        put_strike: c.put_strike,
        grid_step: grid_step(strikes),
    }
}

/// Model-independent super-replication: `(U−K)/(U−K_i)` puts at `K_i` and
/// `(K_i−K)/(U−K_i)` forwards struck at `U`, cheapest over `K_i ≤ K`; one
/// put at the lowest strike when no `K_i ≤ K` is listed.
pub fn bhr_strategy(k: f64, u: f64, t: f64, strikes: &[f64], surf: &MarketSurface) -> Result<HedgeStrategy, HedgeError> {
    check_inputs(k, u, t, strikes, surf)?;
    let cands: Vec<Candidate> = strikes
        .iter()
        .filter(|&&ki| ki <= k && ki < u)
        .map(|&ki| Candidate { legs: bhr_legs(k, u, t, ki), put_strike: ki })
        .collect();
    let cands = if cands.is_empty() {
        let lowest = strikes.iter().copied().fold(f64::INFINITY, f64::min);
        vec![Candidate { legs: vec![Leg { kind: LegKind::Put, strike: lowest, tau: t, weight: 1.0 }], put_strike: lowest }]
    } else {
        cands
    };
    let (c, cost) = cheapest(cands, surf, HedgeSide::Super)?.expect("at least one candidate");
    Ok(strategy(c, cost, HedgeSide::Super, k, u, t, strikes))
}

/// BHR with an extra short position of `(U−K)/(U−K_i)·K_i/U` calls at
/// `K_{j̄(i)}` for the upper ratio `kappa_upper`, skipped when no strike
/// reaches the reflected strike.
pub fn improved_superhedge(
    k: f64,
    u: f64,
    t: f64,
    kappa_upper: f64,
    strikes: &[f64],
    surf: &MarketSurface,
) -> Result<HedgeStrategy, HedgeError> {
    check_inputs(k, u, t, strikes, surf)?;
    let call_leg = |i: usize, weight: f64| -> Result<Option<Leg>, HedgeError> {
        match overline_j(i, kappa_upper, u, strikes) {
            Ok(j) => Ok(Some(Leg { kind: LegKind::Call, strike: strikes[j], tau: t, weight })),
            Err(RtisError::NoEligibleStrike { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let mut cands = Vec::new();
    for (i, &ki) in strikes.iter().enumerate().filter(|(_, &ki)| ki <= k && ki < u) {
        let mut legs = bhr_legs(k, u, t, ki);
        let put_w = (u - k) / (u - ki);
        legs.extend(call_leg(i, -put_w * ki / u)?);
        cands.push(Candidate { legs, put_strike: ki });
    }
    if cands.is_empty() {
        for (i, &ki) in strikes.iter().enumerate().filter(|(_, &ki)| ki < u) {
            let mut legs = vec![Leg { kind: LegKind::Put, strike: ki, tau: t, weight: 1.0 }];
            legs.extend(call_leg(i, -ki / u)?);
            cands.push(Candidate { legs, put_strike: ki });
        }
    }
    let (c, cost) = cheapest(cands, surf, HedgeSide::Super)?
        .ok_or_else(|| HedgeError::InvalidInput("no strike below the barrier".into()))?;
    Ok(strategy(c, cost, HedgeSide::Super, k, u, t, strikes))
}

/// Short the lower-belief risk reversal: long the put at `K_i ≤ K`, short
/// the call at `K_{j̲(i)}`. Among eligible `K_i` the most valuable position
/// is taken.
pub fn improved_subhedge(
    k: f64,
    u: f64,
    t: f64,
    kappa_lower: f64,
    strikes: &[f64],
    surf: &MarketSurface,
) -> Result<HedgeStrategy, HedgeError> {
    check_inputs(k, u, t, strikes, surf)?;
    let mut cands = Vec::new();
    let mut last_err = None;
    for (i, &ki) in strikes.iter().enumerate().filter(|(_, &ki)| ki <= k && ki < u) {
        match build_rtis_low(i, kappa_lower, u, strikes, t) {
            Ok(p) => cands.push(Candidate { legs: p.scaled(-1.0).legs, put_strike: ki }),
            Err(e) => last_err = Some(e),
        }
    }
    match cheapest(cands, surf, HedgeSide::Sub)? {
        Some((c, cost)) => Ok(strategy(c, cost, HedgeSide::Sub, k, u, t, strikes)),
        None => Err(last_err
            .map(HedgeError::from)
            .unwrap_or_else(|| HedgeError::InvalidInput("no put strike at or below K".into()))),
    }
}

/// Spot path sampled on `times`, with market surfaces available at some
/// of the sample indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPath {
    pub times: Vec<f64>,
    pub spots: Vec<f64>,
    pub surfaces: BTreeMap<usize, MarketSurface>,
}

impl MarketPath {
    pub fn new(times: Vec<f64>, spots: Vec<f64>) -> Result<Self, HedgeError> {
        if times.is_empty() || times.len() != spots.len() {
            return Err(HedgeError::InvalidInput("times and spots must have equal, nonzero length".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) || spots.iter().any(|s| !(*s >= 0.0)) {
            return Err(HedgeError::InvalidInput("times must increase and spots be nonnegative".into()));
        }
        Ok(Self { times, spots, surfaces: BTreeMap::new() })
    }

    /// First sample at or above `u`.
    pub fn first_hit(&self, u: f64) -> Option<usize> {
        self.spots.iter().position(|&s| s >= u)
    }

    pub fn read_csv(path: &Path) -> Result<Self, HedgeError> {
        #[derive(Deserialize)]
        struct Row {
            time: f64,
            spot: f64,
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut times, mut spots) = (Vec::new(), Vec::new());
        for r in rdr.deserialize::<Row>() {
            let r = r?;
            times.push(r.time);
            spots.push(r.spot);
        }
        Self::new(times, spots)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HedgeError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time", "spot"])?;
        for (t, s) in self.times.iter().zip(&self.spots) {
            w.write_record([t.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEvaluation {
    pub hit_time: Option<f64>,
    pub liquidation_time: f64,
    pub liquidation_value: f64,
    pub uop_payoff: f64,
    /// Super-hedges must be worth at least the payoff, sub-hedges at most.
    pub inequality_ok: bool,
}

/// Payoff of the portfolio if held to expiry with terminal spot `s`.
pub fn terminal_value(port: &Portfolio, s: f64) -> f64 {
    port.legs.iter().map(|l| l.weight * intrinsic(l, s)).sum()
}

fn intrinsic(leg: &Leg, s: f64) -> f64 {
    match leg.kind {
        LegKind::Call => (s - leg.strike).max(0.0),
        LegKind::Put => (leg.strike - s).max(0.0),
        LegKind::Forward => s - leg.strike,
    }
}

/// Value of the strategy at `min(H_U, T)` against the up-and-out put payoff.
/// At a hit before `T` every leg is marked on the surface recorded at that
/// sample with the remaining maturity.
pub fn evaluate_on_path(strat: &HedgeStrategy, path: &MarketPath) -> Result<PathEvaluation, HedgeError> {
    let t_end = strat.maturity;
    if *path.times.last().unwrap() < t_end * (1.0 - 1e-12) {
        return Err(HedgeError::InvalidInput("path ends before maturity".into()));
    }
    let u = strat.barrier;
    let within = |n: usize| path.times[n] <= t_end * (1.0 + 1e-12);
    let hit = path.first_hit(u).filter(|&n| within(n));
    let tol = 1e-9 * u;
    let eval = match hit {
        Some(n) if path.times[n] < t_end * (1.0 - 1e-12) => {
            let (before, after) = (if n > 0 { path.spots[n - 1] } else { path.spots[0] }, path.spots[n]);
            if u - before > strat.grid_step || after - u > strat.grid_step {
                return Err(HedgeError::PathGap { time: path.times[n], before, after });
            }
            let surf = path.surfaces.get(&n).ok_or(HedgeError::MissingSurface(path.times[n]))?;
            let remaining = t_end - path.times[n];
            let legs = strat.portfolio.legs.iter().map(|l| Leg { tau: remaining, ..*l }).collect();
            let value = price_portfolio(&Portfolio::raw(legs), surf)?;
            (Some(path.times[n]), path.times[n], value, 0.0)
        }
        _ => {
            let last = (0..path.times.len()).rev().find(|&n| within(n)).unwrap_or(0);
            let s = path.spots[last];
            let value = terminal_value(&strat.portfolio, s);
            let payoff = if hit.is_some() { 0.0 } else { (strat.strike - s).max(0.0) };
            (hit.map(|n| path.times[n]), t_end, value, payoff)
        }
    };
    let (hit_time, liquidation_time, liquidation_value, uop_payoff) = eval;
    let inequality_ok = match strat.side {
        HedgeSide::Super => liquidation_value >= uop_payoff - tol,
        HedgeSide::Sub => liquidation_value <= uop_payoff + tol,
    };
    Ok(PathEvaluation { hit_time, liquidation_time, liquidation_value, uop_payoff, inequality_ok })
}

/// Arithmetic Brownian spot paths for pathwise hedge checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSimConfig {
    pub spot0: f64,
    pub barrier: f64,
    pub maturity: f64,
    /// Volatility in price units per square-root year.
    pub price_vol: f64,
    pub n_steps: usize,
    pub seed: u64,
}

/// Simulates path `index` of the stream given by `cfg.seed`. Whenever two
/// consecutive samples straddle the barrier, the crossing point is inserted
/// at exactly `U` by linear interpolation in time, so the sampled path
/// (read as its linear interpolant) reaches the barrier continuously. The
/// path is absorbed at zero.
pub fn simulate_path(cfg: &PathSimConfig, index: u64) -> Result<MarketPath, HedgeError> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    if !(cfg.spot0 > 0.0 && cfg.maturity > 0.0 && cfg.price_vol >= 0.0 && cfg.n_steps > 0) {
        return Err(HedgeError::InvalidInput("invalid path simulation settings".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let dt = cfg.maturity / cfg.n_steps as f64;
    let (mut times, mut spots) = (vec![0.0], vec![cfg.spot0]);
    let mut s = cfg.spot0;
    for n in 1..=cfg.n_steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        let next = (s + cfg.price_vol * dt.sqrt() * z).max(0.0);
        let (t0, t1) = ((n - 1) as f64 * dt, if n == cfg.n_steps { cfg.maturity } else { n as f64 * dt });
        let u = cfg.barrier;
        if (s < u) != (next < u) && s != u && next != u {
            let tc = t0 + (u - s) / (next - s) * (t1 - t0);
            if tc > t0 && tc < t1 {
                times.push(tc);
                spots.push(u);
            }
        }
        times.push(t1);
        spots.push(next);
        s = next;
    }
    MarketPath::new(times, spots)
}
