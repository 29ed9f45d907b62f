//! Beliefs on implied skewness relative to a barrier, membership tests,
//! and PCLVG dominating surfaces.

use crate::pclvg::{ln_otm_price, pclvg_iv, short_term_iv_limit, sigma_for_limit, PclvgError, PclvgParams};
use crate::surface::{MarketSurface, SurfaceError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error("barrier {0} coincides with a strike")]
    BarrierOnStrike(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid beliefs: {0}")]
    Invalid(String),
    #[error("no dominating parameters found in the search box")]
    NotFound,
    #[error("no scale satisfies both wings; binding strike {strike}")]
    Infeasible { strike: f64 },
    #[error(transparent)]
    Model(#[from] PclvgError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// `Lower` bounds the skew from below, `Upper` from above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeliefSide {
    Lower,
    Upper,
}

/// Bound functions `a_j`, `b_j` sampled on a common maturity grid.
///
/// On the lower side a surface `Σ` belongs if some `c > 0` gives
/// `Σ(K_i,τ) ≤ c·b_i(c²τ)` below the barrier and `Σ(K_j,τ) ≥ c·a_j(c²τ)`
/// above it. The upper side swaps the roles: `Σ(K_i,τ) ≥ c·a_i(c²τ)` and
/// `Σ(K_j,τ) ≤ c·b_j(c²τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beliefs {
    pub barrier: f64,
    pub side: BeliefSide,
    pub horizon: f64,
    pub tau_grid: Vec<f64>,
    pub strikes: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

/// Interpolates linearly on the grid; clamps outside and reports it.
fn sample(grid: &[f64], values: &[f64], tau: f64) -> (f64, bool) {
    if tau <= grid[0] {
        return (values[0], tau < grid[0]);
    }
    let last = grid.len() - 1;
    if tau >= grid[last] {
        return (values[last], tau > grid[last]);
    }
    let hi = grid.partition_point(|&g| g < tau);
    if grid[hi] == tau {
        return (values[hi], false);
    }
    let lo = hi - 1;
    let w = (tau - grid[lo]) / (grid[hi] - grid[lo]);
    (values[lo] + w * (values[hi] - values[lo]), false)
}

impl Beliefs {
    pub fn new(
        barrier: f64,
        side: BeliefSide,
        horizon: f64,
        tau_grid: Vec<f64>,
        strikes: Vec<f64>,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
    ) -> Result<Self, BeliefError> {
        let bad = |m: &str| Err(BeliefError::Invalid(m.to_string()));
        if !(barrier > 0.0 && horizon > 0.0) {
            return bad("barrier and horizon must be positive");
        }
        if tau_grid.is_empty() || tau_grid[0] <= 0.0 || tau_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("maturity grid must be positive and strictly increasing");
        }
        if strikes.is_empty() || a.len() != strikes.len() || b.len() != strikes.len() {
            return bad("one a and one b function per strike");
        }
        if let Some(&k) = strikes.iter().find(|&&k| k == barrier) {
            return Err(BeliefError::BarrierOnStrike(k));
        }
        for f in a.iter().chain(&b) {
            if f.len() != tau_grid.len() || f.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return bad("bound functions must be positive on the whole grid");
            }
        }
        Ok(Self { barrier, side, horizon, tau_grid, strikes, a, b })
    }

    /// Value of the function that binds strike `k` on this side, at `tau`.
    /// The flag is set when `tau` falls outside the grid and was clamped.
    fn bound(&self, k: usize, tau: f64) -> (f64, bool) {
        let below = self.strikes[k] < self.barrier;
        let f = match (self.side, below) {
            (BeliefSide::Lower, true) | (BeliefSide::Upper, false) => &self.b[k],
            (BeliefSide::Lower, false) | (BeliefSide::Upper, true) => &self.a[k],
        };
        sample(&self.tau_grid, f, tau)
    }

    /// Equivalent beliefs generated by `c·a(c²·)`, `c·b(c²·)`.
    pub fn rescaled(&self, c: f64) -> Self {
        let scale = |f: &Vec<Vec<f64>>| f.iter().map(|row| row.iter().map(|v| c * v).collect()).collect();
        Self {
            tau_grid: self.tau_grid.iter().map(|t| t / (c * c)).collect(),
            a: scale(&self.a),
            b: scale(&self.b),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("beliefs serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, BeliefError> {
        let raw: Beliefs = serde_json::from_str(s).map_err(|e| BeliefError::Invalid(e.to_string()))?;
        Self::new(raw.barrier, raw.side, raw.horizon, raw.tau_grid, raw.strikes, raw.a, raw.b)
    }
}

/// Beliefs generated by the PCLVG surface of `p`: every bound function is
/// the model implied vol on `tau_grid`, so the side-relevant ones equal
/// the model smile exactly as the generating definition requires.
pub fn generated_beliefs(
    p: &PclvgParams,
    strikes: &[f64],
    tau_grid: &[f64],
    side: BeliefSide,
) -> Result<Beliefs, BeliefError> {
    if let Some(&k) = strikes.iter().find(|&&k| k == p.barrier) {
        return Err(BeliefError::BarrierOnStrike(k));
    }
    let smile = strikes
        .iter()
        .map(|&k| tau_grid.iter().map(|&t| pclvg_iv(p, k, t)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let horizon = *tau_grid.last().ok_or_else(|| BeliefError::Invalid("empty maturity grid".into()))?;
    Beliefs::new(p.barrier, side, horizon, tau_grid.to_vec(), strikes.to_vec(), smile.clone(), smile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipConfig {
    pub c_min: f64,
    pub c_max: f64,
    pub grid_points: usize,
    /// Accepted shortfall of the worst log-slack.
    pub tol: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self { c_min: 1e-3, c_max: 1e3, grid_points: 601, tol: 1e-9 }
    }
}

struct Constraint {
    belief_index: usize,
    tau: f64,
    iv: f64,
    /// +1 when the surface must stay at or below the scaled bound.
    sign: f64,
}

fn worst_slack(bel: &Beliefs, cons: &[Constraint], c: f64) -> (f64, bool) {
    let mut worst = f64::INFINITY;
    let mut clamped = false;
    for k in cons {
        let (v, cl) = bel.bound(k.belief_index, c * c * k.tau);
        clamped |= cl;
        worst = worst.min(k.sign * ((c * v).ln() - k.iv.ln()));
    }
    (worst, clamped)
}

/// Searches for a scale `c` that puts `surface` inside `bel` on the
/// surface grid. Returns the `c` with the largest worst-case slack, or
/// `None` when every candidate violates some inequality.
pub fn check_membership(
    surface: &MarketSurface,
    bel: &Beliefs,
    cfg: &MembershipConfig,
) -> Result<Option<f64>, BeliefError> {
    let mut cons = Vec::new();
    for (bi, &k) in bel.strikes.iter().enumerate() {
        surface
            .strike_index(k)
            .ok_or_else(|| BeliefError::GridMismatch(format!("strike {k} missing from the surface")))?;
        let below = k < bel.barrier;
        let sign = match (bel.side, below) {
            (BeliefSide::Lower, true) | (BeliefSide::Upper, false) => 1.0,
            _ => -1.0,
        };
        for &tau in &surface.taus {
            if tau > bel.horizon * (1.0 + 1e-12) {
                return Err(BeliefError::GridMismatch(format!("maturity {tau} beyond the horizon {}", bel.horizon)));
            }
            cons.push(Constraint { belief_index: bi, tau, iv: surface.iv_at(k, tau)?, sign });
        }
    }
    let n = cfg.grid_points.max(2);
    let (l0, l1) = (cfg.c_min.ln(), cfg.c_max.ln());
    let grid: Vec<f64> = (0..n).map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()).collect();
    let vals: Vec<f64> = grid.iter().map(|&c| worst_slack(bel, &cons, c).0).collect();
    let best = (0..n).max_by(|&x, &y| vals[x].total_cmp(&vals[y])).unwrap();
    let (mut c, mut f) = (grid[best], vals[best]);

    // golden-section refinement between the neighbours of the best node
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)].ln(), grid[(best + 1).min(n - 1)].ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |x: f64| worst_slack(bel, &cons, x.exp()).0;
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..120 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > f {
            c = x.exp();
            f = fx;
        }
    }
    if f < -cfg.tol {
        return Ok(None);
    }
    if worst_slack(bel, &cons, c).1 {
        log::warn!("membership scale {c} maps maturities outside the belief grid; bounds were clamped");
    }
    Ok(Some(c))
}

/// A PCLVG surface that dominates the beliefs on `(0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominatingSurface {
    pub params: PclvgParams,
    pub horizon: f64,
}

const SAFETY: [f64; 9] = [1.0, 0.95, 0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.05];

/// Number of leading grid maturities on which `p` dominates `bel` in
/// direction `side`.
fn dominated_prefix(p: &PclvgParams, bel: &Beliefs, side: BeliefSide) -> Result<usize, BeliefError> {
    let probe = Beliefs { side, ..bel.clone() };
    for (m, &tau) in bel.tau_grid.iter().enumerate() {
        for (k, &strike) in bel.strikes.iter().enumerate() {
            let iv = pclvg_iv(p, strike, tau)?;
            // dominating inequalities run opposite to membership
            let (bound, _) = probe.bound(k, tau);
            let below = strike < bel.barrier;
            let ok = match (side, below) {
                (BeliefSide::Lower, true) | (BeliefSide::Upper, false) => iv >= bound,
                _ => iv <= bound,
            };
            if !ok {
                return Ok(m);
            }
        }
    }
    Ok(bel.tau_grid.len())
}

/// Builds PCLVG parameters whose surface dominates `bel` in direction
/// `side`. Each wing is seeded from the short-maturity limit so that the
/// limiting inequalities are tight, then pulled inward by a safety factor
/// until the inequalities hold on the longest prefix of the belief grid.
pub fn find_dominating(bel: &Beliefs, side: BeliefSide) -> Result<DominatingSurface, BeliefError> {
    let u = bel.barrier;
    if let Some(&k) = bel.strikes.iter().find(|&&k| k == u) {
        return Err(BeliefError::BarrierOnStrike(k));
    }
    let probe = Beliefs { side, ..bel.clone() };
    // binding σ₁ over strikes below, σ₂ over strikes above
    let mut below: Vec<f64> = Vec::new();
    let mut above: Vec<f64> = Vec::new();
    for (k, &strike) in bel.strikes.iter().enumerate() {
        let target = probe.bound(k, bel.tau_grid[0]).0;
        let s = sigma_for_limit(u, strike, target)?;
        if strike < u { below.push(s) } else { above.push(s) }
    }
    let fold = |v: &[f64], max: bool| {
        v.iter().copied().reduce(|x, y| if max == (y > x) { y } else { x })
    };
    // lower dominating: put wing at least b, call wing at most a
    let (s1, s2) = match side {
        BeliefSide::Lower => (fold(&below, true), fold(&above, false)),
        BeliefSide::Upper => (fold(&below, false), fold(&above, true)),
    };
    let (base1, base2) = match (s1, s2) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a, a),
        (None, Some(b)) => (b, b),
        (None, None) => return Err(BeliefError::Invalid("no strikes".into())),
    };
    let mut best: Option<(usize, PclvgParams)> = None;
    for theta in SAFETY {
        let (x1, x2) = match side {
            BeliefSide::Lower => (base1 / theta, base2 * theta),
            BeliefSide::Upper => (base1 * theta, base2 / theta),
        };
        let p = PclvgParams::new(x1, x2, u)?;
        let n = dominated_prefix(&p, bel, side)?;
        if n > best.map_or(0, |b| b.0) {
            best = Some((n, p));
        }
        if n == bel.tau_grid.len() {
            break;
        }
    }
    match best {
        Some((n, params)) => Ok(DominatingSurface { params, horizon: bel.tau_grid[n - 1] }),
        None => Err(BeliefError::NotFound),
    }
}

/// Smallest or largest scale of `base` at which the model smile crosses
/// `target` at `(strike, tau)`. Compares OTM prices, which are monotone in
/// the implied vol, so no inversion is needed.
fn solve_scale(base: &PclvgParams, strike: f64, tau: f64, target: f64) -> f64 {
    let ln_target = crate::bs::ln_otm_price(base.barrier, strike, tau, target);
    let above = |x: f64| ln_otm_price(&base.scaled(x.exp()), strike, tau) >= ln_target;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while above(lo) && lo > -60.0 {
        lo *= 2.0;
    }
    while !above(hi) && hi < 60.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        if hi - lo < 1e-14 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Smallest multiple of `(1, ratio)` whose PCLVG surface at barrier `u`
/// lies at or above the market at put strike `market.strikes[put_index]`
/// and at or below it at every strike above `u`, for maturities up to
/// `horizon`.
pub fn fit_scale(
    ratio: f64,
    market: &MarketSurface,
    u: f64,
    put_index: usize,
    horizon: f64,
) -> Result<PclvgParams, BeliefError> {
    let k_put = *market
        .strikes
        .get(put_index)
        .ok_or_else(|| BeliefError::GridMismatch("put index out of range".into()))?;
    if k_put >= u {
        return Err(BeliefError::GridMismatch("put strike must lie below the barrier".into()));
    }
    let calls: Vec<f64> = market.strikes.iter().copied().filter(|&k| k > u).collect();
    if calls.is_empty() {
        return Err(BeliefError::GridMismatch("no strike above the barrier".into()));
    }
    let taus: Vec<f64> = market.taus.iter().copied().filter(|&t| t <= horizon).collect();
    if taus.is_empty() {
        return Err(BeliefError::GridMismatch("no maturity within the horizon".into()));
    }
    let seed = short_term_iv_limit(&PclvgParams::from_ratio(1.0, ratio, u)?, k_put)?;
    let base = PclvgParams::from_ratio((market.iv_at(k_put, taus[0])? / seed).powi(2), ratio, u)?;

    let mut need = 0.0f64;
    for &t in &taus {
        need = need.max(solve_scale(&base, k_put, t, market.iv_at(k_put, t)?));
    }
    let mut cap = f64::INFINITY;
    let mut binding = calls[0];
    for &k in &calls {
        for &t in &taus {
            let s = solve_scale(&base, k, t, market.iv_at(k, t)?);
            if s < cap {
                cap = s;
                binding = k;
            }
        }
    }
    if need > cap * (1.0 + 1e-9) {
        return Err(BeliefError::Infeasible { strike: binding });
    }
    Ok(base.scaled(need))
}
