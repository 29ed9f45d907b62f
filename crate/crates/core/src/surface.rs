//! Market implied-volatility surfaces: ingestion, carry normalization,
//! static no-arbitrage checks and interpolation.

use crate::bs::{self, OptionKind};
use crate::pclvg::{pclvg_iv, PclvgError, PclvgParams};
use chrono::NaiveDate;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("invalid surface: {0}")]
    Invalid(String),
    #[error("query (strike {strike}, tau {tau}) outside the surface domain")]
    OutOfDomain { strike: f64, tau: f64 },
    #[error("surface cell needed at (strike {strike}, tau {tau}) is missing")]
    MissingCell { strike: f64, tau: f64 },
    #[error("schema error at line {line}: {message}")]
    Schema { line: u64, message: String },
    #[error("no usable quotes for {date}")]
    EmptySurface { date: NaiveDate },
    #[error("rate curve undefined at tau {tau}")]
    CurveDomain { tau: f64 },
    #[error(transparent)]
    Model(#[from] PclvgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellQuality {
    Observed,
    Interpolated,
    Missing,
}

/// Implied volatilities on a strike × maturity grid at one observation date.
/// `iv[j][m]` belongs to `strikes[j]` and `taus[m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSurface {
    pub observation_date: NaiveDate,
    pub spot: f64,
    pub strikes: Vec<f64>,
    pub taus: Vec<f64>,
    pub iv: Vec<Vec<f64>>,
    pub quality: Vec<Vec<CellQuality>>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl MarketSurface {
    /// Surface with every cell observed.
    pub fn new(
        observation_date: NaiveDate,
        spot: f64,
        strikes: Vec<f64>,
        taus: Vec<f64>,
        iv: Vec<Vec<f64>>,
    ) -> Result<Self, SurfaceError> {
        let quality = iv.iter().map(|row| vec![CellQuality::Observed; row.len()]).collect();
        Self::with_quality(observation_date, spot, strikes, taus, iv, quality)
    }

    pub fn with_quality(
        observation_date: NaiveDate,
        spot: f64,
        strikes: Vec<f64>,
        taus: Vec<f64>,
        iv: Vec<Vec<f64>>,
        quality: Vec<Vec<CellQuality>>,
    ) -> Result<Self, SurfaceError> {
        let bad = |m: &str| Err(SurfaceError::Invalid(m.to_string()));
        if !(spot > 0.0 && spot.is_finite()) {
            return bad("spot must be positive");
        }
        if strikes.len() < 2 || !strictly_increasing(&strikes) || strikes[0] <= 0.0 {
            return bad("need at least two positive, strictly increasing strikes");
        }
        if taus.is_empty() || !strictly_increasing(&taus) || taus[0] <= 0.0 {
            return bad("maturities must be positive and strictly increasing");
        }
        if iv.len() != strikes.len() || quality.len() != strikes.len() {
            return bad("iv rows must match strikes");
        }
        for (row, q) in iv.iter().zip(&quality) {
            if row.len() != taus.len() || q.len() != taus.len() {
                return bad("iv columns must match maturities");
            }
            for (v, q) in row.iter().zip(q) {
                if *q != CellQuality::Missing && !(v.is_finite() && *v > 0.0) {
                    return bad("implied vols must be finite and positive");
                }
            }
        }
        Ok(Self { observation_date, spot, strikes, taus, iv, quality })
    }

    /// Surface of a PCLVG model observed with spot at its barrier.
    pub fn from_pclvg(
        p: &PclvgParams,
        observation_date: NaiveDate,
        strikes: Vec<f64>,
        taus: Vec<f64>,
    ) -> Result<Self, SurfaceError> {
        let iv = strikes
            .iter()
            .map(|&k| taus.iter().map(|&t| pclvg_iv(p, k, t)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(observation_date, p.barrier, strikes, taus, iv)
    }

    /// Flat Black–Scholes surface.
    pub fn flat(observation_date: NaiveDate, spot: f64, strikes: Vec<f64>, taus: Vec<f64>, vol: f64) -> Result<Self, SurfaceError> {
        let iv = vec![vec![vol; taus.len()]; strikes.len()];
        Self::new(observation_date, spot, strikes, taus, iv)
    }

    pub fn strike_index(&self, strike: f64) -> Option<usize> {
        self.strikes.iter().position(|&k| k == strike)
    }

    fn cell(&self, j: usize, m: usize) -> Result<f64, SurfaceError> {
        if self.quality[j][m] == CellQuality::Missing {
            return Err(SurfaceError::MissingCell { strike: self.strikes[j], tau: self.taus[m] });
        }
        Ok(self.iv[j][m])
    }

    fn bracket(grid: &[f64], x: f64) -> (usize, usize, f64) {
        let hi = grid.partition_point(|&g| g < x);
        if grid[hi] == x || hi == 0 {
            return (hi, hi, 0.0);
        }
        let lo = hi - 1;
        (lo, hi, (x - grid[lo]) / (grid[hi] - grid[lo]))
    }

    /// Linear in strike on IV, linear in maturity on total variance.
    pub fn iv_at(&self, strike: f64, tau: f64) -> Result<f64, SurfaceError> {
        let (k0, k1) = (self.strikes[0], *self.strikes.last().unwrap());
        let (t0, t1) = (self.taus[0], *self.taus.last().unwrap());
        if !(strike >= k0 && strike <= k1 && tau >= t0 && tau <= t1) {
            return Err(SurfaceError::OutOfDomain { strike, tau });
        }
        let (jl, jh, wk) = Self::bracket(&self.strikes, strike);
        let (ml, mh, _) = Self::bracket(&self.taus, tau);
        let iv_in_strike = |m: usize| -> Result<f64, SurfaceError> {
            let lo = self.cell(jl, m)?;
            if jl == jh {
                return Ok(lo);
            }
            Ok(lo + wk * (self.cell(jh, m)? - lo))
        };
        if ml == mh {
            return iv_in_strike(ml);
        }
        let (ta, tb) = (self.taus[ml], self.taus[mh]);
        let (va, vb) = (iv_in_strike(ml)?.powi(2) * ta, iv_in_strike(mh)?.powi(2) * tb);
        let w = (tau - ta) / (tb - ta);
        Ok(((va + w * (vb - va)) / tau).sqrt())
    }

    /// Zero-carry Black–Scholes price read off the surface.
    pub fn price(&self, kind: OptionKind, strike: f64, tau: f64) -> Result<f64, SurfaceError> {
        let vol = self.iv_at(strike, tau)?;
        Ok(match kind {
            OptionKind::Call => bs::call_price(self.spot, strike, tau, vol),
            OptionKind::Put => bs::put_price(self.spot, strike, tau, vol),
        })
    }

    pub fn call_price(&self, strike: f64, tau: f64) -> Result<f64, SurfaceError> {
        self.price(OptionKind::Call, strike, tau)
    }

    pub fn put_price(&self, strike: f64, tau: f64) -> Result<f64, SurfaceError> {
        self.price(OptionKind::Put, strike, tau)
    }

    /// Copy with every implied vol multiplied by `factor`.
    pub fn scaled_iv(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.iv.iter_mut().flatten().for_each(|v| *v *= factor);
        s
    }
}

// ---------------------------------------------------------------------------
// Static no-arbitrage checks

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityConfig {
    /// Largest accepted ratio between the IVs of the two shortest maturities,
    /// used as the finite-data stand-in for a positive short-maturity limit.
    pub limit_band: f64,
    /// Absolute price tolerance, as a fraction of spot.
    pub price_tol: f64,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        Self { limit_band: 3.0, price_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1 short-maturity limit, 2 strike monotonicity, 3 calendar, 4 convexity.
    pub condition: u8,
    pub strike: f64,
    pub tau: f64,
    pub strike_index: usize,
    pub tau_index: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub limit_proxy: String,
}

impl AdmissibilityReport {
    pub fn has_condition(&self, condition: u8) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

/// Checks the four static no-arbitrage conditions on the grid using
/// zero-carry call prices. Missing cells are skipped.
pub fn validate_admissible(s: &MarketSurface, cfg: &AdmissibilityConfig) -> AdmissibilityReport {
    let mut violations = Vec::new();
    let tol = cfg.price_tol * s.spot;
    let n = s.strikes.len();
    let m = s.taus.len();
    let mut push = |condition, j: usize, t: usize, magnitude| {
        violations.push(Violation {
            condition,
            strike: s.strikes[j],
            tau: s.taus[t],
            strike_index: j,
            tau_index: t,
            magnitude,
        })
    };
    let ok = |j: usize, t: usize| s.quality[j][t] != CellQuality::Missing;
    let call = |j: usize, t: usize| bs::call_price(s.spot, s.strikes[j], s.taus[t], s.iv[j][t]);

    for j in 0..n {
        if !ok(j, 0) {
            continue;
        }
        let v0 = s.iv[j][0];
        if !(v0.is_finite() && v0 > 0.0) {
            push(1, j, 0, f64::NAN);
        } else if m >= 2 && ok(j, 1) {
            let r = s.iv[j][1] / v0;
            let excess = r.max(1.0 / r);
            if excess > cfg.limit_band {
                push(1, j, 0, excess);
            }
        }
    }

    for t in 0..m {
        // strike axis with the zero-strike node (K₀ = 0, C = S)
        let mut nodes = vec![(0.0, s.spot, usize::MAX)];
        nodes.extend((0..n).filter(|&j| ok(j, t)).map(|j| (s.strikes[j], call(j, t), j)));
        for w in nodes.windows(2) {
            let rise = w[1].1 - w[0].1;
            if rise > tol {
                push(2, w[1].2, t, rise);
            }
        }
        for w in nodes.windows(3) {
            let left = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let right = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            let dip = left - right;
            if dip * (w[2].0 - w[1].0) > tol {
                push(4, w[1].2, t, dip);
            }
        }
    }

    for j in 0..n {
        let cols: Vec<usize> = (0..m).filter(|&t| ok(j, t)).collect();
        for w in cols.windows(2) {
            let drop = call(j, w[0]) - call(j, w[1]);
            if drop > tol {
                push(3, j, w[1], drop);
            }
        }
    }

    AdmissibilityReport {
        passed: violations.is_empty(),
        violations,
        limit_proxy: format!(
            "front-maturity IV finite and positive; IV ratio of the two shortest maturities within a factor {}",
            cfg.limit_band
        ),
    }
}

// ---------------------------------------------------------------------------
// Chain ingestion

/// One row of the option-chain CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub date: NaiveDate,
    pub expiry: NaiveDate,
    pub strike: f64,
    pub kind: QuoteKind,
    pub bid: Option<f64>,
    pub ask: Option<f64>,
    pub open_interest: f64,
    pub underlying: f64,
    pub rate: f64,
    pub div_yield: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuoteKind {
    C,
    P,
}

impl From<QuoteKind> for OptionKind {
    fn from(k: QuoteKind) -> Self {
        match k {
            QuoteKind::C => OptionKind::Call,
            QuoteKind::P => OptionKind::Put,
        }
    }
}

pub const CHAIN_HEADER: [&str; 10] =
    ["date", "expiry", "strike", "kind", "bid", "ask", "open_interest", "underlying", "rate", "div_yield"];

/// ACT/365 year fraction.
pub fn year_fraction(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / 365.0
}

pub fn read_chain(path: &Path) -> Result<Vec<ChainRow>, SurfaceError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CHAIN_HEADER {
        return Err(SurfaceError::Schema { line: 1, message: format!("expected header {}", CHAIN_HEADER.join(",")) });
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<ChainRow>() {
        match rec {
            Ok(r) => rows.push(r),
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(SurfaceError::Schema { line, message: e.to_string() });
            }
        }
    }
    Ok(rows)
}

pub fn write_chain(path: &Path, rows: &[ChainRow]) -> Result<(), SurfaceError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Piecewise-linear curve in maturity, defined on `[first, last]` node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    nodes: Vec<(f64, f64)>,
    flat: bool,
}

impl RateCurve {
    pub fn flat(rate: f64) -> Self {
        Self { nodes: vec![(0.0, rate)], flat: true }
    }

    /// Nodes are sorted by maturity; duplicate maturities keep the first value.
    pub fn from_nodes(mut nodes: Vec<(f64, f64)>) -> Self {
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        nodes.dedup_by(|a, b| a.0 == b.0);
        Self { nodes, flat: false }
    }

    pub fn at(&self, tau: f64) -> Result<f64, SurfaceError> {
        if self.flat {
            return Ok(self.nodes[0].1);
        }
        let (first, last) = match (self.nodes.first(), self.nodes.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(SurfaceError::CurveDomain { tau }),
        };
        if tau < first.0 || tau > last.0 {
            return Err(SurfaceError::CurveDomain { tau });
        }
        let hi = self.nodes.partition_point(|n| n.0 < tau);
        if self.nodes[hi].0 == tau {
            return Ok(self.nodes[hi].1);
        }
        let (a, b) = (self.nodes[hi - 1], self.nodes[hi]);
        Ok(a.1 + (tau - a.0) / (b.0 - a.0) * (b.1 - a.1))
    }
}

/// A quoted option price with its (possibly carry-adjusted) strike and spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub tau: f64,
    pub listed_strike: f64,
    pub strike: f64,
    pub spot: f64,
    pub kind: OptionKind,
    pub price: f64,
}

/// Maps quotes to a zero-rate, zero-dividend market: `K̃ = K·e^{−rτ}`,
/// `S̃ = S·e^{−qτ}`, prices unchanged.
pub fn normalize_carry(quotes: &[Quote], r: &RateCurve, q: &RateCurve) -> Result<Vec<Quote>, SurfaceError> {
    quotes
        .iter()
        .map(|x| {
            Ok(Quote {
                strike: x.strike * (-r.at(x.tau)? * x.tau).exp(),
                spot: x.spot * (-q.at(x.tau)? * x.tau).exp(),
                ..*x
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Keep only this many of the shortest maturities per date.
    pub keep_front_maturities: Option<usize>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { keep_front_maturities: Some(3) }
    }
}

fn usable_mid(r: &ChainRow) -> Option<f64> {
    match (r.bid, r.ask) {
        (Some(b), Some(a)) if b.is_finite() && a.is_finite() && b >= 0.0 && a >= b && a > 0.0 => Some(0.5 * (a + b)),
        _ => None,
    }
}

fn fill_strike_gaps(strikes: &[f64], col: &mut [Option<f64>], q: &mut [CellQuality]) {
    let known: Vec<usize> = (0..col.len()).filter(|&j| col[j].is_some()).collect();
    for w in known.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (va, vb) = (col[a].unwrap(), col[b].unwrap());
        for j in a + 1..b {
            let t = (strikes[j] - strikes[a]) / (strikes[b] - strikes[a]);
            col[j] = Some(va + t * (vb - va));
            q[j] = CellQuality::Interpolated;
        }
    }
}

/// Builds one surface per observation date from chain rows.
///
/// Mid prices of OTM quotes with both sides present and positive open
/// interest are carry-normalized per slice and inverted to implied vols on
/// the listed strike axis. Interior strike gaps are filled linearly in IV
/// and flagged as interpolated; gaps at the ends stay missing.
pub fn surfaces_from_rows(rows: &[ChainRow], cfg: &ChainConfig) -> Result<Vec<MarketSurface>, SurfaceError> {
    let mut by_date: BTreeMap<NaiveDate, Vec<&ChainRow>> = BTreeMap::new();
    for r in rows {
        by_date.entry(r.date).or_default().push(r);
    }
    let mut out = Vec::new();
    for (date, rows) in by_date {
        let spot = rows[0].underlying;
        let mut expiries: Vec<NaiveDate> = rows
            .iter()
            .filter(|r| r.expiry > date && usable_mid(r).is_some() && r.open_interest > 0.0)
            .map(|r| r.expiry)
            .collect();
        expiries.sort();
        expiries.dedup();
        if let Some(k) = cfg.keep_front_maturities {
            expiries.truncate(k);
        }
        let mut cells: BTreeMap<(NaiveDate, u64), f64> = BTreeMap::new();
        for r in &rows {
            let Some(mid) = usable_mid(r) else { continue };
            if r.open_interest <= 0.0 || !expiries.contains(&r.expiry) || !(r.strike > 0.0) {
                continue;
            }
            let tau = year_fraction(date, r.expiry);
            let fwd_spot = r.underlying * (-r.div_yield * tau).exp();
            let adj_strike = r.strike * (-r.rate * tau).exp();
            let kind: OptionKind = r.kind.into();
            let otm = match kind {
                OptionKind::Call => adj_strike >= fwd_spot,
                OptionKind::Put => adj_strike < fwd_spot,
            };
            if !otm {
                continue;
            }
            match bs::implied_vol(mid, fwd_spot, adj_strike, tau, kind) {
                Ok(v) => {
                    if cells.insert((r.expiry, r.strike.to_bits()), v).is_some() {
                        log::warn!("{date}: duplicate quote at {} {}, keeping the later one", r.expiry, r.strike);
                    }
                }
                Err(e) => log::warn!("{date}: no implied vol for {} {}: {e}", r.expiry, r.strike),
            }
        }
        let mut strikes: Vec<f64> = cells.keys().map(|(_, k)| f64::from_bits(*k)).collect();
        strikes.sort_by(f64::total_cmp);
        strikes.dedup();
        expiries.retain(|e| cells.keys().any(|(x, _)| x == e));
        if strikes.len() < 2 || expiries.is_empty() {
            return Err(SurfaceError::EmptySurface { date });
        }
        let mut iv = vec![vec![f64::NAN; expiries.len()]; strikes.len()];
        let mut quality = vec![vec![CellQuality::Missing; expiries.len()]; strikes.len()];
        for (m, e) in expiries.iter().enumerate() {
            let mut col: Vec<Option<f64>> = strikes.iter().map(|k| cells.get(&(*e, k.to_bits())).copied()).collect();
            let mut q: Vec<CellQuality> =
                col.iter().map(|c| if c.is_some() { CellQuality::Observed } else { CellQuality::Missing }).collect();
            fill_strike_gaps(&strikes, &mut col, &mut q);
            for j in 0..strikes.len() {
                iv[j][m] = col[j].unwrap_or(f64::NAN);
                quality[j][m] = q[j];
            }
        }
        let taus = expiries.iter().map(|e| year_fraction(date, *e)).collect();
        out.push(MarketSurface::with_quality(date, spot, strikes, taus, iv, quality)?);
    }
    Ok(out)
}

pub fn load_chain(path: &Path, cfg: &ChainConfig) -> Result<Vec<MarketSurface>, SurfaceError> {
    let rows = read_chain(path)?;
    surfaces_from_rows(&rows, cfg)
}

// ---------------------------------------------------------------------------
// Synthetic chains

/// Parameters of a synthetic option chain whose zero-carry smiles are PCLVG
/// smiles with the barrier at the (dividend-adjusted) spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub start: NaiveDate,
    pub n_dates: usize,
    pub spot0: f64,
    /// Daily log-return volatility of the spot path.
    pub daily_vol: f64,
    pub expiry_days: Vec<i64>,
    /// Listed strikes as fractions of `spot0`.
    pub moneyness: Vec<f64>,
    /// Short-maturity implied vol targeted at the lowest listed put.
    pub put_wing_iv: f64,
    /// Skew ratios `σ₂/σ₁`, cycled over dates.
    pub ratios: Vec<f64>,
    pub rate: f64,
    pub div_yield: f64,
    /// Half bid-ask spread as a fraction of mid.
    pub half_spread: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2011, 1, 3).unwrap(),
            n_dates: 5,
            spot0: 1000.0,
            daily_vol: 0.01,
            expiry_days: vec![10, 24, 38, 66],
            moneyness: (0..17).map(|i| 0.8 + 0.025 * i as f64).collect(),
            put_wing_iv: 0.2,
            ratios: vec![0.6],
            rate: 0.0,
            div_yield: 0.0,
            half_spread: 0.0,
        }
    }
}

/// Generates chain rows (calls and puts at every listed strike) following `cfg`.
pub fn synthetic_chain<R: Rng>(cfg: &SynthConfig, rng: &mut R) -> Result<Vec<ChainRow>, SurfaceError> {
    let strikes: Vec<f64> = cfg.moneyness.iter().map(|m| (m * cfg.spot0 * 100.0).round() / 100.0).collect();
    let k_low = strikes.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    let mut spot = cfg.spot0;
    for d in 0..cfg.n_dates {
        let date = cfg.start + chrono::Days::new(d as u64);
        if d > 0 {
            let z: f64 = rng.sample(StandardNormal);
            spot *= (cfg.daily_vol * z - 0.5 * cfg.daily_vol * cfg.daily_vol).exp();
        }
        let ratio = cfg.ratios[d % cfg.ratios.len()];
        for &days in &cfg.expiry_days {
            let expiry = date + chrono::Days::new(days as u64);
            let tau = year_fraction(date, expiry);
            let u = spot * (-cfg.div_yield * tau).exp();
            let s1 = crate::pclvg::sigma_for_limit(u, k_low.min(0.9 * u), cfg.put_wing_iv)?;
            let p = PclvgParams::from_ratio(s1, ratio, u)?;
            for &k in &strikes {
                let adj = k * (-cfg.rate * tau).exp();
                let vol = pclvg_iv(&p, adj, tau)?;
                for kind in [QuoteKind::C, QuoteKind::P] {
                    let mid = match kind {
                        QuoteKind::C => bs::call_price(u, adj, tau, vol),
                        QuoteKind::P => bs::put_price(u, adj, tau, vol),
                    };
                    rows.push(ChainRow {
                        date,
                        expiry,
                        strike: k,
                        kind,
                        bid: Some(mid * (1.0 - cfg.half_spread)),
                        ask: Some(mid * (1.0 + cfg.half_spread)),
                        open_interest: 100.0,
                        underlying: spot,
                        rate: cfg.rate,
                        div_yield: cfg.div_yield,
                    });
                }
            }
        }
    }
    Ok(rows)
}
