//! Per-smile PCLVG fits, the skew-ratio series and its quantiles.

use crate::bs::{implied_vol, OptionKind};
use crate::pclvg::{pclvg_call, pclvg_put, sigma_for_limit, PclvgParams};
use crate::surface::{CellQuality, MarketSurface};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SIGMA_MIN: f64 = 1e-8;
pub const SIGMA_MAX: f64 = 1e6;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("need at least 3 quotes, got {0}")]
    InsufficientQuotes(usize),
    #[error("no quote strictly {0} the barrier")]
    OneSidedSmile(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty skew series")]
    EmptySeries,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileQuote {
    pub strike: f64,
    pub kind: OptionKind,
    pub price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileFit {
    pub date: NaiveDate,
    pub tau: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rmse: f64,
    pub n_quotes: usize,
}

impl SmileFit {
    pub fn ratio(&self) -> f64 {
        self.sigma2 / self.sigma1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewEntry {
    pub date: NaiveDate,
    pub tau: f64,
    pub ratio: f64,
}

/// Fitted skew ratios ordered by `(date, tau)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkewSeries {
    pub entries: Vec<SkewEntry>,
    pub fits: Vec<SmileFit>,
}

impl SkewSeries {
    pub fn from_fits(mut fits: Vec<SmileFit>) -> Self {
        fits.sort_by(|a, b| a.date.cmp(&b.date).then(a.tau.total_cmp(&b.tau)));
        let entries = fits.iter().map(|f| SkewEntry { date: f.date, tau: f.tau, ratio: f.ratio() }).collect();
        Self { entries, fits }
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.ratio).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CalibrationError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["date", "tau", "sigma1", "sigma2", "ratio", "rmse", "n_quotes"])?;
        for f in &self.fits {
            w.write_record([
                f.date.to_string(),
                f.tau.to_string(),
                f.sigma1.to_string(),
                f.sigma2.to_string(),
                f.ratio().to_string(),
                f.rmse.to_string(),
                f.n_quotes.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, CalibrationError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Outcome of a two-dimensional Nelder–Mead run. `history` holds the best
/// objective value after each iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: [f64; 2],
    pub value: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Nelder–Mead with standard coefficients. Stops when the spread of
/// objective values falls below `rel_tol` times the best value and the
/// simplex has collapsed, or after `max_iter` iterations.
pub fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, x0: [f64; 2], step: f64, rel_tol: f64, max_iter: usize) -> Minimum {
    let mut simplex = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut vals = simplex.map(&f);
    let mut history = Vec::new();
    let mut iterations = 0;
    let comb = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while iterations < max_iter {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        let spread = vals[2] - vals[0];
        let size = simplex[1..]
            .iter()
            .map(|p| (p[0] - simplex[0][0]).abs().max((p[1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if spread <= rel_tol * vals[0].abs() && size < 1e-9 || spread == 0.0 && size < 1e-12 {
            break;
        }
        iterations += 1;
        let centroid = comb(simplex[0], simplex[1], 0.5);
        let worst = simplex[2];
        let refl = comb(centroid, worst, -1.0);
        let fr = f(refl);
        if fr < vals[0] {
            let exp = comb(centroid, worst, -2.0);
            let fe = f(exp);
            (simplex[2], vals[2]) = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < vals[1] {
            (simplex[2], vals[2]) = (refl, fr);
        } else {
            let (cand, fc) = if fr < vals[2] {
                let c = comb(centroid, refl, 0.5);
                (c, f(c))
            } else {
                let c = comb(centroid, worst, 0.5);
                (c, f(c))
            };
            if fc < vals[2].min(fr) {
                (simplex[2], vals[2]) = (cand, fc);
            } else {
                for i in 1..3 {
                    simplex[i] = comb(simplex[0], simplex[i], 0.5);
                    vals[i] = f(simplex[i]);
                }
            }
        }
        history.push(vals.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Minimum { x: simplex[best], value: vals[best], iterations, history }
}

const START_FACTORS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn clamp_sigma(log_s: f64) -> f64 {
    log_s.exp().clamp(SIGMA_MIN, SIGMA_MAX)
}

/// Wing level for one side, from inverting the short-maturity implied-vol
/// limit at the most out-of-the-money quote. Falls back to the exponential
/// tail of the OTM price if the implied vol cannot be found.
fn wing_seed(q: &SmileQuote, u: f64, tau: f64) -> f64 {
    let from_iv = implied_vol(q.price, u, q.strike, tau, q.kind)
        .ok()
        .and_then(|iv| sigma_for_limit(u, q.strike, iv).ok())
        .filter(|s| s.is_finite() && *s > 0.0);
    from_iv
        .unwrap_or_else(|| {
            let otm = match q.kind {
                OptionKind::Put => q.price - (q.strike - u).max(0.0),
                OptionKind::Call => q.price - (u - q.strike).max(0.0),
            };
            let decay = (tau * u / otm.max(1e-300)).ln().max(1.0);
            (q.strike - u).abs() / (tau * decay)
        })
        .clamp(SIGMA_MIN, SIGMA_MAX)
}

/// Least-squares PCLVG fit of one maturity slice in price space, with the
/// spot at the barrier `u`. A 5×5 grid of starts around the wing seeds is
/// refined by Nelder–Mead in `(ln σ₁, ln σ₂)`; the best local minimum wins.
pub fn fit_smile(date: NaiveDate, tau: f64, u: f64, quotes: &[SmileQuote]) -> Result<SmileFit, CalibrationError> {
    if !(tau > 0.0 && u > 0.0) {
        return Err(CalibrationError::InvalidInput("tau and barrier must be positive".into()));
    }
    if quotes.len() < 3 {
        return Err(CalibrationError::InsufficientQuotes(quotes.len()));
    }
    if quotes.iter().any(|q| !(q.strike > 0.0 && q.price.is_finite() && q.price >= 0.0)) {
        return Err(CalibrationError::InvalidInput("strikes must be positive and prices finite".into()));
    }
    let low = quotes.iter().filter(|q| q.strike < u).min_by(|a, b| a.strike.total_cmp(&b.strike));
    let high = quotes.iter().filter(|q| q.strike > u).max_by(|a, b| a.strike.total_cmp(&b.strike));
    let low = low.ok_or(CalibrationError::OneSidedSmile("below"))?;
    let high = high.ok_or(CalibrationError::OneSidedSmile("above"))?;
    let (seed1, seed2) = (wing_seed(low, u, tau), wing_seed(high, u, tau));

    let objective = |x: [f64; 2]| -> f64 {
        let p = PclvgParams { sigma1: clamp_sigma(x[0]), sigma2: clamp_sigma(x[1]), barrier: u };
        quotes
            .iter()
            .map(|q| {
                let model = match q.kind {
                    OptionKind::Call => pclvg_call(&p, u, q.strike, tau),
                    OptionKind::Put => pclvg_put(&p, u, q.strike, tau),
                };
                model.map(|m| (m - q.price).powi(2)).unwrap_or(f64::INFINITY)
            })
            .sum()
    };

    let mut best: Option<Minimum> = None;
    for a in START_FACTORS {
        for b in START_FACTORS {
            let x0 = [(seed1 * a).ln(), (seed2 * b).ln()];
            let mut m = nelder_mead(objective, x0, 0.1, 1e-10, 2000);
            // restart once from the optimum to escape a degenerate simplex
            let polish = nelder_mead(objective, m.x, 0.01, 1e-10, 2000);
            if polish.value <= m.value {
                m = polish;
            }
            if best.as_ref().is_none_or(|b| m.value < b.value) {
                best = Some(m);
            }
        }
    }
    let best = best.expect("nonempty start grid");
    Ok(SmileFit {
        date,
        tau,
        sigma1: clamp_sigma(best.x[0]),
        sigma2: clamp_sigma(best.x[1]),
        rmse: (best.value / quotes.len() as f64).sqrt(),
        n_quotes: quotes.len(),
    })
}

/// Out-of-the-money quotes of one maturity column, skipping missing cells
/// and the strike at the spot.
pub fn smile_quotes(surface: &MarketSurface, tau_index: usize) -> Vec<SmileQuote> {
    let tau = surface.taus[tau_index];
    let u = surface.spot;
    surface
        .strikes
        .iter()
        .enumerate()
        .filter(|&(j, &k)| surface.quality[j][tau_index] != CellQuality::Missing && k != u)
        .filter_map(|(_, &k)| {
            let kind = if k < u { OptionKind::Put } else { OptionKind::Call };
            surface.price(kind, k, tau).ok().map(|price| SmileQuote { strike: k, kind, price })
        })
        .collect()
}

/// Fits every `(date, τ)` slice with the barrier at the spot. Slices that
/// fail are logged and skipped. `jobs` bounds the worker threads.
pub fn skew_series(dataset: &[MarketSurface], jobs: usize) -> SkewSeries {
    let slices: Vec<(usize, usize)> =
        dataset.iter().enumerate().flat_map(|(s, surf)| (0..surf.taus.len()).map(move |m| (s, m))).collect();
    let fit_one = |&(s, m): &(usize, usize)| {
        let surf = &dataset[s];
        let quotes = smile_quotes(surf, m);
        match fit_smile(surf.observation_date, surf.taus[m], surf.spot, &quotes) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("skipping slice {} tau={}: {e}", surf.observation_date, surf.taus[m]);
                None
            }
        }
    };
    let fits: Vec<SmileFit> = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(|| slices.par_iter().filter_map(fit_one).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); fitting sequentially");
            slices.iter().filter_map(fit_one).collect()
        }
    };
    SkewSeries::from_fits(fits)
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(κ_*, κ^*)`: the `alpha` and `1 − alpha` quantiles of the skew ratios.
pub fn quantile_kappas(series: &SkewSeries, alpha: f64) -> Result<(f64, f64), CalibrationError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(CalibrationError::InvalidInput("alpha must lie in (0, 0.5)".into()));
    }
    let mut r = series.ratios();
    if r.is_empty() {
        return Err(CalibrationError::EmptySeries);
    }
    r.sort_by(f64::total_cmp);
    Ok((quantile(&r, alpha), quantile(&r, 1.0 - alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaFile {
    pub alpha: f64,
    pub kappa_lower: f64,
    pub kappa_upper: f64,
    pub n_ratios: usize,
}

impl KappaFile {
    pub fn read(path: &Path) -> Result<Self, CalibrationError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> Result<String, CalibrationError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs::{call_price, put_price};

    fn d0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2012, 1, 3).unwrap()
    }

    fn model_quotes(p: &PclvgParams, tau: f64, strikes: &[f64]) -> Vec<SmileQuote> {
        let u = p.barrier;
        strikes
            .iter()
            .map(|&k| {
                let (kind, price) = if k < u {
                    (OptionKind::Put, pclvg_put(p, u, k, tau).unwrap())
                } else {
                    (OptionKind::Call, pclvg_call(p, u, k, tau).unwrap())
                };
                SmileQuote { strike: k, kind, price }
            })
            .collect()
    }

    fn strikes() -> Vec<f64> {
        (0..17).map(|i| 800.0 + 25.0 * i as f64).filter(|k| *k != 1000.0).collect()
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: [f64; 2]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, [-1.2, 1.0], 0.5, 1e-14, 10_000);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
        assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn noiseless_round_trip() {
        for (s1, s2, tau) in [(40.0, 20.0, 0.1), (400.0, 300.0, 0.02), (60.0, 70.0, 0.25)] {
            let p = PclvgParams::new(s1, s2, 1000.0).unwrap();
            let fit = fit_smile(d0(), tau, 1000.0, &model_quotes(&p, tau, &strikes())).unwrap();
            assert!((fit.sigma1 / s1 - 1.0).abs() < 1e-4, "{fit:?}");
            assert!((fit.sigma2 / s2 - 1.0).abs() < 1e-4, "{fit:?}");
        }
    }

    #[test]
    fn noisy_round_trip_median() {
        use rand::{Rng, SeedableRng};
        let s1 = sigma_for_limit(1000.0, 900.0, 0.2).unwrap();
        let p = PclvgParams::from_ratio(s1, 0.6, 1000.0).unwrap();
        let clean = model_quotes(&p, 0.05, &strikes());
        let mut errs: Vec<f64> = (0..100u64)
            .map(|seed| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let noisy: Vec<SmileQuote> = clean
                    .iter()
                    .map(|q| SmileQuote { price: q.price * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)), ..*q })
                    .collect();
                let fit = fit_smile(d0(), 0.05, 1000.0, &noisy).unwrap();
                (fit.ratio() / 0.6 - 1.0).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[50] < 0.05, "median relative error {}", errs[50]);
    }

    #[test]
    fn flat_smile_is_nearly_symmetric() {
        // lognormal skew tilts the fit by about 1.5·vol·√τ; this slice has vol·√τ = 0.01
        let (u, tau, vol) = (1000.0, 0.0025, 0.2);
        let near: Vec<f64> = (0..17).map(|i| 960.0 + 5.0 * i as f64).filter(|k| *k != 1000.0).collect();
        let quotes: Vec<SmileQuote> = near
            .iter()
            .map(|&k| {
                if k < u {
                    SmileQuote { strike: k, kind: OptionKind::Put, price: put_price(u, k, tau, vol) }
                } else {
                    SmileQuote { strike: k, kind: OptionKind::Call, price: call_price(u, k, tau, vol) }
                }
            })
            .collect();
        let fit = fit_smile(d0(), tau, u, &quotes).unwrap();
        assert!((fit.ratio() - 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn slice_errors() {
        let p = PclvgParams::new(40.0, 20.0, 1000.0).unwrap();
        let q = model_quotes(&p, 0.1, &[900.0, 1100.0]);
        assert!(matches!(fit_smile(d0(), 0.1, 1000.0, &q), Err(CalibrationError::InsufficientQuotes(2))));
        let q = model_quotes(&p, 0.1, &[800.0, 850.0, 900.0]);
        assert!(matches!(fit_smile(d0(), 0.1, 1000.0, &q), Err(CalibrationError::OneSidedSmile("above"))));
    }

    #[test]
    fn series_of_constant_ratio_surfaces() {
        let taus = vec![0.03, 0.07, 0.1];
        let data: Vec<MarketSurface> = (0..3)
            .map(|i| {
                let s1 = sigma_for_limit(1000.0, 900.0, 0.2 + 0.05 * i as f64).unwrap();
                let p = PclvgParams::from_ratio(s1, 0.5, 1000.0).unwrap();
                MarketSurface::from_pclvg(&p, d0() + chrono::Days::new(i), strikes(), taus.clone()).unwrap()
            })
            .collect();
        let series = skew_series(&data, 2);
        assert_eq!(series.entries.len(), 9);
        assert!(series.entries.windows(2).all(|w| (w[0].date, w[0].tau) < (w[1].date, w[1].tau)));
        for e in &series.entries {
            assert!((e.ratio - 0.5).abs() < 1e-4, "{e:?}");
        }
        let (lo, hi) = quantile_kappas(&series, 0.01).unwrap();
        assert!((lo - 0.5).abs() < 1e-4 && (hi - 0.5).abs() < 1e-4);
    }

    #[test]
    fn uniform_grid_quantiles() {
        // 0.3 + 0.7·i/1000: the 1% and 99% order statistics sit exactly on grid points
        let ratios: Vec<f64> = (0..=1000).rev().map(|i| 0.3 + 0.7 * i as f64 / 1000.0).collect();
        let series = SkewSeries {
            entries: ratios.iter().map(|&r| SkewEntry { date: d0(), tau: 0.1, ratio: r }).collect(),
            fits: vec![],
        };
        let (lo, hi) = quantile_kappas(&series, 0.01).unwrap();
        assert!((lo - 0.307).abs() < 1e-12 && (hi - 0.993).abs() < 1e-12);
        assert!(matches!(quantile_kappas(&SkewSeries::default(), 0.01), Err(CalibrationError::EmptySeries)));
        assert!(quantile_kappas(&series, 0.5).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.5);
        assert_eq!(quantile(&v, 0.75), 3.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn csv_export_header() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let fit = SmileFit { date: d0(), tau: 0.1, sigma1: 2.0, sigma2: 1.0, rmse: 0.0, n_quotes: 5 };
        SkewSeries::from_fits(vec![fit]).write_csv(f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert_eq!(text, "date,tau,sigma1,sigma2,ratio,rmse,n_quotes\n2012-01-03,0.1,2,1,0.5,0,5\n");
    }
}
