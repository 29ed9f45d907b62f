use crate::{BarrierRule, RunConfig};
use serde::Serialize;
use skewhedge::calibration::{quantile_kappas, skew_series, smile_quotes, fit_smile, CalibrationError, KappaFile};
use skewhedge::hedging::{
    bhr_strategy, evaluate_on_path, improved_superhedge, simulate_path, terminal_value, HedgeError, HedgeStrategy,
    MarketPath, PathEvaluation, PathSimConfig,
};
use skewhedge::pclvg::{
    hedge_envelopes, hedge_kinks, pclvg_iv, reflected_strike, short_term_iv_limit, sigma_for_limit,
    static_hedge_payoff, PclvgError, PclvgParams,
};
use skewhedge::rtis::{build_rtis_high, build_rtis_low, price_portfolio, put_strike_index, LegKind, Portfolio, RtisBuild, RtisError};
use skewhedge::surface::{
    load_chain, synthetic_chain, validate_admissible, write_chain, AdmissibilityConfig, AdmissibilityReport,
    ChainConfig, MarketSurface, SurfaceError, SynthConfig,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown figure `{0}`; expected one of g-payoff, g-kinks, bhr-payoff, smile, skew-series, dominating")]
    UnknownFigure(String),
    #[error("{0}")]
    Data(String),
    #[error("I/O: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::UnknownFigure(_) => 2,
            CliError::Data(_) => 1,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<SurfaceError> for CliError {
    fn from(e: SurfaceError) -> Self {
        match e {
            SurfaceError::Io(e) => e.into(),
            SurfaceError::Csv(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::Io(e) => e.into(),
            CalibrationError::Csv(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<HedgeError> for CliError {
    fn from(e: HedgeError) -> Self {
        match e {
            HedgeError::Io(e) => e.into(),
            HedgeError::Csv(e) => e.into(),
            HedgeError::Surface(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(PclvgError, RtisError, serde_json::Error);

type CliResult = Result<u8, CliError>;

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn require_inputs(run: &RunConfig) -> Result<&[PathBuf], CliError> {
    if run.input.is_empty() {
        return Err(CliError::Usage("--input is required".into()));
    }
    Ok(&run.input)
}

fn load_surfaces(run: &RunConfig, cfg: &ChainConfig) -> Result<Vec<MarketSurface>, CliError> {
    let mut all = Vec::new();
    for path in require_inputs(run)? {
        all.extend(load_chain(path, cfg)?);
    }
    Ok(all)
}

fn barrier_for(run: &RunConfig, surf: &MarketSurface) -> f64 {
    match run.barrier {
        BarrierRule::Spot => surf.spot,
        BarrierRule::Fixed(u) => u,
    }
}

fn kappas(run: &RunConfig, lower: Option<f64>, upper: Option<f64>) -> Result<(f64, f64), CliError> {
    if let (Some(l), Some(u)) = (lower, upper) {
        return Ok((l, u));
    }
    let path = run.kappa_file.as_ref().ok_or_else(|| CliError::Usage("--kappa-file or --kappa is required".into()))?;
    let k = KappaFile::read(path)?;
    Ok((lower.unwrap_or(k.kappa_lower), upper.unwrap_or(k.kappa_upper)))
}

#[derive(Serialize)]
struct ValidationEntry<'a> {
    file: String,
    date: String,
    #[serde(flatten)]
    report: &'a AdmissibilityReport,
}

pub fn validate(run: &RunConfig) -> CliResult {
    let cfg = AdmissibilityConfig { price_tol: run.tol, ..AdmissibilityConfig::default() };
    let mut reports = Vec::new();
    for path in require_inputs(run)? {
        for s in load_chain(path, &ChainConfig { keep_front_maturities: None })? {
            reports.push((path.display().to_string(), s.observation_date.to_string(), validate_admissible(&s, &cfg)));
        }
    }
    let entries: Vec<ValidationEntry> =
        reports.iter().map(|(f, d, r)| ValidationEntry { file: f.clone(), date: d.clone(), report: r }).collect();
    let mut text = serde_json::to_string_pretty(&entries)?;
    text.push('\n');
    emit(run.out.as_deref(), &text)?;
    Ok(if reports.iter().all(|(_, _, r)| r.passed) { 0 } else { 1 })
}

pub fn calibrate(run: &RunConfig) -> CliResult {
    let surfaces = load_surfaces(run, &ChainConfig::default())?;
    let jobs = run.jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let series = skew_series(&surfaces, jobs);
    let (kappa_lower, kappa_upper) = quantile_kappas(&series, run.alpha)?;
    let kappa = KappaFile { alpha: run.alpha, kappa_lower, kappa_upper, n_ratios: series.entries.len() };
    let dir = run.out.as_deref().ok_or_else(|| CliError::Usage("calibrate needs --out <directory>".into()))?;
    std::fs::create_dir_all(dir)?;
    series.write_csv(&dir.join("fits.csv"))?;
    std::fs::write(dir.join("series.json"), series.to_json()? + "\n")?;
    std::fs::write(dir.join("kappas.json"), kappa.to_json()? + "\n")?;
    Ok(0)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct RtisValue {
    call_strike: Option<f64>,
    value: Option<f64>,
    status: String,
}

fn value_normalized(port: &Portfolio, surf: &MarketSurface) -> RtisValue {
    let call_strike = port.legs.iter().find(|l| l.kind == LegKind::Call).map(|l| l.strike);
    match port.put_dollar_one(surf).and_then(|p| price_portfolio(&p, surf)) {
        Ok(v) => RtisValue { call_strike, value: Some(v), status: "built".into() },
        Err(e) => RtisValue { call_strike, value: None, status: format!("error: {e}").replace(',', ";") },
    }
}

pub fn rtis(run: &RunConfig, kappa: Option<f64>) -> CliResult {
    let (k_lo, k_hi) = kappas(run, kappa, kappa)?;
    let surfaces = load_surfaces(run, &ChainConfig::default())?;
    let mut rows = Vec::new();
    for surf in &surfaces {
        let u = barrier_for(run, surf);
        let Some(i) = put_strike_index(&surf.strikes, surf.spot, run.put_moneyness) else { continue };
        if surf.strikes[i] >= u {
            log::warn!("{}: put strike {} not below the barrier {u}", surf.observation_date, surf.strikes[i]);
            continue;
        }
        for &tau in &surf.taus {
            let low = match build_rtis_low(i, k_lo, u, &surf.strikes, tau) {
                Ok(p) => value_normalized(&p, surf),
                Err(e) => RtisValue { call_strike: None, value: None, status: format!("skipped: {e}").replace(',', ";") },
            };
            let high = match build_rtis_high(i, k_hi, u, &surf.strikes, tau)? {
                RtisBuild::Built(p) => value_normalized(&p, surf),
                RtisBuild::Skipped { .. } => RtisValue { call_strike: None, value: None, status: "skipped".into() },
            };
            rows.push(vec![
                surf.observation_date.to_string(),
                tau.to_string(),
                surf.strikes[i].to_string(),
                opt(low.call_strike),
                opt(low.value),
                low.status,
                opt(high.call_strike),
                opt(high.value),
                high.status,
                opt(low.call_strike.map(|k| k / surf.spot)),
                opt(high.call_strike.map(|k| k / surf.spot)),
            ]);
        }
    }
    let header = [
        "date",
        "tau",
        "put_strike",
        "lower_call_strike",
        "lower_value",
        "lower_status",
        "upper_call_strike",
        "upper_value",
        "upper_status",
        "lower_call_moneyness",
        "upper_call_moneyness",
    ];
    emit(run.out.as_deref(), &csv_text(&header, &rows))?;
    Ok(0)
}

pub struct SuperhedgeArgs {
    pub strike: f64,
    pub maturity: f64,
    pub kappa: Option<f64>,
    pub paths: Vec<PathBuf>,
    pub n_paths: usize,
    pub n_steps: usize,
}

#[derive(Serialize)]
struct PathReport {
    source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluation: Option<PathEvaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SuperhedgeReport {
    barrier: f64,
    strike: f64,
    maturity: f64,
    kappa_upper: f64,
    bhr: HedgeStrategy,
    improved: HedgeStrategy,
    saving: f64,
    paths: Vec<PathReport>,
    all_paths_ok: bool,
}

/// Surface at the barrier generated by the upper ratio, with the put wing
/// matched to the initial surface's lowest strike.
fn hit_surface(init: &MarketSurface, u: f64, kappa_upper: f64, remaining: f64) -> Result<MarketSurface, CliError> {
    let k_low = init.strikes[0];
    let iv_low = init.iv_at(k_low, init.taus[0])?;
    let s1 = sigma_for_limit(u, k_low.min(0.99 * u), iv_low)?;
    let p = PclvgParams::from_ratio(s1, kappa_upper, u)?;
    Ok(MarketSurface::from_pclvg(&p, init.observation_date, init.strikes.clone(), vec![remaining])?)
}

pub fn superhedge(run: &RunConfig, a: &SuperhedgeArgs) -> CliResult {
    let k_hi = match a.kappa {
        Some(k) => k,
        None => kappas(run, None, None)?.1,
    };
    let surfaces = load_surfaces(run, &ChainConfig { keep_front_maturities: None })?;
    let init = surfaces.first().ok_or_else(|| CliError::Data("no surface in the input".into()))?;
    let u = barrier_for(run, init);
    let bhr = bhr_strategy(a.strike, u, a.maturity, &init.strikes, init)?;
    let improved = improved_superhedge(a.strike, u, a.maturity, k_hi, &init.strikes, init)?;

    let mut sources: Vec<(String, MarketPath)> = Vec::new();
    for p in &a.paths {
        sources.push((p.display().to_string(), MarketPath::read_csv(p)?));
    }
    if a.paths.is_empty() && a.n_paths > 0 {
        let atm = init.iv_at(init.spot.clamp(init.strikes[0], *init.strikes.last().unwrap()), a.maturity)?;
        let cfg = PathSimConfig {
            spot0: init.spot,
            barrier: u,
            maturity: a.maturity,
            price_vol: atm * init.spot,
            n_steps: a.n_steps,
            seed: run.seed,
        };
        for n in 0..a.n_paths as u64 {
            sources.push((format!("simulated:{n}"), simulate_path(&cfg, n)?));
        }
    }
    let mut reports = Vec::new();
    for (source, mut path) in sources {
        if let Some(n) = path.first_hit(u) {
            let remaining = a.maturity - path.times[n];
            if remaining > 0.0 {
                path.surfaces.insert(n, hit_surface(init, u, k_hi, remaining)?);
            }
        }
        match evaluate_on_path(&improved, &path) {
            Ok(e) => reports.push(PathReport { source, evaluation: Some(e), error: None }),
            Err(e) => reports.push(PathReport { source, evaluation: None, error: Some(e.to_string()) }),
        }
    }
    let all_paths_ok = reports.iter().all(|r| r.evaluation.is_some_and(|e| e.inequality_ok));
    let report = SuperhedgeReport {
        barrier: u,
        strike: a.strike,
        maturity: a.maturity,
        kappa_upper: k_hi,
        saving: bhr.initial_cost - improved.initial_cost,
        bhr,
        improved,
        paths: reports,
        all_paths_ok,
    };
    emit(run.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(if all_paths_ok { 0 } else { 1 })
}

pub struct FigureArgs {
    pub name: String,
    pub strike: f64,
    pub put_strike: f64,
    pub ratio: f64,
    pub x_max: f64,
    pub step: f64,
}

fn figure_barrier(run: &RunConfig) -> f64 {
    match run.barrier {
        BarrierRule::Fixed(u) => u,
        BarrierRule::Spot => 1000.0,
    }
}

fn grid(x_max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && x_max > 0.0) {
        return Err(CliError::Usage("--step and --x-max must be positive".into()));
    }
    let n = (x_max / step).round() as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

pub fn figure(run: &RunConfig, a: &FigureArgs) -> CliResult {
    let u = figure_barrier(run);
    let text = match a.name.as_str() {
        "g-payoff" => {
            let p = PclvgParams::from_ratio(1.0, a.ratio, u)?;
            let mut rows = Vec::new();
            for x in grid(a.x_max, a.step)? {
                let g = static_hedge_payoff(&p, a.strike, x)?;
                let (lo, hi) = hedge_envelopes(&p, a.strike, x)?;
                rows.push(vec![x.to_string(), g.to_string(), lo.to_string(), hi.to_string()]);
            }
            csv_text(&["x", "g", "envelope_lower", "envelope_upper"], &rows)
        }
        "g-kinks" => {
            let p = PclvgParams::from_ratio(1.0, a.ratio, u)?;
            let mut rows = vec![
                vec!["reflected_strike".to_string(), reflected_strike(&p, a.strike)?.to_string()],
                vec!["reflected_put_strike".to_string(), reflected_strike(&p, a.put_strike)?.to_string()],
            ];
            for k in hedge_kinks(&p, a.strike, a.x_max)? {
                rows.push(vec!["kink".to_string(), k.to_string()]);
            }
            csv_text(&["label", "x"], &rows)
        }
        "bhr-payoff" => {
            let p = PclvgParams::from_ratio(1.0, a.ratio, u)?;
            let call = reflected_strike(&p, a.put_strike)?;
            let strikes = [a.put_strike, call];
            let flat = MarketSurface::flat(chrono::NaiveDate::default(), u, strikes.to_vec(), vec![1.0], 0.2)?;
            let bhr = bhr_strategy(a.strike, u, 1.0, &strikes, &flat)?;
            let imp = improved_superhedge(a.strike, u, 1.0, a.ratio, &strikes, &flat)?;
            let mut rows = Vec::new();
            for x in grid(a.x_max, a.step)? {
                rows.push(vec![
                    x.to_string(),
                    terminal_value(&bhr.portfolio, x).to_string(),
                    terminal_value(&imp.portfolio, x).to_string(),
                    (a.strike - x).max(0.0).to_string(),
                ]);
            }
            csv_text(&["spot", "bhr", "improved", "put_payoff"], &rows)
        }
        "smile" => {
            let mut rows = Vec::new();
            for surf in load_surfaces(run, &ChainConfig::default())? {
                for (m, &tau) in surf.taus.iter().enumerate() {
                    let quotes = smile_quotes(&surf, m);
                    let fit = match fit_smile(surf.observation_date, tau, surf.spot, &quotes) {
                        Ok(f) => f,
                        Err(e) => {
                            log::warn!("{} tau={tau}: {e}", surf.observation_date);
                            continue;
                        }
                    };
                    let p = PclvgParams::new(fit.sigma1, fit.sigma2, surf.spot)?;
                    for q in &quotes {
                        let market = surf.iv_at(q.strike, tau)?;
                        let model = pclvg_iv(&p, q.strike, tau).map(|v| v.to_string()).unwrap_or_default();
                        rows.push(vec![
                            surf.observation_date.to_string(),
                            tau.to_string(),
                            q.strike.to_string(),
                            market.to_string(),
                            model,
                        ]);
                    }
                }
            }
            csv_text(&["date", "tau", "strike", "market_iv", "model_iv"], &rows)
        }
        "skew-series" => {
            let surfaces = load_surfaces(run, &ChainConfig::default())?;
            let series = skew_series(&surfaces, run.jobs.unwrap_or(1));
            let rows: Vec<Vec<String>> = series
                .entries
                .iter()
                .map(|e| vec![e.date.to_string(), e.tau.to_string(), e.ratio.to_string()])
                .collect();
            csv_text(&["date", "tau", "ratio"], &rows)
        }
        "dominating" => {
            let s1 = sigma_for_limit(u, 0.9 * u, 0.2)?;
            let p = PclvgParams::from_ratio(s1, a.ratio, u)?;
            let mut rows = Vec::new();
            for m in 0..17 {
                let k = u * (0.8 + 0.025 * m as f64);
                if k == u {
                    continue;
                }
                let limit = short_term_iv_limit(&p, k)?;
                for tau in [0.02, 0.05, 0.1, 0.25] {
                    rows.push(vec![k.to_string(), tau.to_string(), pclvg_iv(&p, k, tau)?.to_string(), limit.to_string()]);
                }
            }
            csv_text(&["strike", "tau", "iv", "short_term_limit"], &rows)
        }
        other => return Err(CliError::UnknownFigure(other.to_string())),
    };
    emit(run.out.as_deref(), &text)?;
    Ok(0)
}

pub fn synth(run: &RunConfig, n_dates: usize, ratios: Vec<f64>, spot: f64) -> CliResult {
    use rand::SeedableRng;
    if ratios.is_empty() || ratios.iter().any(|r| !(*r > 0.0)) || n_dates == 0 {
        return Err(CliError::Usage("need positive ratios and at least one date".into()));
    }
    let out = run.out.as_deref().ok_or_else(|| CliError::Usage("synth needs --out <file>".into()))?;
    let cfg = SynthConfig { n_dates, ratios, spot0: spot, ..SynthConfig::default() };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(run.seed);
    let rows = synthetic_chain(&cfg, &mut rng)?;
    write_chain(out, &rows)?;
    Ok(0)
}
