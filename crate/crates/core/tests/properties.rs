use chrono::NaiveDate;
use proptest::prelude::*;
use skewhedge::beliefs::{check_membership, generated_beliefs, BeliefSide, MembershipConfig};
use skewhedge::bs::{self, OptionKind};
use skewhedge::calibration::{fit_smile, quantile_kappas, SkewEntry, SkewSeries, SmileQuote};
use skewhedge::hedging::{bhr_strategy, terminal_value};
use skewhedge::pclvg::{
    hedge_envelopes, ln_otm_price, pclvg_call, pclvg_iv, pclvg_put, sigma_for_limit, static_hedge_payoff, PclvgParams,
};
use skewhedge::rtis::{overline_j, underline_j};
use skewhedge::surface::MarketSurface;

fn d0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 3, 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bs_put_call_parity(s in 1.0f64..5000.0, m in 0.3f64..3.0, tau in 1e-4f64..3.0, vol in 0.0f64..3.0) {
        let k = s * m;
        let c = bs::call_price(s, k, tau, vol);
        let p = bs::put_price(s, k, tau, vol);
        prop_assert!((c - p - (s - k)).abs() <= 1e-12 * s.max(k));
    }

    #[test]
    fn bs_barrier_symmetry(u in 1.0f64..5000.0, m in 0.3f64..0.999, tau in 1e-4f64..3.0, vol in 0.01f64..2.0) {
        let k1 = u * m;
        let p = bs::put_price(u, k1, tau, vol);
        let c = bs::call_price(u, u * u / k1, tau, vol);
        prop_assert!((p - k1 / u * c).abs() <= 1e-12 * u);
    }

    #[test]
    fn implied_vol_round_trip(s in 1.0f64..5000.0, lm in -1.0f64..1.0, tau in 1e-4f64..2.0, vol in 0.01f64..3.0) {
        let k = s * lm.exp();
        prop_assume!(k != s);
        let ln_p = bs::ln_otm_price(s, k, tau, vol);
        let iv = if ln_p > -650.0 {
            let kind = if k > s { OptionKind::Call } else { OptionKind::Put };
            bs::implied_vol(ln_p.exp(), s, k, tau, kind).unwrap()
        } else {
            bs::implied_vol_from_ln_otm(ln_p, s, k, tau).unwrap()
        };
        prop_assert!((iv - vol).abs() <= 1e-8, "iv {} vol {}", iv, vol);
    }

    #[test]
    fn pclvg_parity_and_positivity(s1 in 1.0f64..1e4, ratio in 0.1f64..3.0, m in 0.5f64..1.6, tau in 1e-3f64..2.0) {
        let p = PclvgParams::from_ratio(s1, ratio, 1000.0).unwrap();
        let k = 1000.0 * m;
        let c = pclvg_call(&p, 1000.0, k, tau).unwrap();
        let put = pclvg_put(&p, 1000.0, k, tau).unwrap();
        prop_assert!((c - put - (1000.0 - k)).abs() <= 1e-9 * 1000.0);
        prop_assert!(c >= (1000.0 - k).max(0.0) && put >= (k - 1000.0).max(0.0));
    }

    #[test]
    fn pclvg_prices_are_homogeneous(s1 in 10.0f64..5000.0, ratio in 0.2f64..2.0, m in 0.6f64..1.5, tau in 0.01f64..1.0, lambda in 0.01f64..100.0) {
        let u = 1000.0;
        let p = PclvgParams::from_ratio(s1, ratio, u).unwrap();
        let q = PclvgParams::from_ratio(s1 * lambda, ratio, u * lambda).unwrap();
        let a = ln_otm_price(&p, u * m, tau);
        let b = ln_otm_price(&q, u * m * lambda, tau);
        prop_assert!((b - a - lambda.ln()).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn iv_scaling_law(s1 in 100.0f64..5000.0, ratio in 0.2f64..2.0, m in 0.8f64..1.25, tau in 0.005f64..0.5, c in 0.3f64..3.0) {
        let u = 1000.0;
        let k = u * m;
        prop_assume!((k - u).abs() > 1.0);
        let p = PclvgParams::from_ratio(s1, ratio, u).unwrap();
        let lhs = pclvg_iv(&p.scaled(c * c), k, tau).unwrap();
        let rhs = c * pclvg_iv(&p, k, c * c * tau).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() <= 1e-9, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn static_hedge_within_envelopes(ratio in 0.2f64..2.0, m in 0.5f64..0.99, x in 0.0f64..5000.0) {
        let p = PclvgParams::from_ratio(1.0, ratio, 1000.0).unwrap();
        let k = 1000.0 * m;
        let g = static_hedge_payoff(&p, k, x).unwrap();
        let (lo, hi) = hedge_envelopes(&p, k, x).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!(lo <= g + 1e-9 && g <= hi + 1e-9, "{} <= {} <= {}", lo, g, hi);
    }

    #[test]
    fn quantiles_permutation_invariant(mut r in prop::collection::vec(0.05f64..2.0, 1..200), alpha in 0.001f64..0.49, seed in any::<u64>()) {
        let series = |v: &[f64]| SkewSeries {
            entries: v.iter().map(|&ratio| SkewEntry { date: d0(), tau: 0.1, ratio }).collect(),
            fits: vec![],
        };
        let a = quantile_kappas(&series(&r), alpha).unwrap();
        // deterministic shuffle
        let n = r.len();
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            r.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let b = quantile_kappas(&series(&r), alpha).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.0 <= a.1);
    }

    #[test]
    fn quantiles_widen_as_alpha_shrinks(r in prop::collection::vec(0.05f64..2.0, 1..200), a1 in 0.001f64..0.49, a2 in 0.001f64..0.49) {
        let s = SkewSeries {
            entries: r.iter().map(|&ratio| SkewEntry { date: d0(), tau: 0.1, ratio }).collect(),
            fits: vec![],
        };
        let (small, large) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        let (lo_s, hi_s) = quantile_kappas(&s, small).unwrap();
        let (lo_l, hi_l) = quantile_kappas(&s, large).unwrap();
        prop_assert!(lo_s <= lo_l + 1e-15 && hi_s + 1e-15 >= hi_l);
    }

    #[test]
    fn strike_indices_monotone(r1 in 0.05f64..3.0, r2 in 0.05f64..3.0, step in 5.0f64..50.0) {
        let u = 1000.0;
        let strikes: Vec<f64> = (0..120).map(|n| 500.0 + step * n as f64 + 0.5).collect();
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let below: Vec<usize> = (0..strikes.len()).filter(|&i| strikes[i] < u).collect();
        for w in below.windows(2) {
            // a lower put strike reflects further out
            if let (Ok(a), Ok(b)) = (overline_j(w[1], lo, u, &strikes), overline_j(w[0], lo, u, &strikes)) {
                prop_assert!(a <= b);
            }
            if let (Ok(a), Ok(b)) = (underline_j(w[1], lo, u, &strikes), underline_j(w[0], lo, u, &strikes)) {
                prop_assert!(a <= b);
            }
        }
        for &i in &below {
            if let (Ok(a), Ok(b)) = (overline_j(i, lo, u, &strikes), overline_j(i, hi, u, &strikes)) {
                prop_assert!(a <= b);
            }
            if let (Ok(a), Ok(b)) = (underline_j(i, lo, u, &strikes), underline_j(i, hi, u, &strikes)) {
                prop_assert!(a <= b);
            }
            if let (Ok(a), Ok(b)) = (underline_j(i, lo, u, &strikes), overline_j(i, lo, u, &strikes)) {
                prop_assert!(a <= b);
            }
        }
    }

    #[test]
    fn bhr_terminal_dominates_put(k in 500.0f64..999.0, ki in 300.0f64..999.0, x in 0.0f64..1000.0) {
        prop_assume!(ki <= k);
        let strikes = [ki, 1200.0];
        let surf = MarketSurface::flat(d0(), 950.0, strikes.to_vec(), vec![0.5], 0.2).unwrap();
        let s = bhr_strategy(k, 1000.0, 0.5, &strikes, &surf).unwrap();
        prop_assert!(terminal_value(&s.portfolio, x) >= (k - x).max(0.0) - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn membership_invariant_under_belief_rescaling(ratio in 0.3f64..1.5, c in 0.5f64..2.0, shift in 0.6f64..1.6) {
        let u = 1000.0;
        let strikes = [950.0, 1025.0, 1050.0, 1100.0];
        let grid = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
        let s1 = sigma_for_limit(u, 950.0, 0.2).unwrap();
        let p = PclvgParams::from_ratio(s1, ratio, u).unwrap();
        let bel = generated_beliefs(&p, &strikes, &grid, BeliefSide::Lower).unwrap();
        // the witness scale √shift maps these maturities onto grid nodes, where beliefs are exact
        let taus = vec![0.01 / shift, 0.02 / shift, 0.05 / shift];
        let surf = MarketSurface::from_pclvg(&p.scaled(shift), d0(), strikes.to_vec(), taus).unwrap();
        let cfg = MembershipConfig::default();
        let a = check_membership(&surf, &bel, &cfg).unwrap();
        let b = check_membership(&surf, &bel.rescaled(c), &cfg).unwrap();
        prop_assert!(a.is_some() && b.is_some());
    }

    #[test]
    fn calibration_scale_covariance(ratio in 0.3f64..1.5, lambda in 0.1f64..10.0) {
        let u = 1000.0;
        let tau = 0.05;
        let s1 = sigma_for_limit(u, 900.0, 0.2).unwrap();
        let quotes = |scale: f64| -> Vec<SmileQuote> {
            let p = PclvgParams::from_ratio(s1 * scale, ratio, u * scale).unwrap();
            (0..17)
                .map(|i| 800.0 + 25.0 * i as f64)
                .filter(|k| *k != u)
                .map(|k| {
                    let (kind, price) = if k < u {
                        (OptionKind::Put, pclvg_put(&p, u * scale, k * scale, tau).unwrap())
                    } else {
                        (OptionKind::Call, pclvg_call(&p, u * scale, k * scale, tau).unwrap())
                    };
                    SmileQuote { strike: k * scale, kind, price }
                })
                .collect()
        };
        let base = fit_smile(d0(), tau, u, &quotes(1.0)).unwrap();
        let scaled = fit_smile(d0(), tau, u * lambda, &quotes(lambda)).unwrap();
        prop_assert!((scaled.sigma1 / (lambda * base.sigma1) - 1.0).abs() < 1e-4);
        prop_assert!((scaled.ratio() / base.ratio() - 1.0).abs() < 1e-4);
    }
}
