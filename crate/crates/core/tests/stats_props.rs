mod common;

use cgp::cgp::{mbar_posterior, SampleSummary};
use cgp::numerics::random::uniform;
use rand_distr::{weighted::WeightedIndex, Distribution};
use cgp::numerics::stream;
use cgp::stats::{
    expected_kn, expected_kn_beta, expected_mnr, expected_mnr_beta, posterior_expected_km, posterior_expected_nm1,
    posterior_expected_nmr, species_statistics,
};
use cgp::{CgpParams, FrequencyVector, GibbsFamily};
use proptest::prelude::*;

fn py(sigma: f64, theta: f64, beta: f64) -> CgpParams {
    CgpParams::pitman_yor(sigma, theta, beta).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Simulated continuation: returns (new distinct, new seen once, new seen `r` times).
fn continue_once(fv: &FrequencyVector, p: &CgpParams, m: usize, r: usize, rng: &mut impl rand::Rng) -> (f64, f64, f64) {
    let (sigma, theta) = (p.sigma(), p.theta());
    let post = mbar_posterior(fv, p);
    let mbar = WeightedIndex::new(&post).unwrap().sample(rng);
    let mut sizes: Vec<f64> = fv.freqs().iter().filter(|&&f| f >= 2).map(|&f| f as f64).collect();
    sizes.extend(std::iter::repeat_n(1.0, fv.m1() - mbar));
    let old = sizes.len();
    let mut nb: f64 = sizes.iter().sum();
    let mut contaminants = 0.0;
    for _ in 0..m {
        if uniform(rng) >= p.beta {
            contaminants += 1.0;
            continue;
        }
        let k = sizes.len() as f64;
        let mut w: Vec<f64> = sizes.iter().map(|s| s - sigma).collect();
        w.push(theta + k * sigma);
        let j = if nb == 0.0 { sizes.len() } else { WeightedIndex::new(&w).unwrap().sample(rng) };
        if j == sizes.len() {
            sizes.push(1.0);
        } else {
            sizes[j] += 1.0;
        }
        nb += 1.0;
    }
    let fresh = &sizes[old..];
    let count = |x: f64| fresh.iter().filter(|&&s| s == x).count() as f64;
    (fresh.len() as f64 + contaminants, count(1.0) + contaminants, count(r as f64))
}

#[test]
fn posterior_statistics_match_simulated_continuations() {
    let fv = FrequencyVector::new(vec![1, 1, 1, 1, 1, 2, 2, 3, 5, 8]).unwrap();
    let s = fv.summary();
    let (m, r, reps) = (40, 2, 20_000);
    for p in [py(0.4, 2.0, 0.8), py(0.0, 3.0, 0.9), py(0.6, 0.5, 0.6)] {
        let mut rng = stream(55);
        let draws: Vec<(f64, f64, f64)> = (0..reps).map(|_| continue_once(&fv, &p, m, r, &mut rng)).collect();
        let checks = [
            (draws.iter().map(|d| d.0).collect::<Vec<_>>(), posterior_expected_km(&s, &p, m).unwrap()),
            (draws.iter().map(|d| d.1).collect(), posterior_expected_nm1(&s, &p, m).unwrap()),
            (draws.iter().map(|d| d.2).collect(), posterior_expected_nmr(&s, &p, m, r).unwrap()),
        ];
        for (xs, exact) in checks {
            let (mean, se) = common::mean_and_se(&xs);
            assert!((mean - exact).abs() < 4.0 * se + 1e-9, "{mean} ± {se} vs {exact}");
        }
    }
}

#[test]
fn prior_counts_match_simulation() {
    let p = py(0.3, 5.0, 0.75);
    let n = 80;
    let mut rng = stream(66);
    let mut k = Vec::new();
    let mut m2 = Vec::new();
    for _ in 0..20_000 {
        let s = cgp::cgp::sample_sequence(&p, n, &mut rng);
        let f = s.frequency_vector().unwrap();
        k.push(f.k() as f64);
        m2.push(f.count_of_size(2) as f64);
    }
    for (xs, exact) in [(k, expected_kn(&p, n).unwrap()), (m2, expected_mnr(&p, n, 2).unwrap())] {
        let (mean, se) = common::mean_and_se(&xs);
        assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact}");
    }
}

#[test]
fn statistics_bundle_is_consistent() {
    let p = py(0.25, 4.0, 0.9);
    let s = SampleSummary::new(50, 20, 9).unwrap();
    let st = species_statistics(&p, &s, 30, &[1, 2, 3]).unwrap();
    assert_eq!(st.expected_kn, expected_kn(&p, 50).unwrap());
    assert_eq!(st.expected_mnr.len(), 3);
    assert_eq!(st.posterior_expected_nmr.iter().map(|x| x.0).collect::<Vec<_>>(), vec![2, 3]);
    assert!(species_statistics(&p, &SampleSummary::empty(), 30, &[]).is_err());
}

#[test]
fn limits_are_continuous() {
    let n = 200;
    let s = SampleSummary::new(60, 25, 12).unwrap();
    let d = CgpParams::new(GibbsFamily::dirichlet(3.0).unwrap(), 0.8).unwrap();
    let near = py(1e-9, 3.0, 0.8);
    assert!(close(expected_kn(&near, n).unwrap(), expected_kn(&d, n).unwrap(), 1e-6));
    assert!(close(posterior_expected_km(&s, &near, n).unwrap(), posterior_expected_km(&s, &d, n).unwrap(), 1e-6));
    let pure = py(0.3, 3.0, 1.0);
    let almost = py(0.3, 3.0, 1.0 - 1e-10);
    assert!(close(expected_kn(&almost, n).unwrap(), expected_kn(&pure, n).unwrap(), 1e-6));
    assert!(close(posterior_expected_nm1(&s, &almost, n).unwrap(), posterior_expected_nm1(&s, &pure, n).unwrap(), 1e-6));
}

fn params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01f64..0.95, 0.1f64..60.0, 0.05f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_representations_agree((s, t, b) in params(), n in 1usize..=2000, r in 1usize..6) {
        let p = py(s, t, b);
        let a = expected_kn(&p, n).unwrap();
        let c = expected_kn_beta(&p, n).unwrap();
        prop_assert!(close(a, c, 1e-9), "{} vs {}", a, c);
        if r <= n {
            let a = expected_mnr(&p, n, r).unwrap();
            let c = expected_mnr_beta(&p, n, r).unwrap();
            prop_assert!((a - c).abs() <= 1e-9 * a.abs().max(1e-3), "{} vs {}", a, c);
        }
    }

    #[test]
    fn prior_size_counts_add_up((s, t, b) in params(), n in 1usize..120) {
        let p = py(s, t, b);
        let mut total = 0.0;
        let mut items = 0.0;
        for r in 1..=n {
            let e = expected_mnr(&p, n, r).unwrap();
            total += e;
            items += r as f64 * e;
        }
        prop_assert!(close(total, expected_kn(&p, n).unwrap(), 1e-9));
        prop_assert!(close(items, n as f64, 1e-9));
    }

    #[test]
    fn posterior_size_counts_add_up((s, t, b) in params(), m in 1usize..60, k in 1usize..15, m1 in 0usize..15, extra in 0usize..30) {
        let m1 = m1.min(k);
    let extra = if m1 == k { 0 } else { extra };
        let n = k + (k - m1) + extra;
        let sum = SampleSummary::new(n, k, m1).unwrap();
        let p = py(s, t, b);
        let km = posterior_expected_km(&sum, &p, m).unwrap();
        let mut total = posterior_expected_nm1(&sum, &p, m).unwrap();
        for r in 2..=m {
            total += posterior_expected_nmr(&sum, &p, m, r).unwrap();
        }
        prop_assert!(close(total, km, 1e-9), "{} vs {}", total, km);
        prop_assert!(km >= 0.0 && km <= m as f64 + 1e-9);
        prop_assert!(km >= m as f64 * (1.0 - b) - 1e-9);
    }

    #[test]
    fn more_contamination_means_more_clusters((s, t, _) in params(), b1 in 0.05f64..1.0, b2 in 0.05f64..1.0, n in 1usize..500) {
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        let a = expected_kn(&py(s, t, lo), n).unwrap();
        let c = expected_kn(&py(s, t, hi), n).unwrap();
        prop_assert!(a >= c * (1.0 - 1e-12), "{} < {}", a, c);
        prop_assert!(a >= 1.0 - 1e-12 && a <= n as f64 + 1e-9);
        prop_assert!(a >= n as f64 * (1.0 - lo) - 1e-9);
    }
}
