use cgp::diagnostics::{ess, geweke_z, summarize, summarize_all, Metric};
use cgp::numerics::random::standard_normal;
use cgp::numerics::stream;
use proptest::prelude::*;

fn chain(n: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x = phi * x + standard_normal(&mut rng);
            x
        })
        .collect()
}

#[test]
fn short_chains_are_reported_not_failed() {
    let s = summarize(&chain(30, 0.0, 1)).unwrap();
    assert!(matches!(s.ess, Metric::Value(_)));
    assert_eq!(s.geweke_z, Metric::TooShort);
    let json = serde_json::to_value(&s).unwrap();
    assert_eq!(json["geweke_z"], "too_short");
    assert!(summarize(&[]).is_err());
    let one = summarize(&[3.0]).unwrap();
    assert_eq!((one.mean, one.sd, one.ess), (3.0, 0.0, Metric::TooShort));
}

#[test]
fn summaries_are_keyed_by_name() {
    let a = chain(1000, 0.5, 2);
    let b = vec![1.0; 1000];
    let all = summarize_all([("sigma", a.as_slice()), ("beta", b.as_slice())]).unwrap();
    assert_eq!(all.keys().collect::<Vec<_>>(), vec!["beta", "sigma"]);
    assert_eq!(all["beta"].geweke_z, Metric::Degenerate);
}

#[test]
fn invalid_windows_and_values() {
    let x = chain(1000, 0.0, 3);
    assert!(geweke_z(&x, 0.6, 0.5).is_err());
    assert!(geweke_z(&x, 0.0, 0.5).is_err());
    let mut y = x.clone();
    y[10] = f64::NAN;
    assert!(ess(&y).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn affine_invariance(phi in -0.5f64..0.95, a in 0.01f64..100.0, b in -1e3f64..1e3, seed in 0u64..1000) {
        let x = chain(2000, phi, seed);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let (ex, ey) = (ess(&x).unwrap(), ess(&y).unwrap());
        prop_assert!((ex / ey - 1.0).abs() < 1e-8);
        let (zx, zy) = (geweke_z(&x, 0.1, 0.5).unwrap(), geweke_z(&y, 0.1, 0.5).unwrap());
        prop_assert!((zx - zy).abs() < 1e-6 * zx.abs().max(1.0));
        // Negation flips the sign of the z-score.
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!((geweke_z(&neg, 0.1, 0.5).unwrap() + zx).abs() < 1e-9 * zx.abs().max(1.0));
    }

    #[test]
    fn ess_is_positive_and_summary_is_capped(phi in -0.9f64..0.99, seed in 0u64..1000, n in 10usize..3000) {
        let x = chain(n, phi, seed);
        let e = ess(&x).unwrap();
        prop_assert!(e > 0.0 && e.is_finite());
        prop_assert!(e <= n as f64 * (n as f64).log10() + 1e-9);
        let capped = summarize(&x).unwrap().ess.value().unwrap();
        prop_assert!(capped <= n as f64);
    }
}
