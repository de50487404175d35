use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn continuous_models() -> Vec<TailModel> {
    vec![
        TailModel::pareto_log(2.0, 0.0, 1.0).unwrap(),
        TailModel::pareto_log(1.5, 1.0, 1.0).unwrap(),
        TailModel::pareto_log(2.0, -1.0, 2.0).unwrap(),
        TailModel::std_normal(),
        TailModel::stretched_double_exp(1.0, 1.0).unwrap(),
        TailModel::stretched_double_exp(0.7, 2.5).unwrap(),
    ]
}

#[test]
fn survival_examples() {
    let sde = TailModel::stretched_double_exp(1.0, 1.0).unwrap();
    assert_relative_eq!(
        sde.survival(1.0).unwrap(),
        0.179_374_078_734_017_2,
        max_relative = 1e-14
    );

    let p = TailModel::pareto_log(2.0, 0.0, 1.0).unwrap();
    assert_relative_eq!(p.survival(10.0).unwrap(), 0.01, max_relative = 1e-15);
    assert!(matches!(p.survival(0.9), Err(Error::Domain(_))));
    assert!(matches!(p.survival(f64::INFINITY), Err(Error::Domain(_))));

    let a = TailModel::atomic_oscillating(1.0, 2.0, 4).unwrap();
    assert_eq!(a.survival(4.0 - 1e-9).unwrap(), 1.0);
    assert_eq!(a.survival(65536.0).unwrap(), 0.0);
}

#[test]
fn quantile_examples() {
    let p = TailModel::pareto_log(2.0, 0.0, 1.0).unwrap();
    assert_relative_eq!(p.quantile(0.01).unwrap(), 10.0, max_relative = 1e-14);

    let sde = TailModel::stretched_double_exp(1.0, 1.0).unwrap();
    let u = (1.0 - std::f64::consts::E).exp();
    assert_relative_eq!(sde.quantile(u).unwrap(), 1.0, max_relative = 1e-13);

    // Brute force: accumulate the pmf until P(X > m) <= 0.5.
    let pois = TailModel::poisson(1.0).unwrap();
    let mut cdf = 0.0;
    let mut pmf = (-1.0f64).exp();
    let mut m = 0;
    loop {
        cdf += pmf;
        if 1.0 - cdf <= 0.5 {
            break;
        }
        m += 1;
        pmf /= m as f64;
    }
    assert_eq!(m, 1);
    assert_eq!(pois.quantile(0.5).unwrap(), 1.0);

    for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
        assert!(matches!(p.quantile(bad), Err(Error::Domain(_))));
    }
}

#[test]
fn round_trip_continuous() {
    for model in continuous_models() {
        for k in 1..=9 {
            let u = 10f64.powi(-k);
            let x = model.quantile(u).unwrap();
            let s = model.survival(x).unwrap();
            assert_relative_eq!(s, u, max_relative = 1e-9);
        }
    }
}

#[test]
fn sampling_is_deterministic_and_batch_invariant() {
    let models = [
        TailModel::pareto_log(1.0, 0.5, 1.0).unwrap(),
        TailModel::std_normal(),
        TailModel::poisson(1.0).unwrap(),
        TailModel::poisson(50.0).unwrap(),
        TailModel::stretched_double_exp(1.0, 1.0).unwrap(),
        TailModel::atomic_oscillating(1.0, 2.0, 4).unwrap(),
    ];
    for model in &models {
        let a = model.sample(&mut RandomStream::new(11), 5);
        let b = model.sample(&mut RandomStream::new(11), 5);
        assert_eq!(a, b);

        let mut s = RandomStream::new(11);
        let mut batched = model.sample(&mut s, 3);
        batched.extend(model.sample(&mut s, 7));
        let whole = model.sample(&mut RandomStream::new(11), 10);
        assert_eq!(batched, whole);
    }
}

#[test]
fn pareto_empirical_tail() {
    let model = TailModel::pareto_log(1.0, 0.0, 1.0).unwrap();
    let n = 100_000;
    let xs = model.sample(&mut RandomStream::new(42), n);
    let hits = xs.iter().filter(|&&x| x > 10.0).count();
    let p_hat = hits as f64 / n as f64;
    assert!((p_hat - 0.1).abs() < 3.0 * binomial_se(0.1, n), "p_hat = {p_hat}");
}

#[test]
fn atomic_empirical_frequency() {
    let model = TailModel::atomic_oscillating(1.0, 2.0, 4).unwrap();
    let TailModel::AtomicOscillating(table) = &model else {
        unreachable!()
    };
    let n = 10_000;
    let xs = model.sample(&mut RandomStream::new(5), n);
    assert!(xs.iter().all(|x| table.log2_atoms.contains(x)));
    let freq = xs.iter().filter(|&&x| x == 2.0).count() as f64 / n as f64;
    let p = table.probs[0];
    assert!((freq - p).abs() < 3.0 * binomial_se(p, n), "freq = {freq}, p = {p}");
}

fn two_sample_ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn maximum_of_one_matches_plain_draw() {
    let model = TailModel::pareto_log(2.0, 0.0, 1.0).unwrap();
    let mut s = RandomStream::new(1);
    let plain = model.sample(&mut s, 10_000);
    let maxes: Vec<f64> = (0..10_000).map(|_| model.sample_maximum(&mut s, 1).unwrap()).collect();
    let d = two_sample_ks(plain, maxes);
    assert!(d < 0.03, "two-sample KS = {d}");
}

#[test]
fn pareto_maximum_matches_exact_cdf() {
    let model = TailModel::pareto_log(1.0, 0.0, 1.0).unwrap();
    let n: u64 = 10_000;
    let level = n as f64 * std::f64::consts::E;
    // (1 - e^-1 / n)^n by repeated squaring-free direct power.
    let exact = (1.0 - (-1.0f64).exp() / n as f64).powi(n as i32);
    assert!((exact - (-(-1.0f64).exp()).exp()).abs() < 1e-4);
    let reps = 100_000;
    let mut s = RandomStream::new(2);
    let hits = (0..reps)
        .filter(|_| model.sample_maximum(&mut s, n).unwrap() <= level)
        .count();
    let freq = hits as f64 / reps as f64;
    assert!(
        (freq - exact).abs() < 3.0 * binomial_se(exact, reps),
        "freq = {freq}, exact = {exact}"
    );
}

#[test]
fn poisson_maximum_matches_cdf_power() {
    let model = TailModel::poisson(1.0).unwrap();
    let n: u64 = 1_000_000;
    // F(8) by direct pmf summation.
    let mut f8 = 0.0;
    let mut pmf = (-1.0f64).exp();
    for k in 0..=8 {
        if k > 0 {
            pmf /= k as f64;
        }
        f8 += pmf;
    }
    let exact = f8.powf(n as f64);
    let reps = 10_000;
    let mut s = RandomStream::new(3);
    let hits = (0..reps)
        .filter(|_| model.sample_maximum(&mut s, n).unwrap() <= 8.0)
        .count();
    let freq = hits as f64 / reps as f64;
    assert!(
        (freq - exact).abs() < 3.0 * binomial_se(exact, reps),
        "freq = {freq}, exact = {exact}"
    );
}

/// `sup |F_m(v) - F(v)|` over distinct sample points; valid with atoms.
fn ecdf_gap(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let m = draws.len() as f64;
    let mut gap: f64 = 0.0;
    for (i, v) in draws.iter().enumerate() {
        if draws.get(i + 1) != Some(v) {
            gap = gap.max(((i + 1) as f64 / m - cdf(*v)).abs());
        }
    }
    gap
}

#[test]
fn maximum_sampling_law() {
    for (i, model) in continuous_models().into_iter().enumerate() {
        for &n in &[1u64, 50, 100_000] {
            let mut s = RandomStream::new(100 + i as u64);
            let draws: Vec<f64> = (0..10_000).map(|_| model.sample_maximum(&mut s, n).unwrap()).collect();
            let d = ecdf_gap(draws, |x| model.max_cdf(n, x));
            assert!(d < 0.025, "{:?} n={n}: KS = {d}", model.family());
        }
    }
}

#[test]
fn log_maximum_agrees_with_maximum() {
    let model = TailModel::pareto_log(0.8, 0.5, 1.5).unwrap();
    for n in [1u64, 10, 1_000_000] {
        let a = model.sample_maximum(&mut RandomStream::new(9), n).unwrap();
        let b = model.sample_log_maximum(&mut RandomStream::new(9), n).unwrap();
        assert_relative_eq!(a.ln(), b, max_relative = 1e-12);
    }
    assert!(model.sample_maximum(&mut RandomStream::new(9), 0).is_err());
}

#[test]
fn atomic_tail_oscillates() {
    let model = TailModel::atomic_oscillating(1.0, 2.0, 4).unwrap();
    let values: Vec<f64> = (2..=15)
        .map(|j| {
            let x = 2f64.powi(j);
            x.powf(1.5) * model.survival(x).unwrap()
        })
        .collect();
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    assert!(hi / lo >= 1e3, "spread = {}", hi / lo);
}

#[test]
fn tail_parameters() {
    let p = TailModel::pareto_log(2.5, 1.0, 1.0).unwrap();
    assert_eq!((p.theta(), p.rho1(), p.rho2()), (2.5, 2.5, 2.5));
    let a = TailModel::atomic_oscillating(1.0, 2.0, 4).unwrap();
    assert!(a.rho1() < a.rho2());
    assert_eq!(a.domain(), Domain::Log2Magnitude);
    for m in [TailModel::std_normal(), TailModel::poisson(1.0).unwrap()] {
        assert!(m.theta().is_infinite());
        assert_eq!(m.rho1(), m.rho2());
    }
}

#[test]
fn model_spec_json() {
    let spec = ModelSpec::from_json(r#"{"family": "pareto_log", "theta": 2.0, "tau": 0.0, "c": 1.0}"#).unwrap();
    let model = spec.build().unwrap();
    assert_eq!(model.theta(), 2.0);
    let spec = ModelSpec::from_json(r#"{"family": "pareto_log", "theta": 3.0}"#).unwrap();
    assert_eq!(
        spec,
        ModelSpec::ParetoLog {
            theta: 3.0,
            tau: 0.0,
            c: 1.0,
            x0: None
        }
    );

    for text in [
        r#"{"family": "pareto_log", "theta": 2.0, "bogus": 1}"#,
        r#"{"family": "poisson", "lambda": 1.0, "theta": 1}"#,
        r#"{"family": "std_normal", "x": 1}"#,
        r#"{"family": "cauchy"}"#,
        r#"{"family": "poisson"}"#,
    ] {
        assert!(
            matches!(ModelSpec::from_json(text), Err(Error::Schema { .. })),
            "{text}"
        );
    }

    let round = TailModel::atomic_oscillating(1.0, 2.0, 4).unwrap().spec();
    let text = serde_json::to_string(&round).unwrap();
    assert_eq!(ModelSpec::from_json(&text).unwrap(), round);
}

proptest! {
    #[test]
    fn pareto_survival_is_monotone(
        theta in 0.2f64..6.0,
        tau in -3.0f64..3.0,
        c in 0.1f64..20.0,
        a in 0.0f64..30.0,
        b in 0.0f64..30.0,
    ) {
        let model = TailModel::pareto_log(theta, tau, c).unwrap();
        let x0 = model.x0();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s_lo = model.survival(x0 * lo.exp()).unwrap();
        let s_hi = model.survival(x0 * hi.exp()).unwrap();
        prop_assert!((0.0..=1.0).contains(&s_lo));
        prop_assert!((0.0..=1.0).contains(&s_hi));
        prop_assert!(s_hi <= s_lo * (1.0 + 1e-12));
    }

    #[test]
    fn pareto_round_trip(theta in 0.2f64..6.0, tau in -3.0f64..3.0, c in 0.1f64..20.0, k in 1.0f64..9.0) {
        let model = TailModel::pareto_log(theta, tau, c).unwrap();
        let u = 10f64.powf(-k);
        let s0 = model.survival(model.x0()).unwrap();
        prop_assume!(u < s0);
        let x = model.quantile(u).unwrap();
        prop_assert!((model.survival(x).unwrap() / u - 1.0).abs() < 1e-9);
    }

    #[test]
    fn atom_table_invariants(rho1 in 0.1f64..3.0, spread in 0.05f64..3.0, k in 2usize..8) {
        let table = build_atom_table(rho1, rho1 + spread, k).unwrap();
        prop_assert!((table.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ratio = (rho1 + spread) / rho1;
        for w in table.log2_atoms.windows(2) {
            prop_assert!(w[1] > w[0]);
            prop_assert!((w[1] / w[0] / ratio - 1.0).abs() < 1e-14);
        }
        for w in table.probs.windows(2) {
            prop_assert!(w[1] < w[0] || w[1] == 0.0);
        }
    }
}
