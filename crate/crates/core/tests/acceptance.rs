//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p mi-cmaes-core --test acceptance -- --nocapture`.

use std::sync::Arc;

use mi_cmaes::harness::{self, run_trials, summarize, AlphaSetting, Method, TrialConfig};
use mi_cmaes::margin::{restrict_probabilities, MarginState};
use mi_cmaes::numerics::{chi2_ppf_1dof, expected_norm, normal_cdf, sym_eig, Rng, SymMatrix};
use mi_cmaes::{BenchmarkKind, CmaParams, CmaState, GranularityMatrix, ImState, SearchSpace};

const SEED: u64 = 20_000;

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn report(id: u32, pass: bool, detail: String) {
    println!("criterion {id:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

struct Stats {
    successes: usize,
    trials: usize,
    median: Option<f64>,
}

fn stats(kind: BenchmarkKind, dim: usize, method: Method, alpha: AlphaSetting, trials: usize) -> Stats {
    let config = TrialConfig::new(kind, dim, method, 0).with_alpha(alpha);
    let results = run_trials(&config, trials, jobs(), SEED).unwrap();
    let row = summarize(&config, &results);
    Stats {
        successes: row.successes,
        trials: row.trials,
        median: row.median_evals,
    }
}

fn within(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|v| (lo..=hi).contains(&v))
}

#[test]
fn criterion_01_sphere_int_margin() {
    let s = stats(BenchmarkKind::SphereInt, 20, Method::Margin, AlphaSetting::Auto, 50);
    report(
        1,
        s.successes >= 48 && within(s.median, 2900.0, 4800.0),
        format!("SphereInt N=20 margin: {}/{} successes, median {:?} in [2900, 4800]", s.successes, s.trials, s.median),
    );
}

#[test]
fn criterion_02_ellipsoid_int_margin() {
    let s = stats(BenchmarkKind::EllipsoidInt, 20, Method::Margin, AlphaSetting::Auto, 50);
    report(
        2,
        s.successes >= 48 && within(s.median, 5900.0, 11000.0),
        format!("EllipsoidInt N=20 margin: {}/{} successes, median {:?} in [5900, 11000]", s.successes, s.trials, s.median),
    );
}

#[test]
fn criterion_03_sphere_one_max() {
    let margin = stats(BenchmarkKind::SphereOneMax, 20, Method::Margin, AlphaSetting::Auto, 50);
    let im = stats(BenchmarkKind::SphereOneMax, 20, Method::CmaesIm, AlphaSetting::Auto, 50);
    let im_rate = im.successes as f64 / im.trials as f64;
    let faster = matches!((im.median, margin.median), (Some(a), Some(b)) if a < b);
    report(
        3,
        margin.successes >= 48
            && within(margin.median, 2900.0, 4850.0)
            && (0.55..=0.97).contains(&im_rate)
            && faster,
        format!(
            "SphereOneMax N=20: margin {}/{} median {:?}; IM rate {im_rate:.2} in [0.55, 0.97], median {:?} < margin",
            margin.successes, margin.trials, margin.median, im.median
        ),
    );
}

#[test]
fn criterion_04_sphere_leading_ones_n60() {
    let margin = stats(BenchmarkKind::SphereLeadingOnes, 60, Method::Margin, AlphaSetting::Auto, 20);
    let im = stats(BenchmarkKind::SphereLeadingOnes, 60, Method::CmaesIm, AlphaSetting::Auto, 20);
    let m_rate = margin.successes as f64 / margin.trials as f64;
    let im_rate = im.successes as f64 / im.trials as f64;
    report(
        4,
        m_rate >= 0.95 && im_rate <= 0.35 && within(margin.median, 13424.0 * 0.7, 13424.0 * 1.3),
        format!(
            "SphereLeadingOnes N=60: margin rate {m_rate:.2} median {:?} (13424 ± 30%); IM rate {im_rate:.2} <= 0.35",
            margin.median
        ),
    );
}

#[test]
fn criterion_05_margin_extremes() {
    let n = 20f64;
    let lambda = CmaParams::new(20, None).unwrap().lambda as f64;
    let large = stats(BenchmarkKind::SphereInt, 20, Method::Margin, AlphaSetting::Value(n.powf(-0.5)), 20);
    let small = stats(BenchmarkKind::SphereInt, 20, Method::Margin, AlphaSetting::Value(1.0 / (n * lambda)), 20);
    report(
        5,
        large.successes == 0 && small.successes >= 19,
        format!(
            "SphereInt N=20: alpha=N^-0.5 {}/20 (want 0), alpha=1/(N lambda) {}/20 (want >= 19)",
            large.successes, small.successes
        ),
    );
}

#[test]
fn criterion_06_reduction() {
    let kind = BenchmarkKind::SphereOneMax;
    let bench = mi_cmaes::Benchmark::make(kind, 10).unwrap();
    let space = Arc::new(bench.space().unwrap());
    let params = CmaParams::new(10, None).unwrap();
    let mean: Vec<f64> = (0..10).map(|j| 1.0 + 0.2 * j as f64).collect();

    let mut plain = CmaState::new(mean.clone(), 1.0).unwrap();
    let mut margin = MarginState::new(CmaState::new(mean.clone(), 1.0).unwrap(), space.clone(), 0.0).unwrap();
    let mut im = ImState::new(CmaState::new(mean, 1.0).unwrap(), GranularityMatrix::zeros(10)).unwrap();
    let (mut r1, mut r2, mut r3) = (Rng::new(77), Rng::new(77), Rng::new(77));
    let eval = |x: &Vec<f64>| bench.evaluate(&space.encode(x).unwrap()).unwrap();

    let mut identical = true;
    for _ in 0..100 {
        let mut g = plain.sample_generation(&params, &mut r1);
        let f: Vec<f64> = g.x.iter().map(eval).collect();
        g.rank(&f).unwrap();
        plain.update(&params, &mut g).unwrap();

        let mut mr = margin.ask(&params, &mut r2).unwrap();
        let fm: Vec<f64> = mr.v_bar.iter().map(|v| bench.evaluate(v).unwrap()).collect();
        margin.tell(&params, &mut mr, &fm).unwrap();

        let (mut ir, _) = im.ask(&params, &mut r3).unwrap();
        let fi: Vec<f64> = ir.x.iter().map(eval).collect();
        im.tell(&params, &mut ir, &fi).unwrap();

        for other in [&margin.base, &im.base] {
            identical &= other.mean == plain.mean
                && other.sigma == plain.sigma
                && other.cov() == plain.cov()
                && other.p_sigma == plain.p_sigma
                && other.p_c == plain.p_c;
        }
    }
    report(
        6,
        identical,
        "alpha = 0 margin and s = 0 IM match CMA-ES bit for bit over 100 iterations".into(),
    );
}

fn random_cov(rng: &mut Rng, n: usize) -> SymMatrix {
    let b: Vec<f64> = rng.standard_normal(n * n);
    SymMatrix::from_upper_fn(n, |i, j| {
        let dot: f64 = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum();
        dot / n as f64 + if i == j { 0.1 } else { 0.0 }
    })
}

#[test]
fn criterion_07_margin_bounds() {
    let mut rng = Rng::new(SEED);
    let space = Arc::new(SearchSpace::mixed(1, 1, 1, (-10, 10)).unwrap());
    let (bin, int) = (1usize, 2usize);
    let mut worst = 0.0f64;
    let mut ok = true;

    for category in 0..3 {
        for _ in 0..200 {
            let alpha = 10f64.powf(rng.uniform(-4.0, -0.4));
            let sigma = 10f64.powf(rng.uniform(-3.0, 0.5));
            let mut mean = vec![rng.uniform(-2.0, 2.0), 0.0, 0.0];
            let j = match category {
                0 => {
                    mean[bin] = rng.uniform(-3.0, 4.0);
                    bin
                }
                1 => {
                    mean[int] = if rng.coin() { rng.uniform(-14.0, -9.5) } else { rng.uniform(9.5, 14.0) };
                    int
                }
                _ => {
                    mean[int] = rng.uniform(-9.49, 9.49);
                    int
                }
            };
            let base = CmaState::with_covariance(mean, sigma, random_cov(&mut rng, 3)).unwrap();
            let mut st = MarginState::new(base, space.clone(), alpha).unwrap();
            st.set_scale(j, 10f64.powf(rng.uniform(-1.0, 1.0))).unwrap();

            if category < 2 {
                st.correct_toward_threshold(j).unwrap();
                let m = st.base.mean[j];
                let thr = st.space().nearest_threshold(j, m).unwrap();
                let ci = st.marginal_ci(j, 1.0 - 2.0 * alpha).unwrap();
                let excess = (m - thr).abs() - ci;
                worst = worst.max(excess);
                ok &= excess <= 1e-9;
            } else {
                let probs = st.correct_interior_integer(j).unwrap();
                let m = st.base.mean[j];
                let (lo, up) = st.space().low_up_thresholds(j, m).unwrap();
                let std = st.coordinate_std(j);
                let p_low = normal_cdf((lo - m) / std);
                let p_up = normal_cdf((m - up) / std);
                let half = 0.5 * alpha;
                ok &= p_low >= half - 1e-9 && p_up >= half - 1e-9;
                let e_low = (m - lo - st.marginal_ci(j, 1.0 - 2.0 * probs.low_restricted).unwrap()).abs();
                let e_up = (up - m - st.marginal_ci(j, 1.0 - 2.0 * probs.up_restricted).unwrap()).abs();
                worst = worst.max(e_low).max(e_up);
                ok &= e_low <= 1e-9 && e_up <= 1e-9;
            }
        }
    }
    report(7, ok, format!("600 random states, worst violation {worst:.3e} (tolerance 1e-9)"));
}

fn bisect_chi2(q: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 50.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * normal_cdf(mid.sqrt()) - 1.0 < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_08_numerics() {
    let chi = chi2_ppf_1dof(0.5).unwrap();
    let oracle = bisect_chi2(0.5);
    let chi_ok = (chi - 0.454936).abs() <= 1e-6 && (chi - oracle).abs() <= 1e-9;
    let n1 = expected_norm(1).unwrap();
    let n1_ok = n1 == 1.0 - 1.0 / 4.0 + 1.0 / 21.0 && (n1 - 0.797619).abs() < 5e-7;

    let mut rng = Rng::new(SEED + 8);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let n = 1 + k % 10;
        let raw = rng.standard_normal(n * n);
        let m = SymMatrix::from_upper_fn(n, |i, j| raw[i * n + j]);
        let rec = sym_eig(&m).unwrap().reconstruct();
        for (a, b) in rec.as_slice().iter().zip(m.as_slice()) {
            worst = worst.max((a - b).abs());
        }
    }
    report(
        8,
        chi_ok && n1_ok && worst <= 1e-9,
        format!("chi2(0.5) = {chi:.9} (bisection {oracle:.9}), expected_norm(1) = {n1}, eigen reconstruction error {worst:.2e}"),
    );
}

#[test]
fn criterion_09_restriction() {
    let p = restrict_probabilities(0.01, 0.60, 0.39, 0.1).unwrap();
    let oracle_ok = (p.low_restricted - 0.05).abs() <= 1e-7 && (p.up_restricted - 0.5752809).abs() <= 1e-7;

    let mut rng = Rng::new(SEED + 9);
    let mut ok = true;
    for _ in 0..10_000 {
        let alpha = 10f64.powf(rng.uniform(-4.0, -0.4));
        // Uniform point on the simplex with both tails below one half.
        let (low, up) = loop {
            let a = rng.uniform(0.0, 1.0);
            let b = rng.uniform(0.0, 1.0);
            let (low, up) = (a.min(b), 1.0 - a.max(b));
            if low < 0.5 && up < 0.5 {
                break (low, up);
            }
        };
        let r = restrict_probabilities(low, up, 1.0 - low - up, alpha).unwrap();
        let half = 0.5 * alpha;
        for v in [r.low_restricted, r.up_restricted] {
            ok &= v >= half - 1e-12 && v < 0.5;
        }
        ok &= r.low_restricted + r.up_restricted <= 1.0 + 1e-12;
    }
    report(
        9,
        oracle_ok && ok,
        format!(
            "(0.01, 0.60, 0.39), alpha/2 = 0.05 -> ({:.7}, {:.7}); 10^4 simplex draws in [alpha/2, 0.5): {ok}",
            p.low_restricted, p.up_restricted
        ),
    );
}

#[test]
fn criterion_10_stagnation_signature() {
    let kind = BenchmarkKind::SphereOneMax;
    let margin = stats(kind, 40, Method::Margin, AlphaSetting::Auto, 50);
    let config = TrialConfig::new(kind, 40, Method::CmaesIm, 0).with_trajectory(true);
    let results = run_trials(&config, 50, jobs(), SEED).unwrap();
    let im_successes = results.iter().filter(|r| r.success).count();
    let mut signature = true;
    for r in results.iter().filter(|r| !r.success) {
        let last = r.trajectory.as_ref().and_then(|t| t.last()).expect("trajectory");
        signature &= (20..40).any(|j| last.std[j] < 0.1 && (last.mean[j] - 0.5).abs() > 0.5);
    }
    report(
        10,
        im_successes < margin.successes && signature,
        format!(
            "SphereOneMax N=40: IM {im_successes}/50 < margin {}/50; every IM failure stagnates: {signature}",
            margin.successes
        ),
    );
    let _ = harness::DEFAULT_TARGET;
}
