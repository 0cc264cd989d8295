//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruinbound::adjustment::{solve_kappa, solve_l_s, solve_l_y, solve_period_root, DEFAULT_TOL};
use ruinbound::bounds::{bound_at_h, bound_corollary1, bound_optimize, bound_periodic, bound_union_baseline};
use ruinbound::cli::{external_reference_a, load_model, LoadedModel};
use ruinbound::montecarlo::{
    check_maximal_inequality, check_pathwise_lemma2, simulate_event_ruin_grid, simulate_ruin, SimConfig,
};
use ruinbound::{IncrementDistribution, PeriodicOptions, PeriodicVariant, RateRule, RiskModel, SupArgmax, TruncationPolicy};

type Check = Result<String, String>;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn risk(name: &str) -> RiskModel {
    load_model(&config(name)).expect("bundled config loads").risk().clone()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn policy_for(u: f64) -> TruncationPolicy {
    TruncationPolicy::with_k_max(10_000usize.max((10.0 * u).ceil() as usize))
}

fn criterion_1() -> Check {
    let model = risk("ex1.json");
    let root = solve_period_root(&model, 2, DEFAULT_TOL).map_err(|e| e.to_string())?;
    ensure((root.value - 1.0).abs() <= 1e-8, format!("L(S_2) = {}", root.value))?;
    let variant = PeriodicVariant::CorP7 { m: 1, l_star: 1.0 };
    let b = bound_periodic(&model, 2, variant, None, &PeriodicOptions::default()).map_err(|e| e.to_string())?;
    let cert = b.certificate.ok_or("no certificate")?;
    let expected_c = (0.25f64).exp();
    ensure(
        (cert.c() - expected_c).abs() <= 1e-9 * expected_c && cert.exponent == 1.0,
        format!("certificate ({}, {})", cert.c(), cert.exponent),
    )?;
    Ok(format!("L(S_2) = {:.12}, certificate ({:.12}, {})", root.value, cert.c(), cert.exponent))
}

fn criterion_2() -> Check {
    let model = risk("ex2.json");
    let at_two_thirds = PeriodicOptions {
        certificate_exponent: Some(2.0 / 3.0),
        ..PeriodicOptions::default()
    };
    let cert = bound_periodic(&model, 3, PeriodicVariant::Cor3, None, &at_two_thirds)
        .map_err(|e| e.to_string())?
        .certificate
        .ok_or("no certificate")?;
    ensure(
        cert.c() <= 2.2 && cert.exponent >= 2.0 / 3.0,
        format!("certificate ({}, {})", cert.c(), cert.exponent),
    )?;
    let default_cert = bound_periodic(&model, 3, PeriodicVariant::Cor3, None, &PeriodicOptions::default())
        .map_err(|e| e.to_string())?
        .certificate
        .ok_or("no default certificate")?;
    let at576 = bound_periodic(&model, 3, PeriodicVariant::Cor3, Some(576.0), &PeriodicOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(at576.certified && at576.log10_bound() <= -165.0, format!("log10 bound at 576 = {}", at576.log10_bound()))?;
    let external = external_reference_a(576.0).exp();
    ensure(external == 1.0, format!("external reference at 576 = {external}"))?;

    let bound5 = bound_optimize(&model, 5.0, &TruncationPolicy::default()).map_err(|e| e.to_string())?;
    let sim = simulate_ruin(&model, 5.0, &SimConfig::new(1_000_000, 2000, 0)).map_err(|e| e.to_string())?;
    ensure(
        sim.ci_low <= bound5.bound(),
        format!("ci_low {} > bound {} at u = 5", sim.ci_low, bound5.bound()),
    )?;
    Ok(format!(
        "C1 = {:.6} at h0 = 2/3 (largest exponent {:.9} gives C1 = {:.6}); log10 psi(576) <= {:.3}; external = 1; \
         u = 5: MC {:.5} [{:.5}, {:.5}] <= bound {:.5}",
        cert.c(),
        default_cert.exponent,
        default_cert.c(),
        at576.log10_bound(),
        sim.estimate,
        sim.ci_low,
        sim.ci_high,
        bound5.bound()
    ))
}

fn criterion_3() -> Check {
    let model = risk("ex3.json");
    let mut worst: f64 = f64::NEG_INFINITY;
    for u in [1.0, 3.0, 4.5, 12.0] {
        let b = bound_optimize(&model, u, &policy_for(u)).map_err(|e| e.to_string())?;
        let target = -4.0 * (u / 3.0f64).powf(1.5);
        ensure(b.certified, format!("uncertified at u = {u}"))?;
        ensure(b.log_bound <= target + 1e-6, format!("u = {u}: {} > {target}", b.log_bound))?;
        worst = worst.max(b.log_bound - target);
    }
    for u in [1.0, 4.0, 9.0] {
        let b = bound_optimize(&model, 2.0 * u, &policy_for(2.0 * u)).map_err(|e| e.to_string())?;
        ensure(
            b.log_bound <= -u * u.sqrt() + 1e-6,
            format!("psi({}) bound {} > -u^1.5", 2.0 * u, b.log_bound),
        )?;
    }
    Ok(format!("max(log bound + 4(u/3)^1.5) = {worst:.3e}"))
}

fn criterion_4() -> Check {
    let model = risk("ex4.json");
    for m in 2..=40usize {
        let h = (m as f64).ln();
        let sup = model.sup_log_mgf(h, &TruncationPolicy::default()).map_err(|e| e.to_string())?;
        let n = match sup.argmax {
            SupArgmax::Index(n) => n as f64,
            other => return Err(format!("h = ln {m}: argmax {other:?}")),
        };
        let eh = h.exp();
        ensure(
            n + 1.0 >= eh - 1e-9 && eh + 1e-9 >= n,
            format!("h = ln {m}: argmax {n} violates n + 1 >= e^h >= n"),
        )?;
    }
    let b103 = bound_optimize(&model, 103.0, &policy_for(103.0)).map_err(|e| e.to_string())?;
    ensure(b103.certified && b103.log10_bound() <= -88.0, format!("log10 bound at 103 = {}", b103.log10_bound()))?;
    let b6 = bound_optimize(&model, 6.0, &policy_for(6.0)).map_err(|e| e.to_string())?;
    let closed_form6 = (2.0f64 / 6.0).powi(3);
    ensure(b6.bound() <= closed_form6 + 1e-9, format!("bound at 6 = {} > {closed_form6}", b6.bound()))?;
    let sim = simulate_ruin(&model, 6.0, &SimConfig::new(1_000_000, 1000, 0)).map_err(|e| e.to_string())?;
    ensure(sim.ci_low <= b6.bound(), format!("ci_low {} > bound {}", sim.ci_low, b6.bound()))?;
    Ok(format!(
        "argmax rule holds for h = ln 2..ln 40; log10 psi(103) <= {:.3}; u = 6: bound {:.6e} <= {:.6e}, MC {:.3e} [{:.3e}, {:.3e}]",
        b103.log10_bound(),
        b6.bound(),
        closed_form6,
        sim.estimate,
        sim.ci_low,
        sim.ci_high
    ))
}

fn criterion_5() -> Check {
    let (event, reduced) = match load_model(&config("classical.json")).map_err(|e| e.to_string())? {
        LoadedModel::Event { event, reduced } => (event, reduced),
        LoadedModel::Risk(_) => return Err("classical config is not an event model".into()),
    };
    let law = reduced.distribution_at(1).map_err(|e| e.to_string())?;
    let kappa = solve_kappa(&law, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let l_y = solve_l_y(&reduced, DEFAULT_TOL, &TruncationPolicy::default()).map_err(|e| e.to_string())?;
    ensure((kappa.value - 0.5).abs() <= 1e-8, format!("kappa = {}", kappa.value))?;
    ensure((l_y.value - 0.5).abs() <= 1e-8, format!("L(Y) = {}", l_y.value))?;
    let us = [1.0, 2.0, 4.0];
    let sims = simulate_event_ruin_grid(&event, &us, &SimConfig::new(1_000_000, 400, 0)).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (u, sim) in us.iter().zip(&sims) {
        let exact = 0.5 * (-u / 2.0f64).exp();
        let lundberg = (-u / 2.0f64).exp();
        ensure(
            sim.ci_low <= exact && exact <= sim.ci_high,
            format!("u = {u}: exact {exact} outside [{}, {}]", sim.ci_low, sim.ci_high),
        )?;
        ensure(exact <= lundberg, format!("u = {u}: Lundberg bound below exact value"))?;
        notes.push(format!("u={u}: {exact:.5} in [{:.5}, {:.5}]", sim.ci_low, sim.ci_high));
    }
    Ok(format!("kappa = L(Y) = {:.12}; {}", kappa.value, notes.join("; ")))
}

fn random_law(rng: &mut ChaCha8Rng, h: f64) -> IncrementDistribution {
    match rng.gen_range(0..5) {
        0 => IncrementDistribution::normal(rng.gen_range(-1.5..0.5), rng.gen_range(0.1..2.0)),
        1 => {
            let lo = rng.gen_range(-3.0..0.5);
            IncrementDistribution::uniform(lo, lo + rng.gen_range(0.1..3.0))
        }
        2 => IncrementDistribution::two_point(rng.gen_range(0.0..2.0), rng.gen_range(0.05..0.6), rng.gen_range(-3.0..-0.1)),
        3 => IncrementDistribution::shifted_exponential(h + rng.gen_range(0.5..3.0), rng.gen_range(-3.0..0.0)),
        _ => IncrementDistribution::scaled(
            rng.gen_range(0.2..1.5),
            IncrementDistribution::normal(rng.gen_range(-1.0..0.5), 1.0).unwrap(),
        ),
    }
    .expect("valid random law")
}

fn lemma1_configurations() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tightest = f64::INFINITY;
    for i in 0..50u64 {
        let h = rng.gen_range(0.1..2.0);
        let w = rng.gen_range(0.5..5.0);
        let n = rng.gen_range(1..=20);
        let dists: Vec<_> = (0..n).map(|_| random_law(&mut rng, h)).collect();
        let report = check_maximal_inequality(&dists, h, w, &SimConfig::new(100_000, n, i)).map_err(|e| e.to_string())?;
        ensure(
            report.holds,
            format!("config {i}: ci_low {} > rhs {} (h = {h}, w = {w}, n = {n})", report.ci_low, report.rhs),
        )?;
        if report.rhs > 0.0 {
            tightest = tightest.min(report.rhs / report.estimate.max(1e-300));
        }
    }
    Ok(format!("50 configurations, smallest rhs/estimate = {tightest:.3}"))
}

fn lemma2_paths() -> Result<String, String> {
    let mut model = risk("ex2.json");
    model.rates = RateRule::periodic(vec![0.01, 0.03, 0.0]);
    let alpha = |_k: usize, r: f64, rng: &mut dyn RngCore| {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        r - 0.1 * (1.0 - u).ln()
    };
    let report = check_pathwise_lemma2(&model, &alpha, &SimConfig::new(100_000, 60, 7), 60).map_err(|e| e.to_string())?;
    ensure(report.holds, format!("max violation {} on path {}", report.max_violation, report.worst_path))?;
    Ok(format!("1e5 paths x 60 steps, max running-max gap {:.3e}", report.max_violation))
}

fn corpus() -> Vec<(&'static str, RiskModel)> {
    ["ex1.json", "ex2.json", "ex3.json", "ex4.json", "classical.json", "degenerate.json"]
        .into_iter()
        .map(|name| (name, risk(name)))
        .collect()
}

fn corpus_properties() -> Result<String, String> {
    let policy = TruncationPolicy::default();
    let us = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let mut checks = 0usize;
    for (name, model) in corpus() {
        // convexity of G_k over a grid inside the MGF domain
        let top = model.joint_domain_sup(&policy).min(4.0);
        let grid: Vec<f64> = (0..=16).map(|i| 0.95 * top * i as f64 / 16.0).collect();
        let values: Vec<Vec<f64>> = grid
            .iter()
            .map(|&h| model.cumulative_log_mgf(h, 30).map(|g| g.iter().map(|v| v.value()).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for i in 1..grid.len() - 1 {
            for k in 0..values[i].len() {
                let mid = values[i][k];
                let chord = 0.5 * (values[i - 1][k] + values[i + 1][k]);
                ensure(mid <= chord + 1e-9 * (1.0 + chord.abs()), format!("{name}: G_{} not convex near h = {}", k + 1, grid[i]))?;
                checks += 1;
            }
        }

        let l_y = solve_l_y(&model, DEFAULT_TOL, &policy).map_err(|e| e.to_string())?;
        let l_s = solve_l_s(&model, DEFAULT_TOL, &policy).map_err(|e| e.to_string())?;
        ensure(l_y.value <= l_s.value + DEFAULT_TOL, format!("{name}: L(Y) {} > L(S) {}", l_y.value, l_s.value))?;

        let mut previous = 0.0f64;
        for &u in &us {
            let opt = bound_optimize(&model, u, &policy_for(u)).map_err(|e| e.to_string())?;
            ensure(opt.log_bound <= previous + 1e-9, format!("{name}: bound increases at u = {u}"))?;
            ensure(opt.log_bound <= 0.0, format!("{name}: bound above 1 at u = {u}"))?;
            previous = opt.log_bound;

            let c1 = bound_corollary1(&model, u, DEFAULT_TOL, &policy).map_err(|e| e.to_string())?;
            let cert = c1.certificate.ok_or_else(|| format!("{name}: corollary1 without certificate"))?;
            let middle = cert.log_bound_at(u);
            ensure(c1.log_bound <= middle + 1e-9, format!("{name}: inf form above C e^(-Lu) at u = {u}"))?;
            if cert.exponent.is_finite() {
                ensure(middle <= -cert.exponent * u + 1e-9, format!("{name}: C e^(-Lu) above e^(-Lu) at u = {u}"))?;
            }
            ensure(opt.log_bound <= c1.log_bound + 1e-9, format!("{name}: optimized above corollary1 at u = {u}"))?;

            for h in [0.0, 0.1, 0.25, 0.5, 0.9] {
                let at_h = bound_at_h(&model, u, h, &policy).map_err(|e| e.to_string())?;
                let union = bound_union_baseline(&model, u, h, &policy).map_err(|e| e.to_string())?;
                ensure(union.log_bound + 1e-9 >= at_h.log_bound, format!("{name}: union below sup bound at u = {u}, h = {h}"))?;
                ensure(opt.log_bound <= at_h.log_bound + 1e-9, format!("{name}: optimizer beaten at u = {u}, h = {h}"))?;
                checks += 3;
            }
        }
    }
    Ok(format!("{checks} corpus checks"))
}

fn criterion_6() -> Check {
    let lemma1 = lemma1_configurations()?;
    let lemma2 = lemma2_paths()?;
    let corpus = corpus_properties()?;
    Ok(format!("{lemma1}; {lemma2}; {corpus}"))
}

fn simulate_csv(threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ruinbound"))
        .args(["simulate", "--model"])
        .arg(config("ex2.json"))
        .args(["--u", "1,2,5", "--paths", "20000", "--horizon", "500", "--seed", "42"])
        .env("RUINBOUND_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), format!("exit status {:?}", out.status.code()))?;
    Ok(out.stdout)
}

fn criterion_7() -> Check {
    let one = simulate_csv("1")?;
    let four = simulate_csv("4")?;
    let seven = simulate_csv("7")?;
    ensure(one == four && one == seven, "CSV differs across worker counts")?;
    Ok(format!("{} identical bytes for 1, 4 and 7 workers", one.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check, Duration); 7] = [
        ("1 Example 1 period root and window certificate", criterion_1, Duration::from_secs(1)),
        ("2 Example 2 certificate, u = 576 bound, MC dominance", criterion_2, Duration::from_secs(30)),
        ("3 Example 3 optimized bounds", criterion_3, Duration::from_secs(5)),
        ("4 Example 4 argmax, u = 103 bound, MC dominance", criterion_4, Duration::from_secs(30)),
        ("5 classical oracle", criterion_5, Duration::from_secs(60)),
        ("6 property suites", criterion_6, Duration::from_secs(120)),
        ("7 determinism across worker counts", criterion_7, Duration::from_secs(120)),
    ];
    let mut failures = Vec::new();
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > budget {
            outcome = Err(format!("took {elapsed:.1?}, budget {budget:?}"));
        }
        let line = match outcome {
            Ok(detail) => format!("criterion {name}: PASS ({elapsed:.2?}) {detail}\n"),
            Err(why) => {
                failures.push(name);
                format!("criterion {name}: FAIL ({elapsed:.2?}) {why}\n")
            }
        };
        // written directly so the summary is visible without --nocapture
        let _ = std::io::stderr().write_all(line.as_bytes());
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
