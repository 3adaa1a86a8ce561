//! One PASS/FAIL line per acceptance criterion. Runs without the libtest harness so
//! the lines are always printed.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenclass::classifiers::{Class, Classifier, Config};
use tenclass::spectral::{find_hpp_eigenpair, residual, spectral_radius_nonneg};
use tenclass::subdivision::{component_coeffs, form_coeffs, Simplex};
use tenclass::verify::{self, fixtures};
use tenclass::{Sign, Status, Tensor};

const SEED: u64 = 7;
const MAX_INCONCLUSIVE_RATE: f64 = 0.05;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn fixture_corpus(cfg: &Config) -> Outcome {
    let mut failed = Vec::new();
    let mut slowest = Duration::ZERO;
    let all = fixtures::load_all().expect("corpus loads");
    for f in &all {
        let start = Instant::now();
        let r = fixtures::run_fixture(f, cfg).expect("fixture runs");
        let took = start.elapsed();
        slowest = slowest.max(took);
        if !r.passed {
            let bad: Vec<_> = r.checks.iter().filter(|c| !c.ok).map(|c| format!("{}: want {} got {}", c.label, c.expected, c.actual)).collect();
            failed.push(format!("{} ({})", f.name, bad.join("; ")));
        }
        if took > Duration::from_secs(2) {
            failed.push(format!("{} took {took:?}", f.name));
        }
    }
    outcome(
        failed.is_empty(),
        format!("{}/{} fixtures, slowest {slowest:?}{}", all.len() - failed.len(), all.len(), if failed.is_empty() { String::new() } else { format!("; {}", failed.join(", ")) }),
    )
}

fn suites_clean(reports: &[verify::SuiteReport], took: Duration) -> Outcome {
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed(MAX_INCONCLUSIVE_RATE))
        .map(|r| format!("{}: {} violations, inconclusive rate {:.3}", r.suite, r.violations.len(), r.inconclusive_rate()))
        .collect();
    let instances: usize = reports.iter().map(|r| r.instances).sum();
    let worst = reports.iter().map(|r| r.inconclusive_rate()).fold(0.0, f64::max);
    let ok = bad.is_empty() && took < Duration::from_secs(600);
    outcome(
        ok,
        format!("{} suites, {instances} instances in {took:.1?}, worst inconclusive rate {worst:.3}{}", reports.len(), if bad.is_empty() { String::new() } else { format!("; {}", bad.join(", ")) }),
    )
}

fn spectral_checks(cfg: &Config) -> Outcome {
    let mut problems = Vec::new();
    for n in [2usize, 3, 4] {
        let r = spectral_radius_nonneg(&Tensor::ones(3, n).unwrap(), cfg.spectral_tol, cfg.spectral_max_iter).unwrap();
        let want = (n * n) as f64;
        if !r.contains(want) || r.width() > 1e-6 {
            problems.push(format!("all-ones n={n}: [{}, {}]", r.lower, r.upper));
        }
    }
    for (m, n) in [(3, 3), (4, 2)] {
        let r = spectral_radius_nonneg(&Tensor::identity(m, n).unwrap(), cfg.spectral_tol, cfg.spectral_max_iter).unwrap();
        if !r.contains(1.0) {
            problems.push(format!("identity m={m} n={n}: [{}, {}]", r.lower, r.upper));
        }
    }
    let minus_i = Tensor::identity(3, 3).unwrap().scale(-1.0);
    match find_hpp_eigenpair(&minus_i, 1e-10, cfg.eigen_restarts, cfg.seed, Sign::Negative, cfg.interior_margin).unwrap() {
        Some(p) if (p.lambda + 1.0).abs() <= 1e-10 && p.residual <= 1e-10 => {}
        other => problems.push(format!("-I eigenpair: {other:?}")),
    }
    let mut symmetric = 0;
    for f in fixtures::load_all().unwrap() {
        let a = f.tensor().unwrap();
        if !a.is_symmetric() || f.expect.get("almostE0").map(String::as_str) != Some("Holds") {
            continue;
        }
        symmetric += 1;
        match find_hpp_eigenpair(&a, 1e-8, cfg.eigen_restarts, cfg.seed, Sign::Negative, cfg.interior_margin).unwrap() {
            Some(p) if p.lambda < 0.0 && residual(&a, p.lambda, &p.x).unwrap() <= 1e-8 => {}
            other => problems.push(format!("{}: {other:?}", f.name)),
        }
    }
    if symmetric == 0 {
        problems.push("no symmetric almost-E0 fixture".into());
    }
    outcome(
        problems.is_empty(),
        format!("all-ones, identity, -I and {symmetric} symmetric almost-E0 fixtures{}", if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }),
    )
}

fn stabilizer(cfg: &Config) -> Outcome {
    let r = verify::run_suite("stabilizer", SEED, 50, cfg).unwrap();
    let ok = r.violations.is_empty() && r.inconclusive == 0 && r.generator_failures.is_empty() && r.decisive == 50;
    outcome(ok, format!("{}/50 with A + D almost E, completely S0 and defect <= 1e-10; {} violations, {} generator failures", r.decisive - r.violations.len(), r.violations.len(), r.generator_failures.len()))
}

fn random_simplex_point(r: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..r).map(|_| -rng.random_range(1e-12f64..1.0).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Simplex {
    loop {
        if rng.random_bool(0.5) {
            // A cell the engine could produce: a few bisections of the unit simplex.
            let mut s = Simplex::unit(n);
            for _ in 0..rng.random_range(0..8) {
                let (l, r) = s.refine().unwrap();
                s = if rng.random_bool(0.5) { l } else { r };
            }
            return s;
        }
        let vertices = (0..n).map(|_| random_simplex_point(n, rng)).collect();
        if let Ok(s) = Simplex::new(vertices, 0) {
            return s;
        }
    }
}

fn sandwich(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m: usize = rng.random_range(2..=4);
    let n: usize = rng.random_range(2..=4);
    let len = n.pow(m as u32);
    let a = Tensor::new(m, n, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let s = random_simplex(n, rng);
    let y = s.point(&random_simplex_point(n, rng));
    let slack = 1e-12 * (len as f64);
    let f = a.apply(&y).unwrap();
    for (k, c) in component_coeffs(&a, &s).unwrap().iter().enumerate() {
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if f[k] < lo - slack || f[k] > hi + slack {
            return Err(format!("component {k}: {} outside [{lo}, {hi}] (m={m} n={n})", f[k]));
        }
    }
    let c = form_coeffs(&a, &s).unwrap();
    let v = a.form_value(&y).unwrap();
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if v < lo - slack || v > hi + slack {
        return Err(format!("form {v} outside [{lo}, {hi}] (m={m} n={n})"));
    }
    Ok(())
}

const GRID: usize = 100_000;

/// Brute-force decision of a class on a dimension-2 tensor over the grid
/// `x = (t, 1 - t)`, using the same thresholds as the engine.
fn grid_status(a: &Tensor, class: Class, eps: f64, margin: f64) -> Option<Status> {
    let diag = a.diag();
    let points = (0..=GRID).map(|i| {
        let t = i as f64 / GRID as f64;
        let x = vec![t, 1.0 - t];
        let f = a.apply(&x).unwrap();
        (x, f)
    });
    let interior = |x: &[f64]| x.iter().all(|&v| v >= margin);
    let support_max = |x: &[f64], f: &[f64]| x.iter().zip(f).filter(|(xi, _)| **xi > 0.0).map(|(_, fk)| *fk).fold(f64::NEG_INFINITY, f64::max);
    let all_max = |f: &[f64]| f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let all_min = |f: &[f64]| f.iter().copied().fold(f64::INFINITY, f64::min);
    let holds = |b: bool| Some(if b { Status::Holds } else { Status::Fails });
    let mut pts = points.collect::<Vec<_>>().into_iter();
    match class {
        Class::E0 => holds(!pts.any(|(x, f)| support_max(&x, &f) < -eps)),
        Class::E => holds(!pts.any(|(x, f)| support_max(&x, &f) <= eps)),
        Class::AlmostE0 => holds(diag.iter().all(|&d| d >= -eps) && pts.any(|(x, f)| interior(&x) && all_max(&f) < -eps)),
        Class::AlmostE => holds(diag.iter().all(|&d| d > eps) && pts.any(|(x, f)| interior(&x) && all_max(&f) <= eps)),
        Class::C0 => holds(!pts.any(|(x, _)| a.form_value(&x).unwrap() < -eps)),
        Class::C => holds(!pts.any(|(x, _)| a.form_value(&x).unwrap() <= eps)),
        Class::AlmostC0 => holds(diag.iter().all(|&d| d >= -eps) && pts.any(|(x, _)| a.form_value(&x).unwrap() < -eps)),
        Class::AlmostC => holds(diag.iter().all(|&d| d > eps) && pts.any(|(x, _)| a.form_value(&x).unwrap() <= eps)),
        Class::S => holds(pts.any(|(x, f)| interior(&x) && all_min(&f) > eps)),
        Class::S0 => holds(pts.any(|(_, f)| all_min(&f) >= -eps)),
        Class::CompletelyS => holds(diag.iter().all(|&d| d > eps) && pts.any(|(x, f)| interior(&x) && all_min(&f) > eps)),
        Class::CompletelyS0 => holds(diag.iter().all(|&d| d >= -eps) && pts.any(|(_, f)| all_min(&f) >= -eps)),
        _ => None,
    }
}

fn engine_soundness(cfg: &Config) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut problems = Vec::new();
    let trials = 10_000;
    for _ in 0..trials {
        if let Err(e) = sandwich(&mut rng) {
            problems.push(e);
        }
    }
    let mut compared = 0;
    let mut tensors = 0;
    for f in fixtures::load_all().unwrap() {
        let a = f.tensor().unwrap();
        if a.dim() != 2 {
            continue;
        }
        tensors += 1;
        let c = Classifier::new(&a, cfg).unwrap();
        for class in Class::ALL {
            let Some(grid) = grid_status(&a, class, c.epsilon(), cfg.interior_margin) else {
                continue;
            };
            let engine = c.verdict(class).unwrap().status();
            compared += 1;
            if engine != grid {
                problems.push(format!("{} {class}: engine {engine:?}, grid {grid:?}", f.name));
            }
        }
    }
    outcome(
        problems.is_empty() && tensors > 0,
        format!("{trials} coefficient sandwiches; {compared} grid comparisons over {tensors} dim-2 fixtures{}", if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }),
    )
}

fn run_all_in_pool(threads: usize, cfg: &Config) -> (Vec<verify::SuiteReport>, Duration) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let start = Instant::now();
    let reports = pool.install(|| verify::run_all(SEED, None, cfg)).unwrap();
    (reports, start.elapsed())
}

fn main() {
    let cfg = Config::default();
    let mut all_ok = true;
    let mut report = |n: usize, name: &str, o: Outcome| {
        all_ok &= o.ok;
        println!("criterion {n} {name}: {} ({})", if o.ok { "PASS" } else { "FAIL" }, o.detail);
    };

    report(1, "fixture corpus", fixture_corpus(&cfg));
    let (parallel, took) = run_all_in_pool(8, &cfg);
    report(2, "property suites", suites_clean(&parallel, took));
    report(3, "spectral routines", spectral_checks(&cfg));
    report(4, "stabilizer", stabilizer(&cfg));
    report(5, "engine soundness", engine_soundness(&cfg));
    let (serial, _) = run_all_in_pool(1, &cfg);
    let a = serde_json::to_string(&parallel).unwrap();
    let b = serde_json::to_string(&serial).unwrap();
    report(6, "determinism", outcome(a == b, format!("seed {SEED}, 1 vs 8 threads, {} bytes", a.len())));

    if !all_ok {
        std::process::exit(1);
    }
}
