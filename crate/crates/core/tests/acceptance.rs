//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use skewbound::bounds_product::{
    bound_ik, bound_k_prefix, bound_spq, s_pair_labels, BoundInputPair,
};
use skewbound::bounds_sum::{bound_b2_cell, bound_b2_max, bound_b2_q, bound_lma, sampled_matrix};
use skewbound::metric::{
    gamma_matrix, pure_state, skew_info_direct, skew_info_quadratic, variance, validate_density, MetricParam,
    Observable,
};
use skewbound::numerics::{herm_eig, pauli_x, ComplexMatrix, C64};
use skewbound::scenarios::random_instance;
use skewbound::search::{best_k, best_over_family, Family, SearchStrategy};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn random_pair(seed: u64) -> Result<BoundInputPair, String> {
    let d = 2 + (seed % 2) as usize;
    let s = random_instance(d, 2, seed).map_err(e)?;
    let rho = s.state.at(0.0).map_err(e)?;
    let gf = gamma_matrix(&rho, s.p).map_err(e)?;
    BoundInputPair::from_state(&gf, &s.observables[0], &s.observables[1]).map_err(e)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..200u64 {
        let d = 2 + (seed % 2) as usize;
        let s = random_instance(d, 1, 1000 + seed).map_err(e)?;
        let rho = s.state.at(0.0).map_err(e)?;
        let a = &s.observables[0];
        let gf = gamma_matrix(&rho, s.p).map_err(e)?;
        let q = skew_info_quadratic(&gf, a).map_err(e)?;
        let direct = skew_info_direct(&rho, a, s.p).map_err(e)?;
        let rel = (q - direct).abs() / direct.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        ensure(rel <= 1e-9, || format!("seed {seed}: quadratic {q} vs direct {direct}"))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), || format!("took {t:?}"))?;
    Ok(format!("200 instances, max relative difference {worst:.2e}, {t:.2?}"))
}

fn criterion_2() -> Outcome {
    let x = skewbound::metric::Observable::new("X", pauli_x()).map_err(e)?;
    let mut worst = 0.0f64;
    for lambda in [0.1, 0.3, 0.5, 0.7, 0.95] {
        for p in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let rho = validate_density(&ComplexMatrix::from_real_diag(&[lambda, 1.0 - lambda]), 1e-12).map_err(e)?;
            let mp = MetricParam::new(p).map_err(e)?;
            let mu = 1.0 - lambda;
            let expected = (lambda.powf(p) - mu.powf(p)) * (lambda.powf(1.0 - p) - mu.powf(1.0 - p));
            let gf = gamma_matrix(&rho, mp).map_err(e)?;
            for got in [skew_info_direct(&rho, &x, mp).map_err(e)?, skew_info_quadratic(&gf, &x).map_err(e)?] {
                worst = worst.max((got - expected).abs());
                ensure((got - expected).abs() <= 1e-12, || {
                    format!("lambda {lambda}, p {p}: {got} vs {expected}")
                })?;
            }
        }
    }
    Ok(format!("25 grid points, max error {worst:.2e}"))
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let d = 2 + (seed % 2) as usize;
        let amps: Vec<C64> = (0..d).map(|_| complex_normal(&mut rng)).collect();
        let rho = pure_state(&amps, true).map_err(e)?;
        let h = ComplexMatrix::from_fn(d, |_, _| complex_normal(&mut rng));
        let a = Observable::new("A", (&h + &h.adjoint()).scale(C64::new(0.5, 0.0))).map_err(e)?;
        let var = variance(&rho, &a).map_err(e)?;
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let i = skew_info_direct(&rho, &a, MetricParam::new(p).map_err(e)?).map_err(e)?;
            worst = worst.max((i - var).abs());
            ensure((i - var).abs() <= 1e-9, || format!("seed {seed}, p {p}: I {i} vs variance {var}"))?;
        }
    }
    Ok(format!("500 cases, max |I - variance| {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let mut worst = (0.0f64, f64::INFINITY, 0.0f64);
    for seed in 0..200u64 {
        let d = 2 + (seed % 2) as usize;
        let s = random_instance(d, 1, 4000 + seed).map_err(e)?;
        let rho = s.state.at(0.0).map_err(e)?;
        let gf = gamma_matrix(&rho, s.p).map_err(e)?;
        let g = gf.gamma();
        let herm = g.hermitian_residual();
        let eig = herm_eig(g).map_err(e)?;
        let norm = eig.spectral_radius();
        let min_scaled = eig.min_value() / (1.0 + norm);
        let c = gf.factor_c();
        let recon = (&(&c.adjoint() * c) - g).frobenius_norm() / g.frobenius_norm().max(f64::MIN_POSITIVE);
        worst = (worst.0.max(herm), worst.1.min(min_scaled), worst.2.max(recon));
        ensure(herm < 1e-9, || format!("seed {seed}: Hermitian residual {herm:e}"))?;
        ensure(min_scaled >= -1e-8, || format!("seed {seed}: min eigenvalue {:e}", eig.min_value()))?;
        ensure(recon < 1e-9, || format!("seed {seed}: C^dag C residual {recon:e}"))?;
    }
    Ok(format!(
        "200 instances, Hermitian residual {:.1e}, min eigenvalue/(1+|G|) {:.1e}, reconstruction {:.1e}",
        worst.0, worst.1, worst.2
    ))
}

fn criterion_5() -> Outcome {
    for seed in 0..300u64 {
        let pair = random_pair(5000 + seed)?;
        let n = pair.n();
        let i: Vec<f64> = (1..=n).map(|k| bound_ik(&pair, k).map(|b| b.value)).collect::<Result<_, _>>().map_err(e)?;
        ensure(i[0] == pair.product(), || format!("seed {seed}: I_1 {} != product {}", i[0], pair.product()))?;
        for k in 1..n {
            ensure(i[k - 1] - i[k] >= -1e-12, || format!("seed {seed}: I_{k} < I_{}", k + 1))?;
        }
        ensure(i[n - 1] >= pair.corr_abs_sq() - 1e-9, || format!("seed {seed}: I_n below corr_abs_sq"))?;
        ensure(pair.corr_abs_sq() >= pair.corr_sq() - 1e-9, || format!("seed {seed}: corr_abs_sq < corr_sq"))?;
    }
    Ok("300 pairs (n = 4, 9)".into())
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..300u64 {
        let pair = random_pair(5000 + seed)?;
        let n = pair.n();
        let labels = s_pair_labels(n);
        let s: Vec<f64> =
            labels.iter().map(|&(p, q)| bound_spq(&pair, p, q).map(|b| b.value)).collect::<Result<_, _>>().map_err(e)?;
        for w in s.windows(2) {
            ensure(w[0] >= w[1], || format!("seed {seed}: S chain not monotone"))?;
        }
        for k in 2..=n {
            let idx = labels.iter().position(|&l| l == (k, k - 1)).expect("label present");
            let ik = bound_ik(&pair, k).map_err(e)?.value;
            ensure((s[idx] - ik).abs() <= 1e-12, || format!("seed {seed}: S_{k}_{} != I_{k}", k - 1))?;
        }
        let last = *s.last().expect("nonempty");
        worst = worst.max((last - pair.corr_abs_sq()).abs());
        ensure((last - pair.corr_abs_sq()).abs() <= 1e-10, || {
            format!("seed {seed}: S_n,n-1 {last} vs corr_abs_sq {}", pair.corr_abs_sq())
        })?;
    }
    Ok(format!("300 pairs, max |S_(n,n-1) - corr_abs_sq| {worst:.2e}"))
}

fn criterion_7() -> Outcome {
    let strategy = SearchStrategy::default();
    let mut pairs = Vec::new();
    for seed in 0..300u64 {
        pairs.push(random_pair(5000 + seed)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7000);
    for _ in 0..10 {
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
        pairs.push(BoundInputPair::from_coords(x, y).map_err(e)?);
    }
    for (idx, pair) in pairs.iter().enumerate() {
        let n = pair.n();
        let tol = pair.tolerance();
        let kt_all = best_over_family(pair, Family::K, &strategy).map_err(e)?;
        ensure(kt_all.certified_exact, || format!("pair {idx}: K~ not certified"))?;
        ensure(pair.product() + tol >= kt_all.best.value, || format!("pair {idx}: K~ above product"))?;
        let mut kt = Vec::with_capacity(n);
        for k in 1..=n {
            let o = best_k(pair, k, &strategy).map_err(e)?;
            ensure(o.certified_exact, || format!("pair {idx}: K~_{k} not exact"))?;
            let kk = bound_k_prefix(pair, k).map_err(e)?.value;
            ensure(kt_all.best.value >= o.best.value, || format!("pair {idx}: K~ < K~_{k}"))?;
            ensure(o.best.value >= kk, || format!("pair {idx}: K~_{k} < K_{k}"))?;
            ensure(kk >= pair.corr_abs_sq() - tol, || format!("pair {idx}: K_{k} < corr_abs_sq"))?;
            kt.push(o.best.value);
        }
        for k in 1..n {
            ensure(kt[k - 1].to_bits() == kt[n - k - 1].to_bits(), || {
                format!("pair {idx}: K~_{k} != K~_{}", n - k)
            })?;
        }
        ensure(pair.corr_abs_sq() >= pair.corr_sq() - 1e-9, || format!("pair {idx}: corr ordering"))?;
    }
    Ok(format!("{} pairs (n = 4, 9, 16), exact subset enumeration", pairs.len()))
}

fn criterion_8() -> Outcome {
    let mut worst_lma_m2 = 0.0f64;
    for seed in 0..200u64 {
        let d = 2 + (seed % 2) as usize;
        let m = 2 + (seed % 3) as usize;
        let s = random_instance(d, m, 8000 + seed).map_err(e)?;
        let rho = s.state.at(0.0).map_err(e)?;
        let gf = gamma_matrix(&rho, s.p).map_err(e)?;
        let x = sampled_matrix(&gf, &s.observables).map_err(e)?;
        let total = x.total();
        let b2 = bound_b2_max(&x).map_err(e)?.value;
        let mut prev = total;
        for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let v = bound_b2_q(&x, q).map_err(e)?.value;
            ensure(v <= prev + 1e-9 && v >= b2 - 1e-9, || format!("seed {seed}: B2q({q}) out of order"))?;
            prev = v;
        }
        let cells = x.m() * x.n();
        for i in 0..cells {
            for j in i + 1..cells {
                let c = bound_b2_cell(&x, (i / x.n(), i % x.n()), (j / x.n(), j % x.n())).map_err(e)?.value;
                ensure(c <= b2 + 1e-9, || format!("seed {seed}: cell pair {i},{j} above B2"))?;
            }
        }
        let lma = bound_lma(&x).map_err(e)?.value;
        ensure(lma <= total + 1e-9, || format!("seed {seed}: LMa {lma} > total {total}"))?;
        if m == 2 {
            worst_lma_m2 = worst_lma_m2.max((lma - total).abs());
            ensure((lma - total).abs() <= 1e-12, || format!("seed {seed}: LMa {lma} != total {total} at m = 2"))?;
        }
    }
    Ok(format!("200 sum scenarios, max |LMa - total| at m = 2: {worst_lma_m2:.2e}"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_skewbound")
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    elapsed: Duration,
}

fn run_cli(args: &[&str]) -> Result<Run, String> {
    let start = Instant::now();
    let out = Command::new(bin()).args(args).output().map_err(e)?;
    Ok(Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        elapsed: start.elapsed(),
    })
}

fn reproduce(example: usize, steps: Option<usize>, dir: &Path) -> Result<Run, String> {
    let ex = example.to_string();
    let dir = dir.to_str().expect("utf-8 path");
    let mut args = vec!["reproduce", "--example", &ex, "--out", dir];
    let steps = steps.map(|s| s.to_string());
    if let Some(s) = &steps {
        args.extend(["--steps", s]);
    }
    run_cli(&args)
}

fn print_details(run: &Run) {
    for line in run.stdout.lines() {
        println!("    {line}");
    }
    for line in run.stderr.lines() {
        println!("    {line}");
    }
}

fn reproduce_criterion(examples: &[usize], steps: Option<usize>, limit: Option<Duration>) -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for &n in examples {
        let run = reproduce(n, steps, dir.path())?;
        print_details(&run);
        if run.code != 0 {
            failures.push(format!("example {n} exited with {}", run.code));
        }
        if let Some(limit) = limit {
            if run.elapsed >= limit {
                failures.push(format!("example {n} took {:?}", run.elapsed));
            }
        }
        let passed = run.stdout.lines().filter(|l| l.starts_with("PASS")).count();
        let failed = run.stdout.lines().filter(|l| l.starts_with("FAIL")).count();
        summary.push(format!("example {n}: {passed} checks passed, {failed} failed, {:.2?}", run.elapsed));
    }
    if failures.is_empty() {
        Ok(summary.join("; "))
    } else {
        Err(format!("{} ({})", failures.join("; "), summary.join("; ")))
    }
}

fn criterion_9() -> Outcome {
    reproduce_criterion(&[1], Some(100), Some(Duration::from_secs(5)))
}

fn criterion_10() -> Outcome {
    reproduce_criterion(&[3, 4], None, None)
}

fn criterion_11() -> Outcome {
    reproduce_criterion(&[2], None, None)
}

fn criterion_12() -> Outcome {
    let a = tempfile::tempdir().map_err(e)?;
    let b = tempfile::tempdir().map_err(e)?;
    let commands: Vec<Vec<String>> = vec![
        vec!["sweep", "--example", "1", "--steps", "50", "--out", "{dir}/s1.csv", "--svg", "{dir}/s1.svg"],
        vec!["sweep", "--example", "4", "--steps", "40", "--out", "{dir}/s4.csv", "--svg", "{dir}/s4.svg"],
        vec![
            "sweep", "--example", "2", "--steps", "12", "--bounds", "Imax_3,Smax_4_2,Kt,Iq_4", "--perm", "sample",
            "--seed", "42", "--q", "0.3", "--out", "{dir}/s2.csv",
        ],
        vec!["bounds", "--example", "3", "--theta", "1.0", "--bounds", "B2,B2q,LMa,Kt_2", "--out", "{dir}/b3.csv"],
        vec!["benchmark", "--dim", "2", "--count", "20", "--seed", "9", "--out", "{dir}/bench.csv"],
        vec!["reproduce", "--example", "3", "--steps", "60", "--out", "{dir}/rep"],
    ]
    .into_iter()
    .map(|c| c.into_iter().map(String::from).collect())
    .collect();
    for dir in [a.path(), b.path()] {
        for cmd in &commands {
            let args: Vec<String> = cmd.iter().map(|s| s.replace("{dir}", dir.to_str().expect("utf-8"))).collect();
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            let run = run_cli(&refs)?;
            ensure(run.code == 0, || format!("{} exited with {}: {}", cmd.join(" "), run.code, run.stderr))?;
        }
    }
    let files = ["s1.csv", "s1.svg", "s4.csv", "s4.svg", "s2.csv", "b3.csv", "bench.csv", "rep/example3.csv", "rep/example3.svg"];
    for f in files {
        let x = std::fs::read(a.path().join(f)).map_err(e)?;
        let y = std::fs::read(b.path().join(f)).map_err(e)?;
        ensure(!x.is_empty() && x == y, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} commands, {} output files byte-identical", commands.len(), files.len()))
}

fn main() {
    let suite_start = Instant::now();
    let criteria: Vec<Criterion> = vec![
        ("1 quadratic form matches direct skew information", criterion_1),
        ("2 closed-form qubit skew information", criterion_2),
        ("3 pure-state skew information equals variance", criterion_3),
        ("4 Gram matrix Hermitian, PSD and factored", criterion_4),
        ("5 I_k chain", criterion_5),
        ("6 S_pq chain", criterion_6),
        ("7 K chain with exact subset search", criterion_7),
        ("8 sum-form chain", criterion_8),
        ("9 example 1 equalities", criterion_9),
        ("10 examples 3-4: B2 >= LMa", criterion_10),
        ("11 example 2 ordering", criterion_11),
        ("12 byte-identical reruns", criterion_12),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{:.2?}]", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{:.2?}]", start.elapsed());
            }
        }
    }
    let total = suite_start.elapsed();
    if total < Duration::from_secs(120) {
        println!("PASS criterion 13 runtime: acceptance suite finished in {total:.2?}");
    } else {
        failed += 1;
        println!("FAIL criterion 13 runtime: acceptance suite took {total:.2?}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
