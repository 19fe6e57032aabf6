//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a gating criterion fails; indicative ones only report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use snn_cli::config::{ConfigFile, Scenario, Settings};
use snn_cli::experiments::{run_censored_sim, run_fidelity, run_scaling};
use snn_tmvn::eval::{ks_statistic, moment_summary};
use snn_tmvn::gaussian::{conditional_factors, relative_frobenius, JitterPolicy};
use snn_tmvn::kernel::Covariance;
use snn_tmvn::lowdim::{
    sample_gibbs_oracle, sample_lowdim_tmvn, sample_rejection_oracle, LowDimTarget, SamplerPolicy, SamplerStats,
};
use snn_tmvn::rng::{substream, Domain};
use snn_tmvn::snn::{precompute, sample, SnnOptions, TruncationProblem};
use snn_tmvn::testing::{box_probability, random_bounds, random_spd};

struct Outcome {
    id: &'static str,
    pass: bool,
    gating: bool,
    detail: String,
}

fn report(results: &mut Vec<Outcome>, id: &'static str, pass: bool, gating: bool, detail: String) {
    let tag = match (pass, gating) {
        (true, _) => "PASS",
        (false, true) => "FAIL",
        (false, false) => "FAIL (indicative)",
    };
    println!("{tag} {id}: {detail}");
    results.push(Outcome { id, pass, gating, detail });
}

fn out_root() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn settings(scenario: Scenario, cfg: ConfigFile) -> Settings {
    Settings::resolve(scenario, &cfg).expect("valid settings")
}

/// Random SPD matrix and bounds whose box probability is at least `min_prob`.
fn random_problem(q: usize, min_prob: f64, seed: u64) -> (DMatrix<f64>, Vec<f64>, Vec<f64>, f64) {
    let mut rng = substream(seed, Domain::Benchmark, 1);
    loop {
        let cov = random_spd(q, &mut rng);
        let (lower, upper) = random_bounds(&cov, &mut rng);
        let p = box_probability(&cov, &lower, &upper, 20_000, &mut rng);
        if p >= min_prob {
            return (cov, lower, upper, p);
        }
    }
}

fn criterion_1(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let draws = 5_000;
    let (mut tests, mut rejections) = (0, 0);
    for p in 0..10u64 {
        let q = 3 + (p as usize % 3);
        let (cov, lower, upper, _) = random_problem(q, 0.01, 100 + p);
        let problem = TruncationProblem::from_dense(cov.clone(), None, lower.clone(), upper.clone()).unwrap();
        let plan = precompute(&problem, &SnnOptions::with_m(q), p).unwrap();
        let snn = sample(&plan, draws, p).unwrap();
        let target = LowDimTarget::from_covariance(lower, upper, cov).unwrap();
        let mut rng = substream(p, Domain::Benchmark, 2);
        let oracle: Vec<Vec<f64>> =
            (0..draws).map(|_| sample_rejection_oracle(&target, &mut rng, 10_000_000).unwrap()).collect();
        for j in 0..q {
            let b: Vec<f64> = oracle.iter().map(|r| r[j]).collect();
            tests += 1;
            if ks_statistic(&snn.column(j), &b).p_value < 0.01 {
                rejections += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    report(
        results,
        "C1 exactness at full conditioning",
        rejections <= 2 && secs < 120.0,
        true,
        format!("{rejections}/{tests} KS rejections at 0.01 (limit 2), {secs:.1}s"),
    );
}

fn criterion_2(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let draws = 10_000;
    let (mut checks, mut failures) = (0, 0);
    for p in 0..20u64 {
        let q = 1 + (p as usize % 5);
        let (cov, lower, upper, _) = random_problem(q, 0.02, 200 + p);
        let target = LowDimTarget::from_covariance(lower, upper, cov).unwrap();
        let policy = SamplerPolicy::default();
        let mut stats = SamplerStats::default();
        let mut rng = substream(p, Domain::Sampling, 0);
        let tilted: Vec<Vec<f64>> =
            (0..draws).map(|_| sample_lowdim_tmvn(&target, &policy, &mut rng, &mut stats).unwrap()).collect();
        let mut rng = substream(p, Domain::Benchmark, 3);
        let rejection: Vec<Vec<f64>> =
            (0..draws).map(|_| sample_rejection_oracle(&target, &mut rng, 10_000_000).unwrap()).collect();
        let mut rng = substream(p, Domain::Benchmark, 4);
        let gibbs = sample_gibbs_oracle(&target, &mut rng, 500, 5, draws).unwrap();
        for j in 0..q {
            let col = |rows: &[Vec<f64>]| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
            let a = moment_summary(&col(&tilted), 50);
            let b = moment_summary(&col(&rejection), 50);
            let c = moment_summary(&col(&gibbs), 50);
            for ok in [a.agrees_with(&b, 4.0), a.agrees_with(&c, 4.0), b.agrees_with(&c, 4.0)] {
                checks += 1;
                failures += usize::from(!ok);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    report(
        results,
        "C2 low-dimensional three-way agreement",
        failures == 0 && secs < 300.0,
        true,
        format!("{failures}/{checks} pairwise mean/variance checks outside 4 SE, {secs:.1}s"),
    );
}

/// Fidelity scores, QQ agreement and the seed band. Returns the output
/// directory of the main run for the determinism check.
fn criteria_3_4(results: &mut Vec<Outcome>) -> PathBuf {
    let t = Instant::now();
    let dir = out_root().join("fidelity_threads1");
    let s =
        settings(Scenario::Fidelity, ConfigFile { threads: Some(1), out_dir: Some(dir.clone()), ..Default::default() });
    let r = run_fidelity(&s).expect("fidelity run");
    let secs = t.elapsed().as_secs_f64();
    let snn = r.score("snn").unwrap();
    let gibbs = r.score("gibbs").unwrap();
    let (dr, dc) = ((snn.rmse - gibbs.rmse).abs(), (snn.crps - gibbs.crps).abs());
    report(
        results,
        "C3 scores relative to the exact benchmark",
        dr <= 0.05 && dc <= 0.03 && secs < 900.0,
        true,
        format!(
            "{} censored sites; SNN rmse {:.4} crps {:.4}, Gibbs rmse {:.4} crps {:.4}; |dRMSE| {dr:.4} (<= 0.05), |dCRPS| {dc:.4} (<= 0.03), {secs:.1}s",
            r.n_censored, snn.rmse, snn.crps, gibbs.rmse, gibbs.crps
        ),
    );

    let mut rmse = Vec::new();
    let mut crps = Vec::new();
    for seed in 1..=5u64 {
        let cfg = ConfigFile {
            seed: Some(seed),
            msnn: Some(false),
            benchmark_burnin: Some(1),
            benchmark_thin: Some(1),
            out_dir: Some(out_root().join(format!("band_seed{seed}"))),
            ..Default::default()
        };
        let r = run_fidelity(&settings(Scenario::Fidelity, cfg)).expect("fidelity run");
        let s = r.score("snn").unwrap();
        rmse.push(s.rmse);
        crps.push(s.crps);
    }
    let in_band = rmse.iter().all(|v| (0.3..=0.6).contains(v)) && crps.iter().all(|v| (0.15..=0.35).contains(v));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    report(
        results,
        "C3 plausibility band over 5 seeds",
        in_band,
        false,
        format!("SNN rmse [{}] (band 0.3-0.6), crps [{}] (band 0.15-0.35)", fmt(&rmse), fmt(&crps)),
    );

    let c = r_comparison(&r, "snn");
    let m = r_comparison(&r, "msnn");
    report(
        results,
        "C4 QQ fidelity",
        c.0 <= 0.15,
        true,
        format!(
            "max |quantile deviation| over levels 0.01-0.99: SNN {:.4}, MSNN {:.4} (<= 0.15); over all order statistics: SNN {:.4}, MSNN {:.4}",
            c.0, m.0, c.1, m.1
        ),
    );
    dir
}

fn r_comparison(r: &snn_cli::experiments::FidelityReport, method: &str) -> (f64, f64) {
    let c = r.comparison(method).unwrap();
    (c.max_qq_deviation_central, c.max_qq_deviation_full)
}

fn criterion_5(results: &mut Vec<Outcome>) -> PathBuf {
    let t = Instant::now();
    let dir = out_root().join("scaling_threads1");
    let s =
        settings(Scenario::Scaling, ConfigFile { threads: Some(1), out_dir: Some(dir.clone()), ..Default::default() });
    let r = run_scaling(&s).expect("scaling run");
    let secs = t.elapsed().as_secs_f64();
    let slope = r.slope.unwrap();
    let monotone = r.rows.windows(2).all(|w| w[1].total() > w[0].total());
    let times = r.rows.iter().map(|x| format!("{}: {:.2}s", x.n, x.total())).collect::<Vec<_>>().join(", ");
    report(
        results,
        "C5 linear scaling",
        (0.8..=1.3).contains(&slope) && monotone && secs < 1200.0,
        true,
        format!("log-log slope {slope:.3} (0.8-1.3), monotone {monotone}; {times}"),
    );

    let t = Instant::now();
    let cfg = ConfigFile {
        threads: Some(1),
        ladder: Some(vec![100_000]),
        out_dir: Some(out_root().join("scaling_1e5")),
        ..Default::default()
    };
    let ok = run_scaling(&settings(Scenario::Scaling, cfg)).is_ok();
    let secs = t.elapsed().as_secs_f64();
    report(
        results,
        "C5 smoke run at n = 100000",
        ok && secs < 3600.0,
        true,
        format!("completed {ok} in {secs:.1}s (limit 3600s)"),
    );
    dir
}

fn criterion_6(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let s = settings(
        Scenario::CensoredSim,
        ConfigFile { out_dir: Some(out_root().join("censored_sim")), ..Default::default() },
    );
    let r = run_censored_sim(&s).expect("censored-sim run");
    let secs = t.elapsed().as_secs_f64();
    let get = |m: &str, reg: &str| r.score(m, reg).unwrap();
    let (snn_b, gibbs_b) = (get("snn", "block"), get("gibbs", "block"));
    let rel_r = (snn_b.rmse - gibbs_b.rmse).abs() / gibbs_b.rmse;
    let rel_c = (snn_b.crps - gibbs_b.crps).abs() / gibbs_b.crps;
    let (snn_a, msnn_a) = (get("snn", "all"), get("msnn", "all"));
    let dr = (snn_a.rmse - msnn_a.rmse).abs();
    let dc = (snn_a.crps - msnn_a.crps).abs();
    report(
        results,
        "C6 censored simulation",
        rel_r <= 0.15 && rel_c <= 0.15 && dr <= 0.05 && dc <= 0.05,
        true,
        format!(
            "block ({} censored): SNN {:.4}/{:.4} vs Gibbs {:.4}/{:.4}, rel diff {:.1}%/{:.1}% (<= 15%); all {} censored: SNN {:.4}/{:.4}, MSNN {:.4}/{:.4}, diff {dr:.4}/{dc:.4} (<= 0.05); {secs:.1}s",
            r.block_censored,
            snn_b.rmse,
            snn_b.crps,
            gibbs_b.rmse,
            gibbs_b.crps,
            100.0 * rel_r,
            100.0 * rel_c,
            r.n_censored,
            snn_a.rmse,
            snn_a.crps,
            msnn_a.rmse,
            msnn_a.crps
        ),
    );
}

/// Independent dense computation through an explicit inverse.
fn dense_conditional(s: &DMatrix<f64>, prev: &[usize], later: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| s[(r[i], c[j])]);
    let s_ll = sub(later, later);
    if prev.is_empty() {
        return (DMatrix::zeros(later.len(), 0), s_ll);
    }
    let inv = sub(prev, prev).try_inverse().expect("invertible block");
    let w = sub(later, prev) * inv;
    let cov = s_ll - &w * sub(prev, later);
    (w, cov)
}

fn criterion_7(results: &mut Vec<Outcome>) {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let t = Instant::now();
    let mut rng = substream(7, Domain::Benchmark, 7);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(2..=32);
        let s = random_spd(n, &mut rng);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let n_prev = rng.random_range(0..n);
        let n_later = rng.random_range(1..=n - n_prev);
        let (prev, later) = (&idx[..n_prev], &idx[n_prev..n_prev + n_later]);
        let cov = Covariance::dense(s.clone()).unwrap();
        let f = conditional_factors(&cov, prev, later, JitterPolicy::default()).unwrap();
        let (w, c) = dense_conditional(&s, prev, later);
        if n_prev > 0 {
            worst = worst.max(relative_frobenius(&f.weights, &w));
        }
        worst = worst.max(relative_frobenius(&f.covariance, &c));
    }
    let secs = t.elapsed().as_secs_f64();
    report(
        results,
        "C7 conditional-factor correctness",
        worst <= 1e-8 && secs < 60.0,
        true,
        format!("500 instances, worst relative Frobenius error {worst:.2e} (<= 1e-8), {secs:.1}s"),
    );
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn criterion_8(results: &mut Vec<Outcome>, fidelity_dir: &Path, scaling_dir: &Path) {
    let dir = out_root().join("fidelity_threads3");
    let s =
        settings(Scenario::Fidelity, ConfigFile { threads: Some(3), out_dir: Some(dir.clone()), ..Default::default() });
    run_fidelity(&s).expect("fidelity rerun");
    let (a, b) = (csv_files(fidelity_dir), csv_files(&dir));
    let fidelity_same = !a.is_empty() && a == b;

    let dir = out_root().join("scaling_threads3");
    let s =
        settings(Scenario::Scaling, ConfigFile { threads: Some(3), out_dir: Some(dir.clone()), ..Default::default() });
    run_scaling(&s).expect("scaling rerun");
    let digest = |d: &Path| std::fs::read(d.join("digest.csv")).unwrap();
    let scaling_same = digest(scaling_dir) == digest(&dir);
    report(
        results,
        "C8 determinism across thread counts",
        fidelity_same && scaling_same,
        true,
        format!(
            "fidelity: {} CSV files identical with 1 and 3 threads: {fidelity_same}; scaling digest.csv identical: {scaling_same} (timing.csv holds wall times and is excluded)",
            a.len()
        ),
    );
}

fn main() {
    // `cargo test -- --list` and filters: this target has a single entry.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut results = Vec::new();
    criterion_1(&mut results);
    criterion_2(&mut results);
    let fidelity_dir = criteria_3_4(&mut results);
    let scaling_dir = criterion_5(&mut results);
    criterion_6(&mut results);
    criterion_7(&mut results);
    criterion_8(&mut results, &fidelity_dir, &scaling_dir);
    let failed: Vec<&Outcome> = results.iter().filter(|o| o.gating && !o.pass).collect();
    let indicative = results.iter().filter(|o| !o.gating && !o.pass).count();
    println!(
        "acceptance: {} criteria, {} passed, {} gating failures, {} indicative failures",
        results.len(),
        results.iter().filter(|o| o.pass).count(),
        failed.len(),
        indicative
    );
    if !failed.is_empty() {
        for o in failed {
            eprintln!("gating failure: {} ({})", o.id, o.detail);
        }
        std::process::exit(1);
    }
}
