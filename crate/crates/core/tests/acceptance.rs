//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1-4 compare against the published per-city Hubei series. Set
//! `HUBEI_SNAPSHOT` (and, if its cities differ, `HUBEI_POPULATION`) to run
//! them on that data; they are then enforced. Without it they run on the
//! shipped synthetic fixture, are printed, and do not fail the run.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use epirisk::cli::{run, Command, PipelineConfig};
use epirisk::distributions::{sample, DistributionId, ParamVector};
use epirisk::fitting::{fit_mle, ks_statistic, refit_winner, FitOptions, ParameterTrace};
use epirisk::meta::{fit_parameter_distribution, trace_stats};
use epirisk::rates::RateKind;
use epirisk::reinsurance::{expected_payout_mc, expected_shortfall, payout, ComponentLaw};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

struct Data {
    cfg: PipelineConfig,
    real: bool,
}

fn data() -> Data {
    let mut cfg = PipelineConfig::default();
    let real = match std::env::var_os("HUBEI_SNAPSHOT") {
        Some(p) => {
            cfg.data = PathBuf::from(p);
            true
        }
        None => false,
    };
    if let Some(p) = std::env::var_os("HUBEI_POPULATION") {
        cfg.population = PathBuf::from(p);
    }
    Data { cfg, real }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// Winner traces for the families the paper settled on, refit with the
/// same per-kind seeds as the pipeline.
struct Stage {
    winners: Vec<(RateKind, DistributionId, usize, usize)>,
    fit_time: Duration,
    gev_speed: Option<ParameterTrace<f64>>,
    normal_death: Option<ParameterTrace<f64>>,
    opts: FitOptions,
}

fn stage(d: &Data) -> Result<Stage, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        out: dir.path().to_path_buf(),
        ..d.cfg.clone()
    };
    let start = Instant::now();
    let out = run(Command::Fit, &cfg).map_err(|e| e.to_string())?;
    let fit_time = start.elapsed();
    let winners = RateKind::ALL
        .iter()
        .map(|k| {
            let s = &out.selections[k];
            (*k, s.winner, s.winner_day_count, s.total_days)
        })
        .collect();
    let opts = FitOptions {
        seed: cfg.seed,
        ..cfg.fitting.clone()
    };
    let trace = |kind: RateKind, id| {
        refit_winner(&out.surfaces[&kind], id, &opts.derived(&[kind as u64])).ok()
    };
    Ok(Stage {
        winners,
        fit_time,
        gev_speed: trace(RateKind::InfectionSpeed, DistributionId::Gev),
        normal_death: trace(RateKind::DeathRate, DistributionId::Normal),
        opts,
    })
}

fn criterion_1(s: &Stage) -> Verdict {
    let want = [
        (DistributionId::Gev, 28),
        (DistributionId::Normal, 18),
        (DistributionId::JohnsonSb, 18),
    ];
    let mut ok = s.fit_time <= Duration::from_secs(300);
    let mut parts = Vec::new();
    for ((kind, got, days, total), (id, count)) in s.winners.iter().zip(want) {
        ok &= *got == id && (*days as i64 - count).abs() <= 8;
        parts.push(format!(
            "{} {got} {days}/{total} (want {id} {count}+-8)",
            kind.slug()
        ));
    }
    verdict(
        ok,
        format!(
            "{}; fit stage {:.1}s",
            parts.join(", "),
            s.fit_time.as_secs_f64()
        ),
    )
}

fn criterion_2(s: &Stage) -> Verdict {
    let Some(t) = &s.gev_speed else {
        return verdict(false, "GEV refit of the speed surface failed");
    };
    let Ok(table) = trace_stats(t) else {
        return verdict(false, "too few GEV days");
    };
    let (k, mu, sigma) = (
        table.get("k").unwrap(),
        table.get("mu").unwrap(),
        table.get("sigma").unwrap(),
    );
    let ok = within(k.mean, 0.617, 0.12)
        && within(k.median, 0.6299, 0.12)
        && mu.mean <= 0.0015
        && sigma.mean <= 0.0015
        && mu.min >= 0.0
        && sigma.min >= 0.0;
    verdict(
        ok,
        format!(
            "k mean {:.4} median {:.4}; mu mean {:.2e} min {:.2e}; sigma mean {:.2e} min {:.2e}",
            k.mean, k.median, mu.mean, mu.min, sigma.mean, sigma.min
        ),
    )
}

fn criterion_3(s: &Stage) -> Verdict {
    let Some(t) = &s.normal_death else {
        return verdict(false, "Normal refit of the death surface failed");
    };
    let Ok(table) = trace_stats(t) else {
        return verdict(false, "too few Normal days");
    };
    let (mu, sigma) = (table.get("mu").unwrap(), table.get("sigma").unwrap());
    let skew = |r: &epirisk::stats::StatsRow<f64>| r.skewness.unwrap_or(f64::NAN);
    let ok = within(mu.mean, 0.0024, 0.001)
        && within(sigma.mean, 0.0037, 0.002)
        && skew(mu) > 1.0
        && skew(sigma) > 1.0;
    verdict(
        ok,
        format!(
            "mu mean {:.5} skew {:.3}; sigma mean {:.5} skew {:.3}",
            mu.mean,
            skew(mu),
            sigma.mean,
            skew(sigma)
        ),
    )
}

fn criterion_4(s: &Stage) -> Verdict {
    let catalog = DistributionId::ALL;
    let top = |t: &Option<ParameterTrace<f64>>,
               kind: RateKind,
               name: &str|
     -> Vec<DistributionId> {
        t.as_ref()
            .and_then(|t| {
                fit_parameter_distribution(t, name, &catalog, &s.opts.derived(&[kind as u64, 1]))
                    .ok()
            })
            .map(|f| f.ranked.iter().map(|r| r.id).collect())
            .unwrap_or_default()
    };
    use DistributionId::*;
    let checks = [
        (
            "GEV k",
            top(&s.gev_speed, RateKind::InfectionSpeed, "k"),
            vec![JohnsonSb],
            1,
        ),
        (
            "GEV mu",
            top(&s.gev_speed, RateKind::InfectionSpeed, "mu"),
            vec![Beta4],
            2,
        ),
        (
            "GEV sigma",
            top(&s.gev_speed, RateKind::InfectionSpeed, "sigma"),
            vec![Beta4],
            2,
        ),
        (
            "Normal mu",
            top(&s.normal_death, RateKind::DeathRate, "mu"),
            vec![Burr4, InverseGaussian3],
            2,
        ),
        (
            "Normal sigma",
            top(&s.normal_death, RateKind::DeathRate, "sigma"),
            vec![Burr4, InverseGaussian3],
            2,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, ranked, want, depth) in checks {
        ok &= ranked.iter().take(depth).any(|id| want.contains(id));
        let names: Vec<&str> = ranked.iter().map(|id| id.name()).collect();
        parts.push(format!("{label} [{}]", names.join(",")));
    }
    verdict(ok, parts.join("; "))
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut vectors = paper_vectors();
    vectors.extend(grid_vectors());
    let worst = vectors
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            [
                normalization_error(p) / 1e-6,
                round_trip_error(p) / 1e-8,
                derivative_error(p) / 1e-5,
                sampling_ratio(p, 1000 + i as u64),
            ]
        })
        .reduce(|| [0.0; 4], |a, b| std::array::from_fn(|j| a[j].max(b[j])));
    let cont = continuity_error() / 1e-6;
    let secs = start.elapsed().as_secs_f64();
    let ok = worst.iter().all(|&w| w <= 1.0) && cont <= 1.0 && secs <= 120.0;
    verdict(
        ok,
        format!(
            "{} vectors; worst as fraction of tolerance: mass {:.2e}, round trip {:.2e}, slope {:.2e}, sampling KS {:.3}, k->0 {:.2e}; {secs:.1}s",
            vectors.len(),
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            cont
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut closed = 0.0f64;
    for seed in 0..50u64 {
        let xs = sample(
            &pv(
                DistributionId::Gev,
                &[("k", 0.1), ("sigma", 0.5), ("mu", 3.0)],
            ),
            seed,
            5 + seed as usize,
        )
        .unwrap();
        let fit = fit_mle(DistributionId::Normal, &xs, &FitOptions::default()).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        closed = closed
            .max((fit.params.get("mu").unwrap() - mean).abs() / mean.abs())
            .max((fit.params.get("sigma").unwrap() - sd).abs() / sd);
    }
    let truth = pv(
        DistributionId::Gev,
        &[("k", 0.2), ("sigma", 1.0), ("mu", 0.0)],
    );
    let hits = (0..100u64)
        .into_par_iter()
        .filter(|&r| {
            let xs = sample(&truth, 20_000 + r, 2000).unwrap();
            match fit_mle(
                DistributionId::Gev,
                &xs,
                &FitOptions::default().derived(&[r]),
            ) {
                Ok(f) => f
                    .params
                    .values()
                    .iter()
                    .zip(truth.values())
                    .all(|(g, w)| (g - w).abs() <= 0.1),
                Err(_) => false,
            }
        })
        .count();
    verdict(
        closed <= 1e-10 && hits >= 95,
        format!("Normal closed form worst rel {closed:.1e}; GEV recovered {hits}/100"),
    )
}

fn random_member(rng: &mut impl Rng) -> ParamVector<f64> {
    use DistributionId::*;
    let id = DistributionId::ALL[rng.random_range(0..9)];
    let shift = rng.random_range(-5.0..5.0);
    let scale = rng.random_range(0.05..5.0);
    let mut shape = || rng.random_range(0.8..6.0);
    match id {
        Gev | GeneralizedPareto => {
            let k = shape() / 6.0 * 1.8 - 0.9;
            pv(id, &[("k", k), ("sigma", scale), ("mu", shift)])
        }
        Normal | HyperbolicSecant => pv(id, &[("mu", shift), ("sigma", scale)]),
        JohnsonSb => pv(
            id,
            &[
                ("gamma", shape() - 3.0),
                ("delta", shape()),
                ("lambda", scale),
                ("xi", shift),
            ],
        ),
        Beta4 => pv(
            id,
            &[
                ("alpha1", shape()),
                ("alpha2", shape()),
                ("a", shift),
                ("b", shift + scale),
            ],
        ),
        Burr4 => pv(
            id,
            &[
                ("k", shape()),
                ("alpha", shape()),
                ("beta", scale),
                ("gamma", shift),
            ],
        ),
        InverseGaussian3 => pv(id, &[("lambda", scale), ("mu", shape()), ("gamma", shift)]),
        Weibull3 => pv(id, &[("alpha", shape()), ("beta", scale), ("gamma", shift)]),
    }
}

fn criterion_7() -> Verdict {
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|case| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(case);
            let model = random_member(&mut rng);
            // half the samples come from a different law, so D spans its range
            let source = if case % 2 == 0 {
                model.clone()
            } else {
                random_member(&mut rng)
            };
            let n = rng.random_range(1..120);
            let xs = sample(&source, case, n).unwrap();
            (ks_statistic(&model, &xs).unwrap() - ks_brute_force(&model, &xs)).abs()
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        worst <= 1e-9,
        format!("1000 cases, worst |D - grid| {worst:.1e}"),
    )
}

fn criterion_8() -> Verdict {
    let bad = (0..10_000u64)
        .into_par_iter()
        .filter(|&seed| {
            let (spec, lo, hi) = random_contract_case(seed);
            let cap = spec.loss(&spec.barrier_levels());
            let (a, b) = (
                payout(&spec, &lo).unwrap().amount,
                payout(&spec, &hi).unwrap().amount,
            );
            !(a <= b && a >= 0.0 && b <= cap)
        })
        .count();
    let spec = linear_scalar_contract();
    let uniform = ComponentLaw::Fitted {
        law: pv(
            DistributionId::Beta4,
            &[("alpha1", 1.0), ("alpha2", 1.0), ("a", 0.0), ("b", 0.004)],
        ),
    };
    let est = expected_payout_mc(&spec, &[uniform], 100_000, 20_200_124).unwrap();
    let z = (est.estimate - 1.75e6) / est.std_error;
    let xs: Vec<f64> = (1..=100).map(f64::from).collect();
    let es_ok = expected_shortfall(&xs, 0.95).unwrap() == 98.0
        && expected_shortfall(&[7.5; 20], 0.99).unwrap() == 7.5
        && expected_shortfall(&xs, 0.0).unwrap() == 50.5;
    verdict(
        bad == 0 && z.abs() <= 3.0 && es_ok,
        format!(
            "{bad}/10000 monotonicity or bound violations; uniform estimate {:.0} (z {z:.2}); shortfall hand cases {}",
            est.estimate,
            if es_ok { "exact" } else { "wrong" }
        ),
    )
}

fn tree(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9(d: &Data) -> Verdict {
    let data = d.cfg.data.display().to_string();
    let runs: Vec<(usize, tempfile::TempDir, bool)> = [1usize, 4]
        .into_iter()
        .map(|threads| {
            let dir = tempfile::tempdir().unwrap();
            let ok = std::process::Command::new(env!("CARGO_BIN_EXE_epirisk"))
                .args([
                    "all",
                    "--data",
                    &data,
                    "--threads",
                    &threads.to_string(),
                    "--out",
                ])
                .arg(dir.path())
                .arg("--population")
                .arg(&d.cfg.population)
                .stdout(std::process::Stdio::null())
                .status()
                .map(|s| s.success())
                .unwrap_or(false);
            (threads, dir, ok)
        })
        .collect();
    if let Some((t, _, _)) = runs.iter().find(|r| !r.2) {
        return verdict(false, format!("`all` with {t} thread(s) failed"));
    }
    let (a, b) = (tree(runs[0].1.path()), tree(runs[1].1.path()));
    let same = a == b;
    verdict(
        same,
        format!(
            "{} report files, 1 vs 4 workers {}",
            a.len(),
            if same { "byte-identical" } else { "differ" }
        ),
    )
}

fn main() {
    // `cargo test -- <filter>` passes arguments through; run everything
    // unless the filter names another target's test.
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }

    let d = data();
    let source = if d.real {
        "published snapshot"
    } else {
        "synthetic fixture"
    };
    let mut lines: Vec<(usize, Verdict, bool)> = Vec::new();
    match stage(&d) {
        Ok(s) => {
            lines.push((1, criterion_1(&s), d.real));
            lines.push((2, criterion_2(&s), d.real));
            lines.push((3, criterion_3(&s), d.real));
            lines.push((4, criterion_4(&s), d.real));
        }
        Err(e) => {
            for n in 1..=4 {
                lines.push((n, verdict(false, format!("pipeline failed: {e}")), d.real));
            }
        }
    }
    lines.push((5, criterion_5(), true));
    lines.push((6, criterion_6(), true));
    lines.push((7, criterion_7(), true));
    lines.push((8, criterion_8(), true));
    lines.push((9, criterion_9(&d), true));

    let mut failed = 0;
    for (n, v, enforced) in &lines {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if *enforced || *n > 4 {
            String::new()
        } else {
            format!(" [{source}, not enforced]")
        };
        println!("criterion {n}: {tag}{note}: {}", v.detail);
        if !v.pass && *enforced {
            failed += 1;
        }
    }
    let passed = lines.iter().filter(|l| l.1.pass).count();
    println!(
        "acceptance: {passed}/{} criteria pass on the {source}",
        lines.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
