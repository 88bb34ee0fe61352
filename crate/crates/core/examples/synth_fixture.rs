//! Writes the synthetic Hubei-like fixture used by the tests and the CLI
//! defaults.
//!
//! The series are simulated, not observed: a logistic epidemic curve per
//! city with Poisson noise on new cases, binomial deaths and recoveries out
//! of the active cases, and final totals and populations of the same order
//! as the public figures for the 17 prefecture-level divisions of Hubei.
//!
//!     cargo run --example synth_fixture -- crates/core/fixtures

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, LogNormal, Poisson};

const SEED: u64 = 20_200_123;
const DAYS: usize = 55; // 2020-01-23 ..= 2020-03-17
const WUHAN_JUMP_DAY: usize = 20; // 2020-02-12
const WUHAN_JUMP: u64 = 13_436;
const WUHAN_NO_DEATHS_DAY: usize = 29; // 2020-02-21

struct City {
    id: &'static str,
    population_k: f64,
    confirmed: u64,
    deaths: u64,
    midpoint: f64,
    spread: f64,
}

const fn city(
    id: &'static str,
    population_k: f64,
    confirmed: u64,
    deaths: u64,
    midpoint: f64,
    spread: f64,
) -> City {
    City {
        id,
        population_k,
        confirmed,
        deaths,
        midpoint,
        spread,
    }
}

const CITIES: [City; 17] = [
    city("wuhan", 11_081.0, 49_978, 2_469, 16.0, 4.5),
    city("huangshi", 2_471.7, 1_015, 39, 11.5, 3.6),
    city("shiyan", 3_406.0, 672, 8, 11.0, 3.4),
    city("yichang", 4_137.9, 931, 37, 12.5, 3.8),
    city("xiangyang", 5_680.0, 1_175, 40, 12.0, 3.5),
    city("ezhou", 1_076.9, 1_394, 59, 14.0, 4.0),
    city("jingmen", 2_901.5, 928, 41, 11.5, 3.7),
    city("xiaogan", 4_921.0, 3_518, 128, 11.0, 3.6),
    city("jingzhou", 5_570.1, 1_580, 51, 11.5, 3.5),
    city("huanggang", 6_333.0, 2_907, 125, 10.5, 3.4),
    city("xianning", 2_548.4, 836, 15, 10.5, 3.3),
    city("suizhou", 2_221.0, 1_307, 45, 11.0, 3.6),
    city("enshi", 3_361.0, 252, 7, 10.0, 3.2),
    city("xiantao", 1_140.1, 575, 22, 11.0, 3.5),
    city("qianjiang", 966.1, 198, 9, 11.5, 3.6),
    city("tianmen", 1_272.0, 496, 15, 11.5, 3.7),
    city("shennongjia", 76.8, 11, 0, 9.0, 3.0),
];

fn logistic(t: f64, mid: f64, spread: f64) -> f64 {
    1.0 / (1.0 + (-(t - mid) / spread).exp())
}

/// Daily recovery probability, rising as treatment capacity arrived.
fn recovery_prob(t: usize) -> f64 {
    0.004 + 0.10 * logistic(t as f64, 30.0, 4.0)
}

/// Relative death hazard, higher in the first days of the outbreak.
fn hazard_shape(t: usize) -> f64 {
    1.0 + 0.6 * (-(t as f64) / 8.0).exp()
}

struct Series {
    cc: Vec<u64>,
    cd: Vec<u64>,
    cr: Vec<u64>,
}

fn expected_new_cases(c: &City) -> Vec<f64> {
    let jump = if c.id == "wuhan" {
        WUHAN_JUMP as f64
    } else {
        0.0
    };
    let start = if c.id == "wuhan" {
        495.0
    } else {
        (c.confirmed as f64 * 0.004).round()
    };
    let curve_total = c.confirmed as f64 - jump - start;
    let lo = logistic(0.0, c.midpoint, c.spread);
    let hi = logistic((DAYS - 1) as f64, c.midpoint, c.spread);
    let mut out = vec![start];
    for t in 1..DAYS {
        let step = logistic(t as f64, c.midpoint, c.spread)
            - logistic((t - 1) as f64, c.midpoint, c.spread);
        let mut v = curve_total * step / (hi - lo);
        if t == WUHAN_JUMP_DAY {
            v += jump;
        }
        out.push(v);
    }
    out
}

/// Base death probability that makes the expected final deaths match the
/// city's target, given the expected active-case path.
fn calibrate(c: &City, new_cases: &[f64]) -> f64 {
    let mut active = 0.0;
    let mut exposure = 0.0;
    for (t, &n) in new_cases.iter().enumerate() {
        if t > 0 {
            exposure += hazard_shape(t) * active;
            active *= 1.0 - recovery_prob(t);
        }
        active += n;
    }
    if exposure > 0.0 {
        c.deaths as f64 / exposure
    } else {
        0.0
    }
}

fn simulate(c: &City, rng: &mut ChaCha8Rng) -> Series {
    let new_cases = expected_new_cases(c);
    let base = calibrate(c, &new_cases);
    let noise = LogNormal::new(-0.06, 0.35).expect("valid");
    let (mut cc, mut cd, mut cr) = (vec![new_cases[0] as u64], vec![0u64], vec![0u64]);
    if c.id == "wuhan" {
        cd[0] = 23;
        cr[0] = 31;
    }
    for t in 1..DAYS {
        let active = cc[t - 1] - cd[t - 1] - cr[t - 1];
        let lambda = new_cases[t] * noise.sample(rng);
        let fresh = if lambda > 0.0 {
            Poisson::new(lambda).expect("positive").sample(rng) as u64
        } else {
            0
        };
        let p_death = (base * hazard_shape(t) * noise.sample(rng)).min(0.5);
        let mut deaths = if active > 0 {
            Binomial::new(active, p_death)
                .expect("p in [0,1]")
                .sample(rng)
        } else {
            0
        };
        if c.id == "wuhan" && t == WUHAN_NO_DEATHS_DAY {
            deaths = 0;
        }
        let recovered = if active > deaths {
            Binomial::new(active - deaths, recovery_prob(t))
                .expect("p in [0,1]")
                .sample(rng)
        } else {
            0
        };
        cc.push(cc[t - 1] + fresh);
        cd.push(cd[t - 1] + deaths);
        cr.push(cr[t - 1] + recovered);
    }
    Series { cc, cd, cr }
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/fixtures".into())
        .into();
    fs::create_dir_all(&out).expect("create output directory");
    let start = NaiveDate::from_ymd_opt(2020, 1, 23).expect("valid date");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut cumulative = String::from("date,city,cum_confirmed,cum_deaths,cum_recovered\n");
    let mut population = String::from("city,population\n");
    for c in &CITIES {
        let mut city_rng = ChaCha8Rng::seed_from_u64(rng.random());
        let s = simulate(c, &mut city_rng);
        for t in 0..DAYS {
            let date = start + Days::new(t as u64);
            writeln!(
                cumulative,
                "{date},{},{},{},{}",
                c.id, s.cc[t], s.cd[t], s.cr[t]
            )
            .expect("string write");
        }
        writeln!(
            population,
            "{},{}",
            c.id,
            (c.population_k * 1000.0).round() as u64
        )
        .expect("string write");
    }
    fs::write(out.join("hubei_cumulative.csv"), cumulative).expect("write cumulative");
    fs::write(out.join("hubei_population.csv"), population).expect("write population");
    println!("wrote {}", out.display());
}
