//! Acceptance checks for the library and the runner. Prints one
//! `criterion N: PASS|FAIL` line per check and exits non-zero on any failure.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lfu_cli::cache;
use lfu_cli::config::{Config, RunSettings};
use lfu_cli::experiments::find;
use lfu_cli::{run_file, RunOptions};
use lfu_core::correl::{chebyshev_harness, two_point, union_bound_frequency};
use lfu_core::discrepancy::{dirichlet_approx, erdos_turan_bound, extreme_discrepancy, prime_orbit_test};
use lfu_core::dynamics::{dual_averages, liouville_sequence, BlockPartition, Rotation, SkewSystem, TorusPoint, UnitFrac};
use lfu_core::expsum::{certified_sup, window_sum, WindowSpec};
use lfu_core::liouville::{lambda_oracle, DEFAULT_CAP};
use lfu_core::setlib::{prime_volume_big, rigidity_profile_exact, CantorSpec, IntervalSet, RigiditySequence};
use lfu_core::LiouvilleTable;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIEVE_TIME: Duration = Duration::from_secs(60);
const CHOWLA_TIME: Duration = Duration::from_secs(300);
const TREND_TIME: Duration = Duration::from_secs(1800);
const CLOSED_FORM_TIME: Duration = Duration::from_secs(10);
const CHOWLA_FACTOR: f64 = 2.0;
const CHOWLA_CEILING: f64 = 0.02;
const TREND_RATIO: f64 = 0.5;
const DIMENSION_THRESHOLD: f64 = 0.5;
const KERNEL_TOL: f64 = 1e-10;
const DUAL_TOL: f64 = 0.05;
const SOUNDNESS_SLACK: f64 = 1e-12;
const RESONANCE_DISCREPANCY: f64 = 0.9;

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

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .expect("configs directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "conf"))
        .collect();
    files.sort();
    files
}

/// Largest `n` any shipped configuration reads, and at least `floor`.
fn sieve_limit(floor: u64) -> u64 {
    let mut limit = floor;
    for path in config_files() {
        let config = Config::from_file(&path).expect("config parses");
        let settings = RunSettings::from_config(&config).expect("settings");
        let job = find(&settings.experiment)
            .expect("experiment")
            .prepare(&config, path.parent().unwrap())
            .expect("prepare");
        limit = limit.max(job.needed());
    }
    limit
}

fn criterion_1(table: &LiouvilleTable) -> Verdict {
    let start = Instant::now();
    let mismatches = (1..=1_000_000u64)
        .filter(|&n| table.lambda(n) != lambda_oracle(n))
        .count();
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && elapsed < SIEVE_TIME,
        format!("{mismatches} mismatches for n <= 10^6 in {elapsed:.1?}"),
    )
}

fn criterion_2(table: &LiouvilleTable) -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for h in 1..=5i64 {
        let rep = two_point(table, h, &[1_000, 100_000, 10_000_000]).expect("two point");
        let oracle: i64 = (1..=1_000u64)
            .map(|n| lambda_oracle(n) as i64 * lambda_oracle(n + h as u64) as i64)
            .sum();
        let (small, large) = (rep.values[1].abs(), rep.values[2].abs());
        let ok = rep.sums[0] == oracle && small >= CHOWLA_FACTOR * large && large < CHOWLA_CEILING;
        pass &= ok;
        parts.push(format!("h={h}: {small:.5} -> {large:.5}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < CHOWLA_TIME;
    verdict(pass, format!("{} in {elapsed:.1?}", parts.join(", ")))
}

fn criterion_3(table: &LiouvilleTable) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    for _ in 0..100 {
        let h = rng.gen_range(2..=64usize);
        let eps = rng.gen_range(0.05..0.6);
        let scale = rng.gen_range(1_000..=50_000u64);
        let phases: Vec<Complex64> = (0..h)
            .map(|_| Complex64::from_polar(rng.gen::<f64>(), TAU * rng.gen::<f64>()))
            .collect();
        let rep = chebyshev_harness(table, h, eps, &phases, scale).expect("harness");
        if rep.empirical_fraction > rep.second_moment_bound {
            failures += 1;
        }
        let t = rng.gen_range(1..=2u32);
        let grid: Vec<f64> = (0..rng.gen_range(1..=8)).map(|_| rng.gen()).collect();
        let u = union_bound_frequency(table, &grid, h, t, eps, scale).expect("union bound");
        let max_single = u.single_fractions.iter().copied().fold(0.0, f64::max);
        if u.joint_fraction > u.single_sum || max_single > u.joint_fraction {
            failures += 1;
        }
    }
    verdict(failures == 0, format!("{failures} violations over 100 instances"))
}

/// Short separated intervals so the certified grid runs point by point.
fn random_set(rng: &mut ChaCha8Rng, delta: f64) -> IntervalSet {
    let mut raw = Vec::new();
    let mut cursor = 0.0f64;
    for _ in 0..rng.gen_range(1..=4) {
        let a = cursor + delta * (2.0 + rng.gen::<f64>() * 1000.0);
        let b = a + rng.gen::<f64>() * 200.0 * delta;
        if b >= 1.0 {
            break;
        }
        raw.push((a, b));
        cursor = b;
    }
    IntervalSet::from_f64(&raw).expect("valid set")
}

fn criterion_4(table: &LiouvilleTable) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let eps = 1e-3;
    let mut failures = 0;
    let mut points = 0u64;
    for _ in 0..100 {
        let m = rng.gen_range(0..1_000_000u64);
        let h = rng.gen_range(1..=256usize);
        let t = rng.gen_range(1..=2u32);
        let delta = eps / (TAU * (h as f64).powi(t as i32));
        let set = random_set(&mut rng, delta);
        let spec = WindowSpec::new(h, t).expect("spec");
        let est = certified_sup(table, m, &spec, &set, eps).expect("sup");
        let step = delta / 64.0;
        let mut fine = 0.0f64;
        for &(a, b) in set.approx() {
            let mut i = 0u64;
            loop {
                let q = (a + i as f64 * step).min(b);
                fine = fine.max(window_sum(table, m, &spec, q).expect("window").norm());
                points += 1;
                if q >= b {
                    break;
                }
                i += 1;
            }
        }
        if !(est.lower <= fine + SOUNDNESS_SLACK && fine <= est.upper) {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("{failures} failures over 100 instances, {points} fine points"),
    )
}

/// `set -> [(H, value)]` from a trend CSV with a leading `set` column.
fn trend_curves(path: &Path) -> BTreeMap<String, Vec<(u64, f64)>> {
    let text = std::fs::read_to_string(path).expect("trend csv");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let col = |name: &str| header.iter().position(|&c| c == name).expect("column");
    let (set, h, value) = (col("set"), col("H"), col("value"));
    let mut out: BTreeMap<String, Vec<(u64, f64)>> = BTreeMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        out.entry(f[set].to_string())
            .or_default()
            .push((f[h].parse().unwrap(), f[value].parse().unwrap()));
    }
    for curve in out.values_mut() {
        curve.sort_by_key(|&(h, _)| h);
    }
    out
}

/// `set -> box_dimension` from `sets.csv`.
fn box_dimensions(path: &Path) -> BTreeMap<String, f64> {
    let text = std::fs::read_to_string(path).expect("sets csv");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let dim = header.iter().position(|&c| c == "box_dimension").expect("column");
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (f[0].to_string(), f[dim].parse().unwrap())
        })
        .collect()
}

fn strictly_decreasing(curve: &[(u64, f64)]) -> bool {
    curve.windows(2).all(|w| w[1].1 < w[0].1)
}

fn ratio(curve: &[(u64, f64)]) -> f64 {
    curve.last().unwrap().1 / curve[0].1
}

fn criterion_5(dir: &Path, elapsed: Duration) -> Verdict {
    let curves = trend_curves(&dir.join("fourier-trend.csv"));
    let dims = box_dimensions(&dir.join("sets.csv"));
    let (Some(thin), Some(full)) = (curves.get("cantor4"), curves.get("full")) else {
        return verdict(false, "missing cantor4 or full curve");
    };
    let hs: Vec<u64> = thin.iter().map(|&(h, _)| h).collect();
    let measure_zero = std::fs::read_to_string(dir.join("sets.csv"))
        .unwrap()
        .lines()
        .find(|l| l.starts_with("cantor4,"))
        .and_then(|l| l.split(',').nth(3).map(|m| m.parse::<f64>().unwrap() < 1e-2))
        .unwrap_or(false);
    let (rt, rf) = (ratio(thin), ratio(full));
    let pass = hs == [64, 256, 1024, 4096]
        && measure_zero
        && strictly_decreasing(thin)
        && rt <= TREND_RATIO
        && rf > rt
        && elapsed < TREND_TIME;
    verdict(
        pass,
        format!(
            "cantor level 4 {:.4} -> {:.4} (ratio {rt:.3}), full {:.4} -> {:.4} (ratio {rf:.3}), box dim {:.3}",
            thin[0].1,
            thin.last().unwrap().1,
            full[0].1,
            full.last().unwrap().1,
            dims.get("cantor4").copied().unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_6(dir: &Path) -> Verdict {
    let curves = trend_curves(&dir.join("poly-trend.csv"));
    let dims = box_dimensions(&dir.join("sets.csv"));
    let (Some(thin), Some(thick)) = (curves.get("thin"), curves.get("thick")) else {
        return verdict(false, "missing thin or thick curve");
    };
    let (dt, dk) = (dims["thin"], dims["thick"]);
    let matched = thin.iter().map(|p| p.0).eq(thick.iter().map(|p| p.0));
    let higher = thin.iter().zip(thick).all(|(a, b)| b.1 > a.1);
    let (rt, rk) = (ratio(thin), ratio(thick));
    let pass = dt < DIMENSION_THRESHOLD
        && dk > DIMENSION_THRESHOLD
        && matched
        && strictly_decreasing(thin)
        && rt <= TREND_RATIO
        && higher
        && rk > rt;
    verdict(
        pass,
        format!(
            "dim {dt:.3}: {:.4} -> {:.4} (ratio {rt:.3}); dim {dk:.3}: {:.4} -> {:.4} (ratio {rk:.3})",
            thin[0].1,
            thin.last().unwrap().1,
            thick[0].1,
            thick.last().unwrap().1
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let frac = |rng: &mut ChaCha8Rng| {
        let den = rng.gen_range(1..10_000u128);
        UnitFrac::new(rng.gen_range(0..den), den).expect("fraction")
    };
    let start = Instant::now();
    let mut failures = 0;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=6usize);
        let alpha = frac(&mut rng);
        let x = TorusPoint::Rational((0..d).map(|_| frac(&mut rng)).collect());
        let sys = SkewSystem::new(d, Rotation::Rational(alpha)).expect("system");
        let n = rng.gen_range(0..=10_000u64);
        let mut y = x.clone();
        for _ in 0..n {
            y = sys.step(&y).expect("step");
        }
        if sys.iterate_closed_form(&x, n).expect("closed form") != y {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        failures == 0 && elapsed < CLOSED_FORM_TIME,
        format!("{failures} mismatches over 1000 instances in {elapsed:.1?}"),
    )
}

/// Deepest enumerated level of each spec must satisfy its own rigidity bound.
fn rigidity_holds(spec: &CantorSpec, depth: usize) -> (bool, usize) {
    let q = RigiditySequence::dyadic(spec);
    let mut ok = true;
    for n in 0..=depth {
        let set = spec.level(n).expect("level");
        let profile = rigidity_profile_exact(&set, &q).expect("profile");
        ok &= profile[n] <= spec.levels()[n].1;
    }
    (ok, depth + 1)
}

fn criterion_8() -> Verdict {
    let demo = CantorSpec::default_demo();
    let (demo_ok, demo_levels) = rigidity_holds(&demo, 1);
    let thin = CantorSpec::new(
        [(6u32, "1/100"), (14, "8/1000"), (22, "7/1000"), (31, "6/1000"), (40, "5/1000")]
            .iter()
            .map(|&(k, d)| (k, d.parse::<BigRational>().unwrap()))
            .collect(),
    )
    .expect("thin spec");
    let (thin_ok, thin_levels) = rigidity_holds(&thin, 4);
    let half: BigRational = "1/2".parse().unwrap();
    let volumes_ok = RigiditySequence::dyadic(&demo)
        .terms()
        .iter()
        .all(|q| prime_volume_big(q).expect("volume") == half);
    let bounds: Vec<f64> = (2..=5)
        .map(|n| demo.hausdorff_lower_bound(n).expect("bound"))
        .collect();
    let monotone = bounds.windows(2).all(|w| w[1] > w[0]) && bounds.iter().all(|&b| b < 1.0);
    verdict(
        demo_ok && thin_ok && volumes_ok && monotone,
        format!(
            "rigidity exact on {demo_levels} demo and {thin_levels} thin levels, prime volume 1/2: {volumes_ok}, \
             hausdorff bounds {bounds:.4?}"
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut et_failures = 0;
    for i in 0..100 {
        let k = rng.gen_range(1..=1000usize);
        let k_max = rng.gen_range(1..=64u64);
        let points: Vec<f64> = if i % 2 == 0 {
            (0..k).map(|_| rng.gen()).collect()
        } else {
            let alpha: f64 = rng.gen();
            (1..=k).map(|n| (n as f64 * alpha).fract()).collect()
        };
        if extreme_discrepancy(&points).unwrap() > erdos_turan_bound(&points, k_max).unwrap() {
            et_failures += 1;
        }
    }
    let mut dirichlet_failures = 0;
    for _ in 0..1000 {
        let alpha: f64 = rng.gen();
        let q = rng.gen_range(1..=10_000u64);
        let r = dirichlet_approx(alpha, q).unwrap();
        if !(1 <= r.l && r.l <= q && r.error * ((r.l * q) as f64) < 1.0) {
            dirichlet_failures += 1;
        }
    }
    let rec = prime_orbit_test(0.5, 10_000, 0.5, 1.0).unwrap();
    let resonance_ok = rec.resonance == Some((2, 0.0)) && rec.discrepancy > RESONANCE_DISCREPANCY;
    verdict(
        et_failures == 0 && dirichlet_failures == 0 && resonance_ok,
        format!(
            "{et_failures} ET failures, {dirichlet_failures} Dirichlet failures, alpha = 1/2: resonance {:?}, \
             discrepancy {:.4}",
            rec.resonance, rec.discrepancy
        ),
    )
}

fn criterion_10(table: &LiouvilleTable) -> Verdict {
    let (theta, h) = (0.3, 100usize);
    let m = 100_000u64;
    let z: Vec<Complex64> = (1..=m + h as u64)
        .map(|n| Complex64::from_polar(1.0, TAU * (n as f64 * theta).fract()))
        .collect();
    let p = BlockPartition::squares(m + h as u64).unwrap();
    let rotation = dual_averages(&z, h, m, &p).unwrap();
    let kernel = ((PI * h as f64 * theta).sin() / (h as f64 * (PI * theta).sin())).abs();
    let kernel_err = (rotation.window - kernel).abs();

    let (m, h) = (1_000_000u64, 1000usize);
    let z = liouville_sequence(table, m + h as u64).unwrap();
    let p = BlockPartition::squares(m + h as u64).unwrap();
    let lam = dual_averages(&z, h, m, &p).unwrap();
    let gap = (lam.window - lam.block).abs();
    verdict(
        kernel_err < KERNEL_TOL && gap < DUAL_TOL,
        format!(
            "kernel error {kernel_err:.2e}; λ window {:.4} vs block {:.4} over {} blocks",
            lam.window, lam.block, lam.blocks
        ),
    )
}

/// Runs every shipped configuration with `workers`, returning the output root.
fn run_suite(root: &Path, cache_dir: &Path, workers: usize) -> Result<Duration, String> {
    let mut trend = Duration::ZERO;
    for path in config_files() {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let options = RunOptions {
            dry_run: false,
            workers: Some(workers),
            out: Some(root.join(&name)),
            cache_dir: cache_dir.to_path_buf(),
        };
        let start = Instant::now();
        run_file(&path, &options).map_err(|e| format!("{name}: {e}"))?;
        if name == "fourier-trend" {
            trend = start.elapsed();
        }
    }
    Ok(trend)
}

/// Relative path -> bytes of every CSV below `root`.
fn csv_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "csv") {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_11(single: &Path, cache_dir: &Path, scratch: &Path) -> Verdict {
    let eight = scratch.join("workers-8");
    if let Err(e) = run_suite(&eight, cache_dir, 8) {
        return verdict(false, format!("run failed: {e}"));
    }
    let (a, b) = (csv_files(single), csv_files(&eight));
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    verdict(
        differing.is_empty() && !a.is_empty(),
        format!("{} CSV files compared, differing: {differing:?}", a.len()),
    )
}

fn report(n: usize, v: &Verdict, failed: &mut bool) {
    println!("criterion {n}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    *failed |= !v.pass;
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("tempdir");
    let cache_dir = scratch.path().join("cache");
    let limit = sieve_limit(10_000_005);
    cache::sieve(&cache_dir, limit, DEFAULT_CAP, false).expect("sieve");
    let (table, _) = cache::load(&cache_dir).expect("cache loads");

    let mut failed = false;
    report(1, &criterion_1(&table), &mut failed);
    report(2, &criterion_2(&table), &mut failed);
    report(3, &criterion_3(&table), &mut failed);
    report(4, &criterion_4(&table), &mut failed);

    let single = scratch.path().join("workers-1");
    match run_suite(&single, &cache_dir, 1) {
        Ok(trend_time) => {
            report(5, &criterion_5(&single.join("fourier-trend"), trend_time), &mut failed);
            report(6, &criterion_6(&single.join("poly-trend")), &mut failed);
        }
        Err(e) => {
            report(5, &verdict(false, format!("run failed: {e}")), &mut failed);
            report(6, &verdict(false, format!("run failed: {e}")), &mut failed);
        }
    }
    report(7, &criterion_7(), &mut failed);
    report(8, &criterion_8(), &mut failed);
    report(9, &criterion_9(), &mut failed);
    report(10, &criterion_10(&table), &mut failed);
    report(11, &criterion_11(&single, &cache_dir, scratch.path()), &mut failed);

    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
