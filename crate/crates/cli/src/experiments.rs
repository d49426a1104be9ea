//! Experiment registry. Each experiment parses its keys, reports the table
//! size it needs, and produces its output files in memory; the runner
//! writes them.

use std::fmt::Write as _;
use std::path::Path;

use lfu_core::correl::{chebyshev_harness, polynomial_phases, two_point, union_bound_frequency, FrequencyReport};
use lfu_core::discrepancy::{prime_log_volume, prime_orbit_test, prime_reciprocal_sum, PrimeOrbitRecord};
use lfu_core::dynamics::{
    dual_averages, last_coordinate_character, liouville_sequence, lomo_block_average, BlockPartition,
    LomoRecord, Rotation, SkewSystem, TorusPoint,
};
use lfu_core::expsum::{average_sup, AverageMode, AverageOptions, Sampling, ScaleAverageReport, WindowSpec, DEFAULT_GRID_BUDGET};
use lfu_core::setlib::{
    format_rational, prime_volume_big, rigidity_profile_exact, CantorSpec, RigiditySequence, DEFAULT_INTERVAL_CAP,
};
use lfu_core::LiouvilleTable;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_f64, Config};
use crate::error::{CliError, CliResult};
use crate::sets::{resolve, NamedSet};

/// One output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub file: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(file: impl Into<String>, text: String) -> Self {
        Self {
            file: file.into(),
            bytes: text.into_bytes(),
        }
    }
}

/// Output files plus the experiment-specific part of `summary.json`.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub results: Value,
}

/// Inputs shared by every job.
pub struct RunContext<'a> {
    pub table: Option<&'a LiouvilleTable>,
    pub workers: usize,
    pub seed: u64,
}

impl RunContext<'_> {
    fn table(&self) -> &LiouvilleTable {
        self.table.expect("runner loads the table for jobs that need it")
    }
}

pub trait Job: Send + Sync {
    /// Largest `n` read from the `λ` table; `0` when no table is used.
    fn needed(&self) -> u64;
    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Outcome>;
}

type Prepare = fn(&Config, &Path) -> CliResult<Box<dyn Job>>;

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    /// The mathematical statement the experiment probes.
    pub paper_ref: &'static str,
    pub keys: &'static [&'static str],
    prepare: Prepare,
}

impl Experiment {
    pub fn prepare(&self, config: &Config, base: &Path) -> CliResult<Box<dyn Job>> {
        (self.prepare)(config, base)
    }
}

const TREND_KEYS: &[&str] = &["scales", "windows", "t", "eps", "strata", "mode", "budget", "sets", "set.*"];

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "fourier-trend",
        description: "averaged certified sup over a phase set of linear-phase windows, against H",
        paper_ref: "If C is a closed subset of the circle of Lebesgue measure zero, then \
            E_{m<=M} sup_{alpha in C} |E_{h<=H} λ(m+h) e(alpha h)| tends to 0 as H -> infinity \
            with H = o(M); for C the full circle this is the open local Fourier uniformity conjecture.",
        keys: TREND_KEYS,
        prepare: |c, b| Ok(Box::new(Trend::parse(c, b, 1, &[64, 256, 1024, 4096], 64)?)),
    },
    Experiment {
        name: "poly-trend",
        description: "averaged certified sup over a phase set of degree-t phases, against H",
        paper_ref: "If C has upper box-counting dimension below 1/t, then \
            E_{m<=M} sup_{alpha in C} |E_{h<=H} λ(m+h) e(alpha h^t)| tends to 0 as H -> infinity \
            with H = o(M).",
        keys: TREND_KEYS,
        prepare: |c, b| Ok(Box::new(Trend::parse(c, b, 2, &[16, 32, 64, 128, 256], 32)?)),
    },
    Experiment {
        name: "chowla",
        description: "two-point correlations E_{m<=M} λ(m) λ(m+h)",
        paper_ref: "For each fixed h != 0, the logarithmic two-point correlation of λ at shift h \
            tends to 0; Cesàro averages are expected to do the same.",
        keys: &["shifts", "scales"],
        prepare: |c, _| Ok(Box::new(Chowla::parse(c)?)),
    },
    Experiment {
        name: "frequency",
        description: "Chebyshev second-moment bound and union bound for large window sums",
        paper_ref: "The density of m <= M with |E_{h<=H} λ(m+h) z_h| >= eps is at most \
            (eps H)^-2 sum_{|d|<H} (H-|d|) |c(d)| + eps^-2 H/M, and the joint density over a \
            finite frequency grid is at most the sum of single densities.",
        keys: &["windows", "eps", "scale", "t", "alpha", "grid"],
        prepare: |c, _| Ok(Box::new(Frequency::parse(c)?)),
    },
    Experiment {
        name: "prime-orbit",
        description: "discrepancy of {p alpha} over primes and small-denominator resonances",
        paper_ref: "If the primes p <= P fail to equidistribute {p alpha} at scale eps, then \
            ||l alpha|| <<_eps 1/P for some l <<_eps 1.",
        keys: &["alphas", "bounds", "eps", "c0", "interval"],
        prepare: |c, _| Ok(Box::new(PrimeOrbit::parse(c)?)),
    },
    Experiment {
        name: "cantor",
        description: "levels, rigidity and dimension bounds of an intersective Cantor construction",
        paper_ref: "There is a closed set C of Hausdorff dimension 1 and a sequence q_n of \
            bounded prime volume with ||q_n alpha|| -> 0 uniformly on C.",
        keys: &["level.*", "enumerate_to", "cap"],
        prepare: |c, _| Ok(Box::new(Cantor::parse(c)?)),
    },
    Experiment {
        name: "lomo",
        description: "block-partitioned λ-weighted averages along skew-product orbits",
        paper_ref: "For every block partition of density zero, every nilsystem orbit family and \
            every continuous observable f, (1/b_K) sum_{k<K} |sum_{b_k<=n<b_{k+1}} f(T^n x_k) λ(n)| -> 0.",
        keys: &["partition", "partition_path", "max", "blocks", "dim", "alpha", "mode", "starts"],
        prepare: |c, b| Ok(Box::new(Lomo::parse(c, b)?)),
    },
    Experiment {
        name: "dual-averages",
        description: "window averages against block averages of one sequence",
        paper_ref: "For a bounded sequence z, E_{m<=M} |E_{h<=H} z_{m+h}| -> 0 along H -> infinity \
            if and only if the block averages (1/b_K) sum_k |sum_{b_k<=n<b_{k+1}} z_n| vanish for \
            every partition of density zero.",
        keys: &["source", "theta", "windows", "scale", "partition", "partition_path"],
        prepare: |c, b| Ok(Box::new(Dual::parse(c, b)?)),
    },
];

pub fn find(name: &str) -> CliResult<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        CliError::Config(format!(
            "unknown experiment {name:?}; available: {}",
            names.join(", ")
        ))
    })
}

/// `golden`, `sqrt2`, `p/q` or a decimal.
pub fn parse_alpha(text: &str) -> Option<f64> {
    match text.trim() {
        "golden" => Some((5f64.sqrt() - 1.0) / 2.0),
        "sqrt2" => Some(2f64.sqrt() - 1.0),
        other => parse_f64(other),
    }
}

fn alpha_list(config: &Config, key: &str, default: &[&str]) -> CliResult<Vec<(String, f64)>> {
    config
        .list_or(key, default)
        .into_iter()
        .map(|s| match parse_alpha(&s) {
            Some(a) => Ok((s, a)),
            None => Err(CliError::Config(format!("{key}: cannot parse {s:?} as a frequency"))),
        })
        .collect()
}

fn positive(key: &str, values: &[u64]) -> CliResult<()> {
    if values.is_empty() || values.contains(&0) {
        return Err(CliError::Config(format!("{key} must be positive integers")));
    }
    Ok(())
}

fn usize_list(config: &Config, key: &str, default: &[u64]) -> CliResult<Vec<usize>> {
    let v = config.u64_list_or(key, default)?;
    positive(key, &v)?;
    Ok(v.into_iter().map(|x| x as usize).collect())
}

fn partition(config: &Config, base: &Path, max: u64) -> CliResult<(String, BlockPartition)> {
    let name = config.str_or("partition", "squares").to_string();
    let p = if name == "file" {
        let rel = config.require("partition_path")?;
        let path = base.join(rel);
        let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
        BlockPartition::parse(&text)?
    } else {
        BlockPartition::named(&name, max)?
    };
    Ok((name, p))
}

fn gnuplot_header(title: &str, xlabel: &str, ylabel: &str, log: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    if !log.is_empty() {
        let _ = writeln!(s, "set logscale {log}");
    }
    let _ = writeln!(s, "set key outside right");
    s
}

struct Trend {
    experiment: &'static str,
    scales: Vec<u64>,
    windows: Vec<usize>,
    degree: u32,
    mode: AverageMode,
    eps: f64,
    sampling: Sampling,
    budget: u64,
    sets: Vec<NamedSet>,
}

impl Trend {
    fn parse(config: &Config, base: &Path, t: u32, windows: &[u64], strata: u64) -> CliResult<Self> {
        let scales = config.u64_list_or("scales", &[10_000_000])?;
        positive("scales", &scales)?;
        let windows = usize_list(config, "windows", windows)?;
        let degree = config.u64_or("t", t as u64)?;
        if !(1..=6).contains(&degree) {
            return Err(CliError::Config("t must lie in 1..=6".into()));
        }
        let eps = config.f64_or("eps", 1e-2)?;
        if !(eps > 0.0) {
            return Err(CliError::Config("eps must be positive".into()));
        }
        let strata = config.u64_or("strata", strata)?;
        let sampling = if strata == 0 {
            Sampling::Exhaustive
        } else {
            Sampling::Strata(strata as usize)
        };
        let mode = AverageMode::parse(config.str_or("mode", "cesaro"))?;
        let budget = config.u64_or("budget", DEFAULT_GRID_BUDGET)?;
        let names = config.list_or("sets", &[]);
        if names.is_empty() {
            return Err(CliError::Config("missing key sets".into()));
        }
        let sets = names
            .iter()
            .map(|n| resolve(config, n, base))
            .collect::<CliResult<Vec<_>>>()?;
        let experiment = if t == 1 { "fourier-trend" } else { "poly-trend" };
        Ok(Self {
            experiment,
            scales,
            windows,
            degree: degree as u32,
            mode,
            eps,
            sampling,
            budget,
            sets,
        })
    }
}

impl Job for Trend {
    fn needed(&self) -> u64 {
        self.scales.iter().max().copied().unwrap_or(0) + self.windows.iter().max().copied().unwrap_or(0) as u64
    }

    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Outcome> {
        let table = ctx.table();
        let options = AverageOptions {
            eps: self.eps,
            budget: self.budget,
            sampling: self.sampling,
            workers: ctx.workers,
        };
        let mut csv = format!("set,{}\n", ScaleAverageReport::CSV_HEADER);
        let mut sets_csv = format!("{}\n", NamedSet::CSV_HEADER);
        let mut results = Vec::new();
        let top = *self.scales.iter().max().expect("nonempty");
        for named in &self.sets {
            sets_csv.push_str(&named.csv_row());
            let mut at_top = Vec::new();
            for &h in &self.windows {
                let spec = WindowSpec::new(h, self.degree)?;
                let report = average_sup(table, &named.set, &spec, &self.scales, self.mode, &options)?;
                for line in report.csv_rows().lines() {
                    let _ = writeln!(csv, "{},{line}", named.name);
                }
                let i = self.scales.iter().position(|&s| s == top).expect("top scale");
                at_top.push(json!({"H": h, "value": report.values[i]}));
            }
            let first = at_top[0]["value"].as_f64().unwrap_or(f64::NAN);
            let last = at_top[at_top.len() - 1]["value"].as_f64().unwrap_or(f64::NAN);
            results.push(json!({
                "set": named.name,
                "kind": named.kind,
                "intervals": named.set.len(),
                "measure": named.set.measure_f64(),
                "box_dimension": named.box_dimension,
                "M": top,
                "values": at_top,
                "last_over_first": last / first,
            }));
        }
        let mut gp = gnuplot_header(
            &format!("{}: t = {}, M = {top}", self.experiment, self.degree),
            "H",
            "E_m sup_C |window|",
            "xy",
        );
        let plots: Vec<String> = self
            .sets
            .iter()
            .map(|s| {
                format!(
                    "'{}.csv' using 4:((strcol(1) eq '{}' && $2 == {top}) ? $6 : 1/0) with linespoints title '{}'",
                    self.experiment, s.name, s.name
                )
            })
            .collect();
        let _ = writeln!(gp, "plot {}", plots.join(", \\\n     "));
        Ok(Outcome {
            artifacts: vec![
                Artifact::new(format!("{}.csv", self.experiment), csv),
                Artifact::new("sets.csv", sets_csv),
                Artifact::new(format!("{}.gp", self.experiment), gp),
            ],
            results: json!({ "sets": results, "eps": self.eps, "t": self.degree, "mode": self.mode.name() }),
        })
    }
}

struct Chowla {
    shifts: Vec<i64>,
    scales: Vec<u64>,
}

impl Chowla {
    fn parse(config: &Config) -> CliResult<Self> {
        let shifts = config.i64_list_or("shifts", &[1, 2, 3, 4, 5])?;
        if shifts.is_empty() || shifts.contains(&0) {
            return Err(CliError::Config("shifts must be nonzero integers".into()));
        }
        let scales = config.u64_list_or("scales", &[10_000, 100_000, 1_000_000, 10_000_000])?;
        positive("scales", &scales)?;
        Ok(Self { shifts, scales })
    }
}

impl Job for Chowla {
    fn needed(&self) -> u64 {
        let m = self.scales.iter().max().copied().unwrap_or(0);
        let h = self.shifts.iter().copied().max().unwrap_or(0).max(0) as u64;
        m + h
    }

    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Outcome> {
        let reports = self
            .shifts
            .par_iter()
            .map(|&h| two_point(ctx.table(), h, &self.scales))
            .collect::<lfu_core::Result<Vec<_>>>()?;
        let mut csv = format!("{}\n", lfu_core::correl::CorrelationReport::CSV_HEADER);
        let mut results = Vec::new();
        for r in &reports {
            csv.push_str(&r.csv_rows());
            results.push(json!({
                "h": r.shift,
                "scales": r.scales,
                "sums": r.sums,
                "values": r.values,
            }));
        }
        let mut gp = gnuplot_header("two-point correlations", "M", "|E_m λ(m) λ(m+h)|", "xy");
        let plots: Vec<String> = self
            .shifts
            .iter()
            .map(|h| format!("'chowla.csv' using 2:(($1 == {h}) ? abs($3) : 1/0) with linespoints title 'h = {h}'"))
            .collect();
        let _ = writeln!(gp, "plot {}", plots.join(", \\\n     "));
        Ok(Outcome {
            artifacts: vec![Artifact::new("chowla.csv", csv), Artifact::new("chowla.gp", gp)],
            results: json!({ "shifts": results }),
        })
    }
}

struct Frequency {
    windows: Vec<usize>,
    eps: Vec<f64>,
    scale: u64,
    degree: u32,
    alpha: Option<f64>,
    grid: usize,
}

impl Frequency {
    fn parse(config: &Config) -> CliResult<Self> {
        let windows = usize_list(config, "windows", &[16, 64, 256])?;
        let eps = config.f64_list_or("eps", &[0.1, 0.2])?;
        if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) {
            return Err(CliError::Config("eps must be positive reals".into()));
        }
        let scale = config.u64_or("scale", 1_000_000)?;
        positive("scale", &[scale])?;
        let degree = config.u64_or("t", 1)?;
        if !(1..=6).contains(&degree) {
            return Err(CliError::Config("t must lie in 1..=6".into()));
        }
        let alpha = match config.get("alpha") {
            None => None,
            Some(v) => Some(parse_alpha(v).ok_or_else(|| CliError::Config(format!("alpha = {v:?}: not a frequency")))?),
        };
        let grid = config.u64_or("grid", 16)? as usize;
        if grid == 0 {
            return Err(CliError::Config("grid must be positive".into()));
        }
        Ok(Self {
            windows,
            eps,
            scale,
            degree: degree as u32,
            alpha,
            grid,
        })
    }
}

impl Job for Frequency {
    fn needed(&self) -> u64 {
        self.scale + self.windows.iter().max().copied().unwrap_or(0) as u64
    }

    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Outcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let alpha = self.alpha.unwrap_or_else(|| rng.gen::<f64>());
        let grid: Vec<f64> = (0..self.grid).map(|_| rng.gen::<f64>()).collect();
        let cases: Vec<(usize, f64)> = self
            .windows
            .iter()
            .flat_map(|&h| self.eps.iter().map(move |&e| (h, e)))
            .collect();
        let table = ctx.table();
        let rows = cases
            .par_iter()
            .map(|&(h, e)| {
                let phases = polynomial_phases(alpha, h, self.degree);
                let single = chebyshev_harness(table, h, e, &phases, self.scale)?;
                let union = union_bound_frequency(table, &grid, h, self.degree, e, self.scale)?;
                Ok((single, union))
            })
            .collect::<lfu_core::Result<Vec<_>>>()?;
        let mut csv = format!("{}\n", FrequencyReport::CSV_HEADER);
        let mut ucsv = String::from("H,eps,M,grid,joint,single_sum\n");
        let mut results = Vec::new();
        for ((h, e), (single, union)) in cases.iter().zip(&rows) {
            csv.push_str(&single.csv_row());
            let _ = writeln!(
                ucsv,
                "{h},{e},{},{},{},{}",
                self.scale,
                grid.len(),
                union.joint_fraction,
                union.single_sum
            );
            results.push(json!({
                "H": h, "eps": e,
                "empirical": single.empirical_fraction,
                "bound": single.second_moment_bound,
                "joint": union.joint_fraction,
                "single_sum": union.single_sum,
            }));
        }
        let mut gp = gnuplot_header(&format!("exceedance density, M = {}", self.scale), "H", "density", "xy");
        let _ = writeln!(
            gp,
            "plot 'frequency.csv' using 1:4 with points title 'empirical', \\\n     'frequency.csv' using 1:5 with points title 'Chebyshev bound'"
        );
        Ok(Outcome {
            artifacts: vec![
                Artifact::new("frequency.csv", csv),
                Artifact::new("union_bound.csv", ucsv),
                Artifact::new("frequency.gp", gp),
            ],
            results: json!({ "alpha": alpha, "grid": grid, "t": self.degree, "cases": results }),
        })
    }
}

struct PrimeOrbit {
    alphas: Vec<(String, f64)>,
    bounds: Vec<u64>,
    eps: f64,
    c0: f64,
    interval: (f64, f64),
}

impl PrimeOrbit {
    fn parse(config: &Config) -> CliResult<Self> {
        let alphas = alpha_list(config, "alphas", &["1/2", "1/3", "golden", "sqrt2"])?;
        let bounds = config.u64_list_or("bounds", &[10_000, 100_000, 1_000_000])?;
        if bounds.iter().any(|&p| p < 3) {
            return Err(CliError::Config("bounds must be at least 3".into()));
        }
        let eps = config.f64_or("eps", 0.5)?;
        let c0 = config.f64_or("c0", 1.0)?;
        if !(eps > 0.0 && eps < 1.0) || !(c0 > 0.0) {
            return Err(CliError::Config("need 0 < eps < 1 and c0 > 0".into()));
        }
        let iv = config.f64_list_or("interval", &[0.0, 0.5])?;
        if iv.len() != 2 || !(0.0 <= iv[0] && iv[0] < iv[1] && iv[1] <= 1.0) {
            return Err(CliError::Config("interval must be `a, b` with 0 <= a < b <= 1".into()));
        }
        Ok(Self {
            alphas,
            bounds,
            eps,
            c0,
            interval: (iv[0], iv[1]),
        })
    }
}

impl Job for PrimeOrbit {
    fn needed(&self) -> u64 {
        0
    }

    fn run(&self, _ctx: &RunContext<'_>) -> CliResult<Outcome> {
        let cases: Vec<(usize, u64)> = (0..self.alphas.len())
            .flat_map(|i| self.bounds.iter().map(move |&p| (i, p)))
            .collect();
        let (a, b) = self.interval;
        let rows = cases
            .par_iter()
            .map(|&(i, p)| {
                let alpha = self.alphas[i].1;
                let rec = prime_orbit_test(alpha, p, self.eps, self.c0)?;
                let vol = prime_log_volume(alpha, p, a, b)?;
                Ok((rec, vol, (b - a) * prime_reciprocal_sum(p)))
            })
            .collect::<lfu_core::Result<Vec<(PrimeOrbitRecord, f64, f64)>>>()?;
        let mut csv = format!("name,{}\n", PrimeOrbitRecord::CSV_HEADER);
        let mut vcsv = String::from("name,alpha,P,a,b,value,uniform\n");
        let mut results = Vec::new();
        for (&(i, p), (rec, vol, uniform)) in cases.iter().zip(&rows) {
            let (name, alpha) = &self.alphas[i];
            let _ = write!(csv, "{name},{}", rec.csv_row());
            let _ = writeln!(vcsv, "{name},{alpha},{p},{a},{b},{vol},{uniform}");
            results.push(json!({
                "name": name, "alpha": alpha, "P": p,
                "discrepancy": rec.discrepancy,
                "resonance": rec.resonance.map(|(l, d)| json!({"l": l, "distance": d})),
                "log_volume": vol,
                "uniform_log_volume": uniform,
            }));
        }
        let mut gp = gnuplot_header("prime orbit discrepancy", "P", "discrepancy", "x");
        let plots: Vec<String> = self
            .alphas
            .iter()
            .map(|(n, _)| format!("'prime_orbit.csv' using 3:((strcol(1) eq '{n}') ? $4 : 1/0) with linespoints title '{n}'"))
            .collect();
        let _ = writeln!(gp, "plot {}", plots.join(", \\\n     "));
        Ok(Outcome {
            artifacts: vec![
                Artifact::new("prime_orbit.csv", csv),
                Artifact::new("prime_log_volume.csv", vcsv),
                Artifact::new("prime_orbit.gp", gp),
            ],
            results: json!({ "eps": self.eps, "c0": self.c0, "cases": results }),
        })
    }
}

struct Cantor {
    spec: CantorSpec,
    enumerate_to: usize,
    cap: u64,
}

impl Cantor {
    fn parse(config: &Config) -> CliResult<Self> {
        let entries = config.section("level");
        let spec = if entries.is_empty() {
            CantorSpec::default_demo()
        } else {
            let owned: Vec<(String, &str)> = entries.iter().map(|(k, v)| (format!("level.{k}"), *v)).collect();
            CantorSpec::from_entries(owned.iter().map(|(k, v)| (k.as_str(), *v)))?
        };
        let enumerate_to = config.u64_or("enumerate_to", 1)? as usize;
        if enumerate_to >= spec.depth() {
            return Err(CliError::Config(format!(
                "enumerate_to = {enumerate_to} but the spec has levels 0..{}",
                spec.depth() - 1
            )));
        }
        let cap = config.u64_or("cap", DEFAULT_INTERVAL_CAP)?;
        Ok(Self { spec, enumerate_to, cap })
    }
}

impl Job for Cantor {
    fn needed(&self) -> u64 {
        0
    }

    fn run(&self, _ctx: &RunContext<'_>) -> CliResult<Outcome> {
        let q = RigiditySequence::dyadic(&self.spec);
        let mut csv = String::from("n,k,delta,children_bound,hausdorff_bound,prime_volume\n");
        let mut levels = Vec::new();
        for (n, (k, delta)) in self.spec.levels().iter().enumerate() {
            let children = if n >= 1 { Some(self.spec.children_bound(n)?) } else { None };
            let hausdorff = if n >= 2 { Some(self.spec.hausdorff_lower_bound(n)?) } else { None };
            let volume = format_rational(&prime_volume_big(&q.terms()[n])?);
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{n},{k},{},{},{},{volume}",
                format_rational(delta),
                children.map(|v| format!("{v:e}")).unwrap_or_default(),
                opt(hausdorff)
            );
            levels.push(json!({
                "n": n, "k": k, "delta": format_rational(delta),
                "children_bound": children, "hausdorff_bound": hausdorff, "prime_volume": volume,
            }));
        }
        let mut lcsv = String::from("n,intervals,measure,rigidity,delta,within_delta\n");
        let mut enumerated = Vec::new();
        for n in 0..=self.enumerate_to {
            let set = self.spec.level_capped(n, self.cap).map_err(|e| match e {
                lfu_core::Error::Capacity { requested, cap, .. } => CliError::Capacity(format!(
                    "level {n} needs {requested} intervals, cap is {cap}; lower enumerate_to or raise cap"
                )),
                other => other.into(),
            })?;
            let rigidity = rigidity_profile_exact(&set, &q)?[n].clone();
            let delta = &self.spec.levels()[n].1;
            let ok = rigidity <= *delta;
            let _ = writeln!(
                lcsv,
                "{n},{},{},{},{},{ok}",
                set.len(),
                format_rational(&set.measure()),
                format_rational(&rigidity),
                format_rational(delta)
            );
            enumerated.push(json!({
                "n": n, "intervals": set.len(), "measure": set.measure_f64(),
                "rigidity": format_rational(&rigidity), "within_delta": ok,
            }));
        }
        let mut gp = gnuplot_header("Hausdorff dimension lower bound", "level n", "bound", "");
        let _ = writeln!(gp, "set yrange [0:1]");
        let _ = writeln!(gp, "plot 'cantor.csv' using 1:5 with linespoints title 'lower bound'");
        Ok(Outcome {
            artifacts: vec![
                Artifact::new("cantor.csv", csv),
                Artifact::new("cantor_levels.csv", lcsv),
                Artifact::new("cantor.gp", gp),
            ],
            results: json!({ "levels": levels, "enumerated": enumerated }),
        })
    }
}

struct Lomo {
    partition_name: String,
    partition: BlockPartition,
    blocks: Vec<usize>,
    dim: usize,
    alpha: f64,
    mode: AverageMode,
    random_starts: bool,
}

impl Lomo {
    fn parse(config: &Config, base: &Path) -> CliResult<Self> {
        let max = config.u64_or("max", 1_000_000)?;
        let (partition_name, partition) = partition(config, base, max)?;
        let total = partition.blocks();
        let default: Vec<u64> = (1..)
            .map(|i| 10u64.pow(i))
            .take_while(|&k| k < total as u64)
            .chain([total as u64])
            .collect();
        let blocks = usize_list(config, "blocks", &default)?;
        if let Some(&k) = blocks.iter().find(|&&k| k > total) {
            return Err(CliError::Config(format!("blocks = {k} but the partition has {total}")));
        }
        let dim = config.u64_or("dim", 2)? as usize;
        if !(1..=8).contains(&dim) {
            return Err(CliError::Config("dim must lie in 1..=8".into()));
        }
        let a = config.str_or("alpha", "golden");
        let alpha = parse_alpha(a).ok_or_else(|| CliError::Config(format!("alpha = {a:?}: not a frequency")))?;
        let mode = AverageMode::parse(config.str_or("mode", "cesaro"))?;
        let random_starts = match config.str_or("starts", "origin") {
            "origin" => false,
            "random" => true,
            other => return Err(CliError::Config(format!("starts = {other:?}: expected origin or random"))),
        };
        Ok(Self {
            partition_name,
            partition,
            blocks,
            dim,
            alpha,
            mode,
            random_starts,
        })
    }
}

impl Job for Lomo {
    fn needed(&self) -> u64 {
        let k = self.blocks.iter().max().copied().unwrap_or(0);
        self.partition.boundaries()[k]
    }

    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Outcome> {
        let sys = SkewSystem::new(self.dim, Rotation::Real(self.alpha))?;
        let kmax = self.blocks.iter().max().copied().unwrap_or(0);
        let starts: Vec<TorusPoint> = if self.random_starts {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            (0..kmax)
                .map(|_| TorusPoint::Real((0..self.dim).map(|_| rng.gen::<f64>()).collect()))
                .collect()
        } else {
            vec![TorusPoint::origin_real(self.dim); kmax]
        };
        let mut csv = format!("{}\n", LomoRecord::CSV_HEADER);
        let mut results = Vec::new();
        for &k in &self.blocks {
            let value = lomo_block_average(
                ctx.table(),
                &sys,
                &last_coordinate_character,
                &self.partition,
                &starts,
                k,
                self.mode,
            )?;
            let rec = LomoRecord {
                blocks: k,
                b_k: self.partition.boundaries()[k],
                mode: self.mode,
                value,
            };
            csv.push_str(&rec.csv_row());
            results.push(json!({"K": k, "bK": rec.b_k, "value": value}));
        }
        let mut gp = gnuplot_header(&format!("LOMO block averages, {} partition", self.partition_name), "b_K", "average", "xy");
        let _ = writeln!(gp, "plot 'lomo.csv' using 2:4 with linespoints title '{}'", self.mode.name());
        Ok(Outcome {
            artifacts: vec![Artifact::new("lomo.csv", csv), Artifact::new("lomo.gp", gp)],
            results: json!({
                "partition": self.partition_name, "dim": self.dim, "alpha": self.alpha,
                "mode": self.mode.name(), "records": results,
            }),
        })
    }
}

struct Dual {
    source: String,
    theta: f64,
    windows: Vec<usize>,
    scale: u64,
    partition_name: String,
    partition: BlockPartition,
}

impl Dual {
    fn parse(config: &Config, base: &Path) -> CliResult<Self> {
        let source = config.str_or("source", "liouville").to_string();
        if source != "liouville" && source != "rotation" {
            return Err(CliError::Config(format!("source = {source:?}: expected liouville or rotation")));
        }
        let t = config.str_or("theta", "golden");
        let theta = parse_alpha(t).ok_or_else(|| CliError::Config(format!("theta = {t:?}: not a frequency")))?;
        let windows = usize_list(config, "windows", &[1000])?;
        let scale = config.u64_or("scale", 1_000_000)?;
        positive("scale", &[scale])?;
        let n = scale + windows.iter().max().copied().unwrap_or(0) as u64;
        let (partition_name, partition) = partition(config, base, n + 1)?;
        Ok(Self {
            source,
            theta,
            windows,
            scale,
            partition_name,
            partition,
        })
    }

    fn length(&self) -> u64 {
        self.scale + self.windows.iter().max().copied().unwrap_or(0) as u64
    }
}

/// `|sin(pi H theta) / (H sin(pi theta))|`, the modulus of every window of `e(n theta)`.
pub fn dirichlet_kernel(h: usize, theta: f64) -> f64 {
    let s = (std::f64::consts::PI * theta).sin();
    if s.abs() < 1e-300 {
        return 1.0;
    }
    ((std::f64::consts::PI * h as f64 * theta).sin() / (h as f64 * s)).abs()
}

impl Job for Dual {
    fn needed(&self) -> u64 {
        if self.source == "liouville" {
            self.length()
        } else {
            0
        }
    }

    fn run(&self, ctx: &RunContext<'_>) -> CliResult<Outcome> {
        let n = self.length();
        let z: Vec<Complex64> = if self.source == "liouville" {
            liouville_sequence(ctx.table(), n)?
        } else {
            (1..=n).map(|k| lfu_core::numeric::unit(lfu_core::numeric::frac_mul(k as u128, self.theta))).collect()
        };
        let records = self
            .windows
            .par_iter()
            .map(|&h| dual_averages(&z[..(self.scale + h as u64) as usize], h, self.scale, &self.partition))
            .collect::<lfu_core::Result<Vec<_>>>()?;
        let mut csv = String::from("source,H,M,K,window,block,closed_form\n");
        let mut results = Vec::new();
        for (&h, r) in self.windows.iter().zip(&records) {
            let closed = (self.source == "rotation").then(|| dirichlet_kernel(h, self.theta));
            let _ = writeln!(
                csv,
                "{},{h},{},{},{},{},{}",
                self.source,
                self.scale,
                r.blocks,
                r.window,
                r.block,
                closed.map(|c| c.to_string()).unwrap_or_default()
            );
            results.push(json!({
                "H": h, "K": r.blocks, "window": r.window, "block": r.block, "closed_form": closed,
            }));
        }
        let mut gp = gnuplot_header(
            &format!("dual averages, {} partition, M = {}", self.partition_name, self.scale),
            "H",
            "average",
            "x",
        );
        let _ = writeln!(
            gp,
            "plot 'dual_averages.csv' using 2:5 with linespoints title 'window', \\\n     'dual_averages.csv' using 2:6 with linespoints title 'block'"
        );
        Ok(Outcome {
            artifacts: vec![Artifact::new("dual_averages.csv", csv), Artifact::new("dual_averages.gp", gp)],
            results: json!({
                "source": self.source, "theta": self.theta, "partition": self.partition_name,
                "records": results,
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lfu_core::build_table;

    fn job(text: &str) -> Box<dyn Job> {
        let c = Config::parse(text).unwrap();
        find(c.get("experiment").unwrap()).unwrap().prepare(&c, Path::new(".")).unwrap()
    }

    fn text(o: &Outcome, file: &str) -> String {
        let a = o.artifacts.iter().find(|a| a.file == file).unwrap();
        String::from_utf8(a.bytes.clone()).unwrap()
    }

    #[test]
    fn unknown_experiment_lists_names() {
        let e = find("nope").err().unwrap();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("fourier-trend"));
    }

    #[test]
    fn alpha_forms() {
        assert_eq!(parse_alpha("1/4"), Some(0.25));
        assert!((parse_alpha("golden").unwrap() - 0.618_033_988_749_895).abs() < 1e-15);
        assert_eq!(parse_alpha("x"), None);
    }

    #[test]
    fn chowla_rows() {
        let j = job("experiment = chowla\nshifts = 1, -2\nscales = 10, 100");
        assert_eq!(j.needed(), 101);
        let t = build_table(200).unwrap();
        let o = j.run(&RunContext { table: Some(&t), workers: 1, seed: 0 }).unwrap();
        let csv = text(&o, "chowla.csv");
        assert!(csv.starts_with("h,M,value\n1,10,-0.4\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn trend_small() {
        let j = job(
            "experiment = fourier-trend\nscales = 200\nwindows = 8, 16\nstrata = 0\neps = 0.05\n\
             sets = a\nset.a.kind = full\n",
        );
        assert_eq!(j.needed(), 216);
        let t = build_table(300).unwrap();
        let o = j.run(&RunContext { table: Some(&t), workers: 1, seed: 0 }).unwrap();
        let csv = text(&o, "fourier-trend.csv");
        assert!(csv.starts_with("set,M,mode,H,t,value,grid_points_mean\na,200,cesaro,8,1,"));
        assert_eq!(text(&o, "sets.csv").lines().count(), 2);
    }

    #[test]
    fn cantor_default_spec() {
        let j = job("experiment = cantor");
        assert_eq!(j.needed(), 0);
        let o = j.run(&RunContext { table: None, workers: 1, seed: 0 }).unwrap();
        let csv = text(&o, "cantor.csv");
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",1/2")));
        let levels = text(&o, "cantor_levels.csv");
        assert!(levels.lines().skip(1).all(|l| l.ends_with(",true")));
    }

    #[test]
    fn cantor_capacity() {
        let j = job("experiment = cantor\nenumerate_to = 2\ncap = 1000");
        let e = j.run(&RunContext { table: None, workers: 1, seed: 0 }).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn rotation_dual_matches_kernel() {
        let j = job("experiment = dual-averages\nsource = rotation\ntheta = 0.3\nwindows = 100\nscale = 1000");
        assert_eq!(j.needed(), 0);
        let o = j.run(&RunContext { table: None, workers: 1, seed: 0 }).unwrap();
        let v = &o.results["records"][0];
        let w = v["window"].as_f64().unwrap();
        assert!((w - dirichlet_kernel(100, 0.3)).abs() < 1e-10);
    }

    #[test]
    fn bad_parameters() {
        let c = |t: &str| {
            let c = Config::parse(t).unwrap();
            find(c.get("experiment").unwrap()).unwrap().prepare(&c, Path::new(".")).err().unwrap().exit_code()
        };
        assert_eq!(c("experiment = chowla\nshifts = 0"), 2);
        assert_eq!(c("experiment = fourier-trend"), 2);
        assert_eq!(c("experiment = lomo\nmax = 100\nblocks = 50"), 2);
        assert_eq!(c("experiment = prime-orbit\ninterval = 0.5, 0.2"), 2);
        assert_eq!(c("experiment = cantor\nenumerate_to = 6"), 2);
    }
}
