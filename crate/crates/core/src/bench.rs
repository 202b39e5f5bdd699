//! Instrumented build grid emitted as CSV.
//!
//! Columns: `backend,N,d,M,seed,evals,counter_ops,queries,success,wall_ms`.
//!
//! * `evals`: scoring-function evaluations over the whole build.
//! * `counter_ops`: class-counter initialisation, clearing and access operations.
//! * `queries`: mean oracle queries per maximum search. Classical searches
//!   cost `d`; quantum searches report total queries divided by the number
//!   of Dürr-Høyer runs, so the repetition factor is divided out.
//! * `success`: fraction of quantum searches that found a classically optimal
//!   attribute; empty for classical backends.
//! * `wall_ms`: build time, only when wall-clock timing is requested, so
//!   that default output is byte-stable.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builder::{train, Backend, BuildConfig};
use crate::dataset::AttributeKind;
use crate::error::Result;
use crate::qbuilder::q_train;
use crate::synth::{generate, SynthConfig};

pub const HEADER: &str = "backend,N,d,M,seed,evals,counter_ops,queries,success,wall_ms";

/// Attribute kinds of generated bench data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeMix {
    Real,
    Discrete(u32),
    /// Alternating real and discrete attributes.
    Mixed(u32),
}

impl AttributeMix {
    pub fn kinds(self, d: usize) -> Vec<AttributeKind> {
        (0..d)
            .map(|j| match self {
                AttributeMix::Real => AttributeKind::Real,
                AttributeMix::Discrete(domain) => AttributeKind::Discrete { domain },
                AttributeMix::Mixed(domain) if j % 2 == 1 => AttributeKind::Discrete { domain },
                AttributeMix::Mixed(_) => AttributeKind::Real,
            })
            .collect()
    }
}

impl std::str::FromStr for AttributeMix {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || crate::error::Error::Config(format!("unknown attribute mix {s:?} (real, discrete:T, mixed:T)"));
        match s.split_once(':') {
            None if s == "real" => Ok(AttributeMix::Real),
            Some(("discrete", t)) => Ok(AttributeMix::Discrete(t.parse().map_err(|_| bad())?)),
            Some(("mixed", t)) => Ok(AttributeMix::Mixed(t.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub backends: Vec<Backend>,
    pub samples: Vec<usize>,
    pub dimensions: Vec<usize>,
    pub classes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mix: AttributeMix,
    /// Classes that occur in the labels, independent of the declared M.
    pub present_classes: usize,
    pub planted_depth: usize,
    pub noise: f64,
    pub max_height: usize,
    pub min_split: usize,
    pub repeats: Option<usize>,
    pub wall_clock: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            backends: vec![Backend::Baseline, Backend::TreeMap, Backend::Quantum],
            samples: vec![512],
            dimensions: vec![4, 16],
            classes: vec![4],
            seeds: vec![1],
            mix: AttributeMix::Real,
            present_classes: 4,
            planted_depth: 3,
            noise: 0.05,
            max_height: 4,
            min_split: 2,
            repeats: None,
            wall_clock: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub backend: Backend,
    pub samples: usize,
    pub d: usize,
    pub classes: usize,
    pub seed: u64,
    pub evals: u64,
    pub counter_ops: u64,
    pub queries: f64,
    pub success: Option<f64>,
    pub wall_ms: Option<f64>,
}

impl BenchRow {
    pub fn to_csv_line(&self) -> String {
        let success = self.success.map(|s| format!("{s:.6}")).unwrap_or_default();
        let wall = self.wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{:.6},{},{}",
            self.backend.name(),
            self.samples,
            self.d,
            self.classes,
            self.seed,
            self.evals,
            self.counter_ops,
            self.queries,
            success,
            wall
        )
    }
}

/// Builds one tree for a grid point.
pub fn bench_point(config: &BenchConfig, backend: Backend, samples: usize, d: usize, classes: usize, seed: u64) -> Result<BenchRow> {
    let synth = SynthConfig::real(samples, d, classes)
        .with_attributes(config.mix.kinds(d))
        .with_present_classes(config.present_classes.min(classes))
        .planted(config.planted_depth, config.noise);
    let data = generate(&synth, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let build = BuildConfig {
        max_height: config.max_height,
        min_split: config.min_split,
        backend,
        repeats: config.repeats,
        seed: Some(seed),
        verify: backend == Backend::Quantum,
        report: false,
    };
    let start = Instant::now();
    let (stats, queries, success) = if backend == Backend::Quantum {
        let report = q_train(&data, &build)?;
        let runs: usize = report.per_node.iter().map(|n| n.repeats).sum();
        let queries = if runs == 0 {
            0.0
        } else {
            report.total_oracle_queries as f64 / runs as f64
        };
        let searches = report.per_node.len();
        let success = (searches > 0).then(|| {
            report.per_node.iter().filter(|n| n.correct == Some(true)).count() as f64 / searches as f64
        });
        (report.tree().stats.clone(), queries, success)
    } else {
        let tree = train(&data, &build)?;
        (tree.stats, d as f64, None)
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    Ok(BenchRow {
        backend,
        samples,
        d,
        classes,
        seed,
        evals: stats.evaluations,
        counter_ops: stats.counter_ops.total(),
        queries,
        success,
        wall_ms: config.wall_clock.then_some(elapsed),
    })
}

/// Rows in grid order: backend, N, d, M, seed.
pub fn run(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &backend in &config.backends {
        for &n in &config.samples {
            for &d in &config.dimensions {
                for &m in &config.classes {
                    for &seed in &config.seeds {
                        rows.push(bench_point(config, backend, n, d, m, seed)?);
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_csv_line());
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}
