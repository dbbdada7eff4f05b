//! Scaling sweeps: validation time against one corpus dimension, with a
//! least-squares linear fit.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use simguard_core::{validate, InputSet, RunOptions};

use crate::corpus::{generate_corpus, Corpus, CorpusParams};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Files,
    Rows,
    Cols,
    Complexity,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Files => "files",
            Dimension::Rows => "rows",
            Dimension::Cols => "cols",
            Dimension::Complexity => "complexity",
        }
    }

    /// `base` with this dimension set to `value`.
    pub fn apply(self, base: &CorpusParams, value: usize) -> CorpusParams {
        let mut p = *base;
        match self {
            Dimension::Files => p.files = value,
            Dimension::Rows => p.rows = value,
            Dimension::Cols => p.columns = value,
            Dimension::Complexity => p.complexity = value.min(u8::MAX as usize) as u8,
        }
        p
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "files" => Ok(Dimension::Files),
            "rows" => Ok(Dimension::Rows),
            "cols" | "columns" => Ok(Dimension::Cols),
            "complexity" => Ok(Dimension::Complexity),
            _ => Err(BenchError::InvalidParams(format!("unknown sweep dimension `{s}`"))),
        }
    }
}

/// A sweep such as `files=1:100` or `rows=10,100,1000`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sweep {
    pub dim: Dimension,
    pub points: Vec<usize>,
}

impl FromStr for Sweep {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BenchError::InvalidParams(format!("sweep `{s}` is not DIM=LO:HI or DIM=A,B,..."));
        let (dim, range) = s.split_once('=').ok_or_else(bad)?;
        let dim: Dimension = dim.trim().parse()?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let mut points = if let Some((lo, hi)) = range.split_once(':') {
            sweep_points(num(lo)?, num(hi)?)
        } else {
            range.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        points.sort_unstable();
        points.dedup();
        if points.len() < 2 || points[0] == 0 {
            return Err(bad());
        }
        Ok(Sweep { dim, points })
    }
}

/// Five points spanning `lo..=hi`: lo, 10%, 25%, 50% of hi, and hi.
pub fn sweep_points(lo: usize, hi: usize) -> Vec<usize> {
    let frac = |f: f64| ((hi as f64 * f).round() as usize).max(lo);
    let mut pts = vec![lo, frac(0.10), frac(0.25), frac(0.50), hi];
    pts.retain(|&v| v >= lo && v <= hi);
    pts.sort_unstable();
    pts.dedup();
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingConfig {
    pub base: CorpusParams,
    pub sweep: Sweep,
    pub warmup: usize,
    pub reps: usize,
    pub jobs: usize,
}

impl ScalingConfig {
    pub fn new(base: CorpusParams, sweep: Sweep) -> Self {
        ScalingConfig {
            base,
            sweep,
            warmup: 5,
            reps: 10,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub value: usize,
    pub rows: usize,
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    /// Data rows validated per second at the median.
    pub rows_per_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub dim: Dimension,
    pub points: Vec<ScalingPoint>,
    pub fit: Option<LinearFit>,
}

impl ScalingResult {
    pub fn to_table(&self) -> String {
        let mut out = format!("{:>10} {:>10} {:>12} {:>12} {:>14}\n", self.dim, "rows", "median_ms", "min_ms", "rows/s");
        for p in &self.points {
            out.push_str(&format!(
                "{:>10} {:>10} {:>12.3} {:>12.3} {:>14.0}\n",
                p.value, p.rows, p.median_ms, p.min_ms, p.rows_per_sec
            ));
        }
        if let Some(f) = self.fit {
            out.push_str(&format!(
                "fit: ms = {:.4} + {:.4} * {}  (R^2 = {:.4})\n",
                f.intercept, f.slope, self.dim, f.r2
            ));
        }
        out
    }
}

/// Ordinary least squares of `ys` on `xs`; `None` for fewer than two
/// distinct x values.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys[..n].iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs[..n]
        .iter()
        .zip(&ys[..n])
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit { intercept, slope, r2 })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

struct Subject {
    corpus: Corpus,
    inputs: InputSet,
    samples: Vec<f64>,
}

fn validate_once(s: &Subject, opts: &RunOptions) -> Result<f64, BenchError> {
    let t = Instant::now();
    let report = validate(&s.corpus.spec, &s.inputs, opts)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    if report.has_failures() {
        return Err(BenchError::Dirty(report.errors().count()));
    }
    Ok(ms)
}

/// Times every corpus: `warmup` discarded runs each, then `reps` rounds
/// that visit the corpora in turn so drift spreads across all of them.
fn measure(params: &[CorpusParams], warmup: usize, reps: usize, jobs: usize) -> Result<Vec<ScalingPoint>, BenchError> {
    if reps == 0 {
        return Err(BenchError::InvalidParams("reps must be at least 1".into()));
    }
    let opts = RunOptions {
        jobs,
        ..RunOptions::default()
    };
    let mut subjects = params
        .iter()
        .map(|p| {
            let corpus = generate_corpus(p)?;
            let inputs = corpus.input_set();
            Ok(Subject {
                corpus,
                inputs,
                samples: Vec::with_capacity(reps),
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    for s in &subjects {
        for _ in 0..warmup {
            validate_once(s, &opts)?;
        }
    }
    for _ in 0..reps {
        for s in subjects.iter_mut() {
            let ms = validate_once(s, &opts)?;
            s.samples.push(ms);
        }
    }
    Ok(subjects
        .into_iter()
        .map(|mut s| {
            s.samples.sort_by(f64::total_cmp);
            let median_ms = median(&s.samples);
            let rows = s.corpus.total_rows();
            ScalingPoint {
                value: 0,
                rows,
                median_ms,
                min_ms: s.samples[0],
                max_ms: s.samples[s.samples.len() - 1],
                rows_per_sec: if median_ms > 0.0 { rows as f64 / (median_ms / 1e3) } else { f64::INFINITY },
            }
        })
        .collect())
}

/// Timings for validating one corpus, after `warmup` discarded runs.
pub fn time_validation(params: &CorpusParams, warmup: usize, reps: usize, jobs: usize) -> Result<ScalingPoint, BenchError> {
    Ok(measure(std::slice::from_ref(params), warmup, reps, jobs)?.remove(0))
}

pub fn run_scaling(cfg: &ScalingConfig) -> Result<ScalingResult, BenchError> {
    let params: Vec<CorpusParams> = cfg.sweep.points.iter().map(|&v| cfg.sweep.dim.apply(&cfg.base, v)).collect();
    let mut points = measure(&params, cfg.warmup, cfg.reps, cfg.jobs)?;
    for (pt, &v) in points.iter_mut().zip(&cfg.sweep.points) {
        pt.value = v;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.value as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median_ms).collect();
    Ok(ScalingResult {
        dim: cfg.sweep.dim,
        fit: linear_fit(&xs, &ys),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "files=1:100".parse().unwrap();
        assert_eq!(s.dim, Dimension::Files);
        assert_eq!(s.points, vec![1, 10, 25, 50, 100]);
        let s: Sweep = "rows=500,10,100".parse().unwrap();
        assert_eq!(s.points, vec![10, 100, 500]);
        assert!("depth=1:3".parse::<Sweep>().is_err());
        assert!("files=5".parse::<Sweep>().is_err());
        assert!("files=0:4".parse::<Sweep>().is_err());
    }

    #[test]
    fn fit_exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn small_sweep_runs() {
        let cfg = ScalingConfig {
            warmup: 0,
            reps: 2,
            ..ScalingConfig::new(CorpusParams::default(), "files=1,2,3".parse().unwrap())
        };
        let r = run_scaling(&cfg).unwrap();
        assert_eq!(r.points.len(), 3);
        assert_eq!(r.points[2].rows, 300);
        assert!(r.fit.is_some());
        assert!(r.to_table().contains("R^2"));
    }
}
