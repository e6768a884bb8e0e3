use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::problem::{parse_problem, Problem};
use super::rate::{fit_rate_above, RateFit};
use super::BenchError;
use crate::distcone::hausdorff_lower_bound;
use crate::hierarchy::{run_ladder, HierarchyOptions, Ladder, Side};
use crate::momentkit::Certificate;
use crate::semialg::estimate_minimum;

/// Distance estimates at or below this are treated as zero when fitting rates.
pub const DISTANCE_NOISE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: PathBuf,
    pub certificates: Vec<Certificate>,
    pub levels: (usize, usize),
    /// Order k of the distance runs; `None` skips them.
    pub k: Option<usize>,
    pub directions: usize,
    pub seed: u64,
    pub hierarchy: HierarchyOptions,
    pub out_dir: PathBuf,
    /// Write wall-clock seconds; off keeps outputs byte-identical across runs.
    pub record_timings: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let (lo, hi) = self.levels;
        if lo == 0 || lo > hi {
            return Err(BenchError::Validation(format!("level range {lo}..{hi} is empty or starts at 0")));
        }
        if self.certificates.is_empty() {
            return Err(BenchError::Validation("no certificates selected".into()));
        }
        if self.k.is_some() && self.directions == 0 {
            return Err(BenchError::Validation("distance runs need at least one direction".into()));
        }
        Ok(())
    }
}

/// One side of one level; `bound` is lb for the sos side and mlb for the moment side.
#[derive(Debug, Clone, Serialize)]
pub struct LadderCsvRow {
    pub level: usize,
    pub certificate: String,
    pub side: String,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub status: String,
    pub seconds: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceCsvRow {
    pub certificate: String,
    pub r: usize,
    pub lower_bound: Option<f64>,
    pub directions: usize,
    /// Directions whose solve did not converge and were left out.
    pub skipped: Option<usize>,
    pub seed: u64,
    pub error: String,
}

/// f_min − mlb_r ≤ ‖f‖₁ · d_r, with d_r the direction-sampled estimate.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCsvRow {
    pub certificate: String,
    pub r: usize,
    pub fmin_est: f64,
    pub mlb: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Violated by more than 10·tol.
    pub flagged: bool,
    pub distance_kind: &'static str,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCsvRow {
    pub certificate: String,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    pub exponent: Option<f64>,
    pub predicted: Option<f64>,
    pub window_lo: Option<usize>,
    pub window_hi: Option<usize>,
    pub points: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentBundle {
    pub ladders: Vec<Ladder>,
    pub ladder_rows: Vec<LadderCsvRow>,
    pub distance_rows: Vec<DistanceCsvRow>,
    pub lemma_rows: Vec<LemmaCsvRow>,
    pub rates: Vec<(Certificate, Result<RateFit, String>)>,
    pub files: Vec<PathBuf>,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| BenchError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| BenchError::Io(e.to_string()))
}

fn seconds(opt: bool, s: f64) -> String {
    if opt {
        format!("{s:.3}")
    } else {
        "-".into()
    }
}

/// Samples used for the reference minimum.
const FMIN_SAMPLES: usize = 4000;
const FMIN_STARTS: usize = 16;

/// Ladders for every certificate, optional distance series with rate fits,
/// and the lemma cross-check when both are present.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentBundle, BenchError> {
    config.validate()?;
    let problem = parse_problem(&config.problem)?;
    run_problem(&problem, config)
}

pub fn run_problem(problem: &Problem, config: &ExperimentConfig) -> Result<ExperimentBundle, BenchError> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(|e| BenchError::Io(format!("{}: {e}", config.out_dir.display())))?;
    let f = &problem.objective;
    let set = &problem.set;
    let (lo, hi) = config.levels;
    let mut bundle = ExperimentBundle::default();
    for &cert in &config.certificates {
        match run_ladder(f, set, cert, lo..=hi, &config.hierarchy) {
            Ok(ladder) => {
                for row in &ladder.rows {
                    for (side, b) in [(Side::Sos, &row.sos), (Side::Moment, &row.moment)] {
                        bundle.ladder_rows.push(LadderCsvRow {
                            level: row.level,
                            certificate: cert.to_string(),
                            side: side.to_string(),
                            bound: b.as_ref().map(|b| b.bound),
                            gap: row.gap,
                            status: b.as_ref().map_or("error".into(), |b| b.status.to_string()),
                            seconds: seconds(config.record_timings, b.as_ref().map_or(0.0, |b| b.seconds)),
                            seed: config.seed,
                            error: row.error.clone().unwrap_or_default(),
                        });
                    }
                }
                bundle.ladders.push(ladder);
            }
            Err(e) => {
                for level in lo..=hi {
                    for side in [Side::Sos, Side::Moment] {
                        bundle.ladder_rows.push(LadderCsvRow {
                            level,
                            certificate: cert.to_string(),
                            side: side.to_string(),
                            bound: None,
                            gap: None,
                            status: "error".into(),
                            seconds: seconds(config.record_timings, 0.0),
                            seed: config.seed,
                            error: e.to_string(),
                        });
                    }
                }
            }
        }
    }
    let ladder_path = config.out_dir.join("ladder.csv");
    write_csv(&ladder_path, &bundle.ladder_rows)?;
    bundle.files.push(ladder_path);

    let Some(k) = config.k else { return Ok(bundle) };
    let fmin = estimate_minimum(f, set, FMIN_SAMPLES, FMIN_STARTS, config.seed).ok().map(|m| m.value);
    let fnorm = f.l1_norm();
    for &cert in &config.certificates {
        let mut series = Vec::new();
        for r in lo..=hi {
            let est = hausdorff_lower_bound(set, cert, r, k, config.directions, config.seed, &config.hierarchy);
            let (value, skipped, error) = match est {
                Ok(h) => (Some(h.lower_bound), Some(h.skipped), String::new()),
                Err(e) => (None, None, e.to_string()),
            };
            if let Some(v) = value {
                series.push((r, v));
                let mlb = bundle
                    .ladder_rows
                    .iter()
                    .find(|row| row.certificate == cert.to_string() && row.level == r && row.side == Side::Moment.to_string())
                    .and_then(|row| row.bound);
                if let (Some(fm), Some(m)) = (fmin, mlb) {
                    let lhs = fm - m;
                    let rhs = fnorm * v.max(0.0);
                    bundle.lemma_rows.push(LemmaCsvRow {
                        certificate: cert.to_string(),
                        r,
                        fmin_est: fm,
                        mlb: m,
                        lhs,
                        rhs,
                        holds: lhs <= rhs,
                        flagged: lhs > rhs + 10.0 * config.hierarchy.tol,
                        distance_kind: "direction_lower_bound",
                        seed: config.seed,
                    });
                }
            }
            bundle.distance_rows.push(DistanceCsvRow {
                certificate: cert.to_string(),
                r,
                lower_bound: value,
                directions: config.directions,
                skipped,
                seed: config.seed,
                error,
            });
        }
        let fit = fit_rate_above(&series, DISTANCE_NOISE_FLOOR, problem.meta.predicted_exponent).map_err(|e| e.to_string());
        bundle.rates.push((cert, fit));
    }
    let rate_rows: Vec<RateCsvRow> = bundle
        .rates
        .iter()
        .map(|(c, fit)| match fit {
            Ok(f) => RateCsvRow {
                certificate: c.to_string(),
                slope: Some(f.slope),
                intercept: Some(f.intercept),
                r_squared: Some(f.r_squared),
                exponent: Some(f.exponent),
                predicted: f.predicted,
                window_lo: Some(f.window.0),
                window_hi: Some(f.window.1),
                points: f.points,
                seed: config.seed,
                error: String::new(),
            },
            Err(e) => RateCsvRow {
                certificate: c.to_string(),
                slope: None,
                intercept: None,
                r_squared: None,
                exponent: None,
                predicted: problem.meta.predicted_exponent,
                window_lo: None,
                window_hi: None,
                points: 0,
                seed: config.seed,
                error: e.clone(),
            },
        })
        .collect();
    for (name, result) in [
        ("distance.csv", write_csv(&config.out_dir.join("distance.csv"), &bundle.distance_rows)),
        ("rates.csv", write_csv(&config.out_dir.join("rates.csv"), &rate_rows)),
        ("lemma_check.csv", write_csv(&config.out_dir.join("lemma_check.csv"), &bundle.lemma_rows)),
    ] {
        result?;
        bundle.files.push(config.out_dir.join(name));
    }
    Ok(bundle)
}
