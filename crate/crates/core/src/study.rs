//! Convergence studies over a sweep of subdivision counts.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::pipeline::{run_stages, Config, PipelineError, Stage, Timings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlopeError {
    #[error("slope fit needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("value {value} at N = {n} is not positive")]
    NonPositiveValue { n: f64, value: f64 },
}

/// Least-squares slope of `log value` against `log n`.
pub fn fit_slope(pairs: &[(f64, f64)]) -> Result<f64, SlopeError> {
    if pairs.len() < 2 {
        return Err(SlopeError::TooFewPoints(pairs.len()));
    }
    if let Some(&(n, value)) = pairs.iter().find(|(n, v)| !(*v > 0.0) || !(*n > 0.0)) {
        return Err(SlopeError::NonPositiveValue { n, value });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Measurements at one `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub mu_c0: f64,
    pub mu_c1w: f64,
    pub mu_holder: f64,
    pub correction_c0: f64,
    /// `max |rho'_N - tau'_N|`.
    pub tri_c0: f64,
    pub pl_c0: f64,
    pub pl_c1: f64,
    pub immersion: bool,
    /// `None` when the embedding check was not requested.
    pub embedding: Option<bool>,
    /// Largest facet Liouville integral of the samples.
    pub liouville_c0: f64,
    /// Sampled C^0 distance of the plain interpolant of the samples.
    pub interpolant_c0: f64,
    pub timings: Timings,
}

/// Norm columns that receive a fitted slope, in table order.
pub const SLOPE_COLUMNS: [&str; 7] = ["mu_c0", "mu_c1w", "mu_holder", "correction_c0", "tri_c0", "pl_c0", "pl_c1"];

impl StudyRow {
    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "mu_c0" => self.mu_c0,
            "mu_c1w" => self.mu_c1w,
            "mu_holder" => self.mu_holder,
            "correction_c0" => self.correction_c0,
            "tri_c0" => self.tri_c0,
            "pl_c0" => self.pl_c0,
            "pl_c1" => self.pl_c1,
            "interpolant_c0" => self.interpolant_c0,
            _ => return None,
        })
    }
}

#[derive(Debug)]
pub enum StudyEntry {
    Row(StudyRow),
    Failed { n: usize, error: PipelineError },
}

impl StudyEntry {
    pub fn n(&self) -> usize {
        match self {
            StudyEntry::Row(r) => r.n,
            StudyEntry::Failed { n, .. } => *n,
        }
    }

    pub fn row(&self) -> Option<&StudyRow> {
        match self {
            StudyEntry::Row(r) => Some(r),
            StudyEntry::Failed { .. } => None,
        }
    }
}

#[derive(Debug)]
pub struct StudyTable {
    pub entries: Vec<StudyEntry>,
    pub timings: bool,
}

impl StudyTable {
    pub fn rows(&self) -> impl Iterator<Item = &StudyRow> {
        self.entries.iter().filter_map(StudyEntry::row)
    }

    /// Fitted slope of a column over the successful rows.
    pub fn slope(&self, column: &str) -> Result<f64, SlopeError> {
        let pairs: Vec<(f64, f64)> = self
            .rows()
            .map(|r| (r.n as f64, r.column(column).expect("known column")))
            .collect();
        fit_slope(&pairs)
    }

    pub fn all_succeeded(&self) -> bool {
        self.entries.iter().all(|e| e.row().is_some())
    }

    /// Comma-separated table followed by `#` slope lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "N,mu_c0,mu_c1w,mu_holder,correction_c0,tri_c0,pl_c0,pl_c1,immersion,embedding",
        );
        if self.timings {
            out.push_str(",t_sample_s,t_solve_s,t_refine_s,t_certify_s");
        }
        out.push('\n');
        let verdict = |b: bool| if b { "pass" } else { "fail" };
        for e in &self.entries {
            match e {
                StudyEntry::Row(r) => {
                    write!(
                        out,
                        "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
                        r.n,
                        r.mu_c0,
                        r.mu_c1w,
                        r.mu_holder,
                        r.correction_c0,
                        r.tri_c0,
                        r.pl_c0,
                        r.pl_c1,
                        verdict(r.immersion),
                        r.embedding.map_or("skipped", verdict)
                    )
                    .unwrap();
                    if self.timings {
                        let t = &r.timings;
                        write!(
                            out,
                            ",{:.6},{:.6},{:.6},{:.6}",
                            t.sample.as_secs_f64(),
                            t.solve.as_secs_f64(),
                            t.refine.as_secs_f64(),
                            t.certify.as_secs_f64()
                        )
                        .unwrap();
                    }
                    out.push('\n');
                }
                StudyEntry::Failed { n, .. } => {
                    out.push_str(&format!("{n},,,,,,,,failed,failed"));
                    if self.timings {
                        out.push_str(",,,,");
                    }
                    out.push('\n');
                }
            }
        }
        for e in &self.entries {
            if let StudyEntry::Failed { n, error } = e {
                writeln!(out, "# N={n} failed: {error}").unwrap();
            }
        }
        for c in SLOPE_COLUMNS {
            match self.slope(c) {
                Ok(s) => writeln!(out, "# slope {c} = {s:.4}").unwrap(),
                Err(e) => writeln!(out, "# slope {c} = n/a ({e})").unwrap(),
            }
        }
        out
    }
}

/// Runs the full pipeline once per `N` and collects the measurements.
pub fn convergence_study(config: &Config, n_list: &[usize]) -> Result<StudyTable, PipelineError> {
    config.validate()?;
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PipelineError::Config("N list must be strictly increasing".into()));
    }
    let entries = n_list
        .par_iter()
        .map(|&n| match study_row(config, n) {
            Ok(r) => StudyEntry::Row(r),
            Err(error) => StudyEntry::Failed { n, error },
        })
        .collect();
    Ok(StudyTable {
        entries,
        timings: config.study.timings,
    })
}

fn study_row(config: &Config, n: usize) -> Result<StudyRow, PipelineError> {
    let art = run_stages(config, n, Stage::Certify)?;
    let r = &art.report;
    let solve = r.solve.as_ref().expect("solve stage ran");
    let refine = r.refine.as_ref().expect("refine stage ran");
    let pl = r.pl.as_ref().expect("certify stage ran");
    Ok(StudyRow {
        n,
        mu_c0: r.samples.mu_c0,
        mu_c1w: r.samples.mu_c1w,
        mu_holder: r.samples.mu_holder,
        correction_c0: solve.correction_c0,
        tri_c0: refine.tri_c0,
        pl_c0: pl.c0,
        pl_c1: pl.c1,
        immersion: r.immersion.as_ref().is_some_and(|i| i.passed),
        embedding: r.embedding.as_ref().map(|e| e.passed),
        liouville_c0: r.samples.liouville_c0,
        interpolant_c0: pl.interpolant_c0,
        timings: art.timings,
    })
}
