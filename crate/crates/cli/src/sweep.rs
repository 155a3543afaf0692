//! One-parameter family between a near-class and a far-class perturbation, and the bisection
//! of the boundary between the two verdicts.

use std::fmt::Write as _;

use mcf_core::diagnostics::Verdict;
use mcf_core::evolve::TerminalStatus;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::SweepConfig;
use crate::runner::execute;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("anchor at s = {s} classified {found}, expected {expected}")]
    AnchorMisclassified { s: f64, expected: Verdict, found: Verdict },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initial,
    Bisection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub s: f64,
    pub phase: Phase,
    pub verdict: Verdict,
    /// `None` when the initial data could not be built.
    pub terminal: Option<TerminalStatus>,
    pub hs0_final_drift: Option<f64>,
    pub neck_ratio_final: Option<f64>,
    pub steps: u64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    pub s_lo: f64,
    pub s_hi: f64,
    /// Parameters inside `[s_lo, s_hi]` whose run was neither class.
    pub undetermined: Vec<f64>,
    /// Initial samples at which a far verdict precedes a near verdict.
    pub monotonicity_violations: Vec<(f64, f64)>,
    /// Set when bisection stopped early at an undetermined member.
    pub stopped_at: Option<f64>,
}

pub fn evaluate(cfg: &SweepConfig, s: f64, phase: Phase) -> SweepRun {
    match execute(&cfg.member(s)) {
        Ok(art) => SweepRun {
            s,
            phase,
            verdict: art.classification.verdict,
            terminal: Some(art.outcome.terminal),
            hs0_final_drift: art.classification.evidence.hs0_final_drift,
            neck_ratio_final: art.classification.evidence.neck_ratio_final,
            steps: art.outcome.steps,
            failure: None,
        },
        Err(e) => SweepRun {
            s,
            phase,
            verdict: Verdict::Undetermined,
            terminal: None,
            hs0_final_drift: None,
            neck_ratio_final: None,
            steps: 0,
            failure: Some(e.to_string()),
        },
    }
}

pub fn sample_points(samples: usize) -> Vec<f64> {
    let last = (samples.max(2) - 1) as f64;
    (0..samples.max(2)).map(|k| k as f64 / last).collect()
}

/// Runs the sweep. Initial samples are evaluated concurrently when `parallel` is set; the
/// report does not depend on it.
pub fn run_sweep(cfg: &SweepConfig, parallel: bool) -> Result<SweepReport, SweepError> {
    let points = sample_points(cfg.samples);
    let mut runs: Vec<SweepRun> = if parallel {
        points.par_iter().map(|&s| evaluate(cfg, s, Phase::Initial)).collect()
    } else {
        points.iter().map(|&s| evaluate(cfg, s, Phase::Initial)).collect()
    };
    let (first, last) = (&runs[0], &runs[runs.len() - 1]);
    if first.verdict != Verdict::NearTypeII {
        return Err(SweepError::AnchorMisclassified { s: 0.0, expected: Verdict::NearTypeII, found: first.verdict });
    }
    if last.verdict != Verdict::FarTypeI {
        return Err(SweepError::AnchorMisclassified { s: 1.0, expected: Verdict::FarTypeI, found: last.verdict });
    }

    let mut monotonicity_violations = Vec::new();
    for (i, far) in runs.iter().enumerate().filter(|(_, r)| r.verdict == Verdict::FarTypeI) {
        for near in runs[i + 1..].iter().filter(|r| r.verdict == Verdict::NearTypeII) {
            monotonicity_violations.push((far.s, near.s));
        }
    }

    let hi_idx = runs.iter().position(|r| r.verdict == Verdict::FarTypeI).expect("anchor checked");
    let lo_idx = runs[..hi_idx].iter().rposition(|r| r.verdict == Verdict::NearTypeII).expect("anchor checked");
    let (mut s_lo, mut s_hi) = (runs[lo_idx].s, runs[hi_idx].s);
    let mut stopped_at = None;
    // Undetermined samples strictly between the initial bracket ends leave nothing to bisect.
    if hi_idx == lo_idx + 1 {
        for _ in 0..cfg.bisection_depth {
            let mid = 0.5 * (s_lo + s_hi);
            let run = evaluate(cfg, mid, Phase::Bisection);
            let verdict = run.verdict;
            runs.push(run);
            match verdict {
                Verdict::NearTypeII => s_lo = mid,
                Verdict::FarTypeI => s_hi = mid,
                Verdict::Undetermined => {
                    stopped_at = Some(mid);
                    break;
                }
            }
        }
    }
    let undetermined =
        runs.iter().filter(|r| r.verdict == Verdict::Undetermined && r.s >= s_lo && r.s <= s_hi).map(|r| r.s).collect();
    Ok(SweepReport { runs, s_lo, s_hi, undetermined, monotonicity_violations, stopped_at })
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:?}"))
}

pub fn report_to_csv(report: &SweepReport, metadata: &[String]) -> String {
    let mut out = String::new();
    for m in metadata {
        let _ = writeln!(out, "# {m}");
    }
    let _ = writeln!(out, "# bracket s_lo={:?} s_hi={:?}", report.s_lo, report.s_hi);
    let _ = writeln!(out, "# undetermined_in_bracket {:?}", report.undetermined);
    let _ = writeln!(out, "# monotonicity_violations {:?}", report.monotonicity_violations);
    if let Some(s) = report.stopped_at {
        let _ = writeln!(out, "# bisection stopped at undetermined s={s:?}");
    }
    out.push_str("s,phase,verdict,terminal,hs0_final_drift,neck_ratio_final,steps,failure\n");
    for r in &report.runs {
        let phase = match r.phase {
            Phase::Initial => "initial",
            Phase::Bisection => "bisection",
        };
        let _ = writeln!(
            out,
            "{:?},{phase},{},{},{},{},{},{}",
            r.s,
            r.verdict,
            r.terminal.map_or("", |t| t.name()),
            opt(r.hs0_final_drift),
            opt(r.neck_ratio_final),
            r.steps,
            r.failure.as_deref().unwrap_or("").replace([',', '\n'], ";")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_points_span_unit_interval() {
        let p = sample_points(12);
        assert_eq!(p.len(), 12);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[11], 1.0);
        assert!((p[1] - 1.0 / 11.0).abs() < 1e-15);
    }
}
