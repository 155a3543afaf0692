use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use mcf_core::diagnostics::{classify, Classification};
use mcf_core::evolve::{run_flow, RunOutcome};
use mcf_core::initdata::{build_unperturbed, InitialDataReport};
use mcf_core::Result as CoreResult;

use crate::config::{describe, RunConfig};
use crate::export::{append_profile, probes_to_csv, records_to_csv, PROFILE_HEADER};

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: InitialDataReport,
    pub outcome: RunOutcome,
    pub classification: Classification,
    /// Profiles CSV body (empty when `profile_every` is 0).
    pub profiles: String,
    /// Offset from stored to model `z`.
    pub z_shift: f64,
}

impl RunArtifacts {
    /// Process exit code: 0 for scientific outcomes, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.outcome.terminal.is_clean() {
            0
        } else {
            1
        }
    }
}

/// Builds the initial data described by `cfg` and evolves it. No files are written.
pub fn execute(cfg: &RunConfig) -> CoreResult<RunArtifacts> {
    let (mut atlas, report) = build_unperturbed(&cfg.params, cfg.interior, &cfg.domain)?;
    for p in &cfg.perturbations {
        atlas = p.apply(&atlas)?;
    }
    let mut profiles = String::new();
    let mut seen = 0usize;
    let every = cfg.profile_every;
    let outcome = run_flow(&mut atlas, &cfg.policy, &cfg.sampling, &cfg.stop, &cfg.probes, &mut |a, _| {
        if every > 0 && seen % every == 0 {
            append_profile(&mut profiles, a);
        }
        seen += 1;
    });
    let classification = classify(&outcome.records, outcome.terminal, &cfg.thresholds, cfg.params.n);
    Ok(RunArtifacts { report, outcome, classification, profiles, z_shift: atlas.z_shift })
}

pub fn metadata(cfg: &RunConfig, art: &RunArtifacts) -> Vec<String> {
    let mut m = describe(cfg);
    let c = &art.classification;
    m.push(format!("z_shift {:?} (model z = stored z + z_shift)", art.z_shift));
    m.push(format!("terminal {} steps {}", art.outcome.terminal, art.outcome.steps));
    m.push(format!(
        "verdict {} hs0_final_drift={:?} neck_ratio_final={:?} pinch_time={:?}",
        c.verdict, c.evidence.hs0_final_drift, c.evidence.neck_ratio_final, c.evidence.pinch_time
    ));
    m
}

/// Writes `records.csv`, `probes.csv` and (if requested) `profiles.csv` into `dir`.
pub fn write_artifacts(cfg: &RunConfig, art: &RunArtifacts, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let meta = metadata(cfg, art);
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> anyhow::Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    put("records.csv", records_to_csv(&art.outcome.records, &meta))?;
    if !cfg.probes.is_empty() {
        put("probes.csv", probes_to_csv(&art.outcome.records, &cfg.probes, &art.outcome.probe_counts))?;
    }
    if cfg.profile_every > 0 {
        put("profiles.csv", format!("{PROFILE_HEADER}\n{}", art.profiles))?;
    }
    Ok(written)
}
