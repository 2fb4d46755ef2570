//! Run manifests and the stable CSV profile format.
//!
//! A manifest echoes its configuration (re-runnable), and everything except
//! the timing/environment fingerprint is deterministic for a fixed config
//! and RNG seed: `stable_json` strips exactly those fields for
//! reproducibility comparisons.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basin::{CheckReport, EquilibriumResult};
use crate::config::RunConfig;
use crate::field::VectorField;
use crate::grid::RadialGrid;
use crate::invariants::InvariantOutcome;
use crate::nodal::{ComparisonMatrix, NodalProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactInfo {
    pub name: String,
    pub version: String,
}

impl Default for ArtifactInfo {
    fn default() -> Self {
        ArtifactInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvFingerprint {
    pub os: String,
    pub arch: String,
}

impl Default for EnvFingerprint {
    fn default() -> Self {
        EnvFingerprint {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

/// Summary of one solved equilibrium (the full profile lives in the CSV).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub label: String,
    pub lambda_star: Option<f64>,
    pub bisection_iterations: Option<usize>,
    pub residual_norm: f64,
    pub energy: f64,
    pub newton_iterations: usize,
    pub nodal: NodalProfile,
    pub comparisons: ComparisonMatrix,
    pub checks: CheckReport,
    /// Calibrated small-bump threshold used for exit-time bookkeeping.
    pub rho: Option<f64>,
    /// First sampled time a prescribed bump fell to ρ or the state entered H
    /// along the λ* trajectory.
    pub exit_time: Option<f64>,
}

impl SolveSummary {
    pub fn from_result(label: impl Into<String>, result: &EquilibriumResult) -> Self {
        SolveSummary {
            label: label.into(),
            lambda_star: result.provenance.lambda_star,
            bisection_iterations: result.provenance.bisection_iterations,
            residual_norm: result.residual_norm,
            energy: result.energy,
            newton_iterations: result.provenance.newton_iterations,
            nodal: result.nodal.clone(),
            comparisons: result.comparisons.clone(),
            checks: result.checks.clone(),
            rho: None,
            exit_time: None,
        }
    }
}

/// Self-describing record of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: ArtifactInfo,
    pub config: RunConfig,
    pub environment: EnvFingerprint,
    pub timings_ms: BTreeMap<String, u128>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<SolveSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariants: Vec<InvariantOutcome>,
}

impl RunManifest {
    pub fn new(config: RunConfig) -> Self {
        RunManifest {
            artifact: ArtifactInfo::default(),
            config,
            environment: EnvFingerprint::default(),
            timings_ms: BTreeMap::new(),
            results: Vec::new(),
            invariants: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// The manifest with timings and environment fingerprint removed — the
    /// part that must be bitwise-reproducible for identical config + seed.
    pub fn stable_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("timings_ms");
            map.remove("environment");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}

/// Writes the stable profile CSV: header `r,u_1,...,u_N`, one row per grid
/// node, shortest round-trip decimal text.
pub fn write_profile_csv<W: std::io::Write>(
    grid: &RadialGrid,
    u: &VectorField,
    out: &mut W,
) -> std::io::Result<()> {
    let n = u.n_components();
    let mut header = String::from("r");
    for j in 0..n {
        header.push_str(&format!(",u_{}", j + 1));
    }
    writeln!(out, "{header}")?;
    for (i, &r) in grid.nodes.iter().enumerate() {
        let mut row = format!("{r}");
        for j in 0..n {
            row.push_str(&format!(",{}", u.component(j)[i]));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Reads a profile CSV back into radii and component columns.
pub fn read_profile_csv<R: std::io::BufRead>(
    input: R,
) -> std::io::Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "empty profile"))??;
    let n = header.split(',').count() - 1;
    let mut radii = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); n];
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> std::io::Result<f64> {
            s.and_then(|v| v.parse().ok()).ok_or_else(|| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, "bad profile row")
            })
        };
        radii.push(parse(parts.next())?);
        for col in cols.iter_mut() {
            col.push(parse(parts.next())?);
        }
    }
    Ok((radii, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, RadialDomain};

    #[test]
    fn profile_csv_round_trip() {
        let grid = build_grid(RadialDomain::ball(1.0, 3).unwrap(), 32).unwrap();
        let mut u = VectorField::zeros(2, &grid);
        for (i, &r) in grid.nodes.iter().enumerate() {
            u.component_mut(0)[i] = (1.0 - r * r).max(0.0) * 0.123456789;
            u.component_mut(1)[i] = r * 0.987654321;
        }
        u.enforce_dirichlet(&grid);
        let mut buf = Vec::new();
        write_profile_csv(&grid, &u, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,u_1,u_2\n"));
        assert_eq!(text.lines().count(), grid.n_nodes() + 1);
        let (radii, cols) = read_profile_csv(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(radii.len(), grid.n_nodes());
        assert_eq!(cols.len(), 2);
        for i in 0..grid.n_nodes() {
            // shortest round-trip text reproduces the exact doubles
            assert_eq!(radii[i], grid.nodes[i]);
            assert_eq!(cols[0][i], u.component(0)[i]);
            assert_eq!(cols[1][i], u.component(1)[i]);
        }
    }
}
