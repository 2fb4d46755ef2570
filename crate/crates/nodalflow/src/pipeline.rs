//! The batch pipeline behind the CLI: seed → bisect → extract → refine →
//! verify, with manifests and CSV artifacts, plus the axis sweep driver.
//!
//! Multi-bump seeds need more than the one-parameter ray: the nontrivial
//! saddles carrying several prescribed bumps have several unstable
//! directions, so a generic ray crossing of the basin boundary shadows a
//! semi-trivial state (one surviving bump) instead. The pipeline therefore
//! (a) calibrates per-row amplitudes so every bump row reaches its scalar
//! criticality at the same ray multiplier, and (b) refines the crossing by
//! alternating per-row bisection (edge tracking): each row's multiplier is
//! bisected on "this bump dies first" versus "something else gives way",
//! which steers the trajectory onto the stable set of the saddle where all
//! prescribed bumps survive.

use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::basin::{
    bisect_boundary, extract_equilibrium, newton_refine, verify_solution, BisectionParams,
    Candidate, EquilibriumResult, NewtonOptions, VerifyOptions, HANDOFF_RESIDUAL,
};
use crate::bounds::ks_sequence;
use crate::config::{ConfigError, RunConfig};
use crate::field::VectorField;
use crate::flow::{evolve, first_bump_exit_time, FlowParams, FlowState};
use crate::grid::{build_grid, RadialGrid};
use crate::invariants::calibrate_rho;
use crate::manifest::{write_profile_csv, RunManifest, SolveSummary};
use crate::numeric::neumaier_sum;
use crate::seed::{build_seed, compose_rows, seed_rows, subdivide, SeedRow};
use crate::system::ProblemSpec;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Invalid configuration (exit code 3).
    #[error("configuration: {0}")]
    Config(String),
    /// Numerical failure (exit code 2).
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

/// A solved run: the refined equilibrium plus its summary.
pub struct SolveRun {
    pub spec: ProblemSpec,
    pub grid: RadialGrid,
    pub equilibrium: EquilibriumResult,
    pub summary: SolveSummary,
}

impl SolveRun {
    /// Exit-code contract: 0 solved and hard checks pass, 1 solved but some
    /// hard check failed.
    pub fn exit_code(&self) -> i32 {
        if self.summary.checks.all_hard_passed() {
            0
        } else {
            1
        }
    }
}

fn quiet(flow: &FlowParams) -> FlowParams {
    let mut q = flow.clone();
    q.sample_stride = usize::MAX / 2;
    q
}

/// Scalar basin-boundary multiplier of a single radial profile: the λ at
/// which λ·profile stops decaying under the single-component flow.
fn scalar_critical_multiplier(
    grid: &RadialGrid,
    flow: &FlowParams,
    profile: &[f64],
) -> Result<f64, PipelineError> {
    let scalar_spec = ProblemSpec::scalar(grid.domain, 0)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let dir = VectorField::from_components(vec![profile.to_vec()], grid)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let q = quiet(flow);
    let decays = |lambda: f64| -> Result<bool, PipelineError> {
        let report = evolve(&scalar_spec, grid, &q, dir.scale(lambda))
            .map_err(|e| PipelineError::Numerical(e.to_string()))?;
        Ok(report.fate == crate::flow::Fate::Decay)
    };
    let (mut lo, mut hi);
    if decays(1.0)? {
        hi = 2.0;
        let mut tries = 0;
        while decays(hi)? {
            hi *= 2.0;
            tries += 1;
            if tries > 40 {
                return Err(PipelineError::Numerical(
                    "seed bump row never reaches criticality".into(),
                ));
            }
        }
        lo = hi / 2.0;
    } else {
        lo = 0.5;
        let mut tries = 0;
        while !decays(lo)? {
            lo *= 0.5;
            tries += 1;
            if tries > 40 {
                return Err(PipelineError::Numerical(
                    "seed bump row is supercritical at every scale".into(),
                ));
            }
        }
        hi = lo * 2.0;
    }
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if decays(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-row multipliers equalizing the scalar critical multiplier of every
/// bump row at the geometric mean: along the shared ray all prescribed
/// bumps then approach criticality together.
pub fn calibrate_row_multipliers(
    grid: &RadialGrid,
    flow: &FlowParams,
    rows: &[SeedRow],
) -> Result<Vec<f64>, PipelineError> {
    let mut lambdas = Vec::with_capacity(rows.len());
    for row in rows {
        lambdas.push(scalar_critical_multiplier(grid, flow, &row.values)?);
    }
    let log_mean = lambdas.iter().map(|l| l.ln()).sum::<f64>() / lambdas.len().max(1) as f64;
    let target = log_mean.exp();
    Ok(lambdas.iter().map(|l| l / target).collect())
}

/// L² mass of a component restricted to a fixed radial span.
fn row_l2_mass(grid: &RadialGrid, u: &VectorField, row: &SeedRow) -> f64 {
    let c = u.component(row.component);
    neumaier_sum(grid.nodes.iter().enumerate().filter_map(|(i, &r)| {
        if r >= row.span.0 && r <= row.span.1 {
            Some(c[i] * c[i] * grid.quadrature_weights[i])
        } else {
            None
        }
    }))
    .max(0.0)
    .sqrt()
}

/// Rescales each row's span of its component so the row L² masses match the
/// targets. Cell boundaries sit near the sign changes where the profile is
/// tiny, so the piecewise factors introduce only negligible kinks, which
/// the next parabolic step smooths away.
fn renormalize_rows(
    grid: &RadialGrid,
    u: &mut VectorField,
    rows: &[SeedRow],
    targets: &[f64],
) -> bool {
    for (row, &target) in rows.iter().zip(targets) {
        let current = row_l2_mass(grid, u, row);
        if !(current > 1e-14) {
            return false; // a prescribed bump has vanished beyond rescue
        }
        let factor = target / current;
        let c = u.component_mut(row.component);
        for (i, &r) in grid.nodes.iter().enumerate() {
            if r >= row.span.0 && r <= row.span.1 {
                c[i] *= factor;
            }
        }
    }
    true
}

/// Per-row Rayleigh multipliers: μ_row = ⟨∇I(U), u⟩ / ⟨u, u⟩ over the span.
/// They vanish exactly at an unconstrained equilibrium.
fn row_multipliers(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    u: &VectorField,
    rows: &[SeedRow],
) -> Result<Vec<f64>, PipelineError> {
    let res = crate::system::residual(spec, grid, u)
        .map_err(|e| PipelineError::Numerical(e.to_string()))?;
    Ok(rows
        .iter()
        .map(|row| {
            let c = u.component(row.component);
            let r_c = res.component(row.component);
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, &rad) in grid.nodes.iter().enumerate() {
                if rad >= row.span.0 && rad <= row.span.1 {
                    num += r_c[i] * c[i] * grid.quadrature_weights[i];
                    den += c[i] * c[i] * grid.quadrature_weights[i];
                }
            }
            num / den.max(1e-300)
        })
        .collect())
}

/// Relaxes the shape under the mass-constrained flow: semi-implicit steps
/// followed by per-row L² renormalization. The constraints freeze the
/// unstable amplitude/transfer modes of the saddle, so the constrained
/// dynamics converges to the saddle's shape for the given masses.
fn constrained_relax(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    u: &mut VectorField,
    rows: &[SeedRow],
    targets: &[f64],
    steps: usize,
) -> Result<bool, PipelineError> {
    let mut dt = 5e-3;
    let mut state = FlowState::initial(spec, grid, &FlowParams::default(), u.clone())
        .map_err(|e| PipelineError::Numerical(e.to_string()))?;
    for _ in 0..steps {
        match crate::flow::attempt_step(spec, grid, &state, dt) {
            Ok(Some((mut u_new, _))) => {
                if !renormalize_rows(grid, &mut u_new, rows, targets) {
                    return Ok(false);
                }
                let energy = crate::system::energy(spec, grid, &u_new)
                    .map_err(|e| PipelineError::Numerical(e.to_string()))?;
                state = FlowState {
                    t: state.t + dt,
                    u: u_new,
                    energy,
                    ..state
                };
                dt = (dt * 1.05).min(0.02);
            }
            _ => {
                dt *= 0.5;
                if dt < 1e-10 {
                    return Err(PipelineError::Numerical(
                        "constrained relaxation step underflow".into(),
                    ));
                }
            }
        }
    }
    *u = state.u;
    Ok(true)
}

/// Runs the full solve pipeline for one configuration. Writes nothing; see
/// `write_solve_artifacts` for the CSV/manifest side.
pub fn run_solve(config: &RunConfig) -> Result<SolveRun, PipelineError> {
    config.validate().map_err(PipelineError::from)?;
    let spec = config.problem.clone();
    let grid = build_grid(spec.domain, config.grid_intervals)
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let partition = subdivide(&grid, &spec, seed_k(config))
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let seed_params = config.seed.to_params(&spec);
    let seed = build_seed(&spec, &grid, &partition, &seed_params)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    if !seed.targets_met {
        return Err(PipelineError::Config(format!(
            "seed has all-zero amplitude rows {:?}; node targets unreachable",
            seed.empty_rows
        )));
    }

    let rows = seed_rows(&spec, &grid, &partition, &seed_params);
    let calibration = if config.seed.wants_calibration() {
        calibrate_row_multipliers(&grid, &config.flow, &rows)?
    } else {
        vec![1.0; rows.len()]
    };
    let direction = compose_rows(&rows, &calibration, spec.n_components(), &grid);

    let bracket = straddle_bracket(&spec, &grid, config, &direction)?;
    let outcome = bisect_boundary(&spec, &grid, &config.flow, &direction, &bracket)
        .map_err(|e| PipelineError::Numerical(e.to_string()))?;

    let candidate = if rows.len() > 1 {
        extract_constrained(&spec, &grid, &config.flow, &rows, &calibration, outcome.lambda_star)?
    } else {
        extract_equilibrium(
            &spec,
            &grid,
            &config.flow,
            &direction,
            outcome.lambda_star,
            HANDOFF_RESIDUAL,
        )
        .map_err(|e| PipelineError::Numerical(e.to_string()))?
    };

    let mut equilibrium = newton_refine(
        &spec,
        &grid,
        candidate.u,
        &NewtonOptions {
            nodal_threshold: config.flow.nodal_threshold,
            ..NewtonOptions::default()
        },
    )
    .map_err(|e| PipelineError::Numerical(e.to_string()))?;
    equilibrium.provenance.lambda_star = Some(outcome.lambda_star);
    equilibrium.provenance.bisection_iterations = Some(outcome.iterations);
    equilibrium.provenance.extract_time = Some(candidate.t_at_min);

    let schedule = if spec.groups >= 1 {
        ks_sequence(spec.p, spec.groups, &spec.group_targets, 2).ok()
    } else {
        None
    };
    equilibrium.checks = verify_solution(
        &spec,
        &grid,
        &equilibrium,
        schedule.as_ref(),
        &VerifyOptions::default(),
    );

    // Exit-time bookkeeping along the λ* trajectory, against the calibrated ρ.
    let rho = calibrate_rho(&spec, &grid).rho;
    let traced = evolve(&spec, &grid, &config.flow, direction.scale(outcome.lambda_star))
        .map_err(|e| PipelineError::Numerical(e.to_string()))?;
    let exit_time = first_bump_exit_time(&traced, rho, &spec);

    let mut summary = SolveSummary::from_result("solve", &equilibrium);
    summary.lambda_star = Some(outcome.lambda_star);
    summary.bisection_iterations = Some(outcome.iterations);
    summary.checks = equilibrium.checks.clone();
    summary.rho = Some(rho);
    summary.exit_time = exit_time;

    Ok(SolveRun {
        spec,
        grid,
        equilibrium,
        summary,
    })
}

/// Edge-tracking extraction for multi-row seeds: balance the per-row
/// multipliers, then harvest the minimal-relative-residual state of the
/// balanced trajectory. Retries with longer balancing horizons when the
/// candidate stays outside the Newton handoff.
/// Candidate quality classes, best first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum CandidateClass {
    /// Node counts match the targets and every component is nontrivial.
    OnTarget,
    /// Every component nontrivial, counts off target.
    Nontrivial,
    /// Converged but some component vanished.
    Degenerate,
}

/// Constrained extraction for multi-bump seeds.
///
/// The nontrivial saddles carrying k prescribed bumps have k unstable
/// directions (one per bump amplitude), so the min-residual harvest of a
/// single trajectory cannot shadow them: the trajectory always slides off
/// to a semi-trivial state. Holding the k bump-row L² masses fixed freezes
/// exactly those unstable directions, and the constrained flow then relaxes
/// stably to the saddle's shape for the given masses. The masses themselves
/// are scanned over a deterministic grid of fractions of the bisected-ray
/// masses; each relaxed state is test-refined by Newton and the first
/// solution whose nodal data matches the targets wins (falling back to the
/// best nontrivial one).
/// L⁴ mass of a component of a state over a row's span.
fn row_l4(grid: &RadialGrid, u: &VectorField, row: &SeedRow) -> f64 {
    let c = u.component(row.component);
    neumaier_sum(grid.nodes.iter().enumerate().filter_map(|(i, &r)| {
        if r >= row.span.0 && r <= row.span.1 {
            Some(c[i].powi(4) * grid.quadrature_weights[i])
        } else {
            None
        }
    }))
    .max(0.0)
    .powf(0.25)
}

/// One relax-and-refine trial at fixed row masses. Returns the refined
/// equilibrium with its quality class and dead-row diagnosis.
fn constrained_trial(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    flow: &FlowParams,
    rows: &[SeedRow],
    seed_state: &VectorField,
    masses: &[f64],
) -> Option<(CandidateClass, Vec<usize>, EquilibriumResult)> {
    const BUMP_FLOOR: f64 = 1e-3;
    let mut u = seed_state.clone();
    match constrained_relax(spec, grid, &mut u, rows, masses, 2500) {
        Ok(true) => {}
        _ => return None,
    }
    if !u.is_finite() || u.sup_norm() > 1e3 {
        return None;
    }
    let refined = newton_refine(
        spec,
        grid,
        u,
        &NewtonOptions {
            handoff_residual: f64::INFINITY,
            nodal_threshold: flow.nodal_threshold,
            ..NewtonOptions::default()
        },
    )
    .ok()?;

    let dead: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| row_l4(grid, &refined.u_star, r) < BUMP_FLOOR)
        .map(|(i, _)| i)
        .collect();
    let targets = spec.node_targets();
    let counts = refined.nodal.node_counts();
    let nontrivial = refined
        .nodal
        .components
        .iter()
        .all(|c| !c.degenerate && c.bumps.iter().all(|b| b.l4_norm > BUMP_FLOOR));
    // A genuine nontrivial solution obeys the difference-node lower bounds;
    // spurious concentrated states fail them and are never on target. The
    // counts must also be stable across the threshold decade.
    let coarse = crate::nodal::profile(spec, grid, &refined.u_star, 1e-6).node_counts();
    let comparisons = &refined.comparisons;
    let bounds_ok = comparisons.pairs.iter().all(|p| {
        p.difference_nodes >= crate::bounds::theorem14_lower(counts[p.i], counts[p.j])
    });
    let class = if counts == targets && coarse == targets && nontrivial && dead.is_empty() && bounds_ok
    {
        CandidateClass::OnTarget
    } else if nontrivial {
        CandidateClass::Nontrivial
    } else {
        CandidateClass::Degenerate
    };
    Some((class, dead, refined))
}

fn extract_constrained(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    flow: &FlowParams,
    rows: &[SeedRow],
    calibration: &[f64],
    lambda_star: f64,
) -> Result<Candidate, PipelineError> {
    let mult: Vec<f64> = calibration.iter().map(|c| c * lambda_star).collect();
    let seed_state = compose_rows(rows, &mult, spec.n_components(), grid);
    let base_masses: Vec<f64> =
        rows.iter().map(|r| row_l2_mass(grid, &seed_state, r)).collect();

    let mut best: Option<(CandidateClass, Candidate, Vec<f64>)> = None;
    let mut consider =
        |class: CandidateClass,
         refined: &EquilibriumResult,
         masses: &[f64],
         best: &mut Option<(CandidateClass, Candidate, Vec<f64>)>| {
            if best.as_ref().map(|(c, _, _)| class < *c).unwrap_or(true) {
                *best = Some((
                    class,
                    Candidate {
                        residual_norm: refined.residual_norm,
                        u: refined.u_star.clone(),
                        t_at_min: 0.0,
                    },
                    masses.to_vec(),
                ));
            }
        };

    // Phase A: scan global mass fractions of the bisected-ray masses.
    for &ms in &[0.80, 0.85, 0.75, 0.90, 0.70, 0.95, 0.65, 0.60, 0.50] {
        let masses: Vec<f64> = base_masses.iter().map(|m| ms * m).collect();
        if let Some((class, _, refined)) =
            constrained_trial(spec, grid, flow, rows, &seed_state, &masses)
        {
            if class == CandidateClass::OnTarget {
                return Ok(Candidate {
                    residual_norm: refined.residual_norm,
                    u: refined.u_star,
                    t_at_min: 0.0,
                });
            }
            consider(class, &refined, &masses, &mut best);
        }
    }

    // Phase B: per-row repair from the best scan point — starved rows get
    // more mass (and their competitors slightly less), surplus structure is
    // shaved.
    let mut masses = best
        .as_ref()
        .map(|(_, _, m)| m.clone())
        .unwrap_or_else(|| base_masses.iter().map(|m| 0.8 * m).collect());
    let targets = spec.node_targets();
    for _round in 0..24 {
        match constrained_trial(spec, grid, flow, rows, &seed_state, &masses) {
            None => {
                for m in &mut masses {
                    *m *= 0.9;
                }
            }
            Some((class, dead, refined)) => {
                if class == CandidateClass::OnTarget {
                    return Ok(Candidate {
                        residual_norm: refined.residual_norm,
                        u: refined.u_star,
                        t_at_min: 0.0,
                    });
                }
                let counts = refined.nodal.node_counts();
                consider(class, &refined, &masses, &mut best);
                if !dead.is_empty() {
                    for i in 0..masses.len() {
                        if dead.contains(&i) {
                            masses[i] *= 1.3;
                        } else {
                            masses[i] *= 0.96;
                        }
                    }
                    continue;
                }
                let mut adjusted = false;
                for (j, (&c, &t)) in counts.iter().zip(&targets).enumerate() {
                    if c > t {
                        for (i, r) in rows.iter().enumerate() {
                            if r.component == j {
                                masses[i] *= 0.94;
                                adjusted = true;
                            }
                        }
                    }
                }
                if !adjusted {
                    for m in &mut masses {
                        *m *= 1.08;
                    }
                }
            }
        }
    }
    best.map(|(_, c, _)| c).ok_or_else(|| {
        PipelineError::Numerical(
            "constrained extraction found no refinable state at any mass assignment".into(),
        )
    })
}

/// Expands the bisection bracket until the endpoints straddle the basin
/// boundary: lower endpoints that fail to decay are halved, upper endpoints
/// that decay are doubled (a bounded number of times each).
fn straddle_bracket(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    config: &RunConfig,
    direction: &VectorField,
) -> Result<BisectionParams, PipelineError> {
    let mut params = config.bisection.clone();
    let q = quiet(&config.flow);
    let decays = |lambda: f64| -> Result<bool, PipelineError> {
        let report = evolve(spec, grid, &q, direction.scale(lambda))
            .map_err(|e| PipelineError::Numerical(e.to_string()))?;
        Ok(report.fate == crate::flow::Fate::Decay)
    };
    let mut tries = 0;
    while !decays(params.lambda_lo)? {
        params.lambda_lo *= 0.5;
        tries += 1;
        if tries > 12 {
            return Err(PipelineError::Numerical(format!(
                "no decaying lower endpoint found down to lambda = {}",
                params.lambda_lo
            )));
        }
    }
    tries = 0;
    while decays(params.lambda_hi)? {
        params.lambda_hi *= 2.0;
        tries += 1;
        if tries > 12 {
            return Err(PipelineError::Numerical(format!(
                "no non-decaying upper endpoint found up to lambda = {}",
                params.lambda_hi
            )));
        }
    }
    Ok(params)
}

fn seed_k(config: &RunConfig) -> usize {
    match &config.seed {
        crate::config::SeedConfig::Uniform { k_micro, .. } => *k_micro,
        crate::config::SeedConfig::Explicit(p) => p.k_micro,
    }
}

/// Writes profile.csv and manifest.json under `out_dir`.
pub fn write_solve_artifacts(
    config: &RunConfig,
    run: &SolveRun,
    timings_ms: &[(String, u128)],
    out_dir: &Path,
) -> Result<(), PipelineError> {
    std::fs::create_dir_all(out_dir)?;
    let mut profile = Vec::new();
    write_profile_csv(&run.grid, &run.equilibrium.u_star, &mut profile)?;
    std::fs::write(out_dir.join("profile.csv"), profile)?;

    let mut manifest = RunManifest::new(config.clone());
    manifest.results.push(run.summary.clone());
    for (k, v) in timings_ms {
        manifest.timings_ms.insert(k.clone(), *v);
    }
    std::fs::write(out_dir.join("manifest.json"), manifest.to_json())?;
    Ok(())
}

/// Sweep axes over `run_solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Beta,
    Amplitude,
    KMicro,
    Grid,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "beta" => Ok(SweepAxis::Beta),
            "amplitude" => Ok(SweepAxis::Amplitude),
            "K" | "k" | "k_micro" => Ok(SweepAxis::KMicro),
            "grid" => Ok(SweepAxis::Grid),
            other => Err(format!("unknown sweep axis '{other}' (beta|amplitude|K|grid)")),
        }
    }
}

/// The config at one sweep point.
pub fn sweep_point(config: &RunConfig, axis: SweepAxis, value: f64) -> Result<RunConfig, PipelineError> {
    let mut point = config.clone();
    match axis {
        SweepAxis::Beta => point.problem.beta = value,
        SweepAxis::Amplitude => match &mut point.seed {
            crate::config::SeedConfig::Uniform { amplitude, .. } => *amplitude = value,
            crate::config::SeedConfig::Explicit(_) => {
                return Err(PipelineError::Config(
                    "amplitude sweeps need a uniform seed config".into(),
                ))
            }
        },
        SweepAxis::KMicro => {
            let k = value as usize;
            match &mut point.seed {
                crate::config::SeedConfig::Uniform { k_micro, .. } => *k_micro = k,
                crate::config::SeedConfig::Explicit(_) => {
                    return Err(PipelineError::Config(
                        "K sweeps need a uniform seed config".into(),
                    ))
                }
            }
        }
        SweepAxis::Grid => point.grid_intervals = value as usize,
    }
    Ok(point)
}

/// One sweep result row.
pub struct SweepRow {
    pub label: String,
    pub value: f64,
    pub outcome: Result<SolveRun, PipelineError>,
}

/// Runs the sweep with up to `threads` concurrent solves. Workers share
/// only the immutable base config; results merge append-only.
pub fn run_sweep(
    config: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    threads: usize,
) -> Result<Vec<SweepRow>, PipelineError> {
    if values.is_empty() {
        return Err(PipelineError::Config("empty sweep axis".into()));
    }
    let points: Vec<(f64, RunConfig)> = values
        .iter()
        .map(|&v| sweep_point(config, axis, v).map(|c| (v, c)))
        .collect::<Result<_, _>>()?;

    let threads = threads.max(1);
    let mut rows: Vec<Option<SweepRow>> = (0..points.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let rows_mutex = std::sync::Mutex::new(&mut rows);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(points.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= points.len() {
                    break;
                }
                let (value, point) = &points[idx];
                let outcome = run_solve(point);
                let row = SweepRow {
                    label: format!("{axis:?}={value}"),
                    value: *value,
                    outcome,
                };
                rows_mutex.lock().unwrap()[idx] = Some(row);
            });
        }
    });
    Ok(rows.into_iter().map(|r| r.expect("all points ran")).collect())
}

/// Aggregated sweep summary CSV: one row per point.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "label,value,status,lambda_star,residual,energy,node_counts,hard_checks_passed"
    )?;
    for row in rows {
        match &row.outcome {
            Ok(run) => {
                let counts: Vec<String> = run
                    .summary
                    .nodal
                    .node_counts()
                    .iter()
                    .map(|c| c.to_string())
                    .collect();
                writeln!(
                    out,
                    "{},{},ok,{},{},{},{},{}",
                    row.label,
                    row.value,
                    run.summary.lambda_star.unwrap_or(f64::NAN),
                    run.summary.residual_norm,
                    run.summary.energy,
                    counts.join("|"),
                    run.summary.checks.all_hard_passed()
                )?;
            }
            Err(e) => {
                let kind = match e {
                    PipelineError::Config(_) => "config_error",
                    PipelineError::Numerical(_) => "numerical_error",
                    PipelineError::Io(_) => "io_error",
                };
                writeln!(out, "{},{},{kind},,,,,", row.label, row.value)?;
            }
        }
    }
    Ok(())
}

/// Stopwatch helper for manifest timings.
pub struct Stopwatch {
    start: Instant,
    pub laps: Vec<(String, u128)>,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            start: Instant::now(),
            laps: Vec::new(),
        }
    }

    pub fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.laps
            .push((name.to_string(), (now - self.start).as_millis()));
        self.start = now;
    }
}
