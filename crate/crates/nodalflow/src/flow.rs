//! Time integration of the parabolic system
//!
//! ```text
//! ∂_t u_j − Δu_j + u_j = u_j³ + β Σ_{i≠j} u_j u_i²,
//! ```
//!
//! the L²-gradient flow of the energy. One step treats the stiff linear part
//! (−Δ + 1) implicitly through a tridiagonal solve per component and the
//! cubic terms explicitly at the current state. The continuous flow
//! dissipates the energy (dI/dt = −Σ∫|∂_t u_j|²); the discrete analogue is
//! enforced rather than assumed: a step whose energy rises beyond a
//! tolerance is rejected and retried with half the step size, so every
//! accepted trajectory is monotone in energy to within `energy_increase_tol`
//! per step.
//!
//! `evolve` drives a trajectory until its fate is resolved: decay to zero
//! (the basin of attraction of the trivial solution), blowup, persistence at
//! a nonzero equilibrium, or timeout, while sampling the energy, the nodal
//! counts and the per-bump quartic masses that the basin and nodal modules
//! consume.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::VectorField;
use crate::grid::{GridError, RadialGrid};
use crate::nodal;
use crate::numeric::solve_tridiagonal;
use crate::system::{self, ProblemSpec};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("time step underflow below dt_min={dt_min} at t={t} (blowup suspect)")]
    DtUnderflow { t: f64, dt_min: f64 },
    #[error("linear solve failed at t={0}")]
    SolveFailure(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Stepper and classification parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_max: f64,
    /// Maximum allowed energy increase per accepted step.
    pub energy_increase_tol: f64,
    /// H¹ norm below which the trajectory is classified as decayed.
    pub decay_threshold: f64,
    /// Sup norm above which the trajectory is classified as blown up.
    pub blowup_cap: f64,
    /// Residual norm below which a nonzero state is classified as persistent.
    pub equilibrium_residual_tol: f64,
    /// Record a trace sample every this many accepted steps.
    pub sample_stride: usize,
    /// Relative sign threshold for the sampled nodal counts.
    pub nodal_threshold: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            dt_init: 1e-3,
            dt_min: 1e-14,
            dt_max: 0.1,
            t_max: 200.0,
            energy_increase_tol: 1e-12,
            decay_threshold: 1e-6,
            blowup_cap: 1e6,
            equilibrium_residual_tol: 1e-8,
            sample_stride: 10,
            nodal_threshold: nodal::DEFAULT_SIGN_THRESHOLD,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.dt_min && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        if self.t_max <= 0.0 {
            return Err("t_max must be positive".into());
        }
        for (name, v) in [
            ("energy_increase_tol", self.energy_increase_tol),
            ("decay_threshold", self.decay_threshold),
            ("blowup_cap", self.blowup_cap),
            ("equilibrium_residual_tol", self.equilibrium_residual_tol),
            ("nodal_threshold", self.nodal_threshold),
        ] {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.sample_stride == 0 {
            return Err("sample_stride must be >= 1".into());
        }
        Ok(())
    }
}

/// A point on a trajectory. `energy` always equals `energy(spec, grid, u)`.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub u: VectorField,
    pub energy: f64,
    pub dt: f64,
    pub(crate) accepted_streak: u32,
}

impl FlowState {
    pub fn initial(
        spec: &ProblemSpec,
        grid: &RadialGrid,
        params: &FlowParams,
        mut u0: VectorField,
    ) -> Result<Self, FlowError> {
        u0.enforce_dirichlet(grid);
        let energy = system::energy(spec, grid, &u0)?;
        Ok(FlowState {
            t: 0.0,
            u: u0,
            energy,
            dt: params.dt_init,
            accepted_streak: 0,
        })
    }

    /// The state advanced by `dt` to a new field (for custom dynamics built
    /// on `attempt_step`, e.g. constrained flows that modify the field
    /// between steps).
    pub fn advanced(&self, dt: f64, u: VectorField, energy: f64) -> Self {
        FlowState {
            t: self.t + dt,
            u,
            energy,
            dt: self.dt,
            accepted_streak: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    Decay,
    Persist,
    Blowup,
    Timeout,
}

/// One sampled instant of a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub energy: f64,
    /// Per-component nodal counts at the flow's sign threshold.
    pub node_counts: Vec<usize>,
    /// Per-component, per-bump L⁴ norms.
    pub bump_l4: Vec<Vec<f64>>,
}

/// Classification of a trajectory with its sampled traces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FateReport {
    pub fate: Fate,
    pub t_final: f64,
    /// First sampled time at which a prescribed bump fell to the ρ floor or
    /// the state entered H; filled by `first_bump_exit_time`.
    pub exit_time: Option<f64>,
    pub samples: Vec<TraceSample>,
}

impl FateReport {
    pub fn energy_trace(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().map(|s| (s.t, s.energy))
    }
}

/// One semi-implicit step with energy-based rejection.
///
/// Retries with halved dt until the energy condition holds; grows dt by 1.2
/// after five consecutive accepted steps, capped at `dt_max`. Errors with
/// `DtUnderflow` (a blowup suspect) when no acceptable step exists above
/// `dt_min`.
pub fn step(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    params: &FlowParams,
    state: &FlowState,
) -> Result<FlowState, FlowError> {
    let mut dt = state.dt.min(params.dt_max).max(params.dt_min);
    loop {
        match attempt_step(spec, grid, state, dt)? {
            Some((u_new, e_new)) if e_new <= state.energy + params.energy_increase_tol => {
                let mut streak = state.accepted_streak + 1;
                let mut dt_next = dt;
                if streak >= 5 {
                    dt_next = (dt * 1.2).min(params.dt_max);
                    streak = 0;
                }
                return Ok(FlowState {
                    t: state.t + dt,
                    u: u_new,
                    energy: e_new,
                    dt: dt_next,
                    accepted_streak: streak,
                });
            }
            _ => {
                dt *= 0.5;
                if dt < params.dt_min {
                    return Err(FlowError::DtUnderflow {
                        t: state.t,
                        dt_min: params.dt_min,
                    });
                }
            }
        }
    }
}

/// A single IMEX attempt at fixed dt; `None` when the result is non-finite.
/// The rejection-free primitive behind `step`; constrained dynamics and the
/// fault-injection suite drive it directly.
pub fn attempt_step(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    state: &FlowState,
    dt: f64,
) -> Result<Option<(VectorField, f64)>, FlowError> {
    let n_nodes = grid.n_nodes();
    let n = spec.n_components();

    // rhs = u + dt * f(u), with f the explicit cubic part.
    let mut rhs = VectorField::zeros(n, grid);
    system::nonlinearity(spec, &state.u, &mut rhs);
    for j in 0..n {
        let uj = state.u.component(j);
        let r = rhs.component_mut(j);
        for i in 0..n_nodes {
            r[i] = uj[i] + dt * r[i];
        }
    }

    // (I + dt(−Δ + 1)) u_new = rhs, per component; identical tridiagonal
    // matrix for every component.
    let mut sub = vec![0.0; n_nodes];
    let mut diag = vec![0.0; n_nodes];
    let mut sup = vec![0.0; n_nodes];
    for i in 0..n_nodes {
        let (lo, d, hi) = grid.neg_laplacian_row(i);
        if grid.is_dirichlet(i) {
            sub[i] = 0.0;
            diag[i] = 1.0;
            sup[i] = 0.0;
        } else {
            sub[i] = dt * lo;
            diag[i] = 1.0 + dt * (d + 1.0);
            sup[i] = dt * hi;
        }
    }

    let mut u_new = VectorField::zeros(n, grid);
    let mut scratch = Vec::new();
    for j in 0..n {
        let r = rhs.component_mut(j);
        for i in 0..n_nodes {
            if grid.is_dirichlet(i) {
                r[i] = 0.0;
            }
        }
        if !solve_tridiagonal(&sub, &diag, &sup, r, &mut scratch) {
            return Err(FlowError::SolveFailure(state.t));
        }
        u_new.component_mut(j).copy_from_slice(r);
    }
    u_new.enforce_dirichlet(grid);
    if !u_new.is_finite() {
        return Ok(None);
    }
    let e_new = system::energy(spec, grid, &u_new)?;
    if !e_new.is_finite() {
        return Ok(None);
    }
    Ok(Some((u_new, e_new)))
}

fn classify(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    params: &FlowParams,
    state: &FlowState,
) -> Result<Option<Fate>, FlowError> {
    let h1 = state.u.h1_norm(grid);
    if h1 < params.decay_threshold {
        return Ok(Some(Fate::Decay));
    }
    if state.u.sup_norm() > params.blowup_cap {
        return Ok(Some(Fate::Blowup));
    }
    if system::residual_norm(spec, grid, &state.u)? < params.equilibrium_residual_tol {
        return Ok(Some(Fate::Persist));
    }
    if state.t >= params.t_max {
        return Ok(Some(Fate::Timeout));
    }
    Ok(None)
}

fn sample(spec: &ProblemSpec, grid: &RadialGrid, params: &FlowParams, state: &FlowState) -> TraceSample {
    let profile = nodal::profile(spec, grid, &state.u, params.nodal_threshold);
    TraceSample {
        t: state.t,
        energy: state.energy,
        node_counts: profile.node_counts(),
        bump_l4: profile
            .components
            .iter()
            .map(|c| c.bumps.iter().map(|b| b.l4_norm).collect())
            .collect(),
    }
}

/// Evolves `u0` until its fate resolves, sampling traces along the way.
/// Step-size underflow is folded into the report as a blowup suspect rather
/// than an error.
pub fn evolve(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    params: &FlowParams,
    u0: VectorField,
) -> Result<FateReport, FlowError> {
    let mut state = FlowState::initial(spec, grid, params, u0)?;
    let mut samples = vec![sample(spec, grid, params, &state)];

    if let Some(fate) = classify(spec, grid, params, &state)? {
        return Ok(FateReport {
            fate,
            t_final: state.t,
            exit_time: None,
            samples,
        });
    }

    let mut accepted: usize = 0;
    loop {
        match step(spec, grid, params, &state) {
            Ok(next) => state = next,
            Err(FlowError::DtUnderflow { t, .. }) => {
                samples.push(sample(spec, grid, params, &state));
                return Ok(FateReport {
                    fate: Fate::Blowup,
                    t_final: t,
                    exit_time: None,
                    samples,
                });
            }
            Err(e) => return Err(e),
        }
        accepted += 1;
        let fate = classify(spec, grid, params, &state)?;
        if accepted % params.sample_stride == 0 || fate.is_some() {
            samples.push(sample(spec, grid, params, &state));
        }
        if let Some(fate) = fate {
            return Ok(FateReport {
                fate,
                t_final: state.t,
                exit_time: None,
                samples,
            });
        }
    }
}

/// Earliest sampled time at which some prescribed bump's L⁴ norm is ≤ ρ, a
/// prescribed bump has disappeared outright, or the state has entered H.
/// `None` when the trajectory never exits the prescribed class.
pub fn first_bump_exit_time(report: &FateReport, rho: f64, spec: &ProblemSpec) -> Option<f64> {
    for s in &report.samples {
        if nodal::in_h_counts(spec, &s.node_counts) {
            return Some(s.t);
        }
        for (j, bumps) in s.bump_l4.iter().enumerate() {
            let prescribed = spec.node_target(j) + 1;
            for q in 0..prescribed {
                if bumps.get(q).copied().unwrap_or(0.0) <= rho {
                    return Some(s.t);
                }
            }
        }
    }
    None
}

/// Writes a trace as CSV: `t,I,n_1..n_N,l4_<j>_<q>...` with one bump column
/// per prescribed bump (blank when the bump is absent at a sample).
pub fn write_trace_csv<W: std::io::Write>(
    spec: &ProblemSpec,
    report: &FateReport,
    out: &mut W,
) -> std::io::Result<()> {
    let n = spec.n_components();
    let mut header = String::from("t,I");
    for j in 0..n {
        header.push_str(&format!(",n_{}", j + 1));
    }
    for j in 0..n {
        for q in 0..spec.node_target(j) + 1 {
            header.push_str(&format!(",l4_{}_{}", j + 1, q + 1));
        }
    }
    writeln!(out, "{header}")?;
    for s in &report.samples {
        let mut row = format!("{},{}", s.t, s.energy);
        for j in 0..n {
            row.push_str(&format!(",{}", s.node_counts.get(j).copied().unwrap_or(0)));
        }
        for j in 0..n {
            for q in 0..spec.node_target(j) + 1 {
                match s.bump_l4.get(j).and_then(|b| b.get(q)) {
                    Some(v) => row.push_str(&format!(",{v}")),
                    None => row.push(','),
                }
            }
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, RadialDomain};
    use std::f64::consts::PI;

    fn scalar_setup(m: usize) -> (ProblemSpec, RadialGrid) {
        let domain = RadialDomain::ball(1.0, 3).unwrap();
        let spec = ProblemSpec::scalar(domain, 0).unwrap();
        let grid = build_grid(domain, m).unwrap();
        (spec, grid)
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let (spec, grid) = scalar_setup(64);
        let params = FlowParams::default();
        let state = FlowState::initial(&spec, &grid, &params, VectorField::zeros(1, &grid)).unwrap();
        let next = step(&spec, &grid, &params, &state).unwrap();
        assert_eq!(next.u.sup_norm(), 0.0);
        assert_eq!(next.energy, 0.0);
    }

    #[test]
    fn zero_initial_data_decays_at_t_zero() {
        let (spec, grid) = scalar_setup(64);
        let report = evolve(&spec, &grid, &FlowParams::default(), VectorField::zeros(1, &grid)).unwrap();
        assert_eq!(report.fate, Fate::Decay);
        assert_eq!(report.t_final, 0.0);
    }

    #[test]
    fn tiny_eigenfunction_data_decays() {
        // 1e-4 x first Dirichlet eigenfunction: inside the basin of zero.
        let (spec, grid) = scalar_setup(128);
        let mut u = VectorField::zeros(1, &grid);
        for (i, &r) in grid.nodes.iter().enumerate() {
            u.component_mut(0)[i] = 1e-4 * if r == 0.0 { PI } else { (PI * r).sin() / r };
        }
        u.enforce_dirichlet(&grid);
        let report = evolve(&spec, &grid, &FlowParams::default(), u).unwrap();
        assert_eq!(report.fate, Fate::Decay);
    }

    #[test]
    fn large_bump_does_not_decay() {
        let (spec, grid) = scalar_setup(128);
        let mut u = VectorField::zeros(1, &grid);
        for (i, &r) in grid.nodes.iter().enumerate() {
            u.component_mut(0)[i] = 50.0 * (1.0 - r * r).max(0.0);
        }
        u.enforce_dirichlet(&grid);
        let report = evolve(&spec, &grid, &FlowParams::default(), u).unwrap();
        assert_ne!(report.fate, Fate::Decay, "fate {:?}", report.fate);
    }

    #[test]
    fn accepted_steps_never_raise_energy() {
        use rand::{Rng, SeedableRng};
        let (spec, grid) = scalar_setup(96);
        let params = FlowParams {
            t_max: 1.0,
            sample_stride: 1,
            ..FlowParams::default()
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let mut u = VectorField::zeros(1, &grid);
            for (i, &r) in grid.nodes.iter().enumerate() {
                let x = r;
                u.component_mut(0)[i] = rng.gen_range(0.5..3.0) * (PI * x).sin()
                    + rng.gen_range(-1.0..1.0) * (2.0 * PI * x).sin();
            }
            u.enforce_dirichlet(&grid);
            let report = evolve(&spec, &grid, &params, u).unwrap();
            for w in report.samples.windows(2) {
                assert!(w[1].energy <= w[0].energy + 1e-12);
            }
        }
    }

    #[test]
    fn exit_time_zero_for_small_seeded_bump() {
        let (spec, grid) = scalar_setup(64);
        let mut u = VectorField::zeros(1, &grid);
        for (i, &r) in grid.nodes.iter().enumerate() {
            u.component_mut(0)[i] = 1e-3 * (PI * r).sin();
        }
        u.enforce_dirichlet(&grid);
        let params = FlowParams {
            t_max: 0.05,
            ..FlowParams::default()
        };
        let report = evolve(&spec, &grid, &params, u).unwrap();
        let l4_initial = report.samples[0].bump_l4[0][0];
        // condition already true at t = 0 with rho = 2x the initial norm
        assert_eq!(
            first_bump_exit_time(&report, 2.0 * l4_initial, &spec),
            Some(0.0)
        );
        // never true with a floor far below
        let big = FateReport {
            samples: vec![report.samples[0].clone()],
            ..report.clone()
        };
        assert_eq!(first_bump_exit_time(&big, l4_initial / 100.0, &spec), None);
    }
}
