//! Randomized dynamical-invariant suites: energy-gradient consistency,
//! per-step dissipation, nodal monotonicity, the bump-mass derivative
//! identity, small-bump preservation with its ρ calibration, and
//! σ-equivariance of the stepper. The CLI `invariants` command and the
//! acceptance tests both run these.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::VectorField;
use crate::flow::{self, FlowParams, FlowState};
use crate::grid::RadialGrid;
use crate::nodal;
use crate::numeric::neumaier_sum;
use crate::system::{self, apply_group_action, GroupAction, ProblemSpec};

/// Result of one suite run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantOutcome {
    pub name: String,
    pub trials: usize,
    pub passed: bool,
    /// Counterexample descriptions (empty when passed).
    pub failures: Vec<String>,
    pub detail: String,
}

impl InvariantOutcome {
    fn new(name: &str, trials: usize) -> Self {
        InvariantOutcome {
            name: name.to_string(),
            trials,
            passed: true,
            failures: Vec::new(),
            detail: String::new(),
        }
    }

    fn fail(&mut self, msg: String) {
        self.passed = false;
        if self.failures.len() < 16 {
            self.failures.push(msg);
        }
    }
}

/// Random low-frequency field vanishing at both radial ends.
pub fn random_smooth_field<R: Rng>(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    amplitude: f64,
    rng: &mut R,
) -> VectorField {
    let mut u = VectorField::zeros(spec.n_components(), grid);
    let (r0, r1) = (grid.domain.inner_radius, grid.domain.outer_radius);
    for j in 0..spec.n_components() {
        let coefs: Vec<f64> = (0..4).map(|_| rng.gen_range(-amplitude..amplitude)).collect();
        let c = u.component_mut(j);
        for (i, &r) in grid.nodes.iter().enumerate() {
            let x = (r - r0) / (r1 - r0);
            c[i] = coefs
                .iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * x).sin())
                .sum();
        }
    }
    u.enforce_dirichlet(grid);
    u
}

/// Finite-difference directional derivatives of the energy against
/// ⟨residual, direction⟩, `trials` random field/direction pairs.
pub fn gradient_consistency<R: Rng>(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    trials: usize,
    rng: &mut R,
) -> InvariantOutcome {
    let mut out = InvariantOutcome::new("gradient_consistency", trials);
    let eps = 1e-5;
    let mut worst = 0.0_f64;
    for trial in 0..trials {
        let u = random_smooth_field(spec, grid, 1.0, rng);
        let v = random_smooth_field(spec, grid, 1.0, rng);
        let plus = system::energy(spec, grid, &u.axpy(eps, &v)).unwrap();
        let minus = system::energy(spec, grid, &u.axpy(-eps, &v)).unwrap();
        let fd = (plus - minus) / (2.0 * eps);
        let r = system::residual(spec, grid, &u).unwrap();
        let mut dot = 0.0;
        for j in 0..spec.n_components() {
            dot += grid.inner(r.component(j), v.component(j));
        }
        let rel = (fd - dot).abs() / dot.abs().max(1e-6);
        worst = worst.max(rel);
        if rel >= 1e-6 {
            out.fail(format!("trial {trial}: fd {fd:.9e} vs pairing {dot:.9e} (rel {rel:.2e})"));
        }
    }
    out.detail = format!("max relative mismatch {worst:.2e}");
    out
}

/// Per-accepted-step energy monotonicity over random trajectories. With
/// `enforce_rejection = false` the raw IMEX update is applied at a fixed
/// step size and accepted unconditionally — the deliberately broken stepper
/// used by the fault-injection path.
pub fn dissipation<R: Rng>(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    params: &FlowParams,
    trajectories: usize,
    max_steps: usize,
    enforce_rejection: bool,
    amplitude: f64,
    rng: &mut R,
) -> InvariantOutcome {
    let name = if enforce_rejection {
        "dissipation"
    } else {
        "dissipation_no_rejection"
    };
    let mut out = InvariantOutcome::new(name, trajectories);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..trajectories {
        let u0 = random_smooth_field(spec, grid, amplitude, rng);
        let mut state = FlowState::initial(spec, grid, params, u0).unwrap();
        for k in 0..max_steps {
            let prev_energy = state.energy;
            if enforce_rejection {
                match flow::step(spec, grid, params, &state) {
                    Ok(next) => state = next,
                    Err(_) => break, // dt underflow: blowup suspect, trajectory over
                }
            } else {
                match flow::attempt_step(spec, grid, &state, params.dt_init) {
                    Ok(Some((u_new, e_new))) => {
                        state = FlowState {
                            t: state.t + params.dt_init,
                            u: u_new,
                            energy: e_new,
                            ..state
                        };
                    }
                    _ => break,
                }
            }
            let delta = state.energy - prev_energy;
            worst = worst.max(delta);
            if delta > 1e-12 {
                out.fail(format!(
                    "trial {trial}, step {k}: energy rose by {delta:.3e} at t = {:.4}",
                    state.t
                ));
                break;
            }
            if state.u.h1_norm(grid) < params.decay_threshold
                || state.u.sup_norm() > params.blowup_cap
            {
                break;
            }
        }
    }
    out.detail = format!("max per-step energy increment {worst:.3e}");
    out
}

/// Per-component nodal counts nonincreasing at every sampled time.
pub fn nodal_monotonicity<R: Rng>(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    params: &FlowParams,
    trajectories: usize,
    rng: &mut R,
) -> InvariantOutcome {
    let mut out = InvariantOutcome::new("nodal_monotonicity", trajectories);
    for trial in 0..trajectories {
        let u0 = random_smooth_field(spec, grid, 2.0, rng);
        let report = flow::evolve(spec, grid, params, u0).unwrap();
        for w in report.samples.windows(2) {
            for j in 0..spec.n_components() {
                if w[1].node_counts[j] > w[0].node_counts[j] {
                    out.fail(format!(
                        "trial {trial}: component {} rose {} -> {} between t = {:.4} and {:.4}",
                        j + 1,
                        w[0].node_counts[j],
                        w[1].node_counts[j],
                        w[0].t,
                        w[1].t
                    ));
                }
            }
        }
    }
    out
}

/// Centered time-difference of ∫|u_{j,q}|⁴ against 4∫(∂_t u_j)(u_{j,q})³ on
/// smooth trajectory stretches, where ∂_t u_j is the scheme's centered
/// difference. One identity evaluation (the dominant bump) per segment.
pub fn bump_derivative_identity<R: Rng>(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    segments: usize,
    rng: &mut R,
) -> InvariantOutcome {
    let mut out = InvariantOutcome::new("bump_derivative_identity", segments);
    let dt = 1e-3;
    let params = FlowParams {
        dt_init: dt,
        dt_max: dt,
        t_max: 10.0,
        ..FlowParams::default()
    };
    let mut worst = 0.0_f64;
    let mut done = 0usize;
    let mut attempts = 0usize;
    while done < segments && attempts < segments * 8 {
        attempts += 1;
        let u0 = random_smooth_field(spec, grid, 1.5, rng);
        let mut state = FlowState::initial(spec, grid, &params, u0).unwrap();
        // burn in a few steps so the state is parabolic-smooth
        let mut ok = true;
        for _ in 0..10 {
            match flow::step(spec, grid, &params, &state) {
                Ok(next) => state = next,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let prev = state.clone();
        let (mid, next) = match (flow::step(spec, grid, &params, &prev))
            .and_then(|m| flow::step(spec, grid, &params, &m).map(|n| (m, n)))
        {
            Ok(pair) => pair,
            Err(_) => continue,
        };
        // the step controller must not have changed dt inside the window
        if (mid.t - prev.t - dt).abs() > 1e-12 || (next.t - mid.t - dt).abs() > 1e-12 {
            continue;
        }

        let threshold = params.nodal_threshold;
        let mid_profile = nodal::profile(spec, grid, &mid.u, threshold);
        let prev_profile = nodal::profile(spec, grid, &prev.u, threshold);
        let next_profile = nodal::profile(spec, grid, &next.u, threshold);

        // dominant bump across components with stable structure
        let mut best: Option<(f64, f64)> = None; // (lhs, rhs)
        for j in 0..spec.n_components() {
            let (cp, cm, cn) = (
                &mid_profile.components[j],
                &prev_profile.components[j],
                &next_profile.components[j],
            );
            if cp.degenerate
                || cm.node_count != cp.node_count
                || cn.node_count != cp.node_count
            {
                continue;
            }
            for q in 0..cp.bumps.len() {
                let f_prev = cm.bumps[q].l4_norm.powi(4);
                let f_next = cn.bumps[q].l4_norm.powi(4);
                let lhs = (f_next - f_prev) / (2.0 * dt);
                // truncation of u_j at time t to bump q's sign window
                let bump = &cp.bumps[q];
                let uj = mid.u.component(j);
                let u_prev = prev.u.component(j);
                let u_next = next.u.component(j);
                let rhs = 4.0
                    * neumaier_sum(grid.nodes.iter().enumerate().map(|(i, &r)| {
                        let v = uj[i];
                        let inside = r > bump.r_lo
                            && r < bump.r_hi
                            && (v.signum() as i8) == bump.sign
                            && v != 0.0;
                        if inside {
                            let dudt = (u_next[i] - u_prev[i]) / (2.0 * dt);
                            dudt * v * v * v * grid.quadrature_weights[i]
                        } else {
                            0.0
                        }
                    }));
                if best.map(|(l, _)| lhs.abs() > l.abs()).unwrap_or(true) {
                    best = Some((lhs, rhs));
                }
            }
        }
        let Some((lhs, rhs)) = best else { continue };
        if lhs.abs() < 1e-8 {
            continue; // no meaningful bump dynamics in this segment
        }
        done += 1;
        let rel = (lhs - rhs).abs() / lhs.abs();
        worst = worst.max(rel);
        if rel >= 1e-4 {
            out.fail(format!(
                "segment {done}: d/dt ∫b⁴ = {lhs:.6e} vs 4∫(∂_t u)b³ = {rhs:.6e} (rel {rel:.2e})"
            ));
        }
    }
    out.trials = done;
    if done < segments {
        out.fail(format!("only {done}/{segments} usable segments found"));
    }
    out.detail = format!("max relative mismatch {worst:.2e}");
    out
}

/// Calibration of the small-bump threshold ρ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoCalibration {
    /// The reported ρ: half the smallest amplitude-flip L⁴ norm over the
    /// sampled bump widths.
    pub rho: f64,
    /// L⁴ norms at which d/dt ∫b⁴ flips sign, per sampled width.
    pub flip_norms: Vec<f64>,
}

/// Single-bump state: one component carries a centered window bump.
fn single_bump_state(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    center: f64,
    half_width: f64,
    amplitude: f64,
) -> VectorField {
    let mut u = VectorField::zeros(spec.n_components(), grid);
    let c = u.component_mut(0);
    for (i, &r) in grid.nodes.iter().enumerate() {
        let s = (r - center) / half_width;
        if s.abs() < 1.0 {
            let t = 1.0 - s * s;
            c[i] = amplitude * t * t * t * t;
        }
    }
    u.enforce_dirichlet(grid);
    u
}

/// d/dt ∫|u_1|⁴ at t = 0 for a single-bump state: −4⟨∇I(U)_1, u_1³⟩.
fn bump_mass_derivative(spec: &ProblemSpec, grid: &RadialGrid, u: &VectorField) -> f64 {
    let r = system::residual(spec, grid, u).unwrap();
    let u1 = u.component(0);
    -4.0 * neumaier_sum(
        (0..grid.n_nodes()).map(|i| r.component(0)[i] * u1[i].powi(3) * grid.quadrature_weights[i]),
    )
}

/// Empirical ρ: for each sampled bump width, bisect the amplitude at which
/// the t = 0 sign of d/dt ∫b⁴ flips from negative (decay) to positive
/// (growth); ρ is half the smallest flip norm. Coupling with β ≤ −1 only
/// strengthens the decay, so the single-component flip is the conservative
/// reference.
pub fn calibrate_rho(spec: &ProblemSpec, grid: &RadialGrid) -> RhoCalibration {
    let (r0, r1) = (grid.domain.inner_radius, grid.domain.outer_radius);
    let extent = r1 - r0;
    let mut flip_norms = Vec::new();
    for &(c, w) in &[
        (r0 + 0.3 * extent, 0.10 * extent),
        (r0 + 0.5 * extent, 0.20 * extent),
        (r0 + 0.6 * extent, 0.30 * extent),
    ] {
        let deriv = |a: f64| bump_mass_derivative(spec, grid, &single_bump_state(spec, grid, c, w, a));
        // bracket the flip
        let mut lo = 1e-3;
        let mut hi = 1.0;
        while deriv(hi) < 0.0 && hi < 1e4 {
            hi *= 2.0;
        }
        if deriv(hi) < 0.0 {
            continue; // no flip found; width unusable
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if deriv(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a_flip = 0.5 * (lo + hi);
        let state = single_bump_state(spec, grid, c, w, a_flip);
        flip_norms.push(grid.l4_norm(state.component(0)));
    }
    let min_flip = flip_norms.iter().copied().fold(f64::INFINITY, f64::min);
    RhoCalibration {
        rho: 0.5 * min_flip,
        flip_norms,
    }
}

/// Small-bump preservation: a bump seeded at L⁴ norm ρ/2 decays strictly
/// and never vanishes before the trajectory itself decays (or the bump
/// merges), across random bump geometries.
pub fn small_bump_preservation<R: Rng>(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    rho: f64,
    trials: usize,
    rng: &mut R,
) -> InvariantOutcome {
    let mut out = InvariantOutcome::new("small_bump_preservation", trials);
    out.detail = format!("rho = {rho:.6e}");
    let params = FlowParams {
        t_max: 30.0,
        sample_stride: 1,
        ..FlowParams::default()
    };
    let (r0, r1) = (grid.domain.inner_radius, grid.domain.outer_radius);
    let extent = r1 - r0;
    for trial in 0..trials {
        let center = r0 + extent * rng.gen_range(0.25..0.75);
        let half_width = extent * rng.gen_range(0.08..0.2);
        // normalize the bump to L⁴ norm ρ/2
        let probe = single_bump_state(spec, grid, center, half_width, 1.0);
        let unit_l4 = grid.l4_norm(probe.component(0));
        let mut u0 = single_bump_state(spec, grid, center, half_width, 0.5 * rho / unit_l4);
        // optionally a companion component far away (coupling can only help)
        if spec.n_components() > 1 && trial % 2 == 1 {
            let comp = u0.component_mut(1);
            let cc = r0 + 0.9 * extent;
            let cw = 0.05 * extent;
            for (i, &r) in grid.nodes.iter().enumerate() {
                let s = (r - cc) / cw;
                if s.abs() < 1.0 {
                    let t = 1.0 - s * s;
                    comp[i] = t * t * t * t;
                }
            }
            u0.enforce_dirichlet(grid);
        }
        let report = flow::evolve(spec, grid, &params, u0).unwrap();
        let mut prev: Option<f64> = None;
        for s in &report.samples {
            // stop watching at merger or global decay
            let Some(l4) = s.bump_l4.first().and_then(|b| b.first()).copied() else {
                break;
            };
            if s.node_counts[0] != 0 {
                break;
            }
            if l4 <= 0.0 {
                out.fail(format!(
                    "trial {trial}: bump mass hit zero at t = {:.4} before decay",
                    s.t
                ));
                break;
            }
            if l4 >= rho {
                out.fail(format!(
                    "trial {trial}: bump L⁴ {l4:.3e} escaped above rho at t = {:.4}",
                    s.t
                ));
                break;
            }
            if let Some(p) = prev {
                if l4 >= p {
                    out.fail(format!(
                        "trial {trial}: bump L⁴ rose {p:.6e} -> {l4:.6e} at t = {:.4}",
                        s.t
                    ));
                    break;
                }
            }
            prev = Some(l4);
        }
    }
    out
}

/// σ ∘ step = step ∘ σ (bitwise, by the sorted-sum construction, asserted
/// at 1e−12) and comparison-matrix permutation covariance.
pub fn equivariance<R: Rng>(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    params: &FlowParams,
    trials: usize,
    rng: &mut R,
) -> InvariantOutcome {
    let mut out = InvariantOutcome::new("equivariance", trials);
    if spec.groups == 0 {
        out.detail = "no group components; action is trivial".into();
        return out;
    }
    let sigma = GroupAction::new(1);
    for trial in 0..trials {
        let u0 = random_smooth_field(spec, grid, 1.5, rng);
        let su0 = apply_group_action(sigma, spec, &u0);
        let mut a = FlowState::initial(spec, grid, params, u0).unwrap();
        let mut b = FlowState::initial(spec, grid, params, su0).unwrap();
        for k in 0..40 {
            a = match flow::step(spec, grid, params, &a) {
                Ok(s) => s,
                Err(_) => break,
            };
            b = match flow::step(spec, grid, params, &b) {
                Ok(s) => s,
                Err(_) => break,
            };
            let sa = apply_group_action(sigma, spec, &a.u);
            let dist = sa.sup_distance(&b.u);
            if dist > 1e-12 || (a.t - b.t).abs() > 1e-15 {
                out.fail(format!(
                    "trial {trial}, step {k}: σ-commutator {dist:.3e} at t = {:.4}",
                    a.t
                ));
                break;
            }
        }
        // comparison-matrix covariance on the evolved states
        let cm_a = nodal::comparison_matrix(spec, grid, &a.u, params.nodal_threshold);
        let sa = apply_group_action(sigma, spec, &a.u);
        let cm_sa = nodal::comparison_matrix(spec, grid, &sa, params.nodal_threshold);
        for pair in &cm_sa.pairs {
            let si = sigma.source_index(spec, pair.i);
            let sj = sigma.source_index(spec, pair.j);
            let orig = cm_a.get(si, sj).unwrap();
            if orig.difference_nodes != pair.difference_nodes {
                out.fail(format!(
                    "trial {trial}: comparison entry ({}, {}) changed under σ: {} vs {}",
                    pair.i + 1,
                    pair.j + 1,
                    pair.difference_nodes,
                    orig.difference_nodes
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, RadialDomain};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(p: usize, groups: usize, remainder: usize) -> (ProblemSpec, RadialGrid) {
        let spec = ProblemSpec::new(
            -2.0,
            p,
            groups,
            remainder,
            vec![0; groups],
            vec![0; remainder],
            RadialDomain::ball(1.0, 3).unwrap(),
        )
        .unwrap();
        let grid = build_grid(spec.domain, 96).unwrap();
        (spec, grid)
    }

    #[test]
    fn gradient_suite_passes() {
        let (spec, grid) = setup(2, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = gradient_consistency(&spec, &grid, 10, &mut rng);
        assert!(out.passed, "{:?}", out.failures);
    }

    #[test]
    fn dissipation_suite_passes_with_rejection() {
        let (spec, grid) = setup(2, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = FlowParams::default();
        let out = dissipation(&spec, &grid, &params, 5, 60, true, 2.0, &mut rng);
        assert!(out.passed, "{:?}", out.failures);
    }

    #[test]
    fn broken_stepper_violates_dissipation() {
        let (spec, grid) = setup(2, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // large fixed steps without rejection: the explicit cubic term
        // overshoots and the energy rises
        let params = FlowParams {
            dt_init: 0.05,
            dt_max: 0.05,
            ..FlowParams::default()
        };
        let out = dissipation(&spec, &grid, &params, 10, 80, false, 4.0, &mut rng);
        assert!(!out.passed, "fault injection failed to trip: {}", out.detail);
    }

    #[test]
    fn rho_calibration_is_positive_and_small() {
        let (spec, grid) = setup(2, 1, 0);
        let cal = calibrate_rho(&spec, &grid);
        assert!(cal.rho > 0.0 && cal.rho < 10.0, "rho {}", cal.rho);
        assert!(!cal.flip_norms.is_empty());
    }

    #[test]
    fn equivariance_suite_passes() {
        let (spec, grid) = setup(3, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = equivariance(&spec, &grid, &FlowParams::default(), 3, &mut rng);
        assert!(out.passed, "{:?}", out.failures);
    }
}
