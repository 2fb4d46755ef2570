//! Independent verification: radial ODE shooting for equilibria and dense
//! sign-scan nodal recounts.
//!
//! The scalar equilibrium equation in radial form is
//!
//! ```text
//! u'' + (n−1)/r · u' − u + u³ = 0,
//! ```
//!
//! integrated with an adaptive Dormand–Prince 5(4) pair. On a ball the
//! integration starts from the regular center with the series
//! `u(r) ≈ a + (a − a³) r²/(2n)`; on an annulus it shoots on the initial
//! slope with u(r₀) = 0. The shooting parameter is bisected on the interior
//! zero count until the Dirichlet value at the outer boundary is met with
//! exactly the requested number of interior zeros.
//!
//! The returned profile is sampled onto the caller's grid and then polished
//! by a few local Newton steps on the *discrete* system, so that it lies on
//! the discrete equilibrium manifold (the raw samples differ from it by the
//! O(h²) truncation error). The polish displacement is guarded at the O(h²)
//! scale; the independent information — which root — comes entirely from
//! the shooting.

use thiserror::Error;

use crate::basin::{newton_refine, NewtonOptions};
use crate::field::VectorField;
use crate::grid::RadialGrid;
use crate::system::ProblemSpec;

#[derive(Debug, Error)]
pub enum ShootError {
    #[error("bracket [{lo}, {hi}] does not straddle the target zero count {target}: counts {c_lo} / {c_hi}")]
    BracketDoesNotStraddle {
        lo: f64,
        hi: f64,
        target: usize,
        c_lo: usize,
        c_hi: usize,
    },
    #[error("integrator exceeded step budget (blowup suspect) at amplitude {0}")]
    IntegratorBlowup(f64),
    #[error("system shooting did not converge after {0} iterations")]
    SystemNonconvergence(usize),
    #[error("discrete polish failed: {0}")]
    PolishFailure(String),
    #[error("polished profile moved {moved:.3e}, beyond the discretization guard {guard:.3e}")]
    PolishDisplacement { moved: f64, guard: f64 },
}

/// Scalar shooting request.
#[derive(Debug, Clone)]
pub struct ShootSpec {
    pub domain: crate::grid::RadialDomain,
    /// Requested interior zero count of the profile.
    pub zero_count: usize,
    /// Shooting-parameter bracket: center amplitude on a ball, initial slope
    /// on an annulus.
    pub bracket: (f64, f64),
}

struct OdeResult {
    /// Interior zero crossings (strict sign changes) of u on (r0, r1).
    zeros: usize,
    /// u at the outer boundary.
    terminal: f64,
    /// Samples at the requested radii.
    samples: Vec<f64>,
}

/// Dormand–Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const ODE_TOL: f64 = 1e-10;
const MAX_ODE_STEPS: usize = 2_000_000;
const VALUE_CAP: f64 = 1e8;

/// Integrates u'' + (n−1)/r u' − u + u³ = 0 from (r_start, y) to r_end,
/// sampling u at `outputs` (which must be increasing and within range).
fn integrate_scalar(
    n_dim: f64,
    r_start: f64,
    r_end: f64,
    mut y: [f64; 2],
    outputs: &[f64],
) -> Result<OdeResult, ShootError> {
    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] {
        let drag = if r > 0.0 { (n_dim - 1.0) / r * y[1] } else { 0.0 };
        [y[1], -drag + y[0] - y[0] * y[0] * y[0]]
    };

    let mut r = r_start;
    let mut h = (r_end - r_start) / 1024.0;
    let h_max = (r_end - r_start) / 64.0;
    let mut zeros = 0usize;
    let mut last_sign = y[0].signum();
    let mut samples = Vec::with_capacity(outputs.len());
    let mut out_idx = 0;
    while out_idx < outputs.len() && outputs[out_idx] <= r_start {
        samples.push(y[0]);
        out_idx += 1;
    }

    let mut steps = 0usize;
    while r < r_end {
        steps += 1;
        if steps > MAX_ODE_STEPS {
            return Err(ShootError::IntegratorBlowup(y[0]));
        }
        let mut h_step = h.min(r_end - r);
        // Land exactly on the next output radius.
        if out_idx < outputs.len() && r + h_step > outputs[out_idx] {
            h_step = outputs[out_idx] - r;
        }
        if h_step <= f64::EPSILON * r.max(1.0) {
            // Degenerate landing step: take the value as-is.
            if out_idx < outputs.len() && (outputs[out_idx] - r).abs() <= 1e-14 {
                samples.push(y[0]);
                out_idx += 1;
                continue;
            }
            h_step = f64::EPSILON * r.max(1.0) * 4.0;
        }

        let mut k = [[0.0; 2]; 7];
        k[0] = rhs(r, y);
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                ys[0] += h_step * A[stage][j] * kj[0];
                ys[1] += h_step * A[stage][j] * kj[1];
            }
            k[stage + 1] = rhs(r + h_step * stage_fraction(stage), ys);
        }
        let mut y5 = y;
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            y5[0] += h_step * B5[j] * kj[0];
            y5[1] += h_step * B5[j] * kj[1];
            y4[0] += h_step * B4[j] * kj[0];
            y4[1] += h_step * B4[j] * kj[1];
        }
        let err = ((y5[0] - y4[0]).abs()).max((y5[1] - y4[1]).abs());
        let scale = ODE_TOL * (1.0 + y[0].abs().max(y[1].abs()));
        if err > scale && h_step > 1e-13 {
            h = 0.5 * h_step;
            continue;
        }

        r += h_step;
        y = y5;
        if !y[0].is_finite() || y[0].abs() > VALUE_CAP {
            return Err(ShootError::IntegratorBlowup(y[0]));
        }
        let s = crate::numeric::sign3(y[0]);
        if s != 0.0 && last_sign != 0.0 && s != last_sign && r < r_end {
            zeros += 1;
        }
        if s != 0.0 {
            last_sign = s;
        }
        if out_idx < outputs.len() && (r - outputs[out_idx]).abs() <= 1e-13 * r.max(1.0) {
            samples.push(y[0]);
            out_idx += 1;
        }
        if err < 0.1 * scale {
            h = (h_step * 2.0).min(h_max);
        } else {
            h = h_step;
        }
    }
    while out_idx < outputs.len() {
        samples.push(y[0]);
        out_idx += 1;
    }
    Ok(OdeResult {
        zeros,
        terminal: y[0],
        samples,
    })
}

fn stage_fraction(stage: usize) -> f64 {
    [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0][stage]
}

/// Series start just off the ball center: u(ε) = a + (a − a³) ε²/(2n).
fn ball_start(n_dim: f64, amplitude: f64, eps: f64) -> [f64; 2] {
    let c = (amplitude - amplitude.powi(3)) / (2.0 * n_dim);
    [amplitude + c * eps * eps, 2.0 * c * eps]
}

fn shoot_once(
    domain: &crate::grid::RadialDomain,
    parameter: f64,
    outputs: &[f64],
) -> Result<OdeResult, ShootError> {
    let n_dim = domain.dimension as f64;
    let (r0, r1) = (domain.inner_radius, domain.outer_radius);
    if domain.kind == crate::grid::DomainKind::Ball {
        let eps = 1e-6 * r1;
        integrate_scalar(n_dim, eps, r1, ball_start(n_dim, parameter, eps), outputs)
    } else {
        integrate_scalar(n_dim, r0, r1, [0.0, parameter], outputs)
    }
}

/// Interior zero count of the shot at a given parameter, counting the
/// terminal sign as an extra crossing when it has flipped past the target
/// parity (the standard shooting order: the count is nondecreasing in the
/// parameter and increases through each Dirichlet solution).
fn shooting_index(domain: &crate::grid::RadialDomain, parameter: f64) -> Result<usize, ShootError> {
    let res = shoot_once(domain, parameter, &[])?;
    let start_sign = 1.0; // amplitudes/slopes are taken positive
    let parity_sign = if res.zeros % 2 == 0 { start_sign } else { -start_sign };
    let mut idx = res.zeros;
    if res.terminal * parity_sign < 0.0 {
        idx += 1;
    }
    Ok(idx)
}

/// Shooting solution of the scalar problem with `zero_count` interior zeros,
/// sampled onto `grid` and polished onto the discrete equilibrium manifold.
///
/// The bracket endpoints must straddle the target: the lower parameter's
/// shooting index must be ≤ `zero_count` and the upper's > `zero_count`.
pub fn shoot_scalar(
    grid: &RadialGrid,
    zero_count: usize,
    bracket: (f64, f64),
) -> Result<VectorField, ShootError> {
    let domain = grid.domain;
    let (mut lo, mut hi) = bracket;
    let c_lo = shooting_index(&domain, lo)?;
    let c_hi = shooting_index(&domain, hi)?;
    if !(c_lo <= zero_count && c_hi > zero_count) {
        return Err(ShootError::BracketDoesNotStraddle {
            lo,
            hi,
            target: zero_count,
            c_lo,
            c_hi,
        });
    }
    // Bisect the shooting index; the boundary is the Dirichlet solution.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shooting_index(&domain, mid)? > zero_count {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let param = 0.5 * (lo + hi);

    // Sample the converged profile onto the grid.
    let inner = if domain.kind == crate::grid::DomainKind::Ball {
        1e-6 * domain.outer_radius
    } else {
        domain.inner_radius
    };
    let outputs: Vec<f64> = grid
        .nodes
        .iter()
        .copied()
        .filter(|&r| r > inner && r < domain.outer_radius)
        .collect();
    let res = shoot_once(&domain, param, &outputs)?;
    let mut values = vec![0.0; grid.n_nodes()];
    let mut k = 0;
    for (i, &r) in grid.nodes.iter().enumerate() {
        if r <= inner {
            // At/below the series start: extend by the center value.
            values[i] = if domain.kind == crate::grid::DomainKind::Ball {
                param
            } else {
                0.0
            };
        } else if r < domain.outer_radius {
            values[i] = res.samples[k];
            k += 1;
        }
    }

    // Polish onto the discrete equilibrium manifold: the shooting pins the
    // root, Newton removes the O(h²) sampling mismatch.
    let spec = ProblemSpec::scalar(domain, zero_count).map_err(|e| {
        ShootError::PolishFailure(format!("scalar spec: {e}"))
    })?;
    let raw = VectorField::from_components(vec![values], grid)
        .map_err(|e| ShootError::PolishFailure(format!("sampling: {e}")))?;
    let polished = newton_refine(
        &spec,
        grid,
        raw.clone(),
        &NewtonOptions {
            handoff_residual: f64::INFINITY,
            ..NewtonOptions::default()
        },
    )
    .map_err(|e| ShootError::PolishFailure(e.to_string()))?;

    let moved = polished.u_star.sup_distance(&raw);
    let guard = 1e-3_f64.max(200.0 * grid.spacing() * grid.spacing() * raw.sup_norm());
    if moved > guard {
        return Err(ShootError::PolishDisplacement { moved, guard });
    }
    Ok(polished.u_star)
}

/// Result of best-effort system shooting.
#[derive(Debug, Clone)]
pub struct SystemShot {
    pub u: VectorField,
    pub amplitudes: Vec<f64>,
    /// True when some component vanished (a semi-trivial solution).
    pub semi_trivial: bool,
}

/// Multi-parameter shooting for N ≤ 3: Newton iteration (finite-difference
/// Jacobian) on the map from initial amplitudes to terminal boundary values,
/// then discrete polish. Best effort: nonconvergence is an error, not a
/// panic.
pub fn shoot_system(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    initial_amplitudes: &[f64],
) -> Result<SystemShot, ShootError> {
    let n = spec.n_components();
    assert!(n <= 3, "system shooting is limited to N <= 3");
    let domain = spec.domain;
    let n_dim = domain.dimension as f64;
    let beta = spec.beta;

    // Coupled radial RHS: u_j'' = -(n-1)/r u_j' + u_j - u_j³ - β u_j Σ_{i≠j} u_i².
    let shoot = |amps: &[f64], outputs: &[f64]| -> Result<(Vec<f64>, Vec<Vec<f64>>), ShootError> {
        let eps = if domain.kind == crate::grid::DomainKind::Ball {
            1e-6 * domain.outer_radius
        } else {
            domain.inner_radius
        };
        let mut y: Vec<f64> = Vec::with_capacity(2 * n);
        for &a in amps {
            if domain.kind == crate::grid::DomainKind::Ball {
                let s = ball_start(n_dim, a, eps);
                y.push(s[0]);
                y.push(s[1]);
            } else {
                y.push(0.0);
                y.push(a);
            }
        }
        let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
            for j in 0..n {
                let u = y[2 * j];
                let v = y[2 * j + 1];
                let mut coupling = 0.0;
                for i in 0..n {
                    if i != j {
                        coupling += y[2 * i] * y[2 * i];
                    }
                }
                let drag = if r > 0.0 { (n_dim - 1.0) / r * v } else { 0.0 };
                dy[2 * j] = v;
                dy[2 * j + 1] = -drag + u - u * u * u - beta * u * coupling;
            }
        };
        // Fixed-step RK4 with fine resolution; the system oracle is a
        // self-consistency aid, not the precision reference.
        let steps = 20_000usize;
        let h = (domain.outer_radius - eps) / steps as f64;
        let mut r = eps;
        let mut out_idx = 0usize;
        let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut k1 = vec![0.0; 2 * n];
        let mut k2 = vec![0.0; 2 * n];
        let mut k3 = vec![0.0; 2 * n];
        let mut k4 = vec![0.0; 2 * n];
        let mut tmp = vec![0.0; 2 * n];
        for _ in 0..steps {
            while out_idx < outputs.len() && outputs[out_idx] <= r + 0.5 * h {
                for j in 0..n {
                    samples[j].push(y[2 * j]);
                }
                out_idx += 1;
            }
            rhs(r, &y, &mut k1);
            for i in 0..2 * n {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            rhs(r + 0.5 * h, &tmp, &mut k2);
            for i in 0..2 * n {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            rhs(r + 0.5 * h, &tmp, &mut k3);
            for i in 0..2 * n {
                tmp[i] = y[i] + h * k3[i];
            }
            rhs(r + h, &tmp, &mut k4);
            for i in 0..2 * n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            r += h;
            if y.iter().any(|v| !v.is_finite() || v.abs() > VALUE_CAP) {
                return Err(ShootError::IntegratorBlowup(y[0]));
            }
        }
        while out_idx < outputs.len() {
            for j in 0..n {
                samples[j].push(y[2 * j]);
            }
            out_idx += 1;
        }
        let terminal: Vec<f64> = (0..n).map(|j| y[2 * j]).collect();
        Ok((terminal, samples))
    };

    // Newton on amplitudes -> terminal values.
    let mut amps = initial_amplitudes.to_vec();
    let mut converged = false;
    for _iter in 0..60 {
        let (term, _) = shoot(&amps, &[])?;
        let norm = term.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if norm < 1e-9 {
            converged = true;
            break;
        }
        // FD Jacobian.
        let mut jac = vec![vec![0.0; n]; n];
        for c in 0..n {
            let da = 1e-6 * amps[c].abs().max(1e-3);
            let mut ap = amps.clone();
            ap[c] += da;
            let (tp, _) = shoot(&ap, &[])?;
            for r in 0..n {
                jac[r][c] = (tp[r] - term[r]) / da;
            }
        }
        // Solve J d = -term by Gaussian elimination with partial pivoting.
        let mut aug: Vec<Vec<f64>> = (0..n)
            .map(|r| {
                let mut row = jac[r].clone();
                row.push(-term[r]);
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
                .unwrap();
            if aug[piv][col].abs() < 1e-14 {
                return Err(ShootError::SystemNonconvergence(_iter));
            }
            aug.swap(col, piv);
            for r in col + 1..n {
                let f = aug[r][col] / aug[col][col];
                for c in col..=n {
                    aug[r][c] -= f * aug[col][c];
                }
            }
        }
        let mut delta = vec![0.0; n];
        for r in (0..n).rev() {
            let mut acc = aug[r][n];
            for c in r + 1..n {
                acc -= aug[r][c] * delta[c];
            }
            delta[r] = acc / aug[r][r];
        }
        // Damped update; amplitudes may legitimately sit at 0 (semi-trivial).
        let mut step_scale = 1.0;
        loop {
            let trial: Vec<f64> = amps.iter().zip(&delta).map(|(a, d)| a + step_scale * d).collect();
            match shoot(&trial, &[]) {
                Ok((t, _)) if t.iter().fold(0.0_f64, |m, v| m.max(v.abs())) < norm => {
                    amps = trial;
                    break;
                }
                _ => {
                    step_scale *= 0.5;
                    if step_scale < 1e-6 {
                        amps = trial;
                        break;
                    }
                }
            }
        }
    }
    if !converged {
        let (term, _) = shoot(&amps, &[])?;
        if term.iter().fold(0.0_f64, |m, v| m.max(v.abs())) > 1e-7 {
            return Err(ShootError::SystemNonconvergence(60));
        }
    }

    let inner = if domain.kind == crate::grid::DomainKind::Ball {
        1e-6 * domain.outer_radius
    } else {
        domain.inner_radius
    };
    let outputs: Vec<f64> = grid
        .nodes
        .iter()
        .copied()
        .filter(|&r| r > inner && r < domain.outer_radius)
        .collect();
    let (_, samples) = shoot(&amps, &outputs)?;
    let mut components = Vec::with_capacity(n);
    for j in 0..n {
        let mut vals = vec![0.0; grid.n_nodes()];
        let mut k = 0;
        for (i, &r) in grid.nodes.iter().enumerate() {
            if r <= inner {
                vals[i] = if domain.kind == crate::grid::DomainKind::Ball {
                    amps[j]
                } else {
                    0.0
                };
            } else if r < domain.outer_radius {
                vals[i] = samples[j][k];
                k += 1;
            }
        }
        components.push(vals);
    }
    let raw = VectorField::from_components(components, grid)
        .map_err(|e| ShootError::PolishFailure(format!("sampling: {e}")))?;
    let polished = newton_refine(
        spec,
        grid,
        raw.clone(),
        &NewtonOptions {
            handoff_residual: f64::INFINITY,
            reject_trivial: false,
            ..NewtonOptions::default()
        },
    )
    .map_err(|e| ShootError::PolishFailure(e.to_string()))?;
    let semi_trivial = (0..n).any(|j| {
        grid.l2_norm(polished.u_star.component(j)) < 1e-8
    });
    Ok(SystemShot {
        u: polished.u_star,
        amplitudes: amps,
        semi_trivial,
    })
}

/// Dense sign scan at multiplied resolution with exact sign changes and no
/// threshold: the independent recount of Def-2.8-style nodal numbers for an
/// analytically evaluable profile.
pub fn oracle_nodal_count(f: &dyn Fn(f64) -> f64, r_lo: f64, r_hi: f64, samples: usize) -> usize {
    let mut count = 0usize;
    let mut last_sign = 0.0;
    for i in 0..=samples {
        let r = r_lo + (r_hi - r_lo) * i as f64 / samples as f64;
        let s = crate::numeric::sign3(f(r));
        if s == 0.0 {
            continue;
        }
        if last_sign != 0.0 && s != last_sign {
            count += 1;
        }
        last_sign = s;
    }
    count
}

/// Dense recount of grid samples through linear interpolation.
pub fn oracle_nodal_count_grid(grid: &RadialGrid, values: &[f64], multiplier: usize) -> usize {
    assert!(multiplier >= 4);
    let f = |r: f64| {
        let x = (r - grid.nodes[0]) / grid.spacing();
        let k = (x.floor() as isize).clamp(0, grid.intervals() as isize - 1) as usize;
        let t = (x - k as f64).clamp(0.0, 1.0);
        values[k] * (1.0 - t) + values[k + 1] * t
    };
    oracle_nodal_count(
        &f,
        grid.nodes[0],
        *grid.nodes.last().unwrap(),
        multiplier * grid.intervals(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, RadialDomain};
    use crate::system;

    #[test]
    fn dense_count_of_cosine() {
        let f = |r: f64| (3.0 * std::f64::consts::PI * r).cos();
        assert_eq!(oracle_nodal_count(&f, 0.0, 1.0, 4000), 3);
    }

    #[test]
    fn dense_count_of_zero_profile() {
        let f = |_: f64| 0.0;
        assert_eq!(oracle_nodal_count(&f, 0.0, 1.0, 1000), 0);
    }

    #[test]
    fn small_amplitude_shot_stays_positive() {
        // Linear regime: u'' ≈ u grows, no zeros, positive terminal value.
        let domain = RadialDomain::ball(1.0, 3).unwrap();
        let res = shoot_once(&domain, 1e-3, &[]).unwrap();
        assert_eq!(res.zeros, 0);
        assert!(res.terminal > 0.0);
    }

    #[test]
    fn shooting_index_monotone_in_amplitude() {
        let domain = RadialDomain::ball(1.0, 3).unwrap();
        let mut last = 0;
        for a in [1.0, 5.0, 12.0, 25.0, 45.0] {
            let idx = shooting_index(&domain, a).unwrap();
            assert!(idx >= last, "index dropped at a={a}");
            last = idx;
        }
    }

    #[test]
    fn scalar_ground_state_solves_discrete_system() {
        let domain = RadialDomain::ball(1.0, 3).unwrap();
        let grid = build_grid(domain, 512).unwrap();
        let u = shoot_scalar(&grid, 0, (1.0, 30.0)).unwrap();
        let spec = ProblemSpec::scalar(domain, 0).unwrap();
        let res = system::residual_norm(&spec, &grid, &u).unwrap();
        assert!(res < 1e-8, "residual {res}");
        // positive, monotone decreasing profile
        let vals = u.component(0);
        assert!(vals[..vals.len() - 1].iter().all(|&v| v > 0.0));
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert_eq!(crate::nodal::nodal_count(&grid, vals, 1e-8), 0);
    }

    #[test]
    fn one_node_amplitude_exceeds_ground_state_amplitude() {
        let domain = RadialDomain::ball(1.0, 3).unwrap();
        let grid = build_grid(domain, 256).unwrap();
        let u0 = shoot_scalar(&grid, 0, (1.0, 30.0)).unwrap();
        let u1 = shoot_scalar(&grid, 1, (1.0, 60.0)).unwrap();
        assert!(u1.component(0)[0] > u0.component(0)[0]);
        assert_eq!(crate::nodal::nodal_count(&grid, u1.component(0), 1e-8), 1);
    }

    #[test]
    fn bad_bracket_is_reported() {
        let domain = RadialDomain::ball(1.0, 3).unwrap();
        let grid = build_grid(domain, 128).unwrap();
        assert!(matches!(
            shoot_scalar(&grid, 0, (0.01, 0.02)),
            Err(ShootError::BracketDoesNotStraddle { .. })
        ));
    }
}
