//! Nodal counting, bump decomposition, pairwise comparison matrices, and the
//! membership tests for the sets H and C_{j,q}.
//!
//! The nodal number n(u) of a radial function is the number of strict sign
//! alternations along the radius.  Exact sign counting is noise-fragile in
//! floating point, so a sample qualifies only if its magnitude exceeds a
//! relative threshold (default 1e−8 of the sup norm); node radii are then
//! reported as linear-interpolation zero crossings between the qualifying
//! samples on either side of each alternation.  Bumps are the
//! sign-consistent truncations between consecutive crossings; their count is
//! n(u) + 1 on any nonzero field and their per-bump quartic masses partition
//! ∫u⁴ up to the (threshold)⁴ noise floor.

use serde::{Deserialize, Serialize};

use crate::field::VectorField;
use crate::flow::FateReport;
use crate::grid::RadialGrid;
use crate::numeric::neumaier_sum;
use crate::system::ProblemSpec;

pub const DEFAULT_SIGN_THRESHOLD: f64 = 1e-8;

/// One sign-consistent bump of a component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    /// Support window (clipped to the domain).
    pub r_lo: f64,
    pub r_hi: f64,
    /// +1 or −1.
    pub sign: i8,
    /// Quadrature L⁴ norm of the truncation.
    pub l4_norm: f64,
}

/// Nodal data of a single component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentProfile {
    pub node_count: usize,
    /// Interpolated crossing radii, one per counted node.
    pub node_radii: Vec<f64>,
    pub bumps: Vec<Bump>,
    /// True for the zero field, which has no meaningful nodal data.
    pub degenerate: bool,
}

/// Per-component nodal data of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalProfile {
    pub components: Vec<ComponentProfile>,
}

impl NodalProfile {
    pub fn node_counts(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.node_count).collect()
    }
}

/// Indices of the qualifying samples: |u_i| > threshold · max|u|.
fn qualifying(u: &[f64], threshold: f64) -> (f64, Vec<usize>) {
    let max = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return (0.0, Vec::new());
    }
    let cut = threshold * max;
    let idx = (0..u.len()).filter(|&i| u[i].abs() > cut).collect();
    (max, idx)
}

/// Number of sign changes of the sample sequence, thresholded relative to
/// the sup norm. The zero field counts 0.
pub fn nodal_count(grid: &RadialGrid, u: &[f64], threshold: f64) -> usize {
    debug_assert!(threshold > 0.0 && threshold < 1.0);
    debug_assert_eq!(u.len(), grid.n_nodes());
    let (_, idx) = qualifying(u, threshold);
    let mut count = 0;
    let mut last_sign = 0.0;
    for &i in &idx {
        let s = u[i].signum();
        if last_sign != 0.0 && s != last_sign {
            count += 1;
        }
        last_sign = s;
    }
    count
}

/// Interpolated crossing radii between qualifying samples of opposite sign.
pub fn node_radii(grid: &RadialGrid, u: &[f64], threshold: f64) -> Vec<f64> {
    let (_, idx) = qualifying(u, threshold);
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for &i in &idx {
        if let Some(p) = prev {
            if u[p].signum() != u[i].signum() {
                let (r0, r1) = (grid.nodes[p], grid.nodes[i]);
                let (v0, v1) = (u[p], u[i]);
                out.push(r0 + (r1 - r0) * v0 / (v0 - v1));
            }
        }
        prev = Some(i);
    }
    out
}

/// Sign-consistent truncations between consecutive crossings, with their
/// quadrature L⁴ masses.
pub fn bump_decompose(grid: &RadialGrid, u: &[f64], threshold: f64) -> ComponentProfile {
    let (max, idx) = qualifying(u, threshold);
    if max == 0.0 || idx.is_empty() {
        return ComponentProfile {
            node_count: 0,
            node_radii: Vec::new(),
            bumps: Vec::new(),
            degenerate: true,
        };
    }
    let radii = node_radii(grid, u, threshold);
    let k = radii.len();
    let first_sign = u[idx[0]].signum() as i8;

    let r_lo = grid.nodes[0];
    let r_hi = *grid.nodes.last().unwrap();
    let mut bumps = Vec::with_capacity(k + 1);
    for q in 0..=k {
        let sign = if q % 2 == 0 { first_sign } else { -first_sign };
        let lo = if q == 0 { f64::NEG_INFINITY } else { radii[q - 1] };
        let hi = if q == k { f64::INFINITY } else { radii[q] };
        let mass = neumaier_sum(grid.nodes.iter().enumerate().filter_map(|(i, &r)| {
            let v = u[i];
            if r > lo && r < hi && (v.signum() as i8) == sign && v != 0.0 {
                Some(v * v * v * v * grid.quadrature_weights[i])
            } else {
                None
            }
        }));
        bumps.push(Bump {
            r_lo: lo.max(r_lo),
            r_hi: hi.min(r_hi),
            sign,
            l4_norm: mass.max(0.0).powf(0.25),
        });
    }
    ComponentProfile {
        node_count: k,
        node_radii: radii,
        bumps,
        degenerate: false,
    }
}

/// Nodal data of every component of a state.
pub fn profile(spec: &ProblemSpec, grid: &RadialGrid, u: &VectorField, threshold: f64) -> NodalProfile {
    let _ = spec;
    NodalProfile {
        components: u
            .components()
            .map(|c| bump_decompose(grid, c, threshold))
            .collect(),
    }
}

/// How a component pair relates under the N = B·p + R decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairClass {
    /// Both components in group `block`; `case` is the cyclic distance class
    /// q = min(d, p − d).
    InGroup { block: usize, case: usize },
    /// Components in two different groups.
    CrossGroup { block_a: usize, block_b: usize },
    /// One grouped component against a remainder component.
    GroupRemainder { block: usize, remainder: usize },
    /// Two remainder components.
    RemainderPair { remainder_a: usize, remainder_b: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    /// 0-based component indices, i < j.
    pub i: usize,
    pub j: usize,
    pub class: PairClass,
    /// n(u_i − u_j).
    pub difference_nodes: usize,
    /// True when the difference is below the sign threshold everywhere
    /// (near-identical components), where the count carries no information.
    pub degenerate: bool,
}

/// The table of n(u_i − u_j) over all pairs, labeled by the §-case taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub pairs: Vec<PairComparison>,
}

impl ComparisonMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<&PairComparison> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == a && p.j == b)
    }
}

pub fn classify_pair(spec: &ProblemSpec, i: usize, j: usize) -> PairClass {
    match (spec.group_position(i), spec.group_position(j)) {
        (Some((bi, pi)), Some((bj, pj))) => {
            if bi == bj {
                let d = pi.abs_diff(pj);
                PairClass::InGroup {
                    block: bi,
                    case: d.min(spec.p - d),
                }
            } else {
                PairClass::CrossGroup {
                    block_a: bi,
                    block_b: bj,
                }
            }
        }
        (Some((b, _)), None) => PairClass::GroupRemainder {
            block: b,
            remainder: j - spec.groups * spec.p,
        },
        (None, Some((b, _))) => PairClass::GroupRemainder {
            block: b,
            remainder: i - spec.groups * spec.p,
        },
        (None, None) => {
            let gp = spec.groups * spec.p;
            PairClass::RemainderPair {
                remainder_a: i - gp,
                remainder_b: j - gp,
            }
        }
    }
}

/// Difference-node counts for all component pairs.
pub fn comparison_matrix(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    u: &VectorField,
    threshold: f64,
) -> ComparisonMatrix {
    let n = spec.n_components();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    let mut diff = vec![0.0; grid.n_nodes()];
    for i in 0..n {
        for j in (i + 1)..n {
            let ui = u.component(i);
            let uj = u.component(j);
            for k in 0..diff.len() {
                diff[k] = ui[k] - uj[k];
            }
            let scale = ui
                .iter()
                .chain(uj.iter())
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            let max_diff = diff.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let degenerate = max_diff <= threshold * scale;
            pairs.push(PairComparison {
                i,
                j,
                class: classify_pair(spec, i, j),
                difference_nodes: if degenerate {
                    0
                } else {
                    nodal_count(grid, &diff, threshold)
                },
                degenerate,
            });
        }
    }
    ComparisonMatrix { pairs }
}

/// Membership in H: every component at or below its target and the total
/// strictly below the target total. States in H have lost prescribed nodes.
pub fn in_h(spec: &ProblemSpec, profile: &NodalProfile) -> bool {
    in_h_counts(spec, &profile.node_counts())
}

/// `in_h` on bare per-component counts (as stored in trace samples).
pub fn in_h_counts(spec: &ProblemSpec, counts: &[usize]) -> bool {
    debug_assert_eq!(counts.len(), spec.n_components());
    let all_within = counts
        .iter()
        .enumerate()
        .all(|(j, &c)| c <= spec.node_target(j));
    let total: usize = counts.iter().sum();
    all_within && total < spec.total_target()
}

/// Membership in C_{j,q}: some sampled time of the trajectory has bump `q`
/// of component `j` with L⁴ norm ≤ eps. A bump that has disappeared at a
/// sample (the component merged below `q+1` bumps) counts as vanished.
pub fn in_c(_spec: &ProblemSpec, report: &FateReport, j: usize, q: usize, eps: f64) -> bool {
    report.samples.iter().any(|s| {
        s.bump_l4
            .get(j)
            .map(|bumps| bumps.get(q).copied().unwrap_or(0.0) <= eps)
            .unwrap_or(false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, RadialDomain};

    fn grid(m: usize) -> RadialGrid {
        build_grid(RadialDomain::ball(1.0, 3).unwrap(), m).unwrap()
    }

    fn sample(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid.nodes.iter().map(|&r| f(r)).collect()
    }

    #[test]
    fn constant_has_no_nodes() {
        let g = grid(64);
        let mut u = sample(&g, |_| 0.5);
        *u.last_mut().unwrap() = 0.0;
        assert_eq!(nodal_count(&g, &u, 1e-8), 0);
    }

    #[test]
    fn cosine_has_three_nodes() {
        let g = grid(256);
        let u = sample(&g, |r| (3.0 * std::f64::consts::PI * r).cos());
        assert_eq!(nodal_count(&g, &u, 1e-8), 3);
        let radii = node_radii(&g, &u, 1e-8);
        let expected = [1.0 / 6.0, 0.5, 5.0 / 6.0];
        for (r, e) in radii.iter().zip(expected) {
            assert!((r - e).abs() < 1e-3, "crossing {r} vs {e}");
        }
    }

    #[test]
    fn zero_field_is_degenerate() {
        let g = grid(64);
        let u = vec![0.0; g.n_nodes()];
        assert_eq!(nodal_count(&g, &u, 1e-8), 0);
        let p = bump_decompose(&g, &u, 1e-8);
        assert!(p.degenerate);
        assert!(p.bumps.is_empty());
    }

    #[test]
    fn random_polynomial_matches_dense_scan() {
        use rand::{Rng, SeedableRng};
        let g = grid(256);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..25 {
            let coefs: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let poly = |r: f64| {
                coefs
                    .iter()
                    .rev()
                    .fold(0.0, |acc, c| acc * (2.0 * r - 1.0) + c)
            };
            let mut u = sample(&g, poly);
            let n = u.len();
            u[n - 1] = 0.0;
            let counted = nodal_count(&g, &u, 1e-8);
            let oracle = crate::oracle::oracle_nodal_count(&poly, 0.0, g.nodes[n - 2], 10 * n);
            assert_eq!(counted, oracle, "coefs {coefs:?}");
        }
    }

    #[test]
    fn single_positive_bump_profile() {
        let g = grid(128);
        let u = sample(&g, |r| (1.0 - r * r).max(0.0));
        let p = bump_decompose(&g, &u, 1e-8);
        assert_eq!(p.node_count, 0);
        assert_eq!(p.bumps.len(), 1);
        assert_eq!(p.bumps[0].sign, 1);
        let l4 = g.l4_norm(&u);
        assert!((p.bumps[0].l4_norm - l4).abs() < 1e-12 * l4);
    }

    #[test]
    fn cosine_bumps_alternate_and_partition_quartic_mass() {
        let g = grid(256);
        let mut u = sample(&g, |r| (3.0 * std::f64::consts::PI * r).cos());
        let n = u.len();
        u[n - 1] = 0.0;
        let p = bump_decompose(&g, &u, 1e-8);
        assert_eq!(p.bumps.len(), 4);
        let signs: Vec<i8> = p.bumps.iter().map(|b| b.sign).collect();
        assert_eq!(signs, vec![1, -1, 1, -1]);
        let total: f64 = p.bumps.iter().map(|b| b.l4_norm.powi(4)).sum();
        let whole = g.l4_norm(&u).powi(4);
        assert!((total - whole).abs() < 1e-10 * whole);
    }

    #[test]
    fn disjoint_same_sign_bumps_difference_has_one_node() {
        let g = grid(256);
        let u1 = sample(&g, |r| {
            if r < 1.0 / 3.0 {
                let s = 6.0 * r - 1.0;
                (1.0 - s * s).max(0.0)
            } else {
                0.0
            }
        });
        let u2 = sample(&g, |r| {
            if r > 2.0 / 3.0 {
                let s = 6.0 * r - 5.0;
                (1.0 - s * s).max(0.0)
            } else {
                0.0
            }
        });
        let diff: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
        assert_eq!(nodal_count(&g, &diff, 1e-8), 1);
    }

    #[test]
    fn identical_group_components_flagged_degenerate() {
        let spec = ProblemSpec::new(
            -2.0,
            2,
            1,
            0,
            vec![0],
            vec![],
            RadialDomain::ball(1.0, 3).unwrap(),
        )
        .unwrap();
        let g = grid(64);
        let mut u = VectorField::zeros(2, &g);
        for (i, &r) in g.nodes.iter().enumerate() {
            let v = (1.0 - r * r).max(0.0);
            u.component_mut(0)[i] = v;
            u.component_mut(1)[i] = v;
        }
        u.enforce_dirichlet(&g);
        let cm = comparison_matrix(&spec, &g, &u, 1e-8);
        assert_eq!(cm.pairs.len(), 1);
        assert!(cm.pairs[0].degenerate);
        assert_eq!(cm.pairs[0].difference_nodes, 0);
    }

    #[test]
    fn in_h_definition() {
        let spec = ProblemSpec::new(
            -2.0,
            2,
            1,
            1,
            vec![2],
            vec![1],
            RadialDomain::ball(1.0, 3).unwrap(),
        )
        .unwrap();
        let mk = |counts: Vec<usize>| NodalProfile {
            components: counts
                .into_iter()
                .map(|c| ComponentProfile {
                    node_count: c,
                    node_radii: vec![],
                    bumps: vec![],
                    degenerate: false,
                })
                .collect(),
        };
        // all at target: total not strictly below
        assert!(!in_h(&spec, &mk(vec![2, 2, 1])));
        // one below target
        assert!(in_h(&spec, &mk(vec![1, 2, 1])));
        // one above target
        assert!(!in_h(&spec, &mk(vec![3, 1, 1])));
    }

    #[test]
    fn comparison_matrix_covariant_under_sigma() {
        use crate::system::{apply_group_action, GroupAction};
        use rand::{Rng, SeedableRng};
        let spec = ProblemSpec::new(
            -2.0,
            3,
            1,
            1,
            vec![1],
            vec![0],
            RadialDomain::ball(1.0, 3).unwrap(),
        )
        .unwrap();
        let g = grid(96);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut u = VectorField::zeros(4, &g);
        for j in 0..4 {
            let a: f64 = rng.gen_range(0.5..1.5);
            let k: f64 = rng.gen_range(1.0..4.0_f64).round();
            for (i, &r) in g.nodes.iter().enumerate() {
                u.component_mut(j)[i] = a * (k * std::f64::consts::PI * r).sin();
            }
        }
        u.enforce_dirichlet(&g);
        let sigma = GroupAction::new(1);
        let su = apply_group_action(sigma, &spec, &u);
        let cm = comparison_matrix(&spec, &g, &u, 1e-8);
        let cms = comparison_matrix(&spec, &g, &su, 1e-8);
        // entry (i,j) of the permuted state equals entry (σi, σj).
        for pair in &cms.pairs {
            let si = sigma.source_index(&spec, pair.i);
            let sj = sigma.source_index(&spec, pair.j);
            let orig = cm.get(si, sj).unwrap();
            assert_eq!(pair.difference_nodes, orig.difference_nodes);
        }
    }
}
