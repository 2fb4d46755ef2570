//! Integer bound arithmetic: the K_s recursion, the per-pair difference-node
//! bound intervals, the lower bounds for differences of arbitrary nontrivial
//! solutions, and the in-group couple/case enumeration.
//!
//! The schedule
//!
//! ```text
//! K_1    = 8p(p+1) Σ_b (P_b + 1) + 5Bp²,
//! K_{s+1} = 8(p−1)² Σ_b (P_b + 1) K_s + 5B(p−1)² + (p−1) Σ_b (P_b + 1) + 1,
//! ```
//!
//! grows geometrically, so everything is computed in arbitrary-precision
//! integers and serialized as decimal strings.
//!
//! The in-group interval is stated in two places with different constant
//! factors — `(P_b+1)·K_s + 2 ≤ n ≤ (P_b+1)·K_{s+1} + 1` versus the same
//! with a factor 4 on both ends. Both conventions are computed and carried
//! side by side; verification reports conformance against each separately.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::system::{is_prime, ProblemSpec};

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("p must be prime, got {0}")]
    NotPrime(usize),
    #[error("expected {expected} group targets, got {found}")]
    TargetMismatch { expected: usize, found: usize },
    #[error("schedule covers s_max={s_max}, requested s={s} needs s+1 entries")]
    ScheduleTooShort { s_max: usize, s: usize },
}

/// The exact K_1 … K_{s_max} sequence for a (p, B, P) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSchedule {
    pub p: usize,
    pub groups: usize,
    pub group_targets: Vec<usize>,
    /// K_1 … K_{s_max}.
    pub ks: Vec<BigUint>,
}

impl BoundSchedule {
    /// 1-based accessor: K_s.
    pub fn k(&self, s: usize) -> &BigUint {
        &self.ks[s - 1]
    }

    pub fn s_max(&self) -> usize {
        self.ks.len()
    }
}

/// Exact integer schedule per the recursion; `s_max >= 1`.
pub fn ks_sequence(
    p: usize,
    groups: usize,
    group_targets: &[usize],
    s_max: usize,
) -> Result<BoundSchedule, BoundsError> {
    if !is_prime(p) {
        return Err(BoundsError::NotPrime(p));
    }
    if group_targets.len() != groups {
        return Err(BoundsError::TargetMismatch {
            expected: groups,
            found: group_targets.len(),
        });
    }
    let pb = BigUint::from(p);
    let b = BigUint::from(groups);
    let sum_p1: BigUint = group_targets
        .iter()
        .map(|&t| BigUint::from(t + 1))
        .sum();
    let pm1 = BigUint::from(p - 1);

    let k1 = 8u32 * &pb * (&pb + 1u32) * &sum_p1 + 5u32 * &b * &pb * &pb;
    let mut ks = vec![k1];
    for _ in 1..s_max {
        let prev = ks.last().unwrap();
        let next = 8u32 * &pm1 * &pm1 * &sum_p1 * prev
            + 5u32 * &b * &pm1 * &pm1
            + &pm1 * &sum_p1
            + BigUint::one();
        ks.push(next);
    }
    Ok(BoundSchedule {
        p,
        groups,
        group_targets: group_targets.to_vec(),
        ks,
    })
}

/// A lower/upper pair for one comparison class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInterval {
    pub lower: Option<BigUint>,
    pub upper: Option<BigUint>,
    /// Which theorem clause produced this entry.
    pub provenance: String,
}

/// In-group entry carrying both factor conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InGroupBounds {
    pub block: usize,
    /// [(P_b+1)K_s + 2, (P_b+1)K_{s+1} + 1], the statement-level convention.
    pub factor1: BoundInterval,
    /// [4(P_b+1)K_s + 2, 4(P_b+1)K_{s+1} + 1], the construction-level one.
    pub factor4: BoundInterval,
}

/// The per-pair-class bound table of one solution index s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBounds {
    pub s: usize,
    pub in_group: Vec<InGroupBounds>,
    /// Upper bound P_{b1} + P_{b2} + 1 per unordered group pair.
    pub cross_group: Vec<((usize, usize), BoundInterval)>,
    /// Upper bound P_b + Q_r + 1 per (group, remainder) pair.
    pub group_remainder: Vec<((usize, usize), BoundInterval)>,
    /// Upper bound Q_{r1} + Q_{r2} + 1 per unordered remainder pair.
    pub remainder_pair: Vec<((usize, usize), BoundInterval)>,
}

/// Bound intervals for solution index `s >= 1`; the schedule must cover s+1.
pub fn theorem13_intervals(
    spec: &ProblemSpec,
    schedule: &BoundSchedule,
    s: usize,
) -> Result<PairBounds, BoundsError> {
    if s < 1 || schedule.s_max() < s + 1 {
        return Err(BoundsError::ScheduleTooShort {
            s_max: schedule.s_max(),
            s,
        });
    }
    let ks = schedule.k(s);
    let ks1 = schedule.k(s + 1);

    let in_group = (0..spec.groups)
        .map(|b| {
            let w = BigUint::from(spec.group_targets[b] + 1);
            let mk = |f: u32, prov: &str| BoundInterval {
                lower: Some(f * &w * ks + 2u32),
                upper: Some(f * &w * ks1 + 1u32),
                provenance: prov.to_string(),
            };
            InGroupBounds {
                block: b,
                factor1: mk(1, "in-group interval, statement convention"),
                factor4: mk(4, "in-group interval, construction convention"),
            }
        })
        .collect();

    let upper_only = |v: usize, prov: &str| BoundInterval {
        lower: None,
        upper: Some(BigUint::from(v)),
        provenance: prov.to_string(),
    };

    let mut cross_group = Vec::new();
    for b1 in 0..spec.groups {
        for b2 in (b1 + 1)..spec.groups {
            cross_group.push((
                (b1, b2),
                upper_only(
                    spec.group_targets[b1] + spec.group_targets[b2] + 1,
                    "cross-group upper bound",
                ),
            ));
        }
    }
    let mut group_remainder = Vec::new();
    for b in 0..spec.groups {
        for r in 0..spec.remainder {
            group_remainder.push((
                (b, r),
                upper_only(
                    spec.group_targets[b] + spec.remainder_targets[r] + 1,
                    "group-remainder upper bound",
                ),
            ));
        }
    }
    let mut remainder_pair = Vec::new();
    for r1 in 0..spec.remainder {
        for r2 in (r1 + 1)..spec.remainder {
            remainder_pair.push((
                (r1, r2),
                upper_only(
                    spec.remainder_targets[r1] + spec.remainder_targets[r2] + 1,
                    "remainder-pair upper bound",
                ),
            ));
        }
    }

    Ok(PairBounds {
        s,
        in_group,
        cross_group,
        group_remainder,
        remainder_pair,
    })
}

/// Lower bound on n(u_i − u_j) for ANY nontrivial solution: 1 when both
/// components are positive (zero nodes), otherwise ⌊(min{n_i, n_j} − 1)/2⌋
/// clamped at zero (the clause presumes one nonzero count; min = 0 clamps).
pub fn theorem14_lower(n_i: usize, n_j: usize) -> usize {
    if n_i == 0 && n_j == 0 {
        return 1;
    }
    let m = n_i.min(n_j);
    if m == 0 {
        0
    } else {
        (m - 1) / 2
    }
}

/// One distance class of in-group couples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupleCase {
    pub block: usize,
    /// Distance class q (distance q or p − q within the cyclic group).
    pub case: usize,
    /// 0-based global component index couples.
    pub couples: Vec<(usize, usize)>,
}

/// The in-group couples per block and distance class: for each b and each
/// q = 1 … (p−1)/2 (q = 1 alone when p = 2), the p couples at cyclic
/// distance q. For p = 2 the two listed couples coincide as unordered pairs
/// and collapse to one.
pub fn enumerate_couples(p: usize, groups: usize) -> Result<Vec<CoupleCase>, BoundsError> {
    if !is_prime(p) {
        return Err(BoundsError::NotPrime(p));
    }
    let max_case = if p == 2 { 1 } else { (p - 1) / 2 };
    let mut out = Vec::new();
    for b in 0..groups {
        for q in 1..=max_case {
            let mut couples = Vec::new();
            for i in 0..p {
                let a = b * p + i;
                let c = b * p + (i + q) % p;
                let pair = (a.min(c), a.max(c));
                if !couples.contains(&pair) {
                    couples.push(pair);
                }
            }
            out.push(CoupleCase {
                block: b,
                case: q,
                couples,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialDomain;

    #[test]
    fn hand_computed_schedule_values() {
        // p=2, B=1, P=[0]: K1 = 8·2·3·1 + 5·1·4 = 68, K2 = 544 + 5 + 1 + 1 = 551.
        let s = ks_sequence(2, 1, &[0], 2).unwrap();
        assert_eq!(s.k(1), &BigUint::from(68u32));
        assert_eq!(s.k(2), &BigUint::from(551u32));
        // p=3, B=1, P=[0]: K1 = 8·3·4·1 + 5·1·9 = 141.
        let s = ks_sequence(3, 1, &[0], 1).unwrap();
        assert_eq!(s.k(1), &BigUint::from(141u32));
    }

    #[test]
    fn schedule_strictly_increasing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let primes = [2usize, 3, 5, 7];
        for _ in 0..20 {
            let p = primes[rng.gen_range(0..primes.len())];
            let b = rng.gen_range(1..4);
            let targets: Vec<usize> = (0..b).map(|_| rng.gen_range(0..4)).collect();
            let s = ks_sequence(p, b, &targets, 6).unwrap();
            for w in s.ks.windows(2) {
                assert!(w[1] > w[0], "{:?}", s.ks);
            }
        }
    }

    #[test]
    fn nonprime_rejected() {
        assert_eq!(ks_sequence(4, 1, &[0], 1), Err(BoundsError::NotPrime(4)));
    }

    fn case_a_spec() -> ProblemSpec {
        ProblemSpec::new(
            -2.0,
            2,
            1,
            1,
            vec![0],
            vec![0],
            RadialDomain::ball(1.0, 3).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn intervals_for_case_a() {
        // p=2, B=1, R=1, P=[0], Q=[0], s=1: statement-convention in-group
        // interval [70, 552]; group-remainder upper bound 0+0+1 = 1.
        let spec = case_a_spec();
        let schedule = ks_sequence(2, 1, &[0], 2).unwrap();
        let pb = theorem13_intervals(&spec, &schedule, 1).unwrap();
        let ig = &pb.in_group[0];
        assert_eq!(ig.factor1.lower, Some(BigUint::from(70u32)));
        assert_eq!(ig.factor1.upper, Some(BigUint::from(552u32)));
        assert_eq!(ig.factor4.lower, Some(BigUint::from(4u32 * 68 + 2)));
        assert_eq!(ig.factor4.upper, Some(BigUint::from(4u32 * 551 + 1)));
        assert_eq!(pb.group_remainder.len(), 1);
        assert_eq!(
            pb.group_remainder[0].1.upper,
            Some(BigUint::from(1u32))
        );
    }

    #[test]
    fn group_remainder_bound_with_p1() {
        // P=[1], Q=[0]: bound 1 + 0 + 1 = 2.
        let spec = ProblemSpec::new(
            -2.0,
            2,
            1,
            1,
            vec![1],
            vec![0],
            RadialDomain::ball(1.0, 3).unwrap(),
        )
        .unwrap();
        let schedule = ks_sequence(2, 1, &[1], 2).unwrap();
        let pb = theorem13_intervals(&spec, &schedule, 1).unwrap();
        assert_eq!(pb.group_remainder[0].1.upper, Some(BigUint::from(2u32)));
    }

    #[test]
    fn remainder_pair_bound() {
        // Q = [0, 0]: bound 1.
        let spec = ProblemSpec::new(
            -2.0,
            2,
            1,
            2,
            vec![0],
            vec![0, 0],
            RadialDomain::ball(1.0, 3).unwrap(),
        )
        .unwrap();
        let schedule = ks_sequence(2, 1, &[0], 2).unwrap();
        let pb = theorem13_intervals(&spec, &schedule, 1).unwrap();
        assert_eq!(pb.remainder_pair.len(), 1);
        assert_eq!(pb.remainder_pair[0].1.upper, Some(BigUint::from(1u32)));
    }

    #[test]
    fn consecutive_intervals_disjoint_and_increasing() {
        let spec = case_a_spec();
        let schedule = ks_sequence(2, 1, &[0], 5).unwrap();
        for s in 1..4 {
            let lo = theorem13_intervals(&spec, &schedule, s).unwrap();
            let hi = theorem13_intervals(&spec, &schedule, s + 1).unwrap();
            for (a, b) in lo.in_group.iter().zip(&hi.in_group) {
                for (x, y) in [(&a.factor1, &b.factor1), (&a.factor4, &b.factor4)] {
                    assert!(x.lower.as_ref().unwrap() <= x.upper.as_ref().unwrap());
                    assert!(x.upper.as_ref().unwrap() < y.lower.as_ref().unwrap());
                }
            }
        }
    }

    #[test]
    fn theorem14_lower_bounds() {
        assert_eq!(theorem14_lower(0, 0), 1);
        assert_eq!(theorem14_lower(5, 7), 2);
        assert_eq!(theorem14_lower(0, 3), 0);
        assert_eq!(theorem14_lower(3, 0), 0);
        assert_eq!(theorem14_lower(1, 1), 0);
        assert_eq!(theorem14_lower(4, 9), 1);
    }

    #[test]
    fn couples_enumeration() {
        // p=2, B=1: the single couple (u_1, u_2).
        let c = enumerate_couples(2, 1).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].couples, vec![(0, 1)]);

        // p=5, B=1: 2 cases x 5 couples = C(5,2).
        let c = enumerate_couples(5, 1).unwrap();
        assert_eq!(c.len(), 2);
        let total: usize = c.iter().map(|k| k.couples.len()).sum();
        assert_eq!(total, 10);

        // p=3, B=2: per group one case of 3 couples.
        let c = enumerate_couples(3, 2).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|k| k.couples.len() == 3));
        assert_eq!(c[1].couples, vec![(3, 4), (4, 5), (3, 5)]);
    }

    #[test]
    fn couples_closed_under_sigma() {
        // Shifting every index cyclically within its group maps each case to
        // itself as a set of unordered pairs.
        for p in [2usize, 3, 5] {
            let cases = enumerate_couples(p, 1).unwrap();
            for case in &cases {
                let shifted: Vec<(usize, usize)> = case
                    .couples
                    .iter()
                    .map(|&(a, b)| {
                        let sa = (a + 1) % p;
                        let sb = (b + 1) % p;
                        (sa.min(sb), sa.max(sb))
                    })
                    .collect();
                for pair in &shifted {
                    assert!(case.couples.contains(pair), "p={p} pair {pair:?}");
                }
            }
        }
    }
}
