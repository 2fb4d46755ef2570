//! Prescribed-node initial data: nested radial subdivision, phase-sliding
//! compactly supported bumps, and assembly of seed states whose components
//! carry exact node counts and controlled pairwise difference-node counts.
//!
//! The radial extent splits into B + R blocks (group blocks innermost), each
//! group block b into P_b + 1 cells, each remainder block r into Q_r + 1
//! cells, and every cell into K micro-cells. On a micro-cell the group bump
//! `w(θ, ·)` is built from p + 1 radial slots and p + 1 matching phase arcs
//! on the circle: the phase selects a slot, with C⁴ crossfades on slightly
//! overlapping arc endpoints so that
//!
//! * `w(θ, ·) ≠ 0` for every θ (the crossfade never lets both neighbors die),
//! * supports at phases differing by 2πq/p land in disjoint slots, and
//! * a difference of two phase-shifted copies changes sign at most twice in
//!   the micro-cell (only the wrap-around slot pair splits radially).
//!
//! A group component is the cell-alternating sum
//! `Σ_k Σ_q (−1)^{q+1} α_{q,k} w(θ_{q,k} + 2π(j−1)/p, ·)`; remainder
//! components use fixed phase-free bumps. With all referenced amplitudes
//! positive, component node counts equal their targets exactly, in-group
//! difference counts stay ≤ 4(P_b+1)K + 1, and cross-block differences stay
//! ≤ P + Q + 1 by support disjointness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::VectorField;
use crate::grid::RadialGrid;
use crate::system::ProblemSpec;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Required micro-cell width in grid spacings.
const MIN_MICRO_CELLS: f64 = 4.0;
/// Required slot-support width in grid spacings.
const MIN_SLOT_CELLS: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum SeedError {
    #[error("micro-cell subdivision needs K >= 1")]
    KZero,
    #[error("micro-cell [{lo}, {hi}] narrower than {MIN_MICRO_CELLS} grid cells")]
    DegenerateWidths { lo: f64, hi: f64 },
    #[error("slot support in micro-cell [{lo}, {hi}] narrower than {MIN_SLOT_CELLS} grid cells (p = {p})")]
    UnresolvableSlots { lo: f64, hi: f64, p: usize },
    #[error("seed parameter shape mismatch: {0}")]
    BadShape(String),
    #[error("amplitudes must be nonnegative")]
    NegativeAmplitude,
    #[error("phases must lie in [0, 2π)")]
    PhaseOutOfRange,
    #[error("sharpness must lie in (0, 1]")]
    BadSharpness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Group block b (serves components (b−1)p+1 … bp).
    Group(usize),
    /// Remainder block r (serves component Bp + r).
    Remainder(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPartition {
    pub span: (f64, f64),
    /// K micro-cells, equal widths.
    pub micro: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub kind: BlockKind,
    pub span: (f64, f64),
    /// P_b + 1 cells for a group block, Q_r + 1 for a remainder block.
    pub cells: Vec<CellPartition>,
}

/// The nested radial subdivision: blocks, cells, micro-cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub blocks: Vec<BlockPartition>,
}

impl PartitionSpec {
    pub fn group_block(&self, b: usize) -> &BlockPartition {
        &self.blocks[b]
    }

    pub fn remainder_block(&self, spec: &ProblemSpec, r: usize) -> &BlockPartition {
        &self.blocks[spec.groups + r]
    }
}

/// Equal-width nested subdivision of the domain's radial extent; group
/// blocks first, ordered by distance from the origin.
pub fn subdivide(grid: &RadialGrid, spec: &ProblemSpec, k_micro: usize) -> Result<PartitionSpec, SeedError> {
    if k_micro == 0 {
        return Err(SeedError::KZero);
    }
    let (r0, r1) = (grid.domain.inner_radius, grid.domain.outer_radius);
    let n_blocks = spec.groups + spec.remainder;
    let block_w = (r1 - r0) / n_blocks as f64;
    let h = grid.spacing();

    let mut blocks = Vec::with_capacity(n_blocks);
    for idx in 0..n_blocks {
        let (kind, cells_n) = if idx < spec.groups {
            (BlockKind::Group(idx), spec.group_targets[idx] + 1)
        } else {
            let r = idx - spec.groups;
            (BlockKind::Remainder(r), spec.remainder_targets[r] + 1)
        };
        let b_lo = r0 + idx as f64 * block_w;
        let b_hi = r0 + (idx + 1) as f64 * block_w;
        let cell_w = (b_hi - b_lo) / cells_n as f64;
        let mut cells = Vec::with_capacity(cells_n);
        for q in 0..cells_n {
            let c_lo = b_lo + q as f64 * cell_w;
            let c_hi = b_lo + (q + 1) as f64 * cell_w;
            let micro_w = (c_hi - c_lo) / k_micro as f64;
            if micro_w < MIN_MICRO_CELLS * h {
                return Err(SeedError::DegenerateWidths { lo: c_lo, hi: c_hi });
            }
            let micro = (0..k_micro)
                .map(|k| (c_lo + k as f64 * micro_w, c_lo + (k + 1) as f64 * micro_w))
                .collect();
            cells.push(CellPartition {
                span: (c_lo, c_hi),
                micro,
            });
        }
        blocks.push(BlockPartition {
            kind,
            span: (b_lo, b_hi),
            cells,
        });
    }
    Ok(PartitionSpec { blocks })
}

/// C⁴ monotone ramp 0 → 1 on [0, 1].
fn smoothstep4(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let x2 = x * x;
        x2 * x2 * x * (70.0 * x2 * x2 - 315.0 * x2 * x + 540.0 * x2 - 420.0 * x + 126.0)
    }
}

/// Phase-arc overlap fraction, in units of the arc length 2π/(p+1).
///
/// Support disjointness under the 2πq/p shift needs the overlap strictly
/// below 1/(2p) arc units; 0.1 works for the small primes and shrinks
/// automatically for larger ones.
fn overlap_fraction(p: usize) -> f64 {
    (0.45 / p as f64).min(0.1)
}

/// Activation of slot `i` at normalized circle position `t` in [0, p+1):
/// 1 deep inside arc i, C⁴ crossfade of half-width `ovl` at the arc ends,
/// exactly 0 away from the arc.
fn slot_activation(t: f64, i: usize, p: usize, ovl: f64) -> f64 {
    let period = (p + 1) as f64;
    // Position relative to the arc start, wrapped into [-period/2, period/2).
    let mut d = t - i as f64;
    d -= (d / period).round() * period;
    if d < -period / 2.0 {
        d += period;
    }
    if d >= -ovl && d < ovl {
        smoothstep4((d + ovl) / (2.0 * ovl))
    } else if d >= ovl && d <= 1.0 - ovl {
        1.0
    } else if d > 1.0 - ovl && d <= 1.0 + ovl {
        smoothstep4((1.0 + ovl - d) / (2.0 * ovl))
    } else {
        0.0
    }
}

/// Compactly supported (1 − s²)⁴ profile on a centered window.
fn window_bump(r: f64, center: f64, half_width: f64) -> f64 {
    let s = (r - center) / half_width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s * s;
        let t2 = t * t;
        t2 * t2
    }
}

/// Value of the group auxiliary bump `w(θ, r)` on a micro-cell.
///
/// The micro-cell splits into p + 1 slots; `sharpness` is the fraction of
/// each slot spanned by the bump support.
pub fn aux_bump_value(micro: (f64, f64), theta: f64, p: usize, sharpness: f64, r: f64) -> f64 {
    let (lo, hi) = micro;
    if r <= lo || r >= hi {
        return 0.0;
    }
    let arcs = p + 1;
    let slot_w = (hi - lo) / arcs as f64;
    let ovl = overlap_fraction(p);
    let arc_len = TWO_PI / arcs as f64;
    let t = (theta / arc_len).rem_euclid(arcs as f64);

    let mut acc = 0.0;
    for i in 0..arcs {
        let a = slot_activation(t, i, p, ovl);
        if a == 0.0 {
            continue;
        }
        let center = lo + (i as f64 + 0.5) * slot_w;
        acc += a * window_bump(r, center, 0.5 * sharpness * slot_w);
    }
    acc
}

/// Phase-free remainder bump: a single centered profile on the micro-cell.
pub fn remainder_bump_value(micro: (f64, f64), sharpness: f64, r: f64) -> f64 {
    let (lo, hi) = micro;
    window_bump(r, 0.5 * (lo + hi), 0.5 * sharpness * (hi - lo))
}

/// Samples `w(θ, ·)` onto the grid, guarding slot resolvability.
pub fn aux_bump(
    grid: &RadialGrid,
    micro: (f64, f64),
    theta: f64,
    p: usize,
    sharpness: f64,
) -> Result<Vec<f64>, SeedError> {
    let slot_support = sharpness * (micro.1 - micro.0) / (p + 1) as f64;
    if slot_support < MIN_SLOT_CELLS * grid.spacing() {
        return Err(SeedError::UnresolvableSlots {
            lo: micro.0,
            hi: micro.1,
            p,
        });
    }
    Ok(grid
        .nodes
        .iter()
        .map(|&r| aux_bump_value(micro, theta, p, sharpness, r))
        .collect())
}

/// Per-group amplitudes and phases: `amplitudes[j][q][k]` for the j-th
/// component of the group, `phases[q][k]` shared across the group (the
/// group action shifts them by 2π/p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSeedParams {
    pub amplitudes: Vec<Vec<Vec<f64>>>,
    pub phases: Vec<Vec<f64>>,
}

/// Remainder amplitudes `amplitudes[q][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderSeedParams {
    pub amplitudes: Vec<Vec<f64>>,
}

/// Full parameterization of one seed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedParams {
    /// K: micro-cells per cell.
    pub k_micro: usize,
    /// Fraction of each slot (or micro-cell, for the remainder) spanned by
    /// the bump support.
    pub sharpness: f64,
    pub groups: Vec<GroupSeedParams>,
    pub remainders: Vec<RemainderSeedParams>,
}

impl SeedParams {
    /// Default phase: puts every component's slot position on an arc
    /// plateau. The p phase offsets step by (p+1)/p arc lengths, so their
    /// fractional arc positions form the progression j/p + 1/(2p), which
    /// stays clear of the crossfade zones for every j.
    pub fn default_phase(p: usize) -> f64 {
        std::f64::consts::PI / (p * (p + 1)) as f64
    }

    /// All amplitudes equal to `amplitude`, plateau-centered phases: the
    /// one-parameter ray used for basin bisection.
    pub fn uniform(spec: &ProblemSpec, k_micro: usize, amplitude: f64, sharpness: f64) -> Self {
        let phase = Self::default_phase(spec.p);
        SeedParams {
            k_micro,
            sharpness,
            groups: (0..spec.groups)
                .map(|b| {
                    let cells = spec.group_targets[b] + 1;
                    GroupSeedParams {
                        amplitudes: vec![vec![vec![amplitude; k_micro]; cells]; spec.p],
                        phases: vec![vec![phase; k_micro]; cells],
                    }
                })
                .collect(),
            remainders: (0..spec.remainder)
                .map(|r| RemainderSeedParams {
                    amplitudes: vec![vec![amplitude; k_micro]; spec.remainder_targets[r] + 1],
                })
                .collect(),
        }
    }

    /// Random positive amplitudes and random phases, for the randomized
    /// construction-bound suites.
    pub fn randomized<R: rand::Rng>(spec: &ProblemSpec, k_micro: usize, sharpness: f64, rng: &mut R) -> Self {
        let mut params = SeedParams::uniform(spec, k_micro, 1.0, sharpness);
        for g in &mut params.groups {
            for row in &mut g.amplitudes {
                for cell in row {
                    for a in cell {
                        *a = rng.gen_range(0.4..1.6);
                    }
                }
            }
            for row in &mut g.phases {
                for th in row {
                    *th = rng.gen_range(0.0..TWO_PI);
                }
            }
        }
        for rem in &mut params.remainders {
            for cell in &mut rem.amplitudes {
                for a in cell {
                    *a = rng.gen_range(0.4..1.6);
                }
            }
        }
        params
    }

    pub fn validate(&self, spec: &ProblemSpec) -> Result<(), SeedError> {
        if self.k_micro == 0 {
            return Err(SeedError::KZero);
        }
        if !(self.sharpness > 0.0 && self.sharpness <= 1.0) {
            return Err(SeedError::BadSharpness);
        }
        if self.groups.len() != spec.groups || self.remainders.len() != spec.remainder {
            return Err(SeedError::BadShape(format!(
                "expected {} group and {} remainder blocks, got {} and {}",
                spec.groups,
                spec.remainder,
                self.groups.len(),
                self.remainders.len()
            )));
        }
        for (b, g) in self.groups.iter().enumerate() {
            let cells = spec.group_targets[b] + 1;
            if g.amplitudes.len() != spec.p {
                return Err(SeedError::BadShape(format!(
                    "group {b}: expected {} amplitude rows, got {}",
                    spec.p,
                    g.amplitudes.len()
                )));
            }
            for row in &g.amplitudes {
                if row.len() != cells || row.iter().any(|c| c.len() != self.k_micro) {
                    return Err(SeedError::BadShape(format!(
                        "group {b}: amplitude rows must be {cells} cells x {} micro",
                        self.k_micro
                    )));
                }
                if row.iter().flatten().any(|&a| !(a >= 0.0)) {
                    return Err(SeedError::NegativeAmplitude);
                }
            }
            if g.phases.len() != cells || g.phases.iter().any(|c| c.len() != self.k_micro) {
                return Err(SeedError::BadShape(format!(
                    "group {b}: phases must be {cells} cells x {} micro",
                    self.k_micro
                )));
            }
            if g
                .phases
                .iter()
                .flatten()
                .any(|&t| !(0.0..TWO_PI).contains(&t))
            {
                return Err(SeedError::PhaseOutOfRange);
            }
        }
        for (r, rem) in self.remainders.iter().enumerate() {
            let cells = spec.remainder_targets[r] + 1;
            if rem.amplitudes.len() != cells
                || rem.amplitudes.iter().any(|c| c.len() != self.k_micro)
            {
                return Err(SeedError::BadShape(format!(
                    "remainder {r}: amplitudes must be {cells} cells x {} micro",
                    self.k_micro
                )));
            }
            if rem.amplitudes.iter().flatten().any(|&a| !(a >= 0.0)) {
                return Err(SeedError::NegativeAmplitude);
            }
        }
        Ok(())
    }

    /// (component, cell) rows whose amplitudes are all zero — their node
    /// targets cannot be met.
    pub fn empty_rows(&self, spec: &ProblemSpec) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (b, g) in self.groups.iter().enumerate() {
            for (j, row) in g.amplitudes.iter().enumerate() {
                for (q, cell) in row.iter().enumerate() {
                    if cell.iter().all(|&a| a == 0.0) {
                        out.push((b * spec.p + j, q));
                    }
                }
            }
        }
        for (r, rem) in self.remainders.iter().enumerate() {
            for (q, cell) in rem.amplitudes.iter().enumerate() {
                if cell.iter().all(|&a| a == 0.0) {
                    out.push((spec.groups * spec.p + r, q));
                }
            }
        }
        out
    }
}

/// A built seed with its target-feasibility flags.
#[derive(Debug, Clone)]
pub struct SeedField {
    pub field: VectorField,
    /// False when some (component, cell) has all-zero amplitudes, so the
    /// prescribed node counts cannot hold.
    pub targets_met: bool,
    pub empty_rows: Vec<(usize, usize)>,
}

/// Closed-form value of seed component `comp` at radius `r`. The grid field
/// built by `build_seed` samples exactly this function, and the dense
/// nodal-count oracle re-evaluates it off-grid.
pub fn seed_component_value(
    spec: &ProblemSpec,
    partition: &PartitionSpec,
    params: &SeedParams,
    comp: usize,
    r: f64,
) -> f64 {
    let mut acc = 0.0;
    match spec.group_position(comp) {
        Some((b, j)) => {
            let block = partition.group_block(b);
            let g = &params.groups[b];
            let offset = TWO_PI * j as f64 / spec.p as f64;
            for (q, cell) in block.cells.iter().enumerate() {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                for (k, &micro) in cell.micro.iter().enumerate() {
                    let a = g.amplitudes[j][q][k];
                    if a == 0.0 {
                        continue;
                    }
                    let theta = g.phases[q][k] + offset;
                    acc += sign * a * aux_bump_value(micro, theta, spec.p, params.sharpness, r);
                }
            }
        }
        None => {
            let rem = comp - spec.groups * spec.p;
            let block = partition.remainder_block(spec, rem);
            let rp = &params.remainders[rem];
            for (q, cell) in block.cells.iter().enumerate() {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                for (k, &micro) in cell.micro.iter().enumerate() {
                    let a = rp.amplitudes[q][k];
                    if a == 0.0 {
                        continue;
                    }
                    acc += sign * a * remainder_bump_value(micro, params.sharpness, r);
                }
            }
        }
    }
    acc
}

/// One bump row of a seed: the signed cell-q contribution to a single
/// component, with its radial span. The full seed is the row sum; rows are
/// the natural unknowns for per-bump amplitude work (calibration, edge
/// tracking), since each prescribed bump lives in exactly one row.
#[derive(Debug, Clone)]
pub struct SeedRow {
    pub component: usize,
    pub cell: usize,
    pub span: (f64, f64),
    pub values: Vec<f64>,
}

/// Decomposes the seed into its bump rows (zero-amplitude rows skipped).
pub fn seed_rows(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    partition: &PartitionSpec,
    params: &SeedParams,
) -> Vec<SeedRow> {
    let mut rows = Vec::new();
    for comp in 0..spec.n_components() {
        match spec.group_position(comp) {
            Some((b, j)) => {
                let block = partition.group_block(b);
                let g = &params.groups[b];
                let offset = TWO_PI * j as f64 / spec.p as f64;
                for (q, cell) in block.cells.iter().enumerate() {
                    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                    let mut values = vec![0.0; grid.n_nodes()];
                    let mut nonzero = false;
                    for (k, &micro) in cell.micro.iter().enumerate() {
                        let a = g.amplitudes[j][q][k];
                        if a == 0.0 {
                            continue;
                        }
                        nonzero = true;
                        let theta = g.phases[q][k] + offset;
                        for (i, &r) in grid.nodes.iter().enumerate() {
                            values[i] +=
                                sign * a * aux_bump_value(micro, theta, spec.p, params.sharpness, r);
                        }
                    }
                    if nonzero {
                        rows.push(SeedRow {
                            component: comp,
                            cell: q,
                            span: cell.span,
                            values,
                        });
                    }
                }
            }
            None => {
                let rem = comp - spec.groups * spec.p;
                let block = partition.remainder_block(spec, rem);
                let rp = &params.remainders[rem];
                for (q, cell) in block.cells.iter().enumerate() {
                    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                    let mut values = vec![0.0; grid.n_nodes()];
                    let mut nonzero = false;
                    for (k, &micro) in cell.micro.iter().enumerate() {
                        let a = rp.amplitudes[q][k];
                        if a == 0.0 {
                            continue;
                        }
                        nonzero = true;
                        for (i, &r) in grid.nodes.iter().enumerate() {
                            values[i] += sign * a * remainder_bump_value(micro, params.sharpness, r);
                        }
                    }
                    if nonzero {
                        rows.push(SeedRow {
                            component: comp,
                            cell: q,
                            span: cell.span,
                            values,
                        });
                    }
                }
            }
        }
    }
    rows
}

/// Composes a state from rows scaled by per-row multipliers.
pub fn compose_rows(
    rows: &[SeedRow],
    multipliers: &[f64],
    n_components: usize,
    grid: &RadialGrid,
) -> VectorField {
    debug_assert_eq!(rows.len(), multipliers.len());
    let mut field = VectorField::zeros(n_components, grid);
    for (row, &m) in rows.iter().zip(multipliers) {
        let c = field.component_mut(row.component);
        for (v, &rv) in c.iter_mut().zip(&row.values) {
            *v += m * rv;
        }
    }
    field.enforce_dirichlet(grid);
    field
}

/// Assembles the seed state on the grid.
pub fn build_seed(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    partition: &PartitionSpec,
    params: &SeedParams,
) -> Result<SeedField, SeedError> {
    params.validate(spec)?;
    // Every group micro-cell must resolve its p + 1 slots.
    for block in &partition.blocks {
        if let BlockKind::Group(_) = block.kind {
            for cell in &block.cells {
                for &micro in &cell.micro {
                    let slot_support = params.sharpness * (micro.1 - micro.0) / (spec.p + 1) as f64;
                    if slot_support < MIN_SLOT_CELLS * grid.spacing() {
                        return Err(SeedError::UnresolvableSlots {
                            lo: micro.0,
                            hi: micro.1,
                            p: spec.p,
                        });
                    }
                }
            }
        }
    }

    let mut field = VectorField::zeros(spec.n_components(), grid);
    for comp in 0..spec.n_components() {
        let values = field.component_mut(comp);
        for (i, &r) in grid.nodes.iter().enumerate() {
            values[i] = seed_component_value(spec, partition, params, comp, r);
        }
    }
    field.enforce_dirichlet(grid);
    let empty_rows = params.empty_rows(spec);
    Ok(SeedField {
        targets_met: empty_rows.is_empty(),
        empty_rows,
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, RadialDomain};
    use crate::nodal::nodal_count;
    use crate::system::{apply_group_action, GroupAction};

    fn spec_n(p: usize, groups: usize, remainder: usize, pt: Vec<usize>, qt: Vec<usize>) -> ProblemSpec {
        ProblemSpec::new(-2.0, p, groups, remainder, pt, qt, RadialDomain::ball(1.0, 3).unwrap()).unwrap()
    }

    #[test]
    fn subdivision_cuts_are_equal_width() {
        let spec = spec_n(2, 1, 0, vec![1], vec![]);
        let grid = build_grid(spec.domain, 256).unwrap();
        let part = subdivide(&grid, &spec, 2).unwrap();
        assert_eq!(part.blocks.len(), 1);
        let cells = &part.blocks[0].cells;
        assert_eq!(cells.len(), 2);
        let cuts = [
            cells[0].micro[0].1,
            cells[0].span.1,
            cells[1].micro[0].1,
        ];
        assert!((cuts[0] - 0.25).abs() < 1e-12);
        assert!((cuts[1] - 0.5).abs() < 1e-12);
        assert!((cuts[2] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn group_and_remainder_blocks_split_domain() {
        let spec = spec_n(2, 1, 1, vec![0], vec![0]);
        let grid = build_grid(spec.domain, 256).unwrap();
        let part = subdivide(&grid, &spec, 1).unwrap();
        assert_eq!(part.blocks.len(), 2);
        assert_eq!(part.blocks[0].kind, BlockKind::Group(0));
        assert_eq!(part.blocks[1].kind, BlockKind::Remainder(0));
        assert!((part.blocks[0].span.1 - 0.5).abs() < 1e-12);
        assert!((part.blocks[1].span.0 - 0.5).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn subdivision_strictly_nested(
            p_idx in 0usize..3,
            b in 1usize..3,
            r in 0usize..2,
            k in 1usize..4,
            t0 in 0usize..3,
            t1 in 0usize..2,
        ) {
            let p = [2usize, 3, 5][p_idx];
            let pt = vec![t0; b];
            let qt = vec![t1; r];
            let spec = spec_n(p, b, r, pt, qt);
            let grid = build_grid(spec.domain, 2048).unwrap();
            if let Ok(part) = subdivide(&grid, &spec, k) {
                let mut cuts: Vec<f64> = Vec::new();
                for block in &part.blocks {
                    for cell in &block.cells {
                        for &(lo, hi) in &cell.micro {
                            cuts.push(lo);
                            proptest::prop_assert!(hi > lo);
                        }
                    }
                }
                cuts.push(1.0);
                for w in cuts.windows(2) {
                    proptest::prop_assert!(w[1] > w[0]);
                }
            }
        }
    }

    #[test]
    fn degenerate_widths_guarded() {
        let spec = spec_n(2, 1, 0, vec![5], vec![]);
        let grid = build_grid(spec.domain, 16).unwrap();
        // 6 cells x K=8 micro-cells on 16 intervals is unresolvable.
        assert!(matches!(
            subdivide(&grid, &spec, 8),
            Err(SeedError::DegenerateWidths { .. })
        ));
    }

    #[test]
    fn aux_bump_nonzero_for_every_phase() {
        let micro = (0.2, 0.5);
        for p in [2usize, 3, 5] {
            for i in 0..200 {
                let theta = TWO_PI * i as f64 / 200.0;
                let max = (0..=400)
                    .map(|k| {
                        let r = 0.2 + 0.3 * k as f64 / 400.0;
                        aux_bump_value(micro, theta, p, 0.9, r)
                    })
                    .fold(0.0_f64, f64::max);
                assert!(max > 0.0, "p={p}, theta={theta}");
            }
        }
    }

    #[test]
    fn shifted_phases_have_disjoint_supports() {
        let micro = (0.1, 0.6);
        for p in [2usize, 3, 5] {
            for q in 1..p {
                for i in 0..64 {
                    let theta = TWO_PI * i as f64 / 64.0;
                    let shifted = theta + TWO_PI * q as f64 / p as f64;
                    for k in 0..=1000 {
                        let r = 0.1 + 0.5 * k as f64 / 1000.0;
                        let a = aux_bump_value(micro, theta, p, 0.9, r);
                        let b = aux_bump_value(micro, shifted, p, 0.9, r);
                        assert!(
                            a * b == 0.0,
                            "overlap at p={p}, q={q}, theta={theta}, r={r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn phase_difference_has_at_most_two_sign_changes() {
        let micro = (0.3, 0.8);
        for p in [2usize, 3, 5] {
            for q in 1..p {
                for i in 0..64 {
                    let theta = TWO_PI * i as f64 / 64.0;
                    let shifted = theta + TWO_PI * q as f64 / p as f64;
                    let f = |r: f64| {
                        aux_bump_value(micro, theta, p, 0.9, r)
                            - aux_bump_value(micro, shifted, p, 0.9, r)
                    };
                    let changes = crate::oracle::oracle_nodal_count(&f, 0.3, 0.8, 4000);
                    assert!(changes <= 2, "p={p} q={q} theta={theta}: {changes}");
                }
            }
        }
    }

    #[test]
    fn all_zero_amplitudes_build_zero_field() {
        let spec = spec_n(2, 1, 0, vec![0], vec![]);
        let grid = build_grid(spec.domain, 128).unwrap();
        let part = subdivide(&grid, &spec, 1).unwrap();
        let params = SeedParams::uniform(&spec, 1, 0.0, 0.9);
        let seed = build_seed(&spec, &grid, &part, &params).unwrap();
        assert_eq!(seed.field.sup_norm(), 0.0);
        assert!(!seed.targets_met);
        assert!(!seed.empty_rows.is_empty());
    }

    #[test]
    fn two_component_seed_has_expected_nodal_data() {
        let spec = spec_n(2, 1, 0, vec![0], vec![]);
        let grid = build_grid(spec.domain, 256).unwrap();
        let part = subdivide(&grid, &spec, 1).unwrap();
        let params = SeedParams::uniform(&spec, 1, 1.0, 0.9);
        let seed = build_seed(&spec, &grid, &part, &params).unwrap();
        assert!(seed.targets_met);
        let u1 = seed.field.component(0);
        let u2 = seed.field.component(1);
        assert_eq!(nodal_count(&grid, u1, 1e-8), 0);
        assert_eq!(nodal_count(&grid, u2, 1e-8), 0);
        assert!(u1.iter().all(|&v| v >= 0.0));
        assert!(u2.iter().all(|&v| v >= 0.0));
        let diff: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| a - b).collect();
        let n = nodal_count(&grid, &diff, 1e-8);
        assert!(n == 1 || n == 2, "difference nodes {n}");
    }

    #[test]
    fn group_action_matches_phase_shift() {
        let spec = spec_n(3, 1, 0, vec![0], vec![]);
        let grid = build_grid(spec.domain, 256).unwrap();
        let part = subdivide(&grid, &spec, 1).unwrap();
        let mut params = SeedParams::uniform(&spec, 1, 1.0, 0.9);
        params.groups[0].phases[0][0] = 0.7;
        let seed = build_seed(&spec, &grid, &part, &params).unwrap();

        let mut shifted_params = params.clone();
        shifted_params.groups[0].phases[0][0] = 0.7 + TWO_PI / 3.0;
        let shifted = build_seed(&spec, &grid, &part, &shifted_params).unwrap();

        let acted = apply_group_action(GroupAction::new(1), &spec, &seed.field);
        assert!(
            acted.sup_distance(&shifted.field) < 1e-12,
            "distance {}",
            acted.sup_distance(&shifted.field)
        );
    }

    #[test]
    fn cross_block_components_have_disjoint_supports() {
        let spec = spec_n(2, 1, 1, vec![1], vec![0]);
        let grid = build_grid(spec.domain, 512).unwrap();
        let part = subdivide(&grid, &spec, 2).unwrap();
        let params = SeedParams::uniform(&spec, 2, 1.0, 0.9);
        let seed = build_seed(&spec, &grid, &part, &params).unwrap();
        let u1 = seed.field.component(0);
        let u3 = seed.field.component(2);
        assert!(u1.iter().zip(u3).all(|(a, b)| a * b == 0.0));
        // n(u1) = 1, n(u3) = 0, difference <= P + Q + 1 = 2.
        assert_eq!(nodal_count(&grid, u1, 1e-8), 1);
        assert_eq!(nodal_count(&grid, u3, 1e-8), 0);
        let diff: Vec<f64> = u1.iter().zip(u3).map(|(a, b)| a - b).collect();
        assert!(nodal_count(&grid, &diff, 1e-8) <= 2);
    }
}
