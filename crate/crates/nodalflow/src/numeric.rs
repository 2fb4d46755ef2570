//! Small numerical kernels shared across the crate: compensated summation,
//! permutation-invariant sums, and tridiagonal / block-tridiagonal solves.

/// Three-valued sign: ±0.0 maps to 0 (f64::signum maps it to ±1, which
/// corrupts sign-change counts across zero gaps).
pub fn sign3(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Neumaier-compensated sum. Deterministic for a fixed slice order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sum that depends only on the multiset of values, not their order.
///
/// Equivariance tests compare quantities computed from permuted component
/// lists for exact equality; sorting before summation makes the float result
/// invariant under the permutation.
pub fn permutation_invariant_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    neumaier_sum(values.iter().copied())
}

/// Compensated dot product of `a` and `b` weighted by `w`.
pub fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), w.len());
    neumaier_sum((0..a.len()).map(|i| a[i] * b[i] * w[i]))
}

/// Solves a tridiagonal system in place via the Thomas algorithm.
///
/// `sub[i]` multiplies x[i-1] in row i, `diag[i]` multiplies x[i], and
/// `sup[i]` multiplies x[i+1]; `sub[0]` and `sup[n-1]` are ignored.
/// Returns `false` if a pivot collapses. The callers only ever assemble
/// diagonally dominant rows (implicit heat steps), where breakdown cannot
/// occur with finite data.
pub fn solve_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
    scratch: &mut Vec<f64>,
) -> bool {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let c = scratch;

    if diag[0] == 0.0 || !diag[0].is_finite() {
        return false;
    }
    c[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return false;
        }
        if i + 1 < n {
            c[i] = sup[i] / denom;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    true
}

/// Dense square block, row-major, dimension `nb`.
#[derive(Clone)]
pub struct Block {
    pub nb: usize,
    pub a: Vec<f64>,
}

impl Block {
    pub fn zeros(nb: usize) -> Self {
        Block {
            nb,
            a: vec![0.0; nb * nb],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.nb + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.a[r * self.nb + c]
    }

    /// In-place LU with partial pivoting; returns the pivot order, or `None`
    /// if the block is numerically singular.
    fn lu(&mut self) -> Option<Vec<usize>> {
        let n = self.nb;
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for r in k + 1..n {
                let v = self.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if p != k {
                for c in 0..n {
                    self.a.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let pivot = self.at(k, k);
            for r in k + 1..n {
                let f = self.at(r, k) / pivot;
                *self.at_mut(r, k) = f;
                for c in k + 1..n {
                    let sub = f * self.at(k, c);
                    *self.at_mut(r, c) -= sub;
                }
            }
        }
        Some(piv)
    }

    fn lu_solve(&self, piv: &[usize], rhs: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.nb;
        scratch.clear();
        scratch.extend((0..n).map(|i| rhs[piv[i]]));
        for r in 1..n {
            for c in 0..r {
                scratch[r] -= self.at(r, c) * scratch[c];
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                scratch[r] -= self.at(r, c) * scratch[c];
            }
            scratch[r] /= self.at(r, r);
        }
        rhs.copy_from_slice(scratch);
    }

    fn matvec_sub(&self, x: &[f64], out: &mut [f64]) {
        let n = self.nb;
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += self.at(r, c) * x[c];
            }
            out[r] -= acc;
        }
    }

    /// self -= other * rhsblk (dense nb×nb product).
    fn matmul_sub(&mut self, other: &Block, rhsblk: &Block) {
        let n = self.nb;
        for r in 0..n {
            for k in 0..n {
                let f = other.at(r, k);
                if f == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let sub = f * rhsblk.at(k, c);
                    *self.at_mut(r, c) -= sub;
                }
            }
        }
    }
}

/// Solves a block-tridiagonal system with `nb`-dimensional blocks by block
/// forward elimination (block Thomas). Used for the coupled Newton systems,
/// where the node-local blocks carry the inter-component coupling.
///
/// `sub`, `diag`, `sup` hold one block per node; `sub[0]` and `sup[last]`
/// are ignored. `rhs` is node-major (`node * nb + component`). Returns
/// `false` on a numerically singular diagonal block.
pub fn solve_block_tridiagonal(
    sub: &[Block],
    diag: &mut [Block],
    sup: &mut [Block],
    rhs: &mut [f64],
) -> bool {
    let n = diag.len();
    let nb = diag[0].nb;
    let mut pivots: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(nb);

    // Forward sweep: diag[i] <- diag[i] - sub[i] * inv(diag[i-1]) * sup[i-1],
    // realized by solving with the factored previous block column by column.
    for i in 0..n {
        if i > 0 {
            let piv_prev = &pivots[i - 1];
            // w = inv(diag[i-1]) * sup[i-1], column by column
            let mut w = Block::zeros(nb);
            for c in 0..nb {
                let mut col: Vec<f64> = (0..nb).map(|r| sup[i - 1].at(r, c)).collect();
                diag[i - 1].lu_solve(piv_prev, &mut col, &mut scratch);
                for r in 0..nb {
                    *w.at_mut(r, c) = col[r];
                }
            }
            let subi = sub[i].clone();
            diag[i].matmul_sub(&subi, &w);
            // rhs[i] -= sub[i] * inv(diag[i-1]) * rhs[i-1]
            let mut y: Vec<f64> = rhs[(i - 1) * nb..i * nb].to_vec();
            diag[i - 1].lu_solve(piv_prev, &mut y, &mut scratch);
            let (_, tail) = rhs.split_at_mut(i * nb);
            subi.matvec_sub(&y, &mut tail[..nb]);
            // store w back into sup[i-1]; back-substitution uses it directly
            sup[i - 1] = w;
        }
        match diag[i].lu() {
            Some(p) => pivots.push(p),
            None => return false,
        }
    }

    // Back substitution: x_i = inv(diag_i) rhs_i - w_i x_{i+1}, with
    // w_i = inv(diag_i) sup_i already stored in sup[i] by the sweep.
    let mut x_next = vec![0.0; nb];
    for i in (0..n).rev() {
        let mut y: Vec<f64> = rhs[i * nb..(i + 1) * nb].to_vec();
        diag[i].lu_solve(&pivots[i], &mut y, &mut scratch);
        if i + 1 < n {
            let w = &sup[i];
            for r in 0..nb {
                let mut acc = 0.0;
                for c in 0..nb {
                    acc += w.at(r, c) * x_next[c];
                }
                y[r] -= acc;
            }
        }
        rhs[i * nb..(i + 1) * nb].copy_from_slice(&y);
        x_next.copy_from_slice(&y);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_direct_solve() {
        let n = 6;
        let sub = vec![-1.0; n];
        let diag = vec![3.0; n];
        let sup = vec![-1.0; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) * 0.3).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = 3.0 * x_true[i];
            if i > 0 {
                rhs[i] -= x_true[i - 1];
            }
            if i + 1 < n {
                rhs[i] -= x_true[i + 1];
            }
        }
        let mut scratch = Vec::new();
        assert!(solve_tridiagonal(&sub, &diag, &sup, &mut rhs, &mut scratch));
        for i in 0..n {
            assert!((rhs[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn block_tridiagonal_matches_dense_reference() {
        // 2x2 blocks on 4 nodes; verify A x = b reproduces b.
        let nodes = 4;
        let nb = 2;
        let mk = |vals: [f64; 4]| Block {
            nb,
            a: vals.to_vec(),
        };
        let sub: Vec<Block> = (0..nodes)
            .map(|i| mk([-1.0 - 0.1 * i as f64, 0.2, 0.05, -1.0]))
            .collect();
        let diag_src: Vec<Block> = (0..nodes)
            .map(|i| mk([4.0 + 0.2 * i as f64, 0.5, -0.3, 5.0]))
            .collect();
        let sup_src: Vec<Block> = (0..nodes)
            .map(|i| mk([-0.9, 0.1, 0.0, -1.1 + 0.03 * i as f64]))
            .collect();
        let x_true: Vec<f64> = (0..nodes * nb).map(|i| (i as f64) * 0.17 - 0.4).collect();
        let mut rhs = vec![0.0; nodes * nb];
        for i in 0..nodes {
            for r in 0..nb {
                let mut acc = 0.0;
                for c in 0..nb {
                    acc += diag_src[i].at(r, c) * x_true[i * nb + c];
                    if i > 0 {
                        acc += sub[i].at(r, c) * x_true[(i - 1) * nb + c];
                    }
                    if i + 1 < nodes {
                        acc += sup_src[i].at(r, c) * x_true[(i + 1) * nb + c];
                    }
                }
                rhs[i * nb + r] = acc;
            }
        }
        let mut diag = diag_src.clone();
        let mut sup = sup_src.clone();
        assert!(solve_block_tridiagonal(&sub, &mut diag, &mut sup, &mut rhs));
        for i in 0..nodes * nb {
            assert!(
                (rhs[i] - x_true[i]).abs() < 1e-10,
                "component {i}: {} vs {}",
                rhs[i],
                x_true[i]
            );
        }
    }

    #[test]
    fn permutation_invariant_sum_is_order_free() {
        let mut a = vec![1e16, 1.0, -1e16, 3.5, 0.25];
        let mut b = vec![0.25, -1e16, 3.5, 1e16, 1.0];
        assert_eq!(
            permutation_invariant_sum(&mut a),
            permutation_invariant_sum(&mut b)
        );
    }
}
