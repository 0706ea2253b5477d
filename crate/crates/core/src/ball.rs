//! Ball indicators, the (4,4) core function and Θ² between atomic measures.
//!
//! For atomic P = Σ p_r δ_{X_r} and Q = Σ q_r δ_{X_r},
//!
//! ```text
//! Θ²(P, Q) = Σ_{u,v} [ Σ_r (p_r − q_r) 1{‖X_u − X_r‖ ≤ ‖X_u − X_v‖} ]² (p_u p_v + q_u q_v)
//! ```
//!
//! The inner bracket for a fixed u is a prefix sum of (p − q) along the indices
//! sorted by distance from X_u, taken at the end of v's tie group.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DistanceMatrix, DistanceOrder};
use crate::error::{CbdError, Result};
use crate::kernels::{weights_yz, weights_z, KernelSpec};

/// 1 iff X_r lies in the closed ball centred at X_u with radius ‖X_u − X_v‖.
#[inline]
pub fn delta(dist: &DistanceMatrix, u: usize, v: usize, r: usize) -> u8 {
    u8::from(dist.get(u, r) <= dist.get(u, v))
}

#[inline]
pub fn eta(dist: &DistanceMatrix, x: usize, y: usize, z1: usize, z2: usize) -> u8 {
    delta(dist, x, y, z1) * delta(dist, x, y, z2)
}

/// δ over the 8 points of a core evaluation, indexed by local position.
struct LocalDelta([[[u8; 8]; 8]; 8]);

impl LocalDelta {
    fn new(dist: &DistanceMatrix, idx: &[usize; 8]) -> Self {
        let mut t = [[[0u8; 8]; 8]; 8];
        for a in 0..8 {
            for b in 0..8 {
                let radius = dist.get(idx[a], idx[b]);
                for c in 0..8 {
                    t[a][b][c] = u8::from(dist.get(idx[a], idx[c]) <= radius);
                }
            }
        }
        LocalDelta(t)
    }

    #[inline]
    fn eta(&self, a: usize, b: usize, c: usize, d: usize) -> i32 {
        i32::from(self.0[a][b][c] & self.0[a][b][d])
    }

    #[inline]
    fn phi(&self, u: [usize; 4], v: [usize; 4]) -> i32 {
        let a = self.eta(u[0], u[1], u[2], u[3]) + self.eta(u[0], u[1], v[2], v[3])
            - self.eta(u[0], u[1], u[2], v[2])
            - self.eta(u[0], u[1], u[3], v[3]);
        let c = self.eta(v[0], v[1], v[2], v[3]) + self.eta(v[0], v[1], u[2], u[3])
            - self.eta(v[0], v[1], v[2], u[2])
            - self.eta(v[0], v[1], v[3], u[3]);
        a + c
    }
}

/// The 24 permutations of (0, 1, 2, 3).
pub(crate) fn permutations4() -> [[usize; 4]; 24] {
    let mut out = [[0usize; 4]; 24];
    let mut k = 0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out[k] = [a, b, c, d];
                        k += 1;
                    }
                }
            }
        }
    }
    out
}

/// Core function φ = φ_A + φ_C; the value lies in [−2, 2].
pub fn phi_core(dist: &DistanceMatrix, u: [usize; 4], v: [usize; 4]) -> f64 {
    let idx = [u[0], u[1], u[2], u[3], v[0], v[1], v[2], v[3]];
    f64::from(LocalDelta::new(dist, &idx).phi([0, 1, 2, 3], [4, 5, 6, 7]))
}

/// Average of φ over all 4!·4! reorderings of the u-block and the v-block.
pub fn phi_sym(dist: &DistanceMatrix, u: [usize; 4], v: [usize; 4]) -> f64 {
    let idx = [u[0], u[1], u[2], u[3], v[0], v[1], v[2], v[3]];
    let table = LocalDelta::new(dist, &idx);
    let perms = permutations4();
    let mut sum = 0i32;
    for t in &perms {
        let uu = [t[0], t[1], t[2], t[3]];
        for s in &perms {
            let vv = [4 + s[0], 4 + s[1], 4 + s[2], 4 + s[3]];
            sum += table.phi(uu, vv);
        }
    }
    f64::from(sum) / 576.0
}

/// An atomic probability measure on a subset of a shared sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEmpirical {
    support: Vec<usize>,
    probs: Vec<f64>,
}

impl WeightedEmpirical {
    pub fn new(support: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(CbdError::InvalidInput(format!(
                "support of length {} with {} weights",
                support.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(CbdError::InvalidInput("weights must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CbdError::InvalidInput(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(WeightedEmpirical { support, probs })
    }

    /// Weights over the whole sample `0..n`.
    pub fn dense(probs: Vec<f64>) -> Result<Self> {
        WeightedEmpirical::new((0..probs.len()).collect(), probs)
    }

    /// Unit mass at sample index `u`, carried on `support`.
    pub fn point_mass(support: Vec<usize>, u: usize) -> Result<Self> {
        let probs: Vec<f64> = support.iter().map(|&i| f64::from(u8::from(i == u))).collect();
        WeightedEmpirical::new(support, probs)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Θ²(P, Q) for two measures on the same support.
pub fn theta2_weighted(
    dist: &DistanceMatrix,
    p: &WeightedEmpirical,
    q: &WeightedEmpirical,
) -> Result<f64> {
    if p.support != q.support {
        return Err(CbdError::InvalidInput(
            "measures must share one support".into(),
        ));
    }
    if let Some(&bad) = p.support.iter().find(|&&i| i >= dist.n()) {
        return Err(CbdError::InvalidInput(format!(
            "support index {bad} outside a sample of size {}",
            dist.n()
        )));
    }
    let mut scratch = Vec::with_capacity(p.support.len());
    Ok(theta2_support(dist, &p.support, &p.probs, &q.probs, &mut scratch))
}

/// Θ² with `p`, `q` aligned to `idx`; every index carrying mass must be in `idx`.
pub(crate) fn theta2_support(
    dist: &DistanceMatrix,
    idx: &[usize],
    p: &[f64],
    q: &[f64],
    scratch: &mut Vec<(f64, u32)>,
) -> f64 {
    let m = idx.len();
    let mut total = 0.0;
    for a in 0..m {
        let (pa, qa) = (p[a], q[a]);
        if pa == 0.0 && qa == 0.0 {
            continue;
        }
        let row = dist.row(idx[a]);
        scratch.clear();
        scratch.extend(idx.iter().enumerate().map(|(b, &j)| (row[j], b as u32)));
        scratch.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
        total += walk_groups(scratch, p, q, pa, qa);
    }
    total
}

/// Θ² for scalar observations `x` (indexed like `dist` rows would be).
///
/// With the support sorted by value once, the order by distance from any
/// point is a two-way merge outward from its position.
pub(crate) fn theta2_line(
    x: &[f64],
    idx: &[usize],
    p: &[f64],
    q: &[f64],
    scratch: &mut Vec<(f64, u32)>,
) -> f64 {
    let m = idx.len();
    scratch.clear();
    scratch.extend(idx.iter().enumerate().map(|(b, &j)| (x[j], b as u32)));
    scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    // value-sorted copies padded with ±∞ sentinels carrying no mass
    let mut xs = Vec::with_capacity(m + 2);
    let mut ps = Vec::with_capacity(m + 2);
    let mut qs = Vec::with_capacity(m + 2);
    xs.push(f64::NEG_INFINITY);
    ps.push(0.0);
    qs.push(0.0);
    for &(v, b) in scratch.iter() {
        xs.push(v);
        ps.push(p[b as usize]);
        qs.push(q[b as usize]);
    }
    xs.push(f64::INFINITY);
    ps.push(0.0);
    qs.push(0.0);
    // independent merges advance in lockstep so their dependency chains overlap
    let mut total = 0.0;
    let mut k = 1;
    while k + 3 <= m {
        let mut w = [
            LineWalker::new(&xs, &ps, &qs, k),
            LineWalker::new(&xs, &ps, &qs, k + 1),
            LineWalker::new(&xs, &ps, &qs, k + 2),
            LineWalker::new(&xs, &ps, &qs, k + 3),
        ];
        for _ in 1..m {
            for walker in &mut w {
                walker.step(&xs, &ps, &qs);
            }
        }
        total += w.iter().map(LineWalker::finish).sum::<f64>();
        k += 4;
    }
    while k <= m {
        let mut walker = LineWalker::new(&xs, &ps, &qs, k);
        for _ in 1..m {
            walker.step(&xs, &ps, &qs);
        }
        total += walker.finish();
        k += 1;
    }
    total
}

/// Outward merge from one sorted position, accumulating tie groups.
struct LineWalker {
    xu: f64,
    pa: f64,
    qa: f64,
    l: usize,
    r: usize,
    cur: f64,
    prefix: f64,
    gp: f64,
    gq: f64,
    acc_p: f64,
    acc_q: f64,
}

impl LineWalker {
    #[inline(always)]
    fn new(xs: &[f64], ps: &[f64], qs: &[f64], k: usize) -> Self {
        LineWalker {
            xu: xs[k],
            pa: ps[k],
            qa: qs[k],
            l: k - 1,
            r: k + 1,
            cur: 0.0,
            prefix: ps[k] - qs[k],
            gp: ps[k],
            gq: qs[k],
            acc_p: 0.0,
            acc_q: 0.0,
        }
    }

    #[inline(always)]
    fn step(&mut self, xs: &[f64], ps: &[f64], qs: &[f64]) {
        let dl = self.xu - xs[self.l];
        let dr = xs[self.r] - self.xu;
        let left = usize::from(dl <= dr);
        let d = dl.min(dr);
        let j = self.r ^ ((self.l ^ self.r) & left.wrapping_neg());
        self.l -= left;
        self.r += 1 - left;
        if d != self.cur {
            let sq = self.prefix * self.prefix;
            self.acc_p += self.gp * sq;
            self.acc_q += self.gq * sq;
            self.gp = 0.0;
            self.gq = 0.0;
            self.cur = d;
        }
        self.prefix += ps[j] - qs[j];
        self.gp += ps[j];
        self.gq += qs[j];
    }

    /// The last group closes with the full sum of p − q, exactly zero.
    #[inline(always)]
    fn finish(&self) -> f64 {
        self.pa * self.acc_p + self.qa * self.acc_q
    }
}

/// One anchor's contribution, walking (distance, slot) pairs in sorted order.
#[inline]
fn walk_groups(sorted: &[(f64, u32)], p: &[f64], q: &[f64], pa: f64, qa: f64) -> f64 {
    let m = sorted.len();
    let (mut prefix, mut acc_p, mut acc_q) = (0.0, 0.0, 0.0);
    let mut k = 0;
    while k < m {
        let d = sorted[k].0;
        let (mut gp, mut gq) = (0.0, 0.0);
        while k < m && sorted[k].0 == d {
            let b = sorted[k].1 as usize;
            prefix += p[b] - q[b];
            gp += p[b];
            gq += q[b];
            k += 1;
        }
        if k == m {
            // the full sum of p − q is exactly zero
            prefix = 0.0;
        }
        let sq = prefix * prefix;
        acc_p += gp * sq;
        acc_q += gq * sq;
    }
    pa * acc_p + qa * acc_q
}

/// Normalized kernel laws at anchor s over the full sample: (P̃_{X|Y_s,Z_s}, P̃_{X|Z_s}).
pub(crate) fn anchor_laws(
    ds: &Dataset,
    s: usize,
    h1: f64,
    h2: f64,
    spec: KernelSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let wyz = weights_yz(ds, ds.y().row(s), ds.z().row(s), h1, spec)?;
    let wz = weights_z(ds, ds.z().row(s), h2, spec)?;
    if wyz.total <= 0.0 || wz.total <= 0.0 {
        return Err(CbdError::Precondition(format!(
            "anchor {s} has zero kernel mass"
        )));
    }
    Ok((wyz.normalized(), wz.normalized()))
}

/// Θ²(P̃_{X|Y_s,Z_s}, P̃_{X|Z_s}) by prefix sums along each row of `order`.
pub fn pointwise_cbd(
    ds: &Dataset,
    dist: &DistanceMatrix,
    order: &DistanceOrder,
    s: usize,
    h1: f64,
    h2: f64,
    spec: KernelSpec,
) -> Result<f64> {
    check_tables(ds, dist, Some(order), s)?;
    let (p, q) = anchor_laws(ds, s, h1, h2, spec)?;
    let n = ds.n();
    let mut total = 0.0;
    for u in 0..n {
        if p[u] == 0.0 && q[u] == 0.0 {
            continue;
        }
        let row = order.order_row(u);
        let dists = dist.row(u);
        let (mut prefix, mut acc_p, mut acc_q) = (0.0, 0.0, 0.0);
        let mut k = 0;
        while k < n {
            let d = dists[row[k] as usize];
            let (mut gp, mut gq) = (0.0, 0.0);
            while k < n && dists[row[k] as usize] == d {
                let b = row[k] as usize;
                prefix += p[b] - q[b];
                gp += p[b];
                gq += q[b];
                k += 1;
            }
            if k == n {
                prefix = 0.0;
            }
            let sq = prefix * prefix;
            acc_p += gp * sq;
            acc_q += gq * sq;
        }
        total += p[u] * acc_p + q[u] * acc_q;
    }
    Ok(total)
}

/// Literal triple loop over (u, v, r); the oracle for [`pointwise_cbd`].
pub fn pointwise_cbd_bruteforce(
    ds: &Dataset,
    dist: &DistanceMatrix,
    s: usize,
    h1: f64,
    h2: f64,
    spec: KernelSpec,
) -> Result<f64> {
    check_tables(ds, dist, None, s)?;
    let (p, q) = anchor_laws(ds, s, h1, h2, spec)?;
    let n = ds.n();
    let mut total = 0.0;
    for u in 0..n {
        for v in 0..n {
            let mut bracket = 0.0;
            for r in 0..n {
                if delta(dist, u, v, r) == 1 {
                    bracket += p[r] - q[r];
                }
            }
            total += bracket * bracket * (p[u] * p[v] + q[u] * q[v]);
        }
    }
    Ok(total)
}

fn check_tables(
    ds: &Dataset,
    dist: &DistanceMatrix,
    order: Option<&DistanceOrder>,
    s: usize,
) -> Result<()> {
    let n = ds.n();
    if dist.n() != n || order.is_some_and(|o| o.n() != n) {
        return Err(CbdError::InvalidInput(
            "distance tables do not match the dataset".into(),
        ));
    }
    if s >= n {
        return Err(CbdError::InvalidInput(format!(
            "anchor {s} out of range for n = {n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pairwise_distances, rank_order, Matrix};

    fn line(points: &[f64]) -> DistanceMatrix {
        pairwise_distances(&Matrix::column_vector(points)).unwrap()
    }

    #[test]
    fn delta_basics() {
        let d = line(&[0.0, 1.0, 3.0, 0.0]);
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(delta(&d, u, v, u), 1);
            }
        }
        // zero radius: only coincident points
        assert_eq!(delta(&d, 0, 0, 3), 1);
        assert_eq!(delta(&d, 0, 0, 1), 0);
        // closed ball includes the boundary
        assert_eq!(delta(&d, 1, 0, 1), 1);
        assert_eq!(delta(&d, 0, 1, 2), 0);
    }

    #[test]
    fn eta_basics() {
        let d = line(&[0.0, 1.0, 3.0]);
        assert_eq!(eta(&d, 0, 1, 0, 0), 1);
        assert_eq!(eta(&d, 0, 1, 1, 2), 0);
        assert_eq!(eta(&d, 2, 0, 1, 0), 1);
    }

    #[test]
    fn collapse_gives_zero_core() {
        let d = line(&[2.0, 5.0]);
        assert_eq!(phi_core(&d, [1; 4], [1; 4]), 0.0);
        assert_eq!(phi_sym(&d, [0; 4], [0; 4]), 0.0);
    }

    #[test]
    fn permutations_are_distinct() {
        let p = permutations4();
        for i in 0..24 {
            for j in 0..i {
                assert_ne!(p[i], p[j]);
            }
        }
    }

    #[test]
    fn weighted_empirical_validation() {
        assert!(WeightedEmpirical::new(vec![0, 1], vec![0.5, 0.4]).is_err());
        assert!(WeightedEmpirical::new(vec![0, 1], vec![1.5, -0.5]).is_err());
        assert!(WeightedEmpirical::new(vec![0], vec![1.0, 0.0]).is_err());
        let pm = WeightedEmpirical::point_mass(vec![3, 5, 7], 5).unwrap();
        assert_eq!(pm.probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn theta2_hand_case() {
        let d = line(&[0.0, 1.0, 2.5, 4.0]);
        let p = WeightedEmpirical::dense(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let q = WeightedEmpirical::dense(vec![0.25; 4]).unwrap();
        let mut brute = 0.0;
        for u in 0..4 {
            for v in 0..4 {
                let mut b = 0.0;
                for r in 0..4 {
                    if d.get(u, r) <= d.get(u, v) {
                        b += p.probs()[r] - q.probs()[r];
                    }
                }
                brute += b * b * (p.probs()[u] * p.probs()[v] + q.probs()[u] * q.probs()[v]);
            }
        }
        let fast = theta2_weighted(&d, &p, &q).unwrap();
        assert!((fast - brute).abs() < 1e-12);
        assert_eq!(theta2_weighted(&d, &p, &p).unwrap(), 0.0);
        assert_eq!(fast, theta2_weighted(&d, &q, &p).unwrap());
        let other = WeightedEmpirical::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        assert!(theta2_weighted(&d, &p, &other).is_err());
    }

    #[test]
    fn pointwise_zero_cases() {
        let k = KernelSpec::epanechnikov();
        // identical X rows: every bracket telescopes to 0
        let ds = Dataset::from_columns(&[1.0; 5], &[0.0, 0.3, 0.1, 0.7, 0.2], &[0.1, 0.2, 0.3, 0.4, 0.5])
            .unwrap();
        let dist = pairwise_distances(ds.x()).unwrap();
        let order = rank_order(&dist);
        for s in 0..5 {
            assert_eq!(pointwise_cbd(&ds, &dist, &order, s, 0.5, 0.5, k).unwrap(), 0.0);
        }
        // huge bandwidths: both laws are (nearly) flat; equal Y makes them identical
        let ds = Dataset::from_columns(&[0.0, 2.0, 1.0, 5.0], &[0.0; 4], &[0.0; 4]).unwrap();
        let dist = pairwise_distances(ds.x()).unwrap();
        let order = rank_order(&dist);
        assert_eq!(pointwise_cbd(&ds, &dist, &order, 0, 1.0, 1.0, k).unwrap(), 0.0);
    }

    #[test]
    fn pointwise_rejects_mismatched_tables() {
        let k = KernelSpec::epanechnikov();
        let ds = Dataset::from_columns(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).unwrap();
        let dist = line(&[0.0, 1.0]);
        let order = rank_order(&dist);
        assert!(pointwise_cbd(&ds, &dist, &order, 0, 1.0, 1.0, k).is_err());
        let dist = pairwise_distances(ds.x()).unwrap();
        let order = rank_order(&dist);
        assert!(pointwise_cbd(&ds, &dist, &order, 3, 1.0, 1.0, k).is_err());
    }
}
