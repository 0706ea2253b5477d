//! Conditional ball divergence estimators.
//!
//! All estimators split into a part that depends only on (Y, Z) and the
//! bandwidths, prepared once, and a cheap evaluation on an X sample. The
//! resampling tests reuse the prepared part across every resample because
//! resampling never touches Y or Z.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::ball::{phi_sym, theta2_line, theta2_support};
use crate::data::{distances_unchecked, sq_dist, Dataset, DistanceMatrix, Matrix};
use crate::error::{CbdError, Result};
use crate::kernels::{resolve_bandwidths, BandwidthOverrides, Bandwidths, KernelSpec};
use crate::rng::rng_from_seed;

/// Weight a(y, z) applied to each anchor's Θ².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeightFunction {
    /// a ≡ 1
    #[default]
    #[serde(rename = "one")]
    One,
    /// a = p̂_{Y,Z}²
    #[serde(rename = "p2")]
    JointDensitySquared,
    /// a = p̂_{Y,Z}⁴ p̂_Z⁴
    #[serde(rename = "p4p4")]
    Product44,
}

impl WeightFunction {
    pub fn id(self) -> &'static str {
        match self {
            WeightFunction::One => "one",
            WeightFunction::JointDensitySquared => "p2",
            WeightFunction::Product44 => "p4p4",
        }
    }

    fn apply(self, p_yz: f64, p_z: f64) -> f64 {
        match self {
            WeightFunction::One => 1.0,
            WeightFunction::JointDensitySquared => p_yz * p_yz,
            WeightFunction::Product44 => (p_yz * p_z).powi(4),
        }
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for WeightFunction {
    type Err = CbdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(WeightFunction::One),
            "p2" => Ok(WeightFunction::JointDensitySquared),
            "p4p4" => Ok(WeightFunction::Product44),
            other => Err(CbdError::param(
                "weight",
                format!("expected one|p2|p4p4, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    Vstat,
    UstatExact,
    UstatIncomplete,
    Linear,
    Normalized,
}

impl EstimatorKind {
    pub fn id(self) -> &'static str {
        match self {
            EstimatorKind::Vstat => "vstat",
            EstimatorKind::UstatExact => "ustat_exact",
            EstimatorKind::UstatIncomplete => "ustat_incomplete",
            EstimatorKind::Linear => "linear",
            EstimatorKind::Normalized => "normalized",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A point estimate with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbdStatistic {
    pub value: f64,
    pub weight: WeightFunction,
    pub bandwidths: Bandwidths,
    pub estimator_kind: EstimatorKind,
    /// Monte Carlo standard error (incomplete U-statistic only).
    pub std_error: Option<f64>,
}

/// Kernel laws of one anchor restricted to the indices where either is positive.
#[derive(Debug, Clone)]
struct AnchorLaw {
    support: Vec<usize>,
    p: Vec<f64>,
    q: Vec<f64>,
    a: f64,
}

/// Per-anchor kernel laws for a fixed (Y, Z) sample, ready to score any X.
#[derive(Debug, Clone)]
pub struct CbdEngine {
    n: usize,
    d_x: usize,
    weight: WeightFunction,
    bandwidths: Bandwidths,
    anchors: Vec<AnchorLaw>,
}

impl CbdEngine {
    pub fn new(
        ds: &Dataset,
        bw: Bandwidths,
        spec: KernelSpec,
        weight: WeightFunction,
    ) -> Result<Self> {
        bw.validate()?;
        let n = ds.n();
        let yz = ds.yz();
        let z = ds.z();
        let (i1, i2) = (1.0 / (bw.h1 * bw.h1), 1.0 / (bw.h2 * bw.h2));
        let c_yz = density_scale(n, bw.h1, ds.d_y() + ds.d_z());
        let c_z = density_scale(n, bw.h2, ds.d_z());
        // kernel matrices are symmetric: fill both halves from one evaluation
        let mut kp = vec![0.0; n * n];
        let mut kq = vec![0.0; n * n];
        for s in 0..n {
            let (ys, zs) = (yz.row(s), z.row(s));
            kp[s * n + s] = spec.profile_sq(0.0);
            kq[s * n + s] = spec.profile_sq(0.0);
            for i in (s + 1)..n {
                let wp = spec.profile_sq(sq_dist(yz.row(i), ys) * i1);
                let wq = spec.profile_sq(sq_dist(z.row(i), zs) * i2);
                kp[s * n + i] = wp;
                kp[i * n + s] = wp;
                kq[s * n + i] = wq;
                kq[i * n + s] = wq;
            }
        }
        let mut anchors = Vec::with_capacity(n);
        for s in 0..n {
            let (wp, wq) = (&kp[s * n..(s + 1) * n], &kq[s * n..(s + 1) * n]);
            let (tp, tq): (f64, f64) = (wp.iter().sum(), wq.iter().sum());
            if !(tp > 0.0 && tq > 0.0) {
                return Err(CbdError::Precondition(format!(
                    "anchor {s} has zero kernel mass"
                )));
            }
            let mut law = AnchorLaw {
                support: Vec::new(),
                p: Vec::new(),
                q: Vec::new(),
                a: weight.apply(tp * c_yz, tq * c_z),
            };
            for i in 0..n {
                if wp[i] > 0.0 || wq[i] > 0.0 {
                    law.support.push(i);
                    law.p.push(wp[i] / tp);
                    law.q.push(wq[i] / tq);
                }
            }
            anchors.push(law);
        }
        Ok(CbdEngine {
            n,
            d_x: ds.d_x(),
            weight,
            bandwidths: bw,
            anchors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> Bandwidths {
        self.bandwidths
    }

    pub fn weight(&self) -> WeightFunction {
        self.weight
    }

    /// Mean support size over anchors (diagnostic for cost).
    pub fn mean_support(&self) -> f64 {
        self.anchors.iter().map(|a| a.support.len()).sum::<usize>() as f64 / self.n as f64
    }

    /// Per-anchor weights a(Y_s, Z_s).
    pub fn anchor_weights(&self) -> Vec<f64> {
        self.anchors.iter().map(|a| a.a).collect()
    }

    fn check_x(&self, x: &Matrix) -> Result<()> {
        if x.nrows() != self.n || x.ncols() != self.d_x {
            return Err(CbdError::InvalidInput(format!(
                "x is {}x{}, expected {}x{}",
                x.nrows(),
                x.ncols(),
                self.n,
                self.d_x
            )));
        }
        if !x.is_finite() {
            return Err(CbdError::InvalidInput("x contains non-finite values".into()));
        }
        Ok(())
    }

    /// Θ²(P̃_{X|Y_s,Z_s}, P̃_{X|Z_s}) for every anchor s.
    pub fn pointwise(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let geom = Geometry::of(x);
        let mut scratch = Vec::new();
        Ok(self
            .anchors
            .iter()
            .map(|law| geom.theta2(&law.support, &law.p, &law.q, &mut scratch))
            .collect())
    }

    /// (1/n) Σ_s Θ²_s · a(Y_s, Z_s).
    pub fn vstat(&self, x: &Matrix) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.vstat_in(&Geometry::of(x)))
    }

    fn vstat_in(&self, geom: &Geometry<'_>) -> f64 {
        let mut scratch = Vec::new();
        let mut total = 0.0;
        for law in &self.anchors {
            total += law.a * geom.theta2(&law.support, &law.p, &law.q, &mut scratch);
        }
        total / self.n as f64
    }

    /// Unit-weight statistic divided by its point-mass upper bound; 0/0 is 0.
    pub fn normalized(&self, x: &Matrix) -> Result<f64> {
        self.check_x(x)?;
        let geom = Geometry::of(x);
        let mut scratch = Vec::new();
        let mut point = Vec::new();
        let (mut num, mut den) = (0.0, 0.0);
        for law in &self.anchors {
            num += geom.theta2(&law.support, &law.p, &law.q, &mut scratch);
            for (k, &pk) in law.p.iter().enumerate() {
                if pk == 0.0 {
                    continue;
                }
                point.clear();
                point.resize(law.support.len(), 0.0);
                point[k] = 1.0;
                den += pk * geom.theta2(&law.support, &point, &law.q, &mut scratch);
            }
        }
        if den > 0.0 {
            Ok((num / den).clamp(0.0, 1.0))
        } else {
            Ok(0.0)
        }
    }
}

/// Distances among the X sample: scalar samples are handled by value.
enum Geometry<'a> {
    Line(&'a [f64]),
    Metric(DistanceMatrix),
}

impl<'a> Geometry<'a> {
    fn of(x: &'a Matrix) -> Self {
        if x.ncols() == 1 {
            Geometry::Line(x.as_slice())
        } else {
            Geometry::Metric(distances_unchecked(x))
        }
    }

    #[inline]
    fn theta2(&self, idx: &[usize], p: &[f64], q: &[f64], scratch: &mut Vec<(f64, u32)>) -> f64 {
        match self {
            Geometry::Line(x) => theta2_line(x, idx, p, q, scratch),
            Geometry::Metric(dist) => theta2_support(dist, idx, p, q, scratch),
        }
    }
}

/// Converts a kernel-weight total into a density estimate: c_d / (n h^d).
fn density_scale(n: usize, h: f64, d: usize) -> f64 {
    crate::kernels::normalizing_constant(d) / (n as f64 * h.powi(d as i32))
}

/// Weighted V-statistic estimate.
pub fn cbd_vstat(
    ds: &Dataset,
    bw: Bandwidths,
    spec: KernelSpec,
    a: WeightFunction,
) -> Result<CbdStatistic> {
    let engine = CbdEngine::new(ds, bw, spec, a)?;
    Ok(CbdStatistic {
        value: engine.vstat(ds.x())?,
        weight: a,
        bandwidths: bw,
        estimator_kind: EstimatorKind::Vstat,
        std_error: None,
    })
}

/// Plug-in normalized cBD in [0, 1].
pub fn normalized_cbd(ds: &Dataset, bw: Bandwidths, spec: KernelSpec) -> Result<f64> {
    CbdEngine::new(ds, bw, spec, WeightFunction::One)?.normalized(ds.x())
}

/// Raw kernel tables for the order-9 core φ_n.
#[derive(Debug, Clone)]
pub struct UstatTables {
    n: usize,
    d_x: usize,
    w_yz: Vec<f64>,
    w_z: Vec<f64>,
    prefactor: f64,
    bandwidths: Bandwidths,
}

impl UstatTables {
    pub fn new(ds: &Dataset, bw: Bandwidths, spec: KernelSpec) -> Result<Self> {
        bw.validate()?;
        let n = ds.n();
        if n < 9 {
            return Err(CbdError::InsufficientSample { needed: 9, got: n });
        }
        let yz = ds.yz();
        let z = ds.z();
        let (d_yz, d_z) = (ds.d_y() + ds.d_z(), ds.d_z());
        let cyz = if spec.normalized {
            crate::kernels::normalizing_constant(d_yz)
        } else {
            1.0
        };
        let cz = if spec.normalized {
            crate::kernels::normalizing_constant(d_z)
        } else {
            1.0
        };
        let (i1, i2) = (1.0 / (bw.h1 * bw.h1), 1.0 / (bw.h2 * bw.h2));
        let mut w_yz = vec![0.0; n * n];
        let mut w_z = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                w_yz[i * n + l] = cyz * spec.profile_sq(sq_dist(yz.row(i), yz.row(l)) * i1);
                w_z[i * n + l] = cz * spec.profile_sq(sq_dist(z.row(i), z.row(l)) * i2);
            }
        }
        let prefactor = 1.0 / (bw.h1.powi(4 * d_yz as i32) * bw.h2.powi(4 * d_z as i32));
        Ok(UstatTables {
            n,
            d_x: ds.d_x(),
            w_yz,
            w_z,
            prefactor,
            bandwidths: bw,
        })
    }

    pub fn bandwidths(&self) -> Bandwidths {
        self.bandwidths
    }

    /// Kernel weight product for anchor `t[0]` over blocks `t[1..5]` and `t[5..9]`.
    #[inline]
    fn weight(&self, t: &[usize; 9]) -> f64 {
        let row = t[0] * self.n;
        let mut w = self.prefactor;
        for &l in &t[1..5] {
            w *= self.w_yz[row + l];
        }
        for &l in &t[5..9] {
            w *= self.w_z[row + l];
        }
        w
    }

    /// φ_n at one ordered 9-tuple of sample indices.
    pub fn phi_n(&self, dist: &DistanceMatrix, t: &[usize; 9]) -> f64 {
        let w = self.weight(t);
        if w == 0.0 {
            return 0.0;
        }
        w * phi_sym(dist, [t[1], t[2], t[3], t[4]], [t[5], t[6], t[7], t[8]])
    }

    fn distances(&self, x: &Matrix) -> Result<DistanceMatrix> {
        if x.nrows() != self.n || x.ncols() != self.d_x || !x.is_finite() {
            return Err(CbdError::InvalidInput(format!(
                "x must be a finite {}x{} matrix",
                self.n, self.d_x
            )));
        }
        Ok(distances_unchecked(x))
    }

    /// Average of φ_n over every ordered tuple of distinct indices.
    ///
    /// φ_n is symmetric within each block, so the average runs over
    /// (anchor, 4-set, disjoint 4-set) triples, each standing for 576 tuples.
    pub fn exact(&self, x: &Matrix) -> Result<f64> {
        let n = self.n;
        if n > 10 {
            return Err(CbdError::Precondition(format!(
                "exact enumeration is limited to n <= 10 (got {n}); use the incomplete mode"
            )));
        }
        let dist = self.distances(x)?;
        let (mut sum, mut count) = (0.0, 0u64);
        let mut t = [0usize; 9];
        for anchor in 0..n {
            t[0] = anchor;
            let rest: Vec<usize> = (0..n).filter(|&i| i != anchor).collect();
            for a in combinations(&rest, 4) {
                t[1..5].copy_from_slice(&a);
                let others: Vec<usize> = rest.iter().copied().filter(|i| !a.contains(i)).collect();
                for b in combinations(&others, 4) {
                    t[5..9].copy_from_slice(&b);
                    sum += self.phi_n(&dist, &t);
                    count += 1;
                }
            }
        }
        Ok(sum / count as f64)
    }

    /// Mean and standard error of φ_n over `tuples` uniformly drawn ordered tuples.
    pub fn incomplete(&self, x: &Matrix, tuples: usize, seed: u64) -> Result<(f64, f64)> {
        if tuples == 0 {
            return Err(CbdError::param("tuples", "need at least one tuple"));
        }
        let dist = self.distances(x)?;
        let mut rng = rng_from_seed(seed);
        let (mut mean, mut m2) = (0.0, 0.0);
        let mut t = [0usize; 9];
        for k in 0..tuples {
            let mut draw = index::sample(&mut rng, self.n, 9).into_vec();
            draw.shuffle(&mut rng);
            t.copy_from_slice(&draw);
            let v = self.phi_n(&dist, &t);
            let delta = v - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (v - mean);
        }
        let se = if tuples > 1 {
            (m2 / (tuples - 1) as f64 / tuples as f64).sqrt()
        } else {
            f64::NAN
        };
        Ok((mean, se))
    }

    /// Mean of φ_n over consecutive disjoint blocks of nine.
    pub fn linear(&self, x: &Matrix) -> Result<f64> {
        let dist = self.distances(x)?;
        let blocks = self.n / 9;
        let mut sum = 0.0;
        for b in 0..blocks {
            let mut t = [0usize; 9];
            for (k, slot) in t.iter_mut().enumerate() {
                *slot = 9 * b + k;
            }
            sum += self.phi_n(&dist, &t);
        }
        Ok(sum / blocks as f64)
    }
}

/// All k-subsets of `items` in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let m = items.len();
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut pos: Vec<usize> = (0..k).collect();
    loop {
        out.push(pos.iter().map(|&p| items[p]).collect());
        let mut i = k;
        while i > 0 && pos[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        pos[i - 1] += 1;
        for j in i..k {
            pos[j] = pos[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UStatMode {
    Exact,
    Incomplete { tuples: usize, seed: u64 },
}

/// Order-9 U-statistic estimate of the density-weighted divergence.
pub fn cbd_ustat(
    ds: &Dataset,
    bw: Bandwidths,
    spec: KernelSpec,
    mode: UStatMode,
) -> Result<CbdStatistic> {
    let tables = UstatTables::new(ds, bw, spec)?;
    let (value, std_error, kind) = match mode {
        UStatMode::Exact => (tables.exact(ds.x())?, None, EstimatorKind::UstatExact),
        UStatMode::Incomplete { tuples, seed } => {
            let (m, se) = tables.incomplete(ds.x(), tuples, seed)?;
            (m, Some(se), EstimatorKind::UstatIncomplete)
        }
    };
    Ok(CbdStatistic {
        value,
        weight: WeightFunction::Product44,
        bandwidths: bw,
        estimator_kind: kind,
        std_error,
    })
}

/// Linear-time estimate over disjoint blocks of nine.
pub fn cbd_linear(ds: &Dataset, bw: Bandwidths, spec: KernelSpec) -> Result<CbdStatistic> {
    let tables = UstatTables::new(ds, bw, spec)?;
    Ok(CbdStatistic {
        value: tables.linear(ds.x())?,
        weight: WeightFunction::Product44,
        bandwidths: bw,
        estimator_kind: EstimatorKind::Linear,
        std_error: None,
    })
}

/// Estimator settings shared by the CLI, tests and the harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub weight: WeightFunction,
    pub kernel: KernelSpec,
    pub overrides: BandwidthOverrides,
    /// Tuple count for the incomplete U-statistic.
    pub tuples: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: EstimatorKind::Vstat,
            weight: WeightFunction::One,
            kernel: KernelSpec::epanechnikov(),
            overrides: BandwidthOverrides::default(),
            tuples: 10_000,
        }
    }
}

impl EstimatorConfig {
    pub fn with_weight(mut self, weight: WeightFunction) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_kind(mut self, kind: EstimatorKind) -> Self {
        self.kind = kind;
        self
    }

    /// The weight actually used by the estimator kind.
    pub fn effective_weight(&self) -> WeightFunction {
        match self.kind {
            EstimatorKind::Vstat => self.weight,
            EstimatorKind::Normalized => WeightFunction::One,
            _ => WeightFunction::Product44,
        }
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Engine(CbdEngine),
    Tables(UstatTables),
}

/// An estimator bound to one (Y, Z) sample and fixed bandwidths.
#[derive(Debug, Clone)]
pub struct PreparedStatistic {
    config: EstimatorConfig,
    bandwidths: Bandwidths,
    inner: Prepared,
}

impl PreparedStatistic {
    pub fn prepare(ds: &Dataset, config: EstimatorConfig) -> Result<Self> {
        let bw = resolve_bandwidths(ds, &config.overrides)?;
        Self::with_bandwidths(ds, config, bw)
    }

    pub fn with_bandwidths(ds: &Dataset, config: EstimatorConfig, bw: Bandwidths) -> Result<Self> {
        let inner = match config.kind {
            EstimatorKind::Vstat | EstimatorKind::Normalized => Prepared::Engine(CbdEngine::new(
                ds,
                bw,
                config.kernel,
                config.effective_weight(),
            )?),
            EstimatorKind::UstatExact | EstimatorKind::UstatIncomplete | EstimatorKind::Linear => {
                Prepared::Tables(UstatTables::new(ds, bw, config.kernel)?)
            }
        };
        Ok(PreparedStatistic {
            config,
            bandwidths: bw,
            inner,
        })
    }

    pub fn bandwidths(&self) -> Bandwidths {
        self.bandwidths
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// Score an X sample; `seed` only matters for the incomplete U-statistic.
    pub fn evaluate(&self, x: &Matrix, seed: u64) -> Result<f64> {
        match (&self.inner, self.config.kind) {
            (Prepared::Engine(e), EstimatorKind::Normalized) => e.normalized(x),
            (Prepared::Engine(e), _) => e.vstat(x),
            (Prepared::Tables(t), EstimatorKind::UstatExact) => t.exact(x),
            (Prepared::Tables(t), EstimatorKind::UstatIncomplete) => {
                t.incomplete(x, self.config.tuples, seed).map(|r| r.0)
            }
            (Prepared::Tables(t), _) => t.linear(x),
        }
    }

    pub fn statistic(&self, x: &Matrix, seed: u64) -> Result<CbdStatistic> {
        let (value, std_error) = match (&self.inner, self.config.kind) {
            (Prepared::Tables(t), EstimatorKind::UstatIncomplete) => {
                let (m, se) = t.incomplete(x, self.config.tuples, seed)?;
                (m, Some(se))
            }
            _ => (self.evaluate(x, seed)?, None),
        };
        Ok(CbdStatistic {
            value,
            weight: self.config.effective_weight(),
            bandwidths: self.bandwidths,
            estimator_kind: self.config.kind,
            std_error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::pointwise_cbd_bruteforce;
    use crate::data::pairwise_distances;
    use crate::kernels::default_bandwidths;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_ds(n: usize, seed: u64) -> Dataset {
        let mut rng = rng_from_seed(seed);
        let mut col = |_: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (x, y, z) = (col(0), col(1), col(2));
        Dataset::from_columns(&x, &y, &z).unwrap()
    }

    #[test]
    fn combinations_count() {
        let items: Vec<usize> = (0..9).collect();
        assert_eq!(combinations(&items, 4).len(), 126);
        assert_eq!(combinations(&items[..4], 4), vec![vec![0, 1, 2, 3]]);
        assert!(combinations(&items[..3], 4).is_empty());
        let c = combinations(&[5, 7, 9], 2);
        assert_eq!(c, vec![vec![5, 7], vec![5, 9], vec![7, 9]]);
    }

    #[test]
    fn vstat_matches_bruteforce_mean() {
        let k = KernelSpec::epanechnikov();
        let ds = random_ds(6, 3);
        let bw = default_bandwidths(&ds).unwrap();
        let dist = pairwise_distances(ds.x()).unwrap();
        let brute: f64 = (0..6)
            .map(|s| pointwise_cbd_bruteforce(&ds, &dist, s, bw.h1, bw.h2, k).unwrap())
            .sum::<f64>()
            / 6.0;
        let v = cbd_vstat(&ds, bw, k, WeightFunction::One).unwrap().value;
        assert!((v - brute).abs() <= 1e-10 * brute.max(1e-300));
    }

    #[test]
    fn constant_x_gives_zero() {
        let k = KernelSpec::epanechnikov();
        let base = random_ds(12, 5);
        let ds = base.with_x(Matrix::column_vector(&[0.5; 12])).unwrap();
        let bw = default_bandwidths(&ds).unwrap();
        for a in [
            WeightFunction::One,
            WeightFunction::JointDensitySquared,
            WeightFunction::Product44,
        ] {
            assert_eq!(cbd_vstat(&ds, bw, k, a).unwrap().value, 0.0);
        }
        assert_eq!(normalized_cbd(&ds, bw, k).unwrap(), 0.0);
        assert_eq!(cbd_linear(&ds, bw, k).unwrap().value, 0.0);
        let small = random_ds(9, 6).with_x(Matrix::column_vector(&[1.0; 9])).unwrap();
        let bw9 = default_bandwidths(&small).unwrap();
        assert_eq!(cbd_ustat(&small, bw9, k, UStatMode::Exact).unwrap().value, 0.0);
    }

    #[test]
    fn ustat_preconditions() {
        let k = KernelSpec::epanechnikov();
        let ds = random_ds(8, 1);
        let bw = default_bandwidths(&ds).unwrap();
        assert!(matches!(
            cbd_ustat(&ds, bw, k, UStatMode::Exact),
            Err(CbdError::InsufficientSample { needed: 9, got: 8 })
        ));
        assert!(cbd_linear(&ds, bw, k).is_err());
        let ds = random_ds(11, 1);
        let bw = default_bandwidths(&ds).unwrap();
        assert!(matches!(
            cbd_ustat(&ds, bw, k, UStatMode::Exact),
            Err(CbdError::Precondition(_))
        ));
        let inc = cbd_ustat(&ds, bw, k, UStatMode::Incomplete { tuples: 50, seed: 1 }).unwrap();
        assert!(inc.std_error.is_some());
        assert!(cbd_ustat(&ds, bw, k, UStatMode::Incomplete { tuples: 0, seed: 1 }).is_err());
    }

    #[test]
    fn weight_function_parsing() {
        for w in [
            WeightFunction::One,
            WeightFunction::JointDensitySquared,
            WeightFunction::Product44,
        ] {
            assert_eq!(w.id().parse::<WeightFunction>().unwrap(), w);
            let json = serde_json::to_string(&w).unwrap();
            assert_eq!(json, format!("\"{}\"", w.id()));
        }
        assert!("p3".parse::<WeightFunction>().is_err());
    }

    #[test]
    fn prepared_matches_free_functions() {
        let k = KernelSpec::epanechnikov();
        let ds = random_ds(20, 9);
        let bw = default_bandwidths(&ds).unwrap();
        let cfg = EstimatorConfig::default();
        let prep = PreparedStatistic::prepare(&ds, cfg).unwrap();
        assert_eq!(prep.bandwidths(), bw);
        let v = prep.evaluate(ds.x(), 0).unwrap();
        assert_eq!(v, cbd_vstat(&ds, bw, k, WeightFunction::One).unwrap().value);
        let norm = PreparedStatistic::prepare(&ds, cfg.with_kind(EstimatorKind::Normalized)).unwrap();
        assert_eq!(norm.evaluate(ds.x(), 0).unwrap(), normalized_cbd(&ds, bw, k).unwrap());
        let lin = PreparedStatistic::prepare(&ds, cfg.with_kind(EstimatorKind::Linear)).unwrap();
        assert_eq!(lin.evaluate(ds.x(), 0).unwrap(), cbd_linear(&ds, bw, k).unwrap().value);
    }
}
