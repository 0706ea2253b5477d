//! Epanechnikov kernel weights, kernel density estimates and default bandwidths.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::{sq_dist, Dataset};
use crate::error::{CbdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    Epanechnikov,
}

/// Radial kernel K(‖u‖); `normalized` applies the constant making it a density on ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub normalized: bool,
}

impl KernelSpec {
    pub const fn epanechnikov() -> Self {
        KernelSpec {
            family: KernelFamily::Epanechnikov,
            normalized: false,
        }
    }

    pub const fn normalized(self) -> Self {
        KernelSpec {
            normalized: true,
            ..self
        }
    }

    /// Unnormalized profile at squared radius `t2`.
    #[inline]
    pub(crate) fn profile_sq(&self, t2: f64) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => {
                if t2 < 1.0 {
                    1.0 - t2
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    fn scale(&self, d: usize) -> f64 {
        if self.normalized {
            normalizing_constant(d)
        } else {
            1.0
        }
    }
}

/// Volume of the unit ball in ℝ^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Constant c_d with ∫ c_d (1 − ‖u‖²)₊ du = 1 over ℝ^d.
pub fn normalizing_constant(d: usize) -> f64 {
    (d as f64 + 2.0) / (2.0 * unit_ball_volume(d))
}

pub fn kernel_profile(spec: KernelSpec, t: f64, d: usize) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(CbdError::InvalidInput(format!(
            "kernel argument must be nonnegative, got {t}"
        )));
    }
    Ok(spec.profile_sq(t * t) * spec.scale(d))
}

/// Kernel weights of every sample relative to one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub weights: Vec<f64>,
    pub total: f64,
}

impl KernelWeights {
    /// Weights divided by their total (all zero if the total is zero).
    pub fn normalized(&self) -> Vec<f64> {
        if self.total > 0.0 {
            self.weights.iter().map(|w| w / self.total).collect()
        } else {
            vec![0.0; self.weights.len()]
        }
    }
}

fn check_bandwidth(name: &'static str, h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(CbdError::param(name, format!("must be positive and finite, got {h}")))
    }
}

fn check_query(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(CbdError::InvalidInput(format!(
            "{what} query has dimension {got}, expected {expected}"
        )))
    }
}

/// K(‖(y,z) − (Yᵢ,Zᵢ)‖ / h1) for every i.
pub fn weights_yz(
    ds: &Dataset,
    y: &[f64],
    z: &[f64],
    h1: f64,
    spec: KernelSpec,
) -> Result<KernelWeights> {
    check_bandwidth("h1", h1)?;
    check_query(ds.d_y(), y.len(), "y")?;
    check_query(ds.d_z(), z.len(), "z")?;
    let inv = 1.0 / (h1 * h1);
    let c = spec.scale(ds.d_y() + ds.d_z());
    let weights: Vec<f64> = (0..ds.n())
        .map(|i| {
            let d2 = sq_dist(ds.y().row(i), y) + sq_dist(ds.z().row(i), z);
            spec.profile_sq(d2 * inv) * c
        })
        .collect();
    let total = weights.iter().sum();
    Ok(KernelWeights { weights, total })
}

/// K(‖z − Zᵢ‖ / h2) for every i.
pub fn weights_z(ds: &Dataset, z: &[f64], h2: f64, spec: KernelSpec) -> Result<KernelWeights> {
    check_bandwidth("h2", h2)?;
    check_query(ds.d_z(), z.len(), "z")?;
    let inv = 1.0 / (h2 * h2);
    let c = spec.scale(ds.d_z());
    let weights: Vec<f64> = (0..ds.n())
        .map(|i| spec.profile_sq(sq_dist(ds.z().row(i), z) * inv) * c)
        .collect();
    let total = weights.iter().sum();
    Ok(KernelWeights { weights, total })
}

fn require_normalized(spec: KernelSpec) -> Result<()> {
    if spec.normalized {
        Ok(())
    } else {
        Err(CbdError::Precondition(
            "density estimates need a normalized kernel".into(),
        ))
    }
}

/// Kernel density estimate of p_{Y,Z} at (y, z).
pub fn kde_yz(ds: &Dataset, y: &[f64], z: &[f64], h1: f64, spec: KernelSpec) -> Result<f64> {
    require_normalized(spec)?;
    let w = weights_yz(ds, y, z, h1, spec)?;
    let d = (ds.d_y() + ds.d_z()) as i32;
    Ok(w.total / (ds.n() as f64 * h1.powi(d)))
}

/// Kernel density estimate of p_Z at z.
pub fn kde_z(ds: &Dataset, z: &[f64], h2: f64, spec: KernelSpec) -> Result<f64> {
    require_normalized(spec)?;
    let w = weights_z(ds, z, h2, spec)?;
    Ok(w.total / (ds.n() as f64 * h2.powi(ds.d_z() as i32)))
}

/// Linear-interpolation quantile of sorted data at position (n − 1)p.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (n - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn interquartile_range(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
}

/// Mean IQR over the columns with nonzero spread.
fn mean_iqr(columns: impl Iterator<Item = Vec<f64>>, what: &str) -> Result<f64> {
    let iqrs: Vec<f64> = columns
        .map(|c| interquartile_range(&c))
        .filter(|&q| q > 0.0)
        .collect();
    if iqrs.is_empty() {
        return Err(CbdError::DegenerateScale(format!(
            "every {what} coordinate has zero interquartile range"
        )));
    }
    Ok(iqrs.iter().sum::<f64>() / iqrs.len() as f64)
}

/// Smoothing scales for the statistic (h1, h2) and for the local bootstrap (h0, h2').
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub h1: f64,
    pub h2: f64,
    pub h0: f64,
    pub h2_prime: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Bandwidths {
    /// The default rule applied to scale constants `c1`, `c2` at sample size n.
    pub fn from_scales(c1: f64, c2: f64, n: usize, d_y: usize, d_z: usize) -> Self {
        let nf = n as f64;
        Bandwidths {
            h1: c1 * nf.powf(-1.0 / (d_y + d_z + 2) as f64),
            h2: c2 * nf.powf(-1.0 / (d_z + 2) as f64),
            h0: 20.0 * c2 * nf.powf(-1.0 / 1.95),
            h2_prime: 0.0,
            c1,
            c2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_bandwidth("h1", self.h1)?;
        check_bandwidth("h2", self.h2)?;
        check_bandwidth("h0", self.h0)?;
        if !(self.h2_prime.is_finite() && self.h2_prime >= 0.0) {
            return Err(CbdError::param(
                "h2_prime",
                format!("must be nonnegative and finite, got {}", self.h2_prime),
            ));
        }
        Ok(())
    }

    pub fn with_overrides(mut self, o: &BandwidthOverrides) -> Result<Self> {
        if let Some(h) = o.h1 {
            self.h1 = h;
        }
        if let Some(h) = o.h2 {
            self.h2 = h;
        }
        if let Some(h) = o.h0 {
            self.h0 = h;
        }
        if let Some(h) = o.h2_prime {
            self.h2_prime = h;
        }
        self.validate()?;
        Ok(self)
    }
}

/// User-supplied replacements for individual default bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BandwidthOverrides {
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub h0: Option<f64>,
    pub h2_prime: Option<f64>,
}

impl BandwidthOverrides {
    fn covers_all(&self) -> bool {
        self.h1.is_some() && self.h2.is_some() && self.h0.is_some()
    }
}

/// IQR-based default bandwidths computed from (Y, Z).
pub fn default_bandwidths(ds: &Dataset) -> Result<Bandwidths> {
    let n = ds.n();
    if n < 4 {
        return Err(CbdError::InsufficientSample { needed: 4, got: n });
    }
    let yz_cols = (0..ds.d_y())
        .map(|j| ds.y().column(j))
        .chain((0..ds.d_z()).map(|j| ds.z().column(j)));
    let c1 = mean_iqr(yz_cols, "(Y,Z)")?;
    let c2 = mean_iqr((0..ds.d_z()).map(|j| ds.z().column(j)), "Z")?;
    Ok(Bandwidths::from_scales(c1, c2, n, ds.d_y(), ds.d_z()))
}

/// Defaults with overrides applied; when the overrides fix h1, h2 and h0 the
/// default rule is only consulted for c1, c2 and may fail silently.
pub fn resolve_bandwidths(ds: &Dataset, o: &BandwidthOverrides) -> Result<Bandwidths> {
    match default_bandwidths(ds) {
        Ok(bw) => bw.with_overrides(o),
        Err(_) if o.covers_all() => {
            let bw = Bandwidths {
                h1: 1.0,
                h2: 1.0,
                h0: 1.0,
                h2_prime: 0.0,
                c1: f64::NAN,
                c2: f64::NAN,
            };
            bw.with_overrides(o)
        }
        Err(e) => Err(e),
    }
}
