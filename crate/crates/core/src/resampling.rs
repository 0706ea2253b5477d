//! Null resampling schemes: CRT, CPT, local wild bootstrap and discrete local bootstrap.
//!
//! Every scheme replaces X and leaves (Y, Z) untouched.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{sq_dist, Dataset, Matrix};
use crate::error::{CbdError, Result};
use crate::kernels::{Bandwidths, KernelSpec};
use crate::rng::CbdRng;

/// A user-supplied conditional law of X given Z.
pub trait ConditionalModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    /// Fill `out` (length d_X) with one draw at `z`.
    fn draw(&self, z: &[f64], rng: &mut CbdRng, out: &mut [f64]) -> Result<()>;
    /// log p(x | z), or `None` if the model has no density.
    fn log_density(&self, _x: &[f64], _z: &[f64]) -> Option<f64> {
        None
    }
}

/// Law of X given Z used to regenerate X.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionalSampler {
    /// X = βZ + μ + σ·N(0, I); β is d_X × d_Z, row-major.
    GaussianAffine {
        beta: Vec<f64>,
        mu: Vec<f64>,
        sigma: f64,
    },
    /// Each coordinate of X uniform on (−‖Z‖, ‖Z‖).
    UniformAbs { d_x: usize },
    #[serde(skip)]
    Custom(Arc<dyn ConditionalModel>),
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

impl ConditionalSampler {
    pub fn gaussian_affine(beta: Vec<f64>, mu: Vec<f64>, sigma: f64) -> Result<Self> {
        if mu.is_empty() || beta.is_empty() || beta.len() % mu.len() != 0 {
            return Err(CbdError::param(
                "sampler",
                format!("beta of length {} does not fit mu of length {}", beta.len(), mu.len()),
            ));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(CbdError::param("sampler", format!("sigma must be >= 0, got {sigma}")));
        }
        if beta.iter().chain(&mu).any(|v| !v.is_finite()) {
            return Err(CbdError::param("sampler", "coefficients must be finite"));
        }
        Ok(ConditionalSampler::GaussianAffine { beta, mu, sigma })
    }

    /// Scalar form for d_X = d_Z = 1.
    pub fn gaussian_scalar(beta: f64, mu: f64, sigma: f64) -> Result<Self> {
        Self::gaussian_affine(vec![beta], vec![mu], sigma)
    }

    pub fn custom(model: Arc<dyn ConditionalModel>) -> Self {
        ConditionalSampler::Custom(model)
    }

    pub fn label(&self) -> String {
        match self {
            ConditionalSampler::GaussianAffine { beta, mu, sigma } => {
                format!("gaussian_affine(beta={beta:?}, mu={mu:?}, sigma={sigma})")
            }
            ConditionalSampler::UniformAbs { .. } => "uniform_abs".into(),
            ConditionalSampler::Custom(m) => format!("custom({})", m.name()),
        }
    }

    fn check_dims(&self, d_x: usize, d_z: usize) -> Result<()> {
        let ok = match self {
            ConditionalSampler::GaussianAffine { beta, mu, .. } => {
                mu.len() == d_x && beta.len() == d_x * d_z
            }
            ConditionalSampler::UniformAbs { d_x: dx } => *dx == d_x,
            ConditionalSampler::Custom(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(CbdError::InvalidModel(format!(
                "sampler {} does not map d_Z = {d_z} to d_X = {d_x}",
                self.label()
            )))
        }
    }

    pub fn draw_into(&self, z: &[f64], rng: &mut CbdRng, out: &mut [f64]) -> Result<()> {
        match self {
            ConditionalSampler::GaussianAffine { beta, mu, sigma } => {
                let dz = z.len();
                for (j, o) in out.iter_mut().enumerate() {
                    let mean = mu[j]
                        + beta[j * dz..(j + 1) * dz]
                            .iter()
                            .zip(z)
                            .map(|(b, v)| b * v)
                            .sum::<f64>();
                    let g: f64 = rng.sample(StandardNormal);
                    *o = mean + sigma * g;
                }
                Ok(())
            }
            ConditionalSampler::UniformAbs { .. } => {
                let radius = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                for o in out.iter_mut() {
                    let u: f64 = rng.random();
                    *o = radius * (2.0 * u - 1.0);
                }
                Ok(())
            }
            ConditionalSampler::Custom(m) => m.draw(z, rng, out),
        }
    }

    pub fn draw(&self, z: &[f64], d_x: usize, rng: &mut CbdRng) -> Result<Vec<f64>> {
        let mut out = vec![0.0; d_x];
        self.draw_into(z, rng, &mut out)?;
        Ok(out)
    }

    /// log p(x | z); an error when the family has no density at z.
    pub fn log_density(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        match self {
            ConditionalSampler::GaussianAffine { beta, mu, sigma } => {
                if *sigma == 0.0 {
                    return Err(CbdError::InvalidModel(
                        "a zero-variance Gaussian has no density".into(),
                    ));
                }
                let dz = z.len();
                let mut lp = 0.0;
                for (j, &xj) in x.iter().enumerate() {
                    let mean = mu[j]
                        + beta[j * dz..(j + 1) * dz]
                            .iter()
                            .zip(z)
                            .map(|(b, v)| b * v)
                            .sum::<f64>();
                    let t = (xj - mean) / sigma;
                    lp += -0.5 * t * t - sigma.ln() - LN_SQRT_2PI;
                }
                Ok(lp)
            }
            ConditionalSampler::UniformAbs { .. } => {
                let radius = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if radius == 0.0 {
                    return Err(CbdError::InvalidModel(
                        "uniform_abs has no density at z = 0".into(),
                    ));
                }
                if x.iter().all(|v| v.abs() <= radius) {
                    Ok(-(x.len() as f64) * (2.0 * radius).ln())
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            ConditionalSampler::Custom(m) => m.log_density(x, z).ok_or_else(|| {
                CbdError::InvalidModel(format!("model {} has no log-density", m.name()))
            }),
        }
    }
}

/// Resampling scheme with its tuning parameters; `None` means the default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ResampleMethod {
    Crt {
        sampler: ConditionalSampler,
    },
    Cpt {
        sampler: ConditionalSampler,
        mh_steps: Option<usize>,
    },
    Lwb {
        h0: Option<f64>,
        h2_prime: Option<f64>,
    },
    /// Atoms drawn with Z-kernel weights; `h` defaults to the local
    /// bootstrap bandwidth h0.
    Dlb {
        h: Option<f64>,
    },
}

impl ResampleMethod {
    pub fn id(&self) -> &'static str {
        match self {
            ResampleMethod::Crt { .. } => "crt",
            ResampleMethod::Cpt { .. } => "cpt",
            ResampleMethod::Lwb { .. } => "lwb",
            ResampleMethod::Dlb { .. } => "dlb",
        }
    }

    pub fn lwb() -> Self {
        ResampleMethod::Lwb {
            h0: None,
            h2_prime: None,
        }
    }

    pub fn dlb() -> Self {
        ResampleMethod::Dlb { h: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub method: ResampleMethod,
    #[serde(rename = "M")]
    pub resamples: usize,
    pub seed: u64,
}

impl ResamplePlan {
    pub fn new(method: ResampleMethod, resamples: usize, seed: u64) -> Self {
        ResamplePlan {
            method,
            resamples,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(CbdError::param("M", "need at least one resample"));
        }
        if let ResampleMethod::Cpt {
            mh_steps: Some(0), ..
        } = self.method
        {
            return Err(CbdError::param("mh_steps", "need at least one step"));
        }
        Ok(())
    }
}

/// Per-row categorical laws over sample indices, stored sparsely.
#[derive(Debug, Clone)]
pub struct LocalIndexLaw {
    /// For each row j: (index, cumulative weight) with the last entry the total.
    rows: Vec<Vec<(u32, f64)>>,
}

impl LocalIndexLaw {
    /// Row j weights i by K(‖Z_j − Z_i‖ / h).
    pub fn new(z: &Matrix, h: f64, spec: KernelSpec) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(CbdError::param("h", format!("must be positive, got {h}")));
        }
        let n = z.nrows();
        let inv = 1.0 / (h * h);
        let mut rows = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = 0.0;
            let mut row = Vec::new();
            for i in 0..n {
                let w = spec.profile_sq(sq_dist(z.row(j), z.row(i)) * inv);
                if w > 0.0 {
                    acc += w;
                    row.push((i as u32, acc));
                }
            }
            if row.is_empty() {
                return Err(CbdError::Precondition(format!("row {j} has zero kernel mass")));
            }
            rows.push(row);
        }
        Ok(LocalIndexLaw { rows })
    }

    /// Normalized weights of row j over all n indices.
    pub fn probabilities(&self, j: usize, n: usize) -> Vec<f64> {
        let row = &self.rows[j];
        let total = row.last().map_or(1.0, |e| e.1);
        let mut out = vec![0.0; n];
        let mut prev = 0.0;
        for &(i, c) in row {
            out[i as usize] = (c - prev) / total;
            prev = c;
        }
        out
    }

    #[inline]
    pub fn sample(&self, j: usize, rng: &mut CbdRng) -> usize {
        let row = &self.rows[j];
        if row.len() == 1 {
            return row[0].0 as usize;
        }
        let total = row[row.len() - 1].1;
        let u = rng.random::<f64>() * total;
        let k = row.partition_point(|e| e.1 <= u).min(row.len() - 1);
        row[k].0 as usize
    }
}

/// A resampling scheme bound to one dataset.
#[derive(Debug, Clone)]
pub enum Resampler {
    Crt(ConditionalSampler),
    Cpt {
        /// log p(X_a | Z_b) at `a * n + b`.
        log_p: Vec<f64>,
        n: usize,
        steps: usize,
    },
    Lwb {
        h0: f64,
        centers: Option<LocalIndexLaw>,
    },
    Dlb(LocalIndexLaw),
}

/// One resampled X with scheme diagnostics.
#[derive(Debug, Clone)]
pub struct Draw {
    pub x: Matrix,
    /// Fraction of accepted Metropolis swaps (CPT only).
    pub acceptance: Option<f64>,
}

impl Resampler {
    pub fn prepare(
        ds: &Dataset,
        method: &ResampleMethod,
        bw: &Bandwidths,
        spec: KernelSpec,
    ) -> Result<Self> {
        match method {
            ResampleMethod::Crt { sampler } => {
                sampler.check_dims(ds.d_x(), ds.d_z())?;
                Ok(Resampler::Crt(sampler.clone()))
            }
            ResampleMethod::Cpt { sampler, mh_steps } => {
                sampler.check_dims(ds.d_x(), ds.d_z())?;
                let n = ds.n();
                let steps = mh_steps.unwrap_or(50 * n);
                if steps == 0 {
                    return Err(CbdError::param("mh_steps", "need at least one step"));
                }
                Ok(Resampler::Cpt {
                    log_p: log_density_table(ds, sampler)?,
                    n,
                    steps,
                })
            }
            ResampleMethod::Lwb { h0, h2_prime } => {
                let h0 = h0.unwrap_or(bw.h0);
                if !(h0.is_finite() && h0 > 0.0) {
                    return Err(CbdError::param("h0", format!("must be positive, got {h0}")));
                }
                let hp = h2_prime.unwrap_or(bw.h2_prime);
                let centers = if hp > 0.0 {
                    Some(LocalIndexLaw::new(ds.z(), hp, spec)?)
                } else if hp == 0.0 {
                    None
                } else {
                    return Err(CbdError::param("h2_prime", format!("must be >= 0, got {hp}")));
                };
                Ok(Resampler::Lwb { h0, centers })
            }
            ResampleMethod::Dlb { h } => Ok(Resampler::Dlb(LocalIndexLaw::new(
                ds.z(),
                h.unwrap_or(bw.h0),
                spec,
            )?)),
        }
    }

    pub fn draw(&self, ds: &Dataset, rng: &mut CbdRng) -> Result<Draw> {
        let n = ds.n();
        let d = ds.d_x();
        match self {
            Resampler::Crt(sampler) => {
                let mut x = Matrix::zeros(n, d);
                for i in 0..n {
                    sampler.draw_into(ds.z().row(i), rng, x.row_mut(i))?;
                }
                if !x.is_finite() {
                    return Err(CbdError::InvalidModel("sampler produced non-finite draws".into()));
                }
                Ok(Draw { x, acceptance: None })
            }
            Resampler::Cpt { log_p, n, steps } => {
                let (perm, acc) = metropolis_permutation(log_p, *n, *steps, rng);
                Ok(Draw {
                    x: ds.x().select_rows(&perm),
                    acceptance: Some(acc),
                })
            }
            Resampler::Lwb { h0, centers } => {
                let mut x = Matrix::zeros(n, d);
                for i in 0..n {
                    let c = centers.as_ref().map_or(i, |law| law.sample(i, rng));
                    let src = ds.x().row(c);
                    for (o, &v) in x.row_mut(i).iter_mut().zip(src) {
                        let g: f64 = rng.sample(StandardNormal);
                        *o = v + h0 * g;
                    }
                }
                Ok(Draw { x, acceptance: None })
            }
            Resampler::Dlb(law) => {
                let idx: Vec<usize> = (0..n).map(|j| law.sample(j, rng)).collect();
                Ok(Draw {
                    x: ds.x().select_rows(&idx),
                    acceptance: None,
                })
            }
        }
    }
}

/// log p(X_a | Z_b) for every pair, checked on the observed pairs.
pub fn log_density_table(ds: &Dataset, sampler: &ConditionalSampler) -> Result<Vec<f64>> {
    let n = ds.n();
    let mut table = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let v = sampler.log_density(ds.x().row(a), ds.z().row(b))?;
            if v.is_nan() || (a == b && !v.is_finite()) {
                return Err(CbdError::InvalidModel(format!(
                    "log-density of observation {a} at its own z is {v}"
                )));
            }
            table[a * n + b] = v;
        }
    }
    Ok(table)
}

/// Metropolis chain over permutations with uniform pairwise-swap proposals,
/// started at the identity. Returns the final π (X'_ℓ = X_{π(ℓ)}) and the
/// acceptance rate.
pub fn metropolis_permutation(
    log_p: &[f64],
    n: usize,
    steps: usize,
    rng: &mut CbdRng,
) -> (Vec<usize>, f64) {
    let mut perm: Vec<usize> = (0..n).collect();
    if n < 2 || steps == 0 {
        return (perm, 1.0);
    }
    let lp = |a: usize, b: usize| log_p[a * n + b];
    let mut accepted = 0usize;
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (pi, pj) = (perm[i], perm[j]);
        let ratio = lp(pi, j) + lp(pj, i) - lp(pi, i) - lp(pj, j);
        let u: f64 = rng.random();
        if ratio >= 0.0 || u < ratio.exp() {
            perm.swap(i, j);
            accepted += 1;
        }
    }
    (perm, accepted as f64 / steps as f64)
}

pub fn crt_resample(ds: &Dataset, sampler: &ConditionalSampler, rng: &mut CbdRng) -> Result<Dataset> {
    sampler.check_dims(ds.d_x(), ds.d_z())?;
    let draw = Resampler::Crt(sampler.clone()).draw(ds, rng)?;
    ds.with_x(draw.x)
}

/// CPT resample; also returns the swap acceptance rate.
pub fn cpt_resample(
    ds: &Dataset,
    sampler: &ConditionalSampler,
    rng: &mut CbdRng,
    mh_steps: usize,
) -> Result<(Dataset, f64)> {
    if mh_steps == 0 {
        return Err(CbdError::param("mh_steps", "need at least one step"));
    }
    sampler.check_dims(ds.d_x(), ds.d_z())?;
    let log_p = log_density_table(ds, sampler)?;
    let (perm, acc) = metropolis_permutation(&log_p, ds.n(), mh_steps, rng);
    Ok((ds.with_x(ds.x().select_rows(&perm))?, acc))
}

pub fn lwb_resample(
    ds: &Dataset,
    h0: f64,
    h2_prime: f64,
    spec: KernelSpec,
    rng: &mut CbdRng,
) -> Result<Dataset> {
    let method = ResampleMethod::Lwb {
        h0: Some(h0),
        h2_prime: Some(h2_prime),
    };
    let bw = placeholder_bandwidths();
    let draw = Resampler::prepare(ds, &method, &bw, spec)?.draw(ds, rng)?;
    ds.with_x(draw.x)
}

pub fn dlb_resample(ds: &Dataset, h: f64, spec: KernelSpec, rng: &mut CbdRng) -> Result<Dataset> {
    let law = LocalIndexLaw::new(ds.z(), h, spec)?;
    let draw = Resampler::Dlb(law).draw(ds, rng)?;
    ds.with_x(draw.x)
}

/// Discrete-bootstrap probabilities of each source index for target row j.
pub fn dlb_probabilities(ds: &Dataset, h: f64, spec: KernelSpec, j: usize) -> Result<Vec<f64>> {
    if j >= ds.n() {
        return Err(CbdError::InvalidInput(format!("row {j} out of range")));
    }
    Ok(LocalIndexLaw::new(ds.z(), h, spec)?.probabilities(j, ds.n()))
}

/// Π_s γ_s(Z_s) for the localization weights with bandwidth `h2_prime`
/// (point masses when it is 0).
pub fn gamma_product(ds: &Dataset, h2_prime: f64, spec: KernelSpec) -> Result<f64> {
    if h2_prime == 0.0 {
        return Ok(1.0);
    }
    let law = LocalIndexLaw::new(ds.z(), h2_prime, spec)?;
    let n = ds.n();
    Ok((0..n).map(|s| law.probabilities(s, n)[s]).product())
}

fn placeholder_bandwidths() -> Bandwidths {
    Bandwidths {
        h1: 1.0,
        h2: 1.0,
        h0: 1.0,
        h2_prime: 0.0,
        c1: f64::NAN,
        c2: f64::NAN,
    }
}

/// Density of a standard normal, used by oracle tests of the samplers.
pub fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn ds3() -> Dataset {
        Dataset::from_columns(&[0.5, -1.0, 2.0], &[1.0, 2.0, 3.0], &[0.0, 1.0, 5.0]).unwrap()
    }

    #[test]
    fn crt_keeps_yz_and_is_deterministic() {
        let ds = ds3();
        let s = ConditionalSampler::gaussian_scalar(2.0, 1.0, 0.5).unwrap();
        let a = crt_resample(&ds, &s, &mut rng_from_seed(3)).unwrap();
        let b = crt_resample(&ds, &s, &mut rng_from_seed(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.y(), ds.y());
        assert_eq!(a.z(), ds.z());
    }

    #[test]
    fn zero_noise_gaussian_is_affine() {
        let ds = ds3();
        let s = ConditionalSampler::gaussian_scalar(2.0, 1.0, 0.0).unwrap();
        let a = crt_resample(&ds, &s, &mut rng_from_seed(1)).unwrap();
        assert_eq!(a.x().column(0), vec![1.0, 3.0, 11.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let ds = ds3();
        let s = ConditionalSampler::gaussian_affine(vec![1.0, 0.0], vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            crt_resample(&ds, &s, &mut rng_from_seed(1)),
            Err(CbdError::InvalidModel(_))
        ));
        assert!(ConditionalSampler::gaussian_scalar(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn uniform_abs_degenerate_at_zero() {
        let s = ConditionalSampler::UniformAbs { d_x: 1 };
        let mut rng = rng_from_seed(0);
        for _ in 0..10 {
            assert_eq!(s.draw(&[0.0], 1, &mut rng).unwrap(), vec![0.0]);
            let v = s.draw(&[-2.0], 1, &mut rng).unwrap()[0];
            assert!(v.abs() <= 2.0);
        }
        assert!(s.log_density(&[0.0], &[0.0]).is_err());
        assert_eq!(s.log_density(&[3.0], &[1.0]).unwrap(), f64::NEG_INFINITY);
        assert!((s.log_density(&[0.3], &[-1.0]).unwrap() + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_log_density() {
        let s = ConditionalSampler::gaussian_scalar(5.0, 10.0, 2.0).unwrap();
        let lp = s.log_density(&[16.0], &[1.0]).unwrap();
        let expect = (std_normal_pdf(0.5) / 2.0).ln();
        assert!((lp - expect).abs() < 1e-12);
    }

    #[test]
    fn cpt_constant_density_always_accepts() {
        let ds = Dataset::from_columns(&[0.1, 0.2, -0.3, 0.4], &[0.0; 4], &[0.5, -0.5, 0.2, 0.9])
            .unwrap();
        let s = ConditionalSampler::UniformAbs { d_x: 1 };
        // |x| < |z| fails for some pairs, so use z with large radius instead
        let wide = Dataset::from_columns(&[0.1, 0.2, -0.3, 0.4], &[0.0; 4], &[5.0, -5.0, 5.0, 5.0])
            .unwrap();
        let (out, acc) = cpt_resample(&wide, &s, &mut rng_from_seed(2), 200).unwrap();
        assert_eq!(acc, 1.0);
        let mut xs = out.x().column(0);
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![-0.3, 0.1, 0.2, 0.4]);
        // observation 3 lies outside its own support
        assert!(matches!(
            cpt_resample(&ds, &s, &mut rng_from_seed(2), 10),
            Err(CbdError::InvalidModel(_))
        ));
        assert!(cpt_resample(&wide, &s, &mut rng_from_seed(2), 0).is_err());
    }

    #[test]
    fn lwb_tiny_noise_and_point_mass_product() {
        let ds = ds3();
        let k = KernelSpec::epanechnikov();
        let out = lwb_resample(&ds, 1e-12, 0.0, k, &mut rng_from_seed(9)).unwrap();
        for i in 0..3 {
            assert!((out.x().get(i, 0) - ds.x().get(i, 0)).abs() < 1e-10);
        }
        assert!(lwb_resample(&ds, 0.0, 0.0, k, &mut rng_from_seed(9)).is_err());
        assert_eq!(gamma_product(&ds, 0.0, k).unwrap(), 1.0);
        // with a bandwidth below the smallest Z gap each γ_s is a point mass too
        assert_eq!(gamma_product(&ds, 0.5, k).unwrap(), 1.0);
        assert!(gamma_product(&ds, 3.0, k).unwrap() < 1.0);
    }

    #[test]
    fn dlb_narrow_bandwidth_is_identity() {
        let ds = ds3();
        let k = KernelSpec::epanechnikov();
        let out = dlb_resample(&ds, 0.9, k, &mut rng_from_seed(4)).unwrap();
        assert_eq!(out, ds);
        assert_eq!(dlb_probabilities(&ds, 0.9, k, 1).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn plan_validation() {
        let plan = ResamplePlan::new(ResampleMethod::lwb(), 0, 1);
        assert!(plan.validate().is_err());
        let s = ConditionalSampler::UniformAbs { d_x: 1 };
        let plan = ResamplePlan::new(
            ResampleMethod::Cpt {
                sampler: s,
                mh_steps: Some(0),
            },
            10,
            1,
        );
        assert!(plan.validate().is_err());
        let json = serde_json::to_string(&ResamplePlan::new(ResampleMethod::dlb(), 5, 2)).unwrap();
        assert!(json.contains("\"M\":5"));
        assert!(json.contains("\"method\":\"dlb\""));
    }
}
