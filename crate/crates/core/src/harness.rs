//! Monte Carlo drivers: power curves, KS distribution-closeness studies and run manifests.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::datagen::{gen_scenario, oracle_sampler, ScenarioSpec};
use crate::error::{CbdError, Result};
use crate::estimator::{EstimatorConfig, PreparedStatistic};
use crate::inference::{ks_two_sample, run_test};
use crate::par;
use crate::resampling::{ConditionalSampler, ResampleMethod, ResamplePlan, Resampler};
use crate::rng::{derive_seed, hash_str, rng_from_seed, CbdRng};

pub const VERSION: &str = concat!("cbd ", env!("CARGO_PKG_VERSION"));

/// Which scenario parameter a grid sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridParam {
    N,
    R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub param: GridParam,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn r(values: &[f64]) -> Self {
        Grid {
            param: GridParam::R,
            values: values.to_vec(),
        }
    }

    pub fn n(values: &[usize]) -> Self {
        Grid {
            param: GridParam::N,
            values: values.iter().map(|&v| v as f64).collect(),
        }
    }

    /// Parse `r=-2:2:0.5` (inclusive range), `n=10,20,50` or a single `r=1.2`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |why: &str| CbdError::param("grid", format!("{why} in `{text}`"));
        let (key, rest) = text.split_once('=').ok_or_else(|| bad("expected n=… or r=…"))?;
        let param = match key.trim().to_ascii_lowercase().as_str() {
            "n" => GridParam::N,
            "r" => GridParam::R,
            _ => return Err(bad("unknown grid parameter")),
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
        let values = if rest.contains(':') {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("ranges are start:stop:step"));
            }
            let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || stop < start {
                return Err(bad("empty range"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|k| {
                    let v = start + k as f64 * step;
                    (v * 1e9).round() / 1e9
                })
                .collect()
        } else {
            rest.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        let grid = Grid { param, values };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(CbdError::param("grid", "no grid values"));
        }
        for &v in &self.values {
            let ok = match self.param {
                GridParam::N => v >= 2.0 && v.fract() == 0.0,
                GridParam::R => v.is_finite(),
            };
            if !ok {
                return Err(CbdError::param("grid", format!("invalid value {v}")));
            }
        }
        Ok(())
    }
}

/// How each trial calibrates its test.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    /// A fixed resampling scheme.
    Method(ResampleMethod),
    /// CRT with the scenario's true law of X given Z at the trial's r.
    OracleCrt,
    /// CPT with the scenario's true conditional density.
    OracleCpt { mh_steps: Option<usize> },
}

impl Calibration {
    pub fn id(&self) -> &'static str {
        match self {
            Calibration::Method(m) => m.id(),
            Calibration::OracleCrt => "crt",
            Calibration::OracleCpt { .. } => "cpt",
        }
    }

    fn resolve(&self, scenario: &ScenarioSpec) -> Result<ResampleMethod> {
        Ok(match self {
            Calibration::Method(m) => m.clone(),
            Calibration::OracleCrt => ResampleMethod::Crt {
                sampler: oracle_sampler(scenario)?,
            },
            Calibration::OracleCpt { mh_steps } => ResampleMethod::Cpt {
                sampler: oracle_sampler(scenario)?,
                mh_steps: *mh_steps,
            },
        })
    }
}

/// A power study over one scenario parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Base scenario; the grid overrides its n or r.
    pub scenario: ScenarioSpec,
    pub grid: Grid,
    pub calibration: Calibration,
    pub estimator: EstimatorConfig,
    #[serde(rename = "T")]
    pub trials: usize,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub resamples: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioSpec, grid: Grid, calibration: Calibration, seed: u64) -> Self {
        ExperimentSpec {
            scenario,
            grid,
            calibration,
            estimator: EstimatorConfig::default(),
            trials: 500,
            alpha: 0.05,
            resamples: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CbdError::param("T", "need at least one trial"));
        }
        if self.resamples == 0 {
            return Err(CbdError::param("M", "need at least one resample"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CbdError::param("alpha", "must lie in (0, 1)"));
        }
        self.grid.validate()?;
        for &g in &self.grid.values {
            self.scenario_at(g).validate()?;
        }
        Ok(())
    }

    /// The scenario at one grid value.
    pub fn scenario_at(&self, g: f64) -> ScenarioSpec {
        let mut s = self.scenario.clone();
        match self.grid.param {
            GridParam::N => s.n = g as usize,
            GridParam::R => s.r = g,
        }
        s
    }

    /// Seed of trial t at grid value g.
    pub fn trial_seed(&self, g: f64, t: usize) -> u64 {
        derive_seed(
            self.seed,
            &[hash_str(&self.scenario.id), g.to_bits(), t as u64],
        )
    }
}

/// Empirical power at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub grid: f64,
    pub rejections: usize,
    #[serde(rename = "T")]
    pub trials: usize,
    pub power: f64,
    pub se: f64,
}

impl PowerPoint {
    pub fn from_count(grid: f64, rejections: usize, trials: usize) -> Self {
        let power = rejections as f64 / trials as f64;
        PowerPoint {
            grid,
            rejections,
            trials,
            power,
            se: (power * (1.0 - power) / trials as f64).sqrt(),
        }
    }
}

/// Outcome of one generate → test → decide trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Replay trial t at grid value g in isolation.
pub fn run_trial(spec: &ExperimentSpec, g: f64, t: usize) -> Result<TrialOutcome> {
    let seed = spec.trial_seed(g, t);
    let wrap = |e: CbdError| CbdError::Trial {
        trial: t,
        seed,
        source: Box::new(e),
    };
    let scenario = spec.scenario_at(g);
    let ds = gen_scenario(&scenario, &mut rng_from_seed(seed)).map_err(wrap)?;
    let method = spec.calibration.resolve(&scenario).map_err(wrap)?;
    let plan = ResamplePlan::new(method, spec.resamples, derive_seed(seed, &[1]));
    let res = run_test(&ds, &plan, &spec.estimator, spec.alpha).map_err(wrap)?;
    Ok(TrialOutcome {
        seed,
        statistic: res.statistic,
        p_value: res.p_value,
        reject: res.reject,
    })
}

/// Power at every grid value; trials run in parallel and are reduced in index order.
pub fn run_power(spec: &ExperimentSpec) -> Result<Vec<PowerPoint>> {
    spec.validate()?;
    spec.grid
        .values
        .iter()
        .map(|&g| {
            let outcomes = par::try_map_range(spec.trials, |t| run_trial(spec, g, t))?;
            let rejections = outcomes.iter().filter(|o| o.reject).count();
            Ok(PowerPoint::from_count(g, rejections, spec.trials))
        })
        .collect()
}

/// Power of a test applied to datasets drawn by `source` from per-trial seeds.
pub fn power_with<F>(
    grid: f64,
    trials: usize,
    master: u64,
    method: &ResampleMethod,
    estimator: &EstimatorConfig,
    resamples: usize,
    alpha: f64,
    source: F,
) -> Result<PowerPoint>
where
    F: Fn(&mut CbdRng) -> Result<Dataset> + Sync,
{
    if trials == 0 {
        return Err(CbdError::param("T", "need at least one trial"));
    }
    let rejects = par::try_map_range(trials, |t| {
        let seed = derive_seed(master, &[grid.to_bits(), t as u64]);
        let wrap = |e: CbdError| CbdError::Trial {
            trial: t,
            seed,
            source: Box::new(e),
        };
        let ds = source(&mut rng_from_seed(seed)).map_err(wrap)?;
        let plan = ResamplePlan::new(method.clone(), resamples, derive_seed(seed, &[1]));
        run_test(&ds, &plan, estimator, alpha)
            .map(|r| r.reject)
            .map_err(wrap)
    })?;
    Ok(PowerPoint::from_count(
        grid,
        rejects.iter().filter(|&&r| r).count(),
        trials,
    ))
}

/// The pair of statistic collections compared by a KS study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "snake_case")]
pub enum KsDesign {
    /// One null dataset D0 per replication; CRT redraws of its X from the
    /// true law against CRT redraws from `sampler`, with (Y, Z) held fixed.
    ObservedVsCrt { sampler: ConditionalSampler },
    /// Per replication: one null dataset, then `samples` oracle-CRT resamples
    /// against `samples` resamples from `other`.
    CrtVs { other: ResampleMethod },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsStudySpec {
    pub scenario: ScenarioSpec,
    pub n_grid: Vec<usize>,
    pub design: KsDesign,
    /// Statistics per collection.
    pub samples: usize,
    pub replications: usize,
    pub alpha: f64,
    pub estimator: EstimatorConfig,
    pub seed: u64,
}

impl KsStudySpec {
    pub fn new(scenario: ScenarioSpec, n_grid: Vec<usize>, design: KsDesign, seed: u64) -> Self {
        KsStudySpec {
            scenario,
            n_grid,
            design,
            samples: 200,
            replications: 500,
            alpha: 0.05,
            estimator: EstimatorConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.replications == 0 {
            return Err(CbdError::param("samples", "need samples and replications >= 1"));
        }
        if self.n_grid.is_empty() {
            return Err(CbdError::param("grid", "no sample sizes"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CbdError::param("alpha", "must lie in (0, 1)"));
        }
        for &n in &self.n_grid {
            let s = self.scenario.clone().with_n(n);
            s.validate()?;
            oracle_sampler(&s)?;
        }
        Ok(())
    }
}

/// KS rejection frequency at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsPoint {
    pub n: usize,
    pub rejections: usize,
    pub replications: usize,
    pub power: f64,
    pub se: f64,
    pub mean_d: f64,
}

fn statistic_of(ds: &Dataset, estimator: &EstimatorConfig, seed: u64) -> Result<f64> {
    PreparedStatistic::prepare(ds, *estimator)?.evaluate(ds.x(), seed)
}

/// The two statistic collections of one replication.
pub fn ks_replication(spec: &KsStudySpec, n: usize, rep: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let scenario = spec.scenario.clone().with_n(n);
    let seed = derive_seed(spec.seed, &[hash_str(&spec.scenario.id), n as u64, rep as u64]);
    let mut rng = rng_from_seed(seed);
    let oracle = Resampler::Crt(oracle_sampler(&scenario)?);
    let est = &spec.estimator;
    let mut first = Vec::with_capacity(spec.samples);
    let mut second = Vec::with_capacity(spec.samples);
    match &spec.design {
        KsDesign::ObservedVsCrt { sampler } => {
            let base = gen_scenario(&scenario, &mut rng)?;
            let null = base.with_x(oracle.draw(&base, &mut rng)?.x)?;
            let prepared = PreparedStatistic::prepare(&null, *est)?;
            let other = Resampler::Crt(sampler.clone());
            for _ in 0..spec.samples {
                first.push(prepared.evaluate(&oracle.draw(&null, &mut rng)?.x, seed)?);
                second.push(prepared.evaluate(&other.draw(&null, &mut rng)?.x, seed)?);
            }
        }
        KsDesign::CrtVs { other } => {
            let base = gen_scenario(&scenario, &mut rng)?;
            let null = base.with_x(oracle.draw(&base, &mut rng)?.x)?;
            let prepared = PreparedStatistic::prepare(&null, *est)?;
            let resampler = Resampler::prepare(&null, other, &prepared.bandwidths(), est.kernel)?;
            for _ in 0..spec.samples {
                first.push(prepared.evaluate(&oracle.draw(&null, &mut rng)?.x, seed)?);
                second.push(prepared.evaluate(&resampler.draw(&null, &mut rng)?.x, seed)?);
            }
        }
    }
    Ok((first, second))
}

/// KS rejection frequencies over the sample-size grid.
pub fn run_ks_study(spec: &KsStudySpec) -> Result<Vec<KsPoint>> {
    spec.validate()?;
    spec.n_grid
        .iter()
        .map(|&n| {
            let ds = par::try_map_range(spec.replications, |rep| {
                let (a, b) = ks_replication(spec, n, rep).map_err(|e| CbdError::Trial {
                    trial: rep,
                    seed: spec.seed,
                    source: Box::new(e),
                })?;
                ks_two_sample(&a, &b)
            })?;
            let rejections = ds.iter().filter(|k| k.p_value <= spec.alpha).count();
            let reps = spec.replications;
            let power = rejections as f64 / reps as f64;
            Ok(KsPoint {
                n,
                rejections,
                replications: reps,
                power,
                se: (power * (1.0 - power) / reps as f64).sqrt(),
                mean_d: ds.iter().map(|k| k.d_statistic).sum::<f64>() / reps as f64,
            })
        })
        .collect()
}

/// Plain statistic for one generated dataset, used by trend studies.
pub fn scenario_statistic(
    scenario: &ScenarioSpec,
    estimator: &EstimatorConfig,
    seed: u64,
) -> Result<f64> {
    let ds = gen_scenario(scenario, &mut rng_from_seed(seed))?;
    statistic_of(&ds, estimator, seed)
}

/// Power table as CSV with header `grid,power,se,T,M,alpha`.
pub fn write_power_csv<W: Write>(
    out: W,
    points: &[PowerPoint],
    resamples: usize,
    alpha: f64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["grid", "power", "se", "T", "M", "alpha"])?;
    for p in points {
        w.write_record([
            p.grid.to_string(),
            p.power.to_string(),
            p.se.to_string(),
            p.trials.to_string(),
            resamples.to_string(),
            alpha.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// KS table as CSV with header `n,power,se,replications,samples,mean_d`.
pub fn write_ks_csv<W: Write>(out: W, points: &[KsPoint], samples: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "power", "se", "replications", "samples", "mean_d"])?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            p.power.to_string(),
            p.se.to_string(),
            p.replications.to_string(),
            samples.to_string(),
            p.mean_d.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to rerun a power study bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub spec: ExperimentSpec,
    pub threads: usize,
    /// Seed of every trial, one row per grid value.
    pub trial_seeds: Vec<Vec<u64>>,
    pub points: Vec<PowerPoint>,
}

impl Manifest {
    pub fn new(spec: ExperimentSpec, points: Vec<PowerPoint>, threads: usize) -> Self {
        let trial_seeds = spec
            .grid
            .values
            .iter()
            .map(|&g| (0..spec.trials).map(|t| spec.trial_seed(g, t)).collect())
            .collect();
        Manifest {
            version: VERSION.to_string(),
            spec,
            threads,
            trial_seeds,
            points,
        }
    }
}
