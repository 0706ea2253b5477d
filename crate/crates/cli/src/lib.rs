//! Argument parsing, validation and dispatch for the `cbd` binary.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use cbd_core::datagen::{self, MarksTest};
use cbd_core::error::ErrorClass;
use cbd_core::harness::{
    self, Calibration, ExperimentSpec, Grid, KsDesign, KsStudySpec, Manifest, PowerPoint,
};
use cbd_core::kernels::BandwidthOverrides;
use cbd_core::rng::{derive_seed, rng_from_seed};
use cbd_core::{
    par, run_test, CbdError, ConditionalSampler, Dataset, EstimatorConfig, EstimatorKind,
    KernelSpec, ResampleMethod, ResamplePlan, RoleMap, ScenarioSpec, WeightFunction,
};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "cbd", version, about = "Conditional independence tests with conditional ball divergence")]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, env = "CBD_THREADS", global = true)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the cBD statistic for one dataset.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one conditional independence test.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, short = 'M', default_value_t = 200)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Empirical power over a grid of n or r.
    Power {
        #[arg(long, required_unless_present = "replay")]
        scenario: Option<String>,
        /// `r=-2:2:0.5`, `n=10,20,50`, ...
        #[arg(long, required_unless_present = "replay")]
        grid: Option<String>,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long, short = 'T', default_value_t = 500)]
        trials: usize,
        #[arg(long, short = 'M', default_value_t = 200)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write a JSON manifest that `--replay` accepts.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Rerun the experiment stored in a manifest.
        #[arg(long, conflicts_with_all = ["scenario", "grid", "seed"])]
        replay: Option<PathBuf>,
        /// With --replay: run only trial T at grid value G, given as `G:T`.
        #[arg(long, requires = "replay")]
        trial: Option<String>,
    },
    /// KS comparison of statistic distributions under two resampling schemes.
    KsCheck {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        #[arg(long, default_value = "10,50,100")]
        n_grid: String,
        #[arg(long, value_enum)]
        design: Design,
        /// Misspecified sampler for `observed-vs-crt`.
        #[arg(long)]
        sampler: Option<String>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 500)]
        replications: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Subsampling power study on the student marks data.
    Marks {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "test", default_value = "a")]
        which: String,
        /// Subsample sizes, comma separated.
        #[arg(long, default_value = "80")]
        sizes: String,
        #[arg(long, short = 'T', default_value_t = 500)]
        trials: usize,
        #[arg(long, short = 'M', default_value_t = 200)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "scenario")]
    pub input: Option<PathBuf>,
    /// Column roles, e.g. `x=1,y=2,z=3,4` or `x=S;y=An;z=M,V,Al`.
    #[arg(long, requires = "input")]
    pub roles: Option<String>,
    /// Generate the data from a built-in scenario instead.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = Estimator::Vstat)]
    pub estimator: Estimator,
    /// one | p2 | p4p4
    #[arg(long, default_value = "one")]
    pub weight: String,
    #[arg(long)]
    pub h1: Option<f64>,
    #[arg(long)]
    pub h2: Option<f64>,
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long)]
    pub h2_prime: Option<f64>,
    /// Tuples drawn by the incomplete U-statistic.
    #[arg(long, default_value_t = 10_000)]
    pub tuples: usize,
    /// Scale kernels to integrate to one.
    #[arg(long)]
    pub normalized_kernel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = Method::Lwb)]
    pub method: Method,
    /// Model of X given Z for crt/cpt, e.g. `gaussian:beta=1,mu=0,sigma=1` or `oracle:ex4a:r=0`.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub mh_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Vstat,
    Normalized,
    UstatExact,
    UstatIncomplete,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Crt,
    Cpt,
    Lwb,
    Dlb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Design {
    ObservedVsCrt,
    CrtVsLwb,
    CrtVsDlb,
}

/// A usage problem or a library failure, with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage { flag: Option<String>, message: String },
    Core(CbdError),
}

impl CliError {
    fn usage(flag: &str, message: impl Into<String>) -> Self {
        CliError::Usage {
            flag: Some(flag.to_string()),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            },
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Usage { flag, message } => json!({
                "error": { "kind": "usage", "flag": flag, "message": message }
            }),
            CliError::Core(e) => json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            }),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage { message, .. } => f.write_str(message),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<CbdError> for CliError {
    fn from(e: CbdError) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(e.into())
    }
}

/// Where a dataset comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    File { path: PathBuf, roles: RoleMap },
    Scenario { spec: ScenarioSpec, seed: u64 },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset, CbdError> {
        match self {
            DataSource::File { path, roles } => Dataset::from_csv(path, roles),
            DataSource::Scenario { spec, seed } => datagen::gen_scenario(spec, &mut rng_from_seed(*seed)),
        }
    }
}

/// A fully validated run request.
#[derive(Debug, Clone)]
pub enum Job {
    Estimate {
        data: DataSource,
        config: EstimatorConfig,
        seed: u64,
    },
    Test {
        data: DataSource,
        config: EstimatorConfig,
        plan: ResamplePlan,
        alpha: f64,
    },
    Power {
        spec: ExperimentSpec,
        manifest: Option<PathBuf>,
        trial: Option<(f64, usize)>,
    },
    KsCheck {
        spec: KsStudySpec,
    },
    Marks {
        input: PathBuf,
        which: MarksTest,
        sizes: Vec<usize>,
        trials: usize,
        resamples: usize,
        alpha: f64,
        method: ResampleMethod,
        config: EstimatorConfig,
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub threads: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// Set when no --seed was given and one was drawn.
    pub chosen_seed: Option<u64>,
    pub job: Job,
}

struct SeedPick {
    chosen: Option<u64>,
}

impl SeedPick {
    fn take(&mut self, given: Option<u64>) -> u64 {
        given.unwrap_or_else(|| {
            let s = rand::random::<u64>() >> 11;
            self.chosen = Some(s);
            s
        })
    }
}

fn positive(flag: &str, v: Option<f64>) -> Result<Option<f64>, CliError> {
    match v {
        Some(h) if !(h.is_finite() && h > 0.0) => {
            Err(CliError::usage(flag, format!("--{flag} must be positive, got {h}")))
        }
        other => Ok(other),
    }
}

fn estimator_config(a: &EstimatorArgs) -> Result<EstimatorConfig, CliError> {
    let weight: WeightFunction = a
        .weight
        .parse()
        .map_err(|e: CbdError| CliError::usage("weight", e.to_string()))?;
    let kind = match a.estimator {
        Estimator::Vstat => EstimatorKind::Vstat,
        Estimator::Normalized => EstimatorKind::Normalized,
        Estimator::UstatExact => EstimatorKind::UstatExact,
        Estimator::UstatIncomplete => EstimatorKind::UstatIncomplete,
        Estimator::Linear => EstimatorKind::Linear,
    };
    if a.tuples == 0 {
        return Err(CliError::usage("tuples", "--tuples must be at least 1"));
    }
    let h2_prime = match a.h2_prime {
        Some(h) if !(h.is_finite() && h >= 0.0) => {
            return Err(CliError::usage("h2-prime", format!("--h2-prime must be >= 0, got {h}")))
        }
        other => other,
    };
    let kernel = if a.normalized_kernel {
        KernelSpec::epanechnikov().normalized()
    } else {
        KernelSpec::epanechnikov()
    };
    Ok(EstimatorConfig {
        kind,
        weight,
        kernel,
        overrides: BandwidthOverrides {
            h1: positive("h1", a.h1)?,
            h2: positive("h2", a.h2)?,
            h0: positive("h0", a.h0)?,
            h2_prime,
        },
        tuples: a.tuples,
    })
}

fn sampler(text: &str) -> Result<ConditionalSampler, CliError> {
    datagen::parse_sampler(text).map_err(|e| CliError::usage("sampler", e.to_string()))
}

/// Resolve the method flags; `oracle` stands in for CRT/CPT without --sampler.
fn method(m: &MethodArgs, oracle_ok: bool) -> Result<Option<ResampleMethod>, CliError> {
    if m.mh_steps == Some(0) {
        return Err(CliError::usage("mh-steps", "--mh-steps must be at least 1"));
    }
    if m.mh_steps.is_some() && m.method != Method::Cpt {
        return Err(CliError::usage("mh-steps", "--mh-steps only applies to --method cpt"));
    }
    if m.sampler.is_some() && !matches!(m.method, Method::Crt | Method::Cpt) {
        return Err(CliError::usage("sampler", "--sampler only applies to --method crt or cpt"));
    }
    let model = match (&m.sampler, m.method) {
        (Some(s), _) => Some(sampler(s)?),
        (None, Method::Crt | Method::Cpt) if !oracle_ok => {
            return Err(CliError::usage(
                "sampler",
                "--method crt and cpt require --sampler (the model of X given Z)",
            ))
        }
        (None, _) => None,
    };
    Ok(match (m.method, model) {
        (Method::Crt, Some(sampler)) => Some(ResampleMethod::Crt { sampler }),
        (Method::Cpt, Some(sampler)) => Some(ResampleMethod::Cpt {
            sampler,
            mh_steps: m.mh_steps,
        }),
        (Method::Lwb, _) => Some(ResampleMethod::lwb()),
        (Method::Dlb, _) => Some(ResampleMethod::dlb()),
        _ => None,
    })
}

fn calibration(m: &MethodArgs) -> Result<Calibration, CliError> {
    Ok(match method(m, true)? {
        Some(method) => Calibration::Method(method),
        None if m.method == Method::Crt => Calibration::OracleCrt,
        None => Calibration::OracleCpt {
            mh_steps: m.mh_steps,
        },
    })
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::usage("alpha", format!("--alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_readable(flag: &str, path: &Path) -> Result<(), CliError> {
    File::open(path)
        .map(|_| ())
        .map_err(|e| CliError::usage(flag, format!("cannot read {}: {e}", path.display())))
}

fn scenario_spec(id: &str, n: usize, r: f64) -> Result<ScenarioSpec, CliError> {
    let spec = ScenarioSpec::new(id, n).with_r(r);
    spec.validate()
        .map_err(|e| CliError::usage("scenario", e.to_string()))?;
    Ok(spec)
}

fn data_source(d: &DataArgs, seed: u64) -> Result<DataSource, CliError> {
    match (&d.input, &d.scenario) {
        (Some(path), None) => {
            let roles = d
                .roles
                .as_deref()
                .ok_or_else(|| CliError::usage("roles", "--input requires --roles"))?;
            let roles = RoleMap::parse(roles).map_err(|e| CliError::usage("roles", e.to_string()))?;
            check_readable("input", path)?;
            Ok(DataSource::File {
                path: path.clone(),
                roles,
            })
        }
        (None, Some(id)) => Ok(DataSource::Scenario {
            spec: scenario_spec(id, d.n, d.r)?,
            seed: derive_seed(seed, &[0xda7a]),
        }),
        _ => Err(CliError::usage("input", "give either --input with --roles, or --scenario")),
    }
}

fn parse_sizes(flag: &str, text: &str) -> Result<Vec<usize>, CliError> {
    let sizes: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(flag, format!("--{flag} expects integers, got `{text}`")))?;
    if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
        return Err(CliError::usage(flag, format!("--{flag} values must be at least 2")));
    }
    Ok(sizes)
}

fn parse_trial(text: &str) -> Result<(f64, usize), CliError> {
    let bad = || CliError::usage("trial", format!("--trial expects G:T, got `{text}`"));
    let (g, t) = text.split_once(':').ok_or_else(bad)?;
    Ok((g.trim().parse().map_err(|_| bad())?, t.trim().parse().map_err(|_| bad())?))
}

fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    check_readable("replay", path)?;
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage("replay", format!("{} is not a manifest: {e}", path.display())))
}

/// Parse argv and check every flag before any computation starts.
pub fn parse_and_validate<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            e.exit();
        }
        CliError::Usage {
            flag: None,
            message: e.to_string(),
        }
    })?;
    validate(cli)
}

pub fn validate(cli: Cli) -> Result<CliConfig, CliError> {
    let mut seeds = SeedPick { chosen: None };
    let job = match cli.command {
        Command::Estimate { data, est, seed } => {
            let config = estimator_config(&est)?;
            let seed = seeds.take(seed);
            let data = data_source(&data, seed)?;
            Job::Estimate { data, config, seed }
        }
        Command::Test {
            data,
            est,
            method: m,
            resamples,
            alpha,
            seed,
        } => {
            let config = estimator_config(&est)?;
            let method = method(&m, false)?.expect("crt/cpt without a sampler is rejected above");
            check_alpha(alpha)?;
            if resamples == 0 {
                return Err(CliError::usage("resamples", "--resamples must be at least 1"));
            }
            let seed = seeds.take(seed);
            let data = data_source(&data, seed)?;
            let plan = ResamplePlan::new(method, resamples, seed);
            Job::Test {
                data,
                config,
                plan,
                alpha,
            }
        }
        Command::Power {
            scenario,
            grid,
            n,
            r,
            method: m,
            est,
            trials,
            resamples,
            alpha,
            seed,
            manifest,
            replay,
            trial,
        } => {
            let trial = trial.as_deref().map(parse_trial).transpose()?;
            let spec = match replay {
                Some(path) => read_manifest(&path)?.spec,
                None => {
                    let id = scenario.expect("clap requires --scenario without --replay");
                    let grid = Grid::parse(grid.as_deref().expect("clap requires --grid"))
                        .map_err(|e| CliError::usage("grid", e.to_string()))?;
                    let mut spec = ExperimentSpec::new(
                        scenario_spec(&id, n, r)?,
                        grid,
                        calibration(&m)?,
                        seeds.take(seed),
                    );
                    spec.estimator = estimator_config(&est)?;
                    spec.trials = trials;
                    spec.resamples = resamples;
                    spec.alpha = alpha;
                    spec
                }
            };
            spec.validate().map_err(|e| CliError::usage("grid", e.to_string()))?;
            if let (Calibration::OracleCrt | Calibration::OracleCpt { .. }, Some(&g)) =
                (&spec.calibration, spec.grid.values.first())
            {
                datagen::oracle_sampler(&spec.scenario_at(g)).map_err(|e| {
                    CliError::usage("sampler", format!("{e}; pass --sampler explicitly"))
                })?;
            }
            Job::Power {
                spec,
                manifest,
                trial,
            }
        }
        Command::KsCheck {
            scenario,
            r,
            n_grid,
            design,
            sampler: model,
            samples,
            replications,
            alpha,
            est,
            seed,
        } => {
            let design = match (design, &model) {
                (Design::ObservedVsCrt, Some(s)) => KsDesign::ObservedVsCrt { sampler: sampler(s)? },
                (Design::ObservedVsCrt, None) => {
                    return Err(CliError::usage("sampler", "--design observed-vs-crt requires --sampler"))
                }
                (_, Some(_)) => {
                    return Err(CliError::usage("sampler", "--sampler only applies to observed-vs-crt"))
                }
                (Design::CrtVsLwb, None) => KsDesign::CrtVs {
                    other: ResampleMethod::lwb(),
                },
                (Design::CrtVsDlb, None) => KsDesign::CrtVs {
                    other: ResampleMethod::dlb(),
                },
            };
            let grid = parse_sizes("n-grid", &n_grid)?;
            let mut spec = KsStudySpec::new(scenario_spec(&scenario, grid[0], r)?, grid, design, seeds.take(seed));
            spec.samples = samples;
            spec.replications = replications;
            spec.alpha = alpha;
            spec.estimator = estimator_config(&est)?;
            spec.validate().map_err(|e| CliError::usage("scenario", e.to_string()))?;
            Job::KsCheck { spec }
        }
        Command::Marks {
            input,
            which,
            sizes,
            trials,
            resamples,
            alpha,
            method: m,
            est,
            seed,
        } => {
            check_readable("input", &input)?;
            let which: MarksTest = which
                .parse()
                .map_err(|e: CbdError| CliError::usage("test", e.to_string()))?;
            check_alpha(alpha)?;
            if trials == 0 || resamples == 0 {
                return Err(CliError::usage("trials", "--trials and --resamples must be at least 1"));
            }
            Job::Marks {
                input,
                which,
                sizes: parse_sizes("sizes", &sizes)?,
                trials,
                resamples,
                alpha,
                method: method(&m, false)?.expect("crt/cpt without a sampler is rejected above"),
                config: estimator_config(&est)?,
                seed: seeds.take(seed),
            }
        }
    };
    Ok(CliConfig {
        threads: cli.threads.unwrap_or(0),
        format: cli.format,
        output: cli.output,
        chosen_seed: seeds.chosen,
        job,
    })
}

/// Flatten the scalar fields of a JSON object into CSV header and row.
fn flat_csv(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, keys: &mut Vec<String>, vals: &mut Vec<String>) {
        match v {
            Value::Object(map) => {
                for (k, inner) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, inner, keys, vals);
                }
            }
            Value::Array(_) => {}
            Value::String(s) => {
                keys.push(prefix.to_string());
                vals.push(s.clone());
            }
            Value::Null => {
                keys.push(prefix.to_string());
                vals.push(String::new());
            }
            other => {
                keys.push(prefix.to_string());
                vals.push(other.to_string());
            }
        }
    }
    let (mut keys, mut vals) = (Vec::new(), Vec::new());
    walk("", value, &mut keys, &mut vals);
    format!("{}\n{}\n", keys.join(","), vals.join(","))
}

fn power_csv(points: &[PowerPoint], resamples: usize, alpha: f64) -> Result<String, CliError> {
    let mut buf = Vec::new();
    harness::write_power_csv(&mut buf, points, resamples, alpha)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn render(format: Format, value: &Value, csv: impl FnOnce() -> Result<String, CliError>) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(value).expect("serializable") + "\n"),
        Format::Csv => csv(),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Execute a validated job and return the rendered output.
pub fn execute(cfg: &CliConfig) -> Result<String, CliError> {
    match &cfg.job {
        Job::Estimate { data, config, seed } => {
            let ds = data.load()?;
            let stat = cbd_core::estimator::PreparedStatistic::prepare(&ds, *config)?
                .statistic(ds.x(), *seed)?;
            let mut value = to_value(&stat);
            value["n"] = json!(ds.n());
            value["seed"] = json!(seed);
            render(cfg.format, &value, || Ok(flat_csv(&value)))
        }
        Job::Test {
            data,
            config,
            plan,
            alpha,
        } => {
            let ds = data.load()?;
            let result = run_test(&ds, plan, config, *alpha)?;
            let value = to_value(&result);
            render(cfg.format, &value, || Ok(flat_csv(&value)))
        }
        Job::Power {
            spec,
            manifest,
            trial: Some((g, t)),
        } => {
            let _ = manifest;
            let outcome = harness::run_trial(spec, *g, *t)?;
            let value = to_value(&outcome);
            render(cfg.format, &value, || Ok(flat_csv(&value)))
        }
        Job::Power {
            spec,
            manifest,
            trial: None,
        } => {
            let points = harness::run_power(spec)?;
            if let Some(path) = manifest {
                let m = Manifest::new(spec.clone(), points.clone(), cfg.threads);
                std::fs::write(path, serde_json::to_string_pretty(&m).expect("serializable") + "\n")?;
            }
            render(cfg.format, &to_value(&points), || {
                power_csv(&points, spec.resamples, spec.alpha)
            })
        }
        Job::KsCheck { spec } => {
            let points = harness::run_ks_study(spec)?;
            render(cfg.format, &to_value(&points), || {
                let mut buf = Vec::new();
                harness::write_ks_csv(&mut buf, &points, spec.samples)?;
                Ok(String::from_utf8(buf).expect("csv output is utf-8"))
            })
        }
        Job::Marks {
            input,
            which,
            sizes,
            trials,
            resamples,
            alpha,
            method,
            config,
            seed,
        } => {
            let table = datagen::load_marks(input)?;
            let full = datagen::marks_dataset(&table, *which)?;
            let points = sizes
                .iter()
                .map(|&m| {
                    harness::power_with(
                        m as f64,
                        *trials,
                        *seed,
                        method,
                        config,
                        *resamples,
                        *alpha,
                        |rng| datagen::subsample(&full, m, rng),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            render(cfg.format, &to_value(&points), || power_csv(&points, *resamples, *alpha))
        }
    }
}

/// Validate, run on the requested number of threads and write the output.
pub fn run<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = parse_and_validate(argv)?;
    if let Some(seed) = cfg.chosen_seed {
        eprintln!("seed: {seed}");
    }
    let text = par::with_threads(cfg.threads, || execute(&cfg))?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
