//! Simulation designs, misspecified and oracle samplers, and the marks benchmark table.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix};
use crate::error::{CbdError, Result};
use crate::resampling::ConditionalSampler;
use crate::rng::CbdRng;

/// Error law shared by the regression designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Normal,
    Cauchy,
}

/// Bivariate error shapes with zero Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    FourClouds,
    W,
    Diamond,
    Parabola,
    TwoParabolas,
    Circle,
}

impl Shape {
    pub const ALL: [Shape; 6] = [
        Shape::FourClouds,
        Shape::W,
        Shape::Diamond,
        Shape::Parabola,
        Shape::TwoParabolas,
        Shape::Circle,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Shape::FourClouds => "four_clouds",
            Shape::W => "w",
            Shape::Diamond => "diamond",
            Shape::Parabola => "parabola",
            Shape::TwoParabolas => "two_parabolas",
            Shape::Circle => "circle",
        }
    }

    /// One draw of (ε₁, ε₂), centered at its exact mean.
    pub fn draw(self, rng: &mut CbdRng) -> (f64, f64) {
        let unif = |rng: &mut CbdRng, a: f64| a * (2.0 * rng.random::<f64>() - 1.0);
        match self {
            Shape::FourClouds => {
                let sd = 0.05f64.sqrt();
                let sx = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let sy = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let gx: f64 = rng.sample(StandardNormal);
                let gy: f64 = rng.sample(StandardNormal);
                (sx + sd * gx, sy + sd * gy)
            }
            Shape::W => {
                let e1 = unif(rng, 1.0);
                let e2 = (e1.abs() - 0.5).abs() - 0.25 + unif(rng, 0.1);
                (e1, e2)
            }
            Shape::Diamond => {
                let u = unif(rng, 1.0);
                let v = unif(rng, 1.0);
                ((u - v) * FRAC_1_SQRT_2, (u + v) * FRAC_1_SQRT_2)
            }
            Shape::Parabola => {
                let e1 = unif(rng, 1.0);
                (e1, e1 * e1 - 1.0 / 3.0 + unif(rng, 0.1))
            }
            Shape::TwoParabolas => {
                let e1 = unif(rng, 1.0);
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                (e1, s * e1 * e1 + unif(rng, 0.1))
            }
            Shape::Circle => {
                let theta = 2.0 * PI * rng.random::<f64>();
                let gx: f64 = rng.sample(StandardNormal);
                let gy: f64 = rng.sample(StandardNormal);
                (theta.cos() + 0.05 * gx, theta.sin() + 0.05 * gy)
            }
        }
    }
}

impl FromStr for Shape {
    type Err = CbdError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Shape::ALL
            .into_iter()
            .find(|sh| sh.id() == key)
            .or(match key.as_str() {
                "clouds" => Some(Shape::FourClouds),
                "two_parabola" => Some(Shape::TwoParabolas),
                _ => None,
            })
            .ok_or_else(|| CbdError::InvalidScenario(s.to_string()))
    }
}

/// A registered data-generating design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "snake_case")]
pub enum Scenario {
    /// Y = Z + η₁, X = Z + rY + η₂ in dimension `dim`, with Z and η of law `noise`.
    Regression { noise: Noise, dim: usize },
    /// Z ~ U(0,1), X = Z + ε₁, Y = Z + ε₂.
    Shape(Shape),
    /// Same skeleton with (ε₁, ε₂) an equal mixture of two centered diagonal normals.
    Mixture { first: [f64; 2], second: [f64; 2] },
    /// Z ~ U[0,1]³, m = max Zₖ, X = m + ε₁, Y = m + ε₂.
    Cube(Shape),
}

impl Scenario {
    /// (d_X, d_Y, d_Z).
    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            Scenario::Regression { dim, .. } => (*dim, *dim, *dim),
            Scenario::Shape(_) | Scenario::Mixture { .. } => (1, 1, 1),
            Scenario::Cube(_) => (1, 1, 3),
        }
    }

    pub fn uses_r(&self) -> bool {
        matches!(self, Scenario::Regression { .. })
    }
}

const EX5_LETTERS: [(char, Shape); 6] = [
    ('a', Shape::FourClouds),
    ('b', Shape::W),
    ('c', Shape::Diamond),
    ('d', Shape::Parabola),
    ('e', Shape::TwoParabolas),
    ('f', Shape::Circle),
];

const EX8_LETTERS: [(char, Shape); 3] = [
    ('a', Shape::Circle),
    ('b', Shape::Parabola),
    ('c', Shape::TwoParabolas),
];

fn letter_shape(table: &[(char, Shape)], tag: &str) -> Option<Shape> {
    let mut chars = tag.chars();
    let c = chars.next()?;
    if chars.next().is_some() {
        return None;
    }
    table.iter().find(|(l, _)| *l == c).map(|(_, s)| *s)
}

/// Resolve a scenario id such as `ex4a`, `ex5:circle`, `ex5d` or `ex8:parabola`.
pub fn parse_scenario(id: &str) -> Result<Scenario> {
    let bad = || CbdError::InvalidScenario(id.to_string());
    let key = id.trim().to_ascii_lowercase();
    let (head, tag) = match key.split_once(':') {
        Some((h, t)) => (h.to_string(), Some(t.to_string())),
        None => (key.clone(), None),
    };
    let regression = |noise, dim| Scenario::Regression { noise, dim };
    let scenario = match (head.as_str(), tag.as_deref()) {
        ("ex1" | "ex2" | "ex3" | "ex4a", None) => regression(Noise::Normal, 1),
        ("ex4b", None) => regression(Noise::Cauchy, 1),
        ("ex7a", None) => regression(Noise::Normal, 2),
        ("ex7b", None) => regression(Noise::Cauchy, 2),
        ("ex6a", None) => Scenario::Mixture {
            first: [1.0, 1.0],
            second: [10.0, 10.0],
        },
        ("ex6b", None) => Scenario::Mixture {
            first: [1.0, 10.0],
            second: [10.0, 1.0],
        },
        ("ex5", Some(t)) => Scenario::Shape(
            letter_shape(&EX5_LETTERS, t).map_or_else(|| Shape::from_str(t), Ok)?,
        ),
        ("ex8", Some(t)) => {
            let shape = letter_shape(&EX8_LETTERS, t).map_or_else(|| Shape::from_str(t), Ok)?;
            if !EX8_LETTERS.iter().any(|(_, s)| *s == shape) {
                return Err(bad());
            }
            Scenario::Cube(shape)
        }
        (h, None) if h.len() == 4 && (h.starts_with("ex5") || h.starts_with("ex8")) => {
            let table: &[(char, Shape)] = if h.starts_with("ex5") {
                &EX5_LETTERS
            } else {
                &EX8_LETTERS
            };
            let shape = letter_shape(table, &h[3..]).ok_or_else(bad)?;
            if h.starts_with("ex5") {
                Scenario::Shape(shape)
            } else {
                Scenario::Cube(shape)
            }
        }
        _ => return Err(bad()),
    };
    Ok(scenario)
}

/// A scenario id with its size and dependence strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub n: usize,
    #[serde(default)]
    pub r: f64,
}

impl ScenarioSpec {
    pub fn new(id: impl Into<String>, n: usize) -> Self {
        ScenarioSpec {
            id: id.into(),
            n,
            r: 0.0,
        }
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn scenario(&self) -> Result<Scenario> {
        parse_scenario(&self.id)
    }

    pub fn validate(&self) -> Result<Scenario> {
        if self.n < 2 {
            return Err(CbdError::InsufficientSample {
                needed: 2,
                got: self.n,
            });
        }
        if !self.r.is_finite() {
            return Err(CbdError::param("r", "must be finite"));
        }
        self.scenario()
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={}, r={})", self.id, self.n, self.r)
    }
}

#[inline]
fn noise_draw(noise: Noise, rng: &mut CbdRng) -> f64 {
    match noise {
        Noise::Normal => rng.sample(StandardNormal),
        Noise::Cauchy => (PI * (rng.random::<f64>() - 0.5)).tan(),
    }
}

/// Draw one dataset of size `spec.n` from the named design.
pub fn gen_scenario(spec: &ScenarioSpec, rng: &mut CbdRng) -> Result<Dataset> {
    let scenario = spec.validate()?;
    let n = spec.n;
    let (dx, dy, dz) = scenario.dims();
    let mut x = Matrix::zeros(n, dx);
    let mut y = Matrix::zeros(n, dy);
    let mut z = Matrix::zeros(n, dz);
    for i in 0..n {
        match scenario {
            Scenario::Regression { noise, dim } => {
                for k in 0..dim {
                    let zk = noise_draw(noise, rng);
                    let yk = zk + noise_draw(noise, rng);
                    let xk = zk + spec.r * yk + noise_draw(noise, rng);
                    z.row_mut(i)[k] = zk;
                    y.row_mut(i)[k] = yk;
                    x.row_mut(i)[k] = xk;
                }
            }
            Scenario::Shape(shape) => {
                let zi: f64 = rng.random();
                let (e1, e2) = shape.draw(rng);
                z.row_mut(i)[0] = zi;
                x.row_mut(i)[0] = zi + e1;
                y.row_mut(i)[0] = zi + e2;
            }
            Scenario::Mixture { first, second } => {
                let zi: f64 = rng.random();
                let var = if rng.random::<bool>() { first } else { second };
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                z.row_mut(i)[0] = zi;
                x.row_mut(i)[0] = zi + var[0].sqrt() * g1;
                y.row_mut(i)[0] = zi + var[1].sqrt() * g2;
            }
            Scenario::Cube(shape) => {
                let row = z.row_mut(i);
                for v in row.iter_mut() {
                    *v = rng.random();
                }
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (e1, e2) = shape.draw(rng);
                x.row_mut(i)[0] = m + e1;
                y.row_mut(i)[0] = m + e2;
            }
        }
    }
    Dataset::new(x, y, z)
}

/// Misspecified model-X laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Misspecified {
    /// X* = 5Z + η with η ~ N(10, 25/(r+1)).
    AffineShift { r: f64 },
    /// X* ~ Unif(−|Z|, |Z|).
    UniformAbs,
}

pub fn misspecified_sampler(kind: Misspecified) -> Result<ConditionalSampler> {
    match kind {
        Misspecified::AffineShift { r } => {
            if !(r.is_finite() && r > -1.0) {
                return Err(CbdError::param("r", format!("affine_shift needs r > -1, got {r}")));
            }
            ConditionalSampler::gaussian_scalar(5.0, 10.0, 5.0 / (r + 1.0).sqrt())
        }
        Misspecified::UniformAbs => Ok(ConditionalSampler::UniformAbs { d_x: 1 }),
    }
}

/// The true law of X given Z for the Gaussian regression designs.
pub fn oracle_sampler(spec: &ScenarioSpec) -> Result<ConditionalSampler> {
    match spec.validate()? {
        Scenario::Regression {
            noise: Noise::Normal,
            dim,
        } => {
            let r = spec.r;
            let mut beta = vec![0.0; dim * dim];
            for k in 0..dim {
                beta[k * dim + k] = 1.0 + r;
            }
            ConditionalSampler::gaussian_affine(beta, vec![0.0; dim], (1.0 + r * r).sqrt())
        }
        _ => Err(CbdError::InvalidModel(format!(
            "no closed-form Gaussian law of X given Z for scenario {}",
            spec.id
        ))),
    }
}

fn parse_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(';')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CbdError::param("sampler", format!("`{v}` is not a number")))
        })
        .collect()
}

/// Parse a sampler description:
/// `gaussian:beta=5,mu=10,sigma=5` (vector entries separated by `;`, β row-major),
/// `affine_shift:r=0`, `uniform_abs`, `uniform_abs:d=2`, or `oracle:ex4a:r=1`.
pub fn parse_sampler(text: &str) -> Result<ConditionalSampler> {
    let text = text.trim();
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let params = || -> Result<Vec<(&str, &str)>> {
        rest.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                p.split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| CbdError::param("sampler", format!("expected key=value, got `{p}`")))
            })
            .collect()
    };
    let number = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| CbdError::param("sampler", format!("`{v}` is not a number")))
    };
    match kind.to_ascii_lowercase().as_str() {
        "gaussian" | "gaussian_affine" => {
            let (mut beta, mut mu, mut sigma) = (None, None, None);
            for (k, v) in params()? {
                match k {
                    "beta" => beta = Some(parse_list(v)?),
                    "mu" => mu = Some(parse_list(v)?),
                    "sigma" => sigma = Some(number(v)?),
                    _ => return Err(CbdError::param("sampler", format!("unknown key `{k}`"))),
                }
            }
            let need = |what: &str| CbdError::param("sampler", format!("gaussian needs {what}"));
            ConditionalSampler::gaussian_affine(
                beta.ok_or_else(|| need("beta"))?,
                mu.ok_or_else(|| need("mu"))?,
                sigma.ok_or_else(|| need("sigma"))?,
            )
        }
        "affine_shift" => {
            let mut r = 0.0;
            for (k, v) in params()? {
                match k {
                    "r" => r = number(v)?,
                    _ => return Err(CbdError::param("sampler", format!("unknown key `{k}`"))),
                }
            }
            misspecified_sampler(Misspecified::AffineShift { r })
        }
        "uniform_abs" => {
            let mut d_x = 1;
            for (k, v) in params()? {
                match k {
                    "d" | "d_x" => {
                        d_x = v.parse().map_err(|_| {
                            CbdError::param("sampler", format!("`{v}` is not a dimension"))
                        })?
                    }
                    _ => return Err(CbdError::param("sampler", format!("unknown key `{k}`"))),
                }
            }
            Ok(ConditionalSampler::UniformAbs { d_x })
        }
        "oracle" => {
            let (id, tail) = rest.split_once(':').unwrap_or((rest, ""));
            let mut spec = ScenarioSpec::new(id, 2);
            for p in tail.split(',').filter(|p| !p.trim().is_empty()) {
                match p.split_once('=') {
                    Some(("r", v)) => spec.r = number(v.trim())?,
                    _ => return Err(CbdError::param("sampler", format!("unknown oracle key `{p}`"))),
                }
            }
            oracle_sampler(&spec)
        }
        _ => Err(CbdError::param("sampler", format!("unknown sampler `{text}`"))),
    }
}

/// Student marks in five subjects, one row per student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarksTable {
    pub mechanics: Vec<f64>,
    pub vectors: Vec<f64>,
    pub algebra: Vec<f64>,
    pub analysis: Vec<f64>,
    pub statistics: Vec<f64>,
}

impl MarksTable {
    pub fn len(&self) -> usize {
        self.mechanics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mechanics.is_empty()
    }
}

/// Which marks hypothesis to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarksTest {
    /// X = Statistics, Y = Analysis, Z = (Mechanics, Vectors, Algebra).
    A,
    /// X = Mechanics, Y = Vectors, Z = (Statistics, Analysis, Algebra).
    B,
}

impl FromStr for MarksTest {
    type Err = CbdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(MarksTest::A),
            "b" => Ok(MarksTest::B),
            _ => Err(CbdError::param("which", format!("expected a or b, got `{s}`"))),
        }
    }
}

const MARKS_COLUMNS: [(&str, &[&str]); 5] = [
    ("mechanics", &["mechanics", "mech", "m"]),
    ("vectors", &["vectors", "vect", "v"]),
    ("algebra", &["algebra", "alg", "al"]),
    ("analysis", &["analysis", "anl", "an"]),
    ("statistics", &["statistics", "stat", "s"]),
];

/// Read a marks CSV; headers may use full names or the short forms MECH, VECT, ALG, ANL, STAT.
pub fn load_marks(path: impl AsRef<Path>) -> Result<MarksTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CbdError::Io(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim_matches('"').to_ascii_lowercase())
        .collect();
    let mut idx = [0usize; 5];
    for (slot, (name, aliases)) in idx.iter_mut().zip(MARKS_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| aliases.contains(&h.as_str()))
            .ok_or_else(|| CbdError::Schema(format!("marks file lacks a `{name}` column")))?;
    }
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for (col, &j) in cols.iter_mut().zip(&idx) {
            let raw = record.get(j).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                CbdError::Schema(format!("row {}: `{raw}` is not a number", line + 1))
            })?;
            if !v.is_finite() {
                return Err(CbdError::Schema(format!("row {}: non-finite score", line + 1)));
            }
            col.push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(CbdError::Schema("marks file has no data rows".into()));
    }
    let [mechanics, vectors, algebra, analysis, statistics] = cols;
    Ok(MarksTable {
        mechanics,
        vectors,
        algebra,
        analysis,
        statistics,
    })
}

pub fn marks_dataset(table: &MarksTable, which: MarksTest) -> Result<Dataset> {
    let t = table;
    let (x, y, z) = match which {
        MarksTest::A => (&t.statistics, &t.analysis, [&t.mechanics, &t.vectors, &t.algebra]),
        MarksTest::B => (&t.mechanics, &t.vectors, [&t.statistics, &t.analysis, &t.algebra]),
    };
    let zrows: Vec<[f64; 3]> = (0..t.len()).map(|i| [z[0][i], z[1][i], z[2][i]]).collect();
    Dataset::new(
        Matrix::column_vector(x),
        Matrix::column_vector(y),
        Matrix::from_rows(&zrows)?,
    )
}

/// m rows drawn uniformly without replacement, in random order.
pub fn subsample(ds: &Dataset, m: usize, rng: &mut CbdRng) -> Result<Dataset> {
    let n = ds.n();
    if m < 2 || m > n {
        return Err(CbdError::param("m", format!("must lie in [2, {n}], got {m}")));
    }
    let rows = index::sample(rng, n, m).into_vec();
    ds.select_rows(&rows)
}
