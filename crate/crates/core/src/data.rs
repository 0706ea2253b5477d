//! Samples, Euclidean distance tables and per-anchor distance orderings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CbdError, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CbdError::InvalidInput(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(CbdError::InvalidInput(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(CbdError::InvalidInput(format!(
                "cannot stack {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        let mut data = Vec::with_capacity(self.rows * (self.cols + other.cols));
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Apply `f` to every row, producing a matrix with `out_cols` columns.
    pub fn map_rows(&self, out_cols: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Matrix {
        let mut out = Matrix::zeros(self.rows, out_cols);
        for i in 0..self.rows {
            f(self.row(i), out.row_mut(i));
        }
        out
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// An n-sample of (X, Y, Z) triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Matrix,
    y: Matrix,
    z: Matrix,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix, z: Matrix) -> Result<Self> {
        let n = x.nrows();
        if y.nrows() != n || z.nrows() != n {
            return Err(CbdError::InvalidInput(format!(
                "row counts differ: x={n}, y={}, z={}",
                y.nrows(),
                z.nrows()
            )));
        }
        if n < 2 {
            return Err(CbdError::InsufficientSample { needed: 2, got: n });
        }
        for (name, m) in [("x", &x), ("y", &y), ("z", &z)] {
            if m.ncols() == 0 {
                return Err(CbdError::InvalidInput(format!("{name} has no columns")));
            }
            if !m.is_finite() {
                return Err(CbdError::InvalidInput(format!(
                    "{name} contains non-finite values"
                )));
            }
        }
        Ok(Dataset { x, y, z })
    }

    /// Univariate convenience constructor.
    pub fn from_columns(x: &[f64], y: &[f64], z: &[f64]) -> Result<Self> {
        Dataset::new(
            Matrix::column_vector(x),
            Matrix::column_vector(y),
            Matrix::column_vector(z),
        )
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn d_x(&self) -> usize {
        self.x.ncols()
    }
    pub fn d_y(&self) -> usize {
        self.y.ncols()
    }
    pub fn d_z(&self) -> usize {
        self.z.ncols()
    }
    pub fn x(&self) -> &Matrix {
        &self.x
    }
    pub fn y(&self) -> &Matrix {
        &self.y
    }
    pub fn z(&self) -> &Matrix {
        &self.z
    }

    /// Same (Y, Z) with a replacement X sample.
    pub fn with_x(&self, x: Matrix) -> Result<Self> {
        if x.nrows() != self.n() || x.ncols() != self.d_x() {
            return Err(CbdError::InvalidInput(format!(
                "replacement x is {}x{}, expected {}x{}",
                x.nrows(),
                x.ncols(),
                self.n(),
                self.d_x()
            )));
        }
        if !x.is_finite() {
            return Err(CbdError::InvalidInput(
                "x contains non-finite values".into(),
            ));
        }
        Ok(Dataset {
            x,
            y: self.y.clone(),
            z: self.z.clone(),
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        Dataset::new(
            self.x.select_rows(idx),
            self.y.select_rows(idx),
            self.z.select_rows(idx),
        )
    }

    /// Rows of the joint (Y, Z) design.
    pub fn yz(&self) -> Matrix {
        self.y.hstack(&self.z).expect("row counts checked at construction")
    }

    /// Read a CSV with a header row, assigning columns through `roles`.
    pub fn from_csv(path: impl AsRef<Path>, roles: &RoleMap) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CbdError::Io(format!("{}: {e}", path.display())))?;
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let cols = |refs: &[ColumnRef]| -> Result<Vec<usize>> {
            refs.iter().map(|r| r.resolve(&headers)).collect()
        };
        let (xc, yc, zc) = (cols(&roles.x)?, cols(&roles.y)?, cols(&roles.z)?);
        let (mut xs, mut ys, mut zs) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |c: usize| -> Result<f64> {
                let raw = rec.get(c).ok_or_else(|| {
                    CbdError::Schema(format!("data row {} is missing column {}", line + 1, c + 1))
                })?;
                raw.parse::<f64>().map_err(|_| {
                    CbdError::Schema(format!(
                        "data row {}, column {}: `{raw}` is not a number",
                        line + 1,
                        c + 1
                    ))
                })
            };
            for &c in &xc {
                xs.push(parse(c)?);
            }
            for &c in &yc {
                ys.push(parse(c)?);
            }
            for &c in &zc {
                zs.push(parse(c)?);
            }
        }
        let n = xs.len() / xc.len();
        Dataset::new(
            Matrix::from_vec(n, xc.len(), xs)?,
            Matrix::from_vec(n, yc.len(), ys)?,
            Matrix::from_vec(n, zc.len(), zs)?,
        )
    }
}

/// A CSV column addressed by 1-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    fn resolve(&self, headers: &[String]) -> Result<usize> {
        match self {
            ColumnRef::Index(i) if *i >= 1 && *i <= headers.len() => Ok(i - 1),
            ColumnRef::Index(i) => Err(CbdError::Schema(format!(
                "column {i} out of range (file has {} columns)",
                headers.len()
            ))),
            ColumnRef::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CbdError::Schema(format!("no column named `{name}`"))),
        }
    }
}

/// Assignment of CSV columns to the x, y and z roles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMap {
    pub x: Vec<ColumnRef>,
    pub y: Vec<ColumnRef>,
    pub z: Vec<ColumnRef>,
}

impl RoleMap {
    /// Parse `x=1,y=2,z=3,4` or `x=S;y=An;z=M,V,Al`.
    ///
    /// A bare item after a role keeps extending that role.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut z = Vec::new();
        let mut current: Option<char> = None;
        for item in spec.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()) {
            let value = match item.split_once('=') {
                Some((role, v)) => {
                    current = match role.trim() {
                        "x" | "X" => Some('x'),
                        "y" | "Y" => Some('y'),
                        "z" | "Z" => Some('z'),
                        other => {
                            return Err(CbdError::param(
                                "roles",
                                format!("unknown role `{other}`"),
                            ))
                        }
                    };
                    v.trim()
                }
                None => item,
            };
            let col = match value.parse::<usize>() {
                Ok(0) => return Err(CbdError::param("roles", "column positions are 1-based")),
                Ok(i) => ColumnRef::Index(i),
                Err(_) => ColumnRef::Name(value.to_string()),
            };
            match current {
                Some('x') => x.push(col),
                Some('y') => y.push(col),
                Some('z') => z.push(col),
                _ => {
                    return Err(CbdError::param(
                        "roles",
                        format!("column `{value}` listed before any role"),
                    ))
                }
            }
        }
        for (role, v) in [("x", &x), ("y", &y), ("z", &z)] {
            if v.is_empty() {
                return Err(CbdError::param("roles", format!("role {role} has no columns")));
            }
        }
        Ok(RoleMap { x, y, z })
    }
}

/// Dense symmetric matrix of Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Build from a full n×n table, checking the metric invariants that are
    /// cheap to verify (shape, finiteness, symmetry, zero diagonal, sign).
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(CbdError::InvalidInput(format!(
                "distance table has {} entries, expected {}",
                values.len(),
                n * n
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(CbdError::InvalidInput("nonzero diagonal".into()));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 || v != values[j * n + i] {
                    return Err(CbdError::InvalidInput(format!(
                        "entry ({i},{j}) breaks symmetry, sign or finiteness"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, values })
    }
}

/// Euclidean distances between all pairs of rows.
pub fn pairwise_distances(points: &Matrix) -> Result<DistanceMatrix> {
    let n = points.nrows();
    if n == 0 {
        return Err(CbdError::InsufficientSample { needed: 1, got: 0 });
    }
    if !points.is_finite() {
        return Err(CbdError::InvalidInput(
            "points contain non-finite values".into(),
        ));
    }
    Ok(distances_unchecked(points))
}

pub(crate) fn distances_unchecked(points: &Matrix) -> DistanceMatrix {
    let n = points.nrows();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let pi = points.row(i);
        for j in (i + 1)..n {
            let d = sq_dist(pi, points.row(j)).sqrt();
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix { n, values }
}

/// For each anchor u, the indices sorted by distance from u (ties by index)
/// and the inverse permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceOrder {
    n: usize,
    order: Vec<u32>,
    ranks: Vec<u32>,
}

impl DistanceOrder {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn order_row(&self, u: usize) -> &[u32] {
        &self.order[u * self.n..(u + 1) * self.n]
    }

    #[inline]
    pub fn rank(&self, u: usize, r: usize) -> usize {
        self.ranks[u * self.n + r] as usize
    }

    /// Largest rank in row u among the indices at the same distance from u as v.
    ///
    /// `δ(u, v, r) = 1` exactly when `rank(u, r) <= ball_rank(dist, u, v)`.
    pub fn ball_rank(&self, dist: &DistanceMatrix, u: usize, v: usize) -> usize {
        let row = self.order_row(u);
        let radius = dist.get(u, v);
        let mut k = self.rank(u, v);
        while k + 1 < self.n && dist.get(u, row[k + 1] as usize) == radius {
            k += 1;
        }
        k
    }
}

pub fn rank_order(dist: &DistanceMatrix) -> DistanceOrder {
    let n = dist.n();
    let mut order = Vec::with_capacity(n * n);
    let mut ranks = vec![0u32; n * n];
    let mut idx: Vec<u32> = Vec::with_capacity(n);
    for u in 0..n {
        let row = dist.row(u);
        idx.clear();
        idx.extend(0..n as u32);
        // stable: equal distances keep ascending index order
        idx.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]));
        for (k, &r) in idx.iter().enumerate() {
            ranks[u * n + r as usize] = k as u32;
        }
        order.extend_from_slice(&idx);
    }
    DistanceOrder { n, order, ranks }
}
