//! Brute-force reference implementations shared by the integration tests.
//!
//! Everything here is written directly from the defining sums, without the
//! sorting and prefix tricks of the library.

#![allow(dead_code)]

use cbd_core::rng::CbdRng;
use cbd_core::{Dataset, Matrix};
use rand::Rng;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dist_table(x: &Matrix) -> Vec<Vec<f64>> {
    let n = x.nrows();
    (0..n)
        .map(|i| (0..n).map(|j| euclid(x.row(i), x.row(j))).collect())
        .collect()
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Σ_{u,v} [Σ_r (p_r − q_r) 1{d(u,r) ≤ d(u,v)}]² (p_u p_v + q_u q_v)
pub fn theta2_triple(d: &[Vec<f64>], p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    let mut total = 0.0;
    for u in 0..n {
        for v in 0..n {
            let mut inner = 0.0;
            for r in 0..n {
                inner += (p[r] - q[r]) * ind(d[u][r] <= d[u][v]);
            }
            total += inner * inner * (p[u] * p[v] + q[u] * q[v]);
        }
    }
    total
}

/// The same sum with the square expanded into a fourth index.
pub fn theta2_quadruple(d: &[Vec<f64>], p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    let mut total = 0.0;
    for u in 0..n {
        for v in 0..n {
            let w = p[u] * p[v] + q[u] * q[v];
            for r in 0..n {
                for s in 0..n {
                    total += w
                        * (p[r] - q[r])
                        * (p[s] - q[s])
                        * ind(d[u][r] <= d[u][v])
                        * ind(d[u][s] <= d[u][v]);
                }
            }
        }
    }
    total
}

/// Unnormalized Epanechnikov profile at distance t/h.
pub fn epan(t: f64, h: f64) -> f64 {
    let s = t / h;
    if s < 1.0 {
        1.0 - s * s
    } else {
        0.0
    }
}

/// Kernel laws of X given (Y_s, Z_s) and given Z_s at anchor s.
pub fn laws(ds: &Dataset, s: usize, h1: f64, h2: f64) -> (Vec<f64>, Vec<f64>) {
    let n = ds.n();
    let yz = |i: usize| -> Vec<f64> {
        ds.y().row(i).iter().chain(ds.z().row(i)).copied().collect()
    };
    let wp: Vec<f64> = (0..n).map(|i| epan(euclid(&yz(i), &yz(s)), h1)).collect();
    let wq: Vec<f64> = (0..n)
        .map(|i| epan(euclid(ds.z().row(i), ds.z().row(s)), h2))
        .collect();
    let (tp, tq): (f64, f64) = (wp.iter().sum(), wq.iter().sum());
    (
        wp.iter().map(|w| w / tp).collect(),
        wq.iter().map(|w| w / tq).collect(),
    )
}

pub fn pointwise_reference(ds: &Dataset, s: usize, h1: f64, h2: f64) -> f64 {
    let (p, q) = laws(ds, s, h1, h2);
    theta2_triple(&dist_table(ds.x()), &p, &q)
}

/// η(a, b, c, e) = 1{d(a,c) ≤ d(a,b)} · 1{d(a,e) ≤ d(a,b)}.
pub fn eta(d: &[Vec<f64>], a: usize, b: usize, c: usize, e: usize) -> f64 {
    ind(d[a][c] <= d[a][b]) * ind(d[a][e] <= d[a][b])
}

pub fn phi(d: &[Vec<f64>], u: [usize; 4], v: [usize; 4]) -> f64 {
    let a = eta(d, u[0], u[1], u[2], u[3]) + eta(d, u[0], u[1], v[2], v[3])
        - eta(d, u[0], u[1], u[2], v[2])
        - eta(d, u[0], u[1], u[3], v[3]);
    let c = eta(d, v[0], v[1], v[2], v[3]) + eta(d, v[0], v[1], u[2], u[3])
        - eta(d, v[0], v[1], v[2], u[2])
        - eta(d, v[0], v[1], v[3], u[3]);
    a + c
}

/// All permutations of `items` (Heap's algorithm).
pub fn permutations<T: Copy>(items: &[T]) -> Vec<Vec<T>> {
    let mut a = items.to_vec();
    let n = a.len();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// φ averaged over all 24 × 24 block reorderings.
pub fn phi_sym_reference(d: &[Vec<f64>], u: [usize; 4], v: [usize; 4]) -> f64 {
    let pu = permutations(&u);
    let pv = permutations(&v);
    let mut sum = 0.0;
    for a in &pu {
        for b in &pv {
            sum += phi(d, [a[0], a[1], a[2], a[3]], [b[0], b[1], b[2], b[3]]);
        }
    }
    sum / (pu.len() * pv.len()) as f64
}

/// A small random dataset; with `ties` the values sit on a coarse grid.
pub fn random_dataset(rng: &mut CbdRng, n: usize, dx: usize, ties: bool) -> Dataset {
    let mut draw = |cols: usize| {
        let data: Vec<f64> = (0..n * cols)
            .map(|_| {
                let v: f64 = rng.random::<f64>() * 4.0 - 2.0;
                if ties {
                    (v * 2.0).round() / 2.0
                } else {
                    v
                }
            })
            .collect();
        Matrix::from_vec(n, cols, data).unwrap()
    };
    let x = draw(dx);
    let y = draw(1);
    let z = draw(1);
    Dataset::new(x, y, z).unwrap()
}

/// Relative closeness, with an absolute floor for values that are zero up to rounding.
pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-14
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}
