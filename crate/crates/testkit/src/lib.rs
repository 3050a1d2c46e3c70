//! Slow, independent reference implementations for checking `emms-core`.
//!
//! Everything here works on plain nested vectors and deliberately uses
//! different algorithms from the library: full-pivot Gaussian elimination
//! instead of Cholesky, Gram–Schmidt instead of normal equations, bisection
//! on matrix inertia instead of power iteration, and pairwise mass transfer
//! instead of sort-and-threshold.

#![allow(clippy::needless_range_loop)]

pub type Rows = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Rows {
    vec![vec![0.0; c]; r]
}

pub fn transpose(a: &Rows) -> Rows {
    let (r, c) = (a.len(), a.first().map_or(0, Vec::len));
    (0..c).map(|j| (0..r).map(|i| a[i][j]).collect()).collect()
}

pub fn matmul(a: &Rows, b: &Rows) -> Rows {
    let (n, m) = (a.len(), b.first().map_or(0, Vec::len));
    let inner = b.len();
    let mut out = zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = 0.0;
            for p in 0..inner {
                acc += a[i][p] * b[p][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Solves the square system `A x = B` (many right-hand sides) by Gaussian
/// elimination with full pivoting. Panics on an exactly singular system.
pub fn solve_full_pivot(a: &Rows, b: &Rows) -> Rows {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut a = a.clone();
    let mut b = b.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        assert!(best > 0.0, "singular system");
        a.swap(k, pr);
        b.swap(k, pr);
        for row in a.iter_mut() {
            row.swap(k, pc);
        }
        col_perm.swap(k, pc);
        for i in (k + 1)..n {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            for j in 0..m {
                b[i][j] -= f * b[k][j];
            }
        }
    }
    let mut y = zeros(n, m);
    for k in (0..n).rev() {
        for j in 0..m {
            let mut acc = b[k][j];
            for p in (k + 1)..n {
                acc -= a[k][p] * y[p][j];
            }
            y[k][j] = acc / a[k][k];
        }
    }
    let mut x = zeros(n, m);
    for (k, &orig) in col_perm.iter().enumerate() {
        x[orig] = y[k].clone();
    }
    x
}

/// Least-squares `argmin_W ‖A W − B‖_F` through the normal equations.
pub fn lstsq(a: &Rows, b: &Rows) -> Rows {
    let at = transpose(a);
    solve_full_pivot(&matmul(&at, a), &matmul(&at, b))
}

/// `½‖A W − B‖_F²` at the least-squares optimum.
pub fn lstsq_half_residual(a: &Rows, b: &Rows) -> f64 {
    let w = lstsq(a, b);
    half_sq_diff(&matmul(a, &w), b)
}

pub fn half_sq_diff(a: &Rows, b: &Rows) -> f64 {
    let mut acc = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            acc += (x - y) * (x - y);
        }
    }
    0.5 * acc
}

/// `Σ_k t_k Z_k`.
pub fn combine(slices: &[Rows], t: &[f64]) -> Rows {
    let mut out = zeros(slices[0].len(), slices[0][0].len());
    for (z, &tk) in slices.iter().zip(t) {
        for (orow, zrow) in out.iter_mut().zip(z) {
            for (o, v) in orow.iter_mut().zip(zrow) {
                *o += tk * v;
            }
        }
    }
    out
}

/// `½ Σ_{n,l} (Σ_d X[n,d] w[d,l] − Σ_k t_k Z_k[n,l])²`, written as plain loops.
pub fn objective(x: &Rows, slices: &[Rows], w: &Rows, t: &[f64]) -> f64 {
    let (n, d, l) = (x.len(), x[0].len(), w[0].len());
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..l {
            let mut pred = 0.0;
            for p in 0..d {
                pred += x[i][p] * w[p][j];
            }
            let mut target = 0.0;
            for (z, &tk) in slices.iter().zip(t) {
                target += tk * z[i][j];
            }
            acc += (pred - target) * (pred - target);
        }
    }
    0.5 * acc
}

/// Orthonormal basis of the column space of `a` by modified Gram–Schmidt
/// with one re-orthogonalization pass. Columns that vanish are dropped.
pub fn orthonormal_columns(a: &Rows) -> Vec<Vec<f64>> {
    let cols = transpose(a);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let scale = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    for mut v in cols {
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 * scale {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Part of `b` orthogonal to the column space spanned by `basis`.
pub fn residual_after_projection(basis: &[Vec<f64>], b: &Rows) -> Rows {
    let mut cols = transpose(b);
    for c in cols.iter_mut() {
        for _ in 0..2 {
            for q in basis {
                let proj: f64 = q.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
                c.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
            }
        }
    }
    transpose(&cols)
}

/// `M[i][j] = ⟨R_i, R_j⟩` where `R_k` is `Z_k` minus its projection onto
/// the columns of `X`. With `w` eliminated exactly, the objective at a
/// fixed `t` is `½ tᵀ M t`.
pub fn profile_quadratic(x: &Rows, slices: &[Rows]) -> Rows {
    let basis = orthonormal_columns(x);
    let res: Vec<Rows> = slices
        .iter()
        .map(|z| residual_after_projection(&basis, z))
        .collect();
    let k = slices.len();
    let mut m = zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[i][j] = res[i]
                .iter()
                .zip(&res[j])
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y))
                .sum();
        }
    }
    m
}

pub fn quadratic(m: &Rows, t: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..t.len() {
        for j in 0..t.len() {
            acc += t[i] * m[i][j] * t[j];
        }
    }
    0.5 * acc
}

/// Every point of the simplex lattice with spacing `1/steps`.
pub fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(k - 1, left - c, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Minimum of the exactly profiled objective over the simplex lattice.
pub fn grid_minimum(x: &Rows, slices: &[Rows], steps: usize) -> (f64, Vec<f64>) {
    let m = profile_quadratic(x, slices);
    let mut best = (f64::INFINITY, Vec::new());
    for t in simplex_grid(slices.len(), steps) {
        let s = quadratic(&m, &t);
        if s < best.0 {
            best = (s, t);
        }
    }
    best
}

/// Euclidean projection onto the simplex by repeated optimal pairwise mass
/// transfers, starting from the uniform point.
pub fn project_simplex_pairwise(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut p = vec![1.0 / k as f64; k];
    for _ in 0..100_000 {
        let mut moved = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                // Move δ from j to i; optimum of ‖p − v‖² along that line.
                let delta = (((v[i] - p[i]) - (v[j] - p[j])) / 2.0).clamp(-p[i], p[j]);
                if delta != 0.0 {
                    p[i] += delta;
                    p[j] -= delta;
                    moved += delta.abs();
                }
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    p
}

/// Number of eigenvalues of symmetric `a` strictly below `lambda`, from the
/// signs of the pivots of `a − λI` (Sylvester's law of inertia).
pub fn eigenvalues_below(a: &Rows, lambda: f64) -> usize {
    let n = a.len();
    let mut m = a.clone();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut piv = m[k][k];
        if piv == 0.0 {
            piv = -f64::EPSILON * (1.0 + lambda.abs());
            m[k][k] = piv;
        }
        if piv < 0.0 {
            negatives += 1;
        }
        for i in (k + 1)..n {
            let f = m[i][k] / piv;
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    negatives
}

/// Largest eigenvalue of a symmetric matrix by bisection on the inertia count.
pub fn largest_eigenvalue(a: &Rows) -> f64 {
    let n = a.len();
    let radius = a
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eigenvalues_below(a, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Largest singular value of `a`.
pub fn spectral_norm(a: &Rows) -> f64 {
    largest_eigenvalue(&matmul(&transpose(a), a))
        .max(0.0)
        .sqrt()
}

fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Kendall's τ by enumerating pairs, counting concordant minus discordant.
pub fn kendall_by_pairs(t: &[f64], g: &[f64]) -> f64 {
    let m = t.len();
    let (mut agree, mut total) = (0i64, 0i64);
    for i in 0..m {
        for j in (i + 1)..m {
            let s = sgn(g[i] - g[j]) * sgn(t[i] - t[j]);
            agree += s as i64;
            total += 1;
        }
    }
    agree as f64 / total as f64
}

/// Spearman rank correlation of distinct values.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = ra
        .iter()
        .zip(&rb)
        .map(|(x, y)| (x - mean) * (y - mean))
        .sum();
    let var: f64 = ra.iter().map(|x| (x - mean) * (x - mean)).sum();
    cov / var
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n)
            .rev()
            .find(|&j| p[j] > p[i - 1])
            .expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}
