//! Dense symmetric eigensolvers and random-ensemble sampling.
//!
//! [`eigh`] reduces the matrix to tridiagonal form with Householder
//! reflections and diagonalises it with the implicit QL algorithm (Wilkinson
//! shifts). [`eigh_jacobi`] is an independent cyclic Jacobi solver used as a
//! reference for small matrices. Eigenvalues are always returned in
//! descending order, so index 0 is the largest eigenvalue.

use rand_distr::{Distribution, StandardNormal};

use crate::{rng, stats, Error, Result};

/// A dense real symmetric matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymmetricMatrix {
    /// Wraps row-major `entries`; symmetry must hold exactly.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("dimension {dim} < 2")));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidArgument(format!("{} entries for a {dim}x{dim} matrix", entries.len())));
        }
        for i in 0..dim {
            for j in 0..i {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite entry at ({}, {})", k / dim, k % dim)));
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from its upper triangle, mirroring it into the lower one.
    pub fn from_upper(dim: usize, mut entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidArgument("entry count does not match dimension".into()));
        }
        for i in 0..dim {
            for j in 0..i {
                entries[i * dim + j] = entries[j * dim + i];
            }
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut e = vec![0.0; dim * dim];
        for i in 0..dim {
            e[i * dim + i] = 1.0;
        }
        Self::new(dim, e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub source_dim: usize,
}

impl SpectralDecomposition {
    /// Σ_μ x_μ u_μ u_μᵀ in row-major storage.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.source_dim;
        let mut out = vec![0.0; n * n];
        for (x, u) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..n {
                let s = x * u[i];
                axpy(s, u, &mut out[i * n..(i + 1) * n]);
            }
        }
        out
    }

    /// max_{μν} |⟨u_μ, u_ν⟩ − δ_μν|.
    pub fn orthogonality_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for (a, u) in self.eigenvectors.iter().enumerate() {
            for (b, v) in self.eigenvectors.iter().enumerate().skip(a) {
                let target = if a == b { 1.0 } else { 0.0 };
                err = err.max((dot(u, v) - target).abs());
            }
        }
        err
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Householder reduction A = Q T Qᵀ with T tridiagonal.
struct Tridiagonal {
    diag: Vec<f64>,
    /// off[i] couples rows i and i+1; the last entry is zero.
    off: Vec<f64>,
    /// Reflector k acts on indices k+1..n as I − β v vᵀ.
    reflectors: Vec<(f64, Vec<f64>)>,
}

impl Tridiagonal {
    fn reduce(m: &SymmetricMatrix) -> Self {
        let n = m.dim;
        let mut a = m.entries.clone();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut p = vec![0.0; n];
        for k in 0..n - 1 {
            diag[k] = a[k * n + k];
            let start = k + 1;
            let len = n - start;
            // column k below the diagonal equals row k right of it
            let mut v: Vec<f64> = a[k * n + start..(k + 1) * n].to_vec();
            if len == 1 {
                off[k] = v[0];
                continue;
            }
            let scale = v.iter().fold(0.0f64, |s, x| s.max(x.abs()));
            if scale == 0.0 {
                off[k] = 0.0;
                reflectors.push((0.0, v));
                continue;
            }
            let norm = scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt();
            let alpha = if v[0] > 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vtv = dot(&v, &v);
            let beta = 2.0 / vtv;
            off[k] = alpha;
            // trailing update B ← H B H with H = I − β v vᵀ
            let pv = &mut p[..len];
            for (i, pi) in pv.iter_mut().enumerate() {
                let row = &a[(start + i) * n + start..(start + i + 1) * n];
                *pi = beta * dot(row, &v);
            }
            let kcoef = 0.5 * beta * dot(pv, &v);
            for i in 0..len {
                pv[i] -= kcoef * v[i];
            }
            for i in 0..len {
                let (vi, wi) = (v[i], pv[i]);
                let row = &mut a[(start + i) * n + start..(start + i + 1) * n];
                for ((r, &vj), &wj) in row.iter_mut().zip(&v).zip(pv.iter()) {
                    *r -= vi * wj + wi * vj;
                }
            }
            reflectors.push((beta, v));
        }
        diag[n - 1] = a[n * n - 1];
        off[n - 1] = 0.0;
        Tridiagonal { diag, off, reflectors }
    }

    /// y ← Q y.
    fn apply_q(&self, y: &mut [f64]) {
        for (k, (beta, v)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let tail = &mut y[k + 1..];
            let s = beta * dot(v, tail);
            axpy(-s, v, tail);
        }
    }
}

const QL_MAX_ITER: usize = 60;

/// Implicit QL on (d, e). When `vectors` is given, row i holds the i-th
/// eigenvector of T on exit (rotations act on pairs of rows).
fn tql(d: &mut [f64], e: &mut [f64], mut vectors: Option<&mut [Vec<f64>]>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::NoConvergence { iterations: iter, residual: e[l].abs() });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = vectors.as_deref_mut() {
                        let (lo, hi) = v.split_at_mut(i + 1);
                        let (vi, vi1) = (&mut lo[i], &mut hi[0]);
                        for (x, y) in vi.iter_mut().zip(vi1.iter_mut()) {
                            let h = *y;
                            *y = s * *x + c * h;
                            *x = c * *x - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Full eigendecomposition with descending eigenvalues.
pub fn eigh(m: &SymmetricMatrix) -> Result<SpectralDecomposition> {
    let n = m.dim;
    let tri = Tridiagonal::reduce(m);
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    tql(&mut d, &mut e, Some(&mut rows))?;
    let order = descending_order(&d);
    let mut vectors = Vec::with_capacity(n);
    for &j in &order {
        let mut y = std::mem::take(&mut rows[j]);
        tri.apply_q(&mut y);
        vectors.push(y);
    }
    Ok(SpectralDecomposition { eigenvalues: order.iter().map(|&j| d[j]).collect(), eigenvectors: vectors, source_dim: n })
}

/// Eigenvalues only, descending.
pub fn eigvalsh(m: &SymmetricMatrix) -> Vec<f64> {
    try_eigvalsh(m).expect("implicit QL failed to converge")
}

/// Eigenvalues only, descending, reporting non-convergence.
pub fn try_eigvalsh(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    let tri = Tridiagonal::reduce(m);
    let mut d = tri.diag;
    let mut e = tri.off;
    tql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// All eigenvalues (descending) together with the eigenvectors of the
/// requested descending-order indices only, obtained by inverse iteration on
/// the tridiagonal form. Much cheaper than [`eigh`] for large matrices.
pub fn eigh_selected(m: &SymmetricMatrix, which: &[usize]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.dim;
    if let Some(&bad) = which.iter().find(|&&w| w >= n) {
        return Err(Error::InvalidArgument(format!("eigenvector index {bad} out of range for dimension {n}")));
    }
    let tri = Tridiagonal::reduce(m);
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    tql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| b.total_cmp(a));
    let norm = tri.diag.iter().zip(&tri.off).fold(0.0f64, |s, (a, b)| s.max(a.abs() + 2.0 * b.abs()));
    let mut vectors = Vec::with_capacity(which.len());
    for &w in which {
        let shift = d[w] + 4.0 * f64::EPSILON * norm.max(f64::MIN_POSITIVE);
        let mut y = vec![1.0 / (n as f64).sqrt(); n];
        // alternate signs so the start vector is not orthogonal to smooth modes
        for (i, v) in y.iter_mut().enumerate() {
            if i % 3 == 1 {
                *v = -*v;
            }
        }
        for _ in 0..3 {
            tridiagonal_solve(&tri.diag, &tri.off, shift, &mut y);
            let nrm = dot(&y, &y).sqrt();
            y.iter_mut().for_each(|v| *v /= nrm);
        }
        tri.apply_q(&mut y);
        let nrm = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        vectors.push(y);
    }
    Ok((d, vectors))
}

/// Solves (T − σI) x = rhs in place by Gaussian elimination with partial
/// pivoting; zero pivots are replaced by a tiny value (inverse iteration).
fn tridiagonal_solve(diag: &[f64], off: &[f64], sigma: f64, rhs: &mut [f64]) {
    let n = diag.len();
    let tiny = f64::EPSILON * diag.iter().fold(1e-300f64, |s, v| s.max(v.abs()));
    let mut u = vec![[0.0f64; 3]; n];
    let mut piv = (diag[0] - sigma, off[0], 0.0);
    for i in 0..n - 1 {
        let mut next = (off[i], diag[i + 1] - sigma, if i + 2 < n { off[i + 1] } else { 0.0 });
        if next.0.abs() > piv.0.abs() {
            std::mem::swap(&mut piv, &mut next);
            rhs.swap(i, i + 1);
        }
        if piv.0 == 0.0 {
            piv.0 = tiny;
        }
        let mult = next.0 / piv.0;
        u[i] = [piv.0, piv.1, piv.2];
        rhs[i + 1] -= mult * rhs[i];
        piv = (next.1 - mult * piv.1, next.2 - mult * piv.2, 0.0);
    }
    if piv.0 == 0.0 {
        piv.0 = tiny;
    }
    u[n - 1] = [piv.0, 0.0, 0.0];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u[i][1] * rhs[i + 1];
        }
        if i + 2 < n {
            s -= u[i][2] * rhs[i + 2];
        }
        rhs[i] = s / u[i][0];
    }
}

/// Cyclic Jacobi eigensolver; reference implementation for small matrices.
pub fn eigh_jacobi(m: &SymmetricMatrix) -> Result<SpectralDecomposition> {
    const MAX_SWEEPS: usize = 100;
    let n = m.dim;
    let mut a = m.entries.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    loop {
        let residual = off_norm(&a);
        if residual <= 1e-15 * scale * n as f64 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { iterations: sweeps, residual });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let order = descending_order(&values);
    Ok(SpectralDecomposition {
        eigenvalues: order.iter().map(|&j| values[j]).collect(),
        eigenvectors: order.iter().map(|&j| (0..n).map(|k| v[k * n + j]).collect()).collect(),
        source_dim: n,
    })
}

/// Samples Z = XᵀX/p where X is p×n with i.i.d. N(0, σ²) entries.
pub fn sample_wishart(n: usize, p: usize, sigma: f64, seed: u64) -> Result<SymmetricMatrix> {
    if n < 2 || p < 2 {
        return Err(Error::InvalidArgument(format!("Wishart needs n, p >= 2 (got n={n}, p={p})")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let mut r = rng::stream(seed, &[]);
    // column-major X: each variable's p observations are contiguous
    let mut xt = vec![0.0; n * p];
    for obs in 0..p {
        for var in 0..n {
            let z: f64 = StandardNormal.sample(&mut r);
            xt[var * p + obs] = sigma * z;
        }
    }
    let mut z = gram_upper(&xt, n, p);
    let inv = 1.0 / p as f64;
    z.iter_mut().for_each(|v| *v *= inv);
    SymmetricMatrix::from_upper(n, z)
}

/// Upper triangle of rows·rowsᵀ for an n×len row-major block, tiled over the
/// inner dimension so the working set stays cache resident.
pub(crate) fn gram_upper(rows: &[f64], n: usize, len: usize) -> Vec<f64> {
    const KC: usize = 512;
    let mut out = vec![0.0; n * n];
    let mut k0 = 0;
    while k0 < len {
        let k1 = (k0 + KC).min(len);
        for i in 0..n {
            let ri = &rows[i * len + k0..i * len + k1];
            for j in i..n {
                let rj = &rows[j * len + k0..j * len + k1];
                out[i * n + j] += dot(ri, rj);
            }
        }
        k0 = k1;
    }
    out
}

/// Kolmogorov–Smirnov distance between the components of a unit vector and
/// the Porter–Thomas law N(0, 1/n).
pub fn porter_thomas_gof(components: &[f64], n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("dimension {n} < 2")));
    }
    if components.is_empty() {
        return Err(Error::InvalidArgument("no components".into()));
    }
    let s = (n as f64).sqrt();
    Ok(stats::ks_statistic(components, |u| 0.5 * libm::erfc(-u * s / std::f64::consts::SQRT_2)))
}
