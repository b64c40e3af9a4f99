//! Compressed sparse rows with an ILU(0)-preconditioned BiCGSTAB solver and
//! two fallbacks: SOR, or a banded LU factorization that exploits the
//! ring-by-ring unknown ordering of the polar grid. All reductions run in a
//! fixed order, so results are bitwise reproducible.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

/// Row-by-row assembly; duplicate entries within a row are summed.
#[derive(Debug, Clone, Default)]
pub struct CsrBuilder {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
    row: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        CsrBuilder { n, indptr: vec![0], ..Default::default() }
    }

    pub fn add(&mut self, col: usize, v: f64) {
        debug_assert!(col < self.n);
        self.row.push((col, v));
    }

    pub fn finish_row(&mut self) {
        self.row.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < self.row.len() {
            let c = self.row[k].0;
            let mut v = 0.0;
            while k < self.row.len() && self.row[k].0 == c {
                v += self.row[k].1;
                k += 1;
            }
            self.indices.push(c);
            self.data.push(v);
        }
        self.row.clear();
        self.indptr.push(self.indices.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.indptr.len(), self.n + 1, "every row must be finished");
        CsrMatrix { n: self.n, indptr: self.indptr, indices: self.indices, data: self.data }
    }
}

impl CsrMatrix {
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).1.iter().map(|v| math::abs(*v)).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        self.matvec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| f64::max(m, math::abs(*v)))
}

/// Normwise backward error `||b - Ax|| / (||A|| ||x|| + ||b||)` in the max
/// norm. Unlike `||r|| / ||b||` it stays attainable when `A` mixes Dirichlet
/// rows with badly scaled difference rows.
pub fn backward_error(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let den = a.norm_inf() * norm_inf(x) + norm_inf(b);
    norm_inf(&a.residual(x, b)) / den.max(f64::MIN_POSITIVE)
}

/// Incomplete LU factorization restricted to the sparsity pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self, Error> {
        let mut lu = a.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            let (a0, a1) = (lu.indptr[i], lu.indptr[i + 1]);
            if let Ok(k) = lu.indices[a0..a1].binary_search(&i) {
                diag[i] = a0 + k;
            }
            if diag[i] == usize::MAX {
                return Err(Error::LinearSolve { residuals: Vec::new() });
            }
        }
        // Position map of the current row, reused across rows.
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (a0, a1) = (lu.indptr[i], lu.indptr[i + 1]);
            for k in a0..a1 {
                pos[lu.indices[k]] = k;
            }
            for k in a0..a1 {
                let c = lu.indices[k];
                if c >= i {
                    break;
                }
                let piv = lu.data[diag[c]];
                let l = lu.data[k] / piv;
                lu.data[k] = l;
                for kk in diag[c] + 1..lu.indptr[c + 1] {
                    let cc = lu.indices[kk];
                    let p = pos[cc];
                    if p != usize::MAX {
                        lu.data[p] -= l * lu.data[kk];
                    }
                }
            }
            for k in a0..a1 {
                pos[lu.indices[k]] = usize::MAX;
            }
            let d = lu.data[diag[i]];
            if d == 0.0 || !d.is_finite() {
                lu.data[diag[i]] = if d == 0.0 { 1e-14 } else { 1.0 };
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n;
        for i in 0..n {
            let mut acc = r[i];
            for k in self.lu.indptr[i]..self.diag[i] {
                acc -= self.lu.data[k] * z[self.lu.indices[k]];
            }
            z[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for k in self.diag[i] + 1..self.lu.indptr[i + 1] {
                acc -= self.lu.data[k] * z[self.lu.indices[k]];
            }
            z[i] = acc / self.lu.data[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Krylov stopping target on `||r|| / ||b||`; a result is accepted once
    /// its [`backward_error`] is below the same value.
    pub tol: f64,
    pub max_iter: usize,
    /// BiCGSTAB restarts from the current iterate before falling back.
    pub restarts: usize,
    pub fallback: Fallback,
    pub sor_omega: f64,
    pub sor_max_iter: usize,
}

/// What to do when the Krylov iteration stalls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    Sor,
    /// Direct banded LU with partial pivoting.
    BandedLu,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 1000,
            restarts: 1,
            fallback: Fallback::BandedLu,
            sor_omega: 1.5,
            sor_max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    /// See [`backward_error`].
    pub backward_error: f64,
    pub used_fallback: bool,
}

/// Right-preconditioned BiCGSTAB. Returns the residual history on failure.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    pre: &Ilu0,
    tol: f64,
    max_iter: usize,
) -> Result<usize, Vec<f64>> {
    let n = a.n;
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = a.residual(x, b);
    let mut history = vec![norm(&r) / bnorm];
    if history[0] <= tol {
        return Ok(0);
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return Err(history);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        pre.apply(&p, &mut y);
        a.matvec(&y, &mut v);
        let den = dot(&r0, &v);
        if den == 0.0 || !den.is_finite() {
            return Err(history);
        }
        alpha = rho / den;
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        if norm(&s) / bnorm <= tol {
            for k in 0..n {
                x[k] += alpha * y[k];
            }
            return Ok(it);
        }
        pre.apply(&s, &mut z);
        a.matvec(&z, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(history);
        }
        omega = dot(&t, &s) / tt;
        for k in 0..n {
            x[k] += alpha * y[k] + omega * z[k];
            r[k] = s[k] - omega * t[k];
        }
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if !rel.is_finite() {
            return Err(history);
        }
        if rel <= tol {
            return Ok(it);
        }
        if omega == 0.0 {
            return Err(history);
        }
    }
    Err(history)
}

/// Successive over-relaxation sweeps in natural ordering.
pub fn sor(a: &CsrMatrix, b: &[f64], x: &mut [f64], omega: f64, tol: f64, max_iter: usize) -> Result<usize, Vec<f64>> {
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut history = Vec::new();
    for it in 1..=max_iter {
        for i in 0..a.n {
            let (cols, vals) = a.row(i);
            let mut acc = b[i];
            let mut d = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                if *c == i {
                    d = *v;
                } else {
                    acc -= v * x[*c];
                }
            }
            if d == 0.0 {
                return Err(history);
            }
            x[i] += omega * (acc / d - x[i]);
        }
        if it % 10 == 0 || it == max_iter {
            let rel = norm(&a.residual(x, b)) / bnorm;
            history.push(rel);
            if !rel.is_finite() {
                return Err(history);
            }
            if rel <= tol {
                return Ok(it);
            }
        }
    }
    Err(history)
}

/// Solves `A x = b` starting from `x`, first with ILU(0)-BiCGSTAB and, if
/// that stalls, with the configured fallback from the original starting point.
pub fn solve(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &SolveOptions) -> Result<SolveInfo, Error> {
    let x0 = x.to_vec();
    let mut history = Vec::new();
    if let Ok(pre) = Ilu0::new(a) {
        let mut total = 0;
        for _ in 0..=opts.restarts {
            match bicgstab(a, b, x, &pre, opts.tol, opts.max_iter) {
                Ok(it) => {
                    total += it;
                    let rel = backward_error(a, x, b);
                    if rel <= opts.tol {
                        return Ok(SolveInfo { iterations: total, backward_error: rel, used_fallback: false });
                    }
                    history.push(rel);
                }
                Err(h) => {
                    total += h.len();
                    history.extend(h);
                    if !x.iter().all(|v| v.is_finite()) {
                        break;
                    }
                }
            }
        }
    }
    x.copy_from_slice(&x0);
    match opts.fallback {
        Fallback::Sor => match sor(a, b, x, opts.sor_omega, opts.tol, opts.sor_max_iter) {
            Ok(it) => {
                let rel = backward_error(a, x, b);
                Ok(SolveInfo { iterations: it, backward_error: rel, used_fallback: true })
            }
            Err(h) => {
                history.extend(h);
                Err(Error::LinearSolve { residuals: history })
            }
        },
        Fallback::BandedLu => {
            let lu = BandLu::new(a).ok_or_else(|| Error::LinearSolve { residuals: history.clone() })?;
            lu.solve(b, x);
            let rel = backward_error(a, x, b);
            if !rel.is_finite() {
                history.push(rel);
                return Err(Error::LinearSolve { residuals: history });
            }
            Ok(SolveInfo { iterations: 0, backward_error: rel, used_fallback: true })
        }
    }
}

/// LU factors of a banded matrix with row pivoting. Row `i` stores columns
/// `i - kl ..= i + kl + ku`; the extra `kl` upper diagonals hold pivoting fill.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    /// Factors `a`; `None` if it is numerically singular.
    pub fn new(a: &CsrMatrix) -> Option<Self> {
        let n = a.n;
        let (mut kl, mut ku) = (0, 0);
        for i in 0..n {
            for &c in a.row(i).0 {
                kl = kl.max(i.saturating_sub(c));
                ku = ku.max(c.saturating_sub(i));
            }
        }
        let w = 2 * kl + ku + 1;
        let mut lu = BandLu { n, kl, ku, w, a: vec![0.0; n * w], piv: vec![0; n] };
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = lu.slot(i, c);
                lu.a[k] = v;
            }
        }
        let span = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = math::abs(lu.a[lu.slot(k, k)]);
            for i in k + 1..=last_row {
                let v = math::abs(lu.a[lu.slot(i, k)]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) {
                return None;
            }
            lu.piv[k] = p;
            let last_col = (k + span).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let (x, y) = (lu.slot(k, c), lu.slot(p, c));
                    lu.a.swap(x, y);
                }
            }
            let d = lu.a[lu.slot(k, k)];
            for i in k + 1..=last_row {
                let ik = lu.slot(i, k);
                let l = lu.a[ik] / d;
                lu.a[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for c in k + 1..=last_col {
                    let (x, y) = (lu.slot(i, c), lu.slot(k, c));
                    lu.a[x] -= l * lu.a[y];
                }
            }
        }
        Some(lu)
    }

    #[inline]
    fn slot(&self, i: usize, c: usize) -> usize {
        i * self.w + (c + self.kl - i)
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        x.copy_from_slice(b);
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                x[i] -= self.a[self.slot(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                acc -= self.a[self.slot(k, c)] * x[c];
            }
            x[k] = acc / self.a[self.slot(k, k)];
        }
    }
}
