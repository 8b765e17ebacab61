//! Dense linear-algebra helpers shared by the exact and tensor-network code.
//!
//! Hermitian eigendecompositions go straight to the divide-and-conquer LAPACK
//! drivers (`dsyevd`/`zheevd`); real-valued input takes the real path, and
//! matrices whose sparsity pattern splits into disconnected blocks are
//! diagonalized block by block.

use ndarray::{s, Array1, Array2, ArrayView2, ShapeBuilder};
use ndarray_linalg::{Eig, EigVals, SVD};
use num_complex::Complex64;
use std::os::raw::c_char;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Dense complex matrix, row-major.
pub type CMat = Array2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMat {
    CMat::eye(n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros((n, n))
}

pub fn real(m: &Array2<f64>) -> CMat {
    m.mapv(|x| C64::new(x, 0.0))
}

pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Kronecker product `a ⊗ b`; the first factor is the slow index.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMat::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            let mut blk = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            blk.zip_mut_with(b, |o, &x| *o = aij * x);
        }
    }
    out
}

pub fn trace(m: &CMat) -> C64 {
    m.diag().sum()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest elementwise deviation `|m - m†|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    if m.ncols() != n {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// `(m + m†) / 2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + &dagger(m)).mapv(|z| z * 0.5)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are returned in ascending order and eigenvectors as the
/// columns of a unitary matrix. Fails on input whose Hermiticity defect is
/// above `1e-10` relative to its largest entry.
pub fn eigh(m: &CMat) -> Result<(Array1<f64>, CMat)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidDimension(format!("{}x{} is not square", n, m.ncols())));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), CMat::zeros((0, 0))));
    }
    let defect = hermiticity_defect(m);
    if defect > 1e-10 * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    if n >= CENTRO_MIN_DIM && is_centrosymmetric(m) {
        return eigh_centrosymmetric(m);
    }
    let blocks = connected_blocks(m);
    if blocks.len() == 1 {
        return eigh_dense(m);
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
    let mut solved = Vec::with_capacity(blocks.len());
    for (b, idx) in blocks.iter().enumerate() {
        let sub = CMat::from_shape_fn((idx.len(), idx.len()), |(i, j)| m[[idx[i], idx[j]]]);
        let (w, v) = eigh_dense(&sub)?;
        for (k, &wk) in w.iter().enumerate() {
            pairs.push((wk, b, k));
        }
        solved.push(v);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vals = Array1::zeros(n);
    let mut vecs = CMat::zeros((n, n));
    for (col, &(w, b, k)) in pairs.iter().enumerate() {
        vals[col] = w;
        for (i, &row) in blocks[b].iter().enumerate() {
            vecs[[row, col]] = solved[b][[i, k]];
        }
    }
    Ok((vals, vecs))
}

const CENTRO_MIN_DIM: usize = 64;

/// `m[i][j] == m[n-1-i][n-1-j]`: invariance under reversing every local
/// index, which is the global spin flip for product bases.
fn is_centrosymmetric(m: &CMat) -> bool {
    let n = m.nrows();
    if n % 2 == 1 {
        return false;
    }
    let tol = 1e-14 * max_abs(m).max(1.0);
    (0..n).all(|i| (0..n).all(|j| (m[[i, j]] - m[[n - 1 - i, n - 1 - j]]).norm() <= tol))
}

/// Splits into the even and odd sectors `(e_i ± e_{n-1-i})/√2`.
fn eigh_centrosymmetric(m: &CMat) -> Result<(Array1<f64>, CMat)> {
    let n = m.nrows();
    let h = n / 2;
    let even = CMat::from_shape_fn((h, h), |(i, j)| m[[i, j]] + m[[i, n - 1 - j]]);
    let odd = CMat::from_shape_fn((h, h), |(i, j)| m[[i, j]] - m[[i, n - 1 - j]]);
    let (we, ve) = eigh(&hermitize(&even))?;
    let (wo, vo) = eigh(&hermitize(&odd))?;
    let mut order: Vec<(f64, bool, usize)> =
        we.iter().enumerate().map(|(k, &w)| (w, true, k)).chain(wo.iter().enumerate().map(|(k, &w)| (w, false, k))).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut vals = Array1::zeros(n);
    let mut vecs = CMat::zeros((n, n));
    for (col, &(w, is_even, k)) in order.iter().enumerate() {
        vals[col] = w;
        let (v, sign) = if is_even { (&ve, r) } else { (&vo, -r) };
        for i in 0..h {
            vecs[[i, col]] = v[[i, k]] * r;
            vecs[[n - 1 - i, col]] = v[[i, k]] * sign;
        }
    }
    Ok((vals, vecs))
}

/// Groups basis states into the connected components of the graph whose
/// edges are the nonzero off-diagonal entries.
fn connected_blocks(m: &CMat) -> Vec<Vec<usize>> {
    let n = m.nrows();
    if n < 32 {
        return vec![(0..n).collect()];
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[[i, j]] != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn eigh_dense(m: &CMat) -> Result<(Array1<f64>, CMat)> {
    if is_real(m) {
        let re = m.mapv(|z| z.re);
        let (w, v) = dsyevd(re.view())?;
        Ok((w, real(&v)))
    } else {
        zheevd(m)
    }
}

/// Real symmetric eigendecomposition through `dsyevd`.
pub fn dsyevd(m: ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = m.nrows();
    let mut a = Array2::<f64>::zeros((n, n).f());
    a.assign(&m);
    let mut w = vec![0.0; n];
    let ni = n as i32;
    let mut info = 0;
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let mut wq = [0.0f64];
    let mut iwq = [0i32];
    let query = -1;
    unsafe {
        lapack_sys::dsyevd_(
            &jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), wq.as_mut_ptr(), &query,
            iwq.as_mut_ptr(), &query, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    let lwork = wq[0] as i32;
    let liwork = iwq[0];
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(), &lwork,
            iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    Ok((Array1::from(w), a.as_standard_layout().into_owned()))
}

fn zheevd(m: &CMat) -> Result<(Array1<f64>, CMat)> {
    let n = m.nrows();
    let mut a = CMat::zeros((n, n).f());
    a.assign(m);
    let mut w = vec![0.0; n];
    let ni = n as i32;
    let mut info = 0;
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let mut wq = [ZERO];
    let mut rwq = [0.0f64];
    let mut iwq = [0i32];
    let query = -1;
    unsafe {
        lapack_sys::zheevd_(
            &jobz, &uplo, &ni, a.as_mut_ptr() as *mut _, &ni, w.as_mut_ptr(),
            wq.as_mut_ptr() as *mut _, &query, rwq.as_mut_ptr(), &query, iwq.as_mut_ptr(), &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    let lwork = wq[0].re as i32;
    let lrwork = rwq[0] as i32;
    let liwork = iwq[0];
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &jobz, &uplo, &ni, a.as_mut_ptr() as *mut _, &ni, w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _, &lwork, rwork.as_mut_ptr(), &lrwork,
            iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    Ok((Array1::from(w), a.as_standard_layout().into_owned()))
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (w, v) = eigh(m)?;
    Ok(reconstruct(&w.mapv(f), &v))
}

/// `v · diag(w) · v†`.
pub fn reconstruct(w: &Array1<f64>, v: &CMat) -> CMat {
    let mut scaled = v.clone();
    for (mut col, &wk) in scaled.columns_mut().into_iter().zip(w.iter()) {
        col.mapv_inplace(|z| z * wk);
    }
    scaled.dot(&dagger(v))
}

/// Thin SVD `m = u · diag(s) · vt`, singular values descending.
pub fn svd(m: &CMat) -> Result<(CMat, Array1<f64>, CMat)> {
    if is_real(m) {
        let re = m.mapv(|z| z.re);
        let (u, s, vt) = re.svd(true, true)?;
        let (u, vt) = (u.expect("u requested"), vt.expect("vt requested"));
        let k = s.len();
        return Ok((real(&u.slice(s![.., ..k]).to_owned()), s, real(&vt.slice(s![..k, ..]).to_owned())));
    }
    let (u, s, vt) = m.svd(true, true)?;
    let (u, vt) = (u.expect("u requested"), vt.expect("vt requested"));
    let k = s.len();
    Ok((u.slice(s![.., ..k]).to_owned(), s, vt.slice(s![..k, ..]).to_owned()))
}

/// Eigenvalues of a general square matrix.
pub fn eigvals(m: &CMat) -> Result<Vec<C64>> {
    if is_real(m) {
        let re = m.mapv(|z| z.re);
        return Ok(re.eigvals()?.to_vec());
    }
    Ok(m.eigvals()?.to_vec())
}

/// Eigenvalues and right eigenvectors (columns) of a general square matrix.
pub fn eig(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let (w, v) = m.eig()?;
    Ok((w.to_vec(), v))
}

/// Explicitly restarted Arnoldi iteration for the largest-modulus eigenpair.
pub fn arnoldi_dominant(apply: impl Fn(&[C64]) -> Vec<C64>, mut v0: Vec<C64>, tol: f64) -> Result<(C64, Vec<C64>)> {
    let n = v0.len();
    let m = 40.min(n);
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut last = f64::NAN;
    for _restart in 0..200 {
        let nv = norm(&v0);
        v0.iter_mut().for_each(|z| *z /= nv);
        let mut basis = vec![v0.clone()];
        let mut h = CMat::zeros((m + 1, m));
        let mut dim = m;
        for j in 0..m {
            let mut w = apply(&basis[j]);
            for _pass in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c: C64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                    h[[i, j]] += c;
                    w.iter_mut().zip(b).for_each(|(y, x)| *y -= c * x);
                }
            }
            let nw = norm(&w);
            h[[j + 1, j]] = C64::new(nw, 0.0);
            if nw < 1e-13 {
                dim = j + 1;
                break;
            }
            w.iter_mut().for_each(|z| *z /= nw);
            basis.push(w);
        }
        let hm = h.slice(s![..dim, ..dim]).to_owned();
        let (vals, vecs) = eig(&hm)?;
        let (idx, top) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, v)| (i, *v))
            .ok_or_else(|| Error::Linalg("empty Ritz spectrum".into()))?;
        let y = vecs.column(idx);
        let mut ritz = vec![ZERO; n];
        for (i, b) in basis.iter().take(dim).enumerate() {
            ritz.iter_mut().zip(b).for_each(|(r, x)| *r += y[i] * x);
        }
        let residual = (h[[dim.min(m), dim - 1]] * y[dim - 1]).norm();
        if residual < tol * top.norm() || (top.re - last).abs() < 1e-15 * top.norm() {
            return Ok((top, ritz));
        }
        last = top.re;
        v0 = ritz;
    }
    Err(Error::Linalg("Arnoldi iteration did not converge".into()))
}

/// `ln Tr(m^k)` from the spectrum, stable for large `k`.
///
/// The trace of a power is dominated by the largest-modulus eigenvalues; the
/// result is complex in general and carries the phase of the sum.
pub fn log_trace_power(m: &CMat, k: usize) -> Result<C64> {
    let mu = eigvals(m)?;
    log_sum_powers(&mu, k)
}

pub fn log_sum_powers(mu: &[C64], k: usize) -> Result<C64> {
    let top = mu.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if top == 0.0 || !top.is_finite() {
        return Err(Error::Linalg(format!("degenerate transfer spectrum (max |mu| = {top})")));
    }
    let kf = k as f64;
    let sum: C64 = mu
        .iter()
        .filter(|z| z.norm() > 0.0)
        .map(|z| {
            let r = z / top;
            (r.ln() * kf).exp()
        })
        .sum();
    Ok(C64::new(kf * top.ln(), 0.0) + sum.ln())
}

/// Principal square root of a positive semidefinite Hermitian matrix; negative
/// eigenvalues from round-off are clipped to zero.
pub fn psd_sqrt(m: &CMat) -> Result<CMat> {
    hermitian_fn(&hermitize(m), |x| x.max(0.0).sqrt())
}
