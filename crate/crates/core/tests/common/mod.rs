//! Oracles shared by the integration tests. Nothing here calls into the
//! library's numerics beyond its matrix type.
#![allow(dead_code)]

use entbath::linalg::{CMat, C64};
use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use proptest::prelude::*;

/// Free-fermion free energy per site of `Sz Sz - (h/2)(Sx + Sx)` at h = 0.5.
/// Jordan-Wigner gives single-particle energies |cos(k/2)|; the k integral
/// is even, so the midpoint rule on (0, π) with 20000 nodes covers it.
pub fn free_fermion_f(t: f64) -> f64 {
    let n = 20_000;
    let sum: f64 = (0..n)
        .map(|i| {
            let k = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            let e = (0.5 * k).cos().abs();
            let x = e / (2.0 * t);
            // ln(2 cosh x) without overflow
            x + (1.0 + (-2.0 * x).exp()).ln()
        })
        .sum();
    -t * sum / n as f64
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    Array2::from_shape_fn((ra * rb, ca * cb), |(i, j)| a[[i / rb, j / cb]] * b[[i % rb, j % cb]])
}

pub fn eye(n: usize) -> CMat {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn naive_hamiltonian(dims: &[usize], bonds: &[(usize, CMat, f64)], fields: &[(usize, CMat)]) -> CMat {
    let total: usize = dims.iter().product();
    let mut h = CMat::zeros((total, total));
    let embed = |site: usize, op: &CMat, width: usize| {
        let left: usize = dims[..site].iter().product();
        let right: usize = dims[site + width..].iter().product();
        kron(&kron(&eye(left), op), &eye(right))
    };
    for (s, m, j) in bonds {
        h = h + embed(*s, m, 2).mapv(|z| z * *j);
    }
    for (s, m) in fields {
        h = h + embed(*s, m, 1);
    }
    h
}

/// exp(-H/T)/Z by a shifted Taylor series and repeated squaring.
pub fn naive_gibbs(h: &CMat, t: f64) -> CMat {
    let n = h.nrows();
    let bound = (0..n).map(|i| h[[i, i]].re - (0..n).filter(|&j| j != i).map(|j| h[[i, j]].norm()).sum::<f64>());
    let shift = bound.fold(f64::INFINITY, f64::min);
    let a = (h - &eye(n).mapv(|z| z * shift)).mapv(|z| -z / t);
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let a = a.mapv(|z| z / 2f64.powi(squarings));
    let mut term = eye(n);
    let mut e = eye(n);
    for k in 1..30 {
        term = term.dot(&a).mapv(|z| z / k as f64);
        e = e + &term;
    }
    for _ in 0..squarings {
        e = e.dot(&e);
        let tr: f64 = (0..n).map(|i| e[[i, i]].re).sum();
        e.mapv_inplace(|z| z / tr);
    }
    let tr: f64 = (0..n).map(|i| e[[i, i]].re).sum();
    e.mapv(|z| z / tr)
}

pub fn naive_partial_trace(rho: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let n = dims.len();
    let digits = |mut x: usize| {
        let mut d = vec![0; n];
        for s in (0..n).rev() {
            d[s] = x % dims[s];
            x /= dims[s];
        }
        d
    };
    let kdim: usize = keep.iter().map(|&s| dims[s]).product();
    let index = |d: &[usize]| keep.iter().fold(0, |acc, &s| acc * dims[s] + d[s]);
    let mut out = CMat::zeros((kdim, kdim));
    let total = rho.nrows();
    for i in 0..total {
        let di = digits(i);
        for j in 0..total {
            let dj = digits(j);
            if (0..n).all(|s| keep.contains(&s) || di[s] == dj[s]) {
                out[[index(&di), index(&dj)]] += rho[[i, j]];
            }
        }
    }
    out
}

pub fn naive_entropy(rho: &CMat) -> f64 {
    let (w, _) = rho.eigh(UPLO::Lower).unwrap();
    w.iter().filter(|&&p| p > 1e-14).map(|&p| -p * p.ln()).sum()
}

pub fn random_hermitian(d: usize, seed: &[f64]) -> CMat {
    let mut m = CMat::zeros((d, d));
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            let re = seed[k % seed.len()];
            let im = if i == j { 0.0 } else { seed[(k + 7) % seed.len()] };
            m[[i, j]] = C64::new(re, im);
            m[[j, i]] = C64::new(re, -im);
            k += 1;
        }
    }
    m
}

pub fn chain_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<f64>, f64, Vec<bool>)> {
    prop::collection::vec(prop::sample::select(vec![2usize, 3]), 1..=5)
        .prop_filter("dimension <= 256", |d| d.iter().product::<usize>() <= 256)
        .prop_flat_map(|dims| {
            let n = dims.len();
            (
                Just(dims),
                prop::collection::vec(-1.0f64..1.0, 24),
                0.2f64..10.0,
                prop::collection::vec(any::<bool>(), n),
            )
        })
}


/// Library pipeline against the naive one on a random chain; returns the
/// largest deviation over H, rho, the reduced state and its entropy.
pub fn compare_pipelines(dims: &[usize], seed: &[f64], t: f64, mask: &[bool]) -> f64 {
    use entbath::exact::{self, ChainSpec};
    let n = dims.len();
    let mut keep: Vec<usize> = (0..n).filter(|&s| mask[s]).collect();
    if keep.is_empty() {
        keep.push(0);
    }
    let mut bonds = Vec::new();
    let mut fields = Vec::new();
    let mut spec = ChainSpec::new(dims.to_vec());
    for s in 0..n.saturating_sub(1) {
        let m = random_hermitian(dims[s] * dims[s + 1], &seed[s..]);
        let j = 0.5 + seed[s].abs();
        spec.add_bond(s, m.clone(), j);
        bonds.push((s, m, j));
    }
    for s in 0..n {
        let m = random_hermitian(dims[s], &seed[(3 * s + 1)..]);
        spec.add_field(s, m.clone());
        fields.push((s, m));
    }
    let h = exact::build_hamiltonian(&spec).unwrap();
    let h_naive = naive_hamiltonian(dims, &bonds, &fields);
    let state = exact::thermal_state(&h, dims, t).unwrap();
    let rho_naive = naive_gibbs(&h_naive, t);
    let rdm = state.partial_trace(&keep).unwrap();
    let rdm_naive = naive_partial_trace(&rho_naive, dims, &keep);
    let s = exact::von_neumann_entropy(&rdm).unwrap();
    let max_abs = entbath::linalg::max_abs;
    [
        max_abs(&(&h - &h_naive)),
        max_abs(&(state.density_matrix() - &rho_naive)),
        max_abs(&(&rdm.matrix - &rdm_naive)),
        (s - naive_entropy(&rdm_naive)).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
