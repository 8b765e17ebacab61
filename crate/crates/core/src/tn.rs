//! Trotterized thermal tensor network of an infinite translation-invariant
//! chain.
//!
//! Each bond gate `exp(-τ h)` is split by SVD into a left and a right factor,
//! `G = Σ_a V^L_a ⊗ V^R_a`. With first-order even/odd Trotterization the
//! network decomposes into identical two-site columns. One Trotter step of a
//! column is
//!
//! ```text
//! W[a, b] = (V^R_a ⊗ V^L_b) · G        (acting on the two sites of the cell)
//! ```
//!
//! where `a` (`b`) is the horizontal leg of the cut odd-layer gate on the left
//! (right) of the cell. The column transfer matrix over `K` steps is
//! `T(a_1..a_K; b_1..b_K) = Tr(W[a_1,b_1] ⋯ W[a_K,b_K])`, with `K·τ = 1/T′`.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::spin::BondHamiltonian;

/// Default Trotter slice.
pub const DEFAULT_TAU: f64 = 0.02;
/// Default cap on `r^K` for the exact column contraction.
pub const DEFAULT_ORACLE_CAP: usize = 65_536;
/// Relative singular-value cutoff when splitting gates.
const SPLIT_CUTOFF: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

/// `exp(-τ·h)` for one bond.
#[derive(Clone, Debug)]
pub struct TrotterGate {
    pub tau: f64,
    pub matrix: CMat,
    pub bond: BondHamiltonian,
}

pub fn trotter_gate(bond: &BondHamiltonian, tau: f64) -> Result<TrotterGate> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Tau(tau));
    }
    let matrix = linalg::hermitian_fn(&bond.matrix, |e| (-tau * e).exp())?;
    Ok(TrotterGate { tau, matrix, bond: bond.clone() })
}

/// One half of a split gate: a `d×d` operator for every value of the
/// horizontal leg.
#[derive(Clone, Debug)]
pub struct GateFactor {
    pub side: Side,
    pub ops: Vec<CMat>,
    pub singular_values: Array1<f64>,
}

impl GateFactor {
    pub fn rank(&self) -> usize {
        self.ops.len()
    }
}

/// SVD across the (left-site legs | right-site legs) bipartition, with the
/// singular values shared as `√σ` between the two factors.
pub fn split_gate(gate: &TrotterGate) -> Result<(GateFactor, GateFactor)> {
    let d = gate.bond.d;
    let g = &gate.matrix;
    // R[(s1 s1'), (s2 s2')] = G[(s1 s2), (s1' s2')]
    let reshuffled = CMat::from_shape_fn((d * d, d * d), |(row, col)| {
        let (s1, s1p) = (row / d, row % d);
        let (s2, s2p) = (col / d, col % d);
        g[[s1 * d + s2, s1p * d + s2p]]
    });
    let (u, s, vt) = linalg::svd(&reshuffled)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().take_while(|&&x| x > SPLIT_CUTOFF * smax).count().max(1);
    let mut left = Vec::with_capacity(rank);
    let mut right = Vec::with_capacity(rank);
    for a in 0..rank {
        let w = s[a].sqrt();
        left.push(CMat::from_shape_fn((d, d), |(x, y)| u[[x * d + y, a]] * w));
        right.push(CMat::from_shape_fn((d, d), |(x, y)| vt[[a, x * d + y]] * w));
    }
    let sv = s.slice(ndarray::s![..rank]).to_owned();
    Ok((
        GateFactor { side: Side::Left, ops: left, singular_values: sv.clone() },
        GateFactor { side: Side::Right, ops: right, singular_values: sv },
    ))
}

/// Recontracts `Σ_a V^L_a ⊗ V^R_a`.
pub fn recontract(left: &GateFactor, right: &GateFactor) -> CMat {
    let d = left.ops[0].nrows();
    let mut g = CMat::zeros((d * d, d * d));
    for (l, r) in left.ops.iter().zip(&right.ops) {
        g += &linalg::kron(l, r);
    }
    g
}

/// The temporal structure of the column transfer matrix at one `T′`.
#[derive(Clone, Debug)]
pub struct TransferMatrixSpec {
    /// Number of Trotter steps along imaginary time (even).
    pub k: usize,
    pub tau: f64,
    /// Requested environment temperature.
    pub t_prime: f64,
    /// `1/(K·τ)`, the temperature the network actually represents.
    pub t_prime_effective: f64,
    /// Set when rounding `K` moved the temperature by more than 1e-9 relative.
    pub deviation_flag: bool,
    pub bond: BondHamiltonian,
    pub gate: TrotterGate,
    pub left_factor: GateFactor,
    pub right_factor: GateFactor,
    /// `column[a][b] = (V^R_a ⊗ V^L_b)·G`, each `d²×d²`.
    pub column: Vec<Vec<CMat>>,
}

impl TransferMatrixSpec {
    /// Horizontal bond dimension.
    pub fn r(&self) -> usize {
        self.left_factor.rank()
    }

    /// Vertical dimension of one column step (two sites).
    pub fn vertical_dim(&self) -> usize {
        self.bond.d * self.bond.d
    }

    /// Sites covered by one column.
    pub const SITES_PER_COLUMN: usize = 2;

    /// Per-site free energy for a column eigenvalue `λ`.
    pub fn free_energy(&self, ln_lambda: f64) -> f64 {
        -self.t_prime_effective * ln_lambda / Self::SITES_PER_COLUMN as f64
    }

    /// Whether `T` is real symmetric, checked on the two-step column. Mirror
    /// symmetric real bonds give symmetric `T`, for which left and right
    /// boundaries coincide and `λ` is a Rayleigh-quotient maximum.
    pub fn is_symmetric(&self) -> bool {
        let real = self.column.iter().flatten().all(linalg::is_real);
        if !real || self.r() > 32 {
            return false;
        }
        let m = dense_column_matrix(&self.column, 2);
        let scale = linalg::max_abs(&m).max(1e-300);
        linalg::max_abs(&(&m - &m.t())) < 1e-12 * scale
    }

    /// The same network transposed: left and right legs exchanged, so that
    /// the right eigenvector of the result is the left eigenvector of `self`.
    pub fn transposed_column(&self) -> Vec<Vec<CMat>> {
        let r = self.r();
        (0..r).map(|b| (0..r).map(|a| self.column[a][b].clone()).collect()).collect()
    }
}

pub fn trotter_steps(t_prime: f64, tau: f64) -> Result<usize> {
    if !(t_prime > 0.0) || !t_prime.is_finite() {
        return Err(Error::Temperature(t_prime));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Tau(tau));
    }
    let raw = 1.0 / (tau * t_prime);
    let k = 2.0 * (raw / 2.0).round();
    if k < 2.0 {
        return Err(Error::TemperatureTooHigh { t_prime, tau, k: k as usize });
    }
    Ok(k as usize)
}

pub fn build_transfer_spec(bond: &BondHamiltonian, t_prime: f64, tau: f64) -> Result<TransferMatrixSpec> {
    let k = trotter_steps(t_prime, tau)?;
    let gate = trotter_gate(bond, tau)?;
    let (left_factor, right_factor) = split_gate(&gate)?;
    let r = left_factor.rank();
    let column = (0..r)
        .map(|a| {
            (0..r)
                .map(|b| linalg::kron(&right_factor.ops[a], &left_factor.ops[b]).dot(&gate.matrix))
                .collect()
        })
        .collect();
    let t_eff = 1.0 / (k as f64 * tau);
    Ok(TransferMatrixSpec {
        k,
        tau,
        t_prime,
        t_prime_effective: t_eff,
        deviation_flag: ((t_eff - t_prime) / t_prime).abs() > 1e-9,
        bond: bond.clone(),
        gate,
        left_factor,
        right_factor,
        column,
    })
}

/// Dominant eigenpair of the full column transfer matrix.
#[derive(Clone, Debug)]
pub struct ExactDominant {
    pub lambda: f64,
    /// Per-site free energy `-T′ ln λ / 2`.
    pub free_energy: f64,
    pub left: Vec<C64>,
    pub right: Vec<C64>,
}

/// `y = T x` for the column transfer matrix on `r^K`-dimensional vectors
/// (first horizontal leg slowest).
pub fn column_matvec(column: &[Vec<CMat>], k: usize, x: &[C64]) -> Vec<C64> {
    let r = column.len();
    let dv = column[0][0].nrows();
    let n = x.len();
    // y[p0, q, mixed] starts as δ(p0, q) x
    let mut cur = vec![ZERO; dv * dv * n];
    for p in 0..dv {
        let off = (p * dv + p) * n;
        cur[off..off + n].copy_from_slice(x);
    }
    let mut next = vec![ZERO; dv * dv * n];
    for step in 0..k {
        let post = r.pow((k - step - 1) as u32);
        let pre = n / (post * r);
        next.iter_mut().for_each(|z| *z = ZERO);
        for p0 in 0..dv {
            for q in 0..dv {
                let src = &cur[(p0 * dv + q) * n..(p0 * dv + q + 1) * n];
                if src.iter().all(|z| *z == ZERO) {
                    continue;
                }
                for a in 0..r {
                    for b in 0..r {
                        let w = &column[a][b];
                        for qp in 0..dv {
                            let coef = w[[q, qp]];
                            if coef == ZERO {
                                continue;
                            }
                            let dst = &mut next[(p0 * dv + qp) * n..(p0 * dv + qp + 1) * n];
                            for i in 0..pre {
                                let sbase = (i * r + b) * post;
                                let dbase = (i * r + a) * post;
                                for j in 0..post {
                                    dst[dbase + j] += coef * src[sbase + j];
                                }
                            }
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut y = vec![ZERO; n];
    for p in 0..dv {
        let blk = &cur[(p * dv + p) * n..(p * dv + p + 1) * n];
        for (yi, bi) in y.iter_mut().zip(blk) {
            *yi += bi;
        }
    }
    y
}

/// Dense column transfer matrix; intended for tiny `r^K`.
pub fn dense_column_matrix(column: &[Vec<CMat>], k: usize) -> CMat {
    let n = column.len().pow(k as u32);
    let mut m = CMat::zeros((n, n));
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        let y = column_matvec(column, k, &e);
        for i in 0..n {
            m[[i, j]] = y[i];
        }
        e[j] = ZERO;
    }
    m
}

/// Truncation-free dominant eigenpair of the column transfer matrix.
pub fn exact_dominant_eig(spec: &TransferMatrixSpec, cap: usize) -> Result<ExactDominant> {
    let r = spec.r();
    let n = (r as u128).pow(spec.k as u32);
    if n > cap as u128 {
        return Err(Error::Capacity { dim: n.min(usize::MAX as u128) as usize, cap });
    }
    let n = n as usize;
    let transposed = spec.transposed_column();
    let (lambda, right) = dominant_eigenpair(&spec.column, spec.k, n)?;
    let (lambda_left, left) = dominant_eigenpair(&transposed, spec.k, n)?;
    if ((lambda - lambda_left) / lambda).abs() > 1e-8 {
        return Err(Error::Linalg(format!("left/right dominant eigenvalues disagree: {lambda} vs {lambda_left}")));
    }
    Ok(ExactDominant { lambda, free_energy: spec.free_energy(lambda.ln()), left, right })
}

fn dominant_eigenpair(column: &[Vec<CMat>], k: usize, n: usize) -> Result<(f64, Vec<C64>)> {
    if n <= 1024 {
        let m = dense_column_matrix(column, k);
        let (vals, vecs) = linalg::eig(&m)?;
        let (idx, top) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, v)| (i, *v))
            .ok_or_else(|| Error::Linalg("empty spectrum".into()))?;
        check_real_positive(top)?;
        let v: Vec<C64> = vecs.column(idx).to_vec();
        return Ok((top.re, v));
    }
    let v0: Vec<C64> = (0..n).map(|i| C64::new(1.0 + 0.01 * ((i * 7919) % 13) as f64, 0.0)).collect();
    let (top, v) = linalg::arnoldi_dominant(|x| column_matvec(column, k, x), v0, 1e-12)?;
    check_real_positive(top)?;
    Ok((top.re, v))
}

fn check_real_positive(top: C64) -> Result<()> {
    if top.re <= 0.0 || top.im.abs() > 1e-8 * top.norm() {
        return Err(Error::Linalg(format!("dominant eigenvalue {top} is not real positive")));
    }
    Ok(())
}

/// Periodic Hamiltonian of an `l`-site ring built from one bond.
pub fn ring_hamiltonian(bond: &BondHamiltonian, l: usize) -> Result<CMat> {
    let d = bond.d;
    let mut spec = crate::exact::ChainSpec::new(vec![d; l]);
    for n in 0..l.saturating_sub(1) {
        spec.add_bond(n, bond.matrix.clone(), 1.0);
    }
    let mut h = crate::exact::build_hamiltonian(&spec)?;
    if l > 2 {
        let dim = h.nrows();
        let mid = dim / (d * d);
        for s_last in 0..d {
            for s_first in 0..d {
                for t_last in 0..d {
                    for t_first in 0..d {
                        let v = bond.matrix[[s_last * d + s_first, t_last * d + t_first]];
                        if v == ZERO {
                            continue;
                        }
                        for m in 0..mid {
                            let row = (s_first * mid + m) * d + s_last;
                            let col = (t_first * mid + m) * d + t_last;
                            h[[row, col]] += v;
                        }
                    }
                }
            }
        }
    }
    Ok(h)
}
