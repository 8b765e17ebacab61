//! Boundary fixed points of the column transfer matrix.
//!
//! The left and right dominant eigenvectors of `T` are approximated by
//! translation-invariant periodic MPS along imaginary time,
//! `ψ(a_1..a_K) = Tr(A_{a_1} ⋯ A_{a_K})`.
//!
//! The solver runs in two phases. Power iteration applies one column at a
//! time and truncates back to `χ` with the dominant environments of the
//! one-tensor temporal transfer operator. When `T` is real symmetric (mirror
//! symmetric real bonds) the result then seeds a variational refinement that
//! maximizes `ln⟨ψ|T|ψ⟩ − ln⟨ψ|ψ⟩` on the actual `K`-site ring, so the
//! boundary tensor carries the dependence on `T′`.

use std::sync::{Arc, Mutex};

use argmin::core::observers::{Observe, ObserverMode};
use argmin::core::{CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus, KV};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::tn::{Side, TransferMatrixSpec};

/// Relative singular-value cutoff of the bond truncation.
const BOND_CUTOFF: f64 = 1e-13;
/// Two boundary eigenvalues closer than this (relative, after the K-th power)
/// are reported as degenerate.
const DEGENERACY_TOL: f64 = 1e-8;
/// Largest dense sandwich matrix diagonalized when estimating `λ`.
pub const SANDWICH_CAP: usize = 4096;
/// Allowed decrease of the `λ` estimate before the power phase stops.
const MONOTONE_SLACK: f64 = 1e-12;

/// A uniform periodic MPS; `tensors[a]` is the `χ×χ` matrix for horizontal
/// index `a`.
#[derive(Clone, Debug)]
pub struct UniformPeriodicMps {
    pub side: Side,
    pub k: usize,
    pub tensors: Vec<CMat>,
}

impl UniformPeriodicMps {
    /// Product state on the dominant gate channel, bond dimension 1.
    pub fn initial(side: Side, r: usize, k: usize) -> Self {
        let tensors = (0..r)
            .map(|a| CMat::from_elem((1, 1), if a == 0 { linalg::ONE } else { linalg::ZERO }))
            .collect();
        Self { side, k, tensors }
    }

    pub fn bond_dim(&self) -> usize {
        self.tensors[0].nrows()
    }

    pub fn physical_dim(&self) -> usize {
        self.tensors.len()
    }

    /// Amplitude `Tr(A_{a_1} ⋯ A_{a_K})` of one configuration.
    pub fn amplitude(&self, config: &[usize]) -> C64 {
        let chi = self.bond_dim();
        let mut p = linalg::identity(chi);
        for &a in config {
            p = p.dot(&self.tensors[a]);
        }
        linalg::trace(&p)
    }

    /// Dense amplitudes over all `r^K` configurations, first index slowest.
    pub fn to_dense(&self) -> Vec<C64> {
        let r = self.physical_dim();
        let n = r.pow(self.k as u32);
        let mut config = vec![0usize; self.k];
        (0..n)
            .map(|mut idx| {
                for slot in config.iter_mut().rev() {
                    *slot = idx % r;
                    idx /= r;
                }
                self.amplitude(&config)
            })
            .collect()
    }

    /// `ln⟨ψ|ψ⟩` of the implied `K`-site ring state.
    pub fn log_norm(&self) -> Result<f64> {
        let mut e = CMat::zeros((self.bond_dim().pow(2), self.bond_dim().pow(2)));
        for t in &self.tensors {
            e += &linalg::kron(t, &t.mapv(|z| z.conj()));
        }
        Ok(linalg::log_trace_power(&e, self.k)?.re)
    }

    /// Rescales the tensor so the ring state has unit norm.
    pub fn normalize_ring(&mut self) -> Result<()> {
        let ln = self.log_norm()?;
        self.scale(C64::new((-ln / (2.0 * self.k as f64)).exp(), 0.0));
        Ok(())
    }

    fn scale(&mut self, s: C64) {
        self.tensors.iter_mut().for_each(|t| t.mapv_inplace(|z| z * s));
    }

    /// Fixes the overall scale of the tensor without touching the state.
    fn normalize(&mut self) {
        let chi = self.bond_dim() as f64;
        let norm: f64 = self.tensors.iter().map(|t| linalg::frobenius(t).powi(2)).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.scale(C64::new(chi.sqrt() / norm, 0.0));
        }
    }

    fn is_real(&self) -> bool {
        self.tensors.iter().all(linalg::is_real)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Maximum boundary bond dimension.
    pub chi: usize,
    pub max_iters: usize,
    /// Convergence threshold on successive free-energy estimates.
    pub tol_f: f64,
    /// Power iterations always performed before testing convergence.
    pub min_iters: usize,
    /// Refine on the `K`-site ring after power iteration when `T` is symmetric.
    pub variational: bool,
    /// Largest sandwich dimension `χ·d²·χ` for the variational phase.
    pub variational_cap: usize,
    /// Additional deterministic, perturbed starting points for the variational
    /// phase; the best refined tensor is kept.
    pub extra_seeds: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { chi: 2, max_iters: 500, tol_f: 1e-9, min_iters: 2, variational: true, variational_cap: 400, extra_seeds: 1 }
    }
}

impl SolverConfig {
    pub fn with_chi(chi: usize) -> Self {
        Self { chi, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chi == 0 {
            return Err(Error::InvalidDimension("chi must be positive".into()));
        }
        if self.max_iters == 0 || !(self.tol_f > 0.0) {
            return Err(Error::Config("max_iters and tol_f must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Power,
    Variational,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub phase: Phase,
    pub free_energy: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeEnergyResult {
    pub ln_lambda: f64,
    /// Per-site free energy at the effective temperature.
    pub free_energy: f64,
    pub t_prime_effective: f64,
    pub k: usize,
    pub iterations: usize,
    pub converged: bool,
    /// The top of the mixed transfer spectrum is (near) degenerate.
    pub degenerate: bool,
    pub history: Vec<IterationRecord>,
}

impl FreeEnergyResult {
    pub fn lambda(&self) -> f64 {
        self.ln_lambda.exp()
    }

    /// The run-log lines: `iter f |Δf|`.
    pub fn log_lines(&self) -> Vec<String> {
        self.history
            .iter()
            .map(|r| format!("{} {:.15e} {:.3e}", r.iter, r.free_energy, r.delta))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryPair {
    pub left: UniformPeriodicMps,
    pub right: UniformPeriodicMps,
    pub result: FreeEnergyResult,
}

impl BoundaryPair {
    pub fn get(&self, side: Side) -> &UniformPeriodicMps {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

/// `B_a = Σ_b W[a,b] ⊗ A_b` (vertical ⊗ bath).
fn apply_right(spec: &TransferMatrixSpec, mps: &UniformPeriodicMps) -> Vec<CMat> {
    let r = spec.r();
    (0..r)
        .map(|a| {
            let mut b = linalg::kron(&spec.column[a][0], &mps.tensors[0]);
            for bi in 1..r {
                b += &linalg::kron(&spec.column[a][bi], &mps.tensors[bi]);
            }
            b
        })
        .collect()
}

/// `B_b = Σ_a A_a ⊗ W[a,b]` (bath ⊗ vertical).
fn apply_left(spec: &TransferMatrixSpec, mps: &UniformPeriodicMps) -> Vec<CMat> {
    let r = spec.r();
    (0..r)
        .map(|b| {
            let mut acc = linalg::kron(&mps.tensors[0], &spec.column[0][b]);
            for a in 1..r {
                acc += &linalg::kron(&mps.tensors[a], &spec.column[a][b]);
            }
            acc
        })
        .collect()
}

/// Dominant fixed point of `X ↦ Σ_a B_a X B_a†` (or of the adjoint map),
/// Hermitian with unit trace.
fn dominant_environment(b: &[CMat], adjoint: bool) -> Result<CMat> {
    let m = b[0].nrows();
    let daggers: Vec<CMat> = b.iter().map(linalg::dagger).collect();
    let apply = |x: &[C64]| -> Vec<C64> {
        let xm = CMat::from_shape_vec((m, m), x.to_vec()).expect("square environment");
        let mut y = CMat::zeros((m, m));
        for (t, td) in b.iter().zip(&daggers) {
            if adjoint {
                y += &td.dot(&xm).dot(t);
            } else {
                y += &t.dot(&xm).dot(td);
            }
        }
        y.into_raw_vec_and_offset().0
    };
    let v0 = linalg::identity(m).into_raw_vec_and_offset().0;
    let (_, v) = linalg::arnoldi_dominant(apply, v0, 1e-13)?;
    let x = CMat::from_shape_vec((m, m), v).expect("square environment");
    let tr = linalg::trace(&x);
    if tr.norm() == 0.0 {
        return Err(Error::Linalg("traceless boundary environment".into()));
    }
    Ok(linalg::hermitize(&x.mapv(|z| z / tr)))
}

/// Truncates a uniform MPS to bond dimension `chi` with projectors built from
/// the dominant environments of its temporal transfer operator.
fn truncate(b: Vec<CMat>, chi: usize) -> Result<Vec<CMat>> {
    let m = b[0].nrows();
    if m <= chi {
        return Ok(b);
    }
    let r_env = dominant_environment(&b, false)?;
    let l_env = dominant_environment(&b, true)?;
    let sl = linalg::psd_sqrt(&l_env)?;
    let sr = linalg::psd_sqrt(&r_env)?;
    let (u, s, vt) = linalg::svd(&sl.dot(&sr))?;
    let s0 = s.first().copied().unwrap_or(0.0);
    if !(s0 > 0.0) {
        return Err(Error::Linalg("boundary state vanished under truncation".into()));
    }
    let keep = s.iter().take_while(|&&x| x > BOND_CUTOFF * s0).count().min(chi).max(1);
    let lp = CMat::from_shape_fn((keep, m), |(i, j)| {
        let v: C64 = (0..m).map(|q| u[[q, i]].conj() * sl[[q, j]]).sum();
        v / s[i].sqrt()
    });
    let rp = CMat::from_shape_fn((m, keep), |(i, j)| {
        let v: C64 = (0..m).map(|q| sr[[i, q]] * vt[[j, q]].conj()).sum();
        v / s[j].sqrt()
    });
    Ok(b.iter().map(|t| lp.dot(t).dot(&rp)).collect())
}

/// `Σ_a L_a ⊗ R_a`.
fn overlap_matrix(l: &UniformPeriodicMps, r: &UniformPeriodicMps) -> CMat {
    let mut acc = linalg::kron(&l.tensors[0], &r.tensors[0]);
    for a in 1..l.tensors.len() {
        acc += &linalg::kron(&l.tensors[a], &r.tensors[a]);
    }
    acc
}

/// `Σ_{a,b} L_a ⊗ W[a,b] ⊗ R_b`.
fn sandwich_matrix(spec: &TransferMatrixSpec, l: &UniformPeriodicMps, r: &UniformPeriodicMps) -> CMat {
    let lw = apply_left(spec, l);
    let mut acc = linalg::kron(&lw[0], &r.tensors[0]);
    for b in 1..lw.len() {
        acc += &linalg::kron(&lw[b], &r.tensors[b]);
    }
    acc
}

/// `ln(⟨L|T|R⟩/⟨L|R⟩)` and whether the sandwich spectrum is degenerate at
/// the top.
pub fn rayleigh_log_lambda(
    spec: &TransferMatrixSpec,
    l: &UniformPeriodicMps,
    r: &UniformPeriodicMps,
) -> Result<(f64, bool)> {
    let k = spec.k;
    let dim = l.bond_dim() * spec.vertical_dim() * r.bond_dim();
    if dim > SANDWICH_CAP {
        return Err(Error::Capacity { dim, cap: SANDWICH_CAP });
    }
    let mu = linalg::eigvals(&sandwich_matrix(spec, l, r))?;
    let num = linalg::log_sum_powers(&mu, k)?;
    let den = linalg::log_trace_power(&overlap_matrix(l, r), k)?;
    let ratio = num - den;
    let mut mags: Vec<f64> = mu.iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let degenerate = mags.len() > 1 && mags[0] > 0.0 && 1.0 - (mags[1] / mags[0]).powi(k as i32) < DEGENERACY_TOL;
    Ok((ratio.re, degenerate))
}

struct History {
    records: Vec<IterationRecord>,
    last: f64,
}

impl History {
    fn push(&mut self, phase: Phase, f: f64) -> f64 {
        let delta = if self.last.is_nan() { f64::INFINITY } else { (f - self.last).abs() };
        let iter = self.records.len() + 1;
        log::trace!("boundary iter {iter} ({phase:?}): f = {f:.15}, |df| = {delta:.3e}");
        self.records.push(IterationRecord { iter, phase, free_energy: f, delta });
        self.last = f;
        delta
    }
}

/// Both boundaries of one transfer matrix. A previous pair (typically from a
/// neighbouring `T′`) may seed the iteration.
pub fn solve_boundaries(
    spec: &TransferMatrixSpec,
    config: &SolverConfig,
    warm: Option<&BoundaryPair>,
) -> Result<BoundaryPair> {
    config.validate()?;
    let r = spec.r();
    let symmetric = spec.is_symmetric();
    let (mut left, mut right) = match warm {
        Some(p) if p.left.physical_dim() == r && p.left.bond_dim() <= config.chi && p.right.bond_dim() <= config.chi => {
            let mut l = p.left.clone();
            let mut rt = p.right.clone();
            l.k = spec.k;
            rt.k = spec.k;
            (l, rt)
        }
        _ => (UniformPeriodicMps::initial(Side::Left, r, spec.k), UniformPeriodicMps::initial(Side::Right, r, spec.k)),
    };
    if symmetric {
        left = as_left(&right);
    }
    let mut history = History { records: Vec::new(), last: f64::NAN };
    let (mut ln_lambda, mut degenerate) = if warm.is_some() {
        rayleigh_log_lambda(spec, &left, &right)?
    } else {
        (f64::NEG_INFINITY, false)
    };
    let mut converged = false;
    let mut iters = 0;
    while iters < config.max_iters {
        iters += 1;
        let mut new_right = right.clone();
        new_right.tensors = truncate(apply_right(spec, &right), config.chi)?;
        new_right.normalize();
        let new_left = if symmetric {
            as_left(&new_right)
        } else {
            let mut nl = left.clone();
            nl.tensors = truncate(apply_left(spec, &left), config.chi)?;
            nl.normalize();
            nl
        };
        let (ll, deg) = rayleigh_log_lambda(spec, &new_left, &new_right)?;
        if !ll.is_finite() {
            return Err(Error::Divergence(iters));
        }
        if symmetric && ll < ln_lambda - MONOTONE_SLACK * ln_lambda.abs().max(1.0) {
            // truncation now costs more than a further power step gains
            break;
        }
        let delta = history.push(Phase::Power, spec.free_energy(ll));
        ln_lambda = ll;
        degenerate = deg;
        right = new_right;
        left = new_left;
        if iters >= config.min_iters && delta < config.tol_f {
            converged = true;
            break;
        }
    }
    let ring_dim = right.bond_dim() * spec.vertical_dim() * right.bond_dim();
    if symmetric && config.variational && ring_dim <= config.variational_cap && right.is_real() {
        let budget = config.max_iters.saturating_sub(iters).max(1);
        let mut seeds = vec![right.clone()];
        seeds.extend((0..config.extra_seeds).map(|s| perturbed_seed(&right, config.chi, s)));
        let mut best: Option<(RingOutcome, History)> = None;
        for seed in &seeds {
            let mut h = History { records: Vec::new(), last: history.last };
            let outcome = refine_on_ring(spec, seed, config.tol_f, budget, &mut h)?;
            iters += outcome.iterations;
            if best.as_ref().is_none_or(|(b, _)| outcome.ln_lambda > b.ln_lambda) {
                best = Some((outcome, h));
            }
        }
        let (outcome, h) = best.expect("at least one seed");
        for rec in h.records {
            history.push(rec.phase, rec.free_energy);
        }
        if outcome.ln_lambda > ln_lambda || !ln_lambda.is_finite() {
            right = outcome.mps;
            left = as_left(&right);
            let (ll, deg) = rayleigh_log_lambda(spec, &left, &right)?;
            ln_lambda = ll;
            degenerate = deg;
        }
        converged = converged || outcome.converged;
    }
    if !converged {
        log::warn!("boundary solver hit max_iters = {} at T' = {}", config.max_iters, spec.t_prime_effective);
    }
    if !ln_lambda.is_finite() {
        return Err(Error::Divergence(iters));
    }
    right.normalize_ring()?;
    if symmetric {
        left = as_left(&right);
    } else {
        left.normalize_ring()?;
    }
    let overlap = linalg::log_trace_power(&overlap_matrix(&left, &right), spec.k)?;
    left.scale((-overlap / spec.k as f64).exp());
    let result = FreeEnergyResult {
        ln_lambda,
        free_energy: spec.free_energy(ln_lambda),
        t_prime_effective: spec.t_prime_effective,
        k: spec.k,
        iterations: iters,
        converged,
        degenerate,
        history: history.records,
    };
    Ok(BoundaryPair { left, right, result })
}

/// The tensor padded to bond `chi` plus a fixed pattern of relative size 0.1,
/// which has no reason to respect any symmetry of the original.
fn perturbed_seed(mps: &UniformPeriodicMps, chi: usize, seed: usize) -> UniformPeriodicMps {
    let m = mps.bond_dim();
    let scale = mps.tensors.iter().map(|t| linalg::frobenius(t).powi(2)).sum::<f64>().sqrt()
        / ((mps.tensors.len() * chi * chi) as f64).sqrt();
    let tensors = mps
        .tensors
        .iter()
        .enumerate()
        .map(|(a, t)| {
            CMat::from_shape_fn((chi, chi), |(i, j)| {
                let base = if i < m && j < m { t[[i, j]].re } else { 0.0 };
                let phase = (1 + seed) as f64 * 0.7 + (a * 11 + i * 7 + j * 3) as f64;
                C64::new(base + 0.1 * scale * phase.sin(), 0.0)
            })
        })
        .collect();
    UniformPeriodicMps { side: mps.side, k: mps.k, tensors }
}

fn as_left(right: &UniformPeriodicMps) -> UniformPeriodicMps {
    UniformPeriodicMps { side: Side::Left, ..right.clone() }
}

/// One boundary and the free energy it yields.
pub fn solve_boundary(
    spec: &TransferMatrixSpec,
    config: &SolverConfig,
    side: Side,
) -> Result<(UniformPeriodicMps, FreeEnergyResult)> {
    let pair = solve_boundaries(spec, config, None)?;
    Ok((pair.get(side).clone(), pair.result))
}

struct RingOutcome {
    mps: UniformPeriodicMps,
    ln_lambda: f64,
    iterations: usize,
    converged: bool,
}

/// `ln⟨ψ|T|ψ⟩ − ln⟨ψ|ψ⟩` on the `K`-site ring for a real uniform tensor, with
/// its gradient.
struct RingObjective {
    k: usize,
    chi: usize,
    r: usize,
    dv: usize,
    column: Vec<Vec<Array2<f64>>>,
}

fn rkron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

/// `ln Tr(N^K)` and `Γ = K·(N^{K−1})ᵀ / Tr(N^K)`, the gradient of the former
/// with respect to the entries of `N`.
fn log_trace_power_grad(n: &Array2<f64>, k: usize) -> Option<(f64, Array2<f64>)> {
    let dim = n.nrows();
    let rescale = |m: &mut Array2<f64>| -> f64 {
        let s = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        if s > 0.0 && s.is_finite() {
            m.mapv_inplace(|x| x / s);
            s.ln()
        } else {
            f64::NAN
        }
    };
    let mut result = Array2::<f64>::eye(dim);
    let mut log_result = 0.0;
    let mut base = n.clone();
    let mut log_base = rescale(&mut base);
    let mut e = k - 1;
    while e > 0 {
        if e & 1 == 1 {
            result = result.dot(&base);
            log_result += log_base + rescale(&mut result);
        }
        e >>= 1;
        if e > 0 {
            base = base.dot(&base);
            log_base = 2.0 * log_base + rescale(&mut base);
        }
    }
    let t: f64 = (0..dim).map(|i| result.row(i).dot(&n.column(i))).sum();
    if !(t > 0.0) || !log_result.is_finite() {
        return None;
    }
    let g = result.t().mapv(|x| x * k as f64 / t);
    Some((log_result + t.ln(), g))
}

impl RingObjective {
    fn new(spec: &TransferMatrixSpec, chi: usize) -> Self {
        let column = spec
            .column
            .iter()
            .map(|row| row.iter().map(|w| w.mapv(|z| z.re)).collect())
            .collect();
        Self { k: spec.k, chi, r: spec.r(), dv: spec.vertical_dim(), column }
    }

    fn unpack(&self, p: &[f64]) -> Vec<Array2<f64>> {
        let c2 = self.chi * self.chi;
        (0..self.r)
            .map(|a| Array2::from_shape_vec((self.chi, self.chi), p[a * c2..(a + 1) * c2].to_vec()).expect("tensor"))
            .collect()
    }

    fn value_and_grad(&self, p: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (chi, dv, r) = (self.chi, self.dv, self.r);
        let a = self.unpack(p);
        // Σ_a A_a ⊗ W[a,c]
        let lw: Vec<Array2<f64>> = (0..r)
            .map(|c| (0..r).fold(Array2::zeros((chi * dv, chi * dv)), |acc, x| acc + rkron(&a[x], &self.column[x][c])))
            .collect();
        // Σ_b W[c,b] ⊗ A_b
        let wr: Vec<Array2<f64>> = (0..r)
            .map(|c| (0..r).fold(Array2::zeros((dv * chi, dv * chi)), |acc, x| acc + rkron(&self.column[c][x], &a[x])))
            .collect();
        let n_t = (0..r).fold(Array2::zeros((chi * dv * chi, chi * dv * chi)), |acc, b| acc + rkron(&lw[b], &a[b]));
        let n_1 = (0..r).fold(Array2::zeros((chi * chi, chi * chi)), |acc, x| acc + rkron(&a[x], &a[x]));
        let (ln_t, g_t) = log_trace_power_grad(&n_t, self.k)?;
        let (ln_1, g_1) = log_trace_power_grad(&n_1, self.k)?;
        let blk = dv * chi;
        let mut grad = vec![0.0; p.len()];
        for c in 0..r {
            let off = c * chi * chi;
            for i in 0..chi {
                for j in 0..chi {
                    let mut s = 0.0;
                    for x in 0..blk {
                        for y in 0..blk {
                            s += g_t[[i * blk + x, j * blk + y]] * wr[c][[x, y]];
                        }
                    }
                    for u in 0..chi {
                        for v in 0..chi {
                            s -= g_1[[i * chi + u, j * chi + v]] * a[c][[u, v]];
                        }
                    }
                    grad[off + i * chi + j] += s;
                }
            }
            for u in 0..chi {
                for v in 0..chi {
                    let mut s = 0.0;
                    for x in 0..blk {
                        for y in 0..blk {
                            s += g_t[[x * chi + u, y * chi + v]] * lw[c][[x, y]];
                        }
                    }
                    for i in 0..chi {
                        for j in 0..chi {
                            s -= g_1[[i * chi + u, j * chi + v]] * a[c][[i, j]];
                        }
                    }
                    grad[off + u * chi + v] += s;
                }
            }
        }
        Some((ln_t - ln_1, grad))
    }
}

/// The optimizer minimizes `-ln λ`.
struct NegLogLambda<'a>(&'a RingObjective);

impl CostFunction for NegLogLambda<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.0.value_and_grad(p).map_or(f64::INFINITY, |(v, _)| -v))
    }
}

impl Gradient for NegLogLambda<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        match self.0.value_and_grad(p) {
            Some((_, g)) => Ok(g.into_iter().map(|x| -x).collect()),
            None => Err(argmin::core::Error::msg("ring trace is not positive")),
        }
    }
}

struct CostTrace(Arc<Mutex<Vec<f64>>>);

impl<I: State<Float = f64>> Observe<I> for CostTrace {
    fn observe_iter(&mut self, state: &I, _kv: &KV) -> std::result::Result<(), argmin::core::Error> {
        self.0.lock().expect("cost trace").push(state.get_best_cost());
        Ok(())
    }
}

fn refine_on_ring(
    spec: &TransferMatrixSpec,
    start: &UniformPeriodicMps,
    tol_f: f64,
    max_iters: usize,
    history: &mut History,
) -> Result<RingOutcome> {
    let chi = start.bond_dim();
    let objective = RingObjective::new(spec, chi);
    let init: Vec<f64> = start.tensors.iter().flat_map(|t| t.iter().map(|z| z.re).collect::<Vec<_>>()).collect();
    let Some((f0, _)) = objective.value_and_grad(&init) else {
        return Ok(RingOutcome { mps: start.clone(), ln_lambda: f64::NEG_INFINITY, iterations: 0, converged: false });
    };
    let sites = TransferMatrixSpec::SITES_PER_COLUMN as f64;
    let tol_cost = sites * tol_f / spec.t_prime_effective;
    let trace = Arc::new(Mutex::new(Vec::new()));
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 8)
        .with_tolerance_cost(tol_cost)
        .map_err(|e| Error::Linalg(e.to_string()))?
        .with_tolerance_grad(1e-12)
        .map_err(|e| Error::Linalg(e.to_string()))?;
    let res = Executor::new(NegLogLambda(&objective), solver)
        .configure(|s| s.param(init.clone()).max_iters(max_iters as u64))
        .add_observer(CostTrace(trace.clone()), ObserverMode::Always)
        .run();
    let (best, best_cost, iterations, status) = match res {
        Ok(r) => {
            let st = r.state;
            let best = st.best_param.clone().unwrap_or_else(|| init.clone());
            (best, st.best_cost, st.iter as usize, st.termination_status.clone())
        }
        Err(e) => {
            log::debug!("ring refinement stopped: {e}");
            (init.clone(), -f0, 0, TerminationStatus::Terminated(TerminationReason::SolverExit(e.to_string())))
        }
    };
    let mut last = -f0;
    for c in trace.lock().expect("cost trace").iter() {
        if *c < last {
            last = *c;
            history.push(Phase::Variational, spec.free_energy(-*c));
        }
    }
    let converged = matches!(
        status,
        TerminationStatus::Terminated(TerminationReason::SolverConverged | TerminationReason::TargetCostReached)
    );
    let mut mps = start.clone();
    mps.tensors = objective.unpack(&best).iter().map(linalg::real).collect();
    mps.normalize();
    Ok(RingOutcome { mps, ln_lambda: -best_cost.min(-f0), iterations, converged })
}
