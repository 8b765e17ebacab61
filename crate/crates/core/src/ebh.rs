//! Entanglement-bath Hamiltonians extracted from boundary tensors.
//!
//! One temporal slice of a boundary MPS contracted with the cut half of the
//! neighbouring gate is an operator on (bath ⊗ site) for the left boundary and
//! (site ⊗ bath) for the right one:
//!
//! ```text
//! M_L = Σ_a A^L_a ⊗ V^R_a        M_R = Σ_b V^L_b ⊗ A^R_b
//! ```
//!
//! After a bath gauge that makes `M` Hermitian, the EBH is `−(1/τ) ln M`.

use serde::{Deserialize, Serialize};

use crate::boundary::UniformPeriodicMps;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::spin::{expand_in_basis, spin_operators, OperatorBasis};
use crate::tn::{GateFactor, Side};

/// Smallest eigenvalue of the normalized boundary operator accepted by the
/// logarithm.
pub const POSITIVITY_FLOOR: f64 = 1e-12;
/// Hermitization residual above which the extraction is flagged.
pub const GAUGE_WARNING: f64 = 0.1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EbhOperator {
    pub side: Side,
    pub t_prime: f64,
    pub tau: f64,
    pub bath_dim: usize,
    pub site_dim: usize,
    /// Traceless EBH; bath first for `Left`, site first for `Right`.
    #[serde(skip)]
    pub matrix: CMat,
    /// Identity component removed from the raw logarithm.
    pub shift: f64,
    /// `‖M − M†‖/‖M‖` after the bath gauge, before symmetrization.
    pub extraction_residual: f64,
    /// Relative residual of the gauge equation `(Q⊗1)M = M†(Q⊗1)`.
    pub gauge_residual: f64,
    pub gauge_warning: bool,
    /// Hermitized boundary operator normalized to trace `χd`.
    #[serde(skip)]
    pub boundary_operator: CMat,
}

impl EbhOperator {
    pub fn dims(&self) -> (usize, usize) {
        match self.side {
            Side::Left => (self.bath_dim, self.site_dim),
            Side::Right => (self.site_dim, self.bath_dim),
        }
    }

    /// `exp(−τ·(EBH + shift))`, which reproduces the boundary operator.
    pub fn slice_operator(&self) -> Result<CMat> {
        let full = &self.matrix + &linalg::identity(self.matrix.nrows()).mapv(|z| z * self.shift);
        linalg::hermitian_fn(&full, |e| (-self.tau * e).exp())
    }
}

/// The raw per-slice boundary operator.
pub fn boundary_operator(a: &UniformPeriodicMps, v: &GateFactor) -> Result<CMat> {
    if a.physical_dim() != v.rank() {
        return Err(Error::InvalidDimension(format!(
            "boundary leg {} does not match gate rank {}",
            a.physical_dim(),
            v.rank()
        )));
    }
    if a.side == v.side {
        return Err(Error::InvalidDimension(format!(
            "a {} boundary pairs with the opposite gate factor",
            a.side.label()
        )));
    }
    let chi = a.bond_dim();
    let d = v.ops[0].nrows();
    let mut m = CMat::zeros((chi * d, chi * d));
    for (t, op) in a.tensors.iter().zip(&v.ops) {
        m += &match a.side {
            Side::Left => linalg::kron(t, op),
            Side::Right => linalg::kron(op, t),
        };
    }
    Ok(m)
}

/// Hermitian positive `Q` on the bath with `(Q⊗1)M ≈ M†(Q⊗1)`, and the
/// relative residual. `None` when the best solution is not positive.
fn gauge_metric(m: &CMat, side: Side, chi: usize, d: usize) -> Result<(Option<CMat>, f64)> {
    let n = chi * d;
    // Hermitian basis: real symmetric units, then imaginary antisymmetric ones.
    let mut basis: Vec<CMat> = Vec::new();
    for i in 0..chi {
        for j in i..chi {
            let mut e = CMat::zeros((chi, chi));
            e[[i, j]] = linalg::ONE;
            e[[j, i]] = linalg::ONE;
            basis.push(e);
        }
    }
    if !linalg::is_real(m) {
        for i in 0..chi {
            for j in i + 1..chi {
                let mut e = CMat::zeros((chi, chi));
                e[[i, j]] = C64::new(0.0, 1.0);
                e[[j, i]] = C64::new(0.0, -1.0);
                basis.push(e);
            }
        }
    }
    let md = linalg::dagger(m);
    let id = linalg::identity(d);
    let lift = |q: &CMat| match side {
        Side::Left => linalg::kron(q, &id),
        Side::Right => linalg::kron(&id, q),
    };
    let cols: Vec<CMat> = basis.iter().map(|e| {
        let qe = lift(e);
        &qe.dot(m) - &md.dot(&qe)
    }).collect();
    let rows = 2 * n * n;
    let mut sys = CMat::zeros((rows, basis.len()));
    for (k, c) in cols.iter().enumerate() {
        for (idx, z) in c.iter().enumerate() {
            sys[[idx, k]] = C64::new(z.re, 0.0);
            sys[[n * n + idx, k]] = C64::new(z.im, 0.0);
        }
    }
    let (_, s, vt) = linalg::svd(&sys)?;
    let last = basis.len() - 1;
    let sigma = if s.len() == basis.len() { s[last] } else { 0.0 };
    let coeffs: Vec<f64> = (0..basis.len()).map(|k| vt[[vt.nrows() - 1, k]].re).collect();
    let mut q = CMat::zeros((chi, chi));
    for (c, e) in coeffs.iter().zip(&basis) {
        q += &e.mapv(|z| z * *c);
    }
    if linalg::trace(&q).re < 0.0 {
        q.mapv_inplace(|z| -z);
    }
    let residual = sigma / linalg::frobenius(m).max(1e-300);
    let (w, _) = linalg::eigh(&q)?;
    let top = w.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if w.iter().all(|&x| x > 1e-10 * top) {
        Ok((Some(q), residual))
    } else {
        Ok((None, residual))
    }
}

/// EBH of one boundary at one `T′`. `v` is the gate factor on the far side
/// of the cut: `V^R` for a left boundary, `V^L` for a right one.
pub fn extract_ebh(a: &UniformPeriodicMps, v: &GateFactor, tau: f64, t_prime: f64) -> Result<EbhOperator> {
    if !(tau > 0.0) {
        return Err(Error::Tau(tau));
    }
    let m = boundary_operator(a, v)?;
    let chi = a.bond_dim();
    let d = v.ops[0].nrows();
    let side = a.side;
    let (q, gauge_residual) = gauge_metric(&m, side, chi, d)?;
    let id = linalg::identity(d);
    let lift = |x: &CMat| match side {
        Side::Left => linalg::kron(x, &id),
        Side::Right => linalg::kron(&id, x),
    };
    let mg = match &q {
        Some(q) => {
            let x = linalg::hermitian_fn(q, f64::sqrt)?;
            let xi = linalg::hermitian_fn(q, |e| 1.0 / e.sqrt())?;
            lift(&x).dot(&m).dot(&lift(&xi))
        }
        None => m.clone(),
    };
    let extraction_residual = linalg::frobenius(&(&mg - &linalg::dagger(&mg))) / linalg::frobenius(&mg).max(1e-300);
    let gauge_warning = q.is_none() || extraction_residual > GAUGE_WARNING;
    if gauge_warning {
        log::warn!(
            "EBH gauge warning ({} side, T' = {t_prime}): residual {extraction_residual:.3e}",
            side.label()
        );
    }
    let mut mh = linalg::hermitize(&mg);
    // The overall scale and sign of a boundary tensor are arbitrary.
    let tr = linalg::trace(&mh).re;
    if !(tr.abs() > 1e-300) {
        return Err(Error::Positivity { min: tr, spectrum: linalg::eigh(&mh)?.0.to_vec() });
    }
    let n = (chi * d) as f64;
    mh.mapv_inplace(|z| z * (n / tr));
    let (w, vecs) = linalg::eigh(&mh)?;
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    if min < POSITIVITY_FLOOR {
        return Err(Error::Positivity { min, spectrum: w.to_vec() });
    }
    let raw = linalg::reconstruct(&w.mapv(|x| -x.ln() / tau), &vecs);
    let shift = linalg::trace(&raw).re / n;
    let matrix = &raw - &linalg::identity(chi * d).mapv(|z| z * shift);
    Ok(EbhOperator {
        side,
        t_prime,
        tau,
        bath_dim: chi,
        site_dim: d,
        matrix,
        shift,
        extraction_residual,
        gauge_residual,
        gauge_warning,
        boundary_operator: mh,
    })
}

/// Orthogonal change of the bath basis, `EBH → (O⊗1)·EBH·(Oᵀ⊗1)`.
pub fn rotate_bath(ebh: &mut EbhOperator, o: &CMat) {
    let id = linalg::identity(ebh.site_dim);
    let u = match ebh.side {
        Side::Left => linalg::kron(o, &id),
        Side::Right => linalg::kron(&id, o),
    };
    let ud = linalg::dagger(&u);
    ebh.matrix = u.dot(&ebh.matrix).dot(&ud);
    ebh.boundary_operator = u.dot(&ebh.boundary_operator).dot(&ud);
}

fn bath_rotation(theta: f64) -> CMat {
    let (s, c) = theta.sin_cos();
    ndarray::array![[c, -s], [s, c]].mapv(|x| C64::new(x, 0.0))
}

/// Weight of the components that are odd under the Ising parity
/// `σx_b ⊗ σx_1`: `Sx_b Sz_1`, `Sz_b` and `Sz_b Sx_1`.
fn parity_odd_weight(ebh: &EbhOperator) -> Result<f64> {
    let s = spin_operators(2)?;
    let pair = |bath: &CMat, site: &CMat| match ebh.side {
        Side::Left => linalg::kron(bath, site),
        Side::Right => linalg::kron(site, bath),
    };
    let odd = [pair(&s.sx, &s.sz), pair(&s.sz, &s.identity), pair(&s.sz, &s.sx)];
    Ok(odd.iter().map(|op| {
        let c = linalg::trace(&linalg::dagger(op).dot(&ebh.matrix)).re;
        c * c / linalg::trace(&linalg::dagger(op).dot(op)).re
    }).sum())
}

/// Fix the residual orthogonal bath freedom of a spin-1/2 bath on a spin-1/2
/// site. The rotation minimizes the parity-odd weight, which is a sinusoid of
/// twice the Hilbert-space angle. The reflection is then chosen so that the
/// transverse bath field `hx` is non-negative. Returns the applied matrix.
pub fn canonical_bath_frame(ebh: &mut EbhOperator) -> Result<Option<CMat>> {
    if ebh.bath_dim != 2 || ebh.site_dim != 2 {
        return Ok(None);
    }
    let weight_at = |theta: f64| -> Result<f64> {
        let mut trial = ebh.clone();
        rotate_bath(&mut trial, &bath_rotation(theta));
        parity_odd_weight(&trial)
    };
    // Operator vectors turn by 2θ, the weight by 4θ.
    let step = std::f64::consts::FRAC_PI_8;
    let (w0, w1, w2) = (weight_at(0.0)?, weight_at(step)?, weight_at(2.0 * step)?);
    let c = 0.5 * (w0 + w2);
    let (a, b) = (0.5 * (w0 - w2), w1 - c);
    let theta = if a.hypot(b) > 1e-15 * c.abs().max(1e-300) { (-b).atan2(-a) / 4.0 } else { 0.0 };
    let mut o = bath_rotation(theta);
    rotate_bath(ebh, &o);
    if spin_half_terms(ebh)?.0.values[3] < 0.0 {
        let flip = ndarray::array![[1.0, 0.0], [0.0, -1.0]].mapv(|x| C64::new(x, 0.0));
        rotate_bath(ebh, &flip);
        o = flip.dot(&o);
    }
    Ok(Some(o))
}

/// Both EBHs of a boundary pair in one shared bath frame. The frame is fixed on
/// the left bath, with the one remaining sign chosen so that `Jzz_L ≥ 0`, and
/// then applied unchanged to the right bath.
pub fn extract_pair(
    pair: &crate::boundary::BoundaryPair,
    spec: &crate::tn::TransferMatrixSpec,
) -> Result<(EbhOperator, EbhOperator)> {
    let t = spec.t_prime_effective;
    let mut left = extract_ebh(&pair.left, &spec.right_factor, spec.tau, t)?;
    let mut right = extract_ebh(&pair.right, &spec.left_factor, spec.tau, t)?;
    if let Some(mut o) = canonical_bath_frame(&mut left)? {
        if spin_half_terms(&left)?.0.values[0] < 0.0 {
            let flip = ndarray::array![[0.0, 1.0], [1.0, 0.0]].mapv(|x| C64::new(x, 0.0));
            rotate_bath(&mut left, &flip);
            o = flip.dot(&o);
        }
        rotate_bath(&mut right, &o);
    }
    Ok((left, right))
}

/// Full basis expansion of an EBH plus the dominant terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EbhCoefficients {
    pub side: Side,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    /// The four named couplings; see [`DominantTerms`].
    pub dominant: DominantTerms,
    /// `‖EBH − dominant part‖_F / ‖EBH‖_F`.
    pub offpattern_weight: f64,
    pub extraction_residual: f64,
}

impl EbhCoefficients {
    /// Named term (`Jzz`, `hx`, ...) or basis coefficient (`Sz⊗Sz`, ...).
    pub fn get(&self, label: &str) -> Option<f64> {
        if let Some(i) = self.dominant.labels.iter().position(|l| l == label) {
            return Some(self.dominant.values[i]);
        }
        self.labels.iter().position(|l| l == label).map(|i| self.values[i])
    }
}

/// The four couplings of a spin-1/2 bath on a spin-1/2 chain, in the frame
/// where the chain coupling is `Sz Sz` and the transverse field is along `x`:
///
/// ```text
/// H_L = Jzz·Sz_b Sz_1 + Jxz·Sx_b Sz_1 − ½hz·Sz_b − ½hx·Sx_b
/// ```
///
/// and the mirror image for the right bath. For other dimensions the four
/// largest coefficients of the normalized basis expansion are reported in
/// descending magnitude.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominantTerms {
    pub labels: [String; 4],
    pub values: [f64; 4],
}

impl DominantTerms {
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// Projection coefficient of `m` on the (unnormalized) operator `op`.
fn project(m: &CMat, op: &CMat) -> f64 {
    let num = linalg::trace(&linalg::dagger(op).dot(m)).re;
    let den = linalg::trace(&linalg::dagger(op).dot(op)).re;
    num / den
}

pub fn fit_coefficients(ebh: &EbhOperator, basis: &OperatorBasis) -> Result<EbhCoefficients> {
    if basis.d_total != ebh.matrix.nrows() || basis.dims != ebh.dims() {
        return Err(Error::InvalidDimension(format!(
            "basis dims {:?} do not match EBH dims {:?}",
            basis.dims,
            ebh.dims()
        )));
    }
    let values = expand_in_basis(&ebh.matrix, basis)?;
    let labels = basis.labels.clone();
    let norm = linalg::frobenius(&ebh.matrix);
    let (dominant, pattern) = if ebh.bath_dim == 2 && ebh.site_dim == 2 {
        spin_half_terms(ebh)?
    } else {
        let mut order: Vec<usize> = (0..values.len()).filter(|&i| labels[i] != basis.labels[0]).collect();
        order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
        let top: Vec<usize> = order.into_iter().take(4).collect();
        let mut part = CMat::zeros(ebh.matrix.dim());
        for &i in &top {
            part += &basis.elements[i].mapv(|z| z * values[i]);
        }
        let pick = |k: usize| top.get(k).copied();
        let labels4 = std::array::from_fn(|k| pick(k).map_or_else(String::new, |i| labels[i].clone()));
        let values4 = std::array::from_fn(|k| pick(k).map_or(0.0, |i| values[i]));
        (DominantTerms { labels: labels4, values: values4 }, part)
    };
    let off = if norm > 0.0 { linalg::frobenius(&(&ebh.matrix - &pattern)) / norm } else { 0.0 };
    Ok(EbhCoefficients {
        side: ebh.side,
        labels,
        values,
        dominant,
        offpattern_weight: off,
        extraction_residual: ebh.extraction_residual,
    })
}

fn spin_half_terms(ebh: &EbhOperator) -> Result<(DominantTerms, CMat)> {
    let s = spin_operators(2)?;
    let id = &s.identity;
    let pair = |bath: &CMat, site: &CMat| match ebh.side {
        Side::Left => linalg::kron(bath, site),
        Side::Right => linalg::kron(site, bath),
    };
    let ops = [pair(&s.sz, &s.sz), pair(&s.sx, &s.sz), pair(&s.sz, id), pair(&s.sx, id)];
    let scale = [1.0, 1.0, -2.0, -2.0];
    let mut part = CMat::zeros(ebh.matrix.dim());
    let mut values = [0.0; 4];
    for k in 0..4 {
        let c = project(&ebh.matrix, &ops[k]);
        part += &ops[k].mapv(|z| z * c);
        values[k] = scale[k] * c;
    }
    let labels = ["Jzz", "Jxz", "hz", "hx"].map(String::from);
    Ok((DominantTerms { labels, values }, part))
}

/// Signed deviations from the mirror relations between the two baths:
/// couplings odd, fields even. Only defined for the named spin-1/2 terms;
/// otherwise `applicable` is false and the check passes vacuously.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParityReport {
    pub applicable: bool,
    pub coupling_deviation: [f64; 2],
    pub field_deviation: [f64; 2],
    pub tolerance: f64,
    pub passed: bool,
}

pub fn symmetry_check(left: &EbhCoefficients, right: &EbhCoefficients) -> ParityReport {
    let named = |c: &EbhCoefficients| c.dominant.labels[0] == "Jzz";
    if !named(left) || !named(right) {
        return ParityReport {
            applicable: false,
            coupling_deviation: [0.0; 2],
            field_deviation: [0.0; 2],
            tolerance: 0.0,
            passed: true,
        };
    }
    let l = &left.dominant.values;
    let r = &right.dominant.values;
    let coupling_deviation = [l[0] + r[0], l[1] + r[1]];
    let field_deviation = [l[2] - r[2], l[3] - r[3]];
    let tolerance = 1e-6_f64.max(10.0 * left.extraction_residual.max(right.extraction_residual));
    let passed = coupling_deviation.iter().chain(&field_deviation).all(|d| d.abs() <= tolerance);
    ParityReport { applicable: true, coupling_deviation, field_deviation, tolerance, passed }
}

/// Default jump threshold in units of the median step.
pub const DEFAULT_JUMP_THRESHOLD: f64 = 5.0;
/// Free-energy margin by which the low-temperature branch must win.
pub const DEFAULT_BRANCH_MARGIN: f64 = 1e-7;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub solver: crate::boundary::SolverConfig,
    pub tau: f64,
    pub jump_threshold: f64,
    pub branch_margin: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            solver: crate::boundary::SolverConfig::default(),
            tau: crate::tn::DEFAULT_TAU,
            jump_threshold: DEFAULT_JUMP_THRESHOLD,
            branch_margin: DEFAULT_BRANCH_MARGIN,
        }
    }
}

/// Outcome of the jump detector on a set of curves sampled on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpDetection {
    /// Step sizes `‖c(i+1) − c(i)‖` over all curves.
    pub steps: Vec<f64>,
    pub median: f64,
    /// First grid index after the largest step, when it passes the threshold.
    pub index: Option<usize>,
    pub jump: f64,
}

/// Largest discontinuity of a bundle of curves. Accepted when the step exceeds
/// `threshold` times the median step.
pub fn detect_jump(curves: &[Vec<f64>], threshold: f64) -> JumpDetection {
    let n = curves.iter().map(Vec::len).min().unwrap_or(0);
    let steps: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| curves.iter().map(|c| (c[i + 1] - c[i]).powi(2)).sum::<f64>().sqrt())
        .collect();
    if steps.is_empty() {
        return JumpDetection { steps, median: 0.0, index: None, jump: 0.0 };
    }
    let mut sorted = steps.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
    let (imax, &jump) = steps.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).unwrap();
    let index = (jump > threshold * median && jump > 1e-12).then_some(imax + 1);
    JumpDetection { steps, median, index, jump }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Warm-started from high `T′` downward.
    Thermal,
    /// Warm-started from the lowest `T′` upward.
    Ground,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t_prime: f64,
    pub t_prime_effective: f64,
    pub k: usize,
    pub free_energy: f64,
    pub branch: Branch,
    pub left: EbhCoefficients,
    pub right: EbhCoefficients,
    /// Sorted spectrum of the left EBH.
    pub levels: Vec<f64>,
    pub parity: ParityReport,
    pub gauge_warning: bool,
}

impl SweepPoint {
    pub fn coefficients(&self) -> [f64; 4] {
        self.left.dominant.values
    }

    /// Whether the named spin-1/2 couplings exist for this point.
    pub fn has_named_terms(&self) -> bool {
        self.left.dominant.labels[0] == "Jzz"
    }

    /// Quantities followed across a sweep: the named couplings when a
    /// canonical bath frame exists, otherwise the four lowest EBH levels, which
    /// do not depend on the bath basis.
    ///
    /// The global spin flip maps `(Jxz, hz)` to `(-Jxz, -hz)` and leaves the
    /// free energy unchanged, so the two ordered states are equally good
    /// solutions. The named couplings are reported for the one with `Jxz ≥ 0`.
    pub fn tracked(&self) -> [f64; 4] {
        if self.has_named_terms() {
            let mut c = self.coefficients();
            let pivot = if c[1].abs() > 1e-9 { c[1] } else { c[2] };
            if pivot < 0.0 {
                c[1] = -c[1];
                c[2] = -c[2];
            }
            c
        } else {
            std::array::from_fn(|i| self.levels.get(i).copied().unwrap_or(0.0))
        }
    }

    pub fn tracked_labels(&self) -> [String; 4] {
        if self.has_named_terms() {
            self.left.dominant.labels.clone()
        } else {
            std::array::from_fn(|i| format!("e{i}"))
        }
    }
}

/// One solved grid point with its operators.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub point: SweepPoint,
    pub left: EbhOperator,
    pub right: EbhOperator,
    /// Boundary solver convergence history.
    pub history: Vec<crate::boundary::IterationRecord>,
}

impl SweepEntry {
    /// Plain-text run log: one line per iteration with `iter, f, |Δf|`.
    pub fn run_log(&self) -> String {
        self.history
            .iter()
            .map(|r| format!("{} {} {} {:?}\n", r.iter, fmt12(r.free_energy), fmt12(r.delta.abs()), r.phase))
            .collect()
    }
}

/// Grid point at which neither pass produced a result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MissingPoint {
    pub t_prime: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BqpReport {
    /// Ordered by increasing `1/T′`.
    pub points: Vec<SweepPoint>,
    pub missing: Vec<MissingPoint>,
    pub labels: [String; 4],
    pub detection: JumpDetection,
    pub threshold: f64,
    /// `1/T′` at the first point past the jump.
    pub inv_t_prime_q: Option<f64>,
    /// Tracked values at the lowest `T′`.
    pub ground_proxy: [f64; 4],
    /// Largest deviation from `ground_proxy` at or below `T′_Q`.
    pub below_bqp_deviation: Option<f64>,
}

impl BqpReport {
    pub fn t_prime_q(&self) -> Option<f64> {
        self.inv_t_prime_q.map(|x| 1.0 / x)
    }

    pub fn curves(&self) -> Vec<Vec<f64>> {
        (0..4).map(|c| self.points.iter().map(|p| p.tracked()[c]).collect()).collect()
    }

    /// Grid index of `T′_Q` within `points`.
    pub fn index(&self) -> Option<usize> {
        self.detection.index
    }

    /// CSV with one row per grid point and a footer carrying `1/T′_Q`.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "T_prime,inv_T_prime,{},{},{},{},offpattern_weight,residual\n",
            self.labels[0], self.labels[1], self.labels[2], self.labels[3]
        );
        for p in &self.points {
            let c = p.tracked();
            let row = [
                p.t_prime_effective,
                1.0 / p.t_prime_effective,
                c[0],
                c[1],
                c[2],
                c[3],
                p.left.offpattern_weight,
                p.left.extraction_residual.max(p.right.extraction_residual),
            ];
            out += &row.map(fmt12).join(",");
            out.push('\n');
        }
        match self.inv_t_prime_q {
            Some(x) => out += &format!("# inv_T_prime_Q,{}\n", fmt12(x)),
            None => out += "# inv_T_prime_Q,not_found\n",
        }
        out
    }
}

/// Twelve significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

struct Solved {
    pair: crate::boundary::BoundaryPair,
    entry: SweepEntry,
}

fn solve_point(
    bond: &crate::spin::BondHamiltonian,
    t_prime: f64,
    cfg: &SweepConfig,
    warm: Option<&crate::boundary::BoundaryPair>,
    branch: Branch,
) -> Result<Solved> {
    let spec = crate::tn::build_transfer_spec(bond, t_prime, cfg.tau)?;
    let pair = crate::boundary::solve_boundaries(&spec, &cfg.solver, warm)?;
    let (l, r) = extract_pair(&pair, &spec)?;
    let left = fit_coefficients(&l, &OperatorBasis::two_site(l.dims().0, l.dims().1)?)?;
    let right = fit_coefficients(&r, &OperatorBasis::two_site(r.dims().0, r.dims().1)?)?;
    let parity = symmetry_check(&left, &right);
    let levels = linalg::eigh(&l.matrix)?.0.to_vec();
    let point = SweepPoint {
        t_prime,
        t_prime_effective: spec.t_prime_effective,
        k: spec.k,
        free_energy: pair.result.free_energy,
        branch,
        left,
        right,
        levels,
        parity,
        gauge_warning: l.gauge_warning || r.gauge_warning,
    };
    let history = pair.result.history.clone();
    Ok(Solved { pair, entry: SweepEntry { point, left: l, right: r, history } })
}

type PassResult = std::result::Result<SweepEntry, String>;

fn warm_pass(bond: &crate::spin::BondHamiltonian, grid: &[f64], cfg: &SweepConfig, branch: Branch) -> Vec<PassResult> {
    let mut warm: Option<crate::boundary::BoundaryPair> = None;
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        match solve_point(bond, t, cfg, warm.as_ref(), branch) {
            Ok(s) => {
                log::debug!("{branch:?} 1/T' = {:.4} f = {:.12}", 1.0 / s.entry.point.t_prime_effective, s.entry.point.free_energy);
                out.push(Ok(s.entry));
                warm = Some(s.pair);
            }
            Err(e) => {
                log::warn!("{branch:?} pass failed at T' = {t}: {e}");
                out.push(Err(e.to_string()));
                warm = None;
            }
        }
    }
    out
}

/// EBHs over a `T′` grid, ordered by decreasing `T′`.
///
/// Two warm-started passes run over the grid, one from the highest `T′`
/// downward and one from the lowest upward. Each follows a branch of the
/// truncated boundary problem continuously. At each point the
/// low-temperature branch is kept when its free energy is lower by more than
/// `branch_margin`. A point fails only when both passes fail there.
pub fn sweep_ebh(bond: &crate::spin::BondHamiltonian, t_prime_grid: &[f64], cfg: &SweepConfig) -> Result<Vec<PassResult>> {
    if t_prime_grid.is_empty() || t_prime_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config("T' grid must be nonempty and positive".into()));
    }
    cfg.solver.validate()?;
    let mut grid = t_prime_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    let mut reversed = grid.clone();
    reversed.reverse();
    let (hot, mut cold) = rayon::join(
        || warm_pass(bond, &grid, cfg, Branch::Thermal),
        || warm_pass(bond, &reversed, cfg, Branch::Ground),
    );
    cold.reverse();
    Ok(hot
        .into_iter()
        .zip(cold)
        .map(|(h, c)| match (h, c) {
            (Ok(h), Ok(c)) => Ok(if c.point.free_energy < h.point.free_energy - cfg.branch_margin { c } else { h }),
            (Ok(h), Err(_)) => Ok(h),
            (Err(_), Ok(c)) => Ok(c),
            (Err(a), Err(b)) => Err(format!("{a}; {b}")),
        })
        .collect())
}

/// Largest share of missing grid points a sweep or scan tolerates.
pub const MAX_MISSING_FRACTION: f64 = 0.2;

/// EBH coefficient curves over a `T′` grid and the boundary quench point.
pub fn sweep_and_detect_bqp(
    bond: &crate::spin::BondHamiltonian,
    t_prime_grid: &[f64],
    cfg: &SweepConfig,
) -> Result<BqpReport> {
    let mut grid = t_prime_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    if grid.len() < 3 {
        return Err(Error::Config("a T' sweep needs at least three grid points".into()));
    }
    let results = sweep_ebh(bond, &grid, cfg)?;
    let points: Vec<std::result::Result<SweepPoint, String>> =
        results.into_iter().map(|r| r.map(|e| e.point)).collect();
    bqp_report(&grid, points, cfg.jump_threshold)
}

/// Boundary quench point from sweep results on a grid of decreasing `T′`.
pub fn bqp_report(
    grid: &[f64],
    results: Vec<std::result::Result<SweepPoint, String>>,
    jump_threshold: f64,
) -> Result<BqpReport> {
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for (t, r) in grid.iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(reason) => missing.push(MissingPoint { t_prime: *t, reason }),
        }
    }
    if missing.len() as f64 > MAX_MISSING_FRACTION * grid.len() as f64 || points.len() < 3 {
        return Err(Error::ScanFailure(format!("{} of {} sweep points failed", missing.len(), grid.len())));
    }
    let labels = points[0].tracked_labels();
    let curves: Vec<Vec<f64>> = (0..4).map(|c| points.iter().map(|p| p.tracked()[c]).collect()).collect();
    let detection = detect_jump(&curves, jump_threshold);
    let n = points.len();
    let ground_proxy = points[n - 1].tracked();
    let inv_t_prime_q = detection.index.map(|i| 1.0 / points[i].t_prime_effective);
    let below_bqp_deviation = detection.index.map(|q| {
        points[q..]
            .iter()
            .flat_map(|p| p.tracked().into_iter().zip(ground_proxy).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    });
    Ok(BqpReport {
        points,
        missing,
        labels,
        detection,
        threshold: jump_threshold,
        inv_t_prime_q,
        ground_proxy,
        below_bqp_deviation,
    })
}

/// `n` values of `T′` whose inverses are log-spaced on `[inv_lo, inv_hi]`.
pub fn inverse_log_grid(inv_lo: f64, inv_hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            1.0 / (inv_lo.ln() + x * (inv_hi.ln() - inv_lo.ln())).exp()
        })
        .collect()
}
