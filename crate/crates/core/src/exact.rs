//! Exact diagonalization of finite open chains: Hamiltonian assembly, Gibbs
//! states, partial traces, entropies, free energies and entanglement
//! Hamiltonians.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};

/// Default cap on the total Hilbert-space dimension of an assembled chain.
pub const DEFAULT_DIM_CAP: usize = 20_000;
/// Eigenvalues below this are treated as exact zeros in entropies.
pub const ENTROPY_CLIP: f64 = 1e-14;
/// Smallest eigenvalue accepted when taking a matrix logarithm.
pub const POSITIVITY_FLOOR: f64 = 1e-13;
/// Boltzmann weights below this (relative to the ground state) are dropped
/// from partial traces.
const WEIGHT_CUTOFF: f64 = 1e-18;

#[derive(Clone, Debug)]
pub struct Bond {
    /// Couples sites `site` and `site + 1`.
    pub site: usize,
    pub matrix: CMat,
    pub strength: f64,
}

#[derive(Clone, Debug)]
pub struct Field {
    pub site: usize,
    pub matrix: CMat,
}

/// Open chain of sites with nearest-neighbor bonds and on-site fields.
#[derive(Clone, Debug)]
pub struct ChainSpec {
    pub site_dims: Vec<usize>,
    pub bonds: Vec<Bond>,
    pub fields: Vec<Field>,
    pub dim_cap: usize,
}

impl ChainSpec {
    pub fn new(site_dims: Vec<usize>) -> Self {
        Self { site_dims, bonds: Vec::new(), fields: Vec::new(), dim_cap: DEFAULT_DIM_CAP }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    pub fn add_bond(&mut self, site: usize, matrix: CMat, strength: f64) -> &mut Self {
        self.bonds.push(Bond { site, matrix, strength });
        self
    }

    pub fn add_field(&mut self, site: usize, matrix: CMat) -> &mut Self {
        self.fields.push(Field { site, matrix });
        self
    }

    pub fn len(&self) -> usize {
        self.site_dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_dims.is_empty()
    }

    /// Product of the site dimensions, saturating on overflow.
    pub fn total_dim(&self) -> usize {
        self.site_dims.iter().fold(1usize, |acc, &d| acc.saturating_mul(d))
    }

    pub fn validate(&self) -> Result<()> {
        if self.site_dims.is_empty() {
            return Err(Error::Spec("chain has no sites".into()));
        }
        if let Some(d) = self.site_dims.iter().find(|&&d| d == 0) {
            return Err(Error::Spec(format!("site dimension {d} is invalid")));
        }
        let dim = self.total_dim();
        if dim > self.dim_cap {
            return Err(Error::Capacity { dim, cap: self.dim_cap });
        }
        let l = self.len();
        for b in &self.bonds {
            if b.site + 1 >= l {
                return Err(Error::Spec(format!("bond at {} needs sites {}..={} but L = {l}", b.site, b.site, b.site + 1)));
            }
            let dd = self.site_dims[b.site] * self.site_dims[b.site + 1];
            if b.matrix.dim() != (dd, dd) {
                return Err(Error::Spec(format!("bond at {} must be {dd}x{dd}, got {:?}", b.site, b.matrix.dim())));
            }
        }
        for f in &self.fields {
            if f.site >= l {
                return Err(Error::Spec(format!("field at site {} but L = {l}", f.site)));
            }
            let d = self.site_dims[f.site];
            if f.matrix.dim() != (d, d) {
                return Err(Error::Spec(format!("field at {} must be {d}x{d}, got {:?}", f.site, f.matrix.dim())));
            }
        }
        Ok(())
    }
}

/// Adds `coef · (I_left ⊗ op ⊗ I_right)` into `h` without forming the
/// Kronecker product.
fn add_local_term(h: &mut CMat, op: &CMat, coef: f64, left: usize, right: usize) {
    let m = op.nrows();
    for l in 0..left {
        for a in 0..m {
            for b in 0..m {
                let v = op[[a, b]] * coef;
                if v == ZERO {
                    continue;
                }
                let row0 = (l * m + a) * right;
                let col0 = (l * m + b) * right;
                for r in 0..right {
                    h[[row0 + r, col0 + r]] += v;
                }
            }
        }
    }
}

/// Dense Hamiltonian `Σ strength·bond + Σ field` in the fixed site ordering.
pub fn build_hamiltonian(spec: &ChainSpec) -> Result<CMat> {
    spec.validate()?;
    let dim = spec.total_dim();
    let mut h = CMat::zeros((dim, dim));
    let prefix = |n: usize| spec.site_dims[..n].iter().product::<usize>();
    let suffix = |n: usize| spec.site_dims[n..].iter().product::<usize>();
    for b in &spec.bonds {
        add_local_term(&mut h, &b.matrix, b.strength, prefix(b.site), suffix(b.site + 2));
    }
    for f in &spec.fields {
        add_local_term(&mut h, &f.matrix, 1.0, prefix(f.site), suffix(f.site + 1));
    }
    Ok(h)
}

/// Eigendecomposition of a chain Hamiltonian, reusable across temperatures.
#[derive(Debug)]
pub struct Spectrum {
    pub site_dims: Vec<usize>,
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: CMat,
}

impl Spectrum {
    pub fn new(h: &CMat, site_dims: &[usize]) -> Result<Self> {
        let dim: usize = site_dims.iter().product();
        if h.dim() != (dim, dim) {
            return Err(Error::InvalidDimension(format!("H is {:?} but sites give {dim}", h.dim())));
        }
        let (eigenvalues, eigenvectors) = linalg::eigh(h)?;
        Ok(Self { site_dims: site_dims.to_vec(), eigenvalues, eigenvectors })
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Normalized Gibbs state `exp(-H/T)/Z`, held in the eigenbasis of `H`.
#[derive(Clone, Debug)]
pub struct ThermalState {
    pub spectrum: Arc<Spectrum>,
    pub temperature: f64,
    pub log_z: f64,
    /// Boltzmann populations of the eigenstates, summing to one.
    pub populations: Array1<f64>,
}

impl ThermalState {
    pub fn at(spectrum: Arc<Spectrum>, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Temperature(t));
        }
        let e0 = spectrum.ground_energy();
        let boltz = spectrum.eigenvalues.mapv(|e| (-(e - e0) / t).exp());
        let z_shifted: f64 = boltz.sum();
        let log_z = -e0 / t + z_shifted.ln();
        let populations = boltz / z_shifted;
        Ok(Self { spectrum, temperature: t, log_z, populations })
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.spectrum.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMat {
        &self.spectrum.eigenvectors
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.spectrum.site_dims
    }

    pub fn free_energy(&self) -> f64 {
        -self.temperature * self.log_z
    }

    pub fn energy(&self) -> f64 {
        self.populations.iter().zip(self.eigenvalues()).map(|(p, e)| p * e).sum()
    }

    /// Full density matrix; only sensible for modest dimensions.
    pub fn density_matrix(&self) -> CMat {
        linalg::reconstruct(&self.populations, self.eigenvectors())
    }

    /// Reduced density matrix on `keep` (ascending site indices).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<ReducedDensityMatrix> {
        let dims = self.site_dims();
        check_keep(keep, dims.len())?;
        let layout = SplitLayout::new(dims, keep);
        let pmax = self.populations.iter().cloned().fold(0.0, f64::max);
        let active: Vec<usize> =
            (0..self.populations.len()).filter(|&k| self.populations[k] > WEIGHT_CUTOFF * pmax).collect();
        let vecs = self.eigenvectors();
        let mut rho = CMat::zeros((layout.keep_dim, layout.keep_dim));
        const CHUNK: usize = 128;
        for chunk in active.chunks(CHUNK) {
            let mut phi = CMat::zeros((layout.keep_dim, layout.rest_dim * chunk.len()));
            for (c, &k) in chunk.iter().enumerate() {
                let w = self.populations[k].sqrt();
                let off = c * layout.rest_dim;
                for i in 0..layout.total {
                    let v = vecs[[i, k]];
                    if v != ZERO {
                        phi[[layout.keep_index[i], off + layout.rest_index[i]]] = v * w;
                    }
                }
            }
            rho += &phi.dot(&linalg::dagger(&phi));
        }
        let kept_dims = keep.iter().map(|&s| dims[s]).collect();
        Ok(ReducedDensityMatrix { kept_sites: keep.to_vec(), dims: kept_dims, matrix: linalg::hermitize(&rho) })
    }
}

/// Convenience constructor: diagonalize `h` and build the Gibbs state at `t`.
pub fn thermal_state(h: &CMat, site_dims: &[usize], t: f64) -> Result<ThermalState> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Temperature(t));
    }
    ThermalState::at(Arc::new(Spectrum::new(h, site_dims)?), t)
}

/// `-T ln Z`.
pub fn free_energy(h: &CMat, site_dims: &[usize], t: f64) -> Result<f64> {
    Ok(thermal_state(h, site_dims, t)?.free_energy())
}

fn check_keep(keep: &[usize], n_sites: usize) -> Result<()> {
    if keep.is_empty() {
        return Err(Error::Spec("keep_sites must be nonempty".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Spec(format!("keep_sites {keep:?} must be strictly ascending")));
    }
    if let Some(&s) = keep.iter().find(|&&s| s >= n_sites) {
        return Err(Error::Spec(format!("site {s} out of range for {n_sites} sites")));
    }
    Ok(())
}

/// Maps each basis index onto (kept multi-index, traced multi-index).
struct SplitLayout {
    total: usize,
    keep_dim: usize,
    rest_dim: usize,
    keep_index: Vec<usize>,
    rest_index: Vec<usize>,
}

impl SplitLayout {
    fn new(dims: &[usize], keep: &[usize]) -> Self {
        let total: usize = dims.iter().product();
        let keep_dim: usize = keep.iter().map(|&s| dims[s]).product();
        let rest_dim = total / keep_dim;
        let mut keep_index = vec![0; total];
        let mut rest_index = vec![0; total];
        let mut digits = vec![0usize; dims.len()];
        for i in 0..total {
            let (mut ki, mut ri) = (0, 0);
            for (s, (&dg, &d)) in digits.iter().zip(dims).enumerate() {
                if keep.contains(&s) {
                    ki = ki * d + dg;
                } else {
                    ri = ri * d + dg;
                }
            }
            keep_index[i] = ki;
            rest_index[i] = ri;
            for s in (0..dims.len()).rev() {
                digits[s] += 1;
                if digits[s] < dims[s] {
                    break;
                }
                digits[s] = 0;
            }
        }
        Self { total, keep_dim, rest_dim, keep_index, rest_index }
    }
}

/// Density matrix of a subset of sites.
#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    /// Original site indices, ascending.
    pub kept_sites: Vec<usize>,
    /// Local dimensions of the kept sites.
    pub dims: Vec<usize>,
    pub matrix: CMat,
}

impl ReducedDensityMatrix {
    /// Wraps a raw density matrix on sites `0..dims.len()`.
    pub fn from_matrix(matrix: CMat, dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if matrix.dim() != (dim, dim) {
            return Err(Error::InvalidDimension(format!("{:?} vs dims {dims:?}", matrix.dim())));
        }
        Ok(Self { kept_sites: (0..dims.len()).collect(), dims, matrix })
    }

    /// Traces further sites out; `keep` uses original site indices.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<ReducedDensityMatrix> {
        let mut local = Vec::with_capacity(keep.len());
        for s in keep {
            match self.kept_sites.iter().position(|k| k == s) {
                Some(p) => local.push(p),
                None => return Err(Error::Spec(format!("site {s} is not part of this density matrix"))),
            }
        }
        check_keep(&local, self.dims.len())?;
        let matrix = trace_out(&self.matrix, &self.dims, &local);
        let dims = local.iter().map(|&p| self.dims[p]).collect();
        Ok(ReducedDensityMatrix { kept_sites: keep.to_vec(), dims, matrix })
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }
}

/// Partial trace of a density matrix on sites with `dims`, keeping the
/// (ascending) local positions in `keep`.
pub fn trace_out(rho: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let layout = SplitLayout::new(dims, keep);
    let mut out = CMat::zeros((layout.keep_dim, layout.keep_dim));
    let mut by_rest: Vec<Vec<usize>> = vec![Vec::new(); layout.rest_dim];
    for i in 0..layout.total {
        by_rest[layout.rest_index[i]].push(i);
    }
    for group in &by_rest {
        for &i in group {
            for &j in group {
                out[[layout.keep_index[i], layout.keep_index[j]]] += rho[[i, j]];
            }
        }
    }
    out
}

fn entropy_of_spectrum(w: &Array1<f64>) -> f64 {
    w.iter().filter(|&&p| p > ENTROPY_CLIP).map(|&p| -p * p.ln()).sum()
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rdm: &ReducedDensityMatrix) -> Result<f64> {
    matrix_entropy(&rdm.matrix)
}

pub fn matrix_entropy(rho: &CMat) -> Result<f64> {
    let tr = linalg::trace(rho).re;
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::Trace(tr - 1.0));
    }
    let (w, _) = linalg::eigh(&linalg::hermitize(rho))?;
    Ok(entropy_of_spectrum(&w))
}

/// `-ln ρ`; fails if `ρ` has an eigenvalue at or below the positivity floor.
pub fn entanglement_hamiltonian(rdm: &ReducedDensityMatrix) -> Result<CMat> {
    matrix_neg_log(&rdm.matrix)
}

pub fn matrix_neg_log(rho: &CMat) -> Result<CMat> {
    let (w, v) = linalg::eigh(&linalg::hermitize(rho))?;
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= POSITIVITY_FLOOR {
        return Err(Error::RankDeficient(min));
    }
    Ok(linalg::reconstruct(&w.mapv(|x| -x.ln()), &v))
}

/// Removes the identity component `Tr(M)/n · I`.
pub fn traceless(m: &CMat) -> CMat {
    let n = m.nrows();
    let shift = linalg::trace(m) / n as f64;
    let mut out = m.clone();
    for i in 0..n {
        out[[i, i]] -= shift;
    }
    out
}

/// Real-valued dense matrix helper for tests and examples.
pub fn from_real(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    let a = Array2::from_shape_fn((n, m), |(i, j)| rows[i][j]);
    linalg::real(&a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs};
    use crate::linalg::C64;
    use crate::spin::{spin_operators, BondHamiltonian};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn two_site_ising(h: f64) -> ChainSpec {
        let mut spec = ChainSpec::new(vec![2, 2]);
        spec.add_bond(0, BondHamiltonian::ising(h).matrix, 1.0);
        spec
    }

    #[test]
    fn diagonal_two_site_hamiltonian() {
        let h = build_hamiltonian(&two_site_ising(0.0)).unwrap();
        let want = [0.25, -0.25, -0.25, 0.25];
        for i in 0..4 {
            for j in 0..4 {
                let v = if i == j { want[i] } else { 0.0 };
                assert!((h[[i, j]] - c(v)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_chain_is_zero() {
        let h = build_hamiltonian(&ChainSpec::new(vec![2, 3, 2])).unwrap();
        assert_eq!(h.dim(), (12, 12));
        assert!(max_abs(&h) == 0.0);
    }

    #[test]
    fn three_site_chain_matches_kronecker_sum() {
        let bond = BondHamiltonian::ising(0.7).matrix;
        let mut spec = ChainSpec::new(vec![2, 2, 2]);
        spec.add_bond(0, bond.clone(), 1.0).add_bond(1, bond.clone(), 0.4);
        let ops = spin_operators(2).unwrap();
        spec.add_field(2, ops.sz.clone());
        let h = build_hamiltonian(&spec).unwrap();
        let id = linalg::identity(2);
        let naive = &(&kron(&bond, &id) + &kron(&id, &bond).mapv(|z| z * 0.4)) + &kron(&linalg::identity(4), &ops.sz);
        assert!(max_abs(&(&h - &naive)) < 1e-15);
    }

    #[test]
    fn spec_errors() {
        let mut spec = ChainSpec::new(vec![2, 2]);
        spec.add_bond(1, BondHamiltonian::ising(0.1).matrix, 1.0);
        assert!(matches!(build_hamiltonian(&spec), Err(Error::Spec(_))));
        let spec = ChainSpec::new(vec![2; 16]).with_cap(1000);
        assert!(matches!(build_hamiltonian(&spec), Err(Error::Capacity { .. })));
    }

    #[test]
    fn free_spin_is_maximally_mixed() {
        let st = thermal_state(&linalg::zeros(2), &[2], 0.37).unwrap();
        let rho = st.density_matrix();
        assert!(max_abs(&(&rho - &linalg::identity(2).mapv(|z| z * 0.5))) < 1e-15);
        assert!((st.free_energy() + 0.37 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn boltzmann_closed_form_for_one_bond() {
        let h = build_hamiltonian(&two_site_ising(0.0)).unwrap();
        let st = thermal_state(&h, &[2, 2], 1.0).unwrap();
        let z = 2.0 * (-0.25f64).exp() + 2.0 * 0.25f64.exp();
        assert!((st.log_z - z.ln()).abs() < 1e-14);
        let rho = st.density_matrix();
        assert!((rho[[0, 0]].re - (-0.25f64).exp() / z).abs() < 1e-14);
        assert!((rho[[1, 1]].re - 0.25f64.exp() / z).abs() < 1e-14);
        assert!((free_energy(&h, &[2, 2], 1.0).unwrap() + z.ln()).abs() < 1e-14);
    }

    #[test]
    fn infinite_temperature_limit() {
        let mut spec = ChainSpec::new(vec![2, 2, 2]);
        spec.add_bond(0, BondHamiltonian::ising(1.0).matrix, 1.0);
        spec.add_bond(1, BondHamiltonian::ising(1.0).matrix, 1.0);
        let h = build_hamiltonian(&spec).unwrap();
        let rho = thermal_state(&h, &[2, 2, 2], 100.0).unwrap().density_matrix();
        let flat = linalg::identity(8).mapv(|z| z / 8.0);
        assert!(max_abs(&(&rho - &flat)) < 1e-2);
    }

    #[test]
    fn nonpositive_temperature_is_rejected() {
        assert!(matches!(thermal_state(&linalg::zeros(2), &[2], 0.0), Err(Error::Temperature(_))));
        assert!(matches!(thermal_state(&linalg::zeros(2), &[2], -1.0), Err(Error::Temperature(_))));
    }

    #[test]
    fn low_temperature_free_energy_approaches_ground_energy() {
        let h = BondHamiltonian::heisenberg1().matrix;
        let f = free_energy(&h, &[3, 3], 0.02).unwrap();
        // gap 1 above a unique singlet at -2
        assert!((f + 2.0).abs() < 3.0 * (-1.0f64 / 0.02).exp() * 0.02 + 1e-14);
    }

    #[test]
    fn singlet_reduces_to_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [0.0, s, -s, 0.0];
        let rho = CMat::from_shape_fn((4, 4), |(i, j)| c(psi[i] * psi[j]));
        let rdm = ReducedDensityMatrix::from_matrix(rho, vec![2, 2]).unwrap();
        let a = rdm.partial_trace(&[0]).unwrap();
        assert!(max_abs(&(&a.matrix - &linalg::identity(2).mapv(|z| z * 0.5))) < 1e-15);
        assert!((von_neumann_entropy(&a).unwrap() - 2f64.ln()).abs() < 1e-14);
        let full = ReducedDensityMatrix::from_matrix(
            CMat::from_shape_fn((4, 4), |(i, j)| c(psi[i] * psi[j])),
            vec![2, 2],
        )
        .unwrap();
        assert!(von_neumann_entropy(&full).unwrap().abs() < 1e-12);
    }

    #[test]
    fn product_state_factorizes() {
        let ra = from_real(&[&[0.7, 0.1], &[0.1, 0.3]]);
        let rb = from_real(&[&[0.2, 0.0, 0.05], &[0.0, 0.5, 0.0], &[0.05, 0.0, 0.3]]);
        let rdm = ReducedDensityMatrix::from_matrix(kron(&ra, &rb), vec![2, 3]).unwrap();
        assert!(max_abs(&(&rdm.partial_trace(&[0]).unwrap().matrix - &ra)) < 1e-15);
        assert!(max_abs(&(&rdm.partial_trace(&[1]).unwrap().matrix - &rb)) < 1e-15);
    }

    #[test]
    fn entropy_reference_values() {
        let half = ReducedDensityMatrix::from_matrix(linalg::identity(2).mapv(|z| z * 0.5), vec![2]).unwrap();
        assert!((von_neumann_entropy(&half).unwrap() - 0.693147180559945).abs() < 1e-12);
        let third = ReducedDensityMatrix::from_matrix(linalg::identity(3).mapv(|z| z / 3.0), vec![3]).unwrap();
        assert!((von_neumann_entropy(&third).unwrap() - 1.09861228866811).abs() < 1e-12);
        let bad = ReducedDensityMatrix::from_matrix(linalg::identity(2), vec![2]).unwrap();
        assert!(matches!(von_neumann_entropy(&bad), Err(Error::Trace(_))));
    }

    #[test]
    fn entanglement_hamiltonian_cases() {
        let half = ReducedDensityMatrix::from_matrix(linalg::identity(2).mapv(|z| z * 0.5), vec![2]).unwrap();
        let eh = entanglement_hamiltonian(&half).unwrap();
        assert!(max_abs(&(&eh - &linalg::identity(2).mapv(|z| z * 2f64.ln()))) < 1e-14);

        let ops = spin_operators(3).unwrap();
        let h = &ops.sz + &ops.sx.mapv(|z| z * 0.3);
        let st = thermal_state(&h, &[3], 1.0).unwrap();
        let rdm = st.partial_trace(&[0]).unwrap();
        let eh = entanglement_hamiltonian(&rdm).unwrap();
        let want = &h + &linalg::identity(3).mapv(|z| z * st.log_z);
        assert!(max_abs(&(&eh - &want)) < 1e-12);

        let pure = ReducedDensityMatrix::from_matrix(from_real(&[&[1.0, 0.0], &[0.0, 0.0]]), vec![2]).unwrap();
        assert!(matches!(entanglement_hamiltonian(&pure), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn two_site_eh_round_trip() {
        let mut spec = ChainSpec::new(vec![2, 2, 2]);
        spec.add_bond(0, BondHamiltonian::ising(0.5).matrix, 1.0);
        spec.add_bond(1, BondHamiltonian::ising(0.5).matrix, 1.0);
        let h = build_hamiltonian(&spec).unwrap();
        let rdm = thermal_state(&h, &[2, 2, 2], 0.8).unwrap().partial_trace(&[0, 1]).unwrap();
        let eh = entanglement_hamiltonian(&rdm).unwrap();
        let back = linalg::hermitian_fn(&eh, |x| (-x).exp()).unwrap();
        assert!(max_abs(&(&back - &rdm.matrix)) < 1e-10);
    }
}
