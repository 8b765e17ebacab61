//! Finite simulators: the bath–bulk–bath QES chain, the inhomogeneous chain
//! with strong environment couplings, and the bulk observables used to
//! compare them.

use std::sync::Arc;

use crate::ebh::EbhOperator;
use crate::error::{Error, Result};
use crate::exact::{self, ChainSpec, Spectrum, ThermalState};
use crate::linalg::{self, CMat};
use crate::spin::BondHamiltonian;
use crate::tn::{self, Side};

/// Default cap on the total inhomogeneous chain length for spin-1/2.
pub const MAX_INHOMO_SITES: usize = 14;

/// Bath, `N` bulk sites, bath.
#[derive(Clone, Debug)]
pub struct QesSpec {
    pub n: usize,
    pub bond: BondHamiltonian,
    pub ebh_left: EbhOperator,
    pub ebh_right: EbhOperator,
    pub chain: ChainSpec,
}

impl QesSpec {
    pub fn bath_dims(&self) -> (usize, usize) {
        (self.ebh_left.bath_dim, self.ebh_right.bath_dim)
    }

    /// Indices of the bulk sites in the chain.
    pub fn bulk_sites(&self) -> Vec<usize> {
        (1..=self.n).collect()
    }

    pub fn system(&self) -> Result<System> {
        System::from_chain(&self.chain, self.bulk_sites())
    }
}

pub fn assemble_qes(n: usize, bond: &BondHamiltonian, ebh_left: &EbhOperator, ebh_right: &EbhOperator) -> Result<QesSpec> {
    assemble_qes_with_cap(n, bond, ebh_left, ebh_right, exact::DEFAULT_DIM_CAP)
}

pub fn assemble_qes_with_cap(
    n: usize,
    bond: &BondHamiltonian,
    ebh_left: &EbhOperator,
    ebh_right: &EbhOperator,
    cap: usize,
) -> Result<QesSpec> {
    if n == 0 {
        return Err(Error::Spec("the bulk needs at least one site".into()));
    }
    if ebh_left.side != Side::Left || ebh_right.side != Side::Right {
        return Err(Error::Spec("EBHs must be a left and a right operator".into()));
    }
    let d = bond.d;
    if ebh_left.site_dim != d || ebh_right.site_dim != d {
        return Err(Error::InvalidDimension(format!(
            "EBH site dimensions ({}, {}) do not match the bulk d = {d}",
            ebh_left.site_dim, ebh_right.site_dim
        )));
    }
    let (cl, cr) = (ebh_left.bath_dim, ebh_right.bath_dim);
    let mut dims = vec![cl];
    dims.extend(std::iter::repeat_n(d, n));
    dims.push(cr);
    let mut chain = ChainSpec::new(dims).with_cap(cap);
    chain.add_bond(0, ebh_left.matrix.clone(), 1.0);
    for s in 1..n {
        chain.add_bond(s, bond.matrix.clone(), 1.0);
    }
    chain.add_bond(n, ebh_right.matrix.clone(), 1.0);
    chain.validate()?;
    Ok(QesSpec { n, bond: bond.clone(), ebh_left: ebh_left.clone(), ebh_right: ebh_right.clone(), chain })
}

/// Open chain of `n_tot` sites with a centred bulk of `n` sites. Bonds inside
/// the bulk and the two bonds joining it to the environment have strength 1,
/// all others `j`.
#[derive(Clone, Debug)]
pub struct InhomoSpec {
    pub n_tot: usize,
    pub n: usize,
    pub j: f64,
    pub offset: usize,
    pub strengths: Vec<f64>,
    pub chain: ChainSpec,
}

impl InhomoSpec {
    pub fn bulk_sites(&self) -> Vec<usize> {
        (self.offset..self.offset + self.n).collect()
    }

    pub fn system(&self) -> Result<System> {
        System::from_chain(&self.chain, self.bulk_sites())
    }
}

pub fn bond_strengths(n_tot: usize, n: usize, j: f64) -> Vec<f64> {
    let offset = (n_tot - n) / 2;
    (0..n_tot.saturating_sub(1))
        .map(|b| if b + 1 >= offset && b < offset + n { 1.0 } else { j })
        .collect()
}

pub fn assemble_inhomogeneous(n_tot: usize, n: usize, j: f64, bond: &BondHamiltonian) -> Result<InhomoSpec> {
    if n == 0 || n > n_tot {
        return Err(Error::Spec(format!("bulk of {n} sites does not fit a chain of {n_tot}")));
    }
    if bond.d == 2 && n_tot > MAX_INHOMO_SITES {
        return Err(Error::Capacity { dim: 1usize << n_tot.min(63), cap: 1 << MAX_INHOMO_SITES });
    }
    if !j.is_finite() {
        return Err(Error::Spec(format!("coupling J = {j} is not finite")));
    }
    let strengths = bond_strengths(n_tot, n, j);
    let cap = exact::DEFAULT_DIM_CAP.max(1 << MAX_INHOMO_SITES);
    let mut chain = ChainSpec::new(vec![bond.d; n_tot]).with_cap(cap);
    for (b, &s) in strengths.iter().enumerate() {
        chain.add_bond(b, bond.matrix.clone(), s);
    }
    chain.validate()?;
    Ok(InhomoSpec { n_tot, n, j, offset: (n_tot - n) / 2, strengths, chain })
}

/// Open chain of `n` identical bonds.
pub fn open_chain(n: usize, bond: &BondHamiltonian) -> Result<ChainSpec> {
    let mut chain = ChainSpec::new(vec![bond.d; n]);
    for s in 0..n.saturating_sub(1) {
        chain.add_bond(s, bond.matrix.clone(), 1.0);
    }
    chain.validate()?;
    Ok(chain)
}

/// A diagonalized Hamiltonian with a designated bulk region.
#[derive(Clone, Debug)]
pub struct System {
    pub spectrum: Arc<Spectrum>,
    pub bulk: Vec<usize>,
}

impl System {
    pub fn new(h: &CMat, site_dims: &[usize], bulk: Vec<usize>) -> Result<Self> {
        if let Some(&s) = bulk.iter().find(|&&s| s >= site_dims.len()) {
            return Err(Error::Spec(format!("bulk site {s} outside a chain of {}", site_dims.len())));
        }
        Ok(Self { spectrum: Arc::new(Spectrum::new(h, site_dims)?), bulk })
    }

    pub fn from_chain(chain: &ChainSpec, bulk: Vec<usize>) -> Result<Self> {
        Self::new(&exact::build_hamiltonian(chain)?, &chain.site_dims, bulk)
    }

    /// Periodic translation-invariant ring of `l` sites, with the bulk taken
    /// as `n` consecutive sites.
    pub fn ring(bond: &BondHamiltonian, l: usize, n: usize) -> Result<Self> {
        if n > l {
            return Err(Error::Spec(format!("bulk of {n} sites does not fit a ring of {l}")));
        }
        Self::new(&tn::ring_hamiltonian(bond, l)?, &vec![bond.d; l], (0..n).collect())
    }

    pub fn thermal(&self, t: f64) -> Result<ThermalState> {
        ThermalState::at(self.spectrum.clone(), t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyProfile {
    pub t: f64,
    pub sites: Vec<f64>,
    pub average: f64,
}

/// Single-site von Neumann entropies of the bulk sites and their mean.
pub fn bulk_entropy_profile(system: &System, t: f64) -> Result<EntropyProfile> {
    let state = system.thermal(t)?;
    let bulk = state.partial_trace(&system.bulk)?;
    let sites = system
        .bulk
        .iter()
        .map(|&s| exact::von_neumann_entropy(&bulk.partial_trace(&[s])?))
        .collect::<Result<Vec<f64>>>()?;
    let average = sites.iter().sum::<f64>() / sites.len().max(1) as f64;
    Ok(EntropyProfile { t, sites, average })
}

/// Traceless entanglement Hamiltonian of the bulk region.
pub fn bulk_entanglement_hamiltonian(system: &System, t: f64) -> Result<CMat> {
    let state = system.thermal(t)?;
    let rdm = state.partial_trace(&system.bulk)?;
    Ok(exact::traceless(&exact::entanglement_hamiltonian(&rdm)?))
}

/// Frobenius distance between the bulk entanglement Hamiltonians of two
/// systems with equal bulk dimension.
pub fn eh_distance(a: &System, b: &System, t: f64) -> Result<f64> {
    let dims = |s: &System| s.bulk.iter().map(|&i| s.spectrum.site_dims[i]).collect::<Vec<_>>();
    if dims(a) != dims(b) {
        return Err(Error::InvalidDimension(format!("bulk dims {:?} and {:?} differ", dims(a), dims(b))));
    }
    let ea = bulk_entanglement_hamiltonian(a, t)?;
    let eb = bulk_entanglement_hamiltonian(b, t)?;
    Ok(linalg::frobenius(&(&ea - &eb)))
}
