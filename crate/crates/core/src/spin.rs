//! Spin operators, model bond Hamiltonians and Hermitian operator bases.
//!
//! Two-site operators always use the `(left site) ⊗ (right site)` ordering.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, CMat, C64, ONE, ZERO};

/// Spin-s matrices for local dimension `d = 2s + 1`, basis ordered from
/// `m = s` down to `m = -s`.
#[derive(Clone, Debug)]
pub struct SpinOperatorSet {
    pub d: usize,
    pub sx: CMat,
    pub sy: CMat,
    pub sz: CMat,
    pub identity: CMat,
}

impl SpinOperatorSet {
    pub fn spin(&self) -> f64 {
        (self.d as f64 - 1.0) / 2.0
    }
}

pub fn spin_operators(d: usize) -> Result<SpinOperatorSet> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("local dimension must be >= 2, got {d}")));
    }
    let s = (d as f64 - 1.0) / 2.0;
    let m = |i: usize| s - i as f64;
    let mut sz = CMat::zeros((d, d));
    let mut splus = CMat::zeros((d, d));
    for i in 0..d {
        sz[[i, i]] = C64::new(m(i), 0.0);
        if i > 0 {
            let mi = m(i);
            splus[[i - 1, i]] = C64::new((s * (s + 1.0) - mi * (mi + 1.0)).sqrt(), 0.0);
        }
    }
    let sminus = linalg::dagger(&splus);
    let sx = (&splus + &sminus).mapv(|z| z * 0.5);
    let sy = (&splus - &sminus).mapv(|z| z * C64::new(0.0, -0.5));
    Ok(SpinOperatorSet { d, sx, sy, sz, identity: linalg::identity(d) })
}

/// Built-in nearest-neighbor models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelId {
    /// `Sz⊗Sz - (h/2)(Sx⊗I + I⊗Sx)` on spin-1/2.
    Ising { h: f64 },
    /// `Sx⊗Sx + Sy⊗Sy + Sz⊗Sz` on spin-1.
    Heisenberg1,
    Custom,
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Ising { h } => write!(f, "ising(h={h})"),
            ModelId::Heisenberg1 => write!(f, "heisenberg1"),
            ModelId::Custom => write!(f, "custom"),
        }
    }
}

/// Two-site bond Hamiltonian on `d ⊗ d`.
#[derive(Clone, Debug)]
pub struct BondHamiltonian {
    pub d: usize,
    pub matrix: CMat,
    pub model: ModelId,
    pub params: BTreeMap<String, f64>,
}

impl BondHamiltonian {
    pub fn ising(h: f64) -> Self {
        bond_hamiltonian(ModelId::Ising { h }, 2).expect("Ising on spin-1/2 is always valid")
    }

    pub fn heisenberg1() -> Self {
        bond_hamiltonian(ModelId::Heisenberg1, 3).expect("spin-1 Heisenberg is always valid")
    }

    /// Wraps an arbitrary Hermitian `d² × d²` matrix.
    pub fn custom(d: usize, matrix: CMat) -> Result<Self> {
        if matrix.dim() != (d * d, d * d) {
            return Err(Error::InvalidDimension(format!(
                "custom bond must be {0}x{0}, got {1:?}",
                d * d,
                matrix.dim()
            )));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { d, matrix, model: ModelId::Custom, params: BTreeMap::new() })
    }

    /// The same bond with its two sites exchanged.
    pub fn mirrored(&self) -> CMat {
        swap_sites(&self.matrix, self.d, self.d)
    }
}

pub fn bond_hamiltonian(model: ModelId, d: usize) -> Result<BondHamiltonian> {
    let mut params = BTreeMap::new();
    let matrix = match model {
        ModelId::Ising { h } => {
            if d != 2 {
                return Err(Error::InvalidModel(format!("Ising needs d = 2, got {d}")));
            }
            let ops = spin_operators(2)?;
            let id = &ops.identity;
            params.insert("h".to_string(), h);
            let field = &kron(&ops.sx, id) + &kron(id, &ops.sx);
            &kron(&ops.sz, &ops.sz) - &field.mapv(|z| z * (h / 2.0))
        }
        ModelId::Heisenberg1 => {
            if d != 3 {
                return Err(Error::InvalidModel(format!("spin-1 Heisenberg needs d = 3, got {d}")));
            }
            let ops = spin_operators(3)?;
            &(&kron(&ops.sx, &ops.sx) + &kron(&ops.sy, &ops.sy)) + &kron(&ops.sz, &ops.sz)
        }
        ModelId::Custom => {
            return Err(Error::InvalidModel("use BondHamiltonian::custom for custom bonds".into()))
        }
    };
    Ok(BondHamiltonian { d, matrix, model, params })
}

/// Reorders a two-site operator on `da ⊗ db` into one on `db ⊗ da`.
pub fn swap_sites(op: &CMat, da: usize, db: usize) -> CMat {
    let n = da * db;
    CMat::from_shape_fn((n, n), |(r, c)| {
        let (rb, ra) = (r / da, r % da);
        let (cb, ca) = (c / da, c % da);
        op[[ra * db + rb, ca * db + cb]]
    })
}

/// Hermitian single-site basis, orthonormal under `Tr(A†B)/d`.
fn single_site_basis(d: usize) -> Result<Vec<(String, CMat)>> {
    let mut out = vec![("I".to_string(), linalg::identity(d))];
    let norm = |m: &CMat| {
        let n2 = linalg::trace(&linalg::dagger(m).dot(m)).re / d as f64;
        m.mapv(|z| z / n2.sqrt())
    };
    match d {
        2 | 3 => {
            let ops = spin_operators(d)?;
            for (label, op) in [("Sx", &ops.sx), ("Sy", &ops.sy), ("Sz", &ops.sz)] {
                out.push((label.to_string(), norm(op)));
            }
            if d == 3 {
                let (x, y, z) = (&ops.sx, &ops.sy, &ops.sz);
                let anti = |a: &CMat, b: &CMat| &a.dot(b) + &b.dot(a);
                let candidates = [
                    ("Qx2y2", &x.dot(x) - &y.dot(y)),
                    ("Qz2", &z.dot(z).mapv(|v| v * 3.0) - &linalg::identity(3).mapv(|v| v * 2.0)),
                    ("Qxy", anti(x, y)),
                    ("Qyz", anti(y, z)),
                    ("Qzx", anti(z, x)),
                ];
                for (label, op) in candidates {
                    out.push((label.to_string(), norm(&op)));
                }
            }
        }
        _ => {
            let mut k = 0;
            for j in 0..d {
                for l in (j + 1)..d {
                    let mut sym = CMat::zeros((d, d));
                    sym[[j, l]] = ONE;
                    sym[[l, j]] = ONE;
                    let mut asym = CMat::zeros((d, d));
                    asym[[j, l]] = C64::new(0.0, -1.0);
                    asym[[l, j]] = C64::new(0.0, 1.0);
                    out.push((format!("G{k}"), norm(&sym)));
                    out.push((format!("G{}", k + 1), norm(&asym)));
                    k += 2;
                }
            }
            for l in 1..d {
                let mut diag = CMat::zeros((d, d));
                for j in 0..l {
                    diag[[j, j]] = ONE;
                }
                diag[[l, l]] = C64::new(-(l as f64), 0.0);
                out.push((format!("G{k}"), norm(&diag)));
                k += 1;
            }
        }
    }
    Ok(out)
}

/// Complete orthonormal Hermitian basis of a two-site operator space.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    pub dims: (usize, usize),
    pub d_total: usize,
    pub elements: Vec<CMat>,
    pub labels: Vec<String>,
}

impl OperatorBasis {
    /// Products `a ⊗ b` of single-site bases on `d1 ⊗ d2`; labels read `"Sx⊗Sz"`.
    pub fn two_site(d1: usize, d2: usize) -> Result<Self> {
        let left = single_site_basis(d1)?;
        let right = single_site_basis(d2)?;
        let mut elements = Vec::with_capacity(left.len() * right.len());
        let mut labels = Vec::with_capacity(elements.capacity());
        for (la, a) in &left {
            for (lb, b) in &right {
                elements.push(kron(a, b));
                labels.push(format!("{la}⊗{lb}"));
            }
        }
        Ok(Self { dims: (d1, d2), d_total: d1 * d2, elements, labels })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `⟨A, B⟩ = Tr(A†B) / d_total`.
    pub fn inner(&self, a: &CMat, b: &CMat) -> C64 {
        let mut acc = ZERO;
        for (x, y) in a.iter().zip(b.iter()) {
            acc += x.conj() * y;
        }
        acc / self.d_total as f64
    }

    pub fn reconstruct(&self, coefficients: &[f64]) -> CMat {
        let mut out = CMat::zeros((self.d_total, self.d_total));
        for (c, e) in coefficients.iter().zip(&self.elements) {
            if *c != 0.0 {
                out.scaled_add(C64::new(*c, 0.0), e);
            }
        }
        out
    }
}

/// Real coefficients `cᵢ = ⟨eᵢ, op⟩` of a Hermitian operator.
pub fn expand_in_basis(op: &CMat, basis: &OperatorBasis) -> Result<Vec<f64>> {
    if op.dim() != (basis.d_total, basis.d_total) {
        return Err(Error::InvalidDimension(format!(
            "operator is {:?}, basis acts on {}",
            op.dim(),
            basis.d_total
        )));
    }
    let defect = linalg::hermiticity_defect(op);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    Ok(basis.elements.iter().map(|e| basis.inner(e, op).re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn commutator(a: &CMat, b: &CMat) -> CMat {
        &a.dot(b) - &b.dot(a)
    }

    #[test]
    fn defining_representations() {
        let half = spin_operators(2).unwrap();
        assert_eq!(half.sz[[0, 0]].re, 0.5);
        assert_eq!(half.sz[[1, 1]].re, -0.5);
        let one = spin_operators(3).unwrap();
        let diag: Vec<f64> = one.sz.diag().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn su2_algebra_holds_for_several_spins() {
        for d in 2..=6 {
            let ops = spin_operators(d).unwrap();
            let i = C64::new(0.0, 1.0);
            let c = commutator(&ops.sx, &ops.sy);
            assert!(max_abs(&(&c - &ops.sz.mapv(|z| z * i))) < 1e-14, "d = {d}");
            let c = commutator(&ops.sy, &ops.sz);
            assert!(max_abs(&(&c - &ops.sx.mapv(|z| z * i))) < 1e-14);
            let c = commutator(&ops.sz, &ops.sx);
            assert!(max_abs(&(&c - &ops.sy.mapv(|z| z * i))) < 1e-14);
            let s = ops.spin();
            let cas = &(&ops.sx.dot(&ops.sx) + &ops.sy.dot(&ops.sy)) + &ops.sz.dot(&ops.sz);
            let target = ops.identity.mapv(|z| z * s * (s + 1.0));
            assert!(max_abs(&(&cas - &target)) < 1e-13);
        }
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(spin_operators(1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn model_dimension_mismatch_is_an_error() {
        assert!(matches!(bond_hamiltonian(ModelId::Ising { h: 0.5 }, 3), Err(Error::InvalidModel(_))));
        assert!(matches!(bond_hamiltonian(ModelId::Heisenberg1, 2), Err(Error::InvalidModel(_))));
    }

    fn spectrum(m: &CMat) -> Vec<f64> {
        linalg::eigh(m).unwrap().0.to_vec()
    }

    #[test]
    fn ising_zero_field_spectrum() {
        let w = spectrum(&BondHamiltonian::ising(0.0).matrix);
        let expect = [-0.25, -0.25, 0.25, 0.25];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn heisenberg1_casimir_spectrum() {
        let w = spectrum(&BondHamiltonian::heisenberg1().matrix);
        let expect = [-2.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13, "{w:?}");
        }
    }

    #[test]
    fn ising_field_sign_is_a_unitary_equivalence() {
        for h in [0.3, 0.5, 1.7] {
            let a = spectrum(&BondHamiltonian::ising(h).matrix);
            let b = spectrum(&BondHamiltonian::ising(-h).matrix);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn basis_is_orthonormal_and_complete() {
        for (d1, d2) in [(2, 2), (2, 3), (3, 3), (4, 2)] {
            let b = OperatorBasis::two_site(d1, d2).unwrap();
            let n = d1 * d2;
            assert_eq!(b.len(), n * n);
            for i in 0..b.len() {
                assert!(linalg::hermiticity_defect(&b.elements[i]) < 1e-15);
                for j in 0..b.len() {
                    let g = b.inner(&b.elements[i], &b.elements[j]);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - C64::new(want, 0.0)).norm() < 1e-12, "({d1},{d2}) {i} {j}");
                }
            }
        }
    }

    #[test]
    fn expansion_of_basis_elements() {
        let b = OperatorBasis::two_site(2, 2).unwrap();
        let c = expand_in_basis(&linalg::identity(4), &b).unwrap();
        assert!((c[b.index_of("I⊗I").unwrap()] - 1.0).abs() < 1e-14);
        assert!(c.iter().enumerate().all(|(i, v)| i == 0 || v.abs() < 1e-14));

        let ops = spin_operators(2).unwrap();
        let sxsz = kron(&ops.sx.mapv(|z| z * 2.0), &ops.sz.mapv(|z| z * 2.0));
        let c = expand_in_basis(&sxsz, &b).unwrap();
        let k = b.index_of("Sx⊗Sz").unwrap();
        for (i, v) in c.iter().enumerate() {
            let want = if i == k { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn expansion_rejects_non_hermitian() {
        let b = OperatorBasis::two_site(2, 2).unwrap();
        let mut m = linalg::identity(4);
        m[[0, 3]] = ONE;
        assert!(matches!(expand_in_basis(&m, &b), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn swap_sites_mirrors_product_operators() {
        let ops = spin_operators(3).unwrap();
        let two = spin_operators(2).unwrap();
        let ab = kron(&ops.sz, &two.sx);
        let ba = kron(&two.sx, &ops.sz);
        assert!(max_abs(&(&swap_sites(&ab, 3, 2) - &ba)) < 1e-15);
    }
}
