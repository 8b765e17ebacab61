//! Spin matrices, the two model bonds, and their expansion in the product
//! operator basis.
use entbath::linalg;
use entbath::spin::{expand_in_basis, spin_operators, BondHamiltonian, OperatorBasis};

fn main() -> entbath::Result<()> {
    for d in [2, 3] {
        let s = spin_operators(d)?;
        let comm = s.sx.dot(&s.sy) - s.sy.dot(&s.sx);
        let err = linalg::max_abs(&(comm - s.sz.mapv(|z| z * entbath::linalg::C64::new(0.0, 1.0))));
        let casimir = s.sx.dot(&s.sx) + s.sy.dot(&s.sy) + s.sz.dot(&s.sz);
        println!("d = {d}: S = {}, |[Sx,Sy] - iSz| = {err:.1e}, S^2 = {:.6}", s.spin(), casimir[[0, 0]].re);
    }

    let bond = BondHamiltonian::ising(0.5);
    let basis = OperatorBasis::two_site(2, 2)?;
    let c = expand_in_basis(&bond.matrix, &basis)?;
    println!("\nIsing h = 0.5 bond in the normalized basis:");
    for (label, v) in basis.labels.iter().zip(&c) {
        if v.abs() > 1e-12 {
            println!("  {label:>8} {v:+.6}");
        }
    }
    let back = basis.reconstruct(&c);
    println!("round trip error {:.1e}", linalg::max_abs(&(back - &bond.matrix)));
    Ok(())
}
