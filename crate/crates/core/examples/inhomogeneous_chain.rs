//! Strong couplings outside a four-site bulk lower its entropy: the
//! inhomogeneous chain solved exactly.
use entbath::qes::assemble_inhomogeneous;
use entbath::qes::bulk_entropy_profile;
use entbath::spin::BondHamiltonian;

fn main() -> entbath::Result<()> {
    let bond = BondHamiltonian::ising(0.5);
    let (n_tot, n, t) = (12, 4, 1.0 / 12.0);
    for j in 1..=10 {
        let spec = assemble_inhomogeneous(n_tot, n, j as f64, &bond)?;
        let p = bulk_entropy_profile(&spec.system()?, t)?;
        println!("J = {j:>2}  S = {:.6}", p.average);
    }
    Ok(())
}
