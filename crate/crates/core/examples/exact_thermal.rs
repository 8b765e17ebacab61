//! Exact thermal state of a short open Ising chain: single-site entropies
//! from the low-temperature plateau up to the infinite-temperature limit.
use std::sync::Arc;

use entbath::exact::{von_neumann_entropy, ChainSpec, Spectrum, ThermalState};
use entbath::spin::BondHamiltonian;

fn main() -> entbath::Result<()> {
    let n = 8;
    let bond = BondHamiltonian::ising(0.5);
    let mut chain = ChainSpec::new(vec![2; n]);
    for s in 0..n - 1 {
        chain.add_bond(s, bond.matrix.clone(), 1.0);
    }
    let h = entbath::exact::build_hamiltonian(&chain)?;
    let spectrum = Arc::new(Spectrum::new(&h, &chain.site_dims)?);
    println!("E0 = {:.10}", spectrum.ground_energy());
    println!("{:>8} {:>12} {:>12} {:>12}", "T", "F", "S(site 0)", "S(site 4)");
    for t in [0.01, 0.05, 0.1, 0.3, 1.0, 3.0, 100.0] {
        let state = ThermalState::at(spectrum.clone(), t)?;
        let s0 = von_neumann_entropy(&state.partial_trace(&[0])?)?;
        let s4 = von_neumann_entropy(&state.partial_trace(&[4])?)?;
        println!("{t:>8} {:>12.6} {s0:>12.6} {s4:>12.6}", state.free_energy());
    }
    println!("ln 2 = {:.6}", 2f64.ln());
    Ok(())
}
