//! How close the simulator's bulk entanglement Hamiltonian is to that of a
//! larger periodic chain, compared with simply cutting out an open chain.
use entbath::ebh::SweepConfig;
use entbath::qes::{assemble_qes, eh_distance, open_chain, System};
use entbath::scan::ebh_entry;
use entbath::spin::BondHamiltonian;

fn main() -> entbath::Result<()> {
    let (n, t) = (4, 0.5);
    let ring_len: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let bond = BondHamiltonian::ising(0.5);
    let e = ebh_entry(&bond, t, &SweepConfig::default())?;
    let qes = assemble_qes(n, &bond, &e.left, &e.right)?.system()?;
    let open = System::from_chain(&open_chain(n, &bond)?, (0..n).collect())?;
    let ring = System::ring(&bond, ring_len, n)?;
    println!("ring of {ring_len}, bulk of {n}, T = T' = {t}");
    println!("  simulator  {:.6}", eh_distance(&qes, &ring, t)?);
    println!("  open chain {:.6}", eh_distance(&open, &ring, t)?);
    Ok(())
}
