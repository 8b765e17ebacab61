//! A hot bath on the left and a cold one on the right: the site entropies
//! fall across the bulk.
use entbath::ebh::SweepConfig;
use entbath::qes::{assemble_qes, bulk_entropy_profile};
use entbath::scan::ebh_entry;
use entbath::spin::BondHamiltonian;

fn main() -> entbath::Result<()> {
    let bond = BondHamiltonian::ising(0.5);
    let cfg = SweepConfig::default();
    let hot = ebh_entry(&bond, 8.0, &cfg)?;
    let cold = ebh_entry(&bond, 1e-3, &cfg)?;
    let system = assemble_qes(8, &bond, &hot.left, &cold.right)?.system()?;
    for t in [0.05, 0.1, 0.5] {
        let p = bulk_entropy_profile(&system, t)?;
        let sites: Vec<String> = p.sites.iter().map(|s| format!("{s:.4}")).collect();
        println!("T = {t:<4} {}", sites.join(" "));
    }
    Ok(())
}
