//! Bulk entropy of the bath + N + bath simulator for the Ising chain, as a
//! function of the physical temperature at two environment temperatures.
use entbath::ebh::SweepConfig;
use entbath::qes::{assemble_qes, bulk_entropy_profile};
use entbath::scan::ebh_entry;
use entbath::spin::BondHamiltonian;

fn main() -> entbath::Result<()> {
    let n = 8;
    let bond = BondHamiltonian::ising(0.5);
    let temps = [0.01, 0.02, 0.05, 0.1, 0.5];
    for tp in [0.5, 0.01] {
        let e = ebh_entry(&bond, tp, &SweepConfig::default())?;
        let system = assemble_qes(n, &bond, &e.left, &e.right)?.system()?;
        println!("T' = {tp} ({:?} branch)", e.point.branch);
        for &t in &temps {
            let p = bulk_entropy_profile(&system, t)?;
            let sites: Vec<String> = p.sites.iter().map(|s| format!("{s:.3}")).collect();
            println!("  T = {t:<5} S = {:.4}  [{}]", p.average, sites.join(" "));
        }
    }
    Ok(())
}
