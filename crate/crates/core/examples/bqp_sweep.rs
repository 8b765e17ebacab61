//! EBH coefficients across 1/T' for the Ising chain and the boundary quench
//! point where they jump onto the ground-state values.
use entbath::ebh::{inverse_log_grid, sweep_and_detect_bqp, SweepConfig};
use entbath::spin::BondHamiltonian;

fn main() -> entbath::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let grid = inverse_log_grid(1.0, 60.0, n);
    let start = std::time::Instant::now();
    let report = sweep_and_detect_bqp(&BondHamiltonian::ising(0.5), &grid, &SweepConfig::default())?;
    println!("{:>9} {:>10} {:>10} {:>10} {:>10}  branch", "1/T'", report.labels[0], report.labels[1], report.labels[2], report.labels[3]);
    for p in &report.points {
        let c = p.tracked();
        println!(
            "{:>9.3} {:>+10.6} {:>+10.6} {:>+10.6} {:>+10.6}  {:?}",
            1.0 / p.t_prime_effective, c[0], c[1], c[2], c[3], p.branch
        );
    }
    match report.inv_t_prime_q {
        Some(x) => println!("1/T'_Q = {x:.3}"),
        None => println!("no jump found"),
    }
    println!("{} points in {:.1?}", report.points.len(), start.elapsed());
    Ok(())
}
