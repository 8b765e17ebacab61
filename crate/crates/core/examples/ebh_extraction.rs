//! Entanglement-bath Hamiltonians of the Ising chain at one environment
//! temperature, with the slice round trip and the parity relations.
use entbath::boundary::{solve_boundaries, SolverConfig};
use entbath::ebh::{extract_pair, fit_coefficients, symmetry_check};
use entbath::linalg;
use entbath::spin::{BondHamiltonian, OperatorBasis};
use entbath::tn::{build_transfer_spec, DEFAULT_TAU};

fn main() -> entbath::Result<()> {
    let t_prime: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let bond = BondHamiltonian::ising(0.5);
    let spec = build_transfer_spec(&bond, t_prime, DEFAULT_TAU)?;
    let pair = solve_boundaries(&spec, &SolverConfig::default(), None)?;
    let (l, r) = extract_pair(&pair, &spec)?;
    let basis = OperatorBasis::two_site(2, 2)?;
    let cl = fit_coefficients(&l, &basis)?;
    let cr = fit_coefficients(&r, &basis)?;

    println!("T' = {t_prime} (K = {}), f = {:.10}", spec.k, pair.result.free_energy);
    for c in [&cl, &cr] {
        let terms: Vec<String> =
            c.dominant.labels.iter().zip(c.dominant.values).map(|(l, v)| format!("{l} {v:+.6}")).collect();
        println!("{:?}: {}", c.side, terms.join(", "));
    }
    for e in [&l, &r] {
        let err = linalg::max_abs(&(e.slice_operator()? - &e.boundary_operator));
        println!("{:?}: |exp(-tau EBH) - M| = {err:.1e}, gauge residual {:.1e}", e.side, e.gauge_residual);
    }
    let parity = symmetry_check(&cl, &cr);
    println!("parity: couplings {:.1e}, fields {:.1e}, passed {}", 
        parity.coupling_deviation.iter().cloned().fold(0.0, f64::max),
        parity.field_deviation.iter().cloned().fold(0.0, f64::max),
        parity.passed);
    Ok(())
}
