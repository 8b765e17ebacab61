//! Running a scan from configuration text and writing the CSV and JSON
//! sidecar, as the command-line tool does.
use entbath::scan::{emit_outputs, run_scan, ScanConfig};

fn main() -> entbath::Result<()> {
    let cfg = ScanConfig::parse(
        "# (T, J) map of the inhomogeneous chain
         mode = inho_map
         model.id = ising
         model.h = 0.5
         size.N = 4
         size.N_tot = 10
         grid.T.values = 0.05, 0.1, 0.2
         grid.J.min = 1
         grid.J.max = 5
         grid.J.count = 5
         output.prefix = inho",
    )?;
    let outcome = run_scan(&cfg)?;
    let dir = std::env::temp_dir().join("entbath-scan-example");
    for p in emit_outputs(&outcome, &dir, &cfg.prefix)? {
        println!("wrote {}", p.display());
    }
    print!("{}", outcome.map.expect("map").to_csv());
    Ok(())
}
