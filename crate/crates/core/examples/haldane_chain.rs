//! Spin-1 Heisenberg chain: bulk entropy of a four-site simulator over a
//! small (T, T') grid, with the cross-over and trench detectors.
use entbath::scan::{detect_tcp, detect_trench, run_scan, ScanConfig};

fn main() -> entbath::Result<()> {
    let cfg = ScanConfig::parse(
        "mode = qes_map
         model.id = heisenberg1
         size.N = 4
         grid.T.values = 0.02, 0.05, 0.1, 0.2, 0.3, 0.5
         grid.Tp.min = 0.05
         grid.Tp.max = 1
         grid.Tp.count = 8
         grid.Tp.spacing = log",
    )?;
    let out = run_scan(&cfg)?;
    let map = out.map.expect("qes_map produces a map");
    print!("{:>6}", "T\\T'");
    for x in &map.x {
        print!(" {x:>7.3}");
    }
    println!();
    for (i, t) in map.t.iter().enumerate() {
        print!("{t:>6}");
        for j in 0..map.x.len() {
            print!(" {:>7.4}", map.s(i, j).unwrap_or(f64::NAN));
        }
        println!();
    }
    let tcp = detect_tcp(&map, 0.01)?;
    println!("S0 = {:.4}, T_C = {}", tcp.s0, tcp.t_c);
    println!("trench rows flagged: {}", detect_trench(&map, 0.01).flagged().count());
    Ok(())
}
