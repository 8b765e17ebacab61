use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entbath::ebh::{self, EbhCoefficients};
use entbath::scan::{self, Mode, ScanConfig, ScanOutcome};
use entbath::{Error, Result};

#[derive(Parser)]
#[command(name = "entbath", version, about = "Entanglement-bath Hamiltonians and bulk entropy maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (flat key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scan described by the config.
    Scan,
    /// EBH sweep over the T' grid and boundary quench point detection.
    Bqp,
    /// Extract the EBHs at a single T' and print their coefficients.
    Ebh {
        /// Environment temperature; defaults to the first grid.Tp value.
        #[arg(long = "t-prime")]
        t_prime: Option<f64>,
    },
    /// Entropy map of the inhomogeneous chain over (T, J).
    Inho,
    /// Re-run the detectors on a CSV written by an earlier run.
    Detect {
        csv: PathBuf,
        #[arg(long, default_value_t = scan::DEFAULT_TCP_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = scan::DEFAULT_TRENCH_DEPTH)]
        trench_depth: f64,
        #[arg(long, default_value_t = ebh::DEFAULT_JUMP_THRESHOLD)]
        jump_threshold: f64,
    },
}

fn read_config(path: Option<&Path>) -> Result<String> {
    let path = path.ok_or_else(|| Error::Config("--config is required".into()))?;
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn print_coefficients(c: &EbhCoefficients) {
    println!("{:?} EBH (residual {:.2e})", c.side, c.extraction_residual);
    for (l, v) in c.dominant.labels.iter().zip(c.dominant.values) {
        println!("  {l:>12} {v:>+.8}");
    }
}

fn summarize(outcome: &ScanOutcome) {
    if let Some(b) = &outcome.bqp {
        match b.inv_t_prime_q {
            Some(x) => println!("boundary quench point: 1/T' = {x:.4} (T' = {:.6})", 1.0 / x),
            None => println!("boundary quench point: not found"),
        }
        if !b.missing.is_empty() {
            println!("{} grid points missing", b.missing.len());
        }
    }
    if let Some(m) = &outcome.map {
        println!("entropy map {} x {} ({} missing)", m.t.len(), m.x.len(), m.missing());
    }
    if let Some(t) = &outcome.tcp {
        println!("thermal cross-over: T_C = {:.6}, S0 = {:.6}", t.t_c, t.s0);
    }
    if let Some(tr) = &outcome.trench {
        for r in tr.flagged() {
            println!("trench at T = {:.6}: T' = {:.6}, depth {:.4}", r.t, r.t_prime_min.unwrap_or(f64::NAN), r.depth);
        }
    }
}

fn run_mode(cli: &Cli, forced: Option<Mode>) -> Result<()> {
    let cfg = ScanConfig::parse_as(&read_config(cli.config.as_deref())?, forced)?;
    let outcome = scan::run_scan(&cfg)?;
    summarize(&outcome);
    for p in scan::emit_outputs(&outcome, &cli.out, &cfg.prefix)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Scan => run_mode(cli, None),
        Command::Bqp => run_mode(cli, Some(Mode::BqpSweep)),
        Command::Inho => run_mode(cli, Some(Mode::InhoMap)),
        Command::Ebh { t_prime } => {
            let cfg = match &cli.config {
                Some(p) => ScanConfig::parse_unchecked(&read_config(Some(p))?)?,
                None => ScanConfig::default(),
            };
            let t_prime = t_prime
                .or_else(|| cfg.tp_grid.as_ref().map(|g| g.values[0]))
                .ok_or_else(|| Error::Config("give --t-prime or grid.Tp".into()))?;
            if !(t_prime > 0.0) {
                return Err(Error::Config(format!("T' = {t_prime} must be positive")));
            }
            let bond = cfg.model.bond()?;
            let entry = scan::ebh_entry(&bond, t_prime, &cfg.sweep_config())?;
            let p = &entry.point;
            println!(
                "T' = {t_prime} (effective {:.8}, K = {}), f = {:.12}, branch {:?}",
                p.t_prime_effective, p.k, p.free_energy, p.branch
            );
            print_coefficients(&p.left);
            print_coefficients(&p.right);
            if p.parity.applicable {
                println!("parity relations: {}", if p.parity.passed { "hold" } else { "violated" });
            }
            std::fs::create_dir_all(&cli.out)?;
            let log = cli.out.join(format!("{}_ebh.log", cfg.prefix));
            std::fs::write(&log, entry.run_log())?;
            let json = cli.out.join(format!("{}_ebh.json", cfg.prefix));
            let text = serde_json::to_string_pretty(p).map_err(|e| Error::Io(std::io::Error::other(e)))?;
            std::fs::write(&json, text + "\n")?;
            println!("wrote {}\nwrote {}", log.display(), json.display());
            Ok(())
        }
        Command::Detect { csv, epsilon, trench_depth, jump_threshold } => {
            let text = std::fs::read_to_string(csv)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", csv.display())))?;
            let d = scan::redetect(&text, *epsilon, *trench_depth, *jump_threshold)?;
            let out = serde_json::to_string_pretty(&d).map_err(|e| Error::Io(std::io::Error::other(e)))?;
            println!("{out}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
