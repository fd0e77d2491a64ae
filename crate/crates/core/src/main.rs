use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qforge::experiment::{
    parse_config_file, parse_u32, run_attack_experiment, run_prob_curve, selftest,
    write_curve_csv, AttackKind, ExperimentConfig, Mutation,
};

const EXIT_BELOW_THRESHOLD: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

#[derive(Parser)]
#[command(name = "qforge", version, about = "Simulated Simon-based forgery attacks on OTR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ciphertext forgery against OTR with d >= 5 blocks
    AttackOtr(RunArgs),
    /// Ciphertext forgery against OTR with d = 4 blocks
    AttackOtrD4(RunArgs),
    /// Key recovery and universal forgery against Prost-OTR-Even-Mansour
    AttackProst(RunArgs),
    /// Period recovery on planted 2-to-1 functions
    SimonDemo(RunArgs),
    /// Success-probability bound over a grid of (n, c)
    ProbCurve(CurveArgs),
    /// Fast consistency checks
    Selftest(SelftestArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Block width n
    #[arg(long)]
    bits: Option<u32>,
    /// Message length d in blocks
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Query budget factor: ceil(c * n) Simon samples per period recovery
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reduction polynomial, decimal or 0x-hex, including the x^n term
    #[arg(long)]
    poly: Option<String>,
    /// CSV output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra attempts after a failed period recovery
    #[arg(long)]
    retries: Option<usize>,
    /// Minimum success rate for exit code 0
    #[arg(long)]
    min_rate: Option<f64>,
    /// Record per-trial wall time (makes output nondeterministic)
    #[arg(long)]
    timing: bool,
    /// File of key=value lines; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
    n_list: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1.6,2,2.5,3,3.5,4,5")]
    c_list: Vec<f64>,
    /// Live trials per grid point with n <= 10; 0 skips the empirical column
    #[arg(long, default_value_t = 0)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Encrypt 4-block messages with this tag coefficient (mutation check)
    #[arg(long, hide = true)]
    mutate_coeff4: Option<u32>,
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), String> {
    let bad = |e: &dyn std::fmt::Display| format!("{key}: {e}");
    match key {
        "bits" => cfg.bits = value.parse().map_err(|e| bad(&e))?,
        "blocks" => cfg.blocks = value.parse().map_err(|e| bad(&e))?,
        "trials" => cfg.trials = value.parse().map_err(|e| bad(&e))?,
        "c" => cfg.c_factor = value.parse().map_err(|e| bad(&e))?,
        "seed" => cfg.seed = value.parse().map_err(|e| bad(&e))?,
        "poly" => cfg.poly = Some(parse_u32(value)?),
        "retries" => cfg.retries = value.parse().map_err(|e| bad(&e))?,
        "min_rate" => cfg.min_rate = value.parse().map_err(|e| bad(&e))?,
        "timing" => cfg.timing = value.parse().map_err(|e| bad(&e))?,
        "out" => {}
        other => return Err(format!("unknown config key {other:?}")),
    }
    Ok(())
}

fn build_config(attack: AttackKind, args: &RunArgs) -> Result<(ExperimentConfig, Option<PathBuf>), String> {
    let mut cfg = ExperimentConfig::new(attack);
    let mut out = None;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        for (k, v) in parse_config_file(&text)? {
            if k == "out" {
                out = Some(PathBuf::from(&v));
            }
            apply(&mut cfg, &k, &v)?;
        }
    }
    if let Some(v) = args.bits {
        cfg.bits = v;
    }
    if let Some(v) = args.blocks {
        cfg.blocks = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.c {
        cfg.c_factor = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.poly {
        cfg.poly = Some(parse_u32(v)?);
    }
    if let Some(v) = args.retries {
        cfg.retries = v;
    }
    if let Some(v) = args.min_rate {
        cfg.min_rate = v;
    }
    cfg.timing |= args.timing;
    if args.out.is_some() {
        out = args.out.clone();
    }
    cfg.validate()?;
    Ok((cfg, out))
}

fn run_experiment(attack: AttackKind, args: &RunArgs) -> anyhow::Result<ExitCode> {
    let (cfg, out) = match build_config(attack, args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    let summary = run_attack_experiment(&cfg)?;
    let mut w = output(&out)?;
    summary.write_csv(&mut w)?;
    w.flush()?;
    eprintln!(
        "{}: n={} d={} trials={} c={} success={}/{} ({:.4}) mean_queries={:.2} max_queries={} budget/recovery={} bound={:.6}",
        attack.name(),
        cfg.bits,
        cfg.blocks,
        cfg.trials,
        cfg.c_factor,
        summary.successes,
        cfg.trials,
        summary.success_rate,
        summary.mean_queries,
        summary.max_queries,
        cfg.params().budget(cfg.bits),
        summary.bound,
    );
    if summary.success_rate < cfg.min_rate {
        eprintln!("success rate {:.4} below threshold {}", summary.success_rate, cfg.min_rate);
        return Ok(ExitCode::from(EXIT_BELOW_THRESHOLD));
    }
    Ok(ExitCode::SUCCESS)
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return Ok(ExitCode::from(code));
        }
    };
    match cli.command {
        Command::AttackOtr(args) => run_experiment(AttackKind::Otr, &args),
        Command::AttackOtrD4(args) => run_experiment(AttackKind::OtrD4, &args),
        Command::AttackProst(args) => run_experiment(AttackKind::Prost, &args),
        Command::SimonDemo(args) => run_experiment(AttackKind::SimonDemo, &args),
        Command::ProbCurve(args) => {
            if args.n_list.is_empty() || args.c_list.is_empty() {
                eprintln!("error: n-list and c-list must be nonempty");
                return Ok(ExitCode::from(EXIT_USAGE));
            }
            if args.n_list.contains(&0) || args.c_list.iter().any(|c| !(*c > 0.0)) {
                eprintln!("error: n and c must be positive");
                return Ok(ExitCode::from(EXIT_USAGE));
            }
            let rows = run_prob_curve(&args.n_list, &args.c_list, args.trials, args.seed)?;
            let mut w = output(&args.out)?;
            write_curve_csv(&rows, &mut w)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest(args) => {
            let results = selftest(Mutation { coeff4: args.mutate_coeff4 });
            let mut failed = false;
            for r in &results {
                if r.passed {
                    println!("ok   {}", r.name);
                } else {
                    failed = true;
                    println!("FAIL {}", r.name);
                    eprintln!("selftest check {} failed: {}", r.name, r.detail);
                }
            }
            Ok(if failed { ExitCode::from(EXIT_SELFTEST) } else { ExitCode::SUCCESS })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
