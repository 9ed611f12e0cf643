//! Command-line driver.
//!
//! Subcommands: `params` (print derived constants), `init` (write snapshot
//! index 0), `run` (full pipeline), `analyze` (fit and classify a recorded
//! series). Exit codes: 0 success, 1 usage error, 2 runtime error.

use mcf::config::{parse_config, RunConfig};
use mcf::diagnostics::Channel;
use mcf::{driver, snapshot};
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage: mcf <params|init|run|analyze> [--config PATH|default] [--out DIR] [--snapshot-every N]";

struct Args {
    subcommand: String,
    config: Option<String>,
    out: Option<PathBuf>,
    snapshot_every: Option<u64>,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut it = argv.iter();
    let subcommand = it.next().ok_or_else(|| "missing subcommand".to_string())?.clone();
    if !["params", "init", "run", "analyze"].contains(&subcommand.as_str()) {
        return Err(format!("unknown subcommand `{subcommand}`"));
    }
    let mut args = Args {
        subcommand,
        config: None,
        out: None,
        snapshot_every: None,
    };
    while let Some(flag) = it.next() {
        match flag.as_str() {
            "--config" => {
                args.config = Some(it.next().ok_or("--config needs a path")?.clone());
            }
            "--out" => {
                args.out = Some(PathBuf::from(it.next().ok_or("--out needs a directory")?));
            }
            "--snapshot-every" => {
                let v = it.next().ok_or("--snapshot-every needs a count")?;
                args.snapshot_every = Some(v.parse().map_err(|_| format!("`{v}` is not a count"))?);
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    Ok(args)
}

fn load_config(args: &Args) -> Result<RunConfig, mcf::Error> {
    let mut cfg = match args.config.as_deref() {
        None | Some("default") => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| mcf::Error::Config(format!("cannot read config {path}: {e}")))?;
            parse_config(&text)?
        }
    };
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(n) = args.snapshot_every {
        cfg.snapshot_stride = n;
    }
    Ok(cfg)
}

fn real_main() -> Result<ExitCode, mcf::Error> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprintln!("{USAGE}");
            return Ok(ExitCode::from(1));
        }
    };
    let cfg = load_config(&args)?;

    match args.subcommand.as_str() {
        "params" => {
            let p = driver::derive_from_config(&cfg)?;
            println!("gamma = {:e}", p.gamma);
            println!("c = {:e}", p.c);
            println!("tau0 = {:e}", p.tau0);
            println!("R1 = {:e}", p.big_r1);
            println!("beta = {:e}", p.beta);
            println!("r1 = {:e}", p.r1);
            println!("r0 = {:e}", p.r0);
            println!("T = {:e}", p.t_vanish);
            println!("L = {:e}", p.cart_side());
        }
        "init" => {
            let built = driver::build_run(&cfg)?;
            let (cart_path, cyl_path) = snapshot::write_snapshot(&built.state, &cfg.output_dir, 0)?;
            println!("cart = {}", cart_path.display());
            println!("cyl = {}", cyl_path.display());
            println!("initial_mismatch = {:e}", built.initial_mismatch);
        }
        "run" => {
            let artifacts = driver::run_to_dir(&cfg, &cfg.output_dir)?;
            println!("termination = {}", artifacts.termination.name());
            println!("steps = {}", artifacts.steps);
            println!("t_final = {:e}", artifacts.state.t());
            println!("r_min_final = {:e}", artifacts.state.cyl.r_min());
            println!("initial_mismatch = {:e}", artifacts.initial_mismatch);
            println!("series = {}", cfg.output_dir.join("series.csv").display());
            if let mcf::flow::Termination::Failed(e) = &artifacts.termination {
                eprintln!("run failed: {e}");
                return Ok(ExitCode::from(2));
            }
        }
        "analyze" => {
            let series = snapshot::read_series(&cfg.output_dir.join("series.csv"))?;
            let analysis = driver::analyze_series(&cfg, &series)?;
            let channel = match analysis.channel {
                Channel::Tip => "tip",
                Channel::Neck => "neck",
            };
            println!("channel = {channel}");
            println!("exponent = {:e}", analysis.fit.exponent);
            println!("T_est = {:e}", analysis.fit.t_est);
            println!("residual = {:e}", analysis.fit.residual);
            println!("window_lo = {:e}", analysis.fit.window.0);
            println!("window_hi = {:e}", analysis.fit.window.1);
            println!("class = {}", analysis.class);
        }
        _ => unreachable!(),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
