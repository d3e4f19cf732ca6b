use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fttr_sim::compare::{compare, CompareError};
use fttr_sim::config::Scenario;
use fttr_sim::network::simulate;

const EXIT_IO: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "fttr-sim", version, about = "Deterministic discrete-event simulator of a fiber-to-the-room network")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write summary.json, flows.csv, alarms.log and schedule.txt.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// distributed_baseline, centralized_coordinated, mac_integrated or phy_relay.
        #[arg(long)]
        mode: Option<String>,
        /// Simulated duration in milliseconds.
        #[arg(long)]
        duration: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-metric deltas between two summaries of the same scenario.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file against the schema.
    Validate { scenario: PathBuf },
}

fn load(path: &PathBuf) -> Result<(Scenario, String), ExitCode> {
    let file = path.display().to_string();
    let src = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{file}: {e}");
        ExitCode::from(EXIT_IO)
    })?;
    match Scenario::parse(&src, &file) {
        Ok(sc) => Ok((sc, src)),
        Err(e) => {
            eprintln!("{e}");
            Err(ExitCode::from(EXIT_SCHEMA))
        }
    }
}

fn run(path: PathBuf, seed: Option<u64>, mode: Option<String>, duration: Option<u64>, out: Option<PathBuf>) -> ExitCode {
    let (mut sc, src) = match load(&path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(m) = mode {
        sc.mode = m;
    }
    if let Some(d) = duration {
        sc.duration_ms = d;
    }
    if let Err(e) = sc.revalidate(&src, &path.display().to_string()) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_SCHEMA);
    }
    let dir = out
        .or_else(|| sc.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&sc.name));
    let result = simulate(&sc);
    if let Err(e) = result.write_to(&dir) {
        eprintln!("{}: {e}", dir.display());
        return ExitCode::from(EXIT_IO);
    }
    println!("{}", dir.join("summary.json").display());
    let breaches = result.breaches();
    if !breaches.is_empty() {
        for b in breaches {
            eprintln!("invariant breach: {b}");
        }
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}

fn read_json(path: &PathBuf) -> Result<serde_json::Value, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })?;
    serde_json::from_str(&text).map_err(|e| {
        eprintln!("{}:{}:{}: {e}", path.display(), e.line(), e.column());
        ExitCode::from(EXIT_SCHEMA)
    })
}

fn compare_cmd(a: PathBuf, b: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let (va, vb) = match (read_json(&a), read_json(&b)) {
        (Ok(va), Ok(vb)) => (va, vb),
        (Err(c), _) | (_, Err(c)) => return c,
    };
    let report = match compare(&va, &vb) {
        Ok(r) => r,
        Err(e @ CompareError::Mismatch { .. }) => {
            eprintln!("refusing to compare: {e}");
            return ExitCode::from(EXIT_MISMATCH);
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_SCHEMA);
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match out {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, text) {
                eprintln!("{}: {e}", p.display());
                return ExitCode::from(EXIT_IO);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { scenario, seed, mode, duration, out } => run(scenario, seed, mode, duration, out),
        Cmd::Compare { a, b, out } => compare_cmd(a, b, out),
        Cmd::Validate { scenario } => match load(&scenario) {
            Ok((sc, _)) => {
                println!("{}: ok ({} SFUs, {} flows, mode {})", scenario.display(), sc.sfus.len(), sc.flows.len(), sc.mode);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
