use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wforge::error::{Error, Result};
use wforge::figures::{self, Which};
use wforge::states::{self, EdgeVerdict};
use wforge::witness::{self, Mode, OptimizeConfig, TerminalStatus};
use wforge::{io, maps};

#[derive(Parser)]
#[command(name = "wforge", version, about = "Entanglement witness construction and optimization")]
struct Cli {
    /// Seed for every randomized search.
    #[arg(long, global = true, env = "WFORGE_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a witness from an edge state.
    Construct {
        /// Operator file, `rho_b:<b>` or `rho_tilde:<b>`.
        #[arg(long)]
        state: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize a witness by subtracting operators that vanish on its zeros.
    Optimize {
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Nd)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the iteration log (stdout when omitted).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate a witness on a state.
    Detect {
        #[arg(long)]
        witness: PathBuf,
        #[arg(long)]
        state: String,
        /// Also apply the extended positive map of the witness.
        #[arg(long)]
        via_map: bool,
    },
    /// Detection ranges of the optimized witnesses seeded from the family.
    Figures {
        /// 1: family ranges b', 2: noise tolerance lambda; both when omitted.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        which: Option<u8>,
        #[arg(long, default_value_t = 9)]
        grid: usize,
        /// CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a PPT state into a separable part and an edge remainder.
    Bsa {
        #[arg(long)]
        state: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    General,
    Nd,
}

fn config(seed: Option<u64>) -> OptimizeConfig {
    seed.map(OptimizeConfig::with_seed).unwrap_or_default()
}

fn meta(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn construct(state: &str, out: &Path, cfg: &OptimizeConfig) -> Result<()> {
    let delta = io::load_state(state)?;
    let cert = states::certify_edge(&delta, &cfg.search)?;
    if cert.verdict != EdgeVerdict::Edge {
        let reason = match cert.verdict {
            EdgeVerdict::NotEdge => "separable or reducible (a product vector and its partner lie in both ranges)",
            _ => "inconclusive",
        };
        eprintln!("not edge: {reason}");
        eprintln!("certificate: {}", serde_json::to_string(&cert_json(&cert)).unwrap_or_default());
        return Err(Error::NotEdge(reason.into()));
    }
    let built = witness::construct_from_edge(&delta, &cfg.search)?;
    let value = witness::detects(&built.witness, &delta)?.value;
    io::write_operator(
        out,
        &built.witness.op,
        meta(&[
            ("kind", json!("witness")),
            ("source", json!(state)),
            ("epsilon1", json!(built.epsilon1)),
        ]),
    )?;
    println!("epsilon1: {:.6e}", built.epsilon1);
    println!("tr(W delta): {value:.6e}");
    println!("floor: {:.3e}", built.witness.floor);
    println!("zero set: {} (span {})", built.witness.zero_set.len(), built.witness.span_dimension());
    Ok(())
}

fn cert_json(cert: &states::EdgeCertificate) -> Value {
    json!({
        "verdict": format!("{:?}", cert.verdict),
        "method": cert.method,
        "min_residual": cert.min_residual,
        "witness_of_failure": cert.witness_of_failure.as_ref().map(|v| {
            json!({
                "e": v.e.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "f": v.f.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            })
        }),
    })
}

fn optimize(path: &Path, mode: ModeArg, out: &Path, trace_path: Option<&Path>, cfg: &OptimizeConfig) -> Result<()> {
    let (op, _) = io::read_operator(path)?;
    let w = witness::validate(&op, &cfg.search)?;
    let (opt, trace) = match mode {
        ModeArg::Nd => witness::edge_iteration(&w, cfg)?,
        ModeArg::General => witness::optimize(&w, Mode::General, cfg)?,
    };
    io::write_operator(
        out,
        &opt.op,
        meta(&[
            ("kind", json!("witness")),
            ("source", json!(path.display().to_string())),
            ("status", json!(trace.terminal_status.to_string())),
        ]),
    )?;
    match trace_path {
        Some(p) => write_text(p, &trace.to_csv())?,
        None => print!("{}", trace.to_csv()),
    }
    if trace.terminal_status == TerminalStatus::EpsilonExhausted {
        eprintln!("warning: subtraction stopped before an optimality certificate was found");
    }
    for note in &trace.notes {
        eprintln!("note: {note}");
    }
    println!("status: {}", trace.terminal_status);
    println!("iterations: {}", trace.steps.len());
    println!("zero set: {} (span {})", opt.zero_set.len(), opt.span_dimension());
    Ok(())
}

fn detect(path: &Path, state: &str, via_map: bool, cfg: &OptimizeConfig) -> Result<()> {
    let (op, _) = io::read_operator(path)?;
    let w = witness::validate(&op, &cfg.search)?;
    let rho = io::load_state(state)?;
    let det = witness::detects(&w, &rho)?;
    println!("witness value: {:.6e}", det.value);
    println!("witness: {}", if det.detected { "detected" } else { "not detected" });
    if via_map {
        let m = maps::map_detects(&w, &rho)?;
        println!("map min eigenvalue: {:.6e}", m.min_eig);
        println!("map: {}", if m.detected { "detected" } else { "not detected" });
    }
    Ok(())
}

fn figures_cmd(which: Option<u8>, grid: usize, out: Option<&Path>, cfg: &OptimizeConfig) -> Result<()> {
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must be positive".into()));
    }
    let which = which.map(|w| if w == 1 { Which::Family } else { Which::Noise });
    let rows = figures::compute(&figures::grid(grid), which, cfg)?;
    let csv = figures::to_csv(&rows);
    match out {
        Some(p) => write_text(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn bsa(state: &str, out: &Path, cfg: &OptimizeConfig) -> Result<()> {
    let rho = io::load_state(state)?;
    let res = states::bsa_decompose(&rho, &cfg.search)?;
    fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    if let Some(sep) = &res.rho_sep {
        io::write_operator(&out.join("rho_sep.json"), sep, meta(&[("kind", json!("separable part"))]))?;
    }
    if let Some(delta) = &res.delta {
        io::write_operator(&out.join("delta.json"), delta, meta(&[("kind", json!("edge remainder"))]))?;
    }
    let components: Vec<Value> = res
        .components
        .iter()
        .map(|(w, v)| {
            json!({
                "weight": w,
                "e": v.e.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "f": v.f.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            })
        })
        .collect();
    let summary = json!({
        "p": res.p,
        "status": format!("{:?}", res.status),
        "reconstruction_error": res.reconstruction_error,
        "edge": res.edge.as_ref().map(cert_json),
        "components": components,
    });
    write_text(&out.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    println!("p: {:.10}", res.p);
    println!("components: {}", res.components.len());
    println!("reconstruction error: {:.3e}", res.reconstruction_error);
    println!("status: {:?}", res.status);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(cli.seed);
    match cli.command {
        Command::Construct { state, out } => construct(&state, &out, &cfg),
        Command::Optimize {
            witness,
            mode,
            out,
            trace,
        } => optimize(&witness, mode, &out, trace.as_deref(), &cfg),
        Command::Detect {
            witness,
            state,
            via_map,
        } => detect(&witness, &state, via_map, &cfg),
        Command::Figures { which, grid, out } => figures_cmd(which, grid, out.as_deref(), &cfg),
        Command::Bsa { state, out } => bsa(&state, &out, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
