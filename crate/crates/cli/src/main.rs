//! tfkeyrate: finite-key rates, distance scans, network tables, Monte Carlo
//! cross-checks and SNS source diagnostics from a JSON scenario.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use tfqkd_core::diagnostics::{
    channel_single_photon_yields, plob_bound, sns_constraint_residual, sns_phase_error_bound,
    sns_quantum_coin_delta,
};
use tfqkd_core::event_sim::{monte_carlo_report, MonteCarloConfig};
use tfqkd_core::planner::{distance_scan, evaluate_network, optimize_delta, orient, NetworkNode};
use tfqkd_core::{evaluate_link, Error, LinkGeometry, Mode, SystemParams};

use config::{ConfigError, ScenarioDocument};

const EXIT_INVALID: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "tfkeyrate",
    version,
    about = "Two-photon twin-field QKD key-rate analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario document (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, env = "TFKEYRATE_THREADS")]
    threads: Option<usize>,

    /// Use asymptotic bounds (no finite-size corrections).
    #[arg(long, global = true)]
    asymptotic: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Key-rate breakdown for a two-node scenario (JSON).
    Keyrate,
    /// Optimized rate against total distance (CSV).
    Scan,
    /// Pairwise rates for every node pair (CSV).
    Network,
    /// Event-level simulation compared with the analytic model (JSON).
    Montecarlo,
    /// SNS source constraint, coin imbalance and phase-error bound (JSON).
    SnsCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Keyrate => "keyrate",
            Command::Scan => "scan",
            Command::Network => "network",
            Command::Montecarlo => "montecarlo",
            Command::SnsCheck => "sns-check",
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InfeasibleDecoy(_) | Error::MissingDeclareVacuum(_) => EXIT_INFEASIBLE,
            Error::Domain { .. } | Error::InvalidSetting(_) | Error::InvalidParams(_) => {
                EXIT_INVALID
            }
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

/// Primary output plus an optional sidecar written next to it.
struct Output {
    body: String,
    sidecar: Option<String>,
}

fn json_text<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn meta(cmd: Command, doc: &ScenarioDocument, mode: Mode) -> serde_json::Value {
    json!({
        "tool": "tfkeyrate",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "mode": mode,
        "seed": doc.seed,
        "config": doc,
    })
}

/// The two nodes of a link scenario, closer node first.
fn link_nodes(doc: &ScenarioDocument) -> Result<(NetworkNode, NetworkNode), Failure> {
    let scn = doc.network()?;
    if scn.nodes.len() != 2 {
        return Err(invalid(format!(
            "this command needs exactly two nodes, got {}",
            scn.nodes.len()
        )));
    }
    let (a, b) = orient(&scn.nodes[0], &scn.nodes[1]);
    Ok((a.clone(), b.clone()))
}

/// Slice half-width: the fixed one, or the best for these settings.
fn link_delta(
    doc: &ScenarioDocument,
    a: &NetworkNode,
    b: &NetworkNode,
    params: &SystemParams,
    mode: Mode,
) -> f64 {
    match doc.system.delta_deg {
        Some(d) => d.to_radians(),
        None => {
            let geom = LinkGeometry::new(a.distance_km, b.distance_km);
            optimize_delta(
                &a.setting,
                &b.setting,
                &geom,
                params,
                &doc.optimizer_options(mode),
            )
        }
    }
}

fn cmd_keyrate(doc: &ScenarioDocument, mode: Mode) -> Result<Output, Failure> {
    let (a, b) = link_nodes(doc)?;
    let params = doc.system.params()?;
    let delta = link_delta(doc, &a, &b, &params, mode);
    let geom = LinkGeometry::new(a.distance_km, b.distance_km);
    let opts = doc.optimizer_options(mode);
    let result = evaluate_link(
        &a.setting,
        &b.setting,
        &geom,
        &params.with_delta(delta),
        mode,
        opts.mx_form,
    )?;
    let plob = plob_bound(geom.total_km(), params.eta_d, params.alpha_db_per_km);
    let body = json!({
        "meta": meta(Command::Keyrate, doc, mode),
        "node_a": a.name,
        "node_b": b.name,
        "l_a_km": geom.l_a_km,
        "l_b_km": geom.l_b_km,
        "delta_deg": delta.to_degrees(),
        "plob": plob,
        "exceeds_plob": result.rate > plob,
        "result": result,
    });
    Ok(Output {
        body: json_text(&body),
        sidecar: None,
    })
}

fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

fn cmd_scan(doc: &ScenarioDocument, mode: Mode) -> Result<Output, Failure> {
    let scan = doc
        .scan
        .as_ref()
        .ok_or_else(|| invalid("scan needs a \"scan\" block"))?;
    let grid = scan.grid()?;
    let params = doc.system.params()?;
    let rows = distance_scan(&params, scan.split(), &grid, &doc.optimizer_options(mode))?;
    let mut body = String::from("total_km,rate_finite,rate_asymptotic,plob\n");
    for r in &rows {
        let finite = if mode == Mode::Asymptotic {
            r.rate_asymptotic
        } else {
            r.rate_finite
        };
        body.push_str(&format!(
            "{},{},{},{}\n",
            sci(r.total_km),
            sci(finite),
            sci(r.rate_asymptotic),
            sci(r.plob)
        ));
    }
    let side = json!({
        "meta": meta(Command::Scan, doc, mode),
        "rows": rows,
    });
    Ok(Output {
        body,
        sidecar: Some(json_text(&side)),
    })
}

fn cmd_network(doc: &ScenarioDocument, mode: Mode) -> Result<Output, Failure> {
    let scn = doc.network()?;
    if scn.nodes.len() < 2 {
        return Err(invalid("network needs at least two nodes"));
    }
    let report = evaluate_network(&scn, &doc.optimizer_options(mode))?;
    let mut body = String::from(
        "node_a,node_b,l_a_km,l_b_km,total_km,delta_deg,rate,plob,ratio,exceeds_plob\n",
    );
    for r in &report.rows {
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.node_a,
            r.node_b,
            sci(r.l_a_km),
            sci(r.l_b_km),
            sci(r.total_km),
            sci(r.delta_deg),
            sci(r.rate),
            sci(r.plob),
            sci(r.ratio),
            r.exceeds_plob
        ));
    }
    let side = json!({
        "meta": meta(Command::Network, doc, mode),
        "settings": report.settings,
        "anchor_rates": report.anchor_rates,
        "rows": report.rows,
    });
    Ok(Output {
        body,
        sidecar: Some(json_text(&side)),
    })
}

fn cmd_montecarlo(doc: &ScenarioDocument) -> Result<Output, Failure> {
    let block = doc
        .montecarlo
        .as_ref()
        .ok_or_else(|| invalid("montecarlo needs a \"montecarlo\" block"))?;
    let (a, b) = link_nodes(doc)?;
    let params = doc.system.params()?;
    let delta = link_delta(doc, &a, &b, &params, Mode::Finite);
    let cfg = MonteCarloConfig {
        a: a.setting,
        b: b.setting,
        geom: LinkGeometry::new(a.distance_km, b.distance_km),
        params: params.with_delta(delta),
        n_rounds: block.rounds,
        seed: doc.seed,
        match_bins: block.match_bins,
    };
    let report = monte_carlo_report(&cfg)?;
    let body = json!({
        "meta": meta(Command::Montecarlo, doc, Mode::Finite),
        "node_a": a.name,
        "node_b": b.name,
        "delta_deg": delta.to_degrees(),
        "report": report,
    });
    Ok(Output {
        body: json_text(&body),
        sidecar: None,
    })
}

fn cmd_sns_check(doc: &ScenarioDocument) -> Result<Output, Failure> {
    let block = doc
        .sns
        .as_ref()
        .ok_or_else(|| invalid("sns-check needs an \"sns\" block"))?;
    let setting = block.setting();
    let params = doc.system.params()?;
    let residual = sns_constraint_residual(&setting)?;
    let (y10, y01) = channel_single_photon_yields(&block.geometry()?, &params)?;
    let (coin, phase) = match sns_quantum_coin_delta(&setting, y10, y01) {
        Ok(c) => {
            let bound = sns_phase_error_bound(c.delta, block.x_error_rate)?;
            (json!(c), json!(bound))
        }
        Err(Error::UnusableCoin(d)) => (json!({ "unusable_delta": d }), serde_json::Value::Null),
        Err(e) => return Err(e.into()),
    };
    let body = json!({
        "meta": meta(Command::SnsCheck, doc, Mode::Finite),
        "residual": residual,
        "y10": y10,
        "y01": y01,
        "coin": coin,
        "phase_error": phase,
    });
    Ok(Output {
        body: json_text(&body),
        sidecar: None,
    })
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| invalid("--config <path> is required"))?;
    let mut doc = ScenarioDocument::load(&path.to_string_lossy())?;
    if let Some(seed) = cli.seed {
        doc.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be >= 1"));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let mode = if cli.asymptotic {
        Mode::Asymptotic
    } else {
        Mode::Finite
    };
    match cli.command {
        Command::Keyrate => cmd_keyrate(&doc, mode),
        Command::Scan => cmd_scan(&doc, mode),
        Command::Network => cmd_network(&doc, mode),
        Command::Montecarlo => cmd_montecarlo(&doc),
        Command::SnsCheck => cmd_sns_check(&doc),
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn emit(cli: &Cli, output: &Output) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &output.body)?;
            if let Some(side) = &output.sidecar {
                std::fs::write(sidecar_path(path), side)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(output.body.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => match emit(&cli, &output) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("tfkeyrate: cannot write output: {e}");
                ExitCode::from(1)
            }
        },
        Err(f) => {
            eprintln!("tfkeyrate: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
