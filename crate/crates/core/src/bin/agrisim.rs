use std::fmt::Display;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Parser, Subcommand};

use agrisim::edge::link::{run_live, LiveError};
use agrisim::edge::{run_scenario, ScenarioConfig};
use agrisim::power::{evaluate_chain, PowerChainSpec, PowerError, RegulatorCode};
use agrisim::service::{Clock, ServeOptions, Server, ServiceConfig};

#[derive(Parser)]
#[command(name = "agrisim", version, about = "Smart-irrigation simulator and decision service")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its telemetry log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Start the ingest listener and HTTP API.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Defaults to PORT+1.
        #[arg(long)]
        ingest_port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Judge staleness against the newest record instead of the wall clock.
        #[arg(long)]
        log_clock: bool,
        #[arg(long, default_value_t = 300.0)]
        staleness_s: f64,
        /// Sync the log every N records; 0 syncs only at shutdown.
        #[arg(long, default_value_t = 1)]
        fsync_every: u32,
    },
    /// Evaluate a transformer, rectifier and regulator chain.
    Power {
        #[arg(long)]
        line: f64,
        #[arg(long)]
        ratio: f64,
        #[arg(long)]
        reg: u16,
        /// Regulator input if it differs from the rectifier output.
        #[arg(long)]
        vin: Option<f64>,
        #[arg(long, default_value_t = 500.0)]
        current: f64,
    },
    /// Run a scenario against a live service, taking its overrides.
    Live {
        #[arg(long)]
        scenario: PathBuf,
        /// Ingest address, e.g. 127.0.0.1:8081.
        #[arg(long)]
        connect: String,
        #[arg(long, default_value_t = 1000)]
        pace_ms: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

struct Failure {
    field: String,
    message: String,
    code: u8,
}

fn fail(field: impl Into<String>, code: u8, e: impl Display) -> Failure {
    Failure {
        field: field.into(),
        message: e.to_string(),
        code,
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .init();

    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let result = match cli.cmd {
        Cmd::Run { scenario, out, seed } => cmd_run(&scenario, &out, seed),
        Cmd::Serve {
            port,
            store,
            replay,
            ingest_port,
            host,
            log_clock,
            staleness_s,
            fsync_every,
        } => {
            let config = ServiceConfig {
                staleness_s,
                fsync_every,
                clock: if log_clock { Clock::Log } else { Clock::Wall },
                ..ServiceConfig::default()
            };
            let opts = ServeOptions {
                host,
                port,
                ingest_port,
                store,
                replay,
                config,
            };
            cmd_serve(opts)
        }
        Cmd::Power {
            line,
            ratio,
            reg,
            vin,
            current,
        } => cmd_power(line, ratio, reg, vin, current),
        Cmd::Live {
            scenario,
            connect,
            pace_ms,
            seed,
        } => cmd_live(&scenario, &connect, pace_ms, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ERROR {}: {}", f.field, f.message.lines().next().unwrap_or(""));
            ExitCode::from(f.code)
        }
    }
}

fn usage_error(e: clap::Error) -> ExitCode {
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        let _ = e.print();
        return ExitCode::SUCCESS;
    }
    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
        let _ = e.print();
        return ExitCode::from(2);
    }
    let field = match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s
            .trim_start_matches('-')
            .split([' ', '='])
            .next()
            .unwrap_or("args")
            .to_string(),
        Some(ContextValue::Strings(v)) if !v.is_empty() => v[0]
            .trim_start_matches('-')
            .split([' ', '='])
            .next()
            .unwrap_or("args")
            .to_string(),
        _ => "args".to_string(),
    };
    let rendered = e.to_string();
    let message = rendered.lines().next().unwrap_or("").trim_start_matches("error: ");
    eprintln!("ERROR {field}: {message}");
    ExitCode::from(2)
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail("scenario", 2, format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::from_json(&text).map_err(|e| fail(e.field, 2, e.message))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn cmd_run(scenario: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let cfg = load_scenario(scenario, seed)?;
    let run = run_scenario(&cfg).map_err(|e| fail(e.field, 2, e.message))?;
    write_atomic(out, run.log().as_bytes()).map_err(|e| fail("out", 1, format!("{}: {e}", out.display())))?;
    let s = run.summary();
    println!(
        "records={} volume_ml={:.2} pump_duty={:.4} transitions={} dht_faults={}",
        s.records, s.total_volume_ml, s.pump_duty, s.pump_transitions, s.dht_faults
    );
    Ok(())
}

/// Writes next to the target and renames, so readers never see a torn file.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn cmd_serve(opts: ServeOptions) -> Result<(), Failure> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| fail("runtime", 1, e))?;
    rt.block_on(async {
        let server = Server::bind(opts)
            .await
            .map_err(|e| fail(e.field, e.exit_code, e.message))?;
        let http = server.http_addr().map_err(|e| fail("port", 1, e))?;
        let ingest = server.ingest_addr().map_err(|e| fail("ingest-port", 1, e))?;
        println!("http={http} ingest={ingest}");
        let _ = std::io::stdout().flush();
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        server.run(shutdown).await.map_err(|e| fail("store", 1, e))
    })
}

fn cmd_power(line: f64, ratio: f64, reg: u16, vin: Option<f64>, current: f64) -> Result<(), Failure> {
    let power_fail = |e: PowerError| {
        let field = match &e {
            PowerError::NonPositive { field, .. } => match *field {
                "line_v" => "line",
                "turns_ratio" | "ratio" => "ratio",
                "regulator_in_v" => "vin",
                other => other,
            },
            PowerError::UnknownRegulator(_) => "reg",
        };
        fail(field, 2, e)
    };
    let spec = PowerChainSpec {
        line_v: line,
        turns_ratio: ratio,
        regulator: RegulatorCode::new(reg).map_err(power_fail)?,
        regulator_in_v: vin,
        output_current_ma: current,
    };
    let report = evaluate_chain(spec).map_err(power_fail)?;
    println!("{report}");
    Ok(())
}

fn cmd_live(scenario: &Path, connect: &str, pace_ms: u64, seed: Option<u64>) -> Result<(), Failure> {
    let cfg = load_scenario(scenario, seed)?;
    match run_live(cfg, connect, Duration::from_millis(pace_ms)) {
        Ok(n) => {
            println!("records={n}");
            Ok(())
        }
        Err(LiveError::Config(e)) => Err(fail(e.field, 2, e.message)),
        Err(LiveError::Io(e)) => Err(fail("connect", 1, e)),
    }
}
