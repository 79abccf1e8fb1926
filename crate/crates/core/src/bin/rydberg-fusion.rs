use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rydberg_fusion::sweep::{
    cmd_evolve, cmd_fuse, cmd_params, cmd_sweep, parse_protocol, CliError, ConfigError,
    CsvReport, SweepConfig,
};

#[derive(Parser)]
#[command(name = "rydberg-fusion", version, about = "Two-atom Rydberg gate simulation and GHZ/W fusion")]
struct Cli {
    /// Run configuration (flat `key = value` file)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write CSV here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fixed RK4 step budget per run
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Seed for the sampled-outcome demo of `fuse`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config key, e.g. `--set gamma=0`
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity against time for the full, effective and dissipative models
    Evolve,
    /// Fidelity over a parameter grid
    Sweep {
        /// Start from the grid of fig3, fig4 or fig5
        #[arg(long)]
        figure: Option<String>,
    },
    /// Fuse two GHZ or W registers and list every measurement branch
    Fuse {
        protocol: String,
        m: usize,
        n: usize,
        #[arg(default_value = "ideal")]
        gate: String,
    },
    /// Print a parameter preset
    Params { preset: String },
}

fn load_config(cli: &Cli, figure: Option<&str>) -> Result<SweepConfig, CliError> {
    let mut text = match figure {
        Some(f) => SweepConfig::figure(f)?.to_text(),
        None => String::new(),
    };
    if let Some(path) = &cli.config {
        let file = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        if figure.is_some() {
            // the file's keys take precedence over the figure defaults
            let keys: Vec<String> = file
                .lines()
                .filter_map(|l| l.split('#').next()?.split_once('='))
                .map(|(k, _)| k.trim().to_ascii_lowercase())
                .collect();
            text = text
                .lines()
                .filter(|l| {
                    let k = l.split('=').next().unwrap_or("").trim();
                    !keys.iter().any(|f| f == k)
                })
                .map(|l| format!("{l}\n"))
                .collect();
        }
        text.push_str(&file);
    }
    let mut cfg = SweepConfig::parse(&text, &cli.overrides)?;
    if let Some(n) = cli.steps {
        cfg.steps = Some(n);
    }
    Ok(cfg)
}

fn emit(report: &CsvReport, cli: &Cli, cfg_out: Option<&str>) -> Result<(), CliError> {
    let path = cli.out.clone().or_else(|| cfg_out.map(PathBuf::from));
    match path {
        Some(p) => report
            .write_to(&p)
            .map_err(|e| CliError::Config(ConfigError(format!("cannot write {}: {e}", p.display())))),
        None => {
            print!("{}", report.render());
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Evolve => {
            let cfg = load_config(cli, None)?;
            emit(&cmd_evolve(&cfg)?, cli, cfg.out.as_deref())
        }
        Command::Sweep { figure } => {
            let cfg = load_config(cli, figure.as_deref())?;
            emit(&cmd_sweep(&cfg)?, cli, cfg.out.as_deref())
        }
        Command::Fuse {
            protocol,
            m,
            n,
            gate,
        } => {
            let report = cmd_fuse(parse_protocol(protocol)?, *m, *n, gate, cli.steps, cli.seed)?;
            print!("{}", report.table);
            if let Some(p) = &cli.out {
                report.csv.write_to(p).map_err(|e| {
                    CliError::Config(ConfigError(format!("cannot write {}: {e}", p.display())))
                })?;
            }
            Ok(())
        }
        Command::Params { preset } => {
            print!("{}", cmd_params(preset)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
