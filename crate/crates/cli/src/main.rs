use clap::{Parser, Subcommand};
use hydro_fpv_cli::{commands, CliError, Config, Outputs};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hydro-fpv",
    version,
    about = "Hydro + floating-PV dispatch under monthly release contracts"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Base seed for scenario generation, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the power-law head curve to the head table.
    FitHead,
    /// Solve the monthly water prices and write the dispatch trajectory.
    Price,
    /// Roll out given monthly water prices.
    Simulate,
    /// Re-price for each transmission capacity in `[sweep]`.
    Sweep,
    /// Compare the priced policy against the dynamic-programming oracle on a short window.
    OracleCheck,
    /// Evaluate the fixed prices on perturbed inputs.
    MonteCarlo,
    /// Write the bundled synthetic dataset and its config to `--out`.
    Fixture,
}

fn run(cli: &Cli) -> Result<Outputs, CliError> {
    if let Command::Fixture = cli.command {
        let mut out = Outputs::default();
        for (name, text) in hydro_fpv_cli::bundle::render() {
            out.add(name, text.into_bytes());
        }
        return Ok(out);
    }
    let cfg = Config::load(&cli.config)?;
    match cli.command {
        Command::FitHead => commands::fit_head(&cfg),
        Command::Price => commands::price(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::OracleCheck => commands::oracle_check(&cfg),
        Command::MonteCarlo => commands::monte_carlo_cmd(&cfg, cli.seed),
        Command::Fixture => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|out| out.write_to(&cli.out)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
