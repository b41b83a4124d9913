use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sfgswap::analytic::{sfg_efficiency_theory, DeviceSpec};
use sfgswap::scenario::{
    self, write_atomic, Cell, Format, Report, RunConfig, RunError, Scenario, CSV_CONFIG_PREFIX,
};

/// Entanglement-swapping scenarios: linear optics vs sum-frequency generation.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        /// Config file, or a CSV report produced by an earlier run.
        #[arg(long)]
        config: PathBuf,
        /// Write the report here instead of stdout (overrides `out=`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `format=`.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// List the scenario names.
    ListScenarios,
    /// Print the built-in waveguide devices.
    Catalog {
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Table,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Table => Format::Table,
        }
    }
}

fn main() -> ExitCode {
    if let Ok(n) = std::env::var("SFGSWAP_THREADS") {
        match n.parse::<usize>() {
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            Err(_) => {
                eprintln!("error: SFGSWAP_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            format,
        } => match std::fs::read_to_string(&config) {
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", config.display());
                ExitCode::from(2)
            }
            Ok(text) => match run(&text, out, format.map(Into::into)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            },
        },
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<20} {}", s.name(), s.description());
            }
            ExitCode::SUCCESS
        }
        Command::Catalog { format } => {
            print!("{}", catalog().render(format.into()));
            ExitCode::SUCCESS
        }
    }
}

fn run(text: &str, out: Option<PathBuf>, format: Option<Format>) -> Result<(), RunError> {
    // A CSV report carries its own config block and can be re-run as is.
    let cfg = if text.lines().any(|l| l.starts_with(CSV_CONFIG_PREFIX)) {
        RunConfig::from_report_csv(text)?
    } else {
        RunConfig::parse(text)?
    };
    let report = scenario::run(&cfg)?;
    let rendered = report.render(format.unwrap_or(cfg.format));
    match out.or(cfg.out) {
        Some(p) => write_atomic(&p, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn catalog() -> Report {
    let mut rep = Report::new(
        "catalog",
        &[
            "device",
            "eta_hat_pct_per_w_cm2",
            "delta_nu_hat_ghz_cm",
            "length_cm",
            "lambda_nm",
            "tbp",
            "eta_sfg_th",
            "reference_eta_sfg",
        ],
    );
    for d in DeviceSpec::catalog() {
        let eta = sfg_efficiency_theory(&d).map(|e| e.eta_sfg).ok();
        rep.push(vec![
            d.name.clone().into(),
            d.eta_hat_pct_per_w_cm2.into(),
            d.delta_nu_hat_ghz_cm.into(),
            d.length_cm.into(),
            d.lambda_nm.into(),
            d.tbp.into(),
            Cell::from(eta),
            d.reference_eta_sfg.into(),
        ]);
    }
    rep
}
