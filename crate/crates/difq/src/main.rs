use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use difq::commands::{
    cmd_cases_export, cmd_cases_list, cmd_cases_run_all, cmd_envelope, cmd_loss, cmd_run, default_out_root,
    parse_sweep, run_all_report, EnvelopeOptions, LossOptions, RunOptions, DEFAULT_P_INJECT,
};
use difq::error::{CliError, Result, EXIT_OK};
use difq_core::network::Fidelity;

#[derive(Parser)]
#[command(name = "difq", version, about = "Series power-flow controller simulator and analysis tools")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FidelityArg {
    Averaged,
    Switched,
}

impl From<FidelityArg> for Fidelity {
    fn from(f: FidelityArg) -> Self {
        match f {
            FidelityArg::Averaged => Fidelity::Averaged,
            FidelityArg::Switched => Fidelity::Switched,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario file or a built-in case (`A`, `cases/A`).
    Run {
        scenario: String,
        /// Output directory [default: $DIFQ_OUT/<name>].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        fidelity: Option<FidelityArg>,
        /// Skip charts.svg.
        #[arg(long)]
        no_charts: bool,
    },
    /// The built-in cases.
    Cases {
        #[command(subcommand)]
        action: CasesCmd,
    },
    /// Coverage limits of a module and the regions they bound.
    Envelope {
        /// Left phase voltage, V rms.
        #[arg(long)]
        v1: f64,
        /// Module dc-link voltage, V.
        #[arg(long)]
        vdc: f64,
        /// Right phase voltage, V rms [default: v1].
        #[arg(long)]
        v2: Option<f64>,
        /// Line reactance, ohm; adds the regulation circle.
        #[arg(long)]
        xline: Option<f64>,
        /// Angle between the two sides, deg.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long)]
        overmod: bool,
        #[arg(long, default_value_t = 181)]
        points: usize,
        /// Directory for region CSV and SVG files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Core loss sweep, loss lineup and fault ratings.
    Loss {
        /// Frequency range f_min:f_max, Hz.
        #[arg(long, default_value = "10:10000")]
        sweep: String,
        #[arg(long, default_value_t = 61)]
        points: usize,
        /// Injected power for the transfer gain, W.
        #[arg(long, default_value_t = DEFAULT_P_INJECT)]
        p_inject: f64,
        /// Core parameters (JSON).
        #[arg(long)]
        bertotti: Option<PathBuf>,
        /// Loss lineup (JSON).
        #[arg(long)]
        lineup: Option<PathBuf>,
        /// Fault specification (JSON).
        #[arg(long)]
        fault: Option<PathBuf>,
        /// Directory for bertotti.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CasesCmd {
    /// Print the six cases and their parameters.
    List,
    /// Run all cases, each into <out>/<id>.
    RunAll {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        fidelity: Option<FidelityArg>,
        #[arg(long)]
        no_charts: bool,
    },
    /// Write the cases as scenario files.
    Export {
        #[arg(long, default_value = "cases")]
        out: PathBuf,
    },
    /// Run one case by id.
    Run {
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        fidelity: Option<FidelityArg>,
        #[arg(long)]
        no_charts: bool,
    },
}

fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Cmd::Run { scenario, out, fidelity, no_charts } => {
            let opts = RunOptions { scenario, out, fidelity: fidelity.map(Into::into), charts: !no_charts };
            Ok(cmd_run(&opts)?.report())
        }
        Cmd::Cases { action } => match action {
            CasesCmd::List => Ok(cmd_cases_list()),
            CasesCmd::RunAll { out, fidelity, no_charts } => {
                let root = out.unwrap_or_else(default_out_root);
                let runs = cmd_cases_run_all(&root, fidelity.map(Into::into), !no_charts)?;
                Ok(run_all_report(&runs))
            }
            CasesCmd::Export { out } => {
                let files = cmd_cases_export(&out)?;
                Ok(files.iter().map(|p| format!("{}\n", p.display())).collect())
            }
            CasesCmd::Run { id, out, fidelity, no_charts } => {
                if id.contains('/') || id.contains('.') {
                    return Err(CliError::Validation(format!("`{id}` is not a case id")));
                }
                let opts = RunOptions { scenario: id, out, fidelity: fidelity.map(Into::into), charts: !no_charts };
                Ok(cmd_run(&opts)?.report())
            }
        },
        Cmd::Envelope { v1, vdc, v2, xline, theta, overmod, points, out } => {
            cmd_envelope(&EnvelopeOptions { v1, v_dc: vdc, v2, x_line: xline, theta_deg: theta, overmod, points, out })
        }
        Cmd::Loss { sweep, points, p_inject, bertotti, lineup, fault, out } => {
            cmd_loss(&LossOptions { sweep: parse_sweep(&sweep)?, points, p_inject, bertotti, lineup, fault, out })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors.
            return ExitCode::from(if e.use_stderr() { difq::error::EXIT_VALIDATION } else { EXIT_OK });
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
