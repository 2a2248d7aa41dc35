use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gnforge::funcspace::sample;
use gnforge::lorentz::lorentz_norm_of;
use gnforge::smoothnorms::{
    besov_norm, sobolev_lorentz_seminorm, tl_lorentz_norm, tl_norm, AnalyticEvolution, NormKind, NormRow,
    QuadratureSpec, SmoothnessIndex,
};
use gnforge::verifier::{read_report, render_plots, run_sweep, summarize, CampaignConfig, Summary, Theorem};
use gnforge::{AnalyticFunction, Error, Exponent, GridSpec, LorentzIndex, Result};

#[derive(Parser)]
#[command(
    name = "gnforge",
    version,
    about = "Function-space norms and Gagliardo-Nirenberg ratio sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Lorentz,
    Besov,
    Tl,
    TlLorentz,
    SobolevLorentz,
}

#[derive(Clone, Copy, Args)]
struct NormArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    s: f64,
    #[arg(long)]
    p: Exponent,
    /// Secondary index (Lorentz second index for `lorentz`).
    #[arg(long, default_value = "inf")]
    q: Exponent,
    #[arg(long)]
    m: Option<u32>,
    /// Lorentz index of the aggregate for `tl-lorentz`.
    #[arg(long)]
    r: Option<Exponent>,
    /// Derivative order for `sobolev-lorentz`.
    #[arg(long, default_value_t = 1)]
    order: u32,
    /// Grid points per axis for grid-based kinds.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 16)]
    per_decade: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one quasinorm of a function descriptor.
    Norm {
        #[arg(long)]
        func: PathBuf,
        #[command(flatten)]
        args: NormArgs,
    },
    /// Run the rows of one theorem from a sweep config and print the summary.
    Verify {
        #[arg(long)]
        theorem: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full campaign and write JSON-lines rows.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Summarize a report and export CSV plot series.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        plots: Option<PathBuf>,
    },
}

fn default_points(dim: usize) -> usize {
    if dim == 1 {
        4096
    } else {
        256
    }
}

fn norm_row(f: &AnalyticFunction, args: &NormArgs, points: usize) -> Result<NormRow> {
    let NormArgs {
        kind,
        s,
        p,
        q,
        m,
        r,
        order,
        per_decade,
        ..
    } = *args;
    let quad = QuadratureSpec::Auto { per_decade };
    let grid = || GridSpec::adequate_for(f, points);
    Ok(match kind {
        Kind::Lorentz => {
            let value = lorentz_norm_of(&sample(f, &grid()?)?, LorentzIndex::new(p, q)?)?;
            NormRow {
                norm_kind: NormKind::Lorentz,
                indices: serde_json::json!({ "p": p, "q": q }),
                m: None,
                quad: None,
                value,
                endpoint_residuals: None,
            }
        }
        Kind::SobolevLorentz => {
            let value = sobolev_lorentz_seminorm(f, order, LorentzIndex::new(p, q)?, &grid()?)?;
            NormRow {
                norm_kind: NormKind::SobolevLorentz,
                indices: serde_json::json!({ "order": order, "p": p, "q": q }),
                m: None,
                quad: None,
                value,
                endpoint_residuals: None,
            }
        }
        Kind::Besov => {
            let idx = SmoothnessIndex::new(s, p, q, m)?;
            NormRow::smooth(NormKind::Besov, &idx, None, &besov_norm(f, &idx, &quad)?)
        }
        Kind::Tl => {
            let idx = SmoothnessIndex::new(s, p, q, m)?;
            let ev = AnalyticEvolution::new(f, &grid()?)?;
            NormRow::smooth(NormKind::TriebelLizorkin, &idx, None, &tl_norm(&ev, &idx, &quad)?)
        }
        Kind::TlLorentz => {
            let idx = SmoothnessIndex::new(s, p, q, m)?;
            let r = r.unwrap_or(p);
            let ev = AnalyticEvolution::new(f, &grid()?)?;
            NormRow::smooth(
                NormKind::TlLorentz,
                &idx,
                Some(r),
                &tl_lorentz_norm(&ev, &idx, r, &quad)?,
            )
        }
    })
}

fn print_summary(summary: &Summary) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(summary)?);
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Norm { func, args } => {
            let text = std::fs::read_to_string(&func)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", func.display())))?;
            let f = AnalyticFunction::from_json(&text).map_err(|e| match e {
                Error::Json(j) => Error::Config(format!(
                    "{}: line {}, column {}: {j}",
                    func.display(),
                    j.line(),
                    j.column()
                )),
                other => other,
            })?;
            let points = args.points.unwrap_or_else(|| default_points(f.dim()));
            let row = norm_row(&f, &args, points)?;
            println!("{}", serde_json::to_string(&row)?);
            Ok(0)
        }
        Command::Verify { theorem, config, out } => {
            let theorem = Theorem::parse(&theorem)?;
            let cfg = CampaignConfig::load(&config)?;
            let outcome = run_sweep(&cfg, Some(theorem))?;
            if let Some(out) = out {
                std::fs::write(out, outcome.to_jsonl())?;
            }
            print_summary(&outcome.summary)?;
            Ok(outcome.summary.exit.code())
        }
        Command::Sweep { config, out, summary } => {
            let cfg = CampaignConfig::load(&config)?;
            let outcome = run_sweep(&cfg, None)?;
            std::fs::write(&out, outcome.to_jsonl())?;
            if let Some(path) = summary {
                std::fs::write(path, serde_json::to_string_pretty(&outcome.summary)?)?;
            }
            print_summary(&outcome.summary)?;
            Ok(outcome.summary.exit.code())
        }
        Command::Report { input, summary, plots } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", input.display())))?;
            let lines = read_report(&text).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", input.display())),
                other => other,
            })?;
            let s = summarize(&lines);
            std::fs::write(&summary, serde_json::to_string_pretty(&s)?)?;
            if let Some(dir) = plots {
                for name in render_plots(&lines, &dir)? {
                    eprintln!("wrote {}", dir.join(name).display());
                }
            }
            Ok(s.exit.code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("gnforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
