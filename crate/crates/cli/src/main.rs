use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nsosc_cli::config::{parse_range, RunConfig};
use nsosc_cli::output::{write_csv, write_json, write_waveform, Report};
use nsosc_cli::runner::sweep;
use nsosc_core::hg_core::FrequencyForm;
use nsosc_core::hg_impact::ChiMode;
use nsosc_core::systems::OscillatorKind;
use nsosc_core::table::{report_usability, waveform, FrequencyTable, Method, SolveSettings, USABILITY_THRESHOLD};

/// Exit status when some row or waveform could not be solved.
const EXIT_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "nsosc", version, about = "Frequencies and waveforms of non-smooth oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run everything a config file asks for.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Frequency table over a list of ε.
    Table {
        #[arg(long)]
        kind: OscillatorKind,
        /// Comma-separated ε values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "eps_range", required_unless_present = "eps_range")]
        eps: Vec<f64>,
        /// `start,end,step`
        #[arg(long)]
        eps_range: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "reference,hg")]
        methods: Vec<Method>,
        #[arg(long, default_value = "table.csv")]
        out: PathBuf,
        /// Defaults to the CSV path with a .json extension.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = USABILITY_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sampled x(t) of one method, 1000 points per period.
    Waveform {
        #[arg(long)]
        kind: OscillatorKind,
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long, default_value = "hg")]
        method: Method,
        #[arg(long, default_value = "wave.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        periods: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// reciprocal or printed
    #[arg(long)]
    form: Option<FrequencyForm>,
    #[arg(long)]
    newton_steps: Option<usize>,
    #[arg(long)]
    hg_tol: Option<f64>,
    /// printed or omega_d_unit
    #[arg(long)]
    chi_mode: Option<ChiMode>,
    /// x⁽⁰⁾ zeros kept by the impact expansion
    #[arg(long)]
    roots: Option<usize>,
}

impl SolverArgs {
    fn settings(&self) -> Result<SolveSettings> {
        let mut s = SolveSettings { amplitude: self.amplitude, ..Default::default() };
        if let Some(f) = self.form {
            s.hg.form = f;
        }
        if let Some(n) = self.newton_steps {
            s.hg.newton_steps = n;
        }
        if let Some(t) = self.hg_tol {
            s.hg.tol = t;
        }
        if let Some(c) = self.chi_mode {
            s.impact.chi_mode = c;
        }
        if let Some(r) = self.roots {
            s.impact.roots = r;
        }
        if !(s.amplitude > 0.0) || !(s.hg.tol > 0.0) {
            bail!("amplitude and hg-tol must be positive");
        }
        Ok(s)
    }
}

fn write_table(table: &FrequencyTable, csv: &Path, json: &Path, threshold: f64) -> Result<()> {
    write_csv(&table.rows, csv)?;
    let usability = if table.rows.iter().any(|r| r.method == Method::Reference) {
        report_usability(table, threshold).ok()
    } else {
        None
    };
    if let Some(u) = &usability {
        for entry in u {
            match entry.range {
                Some((lo, hi)) => println!("{:>9}  within {}% for eps in [{lo}, {hi}]", entry.method.name(), 100.0 * threshold),
                None => println!("{:>9}  outside {}% from the first eps", entry.method.name(), 100.0 * threshold),
            }
        }
    }
    write_json(&Report { table: table.clone(), usability }, json)?;
    let failed = table.rows.iter().filter(|r| !r.is_ok()).count();
    println!("{} rows, {failed} failed: {}", table.rows.len(), csv.display());
    for r in table.rows.iter().filter(|r| !r.is_ok()) {
        eprintln!("eps {} {}: {}", r.epsilon, r.method, r.status);
    }
    Ok(())
}

fn waveform_name(kind: OscillatorKind, method: Method, eps: f64) -> String {
    format!("{kind}_{method}_eps{eps}.csv")
}

fn run(config: &Path) -> Result<bool> {
    let c = RunConfig::load(config)?;
    let table = sweep(c.kind, &c.eps, &c.methods, &c.settings)?;
    write_table(&table, &c.out_csv, &c.out_json, c.threshold)?;
    let mut ok = table.all_ok();
    if !c.waveforms.is_empty() {
        std::fs::create_dir_all(&c.waveform_dir).with_context(|| format!("creating {}", c.waveform_dir.display()))?;
    }
    for &m in &c.waveforms {
        for &e in &c.eps {
            let path = c.waveform_dir.join(waveform_name(c.kind, m, e));
            match waveform(c.kind, e, m, &c.settings, c.periods) {
                Ok(w) => write_waveform(&w, &path)?,
                Err(err) => {
                    eprintln!("waveform eps {e} {m}: {err}");
                    ok = false;
                }
            }
        }
    }
    Ok(ok)
}

fn main() -> Result<ExitCode> {
    // clap's own usage status is 2, which is reserved for failed rows here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return Ok(if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS });
        }
    };
    let ok = match cli.command {
        Command::Run { config } => run(&config)?,
        Command::Table { kind, eps, eps_range, methods, out, json, threshold, solver } => {
            let eps = match eps_range {
                Some(r) => parse_range(&r)?,
                None => eps,
            };
            let json = json.unwrap_or_else(|| out.with_extension("json"));
            let table = sweep(kind, &eps, &methods, &solver.settings()?)?;
            write_table(&table, &out, &json, threshold)?;
            table.all_ok()
        }
        Command::Waveform { kind, eps, method, out, periods, solver } => {
            match waveform(kind, eps, method, &solver.settings()?, periods) {
                Ok(w) => {
                    write_waveform(&w, &out)?;
                    println!("{} samples: {}", w.len(), out.display());
                    true
                }
                Err(err) => {
                    eprintln!("waveform eps {eps} {method}: {err}");
                    false
                }
            }
        }
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILED) })
}
