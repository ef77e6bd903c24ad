use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eulerspec_cli::{
    emit_plot_data, read_report, run_analyze, run_validate, CliError, CliResult, FlowSpec, RunConfig, RunReport,
    Validation,
};
use eulerspec_core::field::CatalogFlow;
use eulerspec_core::DomainSpec;

#[derive(Parser)]
#[command(name = "eulerspec", version, about = "Essential spectrum of linearized 2D Euler around a steady flow")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Field, orbit families, periods and spectrum.
    Analyze(RunArgs),
    /// Everything `analyze` does plus the operator checks.
    Validate {
        #[arg(long, value_enum, default_value = "structural")]
        level: Level,
        #[command(flatten)]
        run: RunArgs,
    },
    /// CSV series for plotting from a saved report.json.
    PlotData {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Structural,
    Full,
}

#[derive(Args)]
struct RunArgs {
    /// Catalog flow name or a path to a `grid v1` file.
    #[arg(long)]
    flow: Option<String>,
    /// Catalog parameter, repeatable.
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    /// Domain JSON for a grid file, e.g. '{"kind":"disk","radius":1}'.
    #[arg(long)]
    domain: Option<String>,
    /// Spectral window half-width.
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run config; other flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "NAME=V")]
    tols: Vec<String>,
}

fn pair(s: &str) -> CliResult<(String, f64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config(format!("expected NAME=VALUE, got `{s}`")))?;
    let v: f64 = v.trim().parse().map_err(|_| CliError::Config(format!("`{v}` is not a number")))?;
    Ok((k.trim().to_string(), v))
}

impl RunArgs {
    fn config(&self) -> CliResult<RunConfig> {
        let mut cfg = match (&self.config, &self.flow) {
            (Some(p), _) => RunConfig::from_json(&std::fs::read_to_string(p)?)?,
            (None, Some(_)) => RunConfig::catalog("rigid"),
            (None, None) => return Err(CliError::Config("need --flow or --config".into())),
        };
        if let Some(f) = &self.flow {
            cfg.flow = if CatalogFlow::from_name(f).is_ok() {
                FlowSpec::Catalog { id: f.clone(), params: BTreeMap::new() }
            } else {
                let domain = self
                    .domain
                    .as_deref()
                    .ok_or_else(|| CliError::Config(format!("`{f}` is not a catalog flow; a grid file needs --domain")))?;
                let domain: DomainSpec =
                    serde_json::from_str(domain).map_err(|e| CliError::Config(format!("--domain: {e}")))?;
                FlowSpec::Grid { path: f.into(), domain }
            };
        }
        if !self.params.is_empty() {
            let FlowSpec::Catalog { params, .. } = &mut cfg.flow else {
                return Err(CliError::Config("--param applies to catalog flows only".into()));
            };
            for p in &self.params {
                let (k, v) = pair(p)?;
                params.insert(k, v);
            }
        }
        for t in &self.tols {
            let (k, v) = pair(t)?;
            cfg.tolerances.insert(k, v);
        }
        if let Some(w) = self.window {
            cfg.window = w;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.out.is_some() {
            cfg.output_dir = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summarize(r: &RunReport) {
    for s in &r.stages {
        match &s.error {
            Some(e) => eprintln!("{:<14} {:?} {:.3}s: {e}", s.name, s.status, s.seconds),
            None => eprintln!("{:<14} {:?} {:.3}s", s.name, s.status, s.seconds),
        }
    }
    if let Some(sp) = &r.spectrum {
        eprintln!("spectrum: {:?}, {} band(s) in |Im| <= {}", sp.shape, sp.bands.len(), sp.window);
    }
    for c in r.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} = {:.3e} (threshold {:.3e}) {}", c.name, c.value, c.threshold, c.detail);
    }
    for w in &r.warnings {
        eprintln!("warning [{}]: {}", w.stage, w.message);
    }
    eprintln!("status: {:?}", r.status);
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.cmd {
        Cmd::Analyze(a) => {
            // A config file may ask for validation; flags alone never do.
            let cfg = a.config()?;
            let r = if cfg.validation == Validation::Off { run_analyze(&cfg)? } else { run_validate(&cfg)? };
            summarize(&r);
            if a.out.is_none() {
                println!("{}", serde_json::to_string_pretty(&r)?);
            }
            Ok(r.status.exit_code())
        }
        Cmd::Validate { level, run } => {
            let mut cfg = run.config()?;
            cfg.validation = match level {
                Level::Structural => Validation::Structural,
                Level::Full => Validation::Full,
            };
            let r = run_validate(&cfg)?;
            summarize(&r);
            if run.out.is_none() {
                println!("{}", serde_json::to_string_pretty(&r)?);
            }
            Ok(r.status.exit_code())
        }
        Cmd::PlotData { report, out } => {
            for f in emit_plot_data(&read_report(&report)?, &out)? {
                println!("{}", f.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("EULERSPEC_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
