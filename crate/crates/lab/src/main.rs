//! `plunge`: run one experiment and write its artifacts.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use plunge_lab::config::ExperimentConfig;
use plunge_lab::experiments::{self, Outcome};
use plunge_lab::frame::Generator;
use plunge_lab::output::{to_json17, ArtifactDir};
use plunge_lab::spectrum::Mode;
use plunge_lab::LabError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "plunge", version, about = "Wave-packet frame and spatio-spectral limiting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Partition of unity, supports and Gevrey fits of the cutoffs.
    Cutoffs,
    /// Sector geometry, index sets and packet norms.
    Sectors,
    /// Empirical frame bounds from random test functions.
    Frame,
    /// Bessel checks, boundary transforms and window decay.
    Localize,
    /// Energy of the partition outside the plunge set.
    Energy,
    /// Eigenvalues of the discretized operator.
    Spectrum,
    /// Plunge counts against the counting bound.
    Plunge,
    /// Summarize the artifacts already in the output directory.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Cutoffs => "cutoffs",
            Command::Sectors => "sectors",
            Command::Frame => "frame",
            Command::Localize => "localize",
            Command::Energy => "energy",
            Command::Spectrum => "spectrum",
            Command::Plunge => "plunge",
            Command::Report => "report",
        }
    }
}

#[derive(Args, Debug)]
struct Flags {
    /// Config file; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "R", global = true)]
    r: Option<u64>,
    #[arg(long = "R-list", global = true, value_delimiter = ',')]
    r_list: Vec<u64>,
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long = "s-list", global = true, value_delimiter = ',')]
    s_list: Vec<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, global = true)]
    domain: Option<PathBuf>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    pad: Option<usize>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, value_enum)]
    generator: Option<Generator>,
    #[arg(long = "j-min", global = true, allow_negative_numbers = true)]
    j_min: Option<i32>,
    #[arg(long = "m-box", global = true)]
    m_box: Option<i64>,
    #[arg(long = "n-min", global = true)]
    n_min: Option<usize>,
    #[arg(long = "c-cal", global = true)]
    c_cal: Option<f64>,
    #[arg(long = "a-margin", global = true)]
    a_margin: Option<f64>,
    #[arg(long = "c-bdry", global = true)]
    c_bdry: Option<f64>,
}

impl Flags {
    fn config(&self) -> Result<ExperimentConfig, LabError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if self.r.is_some() {
            c.r = self.r;
            c.r_list.clear();
        }
        if !self.r_list.is_empty() {
            c.r_list = self.r_list.clone();
        }
        if self.s.is_some() {
            c.s = self.s;
            c.s_list.clear();
        }
        if !self.s_list.is_empty() {
            c.s_list = self.s_list.clone();
        }
        if !self.eps.is_empty() {
            c.epsilon = self.eps.clone();
        }
        macro_rules! set {
            ($($f:ident => $g:ident),*) => { $(if let Some(v) = self.$f { c.$g = v; })* };
        }
        macro_rules! set_opt {
            ($($f:ident => $g:ident),*) => { $(if self.$f.is_some() { c.$g = self.$f; })* };
        }
        set!(seed => seed, pad => pad, trials => trials, generator => generator, n_min => n_min, c_cal => c_cal);
        set_opt!(grid => grid_n, mode => mode, j_min => j_min, m_box => m_box, a_margin => a_margin, c_bdry => c_bdry);
        if self.domain.is_some() {
            c.domain = self.domain.clone();
        }
        c.validate()?;
        // surface domain problems before any work
        c.region()?;
        Ok(c)
    }
}

fn run(cmd: Command, flags: &Flags) -> Result<Option<String>, LabError> {
    let start = Instant::now();
    let mut dir = ArtifactDir::create(&flags.out)?;
    let name = cmd.name();
    if let Command::Report = cmd {
        let (summary, table) = experiments::report(&flags.out)?;
        dir.write("report.csv", &table.to_csv())?;
        dir.write_json("report.json", &summary)?;
        print!("{}", table.to_csv());
        return Ok(None);
    }
    let cfg = flags.config()?;
    let hash = cfg.hash();
    let outcome: Outcome = match cmd {
        Command::Cutoffs => experiments::cutoffs(&cfg)?,
        Command::Sectors => experiments::sectors_run(&cfg)?,
        Command::Frame => experiments::frame(&cfg)?,
        Command::Localize => experiments::localize(&cfg)?,
        Command::Energy => experiments::energy(&cfg)?,
        Command::Spectrum => experiments::spectrum(&cfg)?,
        Command::Plunge => experiments::plunge(&cfg)?,
        Command::Report => unreachable!(),
    };
    let pass = outcome.checks.iter().all(|c| c.pass);
    let artifact = json!({
        "subcommand": name,
        "config_hash": hash,
        "config": cfg,
        "result": outcome.result,
        "checks": outcome.checks,
        "pass": pass,
    });
    dir.write_json(&format!("{name}.json"), &artifact)?;
    for t in &outcome.tables {
        let csv = t.to_csv();
        // the hash rides along as a trailing comment line
        dir.write(&format!("{}.csv", t.name), &format!("{csv}# config_hash={hash}\n"))?;
    }
    let manifest = json!({
        "subcommand": name,
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "runtime_seconds": start.elapsed().as_secs_f64(),
        "files": dir.written,
    });
    dir.write_json(&format!("{name}.manifest.json"), &manifest)?;
    for c in &outcome.checks {
        println!(
            "criterion {:>2} {} {}: {:.6e} (limit {:.3e})",
            c.criterion,
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    Ok(outcome.budget_failure)
}

fn error_exit(field: &str, message: &str, code: u8) -> ExitCode {
    let v = json!({ "error": field, "message": message, "exit_code": code });
    println!("{}", to_json17(&v).unwrap_or_else(|_| v.to_string()));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprint!("{e}");
            return error_exit("cli", &e.kind().to_string(), 1);
        }
    };
    match run(cli.command, &cli.flags) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(budget)) => error_exit("numerical", &budget, 2),
        Err(e) => error_exit(e.field(), &e.to_string(), e.exit_code() as u8),
    }
}
