//! Command-line driver: simulate the hidden-variable models, match detection
//! streams into coincidences, analyze count tables or pairs, and sweep
//! correlation curves. Angles are degrees at the command line and radians
//! internally. Every simulation takes an explicit --seed; rerunning a command
//! with the same arguments reproduces its output files byte for byte.
//! RAYON_NUM_THREADS caps the worker pool and never changes any result.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bellsim_core::analysis::{
    self, assemble_report_clocked, assemble_report_pulsed, coincidence_bound, ChshReport,
};
use bellsim_core::coincidence::{self, CoincidencePair};
use bellsim_core::engine::{self, RunConfig, DEFAULT_EMISSION_PERIOD};
use bellsim_core::model::{ModelId, ModelParams};

mod formats;

#[derive(Parser)]
#[command(
    name = "bellsim",
    version,
    about = "Event-based local-hidden-variable EPR-B simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulated experiment and write its CHSH report
    Simulate(SimulateArgs),
    /// Pair two detection-event files into coincidences
    Match(MatchArgs),
    /// Compute the CHSH report from count tables or matched pairs
    Analyze(AnalyzeArgs),
    /// Correlation and acceptance curves over Alice's angle, Bob fixed
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_model(s: &str) -> Result<ModelId, String> {
    s.parse().map_err(|e: bellsim_core::Error| e.to_string())
}

#[derive(Args)]
struct ModelFlags {
    /// epr-simple | pearle | clocked-core | clocked-simplified | clocked-optimized
    #[arg(long, value_parser = parse_model)]
    model: ModelId,
    /// Coincidence window, seconds (default: the model's stock window)
    #[arg(long)]
    window: Option<f64>,
    /// Clocked-core delay timescale, seconds
    #[arg(long)]
    timescale: Option<f64>,
    /// Clocked-core jitter interval lower bound
    #[arg(long)]
    asym: Option<f64>,
    /// Cosine gain in simplified/optimized delays
    #[arg(long = "delay-gain")]
    delay_gain: Option<f64>,
}

impl ModelFlags {
    fn params(&self) -> ModelParams {
        let mut p = ModelParams::for_model(self.model);
        if let Some(w) = self.window {
            p.coinc_window = w;
        }
        if let Some(ts) = self.timescale {
            p.timescale = ts;
        }
        if let Some(a) = self.asym {
            p.asym = a;
        }
        if let Some(g) = self.delay_gain {
            p.delay_gain = g;
        }
        p
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Trials (pulsed) or emissions (clocked)
    #[arg(long)]
    n: u64,
    /// RNG seed (required: no silent nondeterminism)
    #[arg(long)]
    seed: u64,
    /// Alice's settings, degrees
    #[arg(long = "angles-a", value_delimiter = ',', default_values_t = engine::CHSH_ALICE_DEG)]
    angles_a: Vec<f64>,
    /// Bob's settings, degrees
    #[arg(long = "angles-b", value_delimiter = ',', default_values_t = engine::CHSH_BOB_DEG)]
    angles_b: Vec<f64>,
    /// Seconds between emissions (clocked)
    #[arg(long = "emission-period", default_value_t = DEFAULT_EMISSION_PERIOD)]
    emission_period: f64,
    /// Report output path
    #[arg(long)]
    out: PathBuf,
    /// Report encoding
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the per-setting-pair outcome tables here (pulsed only)
    #[arg(long)]
    tables: Option<PathBuf>,
    /// Write Alice's detection events here (clocked only)
    #[arg(long = "events-left")]
    events_left: Option<PathBuf>,
    /// Write Bob's detection events here (clocked only)
    #[arg(long = "events-right")]
    events_right: Option<PathBuf>,
    /// Write emission-indexed trial records here (clocked only)
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    /// Alice's event file
    #[arg(long)]
    left: PathBuf,
    /// Bob's event file
    #[arg(long)]
    right: PathBuf,
    /// Coincidence window, seconds
    #[arg(long)]
    window: f64,
    /// Matched-pairs CSV output
    #[arg(long = "pairs-out")]
    pairs_out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Count tables: JSON from `simulate`, or the legacy 12-line text block
    #[arg(long, conflicts_with = "pairs")]
    tables: Option<PathBuf>,
    /// Matched pairs CSV from `match`
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Alice's singles count (pairs input; enables gamma)
    #[arg(long = "singles-left", requires = "pairs")]
    singles_left: Option<u64>,
    /// Bob's singles count (pairs input; enables gamma)
    #[arg(long = "singles-right", requires = "pairs")]
    singles_right: Option<u64>,
    /// Alice's settings, degrees (legacy tables input)
    #[arg(long = "angles-a", value_delimiter = ',', default_values_t = engine::CHSH_ALICE_DEG)]
    angles_a: Vec<f64>,
    /// Bob's settings, degrees (legacy tables input)
    #[arg(long = "angles-b", value_delimiter = ',', default_values_t = engine::CHSH_BOB_DEG)]
    angles_b: Vec<f64>,
    /// Report output path
    #[arg(long)]
    out: PathBuf,
    /// Report encoding
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Grid step, degrees; the grid covers 0..360 inclusive
    #[arg(long)]
    step: f64,
    /// Size of the shared hidden-variable sample
    #[arg(long)]
    m: u64,
    /// RNG seed
    #[arg(long)]
    seed: u64,
    /// Bob's fixed setting, degrees
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Curve CSV output path
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Match(args) => cmd_match(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// Removes every tracked output if the command fails before `disarm`; no
/// partial files survive an error.
struct OutputGuard {
    paths: Vec<PathBuf>,
    armed: bool,
}

impl OutputGuard {
    fn new() -> Self {
        OutputGuard {
            paths: Vec::new(),
            armed: true,
        }
    }

    fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.paths.push(path.to_owned());
        Ok(())
    }

    fn disarm(mut self) {
        self.armed = false;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.armed {
            for p in &self.paths {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn to_radians(deg: &[f64]) -> Vec<f64> {
    deg.iter().map(|d| d.to_radians()).collect()
}

fn render_report(report: &ChshReport, format: Format) -> String {
    match format {
        Format::Json => formats::render_report_json(report),
        Format::Csv => formats::render_report_csv(report),
    }
}

fn print_report_summary(report: &ChshReport) {
    for i in 0..2 {
        for j in 0..2 {
            println!(
                "E({:5.1},{:6.1}), AB={:+0.2}, QM={:+0.2}",
                report.alice_settings_deg[i],
                report.bob_settings_deg[j],
                report.corrs[i][j],
                report.qm[i][j],
            );
        }
    }
    println!(
        "CHSH: <= 2.0, Sim: {:.3}, QM: {:.3}",
        report.s, report.tsirelson
    );
    println!(
        "eta_min: {}, detection-loophole bound (4/eta - 2): {}",
        formats::sig7(report.eta_min),
        formats::sig7(report.detection_bound),
    );
    if let (Some(gamma), Some(bound)) = (report.gamma, report.coincidence_bound) {
        println!(
            "gamma: {}, conjectured coincidence bound (6/gamma - 4): {}",
            formats::sig7(gamma),
            formats::sig7(bound),
        );
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = RunConfig {
        model: args.model.model,
        params: args.model.params(),
        alice_settings: to_radians(&args.angles_a),
        bob_settings: to_radians(&args.angles_b),
        n: args.n,
        seed: args.seed,
        emission_period: args.emission_period,
    };
    cfg.validate()?;
    let clocked = cfg.model.is_clocked();
    if !clocked {
        for (flag, value) in [
            ("--events-left", args.events_left.is_some()),
            ("--events-right", args.events_right.is_some()),
            ("--records", args.records.is_some()),
        ] {
            if value {
                bail!("{flag} applies to clocked models; {} is pulsed", cfg.model);
            }
        }
    } else if args.tables.is_some() {
        bail!(
            "--tables applies to pulsed models; {} is clocked",
            cfg.model
        );
    }

    let mut guard = OutputGuard::new();
    let report = if !clocked {
        let tables = engine::run_pulsed(&cfg)?;
        if let Some(path) = &args.tables {
            let file = formats::TablesFile {
                model: Some(cfg.model),
                seed: Some(cfg.seed),
                n_trials: Some(cfg.n),
                alice_settings_deg: args.angles_a.clone(),
                bob_settings_deg: args.angles_b.clone(),
                tables: (0..tables.n_a())
                    .map(|i| (0..tables.n_b()).map(|j| *tables.table(i, j)).collect())
                    .collect(),
            };
            guard.write(path, &formats::render_tables_json(&file))?;
        }
        assemble_report_pulsed(
            Some(cfg.model),
            &tables,
            &cfg.alice_settings,
            &cfg.bob_settings,
        )
        .context("assembling the report")?
    } else {
        let run = engine::run_clocked(&cfg)?;
        // event files require setting_deg in [0, 360)
        let file_a: Vec<f64> = args.angles_a.iter().map(|d| d.rem_euclid(360.0)).collect();
        let file_b: Vec<f64> = args.angles_b.iter().map(|d| d.rem_euclid(360.0)).collect();
        if let Some(path) = &args.events_left {
            guard.write(path, &formats::render_events(&run.left, &file_a))?;
        }
        if let Some(path) = &args.events_right {
            guard.write(path, &formats::render_events(&run.right, &file_b))?;
        }
        if let Some(path) = &args.records {
            guard.write(
                path,
                &formats::render_records(&run.records, &args.angles_a, &args.angles_b),
            )?;
        }
        let accepted = coincidence::match_trial_paired(&run.records, cfg.params.coinc_window);
        let tables =
            engine::tabulate_records(&accepted, cfg.alice_settings.len(), cfg.bob_settings.len());
        let (left_singles, right_singles) = engine::singles_by_setting(
            &run.records,
            cfg.alice_settings.len(),
            cfg.bob_settings.len(),
        );
        assemble_report_clocked(
            Some(cfg.model),
            &tables,
            &left_singles,
            &right_singles,
            &cfg.alice_settings,
            &cfg.bob_settings,
        )
        .context("assembling the report")?
    };

    guard.write(&args.out, &render_report(&report, args.format))?;
    guard.disarm();
    println!("model: {}   n: {}   seed: {}", cfg.model, cfg.n, cfg.seed);
    print_report_summary(&report);
    Ok(())
}

fn cmd_match(args: MatchArgs) -> Result<()> {
    if args.window.is_nan() || args.window <= 0.0 {
        bail!("--window must be positive, got {}", args.window);
    }
    let left = formats::read_events(&args.left)?;
    let right = formats::read_events(&args.right)?;
    let result = coincidence::match_streams(&left.events, &right.events, args.window)?;

    let mut guard = OutputGuard::new();
    guard.write(
        &args.pairs_out,
        &formats::render_pairs(&result.pairs, &left.settings_deg, &right.settings_deg),
    )?;
    guard.disarm();

    let n_pairs = result.pairs.len() as u64;
    let (n_left, n_right) = (left.events.len() as u64, right.events.len() as u64);
    println!("pairs: {n_pairs}");
    println!("singles: left {n_left}, right {n_right}");
    let gamma_left = analysis::gamma_overall(n_pairs, n_left)?;
    let gamma_right = analysis::gamma_overall(n_pairs, n_right)?;
    let overall = gamma_left.min(gamma_right);
    println!(
        "gamma: left {}, right {}, overall {}",
        formats::sig7(gamma_left),
        formats::sig7(gamma_right),
        formats::sig7(overall),
    );
    if overall > 0.0 {
        println!(
            "conjectured coincidence bound (6/gamma - 4): {}",
            formats::sig7(coincidence_bound(overall)?),
        );
    } else {
        println!("conjectured coincidence bound (6/gamma - 4): undefined at gamma = 0");
    }
    Ok(())
}

fn pairs_report(
    args: &AnalyzeArgs,
    pairs: &[CoincidencePair],
    a_deg: &[f64],
    b_deg: &[f64],
) -> Result<ChshReport> {
    let counts = coincidence::coincidence_counts(pairs, a_deg.len(), b_deg.len())?;
    let mut report =
        assemble_report_pulsed(None, &counts.tables, &to_radians(a_deg), &to_radians(b_deg))?;
    report.n_ab = Some([
        [counts.n_ab.get(0, 0), counts.n_ab.get(0, 1)],
        [counts.n_ab.get(1, 0), counts.n_ab.get(1, 1)],
    ]);
    if let (Some(sl), Some(sr)) = (args.singles_left, args.singles_right) {
        let n_pairs = counts.n_ab.total();
        let gamma = analysis::gamma_overall(n_pairs, sl.max(sr))?;
        report.gamma = Some(gamma);
        report.coincidence_bound = Some(coincidence_bound(gamma)?);
        report.singles_left = Some(sl);
        report.singles_right = Some(sr);
    }
    Ok(report)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let report = match (&args.tables, &args.pairs) {
        (Some(path), None) => match formats::read_tables(path)? {
            formats::TablesInput::Json(file) => {
                let tables = file.table_set()?;
                assemble_report_pulsed(
                    file.model,
                    &tables,
                    &to_radians(&file.alice_settings_deg),
                    &to_radians(&file.bob_settings_deg),
                )?
            }
            formats::TablesInput::Legacy(tables) => assemble_report_pulsed(
                None,
                &tables,
                &to_radians(&args.angles_a),
                &to_radians(&args.angles_b),
            )?,
        },
        (None, Some(path)) => {
            let file = formats::read_pairs(path)?;
            pairs_report(
                &args,
                &file.pairs,
                &file.left_settings_deg,
                &file.right_settings_deg,
            )?
        }
        _ => bail!("exactly one of --tables or --pairs is required"),
    };

    let mut guard = OutputGuard::new();
    guard.write(&args.out, &render_report(&report, args.format))?;
    guard.disarm();
    print_report_summary(&report);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = RunConfig {
        model: args.model.model,
        params: args.model.params(),
        alice_settings: vec![0.0],
        bob_settings: vec![args.beta.to_radians()],
        n: 0,
        seed: args.seed,
        emission_period: DEFAULT_EMISSION_PERIOD,
    };
    let curve = engine::sweep(&cfg, args.beta.to_radians(), args.step, args.m)?;
    let mut guard = OutputGuard::new();
    guard.write(&args.out, &formats::render_sweep_csv(&curve, args.beta))?;
    guard.disarm();
    println!(
        "sweep: model {}  beta {}  step {}  m {}  angles {}",
        cfg.model,
        args.beta,
        args.step,
        args.m,
        curve.angles_deg.len(),
    );
    Ok(())
}
