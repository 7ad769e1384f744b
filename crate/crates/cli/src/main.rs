use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use semsat_core::report::ScenarioRun;
use semsat_core::solve::{ORACLE_MAX_RATIOS, ORACLE_MAX_SATELLITES, ORACLE_MAX_SUBCARRIERS};
use semsat_core::{
    export_report, generate_random_scenario, load_scenario, solve_method, DwoaParams, ExportFormat, Method, Scenario,
    ScenarioRanges,
};

#[derive(Parser)]
#[command(name = "semsat", version, about = "Semantic downlink latency minimization for LEO satellites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Bcd,
    Onlywhale,
    Matchingonly,
    Random,
    Oracle,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::Json => ExportFormat::Json,
        }
    }
}

#[derive(clap::Args)]
struct SearchArgs {
    /// Whale population size.
    #[arg(long, default_value_t = 30)]
    population: usize,
    /// Whale iterations per run.
    #[arg(long, default_value_t = 100)]
    iterations: usize,
}

impl SearchArgs {
    fn params(&self) -> DwoaParams {
        DwoaParams {
            population_size: self.population,
            max_iterations: self.iterations,
            ..DwoaParams::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario file.
    Solve {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "bcd")]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run every method over seeded random scenarios.
    Sweep {
        #[arg(long, default_value_t = 30)]
        scenarios: usize,
        #[arg(long, short = 'k', default_value_t = 10)]
        k: usize,
        #[arg(long, short = 'u', default_value_t = 12)]
        u: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Also run the exhaustive oracle (small instances only).
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Write a seeded random scenario file.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short = 'k', default_value_t = 10)]
        k: usize,
        #[arg(long, short = 'u', default_value_t = 12)]
        u: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn methods(arg: MethodArg, scenario: &Scenario) -> Vec<Method> {
    let small = scenario.k() <= ORACLE_MAX_SATELLITES
        && scenario.u() <= ORACLE_MAX_SUBCARRIERS
        && scenario.crs.len() <= ORACLE_MAX_RATIOS;
    match arg {
        MethodArg::Bcd => vec![Method::Bcd],
        MethodArg::Onlywhale => vec![Method::OnlyWhale],
        MethodArg::Matchingonly => vec![Method::MatchingOnly],
        MethodArg::Random => vec![Method::Random],
        MethodArg::Oracle => vec![Method::Oracle],
        MethodArg::All => {
            let mut m = Method::HEURISTICS.to_vec();
            if small {
                m.push(Method::Oracle);
            }
            m
        }
    }
}

fn print_run(run: &ScenarioRun) {
    let r = &run.report;
    println!(
        "scenario {:>3}  {:<12} latency {:>10.4} s  mean ratio {:.4}  {}",
        run.scenario_id,
        r.method.label(),
        r.objective_s,
        r.mean_compression_ratio(),
        if r.feasible { "feasible" } else { "infeasible" }
    );
}

fn write(runs: &[ScenarioRun], format: FormatArg, out: &Path) -> Result<()> {
    for path in export_report(runs, format.into(), out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            config,
            method,
            seed,
            out,
            format,
            search,
        } => {
            let scenario = load_scenario(&config)?;
            let params = search.params();
            let mut runs = Vec::new();
            for m in methods(method, &scenario) {
                let report = solve_method(&scenario, m, &params, seed).with_context(|| format!("running {m}"))?;
                let run = ScenarioRun { scenario_id: 0, report };
                print_run(&run);
                runs.push(run);
            }
            write(&runs, format, &out)
        }
        Command::Sweep {
            scenarios,
            k,
            u,
            seed,
            out,
            format,
            oracle,
            search,
        } => {
            if scenarios == 0 {
                bail!("--scenarios must be at least 1");
            }
            let params = search.params();
            let mut runs = Vec::new();
            for i in 0..scenarios {
                let s_seed = seed.wrapping_add(i as u64);
                let scenario = generate_random_scenario(s_seed, k, u, &ScenarioRanges::default())?;
                let mut list = Method::HEURISTICS.to_vec();
                if oracle {
                    list.push(Method::Oracle);
                }
                for m in list {
                    let report = solve_method(&scenario, m, &params, s_seed)?;
                    runs.push(ScenarioRun { scenario_id: i, report });
                }
            }
            for s in semsat_core::report::summarize(&runs) {
                let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
                println!(
                    "{:<12} mean latency {:>10} s  mean ratio {:>8}  feasible {:>5.1}%",
                    s.method.label(),
                    cell(s.mean_latency_s),
                    cell(s.mean_compression_ratio),
                    100.0 * s.feasibility_rate
                );
            }
            write(&runs, format, &out)
        }
        Command::Gen { seed, k, u, out } => {
            let scenario = generate_random_scenario(seed, k, u, &ScenarioRanges::default())?;
            scenario.save(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
