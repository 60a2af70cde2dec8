mod args;
mod common;
mod output;
mod pipeline;
mod study;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{BenchAction, Cli, Command};
use output::Sink;

fn run(cli: Cli) -> Result<()> {
    let sink = Sink::new(cli.out.clone(), cli.format);
    match &cli.command {
        Command::Bench {
            action: BenchAction::List,
        } => pipeline::bench_list(&sink),
        Command::Design(cmd) => pipeline::design(cmd, cli.seed, cli.out.clone()),
        Command::Explore(cmd) => pipeline::explore(cmd, cli.seed, &sink),
        Command::Centroid(cmd) => pipeline::centroid(cmd, cli.seed, &sink),
        Command::Metrics(cmd) => pipeline::metrics(cmd, &sink),
        Command::Simulate(cmd) => pipeline::simulate_cmd(cmd, &sink),
        Command::Study { which } => {
            let sink = Sink::bundle(cli.out.clone(), cli.format, "polepid-out")?;
            study::run_study(which, cli.seed, &sink)
        }
        Command::Perturb(cmd) => {
            let sink = Sink::bundle(cli.out.clone(), cli.format, "polepid-out")?;
            study::perturb(cmd, cli.seed, &sink)
        }
        Command::Rules { action } => study::rules(action, &sink),
        Command::Stats { action } => study::stats(action, &sink),
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(common::exit_code(&e))
        }
    }
}
