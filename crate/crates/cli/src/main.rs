use std::fs;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use dunkl_cli::commands;
use dunkl_cli::config::{resolve, Cli, RunConfig, WORKERS_ENV};

fn run() -> Result<i32> {
    // usage errors exit 1; 2 is reserved for failed experiments
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            e.print()?;
            return Ok(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunConfig::parse(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => RunConfig::default(),
    };
    let env = std::env::var(WORKERS_ENV).ok();
    let r = resolve(cli, cfg, env.as_deref()).map_err(anyhow::Error::msg)?;
    if let Some(w) = r.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    let out = commands::run(&r)?;
    match &r.output {
        Some(p) => fs::write(p, &out.text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{}", out.text),
    }
    Ok(out.code)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
