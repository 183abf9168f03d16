use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use regglab_cli::config::{config_path, merge, parse_config};
use regglab_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut args: Vec<String> = std::env::args().collect();
    if let Some(path) = config_path(&args) {
        let entries = std::fs::read_to_string(&path)
            .map_err(|e| format!("reading {path}: {e}"))
            .and_then(|text| parse_config(&text).map_err(|e| format!("{path}: {e}")));
        match entries {
            Ok(entries) => merge(&mut args, &entries),
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(k) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(report) => {
            let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                let failed: Vec<_> = report.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
                eprintln!("theorem check failed: {}", failed.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
