use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dynloc_cli::config::documented_keys;
use dynloc_cli::{parse_config, run, CliError, Experiment, RunConfig};

fn config_help() -> String {
    let mut s = String::from("Config keys (key = value, # comments):\n");
    for (key, help, default) in documented_keys() {
        s.push_str(&format!("  {key:<17} {help} [default: {default}]\n"));
    }
    s
}

#[derive(Parser, Debug)]
#[command(name = "dynloc", version, about = "Dynamical localization under elliptic-function driving")]
#[command(after_help = config_help())]
struct Args {
    /// Config file; omitted keys take their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory receiving the CSV tables and manifest.json.
    #[arg(long, value_name = "DIR", default_value = "out")]
    output: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, value_name = "N", default_value_t = 0)]
    threads: usize,
    /// Overrides the config experiment.
    #[arg(long, value_name = "NAME")]
    experiment: Option<String>,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(name) = &args.experiment {
        config.experiment = name.parse::<Experiment>().map_err(CliError::Validation)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = load(&args).and_then(|config| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        run(&config, &args.output)
    });
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            println!("{}", report.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dynloc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
