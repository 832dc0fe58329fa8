use std::path::PathBuf;

use clap::{Arg, ArgAction, Command};

use vibronic_cli::config::RawConfig;
use vibronic_cli::experiments::{self, RunContext};
use vibronic_cli::CliError;

fn build_cli() -> Command {
    let mut cmd = Command::new("vibronic")
        .about("pulse-driven exciton-vibration dynamics: experiments over the driven Dicke-type model")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for exp in experiments::registry() {
        cmd = cmd.subcommand(
            Command::new(exp.name())
                .about(exp.about())
                .arg(
                    Arg::new("config")
                        .long("config")
                        .value_name("PATH")
                        .help("flat key = value configuration file"),
                )
                .arg(
                    Arg::new("set")
                        .long("set")
                        .value_name("KEY=VALUE")
                        .action(ArgAction::Append)
                        .help("override one configuration key"),
                ),
        );
    }
    cmd
}

fn run() -> Result<(), CliError> {
    let matches = build_cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");

    let mut raw = match sub.get_one::<String>("config") {
        Some(path) => RawConfig::from_file(&PathBuf::from(path))?,
        None => RawConfig::empty(),
    };
    if let Some(sets) = sub.get_many::<String>("set") {
        for spec in sets {
            raw.apply_set(spec)?;
        }
    }

    let experiment = experiments::find(name).expect("registered subcommand");
    let out_dir = PathBuf::from(raw.str_or("out_dir", "out"));
    std::fs::create_dir_all(&out_dir)?;

    let mut ctx = RunContext::new(&raw, out_dir, name);
    let result = experiment.run(&mut ctx);
    match &result {
        Ok(()) => ctx.manifest.set_status("ok"),
        Err(e) => ctx.manifest.set_status(&format!("failed: {e}")),
    }
    ctx.manifest.write_to(&ctx.out_dir)?;
    result
}

fn main() {
    if let Err(e) = run() {
        eprintln!("vibronic: {e}");
        std::process::exit(e.exit_code());
    }
}
