use clap::Parser;

use chordseq_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            std::process::exit(2);
        }
    }
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            if outcome.warnings > 0 {
                eprintln!("finished with {} warning(s)", outcome.warnings);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
