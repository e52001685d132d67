use clap::Parser;

fn main() {
    let cli = wzrisk_cli::Cli::parse();
    if let Err(e) = wzrisk_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(wzrisk_cli::exit_code(&e));
    }
}
