use clap::Parser;

fn main() {
    let cli = auv_harness::cli::Cli::parse();
    if let Err(e) = auv_harness::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
