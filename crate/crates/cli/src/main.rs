use clap::Parser;

use cvci::config::Cli;
use cvci::runner;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = runner::execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
