use clap::Parser;
use quasirand::cli::{self, Cli};

fn main() {
    std::process::exit(cli::run(Cli::parse()));
}
