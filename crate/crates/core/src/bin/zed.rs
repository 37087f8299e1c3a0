use clap::Parser;
use staggered_zed::cli_io::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
