use clap::Parser;

fn main() {
    std::process::exit(epirisk::cli::main_with(epirisk::cli::Cli::parse()));
}
