use clap::Parser;

fn main() {
    let cli = kmh_cli::args::Cli::parse();
    std::process::exit(kmh_cli::run(cli));
}
