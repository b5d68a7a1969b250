use clap::Parser;

fn main() {
    let cli = pqspectra_cli::Cli::parse();
    std::process::exit(pqspectra_cli::run(cli));
}
