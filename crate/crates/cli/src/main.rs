use clap::Parser;

fn main() {
    let cli = semidisk_cli::Cli::parse();
    std::process::exit(semidisk_cli::run(&cli));
}
