use clap::Parser;

fn main() {
    let cli = packets::cli::Cli::parse();
    std::process::exit(packets::cli::run(cli));
}
