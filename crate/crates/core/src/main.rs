use clap::Parser;

fn main() {
    let cli = ruinbound::cli::Cli::parse();
    std::process::exit(ruinbound::cli::run(&cli));
}
