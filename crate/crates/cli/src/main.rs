use clap::Parser;

fn main() {
    let cli = fracgen_cli::Cli::parse();
    std::process::exit(fracgen_cli::run(cli));
}
