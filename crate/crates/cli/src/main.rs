use clap::Parser;

fn main() {
    let cli = bsrm_cli::Cli::parse();
    std::process::exit(bsrm_cli::main_with(&cli));
}
