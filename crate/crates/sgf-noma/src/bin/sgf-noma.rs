use clap::Parser;

fn main() {
    let cli = sgf_noma::cli::Cli::parse();
    if let Err(e) = sgf_noma::cli::execute(&cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
