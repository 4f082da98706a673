use clap::Parser;

fn main() {
    let cli = fastortho_cli::Cli::parse();
    if let Err(e) = fastortho_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
