use clap::Parser;
use symcrtl::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout();
    let result = run(&cli, &mut stdout);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    std::process::exit(exit_code(&result));
}
