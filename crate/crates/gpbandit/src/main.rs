use clap::Parser;
use gpbandit::cli::{dispatch, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        let code = match e {
            gpbandit::Error::Config(_) => 2,
            _ => 1,
        };
        std::process::exit(code);
    }
}
