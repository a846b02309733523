use clap::Parser;

use spanet::cli::{self, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; everything else is usage.
            let _ = e.print();
            let code = if e.use_stderr() { 1 } else { 0 };
            std::process::exit(code);
        }
    };
    if let Err(e) = cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(cli::exit_code(&e));
    }
}
