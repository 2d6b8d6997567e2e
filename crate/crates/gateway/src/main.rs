use std::process::ExitCode;

use clap::Parser;
use spi_ttt_gateway::cli::{self, Cli};

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    // clap exits with status 2 on usage errors
    let args = Cli::parse();
    let mut stdout = std::io::stdout();
    match cli::run(args, &mut stdout) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(cli::EXIT_FAILURE as u8)
        }
    }
}
