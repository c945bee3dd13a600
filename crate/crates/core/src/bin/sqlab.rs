use std::io;
use std::panic;
use std::process::ExitCode;

use sqlab::harness::{cli_main, EXIT_INTERNAL};

fn main() -> ExitCode {
    let code = panic::catch_unwind(|| {
        let stdout = io::stdout();
        let stderr = io::stderr();
        cli_main(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
    })
    .unwrap_or(EXIT_INTERNAL);
    ExitCode::from(code as u8)
}
