use std::process::ExitCode;

use affectgrid_cli::{execute, exit_code, parse_args};

fn main() -> ExitCode {
    let cmd = match parse_args(std::env::args_os()) {
        Ok(cmd) => cmd,
        Err(e) => e.exit(),
    };
    let stdout = std::io::stdout();
    match execute(cmd, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
