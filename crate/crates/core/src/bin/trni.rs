use std::io::{IsTerminal, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let color =
        std::env::var("TRNI_COLOR").map_or(true, |v| v != "0") && std::io::stdout().is_terminal();
    let (code, out) = trni::cli::run(std::env::args_os(), color);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.as_bytes());
    let _ = stdout.flush();
    ExitCode::from(code as u8)
}
