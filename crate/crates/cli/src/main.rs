use std::io::{self, IsTerminal, Write};

use clap::Parser;

use gridtdd_cli::{execute, Cli, Io};

fn main() {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let tty = stdout.is_terminal();
    let mut out = stdout.lock();
    let mut err = io::stderr();
    let code = execute(
        &cli,
        &mut Io {
            out: &mut out,
            err: &mut err,
            tty,
        },
    );
    let _ = out.flush();
    drop(out);
    std::process::exit(code);
}
