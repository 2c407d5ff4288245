use clap::Parser;

use chardelta::cli::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits with 2 on usage errors; this tool reserves 2 for
            // data errors, so remap: help and version 0, everything else 1
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = cli.execute() {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
