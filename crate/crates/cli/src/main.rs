use clap::error::ErrorKind;
use clap::Parser;
use postmortem_cli::commands::{self, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            std::process::exit(0);
        }
        Err(err) => {
            eprint!("{err}");
            std::process::exit(1);
        }
    };
    if let Err(failure) = commands::run(cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.exit_code());
    }
}
