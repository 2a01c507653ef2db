use clap::Parser;

use thermoshift::cli;

fn main() {
    let parsed = match cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version requests are success, bad usage is a
            // validation failure
            if e.use_stderr() {
                eprintln!("{}", e);
                std::process::exit(cli::EXIT_VALIDATION);
            }
            print!("{}", e);
            std::process::exit(cli::EXIT_OK);
        }
    };
    let mut stdout = std::io::stdout().lock();
    match cli::run(parsed, &mut stdout) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
