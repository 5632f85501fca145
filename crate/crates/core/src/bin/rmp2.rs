use clap::Parser;
use rmp2::cli::{execute, exit_code, Cli, Outcome};

fn main() {
    let cli = Cli::parse();
    let result = execute(&cli);
    match &result {
        Err(e) => eprintln!("rmp2: {e}"),
        Ok(Outcome::Degenerate(msg)) => eprintln!("rmp2: {msg}"),
        Ok(Outcome::Contradiction) => eprintln!("rmp2: a prediction is contradicted"),
        Ok(Outcome::Ok) => {}
    }
    std::process::exit(exit_code(&result));
}
