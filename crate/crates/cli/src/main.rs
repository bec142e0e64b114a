use clap::Parser;
use fibercav_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("record {} -> {}", outcome.record.record_id, outcome.record_path.display());
        }
        Err(e) => {
            let report = serde_json::to_string(&e.report()).expect("error report serializes");
            eprintln!("{report}");
            std::process::exit(e.exit_code());
        }
    }
}
