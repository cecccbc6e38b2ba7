use clap::Parser;
use parisian_cli::{run, Cli};

fn main() {
    let arguments: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if let Err(e) = run(&cli, arguments) {
        let report = serde_json::json!({
            "error": {
                "kind": e.kind(),
                "command": cli.command.name(),
                "message": e.to_string(),
            }
        });
        eprintln!("{report}");
        std::process::exit(e.exit_code());
    }
}
