use clap::Parser;
use georabi_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("georabi: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
