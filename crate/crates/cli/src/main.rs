use borel_ns::{execute, Cli};
use clap::Parser;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match execute(cli) {
        Ok(out) => print!("{out}"),
        Err(e) => {
            eprintln!("borel-ns: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
