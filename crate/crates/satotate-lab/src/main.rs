use clap::Parser;
use satotate_lab::runner::{run, Cli};

fn main() {
    // usage errors are exit code 1 per the CLI contract (clap defaults to 2)
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(cli));
}
