use clap::Parser;

fn main() {
    let cli = lbfis_cli::Cli::parse();
    match lbfis_cli::run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
        }
        Err(e) => {
            eprintln!("lbfis: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
