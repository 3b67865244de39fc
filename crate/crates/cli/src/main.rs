use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = tfe_cli::Cli::parse();
    match tfe_cli::run(&cli) {
        Ok(report) => {
            println!("{}", report.manifest.display());
        }
        Err(e) => {
            eprintln!("tfe: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
