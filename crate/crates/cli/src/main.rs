use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use tvlp::cli::{self, Cli, Command};

fn main() -> ExitCode {
    let args: Vec<_> = std::env::args_os().collect();
    if let Ok(Cli { command: Command::Serve { port, host } }) = Cli::try_parse_from(&args) {
        return serve(&host, port);
    }
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code = cli::run(args, &mut input, &mut out, &mut err);
    let _ = out.flush();
    ExitCode::from(code as u8)
}

fn serve(host: &str, port: u16) -> ExitCode {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {host}:{port}: {e}");
                return ExitCode::from(2);
            }
        };
        eprintln!("listening on {host}:{port}");
        match axum::serve(listener, tvlp::service::router()).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        }
    })
}
