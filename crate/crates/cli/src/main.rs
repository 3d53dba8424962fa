//! `nim`: validate models offline, run the server, and talk to it.
//!
//! Exit codes: 0 success, 1 client error (4xx or an invalid model),
//! 2 server error (5xx), 3 server unreachable.

mod output;
mod remote;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use nim_core::{Store, StoreConfig};
use nim_ndf::{parse_bytes, SymbolTable};
use nim_service::builtins::{builtin_symbols, builtins_loaded, load_builtins};
use nim_service::{http, prepare_model, Engine};

use remote::Remote;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "nim", version, about = "Neighbourhood information model engine")]
struct Cli {
    /// Base URL of a running server.
    #[arg(long, global = true, default_value = "http://127.0.0.1:8080")]
    server: String,
    /// Principal to read as; repeatable.
    #[arg(long = "role", global = true)]
    roles: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an NDF file offline against the builtin models.
    Validate {
        file: PathBuf,
        /// Check against an empty registry instead.
        #[arg(long)]
        no_builtins: bool,
    },
    /// Run the HTTP server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Location code of this node, checked against storage policies.
        #[arg(long, default_value = "DE")]
        location: String,
        /// Directory holding the journal.
        #[arg(long, default_value = "nim-data")]
        data: PathBuf,
        #[arg(long)]
        no_builtins: bool,
    },
    /// Upload an NDF model.
    Register { file: PathBuf },
    /// Store a JSON document as an instance of a type ("-" reads stdin).
    Ingest { type_name: String, file: PathBuf },
    /// List the instances of a type.
    Query {
        type_name: String,
        /// ISO-8601 instant to read at.
        #[arg(long)]
        at: Option<String>,
    },
    /// Show the value history of one entry.
    History {
        type_name: String,
        instance: String,
        field: String,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        at: Option<String>,
    },
    /// Remove expired values.
    Purge,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let remote = Remote::new(&cli.server, cli.roles.clone(), cli.format);
    let code = match cli.command {
        Command::Validate { file, no_builtins } => validate(&file, no_builtins),
        Command::Serve {
            port,
            location,
            data,
            no_builtins,
        } => serve(port, location, data, no_builtins),
        Command::Register { file } => match read_file(&file) {
            Ok(bytes) => remote.register(&file, &String::from_utf8_lossy(&bytes)),
            Err(code) => code,
        },
        Command::Ingest { type_name, file } => match read_file(&file) {
            Ok(bytes) => remote.ingest(&type_name, &bytes),
            Err(code) => code,
        },
        Command::Query { type_name, at } => remote.query(&type_name, at.as_deref()),
        Command::History {
            type_name,
            instance,
            field,
            from,
            to,
            at,
        } => remote.history(&type_name, &instance, &field, from, to, at),
        Command::Purge => remote.purge(),
    };
    ExitCode::from(code)
}

fn read_file(path: &Path) -> Result<Vec<u8>, u8> {
    let result = if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut std::io::stdin(), &mut buf).map(|_| buf)
    } else {
        std::fs::read(path)
    };
    result.map_err(|e| {
        eprintln!("{}: {e}", path.display());
        1
    })
}

fn validate(file: &Path, no_builtins: bool) -> u8 {
    let bytes = match read_file(file) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let name = file.display();
    let source = match std::str::from_utf8(&bytes) {
        Ok(s) => s,
        Err(_) => {
            for d in parse_bytes(&bytes).err().unwrap_or_default() {
                eprintln!("{name}:{d}");
            }
            return 1;
        }
    };
    let symbols = if no_builtins {
        SymbolTable::new()
    } else {
        builtin_symbols()
    };
    match prepare_model(source, &symbols, "validate") {
        Ok(prepared) => {
            for d in &prepared.warnings {
                eprintln!("{name}:{d}");
            }
            0
        }
        Err(diags) => {
            for d in &diags {
                eprintln!("{name}:{d}");
            }
            1
        }
    }
}

fn serve(port: u16, location: String, data: PathBuf, no_builtins: bool) -> u8 {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cannot start runtime: {e}");
            return 2;
        }
    };
    let config = StoreConfig::in_memory(location).with_data_dir(&data);
    let (store, report) = match Store::open(config) {
        Ok(opened) => opened,
        Err(e) => {
            eprintln!("cannot open {}: {e}", data.display());
            return 2;
        }
    };
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }
    eprintln!("replayed {} journal records from {}", report.records, data.display());
    let engine = match Engine::new(store) {
        Ok(e) => Arc::new(e),
        Err(e) => {
            eprintln!("cannot rebuild the model registry: {e}");
            return 2;
        }
    };
    if !no_builtins && !builtins_loaded(&engine.registry()) {
        match load_builtins(&engine) {
            Ok(results) => {
                for r in results.iter().filter(|r| !r.is_accepted()) {
                    eprintln!("warning: builtin model rejected: {:?}", r.diagnostics);
                }
            }
            Err(e) => {
                eprintln!("cannot load builtin models: {e}");
                return 2;
            }
        }
    }
    runtime.block_on(async move {
        let addr = SocketAddr::from(([0, 0, 0, 0], port));
        let listener = match tokio::net::TcpListener::bind(addr).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("cannot bind {addr}: {e}");
                return 2;
            }
        };
        match listener.local_addr() {
            Ok(a) => eprintln!("listening on http://{a}"),
            Err(e) => eprintln!("listening ({e})"),
        }
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match http::serve_until(listener, engine, shutdown).await {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("server error: {e}");
                2
            }
        }
    })
}
