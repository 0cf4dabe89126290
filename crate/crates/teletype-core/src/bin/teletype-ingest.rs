//! Ingestion service: receive records over HTTP, stamp server time, append
//! to the day-file store.

use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;

use teletype_core::ingest::{router, IngestService, RecordStore};

#[derive(Parser)]
#[command(name = "teletype-ingest", about = "Telemetry record ingestion service")]
struct Cli {
    /// Directory for records-YYYYMMDD.jsonl day files.
    #[arg(long, default_value = "store")]
    store_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8787")]
    addr: String,
    /// Reject request bodies larger than this many KiB.
    #[arg(long, default_value_t = 64)]
    body_limit_kib: usize,
}

#[tokio::main(flavor = "multi_thread")]
async fn main() {
    let cli = Cli::parse();
    let store = match RecordStore::open(&cli.store_dir) {
        Ok(store) => store,
        Err(e) => {
            eprintln!("cannot open store {}: {e}", cli.store_dir.display());
            std::process::exit(1);
        }
    };
    let mut service = IngestService::new(store);
    service.body_limit = cli.body_limit_kib * 1024;
    let app = router(Arc::new(service));
    let listener = match tokio::net::TcpListener::bind(&cli.addr).await {
        Ok(listener) => listener,
        Err(e) => {
            eprintln!("cannot bind {}: {e}", cli.addr);
            std::process::exit(1);
        }
    };
    eprintln!(
        "ingest listening on {} (store: {})",
        cli.addr,
        cli.store_dir.display()
    );
    if let Err(e) = axum::serve(listener, app).await {
        eprintln!("server error: {e}");
        std::process::exit(1);
    }
}
