//! Download verified source for one address into a directory.
//!
//! The endpoint template takes `{address}` and `{apikey}`. The key is read
//! from EXPLORER_API_KEY.
//!
//! EXPLORER_API_KEY=... cargo run --example fetch_source -- 0x6b17... out/

use std::path::PathBuf;
use std::time::Duration;

use retriage::fetch::{Client, FetchConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let (Some(address), Some(out)) = (args.next(), args.next()) else {
        eprintln!("usage: fetch_source <address> <out-dir> [endpoint]");
        std::process::exit(2);
    };
    let mut config = FetchConfig { request_timeout: Duration::from_secs(20), ..FetchConfig::default() };
    if let Some(endpoint) = args.next() {
        config.endpoint = endpoint;
    }
    let result = Client::from_env(config).and_then(|c| c.fetch_to_dir(&address, &PathBuf::from(out)));
    match result {
        Ok(o) => {
            println!("{} ({})", o.metadata.contract_name, o.metadata.compiler_version);
            for f in &o.files {
                println!("  {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code().into());
        }
    }
}
