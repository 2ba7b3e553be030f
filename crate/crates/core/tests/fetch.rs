mod common;

use std::path::Path;
use std::time::Duration;

use common::mock_http::{self, MockServer, Reply, ADDRESS};
use retriage::fetch::{parse_response, Client, FetchConfig, FetchError};

fn client(endpoint: String, retries: u32) -> Client {
    // no {apikey} placeholder, so no credential is needed
    let endpoint = endpoint.replace("&apikey={apikey}", "");
    Client::from_env(FetchConfig {
        endpoint,
        api_key_env: "RETRIAGE_TEST_NO_KEY".into(),
        retries,
        backoff: Duration::from_millis(5),
        request_timeout: Duration::from_secs(5),
    })
    .expect("client")
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = walk(dir).into_iter().map(|p| p.strip_prefix(dir).unwrap().display().to_string()).collect();
    v.sort();
    v
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = e.path();
        if p.is_dir() {
            out.extend(walk(&p));
        }
        out.push(p);
    }
    out
}

#[test]
fn single_file_source_is_written_with_metadata() {
    let server = MockServer::start(vec![Reply::Json(200, mock_http::verified_body())], 2);
    let tmp = tempfile::tempdir().unwrap();
    let outcome = client(server.endpoint(), 0).fetch_to_dir(ADDRESS, tmp.path()).unwrap();
    assert_eq!(outcome.metadata.contract_name, "Dai");
    assert_eq!(entries(tmp.path()), [format!("{ADDRESS}.json"), "Dai.sol".into()]);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&outcome.metadata_path).unwrap()).unwrap();
    assert_eq!(meta["compiler_version"], "v0.5.12+commit.7709ece9");
    assert!(server.requests()[0].contains(&format!("address={ADDRESS}")));
}

#[test]
fn address_is_normalized_before_the_request() {
    let server = MockServer::start(vec![Reply::Json(200, mock_http::verified_body())], 2);
    let tmp = tempfile::tempdir().unwrap();
    let upper = format!("0X{}", ADDRESS[2..].to_ascii_uppercase());
    client(server.endpoint(), 0).fetch_to_dir(&upper, tmp.path()).unwrap();
    assert!(server.requests()[0].contains(ADDRESS));
}

#[test]
fn multi_file_sources_keep_their_layout() {
    let server = MockServer::start(vec![Reply::Json(200, mock_http::multi_file_body())], 2);
    let tmp = tempfile::tempdir().unwrap();
    let outcome = client(server.endpoint(), 0).fetch_to_dir(ADDRESS, tmp.path()).unwrap();
    assert_eq!(outcome.files.len(), 2);
    let names = entries(tmp.path());
    assert!(names.contains(&"contracts/Vault.sol".to_string()), "{names:?}");
    assert!(names.contains(&"contracts/lib/Math.sol".to_string()), "{names:?}");
}

#[test]
fn rate_limit_and_drops_are_retried() {
    let script = vec![Reply::Json(429, "{}".into()), Reply::Drop, Reply::Json(200, mock_http::verified_body())];
    let server = MockServer::start(script, 4);
    let tmp = tempfile::tempdir().unwrap();
    client(server.endpoint(), 3).fetch_to_dir(ADDRESS, tmp.path()).unwrap();
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let server = MockServer::start(vec![Reply::Json(200, mock_http::rate_limit_body())], 10);
    let err = client(server.endpoint(), 2).fetch(ADDRESS).unwrap_err();
    assert!(matches!(err, FetchError::RateLimited));
    assert_eq!(err.exit_code(), 5);
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn not_verified_is_not_retried() {
    let server = MockServer::start(vec![Reply::Json(200, mock_http::not_verified_body())], 4);
    let tmp = tempfile::tempdir().unwrap();
    let err = client(server.endpoint(), 3).fetch_to_dir(ADDRESS, tmp.path()).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert_eq!(server.requests().len(), 1);
    assert!(entries(tmp.path()).is_empty());
}

#[test]
fn malformed_body_is_a_network_failure() {
    let server = MockServer::start(vec![Reply::Json(200, "{not json".into())], 4);
    let err = client(server.endpoint(), 0).fetch(ADDRESS).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn server_errors_map_to_network_exit() {
    let server = MockServer::start(vec![Reply::Json(500, "oops".into())], 4);
    let err = client(server.endpoint(), 0).fetch(ADDRESS).unwrap_err();
    assert!(matches!(err, FetchError::Network(_)));
}

#[test]
fn traversal_paths_are_refused() {
    assert!(parse_response(ADDRESS, &mock_http::traversal_body()).is_err());
}

#[test]
fn failed_move_rolls_back_earlier_files() {
    let server = MockServer::start(vec![Reply::Json(200, mock_http::multi_file_body())], 2);
    let tmp = tempfile::tempdir().unwrap();
    // a directory where the second file must go makes its rename fail
    std::fs::create_dir_all(tmp.path().join("contracts/lib/Math.sol/blocker")).unwrap();
    let err = client(server.endpoint(), 0).fetch_to_dir(ADDRESS, tmp.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let left = entries(tmp.path());
    assert!(!left.iter().any(|n| n.ends_with("Vault.sol") || n.ends_with(".json") || n.contains(".fetch-")), "{left:?}");
}

#[test]
fn unreachable_endpoint_is_a_network_failure() {
    let server = MockServer::start(vec![Reply::Drop], 1);
    let endpoint = server.endpoint();
    drop(server);
    let err = client(endpoint, 1).fetch(ADDRESS).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}
