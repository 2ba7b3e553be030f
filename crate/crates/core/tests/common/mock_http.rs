//! Single-threaded HTTP/1.1 stub that plays back scripted responses and
//! records each request line.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

#[derive(Debug, Clone)]
pub enum Reply {
    Json(u16, String),
    /// Close the connection without answering.
    Drop,
}

pub const ADDRESS: &str = "0x6b175474e89094c44da98b954eedeac495271d0f";

pub fn verified_body() -> String {
    serde_json::json!({
        "status": "1",
        "message": "OK",
        "result": [{
            "SourceCode": "pragma solidity ^0.5.0;\ncontract Dai {\n    mapping(address => uint) public balanceOf;\n}\n",
            "ContractName": "Dai",
            "CompilerVersion": "v0.5.12+commit.7709ece9"
        }]
    })
    .to_string()
}

pub fn multi_file_body() -> String {
    let inner = serde_json::json!({
        "language": "Solidity",
        "sources": {
            "contracts/Vault.sol": {"content": "contract Vault {}\n"},
            "contracts/lib/Math.sol": {"content": "library Math {}\n"}
        }
    });
    serde_json::json!({
        "status": "1",
        "message": "OK",
        "result": [{"SourceCode": format!("{{{inner}}}"), "ContractName": "Vault", "CompilerVersion": "v0.8.4"}]
    })
    .to_string()
}

pub fn traversal_body() -> String {
    let inner = serde_json::json!({"sources": {
        "ok.sol": {"content": "contract A {}\n"},
        "../escape.sol": {"content": "contract B {}\n"}
    }});
    serde_json::json!({"status": "1", "message": "OK", "result": [{"SourceCode": inner.to_string(), "ContractName": "A"}]})
        .to_string()
}

pub fn not_verified_body() -> String {
    serde_json::json!({
        "status": "1",
        "message": "OK",
        "result": [{"SourceCode": "", "ABI": "Contract source code not verified", "ContractName": ""}]
    })
    .to_string()
}

pub fn rate_limit_body() -> String {
    serde_json::json!({"status": "0", "message": "NOTOK", "result": "Max rate limit reached"}).to_string()
}

pub struct MockServer {
    pub base: String,
    requests: Arc<Mutex<Vec<String>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Serve `script` in order; the last reply repeats once the script runs
    /// out. The server stops after `limit` connections.
    pub fn start(script: Vec<Reply>, limit: usize) -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock");
        let base = format!("http://{}", listener.local_addr().expect("local addr"));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let seen = Arc::clone(&requests);
        let stop = Arc::new(AtomicBool::new(false));
        let stopped = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            for n in 0..limit {
                let Ok((stream, _)) = listener.accept() else { return };
                if stopped.load(Ordering::SeqCst) {
                    return;
                }
                let reply = script.get(n).or(script.last()).cloned().unwrap_or(Reply::Drop);
                serve(stream, reply, &seen);
            }
        });
        MockServer { base, requests, stop, handle: Some(handle) }
    }

    /// Endpoint template pointing at this server.
    pub fn endpoint(&self) -> String {
        format!("{}/api?module=contract&action=getsourcecode&address={{address}}&apikey={{apikey}}", self.base)
    }

    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().expect("lock").clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        // unblock a pending accept so the thread can finish
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.base.trim_start_matches("http://"));
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, reply: Reply, seen: &Mutex<Vec<String>>) {
    let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header).unwrap_or(0) == 0 || header == "\r\n" {
            break;
        }
    }
    seen.lock().expect("lock").push(request_line.trim_end().to_string());
    let mut stream = stream;
    match reply {
        Reply::Drop => {
            let _ = stream.shutdown(std::net::Shutdown::Both);
        }
        Reply::Json(status, body) => {
            let reason = if status == 200 { "OK" } else { "Error" };
            let _ = write!(
                stream,
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.flush();
        }
    }
}
