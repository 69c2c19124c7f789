//! A scripted chat-completion server for tests and demos.
//!
//! Fixture files are JSON arrays of `{"status": 200, "content": "..."}`
//! objects. Requests are answered in order; once the script runs out the
//! last response repeats.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockResponse {
    #[serde(default = "ok")]
    pub status: u16,
    #[serde(default)]
    pub content: String,
}

fn ok() -> u16 {
    200
}

impl MockResponse {
    pub fn ok(content: impl Into<String>) -> Self {
        MockResponse {
            status: 200,
            content: content.into(),
        }
    }

    pub fn status(status: u16) -> Self {
        MockResponse {
            status,
            content: String::new(),
        }
    }
}

pub struct MockChatServer {
    addr: String,
    requests: Arc<Mutex<Vec<serde_json::Value>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockChatServer {
    pub fn start(script: Vec<MockResponse>) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?.to_string();
        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let (reqs, halt) = (requests.clone(), stop.clone());
        let handle = std::thread::spawn(move || {
            let mut served = 0usize;
            for stream in listener.incoming() {
                if halt.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let reply = script
                    .get(served)
                    .or(script.last())
                    .cloned()
                    .unwrap_or_else(|| MockResponse::status(500));
                served += 1;
                let _ = serve(stream, &reply, &reqs);
            }
        });
        Ok(MockChatServer {
            addr,
            requests,
            stop,
            handle: Some(handle),
        })
    }

    pub fn from_fixture(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let script: Vec<MockResponse> = serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Self::start(script)
    }

    /// Endpoint URL to configure the client with.
    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    /// Parsed bodies of every request received so far.
    pub fn requests(&self) -> Vec<serde_json::Value> {
        self.requests.lock().expect("mock lock").clone()
    }
}

impl Drop for MockChatServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(&self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(
    stream: TcpStream,
    reply: &MockResponse,
    log: &Mutex<Vec<serde_json::Value>>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    log.lock()
        .expect("mock lock")
        .push(serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null));

    let payload = if reply.status == 200 {
        serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": reply.content } }] }).to_string()
    } else {
        serde_json::json!({ "error": "scripted failure" }).to_string()
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {} Scripted\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        payload.len(),
        payload
    )?;
    out.flush()
}
