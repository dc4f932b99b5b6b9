//! Query an HTTP completion endpoint with retries. A local server that
//! fails once with 503 before answering stands in for a hosted model.
//!
//! ```text
//! cargo run --example http_endpoint
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use stancebench::llm::{CompletionModel, EndpointConfig, HttpClient, RetryPolicy};
use stancebench::parse::parse_label;

fn serve(listener: TcpListener) {
    for (i, stream) in listener.incoming().enumerate() {
        let Ok(mut stream) = stream else { continue };
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut length = 0;
        let mut line = String::new();
        while reader.read_line(&mut line).unwrap_or(0) > 0 && line != "\r\n" {
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap_or(0);
            }
            line.clear();
        }
        let mut body = vec![0; length];
        let _ = reader.read_exact(&mut body);
        let (status, reply) = if i == 0 {
            ("503 Busy", "{}")
        } else {
            ("200 OK", r#"[{"generated_text":" Pro-Palestine"}]"#)
        };
        let _ = write!(
            stream,
            "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
            reply.len()
        );
    }
}

fn main() -> anyhow::Result<()> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let url = format!("http://{}/models/demo", listener.local_addr()?);
    thread::spawn(move || serve(listener));

    let mut config = EndpointConfig::new("demo-model", url);
    config.retry = RetryPolicy {
        base_backoff_ms: 200,
        ..RetryPolicy::default()
    };
    let client = HttpClient::new(config)?;
    let result = client.complete("Comment: Free Palestine\nStance:")?;
    println!(
        "{:?} after {} attempts in {:?} (retried on {:?}, backoff {:?})",
        result.text, result.attempts, result.latency, result.retried, result.backoff
    );
    println!("parsed label: {}", parse_label(&result.text)?.label);
    Ok(())
}
