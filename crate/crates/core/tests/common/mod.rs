#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;
use std::time::Duration;

use stancebench::StanceLabel;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
}

/// Compares `actual` with a golden file, rewriting the file instead when
/// `UPDATE_GOLDEN` is set.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| {
        format!(
            "{}: {e} (run with UPDATE_GOLDEN=1 to create)",
            path.display()
        )
    })?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("{name} differs from its golden file"))
    }
}

// ---------------------------------------------------------------------------
// Stub HTTP server

#[derive(Debug, Clone)]
pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl Reply {
    pub fn ok(body: &str) -> Self {
        Self::status(200, body)
    }

    pub fn status(status: u16, body: &str) -> Self {
        Self {
            status,
            body: body.to_string(),
            delay: Duration::ZERO,
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

#[derive(Debug, Clone)]
pub struct CapturedRequest {
    pub head: String,
    pub body: String,
}

/// Serves scripted replies in order, one per connection; the last reply
/// repeats once the script is exhausted.
pub struct StubServer {
    pub url: String,
    requests: Arc<Mutex<Vec<CapturedRequest>>>,
}

impl StubServer {
    pub fn start(script: Vec<Reply>) -> Self {
        assert!(!script.is_empty());
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/generate", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let captured = Arc::clone(&requests);
        thread::spawn(move || {
            for (i, stream) in listener.incoming().enumerate() {
                let Ok(stream) = stream else { continue };
                let reply = script[i.min(script.len() - 1)].clone();
                let captured = Arc::clone(&captured);
                thread::spawn(move || serve(stream, reply, &captured));
            }
        });
        Self { url, requests }
    }

    pub fn requests(&self) -> Vec<CapturedRequest> {
        self.requests.lock().unwrap().clone()
    }
}

fn serve(stream: TcpStream, reply: Reply, captured: &Mutex<Vec<CapturedRequest>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut head = String::new();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = v.trim().parse().unwrap_or(0);
        }
        let end = line == "\r\n";
        head.push_str(&line);
        if end {
            break;
        }
    }
    let mut body = vec![0u8; content_length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    captured.lock().unwrap().push(CapturedRequest {
        head,
        body: String::from_utf8_lossy(&body).into_owned(),
    });
    thread::sleep(reply.delay);
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    );
    let _ = stream.flush();
}

// ---------------------------------------------------------------------------
// Capturing logger

pub struct CaptureLogger {
    lines: Mutex<Vec<String>>,
}

impl log::Log for CaptureLogger {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }

    fn log(&self, record: &log::Record) {
        self.lines.lock().unwrap().push(format!(
            "{} {} {}",
            record.level(),
            record.target(),
            record.args()
        ));
    }

    fn flush(&self) {}
}

impl CaptureLogger {
    pub fn lines(&self) -> Vec<String> {
        self.lines.lock().unwrap().clone()
    }
}

/// Installs (once per test binary) a logger that records every line.
pub fn capture_logs() -> &'static CaptureLogger {
    static LOGGER: OnceLock<&'static CaptureLogger> = OnceLock::new();
    LOGGER.get_or_init(|| {
        let logger: &'static CaptureLogger = Box::leak(Box::new(CaptureLogger {
            lines: Mutex::new(Vec::new()),
        }));
        log::set_logger(logger).expect("no other logger installed");
        log::set_max_level(log::LevelFilter::Trace);
        logger
    })
}

// ---------------------------------------------------------------------------
// One-vs-rest metric oracle, computed straight from (gold, predicted) pairs.

pub struct OracleMetrics {
    pub accuracy: f64,
    pub precision: [f64; 3],
    pub recall: [f64; 3],
    pub f1: [f64; 3],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1_of_macros: f64,
    pub macro_f1_mean: f64,
}

pub fn oracle(pairs: &[(StanceLabel, Option<StanceLabel>)]) -> OracleMetrics {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let harmonic = |p: f64, r: f64| {
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    };
    let mut precision = [0.0; 3];
    let mut recall = [0.0; 3];
    let mut f1 = [0.0; 3];
    for (k, c) in StanceLabel::ALL.into_iter().enumerate() {
        let tp = pairs
            .iter()
            .filter(|(g, p)| *g == c && *p == Some(c))
            .count();
        let fp = pairs
            .iter()
            .filter(|(g, p)| *g != c && *p == Some(c))
            .count();
        let fn_ = pairs
            .iter()
            .filter(|(g, p)| *g == c && *p != Some(c))
            .count();
        precision[k] = ratio(tp, tp + fp);
        recall[k] = ratio(tp, tp + fn_);
        f1[k] = harmonic(precision[k], recall[k]);
    }
    let correct = pairs.iter().filter(|(g, p)| Some(*g) == *p).count();
    let macro_precision = precision.iter().sum::<f64>() / 3.0;
    let macro_recall = recall.iter().sum::<f64>() / 3.0;
    OracleMetrics {
        accuracy: ratio(correct, pairs.len()),
        precision,
        recall,
        f1,
        macro_precision,
        macro_recall,
        macro_f1_of_macros: harmonic(macro_precision, macro_recall),
        macro_f1_mean: f1.iter().sum::<f64>() / 3.0,
    }
}
