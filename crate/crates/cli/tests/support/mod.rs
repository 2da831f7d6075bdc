//! Shared test support: deterministic fixture construction and a
//! minimal chat-completions stub server speaking the same JSON protocol
//! as the real endpoint.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use perfsearch_core::bench::SyntheticTask;
use perfsearch_core::predictor::EvalRecord;
use perfsearch_core::prompt::TaskExample;
use perfsearch_core::space::{Architecture, SearchSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_perfsearch")
}

/// Deterministic task examples used across prompt fixtures.
pub fn task_examples() -> Vec<TaskExample> {
    [
        (
            "The committee approved the proposal.",
            "Der Ausschuss billigte den Vorschlag.",
        ),
        (
            "We will meet again tomorrow.",
            "Wir treffen uns morgen wieder.",
        ),
        (
            "The results were published last week.",
            "Die Ergebnisse wurden letzte Woche veroeffentlicht.",
        ),
        (
            "Prices rose slightly in March.",
            "Die Preise stiegen im Maerz leicht an.",
        ),
        (
            "The museum is closed on Mondays.",
            "Das Museum ist montags geschlossen.",
        ),
    ]
    .iter()
    .map(|(input, output)| TaskExample {
        input_text: (*input).to_string(),
        output_text: (*output).to_string(),
    })
    .collect()
}

/// 30 deterministic gold-labeled records over the full transformer
/// space, with analytic efficiency metrics.
pub fn tfs_eval_records() -> Vec<EvalRecord> {
    let space = SearchSpace::default_transformer();
    let task = SyntheticTask::over_space(space.clone(), 0).unwrap();
    let evaluator = task.efficiency_evaluator();
    let mut rng = ChaCha12Rng::seed_from_u64(20_240_301);
    let mut seen = std::collections::BTreeSet::new();
    let mut records = Vec::new();
    while records.len() < 30 {
        let arch = space.sample(&mut rng);
        if !seen.insert(space.arch_digest(&arch)) {
            continue;
        }
        let efficiency = evaluator.report(&arch).unwrap();
        records.push(EvalRecord {
            score: (task.gold(&arch) * 100.0).round() / 100.0,
            arch,
            efficiency: Some(efficiency),
        });
    }
    records
}

pub fn test_arch() -> Architecture {
    let space = SearchSpace::default_transformer();
    let mut rng = ChaCha12Rng::seed_from_u64(777);
    space.sample(&mut rng)
}

/// Three distinct tiny-space architectures for the metric fixtures.
pub fn three_archs() -> Vec<Architecture> {
    let space = SyntheticTask::tiny_space();
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let mut seen = std::collections::BTreeSet::new();
    let mut archs = Vec::new();
    while archs.len() < 3 {
        let arch = space.sample(&mut rng);
        if seen.insert(space.arch_digest(&arch)) {
            archs.push(arch);
        }
    }
    archs
}

pub type StubBehavior = Arc<dyn Fn(usize, &str) -> StubReply + Send + Sync>;

pub struct StubReply {
    pub status: u16,
    pub body: String,
}

impl StubReply {
    pub fn score(value: &str) -> Self {
        Self {
            status: 200,
            body: format!("{{\"choices\":[{{\"message\":{{\"content\":\"{value}\"}}}}]}}"),
        }
    }

    pub fn error(status: u16) -> Self {
        Self {
            status,
            body: "{\"error\":\"stub failure\"}".to_string(),
        }
    }
}

/// Hand-rolled HTTP/1.1 responder; counts requests and tracks the
/// in-flight high-water mark so tests can observe retry and
/// concurrency behavior.
pub struct StubServer {
    pub base_url: String,
    requests: Arc<AtomicUsize>,
    in_flight: Arc<AtomicUsize>,
    high_water: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    addr: std::net::SocketAddr,
}

impl StubServer {
    pub fn start(behavior: StubBehavior) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(AtomicUsize::new(0));
        let in_flight = Arc::new(AtomicUsize::new(0));
        let high_water = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        {
            let requests = requests.clone();
            let in_flight = in_flight.clone();
            let high_water = high_water.clone();
            let stop = stop.clone();
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let behavior = behavior.clone();
                    let requests = requests.clone();
                    let in_flight = in_flight.clone();
                    let high_water = high_water.clone();
                    std::thread::spawn(move || {
                        let _ =
                            handle_connection(stream, behavior, requests, in_flight, high_water);
                    });
                }
            });
        }
        Self {
            base_url: format!("http://{addr}/v1"),
            requests,
            in_flight,
            high_water,
            stop,
            addr,
        }
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn max_concurrent(&self) -> usize {
        self.high_water.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
    }
}

fn handle_connection(
    stream: TcpStream,
    behavior: StubBehavior,
    requests: Arc<AtomicUsize>,
    in_flight: Arc<AtomicUsize>,
    high_water: Arc<AtomicUsize>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(()); // shutdown poke
    }
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            break;
        }
        if let Some(value) = trimmed
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
        {
            content_length = value;
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body = String::from_utf8_lossy(&body).to_string();

    let index = requests.fetch_add(1, Ordering::SeqCst);
    let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    high_water.fetch_max(now, Ordering::SeqCst);
    let reply = behavior(index, &body);
    in_flight.fetch_sub(1, Ordering::SeqCst);

    let mut stream = stream;
    let status_text = match reply.status {
        200 => "OK",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Error",
    };
    write!(
        stream,
        "HTTP/1.1 {} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        status_text,
        reply.body.len(),
        reply.body
    )?;
    stream.flush()
}
