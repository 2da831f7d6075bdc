//! The remote-LLM performance predictor: renders one prompt per
//! architecture, posts it to a chat-completions endpoint, parses the
//! reply into a score, and caches results on disk.
//!
//! Wire protocol: `POST {base_url}/chat/completions` with a JSON body
//! `{model, messages, temperature, max_tokens}` and bearer-token auth,
//! so any compatible endpoint (or a local stub) works. Transport
//! failures, 429s, and 5xx replies retry with exponential backoff;
//! parse failures do not retry by default, since resampling a
//! deterministic endpoint is futile (an opt-in flag resamples once at
//! temperature 0.7).

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use perfsearch_core::predictor::{PredictError, Predictor};
use perfsearch_core::prompt::{
    parse_prediction, render_prompt, Demonstration, PromptConfig, TaskExample,
};
use perfsearch_core::space::Architecture;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::manifest::sha256_hex;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Environment variable holding the bearer token.
    pub api_key_env_var: String,
    pub temperature: f64,
    pub max_reply_tokens: u32,
    pub request_timeout_s: u64,
    pub max_retries: u32,
    pub max_concurrency: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system_message: Option<String>,
    /// Retry an unparseable reply once at temperature 0.7.
    pub resample_on_parse_error: bool,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".to_string(),
            model_name: "gpt-4".to_string(),
            api_key_env_var: "LLM_API_KEY".to_string(),
            temperature: 0.0,
            max_reply_tokens: 16,
            request_timeout_s: 60,
            max_retries: 3,
            max_concurrency: 4,
            cache_path: None,
            system_message: None,
            resample_on_parse_error: false,
        }
    }
}

impl LlmEndpointConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.max_concurrency == 0 {
            return Err(CliError::Config("max_concurrency must be >= 1".into()));
        }
        if self.temperature < 0.0 {
            return Err(CliError::Config("temperature must be >= 0".into()));
        }
        Ok(())
    }
}

/// Everything needed to turn an architecture into a prompt.
#[derive(Debug, Clone)]
pub struct PromptContext {
    pub config: PromptConfig,
    pub glossary: Vec<(String, String)>,
    pub task_examples: Vec<TaskExample>,
    pub demonstrations: Vec<Demonstration>,
}

impl PromptContext {
    pub fn render(&self, arch: &Architecture) -> Result<String, CliError> {
        render_prompt(
            &self.config,
            &self.glossary,
            &self.task_examples,
            &self.demonstrations,
            arch,
        )
        .map_err(|e| CliError::Input(e.to_string()))
    }
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Debug, Deserialize)]
struct ChatUsage {
    #[serde(default)]
    total_tokens: u64,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Debug, Deserialize)]
struct ChatReplyMessage {
    content: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRow {
    prompt_hash: String,
    model: String,
    value: f64,
}

struct Cache {
    entries: Mutex<HashMap<String, f64>>,
    writer: Option<Mutex<fs::File>>,
}

impl Cache {
    fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let mut entries = HashMap::new();
        let writer = match path {
            None => None,
            Some(path) => {
                if path.exists() {
                    let text = fs::read_to_string(path).map_err(|e| CliError::input_at(path, e))?;
                    for (i, line) in text.lines().enumerate() {
                        if line.trim().is_empty() {
                            continue;
                        }
                        let row: CacheRow = serde_json::from_str(line)
                            .map_err(|e| CliError::input_at_line(path, i + 1, e))?;
                        entries.insert(format!("{}:{}", row.model, row.prompt_hash), row.value);
                    }
                }
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        fs::create_dir_all(parent).map_err(|e| CliError::input_at(parent, e))?;
                    }
                }
                let file = fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| CliError::input_at(path, e))?;
                Some(Mutex::new(file))
            }
        };
        Ok(Self {
            entries: Mutex::new(entries),
            writer,
        })
    }

    fn get(&self, key: &str) -> Option<f64> {
        self.entries.lock().unwrap().get(key).copied()
    }

    fn put(&self, model: &str, prompt_hash: &str, value: f64) {
        let key = format!("{model}:{prompt_hash}");
        let fresh = self.entries.lock().unwrap().insert(key, value).is_none();
        if !fresh {
            return;
        }
        if let Some(writer) = &self.writer {
            let row = CacheRow {
                prompt_hash: prompt_hash.to_string(),
                model: model.to_string(),
                value,
            };
            let mut file = writer.lock().unwrap();
            if let Ok(line) = serde_json::to_string(&row) {
                let _ = writeln!(file, "{line}");
                let _ = file.flush();
            }
        }
    }
}

pub struct LlmPredictor {
    name: String,
    config: LlmEndpointConfig,
    prompt: PromptContext,
    api_key: String,
    agent: ureq::Agent,
    cache: Cache,
    requests_sent: AtomicUsize,
    tokens_reported: std::sync::atomic::AtomicU64,
}

impl LlmPredictor {
    pub fn new(config: LlmEndpointConfig, prompt: PromptContext) -> Result<Self, CliError> {
        config.validate()?;
        prompt
            .config
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let api_key = std::env::var(&config.api_key_env_var).map_err(|_| {
            CliError::Config(format!(
                "API key environment variable `{}` is not set",
                config.api_key_env_var
            ))
        })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.request_timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        let cache = Cache::open(config.cache_path.as_deref())?;
        Ok(Self {
            name: format!("llm({})", config.model_name),
            config,
            prompt,
            api_key,
            agent,
            cache,
            requests_sent: AtomicUsize::new(0),
            tokens_reported: std::sync::atomic::AtomicU64::new(0),
        })
    }

    /// Sum of `usage.total_tokens` reported by the endpoint, when it
    /// reports any; feeds measured-usage cost estimates in place of the
    /// fixed per-query assumption.
    pub fn tokens_reported(&self) -> u64 {
        self.tokens_reported.load(Ordering::Relaxed)
    }

    /// Requests actually sent over the wire (cache hits excluded).
    pub fn requests_sent(&self) -> usize {
        self.requests_sent.load(Ordering::Relaxed)
    }

    /// Per-architecture outcomes (no fail-fast), in input order, with up
    /// to `max_concurrency` requests in flight.
    pub fn predict_each(&self, archs: &[Architecture]) -> Vec<Result<f64, PredictError>> {
        let next = AtomicUsize::new(0);
        let results: Vec<Mutex<Option<Result<f64, PredictError>>>> =
            archs.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.config.max_concurrency.min(archs.len()).max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= archs.len() {
                        break;
                    }
                    let result = self.predict(&archs[i]);
                    *results[i].lock().unwrap() = Some(result);
                });
            }
        });
        results
            .into_iter()
            .map(|cell| {
                cell.into_inner()
                    .unwrap()
                    .expect("worker filled every slot")
            })
            .collect()
    }

    fn post_once(&self, prompt_text: &str, temperature: f64) -> Result<String, LlmCallError> {
        let mut messages = Vec::new();
        if let Some(system) = &self.config.system_message {
            messages.push(ChatMessage {
                role: "system",
                content: system,
            });
        }
        messages.push(ChatMessage {
            role: "user",
            content: prompt_text,
        });
        let body = ChatRequest {
            model: &self.config.model_name,
            messages,
            temperature,
            max_tokens: self.config.max_reply_tokens,
        };
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        self.requests_sent.fetch_add(1, Ordering::Relaxed);
        let result = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body);
        let mut response = match result {
            Ok(r) => r,
            Err(e) => return Err(LlmCallError::Retryable(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmCallError::Retryable(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(LlmCallError::Retryable(format!("HTTP {status}: {text}")));
        }
        if status != 200 {
            return Err(LlmCallError::Fatal(format!("HTTP {status}: {text}")));
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| LlmCallError::Fatal(format!("bad reply: {e}")))?;
        if let Some(usage) = &parsed.usage {
            self.tokens_reported
                .fetch_add(usage.total_tokens, Ordering::Relaxed);
        }
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmCallError::Fatal("reply carried no choices".into()))
    }

    fn post_with_retries(
        &self,
        prompt_text: &str,
        temperature: f64,
    ) -> Result<String, LlmCallError> {
        let mut attempt = 0;
        loop {
            match self.post_once(prompt_text, temperature) {
                Ok(reply) => return Ok(reply),
                Err(LlmCallError::Retryable(message)) => {
                    if attempt >= self.config.max_retries {
                        return Err(LlmCallError::Fatal(format!(
                            "retries exhausted after {} attempts: {message}",
                            attempt + 1
                        )));
                    }
                    let backoff = Duration::from_millis(100u64.saturating_mul(1 << attempt.min(6)));
                    std::thread::sleep(backoff);
                    attempt += 1;
                }
                Err(fatal) => return Err(fatal),
            }
        }
    }

    /// One scored query: render, check the cache, post, parse, cache.
    pub fn predict_prompt(&self, prompt_text: &str) -> Result<f64, PredictError> {
        let prompt_hash = sha256_hex(prompt_text.as_bytes());
        let key = format!("{}:{}", self.config.model_name, prompt_hash);
        if let Some(value) = self.cache.get(&key) {
            return Ok(value);
        }
        let reply = self
            .post_with_retries(prompt_text, self.config.temperature)
            .map_err(|e| PredictError::new(&self.name, e))?;
        let metric = &self.prompt.config.performance_metric_name;
        let value = match parse_prediction(&reply, metric) {
            Ok(v) => v,
            Err(parse_err) if self.config.resample_on_parse_error => {
                let reply = self
                    .post_with_retries(prompt_text, 0.7)
                    .map_err(|e| PredictError::new(&self.name, e))?;
                parse_prediction(&reply, metric)
                    .map_err(|_| PredictError::new(&self.name, parse_err))?
            }
            Err(parse_err) => return Err(PredictError::new(&self.name, parse_err)),
        };
        self.cache.put(&self.config.model_name, &prompt_hash, value);
        Ok(value)
    }
}

#[derive(Debug)]
enum LlmCallError {
    Retryable(String),
    Fatal(String),
}

impl std::fmt::Display for LlmCallError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LlmCallError::Retryable(m) | LlmCallError::Fatal(m) => write!(f, "{m}"),
        }
    }
}

impl Predictor for LlmPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, arch: &Architecture) -> Result<f64, PredictError> {
        let prompt_text = self
            .prompt
            .render(arch)
            .map_err(|e| PredictError::new(&self.name, e))?;
        self.predict_prompt(&prompt_text)
    }

    /// Scores a batch with up to `max_concurrency` in-flight requests;
    /// results come back in input order.
    fn predict_batch(&self, archs: &[Architecture]) -> Result<Vec<f64>, PredictError> {
        if archs.len() <= 1 || self.config.max_concurrency == 1 {
            return archs.iter().map(|a| self.predict(a)).collect();
        }
        self.predict_each(archs).into_iter().collect()
    }
}
