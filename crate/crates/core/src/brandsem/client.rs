use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompts::PROMPT_VERSION;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    S1,
    S2,
}

/// Decoding parameters; greedy decoding in both stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
    pub do_sample: bool,
}

impl GenerationParams {
    pub fn for_stage(stage: Stage) -> Self {
        GenerationParams {
            temperature: 0.0,
            top_p: 1.0,
            max_new_tokens: match stage {
                Stage::S1 => 64,
                Stage::S2 => 128,
            },
            do_sample: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRequest {
    pub prompt_version: String,
    pub stage: Stage,
    /// Image path or URL; stage two is text-only.
    pub image_ref: Option<String>,
    pub prompt: String,
    pub params: GenerationParams,
}

impl ModelRequest {
    pub fn new(stage: Stage, image_ref: Option<String>, prompt: String) -> Self {
        ModelRequest {
            prompt_version: PROMPT_VERSION.to_string(),
            stage,
            image_ref,
            prompt,
            params: GenerationParams::for_stage(stage),
        }
    }

    /// Hex SHA-256 of the request's JSON form; the fixture key and the
    /// idempotency key of live calls.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(json))
    }
}

pub trait ModelClient: Send + Sync {
    /// Raw text of the model's reply.
    fn complete(&self, request: &ModelRequest) -> Result<String>;
}

/// Replays recorded replies keyed by request hash.
#[derive(Debug, Clone, Default)]
pub struct OfflineClient {
    fixtures: BTreeMap<String, String>,
}

impl OfflineClient {
    pub fn new(fixtures: BTreeMap<String, String>) -> Self {
        OfflineClient { fixtures }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let fixtures = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: invalid fixture file: {e}", path.display())))?;
        Ok(Self::new(fixtures))
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl ModelClient for OfflineClient {
    fn complete(&self, request: &ModelRequest) -> Result<String> {
        let hash = request.hash();
        self.fixtures.get(&hash).cloned().ok_or(Error::FixtureMiss { hash })
    }
}

/// Wraps a responder and records every exchange, for building fixture files.
pub struct RecordingClient<F> {
    responder: F,
    log: Mutex<BTreeMap<String, String>>,
}

impl<F: Fn(&ModelRequest) -> Result<String> + Send + Sync> RecordingClient<F> {
    pub fn new(responder: F) -> Self {
        RecordingClient {
            responder,
            log: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn into_fixtures(self) -> BTreeMap<String, String> {
        self.log.into_inner().expect("recording lock")
    }
}

impl<F: Fn(&ModelRequest) -> Result<String> + Send + Sync> ModelClient for RecordingClient<F> {
    fn complete(&self, request: &ModelRequest) -> Result<String> {
        let reply = (self.responder)(request)?;
        self.log.lock().expect("recording lock").insert(request.hash(), reply.clone());
        Ok(reply)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    /// Full URL of a chat-completions endpoint.
    pub endpoint: String,
    pub token: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl LiveConfig {
    pub const ENV_ENDPOINT: &'static str = "SEVI_MODEL_ENDPOINT";
    pub const ENV_TOKEN: &'static str = "SEVI_MODEL_TOKEN";
    pub const ENV_MODEL: &'static str = "SEVI_MODEL_NAME";

    /// Reads endpoint, token and model name from the environment.
    pub fn from_env() -> Result<Self> {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let endpoint = get(Self::ENV_ENDPOINT)
            .ok_or_else(|| Error::Config(format!("live brand backend needs {}", Self::ENV_ENDPOINT)))?;
        let model =
            get(Self::ENV_MODEL).ok_or_else(|| Error::Config(format!("live brand backend needs {}", Self::ENV_MODEL)))?;
        Ok(LiveConfig {
            endpoint,
            token: get(Self::ENV_TOKEN),
            model,
            timeout: Duration::from_secs(60),
            max_retries: 2,
        })
    }
}

/// Chat-completion style HTTP backend.
pub struct LiveClient {
    config: LiveConfig,
    agent: ureq::Agent,
}

impl LiveClient {
    pub fn new(config: LiveConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        LiveClient { config, agent }
    }

    fn body(&self, request: &ModelRequest) -> serde_json::Value {
        let mut content = vec![serde_json::json!({"type": "text", "text": request.prompt})];
        if let Some(image) = &request.image_ref {
            content.push(serde_json::json!({"type": "image_url", "image_url": {"url": image}}));
        }
        serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "max_tokens": request.params.max_new_tokens,
        })
    }

    fn attempt(&self, request: &ModelRequest) -> Result<String> {
        let mut call = self
            .agent
            .post(&self.config.endpoint)
            .set("Idempotency-Key", &request.hash());
        if let Some(token) = &self.config.token {
            call = call.set("Authorization", &format!("Bearer {token}"));
        }
        let response = match call.send_json(self.body(request)) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, _)) if code == 429 || code >= 500 => {
                return Err(Error::Transport(format!("endpoint returned status {code}")))
            }
            Err(ureq::Error::Status(code, _)) => {
                return Err(Error::Config(format!("model endpoint rejected the request with status {code}")))
            }
            Err(e) => return Err(Error::Transport(e.to_string())),
        };
        let value: serde_json::Value = response
            .into_json()
            .map_err(|e| Error::Transport(format!("unreadable response body: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::ModelParse {
                message: "response has no choices[0].message.content".into(),
                raw: value.to_string(),
            })
    }
}

impl ModelClient for LiveClient {
    fn complete(&self, request: &ModelRequest) -> Result<String> {
        let mut attempt = 0;
        loop {
            match self.attempt(request) {
                Err(e) if e.is_retriable() && attempt < self.config.max_retries => {
                    attempt += 1;
                    log::warn!("model call failed ({e}); retry {attempt}/{}", self.config.max_retries);
                    std::thread::sleep(Duration::from_millis(200 * u64::from(attempt)));
                }
                other => return other,
            }
        }
    }
}
