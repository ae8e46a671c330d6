//! Runtime configuration: built-in defaults, then a TOML file, then
//! command-line overrides. Secrets are read from environment variables
//! named in the file, never from the file itself.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::agents::{
    AgentSettings, ChatClient, PromptError, PromptSet, RemoteChatClient, ScriptedClient, DEFAULT_MAX_REPAIRS,
    DEFAULT_MAX_TOOL_ROUNDS,
};
use crate::retrieval::{Embedder, OfflineEmbedder, RemoteEmbedder, DEFAULT_K, DEFAULT_OFFLINE_DIM};
use crate::review::{Clock, FixedClock, SystemClock};
use crate::sandbox::ResourceLimits;
use crate::workspace::Pipeline;

pub const DEFAULT_API_KEY_ENV: &str = "CODEGEN_API_KEY";
pub const DEFAULT_SME_TOKENS_ENV: &str = "CODEGEN_SME_TOKENS";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("chat client: {0}")]
    Client(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatProvider {
    Remote,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedProvider {
    Offline,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub generator: String,
    pub validator: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let s = AgentSettings::default();
        Self { generator: s.generator_model, validator: s.validator_model }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChatConfig {
    pub provider: ChatProvider,
    pub endpoint: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// Recorded transcript replayed by the scripted provider.
    pub transcript: Option<PathBuf>,
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            provider: ChatProvider::Remote,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 120,
            max_retries: 2,
            transcript: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: EmbedProvider,
    pub dim: usize,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: EmbedProvider::Offline,
            dim: DEFAULT_OFFLINE_DIM,
            endpoint: String::new(),
            model: "text-embedding-3-small".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub max_tool_rounds: usize,
    pub max_repairs: u32,
    pub prompt_dir: Option<PathBuf>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self { max_tool_rounds: DEFAULT_MAX_TOOL_ROUNDS, max_repairs: DEFAULT_MAX_REPAIRS, prompt_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsConfig {
    pub max_steps: u64,
    pub max_output_bytes: usize,
    pub max_collection_len: usize,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        let l = ResourceLimits::default();
        Self { max_steps: l.max_steps, max_output_bytes: l.max_output_bytes, max_collection_len: l.max_collection_len }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Environment variable holding `token=sme_id` pairs separated by commas.
    pub sme_tokens_env: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { bind: "127.0.0.1:8080".into(), sme_tokens_env: DEFAULT_SME_TOKENS_ENV.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    pub retrieval_k: usize,
    /// Pins every timestamp; used for reproducible runs.
    pub fixed_clock: Option<DateTime<Utc>>,
    pub models: ModelConfig,
    pub chat: ChatConfig,
    pub embedding: EmbeddingConfig,
    pub agents: AgentConfig,
    pub limits: LimitsConfig,
    pub service: ServiceConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("codegen-data"),
            retrieval_k: DEFAULT_K,
            fixed_clock: None,
            models: ModelConfig::default(),
            chat: ChatConfig::default(),
            embedding: EmbeddingConfig::default(),
            agents: AgentConfig::default(),
            limits: LimitsConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

/// Values given on the command line; each one wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub generator_model: Option<String>,
    pub validator_model: Option<String>,
    pub chat_endpoint: Option<String>,
    pub embed_endpoint: Option<String>,
    pub retrieval_k: Option<usize>,
    pub max_tool_rounds: Option<usize>,
    pub max_steps: Option<u64>,
    pub max_output_bytes: Option<usize>,
    pub max_collection_len: Option<usize>,
    pub bind: Option<String>,
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Config {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.into(), message: e.to_string() })
    }

    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: origin.clone(), message: e.to_string() })?;
        let mut cfg = Self::from_toml(&text, &origin)?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.data_dir);
        for p in [cfg.chat.transcript.as_mut(), cfg.agents.prompt_dir.as_mut()].into_iter().flatten() {
            rebase(base, p);
        }
        Ok(cfg)
    }

    /// Defaults, then the file when given, then the overrides.
    pub fn resolve(path: Option<&Path>, o: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(o);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let o = o.clone();
        if let Some(v) = o.data_dir {
            self.data_dir = v;
        }
        if let Some(v) = o.generator_model {
            self.models.generator = v;
        }
        if let Some(v) = o.validator_model {
            self.models.validator = v;
        }
        if let Some(v) = o.chat_endpoint {
            self.chat.endpoint = v;
        }
        if let Some(v) = o.embed_endpoint {
            self.embedding.endpoint = v;
        }
        if let Some(v) = o.retrieval_k {
            self.retrieval_k = v;
        }
        if let Some(v) = o.max_tool_rounds {
            self.agents.max_tool_rounds = v;
        }
        if let Some(v) = o.max_steps {
            self.limits.max_steps = v;
        }
        if let Some(v) = o.max_output_bytes {
            self.limits.max_output_bytes = v;
        }
        if let Some(v) = o.max_collection_len {
            self.limits.max_collection_len = v;
        }
        if let Some(v) = o.bind {
            self.service.bind = v;
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.retrieval_k == 0 {
            return invalid("retrieval_k must be at least 1");
        }
        if self.embedding.dim == 0 {
            return invalid("embedding.dim must be at least 1");
        }
        if self.agents.max_tool_rounds == 0 {
            return invalid("agents.max_tool_rounds must be at least 1");
        }
        if self.limits.max_steps == 0 || self.limits.max_output_bytes == 0 || self.limits.max_collection_len == 0 {
            return invalid("resource limits must be positive");
        }
        if self.embedding.provider == EmbedProvider::Remote && self.embedding.endpoint.is_empty() {
            return invalid("embedding.endpoint is required for the remote provider");
        }
        if self.chat.provider == ChatProvider::Scripted && self.chat.transcript.is_none() {
            return invalid("chat.transcript is required for the scripted provider");
        }
        Ok(())
    }

    pub fn limits(&self) -> ResourceLimits {
        ResourceLimits {
            max_steps: self.limits.max_steps,
            max_output_bytes: self.limits.max_output_bytes,
            max_collection_len: self.limits.max_collection_len,
        }
    }

    pub fn agent_settings(&self) -> Result<AgentSettings, ConfigError> {
        let prompts = match &self.agents.prompt_dir {
            Some(dir) => PromptSet::load(dir)?,
            None => PromptSet::default(),
        };
        Ok(AgentSettings {
            generator_model: self.models.generator.clone(),
            validator_model: self.models.validator.clone(),
            max_tool_rounds: self.agents.max_tool_rounds,
            max_repairs: self.agents.max_repairs,
            limits: self.limits(),
            prompts,
        })
    }

    pub fn embedder(&self) -> Arc<dyn Embedder> {
        let e = &self.embedding;
        match e.provider {
            EmbedProvider::Offline => Arc::new(OfflineEmbedder::new(e.dim)),
            EmbedProvider::Remote => Arc::new(RemoteEmbedder {
                endpoint: e.endpoint.clone(),
                model: e.model.clone(),
                api_key: std::env::var(&e.api_key_env).ok(),
                dim: e.dim,
                timeout: Duration::from_secs(e.timeout_secs),
            }),
        }
    }

    pub fn chat_client(&self) -> Result<Arc<dyn ChatClient>, ConfigError> {
        let c = &self.chat;
        Ok(match c.provider {
            ChatProvider::Remote => {
                let mut client = RemoteChatClient::new(c.endpoint.clone(), std::env::var(&c.api_key_env).ok());
                client.timeout = Duration::from_secs(c.timeout_secs);
                client.max_retries = c.max_retries;
                Arc::new(client)
            }
            ChatProvider::Scripted => {
                let path = c.transcript.as_deref().ok_or_else(|| ConfigError::Invalid("chat.transcript is not set".into()))?;
                Arc::new(ScriptedClient::from_file(path).map_err(|e| ConfigError::Client(e.to_string()))?)
            }
        })
    }

    pub fn clock(&self) -> Arc<dyn Clock> {
        match self.fixed_clock {
            Some(t) => Arc::new(FixedClock(t)),
            None => Arc::new(SystemClock),
        }
    }

    pub fn pipeline(&self) -> Result<Pipeline, ConfigError> {
        Ok(Pipeline {
            embedder: self.embedder(),
            client: self.chat_client()?,
            settings: self.agent_settings()?,
            clock: self.clock(),
            k: self.retrieval_k,
        })
    }

    /// SME tokens from the configured environment variable.
    pub fn sme_tokens(&self) -> Result<HashMap<String, String>, ConfigError> {
        match std::env::var(&self.service.sme_tokens_env) {
            Ok(raw) => parse_sme_tokens(&raw),
            Err(_) => Ok(HashMap::new()),
        }
    }
}

/// Parses `token=sme_id` pairs separated by commas.
pub fn parse_sme_tokens(raw: &str) -> Result<HashMap<String, String>, ConfigError> {
    let mut out = HashMap::new();
    for pair in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (token, sme) = pair
            .split_once('=')
            .map(|(t, s)| (t.trim(), s.trim()))
            .filter(|(t, s)| !t.is_empty() && !s.is_empty())
            .ok_or_else(|| ConfigError::Invalid(format!("SME token entry {pair:?} is not token=sme_id")))?;
        out.insert(token.to_string(), sme.to_string());
    }
    Ok(out)
}
