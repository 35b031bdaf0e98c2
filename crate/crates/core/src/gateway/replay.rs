use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatRequest, GatewayError, TokenUsage};

/// One stored exchange, `<key>.json` inside the store directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub key: String,
    pub tag: String,
    pub prompt_sha256: String,
    pub model: String,
    pub text: String,
    pub usage: TokenUsage,
}

pub fn prompt_hash(user_text: &str) -> String {
    hex::encode(Sha256::digest(user_text.as_bytes()))
}

/// Replay key for a request: a hash over the tag and the prompt hash, so any
/// template edit changes the key.
pub fn replay_key(tag: &str, user_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update([0u8]);
    h.update(prompt_hash(user_text).as_bytes());
    hex::encode(&h.finalize()[..16])
}

#[derive(Debug, Clone)]
pub struct ReplayStore {
    dir: PathBuf,
}

impl ReplayStore {
    /// Opens an existing store directory.
    pub fn open(dir: &Path) -> Result<Self, GatewayError> {
        if !dir.is_dir() {
            return Err(GatewayError::StoreMissing(dir.to_path_buf()));
        }
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn create(dir: &Path) -> Result<Self, GatewayError> {
        fs::create_dir_all(dir).map_err(|e| GatewayError::Store(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, req: &ChatRequest) -> Result<Option<ReplayEntry>, GatewayError> {
        let key = replay_key(&req.tag, &req.user_text);
        let path = self.path_for(&key);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)
            .map_err(|e| GatewayError::Store(format!("{}: {e}", path.display())))?;
        let entry: ReplayEntry = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Store(format!("{}: {e}", path.display())))?;
        Ok(Some(entry))
    }

    pub fn put(
        &self,
        req: &ChatRequest,
        model: &str,
        text: &str,
        usage: TokenUsage,
    ) -> Result<ReplayEntry, GatewayError> {
        let entry = ReplayEntry {
            key: replay_key(&req.tag, &req.user_text),
            tag: req.tag.clone(),
            prompt_sha256: prompt_hash(&req.user_text),
            model: model.to_string(),
            text: text.to_string(),
            usage,
        };
        let path = self.path_for(&entry.key);
        let mut body = serde_json::to_string_pretty(&entry).expect("entry serializes");
        body.push('\n');
        fs::write(&path, body).map_err(|e| GatewayError::Store(format!("{}: {e}", path.display())))?;
        Ok(entry)
    }
}
