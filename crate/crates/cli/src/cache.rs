//! Cover memoisation in the directory named by `FRACTAL_EMBED_CACHE`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use fractembed::ifs::{attractor_cover, BoxCover, Ifs};

use crate::error::{CliError, Result};

pub const CACHE_ENV: &str = "FRACTAL_EMBED_CACHE";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheUse {
    Off,
    Hit,
    Miss,
}

impl CacheUse {
    pub fn label(self) -> &'static str {
        match self {
            CacheUse::Off => "off",
            CacheUse::Hit => "hit",
            CacheUse::Miss => "miss",
        }
    }
}

fn entry(dir: &str, ifs: &Ifs, depth: usize) -> Result<PathBuf> {
    let mut h = DefaultHasher::new();
    serde_json::to_string(ifs)?.hash(&mut h);
    Ok(PathBuf::from(dir).join(format!("cover-{:016x}-d{depth}.json", h.finish())))
}

/// The depth-`depth` attractor cover, read from or written to the cache.
/// An unreadable cache entry is recomputed and overwritten.
pub fn cover(ifs: &Ifs, depth: usize) -> Result<(BoxCover, CacheUse)> {
    let Ok(dir) = std::env::var(CACHE_ENV) else {
        return Ok((attractor_cover(ifs, depth)?, CacheUse::Off));
    };
    let path = entry(&dir, ifs, depth)?;
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(c) = serde_json::from_slice::<BoxCover>(&bytes) {
            return Ok((c, CacheUse::Hit));
        }
    }
    let c = attractor_cover(ifs, depth)?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    std::fs::write(&path, serde_json::to_vec(&c)?).map_err(|e| CliError::io(&path, e))?;
    Ok((c, CacheUse::Miss))
}
