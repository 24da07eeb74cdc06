//! Benchmark settings: command-line flags over a TOML file over built-in defaults.
//!
//! ```toml
//! reps = 10
//! warmup = 2
//! seed = 42
//!
//! [tiles]
//! mc = 64
//! nc = 512
//! kc = 512
//! mr = 16
//! nr = 8
//!
//! [chain]
//! depth = 3
//!
//! [attention]
//! tokens = "16..512..16"
//! embed = 2048
//! heads = 32
//! kv_heads = 8
//! head_dim = 64
//! hidden = 8192
//! causal = true
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use layout_gemm::TileParams;
use serde::Deserialize;

pub const DEFAULT_REPS: usize = 10;
pub const DEFAULT_WARMUP: usize = 2;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DEPTH: usize = 3;
pub const DEFAULT_TOKENS: &str = "16..512..16";
pub const DEFAULT_EMBED: usize = 2048;
pub const DEFAULT_HEADS: usize = 32;
pub const DEFAULT_KV_HEADS: usize = 8;
pub const DEFAULT_HIDDEN: usize = 8192;

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub reps: Option<usize>,
    pub warmup: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub tiles: TileOverrides,
    #[serde(default)]
    pub chain: ChainFile,
    #[serde(default)]
    pub attention: AttentionFile,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TileOverrides {
    pub mc: Option<usize>,
    pub nc: Option<usize>,
    pub kc: Option<usize>,
    pub mr: Option<usize>,
    pub nr: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AttentionFile {
    pub tokens: Option<String>,
    pub embed: Option<usize>,
    pub heads: Option<usize>,
    pub kv_heads: Option<usize>,
    pub head_dim: Option<usize>,
    pub hidden: Option<usize>,
    pub causal: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}

impl TileOverrides {
    /// Fields set in `self` win over `lower`.
    pub fn or(self, lower: TileOverrides) -> TileOverrides {
        TileOverrides {
            mc: self.mc.or(lower.mc),
            nc: self.nc.or(lower.nc),
            kc: self.kc.or(lower.kc),
            mr: self.mr.or(lower.mr),
            nr: self.nr.or(lower.nr),
        }
    }

    pub fn resolve(self, base: TileParams) -> Result<TileParams> {
        let p = TileParams {
            mc: self.mc.unwrap_or(base.mc),
            nc: self.nc.unwrap_or(base.nc),
            kc: self.kc.unwrap_or(base.kc),
            mr: self.mr.unwrap_or(base.mr),
            nr: self.nr.unwrap_or(base.nr),
        };
        p.validate().context("tile parameters")?;
        Ok(p)
    }
}

/// Settings shared by every bench command, fully resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
    pub params: TileParams,
}

/// Values given on the command line; `None` means not given.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub reps: Option<usize>,
    pub warmup: Option<usize>,
    pub seed: Option<u64>,
    pub tiles: TileOverrides,
}

impl RunSettings {
    pub fn resolve(cli: &RunOverrides, file: &FileConfig) -> Result<Self> {
        let reps = cli.reps.or(file.reps).unwrap_or(DEFAULT_REPS);
        if reps == 0 {
            bail!("reps must be at least 1");
        }
        Ok(RunSettings {
            reps,
            warmup: cli.warmup.or(file.warmup).unwrap_or(DEFAULT_WARMUP),
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            params: cli.tiles.or(file.tiles).resolve(TileParams::DESK)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply_without_file_or_flags() {
        let s = RunSettings::resolve(&RunOverrides::default(), &FileConfig::default()).unwrap();
        assert_eq!(s.reps, 10);
        assert_eq!(s.warmup, 2);
        assert_eq!(s.params, TileParams::DESK);
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let file = FileConfig::parse("reps = 4\nwarmup = 1\n[tiles]\nkc = 64\nmc = 32\n").unwrap();
        let cli = RunOverrides { reps: Some(7), tiles: TileOverrides { kc: Some(96), ..Default::default() }, ..Default::default() };
        let s = RunSettings::resolve(&cli, &file).unwrap();
        assert_eq!((s.reps, s.warmup), (7, 1));
        assert_eq!((s.params.mc, s.params.kc, s.params.nc), (32, 96, TileParams::DESK.nc));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_tiles() {
        assert!(FileConfig::parse("repz = 3").is_err());
        let file = FileConfig::parse("[tiles]\nmc = 30\nmr = 16\n").unwrap();
        assert!(RunSettings::resolve(&RunOverrides::default(), &file).is_err());
        let zero = RunOverrides { reps: Some(0), ..Default::default() };
        assert!(RunSettings::resolve(&zero, &FileConfig::default()).is_err());
    }

    #[test]
    fn attention_section_parses() {
        let f = FileConfig::parse("[attention]\ntokens = \"4..8..2\"\ncausal = false\nembed = 64\n").unwrap();
        assert_eq!(f.attention.tokens.as_deref(), Some("4..8..2"));
        assert_eq!(f.attention.causal, Some(false));
        assert_eq!(f.attention.embed, Some(64));
    }
}
