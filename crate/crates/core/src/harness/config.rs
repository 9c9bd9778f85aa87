//! Experiment configuration files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelConfig;
use crate::constellation::ConstellationSpec;
use crate::ldpc::LdpcCode;
use crate::link::{ChannelKnowledge, DecoderSettings, LinkConfig};
use crate::ofdm::{OfdmParams, PilotPattern};
use crate::shaping::ShapingCode;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Pilot layout; the amplitude follows each scheme's average power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotConfig {
    pub symbols: Vec<usize>,
    pub stride: usize,
    #[serde(default)]
    pub offset: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self {
            symbols: vec![2, 11],
            stride: 2,
            offset: 0,
            seed: 0,
        }
    }
}

impl PilotConfig {
    pub fn pattern(&self, amplitude: f64) -> PilotPattern {
        PilotPattern {
            symbols: self.symbols.clone(),
            stride: self.stride,
            offset: self.offset,
            amplitude,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingConfig {
    pub length: usize,
    pub sparsity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub name: String,
    /// Inner QAM order (4 or 16).
    pub order: usize,
    #[serde(default)]
    pub shaping: Option<ShapingConfig>,
    /// Alist file, relative to the config file.
    pub ldpc: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    pub draws: u64,
    #[serde(default)]
    pub seed: u64,
    /// Cache file, relative to the output directory.
    #[serde(default)]
    pub cache: Option<PathBuf>,
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        Self {
            draws: 2000,
            seed: 0,
            cache: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingRule {
    /// A point stops once this many LDPC information-bit errors are seen...
    pub min_bit_errors: u64,
    /// ...or after this many frames.
    pub max_frames: u64,
    /// Frames simulated between stopping checks. Fixed so that the number of
    /// frames run does not depend on the thread count.
    #[serde(default = "default_batch")]
    pub batch_frames: u64,
}

fn default_batch() -> u64 {
    32
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_bit_errors == 0 {
            return Err(Error::Config("min_bit_errors must be at least 1".into()));
        }
        if self.max_frames == 0 || self.batch_frames == 0 {
            return Err(Error::Config("max_frames and batch_frames must be positive".into()));
        }
        Ok(())
    }
}

/// Overrides applied by `--quick`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuickOverride {
    #[serde(default)]
    pub min_bit_errors: Option<u64>,
    #[serde(default)]
    pub max_frames: Option<u64>,
    #[serde(default)]
    pub snr_db: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub frame: OfdmParams,
    #[serde(default)]
    pub pilots: PilotConfig,
    pub channel: ChannelConfig,
    #[serde(default)]
    pub knowledge: ChannelKnowledge,
    #[serde(default)]
    pub covariance: CovarianceConfig,
    #[serde(default)]
    pub decoder: DecoderSettings,
    pub schemes: Vec<SchemeConfig>,
    pub snr_db: Vec<f64>,
    pub stopping: StoppingRule,
    #[serde(default)]
    pub quick: QuickOverride,
    #[serde(default)]
    pub seed: u64,
}

/// A scheme with its code loaded and link configuration assembled.
#[derive(Debug, Clone)]
pub struct ResolvedScheme {
    pub name: String,
    pub link: LinkConfig,
    pub ldpc_path: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.frame.validate()?;
        self.pilots.pattern(1.0).validate(&self.frame)?;
        self.channel.validate(&self.frame)?;
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Config(format!("duplicate scheme name {:?}", s.name)));
            }
            if let Some(sh) = s.shaping {
                ShapingCode::new(sh.length, sh.sparsity)?;
            }
            ConstellationSpec::build_augmented_qam(s.order)?;
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR grid must be nonempty and finite".into()));
        }
        if self.knowledge == ChannelKnowledge::Estimated && self.covariance.draws == 0 {
            return Err(Error::Config("estimated channel needs covariance draws".into()));
        }
        self.stopping.validate()
    }

    /// Applies the quick override in place.
    pub fn apply_quick(&mut self) {
        if let Some(v) = self.quick.min_bit_errors {
            self.stopping.min_bit_errors = v;
        }
        if let Some(v) = self.quick.max_frames {
            self.stopping.max_frames = v;
        }
        if let Some(v) = &self.quick.snr_db {
            self.snr_db = v.clone();
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    /// Loads every scheme's code. Relative code paths are resolved against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<Vec<ResolvedScheme>> {
        self.schemes
            .iter()
            .map(|s| {
                let constellation = ConstellationSpec::build_augmented_qam(s.order)?;
                let shaping = s
                    .shaping
                    .map(|sh| ShapingCode::new(sh.length, sh.sparsity))
                    .transpose()?;
                let ldpc_path = if s.ldpc.is_absolute() {
                    s.ldpc.clone()
                } else {
                    base_dir.join(&s.ldpc)
                };
                let ldpc = Arc::new(LdpcCode::load_alist(&ldpc_path)?);
                let pi = shaping.as_ref().map_or(0.0, |c| c.outer_probability());
                let amplitude = constellation.average_power(pi).sqrt();
                let link = LinkConfig {
                    params: self.frame,
                    pilots: self.pilots.pattern(amplitude),
                    constellation,
                    shaping,
                    ldpc,
                    channel: self.channel.clone(),
                    knowledge: self.knowledge,
                    decoder: self.decoder,
                    seed: self.seed,
                };
                link.validate()?;
                Ok(ResolvedScheme {
                    name: s.name.clone(),
                    link,
                    ldpc_path,
                })
            })
            .collect()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
