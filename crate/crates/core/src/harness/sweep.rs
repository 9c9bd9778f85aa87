//! Monte-Carlo sweeps over SNR with early stopping, incremental CSV output
//! and resumption.
//!
//! Frame `f` of every point and scheme uses the same random streams, so
//! curves share channel and noise realizations. Frames run in fixed-size
//! batches; results of a batch are folded in frame order before the stopping
//! rule is checked, which makes the output independent of the thread count.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{hex_digest, ExperimentConfig, ResolvedScheme, StoppingRule};
use crate::chanest::{compute_covariances, profile_hash, CovariancePair};
use crate::link::{ebn0_db, snr_to_n0, ChannelKnowledge, FrameResult, Link, LinkConfig};
use crate::{Error, Result};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "RINGSHAPE_THREADS";

pub const RESULTS_FILE: &str = "results.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// Running totals for one SNR point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointStats {
    pub frames: u64,
    pub info_bits: u64,
    pub info_errors: u64,
    pub shaping_bits: u64,
    pub shaping_errors: u64,
    pub frame_errors: u64,
    pub codewords: u64,
    pub codeword_errors: u64,
    pub decoder_iterations: u64,
    pub tx_energy: f64,
    pub tx_symbols: u64,
    /// Sum and sum of squares of the per-frame information BER.
    frame_ber_sum: f64,
    frame_ber_sq_sum: f64,
}

impl PointStats {
    pub fn add(&mut self, r: &FrameResult) {
        self.frames += 1;
        self.info_bits += r.info_bits;
        self.info_errors += r.info_errors;
        self.shaping_bits += r.shaping_bits;
        self.shaping_errors += r.shaping_errors;
        self.frame_errors += r.frame_error as u64;
        self.codewords += r.codewords;
        self.codeword_errors += r.codeword_errors;
        self.decoder_iterations += r.decoder_iterations;
        self.tx_energy += r.tx_energy;
        self.tx_symbols += r.tx_symbols;
        let ber = ratio(r.info_errors, r.info_bits);
        self.frame_ber_sum += ber;
        self.frame_ber_sq_sum += ber * ber;
    }

    pub fn ber(&self) -> f64 {
        ratio(self.info_errors, self.info_bits)
    }

    /// 95% half-width of the information BER, from the spread of per-frame
    /// error fractions (errors cluster in frames, so bits are not independent).
    pub fn ber_half_width(&self) -> f64 {
        if self.frames < 2 {
            return 1.0;
        }
        let n = self.frames as f64;
        let mean = self.frame_ber_sum / n;
        let var = ((self.frame_ber_sq_sum - n * mean * mean) / (n - 1.0)).max(0.0);
        1.96 * (var / n).sqrt()
    }

    pub fn shaping_ber(&self) -> f64 {
        ratio(self.shaping_errors, self.shaping_bits)
    }

    pub fn combined_ber(&self) -> f64 {
        ratio(self.info_errors + self.shaping_errors, self.info_bits + self.shaping_bits)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn tx_power(&self) -> f64 {
        if self.tx_symbols == 0 {
            0.0
        } else {
            self.tx_energy / self.tx_symbols as f64
        }
    }

    pub fn mean_iterations(&self) -> f64 {
        ratio(self.decoder_iterations, self.codewords)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub scheme: String,
    pub snr_db: f64,
    pub ebn0_db: f64,
    /// SNR referred to the inner-ring power instead of the average power.
    pub snr_inner_db: f64,
    pub n0: f64,
    pub frames: u64,
    pub info_bits: u64,
    pub info_errors: u64,
    pub ber: f64,
    pub ber_ci95: f64,
    pub shaping_bits: u64,
    pub shaping_errors: u64,
    pub shaping_ber: f64,
    pub combined_ber: f64,
    pub frame_errors: u64,
    pub fer: f64,
    pub mean_iterations: f64,
    pub tx_power: f64,
    /// `true` if the point stopped on the error target, `false` if it hit
    /// the frame limit.
    pub reached_errors: bool,
}

const HEADER: [&str; 19] = [
    "scheme",
    "snr_db",
    "ebn0_db",
    "snr_inner_db",
    "n0",
    "frames",
    "info_bits",
    "info_errors",
    "ber",
    "ber_ci95",
    "shaping_bits",
    "shaping_errors",
    "shaping_ber",
    "combined_ber",
    "frame_errors",
    "fer",
    "mean_iterations",
    "tx_power",
    "reached_errors",
];

fn fmt_snr(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_real(v: f64) -> String {
    format!("{v:.6e}")
}

impl PointResult {
    fn from_stats(scheme: &str, link: &LinkConfig, snr_db: f64, n0: f64, s: &PointStats, rule: &StoppingRule) -> Self {
        let inner_offset = 10.0 * (link.constellation.inner_power() / link.average_power()).log10();
        Self {
            scheme: scheme.to_string(),
            snr_db,
            ebn0_db: ebn0_db(snr_db, link.effective_rate()),
            snr_inner_db: snr_db + inner_offset,
            n0,
            frames: s.frames,
            info_bits: s.info_bits,
            info_errors: s.info_errors,
            ber: s.ber(),
            ber_ci95: s.ber_half_width(),
            shaping_bits: s.shaping_bits,
            shaping_errors: s.shaping_errors,
            shaping_ber: s.shaping_ber(),
            combined_ber: s.combined_ber(),
            frame_errors: s.frame_errors,
            fer: s.fer(),
            mean_iterations: s.mean_iterations(),
            tx_power: s.tx_power(),
            reached_errors: s.info_errors >= rule.min_bit_errors,
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.scheme.clone(),
            fmt_snr(self.snr_db),
            fmt_snr(self.ebn0_db),
            fmt_snr(self.snr_inner_db),
            fmt_real(self.n0),
            self.frames.to_string(),
            self.info_bits.to_string(),
            self.info_errors.to_string(),
            fmt_real(self.ber),
            fmt_real(self.ber_ci95),
            self.shaping_bits.to_string(),
            self.shaping_errors.to_string(),
            fmt_real(self.shaping_ber),
            fmt_real(self.combined_ber),
            self.frame_errors.to_string(),
            fmt_real(self.fer),
            format!("{:.3}", self.mean_iterations),
            fmt_real(self.tx_power),
            self.reached_errors.to_string(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> Result<Self> {
        let bad = |what: &str| Error::Config(format!("unreadable {what} in results row {rec:?}"));
        let f = |i: usize| rec.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad(HEADER[i]));
        let u = |i: usize| rec.get(i).and_then(|v| v.parse::<u64>().ok()).ok_or_else(|| bad(HEADER[i]));
        if rec.len() != HEADER.len() {
            return Err(bad("row length"));
        }
        Ok(Self {
            scheme: rec[0].to_string(),
            snr_db: f(1)?,
            ebn0_db: f(2)?,
            snr_inner_db: f(3)?,
            n0: f(4)?,
            frames: u(5)?,
            info_bits: u(6)?,
            info_errors: u(7)?,
            ber: f(8)?,
            ber_ci95: f(9)?,
            shaping_bits: u(10)?,
            shaping_errors: u(11)?,
            shaping_ber: f(12)?,
            combined_ber: f(13)?,
            frame_errors: u(14)?,
            fer: f(15)?,
            mean_iterations: f(16)?,
            tx_power: f(17)?,
            reached_errors: rec[18].parse().map_err(|_| bad(HEADER[18]))?,
        })
    }
}

/// Reads a results table written by [`run_experiment`].
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<PointResult>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Config(format!("{} is not a results table", path.display())));
    }
    reader.records().map(|r| PointResult::from_record(&r?)).collect()
}

/// One scheme swept over SNR.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub scheme: String,
    pub link: LinkConfig,
    pub snr_db: Vec<f64>,
    pub stopping: StoppingRule,
    pub covariances: Option<Arc<CovariancePair>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<PointResult>,
}

/// Runs a single SNR point to completion.
pub fn run_point(
    scheme: &str,
    link: &LinkConfig,
    snr_db: f64,
    rule: &StoppingRule,
    covariances: Option<&CovariancePair>,
) -> Result<PointResult> {
    rule.validate()?;
    let n0 = snr_to_n0(snr_db, link.average_power());
    let prepared = Link::new(link.clone(), n0, covariances)?;
    let mut stats = PointStats::default();
    while stats.info_errors < rule.min_bit_errors && stats.frames < rule.max_frames {
        let start = stats.frames;
        let end = (start + rule.batch_frames).min(rule.max_frames);
        let batch: Vec<Result<FrameResult>> =
            (start..end).into_par_iter().map(|f| prepared.run_frame(f)).collect();
        for r in batch {
            stats.add(&r?);
        }
    }
    log::info!(
        "{scheme} snr {snr_db:.2} dB: {} frames, ber {:.3e}, fer {:.3e}",
        stats.frames,
        stats.ber(),
        stats.fer()
    );
    Ok(PointResult::from_stats(scheme, link, snr_db, n0, &stats, rule))
}

/// Sweeps one scheme in memory, without any file output.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.snr_db.is_empty() {
        return Err(Error::Config("SNR grid is empty".into()));
    }
    let points = spec
        .snr_db
        .iter()
        .map(|&snr| run_point(&spec.scheme, &spec.link, snr, &spec.stopping, spec.covariances.as_deref()))
        .collect::<Result<_>>()?;
    Ok(SweepResult { points })
}

/// Covariances for an experiment: read from the cache when it matches,
/// otherwise computed (and cached if a cache path is configured).
pub fn experiment_covariances(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Option<CovariancePair>> {
    if cfg.knowledge == ChannelKnowledge::Genie {
        return Ok(None);
    }
    let wanted = profile_hash(&cfg.channel, &cfg.frame);
    let cache = cfg.covariance.cache.as_ref().map(|c| out_dir.join(c));
    if let Some(path) = &cache {
        if path.exists() {
            let cov = CovariancePair::load(path)?;
            if cov.profile_hash == wanted && cov.draws == cfg.covariance.draws {
                log::info!("covariances from {}", path.display());
                return Ok(Some(cov));
            }
            log::warn!("{} was computed for other statistics; recomputing", path.display());
        }
    }
    let cov = compute_covariances(&cfg.channel, &cfg.frame, cfg.covariance.draws, cfg.covariance.seed)?;
    if let Some(path) = &cache {
        cov.save(path)?;
    }
    Ok(Some(cov))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses [`THREADS_ENV`] or the machine default.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CodeRecord {
    pub scheme: String,
    pub path: String,
    pub sha256: String,
}

/// JSON sidecar describing how a results table was produced.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Metadata {
    pub name: String,
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub crate_version: String,
    pub codes: Vec<CodeRecord>,
    pub covariance_profile_hash: Option<String>,
    pub config: ExperimentConfig,
}

fn thread_count(options: &RunOptions) -> Result<Option<usize>> {
    if let Some(t) = options.threads {
        return Ok(Some(t.max(1)));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|t| Some(t.max(1)))
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Length in bytes of the longest prefix of `path` made of complete rows
/// that match the expected (scheme, SNR) order, and those rows.
fn resumable_prefix(path: &Path, expected: &[(String, String)]) -> Result<(u64, Vec<PointResult>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut keep = 0u64;
    let mut rows = Vec::new();
    let header = HEADER.join(",");
    let mut first = true;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 || !line.ends_with('\n') {
            break;
        }
        if first {
            if line.trim_end() != header {
                return Err(Error::Config(format!("{} has an unexpected header", path.display())));
            }
            first = false;
            keep += n as u64;
            continue;
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(line.as_bytes());
        let Some(Ok(rec)) = rdr.records().next() else { break };
        let Ok(point) = PointResult::from_record(&rec) else { break };
        match expected.get(rows.len()) {
            Some((scheme, snr)) if *scheme == point.scheme && *snr == rec[1] => {}
            _ => break,
        }
        rows.push(point);
        keep += n as u64;
    }
    Ok((keep, rows))
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub results_path: PathBuf,
    pub metadata_path: PathBuf,
    pub points: Vec<PointResult>,
    /// Rows taken over from an earlier, interrupted run.
    pub resumed_points: usize,
}

/// Runs every scheme over the SNR grid, appending each finished point to
/// `out_dir/results.csv`. An existing table from the same configuration is
/// resumed after its last complete row.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    config_dir: &Path,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let schemes = cfg.resolve(config_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results_path = out_dir.join(RESULTS_FILE);
    let metadata_path = out_dir.join(METADATA_FILE);

    let metadata = build_metadata(cfg, &schemes)?;
    if results_path.exists() && metadata_path.exists() {
        let text = std::fs::read_to_string(&metadata_path).map_err(|e| Error::io(&metadata_path, e))?;
        let old: Metadata = serde_json::from_str(&text)?;
        if old.config_hash != metadata.config_hash {
            return Err(Error::Config(format!(
                "{} holds results of a different configuration",
                out_dir.display()
            )));
        }
    }
    let mut meta_json = serde_json::to_string_pretty(&metadata)?;
    meta_json.push('\n');
    std::fs::write(&metadata_path, meta_json).map_err(|e| Error::io(&metadata_path, e))?;

    let expected: Vec<(String, String)> = schemes
        .iter()
        .flat_map(|s| cfg.snr_db.iter().map(move |&snr| (s.name.clone(), fmt_snr(snr))))
        .collect();
    let (keep, mut points) = if results_path.exists() {
        resumable_prefix(&results_path, &expected)?
    } else {
        (0, Vec::new())
    };
    let resumed_points = points.len();
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(false)
        .open(&results_path)
        .map_err(|e| Error::io(&results_path, e))?;
    file.set_len(keep).map_err(|e| Error::io(&results_path, e))?;
    let file = OpenOptions::new()
        .append(true)
        .open(&results_path)
        .map_err(|e| Error::io(&results_path, e))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if keep == 0 {
        writer.write_record(HEADER)?;
        writer.flush().map_err(|e| Error::io(&results_path, e))?;
    }
    if resumed_points > 0 {
        log::info!("resuming after {resumed_points} finished points");
    }

    let covariances = if resumed_points < expected.len() {
        experiment_covariances(cfg, out_dir)?
    } else {
        None
    };
    let pool = match thread_count(options)? {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        ),
        None => None,
    };

    let mut idx = 0;
    for scheme in &schemes {
        for &snr in &cfg.snr_db {
            if idx < resumed_points {
                idx += 1;
                continue;
            }
            let run = || run_point(&scheme.name, &scheme.link, snr, &cfg.stopping, covariances.as_ref());
            let point = match &pool {
                Some(p) => p.install(run)?,
                None => run()?,
            };
            writer.write_record(point.record())?;
            writer.flush().map_err(|e| Error::io(&results_path, e))?;
            points.push(point);
            idx += 1;
        }
    }
    Ok(ExperimentOutput {
        results_path,
        metadata_path,
        points,
        resumed_points,
    })
}

fn build_metadata(cfg: &ExperimentConfig, schemes: &[ResolvedScheme]) -> Result<Metadata> {
    let codes = schemes
        .iter()
        .zip(&cfg.schemes)
        .map(|(s, c)| {
            let bytes = std::fs::read(&s.ldpc_path).map_err(|e| Error::io(&s.ldpc_path, e))?;
            Ok(CodeRecord {
                scheme: s.name.clone(),
                path: c.ldpc.display().to_string(),
                sha256: hex_digest(&bytes),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Metadata {
        name: cfg.name.clone(),
        schema_version: cfg.schema_version,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        codes,
        covariance_profile_hash: (cfg.knowledge == ChannelKnowledge::Estimated)
            .then(|| format!("{:016x}", profile_hash(&cfg.channel, &cfg.frame))),
        config: cfg.clone(),
    })
}
