//! One frame through the whole chain: LDPC encoding, mapping, shaping,
//! OFDM, the doubly-selective channel, estimation, equalization, shaping
//! decoding, soft demapping and LDPC decoding.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chanest::{
    ls_pilot_estimates, ChannelEstimate, CovariancePair, LmmseInterpolator,
};
use crate::channel::{ChannelConfig, EffectiveChannel};
use crate::constellation::ConstellationSpec;
use crate::demapper::{clamp_llrs, compute_llrs_per_symbol, DemapConfig, DEFAULT_LLR_CLAMP};
use crate::ldpc::{CheckRule, LdpcCode};
use crate::ofdm::{data_positions, map_frame, OfdmModem, OfdmParams, PilotPattern};
use crate::rng::{stream_rng, Stream};
use crate::shaping::{shaping_decode, shaping_encode_labels, ShapingCode};
use crate::{Complex64, Error, Result};

/// How the receiver learns `diag(H_F)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKnowledge {
    /// Exact diagonal from the true paths.
    Genie,
    /// LS at the pilots followed by LMMSE interpolation.
    #[default]
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderSettings {
    pub max_iterations: usize,
    /// Normalization factor of min-sum; `None` selects sum-product.
    pub min_sum_scale: Option<f64>,
    pub llr_clamp: f64,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            min_sum_scale: Some(0.75),
            llr_clamp: DEFAULT_LLR_CLAMP,
        }
    }
}

impl DecoderSettings {
    pub fn rule(&self) -> CheckRule {
        match self.min_sum_scale {
            Some(a) => CheckRule::NormalizedMinSum(a),
            None => CheckRule::SumProduct,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub params: OfdmParams,
    /// Pilot layout. The amplitude is taken from here as is; the harness sets
    /// it to `√P_avg` so pilots and data see the same SNR.
    pub pilots: PilotPattern,
    pub constellation: ConstellationSpec,
    /// `None` sends inner points only.
    pub shaping: Option<ShapingCode>,
    pub ldpc: Arc<LdpcCode>,
    pub channel: ChannelConfig,
    pub knowledge: ChannelKnowledge,
    pub decoder: DecoderSettings,
    pub seed: u64,
}

impl LinkConfig {
    pub fn outer_probability(&self) -> f64 {
        self.shaping.as_ref().map_or(0.0, |c| c.outer_probability())
    }

    /// Mean transmitted data-symbol energy.
    pub fn average_power(&self) -> f64 {
        self.constellation.average_power(self.outer_probability())
    }

    pub fn num_data_res(&self) -> usize {
        self.pilots.mask(&self.params).iter().filter(|p| !**p).count()
    }

    /// Information bits per data symbol.
    pub fn effective_rate(&self) -> f64 {
        effective_rate(
            self.constellation.bits_per_symbol(),
            self.ldpc.rate(),
            self.shaping.as_ref(),
        )
    }

    /// [`effective_rate`](Self::effective_rate) scaled by the share of REs carrying data.
    pub fn net_rate(&self) -> f64 {
        self.effective_rate() * self.num_data_res() as f64 / self.params.num_res() as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.pilots.validate(&self.params)?;
        self.channel.validate(&self.params)?;
        let bits = self.num_data_res() * self.constellation.bits_per_symbol();
        if bits < self.ldpc.n() {
            return Err(Error::Config(format!(
                "frame carries {bits} coded bits, less than one codeword of {}",
                self.ldpc.n()
            )));
        }
        if self.decoder.max_iterations == 0 {
            return Err(Error::Config("decoder needs at least one iteration".into()));
        }
        Ok(())
    }
}

/// `r_ldpc·log2(l)` plus `bits_per_block/z` when shaping is on.
pub fn effective_rate(bits_per_symbol: usize, ldpc_rate: f64, shaping: Option<&ShapingCode>) -> f64 {
    ldpc_rate * bits_per_symbol as f64
        + shaping.map_or(0.0, |c| c.bits_per_block() as f64 / c.len() as f64)
}

/// `N0 = P_avg / 10^(snr/10)`, SNR being symbol energy over noise density.
pub fn snr_to_n0(snr_db: f64, average_power: f64) -> f64 {
    average_power / 10f64.powf(snr_db / 10.0)
}

/// Eb/N0 in dB for a given Es/N0 and information bits per symbol.
pub fn ebn0_db(snr_db: f64, rate: f64) -> f64 {
    snr_db - 10.0 * rate.log10()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub info_bits: u64,
    pub info_errors: u64,
    pub shaping_bits: u64,
    pub shaping_errors: u64,
    pub codewords: u64,
    pub codeword_errors: u64,
    pub frame_error: bool,
    pub decoder_iterations: u64,
    /// Total energy of the transmitted data symbols.
    pub tx_energy: f64,
    pub tx_symbols: u64,
}

impl FrameResult {
    pub fn total_bits(&self) -> u64 {
        self.info_bits + self.shaping_bits
    }

    pub fn total_errors(&self) -> u64 {
        self.info_errors + self.shaping_errors
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_energy / self.tx_symbols as f64
    }
}

/// A link prepared for one noise level. Building it does all per-point work
/// (pilot layout, interpolation filter); [`run_frame`](Self::run_frame) is
/// then independent per frame index.
#[derive(Debug, Clone)]
pub struct Link {
    config: LinkConfig,
    n0: f64,
    modem: OfdmModem,
    pilot_values: Vec<Complex64>,
    pilot_mask: Vec<bool>,
    data_positions: Vec<usize>,
    codewords: usize,
    shaped_blocks: usize,
    interpolator: Option<LmmseInterpolator>,
    shaped_demap: DemapConfig,
    plain_demap: DemapConfig,
}

impl Link {
    /// `covariances` is required for [`ChannelKnowledge::Estimated`].
    pub fn new(config: LinkConfig, n0: f64, covariances: Option<&CovariancePair>) -> Result<Self> {
        config.validate()?;
        if !(n0 >= 0.0) || !n0.is_finite() {
            return Err(Error::Config(format!("noise variance {n0} is invalid")));
        }
        let params = config.params;
        let pilot_mask = config.pilots.mask(&params);
        let pilot_values = config.pilots.values(&params);
        let positions = data_positions(&params, &pilot_mask);
        let nb = config.constellation.bits_per_symbol();
        let codewords = positions.len() * nb / config.ldpc.n();
        let shaped_blocks = config.shaping.as_ref().map_or(0, |c| positions.len() / c.len());
        let interpolator = match config.knowledge {
            ChannelKnowledge::Genie => None,
            ChannelKnowledge::Estimated => {
                let cov = covariances.ok_or_else(|| {
                    Error::Config("estimated channel needs covariance statistics".into())
                })?;
                let pilot_positions: Vec<usize> = (0..params.num_res()).filter(|&i| pilot_mask[i]).collect();
                let pilot_power = config.pilots.amplitude * config.pilots.amplitude;
                Some(LmmseInterpolator::new(cov, &params, &pilot_positions, n0 / pilot_power)?)
            }
        };
        // Demapping needs a positive noise level even for noiseless runs.
        let demap_n0 = n0.max(1e-12);
        let shaped_demap = DemapConfig::with_outer_probability(
            config.constellation.clone(),
            config.outer_probability(),
            demap_n0,
        )?;
        let plain_demap = DemapConfig::with_outer_probability(config.constellation.clone(), 0.0, demap_n0)?;
        Ok(Self {
            modem: OfdmModem::new(params),
            n0,
            pilot_values,
            pilot_mask,
            data_positions: positions,
            codewords,
            shaped_blocks,
            interpolator,
            shaped_demap,
            plain_demap,
            config,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.config
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// LDPC codewords carried per frame.
    pub fn codewords_per_frame(&self) -> usize {
        self.codewords
    }

    pub fn shaped_blocks_per_frame(&self) -> usize {
        self.shaped_blocks
    }

    /// Information bits (LDPC plus shaping) carried per frame.
    pub fn info_bits_per_frame(&self) -> usize {
        self.codewords * self.config.ldpc.k()
            + self.shaped_blocks * self.config.shaping.as_ref().map_or(0, |c| c.bits_per_block())
    }

    pub fn run_frame(&self, frame_index: u64) -> Result<FrameResult> {
        let cfg = &self.config;
        let spec = &cfg.constellation;
        let ldpc = &cfg.ldpc;
        let nb = spec.bits_per_symbol();
        let num_data = self.data_positions.len();
        let seed = cfg.seed;

        // Transmitter.
        let mut bit_rng = stream_rng(seed, frame_index, Stream::Bits);
        let mut info = Vec::with_capacity(self.codewords * ldpc.k());
        let mut coded = Vec::with_capacity(num_data * nb);
        for _ in 0..self.codewords {
            let chunk: Vec<u8> = (0..ldpc.k()).map(|_| bit_rng.random::<bool>() as u8).collect();
            coded.extend(ldpc.encode(&chunk)?);
            info.extend(chunk);
        }
        let mut pad_rng = stream_rng(seed, frame_index, Stream::Padding);
        coded.extend((coded.len()..num_data * nb).map(|_| pad_rng.random::<bool>() as u8));
        let labels: Vec<usize> = coded
            .chunks_exact(nb)
            .map(|bits| spec.bits_to_label(bits))
            .collect::<Result<_>>()?;

        let mut symbols: Vec<Complex64> = labels.iter().map(|&l| spec.inner_points()[l]).collect();
        let mut shaping_tx = Vec::new();
        if let Some(code) = &cfg.shaping {
            for b in 0..self.shaped_blocks {
                let range = b * code.len()..(b + 1) * code.len();
                let bits: Vec<u8> = (0..code.bits_per_block())
                    .map(|_| bit_rng.random::<bool>() as u8)
                    .collect();
                let block = shaping_encode_labels(&labels[range.clone()], &bits, code, spec)?;
                symbols[range].copy_from_slice(&block.symbols);
                shaping_tx.extend(bits);
            }
        }
        let tx_energy: f64 = symbols.iter().map(|s| s.norm_sqr()).sum();

        let grid = map_frame(&symbols, &cfg.pilots, &cfg.params)?;
        let tx = self.modem.modulate(&grid.res)?;

        // Channel.
        let mut ch_rng = stream_rng(seed, frame_index, Stream::Channel);
        let paths = cfg.channel.draw(&mut ch_rng, &cfg.params);
        let channel = EffectiveChannel::build(&paths, &cfg.params, &cfg.channel.pulse, cfg.channel.mode)?;
        let mut noise_rng = stream_rng(seed, frame_index, Stream::Noise);
        let rx = channel.apply(&tx, self.n0, &mut noise_rng)?;
        let received = self.modem.demodulate(&rx)?;

        // Receiver.
        let (estimate, error_variance) = match &self.interpolator {
            None => (
                ChannelEstimate {
                    grid: paths.frequency_diagonal(&cfg.params, &cfg.channel.pulse, cfg.channel.mode),
                },
                None,
            ),
            Some(interp) => {
                let ls = ls_pilot_estimates(&received, &self.pilot_values, &self.pilot_mask)?;
                (interp.interpolate(&ls)?, Some(interp.error_variance()))
            }
        };
        let p_avg = cfg.average_power();
        let mut equalized = Vec::with_capacity(num_data);
        let mut noise_var = Vec::with_capacity(num_data);
        for &pos in &self.data_positions {
            let h = estimate.grid[pos];
            let gain = h.norm_sqr().max(1e-300);
            // MMSE one-tap output divided by its bias |h|²/(|h|²+N0).
            let mmse = h.conj() * received[pos] / (gain + self.n0);
            equalized.push(mmse * (gain + self.n0) / gain);
            let residual = error_variance.map_or(0.0, |e| p_avg * e[pos]);
            noise_var.push(((self.n0 + residual) / gain).max(1e-12));
        }

        let mut shaping_errors = 0u64;
        if let Some(code) = &cfg.shaping {
            for b in 0..self.shaped_blocks {
                let range = b * code.len()..(b + 1) * code.len();
                let decision = shaping_decode(&equalized[range], code, spec)?;
                let sent = &shaping_tx[b * code.bits_per_block()..(b + 1) * code.bits_per_block()];
                shaping_errors += decision
                    .shaping_bits
                    .iter()
                    .zip(sent)
                    .filter(|(a, b)| a != b)
                    .count() as u64;
            }
        }

        let shaped_symbols = self.shaped_blocks * cfg.shaping.as_ref().map_or(0, |c| c.len());
        let mut llrs = Vec::with_capacity(num_data * nb);
        if shaped_symbols > 0 {
            llrs.extend(compute_llrs_per_symbol(
                &equalized[..shaped_symbols],
                &noise_var[..shaped_symbols],
                &self.shaped_demap,
            )?);
        }
        if shaped_symbols < num_data {
            llrs.extend(compute_llrs_per_symbol(
                &equalized[shaped_symbols..],
                &noise_var[shaped_symbols..],
                &self.plain_demap,
            )?);
        }
        clamp_llrs(&mut llrs, cfg.decoder.llr_clamp);

        let mut info_errors = 0u64;
        let mut codeword_errors = 0u64;
        let mut iterations = 0u64;
        let rule = cfg.decoder.rule();
        for c in 0..self.codewords {
            let out = ldpc.decode_with(
                &llrs[c * ldpc.n()..(c + 1) * ldpc.n()],
                cfg.decoder.max_iterations,
                rule,
            );
            iterations += out.iterations as u64;
            let decoded = ldpc.info_bits(&out.codeword);
            let errs = decoded
                .iter()
                .zip(&info[c * ldpc.k()..(c + 1) * ldpc.k()])
                .filter(|(a, b)| a != b)
                .count() as u64;
            info_errors += errs;
            codeword_errors += (errs > 0) as u64;
        }

        Ok(FrameResult {
            info_bits: info.len() as u64,
            info_errors,
            shaping_bits: shaping_tx.len() as u64,
            shaping_errors,
            codewords: self.codewords as u64,
            codeword_errors,
            frame_error: info_errors + shaping_errors > 0,
            decoder_iterations: iterations,
            tx_energy,
            tx_symbols: num_data as u64,
        })
    }
}

/// One-shot convenience around [`Link`].
pub fn run_frame(
    config: &LinkConfig,
    n0: f64,
    covariances: Option<&CovariancePair>,
    frame_index: u64,
) -> Result<FrameResult> {
    Link::new(config.clone(), n0, covariances)?.run_frame(frame_index)
}
