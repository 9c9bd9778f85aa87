//! Shared setup for the integration tests (uses the library, unlike `common`).
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use ringshape::channel::ChannelConfig;
use ringshape::constellation::ConstellationSpec;
use ringshape::ldpc::LdpcCode;
use ringshape::link::{ChannelKnowledge, DecoderSettings, LinkConfig};
use ringshape::ofdm::{OfdmParams, PilotPattern};
use ringshape::shaping::ShapingCode;
use ringshape::Complex64;

use crate::common::RefPoint;

pub fn core_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn code_path(name: &str) -> PathBuf {
    core_dir().join("codes").join(name)
}

pub fn preset_path(name: &str) -> PathBuf {
    core_dir().join("presets").join(name)
}

pub fn load_code(name: &str) -> Arc<LdpcCode> {
    Arc::new(LdpcCode::load_alist(code_path(name)).expect("shipped code"))
}

pub fn frame_params() -> OfdmParams {
    OfdmParams::new(72, 14, 30e3).unwrap()
}

pub fn default_pilots(amplitude: f64) -> PilotPattern {
    PilotPattern {
        symbols: vec![2, 11],
        stride: 2,
        offset: 0,
        amplitude,
        seed: 7,
    }
}

/// A frame-sized 4-QAM link, shaped with `(z, s)` when given.
pub fn link_config(
    order: usize,
    shaping: Option<(usize, usize)>,
    code: &str,
    nu_max_hz: f64,
    knowledge: ChannelKnowledge,
    seed: u64,
) -> LinkConfig {
    let constellation = ConstellationSpec::build_augmented_qam(order).unwrap();
    let shaping = shaping.map(|(z, s)| ShapingCode::new(z, s).unwrap());
    let pi = shaping.as_ref().map_or(0.0, |c| c.outer_probability());
    let amplitude = constellation.average_power(pi).sqrt();
    LinkConfig {
        params: frame_params(),
        pilots: default_pilots(amplitude),
        constellation,
        shaping,
        ldpc: load_code(code),
        channel: ChannelConfig::veh_a(nu_max_hz),
        knowledge,
        decoder: DecoderSettings::default(),
        seed,
    }
}

/// The library's constellation as an oracle table.
pub fn table_from_spec(spec: &ConstellationSpec) -> Vec<RefPoint> {
    (0..spec.num_points())
        .map(|i| RefPoint {
            point: spec.point(i),
            label: spec.point_label(i),
            outer: spec.is_outer_index(i),
        })
        .collect()
}

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let re: f64 = rng.sample(rand_distr::StandardNormal);
    let im: f64 = rng.sample(rand_distr::StandardNormal);
    Complex64::new(re, im) * (variance / 2.0).sqrt()
}

pub fn temp_dir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Pooled NMSE of LS + LMMSE estimation of `diag(H_F)` over `frames`
/// channel draws, with unit-amplitude pilots at the given pilot SNR and
/// random 4-QAM data elsewhere.
pub fn estimation_nmse(
    channel: &ChannelConfig,
    cov: &ringshape::chanest::CovariancePair,
    pilot_snr_db: f64,
    frames: u64,
    seed: u64,
) -> f64 {
    use rand::SeedableRng;
    use ringshape::chanest::{ls_pilot_estimates, LmmseInterpolator};
    use ringshape::channel::EffectiveChannel;
    use ringshape::ofdm::{data_positions, map_frame, OfdmModem};

    let params = frame_params();
    let pilots = default_pilots(1.0);
    let n0 = 10f64.powf(-pilot_snr_db / 10.0);
    let mask = pilots.mask(&params);
    let positions: Vec<usize> = (0..params.num_res()).filter(|&i| mask[i]).collect();
    let interp = LmmseInterpolator::new(cov, &params, &positions, n0).unwrap();
    let modem = OfdmModem::new(params);
    let n_data = data_positions(&params, &mask).len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut err, mut power) = (0.0, 0.0);
    for _ in 0..frames {
        let data: Vec<Complex64> = (0..n_data)
            .map(|_| Complex64::new(if rng.random() { 1.0 } else { -1.0 }, if rng.random() { 1.0 } else { -1.0 }))
            .collect();
        let frame = map_frame(&data, &pilots, &params).unwrap();
        let paths = channel.draw(&mut rng, &params);
        let h = EffectiveChannel::build(&paths, &params, &channel.pulse, channel.mode).unwrap();
        let rx = h.apply(&modem.modulate(&frame.res).unwrap(), n0, &mut rng).unwrap();
        let grid = modem.demodulate(&rx).unwrap();
        let ls = ls_pilot_estimates(&grid, &pilots.values(&params), &mask).unwrap();
        let est = interp.interpolate(&ls).unwrap();
        let truth = paths.frequency_diagonal(&params, &channel.pulse, channel.mode);
        err += est.grid.iter().zip(&truth).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        power += truth.iter().map(|b| b.norm_sqr()).sum::<f64>();
    }
    err / power
}
