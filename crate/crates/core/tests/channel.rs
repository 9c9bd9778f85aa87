mod common;
mod fixtures;

use common::{channel_entry_circular, channel_entry, OracleReport, RefPath};
use fixtures::{complex_gaussian, frame_params};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringshape::channel::{ChannelConfig, ChannelMode, ChannelProfile, EffectiveChannel, PathSet, Pulse};
use ringshape::ofdm::OfdmParams;
use ringshape::Complex64;

fn random_fractional_paths(rng: &mut ChaCha8Rng, params: &OfdmParams, count: usize) -> PathSet {
    let mut set = PathSet { paths: Vec::new() };
    for _ in 0..count {
        let k = rng.random_range(0.0..6.0);
        let l = rng.random_range(-1.5..1.5);
        let g = complex_gaussian(rng, 1.0 / count as f64);
        set.paths.extend(PathSet::single(g, k, l, params).paths);
    }
    set
}

fn as_ref_paths(set: &PathSet) -> Vec<RefPath> {
    set.paths.iter().map(|p| (p.gain, p.delay_index, p.doppler_index)).collect()
}

#[test]
fn matrix_matches_direct_evaluation() {
    let params = OfdmParams::new(24, 4, 30e3).unwrap();
    let total = params.num_res();
    let pulse = Pulse { span: 10 };
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    for mode in [ChannelMode::Literal, ChannelMode::PerSymbolCircular] {
        let mut report = OracleReport::default();
        for case in 0..5 {
            let set = random_fractional_paths(&mut rng, &params, 3);
            let paths = as_ref_paths(&set);
            let h = EffectiveChannel::build(&set, &params, &pulse, mode).unwrap();
            let dense = h.to_dense();
            let mut dev = 0.0f64;
            for m in 0..total {
                for n in 0..total {
                    let want = match mode {
                        ChannelMode::Literal => channel_entry(m, n, &paths, pulse.span, total),
                        ChannelMode::PerSymbolCircular => channel_entry_circular(m, n, &paths, pulse.span, 24, total),
                    };
                    dev = dev.max((dense[m * total + n] - want).norm());
                }
            }
            report.record(dev, 1e-12, || format!("case {case}: {paths:?}"));
        }
        assert!(report.passed(), "{mode:?}: {report}");
    }
}

#[test]
fn static_channel_is_diagonal_in_frequency() {
    let params = OfdmParams::new(32, 4, 30e3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let set = ChannelConfig::veh_a(0.0).draw(&mut rng, &params);
    let h = EffectiveChannel::build(&set, &params, &Pulse::default(), ChannelMode::PerSymbolCircular).unwrap();
    let hf = h.frequency_matrix();
    let mn = params.num_res();
    let (mut diag, mut off) = (0.0, 0.0);
    for r in 0..mn {
        for c in 0..mn {
            let e = hf[r * mn + c].norm_sqr();
            if r == c {
                diag += e;
            } else {
                off += e;
            }
        }
    }
    assert!(off / diag < 1e-10, "{}", off / diag);
}

#[test]
fn diagonal_shortcut_agrees_with_full_matrix() {
    let params = OfdmParams::new(24, 3, 30e3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pulse = Pulse::default();
    for mode in [ChannelMode::Literal, ChannelMode::PerSymbolCircular] {
        let set = random_fractional_paths(&mut rng, &params, 4);
        let h = EffectiveChannel::build(&set, &params, &pulse, mode).unwrap();
        let hf = h.frequency_matrix();
        let mn = params.num_res();
        let from_paths = set.frequency_diagonal(&params, &pulse, mode);
        let from_matrix = h.frequency_diagonal();
        for i in 0..mn {
            assert!((hf[i * mn + i] - from_matrix[i]).norm() < 1e-12);
            assert!((from_paths[i] - from_matrix[i]).norm() < 1e-12);
        }
    }
}

#[test]
fn veh_a_power_is_normalized() {
    let params = frame_params();
    let cfg = ChannelConfig::veh_a(815.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws = 100_000;
    let mean: f64 = (0..draws).map(|_| cfg.draw(&mut rng, &params).total_power()).sum::<f64>() / draws as f64;
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
}

#[test]
fn doppler_spread_respects_maximum() {
    let params = frame_params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        for p in ChannelConfig::veh_a(815.0).draw(&mut rng, &params).paths {
            assert!(p.doppler_hz.abs() <= 815.0);
            assert!((p.doppler_index - p.doppler_hz * params.frame_duration()).abs() < 1e-12);
        }
    }
}

#[test]
fn pulse_span_must_cover_delays() {
    let params = frame_params();
    let mut cfg = ChannelConfig::veh_a(0.0);
    cfg.pulse = Pulse { span: 2 };
    assert!(cfg.validate(&params).is_err());
    let bad = ChannelProfile {
        delays_ns: vec![0.0, 10.0],
        powers_db: vec![0.0],
    };
    assert!(bad.validate().is_err());
}

#[test]
fn noise_has_requested_variance() {
    let params = frame_params();
    let set = PathSet::single(Complex64::new(1.0, 0.0), 0.0, 0.0, &params);
    let h = EffectiveChannel::build(&set, &params, &Pulse::default(), ChannelMode::PerSymbolCircular).unwrap();
    let x = vec![Complex64::new(0.0, 0.0); params.num_res()];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total = 0.0;
    let reps = 50;
    for _ in 0..reps {
        total += h.apply(&x, 0.3, &mut rng).unwrap().iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    let var = total / (reps * params.num_res()) as f64;
    assert!((var - 0.3).abs() < 0.01, "{var}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn channel_is_linear(seed in any::<u64>(), a in -2.0f64..2.0) {
        let params = OfdmParams::new(16, 3, 30e3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_fractional_paths(&mut rng, &params, 3);
        let h = EffectiveChannel::build(&set, &params, &Pulse { span: 8 }, ChannelMode::Literal).unwrap();
        let x: Vec<Complex64> = (0..48).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let y: Vec<Complex64> = (0..48).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let combo: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| p * a + q).collect();
        let hc = h.multiply(&combo).unwrap();
        let hx = h.multiply(&x).unwrap();
        let hy = h.multiply(&y).unwrap();
        for i in 0..48 {
            prop_assert!((hc[i] - (hx[i] * a + hy[i])).norm() < 1e-10);
        }
    }

    #[test]
    fn integer_static_path_is_a_cyclic_shift(delay in 0usize..8, seed in any::<u64>()) {
        let params = OfdmParams::new(16, 2, 30e3).unwrap();
        let set = PathSet::single(Complex64::new(1.0, 0.0), delay as f64, 0.0, &params);
        let h = EffectiveChannel::build(&set, &params, &Pulse::default(), ChannelMode::PerSymbolCircular).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Complex64> = (0..32).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let y = h.multiply(&x).unwrap();
        for b in 0..2 {
            for j in 0..16 {
                let want = x[b * 16 + (j + 16 - delay) % 16];
                prop_assert!((y[b * 16 + j] - want).norm() < 1e-12);
            }
        }
    }
}
