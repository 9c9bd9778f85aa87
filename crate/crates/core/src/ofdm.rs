//! OFDM frame grid, pilots and (de)modulation.
//!
//! Grids are `M × N` (subcarrier × symbol) and stored column-major, so RE
//! `(m, n)` lives at `m + n·M`, the same order as `vec(X)`.

use std::sync::Arc;

use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, Stream};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmParams {
    /// Subcarriers `M`.
    pub subcarriers: usize,
    /// OFDM symbols per frame `N`.
    pub symbols: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing_hz: f64,
}

impl OfdmParams {
    pub fn new(subcarriers: usize, symbols: usize, subcarrier_spacing_hz: f64) -> Result<Self> {
        let p = Self {
            subcarriers,
            symbols,
            subcarrier_spacing_hz,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subcarriers == 0 || self.symbols == 0 {
            return Err(Error::Config("frame needs at least one subcarrier and symbol".into()));
        }
        if !(self.subcarrier_spacing_hz > 0.0) {
            return Err(Error::Config("subcarrier spacing must be positive".into()));
        }
        Ok(())
    }

    pub fn num_res(&self) -> usize {
        self.subcarriers * self.symbols
    }

    /// Bandwidth `B = M·Δf`.
    pub fn bandwidth(&self) -> f64 {
        self.subcarriers as f64 * self.subcarrier_spacing_hz
    }

    /// Frame duration `T = N/Δf`.
    pub fn frame_duration(&self) -> f64 {
        self.symbols as f64 / self.subcarrier_spacing_hz
    }

    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz
    }

    /// Sampling interval `T₀ = 1/B`.
    pub fn sample_interval(&self) -> f64 {
        1.0 / self.bandwidth()
    }

    pub fn index(&self, subcarrier: usize, symbol: usize) -> usize {
        subcarrier + symbol * self.subcarriers
    }
}

/// Comb pilots on a set of OFDM symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotPattern {
    /// OFDM symbols that carry pilots.
    pub symbols: Vec<usize>,
    /// Every `stride`-th subcarrier, starting at `offset`, is a pilot.
    pub stride: usize,
    pub offset: usize,
    /// Pilot magnitude.
    pub amplitude: f64,
    /// Seed of the pilot QPSK sequence.
    pub seed: u64,
}

impl PilotPattern {
    pub fn validate(&self, params: &OfdmParams) -> Result<()> {
        if self.symbols.is_empty() {
            return Err(Error::Config("pilot pattern needs at least one symbol".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("pilot stride must be at least 1".into()));
        }
        if let Some(&s) = self.symbols.iter().find(|&&s| s >= params.symbols) {
            return Err(Error::Config(format!("pilot symbol {s} outside frame")));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::Config("pilot amplitude must be positive".into()));
        }
        Ok(())
    }

    pub fn mask(&self, params: &OfdmParams) -> Vec<bool> {
        let mut mask = vec![false; params.num_res()];
        for &n in &self.symbols {
            for m in (self.offset..params.subcarriers).step_by(self.stride) {
                mask[params.index(m, n)] = true;
            }
        }
        mask
    }

    /// Known pilot values on the full grid (zero off the pilot REs).
    pub fn values(&self, params: &OfdmParams) -> Vec<Complex64> {
        let mut rng = stream_rng(self.seed, 0, Stream::Pilots);
        let scale = self.amplitude / std::f64::consts::SQRT_2;
        self.mask(params)
            .into_iter()
            .map(|pilot| {
                if pilot {
                    let re = if rng.random::<bool>() { scale } else { -scale };
                    let im = if rng.random::<bool>() { scale } else { -scale };
                    Complex64::new(re, im)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    /// Resource elements, column-major.
    pub res: Vec<Complex64>,
    pub pilot_mask: Vec<bool>,
}

/// Data RE positions in fill order: subcarrier-major (row-major over the
/// `M × N` grid), skipping pilots.
pub fn data_positions(params: &OfdmParams, mask: &[bool]) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.iter().filter(|p| !**p).count());
    for m in 0..params.subcarriers {
        for n in 0..params.symbols {
            let idx = params.index(m, n);
            if !mask[idx] {
                out.push(idx);
            }
        }
    }
    out
}

/// Places data points on the non-pilot REs in [`data_positions`] order and
/// the pilot sequence on the pilot REs.
pub fn map_frame(data: &[Complex64], pilots: &PilotPattern, params: &OfdmParams) -> Result<FrameGrid> {
    pilots.validate(params)?;
    let mut res = pilots.values(params);
    let mask = pilots.mask(params);
    let positions = data_positions(params, &mask);
    if positions.len() != data.len() {
        return Err(Error::LengthMismatch {
            expected: positions.len(),
            actual: data.len(),
        });
    }
    for (&pos, &x) in positions.iter().zip(data) {
        res[pos] = x;
    }
    Ok(FrameGrid {
        res,
        pilot_mask: mask,
    })
}

pub fn extract_data(grid: &[Complex64], positions: &[usize]) -> Vec<Complex64> {
    positions.iter().map(|&p| grid[p]).collect()
}

/// Unitary per-symbol DFT modem.
#[derive(Clone)]
pub struct OfdmModem {
    params: OfdmParams,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem").field("params", &self.params).finish()
    }
}

impl OfdmModem {
    pub fn new(params: OfdmParams) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(params.subcarriers),
            inverse: planner.plan_fft_inverse(params.subcarriers),
            scale: 1.0 / (params.subcarriers as f64).sqrt(),
            params,
        }
    }

    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    /// `x = vec(F_Mᴴ X)`.
    pub fn modulate(&self, grid: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform(grid, &self.inverse)
    }

    /// `Y = F_M · reshape(y)`, the inverse of [`modulate`](Self::modulate).
    pub fn demodulate(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform(samples, &self.forward)
    }

    fn transform(&self, input: &[Complex64], fft: &Arc<dyn Fft<f64>>) -> Result<Vec<Complex64>> {
        if input.len() != self.params.num_res() {
            return Err(Error::LengthMismatch {
                expected: self.params.num_res(),
                actual: input.len(),
            });
        }
        let mut out: Vec<Complex64> = input.iter().map(|&v| v * self.scale).collect();
        fft.process(&mut out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_grid(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn params() -> OfdmParams {
        OfdmParams::new(72, 14, 30e3).unwrap()
    }

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn derived_quantities() {
        let p = params();
        assert_eq!(p.bandwidth(), 2.16e6);
        assert!((p.bandwidth() * p.frame_duration() - 1008.0).abs() < 1e-9);
        assert!(OfdmParams::new(0, 14, 30e3).is_err());
        assert!(OfdmParams::new(72, 14, 0.0).is_err());
    }

    #[test]
    fn unit_impulse_column() {
        let p = params();
        let modem = OfdmModem::new(p);
        let mut grid = vec![Complex64::new(0.0, 0.0); p.num_res()];
        assert!(modem.modulate(&grid).unwrap().iter().all(|x| x.norm() == 0.0));
        grid[0] = Complex64::new(1.0, 0.0);
        let x = modem.modulate(&grid).unwrap();
        let expect = 1.0 / 72f64.sqrt();
        for (i, v) in x.iter().enumerate() {
            let target = if i < 72 { expect } else { 0.0 };
            assert!((v - Complex64::new(target, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn round_trip_and_energy() {
        let p = params();
        let modem = OfdmModem::new(p);
        let grid = random_grid(p.num_res(), 1);
        let x = modem.modulate(&grid).unwrap();
        assert!((norm(&x) - norm(&grid)).abs() / norm(&grid) < 1e-12);
        let back = modem.demodulate(&x).unwrap();
        let err: Vec<Complex64> = back.iter().zip(&grid).map(|(a, b)| a - b).collect();
        assert!(norm(&err) / norm(&grid) < 1e-12);
        assert!(modem.demodulate(&x[1..]).is_err());
    }

    #[test]
    fn linearity() {
        let p = params();
        let modem = OfdmModem::new(p);
        let a = random_grid(p.num_res(), 2);
        let b = random_grid(p.num_res(), 3);
        let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + 2.0 * y).collect();
        let (ya, yb, ys) = (
            modem.demodulate(&a).unwrap(),
            modem.demodulate(&b).unwrap(),
            modem.demodulate(&sum).unwrap(),
        );
        for i in 0..p.num_res() {
            assert!((ys[i] - ya[i] - 2.0 * yb[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn frame_fill_round_trip() {
        let p = params();
        let pilots = PilotPattern {
            symbols: vec![2, 11],
            stride: 2,
            offset: 0,
            amplitude: 2f64.sqrt(),
            seed: 5,
        };
        let mask = pilots.mask(&p);
        let n_pilots = mask.iter().filter(|m| **m).count();
        assert_eq!(n_pilots, 72);
        let positions = data_positions(&p, &mask);
        assert_eq!(positions.len() + n_pilots, p.num_res());
        let data = random_grid(positions.len(), 4);
        let grid = map_frame(&data, &pilots, &p).unwrap();
        assert_eq!(extract_data(&grid.res, &positions), data);
        for (i, v) in grid.res.iter().enumerate() {
            if mask[i] {
                assert!((v.norm() - 2f64.sqrt()).abs() < 1e-12);
            }
        }
        assert_eq!(grid, map_frame(&data, &pilots, &p).unwrap());
        assert!(map_frame(&data[1..], &pilots, &p).is_err());
    }

    #[test]
    fn full_pilot_grid() {
        let p = OfdmParams::new(4, 2, 1e3).unwrap();
        let pilots = PilotPattern {
            symbols: vec![0, 1],
            stride: 1,
            offset: 0,
            amplitude: 1.0,
            seed: 0,
        };
        let grid = map_frame(&[], &pilots, &p).unwrap();
        assert!(grid.pilot_mask.iter().all(|&m| m));
    }
}
