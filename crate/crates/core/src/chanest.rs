//! Pilot-aided channel estimation and one-tap equalization.
//!
//! The receiver only tracks `diag(H_F)`, one complex gain per resource
//! element. LS estimates at the pilots are spread over the grid by a 2D
//! LMMSE interpolator whose correlation model is separable,
//! `R[(m,n),(m',n')] = C_f[m,m']·C_t[n,n']`, with `C_f` and `C_t`
//! estimated by Monte-Carlo over channel draws.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::channel::ChannelConfig;
use crate::ofdm::OfdmParams;
use crate::rng::{stream_rng, Stream};
use crate::{Complex64, Error, Result};

/// LS estimates at the pilot REs.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotEstimates {
    /// Grid indices of the pilots, ascending.
    pub positions: Vec<usize>,
    pub values: Vec<Complex64>,
}

/// `ĥ = y / x_pilot` at every pilot RE.
pub fn ls_pilot_estimates(
    received: &[Complex64],
    pilot_values: &[Complex64],
    pilot_mask: &[bool],
) -> Result<PilotEstimates> {
    if received.len() != pilot_mask.len() || pilot_values.len() != pilot_mask.len() {
        return Err(Error::LengthMismatch {
            expected: pilot_mask.len(),
            actual: received.len().min(pilot_values.len()),
        });
    }
    let mut positions = Vec::new();
    let mut values = Vec::new();
    for (i, &is_pilot) in pilot_mask.iter().enumerate() {
        if !is_pilot {
            continue;
        }
        if pilot_values[i].norm_sqr() == 0.0 {
            return Err(Error::ZeroPilot(i));
        }
        positions.push(i);
        values.push(received[i] / pilot_values[i]);
    }
    Ok(PilotEstimates { positions, values })
}

/// Frequency and time covariances of `diag(H_F)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    /// `M × M`.
    pub freq: DMatrix<Complex64>,
    /// `N × N`.
    pub time: DMatrix<Complex64>,
    pub draws: u64,
    pub profile_hash: u64,
}

/// Identifies the statistics a covariance pair was computed for.
pub fn profile_hash(channel: &ChannelConfig, params: &OfdmParams) -> u64 {
    let key = serde_json::to_string(&(channel, params)).expect("serializable");
    let digest = Sha256::digest(key.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

const DRAWS_PER_CHUNK: u64 = 64;

fn accumulate(grid: &[Complex64], m: usize, n: usize, freq: &mut DMatrix<Complex64>, time: &mut DMatrix<Complex64>) {
    for a in 0..m {
        for b in a..m {
            let mut s = Complex64::new(0.0, 0.0);
            for col in 0..n {
                s += grid[a + col * m] * grid[b + col * m].conj();
            }
            freq[(a, b)] += s;
        }
    }
    for a in 0..n {
        for b in a..n {
            let mut s = Complex64::new(0.0, 0.0);
            for row in 0..m {
                s += grid[row + a * m] * grid[row + b * m].conj();
            }
            time[(a, b)] += s;
        }
    }
}

/// Fills the lower triangle from the upper one.
fn hermitian_from_upper(mut a: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            a[(j, i)] = a[(i, j)].conj();
        }
    }
    a
}

/// Monte-Carlo `C_f = E[G·Gᴴ]/N` and `C_t = E[Gᵀ·conj(G)]/M`, `G` being
/// `diag(H_F)` reshaped to `M × N`.
///
/// Draws are processed in fixed-size chunks whose partial sums are added in
/// chunk order, so the result does not depend on the thread count.
pub fn compute_covariances(
    channel: &ChannelConfig,
    params: &OfdmParams,
    draws: u64,
    seed: u64,
) -> Result<CovariancePair> {
    if draws == 0 {
        return Err(Error::Config("covariance needs at least one draw".into()));
    }
    channel.validate(params)?;
    let (m, n) = (params.subcarriers, params.symbols);
    let chunks = draws.div_ceil(DRAWS_PER_CHUNK);
    let partials: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut freq = DMatrix::zeros(m, m);
            let mut time = DMatrix::zeros(n, n);
            let end = ((chunk + 1) * DRAWS_PER_CHUNK).min(draws);
            for draw in chunk * DRAWS_PER_CHUNK..end {
                let mut rng = stream_rng(seed, draw, Stream::Covariance);
                let paths = channel.draw(&mut rng, params);
                let grid = paths.frequency_diagonal(params, &channel.pulse, channel.mode);
                accumulate(&grid, m, n, &mut freq, &mut time);
            }
            (freq, time)
        })
        .collect();
    let mut freq = DMatrix::zeros(m, m);
    let mut time = DMatrix::zeros(n, n);
    for (f, t) in partials {
        freq += f;
        time += t;
    }
    let freq = hermitian_from_upper(freq / Complex64::new((draws * n as u64) as f64, 0.0));
    let time = hermitian_from_upper(time / Complex64::new((draws * m as u64) as f64, 0.0));
    Ok(CovariancePair {
        freq,
        time,
        draws,
        profile_hash: profile_hash(channel, params),
    })
}

const CACHE_MAGIC: &[u8; 8] = b"RSHCOV\0\0";
const CACHE_VERSION: u32 = 1;

impl CovariancePair {
    /// Covariances of a time-invariant, frequency-flat unit channel.
    pub fn flat(params: &OfdmParams) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            freq: DMatrix::from_element(params.subcarriers, params.subcarriers, one),
            time: DMatrix::from_element(params.symbols, params.symbols, one),
            draws: 0,
            profile_hash: 0,
        }
    }

    /// Little-endian binary container: magic, version, M, N, profile hash,
    /// draw count, then `C_f` and `C_t` row-major as (re, im) pairs.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&CACHE_VERSION.to_le_bytes())?;
        out.write_all(&(self.freq.nrows() as u32).to_le_bytes())?;
        out.write_all(&(self.time.nrows() as u32).to_le_bytes())?;
        out.write_all(&self.profile_hash.to_le_bytes())?;
        out.write_all(&self.draws.to_le_bytes())?;
        for mat in [&self.freq, &self.time] {
            for r in 0..mat.nrows() {
                for c in 0..mat.ncols() {
                    out.write_all(&mat[(r, c)].re.to_le_bytes())?;
                    out.write_all(&mat[(r, c)].im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> std::result::Result<Self, String> {
        let mut buf8 = [0u8; 8];
        let mut buf4 = [0u8; 4];
        let mut read8 = |input: &mut R| -> std::result::Result<[u8; 8], String> {
            input.read_exact(&mut buf8).map_err(|e| e.to_string())?;
            Ok(buf8)
        };
        if &read8(&mut input)? != CACHE_MAGIC {
            return Err("not a covariance cache".into());
        }
        let mut read4 = |input: &mut R| -> std::result::Result<u32, String> {
            input.read_exact(&mut buf4).map_err(|e| e.to_string())?;
            Ok(u32::from_le_bytes(buf4))
        };
        let version = read4(&mut input)?;
        if version != CACHE_VERSION {
            return Err(format!("unsupported cache version {version}"));
        }
        let m = read4(&mut input)? as usize;
        let n = read4(&mut input)? as usize;
        let profile_hash = u64::from_le_bytes(read8(&mut input)?);
        let draws = u64::from_le_bytes(read8(&mut input)?);
        let mut matrix = |dim: usize, input: &mut R| -> std::result::Result<DMatrix<Complex64>, String> {
            let mut mat = DMatrix::zeros(dim, dim);
            for r in 0..dim {
                for c in 0..dim {
                    let re = f64::from_le_bytes(read8(input)?);
                    let im = f64::from_le_bytes(read8(input)?);
                    mat[(r, c)] = Complex64::new(re, im);
                }
            }
            Ok(mat)
        };
        let freq = matrix(m, &mut input)?;
        let time = matrix(n, &mut input)?;
        let mut rest = Vec::new();
        input.read_to_end(&mut rest).map_err(|e| e.to_string())?;
        if !rest.is_empty() {
            return Err("trailing bytes".into());
        }
        Ok(Self {
            freq,
            time,
            draws,
            profile_hash,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        self.write_to(&mut bytes).expect("writing to memory");
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(bytes.as_slice()).map_err(|reason| Error::Cache {
            path: path.to_path_buf(),
            reason,
        })
    }
}

/// Estimated `diag(H_F)` on the full `M × N` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub grid: Vec<Complex64>,
}

/// LMMSE interpolation filter for a fixed pilot layout and noise level.
///
/// Building the filter costs one `P × P` Cholesky solve; applying it is a
/// dense `MN × P` product.
#[derive(Debug, Clone)]
pub struct LmmseInterpolator {
    num_res: usize,
    pilot_positions: Vec<usize>,
    /// Row-major `MN × P`.
    weights: Vec<Complex64>,
    error_variance: Vec<f64>,
}

impl LmmseInterpolator {
    /// `noise_variance` is the variance of the LS estimates, i.e. `N0/|x_pilot|²`.
    pub fn new(
        cov: &CovariancePair,
        params: &OfdmParams,
        pilot_positions: &[usize],
        noise_variance: f64,
    ) -> Result<Self> {
        let (m, n) = (params.subcarriers, params.symbols);
        if cov.freq.nrows() != m || cov.time.nrows() != n {
            return Err(Error::Config(format!(
                "covariances are {}x{} / {}x{}, frame is {m}x{n}",
                cov.freq.nrows(),
                cov.freq.ncols(),
                cov.time.nrows(),
                cov.time.ncols()
            )));
        }
        if pilot_positions.is_empty() {
            return Err(Error::Config("no pilots to interpolate from".into()));
        }
        let corr = |a: usize, b: usize| cov.freq[(a % m, b % m)] * cov.time[(a / m, b / m)];
        let p = pilot_positions.len();
        let mut gram = DMatrix::from_fn(p, p, |i, j| corr(pilot_positions[i], pilot_positions[j]));
        let trace: f64 = (0..p).map(|i| gram[(i, i)].re).sum();
        let load = noise_variance.max(0.0) + 1e-8 * trace / p as f64;
        for i in 0..p {
            gram[(i, i)] += Complex64::new(load, 0.0);
        }
        let chol = gram.cholesky().ok_or(Error::SingularSystem)?;
        let num_res = params.num_res();
        let cross = DMatrix::from_fn(p, num_res, |i, a| corr(pilot_positions[i], a));
        let solved = chol.solve(&cross);
        if solved.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::SingularSystem);
        }
        let mut weights = Vec::with_capacity(num_res * p);
        let mut error_variance = Vec::with_capacity(num_res);
        for a in 0..num_res {
            let mut explained = 0.0;
            for i in 0..p {
                let w = solved[(i, a)].conj();
                weights.push(w);
                explained += (w * cross[(i, a)]).re;
            }
            error_variance.push((corr(a, a).re - explained).max(0.0));
        }
        Ok(Self {
            num_res,
            pilot_positions: pilot_positions.to_vec(),
            weights,
            error_variance,
        })
    }

    pub fn pilot_positions(&self) -> &[usize] {
        &self.pilot_positions
    }

    /// Model MSE of the estimate at each RE.
    pub fn error_variance(&self) -> &[f64] {
        &self.error_variance
    }

    pub fn interpolate(&self, pilots: &PilotEstimates) -> Result<ChannelEstimate> {
        if pilots.positions != self.pilot_positions {
            return Err(Error::Config("pilot layout differs from the interpolator's".into()));
        }
        let p = self.pilot_positions.len();
        let grid = self
            .weights
            .chunks_exact(p)
            .map(|row| row.iter().zip(&pilots.values).map(|(w, v)| w * v).sum())
            .collect::<Vec<Complex64>>();
        debug_assert_eq!(grid.len(), self.num_res);
        Ok(ChannelEstimate { grid })
    }
}

/// One-shot LMMSE interpolation. For repeated use build an
/// [`LmmseInterpolator`] once.
pub fn lmmse_interpolate(
    pilots: &PilotEstimates,
    cov: &CovariancePair,
    params: &OfdmParams,
    noise_variance: f64,
) -> Result<ChannelEstimate> {
    LmmseInterpolator::new(cov, params, &pilots.positions, noise_variance)?.interpolate(pilots)
}

/// Per-RE MMSE one-tap equalizer `x̂ = conj(ĥ)·y / (|ĥ|² + N0)`, returned
/// for the given data positions in order.
pub fn equalize(
    received: &[Complex64],
    estimate: &ChannelEstimate,
    n0: f64,
    data_positions: &[usize],
) -> Vec<Complex64> {
    data_positions
        .iter()
        .map(|&i| {
            let h = estimate.grid[i];
            h.conj() * received[i] / (h.norm_sqr() + n0)
        })
        .collect()
}

/// Normalized MSE `Σ|ĥ − h|² / Σ|h|²`.
pub fn nmse(estimate: &[Complex64], truth: &[Complex64]) -> f64 {
    let err: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum();
    let power: f64 = truth.iter().map(|b| b.norm_sqr()).sum();
    err / power
}
