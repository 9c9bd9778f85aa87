//! Doubly-selective delay-Doppler channels.
//!
//! A channel is a set of paths with complex gain, delay and Doppler. After
//! pulse shaping and matched filtering it acts on the sampled time-domain
//! frame through the effective matrix
//!
//! ```text
//! H[m, n] = Σ_p h_p · exp(j·2π·l_p·n / (M·N)) · g(m − (k_p + n))
//! ```
//!
//! with `k_p = τ_p·B` and `l_p = ν_p·T` (both generally fractional). `g` is a
//! windowed sinc, which is Nyquist: integer delays reduce to pure shifts.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ofdm::OfdmParams;
use crate::{Complex64, Error, Result};

/// Power-delay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl ChannelProfile {
    /// ITU Vehicular-A.
    pub fn veh_a() -> Self {
        Self {
            delays_ns: vec![0.0, 310.0, 710.0, 1090.0, 1730.0, 2510.0],
            powers_db: vec![0.0, -1.0, -9.0, -10.0, -15.0, -20.0],
        }
    }

    /// Single tap at zero delay.
    pub fn flat() -> Self {
        Self {
            delays_ns: vec![0.0],
            powers_db: vec![0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays_ns.is_empty() || self.delays_ns.len() != self.powers_db.len() {
            return Err(Error::Config(
                "channel profile needs matching, nonempty delay and power lists".into(),
            ));
        }
        if self.delays_ns.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::Config("path delays must be finite and non-negative".into()));
        }
        if self.powers_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("path powers must be finite".into()));
        }
        Ok(())
    }

    /// Linear path powers normalized to unit sum.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let linear: Vec<f64> = self.powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = linear.iter().sum();
        linear.into_iter().map(|p| p / total).collect()
    }

    /// Rayleigh gains with the profile's powers; Jakes Doppler `ν_max·cos θ`,
    /// `θ ~ U[−π, π)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, nu_max_hz: f64, params: &OfdmParams) -> PathSet {
        let b = params.bandwidth();
        let t = params.frame_duration();
        let paths = self
            .normalized_powers()
            .into_iter()
            .zip(&self.delays_ns)
            .map(|(power, &delay_ns)| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let gain = Complex64::new(re, im) * (power / 2.0).sqrt();
                let angle = rng.random_range(-PI..PI);
                let delay_s = delay_ns * 1e-9;
                let doppler_hz = nu_max_hz * angle.cos();
                Path {
                    gain,
                    delay_s,
                    doppler_hz,
                    delay_index: delay_s * b,
                    doppler_index: doppler_hz * t,
                    angle,
                }
            })
            .collect();
        PathSet { paths }
    }
}

pub fn draw_veh_a<R: Rng + ?Sized>(rng: &mut R, nu_max_hz: f64, params: &OfdmParams) -> PathSet {
    ChannelProfile::veh_a().draw(rng, nu_max_hz, params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub delay_s: f64,
    pub doppler_hz: f64,
    /// `k_p = τ_p·B`.
    pub delay_index: f64,
    /// `l_p = ν_p·T`.
    pub doppler_index: f64,
    /// Jakes angle the Doppler was drawn from.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    /// A single path given directly by its indices.
    pub fn single(gain: Complex64, delay_index: f64, doppler_index: f64, params: &OfdmParams) -> Self {
        Self {
            paths: vec![Path {
                gain,
                delay_s: delay_index / params.bandwidth(),
                doppler_hz: doppler_index / params.frame_duration(),
                delay_index,
                doppler_index,
                angle: 0.0,
            }],
        }
    }

    pub fn max_delay_index(&self) -> f64 {
        self.paths.iter().map(|p| p.delay_index).fold(0.0, f64::max)
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }
}

/// Windowed-sinc interpolation pulse: `sinc(x)·½(1 + cos(πx/span))` on `|x| < span`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub span: usize,
}

impl Default for Pulse {
    fn default() -> Self {
        Pulse { span: 16 }
    }
}

impl Pulse {
    pub fn eval(&self, x: f64) -> f64 {
        let span = self.span as f64;
        if x.abs() >= span {
            return 0.0;
        }
        if x == 0.0 {
            return 1.0;
        }
        if x.fract() == 0.0 {
            return 0.0;
        }
        let px = PI * x;
        let window = 0.5 * (1.0 + (PI * x / span).cos());
        px.sin() / px * window
    }

    /// Integer offsets `d` for which `g(d − delay)` can be nonzero.
    fn support(&self, delay: f64) -> std::ops::RangeInclusive<i64> {
        let span = self.span as i64;
        (delay.floor() as i64 - span)..=(delay.ceil() as i64 + span)
    }
}

/// Everything needed to draw channels for an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub profile: ChannelProfile,
    pub nu_max_hz: f64,
    #[serde(default)]
    pub mode: ChannelMode,
    #[serde(default)]
    pub pulse: Pulse,
}

impl ChannelConfig {
    pub fn veh_a(nu_max_hz: f64) -> Self {
        Self {
            profile: ChannelProfile::veh_a(),
            nu_max_hz,
            mode: ChannelMode::default(),
            pulse: Pulse::default(),
        }
    }

    pub fn validate(&self, params: &OfdmParams) -> Result<()> {
        self.profile.validate()?;
        if !(self.nu_max_hz >= 0.0) {
            return Err(Error::Config("maximum Doppler must be non-negative".into()));
        }
        let max_delay = self.profile.delays_ns.iter().fold(0.0f64, |a, &d| a.max(d)) * 1e-9
            * params.bandwidth();
        if (self.pulse.span as f64) < max_delay {
            return Err(Error::PulseSpan {
                span: self.pulse.span,
                max_delay,
            });
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, params: &OfdmParams) -> PathSet {
        self.profile.draw(rng, self.nu_max_hz, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Direct evaluation over the whole frame: delays spill into the next symbol.
    Literal,
    /// Each OFDM symbol sees a circular channel (ideal cyclic prefix).
    #[default]
    PerSymbolCircular,
}

/// Phase of path `p` at absolute sample `n`.
fn doppler_phase(path: &Path, n: usize, params: &OfdmParams) -> Complex64 {
    let mn = params.num_res() as f64;
    Complex64::from_polar(1.0, 2.0 * PI * path.doppler_index * n as f64 / mn)
}

/// Sparse effective channel, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    params: OfdmParams,
    mode: ChannelMode,
    /// `columns[n]` lists `(row, value)` sorted by row.
    columns: Vec<Vec<(usize, Complex64)>>,
}

impl EffectiveChannel {
    pub fn build(paths: &PathSet, params: &OfdmParams, pulse: &Pulse, mode: ChannelMode) -> Result<Self> {
        let max_delay = paths.max_delay_index();
        if (pulse.span as f64) < max_delay {
            return Err(Error::PulseSpan {
                span: pulse.span,
                max_delay,
            });
        }
        let m_sub = params.subcarriers as i64;
        let mn = params.num_res() as i64;
        // Pulse taps per path do not depend on the column.
        let taps: Vec<Vec<(i64, f64)>> = paths
            .paths
            .iter()
            .map(|p| {
                pulse
                    .support(p.delay_index)
                    .map(|d| (d, pulse.eval(d as f64 - p.delay_index)))
                    .filter(|&(_, g)| g != 0.0)
                    .collect()
            })
            .collect();

        let mut columns = Vec::with_capacity(params.num_res());
        // Dense accumulator plus the rows touched in the current column.
        let mut acc = vec![Complex64::new(0.0, 0.0); params.num_res()];
        let mut touched = vec![false; params.num_res()];
        let mut rows: Vec<usize> = Vec::new();
        for n in 0..params.num_res() {
            rows.clear();
            let base = (n as i64 / m_sub) * m_sub;
            let j = n as i64 % m_sub;
            for (path, taps) in paths.paths.iter().zip(&taps) {
                let coeff = path.gain * doppler_phase(path, n, params);
                for &(d, g) in taps {
                    let row = match mode {
                        ChannelMode::Literal => {
                            let row = n as i64 + d;
                            if row < 0 || row >= mn {
                                continue;
                            }
                            row
                        }
                        ChannelMode::PerSymbolCircular => {
                            let r = j + d;
                            base + if (0..m_sub).contains(&r) { r } else { r.rem_euclid(m_sub) }
                        }
                    } as usize;
                    if !touched[row] {
                        touched[row] = true;
                        rows.push(row);
                    }
                    acc[row] += coeff * g;
                }
            }
            rows.sort_unstable();
            let col: Vec<(usize, Complex64)> = rows
                .iter()
                .map(|&r| {
                    touched[r] = false;
                    (r, std::mem::take(&mut acc[r]))
                })
                .collect();
            columns.push(col);
        }
        Ok(Self {
            params: *params,
            mode,
            columns,
        })
    }

    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    pub fn nonzeros(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Entry `H[row, col]`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.columns[col]
            .binary_search_by_key(&row, |e| e.0)
            .map(|i| self.columns[col][i].1)
            .unwrap_or_default()
    }

    pub fn multiply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.params.num_res() {
            return Err(Error::LengthMismatch {
                expected: self.params.num_res(),
                actual: x.len(),
            });
        }
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        for (col, &xn) in self.columns.iter().zip(x) {
            for &(row, h) in col {
                y[row] += h * xn;
            }
        }
        Ok(y)
    }

    /// `y = Hx + w`, `w` i.i.d. `CN(0, n0)`.
    pub fn apply<R: Rng + ?Sized>(&self, x: &[Complex64], n0: f64, rng: &mut R) -> Result<Vec<Complex64>> {
        let mut y = self.multiply(x)?;
        add_noise(&mut y, n0, rng);
        Ok(y)
    }

    /// Dense row-major copy of `H`.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mn = self.params.num_res();
        let mut dense = vec![Complex64::new(0.0, 0.0); mn * mn];
        for (col, entries) in self.columns.iter().enumerate() {
            for &(row, v) in entries {
                dense[row * mn + col] = v;
            }
        }
        dense
    }

    /// Dense row-major `H_F = (I⊗F_M) H (I⊗F_Mᴴ)`.
    pub fn frequency_matrix(&self) -> Vec<Complex64> {
        let mn = self.params.num_res();
        let m = self.params.subcarriers;
        let scale = 1.0 / (m as f64).sqrt();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let mut dense = self.to_dense();
        // Right-multiply: each row segment goes through F_Mᴴ.
        for row in dense.chunks_mut(mn) {
            inv.process(row);
        }
        // Left-multiply: each column segment goes through F_M.
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for col in 0..mn {
            for block in 0..self.params.symbols {
                for i in 0..m {
                    buf[i] = dense[(block * m + i) * mn + col];
                }
                fwd.process(&mut buf);
                for i in 0..m {
                    dense[(block * m + i) * mn + col] = buf[i] * scale * scale;
                }
            }
        }
        dense
    }

    /// `diag(H_F)` as an `M × N` grid, from the stored matrix entries.
    pub fn frequency_diagonal(&self) -> Vec<Complex64> {
        let m = self.params.subcarriers;
        let mut lag_sums = vec![Complex64::new(0.0, 0.0); self.params.num_res()];
        for (col, entries) in self.columns.iter().enumerate() {
            let block = col / m;
            for &(row, v) in entries {
                if row / m == block {
                    let lag = (row % m + m - col % m) % m;
                    lag_sums[block * m + lag] += v;
                }
            }
        }
        lag_sums_to_diagonal(lag_sums, m)
    }
}

/// Turns per-symbol sums of `H` along each cyclic lag into `diag(H_F)`:
/// `diag[m] = (1/M)·Σ_r S(r)·exp(−j2π·m·r/M)`.
fn lag_sums_to_diagonal(mut lag_sums: Vec<Complex64>, m: usize) -> Vec<Complex64> {
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut lag_sums);
    let scale = 1.0 / m as f64;
    lag_sums.iter_mut().for_each(|v| *v *= scale);
    lag_sums
}

impl PathSet {
    /// `diag(H_F)` as an `M × N` grid computed straight from the paths,
    /// without building `H`. Agrees with
    /// [`EffectiveChannel::frequency_diagonal`].
    pub fn frequency_diagonal(&self, params: &OfdmParams, pulse: &Pulse, mode: ChannelMode) -> Vec<Complex64> {
        let m = params.subcarriers;
        let mut lag_sums = vec![Complex64::new(0.0, 0.0); params.num_res()];
        let mut prefix = vec![Complex64::new(0.0, 0.0); m + 1];
        for path in &self.paths {
            let taps: Vec<(i64, f64)> = pulse
                .support(path.delay_index)
                .map(|d| (d, pulse.eval(d as f64 - path.delay_index)))
                .filter(|&(_, g)| g != 0.0)
                .collect();
            for block in 0..params.symbols {
                for j in 0..m {
                    prefix[j + 1] = prefix[j] + doppler_phase(path, block * m + j, params);
                }
                for &(d, g) in &taps {
                    // Columns j of this block whose row j + d stays in the block.
                    let phase_sum = match mode {
                        ChannelMode::PerSymbolCircular => prefix[m],
                        ChannelMode::Literal => {
                            let lo = (-d).max(0) as usize;
                            let hi = (m as i64 - d).clamp(0, m as i64) as usize;
                            if lo >= hi {
                                continue;
                            }
                            prefix[hi] - prefix[lo]
                        }
                    };
                    let lag = d.rem_euclid(m as i64) as usize;
                    lag_sums[block * m + lag] += path.gain * g * phase_sum;
                }
            }
        }
        lag_sums_to_diagonal(lag_sums, m)
    }
}

pub fn add_noise<R: Rng + ?Sized>(y: &mut [Complex64], n0: f64, rng: &mut R) {
    if n0 <= 0.0 {
        return;
    }
    let sigma = (n0 / 2.0).sqrt();
    for v in y {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re, im) * sigma;
    }
}
