//! Prior-aware soft demapping over the augmented constellation.
//!
//! For every received symbol each of the `q = 2l` points gets the logit
//! `u_i = −|y − s_i|²/N0 + log π_i`. The two points that share a label are
//! merged with a max-shifted log-sum-exp, and each bit's LLR is the
//! log-sum-exp over labels with that bit 0 minus the one over labels with
//! that bit 1.

use crate::constellation::ConstellationSpec;
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-30;
/// Magnitude limit applied to LLRs before LDPC decoding.
pub const DEFAULT_LLR_CLAMP: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DemapConfig {
    pub spec: ConstellationSpec,
    /// `log π_i` in joint point indexing.
    pub log_priors: Vec<f64>,
    pub n0: f64,
    pub epsilon: f64,
}

impl DemapConfig {
    pub fn new(spec: ConstellationSpec, log_priors: Vec<f64>, n0: f64, epsilon: f64) -> Result<Self> {
        let cfg = Self {
            spec,
            log_priors,
            n0,
            epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Priors induced by a shaping code whose outer-ring probability is `pi_outer`.
    pub fn with_outer_probability(spec: ConstellationSpec, pi_outer: f64, n0: f64) -> Result<Self> {
        let log_priors = spec.point_priors(pi_outer).iter().map(|p| p.ln()).collect();
        Self::new(spec, log_priors, n0, DEFAULT_EPSILON)
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.spec.num_points();
        if self.log_priors.len() != q {
            return Err(Error::LengthMismatch {
                expected: q,
                actual: self.log_priors.len(),
            });
        }
        if self.log_priors.iter().any(|p| p.is_nan() || *p == f64::INFINITY) {
            return Err(Error::Config("log-priors must be finite or -inf".into()));
        }
        let total: f64 = self.log_priors.iter().map(|p| p.exp()).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("priors sum to {total}, not 1")));
        }
        if !(self.n0 > 0.0) || !self.n0.is_finite() {
            return Err(Error::Config("noise variance must be positive".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config("epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone, epsilon: f64) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = values.map(|v| (v - m).exp()).sum();
    m + (s + epsilon).ln()
}

/// Demaps one symbol into `out` (length `n_b`).
fn demap_symbol(
    y: crate::Complex64,
    n0: f64,
    cfg: &DemapConfig,
    point_logits: &mut [f64],
    label_logits: &mut [f64],
    out: &mut [f64],
) {
    let spec = &cfg.spec;
    let l = spec.order();
    for (i, u) in point_logits.iter_mut().enumerate() {
        *u = -(y - spec.point(i)).norm_sqr() / n0 + cfg.log_priors[i];
    }
    for (label, lam) in label_logits.iter_mut().enumerate() {
        let pair = [point_logits[label], point_logits[spec.representative_index(label)]];
        *lam = log_sum_exp(pair.into_iter(), cfg.epsilon);
    }
    let nb = out.len();
    for (b, llr) in out.iter_mut().enumerate() {
        let shift = nb - 1 - b;
        let zero = (0..l).filter(|lab| (lab >> shift) & 1 == 0).map(|lab| label_logits[lab]);
        let one = (0..l).filter(|lab| (lab >> shift) & 1 == 1).map(|lab| label_logits[lab]);
        let v = log_sum_exp(zero, cfg.epsilon) - log_sum_exp(one, cfg.epsilon);
        *llr = if v.is_nan() { 0.0 } else { v.clamp(-f64::MAX, f64::MAX) };
    }
}

/// Bit LLRs `log P(b=0|y)/P(b=1|y)` for every symbol, bit 0 (label MSB) first.
pub fn compute_llrs(equalized: &[crate::Complex64], config: &DemapConfig) -> Result<Vec<f64>> {
    compute_llrs_inner(equalized, None, config)
}

/// As [`compute_llrs`], with a separate noise variance for every symbol
/// (`config.n0` is ignored).
pub fn compute_llrs_per_symbol(
    equalized: &[crate::Complex64],
    noise_variances: &[f64],
    config: &DemapConfig,
) -> Result<Vec<f64>> {
    if noise_variances.len() != equalized.len() {
        return Err(Error::LengthMismatch {
            expected: equalized.len(),
            actual: noise_variances.len(),
        });
    }
    if let Some(v) = noise_variances.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!("noise variance {v} is not positive")));
    }
    compute_llrs_inner(equalized, Some(noise_variances), config)
}

fn compute_llrs_inner(
    equalized: &[crate::Complex64],
    noise_variances: Option<&[f64]>,
    config: &DemapConfig,
) -> Result<Vec<f64>> {
    if equalized.is_empty() {
        return Err(Error::Config("no symbols to demap".into()));
    }
    config.validate()?;
    let nb = config.spec.bits_per_symbol();
    let mut point_logits = vec![0.0; config.spec.num_points()];
    let mut label_logits = vec![0.0; config.spec.order()];
    let mut llrs = vec![0.0; equalized.len() * nb];
    for (s, (&y, out)) in equalized.iter().zip(llrs.chunks_exact_mut(nb)).enumerate() {
        let n0 = noise_variances.map_or(config.n0, |v| v[s]);
        demap_symbol(y, n0, config, &mut point_logits, &mut label_logits, out);
    }
    Ok(llrs)
}

pub fn clamp_llrs(llrs: &mut [f64], limit: f64) {
    for l in llrs {
        *l = l.clamp(-limit, limit);
    }
}
