//! Layered (row-serial) belief propagation.

use super::ParityCheck;

/// Check-node update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckRule {
    /// Min-sum with the outgoing magnitude scaled by the given factor.
    NormalizedMinSum(f64),
    /// Exact tanh-rule sum-product.
    SumProduct,
}

impl Default for CheckRule {
    fn default() -> Self {
        CheckRule::NormalizedMinSum(0.75)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// Hard decisions on the full codeword.
    pub codeword: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

const MAX_MESSAGE: f64 = 1e3;

fn hard(llr: f64) -> u8 {
    (llr < 0.0) as u8
}

/// Zero syndrome and no bit left exactly undecided.
fn is_codeword(h: &ParityCheck, posterior: &[f64], bits: &mut [u8]) -> bool {
    if posterior.iter().any(|&l| l == 0.0) {
        return false;
    }
    for (b, &l) in bits.iter_mut().zip(posterior) {
        *b = hard(l);
    }
    h.syndrome_is_zero(bits)
}

pub(super) fn decode(h: &ParityCheck, llrs: &[f64], max_iters: usize, rule: CheckRule) -> DecodeOutput {
    assert_eq!(llrs.len(), h.num_cols(), "LLR count must equal code length");
    let max_iters = max_iters.max(1);
    let mut posterior: Vec<f64> = llrs.to_vec();
    let mut check_msgs = vec![0.0f64; h.num_edges()];
    let mut incoming: Vec<f64> = Vec::new();
    let mut bits = vec![0u8; h.num_cols()];

    for iteration in 1..=max_iters {
        let mut edge = 0;
        for row in h.rows() {
            let msgs = &mut check_msgs[edge..edge + row.len()];
            incoming.clear();
            incoming.extend(row.iter().zip(msgs.iter()).map(|(&v, &r)| posterior[v] - r));
            match rule {
                CheckRule::NormalizedMinSum(alpha) => {
                    let mut min1 = f64::INFINITY;
                    let mut min2 = f64::INFINITY;
                    let mut min_at = 0;
                    let mut negatives = 0usize;
                    for (i, &q) in incoming.iter().enumerate() {
                        let a = q.abs();
                        if q < 0.0 {
                            negatives += 1;
                        }
                        if a < min1 {
                            min2 = min1;
                            min1 = a;
                            min_at = i;
                        } else if a < min2 {
                            min2 = a;
                        }
                    }
                    for (i, (&v, msg)) in row.iter().zip(msgs.iter_mut()).enumerate() {
                        let q = incoming[i];
                        let magnitude = alpha * if i == min_at { min2 } else { min1 };
                        let negative = (negatives - (q < 0.0) as usize) % 2 == 1;
                        *msg = if negative { -magnitude } else { magnitude };
                        posterior[v] = q + *msg;
                    }
                }
                CheckRule::SumProduct => {
                    // Leave-one-out products via prefix/suffix passes.
                    let t: Vec<f64> = incoming.iter().map(|&q| (0.5 * q).tanh()).collect();
                    let d = t.len();
                    let mut prefix = vec![1.0; d + 1];
                    for i in 0..d {
                        prefix[i + 1] = prefix[i] * t[i];
                    }
                    let mut suffix = 1.0;
                    for i in (0..d).rev() {
                        let p = (prefix[i] * suffix).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                        let msg = (2.0 * p.atanh()).clamp(-MAX_MESSAGE, MAX_MESSAGE);
                        msgs[i] = msg;
                        posterior[row[i]] = incoming[i] + msg;
                        suffix *= t[i];
                    }
                }
            }
            edge += row.len();
        }
        if is_codeword(h, &posterior, &mut bits) {
            return DecodeOutput {
                codeword: bits,
                converged: true,
                iterations: iteration,
            };
        }
    }
    for (b, &l) in bits.iter_mut().zip(&posterior) {
        *b = hard(l);
    }
    DecodeOutput {
        codeword: bits,
        converged: false,
        iterations: max_iters,
    }
}
