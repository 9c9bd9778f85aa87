//! Brute-force references used by the integration tests.
//!
//! Nothing in here calls into the library: every reference is written from
//! the definitions so that agreement means something.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

/// Outcome of comparing an implementation with a reference over many cases.
#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub cases: usize,
    pub max_abs_deviation: f64,
    /// Inputs of the first case that exceeded the tolerance, serialized for replay.
    pub first_failure: Option<String>,
}

impl OracleReport {
    pub fn record(&mut self, deviation: f64, tolerance: f64, inputs: impl FnOnce() -> String) {
        self.cases += 1;
        let deviation = if deviation.is_nan() { f64::INFINITY } else { deviation.abs() };
        self.max_abs_deviation = self.max_abs_deviation.max(deviation);
        if deviation > tolerance && self.first_failure.is_none() {
            self.first_failure = Some(inputs());
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.first_failure.is_none()
    }
}

impl std::fmt::Display for OracleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} cases, max deviation {:.3e}", self.cases, self.max_abs_deviation)?;
        if let Some(case) = &self.first_failure {
            write!(f, ", first failure: {case}")?;
        }
        Ok(())
    }
}

/// A constellation point with its bit label and ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub point: Complex64,
    pub label: usize,
    pub outer: bool,
}

/// Gray level on one axis: first bit is the sign, second the magnitude.
fn gray_level(sign_bit: usize, magnitude_bit: Option<usize>) -> f64 {
    let sign = if sign_bit == 0 { 1.0 } else { -1.0 };
    let mag = if magnitude_bit == Some(1) { 3.0 } else { 1.0 };
    sign * mag
}

fn inner_point(label: usize, bits: usize) -> Complex64 {
    if bits == 2 {
        Complex64::new(gray_level(label >> 1 & 1, None), gray_level(label & 1, None))
    } else {
        Complex64::new(
            gray_level(label >> 3 & 1, Some(label >> 2 & 1)),
            gray_level(label >> 1 & 1, Some(label & 1)),
        )
    }
}

/// Folded in-quadrant angle, then energy.
fn pairing_key(p: Complex64) -> (f64, f64) {
    (p.im.abs().atan2(p.re.abs()), p.norm_sqr())
}

/// Augmented 4-QAM or 16-QAM written out from the ring definitions.
pub fn reference_augmented_qam(order: usize) -> Vec<RefPoint> {
    let bits = match order {
        4 => 2,
        16 => 4,
        _ => panic!("unsupported order {order}"),
    };
    let inner: Vec<RefPoint> = (0..order)
        .map(|label| RefPoint {
            point: inner_point(label, bits),
            label,
            outer: false,
        })
        .collect();
    let mut table = inner.clone();
    if order == 4 {
        for p in &inner {
            let s = p.point;
            table.push(RefPoint {
                point: Complex64::new(s.re - 4.0 * s.re.signum(), s.im),
                label: p.label,
                outer: true,
            });
        }
        return table;
    }
    // 32-cross minus the 16-QAM grid, paired per quadrant in key order.
    let mut outer = Vec::new();
    for x in [-5.0f64, -3.0, -1.0, 1.0, 3.0, 5.0] {
        for y in [-5.0f64, -3.0, -1.0, 1.0, 3.0, 5.0] {
            let corner = x.abs() == 5.0 && y.abs() == 5.0;
            let grid = x.abs() < 4.0 && y.abs() < 4.0;
            if !corner && !grid {
                outer.push(Complex64::new(x, y));
            }
        }
    }
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        let in_q = |p: &Complex64| p.re * sx > 0.0 && p.im * sy > 0.0;
        let by_key = |a: &Complex64, b: &Complex64| pairing_key(*a).partial_cmp(&pairing_key(*b)).unwrap();
        let mut qi: Vec<&RefPoint> = inner.iter().filter(|p| in_q(&p.point)).collect();
        qi.sort_by(|a, b| by_key(&a.point, &b.point));
        let mut qo: Vec<Complex64> = outer.iter().copied().filter(in_q).collect();
        qo.sort_by(by_key);
        assert_eq!(qi.len(), 4);
        assert_eq!(qo.len(), 4);
        for (i, o) in qi.into_iter().zip(qo) {
            table.push(RefPoint {
                point: o,
                label: i.label,
                outer: true,
            });
        }
    }
    table
}

/// Exact bit LLRs by direct summation in probability space.
///
/// `priors[i]` belongs to `table[i]`. Every term is scaled by one global
/// shift (the largest exponent over all points) before exponentiation.
/// Bit 0 is the label MSB.
pub fn exact_bit_llr(y: Complex64, table: &[RefPoint], priors: &[f64], n0: f64, bits: usize) -> Vec<f64> {
    assert_eq!(table.len(), priors.len());
    let exponents: Vec<f64> = table
        .iter()
        .zip(priors)
        .map(|(p, &pr)| if pr > 0.0 { pr.ln() - (y - p.point).norm_sqr() / n0 } else { f64::NEG_INFINITY })
        .collect();
    let shift = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..bits)
        .map(|b| {
            let mut p0 = 0.0;
            let mut p1 = 0.0;
            for (p, &e) in table.iter().zip(&exponents) {
                let w = (e - shift).exp();
                if p.label >> (bits - 1 - b) & 1 == 0 {
                    p0 += w;
                } else {
                    p1 += w;
                }
            }
            p0.ln() - p1.ln()
        })
        .collect()
}

/// All weight-≤`sparsity` words of length `z`, by weight and then
/// lexicographically on their sorted support, keeping the first `count`.
pub fn enumerate_sparse_words(z: usize, sparsity: usize, count: usize) -> Vec<Vec<u8>> {
    fn supports(z: usize, w: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == w {
            out.push(current.clone());
            return;
        }
        for p in start..z {
            current.push(p);
            supports(z, w, p + 1, current, out);
            current.pop();
        }
    }
    let mut words = Vec::new();
    for w in 0..=sparsity {
        let mut sets = Vec::new();
        supports(z, w, 0, &mut Vec::new(), &mut sets);
        for set in sets {
            if words.len() == count {
                return words;
            }
            let mut word = vec![0u8; z];
            set.iter().for_each(|&p| word[p] = 1);
            words.push(word);
        }
    }
    words
}

/// Exhaustive maximum-likelihood shaping detection: the codeword and
/// per-symbol ring points minimizing the total squared distance.
pub fn ml_shaping_decode(
    block: &[Complex64],
    codebook: &[Vec<u8>],
    inner: &[Complex64],
    outer: &[Complex64],
) -> (usize, Vec<Complex64>) {
    let nearest = |y: Complex64, ring: &[Complex64]| {
        ring.iter()
            .map(|&s| ((y - s).norm_sqr(), s))
            .fold((f64::INFINITY, Complex64::new(0.0, 0.0)), |a, b| if b.0 < a.0 { b } else { a })
    };
    let per_symbol: Vec<[(f64, Complex64); 2]> = block.iter().map(|&y| [nearest(y, inner), nearest(y, outer)]).collect();
    let mut best = (f64::INFINITY, 0usize);
    for (idx, word) in codebook.iter().enumerate() {
        let cost: f64 = word.iter().zip(&per_symbol).map(|(&c, d)| d[c as usize].0).sum();
        if cost < best.0 {
            best = (cost, idx);
        }
    }
    let symbols = codebook[best.1].iter().zip(&per_symbol).map(|(&c, d)| d[c as usize].1).collect();
    (best.1, symbols)
}

/// Windowed sinc `sinc(x)·½(1 + cos(πx/span))` for `|x| < span`.
pub fn reference_pulse(x: f64, span: usize) -> f64 {
    let span = span as f64;
    if x.abs() >= span {
        return 0.0;
    }
    let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
    sinc * 0.5 * (1.0 + (PI * x / span).cos())
}

/// A path as `(gain, delay index k, Doppler index l)`.
pub type RefPath = (Complex64, f64, f64);

/// One entry of the effective channel matrix evaluated directly:
/// `Σ_p h_p·exp(j2π·l_p·n/(MN))·g(m − (k_p + n))`.
pub fn channel_entry(m: usize, n: usize, paths: &[RefPath], span: usize, total: usize) -> Complex64 {
    paths
        .iter()
        .map(|&(h, k, l)| {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * l * n as f64 / total as f64);
            h * phase * reference_pulse(m as f64 - (k + n as f64), span)
        })
        .sum()
}

/// Same entry when each OFDM symbol of `subcarriers` samples is circular:
/// the pulse is summed over all aliases of the in-symbol offset.
pub fn channel_entry_circular(m: usize, n: usize, paths: &[RefPath], span: usize, subcarriers: usize, total: usize) -> Complex64 {
    if m / subcarriers != n / subcarriers {
        return Complex64::new(0.0, 0.0);
    }
    let offset = (m % subcarriers) as f64 - (n % subcarriers) as f64;
    let reach = (span / subcarriers + 2) as i64;
    paths
        .iter()
        .map(|&(h, k, l)| {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * l * n as f64 / total as f64);
            let g: f64 = (-reach..=reach)
                .map(|r| reference_pulse(offset + (r * subcarriers as i64) as f64 - k, span))
                .sum();
            h * phase * g
        })
        .sum()
}

/// Unitary DFT of one vector by direct summation.
pub fn naive_dft(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(i, &v)| v * Complex64::from_polar(1.0, sign * 2.0 * PI * (i * k) as f64 / n as f64))
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// Every word of length `n` satisfying all checks, by enumeration.
pub fn brute_force_codewords(rows: &[Vec<usize>], n: usize) -> Vec<Vec<u8>> {
    assert!(n <= 24, "enumeration over 2^{n} words is too large");
    (0u64..1 << n)
        .filter(|w| rows.iter().all(|row| row.iter().map(|&c| (w >> c) & 1).sum::<u64>() % 2 == 0))
        .map(|w| (0..n).map(|c| ((w >> c) & 1) as u8).collect())
        .collect()
}

/// Rank over GF(2) of rows given as column lists.
pub fn gf2_rank(rows: &[Vec<usize>], n: usize) -> usize {
    let mut dense: Vec<Vec<u8>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![0u8; n];
            r.iter().for_each(|&c| v[c] ^= 1);
            v
        })
        .collect();
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..dense.len()).find(|&r| dense[r][col] == 1) else {
            continue;
        };
        dense.swap(rank, p);
        for r in 0..dense.len() {
            if r != rank && dense[r][col] == 1 {
                let pivot = dense[rank].clone();
                dense[r].iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}
