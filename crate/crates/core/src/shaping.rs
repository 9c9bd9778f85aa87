//! Sparse shaping codes.
//!
//! The codebook of a `(z, s)` shaping code is every binary vector of length
//! `z` with Hamming weight at most `s`. Codewords are ranked first by weight,
//! then lexicographically by their support (so `100 < 010 < 001`), which gives
//! an O(z) rank/unrank without ever listing the codebook. Only the first
//! `2^bits_per_block` ranks carry information.

use crate::constellation::ConstellationSpec;
use crate::{Complex64, Error, Result};

/// Binomial coefficient, exact for n ≤ 62.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapingCode {
    z: usize,
    sparsity: usize,
    codebook_size: u64,
    bits_per_block: usize,
}

impl ShapingCode {
    pub fn new(z: usize, sparsity: usize) -> Result<Self> {
        if z == 0 || z > 62 {
            return Err(Error::InvalidShapingCode(format!(
                "block length {z} outside 1..=62"
            )));
        }
        if sparsity > z {
            return Err(Error::InvalidShapingCode(format!(
                "sparsity {sparsity} exceeds block length {z}"
            )));
        }
        let codebook_size: u64 = (0..=sparsity).map(|w| binomial(z, w)).sum();
        let bits_per_block = (u64::BITS - 1 - codebook_size.leading_zeros()) as usize;
        Ok(Self {
            z,
            sparsity,
            codebook_size,
            bits_per_block,
        })
    }

    pub fn len(&self) -> usize {
        self.z
    }

    pub fn is_empty(&self) -> bool {
        self.z == 0
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    /// `|C|`, the number of codewords of weight ≤ s.
    pub fn codebook_size(&self) -> u64 {
        self.codebook_size
    }

    /// `floor(log2 |C|)`.
    pub fn bits_per_block(&self) -> usize {
        self.bits_per_block
    }

    /// Number of indices that carry information, `2^bits_per_block`.
    pub fn index_limit(&self) -> u64 {
        1 << self.bits_per_block
    }

    /// Extra bits per channel use.
    pub fn rate(&self) -> f64 {
        self.bits_per_block as f64 / self.z as f64
    }

    /// Probability that a given channel use is on the outer ring when the
    /// index is uniform over `[0, 2^bits_per_block)`: `E[weight] / z`.
    pub fn outer_probability(&self) -> f64 {
        let mut remaining = self.index_limit();
        let mut weight_sum = 0u64;
        for w in 0..=self.sparsity {
            let take = binomial(self.z, w).min(remaining);
            weight_sum += take * w as u64;
            remaining -= take;
        }
        weight_sum as f64 / (self.index_limit() as f64 * self.z as f64)
    }

    pub fn is_valid(&self, codeword: &[u8]) -> bool {
        codeword.len() == self.z && weight(codeword) <= self.sparsity
    }

    /// The `index`-th codeword of the enumeration.
    pub fn index_to_codeword(&self, index: u64) -> Result<Vec<u8>> {
        if index >= self.index_limit() {
            return Err(Error::IndexOutOfRange {
                index,
                limit: self.index_limit(),
            });
        }
        let mut rank = index;
        let mut w = 0;
        loop {
            let class = binomial(self.z, w);
            if rank < class {
                break;
            }
            rank -= class;
            w += 1;
        }
        let mut codeword = vec![0u8; self.z];
        let mut left = w;
        for (pos, bit) in codeword.iter_mut().enumerate() {
            if left == 0 {
                break;
            }
            // Supports that start with `pos`.
            let with_pos = binomial(self.z - pos - 1, left - 1);
            if rank < with_pos {
                *bit = 1;
                left -= 1;
            } else {
                rank -= with_pos;
            }
        }
        Ok(codeword)
    }

    pub fn codeword_to_index(&self, codeword: &[u8]) -> Result<u64> {
        if codeword.len() != self.z {
            return Err(Error::LengthMismatch {
                expected: self.z,
                actual: codeword.len(),
            });
        }
        let w = weight(codeword);
        if w > self.sparsity {
            return Err(Error::InvalidWeight {
                weight: w,
                sparsity: self.sparsity,
            });
        }
        let mut index: u64 = (0..w).map(|v| binomial(self.z, v)).sum();
        let mut left = w;
        for (pos, &bit) in codeword.iter().enumerate() {
            if left == 0 {
                break;
            }
            if bit == 1 {
                left -= 1;
            } else {
                index += binomial(self.z - pos - 1, left - 1);
            }
        }
        Ok(index)
    }
}

fn weight(codeword: &[u8]) -> usize {
    codeword.iter().filter(|&&b| b == 1).count()
}

pub fn bits_to_index(bits: &[u8]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as u64)
}

pub fn index_to_bits(index: u64, width: usize) -> Vec<u8> {
    (0..width)
        .map(|b| ((index >> (width - 1 - b)) & 1) as u8)
        .collect()
}

/// One shaped block: transmitted points and the codeword that chose their rings.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedBlock {
    pub symbols: Vec<Complex64>,
    pub codeword: Vec<u8>,
}

/// Same as [`shaping_encode`] with inner points given by label.
pub fn shaping_encode_labels(
    labels: &[usize],
    shaping_bits: &[u8],
    code: &ShapingCode,
    spec: &ConstellationSpec,
) -> Result<ShapedBlock> {
    if labels.len() != code.len() {
        return Err(Error::LengthMismatch {
            expected: code.len(),
            actual: labels.len(),
        });
    }
    if shaping_bits.len() != code.bits_per_block() {
        return Err(Error::BitLength {
            expected: code.bits_per_block(),
            actual: shaping_bits.len(),
        });
    }
    let codeword = code.index_to_codeword(bits_to_index(shaping_bits))?;
    let symbols = labels
        .iter()
        .zip(&codeword)
        .map(|(&label, &c)| {
            if c == 1 {
                spec.representative(label)
            } else {
                spec.inner_points()[label]
            }
        })
        .collect();
    Ok(ShapedBlock { symbols, codeword })
}

/// Sends `inner_symbols[i]` where the codeword is 0 and its outer
/// representative where it is 1. The codeword is the one indexed by
/// `shaping_bits` (MSB first).
pub fn shaping_encode(
    inner_symbols: &[Complex64],
    shaping_bits: &[u8],
    code: &ShapingCode,
    spec: &ConstellationSpec,
) -> Result<ShapedBlock> {
    let labels = inner_symbols
        .iter()
        .map(|&s| spec.inner_label_of(s).ok_or(Error::NotInnerPoint(s)))
        .collect::<Result<Vec<_>>>()?;
    shaping_encode_labels(&labels, shaping_bits, code, spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapingDecision {
    pub codeword: Vec<u8>,
    pub shaping_bits: Vec<u8>,
    pub hard_symbols: Vec<Complex64>,
    /// Distance from each received sample to the nearest point of either ring.
    pub distances: Vec<f64>,
}

/// Nearest point among joint indices in `range`; returns (index, squared distance).
fn nearest(y: Complex64, spec: &ConstellationSpec, range: std::ops::Range<usize>) -> (usize, f64) {
    range
        .map(|i| (i, (y - spec.point(i)).norm_sqr()))
        .fold((usize::MAX, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        })
}

/// Minimum-distance detection over both rings followed by codeword repair.
///
/// When the raw ring pattern is not an indexed codeword, positions detected
/// on the outer ring are flipped to the inner ring in order of decreasing
/// distance to their nearest point, re-detecting each flipped position over
/// the inner ring only, until the pattern is valid.
pub fn shaping_decode(
    equalized: &[Complex64],
    code: &ShapingCode,
    spec: &ConstellationSpec,
) -> Result<ShapingDecision> {
    if equalized.len() != code.len() {
        return Err(Error::LengthMismatch {
            expected: code.len(),
            actual: equalized.len(),
        });
    }
    let l = spec.order();
    let mut hard_idx = Vec::with_capacity(code.len());
    let mut distances = Vec::with_capacity(code.len());
    for &y in equalized {
        let (idx, d2) = nearest(y, spec, 0..2 * l);
        hard_idx.push(idx);
        distances.push(d2.sqrt());
    }
    let mut codeword: Vec<u8> = hard_idx.iter().map(|&i| (i >= l) as u8).collect();

    let mut ones: Vec<usize> = (0..code.len()).filter(|&i| codeword[i] == 1).collect();
    // Dirtiest first; ties resolve to the lower position.
    ones.sort_by(|&a, &b| distances[b].total_cmp(&distances[a]).then(a.cmp(&b)));
    let mut ones = ones.into_iter();
    let mut w = weight(&codeword);
    loop {
        let valid = w <= code.sparsity()
            && code
                .codeword_to_index(&codeword)
                .map(|i| i < code.index_limit())
                .unwrap_or(false);
        if valid {
            break;
        }
        let pos = ones.next().expect("all-zero codeword is always valid");
        codeword[pos] = 0;
        w -= 1;
        hard_idx[pos] = nearest(equalized[pos], spec, 0..l).0;
    }

    let index = code.codeword_to_index(&codeword)?;
    Ok(ShapingDecision {
        shaping_bits: index_to_bits(index, code.bits_per_block()),
        hard_symbols: hard_idx.iter().map(|&i| spec.point(i)).collect(),
        codeword,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn codebook_sizes() {
        let a = ShapingCode::new(15, 1).unwrap();
        assert_eq!((a.codebook_size(), a.bits_per_block()), (16, 4));
        let b = ShapingCode::new(23, 3).unwrap();
        assert_eq!((b.codebook_size(), b.bits_per_block()), (2048, 11));
        let c = ShapingCode::new(3, 0).unwrap();
        assert_eq!((c.codebook_size(), c.bits_per_block()), (1, 0));
        assert!(ShapingCode::new(3, 4).is_err());
        assert!(ShapingCode::new(0, 0).is_err());
    }

    #[test]
    fn rates() {
        assert_abs_diff_eq!(ShapingCode::new(15, 1).unwrap().rate(), 4.0 / 15.0);
        assert_abs_diff_eq!(ShapingCode::new(23, 3).unwrap().rate(), 11.0 / 23.0);
        assert_eq!(ShapingCode::new(3, 0).unwrap().rate(), 0.0);
    }

    #[test]
    fn outer_probabilities() {
        assert_abs_diff_eq!(ShapingCode::new(3, 1).unwrap().outer_probability(), 0.25);
        assert_abs_diff_eq!(
            ShapingCode::new(15, 1).unwrap().outer_probability(),
            1.0 / 16.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            ShapingCode::new(23, 3).unwrap().outer_probability(),
            254.0 / 2048.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn small_enumeration() {
        let code = ShapingCode::new(3, 1).unwrap();
        let words: Vec<_> = (0..4).map(|i| code.index_to_codeword(i).unwrap()).collect();
        assert_eq!(words, vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(code.codeword_to_index(&[1, 0, 0]).unwrap(), 1);
        assert_eq!(code.codeword_to_index(&[0, 0, 0]).unwrap(), 0);
        assert!(matches!(
            code.index_to_codeword(4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn rank_rejects_invalid_words() {
        let code = ShapingCode::new(23, 3).unwrap();
        let mut w = vec![0u8; 23];
        w[..4].fill(1);
        assert!(matches!(
            code.codeword_to_index(&w),
            Err(Error::InvalidWeight { weight: 4, .. })
        ));
        assert!(matches!(
            code.codeword_to_index(&[0; 22]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn exhaustive_bijection_z23() {
        let code = ShapingCode::new(23, 3).unwrap();
        for i in 0..code.index_limit() {
            let w = code.index_to_codeword(i).unwrap();
            assert!(code.is_valid(&w));
            assert_eq!(code.codeword_to_index(&w).unwrap(), i);
        }
    }

    #[test]
    fn encoder_example() {
        let spec = ConstellationSpec::build_augmented_qam(4).unwrap();
        let code = ShapingCode::new(3, 1).unwrap();
        let inner = [
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(-1.0, 1.0),
        ];
        // Index 1 is [1 0 0].
        let block = shaping_encode(&inner, &[0, 1], &code, &spec).unwrap();
        assert_eq!(block.codeword, vec![1, 0, 0]);
        assert_eq!(
            block.symbols,
            vec![Complex64::new(-3.0, 1.0), inner[1], inner[2]]
        );
        let plain = shaping_encode(&inner, &[0, 0], &code, &spec).unwrap();
        assert_eq!(plain.symbols, inner.to_vec());
        assert!(matches!(
            shaping_encode(&[Complex64::new(3.0, 1.0); 3], &[0, 0], &code, &spec),
            Err(Error::NotInnerPoint(_))
        ));
        assert!(matches!(
            shaping_encode(&inner, &[0], &code, &spec),
            Err(Error::BitLength { .. })
        ));
    }

    #[test]
    fn all_inner_block_decodes_to_zero() {
        let spec = ConstellationSpec::build_augmented_qam(4).unwrap();
        let code = ShapingCode::new(15, 1).unwrap();
        let y = vec![Complex64::new(1.0, -1.0); 15];
        let dec = shaping_decode(&y, &code, &spec).unwrap();
        assert_eq!(dec.codeword, vec![0; 15]);
        assert_eq!(dec.shaping_bits, vec![0; 4]);
        assert_eq!(dec.hard_symbols, y);
    }

    #[test]
    fn repair_flips_dirtiest_outer_position() {
        let spec = ConstellationSpec::build_augmented_qam(4).unwrap();
        let code = ShapingCode::new(3, 1).unwrap();
        // Positions 0 and 2 land nearest outer points, position 0 far less cleanly.
        let y = [
            Complex64::new(-2.4, 1.0),
            Complex64::new(1.0, 1.1),
            Complex64::new(-2.9, -1.0),
        ];
        let dec = shaping_decode(&y, &code, &spec).unwrap();
        assert_eq!(dec.codeword, vec![0, 0, 1]);
        assert_eq!(dec.hard_symbols[0], Complex64::new(-1.0, 1.0));
        assert_eq!(dec.hard_symbols[2], Complex64::new(-3.0, -1.0));
        assert_abs_diff_eq!(dec.distances[0], 0.6, epsilon = 1e-12);
    }
}
