//! Augmented (two-ring) QAM constellations.
//!
//! The inner ring is a standard Gray-labelled QAM grid on odd integer
//! coordinates. Every inner point has exactly one outer representative with
//! the same label; the shaping code decides which of the two is sent.
//!
//! Points are addressed by a single index over `q = 2l` points: indices
//! `0..l` are inner points (inner index = label), indices `l..2l` are outer
//! points in raster order.

use std::io::Write;

use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    order: usize,
    bits_per_symbol: usize,
    inner: Vec<Complex64>,
    outer: Vec<Complex64>,
    /// `ring_map[i]` is the outer index of the representative of inner point `i`.
    ring_map: Vec<usize>,
    /// Inverse of `ring_map`.
    outer_to_inner: Vec<usize>,
    inner_power: f64,
    outer_power: f64,
}

fn mean_energy(points: &[Complex64]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64
}

/// Gray-coded amplitude for one axis: sign bit first, then (for 16-QAM) the
/// magnitude bit selecting 3 over 1.
fn axis_level(bits: &[u8]) -> f64 {
    let sign = if bits[0] == 0 { 1.0 } else { -1.0 };
    let magnitude = match bits.get(1) {
        Some(1) => 3.0,
        _ => 1.0,
    };
    sign * magnitude
}

fn label_bits(label: usize, width: usize) -> Vec<u8> {
    (0..width)
        .map(|b| ((label >> (width - 1 - b)) & 1) as u8)
        .collect()
}

/// Angle inside the quadrant, folded so that all four quadrants sort alike.
fn quadrant_key(p: Complex64) -> (f64, f64) {
    (p.im.abs().atan2(p.re.abs()), p.norm_sqr())
}

fn same_quadrant(a: Complex64, b: Complex64) -> bool {
    a.re.signum() == b.re.signum() && a.im.signum() == b.im.signum()
}

impl ConstellationSpec {
    /// Builds the augmented constellation for 4-QAM or 16-QAM.
    ///
    /// 4-QAM: the outer ring is `{±3±1j}` and `f(a+bj) = (a − 4·sign a) + bj`,
    /// so `1+1j` is represented by `−3+1j`.
    ///
    /// 16-QAM: the outer ring is the 32-cross minus the 16-QAM grid. In each
    /// quadrant the four inner and four outer points are sorted by angle
    /// (ties broken by energy) and paired in order.
    pub fn build_augmented_qam(order: usize) -> Result<Self> {
        let bits_per_symbol = match order {
            4 => 2,
            16 => 4,
            other => return Err(Error::UnsupportedOrder(other)),
        };
        let half = bits_per_symbol / 2;
        let inner: Vec<Complex64> = (0..order)
            .map(|label| {
                let bits = label_bits(label, bits_per_symbol);
                Complex64::new(axis_level(&bits[..half]), axis_level(&bits[half..]))
            })
            .collect();

        let (outer, ring_map) = if order == 4 {
            let outer: Vec<Complex64> = [(-3.0, 1.0), (3.0, 1.0), (-3.0, -1.0), (3.0, -1.0)]
                .iter()
                .map(|&(re, im)| Complex64::new(re, im))
                .collect();
            let ring_map = inner
                .iter()
                .map(|s| {
                    let image = Complex64::new(s.re - 4.0 * s.re.signum(), s.im);
                    outer.iter().position(|&o| o == image).expect("4-QAM outer image")
                })
                .collect();
            (outer, ring_map)
        } else {
            let mut outer = Vec::with_capacity(16);
            for im in [5, 3, 1, -1, -3, -5] {
                for re in [-5, -3, -1, 1, 3, 5] {
                    let (re, im) = (re as f64, im as f64);
                    let cross_corner = re.abs() == 5.0 && im.abs() == 5.0;
                    let in_grid = re.abs() <= 3.0 && im.abs() <= 3.0;
                    if !cross_corner && !in_grid {
                        outer.push(Complex64::new(re, im));
                    }
                }
            }
            let mut ring_map = vec![usize::MAX; order];
            for quadrant_rep in [
                Complex64::new(1.0, 1.0),
                Complex64::new(-1.0, 1.0),
                Complex64::new(-1.0, -1.0),
                Complex64::new(1.0, -1.0),
            ] {
                let by_key = |pts: &[Complex64]| {
                    let mut idx: Vec<usize> = (0..pts.len())
                        .filter(|&i| same_quadrant(pts[i], quadrant_rep))
                        .collect();
                    idx.sort_by(|&a, &b| {
                        quadrant_key(pts[a])
                            .partial_cmp(&quadrant_key(pts[b]))
                            .expect("finite keys")
                    });
                    idx
                };
                for (i, o) in by_key(&inner).into_iter().zip(by_key(&outer)) {
                    ring_map[i] = o;
                }
            }
            (outer, ring_map)
        };

        let mut outer_to_inner = vec![usize::MAX; order];
        for (i, &o) in ring_map.iter().enumerate() {
            outer_to_inner[o] = i;
        }
        Ok(Self {
            order,
            bits_per_symbol,
            inner_power: mean_energy(&inner),
            outer_power: mean_energy(&outer),
            inner,
            outer,
            ring_map,
            outer_to_inner,
        })
    }

    /// Number of inner points `l`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Total number of points `q = 2l`.
    pub fn num_points(&self) -> usize {
        2 * self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Inner points, indexed by label.
    pub fn inner_points(&self) -> &[Complex64] {
        &self.inner
    }

    pub fn outer_points(&self) -> &[Complex64] {
        &self.outer
    }

    pub fn ring_map(&self) -> &[usize] {
        &self.ring_map
    }

    /// Point `idx` in the joint inner-then-outer indexing.
    pub fn point(&self, idx: usize) -> Complex64 {
        if idx < self.order {
            self.inner[idx]
        } else {
            self.outer[idx - self.order]
        }
    }

    /// Label of point `idx` in the joint indexing.
    pub fn point_label(&self, idx: usize) -> usize {
        if idx < self.order {
            idx
        } else {
            self.outer_to_inner[idx - self.order]
        }
    }

    pub fn is_outer_index(&self, idx: usize) -> bool {
        idx >= self.order
    }

    /// Outer representative `f(s)` of the inner point with the given label.
    pub fn representative(&self, label: usize) -> Complex64 {
        self.outer[self.ring_map[label]]
    }

    /// Joint index of the outer representative of `label`.
    pub fn representative_index(&self, label: usize) -> usize {
        self.order + self.ring_map[label]
    }

    /// Label of an inner point given by value, if it is one.
    pub fn inner_label_of(&self, point: Complex64) -> Option<usize> {
        self.inner.iter().position(|&s| s == point)
    }

    pub fn inner_power(&self) -> f64 {
        self.inner_power
    }

    pub fn outer_power(&self) -> f64 {
        self.outer_power
    }

    /// Largest point energy over both rings.
    pub fn peak_power(&self) -> f64 {
        self.inner
            .iter()
            .chain(&self.outer)
            .map(|s| s.norm_sqr())
            .fold(0.0, f64::max)
    }

    /// Mean transmitted energy when the outer ring is used with probability `pi_outer`.
    pub fn average_power(&self, pi_outer: f64) -> f64 {
        (1.0 - pi_outer) * self.inner_power + pi_outer * self.outer_power
    }

    /// Peak over the points actually used, divided by the average power.
    pub fn papr(&self, pi_outer: f64) -> f64 {
        let peak = |pts: &[Complex64]| pts.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
        let used_peak = if pi_outer <= 0.0 {
            peak(&self.inner)
        } else if pi_outer >= 1.0 {
            peak(&self.outer)
        } else {
            self.peak_power()
        };
        used_peak / self.average_power(pi_outer)
    }

    /// Prior over all `q` points in joint indexing: labels uniform, ring
    /// chosen with probability `pi_outer`.
    pub fn point_priors(&self, pi_outer: f64) -> Vec<f64> {
        let l = self.order as f64;
        let mut priors = vec![(1.0 - pi_outer) / l; self.order];
        priors.extend(std::iter::repeat_n(pi_outer / l, self.order));
        priors
    }

    pub fn bits_to_label(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::BitLength {
                expected: self.bits_per_symbol,
                actual: bits.len(),
            });
        }
        Ok(bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize))
    }

    pub fn bits_to_inner_point(&self, bits: &[u8]) -> Result<Complex64> {
        Ok(self.inner[self.bits_to_label(bits)?])
    }

    pub fn label_to_bits(&self, label: usize) -> Vec<u8> {
        label_bits(label, self.bits_per_symbol)
    }

    /// Bit label of any point of either ring.
    pub fn point_to_bits(&self, point: Complex64) -> Option<Vec<u8>> {
        (0..self.num_points())
            .find(|&i| self.point(i) == point)
            .map(|i| self.label_to_bits(self.point_label(i)))
    }

    /// Writes one row per point: `re im ring label`, ring being `inner` or `outer`.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "re\tim\tring\tlabel")?;
        for idx in 0..self.num_points() {
            let p = self.point(idx);
            let ring = if self.is_outer_index(idx) { "outer" } else { "inner" };
            let bits: String = self
                .label_to_bits(self.point_label(idx))
                .iter()
                .map(|b| if *b == 1 { '1' } else { '0' })
                .collect();
            writeln!(out, "{}\t{}\t{}\t{}", p.re, p.im, ring, bits)?;
        }
        Ok(())
    }
}
