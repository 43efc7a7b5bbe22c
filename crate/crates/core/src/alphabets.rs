//! ASK constellations and their binary labels.
//!
//! A `2^(m+1)`-ary ASK alphabet `{-M+1, ..., -1, 1, ..., M-1}` factors as
//! sign × amplitude. Points are kept in ascending order and addressed by
//! their index; amplitudes `{1, 3, ..., M-1}` likewise.
//!
//! Labels are `(m+1)`-bit strings `(S, B1, ..., Bm)`. The sign bit maps
//! `-1 ↔ 0` and `+1 ↔ 1`. Level 0 always denotes the sign bit and level `j`
//! (for `1 <= j <= m`) the amplitude bit `Bj`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported number of amplitude bits.
pub const MAX_AMPLITUDE_BITS: u32 = 6;

/// Sign of a channel input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Neg => -1,
            Sign::Pos => 1,
        }
    }

    /// Bit view of the sign: `-1 ↔ 0`, `+1 ↔ 1`.
    pub fn bit(self) -> u8 {
        match self {
            Sign::Neg => 0,
            Sign::Pos => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Sign {
        if bit == 0 {
            Sign::Neg
        } else {
            Sign::Pos
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
        }
    }
}

/// `M`-ASK alphabet with `M = 2^(m+1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AskConstellation {
    m: u32,
    points: Vec<i32>,
    amplitudes: Vec<i32>,
}

/// Builds the `2^(m+1)`-ary ASK constellation.
pub fn make_ask(m: u32) -> Result<AskConstellation> {
    AskConstellation::new(m)
}

impl AskConstellation {
    pub fn new(m: u32) -> Result<Self> {
        if m > MAX_AMPLITUDE_BITS {
            return Err(Error::Size(format!(
                "amplitude bits m = {m} exceeds the cap {MAX_AMPLITUDE_BITS}"
            )));
        }
        let order = 1i32 << (m + 1);
        let points = (0..order).map(|i| 2 * i - order + 1).collect();
        let amplitudes = (0..order / 2).map(|j| 2 * j + 1).collect();
        Ok(Self {
            m,
            points,
            amplitudes,
        })
    }

    /// Number of amplitude bits.
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Constellation size `M`.
    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn num_amplitudes(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn points(&self) -> &[i32] {
        &self.points
    }

    pub fn amplitudes(&self) -> &[i32] {
        &self.amplitudes
    }

    pub fn points_f64(&self) -> Vec<f64> {
        self.points.iter().map(|&x| x as f64).collect()
    }

    pub fn index_of(&self, x: i32) -> Option<usize> {
        let order = self.order() as i32;
        if x % 2 == 0 || x.abs() > order - 1 {
            return None;
        }
        Some(((x + order - 1) / 2) as usize)
    }

    pub fn amplitude_index_of(&self, a: i32) -> Option<usize> {
        if a <= 0 || a % 2 == 0 || a as usize > self.order() - 1 {
            return None;
        }
        Some(((a - 1) / 2) as usize)
    }

    /// Index of the point `sign × amplitudes[amp_index]`.
    pub fn point_index(&self, sign: Sign, amp_index: usize) -> usize {
        let half = self.num_amplitudes();
        match sign {
            Sign::Pos => half + amp_index,
            Sign::Neg => half - 1 - amp_index,
        }
    }

    pub fn amplitude_index(&self, point_index: usize) -> usize {
        let half = self.num_amplitudes();
        if point_index >= half {
            point_index - half
        } else {
            half - 1 - point_index
        }
    }

    pub fn sign_of(&self, point_index: usize) -> Sign {
        if point_index >= self.num_amplitudes() {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    /// Splits a point into `(sign, amplitude)`.
    pub fn split(&self, x: i32) -> Result<(Sign, i32)> {
        if self.index_of(x).is_none() {
            return Err(Error::Domain(format!(
                "{x} is not a point of {}-ASK",
                self.order()
            )));
        }
        let sign = if x > 0 { Sign::Pos } else { Sign::Neg };
        Ok((sign, x.abs()))
    }

    /// Inverse of [`split`](Self::split).
    pub fn compose(&self, sign: Sign, a: i32) -> Result<i32> {
        if self.amplitude_index_of(a).is_none() {
            return Err(Error::Domain(format!(
                "{a} is not an amplitude of {}-ASK",
                self.order()
            )));
        }
        Ok(sign.value() * a)
    }
}

/// Binary label of one point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    pub sign: Sign,
    /// Amplitude bits `(B1, ..., Bm)`.
    pub bits: Vec<u8>,
}

/// Bijection between points and labels `(S, B1, ..., Bm)`.
///
/// Codes are packed into a `u32`: bit `m` holds `S`, bit `m - j` holds `Bj`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    m: u32,
    codes: Vec<u32>,
    backward: Vec<usize>,
}

/// Binary reflected Gray code labeling over the ascending point order.
pub fn brgc_label(constellation: &AskConstellation) -> LabelMap {
    let codes = (0..constellation.order() as u32)
        .map(|i| i ^ (i >> 1))
        .collect();
    LabelMap::from_codes(constellation, codes).expect("reflected Gray code is a valid labeling")
}

impl LabelMap {
    /// Builds a labeling from one packed code per point (ascending order).
    ///
    /// The code must be a bijection onto `{0,1}^(m+1)`, the sign bit must
    /// match the sign of the point and a point and its negation must carry
    /// the same amplitude bits.
    pub fn from_codes(constellation: &AskConstellation, codes: Vec<u32>) -> Result<Self> {
        let order = constellation.order();
        let m = constellation.m();
        if codes.len() != order {
            return Err(Error::Shape(format!(
                "{} codes for {order} points",
                codes.len()
            )));
        }
        let mut backward = vec![usize::MAX; order];
        for (i, &c) in codes.iter().enumerate() {
            if c as usize >= order || backward[c as usize] != usize::MAX {
                return Err(Error::Domain(format!("code {c} is repeated or too wide")));
            }
            backward[c as usize] = i;
            let sign = Sign::from_bit(((c >> m) & 1) as u8);
            if sign != constellation.sign_of(i) {
                return Err(Error::Domain(format!(
                    "sign bit of code {c} disagrees with point {}",
                    constellation.points()[i]
                )));
            }
        }
        let amp_mask = (1u32 << m) - 1;
        for i in 0..order {
            if codes[i] & amp_mask != codes[order - 1 - i] & amp_mask {
                return Err(Error::Domain(format!(
                    "points {} and {} carry different amplitude bits",
                    constellation.points()[i],
                    constellation.points()[order - 1 - i]
                )));
            }
        }
        Ok(Self { m, codes, backward })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of bit levels, `m + 1`.
    pub fn levels(&self) -> usize {
        self.m as usize + 1
    }

    pub fn order(&self) -> usize {
        self.codes.len()
    }

    pub fn code(&self, point_index: usize) -> u32 {
        self.codes[point_index]
    }

    pub fn point_of_code(&self, code: u32) -> usize {
        self.backward[code as usize]
    }

    pub fn forward(&self, point_index: usize) -> Label {
        let c = self.codes[point_index];
        Label {
            sign: Sign::from_bit(((c >> self.m) & 1) as u8),
            bits: (1..=self.m)
                .map(|j| ((c >> (self.m - j)) & 1) as u8)
                .collect(),
        }
    }

    pub fn backward(&self, label: &Label) -> Result<usize> {
        if label.bits.len() != self.m as usize || label.bits.iter().any(|&b| b > 1) {
            return Err(Error::Domain(format!(
                "label needs {} binary amplitude bits",
                self.m
            )));
        }
        let mut c = (label.sign.bit() as u32) << self.m;
        for (j, &b) in label.bits.iter().enumerate() {
            c |= (b as u32) << (self.m as usize - 1 - j);
        }
        Ok(self.backward[c as usize])
    }

    /// Bit of `point_index` at `level` (0 = sign, j = Bj).
    pub fn bit(&self, point_index: usize, level: usize) -> u8 {
        ((self.codes[point_index] >> (self.m as usize - level)) & 1) as u8
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level > self.m as usize {
            return Err(Error::Level {
                level,
                max: self.m as usize,
            });
        }
        Ok(())
    }

    /// Packed amplitude bits `(B1..Bm)` of the amplitude with index `amp_index`.
    pub fn amplitude_code(&self, amp_index: usize) -> u32 {
        let half = self.order() / 2;
        self.codes[half + amp_index] & ((1u32 << self.m) - 1)
    }

    /// Amplitude index addressed by packed amplitude bits; the map `f(b)`.
    pub fn amplitude_of_code(&self, amp_code: u32) -> usize {
        let half = self.order() / 2;
        let point = self.backward[((1u32 << self.m) | amp_code) as usize];
        point - half
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eight_ask_points() {
        let c = make_ask(2).unwrap();
        assert_eq!(c.points(), &[-7, -5, -3, -1, 1, 3, 5, 7]);
        assert_eq!(c.amplitudes(), &[1, 3, 5, 7]);
    }

    #[test]
    fn binary_and_four_ask() {
        let c = make_ask(0).unwrap();
        assert_eq!(c.points(), &[-1, 1]);
        assert_eq!(c.amplitudes(), &[1]);
        let c = make_ask(1).unwrap();
        assert_eq!(c.points(), &[-3, -1, 1, 3]);
        assert_eq!(c.amplitudes(), &[1, 3]);
    }

    #[test]
    fn oversized_m_rejected() {
        assert!(matches!(make_ask(7), Err(Error::Size(_))));
        assert!(make_ask(6).is_ok());
    }

    #[test]
    fn table_one_examples() {
        let c = make_ask(2).unwrap();
        let l = brgc_label(&c);
        let lab = l.forward(c.index_of(-7).unwrap());
        assert_eq!(lab.sign, Sign::Neg);
        assert_eq!(lab.bits, vec![0, 0]);
        let lab = l.forward(c.index_of(3).unwrap());
        assert_eq!(lab.sign, Sign::Pos);
        assert_eq!(lab.bits, vec![1, 1]);
    }

    #[test]
    fn binary_label_has_no_amplitude_bits() {
        let c = make_ask(0).unwrap();
        let l = brgc_label(&c);
        let lab = l.forward(c.index_of(1).unwrap());
        assert_eq!(lab.sign, Sign::Pos);
        assert!(lab.bits.is_empty());
    }

    #[test]
    fn split_examples() {
        let c = make_ask(2).unwrap();
        assert_eq!(c.split(-5).unwrap(), (Sign::Neg, 5));
        assert_eq!(c.split(1).unwrap(), (Sign::Pos, 1));
        assert!(matches!(c.split(2), Err(Error::Domain(_))));
        assert!(matches!(c.split(9), Err(Error::Domain(_))));
        for &x in c.points() {
            let (s, a) = c.split(x).unwrap();
            assert_eq!(c.compose(s, a).unwrap(), x);
        }
    }

    #[test]
    fn from_codes_rejects_non_bijection() {
        let c = make_ask(1).unwrap();
        assert!(LabelMap::from_codes(&c, vec![0, 1, 3, 3]).is_err());
        // sign bit wrong
        assert!(LabelMap::from_codes(&c, vec![2, 3, 1, 0]).is_err());
        // natural binary breaks the shared-amplitude-bit rule
        assert!(LabelMap::from_codes(&c, vec![0, 1, 2, 3]).is_err());
        assert!(LabelMap::from_codes(&c, vec![1, 0, 2, 3]).is_ok());
    }

    #[test]
    fn level_range() {
        let l = brgc_label(&make_ask(2).unwrap());
        assert!(l.check_level(2).is_ok());
        assert_eq!(l.check_level(3), Err(Error::Level { level: 3, max: 2 }));
    }

    proptest! {
        #[test]
        fn factorization_invariants(m in 0u32..=6) {
            let c = make_ask(m).unwrap();
            let l = brgc_label(&c);
            prop_assert_eq!(c.order(), 1usize << (m + 1));
            prop_assert!(c.amplitudes().windows(2).all(|w| w[0] < w[1]));
            for (i, &x) in c.points().iter().enumerate() {
                prop_assert_eq!(c.points()[c.order() - 1 - i], -x);
                let (s, a) = c.split(x).unwrap();
                prop_assert_eq!(c.compose(s, a).unwrap(), x);
                prop_assert_eq!(c.split(-x).unwrap(), (s.flip(), a));
                prop_assert_eq!(c.point_index(s, c.amplitude_index(i)), i);
                let lab = l.forward(i);
                prop_assert_eq!(l.backward(&lab).unwrap(), i);
                let neg = l.forward(c.order() - 1 - i);
                prop_assert_eq!(neg.bits, lab.bits);
                prop_assert_eq!(neg.sign, lab.sign.flip());
                let ai = c.amplitude_index(i);
                prop_assert_eq!(l.amplitude_of_code(l.amplitude_code(ai)), ai);
            }
        }
    }
}
