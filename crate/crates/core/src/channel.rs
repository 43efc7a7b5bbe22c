//! Discrete memoryless channels.
//!
//! [`Dmc`] holds a row-stochastic matrix `p(y|x)` together with the input
//! points it was built for. The AWGN channel is turned into a DMC by uniform
//! output quantization; see [`quantize_awgn`].

use serde::{Deserialize, Serialize};

use crate::alphabets::{AskConstellation, LabelMap};
use crate::infomeasures::Pmf;
use crate::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Row-stochastic transition matrix `p(y|x)`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DmcDoc", into = "DmcDoc")]
pub struct Dmc {
    nin: usize,
    nout: usize,
    w: Vec<f64>,
    input_points: Vec<f64>,
}

/// JSON document form `{nin, nout, w, input_points}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DmcDoc {
    nin: usize,
    nout: usize,
    w: Vec<f64>,
    input_points: Vec<f64>,
}

impl TryFrom<DmcDoc> for Dmc {
    type Error = Error;
    fn try_from(d: DmcDoc) -> Result<Self> {
        Dmc::new(d.nin, d.nout, d.w, d.input_points)
    }
}

impl From<Dmc> for DmcDoc {
    fn from(d: Dmc) -> Self {
        DmcDoc {
            nin: d.nin,
            nout: d.nout,
            w: d.w,
            input_points: d.input_points,
        }
    }
}

impl Dmc {
    /// Validates and wraps a row-major transition matrix.
    pub fn new(nin: usize, nout: usize, w: Vec<f64>, input_points: Vec<f64>) -> Result<Self> {
        if nin == 0 || nout == 0 {
            return Err(Error::Size(
                "channel needs at least one input and output".into(),
            ));
        }
        if w.len() != nin * nout {
            return Err(Error::Shape(format!(
                "{} entries for a {nin}x{nout} matrix",
                w.len()
            )));
        }
        if input_points.len() != nin {
            return Err(Error::Shape(format!(
                "{} input points for {nin} inputs",
                input_points.len()
            )));
        }
        for (x, row) in w.chunks(nout).enumerate() {
            if row.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::Domain(format!(
                    "row {x} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(Error::Domain(format!("row {x} sums to {s}")));
            }
        }
        Ok(Self {
            nin,
            nout,
            w,
            input_points,
        })
    }

    /// Builds a channel from rows, renormalizing each row.
    pub fn from_rows(rows: &[Vec<f64>], input_points: Vec<f64>) -> Result<Self> {
        let nin = rows.len();
        let nout = rows.first().map_or(0, Vec::len);
        let mut w = Vec::with_capacity(nin * nout);
        for row in rows {
            if row.len() != nout {
                return Err(Error::Shape("ragged transition rows".into()));
            }
            let s: f64 = row.iter().sum();
            if !(s > 0.0) || row.iter().any(|&v| v < 0.0) {
                return Err(Error::Domain(
                    "row is not a nonnegative nonzero vector".into(),
                ));
            }
            w.extend(row.iter().map(|v| v / s));
        }
        Dmc::new(nin, nout, w, input_points)
    }

    /// Noiseless channel `y = x` over the given inputs.
    pub fn identity(input_points: Vec<f64>) -> Self {
        let n = input_points.len();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        Dmc::new(n, n, w, input_points).expect("identity is stochastic")
    }

    /// Every input reaches output `i` and output `(i + offset) mod nin`
    /// with probability 1/2 each.
    pub fn cyclic_pairs(input_points: Vec<f64>, offset: usize) -> Result<Self> {
        let n = input_points.len();
        if offset.is_multiple_of(n) {
            return Err(Error::Domain(
                "offset must not be a multiple of the input count".into(),
            ));
        }
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 0.5;
            w[i * n + (i + offset) % n] = 0.5;
        }
        Dmc::new(n, n, w, input_points)
    }

    pub fn nin(&self) -> usize {
        self.nin
    }

    pub fn nout(&self) -> usize {
        self.nout
    }

    pub fn input_points(&self) -> &[f64] {
        &self.input_points
    }

    pub fn matrix(&self) -> &[f64] {
        &self.w
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.w[x * self.nout..(x + 1) * self.nout]
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.nout + y]
    }

    /// Same channel with output columns reordered: new column `k` is old
    /// column `perm[k]`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.nout {
            return Err(Error::Shape("permutation length".into()));
        }
        let mut w = Vec::with_capacity(self.w.len());
        for x in 0..self.nin {
            let row = self.row(x);
            w.extend(perm.iter().map(|&k| row[k]));
        }
        Dmc::new(self.nin, self.nout, w, self.input_points.clone())
    }

    /// Cumulative rows for inverse-CDF sampling.
    pub fn sampler(&self) -> DmcSampler {
        let mut cdf = Vec::with_capacity(self.w.len());
        for x in 0..self.nin {
            let mut acc = 0.0;
            for &v in self.row(x) {
                acc += v;
                cdf.push(acc);
            }
        }
        DmcSampler {
            nout: self.nout,
            cdf,
        }
    }
}

/// Inverse-CDF output sampler built by [`Dmc::sampler`].
#[derive(Debug, Clone)]
pub struct DmcSampler {
    nout: usize,
    cdf: Vec<f64>,
}

impl DmcSampler {
    /// Output drawn for input `x` given a uniform variate `u ∈ [0, 1)`.
    pub fn sample(&self, x: usize, u: f64) -> usize {
        let row = &self.cdf[x * self.nout..(x + 1) * self.nout];
        let u = u * row[self.nout - 1];
        // first output whose cumulative mass exceeds u; never a zero-mass output
        let k = row.partition_point(|&c| c <= u);
        if k < self.nout {
            k
        } else {
            row.partition_point(|&c| c < row[self.nout - 1])
        }
    }
}

/// AWGN quantizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwgnSpec {
    /// `10 log10(E[X²]/σ²)`.
    pub snr_db: f64,
    /// Number of output bins (the outermost two are unbounded).
    #[serde(default = "default_bins")]
    pub num_bins: usize,
    /// Half-range beyond the extreme points, in noise standard deviations.
    #[serde(default = "default_clip")]
    pub clip_sigmas: f64,
}

fn default_bins() -> usize {
    2000
}

fn default_clip() -> f64 {
    6.0
}

impl AwgnSpec {
    pub fn new(snr_db: f64) -> Self {
        Self {
            snr_db,
            num_bins: default_bins(),
            clip_sigmas: default_clip(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_bins < 2 {
            return Err(Error::Size(format!("num_bins = {} < 2", self.num_bins)));
        }
        if !(self.clip_sigmas > 0.0) || !self.clip_sigmas.is_finite() {
            return Err(Error::Domain(format!("clip_sigmas = {}", self.clip_sigmas)));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Domain(format!("snr_db = {}", self.snr_db)));
        }
        Ok(())
    }
}

/// Quantization grid shared by [`awgn_dmc`] and [`quantize_awgn`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantizer {
    #[serde(default = "default_bins")]
    pub num_bins: usize,
    #[serde(default = "default_clip")]
    pub clip_sigmas: f64,
}

impl Default for Quantizer {
    fn default() -> Self {
        Self {
            num_bins: default_bins(),
            clip_sigmas: default_clip(),
        }
    }
}

impl Quantizer {
    pub fn validate(&self) -> Result<()> {
        AwgnSpec {
            snr_db: 0.0,
            num_bins: self.num_bins,
            clip_sigmas: self.clip_sigmas,
        }
        .validate()
    }
}

/// Standard normal upper tail `Q(t)`.
fn q_func(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// Gaussian measure of `(lo, hi]` for mean `mu`, deviation `sigma`.
fn gauss_mass(lo: f64, hi: f64, mu: f64, sigma: f64) -> f64 {
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    // difference of tails on the side that keeps precision
    if a >= 0.0 {
        q_func(a) - q_func(b)
    } else if b <= 0.0 {
        q_func(-b) - q_func(-a)
    } else {
        1.0 - q_func(-a) - q_func(b)
    }
}

/// Quantized AWGN channel for arbitrary real input points and noise
/// deviation `sigma`.
///
/// Bin edges are uniform over `[min − clip·σ, max + clip·σ]`; the first and
/// last bin extend to ∓∞.
pub fn awgn_dmc(points: &[f64], sigma: f64, quantizer: &Quantizer) -> Result<Dmc> {
    quantizer.validate()?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("noise deviation σ = {sigma}")));
    }
    if points.is_empty() {
        return Err(Error::Size("no input points".into()));
    }
    let nb = quantizer.num_bins;
    let lo = points.iter().cloned().fold(f64::INFINITY, f64::min) - quantizer.clip_sigmas * sigma;
    let hi =
        points.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + quantizer.clip_sigmas * sigma;
    let width = (hi - lo) / nb as f64;
    let edge = |k: usize| -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else if k == nb {
            f64::INFINITY
        } else {
            lo + width * k as f64
        }
    };
    let mut w = Vec::with_capacity(points.len() * nb);
    for &x in points {
        let start = w.len();
        for k in 0..nb {
            w.push(gauss_mass(edge(k), edge(k + 1), x, sigma).max(0.0));
        }
        let s: f64 = w[start..].iter().sum();
        for v in &mut w[start..] {
            *v /= s;
        }
    }
    Dmc::new(points.len(), nb, w, points.to_vec())
}

/// Quantizes the AWGN channel for `constellation`, with σ chosen so that
/// `E[X²]/σ²` under `power_pmf` equals the requested SNR.
pub fn quantize_awgn(
    constellation: &AskConstellation,
    spec: &AwgnSpec,
    power_pmf: &Pmf,
) -> Result<Dmc> {
    spec.validate()?;
    let points = constellation.points_f64();
    if power_pmf.len() != points.len() {
        return Err(Error::Shape(format!(
            "power pmf has {} entries for {} points",
            power_pmf.len(),
            points.len()
        )));
    }
    let energy: f64 = power_pmf
        .probs()
        .iter()
        .zip(&points)
        .map(|(p, x)| p * x * x)
        .sum();
    let sigma = (energy / 10f64.powf(spec.snr_db / 10.0)).sqrt();
    if !sigma.is_finite() || !(sigma > 0.0) {
        return Err(Error::Domain(format!("noise deviation σ = {sigma}")));
    }
    awgn_dmc(
        &points,
        sigma,
        &Quantizer {
            num_bins: spec.num_bins,
            clip_sigmas: spec.clip_sigmas,
        },
    )
}

fn check_sequences(dmc: &Dmc, x_seq: &[usize], y_seq: &[usize]) -> Result<()> {
    if x_seq.len() != y_seq.len() {
        return Err(Error::Shape(format!(
            "input length {} != output length {}",
            x_seq.len(),
            y_seq.len()
        )));
    }
    if x_seq.iter().any(|&x| x >= dmc.nin()) || y_seq.iter().any(|&y| y >= dmc.nout()) {
        return Err(Error::Domain("symbol index out of range".into()));
    }
    Ok(())
}

/// `log2 p(y|x)` of a sequence pair; `-∞` when some factor is zero.
pub fn sequence_log2_likelihood(dmc: &Dmc, x_seq: &[usize], y_seq: &[usize]) -> Result<f64> {
    check_sequences(dmc, x_seq, y_seq)?;
    let mut acc = 0.0;
    for (&x, &y) in x_seq.iter().zip(y_seq) {
        let p = dmc.prob(x, y);
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += p.log2();
    }
    Ok(acc)
}

/// `p(y|x) = ∏ p(y_i|x_i)`, accumulated in the log domain.
pub fn sequence_likelihood(dmc: &Dmc, x_seq: &[usize], y_seq: &[usize]) -> Result<f64> {
    let l = sequence_log2_likelihood(dmc, x_seq, y_seq)?;
    Ok(if l == f64::NEG_INFINITY {
        0.0
    } else {
        l.exp2()
    })
}

/// Marginal view of one bit level of a labeled channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BitChannel {
    /// `p(c_i)` over `{0, 1}`.
    pub prior: [f64; 2],
    /// `p(y|c_i)` as two rows of length `nout`; a row is all zero when its
    /// prior is zero.
    pub w: [Vec<f64>; 2],
}

/// Marginalizes `p(x) p(y|x)` onto bit level `level` (0 = sign).
pub fn bit_channel(
    dmc: &Dmc,
    labels: &LabelMap,
    input_pmf: &Pmf,
    level: usize,
) -> Result<BitChannel> {
    labels.check_level(level)?;
    if labels.order() != dmc.nin() || input_pmf.len() != dmc.nin() {
        return Err(Error::Shape(
            "labeling, pmf and channel sizes differ".into(),
        ));
    }
    let nout = dmc.nout();
    let mut prior = [0.0; 2];
    let mut w = [vec![0.0; nout], vec![0.0; nout]];
    for (x, &px) in input_pmf.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let b = labels.bit(x, level) as usize;
        prior[b] += px;
        for (acc, &v) in w[b].iter_mut().zip(dmc.row(x)) {
            *acc += px * v;
        }
    }
    for b in 0..2 {
        if prior[b] > 0.0 {
            let s: f64 = w[b].iter().sum();
            for v in &mut w[b] {
                *v /= s;
            }
        }
    }
    Ok(BitChannel { prior, w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabets::{brgc_label, make_ask};
    use crate::infomeasures::mutual_information;
    use proptest::prelude::*;

    fn row_sums_ok(d: &Dmc) -> bool {
        (0..d.nin()).all(|x| (d.row(x).iter().sum::<f64>() - 1.0).abs() <= 1e-12)
    }

    #[test]
    fn rows_stochastic() {
        for m in 0..3 {
            let c = make_ask(m).unwrap();
            for &snr in &[-10.0, 0.0, 5.0, 20.0] {
                let d = quantize_awgn(&c, &AwgnSpec::new(snr), &Pmf::uniform(c.order())).unwrap();
                assert!(row_sums_ok(&d));
                assert!(d.matrix().iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn high_snr_four_ask_reaches_two_bits() {
        let c = make_ask(1).unwrap();
        let u = Pmf::uniform(4);
        let d = quantize_awgn(&c, &AwgnSpec::new(30.0), &u).unwrap();
        let mi = mutual_information(&u, &d).unwrap();
        assert!((mi - 2.0).abs() < 1e-3, "{mi}");
    }

    #[test]
    fn quantization_converges() {
        let c = make_ask(1).unwrap();
        let u = Pmf::uniform(4);
        let mut spec = AwgnSpec::new(5.0);
        spec.num_bins = 1000;
        let coarse = mutual_information(&u, &quantize_awgn(&c, &spec, &u).unwrap()).unwrap();
        spec.num_bins = 2000;
        let fine = mutual_information(&u, &quantize_awgn(&c, &spec, &u).unwrap()).unwrap();
        assert!((fine - coarse).abs() < 1e-4);
    }

    #[test]
    fn mi_monotone_along_bin_doubling() {
        let c = make_ask(1).unwrap();
        let u = Pmf::uniform(4);
        let mut last = 0.0;
        for bins in [2usize, 4, 8, 16, 32, 64, 128, 256, 512, 1024] {
            let mut spec = AwgnSpec::new(3.0);
            spec.num_bins = bins;
            let mi = mutual_information(&u, &quantize_awgn(&c, &spec, &u).unwrap()).unwrap();
            assert!(mi + 1e-9 >= last, "bins {bins}: {mi} < {last}");
            last = mi;
        }
    }

    #[test]
    fn quantizer_errors() {
        let c = make_ask(1).unwrap();
        let mut spec = AwgnSpec::new(5.0);
        spec.num_bins = 1;
        assert!(matches!(
            quantize_awgn(&c, &spec, &Pmf::uniform(4)),
            Err(Error::Size(_))
        ));
        let spec = AwgnSpec::new(f64::INFINITY);
        assert!(matches!(
            quantize_awgn(&c, &spec, &Pmf::uniform(4)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn likelihood_examples() {
        let id = Dmc::identity(vec![0.0, 1.0, 2.0]);
        assert_eq!(
            sequence_likelihood(&id, &[0, 2, 1], &[0, 2, 1]).unwrap(),
            1.0
        );
        assert_eq!(
            sequence_likelihood(&id, &[0, 2, 1], &[0, 2, 2]).unwrap(),
            0.0
        );
        let d = Dmc::new(2, 2, vec![0.9, 0.1, 0.2, 0.8], vec![-1.0, 1.0]).unwrap();
        let p = sequence_likelihood(&d, &[0, 1], &[0, 0]).unwrap();
        assert!((p - 0.18).abs() < 1e-15);
        assert!(matches!(
            sequence_likelihood(&d, &[0], &[0, 1]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn bit_channel_examples() {
        let c = make_ask(0).unwrap();
        let l = brgc_label(&c);
        let d = quantize_awgn(&c, &AwgnSpec::new(2.0), &Pmf::uniform(2)).unwrap();
        let bc = bit_channel(&d, &l, &Pmf::uniform(2), 0).unwrap();
        assert_eq!(bc.prior, [0.5, 0.5]);
        for b in 0..2 {
            for (u, v) in bc.w[b].iter().zip(d.row(b)) {
                assert!((u - v).abs() <= 1e-12 * v + 1e-300);
            }
        }

        let c = make_ask(1).unwrap();
        let l = brgc_label(&c);
        let d = Dmc::identity(c.points_f64());
        for level in 0..2 {
            let bc = bit_channel(&d, &l, &Pmf::uniform(4), level).unwrap();
            assert_eq!(bc.prior, [0.5, 0.5]);
        }
        // p(a) = (0.8, 0.2) with uniform sign: BRGC gives B1 = 1 on amplitude 1
        let p = Pmf::new(vec![0.1, 0.4, 0.4, 0.1]).unwrap();
        let bc = bit_channel(&d, &l, &p, 1).unwrap();
        assert!((bc.prior[1] - 0.8).abs() < 1e-15 && (bc.prior[0] - 0.2).abs() < 1e-15);
        assert!(matches!(
            bit_channel(&d, &l, &p, 2),
            Err(Error::Level { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let d = Dmc::new(2, 3, vec![0.5, 0.25, 0.25, 0.0, 0.1, 0.9], vec![-1.0, 1.0]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.starts_with("{\"nin\":2,\"nout\":3,\"w\":"));
        let back: Dmc = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"nin":1,"nout":2,"w":[0.5,0.4],"input_points":[0]}"#;
        assert!(serde_json::from_str::<Dmc>(bad).is_err());
        let extra = r#"{"nin":1,"nout":1,"w":[1],"input_points":[0],"x":1}"#;
        assert!(serde_json::from_str::<Dmc>(extra).is_err());
    }

    #[test]
    fn sampler_follows_rows() {
        let d = Dmc::new(1, 4, vec![0.25, 0.0, 0.5, 0.25], vec![0.0]).unwrap();
        let s = d.sampler();
        assert_eq!(s.sample(0, 0.0), 0);
        assert_eq!(s.sample(0, 0.2499), 0);
        assert_eq!(s.sample(0, 0.25), 2);
        assert_eq!(s.sample(0, 0.7), 2);
        assert_eq!(s.sample(0, 0.99), 3);
    }

    proptest! {
        #[test]
        fn likelihood_factorizes(
            xs in proptest::collection::vec(0usize..2, 1..12),
            ys in proptest::collection::vec(0usize..3, 12),
            split in 0usize..12,
        ) {
            let d = Dmc::new(2, 3, vec![0.5, 0.3, 0.2, 0.1, 0.6, 0.3], vec![-1.0, 1.0]).unwrap();
            let ys = &ys[..xs.len()];
            let k = split.min(xs.len());
            let whole = sequence_likelihood(&d, &xs, ys).unwrap();
            let parts = sequence_likelihood(&d, &xs[..k], &ys[..k]).unwrap()
                * sequence_likelihood(&d, &xs[k..], &ys[k..]).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-300));
        }
    }
}
