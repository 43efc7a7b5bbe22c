//! Random sign-coding with joint-typicality decoding.
//!
//! Amplitude sequences come from a B-typical shaping layer. Each codeword
//! carries `n1` information signs `s′(m_s)` followed by `n2 = n − n1` signs
//! `s″(m_a, m_s)` drawn from a random code. Receivers search all message
//! pairs for tuples jointly typical with the channel output, either with the
//! symbol metric (SMD) or with per-bit metrics (BMD).
//!
//! Randomness comes from ChaCha8 streams of a single seed: stream 0 draws
//! the codebook and stream `t + 1` drives trial `t`, so Monte Carlo results
//! do not depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alphabets::{brgc_label, AskConstellation, LabelMap, Sign};
use crate::channel::{bit_channel, quantize_awgn, AwgnSpec, Dmc};
use crate::infomeasures::{entropy, Pmf};
use crate::typicality::{enumerate_b_typical, lemma1_from_set, MultiJoint, TypConfig};
use crate::{par, Error, Result};

/// Which receiver the shaping layer is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Smd,
    Bmd,
}

/// Generation rule of the redundant signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeMode {
    /// Every `s″(m_a, m_s)` is drawn uniformly and independently.
    Iid,
    /// `s″` is a random binary affine map of the amplitude bits and `s′`.
    Linear,
}

/// Shaped, uncoded amplitude sequences indexed by `m_a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapingLayer {
    pub kind: Decoder,
    pub n: usize,
    pub eps: f64,
    /// Source pmf over the layer alphabet: amplitudes (SMD) or packed
    /// amplitude bit tuples (BMD).
    pub source: Pmf,
    /// Layer sequences over the source alphabet, in lexicographic order.
    pub sequences: Vec<Vec<usize>>,
    /// The same sequences mapped to amplitude indices.
    pub amplitudes: Vec<Vec<usize>>,
    /// Whether the B-set was computed without Monte Carlo estimates.
    pub exact: bool,
    /// Joint typical mass reached `1 − ε²`.
    pub large_n_proxy: bool,
}

impl ShapingLayer {
    /// `M_a`.
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Transition `p(s, y | u) = ½ W(y | s·f(u))` with `V = (S, Y)` flattened as
/// `s_bit · |Y| + y`.
fn sign_output_transition(
    constellation: &AskConstellation,
    dmc: &Dmc,
    amp_of: &[usize],
) -> Result<Dmc> {
    let nout = dmc.nout();
    let mut w = Vec::with_capacity(amp_of.len() * 2 * nout);
    for &a in amp_of {
        for sign in [Sign::Neg, Sign::Pos] {
            w.extend(
                dmc.row(constellation.point_index(sign, a))
                    .iter()
                    .map(|v| 0.5 * v),
            );
        }
    }
    Dmc::new(
        amp_of.len(),
        2 * nout,
        w,
        (0..amp_of.len()).map(|i| i as f64).collect(),
    )
}

fn check_channel(constellation: &AskConstellation, dmc: &Dmc) -> Result<()> {
    if dmc.nin() != constellation.order() {
        return Err(Error::Shape(format!(
            "channel has {} inputs, constellation has {} points",
            dmc.nin(),
            constellation.order()
        )));
    }
    Ok(())
}

fn build_layer(
    kind: Decoder,
    constellation: &AskConstellation,
    source: &Pmf,
    amp_of: Vec<usize>,
    dmc: &Dmc,
    config: &TypConfig,
) -> Result<ShapingLayer> {
    check_channel(constellation, dmc)?;
    let transition = sign_output_transition(constellation, dmc, &amp_of)?;
    let b = enumerate_b_typical(source, &transition, config)?;
    if b.is_empty() {
        return Err(Error::Config(format!(
            "empty B-typical set at n = {}, ε = {}; increase ε or n",
            config.n, config.eps
        )));
    }
    let sequences: Vec<Vec<usize>> = (0..b.len()).map(|i| b.sequence(i)).collect();
    let amplitudes = sequences
        .iter()
        .map(|s| s.iter().map(|&u| amp_of[u]).collect())
        .collect();
    Ok(ShapingLayer {
        kind,
        n: config.n,
        eps: config.eps,
        source: source.clone(),
        sequences,
        amplitudes,
        exact: b.exact,
        large_n_proxy: lemma1_from_set(&b).large_n_proxy,
    })
}

/// Layer of amplitude sequences in `B_{SY,ε}(A)` with uniform signs.
pub fn build_shaping_layer_smd(
    constellation: &AskConstellation,
    amplitude_pmf: &Pmf,
    dmc: &Dmc,
    config: &TypConfig,
) -> Result<ShapingLayer> {
    if amplitude_pmf.len() != constellation.num_amplitudes() {
        return Err(Error::Shape(
            "amplitude pmf does not match the constellation".into(),
        ));
    }
    let amp_of = (0..constellation.num_amplitudes()).collect();
    build_layer(
        Decoder::Smd,
        constellation,
        amplitude_pmf,
        amp_of,
        dmc,
        config,
    )
}

/// Pmf of packed amplitude bit tuples induced by an amplitude pmf.
pub fn bit_tuple_pmf(labels: &LabelMap, amplitude_pmf: &Pmf) -> Result<Pmf> {
    let na = labels.order() / 2;
    if amplitude_pmf.len() != na {
        return Err(Error::Shape(
            "amplitude pmf does not match the labeling".into(),
        ));
    }
    Pmf::new(
        (0..na as u32)
            .map(|b| amplitude_pmf.probs()[labels.amplitude_of_code(b)])
            .collect(),
    )
}

/// Layer of bit-tuple sequences in `B_{SY,ε}(B₁⋯B_m)`, mapped to amplitudes
/// through the labeling.
pub fn build_shaping_layer_bmd(
    constellation: &AskConstellation,
    bit_pmf: &Pmf,
    labels: &LabelMap,
    dmc: &Dmc,
    config: &TypConfig,
) -> Result<ShapingLayer> {
    let na = constellation.num_amplitudes();
    if bit_pmf.len() != na || labels.order() != constellation.order() {
        return Err(Error::Shape(
            "bit pmf or labeling does not match the constellation".into(),
        ));
    }
    let amp_of = (0..na as u32)
        .map(|b| labels.amplitude_of_code(b))
        .collect();
    build_layer(Decoder::Bmd, constellation, bit_pmf, amp_of, dmc, config)
}

/// Codebook of sign sequences for every message pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignCodebook {
    pub n1: usize,
    pub n2: usize,
    pub mode: CodeMode,
    pub m_a: usize,
    pub seed: u64,
    /// Sign bits of codeword `m_a · M_s + m_s`; bit `t` is position `t`
    /// (1 for a positive sign).
    table: Vec<u64>,
    /// Linear mode: generator rows over (amplitude bits, `s′`) and offset.
    generator: Option<(Vec<u128>, u64)>,
}

impl SignCodebook {
    /// `M_s = 2^{n1}`.
    pub fn m_s(&self) -> usize {
        1 << self.n1
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn word(&self, m_a: usize, m_s: usize) -> u64 {
        self.table[m_a * self.m_s() + m_s]
    }

    /// Signs of codeword `(m_a, m_s)` as bits (0 = negative).
    pub fn signs(&self, m_a: usize, m_s: usize) -> Vec<usize> {
        let w = self.word(m_a, m_s);
        (0..self.n()).map(|t| (w >> t & 1) as usize).collect()
    }

    /// `s″` bits of a codeword.
    pub fn redundant(&self, m_a: usize, m_s: usize) -> u64 {
        self.word(m_a, m_s) >> self.n1
    }

    /// Linear mode only: `G·v` without the offset for an input vector `v`.
    pub fn linear_map(&self, input: u128) -> Option<u64> {
        self.generator
            .as_ref()
            .map(|(rows, _)| apply_rows(rows, input))
    }
}

fn apply_rows(rows: &[u128], input: u128) -> u64 {
    rows.iter().enumerate().fold(0u64, |acc, (r, g)| {
        acc | (((g & input).count_ones() & 1) as u64) << r
    })
}

/// Information signs: the bits of `m_s`, most significant first.
fn info_bits(m_s: usize, n1: usize) -> u64 {
    (0..n1).fold(0u64, |acc, t| acc | ((m_s >> (n1 - 1 - t) & 1) as u64) << t)
}

/// Packed input of the linear map: `n1` information signs followed by the
/// amplitude bits of every position.
pub fn linear_input(amp_bits: &[u32], m: u32, info: u64, n1: usize) -> u128 {
    let mut v = info as u128;
    let mut pos = n1;
    for &b in amp_bits {
        for j in (0..m).rev() {
            v |= ((b >> j & 1) as u128) << pos;
            pos += 1;
        }
    }
    v
}

fn codebook_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Draws the sign codebook for `m_a` amplitude sequences.
///
/// `amp_bits[m_a]` holds the packed amplitude label of every position of
/// sequence `m_a`; it feeds the linear mode and is ignored in iid mode.
pub fn draw_sign_codebook(
    amp_bits: &[Vec<u32>],
    m: u32,
    n1: usize,
    n2: usize,
    mode: CodeMode,
    seed: u64,
) -> Result<SignCodebook> {
    let n = n1 + n2;
    if n == 0 || n > 64 {
        return Err(Error::Size(format!("block length {n} outside 1..=64")));
    }
    if n1 >= 32 {
        return Err(Error::Size(format!("{n1} information signs")));
    }
    let m_a = amp_bits.len();
    if amp_bits.iter().any(|b| b.len() != n) {
        return Err(Error::Shape(
            "amplitude labels must have one entry per position".into(),
        ));
    }
    let m_s = 1usize << n1;
    let mut rng = codebook_rng(seed);
    let mut table = Vec::with_capacity(m_a * m_s);
    let mask2 = if n2 == 64 { u64::MAX } else { (1u64 << n2) - 1 };
    let generator = match mode {
        CodeMode::Iid => {
            for _ in 0..m_a {
                for ms in 0..m_s {
                    let red = rng.random::<u64>() & mask2;
                    table.push(info_bits(ms, n1) | red.checked_shl(n1 as u32).unwrap_or(0));
                }
            }
            None
        }
        CodeMode::Linear => {
            let k = n1 + m as usize * n;
            if k > 128 {
                return Err(Error::Size(format!(
                    "linear code input of {k} bits exceeds 128"
                )));
            }
            let kmask = if k == 128 {
                u128::MAX
            } else {
                (1u128 << k) - 1
            };
            let rows: Vec<u128> = (0..n2).map(|_| rng.random::<u128>() & kmask).collect();
            let offset = rng.random::<u64>() & mask2;
            for bits in amp_bits {
                for ms in 0..m_s {
                    let info = info_bits(ms, n1);
                    let red = apply_rows(&rows, linear_input(bits, m, info, n1)) ^ offset;
                    table.push(info | red.checked_shl(n1 as u32).unwrap_or(0));
                }
            }
            Some((rows, offset))
        }
    };
    Ok(SignCodebook {
        n1,
        n2,
        mode,
        m_a,
        seed,
        table,
        generator,
    })
}

/// Result of a typicality search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decoded {
    /// Exactly one candidate passed.
    Unique { m_a: usize, m_s: usize },
    /// No candidate passed.
    NoneTypical,
    /// More than one candidate passed.
    Multiple(usize),
}

fn outcome(accepted: &[(usize, usize)]) -> Decoded {
    match accepted {
        [] => Decoded::NoneTypical,
        [(a, s)] => Decoded::Unique { m_a: *a, m_s: *s },
        many => Decoded::Multiple(many.len()),
    }
}

/// Joint `p(a, s, y) = p(a) · ½ · W(y | s·a)` over (A, S, Y).
pub fn smd_joint(
    constellation: &AskConstellation,
    amplitude_pmf: &Pmf,
    dmc: &Dmc,
) -> Result<MultiJoint> {
    check_channel(constellation, dmc)?;
    let na = constellation.num_amplitudes();
    let nout = dmc.nout();
    let mut p = Vec::with_capacity(na * 2 * nout);
    for a in 0..na {
        for sign in [Sign::Neg, Sign::Pos] {
            let pa = amplitude_pmf.probs()[a];
            p.extend(
                dmc.row(constellation.point_index(sign, a))
                    .iter()
                    .map(|w| 0.5 * pa * w),
            );
        }
    }
    MultiJoint::new(vec![na, 2, nout], p)
}

/// Per-level joints `p(c_i, y)` for the sign (level 0) and each amplitude bit.
pub fn bmd_joints(
    constellation: &AskConstellation,
    amplitude_pmf: &Pmf,
    dmc: &Dmc,
    labels: &LabelMap,
) -> Result<Vec<MultiJoint>> {
    check_channel(constellation, dmc)?;
    let symbol = Pmf::symmetric_from_amplitudes(constellation, amplitude_pmf)?;
    (0..labels.levels())
        .map(|level| {
            let bc = bit_channel(dmc, labels, &symbol, level)?;
            let mut p = Vec::with_capacity(2 * dmc.nout());
            for b in 0..2 {
                p.extend(bc.w[b].iter().map(|w| bc.prior[b] * w));
            }
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= s);
            MultiJoint::new(vec![2, dmc.nout()], p)
        })
        .collect()
}

/// Precomputed candidate list of one decoder.
struct Candidates {
    n: usize,
    m_s: usize,
    /// Amplitude index sequences per `m_a`.
    amps: Vec<Vec<usize>>,
    /// Sign bit sequences per candidate.
    signs: Vec<Vec<usize>>,
}

impl Candidates {
    fn new(layer: &ShapingLayer, codebook: &SignCodebook, budget: u64) -> Result<Self> {
        if codebook.m_a != layer.len() || codebook.n() != layer.n {
            return Err(Error::Shape(
                "codebook does not match the shaping layer".into(),
            ));
        }
        let total = layer.len() as f64 * codebook.m_s() as f64;
        if total > budget as f64 {
            return Err(Error::Budget {
                required: total,
                budget,
            });
        }
        let signs = (0..layer.len())
            .flat_map(|a| (0..codebook.m_s()).map(move |s| (a, s)))
            .map(|(a, s)| codebook.signs(a, s))
            .collect();
        Ok(Self {
            n: layer.n,
            m_s: codebook.m_s(),
            amps: layer.amplitudes.clone(),
            signs,
        })
    }

    fn len(&self) -> usize {
        self.signs.len()
    }

    fn split(&self, c: usize) -> (usize, usize) {
        (c / self.m_s, c % self.m_s)
    }
}

/// Symbol-metric typicality decoder: accepts `(a, s)` when `(a, s, y)` is
/// jointly typical under `p(a, s, y)`.
pub struct SmdDecoder {
    cands: Candidates,
    joint: MultiJoint,
    eps: f64,
    /// Candidates passing the output-independent marginals (A, S, AS).
    static_ok: Vec<bool>,
}

impl SmdDecoder {
    pub fn new(
        layer: &ShapingLayer,
        codebook: &SignCodebook,
        joint: MultiJoint,
        eps: f64,
        budget: u64,
    ) -> Result<Self> {
        if joint.dims().len() != 3 || joint.dims()[1] != 2 {
            return Err(Error::Shape("SMD joint must be over (A, S, Y)".into()));
        }
        let cands = Candidates::new(layer, codebook, budget)?;
        let n = cands.n;
        let dummy = vec![0usize; n];
        let static_ok = (0..cands.len())
            .map(|c| {
                let (a, _) = cands.split(c);
                let seqs: [&[usize]; 3] = [&cands.amps[a], &cands.signs[c], &dummy];
                [1u32, 2, 3]
                    .iter()
                    .all(|&m| joint.marginal_ok(m, &seqs, n, eps))
            })
            .collect();
        Ok(Self {
            cands,
            joint,
            eps,
            static_ok,
        })
    }

    /// Whether candidate `(m_a, m_s)` is jointly typical with `y`.
    pub fn passes(&self, y: &[usize], m_a: usize, m_s: usize) -> bool {
        let c = m_a * self.cands.m_s + m_s;
        let n = self.cands.n;
        let seqs: [&[usize]; 3] = [&self.cands.amps[m_a], &self.cands.signs[c], y];
        self.static_ok[c]
            && [4u32, 5, 6, 7]
                .iter()
                .all(|&m| self.joint.marginal_ok(m, &seqs, n, self.eps))
    }

    /// Every candidate jointly typical with `y`, in index order.
    pub fn accepted(&self, y: &[usize]) -> Vec<(usize, usize)> {
        let n = self.cands.n;
        let dummy = vec![0usize; n];
        if y.len() != n || !self.joint.marginal_ok(4, &[&dummy, &dummy, y], n, self.eps) {
            return Vec::new();
        }
        (0..self.cands.len())
            .map(|c| self.cands.split(c))
            .filter(|&(a, s)| self.passes(y, a, s))
            .collect()
    }

    pub fn decode(&self, y: &[usize]) -> Decoded {
        outcome(&self.accepted(y))
    }
}

/// Bit-metric typicality decoder: accepts `(a, s)` when `(s, y)` and every
/// `(b_j, y)` are pairwise jointly typical.
pub struct BmdDecoder {
    cands: Candidates,
    joints: Vec<MultiJoint>,
    eps: f64,
    /// Level bit sequences per `m_a` (levels 1..=m).
    level_bits: Vec<Vec<Vec<usize>>>,
    static_ok: Vec<bool>,
}

impl BmdDecoder {
    pub fn new(
        layer: &ShapingLayer,
        codebook: &SignCodebook,
        labels: &LabelMap,
        joints: Vec<MultiJoint>,
        eps: f64,
        budget: u64,
    ) -> Result<Self> {
        if joints.len() != labels.levels()
            || joints
                .iter()
                .any(|j| j.dims().len() != 2 || j.dims()[0] != 2)
        {
            return Err(Error::Shape(
                "one (bit, output) joint per label level is required".into(),
            ));
        }
        let cands = Candidates::new(layer, codebook, budget)?;
        let n = cands.n;
        let m = labels.m();
        let level_bits: Vec<Vec<Vec<usize>>> = cands
            .amps
            .iter()
            .map(|seq| {
                (1..=m as usize)
                    .map(|j| {
                        seq.iter()
                            .map(|&a| (labels.amplitude_code(a) >> (m as usize - j) & 1) as usize)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let dummy = vec![0usize; n];
        let static_ok = (0..cands.len())
            .map(|c| {
                let (a, _) = cands.split(c);
                joints[0].marginal_ok(1, &[&cands.signs[c], &dummy], n, eps)
                    && level_bits[a]
                        .iter()
                        .zip(&joints[1..])
                        .all(|(b, jt)| jt.marginal_ok(1, &[b, &dummy], n, eps))
            })
            .collect();
        Ok(Self {
            cands,
            joints,
            eps,
            level_bits,
            static_ok,
        })
    }

    pub fn passes(&self, y: &[usize], m_a: usize, m_s: usize) -> bool {
        let c = m_a * self.cands.m_s + m_s;
        let n = self.cands.n;
        let ok = |jt: &MultiJoint, b: &[usize]| {
            [2u32, 3]
                .iter()
                .all(|&mk| jt.marginal_ok(mk, &[b, y], n, self.eps))
        };
        self.static_ok[c]
            && ok(&self.joints[0], &self.cands.signs[c])
            && self.level_bits[m_a]
                .iter()
                .zip(&self.joints[1..])
                .all(|(b, jt)| ok(jt, b))
    }

    pub fn accepted(&self, y: &[usize]) -> Vec<(usize, usize)> {
        if y.len() != self.cands.n {
            return Vec::new();
        }
        (0..self.cands.len())
            .map(|c| self.cands.split(c))
            .filter(|&(a, s)| self.passes(y, a, s))
            .collect()
    }

    pub fn decode(&self, y: &[usize]) -> Decoded {
        outcome(&self.accepted(y))
    }
}

/// One-shot symbol-metric decode.
pub fn smd_decode(
    y: &[usize],
    layer: &ShapingLayer,
    codebook: &SignCodebook,
    joint: &MultiJoint,
    eps: f64,
) -> Result<Decoded> {
    let dec = SmdDecoder::new(layer, codebook, joint.clone(), eps, DEFAULT_DECODE_BUDGET)?;
    Ok(dec.decode(y))
}

/// One-shot bit-metric decode.
pub fn bmd_decode(
    y: &[usize],
    layer: &ShapingLayer,
    codebook: &SignCodebook,
    labels: &LabelMap,
    joints: &[MultiJoint],
    eps: f64,
) -> Result<Decoded> {
    let dec = BmdDecoder::new(
        layer,
        codebook,
        labels,
        joints.to_vec(),
        eps,
        DEFAULT_DECODE_BUDGET,
    )?;
    Ok(dec.decode(y))
}

/// Largest `M_a · M_s` searched per decode by default.
pub const DEFAULT_DECODE_BUDGET: u64 = 1_000_000;

/// Channel of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// Quantized AWGN; the SNR refers to the experiment's symbol pmf.
    Awgn {
        snr_db: f64,
        #[serde(default = "default_sim_bins")]
        num_bins: usize,
        #[serde(default = "default_clip")]
        clip_sigmas: f64,
    },
    /// Noiseless channel.
    Identity,
    /// Input `i` goes to outputs `i` and `i + offset (mod M)` with equal
    /// probability.
    CyclicPairs { offset: usize },
    /// Explicit transition matrix.
    Matrix { dmc: Dmc },
}

fn default_sim_bins() -> usize {
    4
}

fn default_clip() -> f64 {
    6.0
}

fn default_decode_budget() -> u64 {
    DEFAULT_DECODE_BUDGET
}

fn default_enum_budget() -> u64 {
    10_000_000
}

fn default_mode() -> CodeMode {
    CodeMode::Iid
}

/// Parameters of one Monte Carlo sign-coding experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Amplitude bits: the constellation is `2^{m+1}`-ASK.
    pub m: u32,
    pub channel: ChannelSpec,
    /// Amplitude pmf; uniform when absent.
    #[serde(default)]
    pub amplitude_pmf: Option<Vec<f64>>,
    pub eps: f64,
    pub n: usize,
    #[serde(default)]
    pub gamma: f64,
    pub decoder: Decoder,
    #[serde(default = "default_mode")]
    pub mode: CodeMode,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Enumeration budget of the shaping layer.
    #[serde(default = "default_enum_budget")]
    pub budget: u64,
    /// Largest number of candidates per decode.
    #[serde(default = "default_decode_budget")]
    pub decode_budget: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("γ = {} outside [0, 1)", self.gamma)));
        }
        if self.n == 0 || self.n > 64 {
            return Err(Error::Config(format!("n = {} outside 1..=64", self.n)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("ε = {} must be positive", self.eps)));
        }
        Ok(())
    }

    /// `n1 = round(γ n)`.
    pub fn n1(&self) -> usize {
        (self.gamma * self.n as f64).round() as usize
    }
}

/// Aggregated Monte Carlo outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub trials: u64,
    pub errors_total: u64,
    /// Transmitted tuple not jointly typical with the output.
    pub errors_kind1: u64,
    /// Another tuple jointly typical with the output.
    pub errors_kind2: u64,
    pub errors_both: u64,
    /// Failures with no typical candidate.
    pub none_typical: u64,
    /// Failures with several typical candidates.
    pub multiple_typical: u64,
    /// BMD only: trials in which an accepted candidate fails the symbol-level
    /// triple test.
    pub bmd_triple_mismatch: u64,
    /// `(log2 M_a + n1) / n`.
    pub rate_achieved: f64,
    /// `n1 / n`.
    pub gamma_realized: f64,
    pub n: usize,
    pub n1: usize,
    pub m_a: usize,
    pub h_a: f64,
    pub eps: f64,
    pub seed: u64,
    pub large_n_proxy: bool,
}

impl TrialStats {
    pub fn error_rate(&self) -> f64 {
        self.errors_total as f64 / self.trials as f64
    }

    /// Binomial standard error of [`Self::error_rate`].
    pub fn std_err(&self) -> f64 {
        let p = self.error_rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// CSV row `n,gamma,eps,trials,errors_total,kind1,kind2,rate_achieved,seed`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.gamma_realized,
            self.eps,
            self.trials,
            self.errors_total,
            self.errors_kind1,
            self.errors_kind2,
            self.rate_achieved,
            self.seed
        )
    }
}

/// Header matching [`TrialStats::csv_row`].
pub const CSV_HEADER: &str = "n,gamma,eps,trials,errors_total,kind1,kind2,rate_achieved,seed";

#[derive(Default, Clone, Copy)]
struct Tally {
    total: u64,
    kind1: u64,
    kind2: u64,
    both: u64,
    none: u64,
    multiple: u64,
    mismatch: u64,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.total += o.total;
        self.kind1 += o.kind1;
        self.kind2 += o.kind2;
        self.both += o.both;
        self.none += o.none;
        self.multiple += o.multiple;
        self.mismatch += o.mismatch;
        self
    }
}

enum AnyDecoder {
    Smd(SmdDecoder),
    Bmd(BmdDecoder, SmdDecoder),
}

/// Runs `config.trials` independent transmissions and classifies errors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialStats> {
    config.validate()?;
    let c = AskConstellation::new(config.m)?;
    let labels = brgc_label(&c);
    let amp = match &config.amplitude_pmf {
        Some(p) => Pmf::new(p.clone())?,
        None => Pmf::uniform(c.num_amplitudes()),
    };
    if amp.len() != c.num_amplitudes() {
        return Err(Error::Config(format!(
            "amplitude pmf has {} entries, constellation has {} amplitudes",
            amp.len(),
            c.num_amplitudes()
        )));
    }
    let symbol = Pmf::symmetric_from_amplitudes(&c, &amp)?;
    let dmc = match &config.channel {
        ChannelSpec::Awgn {
            snr_db,
            num_bins,
            clip_sigmas,
        } => quantize_awgn(
            &c,
            &AwgnSpec {
                snr_db: *snr_db,
                num_bins: *num_bins,
                clip_sigmas: *clip_sigmas,
            },
            &symbol,
        )?,
        ChannelSpec::Identity => Dmc::identity(c.points_f64()),
        ChannelSpec::CyclicPairs { offset } => Dmc::cyclic_pairs(c.points_f64(), *offset)?,
        ChannelSpec::Matrix { dmc } => dmc.clone(),
    };
    check_channel(&c, &dmc)?;

    let n = config.n;
    let n1 = config.n1();
    let typ = TypConfig {
        n,
        eps: config.eps,
        budget: config.budget,
        mc_samples: 100_000,
        seed: config.seed,
    };
    let layer = match config.decoder {
        Decoder::Smd => build_shaping_layer_smd(&c, &amp, &dmc, &typ)?,
        Decoder::Bmd => {
            build_shaping_layer_bmd(&c, &bit_tuple_pmf(&labels, &amp)?, &labels, &dmc, &typ)?
        }
    };
    let amp_bits: Vec<Vec<u32>> = layer
        .amplitudes
        .iter()
        .map(|s| s.iter().map(|&a| labels.amplitude_code(a)).collect())
        .collect();
    let codebook = draw_sign_codebook(&amp_bits, c.m(), n1, n - n1, config.mode, config.seed)?;
    let smd = SmdDecoder::new(
        &layer,
        &codebook,
        smd_joint(&c, &amp, &dmc)?,
        config.eps,
        config.decode_budget,
    )?;
    let decoder = match config.decoder {
        Decoder::Smd => AnyDecoder::Smd(smd),
        Decoder::Bmd => AnyDecoder::Bmd(
            BmdDecoder::new(
                &layer,
                &codebook,
                &labels,
                bmd_joints(&c, &amp, &dmc, &labels)?,
                config.eps,
                config.decode_budget,
            )?,
            smd,
        ),
    };
    let sampler = dmc.sampler();
    let m_a = layer.len();
    let m_s = codebook.m_s();

    let trial = |t: u64| -> Tally {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(t + 1);
        let ma = rng.random_range(0..m_a);
        let ms = rng.random_range(0..m_s);
        let signs = codebook.signs(ma, ms);
        let y: Vec<usize> = layer.amplitudes[ma]
            .iter()
            .zip(&signs)
            .map(|(&a, &s)| {
                let x = c.point_index(Sign::from_bit(s as u8), a);
                sampler.sample(x, rng.random::<f64>())
            })
            .collect();
        let (accepted, mismatch) = match &decoder {
            AnyDecoder::Smd(d) => (d.accepted(&y), false),
            AnyDecoder::Bmd(d, triple) => {
                let acc = d.accepted(&y);
                let mm = acc.iter().any(|&(a, s)| !triple.passes(&y, a, s));
                (acc, mm)
            }
        };
        let sent_ok = accepted.contains(&(ma, ms));
        let other = accepted.iter().any(|&p| p != (ma, ms));
        let kind1 = !sent_ok;
        let kind2 = other;
        Tally {
            total: u64::from(kind1 || kind2),
            kind1: u64::from(kind1),
            kind2: u64::from(kind2),
            both: u64::from(kind1 && kind2),
            none: u64::from(accepted.is_empty()),
            multiple: u64::from(accepted.len() > 1),
            mismatch: u64::from(mismatch),
        }
    };
    let tally = par::map_chunks(0..config.trials, 256, |range| {
        range.map(trial).fold(Tally::default(), Tally::add)
    })
    .into_iter()
    .fold(Tally::default(), Tally::add);

    Ok(TrialStats {
        trials: config.trials,
        errors_total: tally.total,
        errors_kind1: tally.kind1,
        errors_kind2: tally.kind2,
        errors_both: tally.both,
        none_typical: tally.none,
        multiple_typical: tally.multiple,
        bmd_triple_mismatch: tally.mismatch,
        rate_achieved: ((m_a as f64).log2() + n1 as f64) / n as f64,
        gamma_realized: n1 as f64 / n as f64,
        n,
        n1,
        m_a,
        h_a: entropy(&amp),
        eps: config.eps,
        seed: config.seed,
        large_n_proxy: layer.large_n_proxy,
    })
}
