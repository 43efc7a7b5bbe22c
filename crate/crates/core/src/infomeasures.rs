//! Information measures on finite tables.
//!
//! All logarithms are base 2, `0 · log 0 = 0`, and terms with zero joint
//! probability `p(x, y) = 0` are skipped.

use serde::{Deserialize, Serialize};

use crate::alphabets::{AskConstellation, LabelMap};
use crate::channel::{bit_channel, Dmc};
use crate::{Error, Result};

const PMF_TOL: f64 = 1e-12;

/// Probability mass function over an indexed alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

impl Pmf {
    /// Validates nonnegativity and a total of 1 within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Size("empty pmf".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Domain(
                "pmf entries must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > PMF_TOL {
            return Err(Error::Domain(format!("pmf sums to {s}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Domain(
                "weights must be nonnegative with a positive sum".into(),
            ));
        }
        Pmf::new(weights.iter().map(|w| w / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Symmetric symbol pmf `p(±a) = p(a)/2` from an amplitude pmf.
    pub fn symmetric_from_amplitudes(c: &AskConstellation, amp: &Pmf) -> Result<Self> {
        if amp.len() != c.num_amplitudes() {
            return Err(Error::Shape(format!(
                "{} amplitude probabilities for {} amplitudes",
                amp.len(),
                c.num_amplitudes()
            )));
        }
        let probs = (0..c.order())
            .map(|i| amp.probs[c.amplitude_index(i)] / 2.0)
            .collect();
        Ok(Self { probs })
    }

    /// Amplitude marginal of a symbol pmf.
    pub fn amplitude_marginal(&self, c: &AskConstellation) -> Result<Self> {
        if self.len() != c.order() {
            return Err(Error::Shape("pmf does not match the constellation".into()));
        }
        let mut probs = vec![0.0; c.num_amplitudes()];
        for (i, &p) in self.probs.iter().enumerate() {
            probs[c.amplitude_index(i)] += p;
        }
        Ok(Self { probs })
    }
}

/// Joint pmf `p(x, y)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    nx: usize,
    ny: usize,
    p: Vec<f64>,
}

impl JointPmf {
    pub fn new(nx: usize, ny: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(Error::Shape(format!("{} entries for {nx}x{ny}", p.len())));
        }
        if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Domain(
                "joint entries must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > PMF_TOL {
            return Err(Error::Domain(format!("joint pmf sums to {s}")));
        }
        Ok(Self { nx, ny, p })
    }

    /// `p(x) p(y|x)`.
    pub fn from_channel(input: &Pmf, dmc: &Dmc) -> Result<Self> {
        check_dims(input, dmc)?;
        let mut p = Vec::with_capacity(dmc.nin() * dmc.nout());
        for (x, &px) in input.probs().iter().enumerate() {
            p.extend(dmc.row(x).iter().map(|w| px * w));
        }
        Ok(Self {
            nx: dmc.nin(),
            ny: dmc.nout(),
            p,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn table(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.ny + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.p.chunks(self.ny).map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.ny];
        for row in self.p.chunks(self.ny) {
            for (a, v) in q.iter_mut().zip(row) {
                *a += v;
            }
        }
        q
    }
}

/// Symbol decoding metric `q(x, y)`, optionally with its per-level factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingMetric {
    nin: usize,
    nout: usize,
    q: Vec<f64>,
    /// `levels[i][b * nout + y] = q_i(b, y)` when the metric is a product of
    /// bit metrics.
    levels: Option<Vec<Vec<f64>>>,
}

impl DecodingMetric {
    pub fn new(nin: usize, nout: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != nin * nout {
            return Err(Error::Shape("metric size".into()));
        }
        if q.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Domain(
                "metric entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            nin,
            nout,
            q,
            levels: None,
        })
    }

    /// Matched metric `q(x, y) = p(y|x)`.
    pub fn matched(dmc: &Dmc) -> Self {
        Self {
            nin: dmc.nin(),
            nout: dmc.nout(),
            q: dmc.matrix().to_vec(),
            levels: None,
        }
    }

    pub fn constant(nin: usize, nout: usize, value: f64) -> Self {
        Self {
            nin,
            nout,
            q: vec![value; nin * nout],
            levels: None,
        }
    }

    /// Product of bit metrics `q(x, y) = ∏_i p(y|c_i)` under `input`.
    pub fn bit_metric(input: &Pmf, dmc: &Dmc, labels: &LabelMap) -> Result<Self> {
        check_dims(input, dmc)?;
        let nout = dmc.nout();
        let mut levels = Vec::with_capacity(labels.levels());
        for i in 0..labels.levels() {
            let bc = bit_channel(dmc, labels, input, i)?;
            let mut t = bc.w[0].clone();
            t.extend_from_slice(&bc.w[1]);
            levels.push(t);
        }
        let mut q = vec![1.0; dmc.nin() * nout];
        for x in 0..dmc.nin() {
            for (i, lv) in levels.iter().enumerate() {
                let b = labels.bit(x, i) as usize;
                for y in 0..nout {
                    q[x * nout + y] *= lv[b * nout + y];
                }
            }
        }
        Ok(Self {
            nin: dmc.nin(),
            nout,
            q,
            levels: Some(levels),
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.q[x * self.nout + y]
    }

    pub fn level_factors(&self) -> Option<&[Vec<f64>]> {
        self.levels.as_deref()
    }
}

/// Per-input cost `r(x)` of the LM rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    r: Vec<f64>,
}

impl CostFunction {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Domain("cost must be finite and nonnegative".into()));
        }
        Ok(Self { r })
    }

    pub fn constant(n: usize) -> Self {
        Self { r: vec![1.0; n] }
    }

    /// `r(c) = ∏_i p(c_i) / p(c)`; zero where `p(c) = 0`.
    pub fn bmd(input: &Pmf, labels: &LabelMap) -> Result<Self> {
        if input.len() != labels.order() {
            return Err(Error::Shape("pmf does not match the labeling".into()));
        }
        let priors = level_priors(input, labels);
        let r = (0..input.len())
            .map(|x| {
                let px = input.probs()[x];
                if px == 0.0 {
                    return 0.0;
                }
                let prod: f64 = (0..labels.levels())
                    .map(|i| priors[i][labels.bit(x, i) as usize])
                    .product();
                prod / px
            })
            .collect();
        Ok(Self { r })
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }
}

fn level_priors(input: &Pmf, labels: &LabelMap) -> Vec<[f64; 2]> {
    (0..labels.levels())
        .map(|i| {
            let mut pr = [0.0; 2];
            for (x, &p) in input.probs().iter().enumerate() {
                pr[labels.bit(x, i) as usize] += p;
            }
            pr
        })
        .collect()
}

fn check_dims(input: &Pmf, dmc: &Dmc) -> Result<()> {
    if input.len() != dmc.nin() {
        return Err(Error::Shape(format!(
            "pmf over {} symbols, channel has {} inputs",
            input.len(),
            dmc.nin()
        )));
    }
    Ok(())
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// `H(X)` in bits.
pub fn entropy(pmf: &Pmf) -> f64 {
    entropy_of(pmf.probs())
}

/// Entropy of a nonnegative vector assumed to sum to one.
pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter().map(|&v| plogp(v)).sum()
}

/// `H(X|Y)` in bits.
pub fn conditional_entropy_x_given_y(input: &Pmf, dmc: &Dmc) -> Result<f64> {
    let j = JointPmf::from_channel(input, dmc)?;
    Ok(entropy_of(j.table()) - entropy_of(&j.marginal_y()))
}

/// `I(X;Y) = H(Y) − H(Y|X)` in bits.
pub fn mutual_information(input: &Pmf, dmc: &Dmc) -> Result<f64> {
    check_dims(input, dmc)?;
    let mut q = vec![0.0; dmc.nout()];
    let mut h_y_given_x = 0.0;
    for (x, &px) in input.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let row = dmc.row(x);
        h_y_given_x += px * entropy_of(row);
        for (a, &w) in q.iter_mut().zip(row) {
            *a += px * w;
        }
    }
    Ok((entropy_of(&q) - h_y_given_x).max(0.0))
}

/// `H(C_i|Y)` for bit level `level` (0 = sign).
pub fn conditional_level_entropy(
    input: &Pmf,
    dmc: &Dmc,
    labels: &LabelMap,
    level: usize,
) -> Result<f64> {
    labels.check_level(level)?;
    check_dims(input, dmc)?;
    if labels.order() != dmc.nin() {
        return Err(Error::Shape("labeling does not match the channel".into()));
    }
    let nout = dmc.nout();
    let mut joint = [vec![0.0; nout], vec![0.0; nout]];
    for (x, &px) in input.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let b = labels.bit(x, level) as usize;
        for (a, &w) in joint[b].iter_mut().zip(dmc.row(x)) {
            *a += px * w;
        }
    }
    let mut h = 0.0;
    for y in 0..nout {
        let (p0, p1) = (joint[0][y], joint[1][y]);
        h += plogp(p0) + plogp(p1) - plogp(p0 + p1);
    }
    Ok(h.max(0.0))
}

/// `H(C) − Σ_i H(C_i|Y)` without clipping; may be negative.
pub fn r_bmd_unclipped(input: &Pmf, dmc: &Dmc, labels: &LabelMap) -> Result<f64> {
    let mut r = entropy(input);
    for i in 0..labels.levels() {
        r -= conditional_level_entropy(input, dmc, labels, i)?;
    }
    Ok(r)
}

/// BMD rate `max(0, H(C) − Σ_i H(C_i|Y))`.
pub fn r_bmd(input: &Pmf, dmc: &Dmc, labels: &LabelMap) -> Result<f64> {
    Ok(r_bmd_unclipped(input, dmc, labels)?.max(0.0))
}

/// Result of [`gmi`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GmiResult {
    /// Rate in bits, clipped at zero.
    pub value: f64,
    /// Maximizing tilt `s`.
    pub s_star: f64,
}

/// Precomputed pieces of the tilted-metric expectation shared by GMI and
/// LM evaluation.
struct TiltTable<'a> {
    input: &'a Pmf,
    joint: JointPmf,
    log_q: Vec<f64>,
    nout: usize,
}

impl<'a> TiltTable<'a> {
    fn new(input: &'a Pmf, dmc: &Dmc, metric: &DecodingMetric) -> Result<Self> {
        check_dims(input, dmc)?;
        if metric.nin != dmc.nin() || metric.nout != dmc.nout() {
            return Err(Error::Shape("metric does not match the channel".into()));
        }
        let joint = JointPmf::from_channel(input, dmc)?;
        for (k, &pj) in joint.table().iter().enumerate() {
            if pj > 0.0 && metric.q[k] == 0.0 {
                return Err(Error::Domain(format!(
                    "metric vanishes at (x={}, y={}) where p(x,y) > 0",
                    k / dmc.nout(),
                    k % dmc.nout()
                )));
            }
        }
        let log_q = metric
            .q
            .iter()
            .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
            .collect();
        Ok(Self {
            input,
            joint,
            log_q,
            nout: dmc.nout(),
        })
    }

    /// `E[log2 (q(X,Y)^s r(X) / Σ_x' p(x') q(x',Y)^s r(x'))]`.
    ///
    /// `q^s` with `q = 0` is taken as 0 for every `s ≥ 0` (right limit).
    fn objective(&self, s: f64, cost: Option<&[f64]>) -> f64 {
        let nin = self.input.len();
        let px = self.input.probs();
        let ln_r = |x: usize| match cost {
            Some(r) if r[x] > 0.0 => r[x].ln(),
            Some(_) => f64::NEG_INFINITY,
            None => 0.0,
        };
        let mut total = 0.0;
        for y in 0..self.nout {
            // log-sum-exp of the denominator
            let mut terms = Vec::with_capacity(nin);
            for x in 0..nin {
                let lq = self.log_q[x * self.nout + y];
                if px[x] > 0.0 && lq > f64::NEG_INFINITY {
                    let t = px[x].ln() + s * lq + ln_r(x);
                    if t > f64::NEG_INFINITY {
                        terms.push(t);
                    }
                }
            }
            let mut py_mass = 0.0;
            for x in 0..nin {
                py_mass += self.joint.get(x, y);
            }
            if py_mass == 0.0 {
                continue;
            }
            let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln();
            for x in 0..nin {
                let pj = self.joint.get(x, y);
                if pj == 0.0 {
                    continue;
                }
                let num = s * self.log_q[x * self.nout + y] + ln_r(x);
                total += pj * (num - lse);
            }
        }
        total / std::f64::consts::LN_2
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[lo, hi]` to width `tol`.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let mut c = hi - GOLDEN * (hi - lo);
    let mut d = lo + GOLDEN * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Generalized mutual information: the tilted-metric expectation maximized
/// over `s ∈ [0, 16]`.
///
/// A 33-point grid brackets the maximum, golden-section search refines it to
/// 1e-6 in `s`, and `s = 1` is always evaluated as a candidate.
pub fn gmi(input: &Pmf, dmc: &Dmc, metric: &DecodingMetric) -> Result<GmiResult> {
    let t = TiltTable::new(input, dmc, metric)?;
    let f = |s: f64| t.objective(s, None);
    const S_MAX: f64 = 16.0;
    const GRID: usize = 32;
    let step = S_MAX / GRID as f64;
    let mut best = (0.0, f(0.0));
    for k in 1..=GRID {
        let s = k as f64 * step;
        let v = f(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    let lo = (best.0 - step).max(0.0);
    let hi = (best.0 + step).min(S_MAX);
    let refined = golden_max(f, lo, hi, 1e-6);
    if refined.1 > best.1 {
        best = refined;
    }
    let at_one = f(1.0);
    if at_one >= best.1 {
        best = (1.0, at_one);
    }
    Ok(GmiResult {
        value: best.1.max(0.0),
        s_star: best.0,
    })
}

/// LM-rate expectation at fixed tilt `s` and cost `r`; not clipped.
pub fn lm_rate_eval(
    input: &Pmf,
    dmc: &Dmc,
    metric: &DecodingMetric,
    s: f64,
    cost: &CostFunction,
) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("tilt s = {s}")));
    }
    if cost.r.len() != dmc.nin() {
        return Err(Error::Shape("cost does not match the channel".into()));
    }
    let t = TiltTable::new(input, dmc, metric)?;
    Ok(t.objective(s, Some(&cost.r)))
}

/// Quantities of the sign/amplitude mutual-information chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiChainReport {
    pub i_xy: f64,
    pub h_a: f64,
    /// `I(S;Y|A)`.
    pub i_s_y_given_a: f64,
    /// `I(S;A,Y)`.
    pub i_s_ay: f64,
    /// Whether `I(X;Y) − H(A) ≤ I(S;A,Y) + 1e-9`.
    pub holds: bool,
}

/// Evaluates `I(X;Y)`, `H(A)`, `I(S;Y|A)` and `I(S;A,Y)` for an input pmf
/// over the points of `constellation`.
pub fn mi_inequality_chain(
    input: &Pmf,
    dmc: &Dmc,
    constellation: &AskConstellation,
) -> Result<MiChainReport> {
    if input.len() != constellation.order() {
        return Err(Error::Domain(
            "input alphabet does not factor as the constellation's sign × amplitude".into(),
        ));
    }
    check_dims(input, dmc)?;
    let i_xy = mutual_information(input, dmc)?;
    let pa = input.amplitude_marginal(constellation)?;
    let h_a = entropy(&pa);
    let na = constellation.num_amplitudes();
    let nout = dmc.nout();
    // p(s, a, y) indexed [s][a][y] and derived marginals
    let mut p_say = vec![0.0; 2 * na * nout];
    let mut p_sa = vec![0.0; 2 * na];
    for (x, &px) in input.probs().iter().enumerate() {
        let s = constellation.sign_of(x).bit() as usize;
        let a = constellation.amplitude_index(x);
        p_sa[s * na + a] += px;
        for (y, &w) in dmc.row(x).iter().enumerate() {
            p_say[(s * na + a) * nout + y] += px * w;
        }
    }
    let mut p_ay = vec![0.0; na * nout];
    let mut p_s = [0.0; 2];
    for s in 0..2 {
        for a in 0..na {
            p_s[s] += p_sa[s * na + a];
            for y in 0..nout {
                p_ay[a * nout + y] += p_say[(s * na + a) * nout + y];
            }
        }
    }
    let h_say = entropy_of(&p_say);
    let h_ay = entropy_of(&p_ay);
    let h_sa = entropy_of(&p_sa);
    let h_s = entropy_of(&p_s);
    // H(S|A,Y) = H(S,A,Y) − H(A,Y)
    let h_s_given_ay = h_say - h_ay;
    let h_s_given_a = h_sa - h_a;
    let i_s_ay = (h_s - h_s_given_ay).max(0.0);
    let i_s_y_given_a = (h_s_given_a - h_s_given_ay).max(0.0);
    Ok(MiChainReport {
        i_xy,
        h_a,
        i_s_y_given_a,
        i_s_ay,
        holds: i_xy - h_a <= i_s_ay + 1e-9,
    })
}
