//! Weakly typical, jointly typical and B-typical sequence sets.
//!
//! Sequences are slices of symbol indices. Enumerated sets store their
//! members as ranks: the base-`|alphabet|` number whose most significant digit
//! is the first symbol. Ranks increase in lexicographic order.
//!
//! Membership tests compare empirical log-probabilities with entropies in the
//! log domain and accept boundary cases within an absolute slack of 1e-12.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Dmc;
use crate::infomeasures::{entropy_of, JointPmf, Pmf};
use crate::{par, Error, Result};

/// Absolute slack on every typicality inequality.
pub const SLACK: f64 = 1e-12;
const CHUNK: u64 = 1 << 14;

fn default_budget() -> u64 {
    10_000_000
}

fn default_samples() -> u64 {
    100_000
}

/// Sequence length, ε and enumeration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypConfig {
    pub n: usize,
    pub eps: f64,
    /// Largest number of sequences (or type combinations) enumerated.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Monte Carlo sample count when exact conditional probabilities exceed
    /// the budget.
    #[serde(default = "default_samples")]
    pub mc_samples: u64,
    #[serde(default)]
    pub seed: u64,
}

impl TypConfig {
    pub fn new(n: usize, eps: f64) -> Self {
        Self {
            n,
            eps,
            budget: default_budget(),
            mc_samples: default_samples(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Size("sequence length n must be at least 1".into()));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Domain(format!("ε = {} must be positive", self.eps)));
        }
        if self.mc_samples == 0 {
            return Err(Error::Size("mc_samples must be positive".into()));
        }
        Ok(())
    }

    fn check_budget(&self, required: f64) -> Result<()> {
        if required > self.budget as f64 {
            Err(Error::Budget {
                required,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }
}

/// `|value − h| ≤ ε` with the module slack.
#[inline]
fn within(value: f64, h: f64, eps: f64) -> bool {
    (value - h).abs() <= eps + SLACK
}

/// Digits of `rank` in base `k`, most significant first.
pub fn decode_rank(rank: u64, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut r = rank;
    for slot in out.iter_mut().rev() {
        *slot = (r % k as u64) as usize;
        r /= k as u64;
    }
    out
}

/// Inverse of [`decode_rank`].
pub fn encode_rank(seq: &[usize], k: usize) -> u64 {
    seq.iter().fold(0u64, |acc, &s| acc * k as u64 + s as u64)
}

fn log2_table(p: &[f64]) -> Vec<f64> {
    p.iter()
        .map(|&v| if v > 0.0 { v.log2() } else { f64::NEG_INFINITY })
        .collect()
}

/// Weak typicality of `seq` under `pmf`.
pub fn is_typical(seq: &[usize], pmf: &Pmf, config: &TypConfig) -> bool {
    if seq.is_empty() || seq.iter().any(|&s| s >= pmf.len()) {
        return false;
    }
    let lp: f64 = seq.iter().map(|&s| pmf.probs()[s]).map(f64::log2).sum();
    if !lp.is_finite() {
        return false;
    }
    within(-lp / seq.len() as f64, entropy_of(pmf.probs()), config.eps)
}

/// Certified and asymptotic bound checks of an enumerated typical set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetBounds {
    /// `|A| ≤ 2^{n(H+ε)}`.
    pub upper_ok: bool,
    /// Every member satisfies `2^{−n(H+ε)} ≤ p(x) ≤ 2^{−n(H−ε)}`.
    pub member_bounds_ok: bool,
    /// Total typical probability reached `1 − ε`.
    pub large_n_proxy: bool,
    /// `|A| ≥ (1−ε) 2^{n(H−ε)}`, evaluated only under the proxy.
    pub lower_ok: Option<bool>,
}

/// Exhaustively enumerated weakly typical set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalSet {
    pub config: TypConfig,
    pub pmf: Pmf,
    /// Entropy in bits.
    pub h: f64,
    /// Member ranks in increasing order.
    pub members: Vec<u64>,
    /// `Pr{X ∈ A}`.
    pub mass: f64,
    pub bounds: SetBounds,
}

impl TypicalSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sequence(&self, i: usize) -> Vec<usize> {
        decode_rank(self.members[i], self.pmf.len(), self.config.n)
    }
}

fn cardinality_bounds(
    count: usize,
    n: usize,
    h: f64,
    eps: f64,
    mass: f64,
    proxy_level: f64,
) -> (bool, bool, Option<bool>) {
    let log_count = (count.max(1) as f64).log2();
    let upper_ok = count == 0 || log_count <= n as f64 * (h + eps) + SLACK;
    let proxy = mass >= proxy_level;
    let lower =
        proxy.then(|| count > 0 && log_count >= (1.0 - eps).log2() + n as f64 * (h - eps) - SLACK);
    (upper_ok, proxy, lower)
}

/// All sequences of length `n` typical under `pmf`.
pub fn enumerate_typical(pmf: &Pmf, config: &TypConfig) -> Result<TypicalSet> {
    config.validate()?;
    let k = pmf.len();
    let n = config.n;
    config.check_budget((k as f64).powi(n as i32))?;
    let total = (k as u64).pow(n as u32);
    let lp = log2_table(pmf.probs());
    let h = entropy_of(pmf.probs());
    let eps = config.eps;
    let chunks = par::map_chunks(0..total, CHUNK, |range| {
        let mut members = Vec::new();
        let mut mass = 0.0;
        let mut members_ok = true;
        for rank in range {
            let mut r = rank;
            let mut s = 0.0;
            for _ in 0..n {
                s += lp[(r % k as u64) as usize];
                r /= k as u64;
            }
            if s.is_finite() && within(-s / n as f64, h, eps) {
                members.push(rank);
                mass += s.exp2();
                members_ok &=
                    s >= -(n as f64) * (h + eps) - SLACK && s <= -(n as f64) * (h - eps) + SLACK;
            }
        }
        (members, mass, members_ok)
    });
    let mut members = Vec::new();
    let mut mass = 0.0;
    let mut member_bounds_ok = true;
    for (m, p, ok) in chunks {
        members.extend(m);
        mass += p;
        member_bounds_ok &= ok;
    }
    let (upper_ok, large_n_proxy, lower_ok) =
        cardinality_bounds(members.len(), n, h, eps, mass, 1.0 - eps);
    Ok(TypicalSet {
        config: *config,
        pmf: pmf.clone(),
        h,
        members,
        mass,
        bounds: SetBounds {
            upper_ok,
            member_bounds_ok,
            large_n_proxy,
            lower_ok,
        },
    })
}

/// Marginal of a multivariate pmf on a subset of its variables.
#[derive(Debug, Clone)]
struct Marginal {
    vars: Vec<usize>,
    strides: Vec<usize>,
    log2p: Vec<f64>,
    h: f64,
}

/// Joint pmf of `k` discrete variables with all `2^k − 1` marginals
/// precomputed. Typicality of a tuple of sequences requires typicality under
/// every marginal, the standard extension of the pairwise definition.
#[derive(Debug, Clone)]
pub struct MultiJoint {
    dims: Vec<usize>,
    probs: Vec<f64>,
    marginals: Vec<Marginal>,
}

impl MultiJoint {
    /// `probs` is row-major with the last variable varying fastest.
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let k = dims.len();
        if k == 0 || k > 16 || dims.contains(&0) {
            return Err(Error::Shape(format!("invalid dimensions {dims:?}")));
        }
        let size: usize = dims.iter().product();
        if probs.len() != size {
            return Err(Error::Shape(format!(
                "{} probabilities for dimensions {dims:?}",
                probs.len()
            )));
        }
        let s: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || (s - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("joint probabilities must form a pmf".into()));
        }
        let mut marginals = Vec::with_capacity((1 << k) - 1);
        for mask in 1u32..(1 << k) {
            let vars: Vec<usize> = (0..k).filter(|&j| mask >> j & 1 == 1).collect();
            let mut strides = vec![0; vars.len()];
            let mut acc = 1;
            for (i, &v) in vars.iter().enumerate().rev() {
                strides[i] = acc;
                acc *= dims[v];
            }
            let mut table = vec![0.0; acc];
            let mut digits = vec![0usize; k];
            for &p in &probs {
                let idx: usize = vars
                    .iter()
                    .zip(&strides)
                    .map(|(&v, &st)| digits[v] * st)
                    .sum();
                table[idx] += p;
                for j in (0..k).rev() {
                    digits[j] += 1;
                    if digits[j] < dims[j] {
                        break;
                    }
                    digits[j] = 0;
                }
            }
            let h = entropy_of(&table);
            marginals.push(Marginal {
                vars,
                strides,
                log2p: log2_table(&table),
                h,
            });
        }
        Ok(Self {
            dims,
            probs,
            marginals,
        })
    }

    /// Two-variable joint from a [`JointPmf`].
    pub fn from_pair(joint: &JointPmf) -> Self {
        Self::new(vec![joint.nx(), joint.ny()], joint.table().to_vec()).expect("valid joint pmf")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Entropy of the full joint in bits.
    pub fn entropy(&self) -> f64 {
        self.marginals.last().expect("at least one marginal").h
    }

    fn check(&self, seqs: &[&[usize]]) -> Result<usize> {
        if seqs.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "{} sequences for {} variables",
                seqs.len(),
                self.dims.len()
            )));
        }
        let n = seqs[0].len();
        if n == 0 || seqs.iter().any(|s| s.len() != n) {
            return Err(Error::Shape(
                "sequences must be nonempty and of equal length".into(),
            ));
        }
        for (s, &d) in seqs.iter().zip(&self.dims) {
            if s.iter().any(|&v| v >= d) {
                return Err(Error::Domain("symbol index out of range".into()));
            }
        }
        Ok(n)
    }

    /// Typicality of the tuple of sequences under every marginal.
    pub fn is_typical(&self, seqs: &[&[usize]], eps: f64) -> Result<bool> {
        let n = self.check(seqs)?;
        Ok(self.is_typical_unchecked(seqs, n, eps))
    }

    fn is_typical_unchecked(&self, seqs: &[&[usize]], n: usize, eps: f64) -> bool {
        (1..=self.marginals.len() as u32).all(|mask| self.marginal_ok(mask, seqs, n, eps))
    }

    /// Typicality under the marginal of the variables in `mask` (bit `j` set
    /// for variable `j`). Sequences of the other variables are ignored.
    pub(crate) fn marginal_ok(&self, mask: u32, seqs: &[&[usize]], n: usize, eps: f64) -> bool {
        let m = &self.marginals[mask as usize - 1];
        let mut s = 0.0;
        for t in 0..n {
            let idx: usize = m
                .vars
                .iter()
                .zip(&m.strides)
                .map(|(&v, &st)| seqs[v][t] * st)
                .sum();
            s += m.log2p[idx];
        }
        s.is_finite() && within(-s / n as f64, m.h, eps)
    }
}

/// Joint typicality of a sequence pair: both marginals and the joint.
pub fn is_jointly_typical(
    x_seq: &[usize],
    y_seq: &[usize],
    joint: &JointPmf,
    config: &TypConfig,
) -> Result<bool> {
    MultiJoint::from_pair(joint).is_typical(&[x_seq, y_seq], config.eps)
}

/// Number of jointly typical pairs, by exhaustive enumeration.
pub fn count_jointly_typical(joint: &JointPmf, config: &TypConfig) -> Result<u64> {
    config.validate()?;
    let (nx, ny, n) = (joint.nx(), joint.ny(), config.n);
    let k = nx * ny;
    config.check_budget((k as f64).powi(n as i32))?;
    let mj = MultiJoint::from_pair(joint);
    let total = (k as u64).pow(n as u32);
    let counts = par::map_chunks(0..total, CHUNK, |range| {
        let mut c = 0u64;
        let mut xs = vec![0; n];
        let mut ys = vec![0; n];
        for rank in range {
            for (t, pair) in decode_rank(rank, k, n).into_iter().enumerate() {
                xs[t] = pair / ny;
                ys[t] = pair % ny;
            }
            if mj.is_typical_unchecked(&[&xs, &ys], n, config.eps) {
                c += 1;
            }
        }
        c
    });
    Ok(counts.into_iter().sum())
}

/// Number of `y` sequences jointly typical with `x_seq`, summed over
/// conditional type classes.
pub fn count_conditionally_typical(
    x_seq: &[usize],
    joint: &JointPmf,
    config: &TypConfig,
) -> Result<f64> {
    let input = Pmf::new(joint.marginal_x())?;
    let transition = transition_from_joint(joint)?;
    let eval = ConditionalEvaluator::new(x_seq, &input, &transition, config)?;
    eval.exact(|_, log_mult| log_mult.exp())
}

/// Rows `p(y|x)` of a joint pmf; rows of zero-probability inputs are uniform.
fn transition_from_joint(joint: &JointPmf) -> Result<Dmc> {
    let px = joint.marginal_x();
    let ny = joint.ny();
    let mut w = Vec::with_capacity(joint.nx() * ny);
    for (x, &p) in px.iter().enumerate() {
        if p > 0.0 {
            w.extend((0..ny).map(|y| joint.get(x, y) / p));
        } else {
            w.extend(std::iter::repeat_n(1.0 / ny as f64, ny));
        }
    }
    Dmc::new(
        joint.nx(),
        ny,
        w,
        (0..joint.nx()).map(|i| i as f64).collect(),
    )
}

/// `Pr{(u, V) ∈ A_ε(UV) | U = u}` together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondProb {
    pub value: f64,
    /// Standard error of a Monte Carlo estimate; `None` when exact.
    pub std_err: Option<f64>,
}

impl CondProb {
    pub fn is_exact(&self) -> bool {
        self.std_err.is_none()
    }
}

/// Conditional type enumeration for one input sequence.
///
/// The joint typicality of `(u, v)` depends on `v` only through the counts
/// `k(a, b)` of symbol pairs, so the exact probability is a sum over
/// per-letter compositions weighted by multinomial coefficients.
struct ConditionalEvaluator<'a> {
    n: usize,
    eps: f64,
    u_ok: bool,
    /// Canonical (sorted) representative of the input type.
    u_sorted: Vec<usize>,
    /// Input letters present in `u` with their counts.
    letters: Vec<(usize, usize)>,
    transition: &'a Dmc,
    log2_pv: Vec<f64>,
    log2_puv: Vec<f64>,
    h_v: f64,
    h_uv: f64,
    mc_samples: u64,
    seed: u64,
    budget: u64,
}

impl<'a> ConditionalEvaluator<'a> {
    fn new(u_seq: &[usize], input: &Pmf, transition: &'a Dmc, config: &TypConfig) -> Result<Self> {
        config.validate()?;
        if input.len() != transition.nin() {
            return Err(Error::Shape(
                "input pmf does not match the transition".into(),
            ));
        }
        if u_seq.is_empty() || u_seq.iter().any(|&u| u >= input.len()) {
            return Err(Error::Shape(
                "input sequence is empty or out of range".into(),
            ));
        }
        let nv = transition.nout();
        let mut puv = Vec::with_capacity(input.len() * nv);
        for (u, &pu) in input.probs().iter().enumerate() {
            puv.extend(transition.row(u).iter().map(|w| pu * w));
        }
        let mut pv = vec![0.0; nv];
        for row in puv.chunks(nv) {
            for (a, b) in pv.iter_mut().zip(row) {
                *a += b;
            }
        }
        let mut counts = vec![0usize; input.len()];
        for &u in u_seq {
            counts[u] += 1;
        }
        let n = u_seq.len();
        let u_ok = is_typical(u_seq, input, config);
        let mut u_sorted = u_seq.to_vec();
        u_sorted.sort_unstable();
        Ok(Self {
            n,
            eps: config.eps,
            u_ok,
            u_sorted,
            letters: counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(a, &c)| (a, c))
                .collect(),
            transition,
            log2_pv: log2_table(&pv),
            log2_puv: log2_table(&puv),
            h_v: entropy_of(&pv),
            h_uv: entropy_of(&puv),
            mc_samples: config.mc_samples,
            seed: config.seed,
            budget: config.budget,
        })
    }

    /// Number of conditional type combinations to enumerate.
    fn type_count(&self) -> f64 {
        self.letters
            .iter()
            .map(|&(a, c)| {
                let s = self.transition.row(a).iter().filter(|&&w| w > 0.0).count();
                binomial_f64(c + s - 1, s - 1)
            })
            .product()
    }

    /// Compositions of `count` over the support of row `a`, each with its
    /// V and joint log-likelihood contributions, the log conditional
    /// probability and the log multinomial coefficient.
    fn letter_classes(&self, a: usize, count: usize) -> Vec<[f64; 4]> {
        let nv = self.transition.nout();
        let row = self.transition.row(a);
        let support: Vec<usize> = (0..nv).filter(|&b| row[b] > 0.0).collect();
        let mut out = Vec::new();
        let mut k = vec![0usize; support.len()];
        let ln_fact_c = libm::lgamma(count as f64 + 1.0);
        loop_compositions(&mut k, 0, count, &mut |k| {
            let mut lv = 0.0;
            let mut luv = 0.0;
            let mut lp = ln_fact_c;
            let mut lm = ln_fact_c;
            for (&b, &kb) in support.iter().zip(k.iter()) {
                if kb == 0 {
                    continue;
                }
                let kb_f = kb as f64;
                lv += kb_f * self.log2_pv[b];
                luv += kb_f * self.log2_puv[a * nv + b];
                let lf = libm::lgamma(kb_f + 1.0);
                lp += kb_f * row[b].ln() - lf;
                lm -= lf;
            }
            out.push([lv, luv, lp, lm]);
        });
        out
    }

    /// Sums `weight(log_prob, log_multinomial)` over jointly typical
    /// conditional types.
    fn exact<F: Fn(f64, f64) -> f64 + Sync>(&self, weight: F) -> Result<f64> {
        if !self.u_ok {
            return Ok(0.0);
        }
        let required = self.type_count();
        if required > self.budget as f64 {
            return Err(Error::Budget {
                required,
                budget: self.budget,
            });
        }
        let lists: Vec<Vec<[f64; 4]>> = self
            .letters
            .iter()
            .map(|&(a, c)| self.letter_classes(a, c))
            .collect();
        let n = self.n as f64;
        let (h_v, h_uv, eps) = (self.h_v, self.h_uv, self.eps);
        // split the outermost list across workers
        let first = &lists[0];
        let rest = &lists[1..];
        let parts = par::map_slice(first, |head| {
            let mut acc = 0.0;
            walk(rest, *head, &mut |t| {
                if within(-t[0] / n, h_v, eps) && within(-t[1] / n, h_uv, eps) {
                    acc += weight(t[2], t[3]);
                }
            });
            acc
        });
        Ok(parts.into_iter().sum())
    }

    fn monte_carlo(&self) -> CondProb {
        if !self.u_ok {
            return CondProb {
                value: 0.0,
                std_err: Some(0.0),
            };
        }
        let sampler = self.transition.sampler();
        let nv = self.transition.nout();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut hits = 0u64;
        for _ in 0..self.mc_samples {
            let mut lv = 0.0;
            let mut luv = 0.0;
            for &u in &self.u_sorted {
                let v = sampler.sample(u, rng.random::<f64>());
                lv += self.log2_pv[v];
                luv += self.log2_puv[u * nv + v];
            }
            let n = self.n as f64;
            if within(-lv / n, self.h_v, self.eps) && within(-luv / n, self.h_uv, self.eps) {
                hits += 1;
            }
        }
        let m = self.mc_samples as f64;
        let p = hits as f64 / m;
        CondProb {
            value: p,
            std_err: Some((p * (1.0 - p) / m).sqrt()),
        }
    }

    fn probability(&self) -> Result<CondProb> {
        match self.exact(|lp, _| lp.exp()) {
            Ok(v) => Ok(CondProb {
                value: v.clamp(0.0, 1.0),
                std_err: None,
            }),
            Err(Error::Budget { .. }) => Ok(self.monte_carlo()),
            Err(e) => Err(e),
        }
    }
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    (libm::lgamma(n as f64 + 1.0)
        - libm::lgamma(k as f64 + 1.0)
        - libm::lgamma((n - k) as f64 + 1.0))
    .exp()
    .round()
}

/// Calls `f` on every composition of `remaining` into `k[pos..]`.
fn loop_compositions<F: FnMut(&[usize])>(k: &mut [usize], pos: usize, remaining: usize, f: &mut F) {
    if pos + 1 == k.len() {
        k[pos] = remaining;
        f(k);
        return;
    }
    for c in (0..=remaining).rev() {
        k[pos] = c;
        loop_compositions(k, pos + 1, remaining - c, f);
    }
    k[pos] = 0;
}

/// Visits every combination of one entry per list, summing entries.
fn walk<F: FnMut([f64; 4])>(lists: &[Vec<[f64; 4]>], acc: [f64; 4], f: &mut F) {
    match lists.split_first() {
        None => f(acc),
        Some((head, tail)) => {
            for e in head {
                walk(
                    tail,
                    [acc[0] + e[0], acc[1] + e[1], acc[2] + e[2], acc[3] + e[3]],
                    f,
                );
            }
        }
    }
}

/// `Pr{(u, V) ∈ A_ε(UV) | U = u}` with `V` drawn from `transition` given
/// `u` and the joint `p(u) p(v|u)`.
///
/// Exact when the number of conditional type combinations fits the budget,
/// otherwise a seeded Monte Carlo estimate over `mc_samples` draws.
pub fn conditional_typical_prob(
    u_seq: &[usize],
    input: &Pmf,
    transition: &Dmc,
    config: &TypConfig,
) -> Result<CondProb> {
    ConditionalEvaluator::new(u_seq, input, transition, config)?.probability()
}

/// Typical input sequences that lead to jointly typical outputs with
/// probability at least `1 − ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BTypicalSet {
    pub config: TypConfig,
    pub input: Pmf,
    /// Member ranks in increasing order.
    pub members: Vec<u64>,
    /// Conditional probability of each member.
    pub cond_probs: Vec<f64>,
    /// Whether every conditional probability was computed exactly.
    pub exact: bool,
    /// Size and probability of the underlying typical set.
    pub typical_count: usize,
    pub typical_mass: f64,
    /// `Pr{(U,V) ∈ A_ε(UV)}`.
    pub joint_typical_mass: f64,
    /// `Σ_{u ∈ B} p(u)`.
    pub mass: f64,
}

impl BTypicalSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sequence(&self, i: usize) -> Vec<usize> {
        decode_rank(self.members[i], self.input.len(), self.config.n)
    }
}

fn composition(seq: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &s in seq {
        c[s] += 1;
    }
    c
}

/// Filters the typical set of `input` by the conditional joint-typicality
/// probability under `transition`.
pub fn enumerate_b_typical(
    input: &Pmf,
    transition: &Dmc,
    config: &TypConfig,
) -> Result<BTypicalSet> {
    if input.len() != transition.nin() {
        return Err(Error::Shape(
            "input pmf does not match the transition".into(),
        ));
    }
    let typical = enumerate_typical(input, config)?;
    let k = input.len();
    let n = config.n;
    // conditional probabilities depend only on the input type
    let mut classes: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, &rank) in typical.members.iter().enumerate() {
        classes
            .entry(composition(&decode_rank(rank, k, n), k))
            .or_default()
            .push(i);
    }
    let keys: Vec<&Vec<usize>> = classes.keys().collect();
    let probs = par::map_slice(&keys, |comp| {
        let rep: Vec<usize> = comp
            .iter()
            .enumerate()
            .flat_map(|(s, &c)| std::iter::repeat_n(s, c))
            .collect();
        conditional_typical_prob(&rep, input, transition, config)
    });
    let mut per_member = vec![
        CondProb {
            value: 0.0,
            std_err: None
        };
        typical.len()
    ];
    for (key, p) in keys.iter().zip(probs) {
        let p = p?;
        for &i in &classes[*key] {
            per_member[i] = p;
        }
    }
    let lp = log2_table(input.probs());
    let prob_of = |rank: u64| -> f64 {
        decode_rank(rank, k, n)
            .iter()
            .map(|&s| lp[s])
            .sum::<f64>()
            .exp2()
    };
    let mut members = Vec::new();
    let mut cond_probs = Vec::new();
    let mut exact = true;
    let mut mass = 0.0;
    let mut joint_typical_mass = 0.0;
    for (&rank, cp) in typical.members.iter().zip(&per_member) {
        let pu = prob_of(rank);
        exact &= cp.is_exact();
        joint_typical_mass += pu * cp.value;
        if cp.value >= 1.0 - config.eps - SLACK {
            members.push(rank);
            cond_probs.push(cp.value);
            mass += pu;
        }
    }
    Ok(BTypicalSet {
        config: *config,
        input: input.clone(),
        members,
        cond_probs,
        exact,
        typical_count: typical.len(),
        typical_mass: typical.mass,
        joint_typical_mass,
        mass,
    })
}

/// Measured B-typicality properties at one `(n, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub n: usize,
    pub eps: f64,
    /// `H(U)` in bits.
    pub h_u: f64,
    pub typical_count: usize,
    pub b_count: usize,
    /// `Pr{(U,V) ∈ A_ε(UV)}`.
    pub joint_typical_mass: f64,
    /// Every member of B satisfies `2^{−n(H+ε)} ≤ p(u) ≤ 2^{−n(H−ε)}`.
    pub p1_ok: bool,
    /// `Σ_{u ∉ B} p(u)`.
    pub p2_mass: f64,
    /// `Pr{(U,V) ∈ A_ε(UV)} ≥ 1 − ε²`, the regime where the asymptotic
    /// properties are guaranteed.
    pub large_n_proxy: bool,
    /// `p2_mass ≤ ε`, evaluated only under the proxy.
    pub p2_ok: Option<bool>,
    /// `|B| ≤ 2^{n(H+ε)}`.
    pub p3_upper_ok: bool,
    /// `|B| ≥ (1−ε) 2^{n(H−ε)}`, evaluated only under the proxy.
    pub p3_lower_ok: Option<bool>,
}

/// Checks the three B-typicality properties on an enumerated instance.
pub fn lemma1_report(input: &Pmf, transition: &Dmc, config: &TypConfig) -> Result<Lemma1Report> {
    let b = enumerate_b_typical(input, transition, config)?;
    Ok(lemma1_from_set(&b))
}

/// [`lemma1_report`] for an already enumerated set.
pub fn lemma1_from_set(b: &BTypicalSet) -> Lemma1Report {
    let (n, eps) = (b.config.n, b.config.eps);
    let h_u = entropy_of(b.input.probs());
    let lp = log2_table(b.input.probs());
    let k = b.input.len();
    let p1_ok = b.members.iter().all(|&r| {
        let s: f64 = decode_rank(r, k, n).iter().map(|&x| lp[x]).sum();
        s >= -(n as f64) * (h_u + eps) - SLACK && s <= -(n as f64) * (h_u - eps) + SLACK
    });
    let p2_mass = (1.0 - b.mass).max(0.0);
    let (p3_upper_ok, large_n_proxy, p3_lower_ok) =
        cardinality_bounds(b.len(), n, h_u, eps, b.joint_typical_mass, 1.0 - eps * eps);
    Lemma1Report {
        n,
        eps,
        h_u,
        typical_count: b.typical_count,
        b_count: b.len(),
        joint_typical_mass: b.joint_typical_mass,
        p1_ok,
        p2_mass,
        large_n_proxy,
        p2_ok: large_n_proxy.then_some(p2_mass <= eps + SLACK),
        p3_upper_ok,
        p3_lower_ok,
    }
}

/// Renders a set as a JSON header line followed by one comma-separated
/// symbol line per member.
pub fn render_dump<I: IntoIterator<Item = Vec<usize>>>(
    header: &serde_json::Value,
    sequences: I,
) -> String {
    let mut out = header.to_string();
    out.push('\n');
    for seq in sequences {
        let line: Vec<String> = seq.iter().map(|s| s.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Dump of a typical set with its bound checks.
pub fn dump_typical(set: &TypicalSet) -> String {
    let header = serde_json::json!({
        "kind": "typical",
        "pmf": set.pmf.probs(),
        "n": set.config.n,
        "eps": set.config.eps,
        "entropy": set.h,
        "count": set.len(),
        "mass": set.mass,
        "bounds": set.bounds,
    });
    render_dump(&header, (0..set.len()).map(|i| set.sequence(i)))
}

/// Dump of a B-typical set with its Lemma-1 report.
pub fn dump_b_typical(set: &BTypicalSet) -> String {
    let header = serde_json::json!({
        "kind": "b_typical",
        "pmf": set.input.probs(),
        "n": set.config.n,
        "eps": set.config.eps,
        "count": set.len(),
        "exact": set.exact,
        "lemma1": lemma1_from_set(set),
    });
    render_dump(&header, (0..set.len()).map(|i| set.sequence(i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bsc(p: f64) -> Dmc {
        Dmc::new(2, 2, vec![1.0 - p, p, p, 1.0 - p], vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn uniform_binary_always_typical() {
        let u = Pmf::uniform(2);
        for n in 1..8 {
            let cfg = TypConfig::new(n, 1e-3);
            for r in 0..(1u64 << n) {
                assert!(is_typical(&decode_rank(r, 2, n), &u, &cfg));
            }
        }
    }

    #[test]
    fn skewed_truth_table() {
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        let cfg = TypConfig::new(4, 0.1);
        for r in 0..16u64 {
            let s = decode_rank(r, 2, 4);
            let zeros = s.iter().filter(|&&x| x == 0).count();
            assert_eq!(is_typical(&s, &p, &cfg), zeros == 1, "{s:?}");
        }
        let z = Pmf::new(vec![0.0, 1.0]).unwrap();
        assert!(!is_typical(&[0, 1, 1], &z, &cfg));
    }

    #[test]
    fn uniform_set_is_everything() {
        let s = enumerate_typical(&Pmf::uniform(2), &TypConfig::new(3, 0.01)).unwrap();
        assert_eq!(s.members, (0..8).collect::<Vec<_>>());
        assert!(s.bounds.upper_ok && s.bounds.member_bounds_ok);
        assert_eq!(s.bounds.lower_ok, Some(true));
    }

    #[test]
    fn budget_is_enforced() {
        let mut cfg = TypConfig::new(20, 0.1);
        cfg.budget = 1000;
        assert!(matches!(
            enumerate_typical(&Pmf::uniform(2), &cfg),
            Err(Error::Budget { budget: 1000, .. })
        ));
    }

    #[test]
    fn joint_examples() {
        let cfg = TypConfig::new(5, 0.05);
        let prod = JointPmf::new(2, 2, vec![0.25; 4]).unwrap();
        assert!(is_jointly_typical(&[0, 1, 1, 0, 1], &[1, 1, 0, 0, 0], &prod, &cfg).unwrap());
        let corr = JointPmf::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(is_jointly_typical(&[0, 1, 1, 0, 1], &[0, 1, 1, 0, 1], &corr, &cfg).unwrap());
        assert!(!is_jointly_typical(&[0, 1, 1, 0, 1], &[0, 1, 1, 0, 0], &corr, &cfg).unwrap());
        assert!(matches!(
            is_jointly_typical(&[0, 1], &[0], &corr, &cfg),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn identity_transition_conditional() {
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        let id = Dmc::identity(vec![0.0, 1.0]);
        let cfg = TypConfig::new(4, 0.1);
        for r in 0..16u64 {
            let u = decode_rank(r, 2, 4);
            let cp = conditional_typical_prob(&u, &p, &id, &cfg).unwrap();
            let joint = JointPmf::from_channel(&p, &id).unwrap();
            let expect = if is_jointly_typical(&u, &u, &joint, &cfg).unwrap() {
                1.0
            } else {
                0.0
            };
            assert!((cp.value - expect).abs() < 1e-12 && cp.is_exact());
        }
    }

    #[test]
    fn monte_carlo_fallback_tracks_exact() {
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        let ch = bsc(0.1);
        let mut cfg = TypConfig::new(10, 0.2);
        let u = [1, 1, 0, 1, 1, 1, 0, 1, 1, 0];
        let exact = conditional_typical_prob(&u, &p, &ch, &cfg).unwrap();
        cfg.budget = 1;
        cfg.mc_samples = 20_000;
        let mc = conditional_typical_prob(&u, &p, &ch, &cfg).unwrap();
        let se = mc.std_err.unwrap();
        assert!(
            (mc.value - exact.value).abs() < 4.0 * se + 1e-9,
            "{mc:?} {exact:?}"
        );
    }

    #[test]
    fn b_set_examples() {
        let id = Dmc::identity(vec![0.0, 1.0]);
        let cfg = TypConfig::new(4, 0.1);
        let b = enumerate_b_typical(&Pmf::uniform(2), &id, &cfg).unwrap();
        assert_eq!(b.len(), 16);

        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        let ch = bsc(0.1);
        let cfg = TypConfig::new(8, 0.999);
        let a = enumerate_typical(&p, &cfg).unwrap();
        let b = enumerate_b_typical(&p, &ch, &cfg).unwrap();
        assert!(b.len() as f64 >= 0.9 * a.len() as f64);
        assert!(b.members.iter().all(|m| a.members.binary_search(m).is_ok()));
    }

    #[test]
    fn lemma_examples() {
        let id = Dmc::identity(vec![0.0, 1.0]);
        let r = lemma1_report(&Pmf::uniform(2), &id, &TypConfig::new(6, 0.1)).unwrap();
        assert!(r.p1_ok && r.p2_mass.abs() < 1e-12 && r.p3_upper_ok);

        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        // Brute force over all 2^10 output sequences per input type gives a
        // B-set mass of 0.266828; n = 10 is far from the asymptotic regime.
        let r = lemma1_report(&p, &bsc(0.05), &TypConfig::new(10, 0.25)).unwrap();
        assert!(r.p1_ok && r.p3_upper_ok);
        assert!((r.p2_mass - 0.733172068).abs() < 1e-8, "{r:?}");
        assert_eq!(r.p2_ok, None);

        let p = Pmf::new(vec![0.4, 0.6]).unwrap();
        let r = lemma1_report(&p, &bsc(0.05), &TypConfig::new(8, 0.4)).unwrap();
        assert!(r.large_n_proxy);
        assert!((r.p2_mass - 0.0168).abs() < 1e-4, "{r:?}");
        assert_eq!(r.p2_ok, Some(true));
    }

    #[test]
    fn dump_layout() {
        let s = enumerate_typical(&Pmf::uniform(2), &TypConfig::new(3, 0.1)).unwrap();
        let d = dump_typical(&s);
        let lines: Vec<&str> = d.lines().collect();
        assert_eq!(lines.len(), 9);
        let h: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(h["count"], 8);
        assert_eq!(lines[1], "0,0,0");
        assert_eq!(lines[8], "1,1,1");
    }

    proptest! {
        #[test]
        fn rank_round_trip(k in 2usize..6, n in 1usize..10, seed in any::<u64>()) {
            let total = (k as u64).pow(n as u32);
            let r = seed % total;
            prop_assert_eq!(encode_rank(&decode_rank(r, k, n), k), r);
        }

        #[test]
        fn conditional_probability_in_unit_interval(p0 in 0.05f64..0.95, q in 0.0f64..0.5, eps in 0.01f64..0.5, r in 0u64..64) {
            let p = Pmf::new(vec![p0, 1.0 - p0]).unwrap();
            let cp = conditional_typical_prob(&decode_rank(r, 2, 6), &p, &bsc(q), &TypConfig::new(6, eps)).unwrap();
            prop_assert!((0.0..=1.0).contains(&cp.value));
        }
    }
}
