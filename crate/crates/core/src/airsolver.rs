//! Power-constrained capacity of ASK inputs and the operating points of
//! sign-coding.
//!
//! Noise has unit variance and the power budget is `P = 10^(snr_db/10)`. The
//! constellation is scaled by a free factor `Δ` (points `Δ·x`), so the
//! capacity at a given SNR is
//!
//! ```text
//! C(P) = max over Δ and symmetric p(x) with Δ² E[X²] ≤ P of I(X;Y).
//! ```
//!
//! For a fixed `Δ` the inner program is solved by Blahut–Arimoto over the
//! amplitude pmf with a Lagrange multiplier on the power; the outer search
//! over `Δ` is a coarse grid followed by golden-section refinement.

use serde::Serialize;

use crate::alphabets::{brgc_label, AskConstellation, LabelMap};
use crate::channel::{awgn_dmc, Dmc, Quantizer};
use crate::infomeasures::{
    conditional_entropy_x_given_y, entropy, golden_max, mutual_information, r_bmd, Pmf,
};
use crate::{par, Error, Result};

const LN2: f64 = std::f64::consts::LN_2;
/// Duality-gap target of the inner solver, in bits.
const GAP_TOL_BITS: f64 = 1e-9;
/// Per-iteration improvement below which the inner solver stops, in bits.
const STALL_TOL_BITS: f64 = 1e-12;
/// Iteration cap of the inner solver.
pub const MAX_ITERATIONS: usize = 10_000;
/// Points of the coarse grid over the scale factor.
const SCALE_GRID: usize = 12;

/// One point of the capacity-SNR curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AirPoint {
    pub snr_db: f64,
    /// Capacity in bits per real dimension.
    pub capacity: f64,
    /// Optimal amplitude pmf.
    pub p_a_star: Pmf,
    pub h_a: f64,
    /// `capacity − h_a`, clamped to `[0, 1)`.
    pub gamma: f64,
    /// MI of the uniform input at the same SNR.
    pub mi_uniform: f64,
    /// BMD rate of the optimal input with BRGC labels.
    pub r_bmd_star: f64,
    /// Optimal constellation scale `Δ` (unit noise variance).
    pub scale: f64,
}

/// Maxwell–Boltzmann amplitude pmf `p(a) ∝ exp(−λ a²)`.
pub fn mb_family(constellation: &AskConstellation, lambda: f64) -> Pmf {
    let amps = constellation.amplitudes();
    // shift the exponent by the smallest amplitude to avoid underflow
    let a0 = f64::from(amps[0]);
    let w: Vec<f64> = amps
        .iter()
        .map(|&a| (-lambda * (f64::from(a).powi(2) - a0 * a0)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    Pmf::new(w.iter().map(|v| v / s).collect()).expect("normalized weights")
}

fn snr_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

fn amplitude_energy(constellation: &AskConstellation, amp: &[f64]) -> f64 {
    constellation
        .amplitudes()
        .iter()
        .zip(amp)
        .map(|(&a, p)| p * f64::from(a * a))
        .sum()
}

/// Channel for the scaled constellation `Δ·x` with unit noise variance.
fn scaled_channel(
    constellation: &AskConstellation,
    scale: f64,
    quantizer: &Quantizer,
) -> Result<Dmc> {
    let pts: Vec<f64> = constellation
        .points()
        .iter()
        .map(|&x| scale * f64::from(x))
        .collect();
    awgn_dmc(&pts, 1.0, quantizer)
}

/// Row pairs `(W(·|−a), W(·|+a))` for each amplitude.
struct AmplitudeRows<'a> {
    dmc: &'a Dmc,
    rows: Vec<[usize; 2]>,
}

impl<'a> AmplitudeRows<'a> {
    fn new(constellation: &AskConstellation, dmc: &'a Dmc) -> Self {
        let rows = (0..constellation.num_amplitudes())
            .map(|i| {
                [
                    constellation.point_index(crate::alphabets::Sign::Neg, i),
                    constellation.point_index(crate::alphabets::Sign::Pos, i),
                ]
            })
            .collect();
        Self { dmc, rows }
    }

    /// Output pmf and per-amplitude divergences `D_a` (nats) under the
    /// symmetric input built from `amp`.
    fn divergences(&self, amp: &[f64], q: &mut [f64], d: &mut [f64]) {
        q.iter_mut().for_each(|v| *v = 0.0);
        for (pa, r) in amp.iter().zip(&self.rows) {
            for &x in r {
                for (qy, w) in q.iter_mut().zip(self.dmc.row(x)) {
                    *qy += 0.5 * pa * w;
                }
            }
        }
        for (da, r) in d.iter_mut().zip(&self.rows) {
            let mut acc = 0.0;
            for &x in r {
                for (&w, &qy) in self.dmc.row(x).iter().zip(q.iter()) {
                    if w > 0.0 {
                        acc += w * (w / qy).ln();
                    }
                }
            }
            *da = 0.5 * acc;
        }
    }
}

/// Outcome of the inner solver at one scale.
#[derive(Debug, Clone)]
struct InnerSolution {
    amp: Vec<f64>,
    /// Mutual information in bits.
    value: f64,
}

/// Tilted update `p(a) exp(μ (D_a − λ c_a))` normalized.
fn tilt(p: &[f64], d: &[f64], cost: &[f64], mu: f64, lambda: f64, out: &mut [f64]) {
    let m = p
        .iter()
        .zip(d)
        .zip(cost)
        .filter(|((pa, _), _)| **pa > 0.0)
        .map(|((_, da), ca)| da - lambda * ca)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for i in 0..p.len() {
        out[i] = if p[i] > 0.0 {
            p[i] * (mu * (d[i] - lambda * cost[i] - m)).exp()
        } else {
            0.0
        };
        s += out[i];
    }
    out.iter_mut().for_each(|v| *v /= s);
}

fn mean(p: &[f64], c: &[f64]) -> f64 {
    p.iter().zip(c).map(|(a, b)| a * b).sum()
}

/// Tilted update whose multiplier is the smallest `λ ≥ 0` meeting the budget.
fn constrained_step(p: &[f64], d: &[f64], cost: &[f64], power: f64, mu: f64, out: &mut [f64]) {
    tilt(p, d, cost, mu, 0.0, out);
    if mean(out, cost) <= power {
        return;
    }
    let mut hi = 1.0;
    loop {
        tilt(p, d, cost, mu, hi, out);
        if mean(out, cost) <= power || hi > 1e12 {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        tilt(p, d, cost, mu, mid, out);
        if mean(out, cost) <= power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    tilt(p, d, cost, mu, hi, out);
}

/// Upper bound `min over λ ≥ 0 of max_a (D_a − λ c_a) + λ P` on the
/// constrained capacity, valid for any output pmf.
fn dual_bound(d: &[f64], cost: &[f64], power: f64) -> f64 {
    let envelope = |lambda: f64| -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (da, ca) in d.iter().zip(cost) {
            let v = da - lambda * ca;
            if v > best.0 {
                best = (v, *ca);
            }
        }
        (best.0 + lambda * power, best.1)
    };
    let (g0, c0) = envelope(0.0);
    if c0 <= power {
        return g0;
    }
    let mut hi = 1.0;
    while envelope(hi).1 > power && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if envelope(mid).1 > power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    envelope(lo).0.min(envelope(hi).0)
}

/// Largest step exponent of the accelerated update.
const MAX_STEP: f64 = 1024.0;

/// Blahut–Arimoto over the amplitude pmf with the power constraint
/// `Σ p(a) c_a ≤ power`, starting from a feasible `init`.
///
/// The update exponent doubles while the mutual information keeps
/// increasing and falls back to the plain step otherwise.
fn blahut_arimoto(
    rows: &AmplitudeRows,
    cost: &[f64],
    power: f64,
    init: &[f64],
) -> Result<InnerSolution> {
    let na = cost.len();
    let nout = rows.dmc.nout();
    let mut p = init.to_vec();
    let mut q = vec![0.0; nout];
    let mut d = vec![0.0; na];
    let mut next = vec![0.0; na];
    let mut d_next = vec![0.0; na];
    rows.divergences(&p, &mut q, &mut d);
    let mut value = mean(&p, &d);
    let mut mu = 1.0;
    for _ in 0..MAX_ITERATIONS {
        if (dual_bound(&d, cost, power) - value) / LN2 < GAP_TOL_BITS {
            return Ok(InnerSolution {
                amp: p,
                value: value / LN2,
            });
        }
        let next_value = loop {
            constrained_step(&p, &d, cost, power, mu, &mut next);
            rows.divergences(&next, &mut q, &mut d_next);
            let v = mean(&next, &d_next);
            if v >= value || mu == 1.0 {
                break v;
            }
            mu = 1.0;
        };
        let stalled = (next_value - value).abs() / LN2 < STALL_TOL_BITS;
        if next_value > value {
            mu = (2.0 * mu).min(MAX_STEP);
        }
        std::mem::swap(&mut p, &mut next);
        std::mem::swap(&mut d, &mut d_next);
        value = next_value;
        if stalled {
            return Ok(InnerSolution {
                amp: p,
                value: value / LN2,
            });
        }
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        last_value: value / LN2,
        last_iterate: p,
    })
}

/// Feasible Maxwell–Boltzmann starting point: the uniform pmf if it meets the
/// budget, otherwise the family member with energy exactly `energy_budget`.
fn mb_start(constellation: &AskConstellation, energy_budget: f64) -> Vec<f64> {
    let uniform = mb_family(constellation, 0.0);
    if amplitude_energy(constellation, uniform.probs()) <= energy_budget {
        return uniform.probs().to_vec();
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while amplitude_energy(constellation, mb_family(constellation, hi).probs()) > energy_budget {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if amplitude_energy(constellation, mb_family(constellation, mid).probs()) > energy_budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mb_family(constellation, hi).probs().to_vec()
}

fn solve_at_scale(
    constellation: &AskConstellation,
    scale: f64,
    power: f64,
    quantizer: &Quantizer,
) -> Result<(InnerSolution, Dmc)> {
    let dmc = scaled_channel(constellation, scale, quantizer)?;
    let rows = AmplitudeRows::new(constellation, &dmc);
    let cost: Vec<f64> = constellation
        .amplitudes()
        .iter()
        .map(|&a| (scale * f64::from(a)).powi(2))
        .collect();
    let init = mb_start(constellation, power / (scale * scale));
    let sol = blahut_arimoto(&rows, &cost, power, &init)?;
    Ok((sol, dmc))
}

/// Capacity over the scale `Δ ∈ [√P / a_max, √P / a_min]`.
fn optimize_scale(
    constellation: &AskConstellation,
    power: f64,
    quantizer: &Quantizer,
) -> Result<(f64, InnerSolution, Dmc)> {
    let amps = constellation.amplitudes();
    let lo = power.sqrt() / f64::from(*amps.last().expect("nonempty"));
    let hi = power.sqrt() / f64::from(amps[0]);
    if constellation.num_amplitudes() == 1 || hi - lo <= 0.0 {
        let (sol, dmc) = solve_at_scale(constellation, hi, power, quantizer)?;
        return Ok((hi, sol, dmc));
    }
    let grid: Vec<f64> = (0..=SCALE_GRID)
        .map(|k| lo + (hi - lo) * k as f64 / SCALE_GRID as f64)
        .collect();
    let values: Vec<Result<f64>> = par::map_slice(&grid, |&s| {
        solve_at_scale(constellation, s, power, quantizer).map(|(sol, _)| sol.value)
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let k = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(SCALE_GRID)];
    let mut failure = None;
    let (s_star, _) = golden_max(
        |s| match solve_at_scale(constellation, s, power, quantizer) {
            Ok((sol, _)) => sol.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        a,
        b,
        1e-7 * hi,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (s_best, _) = if values[k]
        > solve_at_scale(constellation, s_star, power, quantizer)?
            .0
            .value
    {
        (grid[k], ())
    } else {
        (s_star, ())
    };
    let (sol, dmc) = solve_at_scale(constellation, s_best, power, quantizer)?;
    Ok((s_best, sol, dmc))
}

/// Mutual information of the uniform input at `snr_db`.
pub fn mi_uniform(
    constellation: &AskConstellation,
    snr_db: f64,
    quantizer: &Quantizer,
) -> Result<f64> {
    let power = snr_to_power(snr_db);
    let uniform = Pmf::uniform(constellation.order());
    let energy = amplitude_energy(constellation, mb_family(constellation, 0.0).probs());
    let dmc = scaled_channel(constellation, (power / energy).sqrt(), quantizer)?;
    mutual_information(&uniform, &dmc)
}

/// Capacity of `constellation` under the average power constraint at
/// `snr_db`, restricted to symmetric inputs.
pub fn optimize_capacity(
    constellation: &AskConstellation,
    snr_db: f64,
    quantizer: &Quantizer,
) -> Result<AirPoint> {
    quantizer.validate()?;
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!("snr_db = {snr_db}")));
    }
    let power = snr_to_power(snr_db);
    let (scale, sol, dmc) = optimize_scale(constellation, power, quantizer)?;
    let p_a_star = Pmf::from_weights(&sol.amp)?;
    let symbol = Pmf::symmetric_from_amplitudes(constellation, &p_a_star)?;
    let capacity = mutual_information(&symbol, &dmc)?;
    let h_a = entropy(&p_a_star);
    let labels = brgc_label(constellation);
    Ok(AirPoint {
        snr_db,
        capacity,
        gamma: (capacity - h_a).clamp(0.0, 1.0 - f64::EPSILON),
        h_a,
        mi_uniform: mi_uniform(constellation, snr_db, quantizer)?,
        r_bmd_star: r_bmd(&symbol, &dmc, &labels)?,
        p_a_star,
        scale,
    })
}

/// Capacity at each SNR of `grid`; entries fail independently.
pub fn sweep(
    constellation: &AskConstellation,
    grid: &[f64],
    quantizer: &Quantizer,
) -> Vec<Result<AirPoint>> {
    par::map_slice(grid, |&snr| {
        optimize_capacity(constellation, snr, quantizer)
    })
}

/// SNR at which the optimal amplitude entropy equals capacity, together with
/// the rate there.
///
/// Bisects `H(A*) − C` on `bracket` until its magnitude is below 1e-4 bit.
pub fn find_basic_point(
    constellation: &AskConstellation,
    quantizer: &Quantizer,
    bracket: (f64, f64),
) -> Result<(f64, f64)> {
    let g = |snr: f64| -> Result<(f64, f64)> {
        let pt = optimize_capacity(constellation, snr, quantizer)?;
        Ok((pt.h_a - pt.capacity, pt.capacity))
    };
    let (mut lo, mut hi) = bracket;
    let (mut g_lo, c_lo) = g(lo)?;
    let (g_hi, c_hi) = g(hi)?;
    if g_lo.abs() < 1e-4 {
        return Ok((lo, c_lo));
    }
    if g_hi.abs() < 1e-4 {
        return Ok((hi, c_hi));
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let (g_mid, c_mid) = g(mid)?;
        if g_mid.abs() < 1e-4 || hi - lo < 1e-9 {
            return Ok((mid, c_mid));
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
}

/// Splits capacity at `snr_db` into `(H(A*), γ)`.
///
/// Fails with [`Error::Domain`] below the basic point (negative γ) and with
/// [`Error::Infeasible`] when γ reaches 1.
pub fn gamma_split(
    constellation: &AskConstellation,
    snr_db: f64,
    quantizer: &Quantizer,
) -> Result<(f64, f64)> {
    let pt = optimize_capacity(constellation, snr_db, quantizer)?;
    let gamma = pt.capacity - pt.h_a;
    if gamma < -1e-4 {
        return Err(Error::Domain(format!(
            "snr {snr_db} dB lies below the basic point (H(A) − C = {:.3e})",
            -gamma
        )));
    }
    if gamma >= 1.0 {
        return Err(Error::Infeasible(format!(
            "γ = {gamma} ≥ 1 is not achievable with modified sign-coding"
        )));
    }
    Ok((pt.h_a, gamma.max(0.0)))
}

/// Bisection on SNR for an increasing `f` to reach `target` within `tol_db`.
fn invert_snr<F: Fn(f64) -> Result<f64>>(
    f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol_db: f64,
) -> Result<f64> {
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// SNR gap in dB between the uniform input and the optimized input at
/// `target_rate`.
pub fn shaping_gap(
    constellation: &AskConstellation,
    target_rate: f64,
    quantizer: &Quantizer,
) -> Result<f64> {
    let max_rate = (constellation.order() as f64).log2();
    if !(target_rate > 0.0) || target_rate > max_rate - 1e-3 {
        return Err(Error::Range(format!(
            "rate {target_rate} outside (0, {:.3}]",
            max_rate - 1e-3
        )));
    }
    // Shannon limit is a lower bound for both curves
    let shannon = 10.0 * (2f64.powf(2.0 * target_rate) - 1.0).log10();
    let uniform = |s: f64| mi_uniform(constellation, s, quantizer);
    let mut hi = shannon + 3.0;
    while uniform(hi)? < target_rate {
        hi += 3.0;
        if hi > shannon + 60.0 {
            return Err(Error::Range(format!(
                "rate {target_rate} not reached by the uniform input"
            )));
        }
    }
    let snr_uniform = invert_snr(uniform, target_rate, shannon, hi, 1e-3)?;
    let snr_cap = invert_snr(
        |s| optimize_capacity(constellation, s, quantizer).map(|p| p.capacity),
        target_rate,
        shannon,
        snr_uniform + 1e-3,
        1e-3,
    )?;
    Ok((snr_uniform - snr_cap).max(0.0))
}

/// Rate-feasibility check of sign-coding at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// `H(A) + γ ≤ I(X;Y)`.
    pub smd_ok: bool,
    /// `H(A) + γ ≤ R_BMD`.
    pub bmd_ok: bool,
    /// `I(X;Y) − H(A) − γ`.
    pub slack_smd: f64,
    /// `R_BMD − H(A) − γ`.
    pub slack_bmd: f64,
    /// `H(X|Y) ≤ 1 − γ`, the conditional-entropy form of the SMD condition.
    pub smd_ok_equivocation: bool,
    /// `1 − γ − H(X|Y)`.
    pub slack_equivocation: f64,
}

/// Checks the SMD and BMD rate conditions for the symmetric input built from
/// `amplitude_pmf` with an additional sign rate `gamma`.
pub fn theorem_feasibility(
    constellation: &AskConstellation,
    amplitude_pmf: &Pmf,
    gamma: f64,
    dmc: &Dmc,
    labels: &LabelMap,
) -> Result<FeasibilityReport> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Domain(format!("γ = {gamma} outside [0, 1)")));
    }
    let symbol = Pmf::symmetric_from_amplitudes(constellation, amplitude_pmf)?;
    let h_a = entropy(amplitude_pmf);
    let mi = mutual_information(&symbol, dmc)?;
    let rb = r_bmd(&symbol, dmc, labels)?;
    let equivocation = conditional_entropy_x_given_y(&symbol, dmc)?;
    let slack_smd = mi - h_a - gamma;
    let slack_bmd = rb - h_a - gamma;
    let slack_equivocation = 1.0 - gamma - equivocation;
    Ok(FeasibilityReport {
        smd_ok: slack_smd >= 0.0,
        bmd_ok: slack_bmd >= 0.0,
        slack_smd,
        slack_bmd,
        smd_ok_equivocation: slack_equivocation >= 0.0,
        slack_equivocation,
    })
}

/// The optimizing channel at `snr_db`: the scaled quantized channel and the
/// symmetric symbol pmf achieving capacity.
pub fn capacity_channel(
    constellation: &AskConstellation,
    snr_db: f64,
    quantizer: &Quantizer,
) -> Result<(Dmc, Pmf)> {
    let pt = optimize_capacity(constellation, snr_db, quantizer)?;
    let dmc = scaled_channel(constellation, pt.scale, quantizer)?;
    Ok((dmc, pt.p_a_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabets::make_ask;

    fn coarse() -> Quantizer {
        Quantizer {
            num_bins: 400,
            clip_sigmas: 6.0,
        }
    }

    #[test]
    fn mb_examples() {
        let c = make_ask(1).unwrap();
        assert_eq!(mb_family(&c, 0.0).probs(), &[0.5, 0.5]);
        let p = mb_family(&c, 50.0);
        assert!(p.probs()[0] == 1.0 && p.probs()[1] < 1e-100);

        let c = make_ask(2).unwrap();
        let w: Vec<f64> = [0.05f64, 0.45, 1.25, 2.45]
            .iter()
            .map(|e| (-e).exp())
            .collect();
        let s: f64 = w.iter().sum();
        for (a, b) in mb_family(&c, 0.05).probs().iter().zip(&w) {
            assert!((a - b / s).abs() < 1e-15);
        }
    }

    #[test]
    fn vanishing_snr() {
        let c = make_ask(1).unwrap();
        let pt = optimize_capacity(&c, -30.0, &coarse()).unwrap();
        assert!(pt.capacity < 0.01);
    }

    #[test]
    fn optimizer_dominates_grid_oracle() {
        // Brute force over the amplitude simplex at 1e-2 resolution, each
        // point at the scale that spends the full power budget.
        let c = make_ask(1).unwrap();
        let q = coarse();
        let snr = 10.0;
        let pt = optimize_capacity(&c, snr, &q).unwrap();
        let power = snr_to_power(snr);
        let mut best = 0.0f64;
        for k in 1..100 {
            let p1 = k as f64 / 100.0;
            let amp = Pmf::new(vec![p1, 1.0 - p1]).unwrap();
            let scale = (power / (p1 + 9.0 * (1.0 - p1))).sqrt();
            let dmc = scaled_channel(&c, scale, &q).unwrap();
            let sym = Pmf::symmetric_from_amplitudes(&c, &amp).unwrap();
            best = best.max(mutual_information(&sym, &dmc).unwrap());
        }
        assert!(pt.capacity >= best - 1e-9, "{} < {}", pt.capacity, best);
        assert!(pt.capacity >= pt.mi_uniform - 1e-9);
        for lambda in [0.0, 0.02, 0.05, 0.1, 0.2, 0.5] {
            let amp = mb_family(&c, lambda);
            let e = amplitude_energy(&c, amp.probs());
            let dmc = scaled_channel(&c, (power / e).sqrt(), &q).unwrap();
            let sym = Pmf::symmetric_from_amplitudes(&c, &amp).unwrap();
            assert!(pt.capacity >= mutual_information(&sym, &dmc).unwrap() - 1e-9);
        }
        let energy = pt.scale * pt.scale * amplitude_energy(&c, pt.p_a_star.probs());
        assert!(energy <= power * (1.0 + 1e-9));
        assert!((pt.h_a + pt.gamma - pt.capacity).abs() < 1e-6);
    }

    #[test]
    fn two_ask_has_no_basic_point() {
        let c = make_ask(0).unwrap();
        assert!(matches!(
            find_basic_point(&c, &coarse(), (-5.0, 5.0)),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn identity_channel_feasible() {
        let c = make_ask(1).unwrap();
        let id = Dmc::identity(c.points_f64());
        let l = brgc_label(&c);
        let r = theorem_feasibility(&c, &Pmf::new(vec![0.3, 0.7]).unwrap(), 0.5, &id, &l).unwrap();
        assert!(r.smd_ok && r.bmd_ok && r.smd_ok_equivocation);
        assert!((r.slack_smd - 0.5).abs() < 1e-12);
    }

    #[test]
    fn range_errors() {
        let c = make_ask(1).unwrap();
        assert!(matches!(
            shaping_gap(&c, 2.0, &coarse()),
            Err(Error::Range(_))
        ));
        let id = Dmc::identity(c.points_f64());
        let l = brgc_label(&c);
        assert!(theorem_feasibility(&c, &Pmf::uniform(2), 1.0, &id, &l).is_err());
    }
}
