//! Policy and rule quality metrics.
//!
//! Rule metrics are "higher is better"; the policy metric is "lower is
//! better". The compression metric is also offered in the log2 domain, which
//! preserves its ordering and does not underflow for large example sets.

use crate::abac::{Evaluator, Rule, TupleSet, WscWeights};
use crate::error::{Error, Result};
use crate::log::Frequencies;

/// Weights shared by the miners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityConfig {
    pub wsc: WscWeights,
    /// Policy over-assignment weight `w_o`.
    pub wo: f64,
    /// Rule over-assignment weight `w'_o`.
    pub wo_rule: f64,
    /// Under-assignment weight `w_u`; zero disables the term.
    pub wu: f64,
}

impl QualityConfig {
    /// `w_o = max(0, 50c - 15)` and `w'_o = w_o / 10` for an estimated log
    /// completeness `c`.
    pub fn for_completeness(c: f64) -> Self {
        let wo = (50.0 * c - 15.0).max(0.0);
        QualityConfig {
            wsc: WscWeights::default(),
            wo,
            wo_rule: wo / 10.0,
            wu: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.wsc.validate()?;
        for (name, w) in [("wo", self.wo), ("wo_rule", self.wo_rule), ("wu", self.wu)] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig::for_completeness(1.0)
    }
}

/// `Q_pol` from precomputed parts: `wsc + w_o·|⟦π⟧ ∖ UP0| / |U|`, plus
/// `w_u·|UP0 ∖ ⟦π⟧|_L` when `w_u > 0`.
pub fn q_pol_parts(
    wsc: f64,
    meaning: &TupleSet,
    up0: &TupleSet,
    n_users: usize,
    freqs: &Frequencies,
    cfg: &QualityConfig,
) -> f64 {
    let over = if n_users == 0 {
        0.0
    } else {
        meaning.difference_count(up0) as f64 / n_users as f64
    };
    let mut q = wsc + cfg.wo * over;
    if cfg.wu > 0.0 {
        q += cfg.wu * freqs.weighted_size(&up0.difference(meaning));
    }
    q
}

/// `Q_pol` of a rule set.
pub fn q_pol<'a>(
    ev: &Evaluator,
    rules: impl IntoIterator<Item = &'a Rule> + Clone,
    up0: &TupleSet,
    freqs: &Frequencies,
    cfg: &QualityConfig,
) -> Result<f64> {
    let wsc: f64 = rules.clone().into_iter().map(|r| r.wsc(&cfg.wsc)).sum();
    let meaning = ev.policy_meaning(rules)?;
    Ok(q_pol_parts(wsc, &meaning, up0, ev.universe().n_users(), freqs, cfg))
}

fn over_penalty(meaning: &TupleSet, up0: &TupleSet, cfg: &QualityConfig) -> f64 {
    1.0 - cfg.wo_rule * meaning.difference_count(up0) as f64 / meaning.len() as f64
}

/// `Q_rul(ρ, UP) = |⟦ρ⟧ ∩ UP| / WSC(ρ) · (1 - w'_o·|⟦ρ⟧ ∖ UP0| / |⟦ρ⟧|)`;
/// zero when `⟦ρ⟧ = ∅`.
pub fn q_rul(meaning: &TupleSet, wsc: f64, up: &TupleSet, up0: &TupleSet, cfg: &QualityConfig) -> f64 {
    if meaning.is_empty() {
        return 0.0;
    }
    let covered = meaning.intersection_count(up) as f64;
    ratio(covered, wsc) * over_penalty(meaning, up0, cfg)
}

/// `Q_rul` with `|⟦ρ⟧ ∩ UP|` replaced by its frequency-weighted size.
pub fn q_rul_freq(
    meaning: &TupleSet,
    wsc: f64,
    up: &TupleSet,
    up0: &TupleSet,
    freqs: &Frequencies,
    cfg: &QualityConfig,
) -> f64 {
    if meaning.is_empty() {
        return 0.0;
    }
    let covered = freqs.weighted_size(&meaning.intersection(up));
    ratio(covered, wsc) * over_penalty(meaning, up0, cfg)
}

// A rule with zero WSC (only possible under zero weights) that covers
// something is treated as infinitely good.
fn ratio(covered: f64, wsc: f64) -> f64 {
    if covered == 0.0 {
        0.0
    } else if wsc <= 0.0 {
        f64::INFINITY
    } else {
        covered / wsc
    }
}

/// `Q_freq(ρ, L)`: mean frequency over `⟦ρ⟧`, zero when empty.
pub fn q_freq(meaning: &TupleSet, freqs: &Frequencies) -> f64 {
    if meaning.is_empty() {
        0.0
    } else {
        freqs.weighted_size(meaning) / meaning.len() as f64
    }
}

/// Sizes for the compression metric: `m = |E|` examples out of `|X|`
/// well-formed tuples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlpContext {
    pub m: usize,
    pub x: usize,
}

impl IlpContext {
    /// `g`: fraction of `X` implied.
    pub fn generality(&self, meaning_size: usize) -> f64 {
        if self.x == 0 {
            0.0
        } else {
            meaning_size as f64 / self.x as f64
        }
    }
}

/// `log2 f_m(H)` with `c = 1`: `-|H| + m·log2(1 - g)`. Negative infinity
/// when `g = 1` and `m > 0`.
pub fn fm_log2(size: f64, g: f64, m: usize) -> f64 {
    if m == 0 {
        return -size;
    }
    let base = 1.0 - g;
    if base <= 0.0 {
        f64::NEG_INFINITY
    } else {
        -size + m as f64 * base.log2()
    }
}

/// `f_m(H) = 2^{-|H|} (1 - g(H))^m` with `c = 1`.
pub fn fm(size: f64, g: f64, m: usize) -> f64 {
    fm_log2(size, g, m).exp2()
}

/// `pcomp(H, E) = log2(f_m(H) / f_m(E))`, each theory given as
/// `(size, generality)`.
pub fn pcomp(h: (f64, f64), e: (f64, f64), m: usize) -> f64 {
    fm_log2(h.0, h.1, m) - fm_log2(e.0, e.1, m)
}

/// The approximation `|E| - |H| + m·log2(1 - g(H))`.
pub fn pcomp_approx(e_size: f64, h_size: f64, g_h: f64, m: usize) -> f64 {
    e_size + fm_log2(h_size, g_h, m)
}

/// log2 of the extrapolated estimate
/// `2^{-(m/p)|C|} · (1 - (m/p)·Δg)^m`, or `None` when `p = 0`.
pub fn q_rul_ilp_log2(c_size: f64, m: usize, p: usize, delta_g: f64) -> Option<f64> {
    if p == 0 {
        return None;
    }
    let k = m as f64 / p as f64;
    let base = 1.0 - k * delta_g;
    let rest = if m == 0 {
        0.0
    } else if base <= 0.0 {
        f64::NEG_INFINITY
    } else {
        m as f64 * base.log2()
    };
    Some(-k * c_size + rest)
}

/// The extrapolated estimate itself; zero when `p = 0`.
pub fn q_rul_ilp(c_size: f64, m: usize, p: usize, delta_g: f64) -> f64 {
    q_rul_ilp_log2(c_size, m, p, delta_g).map_or(0.0, f64::exp2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_weights_follow_completeness() {
        let c = QualityConfig::for_completeness(0.75);
        assert!((c.wo - 22.5).abs() < 1e-12);
        assert!((c.wo_rule - 2.25).abs() < 1e-12);
        assert_eq!(QualityConfig::for_completeness(0.1).wo, 0.0);
    }

    #[test]
    fn fm_boundaries() {
        assert_eq!(fm(0.0, 0.0, 5), 1.0);
        assert_eq!(fm(3.0, 1.0, 0), fm(3.0, 0.7, 0));
        assert_eq!(fm_log2(1.0, 1.0, 2), f64::NEG_INFINITY);
        assert_eq!(pcomp((4.0, 0.2), (4.0, 0.2), 7), 0.0);
    }

    #[test]
    fn ilp_estimate_without_new_examples_is_zero() {
        assert_eq!(q_rul_ilp(4.0, 3, 0, 0.1), 0.0);
        assert_eq!(q_rul_ilp_log2(4.0, 3, 0, 0.1), None);
    }
}
