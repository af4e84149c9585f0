//! A mini-policy's complete log with one injected bogus entitlement.

use abac_logmine::abac::{AbacPolicy, UpTuple};
use abac_logmine::log::LogSummary;
use abac_logmine::synth::{full_summary, DistributionRatios, GenDistributions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct NoisyLog {
    pub policy: AbacPolicy,
    pub summary: LogSummary,
    pub bogus: UpTuple,
    /// Geometric midpoint between the bogus frequency and the smallest
    /// legitimate one.
    pub tau: f64,
    /// Smallest legitimate frequency over the bogus one.
    pub separation: f64,
}

/// The complete log of the named mini-policy under seeded skewed
/// distributions, plus one seeded bogus tuple at a tenth of the rarest
/// legitimate tuple's mass.
///
/// The bogus tuple is isolated: its user holds nothing on its resource and
/// nobody holds its operation there. Otherwise the candidate built from it
/// takes in legitimate tuples, and the rule's mean frequency no longer
/// separates it.
pub fn noisy_log(name: &str, seed: u64) -> NoisyLog {
    let policy = super::load_policy(name);
    let dists = GenDistributions::with_ratios(&policy, &DistributionRatios::default(), seed);
    let full = full_summary(&policy, &dists).unwrap();
    let ev = policy.evaluator();
    let uni = ev.universe();
    let granted = ev.policy_meaning(&policy.rules).unwrap();
    let isolated: Vec<usize> = (0..uni.len())
        .filter(|&i| {
            let (u, r, o) = uni.decode(i);
            (0..uni.n_ops()).all(|o2| !granted.contains(uni.index(u, r, o2)))
                && (0..uni.n_users()).all(|u2| !granted.contains(uni.index(u2, r, o)))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bogus = uni.tuple(isolated[rng.gen_range(0..isolated.len())]);
    assert!(!granted.contains(uni.index_of(&bogus).unwrap()));
    let f_min = full.iter().map(|(_, f)| f).fold(f64::INFINITY, f64::min);
    let weights = full.iter().map(|(t, f)| (t.clone(), f)).chain([(bogus.clone(), f_min / 10.0)]);
    let summary = LogSummary::from_weights(weights).unwrap();
    let fb = summary.get(&bogus);
    let legit_min = summary.iter().filter(|(t, _)| **t != bogus).map(|(_, f)| f).fold(f64::INFINITY, f64::min);
    NoisyLog {
        policy,
        summary,
        tau: (fb * legit_min).sqrt(),
        separation: legit_min / fb,
        bogus,
    }
}
