mod common;

use std::collections::BTreeSet;

use abac_logmine::miner::{mine_policy, MiningConfig, NoiseConfig, NoiseMetric};
use common::noise::noisy_log;

#[test]
fn injected_entitlement_is_the_only_suspect() {
    for name in common::MINI_POLICIES {
        for seed in 0..10 {
            let n = noisy_log(name, seed);
            assert!(n.separation >= 5.0);
            let cfg = MiningConfig {
                noise: Some(NoiseConfig {
                    metric: NoiseMetric::QFreq,
                    tau: n.tau,
                }),
                ..MiningConfig::default()
            };
            let out = mine_policy(&n.policy.data, &n.policy.operations, &n.summary, &cfg).unwrap();
            assert_eq!(out.suspected_noise, BTreeSet::from([n.bogus.clone()]), "{name} seed {seed}");
        }
    }
}
