//! Worked metric values, as `(name, computed, expected)`.

use abac_logmine::abac::UpTuple;
use abac_logmine::log::LogSummary;
use abac_logmine::metrics::{self, QualityConfig};

pub fn examples() -> Vec<(&'static str, f64, f64)> {
    let policy = super::load_policy("fragment");
    let summary = super::load_log_summary("fragment");
    let ev = policy.evaluator();
    let uni = ev.universe();
    let freqs = summary.frequencies(uni).unwrap();
    let up0 = freqs.support(uni);
    let rho0 = &policy.rules[0];
    let m = ev.rule_meaning(rho0).unwrap();
    let cfg = QualityConfig::for_completeness(0.75);
    let mut with_wu = cfg;
    with_wu.wu = 3.0;

    let t = UpTuple::new("csFac2", "cs601gradebook", "addScore");
    let one = LogSummary::from_weights([(t.clone(), 1.0)]).unwrap().frequencies(uni).unwrap();
    let single = uni.set_of([&t]).unwrap();

    vec![
        ("w_o at c = 0.75", cfg.wo, 22.5),
        ("w'_o at c = 0.75", cfg.wo_rule, 2.25),
        ("qPol(ρ0)", metrics::q_pol(&ev, [rho0], &up0, &freqs, &cfg).unwrap(), 15.25),
        ("qPol(∅) with w_u = 3", metrics::q_pol(&ev, &[], &up0, &freqs, &with_wu).unwrap(), 3.0),
        ("qRul(ρ0)", metrics::q_rul(&m, 4.0, &up0, &up0, &cfg), 0.328125),
        ("qRul(exact, WSC 5)", metrics::q_rul(&up0, 5.0, &up0, &up0, &cfg), 0.6),
        ("qRulFreq(ρ0)", metrics::q_rul_freq(&m, 4.0, &up0, &up0, &freqs, &cfg), 0.328125 / 3.0),
        ("qRulFreq(single tuple, WSC 2)", metrics::q_rul_freq(&single, 2.0, &single, &single, &one, &cfg), 0.5),
        ("qFreq(ρ0)", metrics::q_freq(&m, &freqs), 0.25),
        ("qFreq(UP0)", metrics::q_freq(&up0, &freqs), 1.0 / 3.0),
        ("fm(0, 0, 4)", metrics::fm(0.0, 0.0, 4), 1.0),
        ("fm(1, 0.5, 2)", metrics::fm(1.0, 0.5, 2), 0.125),
        ("pcomp(H, H)", metrics::pcomp((3.0, 0.25), (3.0, 0.25), 5), 0.0),
        (
            "pcomp approximation",
            metrics::pcomp_approx(6.0, 2.0, 0.1, 3),
            metrics::pcomp((2.0, 0.1), (6.0, 0.0), 3),
        ),
        ("qRulILP(4, 3, 2, 0.1)", metrics::q_rul_ilp(4.0, 3, 2, 0.1), 2f64.powi(-6) * 0.85f64.powi(3)),
        ("qRulILP(4, 3, 3, 0.1)", metrics::q_rul_ilp(4.0, 3, 3, 0.1), 2f64.powi(-4) * 0.9f64.powi(3)),
    ]
}

/// Relative tolerance 1e-9; exact for zero targets.
pub fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * b.abs()
}
