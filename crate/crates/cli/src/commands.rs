use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use abac_logmine::abac::{AbacPolicy, AttributeData, Evaluator, Rule};
use abac_logmine::atm::{mine_atm, search_k, AtmConfig, AuthorBounds};
use abac_logmine::eval::compare;
use abac_logmine::format::{parse_data, parse_log, parse_policy, parse_summary, print_data, print_log, print_policy, print_summary};
use abac_logmine::log::{summarize, LogSummary};
use abac_logmine::metrics::QualityConfig;
use abac_logmine::miner::{mine_policy, Miner, MiningConfig, NoiseConfig, NoiseMetric, RuleMetric, Validity};
use abac_logmine::synth::{gen_log, gen_log_summary, gen_synthetic_policy, DistributionRatios, GenDistributions, SynthPolicyConfig};
use abac_logmine::{Error, Result};
use serde_json::json;

use crate::args::{Algo, EvalArgs, GenlogArgs, Metric, MineArgs, NoiseMetricArg, Ratios, SynthArgs, ValidityArg};
use crate::manifest::RunManifest;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads and parses `path`, naming the file in parse errors.
fn load<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    parse(&read(path)?).map_err(|e| match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_data(path: &Path) -> Result<(AttributeData, Option<BTreeSet<String>>)> {
    let d = load(path, parse_data)?;
    Ok((d.data, d.operations))
}

fn load_policy(data: &AttributeData, ops: Option<&BTreeSet<String>>, path: &Path) -> Result<AbacPolicy> {
    let p = load(path, parse_policy)?;
    let operations = match (p.operations, ops) {
        (Some(o), _) => o,
        (None, Some(o)) => o.clone(),
        (None, None) => p.rules.iter().flat_map(|r| r.ops.iter().cloned()).collect(),
    };
    AbacPolicy::new(data.clone(), operations, p.rules)
}

fn parse_bounds(s: &str) -> Result<AuthorBounds> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("bounds `{s}` must be four comma-separated integers")))?;
    match v[..] {
        [b_u, b_r, b_c, b_s] => Ok(AuthorBounds { b_u, b_r, b_c, b_s }),
        _ => Err(Error::Config(format!("bounds `{s}` must be four comma-separated integers"))),
    }
}

fn quality(a: &MineArgs) -> Result<QualityConfig> {
    let mut q = QualityConfig::for_completeness(a.completeness_estimate);
    if let Some(wo) = a.wo {
        q.wo = wo;
        q.wo_rule = wo / 10.0;
    }
    if let Some(w) = a.wo_rule {
        q.wo_rule = w;
    }
    if let Some(w) = a.wu {
        q.wu = w;
    }
    q.validate()?;
    Ok(q)
}

pub fn mine(a: &MineArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let (data, data_ops) = load_data(&a.data)?;
    let (summary, input) = match (&a.log, &a.summary) {
        (Some(p), _) => (summarize(&load(p, parse_log)?)?, p.as_path()),
        (None, Some(p)) => (load(p, parse_summary)?, p.as_path()),
        (None, None) => return Err(Error::Config("one of --log or --summary is required".into())),
    };
    let ops = data_ops.unwrap_or_else(|| summary.tuples().into_iter().map(|t| t.op).collect());
    let q = quality(a)?;

    let mut report = String::new();
    let mut config = json!({
        "algo": format!("{:?}", a.algo).to_lowercase(),
        "wo": q.wo,
        "wo_rule": q.wo_rule,
        "wu": q.wu,
        "completeness_estimate": a.completeness_estimate,
    });
    let mut manifest_seeds = Vec::new();
    let (rules, effective): (Vec<Rule>, QualityConfig) = match a.algo {
        Algo::Seeded => {
            let cfg = MiningConfig {
                quality: q,
                rule_metric: match a.metric {
                    Metric::Qrul => RuleMetric::QRul,
                    Metric::Qrulfreq => RuleMetric::QRulFreq,
                    Metric::Qrulilp => RuleMetric::QRulIlp,
                },
                noise: a.noise_tau.map(|tau| NoiseConfig {
                    tau,
                    metric: match a.noise_metric {
                        NoiseMetricArg::Qfreq => NoiseMetric::QFreq,
                        NoiseMetricArg::Qrulfreq => NoiseMetric::QRulFreq,
                    },
                }),
                validity: match a.validity {
                    ValidityArg::Strict => Validity::Strict,
                    ValidityArg::Relaxed => Validity::Relaxed,
                },
                ..MiningConfig::default()
            };
            config["metric"] = json!(format!("{:?}", a.metric).to_lowercase());
            config["noise_tau"] = json!(a.noise_tau);
            config["noise_metric"] = json!(format!("{:?}", a.noise_metric).to_lowercase());
            config["validity"] = json!(format!("{:?}", a.validity).to_lowercase());
            let out = mine_policy(&data, &ops, &summary, &cfg)?;
            writeln!(report, "algo=seeded").unwrap();
            writeln!(report, "suspectedNoise={}", out.suspected_noise.len()).unwrap();
            for t in &out.suspected_noise {
                writeln!(report, "noise={t}").unwrap();
            }
            (out.policy.rules, q)
        }
        Algo::Atm => {
            let mut cfg = AtmConfig::with_quality(q);
            cfg.bounds = parse_bounds(&a.bounds)?;
            if let Some(cap) = a.author_cap {
                cfg.author_cap = cap;
            }
            cfg.gibbs.iterations = a.gibbs_iterations;
            cfg.gibbs.seed = a.seed;
            cfg.anneal.max_iter = a.max_iter;
            cfg.anneal.t0 = a.t0;
            cfg.anneal.gamma = a.gamma;
            cfg.anneal.epsilon = a.epsilon;
            cfg.anneal.seed = a.seed;
            let b = &cfg.bounds;
            config["wu"] = json!(cfg.quality.wu);
            config["bounds"] = json!([b.b_u, b.b_r, b.b_c, b.b_s]);
            config["author_cap"] = json!(cfg.author_cap);
            config["k"] = json!(a.k);
            config["k_threshold"] = json!(a.k_threshold);
            config["gibbs"] = json!({"alpha": cfg.gibbs.alpha, "beta": cfg.gibbs.beta, "iterations": cfg.gibbs.iterations});
            config["anneal"] = json!({"max_iter": a.max_iter, "t0": a.t0, "gamma": a.gamma, "epsilon": a.epsilon});
            manifest_seeds.push(("gibbs", a.seed));
            manifest_seeds.push(("anneal", a.seed));
            let out = match a.k {
                Some(k) => mine_atm(&data, &ops, &summary, k, &cfg)?,
                None => search_k(&data, &ops, &summary, &cfg, a.k_threshold)?,
            };
            writeln!(report, "algo=atm").unwrap();
            writeln!(report, "k={}", out.k).unwrap();
            writeln!(report, "authors={}", out.n_authors).unwrap();
            writeln!(report, "droppedPairs={}", out.dropped.len()).unwrap();
            (out.policy.rules, cfg.quality)
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    log::info!("mined {} rules in {elapsed:.3}s", rules.len());

    let ev = Evaluator::new(&data, &ops);
    let measure = MiningConfig {
        quality: effective,
        ..MiningConfig::default()
    };
    let miner = Miner::new(&ev, &summary, &measure)?;
    let granted = ev.policy_meaning(&rules)?;
    let up0 = miner.up0();
    writeln!(report, "rules={}", rules.len()).unwrap();
    writeln!(report, "wsc={}", rules.iter().map(|r| r.wsc(&effective.wsc)).sum::<f64>()).unwrap();
    writeln!(report, "qPol={:.6}", miner.q_pol(&rules)?).unwrap();
    writeln!(report, "logTuples={}", up0.len()).unwrap();
    writeln!(report, "granted={}", granted.len()).unwrap();
    writeln!(report, "overAssigned={}", granted.difference_count(up0)).unwrap();
    writeln!(report, "underAssigned={}", up0.difference_count(&granted)).unwrap();

    write(&a.out, "policy.txt", &print_policy(&ops, &rules))?;
    write(&a.out, "report.txt", &report)?;
    print!("{report}");
    let mut m = RunManifest::new("mine", argv, config).inputs(&[&a.data, input]);
    for (name, seed) in manifest_seeds {
        m = m.seed(name, seed);
    }
    m.outputs = vec![a.out.join("policy.txt"), a.out.join("report.txt")];
    m.elapsed_secs = elapsed;
    m.write(&a.out)
}

pub fn synth(a: &SynthArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let cfg = SynthPolicyConfig {
        n_rule: a.nrule,
        users_per_rule: a.users_per_rule,
        resources_per_rule: a.resources_per_rule,
        n_ops: a.nops,
        single_families: a.single_families,
        multi_families: a.multi_families,
        values_per_attr: a.values_per_attr,
        bottom_percent: a.bottom_percent,
        seed: a.seed,
    };
    let p = gen_synthetic_policy(&cfg)?;
    write(&a.out, "policy.txt", &print_policy(&p.operations, &p.rules))?;
    write(&a.out, "data.json", &print_data(&p.data, Some(&p.operations)))?;
    let config = json!({
        "nrule": a.nrule,
        "users_per_rule": a.users_per_rule,
        "resources_per_rule": a.resources_per_rule,
        "nops": a.nops,
        "single_families": a.single_families,
        "multi_families": a.multi_families,
        "values_per_attr": a.values_per_attr,
        "bottom_percent": a.bottom_percent,
    });
    let mut m = RunManifest::new("synth", argv, config).seed("synth", a.seed);
    m.outputs = vec![a.out.join("policy.txt"), a.out.join("data.json")];
    m.elapsed_secs = start.elapsed().as_secs_f64();
    m.write(&a.out)
}

pub fn genlog(a: &GenlogArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let (data, ops) = load_data(&a.data)?;
    let p = load_policy(&data, ops.as_ref(), &a.policy)?;
    // the distributions draw from their own stream so that the log seed
    // alone does not fix them
    let dists = match a.ratios {
        Ratios::Uniform => GenDistributions::uniform(&p),
        Ratios::Skewed => GenDistributions::with_ratios(&p, &DistributionRatios::default(), a.seed),
    };
    let (name, text) = if a.summary {
        let s: LogSummary = gen_log_summary(&p, &dists, a.completeness, a.seed)?;
        ("summary.csv", print_summary(&s))
    } else {
        let log = gen_log(&p, &dists, a.completeness, a.seed, a.max_entries)?;
        ("log.csv", print_log(&log))
    };
    write(&a.out, name, &text)?;
    let config = json!({
        "completeness": a.completeness,
        "summary": a.summary,
        "ratios": format!("{:?}", a.ratios).to_lowercase(),
        "max_entries": a.max_entries,
    });
    let mut m = RunManifest::new("genlog", argv, config)
        .seed("log", a.seed)
        .inputs(&[&a.data, &a.policy]);
    if a.ratios == Ratios::Skewed {
        m = m.seed("distributions", a.seed);
    }
    m.outputs = vec![a.out.join(name)];
    m.elapsed_secs = start.elapsed().as_secs_f64();
    m.write(&a.out)
}

pub fn eval(a: &EvalArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let (data, ops) = load_data(&a.data)?;
    let mut original = load_policy(&data, ops.as_ref(), &a.original)?;
    let mut mined = load_policy(&data, ops.as_ref(), &a.mined)?;
    // both meanings must live in one universe
    let all: BTreeSet<String> = original.operations.union(&mined.operations).cloned().collect();
    original.operations = all.clone();
    mined.operations = all;
    let report = compare(&original, &mined)?.to_lines();
    print!("{report}");
    if let Some(out) = &a.out {
        write(out, "report.txt", &report)?;
        let mut m = RunManifest::new("eval", argv, json!({})).inputs(&[&a.data, &a.original, &a.mined]);
        m.outputs = vec![out.join("report.txt")];
        m.elapsed_secs = start.elapsed().as_secs_f64();
        m.write(out)?;
    }
    Ok(())
}
