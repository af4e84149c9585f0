//! The generative-model miner: candidate rule skeletons ("authors") explain
//! the operations ("words") logged for each user-resource pair
//! ("document") through latent topics; an annealing search then decides how
//! many topics each author keeps and how many words each topic keeps.

mod authors;
mod discretize;
mod model;

pub use authors::{active_authors, author_space_size, enumerate_authors, Author, AuthorBounds, DEFAULT_AUTHOR_CAP};
pub use discretize::{construct_abac_rules, construct_rules, discretize, merge_rules_gen, AnnealConfig, Discretized};
pub use model::{build_documents, learn_atm, log_counts, AtmModel, Corpus, Document, GibbsConfig, MAX_LOG_LENGTH};

use std::collections::BTreeSet;

use crate::abac::{AbacPolicy, AttributeData, Evaluator};
use crate::error::{Error, Result};
use crate::log::LogSummary;
use crate::metrics::QualityConfig;
use crate::miner::{Miner, MiningConfig};

/// Under-assignment weight used when the quality settings leave it at zero.
/// Without the term the empty policy would always be optimal.
pub const DEFAULT_ATM_WU: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AtmConfig {
    pub bounds: AuthorBounds,
    pub author_cap: usize,
    pub quality: QualityConfig,
    pub gibbs: GibbsConfig,
    pub anneal: AnnealConfig,
}

impl Default for AtmConfig {
    fn default() -> Self {
        AtmConfig::with_quality(QualityConfig::default())
    }
}

impl AtmConfig {
    /// Uses `quality`, substituting [`DEFAULT_ATM_WU`] for a zero `wu`.
    pub fn with_quality(mut quality: QualityConfig) -> Self {
        if quality.wu == 0.0 {
            quality.wu = DEFAULT_ATM_WU;
        }
        AtmConfig {
            bounds: AuthorBounds::default(),
            author_cap: DEFAULT_AUTHOR_CAP,
            quality,
            gibbs: GibbsConfig::default(),
            anneal: AnnealConfig::default(),
        }
    }
}

/// Authors and documents for one log, shared by every `k` and annealing
/// run.
pub struct AtmSession<'a> {
    miner: Miner<'a>,
    authors: Vec<Author>,
    corpus: Corpus,
}

impl<'a> AtmSession<'a> {
    /// Enumerates the authors matching at least one logged pair and builds
    /// the documents. `mining` supplies the quality weights.
    pub fn new(ev: &'a Evaluator, summary: &LogSummary, mining: &'a MiningConfig, cfg: &AtmConfig) -> Result<Self> {
        let miner = Miner::new(ev, summary, mining)?;
        let uni = ev.universe();
        let pairs: BTreeSet<(usize, usize)> = miner
            .up0()
            .iter()
            .map(|i| {
                let (u, r, _) = uni.decode(i);
                (u, r)
            })
            .collect();
        let authors = active_authors(ev, &cfg.bounds, cfg.author_cap, &pairs, &mining.quality.wsc)?;
        let corpus = build_documents(ev, summary, &authors)?;
        Ok(AtmSession { miner, authors, corpus })
    }

    pub fn authors(&self) -> &[Author] {
        &self.authors
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn miner(&self) -> &Miner<'a> {
        &self.miner
    }

    pub fn learn(&self, k: usize, gibbs: &GibbsConfig) -> Result<AtmModel> {
        let n_words = self.miner.evaluator().universe().n_ops();
        learn_atm(&self.corpus.docs, self.authors.len(), n_words, k, gibbs)
    }

    pub fn discretize(&self, model: &AtmModel, anneal: &AnnealConfig) -> Result<Discretized> {
        discretize(&self.miner, model, &self.authors, anneal)
    }

    fn policy(&self, d: &Discretized) -> AbacPolicy {
        let ev = self.miner.evaluator();
        AbacPolicy {
            data: ev.data().clone(),
            operations: ev.operations().clone(),
            rules: d.rules.clone(),
        }
    }
}

/// Output of [`mine_atm`] and [`search_k`].
#[derive(Debug, Clone)]
pub struct AtmOutcome {
    pub policy: AbacPolicy,
    pub q_pol: f64,
    pub k: usize,
    pub model: AtmModel,
    pub n_authors: usize,
    /// Logged pairs no author matches.
    pub dropped: Vec<(String, String)>,
}

fn mining_config(cfg: &AtmConfig) -> MiningConfig {
    MiningConfig {
        quality: cfg.quality,
        ..MiningConfig::default()
    }
}

fn run_k(session: &AtmSession<'_>, k: usize, cfg: &AtmConfig) -> Result<AtmOutcome> {
    let model = session.learn(k, &cfg.gibbs)?;
    let d = session.discretize(&model, &cfg.anneal)?;
    Ok(AtmOutcome {
        policy: session.policy(&d),
        q_pol: d.q_pol,
        k,
        model,
        n_authors: session.authors.len(),
        dropped: session.corpus.dropped.clone(),
    })
}

/// The full pipeline for a fixed topic count `k`.
pub fn mine_atm(
    data: &AttributeData,
    operations: &BTreeSet<String>,
    summary: &LogSummary,
    k: usize,
    cfg: &AtmConfig,
) -> Result<AtmOutcome> {
    let ev = Evaluator::new(data, operations);
    let mining = mining_config(cfg);
    let session = AtmSession::new(&ev, summary, &mining, cfg)?;
    run_k(&session, k, cfg)
}

/// Runs the pipeline for `k = 1, 2, ...` until `Q_pol` improves on the
/// previous `k` by less than `threshold` (or `k` exceeds the word count),
/// and returns the best outcome.
pub fn search_k(
    data: &AttributeData,
    operations: &BTreeSet<String>,
    summary: &LogSummary,
    cfg: &AtmConfig,
    threshold: f64,
) -> Result<AtmOutcome> {
    if !(threshold > 0.0) {
        return Err(Error::Config("k-search threshold must be positive".into()));
    }
    let ev = Evaluator::new(data, operations);
    let mining = mining_config(cfg);
    let session = AtmSession::new(&ev, summary, &mining, cfg)?;
    let max_k = session.corpus.n_tokens();
    let mut best = run_k(&session, 1, cfg)?;
    let mut prev = best.q_pol;
    for k in 2..=max_k {
        let out = run_k(&session, k, cfg)?;
        let gain = prev - out.q_pol;
        prev = out.q_pol;
        if out.q_pol < best.q_pol {
            best = out;
        }
        if gain < threshold {
            break;
        }
    }
    Ok(best)
}
