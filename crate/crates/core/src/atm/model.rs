//! Documents and the author-topic model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::authors::{extension, Author};
use crate::abac::Evaluator;
use crate::error::{Error, Result};
use crate::log::LogSummary;

/// Upper bound on the reconstructed log length.
pub const MAX_LOG_LENGTH: usize = 10_000;

/// The operations one user performed on one resource.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub user: usize,
    pub resource: usize,
    /// Operation indices, one per log entry, sorted.
    pub words: Vec<usize>,
    /// Indices of the authors matching `(user, resource)`, ascending.
    pub authors: Vec<usize>,
}

/// Documents built from a log summary, plus the `(user, resource)` pairs
/// dropped because no author matches them.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub docs: Vec<Document>,
    pub dropped: Vec<(String, String)>,
}

impl Corpus {
    pub fn n_tokens(&self) -> usize {
        self.docs.iter().map(|d| d.words.len()).sum()
    }
}

/// Smallest log length `n ≤ MAX_LOG_LENGTH` for which every frequency times
/// `n` is a positive integer, with the resulting counts. Without one, `n` is
/// `MAX_LOG_LENGTH` and counts are rounded (at least 1).
pub fn log_counts(summary: &LogSummary) -> (usize, Vec<usize>) {
    let freqs: Vec<f64> = summary.iter().map(|(_, f)| f).collect();
    let integral = |n: usize| {
        freqs.iter().all(|f| {
            let x = f * n as f64;
            x.round() >= 1.0 && (x - x.round()).abs() < 1e-6
        })
    };
    let n = (1..=MAX_LOG_LENGTH).find(|&n| integral(n)).unwrap_or(MAX_LOG_LENGTH);
    let counts = freqs.iter().map(|f| ((f * n as f64).round() as usize).max(1)).collect();
    (n, counts)
}

/// One document per logged `(user, resource)` pair.
pub fn build_documents(ev: &Evaluator, summary: &LogSummary, authors: &[Author]) -> Result<Corpus> {
    let uni = ev.universe();
    let n_r = uni.n_resources();
    let (_, counts) = log_counts(summary);
    let mut words: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for ((t, _), c) in summary.iter().zip(counts) {
        let (u, r, o) = uni.decode(uni.index_of(t)?);
        words.entry((u, r)).or_default().extend(std::iter::repeat_n(o, c));
    }
    let exts = authors.iter().map(|a| extension(ev, a)).collect::<Result<Vec<_>>>()?;
    let mut corpus = Corpus::default();
    for ((u, r), mut w) in words {
        w.sort_unstable();
        let authors: Vec<usize> = (0..exts.len()).filter(|&a| exts[a].contains(u * n_r + r)).collect();
        if authors.is_empty() {
            corpus.dropped.push((uni.users()[u].clone(), uni.resources()[r].clone()));
            continue;
        }
        corpus.docs.push(Document {
            user: u,
            resource: r,
            words: w,
            authors,
        });
    }
    Ok(corpus)
}

/// Per-author topic distributions `theta` and per-topic word distributions
/// `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtmModel {
    pub k: usize,
    pub theta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
}

impl AtmModel {
    pub fn n_authors(&self) -> usize {
        self.theta.len()
    }

    pub fn n_words(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    /// Checks dimensions and that every row is a distribution.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.phi.len() != self.k {
            return Err(Error::Data(format!("model has {} topic rows, expected k = {}", self.phi.len(), self.k)));
        }
        let w = self.n_words();
        let rows = self.theta.iter().map(|r| (r, self.k)).chain(self.phi.iter().map(|r| (r, w)));
        for (row, len) in rows {
            if row.len() != len {
                return Err(Error::Data("ragged model row".into()));
            }
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::Data("negative or NaN probability".into()));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Data(format!("model row sums to {s}")));
            }
        }
        Ok(())
    }

    /// `theta A k`, `A` author rows, `phi k W`, `k` topic rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut block = |name: &str, rows: &[Vec<f64>], width: usize| {
            let _ = writeln!(out, "{name} {} {width}", rows.len());
            for row in rows {
                let cells: Vec<String> = row.iter().map(|p| format!("{p:e}")).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        };
        block("theta", &self.theta, self.k);
        block("phi", &self.phi, self.n_words());
        out
    }

    /// Reads [`AtmModel::to_text`] output. Blank lines and `#` comments are
    /// ignored. Rows are renormalized when they are off by rounding only.
    pub fn parse(src: &str) -> Result<AtmModel> {
        let mut lines = src
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, message: String| Error::Parse {
            line,
            column: 1,
            message,
        };
        let mut block = |name: &str| -> Result<(usize, Vec<Vec<f64>>)> {
            let (ln, header) = lines.next().ok_or_else(|| err(0, format!("missing {name} block")))?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            let dims: Option<(usize, usize)> = match parts.as_slice() {
                [n, a, b] if *n == name => a.parse().ok().zip(b.parse().ok()),
                _ => None,
            };
            let (rows, cols) = dims.ok_or_else(|| err(ln, format!("expected `{name} <rows> <cols>`")))?;
            let mut out = Vec::with_capacity(rows);
            for _ in 0..rows {
                let (ln, l) = lines.next().ok_or_else(|| err(ln, format!("{name} block is short")))?;
                let row = l
                    .split_whitespace()
                    .map(|c| c.parse::<f64>().map_err(|e| err(ln, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != cols {
                    return Err(err(ln, format!("expected {cols} values, found {}", row.len())));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-6 {
                    return Err(err(ln, format!("row sums to {s}")));
                }
                out.push(row.into_iter().map(|p| p / s).collect());
            }
            Ok((cols, out))
        };
        let (k, theta) = block("theta")?;
        let (_, phi) = block("phi")?;
        let m = AtmModel { k, theta, phi };
        m.validate()?;
        Ok(m)
    }
}

/// Collapsed Gibbs sampling settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsConfig {
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            alpha: 0.1,
            beta: 0.1,
            iterations: 200,
            seed: 0,
        }
    }
}

/// Fits an author-topic model to `docs` by collapsed Gibbs sampling. Each
/// token is assigned an author from its document and a topic; the pair is
/// resampled jointly. Authors without tokens get a uniform `theta`.
pub fn learn_atm(docs: &[Document], n_authors: usize, n_words: usize, k: usize, cfg: &GibbsConfig) -> Result<AtmModel> {
    if k == 0 {
        return Err(Error::Config("topic count must be at least 1".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.beta > 0.0) {
        return Err(Error::Config("smoothing priors must be positive".into()));
    }
    let n_tokens: usize = docs.iter().map(|d| d.words.len()).sum();
    if k > n_tokens {
        return Err(Error::Config(format!("k = {k} exceeds the {n_tokens} words of the corpus")));
    }
    for d in docs {
        if d.authors.iter().any(|&a| a >= n_authors) || d.words.iter().any(|&w| w >= n_words) {
            return Err(Error::Data("document refers to an unknown author or word".into()));
        }
    }
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut n_at = vec![vec![0usize; k]; n_authors];
    let mut n_a = vec![0usize; n_authors];
    let mut n_tw = vec![vec![0usize; n_words]; k];
    let mut n_t = vec![0usize; k];
    // (author, topic) per token, document-major
    let mut z: Vec<Vec<(usize, usize)>> = Vec::with_capacity(docs.len());
    for d in docs {
        let mut zd = Vec::with_capacity(d.words.len());
        for &w in &d.words {
            let a = d.authors[rng.gen_range(0..d.authors.len())];
            let t = rng.gen_range(0..k);
            n_at[a][t] += 1;
            n_a[a] += 1;
            n_tw[t][w] += 1;
            n_t[t] += 1;
            zd.push((a, t));
        }
        z.push(zd);
    }
    let mut weights = Vec::new();
    let (ka, wb) = (k as f64 * alpha, n_words as f64 * beta);
    for _ in 0..cfg.iterations {
        for (d, zd) in docs.iter().zip(z.iter_mut()) {
            for (&w, slot) in d.words.iter().zip(zd.iter_mut()) {
                let (a, t) = *slot;
                n_at[a][t] -= 1;
                n_a[a] -= 1;
                n_tw[t][w] -= 1;
                n_t[t] -= 1;
                let word: Vec<f64> = (0..k).map(|t| (n_tw[t][w] as f64 + beta) / (n_t[t] as f64 + wb)).collect();
                weights.clear();
                let mut total = 0.0;
                for &a in &d.authors {
                    let norm = n_a[a] as f64 + ka;
                    for t in 0..k {
                        total += (n_at[a][t] as f64 + alpha) / norm * word[t];
                        weights.push(total);
                    }
                }
                let x = rng.gen::<f64>() * total;
                let i = weights.partition_point(|&c| c <= x).min(weights.len() - 1);
                let (a, t) = (d.authors[i / k], i % k);
                n_at[a][t] += 1;
                n_a[a] += 1;
                n_tw[t][w] += 1;
                n_t[t] += 1;
                *slot = (a, t);
            }
        }
    }
    let theta = (0..n_authors)
        .map(|a| (0..k).map(|t| (n_at[a][t] as f64 + alpha) / (n_a[a] as f64 + ka)).collect())
        .collect();
    let phi = (0..k)
        .map(|t| (0..n_words).map(|w| (n_tw[t][w] as f64 + beta) / (n_t[t] as f64 + wb)).collect())
        .collect();
    Ok(AtmModel { k, theta, phi })
}
