//! Tweet corpus ingestion (JSON Lines), text cleaning, tokenization,
//! content-word extraction, and tf-idf scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// One retained tweet, cleaned and tokenized at load time.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    /// The record's own id when present, otherwise its 1-based line number.
    pub id: String,
    /// Timestamp text as found in the file (e.g. `2019-12-21 16:42:18+00:00`);
    /// parsed only where an operation needs time windows.
    pub timestamp: String,
    pub user: String,
    pub raw_text: String,
    /// `raw_text` with URL/mention/hashtag tokens removed and whitespace
    /// collapsed. Records whose clean text is empty are dropped at load.
    pub clean_text: String,
    /// Lowercased tokens of `clean_text`.
    pub tokens: Vec<String>,
}

/// Load result: retained records in file order plus per-line warnings for
/// everything that was skipped.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub records: Vec<TweetRecord>,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct RawTweet {
    date: String,
    user: String,
    text: String,
    #[serde(default)]
    id: Option<String>,
}

/// Read a JSON Lines corpus (`date`, `user`, `text`, optional `id` per line).
///
/// Malformed lines and lines whose text cleans to nothing are skipped with a
/// warning naming the line number; the load only fails outright when the file
/// is missing, contains no lines at all, or retains no records.
pub fn load_corpus(path: &Path) -> Result<LoadedCorpus> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let content = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut non_blank = 0usize;
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        non_blank += 1;
        match serde_json::from_str::<RawTweet>(line) {
            Err(err) => warnings.push(format!("line {line_no}: malformed record ({err})")),
            Ok(raw) => {
                let clean_text = preprocess(&raw.text);
                if clean_text.is_empty() {
                    warnings.push(format!("line {line_no}: empty after cleaning, dropped"));
                    continue;
                }
                let tokens = tokenize(&clean_text);
                records.push(TweetRecord {
                    id: raw.id.unwrap_or_else(|| line_no.to_string()),
                    timestamp: raw.date,
                    user: raw.user,
                    raw_text: raw.text,
                    clean_text,
                    tokens,
                });
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    if non_blank == 0 {
        return Err(Error::EmptyCorpus);
    }
    if records.is_empty() {
        return Err(Error::AllLinesMalformed { path: path.to_path_buf(), lines: non_blank });
    }
    Ok(LoadedCorpus { records, warnings })
}

/// Remove URL, mention, and hashtag tokens and collapse whitespace.
/// Idempotent; an empty result means the record should be dropped.
pub fn preprocess(raw_text: &str) -> String {
    raw_text
        .split_whitespace()
        .filter(|token| {
            let lower = token.to_lowercase();
            !(lower.starts_with("http://")
                || lower.starts_with("https://")
                || lower.starts_with("www.")
                || token.starts_with('@')
                || token.starts_with('#'))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercase and split on every character that is neither alphanumeric nor
/// `'+'`, so `+`-prefixed digit runs (phone numbers) survive as one token.
pub fn tokenize(clean_text: &str) -> Vec<String> {
    clean_text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '+')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Stopword set consulted by the content-word rule.
#[derive(Debug, Clone)]
pub struct Stoplist {
    words: BTreeSet<String>,
}

const EMBEDDED_STOPWORDS: &str = include_str!("stopwords.txt");

impl Stoplist {
    /// The bundled English stoplist.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_STOPWORDS).expect("bundled stoplist is non-empty")
    }

    /// Load an override stoplist: one lowercase word per line.
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)
            .map_err(|_| Error::EmptyStoplistFile(path.to_path_buf()))?;
        Self::parse(&content).ok_or_else(|| Error::EmptyStoplistFile(path.to_path_buf()))
    }

    fn parse(content: &str) -> Option<Self> {
        let words: BTreeSet<String> = content
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        if words.is_empty() {
            None
        } else {
            Some(Stoplist { words })
        }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.words.contains(term)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// The content-word rule: an informative term is either a non-stopword
/// alphabetic word of length >= 3 or a digit run of length >= 5 (optionally
/// `+`-prefixed), which admits helpline numbers.
pub fn is_content_term(token: &str, stoplist: &Stoplist) -> bool {
    let digits = token.strip_prefix('+').unwrap_or(token);
    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
        return digits.chars().count() >= 5;
    }
    token.chars().count() >= 3 && token.chars().all(char::is_alphabetic) && !stoplist.contains(token)
}

/// A scored content word and the tweets containing it.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentWord {
    pub term: String,
    /// tf-idf score; 0 until [`score_words`] runs.
    pub score: f64,
    /// Indices into the record list of every tweet containing the term.
    pub containing: Vec<usize>,
}

/// Extract the distinct content words of a corpus (term-sorted, unscored),
/// each with the indices of the tweets containing it.
pub fn content_words(records: &[TweetRecord], stoplist: &Stoplist) -> Vec<ContentWord> {
    let mut by_term: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        for token in &record.tokens {
            if is_content_term(token, stoplist) {
                by_term.entry(token).or_default().insert(i);
            }
        }
    }
    by_term
        .into_iter()
        .map(|(term, containing)| ContentWord {
            term: term.to_string(),
            score: 0.0,
            containing: containing.into_iter().collect(),
        })
        .collect()
}

/// Per-term corpus statistics for tf-idf.
#[derive(Debug, Clone, PartialEq)]
pub struct TermStats {
    /// Number of documents containing the term (`n_t`).
    pub doc_freq: usize,
    /// Mean occurrences per *containing* document (`c̄_t`), always >= 1.
    pub avg_count: f64,
}

/// Document count plus statistics for every token in the retained corpus.
/// Dropped records never reach this point, so `n_docs` counts only documents
/// that contribute terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub terms: BTreeMap<String, TermStats>,
}

impl CorpusStats {
    pub fn build(records: &[TweetRecord]) -> Self {
        let mut totals: BTreeMap<&str, (usize, u64)> = BTreeMap::new(); // (doc_freq, total count)
        for record in records {
            let mut in_doc: BTreeMap<&str, u64> = BTreeMap::new();
            for token in &record.tokens {
                *in_doc.entry(token).or_default() += 1;
            }
            for (term, count) in in_doc {
                let entry = totals.entry(term).or_default();
                entry.0 += 1;
                entry.1 += count;
            }
        }
        let terms = totals
            .into_iter()
            .map(|(term, (doc_freq, total))| {
                (term.to_string(), TermStats { doc_freq, avg_count: total as f64 / doc_freq as f64 })
            })
            .collect();
        CorpusStats { n_docs: records.len(), terms }
    }
}

/// tf-idf score `c̄_t * ln(N / n_t)`; zero when the term is in every document.
pub fn tfidf(stats: &CorpusStats, term: &str) -> Result<f64> {
    let t = stats.terms.get(term).ok_or_else(|| Error::UnknownTerm(term.to_string()))?;
    Ok(t.avg_count * (stats.n_docs as f64 / t.doc_freq as f64).ln())
}

/// Fill in the scores of extracted content words from corpus statistics.
pub fn score_words(words: &mut [ContentWord], stats: &CorpusStats) -> Result<()> {
    for w in words.iter_mut() {
        w.score = tfidf(stats, &w.term)?;
    }
    Ok(())
}

/// Write the content-word table as CSV `term,score,doc_freq`, ranked by score
/// descending (ties alphabetical).
pub fn write_content_words_csv(path: &Path, words: &[ContentWord]) -> Result<()> {
    let mut ranked: Vec<&ContentWord> = words.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "term,score,doc_freq")?;
    for cw in ranked {
        writeln!(w, "{},{},{}", cw.term, cw.score, cw.containing.len())?;
    }
    w.flush()?;
    Ok(())
}
