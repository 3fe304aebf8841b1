//! Location-keyed integration: keyword frequency across pre/post time
//! windows, region-tweet proportions, and the combined emergency report.

use std::collections::BTreeMap;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::change::{BBox, ChangeReport};
use crate::error::{Error, Result};
use crate::raster::{CLASS_NAMES, NUM_CLASSES};
use crate::tweets::TweetRecord;

/// Timestamp layout used by the tweet corpora, e.g. `2019-12-21 16:42:18+00:00`.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%:z";

/// Parse a corpus timestamp; falls back to RFC 3339 so config files can use
/// the `T`-separated form too.
pub fn parse_timestamp(text: &str) -> Option<DateTime<FixedOffset>> {
    DateTime::parse_from_str(text, TIMESTAMP_FORMAT)
        .or_else(|_| DateTime::parse_from_rfc3339(text))
        .ok()
}

/// Half-open time range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
}

impl TimeWindow {
    pub fn new(start: DateTime<FixedOffset>, end: DateTime<FixedOffset>) -> Result<Self> {
        if start > end {
            return Err(Error::invalid_arg("window", format!("start {start} after end {end}")));
        }
        Ok(TimeWindow { start, end })
    }

    pub fn contains(&self, t: DateTime<FixedOffset>) -> bool {
        self.start <= t && t < self.end
    }

    pub fn overlaps(&self, other: &TimeWindow) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Keywords to count in two disjoint observation windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordQuery {
    /// Case-insensitive substrings matched against raw text, so hashtag
    /// keywords like `#keralafloods` work as written.
    pub keywords: Vec<String>,
    pub window_pre: TimeWindow,
    pub window_post: TimeWindow,
}

impl KeywordQuery {
    pub fn validate(&self) -> Result<()> {
        if self.keywords.is_empty() {
            return Err(Error::invalid_arg("query", "keyword list is empty"));
        }
        if self.keywords.iter().any(|k| k.trim().is_empty()) {
            return Err(Error::invalid_arg("query", "blank keyword matches everything"));
        }
        for w in [&self.window_pre, &self.window_post] {
            if w.start > w.end {
                return Err(Error::invalid_arg("query", "window start after end"));
            }
        }
        if self.window_pre.overlaps(&self.window_post) {
            return Err(Error::invalid_arg("query", "pre and post windows overlap"));
        }
        Ok(())
    }
}

/// Keyword match counts per window. `total_*` counts each record at most
/// once per window; the per-keyword maps count a record under every keyword
/// it contains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub per_keyword_pre: BTreeMap<String, u64>,
    pub per_keyword_post: BTreeMap<String, u64>,
    pub total_pre: u64,
    pub total_post: u64,
    /// `(post − pre) / pre × 100`; `None` (rendered "n/a") when pre is zero.
    pub percent_change: Option<f64>,
    /// Records skipped because their timestamp would not parse.
    pub skipped_records: u64,
}

fn percent_delta(pre: u64, post: u64) -> Option<f64> {
    (pre > 0).then(|| (post as f64 - pre as f64) / pre as f64 * 100.0)
}

/// Count keyword-bearing tweets inside each window of the query.
pub fn keyword_frequency(records: &[TweetRecord], query: &KeywordQuery) -> Result<FrequencyReport> {
    query.validate()?;
    let lowered: Vec<(String, String)> = query
        .keywords
        .iter()
        .map(|k| (k.clone(), k.to_lowercase()))
        .collect();
    let mut per_keyword_pre: BTreeMap<String, u64> =
        lowered.iter().map(|(k, _)| (k.clone(), 0)).collect();
    let mut per_keyword_post = per_keyword_pre.clone();
    let mut total_pre = 0u64;
    let mut total_post = 0u64;
    let mut skipped_records = 0u64;
    for record in records {
        let Some(t) = parse_timestamp(&record.timestamp) else {
            log::warn!("record {}: unparseable timestamp {:?}, skipped", record.id, record.timestamp);
            skipped_records += 1;
            continue;
        };
        let (per_keyword, total) = if query.window_pre.contains(t) {
            (&mut per_keyword_pre, &mut total_pre)
        } else if query.window_post.contains(t) {
            (&mut per_keyword_post, &mut total_post)
        } else {
            continue;
        };
        let text = record.raw_text.to_lowercase();
        let mut any = false;
        for (keyword, needle) in &lowered {
            if text.contains(needle.as_str()) {
                *per_keyword.get_mut(keyword).expect("keyword pre-seeded") += 1;
                any = true;
            }
        }
        if any {
            *total += 1;
        }
    }
    Ok(FrequencyReport {
        per_keyword_pre,
        per_keyword_post,
        total_pre,
        total_post,
        percent_change: percent_delta(total_pre, total_post),
        skipped_records,
    })
}

/// For each region, the fraction of all records whose raw text mentions any
/// of the region's keywords (case-insensitive substring). Fractions need not
/// sum to 1: a tweet may mention several regions or none.
pub fn region_tweet_proportion(
    records: &[TweetRecord],
    region_keywords: &BTreeMap<String, Vec<String>>,
) -> Result<BTreeMap<String, f64>> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let texts: Vec<String> = records.iter().map(|r| r.raw_text.to_lowercase()).collect();
    let total = records.len() as f64;
    let mut out = BTreeMap::new();
    for (region, keywords) in region_keywords {
        let needles: Vec<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
        let hits = texts
            .iter()
            .filter(|t| needles.iter().any(|n| !n.is_empty() && t.contains(n.as_str())))
            .count();
        out.insert(region.clone(), hits as f64 / total);
    }
    Ok(out)
}

/// A value stamped with the disaster-run identifier it came from, so report
/// assembly can refuse to fuse artifacts from different runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTagged<T> {
    pub run_id: String,
    pub value: T,
}

impl<T> RunTagged<T> {
    pub fn new(run_id: impl Into<String>, value: T) -> Self {
        RunTagged { run_id: run_id.into(), value }
    }
}

/// One named changed region with its tweet share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub name: String,
    pub class: String,
    pub area: usize,
    pub bbox: BBox,
    pub proportion: f64,
}

/// The fused emergency document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergencyReport {
    pub run_id: String,
    /// Injected by the caller so identical inputs produce identical bytes.
    pub generated_at: String,
    pub change: ChangeReport,
    /// One entry per (changed region, name), ordered by area descending,
    /// then proportion descending, then name ascending.
    pub regions: Vec<RegionEntry>,
    /// Tweet share per region name; covers every name appearing in
    /// `regions` (zero-filled where the proportion input lacked it).
    pub tweet_proportions: BTreeMap<String, f64>,
    pub keyword_frequency: FrequencyReport,
    pub summary_lines: Vec<String>,
}

fn check_run_id(expected: &str, found: &str) -> Result<()> {
    if expected != found {
        return Err(Error::RunIdMismatch { expected: expected.to_string(), found: found.to_string() });
    }
    Ok(())
}

/// Fuse the change analysis, tweet summary, keyword frequencies, and region
/// proportions — all tagged with the same run id — into one report.
pub fn generate_report(
    change: &RunTagged<ChangeReport>,
    summary_lines: &RunTagged<Vec<String>>,
    frequency: &RunTagged<FrequencyReport>,
    proportions: &RunTagged<BTreeMap<String, f64>>,
    generated_at: &str,
) -> Result<EmergencyReport> {
    let run_id = &change.run_id;
    check_run_id(run_id, &summary_lines.run_id)?;
    check_run_id(run_id, &frequency.run_id)?;
    check_run_id(run_id, &proportions.run_id)?;

    let mut tweet_proportions = proportions.value.clone();
    for region in &change.value.changed_regions {
        for name in &region.names {
            tweet_proportions.entry(name.clone()).or_insert(0.0);
        }
    }
    let mut regions = Vec::new();
    for region in &change.value.changed_regions {
        for name in &region.names {
            regions.push(RegionEntry {
                name: name.clone(),
                class: CLASS_NAMES[region.class as usize].to_string(),
                area: region.area,
                bbox: region.bbox,
                proportion: tweet_proportions[name],
            });
        }
    }
    regions.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then_with(|| b.proportion.total_cmp(&a.proportion))
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(EmergencyReport {
        run_id: run_id.clone(),
        generated_at: generated_at.to_string(),
        change: change.value.clone(),
        regions,
        tweet_proportions,
        keyword_frequency: frequency.value.clone(),
        summary_lines: summary_lines.value.clone(),
    })
}

fn fmt_percent_signed(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:+.4}%"),
        None => "n/a".to_string(),
    }
}

/// Human-readable text rendering of the report.
pub fn render_text(report: &EmergencyReport) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line("EMERGENCY SITUATION REPORT".into());
    line(format!("run id: {}", report.run_id));
    line(format!("generated: {}", report.generated_at));
    line(String::new());
    line("LAND-COVER CHANGE".into());
    for k in 0..NUM_CLASSES {
        line(format!(
            "  {}: {} -> {} ({})",
            CLASS_NAMES[k],
            report.change.pre_counts.counts[k],
            report.change.post_counts.counts[k],
            fmt_percent_signed(report.change.percent_change[k]),
        ));
    }
    line(format!("  changed pixels: {}", report.change.changed_pixels));
    line(String::new());
    line("CHANGED REGIONS".into());
    if report.regions.is_empty() {
        line("  (none)".into());
    }
    for (rank, r) in report.regions.iter().enumerate() {
        line(format!(
            "  {}. {} ({}, {} px, bbox [{}, {}, {}, {}], tweet share {:.4})",
            rank + 1,
            r.name,
            r.class,
            r.area,
            r.bbox[0],
            r.bbox[1],
            r.bbox[2],
            r.bbox[3],
            r.proportion,
        ));
    }
    line(String::new());
    line("KEYWORD FREQUENCY".into());
    line(format!("  pre-window tweets matching: {}", report.keyword_frequency.total_pre));
    line(format!("  post-window tweets matching: {}", report.keyword_frequency.total_post));
    let pc = match report.keyword_frequency.percent_change {
        Some(v) => format!("{v:.2}%"),
        None => "n/a".to_string(),
    };
    line(format!("  percent change: {pc}"));
    for (keyword, pre) in &report.keyword_frequency.per_keyword_pre {
        let post = report.keyword_frequency.per_keyword_post.get(keyword).copied().unwrap_or(0);
        line(format!("    {keyword}: {pre} / {post}"));
    }
    line(String::new());
    line("TWEET SUMMARY".into());
    if report.summary_lines.is_empty() {
        line("  (none)".into());
    }
    for l in &report.summary_lines {
        line(format!("  {l}"));
    }
    out
}
