//! Tweet-summarization integer linear program: pick tweets and content words
//! maximizing tweet count plus total tf-idf score under a word budget.
//!
//! Objective: maximize Σ_i x_i + Σ_j Score(j)·y_j subject to
//!   (C1) Σ_i x_i·Length(i) ≤ L
//!   (C2) y_j = 1 ⇒ Σ_{i ∈ T_j} x_i ≥ 1   (a word needs a containing tweet)
//!   (C3) x_i = 1 ⇒ y_j = 1 for all j ∈ C_i (a tweet brings all its words)
//!
//! The exact solver is a branch-and-bound over x only; y never needs to be
//! searched (see [`implied_y`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tweets::{ContentWord, TweetRecord};

/// Largest tweet count attempted exactly before falling back to greedy.
pub const DEFAULT_EXACTNESS_CAP: usize = 24;
/// Branch-and-bound node budget before falling back to greedy.
pub const DEFAULT_NODE_CAP: u64 = 1_000_000;
/// Objective improvements at or below this are treated as ties; ties resolve
/// to the first assignment in lexicographic x order.
const TIE_EPSILON: f64 = 1e-9;

/// The optimization instance: n candidate tweets, m content words, incidence
/// sets in both directions, and the length budget.
#[derive(Debug, Clone, PartialEq)]
pub struct IlpInstance {
    pub n: usize,
    pub m: usize,
    /// Length(i): token count of tweet i's clean text.
    pub lengths: Vec<usize>,
    /// Score(j): tf-idf of content word j (non-negative).
    pub scores: Vec<f64>,
    /// T_j: indices of tweets containing word j, ascending.
    pub t_sets: Vec<Vec<usize>>,
    /// C_i: indices of words contained in tweet i, ascending.
    pub c_sets: Vec<Vec<usize>>,
    /// L: maximum total token count of the selected tweets.
    pub budget: usize,
}

impl IlpInstance {
    /// Check internal consistency: vector dimensions, index ranges,
    /// non-negative finite scores, and the incidence duality
    /// j ∈ C_i ⇔ i ∈ T_j.
    pub fn validate(&self) -> Result<()> {
        if self.lengths.len() != self.n || self.c_sets.len() != self.n {
            return Err(Error::invalid_arg("instance", "tweet-sized vectors disagree with n"));
        }
        if self.scores.len() != self.m || self.t_sets.len() != self.m {
            return Err(Error::invalid_arg("instance", "word-sized vectors disagree with m"));
        }
        for (j, s) in self.scores.iter().enumerate() {
            if !s.is_finite() || *s < 0.0 {
                return Err(Error::invalid_arg("instance", format!("score {j} is {s}")));
            }
        }
        for (j, t) in self.t_sets.iter().enumerate() {
            for &i in t {
                if i >= self.n {
                    return Err(Error::invalid_arg("instance", format!("T_{j} references tweet {i}")));
                }
                if !self.c_sets[i].contains(&j) {
                    return Err(Error::invalid_arg(
                        "instance",
                        format!("duality broken: {i} in T_{j} but {j} not in C_{i}"),
                    ));
                }
            }
        }
        for (i, c) in self.c_sets.iter().enumerate() {
            for &j in c {
                if j >= self.m {
                    return Err(Error::invalid_arg("instance", format!("C_{i} references word {j}")));
                }
                if !self.t_sets[j].contains(&i) {
                    return Err(Error::invalid_arg(
                        "instance",
                        format!("duality broken: {j} in C_{i} but {i} not in T_{j}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A candidate or solved assignment with its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlpSolution {
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub objective: f64,
    pub proven_optimal: bool,
}

/// Feasibility verdict plus a human-readable list of violated constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<String>,
}

/// Build the instance from a loaded corpus and its scored content words.
/// Tweets without any content word stay in as candidates; selecting one still
/// contributes 1 to the objective.
pub fn build_instance(
    records: &[TweetRecord],
    content_words: &[ContentWord],
    budget: usize,
) -> Result<IlpInstance> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = records.len();
    let m = content_words.len();
    let lengths: Vec<usize> = records.iter().map(|r| r.tokens.len()).collect();
    let mut scores = Vec::with_capacity(m);
    let mut t_sets = Vec::with_capacity(m);
    let mut c_sets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, word) in content_words.iter().enumerate() {
        if !word.score.is_finite() || word.score < 0.0 {
            return Err(Error::invalid_arg(
                "content_words",
                format!("term {} has score {}", word.term, word.score),
            ));
        }
        for &i in &word.containing {
            if i >= n {
                return Err(Error::invalid_arg(
                    "content_words",
                    format!("term {} references tweet {i} outside corpus", word.term),
                ));
            }
            c_sets[i].push(j);
        }
        scores.push(word.score);
        t_sets.push(word.containing.clone());
    }
    let instance = IlpInstance { n, m, lengths, scores, t_sets, c_sets, budget };
    instance.validate()?;
    Ok(instance)
}

/// Check a solution against the three constraints, reporting each violation.
pub fn feasible(solution: &IlpSolution, instance: &IlpInstance) -> Result<FeasibilityReport> {
    if solution.x.len() != instance.n || solution.y.len() != instance.m {
        return Err(Error::DimensionMismatch {
            expected: (instance.n, instance.m),
            found: (solution.x.len(), solution.y.len()),
        });
    }
    let mut violations = Vec::new();
    let total: usize = solution
        .x
        .iter()
        .zip(&instance.lengths)
        .filter(|(picked, _)| **picked)
        .map(|(_, len)| len)
        .sum();
    if total > instance.budget {
        violations.push(format!("C1: total length {total} exceeds budget {}", instance.budget));
    }
    for (j, picked) in solution.y.iter().enumerate() {
        if *picked && !instance.t_sets[j].iter().any(|&i| solution.x[i]) {
            violations.push(format!("C2: word {j} selected with no containing tweet selected"));
        }
    }
    for (i, picked) in solution.x.iter().enumerate() {
        if *picked {
            for &j in &instance.c_sets[i] {
                if !solution.y[j] {
                    violations.push(format!("C3: tweet {i} selected but its word {j} is not"));
                }
            }
        }
    }
    Ok(FeasibilityReport { feasible: violations.is_empty(), violations })
}

/// The implied-y closure: given the picked tweet set S = {i : x_i}, the only
/// feasible-and-optimal word assignment is y_j = [T_j ∩ S ≠ ∅].
///
/// Why y is fully determined by x: C3 forces on every word of a picked tweet,
/// and j has a picked tweet exactly when T_j ∩ S ≠ ∅, so the forced set is
/// {j : T_j ∩ S ≠ ∅}. C2 forbids any word outside that same set. Forced and
/// allowed coincide, so a given x admits exactly one feasible y — and since
/// Score(j) ≥ 0, that y is also what maximization would choose.
pub fn implied_y(instance: &IlpInstance, x: &[bool]) -> Vec<bool> {
    (0..instance.m)
        .map(|j| instance.t_sets[j].iter().any(|&i| x[i]))
        .collect()
}

/// Objective recomputed in canonical order (tweet count, then word scores in
/// ascending j), so equal assignments always produce bit-identical values.
fn canonical_objective(instance: &IlpInstance, x: &[bool], y: &[bool]) -> f64 {
    let mut obj = x.iter().filter(|&&b| b).count() as f64;
    for j in 0..instance.m {
        if y[j] {
            obj += instance.scores[j];
        }
    }
    obj
}

/// Complete an x assignment into a full solution via the implied-y closure.
fn complete(instance: &IlpInstance, x: Vec<bool>, proven_optimal: bool) -> IlpSolution {
    let y = implied_y(instance, &x);
    let objective = canonical_objective(instance, &x, &y);
    IlpSolution { x, y, objective, proven_optimal }
}

struct BranchAndBound<'a> {
    instance: &'a IlpInstance,
    /// Suffix lengths[k..] sorted ascending, for the fractional knapsack bound.
    suffix_sorted: Vec<Vec<usize>>,
    /// Largest tweet index in T_j, or None when T_j is empty.
    t_max: Vec<Option<usize>>,
    x: Vec<bool>,
    picked_word_count: Vec<u32>,
    used: usize,
    picked: usize,
    best_obj: f64,
    best_x: Option<Vec<bool>>,
    nodes: u64,
    node_cap: u64,
    aborted: bool,
}

impl<'a> BranchAndBound<'a> {
    fn new(instance: &'a IlpInstance, node_cap: u64) -> Self {
        let suffix_sorted = (0..=instance.n)
            .map(|k| {
                let mut v = instance.lengths[k..].to_vec();
                v.sort_unstable();
                v
            })
            .collect();
        let t_max = instance.t_sets.iter().map(|t| t.iter().copied().max()).collect();
        BranchAndBound {
            instance,
            suffix_sorted,
            t_max,
            x: vec![false; instance.n],
            picked_word_count: vec![0; instance.m],
            used: 0,
            picked: 0,
            best_obj: f64::NEG_INFINITY,
            best_x: None,
            nodes: 0,
            node_cap,
            aborted: false,
        }
    }

    /// Upper bound for any completion of the prefix x[..k]: a fractional
    /// knapsack over the undecided tweets bounds the Σx_i term, and every
    /// word with a picked or undecided containing tweet is counted as
    /// reachable at full score for the Σ Score·y term.
    fn upper_bound(&self, k: usize) -> f64 {
        let remaining = self.instance.budget - self.used;
        let mut bound = self.picked as f64;
        let mut room = remaining;
        for (taken, &len) in self.suffix_sorted[k].iter().enumerate() {
            if len <= room {
                room -= len;
                bound += 1.0;
            } else {
                bound += room as f64 / len as f64;
                debug_assert!(taken + 1 <= self.instance.n);
                break;
            }
        }
        for j in 0..self.instance.m {
            let reachable =
                self.picked_word_count[j] > 0 || self.t_max[j].is_some_and(|max| max >= k);
            if reachable {
                bound += self.instance.scores[j];
            }
        }
        bound
    }

    fn search(&mut self, k: usize) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_cap {
            self.aborted = true;
            return;
        }
        if k == self.instance.n {
            let y = implied_y(self.instance, &self.x);
            let obj = canonical_objective(self.instance, &self.x, &y);
            // Strictly-better-than-epsilon updates only: the first optimum in
            // visit order (lexicographic x, exclude branch first) is kept.
            if obj > self.best_obj + TIE_EPSILON {
                self.best_obj = obj;
                self.best_x = Some(self.x.clone());
            }
            return;
        }
        if self.upper_bound(k) <= self.best_obj + TIE_EPSILON {
            return;
        }
        // Exclude branch first: assignments are visited in ascending
        // lexicographic order of the x bitvector, making the retained
        // optimum the lexicographically smallest one.
        self.search(k + 1);
        let len = self.instance.lengths[k];
        if self.used + len <= self.instance.budget {
            self.x[k] = true;
            self.used += len;
            self.picked += 1;
            for &j in &self.instance.c_sets[k] {
                self.picked_word_count[j] += 1;
            }
            self.search(k + 1);
            for &j in &self.instance.c_sets[k] {
                self.picked_word_count[j] -= 1;
            }
            self.picked -= 1;
            self.used -= len;
            self.x[k] = false;
        }
    }
}

/// Solve exactly by branch and bound when the instance is small enough
/// (n ≤ [`DEFAULT_EXACTNESS_CAP`]) and the search finishes within `node_cap`
/// nodes; otherwise fall back to [`solve_greedy`] with
/// `proven_optimal = false`.
pub fn solve_exact(instance: &IlpInstance, node_cap: u64) -> Result<IlpSolution> {
    solve_with_cap(instance, DEFAULT_EXACTNESS_CAP, node_cap)
}

/// [`solve_exact`] with an explicit exactness cap on n (CLI-overridable).
pub fn solve_with_cap(
    instance: &IlpInstance,
    exact_cap: usize,
    node_cap: u64,
) -> Result<IlpSolution> {
    instance.validate()?;
    if instance.n > exact_cap {
        return solve_greedy(instance);
    }
    let mut bnb = BranchAndBound::new(instance, node_cap);
    bnb.search(0);
    if bnb.aborted {
        return solve_greedy(instance);
    }
    let x = bnb.best_x.expect("all-zero assignment is always feasible");
    Ok(complete(instance, x, true))
}

/// Greedy fallback: repeatedly add the fitting tweet with the best marginal
/// objective gain per token. Always feasible; never flagged optimal.
pub fn solve_greedy(instance: &IlpInstance) -> Result<IlpSolution> {
    instance.validate()?;
    let mut x = vec![false; instance.n];
    let mut covered = vec![false; instance.m];
    let mut used = 0usize;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..instance.n {
            if x[i] || used + instance.lengths[i] > instance.budget {
                continue;
            }
            let gain: f64 = 1.0
                + instance.c_sets[i]
                    .iter()
                    .filter(|&&j| !covered[j])
                    .map(|&j| instance.scores[j])
                    .sum::<f64>();
            let ratio = gain / instance.lengths[i].max(1) as f64;
            // Strict improvement keeps the lowest index on ratio ties.
            if best.is_none_or(|(_, b)| ratio > b) {
                best = Some((i, ratio));
            }
        }
        let Some((i, _)) = best else { break };
        x[i] = true;
        used += instance.lengths[i];
        for &j in &instance.c_sets[i] {
            covered[j] = true;
        }
    }
    Ok(complete(instance, x, false))
}

/// Emit the selected tweets' raw text in corpus order, one entry per line.
pub fn render_summary(
    solution: &IlpSolution,
    instance: &IlpInstance,
    records: &[TweetRecord],
) -> Result<Vec<String>> {
    if records.len() != instance.n {
        return Err(Error::invalid_arg(
            "records",
            format!("corpus has {} records but instance has n = {}", records.len(), instance.n),
        ));
    }
    let report = feasible(solution, instance)?;
    if !report.feasible {
        return Err(Error::InfeasibleSolution(report.violations.join("; ")));
    }
    Ok(records
        .iter()
        .zip(&solution.x)
        .filter(|(_, picked)| **picked)
        .map(|(r, _)| r.raw_text.clone())
        .collect())
}
