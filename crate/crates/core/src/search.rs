//! Maximization of the product-form bounds over permutations and subsets.
//!
//! `(sigma, tau) . I_k` depends only on the set of index pairs
//! `{(sigma(i), tau(i)) : i < k}`, so the exhaustive space is a sorted
//! `k`-subset for `sigma` times an ordered `k`-injection for `tau`.
//! `(sigma, tau) . S_pq` depends on the ordered `p`-prefixes of both.
//! `sigma(K_k)` depends only on the prefix subset. Candidates are ranked in
//! lexicographic order of their completed permutations; equal values resolve
//! to the smallest rank, so results do not depend on the execution mode.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds_product::{
    bound_ik, bound_ik_perm, bound_k, bound_spq, bound_spq_perm, k_value, s_pair_labels, BoundInputPair,
    BoundResult, Permutation,
};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Largest candidate space searched exhaustively.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

const CHUNK: u128 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchKind {
    Exhaustive,
    RandomSample,
    GreedySwap,
    /// Exhaustive within the limit, otherwise sampling followed by hill climbing.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchStrategy {
    pub kind: SearchKind,
    pub seed: u64,
    pub sample_count: usize,
    pub swap_rounds: usize,
    pub exec: Exec,
}

impl Default for SearchStrategy {
    fn default() -> Self {
        SearchStrategy {
            kind: SearchKind::Hybrid,
            seed: 0,
            sample_count: 2000,
            swap_rounds: 50,
            exec: Exec::default(),
        }
    }
}

impl SearchStrategy {
    pub fn with_kind(kind: SearchKind) -> Self {
        SearchStrategy {
            kind,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: BoundResult,
    pub evaluations: u64,
    /// True iff the whole reduced space was enumerated exhaustively.
    pub certified_exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    I,
    S,
    K,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

fn falling(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128))
}

/// `r`-th `k`-subset of `0..n` in lexicographic order.
fn unrank_combination(n: usize, k: usize, mut r: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut c = 0;
    while out.len() < k {
        let count = binomial(n - c - 1, k - out.len() - 1);
        if r < count {
            out.push(c);
        } else {
            r -= count;
        }
        c += 1;
    }
    out
}

/// `r`-th ordered `k`-injection into `0..n` in lexicographic order.
fn unrank_injection(n: usize, k: usize, mut r: u128) -> Vec<usize> {
    let mut free: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let radix = falling(n - i - 1, k - i - 1);
        let idx = (r / radix) as usize;
        r %= radix;
        out.push(free.remove(idx));
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Objective {
    Ik { k: usize },
    Spq { p: usize, q: usize },
}

impl Objective {
    fn prefix(self) -> usize {
        match self {
            Objective::Ik { k } => k,
            Objective::Spq { p: 1, q: 0 } => 0,
            Objective::Spq { p, .. } => p,
        }
    }

    fn pair_count(self) -> usize {
        match self {
            Objective::Ik { k } => k * (k - 1) / 2,
            Objective::Spq { p: 1, .. } => 0,
            Objective::Spq { p, q } => (p - 1) * (p - 2) / 2 + q,
        }
    }

    fn space(self, n: usize) -> u128 {
        let m = self.prefix();
        match self {
            Objective::Ik { .. } => binomial(n, m).saturating_mul(falling(n, m)),
            Objective::Spq { .. } => falling(n, m).saturating_mul(falling(n, m)),
        }
    }

    fn decode(self, n: usize, r: u128) -> (Vec<usize>, Vec<usize>) {
        let m = self.prefix();
        let inner = falling(n, m);
        let outer = r / inner;
        let sigma = match self {
            Objective::Ik { .. } => unrank_combination(n, m, outer),
            Objective::Spq { .. } => unrank_injection(n, m, outer),
        };
        (sigma, unrank_injection(n, m, r % inner))
    }

    /// Canonical prefixes of a full candidate.
    fn canonical(self, sigma: &[usize], tau: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let m = self.prefix();
        match self {
            Objective::Ik { .. } => {
                let mut pairs: Vec<(usize, usize)> = sigma[..m].iter().copied().zip(tau[..m].iter().copied()).collect();
                pairs.sort_unstable();
                pairs.into_iter().unzip()
            }
            Objective::Spq { .. } => (sigma[..m].to_vec(), tau[..m].to_vec()),
        }
    }

    /// Lagrange penalty of the candidate, accumulated like the closed forms.
    fn penalty(self, x: &[f64], y: &[f64], sigma: &[usize], tau: &[usize]) -> f64 {
        let count = self.pair_count();
        let mut sum = 0.0;
        let mut seen = 0;
        'outer: for a in 1..self.prefix() {
            for b in 0..a {
                if seen == count {
                    break 'outer;
                }
                let t = x[sigma[a]] * y[tau[b]] - x[sigma[b]] * y[tau[a]];
                sum += t * t;
                seen += 1;
            }
        }
        sum
    }

    fn result(self, pair: &BoundInputPair, sigma: &[usize], tau: &[usize]) -> Result<BoundResult> {
        let n = pair.n();
        let s = Permutation::completing(sigma, n)?;
        let t = Permutation::completing(tau, n)?;
        match self {
            Objective::Ik { k } => bound_ik_perm(pair, k, &s, &t),
            Objective::Spq { p, q } => bound_spq_perm(pair, p, q, &s, &t),
        }
    }
}

/// Incumbent ordered by (penalty, then lexicographic candidate encoding).
#[derive(Debug, Clone)]
struct Candidate {
    penalty: f64,
    sigma: Vec<usize>,
    tau: Vec<usize>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.penalty < other.penalty
            || (self.penalty == other.penalty && (&self.sigma, &self.tau) < (&other.sigma, &other.tau))
    }
}

fn better(a: Option<Candidate>, b: Candidate) -> Option<Candidate> {
    match a {
        Some(a) if !b.beats(&a) => Some(a),
        _ => Some(b),
    }
}

fn canonical_candidate(obj: Objective, x: &[f64], y: &[f64], sigma: &[usize], tau: &[usize]) -> Candidate {
    let (s, t) = obj.canonical(sigma, tau);
    Candidate {
        penalty: obj.penalty(x, y, &s, &t),
        sigma: s,
        tau: t,
    }
}

fn exhaustive(obj: Objective, pair: &BoundInputPair, exec: Exec) -> (Candidate, u64) {
    let (x, y, n) = (pair.x(), pair.y(), pair.n());
    let m = obj.prefix();
    let inner = falling(n, m);
    let outer = (obj.space(n) / inner) as usize;
    let best = exec
        .map(outer, |o| {
            let (sigma, mut tau) = obj.decode(n, o as u128 * inner);
            let mut used = vec![false; n];
            tau.iter().for_each(|&t| used[t] = true);
            let mut best: Option<Candidate> = None;
            loop {
                let penalty = obj.penalty(x, y, &sigma, &tau);
                if best.as_ref().is_none_or(|b| penalty < b.penalty) {
                    best = Some(Candidate {
                        penalty,
                        sigma: sigma.clone(),
                        tau: tau.clone(),
                    });
                }
                if !next_injection(n, &mut tau, &mut used) {
                    break;
                }
            }
            best
        })
        .into_iter()
        .flatten()
        .fold(None, better)
        .expect("candidate space is nonempty");
    (best, obj.space(n) as u64)
}

/// Advances `buf` to its lexicographic successor among injections into
/// `0..n`; `used` marks the values in `buf`.
fn next_injection(n: usize, buf: &mut [usize], used: &mut [bool]) -> bool {
    let k = buf.len();
    for i in (0..k).rev() {
        used[buf[i]] = false;
        if let Some(v) = (buf[i] + 1..n).find(|&v| !used[v]) {
            buf[i] = v;
            used[v] = true;
            let mut next = 0;
            for slot in buf[i + 1..].iter_mut() {
                while used[next] {
                    next += 1;
                }
                *slot = next;
                used[next] = true;
            }
            return true;
        }
    }
    false
}

fn random_sample(obj: Objective, pair: &BoundInputPair, strategy: &SearchStrategy) -> (Candidate, u64) {
    let (x, y, n) = (pair.x(), pair.y(), pair.n());
    let size = obj.space(n);
    // Sampling without replacement from a space no larger than the budget
    // visits every candidate.
    if size <= strategy.sample_count as u128 {
        return exhaustive(obj, pair, strategy.exec);
    }
    let identity: Vec<usize> = (0..n).collect();
    let start = canonical_candidate(obj, x, y, &identity, &identity);
    let best = strategy
        .exec
        .map(strategy.sample_count, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(strategy.seed);
            rng.set_stream(i as u64);
            let mut s = identity.clone();
            let mut t = identity.clone();
            s.shuffle(&mut rng);
            t.shuffle(&mut rng);
            canonical_candidate(obj, x, y, &s, &t)
        })
        .into_iter()
        .fold(Some(start), better)
        .expect("identity candidate present");
    (best, strategy.sample_count as u64 + 1)
}

/// Best-improvement hill climbing over all transpositions of `sigma` and `tau`.
fn greedy(obj: Objective, pair: &BoundInputPair, start: Candidate, rounds: usize) -> (Candidate, u64) {
    let (x, y, n) = (pair.x(), pair.y(), pair.n());
    let mut sigma = Permutation::completing(&start.sigma, n).expect("valid prefix").images().to_vec();
    let mut tau = Permutation::completing(&start.tau, n).expect("valid prefix").images().to_vec();
    let mut current = obj.penalty(x, y, &sigma, &tau);
    let mut evaluations = 1u64;
    for _ in 0..rounds {
        let mut best_move: Option<(f64, bool, usize, usize)> = None;
        for which in [false, true] {
            for i in 0..n {
                for j in i + 1..n {
                    let perm = if which { &mut tau } else { &mut sigma };
                    perm.swap(i, j);
                    let v = obj.penalty(x, y, &sigma, &tau);
                    evaluations += 1;
                    let perm = if which { &mut tau } else { &mut sigma };
                    perm.swap(i, j);
                    if v < best_move.map_or(current, |m| m.0) {
                        best_move = Some((v, which, i, j));
                    }
                }
            }
        }
        match best_move {
            Some((v, which, i, j)) => {
                if which {
                    tau.swap(i, j);
                } else {
                    sigma.swap(i, j);
                }
                current = v;
            }
            None => break,
        }
    }
    let end = canonical_candidate(obj, x, y, &sigma, &tau);
    (if end.beats(&start) { end } else { start }, evaluations)
}

fn run(obj: Objective, pair: &BoundInputPair, strategy: &SearchStrategy) -> Result<SearchOutcome> {
    let (x, y, n) = (pair.x(), pair.y(), pair.n());
    let size = obj.space(n);
    let identity: Vec<usize> = (0..n).collect();
    let (best, evaluations, certified) = if obj.pair_count() == 0 {
        (canonical_candidate(obj, x, y, &identity, &identity), 1, true)
    } else {
        match strategy.kind {
            SearchKind::Exhaustive => {
                if size > EXHAUSTIVE_LIMIT {
                    return Err(Error::SpaceTooLarge {
                        size,
                        limit: EXHAUSTIVE_LIMIT,
                    });
                }
                let (b, e) = exhaustive(obj, pair, strategy.exec);
                (b, e, true)
            }
            SearchKind::RandomSample => {
                let (b, e) = random_sample(obj, pair, strategy);
                (b, e, false)
            }
            SearchKind::GreedySwap => {
                let start = canonical_candidate(obj, x, y, &identity, &identity);
                let (b, e) = greedy(obj, pair, start, strategy.swap_rounds);
                (b, e, false)
            }
            SearchKind::Hybrid if size <= EXHAUSTIVE_LIMIT => {
                let (b, e) = exhaustive(obj, pair, strategy.exec);
                (b, e, true)
            }
            SearchKind::Hybrid => {
                let (sampled, e1) = random_sample(obj, pair, strategy);
                let start = canonical_candidate(obj, x, y, &identity, &identity);
                let (from_identity, e2) = greedy(obj, pair, start, strategy.swap_rounds);
                let (from_sample, e3) = greedy(obj, pair, sampled, strategy.swap_rounds);
                let best = better(Some(from_identity), from_sample).expect("nonempty");
                (best, e1 + e2 + e3, false)
            }
        }
    };
    Ok(SearchOutcome {
        best: obj.result(pair, &best.sigma, &best.tau)?,
        evaluations,
        certified_exact: certified,
    })
}

/// `max_{sigma,tau} (sigma, tau) . I_k`.
pub fn best_ik(pair: &BoundInputPair, k: usize, strategy: &SearchStrategy) -> Result<SearchOutcome> {
    bound_ik(pair, k)?;
    run(Objective::Ik { k }, pair, strategy)
}

/// `max_{sigma,tau} (sigma, tau) . S_pq`.
pub fn best_spq(pair: &BoundInputPair, p: usize, q: usize, strategy: &SearchStrategy) -> Result<SearchOutcome> {
    bound_spq(pair, p, q)?;
    run(Objective::Spq { p, q }, pair, strategy)
}

fn k_outcome(pair: &BoundInputPair, subset: &[usize], evaluations: u64, certified: bool) -> Result<SearchOutcome> {
    let mut best = bound_k(pair, subset)?;
    let sigma = Permutation::completing(subset, pair.n())?;
    best.permutations = Some((sigma.clone(), sigma));
    Ok(SearchOutcome {
        best,
        evaluations,
        certified_exact: certified,
    })
}

/// `K~_k = max_sigma sigma(K_k)`, a maximum over `k`-subsets.
pub fn best_k(pair: &BoundInputPair, k: usize, strategy: &SearchStrategy) -> Result<SearchOutcome> {
    let n = pair.n();
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    let (x, y) = (pair.x(), pair.y());
    let size = binomial(n, k);
    let eval = |subset: &[usize]| {
        let mut member = vec![false; n];
        subset.iter().for_each(|&i| member[i] = true);
        k_value(x, y, |i| member[i])
    };
    let pick = |a: Option<(f64, Vec<usize>)>, b: (f64, Vec<usize>)| match a {
        Some(a) if !(b.0 > a.0 || (b.0 == a.0 && b.1 < a.1)) => Some(a),
        _ => Some(b),
    };
    if size <= EXHAUSTIVE_LIMIT || strategy.kind == SearchKind::Exhaustive {
        if size > EXHAUSTIVE_LIMIT {
            return Err(Error::SpaceTooLarge {
                size,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
        let chunks = size.div_ceil(CHUNK) as usize;
        let (_, subset) = strategy
            .exec
            .map(chunks, |c| {
                let start = c as u128 * CHUNK;
                let end = (start + CHUNK).min(size);
                (start..end)
                    .map(|r| {
                        let s = unrank_combination(n, k, r);
                        (eval(&s), s)
                    })
                    .fold(None, pick)
            })
            .into_iter()
            .flatten()
            .fold(None, pick)
            .expect("nonempty");
        return k_outcome(pair, &subset, size as u64, true);
    }
    let prefix: Vec<usize> = (0..k).collect();
    let sampled = strategy
        .exec
        .map(strategy.sample_count, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(strategy.seed);
            rng.set_stream(i as u64);
            let mut s: Vec<usize> = (0..n).collect();
            s.shuffle(&mut rng);
            let mut s = s[..k].to_vec();
            s.sort_unstable();
            (eval(&s), s)
        })
        .into_iter()
        .fold(Some((eval(&prefix), prefix)), pick)
        .expect("nonempty");
    let (mut value, mut subset) = sampled;
    let mut evaluations = strategy.sample_count as u64 + 1;
    for _ in 0..strategy.swap_rounds {
        let mut improved = None;
        for pos in 0..k {
            for out in (0..n).filter(|i| !subset.contains(i)) {
                let mut s = subset.clone();
                s[pos] = out;
                s.sort_unstable();
                let v = eval(&s);
                evaluations += 1;
                if v > improved.as_ref().map_or(value, |m: &(f64, Vec<usize>)| m.0) {
                    improved = Some((v, s));
                }
            }
        }
        match improved {
            Some((v, s)) => {
                value = v;
                subset = s;
            }
            None => break,
        }
    }
    k_outcome(pair, &subset, evaluations, false)
}

fn family_params(family: Family, n: usize, skip_trivial: bool) -> Vec<(usize, usize)> {
    match family {
        Family::I => (if skip_trivial { 2 } else { 1 }..=n).map(|k| (k, 0)).collect(),
        Family::S => s_pair_labels(n).into_iter().skip(usize::from(skip_trivial)).collect(),
        Family::K => (1..=if skip_trivial { n - 1 } else { n }).map(|k| (k, 0)).collect(),
    }
}

fn over_family(
    pair: &BoundInputPair,
    family: Family,
    strategy: &SearchStrategy,
    skip_trivial: bool,
) -> Result<SearchOutcome> {
    let params = family_params(family, pair.n(), skip_trivial);
    if params.is_empty() {
        return Err(Error::BadK { k: 0, n: pair.n() });
    }
    let mut best: Option<SearchOutcome> = None;
    let mut evaluations = 0;
    let mut certified = true;
    for (a, b) in params {
        let o = match family {
            Family::I => best_ik(pair, a, strategy)?,
            Family::S => best_spq(pair, a, b, strategy)?,
            Family::K => best_k(pair, a, strategy)?,
        };
        evaluations += o.evaluations;
        certified &= o.certified_exact;
        if best.as_ref().is_none_or(|b| o.best.value > b.best.value) {
            best = Some(o);
        }
    }
    let mut best = best.expect("nonempty family");
    best.evaluations = evaluations;
    best.certified_exact = certified;
    Ok(best)
}

/// Maximum over every parameter of the family. Since `I_1`, `S_10` and `K_n`
/// all equal the product, this is always the product.
pub fn best_over_family(pair: &BoundInputPair, family: Family, strategy: &SearchStrategy) -> Result<SearchOutcome> {
    over_family(pair, family, strategy, false)
}

/// Like [`best_over_family`] without the parameters that reduce to the
/// product (`I_1`, `S_10`, `K_n`).
pub fn best_over_family_nontrivial(
    pair: &BoundInputPair,
    family: Family,
    strategy: &SearchStrategy,
) -> Result<SearchOutcome> {
    over_family(pair, family, strategy, true)
}
