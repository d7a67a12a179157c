//! Product-form lower bounds on `I(A) I(B)`: the `I_k`, `S_pq` and `K` families,
//! their permuted variants, convex mixtures and the full inequality chain.
//!
//! Conventions: `k` counts leading coordinates (`1..=n`); `(p, q)` are the
//! 1-based pair labels of the `S` family with `(1, 0)` naming the product;
//! subsets and permutations use 0-based coordinate indices.
//!
//! Every `I` and `S` value is evaluated as `product - sum of Lagrange terms
//! (x_a y_b - x_b y_a)^2` accumulated in the fixed pair order
//! `(2,1), (3,1), (3,2), (4,1), ...`. That makes each chain exactly monotone
//! and `S_{k,k-1}` bit-identical to `I_k`.

use std::fmt;

use crate::error::{Error, Result};
use crate::metric::{correlation_quadratic, sampled_coords, GammaFactorization, Observable, SampledVector};

/// Absolute slack for bound-ordering checks, scaled by `max(1, product)`.
pub const ORDER_TOL: f64 = 1e-9;

/// Sampled coordinate vectors of two observables plus the reference values
/// every product-form bound sits between.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputPair {
    x: SampledVector,
    y: SampledVector,
    product: f64,
    corr_sq: f64,
    corr_abs_sq: f64,
}

impl BoundInputPair {
    pub fn new(x: SampledVector, y: SampledVector, corr_sq: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::BadK { k: 0, n: 0 });
        }
        let product = x.norm_sqr() * y.norm_sqr();
        let dot: f64 = x.entries().iter().zip(y.entries()).map(|(a, b)| a * b).sum();
        let corr_abs_sq = dot * dot;
        let tol = tolerance(product);
        if corr_abs_sq > product + tol {
            return Err(Error::ChainViolation {
                upper: "product".into(),
                upper_value: product,
                lower: "corr_abs_sq".into(),
                lower_value: corr_abs_sq,
            });
        }
        if corr_sq > corr_abs_sq + tol {
            return Err(Error::ChainViolation {
                upper: "corr_abs_sq".into(),
                upper_value: corr_abs_sq,
                lower: "corr_sq".into(),
                lower_value: corr_sq,
            });
        }
        Ok(BoundInputPair {
            x,
            y,
            product,
            corr_sq,
            corr_abs_sq,
        })
    }

    /// Pair without a known correlation; `corr_sq` is set to `(x, y)^2`.
    pub fn from_coords(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let x = SampledVector::new(x)?;
        let y = SampledVector::new(y)?;
        let dot: f64 = x.entries().iter().zip(y.entries()).map(|(a, b)| a * b).sum();
        Self::new(x, y, dot * dot)
    }

    pub fn from_state(gf: &GammaFactorization, a: &Observable, b: &Observable) -> Result<Self> {
        let x = sampled_coords(gf, a)?;
        let y = sampled_coords(gf, b)?;
        let corr = correlation_quadratic(gf, a, b)?;
        Self::new(x, y, corr.norm_sqr())
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        self.x.entries()
    }

    pub fn y(&self) -> &[f64] {
        self.y.entries()
    }

    /// `|x|^2 |y|^2`, equal to `I(A) I(B)`.
    pub fn product(&self) -> f64 {
        self.product
    }

    /// `|Corr(A, B)|^2`.
    pub fn corr_sq(&self) -> f64 {
        self.corr_sq
    }

    /// `(sum_i x_i y_i)^2`, the terminus of the `I` and `S` chains.
    pub fn corr_abs_sq(&self) -> f64 {
        self.corr_abs_sq
    }

    pub fn tolerance(&self) -> f64 {
        tolerance(self.product)
    }

    fn reindexed(&self, sigma: &Permutation, tau: &Permutation) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n();
        for perm in [sigma, tau] {
            if perm.len() != n {
                return Err(Error::BadPermutation { n });
            }
        }
        Ok((sigma.apply(self.x()), tau.apply(self.y())))
    }
}

pub(crate) fn tolerance(product: f64) -> f64 {
    ORDER_TOL * product.max(1.0)
}

/// Bijection on `0..n`; `images[i]` is `sigma(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::BadPermutation { n });
            }
            seen[i] = true;
        }
        Ok(Permutation(images))
    }

    /// Permutation starting with `prefix`, remaining indices in increasing order.
    pub fn completing(prefix: &[usize], n: usize) -> Result<Self> {
        let mut used = vec![false; n];
        let mut images = Vec::with_capacity(n);
        for &i in prefix {
            if i >= n || used[i] {
                return Err(Error::BadPermutation { n });
            }
            used[i] = true;
            images.push(i);
        }
        images.extend((0..n).filter(|&i| !used[i]));
        Ok(Permutation(images))
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &s)| i == s)
    }

    /// `sigma(v) = (v_{sigma(0)}, ..., v_{sigma(n-1)})`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&i| v[i]).collect()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Point of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::NotSimplex {
                reason: "empty weight vector".into(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::NotSimplex {
                reason: format!("weight {w} is negative or not finite"),
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NotSimplex {
                reason: format!("weights sum to {sum}"),
            });
        }
        Ok(WeightVector(weights))
    }

    /// Unit vector `e_k` of length `n`.
    pub fn vertex(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, len: n });
        }
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        Ok(WeightVector(w))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundFamily {
    Product,
    CorrSq,
    CorrAbsSq,
    Ik { k: usize },
    Spq { p: usize, q: usize },
    /// `K` for an arbitrary subset of 0-based coordinate indices.
    KSubset { subset: Vec<usize> },
    Convex { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub family: BoundFamily,
    pub value: f64,
    /// `(sigma, tau)` when the bound was evaluated on reindexed coordinates.
    pub permutations: Option<(Permutation, Permutation)>,
}

impl BoundResult {
    fn plain(family: BoundFamily, value: f64) -> Self {
        BoundResult {
            family,
            value,
            permutations: None,
        }
    }

    /// Canonical column name (`I_2`, `S_3_1`, `K_2`, ...).
    pub fn name(&self) -> String {
        match &self.family {
            BoundFamily::Product => "product".into(),
            BoundFamily::CorrSq => "corr_sq".into(),
            BoundFamily::CorrAbsSq => "corr_abs_sq".into(),
            BoundFamily::Ik { k } => format!("I_{k}"),
            BoundFamily::Spq { p, q } => format!("S_{p}_{q}"),
            BoundFamily::KSubset { subset } => {
                let prefix = subset.iter().enumerate().all(|(i, &s)| i == s);
                if prefix {
                    format!("K_{}", subset.len())
                } else {
                    let parts: Vec<String> = subset.iter().map(|i| (i + 1).to_string()).collect();
                    format!("K{{{}}}", parts.join(" "))
                }
            }
            BoundFamily::Convex { .. } => "convex".into(),
        }
    }
}

fn lagrange(x: &[f64], y: &[f64], a: usize, b: usize) -> f64 {
    let t = x[a] * y[b] - x[b] * y[a];
    t * t
}

/// Position of the 1-based pair label `(p, q)` in the order
/// `(2,1), (3,1), (3,2), (4,1), ...`.
fn pair_position(p: usize, q: usize) -> usize {
    (p - 1) * (p - 2) / 2 + (q - 1)
}

/// Sum of the first `count` Lagrange terms in pair order.
fn lagrange_prefix(x: &[f64], y: &[f64], count: usize) -> f64 {
    let mut sum = 0.0;
    let mut seen = 0;
    'outer: for a in 1..x.len() {
        for b in 0..a {
            if seen == count {
                break 'outer;
            }
            sum += lagrange(x, y, a, b);
            seen += 1;
        }
    }
    sum
}

/// All `(p, q)` labels in chain order, starting with `(1, 0)`.
pub fn s_pair_labels(n: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(1, 0)];
    for p in 2..=n {
        for q in 1..p {
            out.push((p, q));
        }
    }
    out
}

/// `(sum_{i in subset} x_i y_i)^2`.
pub fn f_cs(x: &[f64], y: &[f64], subset: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let mut s = 0.0;
    for &i in subset {
        if i >= x.len() {
            return Err(Error::IndexOutOfRange { index: i, len: x.len() });
        }
        s += x[i] * y[i];
    }
    Ok(s * s)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    Ok(())
}

fn check_pair(p: usize, q: usize, n: usize) -> Result<()> {
    let ok = (p == 1 && q == 0) || (q >= 1 && q < p && p <= n);
    if !ok {
        return Err(Error::BadPairIndex { p, q, n });
    }
    Ok(())
}

/// `I_k = |M_n| - |M_k| + f_CS(M_k)`.
pub fn bound_ik(pair: &BoundInputPair, k: usize) -> Result<BoundResult> {
    check_k(k, pair.n())?;
    let value = pair.product - lagrange_prefix(pair.x(), pair.y(), k * (k - 1) / 2);
    Ok(BoundResult::plain(BoundFamily::Ik { k }, value))
}

/// `(sigma, tau) . I_k`: `I_k` on `(x o sigma, y o tau)`. Only the identity
/// pairing is guaranteed to stay above `corr_abs_sq`; other pairings are
/// bounded below by their own `(x o sigma, y o tau)^2`.
pub fn bound_ik_perm(
    pair: &BoundInputPair,
    k: usize,
    sigma: &Permutation,
    tau: &Permutation,
) -> Result<BoundResult> {
    check_k(k, pair.n())?;
    let (x, y) = pair.reindexed(sigma, tau)?;
    Ok(BoundResult {
        family: BoundFamily::Ik { k },
        value: pair.product - lagrange_prefix(&x, &y, k * (k - 1) / 2),
        permutations: Some((sigma.clone(), tau.clone())),
    })
}

/// `S_pq`, the product minus every Lagrange term up to and including `(p, q)`.
pub fn bound_spq(pair: &BoundInputPair, p: usize, q: usize) -> Result<BoundResult> {
    check_pair(p, q, pair.n())?;
    let count = if p == 1 { 0 } else { pair_position(p, q) + 1 };
    let value = pair.product - lagrange_prefix(pair.x(), pair.y(), count);
    Ok(BoundResult::plain(BoundFamily::Spq { p, q }, value))
}

pub fn bound_spq_perm(
    pair: &BoundInputPair,
    p: usize,
    q: usize,
    sigma: &Permutation,
    tau: &Permutation,
) -> Result<BoundResult> {
    check_pair(p, q, pair.n())?;
    let (x, y) = pair.reindexed(sigma, tau)?;
    let count = if p == 1 { 0 } else { pair_position(p, q) + 1 };
    Ok(BoundResult {
        family: BoundFamily::Spq { p, q },
        value: pair.product - lagrange_prefix(&x, &y, count),
        permutations: Some((sigma.clone(), tau.clone())),
    })
}

/// `K(S) = (|x_S||y_S| + |x_Sc||y_Sc|)^2`, membership given per coordinate.
pub(crate) fn k_value(x: &[f64], y: &[f64], member: impl Fn(usize) -> bool) -> f64 {
    let (mut xi, mut yi, mut xo, mut yo) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let (xx, yy) = (x[i] * x[i], y[i] * y[i]);
        if member(i) {
            xi += xx;
            yi += yy;
        } else {
            xo += xx;
            yo += yy;
        }
    }
    let s = (xi * yi).sqrt() + (xo * yo).sqrt();
    s * s
}

/// `K` for an arbitrary subset (0-based indices; duplicates are ignored).
/// `K(S) == K(S^c)` bit for bit.
pub fn bound_k(pair: &BoundInputPair, subset: &[usize]) -> Result<BoundResult> {
    let n = pair.n();
    let mut member = vec![false; n];
    for &i in subset {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        member[i] = true;
    }
    let value = k_value(pair.x(), pair.y(), |i| member[i]);
    let canonical: Vec<usize> = (0..n).filter(|&i| member[i]).collect();
    Ok(BoundResult::plain(BoundFamily::KSubset { subset: canonical }, value))
}

/// `K_k` on the first `k` coordinates.
pub fn bound_k_prefix(pair: &BoundInputPair, k: usize) -> Result<BoundResult> {
    check_k(k, pair.n())?;
    bound_k(pair, &(0..k).collect::<Vec<_>>())
}

/// `sum_i t_i v_i`.
pub fn convex_combo(values: &[BoundResult], weights: &WeightVector) -> Result<BoundResult> {
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: weights.len(),
        });
    }
    let value = values
        .iter()
        .zip(weights.weights())
        .map(|(v, w)| v.value * w)
        .sum();
    Ok(BoundResult::plain(
        BoundFamily::Convex {
            weights: weights.weights().to_vec(),
        },
        value,
    ))
}

/// Mixture `sum_k t_k K_k` over prefix `K` values; `weights` are zero-padded to `n`.
pub fn k_mixture(pair: &BoundInputPair, weights: &[f64]) -> Result<BoundResult> {
    let n = pair.n();
    if weights.len() > n {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: n,
        });
    }
    let mut padded = weights.to_vec();
    padded.resize(n, 0.0);
    let w = WeightVector::new(padded)?;
    let values = (1..=n)
        .map(|k| bound_k_prefix(pair, k))
        .collect::<Result<Vec<_>>>()?;
    convex_combo(&values, &w)
}

fn ensure_order(upper: &BoundResult, lower: &BoundResult, tol: f64) -> Result<()> {
    if upper.value + tol < lower.value {
        return Err(Error::ChainViolation {
            upper: upper.name(),
            upper_value: upper.value,
            lower: lower.name(),
            lower_value: lower.value,
        });
    }
    Ok(())
}

/// Evaluates and verifies the full chain: product, `I_1..I_n`, `S` in pair
/// order, prefix `K_1..K_n`, `corr_abs_sq`, `corr_sq`.
pub fn chain_report(pair: &BoundInputPair) -> Result<Vec<BoundResult>> {
    let n = pair.n();
    let tol = pair.tolerance();
    let product = BoundResult::plain(BoundFamily::Product, pair.product);
    let corr_abs = BoundResult::plain(BoundFamily::CorrAbsSq, pair.corr_abs_sq);
    let corr = BoundResult::plain(BoundFamily::CorrSq, pair.corr_sq);

    let i_chain = (1..=n).map(|k| bound_ik(pair, k)).collect::<Result<Vec<_>>>()?;
    let s_chain = s_pair_labels(n)
        .into_iter()
        .map(|(p, q)| bound_spq(pair, p, q))
        .collect::<Result<Vec<_>>>()?;
    let k_chain = (1..=n).map(|k| bound_k_prefix(pair, k)).collect::<Result<Vec<_>>>()?;

    ensure_order(&product, &i_chain[0], tol)?;
    ensure_order(&i_chain[0], &product, tol)?;
    for chain in [&i_chain, &s_chain] {
        for w in chain.windows(2) {
            ensure_order(&w[0], &w[1], 0.0)?;
        }
        ensure_order(chain.last().expect("nonempty chain"), &corr_abs, tol)?;
        ensure_order(&corr_abs, chain.last().expect("nonempty chain"), tol)?;
    }
    for k in 2..=n {
        let s = &s_chain[pair_position(k, k - 1) + 1];
        let i = &i_chain[k - 1];
        if s.value != i.value {
            return Err(Error::ChainViolation {
                upper: s.name(),
                upper_value: s.value,
                lower: i.name(),
                lower_value: i.value,
            });
        }
    }
    for kv in &k_chain {
        ensure_order(&product, kv, tol)?;
        ensure_order(kv, &corr_abs, tol)?;
    }
    ensure_order(&corr_abs, &corr, tol)?;

    let mut out = Vec::with_capacity(3 + 2 * n + s_chain.len());
    out.push(product);
    out.extend(i_chain);
    out.extend(s_chain);
    out.extend(k_chain);
    out.push(corr_abs);
    out.push(corr);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(x: &[f64], y: &[f64]) -> BoundInputPair {
        BoundInputPair::from_coords(x.to_vec(), y.to_vec()).unwrap()
    }

    fn swap2() -> Permutation {
        Permutation::new(vec![1, 0]).unwrap()
    }

    // Literal |M_n| - |M_k| + f_CS(M_k) on the explicit matrix of x_i^2 y_j^2.
    fn ik_literal(x: &[f64], y: &[f64], k: usize) -> f64 {
        let n = x.len();
        let block = |m: usize| -> f64 {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += x[i] * x[i] * y[j] * y[j];
                }
            }
            s
        };
        let fcs = f_cs(x, y, &(0..k).collect::<Vec<_>>()).unwrap();
        block(n) - block(k) + fcs
    }

    // Literal recursion: S_new = S_prev - sum_{i,j in {p,q}} x_i^2 y_j^2 + f_CS(M_{p,q}).
    fn s_chain_recursive(x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut s: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * x[i] * y[j] * y[j];
            }
        }
        let mut out = vec![s];
        for p in 1..n {
            for q in 0..p {
                let block = (x[p] * x[p] + x[q] * x[q]) * (y[p] * y[p] + y[q] * y[q]);
                let fcs = f_cs(x, y, &[p, q]).unwrap();
                s = s - block + fcs;
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn f_cs_examples() {
        let (x, y) = ([1.0, 2.0], [3.0, 1.0]);
        assert_eq!(f_cs(&x, &y, &[]).unwrap(), 0.0);
        assert_eq!(f_cs(&x, &y, &[0, 1]).unwrap(), 25.0);
        assert_eq!(f_cs(&x, &y, &[0]).unwrap(), 9.0);
        assert!(matches!(f_cs(&x, &y, &[2]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn ik_examples() {
        let pr = pair(&[1.0, 2.0], &[3.0, 1.0]);
        assert_eq!(bound_ik(&pr, 1).unwrap().value, 50.0);
        assert_eq!(bound_ik(&pr, 2).unwrap().value, 25.0);
        let same = pair(&[0.3, 1.0, 0.2], &[0.3, 1.0, 0.2]);
        for k in 1..=3 {
            assert!((bound_ik(&same, k).unwrap().value - same.product()).abs() < 1e-15);
        }
        assert!(matches!(bound_ik(&pr, 0), Err(Error::BadK { .. })));
        assert!(matches!(bound_ik(&pr, 3), Err(Error::BadK { .. })));
    }

    #[test]
    fn ik_perm_examples() {
        let pr = pair(&[1.0, 2.0], &[3.0, 1.0]);
        let id = Permutation::identity(2);
        assert_eq!(bound_ik_perm(&pr, 2, &id, &id).unwrap().value, bound_ik(&pr, 2).unwrap().value);
        assert_eq!(bound_ik_perm(&pr, 1, &swap2(), &id).unwrap().value, 50.0);
        assert_eq!(bound_ik_perm(&pr, 2, &swap2(), &id).unwrap().value, 49.0);
        let bad = Permutation::identity(3);
        assert!(matches!(bound_ik_perm(&pr, 2, &bad, &id), Err(Error::BadPermutation { .. })));
    }

    #[test]
    fn spq_examples() {
        let pr = pair(&[1.0, 2.0, 1.0], &[1.0, 1.0, 2.0]);
        assert_eq!(bound_spq(&pr, 1, 0).unwrap().value, 36.0);
        assert_eq!(bound_spq(&pr, 2, 1).unwrap().value, 35.0);
        assert_eq!(bound_spq(&pr, 3, 1).unwrap().value, 34.0);
        assert_eq!(bound_spq(&pr, 3, 2).unwrap().value, 25.0);
        assert_eq!(pr.corr_abs_sq(), 25.0);
        let same = pair(&[0.5, 0.1, 2.0], &[0.5, 0.1, 2.0]);
        for (p, q) in s_pair_labels(3) {
            assert!((bound_spq(&same, p, q).unwrap().value - same.product()).abs() < 1e-14);
        }
        for (p, q) in [(0, 0), (2, 2), (4, 1), (2, 0), (1, 1)] {
            assert!(matches!(bound_spq(&pr, p, q), Err(Error::BadPairIndex { .. })));
        }
    }

    #[test]
    fn spq_perm_examples() {
        let pr = pair(&[1.0, 2.0, 1.0], &[1.0, 1.0, 2.0]);
        let id = Permutation::identity(3);
        let s23 = Permutation::new(vec![0, 2, 1]).unwrap();
        assert_eq!(bound_spq_perm(&pr, 3, 1, &id, &id).unwrap().value, bound_spq(&pr, 3, 1).unwrap().value);
        assert_eq!(bound_spq_perm(&pr, 1, 0, &s23, &id).unwrap().value, 36.0);
        assert_eq!(bound_spq_perm(&pr, 2, 1, &s23, &id).unwrap().value, 36.0);
    }

    #[test]
    fn k_examples() {
        let pr = pair(&[1.0, 2.0], &[3.0, 1.0]);
        assert!((bound_k(&pr, &[0, 1]).unwrap().value - pr.product()).abs() < 1e-12 * pr.product());
        assert!((bound_k(&pr, &[0]).unwrap().value - 25.0).abs() < 1e-12);
        let orth = pair(&[1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(bound_k(&orth, &[0, 1]).unwrap().value, 0.0);
        assert!(matches!(bound_k(&pr, &[5]), Err(Error::IndexOutOfRange { .. })));
        assert_eq!(bound_k_prefix(&pr, 1).unwrap().name(), "K_1");
        assert_eq!(bound_k(&pr, &[1]).unwrap().name(), "K{2}");
    }

    #[test]
    fn convex_examples() {
        let pr = pair(&[1.0, 2.0, 0.5], &[3.0, 1.0, 0.1]);
        let vals: Vec<BoundResult> = (1..=3).map(|k| bound_ik(&pr, k).unwrap()).collect();
        for k in 0..3 {
            let w = WeightVector::vertex(3, k).unwrap();
            assert_eq!(convex_combo(&vals, &w).unwrap().value, vals[k].value);
        }
        let two = vec![
            BoundResult::plain(BoundFamily::Product, 10.0),
            BoundResult::plain(BoundFamily::Product, 20.0),
        ];
        let half = WeightVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(convex_combo(&two, &half).unwrap().value, 15.0);
        assert!(matches!(convex_combo(&vals, &half), Err(Error::LengthMismatch { .. })));
        assert!(matches!(WeightVector::new(vec![0.5, 0.6]), Err(Error::NotSimplex { .. })));
        assert!(matches!(WeightVector::new(vec![1.5, -0.5]), Err(Error::NotSimplex { .. })));
    }

    #[test]
    fn k_mixture_pads_weights() {
        let x = [0.9, 0.1, 0.4, 0.3, 0.2];
        let y = [0.2, 0.8, 0.1, 0.5, 0.6];
        let pr = pair(&x, &y);
        let mix = k_mixture(&pr, &[0.0, 0.1, 0.0, 0.9]).unwrap();
        let expected = 0.1 * bound_k_prefix(&pr, 2).unwrap().value + 0.9 * bound_k_prefix(&pr, 4).unwrap().value;
        assert!((mix.value - expected).abs() < 1e-15);
    }

    #[test]
    fn chain_report_examples() {
        let same = pair(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        let chain = chain_report(&same).unwrap();
        for b in chain.iter().filter(|b| matches!(b.family, BoundFamily::Ik { .. } | BoundFamily::Spq { .. })) {
            assert_eq!(b.value, same.product());
        }
        let orth = pair(&[1.0, 0.0], &[0.0, 1.0]);
        let chain = chain_report(&orth).unwrap();
        let last_i = chain.iter().rev().find(|b| matches!(b.family, BoundFamily::Ik { .. })).unwrap();
        assert_eq!(last_i.value, 0.0);
        let pr = pair(&[1.0, 2.0, 1.0], &[1.0, 1.0, 2.0]);
        let s: Vec<f64> = chain_report(&pr)
            .unwrap()
            .into_iter()
            .filter(|b| matches!(b.family, BoundFamily::Spq { .. }))
            .map(|b| b.value)
            .collect();
        assert_eq!(s, vec![36.0, 35.0, 34.0, 25.0]);
    }

    #[test]
    fn pair_rejects_inconsistent_correlation() {
        let x = SampledVector::new(vec![1.0, 0.0]).unwrap();
        let y = SampledVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(BoundInputPair::new(x, y, 2.0), Err(Error::ChainViolation { .. })));
    }

    fn coords(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (prop::collection::vec(0.0f64..2.0, n), prop::collection::vec(0.0f64..2.0, n))
    }

    proptest! {
        #[test]
        fn closed_forms_match_literal_recursions((x, y) in (2usize..10).prop_flat_map(coords)) {
            let pr = pair(&x, &y);
            for k in 1..=x.len() {
                let lit = ik_literal(&x, &y, k);
                prop_assert!((bound_ik(&pr, k).unwrap().value - lit).abs() <= 1e-10 * (1.0 + lit.abs()));
            }
            let rec = s_chain_recursive(&x, &y);
            for ((p, q), r) in s_pair_labels(x.len()).into_iter().zip(rec) {
                prop_assert!((bound_spq(&pr, p, q).unwrap().value - r).abs() <= 1e-10 * (1.0 + r.abs()));
            }
        }

        #[test]
        fn chain_holds_and_terminates_at_lagrange((x, y) in (2usize..17).prop_flat_map(coords)) {
            let pr = pair(&x, &y);
            let chain = chain_report(&pr).unwrap();
            let n = x.len();
            let last_s = bound_spq(&pr, n, n - 1).unwrap().value;
            prop_assert!((last_s - pr.corr_abs_sq()).abs() <= 1e-10 * (1.0 + pr.product()));
            for b in &chain {
                prop_assert!(b.value <= pr.product() + 1e-9);
                prop_assert!(b.value >= pr.corr_sq() - 1e-9);
            }
        }

        #[test]
        fn k_complement_symmetry((x, y) in (2usize..12).prop_flat_map(coords), mask in any::<u16>()) {
            let pr = pair(&x, &y);
            let n = x.len();
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let sc: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
            prop_assert_eq!(bound_k(&pr, &s).unwrap().value.to_bits(), bound_k(&pr, &sc).unwrap().value.to_bits());
        }

        #[test]
        fn convex_value_between_extremes(vals in prop::collection::vec(0.0f64..100.0, 1..8), raw in prop::collection::vec(0.01f64..1.0, 8)) {
            let raw = &raw[..vals.len()];
            let total: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let s: f64 = w.iter().sum();
            w[0] += 1.0 - s;
            prop_assume!(w[0] >= 0.0);
            let w = WeightVector::new(w).unwrap();
            let results: Vec<BoundResult> = vals.iter().map(|&v| BoundResult::plain(BoundFamily::Product, v)).collect();
            let c = convex_combo(&results, &w).unwrap().value;
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(c >= lo - 1e-12 && c <= hi + 1e-12);
        }
    }
}
