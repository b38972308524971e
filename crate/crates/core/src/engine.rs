//! Memoized evaluation of `<kappa1^k0 tau_k1 ... tau_kn>_g`.
//!
//! Each non-base correlator is expanded around one distinguished marked point
//! (exponent `k1`):
//!
//! ```text
//! (2k1+1)!! <kappa1^k0 tau_k1 ...>_g
//!   = sum_j sum_l  k0!/(k0-l)! (2(l+k1+kj)-1)!!/(2kj-1)!! beta_l <kappa1^(k0-l) tau_(k1+kj+l-1) ...>_g
//!   + 1/2 sum_l sum_{d1+d2=l+k1-2} k0!/(k0-l)! (2d1+1)!!(2d2+1)!! beta_l <kappa1^(k0-l) tau_d1 tau_d2 ...>_(g-1)
//!   + 1/2 sum_{g1+g2=g, I|J} sum_l sum_{d1+d2=l+k1-2} k0!/(m0! n0!) (2d1+1)!!(2d2+1)!! beta_l
//!         <kappa1^m0 tau_d1 tau_I>_g1 <kappa1^n0 tau_d2 tau_J>_g2
//! ```
//!
//! where `m0 + n0 = k0 - l` and `m0` is fixed by the dimension of the `g1`
//! factor. Base cases are `<tau0^3>_0 = 1` and the two `(1, 1)` values
//! `<tau1>_1 = <kappa1 tau0>_1 = 1/24`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use lru::LruCache;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::coefficients::{beta_coeff, binomial, factorial, falling_factorial, odd_double_factorial};
use crate::correlator::{is_stable, CorrelatorKey, KeyError};

/// Default upper bound on `3g - 3 + n` accepted by table enumeration.
pub const DEFAULT_SAFETY_BOUND: u32 = 15;

pub const CACHE_FILE_HEADER: &str = "# mgn-cache v1";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("{0} is a base case and has no recursion terms")]
    BaseCase(String),
    #[error("{key} has dimension gap {gap}; the recursion only applies at gap 0")]
    DimensionGap { key: String, gap: i64 },
    #[error("requested dimension {requested} exceeds safety bound {bound}")]
    BoundExceeded { requested: u32, bound: u32 },
    #[error("cache file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache file line {line}: {reason}")]
    CacheFormat { line: usize, reason: String },
}

/// Which summand family a recursion term belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermLabel {
    /// Distinguished point merged with labeled point `j`.
    Merge {
        j: usize,
        l: u32,
    },
    NonSeparating {
        d1: u32,
        d2: u32,
        l: u32,
    },
    Separating {
        g1: u32,
        points: Vec<usize>,
        d1: u32,
        d2: u32,
        l: u32,
    },
}

impl fmt::Display for TermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermLabel::Merge { j, l } => write!(f, "merge j={j}, l={l}"),
            TermLabel::NonSeparating { d1, d2, l } => write!(f, "nonsep d=({d1},{d2}), l={l}"),
            TermLabel::Separating { g1, points, d1, d2, l } => {
                let pts: Vec<String> = points.iter().map(|p| p.to_string()).collect();
                write!(f, "sep g1={g1} I={{{}}} d=({d1},{d2}), l={l}", pts.join(","))
            }
        }
    }
}

/// The nonzero right-hand-side terms of one recursion step.
///
/// Points are labeled `1..=n`: label 1 is the distinguished point, the rest
/// follow the canonical (descending) order of the remaining exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct TermBreakdown {
    pub slot_exponent: u32,
    /// `(2k1 + 1)!!`
    pub lhs_factor: BigRational,
    pub boundary_terms: Vec<(String, BigRational)>,
}

impl TermBreakdown {
    pub fn total(&self) -> BigRational {
        self.boundary_terms.iter().map(|(_, v)| v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

impl fmt::Display for CacheStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total = self.hits + self.misses;
        let rate = if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        };
        write!(
            f,
            "cache: {} entries, {} hits, {} misses, hit rate {:.3}",
            self.entries, self.hits, self.misses, rate
        )
    }
}

/// Correlator values keyed by canonical key. Eviction only costs time.
pub struct MemoCache {
    map: Mutex<LruCache<CorrelatorKey, BigRational>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl MemoCache {
    pub fn new(cap: Option<NonZeroUsize>) -> Self {
        let map = match cap {
            Some(c) => LruCache::new(c),
            None => LruCache::unbounded(),
        };
        MemoCache {
            map: Mutex::new(map),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    fn get(&self, key: &CorrelatorKey) -> Option<BigRational> {
        let found = self.map.lock().expect("cache poisoned").get(key).cloned();
        if found.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        } else {
            self.misses.fetch_add(1, Ordering::Relaxed);
        }
        found
    }

    fn insert(&self, key: CorrelatorKey, value: BigRational) {
        self.map.lock().expect("cache poisoned").put(key, value);
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            entries: self.len(),
        }
    }

    fn snapshot(&self) -> Vec<(CorrelatorKey, BigRational)> {
        let map = self.map.lock().expect("cache poisoned");
        let mut v: Vec<_> = map.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

pub struct Engine {
    cache: MemoCache,
    safety_bound: u32,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

/// Accumulates terms into a running sum or, for diagnostics, a labeled list.
trait TermSink {
    const LABELED: bool;
    fn push(&mut self, label: impl FnOnce() -> TermLabel, value: BigRational);
}

struct SumSink(BigRational);

impl TermSink for SumSink {
    const LABELED: bool = false;
    fn push(&mut self, _label: impl FnOnce() -> TermLabel, value: BigRational) {
        self.0 += value;
    }
}

struct ListSink(Vec<(String, BigRational)>);

impl TermSink for ListSink {
    const LABELED: bool = true;
    fn push(&mut self, label: impl FnOnce() -> TermLabel, value: BigRational) {
        if !value.is_zero() {
            self.0.push((label().to_string(), value));
        }
    }
}

fn rational(i: BigInt) -> BigRational {
    BigRational::from_integer(i)
}

fn is_base_case(key: &CorrelatorKey) -> bool {
    matches!((key.genus(), key.n()), (0, 3) | (1, 1))
}

/// Value of a base key with zero dimension gap.
fn base_value(key: &CorrelatorKey) -> BigRational {
    match key.genus() {
        0 => BigRational::one(),
        _ => BigRational::new(1.into(), 24.into()),
    }
}

impl Engine {
    pub fn new() -> Self {
        Engine::with_cache_cap(None)
    }

    /// `cap = None` means unbounded.
    pub fn with_cache_cap(cap: Option<NonZeroUsize>) -> Self {
        Engine {
            cache: MemoCache::new(cap),
            safety_bound: DEFAULT_SAFETY_BOUND,
        }
    }

    pub fn with_safety_bound(mut self, bound: u32) -> Self {
        self.safety_bound = bound;
        self
    }

    pub fn cache(&self) -> &MemoCache {
        &self.cache
    }

    pub fn stats(&self) -> CacheStats {
        self.cache.stats()
    }

    /// Exact `<kappa1^k0 prod tau_ki>_g`.
    pub fn intersection_number(&self, key: &CorrelatorKey) -> BigRational {
        if key.dimension_gap() != 0 {
            return BigRational::zero();
        }
        if is_base_case(key) {
            return base_value(key);
        }
        if let Some(v) = self.cache.get(key) {
            return v;
        }
        let slot = key.psi_exponents()[0];
        let value = self.evaluate(key, slot);
        self.cache.insert(key.clone(), value.clone());
        value
    }

    /// Evaluates `key` with the distinguished point bound to a point carrying
    /// `slot_exponent`, bypassing the cache at the top level. `None` when no
    /// point has that exponent.
    pub fn intersection_number_with_slot(&self, key: &CorrelatorKey, slot_exponent: u32) -> Option<BigRational> {
        if !key.psi_exponents().contains(&slot_exponent) {
            return None;
        }
        if key.dimension_gap() != 0 {
            return Some(BigRational::zero());
        }
        if is_base_case(key) {
            return Some(base_value(key));
        }
        Some(self.evaluate(key, slot_exponent))
    }

    fn evaluate(&self, key: &CorrelatorKey, slot: u32) -> BigRational {
        let mut sink = SumSink(BigRational::zero());
        self.expand(key, slot, &mut sink);
        sink.0 / rational(odd_double_factorial(slot + 1))
    }

    /// Every nonzero term of the recursion for `key`, with labeled points.
    pub fn recursion_terms(&self, key: &CorrelatorKey) -> Result<TermBreakdown, EngineError> {
        self.recursion_terms_with_slot(key, key.psi_exponents()[0])
    }

    pub fn recursion_terms_with_slot(&self, key: &CorrelatorKey, slot: u32) -> Result<TermBreakdown, EngineError> {
        if is_base_case(key) {
            return Err(EngineError::BaseCase(key.to_string()));
        }
        let gap = key.dimension_gap();
        if gap != 0 {
            return Err(EngineError::DimensionGap {
                key: key.to_string(),
                gap,
            });
        }
        assert!(key.psi_exponents().contains(&slot), "slot exponent not present in key");
        let mut sink = ListSink(Vec::new());
        self.expand(key, slot, &mut sink);
        Ok(TermBreakdown {
            slot_exponent: slot,
            lhs_factor: rational(odd_double_factorial(slot + 1)),
            boundary_terms: sink.0,
        })
    }

    /// Value of a sub-correlator given possibly-invalid raw data; anything
    /// with a negative index or an unstable `(g, n)` is zero.
    fn sub_value(&self, g: u32, k0: u32, ks: Vec<u32>) -> BigRational {
        if !is_stable(g, ks.len()) {
            return BigRational::zero();
        }
        let key = CorrelatorKey::new(g, k0, ks).expect("stability checked");
        self.intersection_number(&key)
    }

    fn expand<S: TermSink>(&self, key: &CorrelatorKey, slot: u32, sink: &mut S) {
        let g = key.genus();
        let k0 = key.kappa_power();
        let k1 = slot;

        // remaining points in canonical order, labeled 2..=n
        let mut rest: Vec<u32> = key.psi_exponents().to_vec();
        let pos = rest.iter().position(|&k| k == slot).expect("slot present");
        rest.remove(pos);

        let betas: Vec<BigRational> = (0..=k0).map(beta_coeff).collect();
        let k0_fact = factorial(k0);

        // point-merging terms
        let merge_targets: Vec<(usize, u32, u32)> = if S::LABELED {
            rest.iter().enumerate().map(|(i, &kj)| (i, kj, 1)).collect()
        } else {
            let mut groups: BTreeMap<u32, (usize, u32)> = BTreeMap::new();
            for (i, &kj) in rest.iter().enumerate() {
                groups.entry(kj).or_insert((i, 0)).1 += 1;
            }
            groups.into_iter().map(|(kj, (i, c))| (i, kj, c)).collect()
        };
        for &(idx, kj, mult) in &merge_targets {
            let mut others = rest.clone();
            others.remove(idx);
            for l in 0..=k0 {
                let merged = k1 + kj + l;
                if merged == 0 {
                    continue;
                }
                let mut ks = others.clone();
                ks.push(merged - 1);
                let v = self.sub_value(g, k0 - l, ks);
                if v.is_zero() {
                    continue;
                }
                let w = rational(falling_factorial(k0, l) * odd_double_factorial(l + k1 + kj) * BigInt::from(mult))
                    / rational(odd_double_factorial(kj))
                    * &betas[l as usize];
                sink.push(|| TermLabel::Merge { j: idx + 2, l }, w * v);
            }
        }

        let half = BigRational::new(1.into(), 2.into());

        // non-separating terms
        if g >= 1 {
            for l in 0..=k0 {
                let Some(total) = (l + k1).checked_sub(2) else { continue };
                for d1 in 0..=total {
                    let d2 = total - d1;
                    let mut ks = rest.clone();
                    ks.push(d1);
                    ks.push(d2);
                    let v = self.sub_value(g - 1, k0 - l, ks);
                    if v.is_zero() {
                        continue;
                    }
                    let w = rational(
                        falling_factorial(k0, l) * odd_double_factorial(d1 + 1) * odd_double_factorial(d2 + 1),
                    ) * &betas[l as usize]
                        * &half;
                    sink.push(|| TermLabel::NonSeparating { d1, d2, l }, w * v);
                }
            }
        }

        // separating terms
        if k0 + k1 < 2 {
            return;
        }
        for split in splits::<S>(&rest) {
            let i_sum: u32 = split.left.iter().sum();
            let i_len = split.left.len() as i64;
            for g1 in 0..=g {
                let g2 = g - g1;
                if !is_stable(g1, split.left.len() + 1) || !is_stable(g2, split.right.len() + 1) {
                    continue;
                }
                for l in 0..=k0 {
                    let Some(total) = (l + k1).checked_sub(2) else { continue };
                    for d1 in 0..=total {
                        let d2 = total - d1;
                        let m0 = 3 * i64::from(g1) - 2 + i_len - i64::from(d1) - i64::from(i_sum);
                        if m0 < 0 || m0 > i64::from(k0 - l) {
                            continue;
                        }
                        let m0 = m0 as u32;
                        let n0 = k0 - l - m0;
                        let mut left = split.left.clone();
                        left.push(d1);
                        let lv = self.sub_value(g1, m0, left);
                        if lv.is_zero() {
                            continue;
                        }
                        let mut right = split.right.clone();
                        right.push(d2);
                        let rv = self.sub_value(g2, n0, right);
                        if rv.is_zero() {
                            continue;
                        }
                        let w = rational(
                            &k0_fact * odd_double_factorial(d1 + 1) * odd_double_factorial(d2 + 1) * &split.mult,
                        ) / rational(factorial(m0) * factorial(n0))
                            * &betas[l as usize]
                            * &half;
                        sink.push(
                            || TermLabel::Separating {
                                g1,
                                points: split.labels.clone(),
                                d1,
                                d2,
                                l,
                            },
                            w * lv * rv,
                        );
                    }
                }
            }
        }
    }

    /// All canonical keys with `3g - 3 + n <= max_dim`, `g <= g_max`,
    /// `n <= n_max` and zero dimension gap, in lexicographic `(g, n, k0, ks)`
    /// order, with their values.
    pub fn compute_table(
        &self,
        max_dim: u32,
        g_max: u32,
        n_max: u32,
    ) -> Result<Vec<(CorrelatorKey, BigRational)>, EngineError> {
        if max_dim > self.safety_bound {
            return Err(EngineError::BoundExceeded {
                requested: max_dim,
                bound: self.safety_bound,
            });
        }
        let keys = enumerate_keys(max_dim, g_max, n_max);
        // fill lower dimensions first so each layer mostly hits the cache
        let mut by_dim: BTreeMap<i64, Vec<&CorrelatorKey>> = BTreeMap::new();
        for k in &keys {
            by_dim.entry(k.moduli_dimension()).or_default().push(k);
        }
        for layer in by_dim.values() {
            layer.par_iter().for_each(|k| {
                self.intersection_number(k);
            });
        }
        Ok(keys
            .into_iter()
            .map(|k| {
                let v = self.intersection_number(&k);
                (k, v)
            })
            .collect())
    }

    /// Writes every cached entry, sorted by key, under a version header.
    pub fn save_cache(&self, path: &Path) -> Result<(), EngineError> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        writeln!(out, "{CACHE_FILE_HEADER}")?;
        for (key, value) in self.cache.snapshot() {
            writeln!(out, "{}", format_cache_record(&key, &value))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Loads records written by [`Engine::save_cache`]; returns how many
    /// entries were read.
    pub fn load_cache(&self, path: &Path) -> Result<usize, EngineError> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut count = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if i == 0 {
                if line.trim_end() != CACHE_FILE_HEADER {
                    return Err(EngineError::CacheFormat {
                        line: lineno,
                        reason: format!("expected header {CACHE_FILE_HEADER:?}"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) =
                parse_cache_record(&line).map_err(|reason| EngineError::CacheFormat { line: lineno, reason })?;
            self.cache.insert(key, value);
            count += 1;
        }
        Ok(count)
    }
}

pub fn format_cache_record(key: &CorrelatorKey, value: &BigRational) -> String {
    let ks: Vec<String> = key.psi_exponents().iter().map(|k| k.to_string()).collect();
    format!(
        "{} {} {} {}/{}",
        key.genus(),
        key.kappa_power(),
        ks.join(","),
        value.numer(),
        value.denom()
    )
}

pub fn parse_cache_record(line: &str) -> Result<(CorrelatorKey, BigRational), String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [g, k0, ks, value] = fields.as_slice() else {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    };
    let g: u32 = g.parse().map_err(|e| format!("genus: {e}"))?;
    let k0: u32 = k0.parse().map_err(|e| format!("kappa power: {e}"))?;
    let ks = ks
        .split(',')
        .map(|s| s.parse::<u32>().map_err(|e| format!("psi exponent {s:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let (num, den) = value.split_once('/').ok_or("value must be p/q")?;
    let num: BigInt = num.parse().map_err(|e| format!("numerator: {e}"))?;
    let den: BigInt = den.parse().map_err(|e| format!("denominator: {e}"))?;
    if den.is_zero() {
        return Err("zero denominator".into());
    }
    let key = CorrelatorKey::new(g, k0, ks).map_err(|e| e.to_string())?;
    Ok((key, BigRational::new(num, den)))
}

struct Split {
    left: Vec<u32>,
    right: Vec<u32>,
    mult: BigInt,
    labels: Vec<usize>,
}

/// Ordered splits `I | J` of the remaining points. Labeled sinks see every
/// subset; otherwise equal sub-multisets are merged with their binomial
/// multiplicity.
fn splits<S: TermSink>(rest: &[u32]) -> Vec<Split> {
    let mut out = Vec::new();
    if S::LABELED {
        let n = rest.len();
        for mask in 0u64..(1u64 << n) {
            let mut left = Vec::new();
            let mut right = Vec::new();
            let mut labels = Vec::new();
            for (i, &k) in rest.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    left.push(k);
                    labels.push(i + 2);
                } else {
                    right.push(k);
                }
            }
            out.push(Split {
                left,
                right,
                mult: BigInt::one(),
                labels,
            });
        }
        return out;
    }
    let mut groups: Vec<(u32, u32)> = Vec::new();
    for &k in rest {
        match groups.last_mut() {
            Some((v, c)) if *v == k => *c += 1,
            _ => groups.push((k, 1)),
        }
    }
    let mut choice = vec![0u32; groups.len()];
    loop {
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut mult = BigInt::one();
        for (&(v, c), &take) in groups.iter().zip(&choice) {
            left.extend(std::iter::repeat_n(v, take as usize));
            right.extend(std::iter::repeat_n(v, (c - take) as usize));
            mult *= binomial(c, take);
        }
        out.push(Split {
            left,
            right,
            mult,
            labels: Vec::new(),
        });
        // odometer
        let mut i = 0;
        loop {
            if i == groups.len() {
                return out;
            }
            if choice[i] < groups[i].1 {
                choice[i] += 1;
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Descending sequences of length `len` with entries summing to `total`.
pub(crate) fn descending_compositions(total: u32, len: usize) -> Vec<Vec<u32>> {
    fn go(remaining: u32, slots: usize, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 0 {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let hi = remaining.min(cap);
        for v in (0..=hi).rev() {
            // the remaining slots can hold at most v each
            if u64::from(v) * (slots as u64) < u64::from(remaining) {
                break;
            }
            cur.push(v);
            go(remaining - v, slots - 1, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(total, len, total, &mut Vec::with_capacity(len), &mut out);
    out
}

/// Canonical dimension-matching keys within the given bounds, sorted.
pub fn enumerate_keys(max_dim: u32, g_max: u32, n_max: u32) -> Vec<CorrelatorKey> {
    let mut keys = Vec::new();
    for g in 0..=g_max {
        for n in 1..=n_max as usize {
            if !is_stable(g, n) {
                continue;
            }
            let dim = 3 * i64::from(g) - 3 + n as i64;
            if dim < 0 || dim > i64::from(max_dim) {
                continue;
            }
            let dim = dim as u32;
            for k0 in 0..=dim {
                for ks in descending_compositions(dim - k0, n) {
                    keys.push(CorrelatorKey::new(g, k0, ks).expect("stable"));
                }
            }
        }
    }
    keys.sort();
    keys
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn key(g: u32, k0: u32, ks: &[u32]) -> CorrelatorKey {
        CorrelatorKey::new(g, k0, ks.to_vec()).unwrap()
    }

    #[test]
    fn named_values() {
        let e = Engine::new();
        assert_eq!(e.intersection_number(&key(0, 0, &[0, 0, 0])), q(1, 1));
        assert_eq!(e.intersection_number(&key(1, 0, &[1])), q(1, 24));
        assert_eq!(e.intersection_number(&key(1, 1, &[0])), q(1, 24));
        assert_eq!(e.intersection_number(&key(1, 0, &[2, 0])), q(1, 24));
        assert_eq!(e.intersection_number(&key(0, 1, &[0, 0, 0, 0])), q(1, 1));
        assert_eq!(e.intersection_number(&key(1, 2, &[0, 0])), q(1, 8));
        assert_eq!(e.intersection_number(&key(1, 1, &[1, 0])), q(1, 12));
        assert_eq!(e.intersection_number(&key(2, 0, &[4])), q(1, 1152));
    }

    #[test]
    fn dimension_mismatch_is_zero() {
        let e = Engine::new();
        assert!(e.intersection_number(&key(1, 0, &[1, 0])).is_zero());
        assert!(e.intersection_number(&key(1, 1, &[1])).is_zero());
        assert!(e.intersection_number(&key(0, 1, &[0, 0, 0])).is_zero());
        assert_eq!(e.stats().entries, 0);
    }

    #[test]
    fn breakdown_examples() {
        let e = Engine::new();
        let b = e.recursion_terms(&key(1, 0, &[2, 0])).unwrap();
        assert_eq!(b.lhs_factor, q(15, 1));
        assert_eq!(
            b.boundary_terms,
            vec![
                ("merge j=2, l=0".to_string(), q(1, 8)),
                ("nonsep d=(0,0), l=0".to_string(), q(1, 2)),
            ]
        );

        let b = e.recursion_terms(&key(0, 1, &[0, 0, 0, 0])).unwrap();
        assert_eq!(b.boundary_terms.len(), 3);
        assert!(b
            .boundary_terms
            .iter()
            .all(|(l, v)| l.starts_with("merge") && *v == q(1, 3)));

        let b = e.recursion_terms(&key(0, 0, &[1, 0, 0, 0])).unwrap();
        assert_eq!(b.boundary_terms.len(), 3);
        assert!(b
            .boundary_terms
            .iter()
            .all(|(l, v)| l.starts_with("merge") && *v == q(1, 1)));
        assert_eq!(b.total() / &b.lhs_factor, q(1, 1));
    }

    #[test]
    fn breakdown_errors() {
        let e = Engine::new();
        assert!(matches!(
            e.recursion_terms(&key(1, 0, &[1])),
            Err(EngineError::BaseCase(_))
        ));
        assert!(matches!(
            e.recursion_terms(&key(0, 0, &[0, 0, 0])),
            Err(EngineError::BaseCase(_))
        ));
        assert!(matches!(
            e.recursion_terms(&key(1, 0, &[1, 0])),
            Err(EngineError::DimensionGap { gap: 1, .. })
        ));
    }

    #[test]
    fn table_examples() {
        let e = Engine::new();
        let t = e.compute_table(0, 0, 3).unwrap();
        assert_eq!(t, vec![(key(0, 0, &[0, 0, 0]), q(1, 1))]);

        let t = e.compute_table(1, 1, 1).unwrap();
        assert!(t.contains(&(key(1, 0, &[1]), q(1, 24))));
        assert!(t.contains(&(key(1, 1, &[0]), q(1, 24))));

        let t = e.compute_table(2, 1, 2).unwrap();
        assert!(!t.iter().any(|(k, _)| *k == key(1, 0, &[1, 0])));
        for (k, v) in [
            (key(1, 0, &[2, 0]), q(1, 24)),
            (key(1, 1, &[1, 0]), q(1, 12)),
            (key(1, 2, &[0, 0]), q(1, 8)),
            (key(1, 0, &[1, 1]), q(1, 24)),
        ] {
            assert!(t.contains(&(k, v)));
        }
        let sorted = {
            let mut s = t.clone();
            s.sort_by(|a, b| a.0.cmp(&b.0));
            s
        };
        assert_eq!(t, sorted);
    }

    #[test]
    fn table_bound() {
        let e = Engine::new();
        assert!(matches!(
            e.compute_table(16, 1, 1),
            Err(EngineError::BoundExceeded {
                requested: 16,
                bound: 15
            })
        ));
        let e = Engine::new().with_safety_bound(3);
        assert!(e.compute_table(4, 1, 1).is_err());
    }

    #[test]
    fn bounded_cache_gives_same_values() {
        let full = Engine::new();
        let tiny = Engine::with_cache_cap(NonZeroUsize::new(2));
        for k in enumerate_keys(5, 2, 5) {
            assert_eq!(full.intersection_number(&k), tiny.intersection_number(&k), "{k}");
        }
        assert!(tiny.stats().entries <= 2);
    }

    #[test]
    fn compositions() {
        assert_eq!(descending_compositions(2, 2), vec![vec![2, 0], vec![1, 1]]);
        assert_eq!(descending_compositions(0, 3), vec![vec![0, 0, 0]]);
        assert!(descending_compositions(3, 0).is_empty());
        assert_eq!(descending_compositions(4, 3).len(), 4);
    }

    #[test]
    fn cache_record_roundtrip() {
        let k = key(1, 2, &[0, 0]);
        let line = format_cache_record(&k, &q(1, 8));
        assert_eq!(line, "1 2 0,0 1/8");
        assert_eq!(parse_cache_record(&line).unwrap(), (k, q(1, 8)));
        assert!(parse_cache_record("1 2 0,0").is_err());
        assert!(parse_cache_record("0 0 0,0 1/1").is_err());
        assert!(parse_cache_record("1 0 1 1/0").is_err());
    }
}
