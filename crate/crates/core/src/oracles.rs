//! Independent ways to compute intersection numbers, used to cross-check the
//! main engine.
//!
//! None of this shares recursion code with [`crate::engine`]; only the
//! coefficient tables are common.

use std::collections::{BTreeMap, HashMap};
use std::sync::{LazyLock, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::coefficients::{factorial, odd_double_factorial};
use crate::correlator::{is_stable, CorrelatorKey, KappaPsiKey, KeyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("genus-0 closed form needs at least 3 points, got {0}")]
    TooFewPoints(usize),
}

/// `<prod tau_ki>_0 = (n-3)! / prod ki!` when `sum ki = n - 3`, else 0.
pub fn genus0_closed_form(ks: &[u32]) -> Result<BigRational, OracleError> {
    let n = ks.len();
    if n < 3 {
        return Err(OracleError::TooFewPoints(n));
    }
    let total: u64 = ks.iter().map(|&k| u64::from(k)).sum();
    if total != (n - 3) as u64 {
        return Ok(BigRational::zero());
    }
    let den: BigInt = ks.iter().map(|&k| factorial(k)).product();
    Ok(BigRational::new(factorial((n - 3) as u32), den))
}

type DvvKey = (u32, Vec<u32>);

static DVV_MEMO: LazyLock<Mutex<HashMap<DvvKey, BigRational>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

/// Pure-psi intersection number `<prod tau_ki>_g` by the DVV recursion.
///
/// The recursion is expanded at a point of *smallest* exponent and splits are
/// enumerated over labeled subsets, so it follows a different path through
/// the boundary terms than the engine does.
pub fn dvv_intersection(g: u32, ks: &[u32]) -> Result<BigRational, OracleError> {
    if ks.is_empty() {
        return Err(KeyError::NoMarkedPoints.into());
    }
    if !is_stable(g, ks.len()) {
        return Err(KeyError::Unstable { g, n: ks.len() }.into());
    }
    Ok(dvv(g, ks.to_vec()))
}

fn dvv(g: u32, mut ks: Vec<u32>) -> BigRational {
    let n = ks.len() as i64;
    let degree: i64 = ks.iter().map(|&k| i64::from(k)).sum();
    if degree != 3 * i64::from(g) - 3 + n {
        return BigRational::zero();
    }
    ks.sort_unstable();
    match (g, ks.as_slice()) {
        (0, [0, 0, 0]) => return BigRational::one(),
        (1, [1]) => return BigRational::new(1.into(), 24.into()),
        _ => {}
    }
    let memo_key = (g, ks.clone());
    if let Some(v) = DVV_MEMO.lock().unwrap().get(&memo_key) {
        return v.clone();
    }

    let first = ks[0];
    let others = &ks[1..];
    let mut acc = BigRational::zero();

    for j in 0..others.len() {
        let kj = others[j];
        if first + kj == 0 {
            continue;
        }
        let mut sub: Vec<u32> = others.to_vec();
        sub[j] = first + kj - 1;
        let coef = BigRational::new(odd_double_factorial(first + kj), odd_double_factorial(kj));
        acc += coef * dvv(g, sub);
    }

    if first >= 2 {
        let mut genus_terms = BigRational::zero();
        for a in 0..=first - 2 {
            let b = first - 2 - a;
            let w = BigRational::from_integer(odd_double_factorial(a + 1) * odd_double_factorial(b + 1));
            if g >= 1 {
                let mut sub = others.to_vec();
                sub.push(a);
                sub.push(b);
                genus_terms += &w * dvv(g - 1, sub);
            }
            let m = others.len();
            for mask in 0u32..(1 << m) {
                let mut left = vec![a];
                let mut right = vec![b];
                for (i, &k) in others.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        left.push(k);
                    } else {
                        right.push(k);
                    }
                }
                for g1 in 0..=g {
                    let g2 = g - g1;
                    if !is_stable(g1, left.len()) || !is_stable(g2, right.len()) {
                        continue;
                    }
                    let lv = dvv(g1, left.clone());
                    if lv.is_zero() {
                        continue;
                    }
                    genus_terms += &w * lv * dvv(g2, right.clone());
                }
            }
        }
        acc += genus_terms / BigRational::from_integer(2.into());
    }

    let value = acc / BigRational::from_integer(odd_double_factorial(first + 1));
    DVV_MEMO.lock().unwrap().insert(memo_key, value.clone());
    value
}

/// One pure-psi term of a kappa reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionTerm {
    pub coeff: BigInt,
    pub key: CorrelatorKey,
}

/// Rewrites a mixed kappa/psi correlator as an integer combination of pure-psi
/// correlators by repeatedly pushing forward along the forgetful map.
pub fn kappa_reduce(key: &KappaPsiKey) -> Vec<ReductionTerm> {
    kappa_reduce_by(key, |_| 0)
}

/// As [`kappa_reduce`], with `pick` choosing which kappa (by position in the
/// ascending kappa list) to eliminate at each step.
pub fn kappa_reduce_by(key: &KappaPsiKey, pick: impl Fn(&[u32]) -> usize + Copy) -> Vec<ReductionTerm> {
    let mut acc: BTreeMap<CorrelatorKey, BigInt> = BTreeMap::new();
    reduce_into(key.g, key.kappas.clone(), key.ks.clone(), BigInt::one(), pick, &mut acc);
    acc.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(key, coeff)| ReductionTerm { coeff, key })
        .collect()
}

fn reduce_into(
    g: u32,
    kappas: Vec<u32>,
    ks: Vec<u32>,
    sign: BigInt,
    pick: impl Fn(&[u32]) -> usize + Copy,
    acc: &mut BTreeMap<CorrelatorKey, BigInt>,
) {
    if kappas.is_empty() {
        let key = CorrelatorKey::new(g, 0, ks).expect("reduction keeps keys stable");
        *acc.entry(key).or_insert_with(BigInt::zero) += sign;
        return;
    }
    let idx = pick(&kappas);
    let a = kappas[idx];
    let rest: Vec<u32> = kappas
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx)
        .map(|(_, &b)| b)
        .collect();
    // kappa_b = pi^* kappa_b + psi_new^b on the space with one more point
    for mask in 0u32..(1 << rest.len()) {
        let mut exponent = a + 1;
        let mut kept = Vec::new();
        let mut flips = 0;
        for (i, &b) in rest.iter().enumerate() {
            if mask >> i & 1 == 1 {
                exponent += b;
                flips += 1;
            } else {
                kept.push(b);
            }
        }
        let mut new_ks = ks.clone();
        new_ks.push(exponent);
        let s = if flips % 2 == 0 { sign.clone() } else { -sign.clone() };
        reduce_into(g, kept, new_ks, s, pick, acc);
    }
}

/// `sum coeff * dvv_intersection` over the kappa reduction of `key`.
pub fn oracle_intersection(key: &CorrelatorKey) -> Result<BigRational, OracleError> {
    kappa_psi_intersection(&KappaPsiKey::from(key))
}

pub fn kappa_psi_intersection(key: &KappaPsiKey) -> Result<BigRational, OracleError> {
    let mut total = BigRational::zero();
    for term in kappa_reduce(key) {
        if term.key.dimension_gap() != 0 {
            continue;
        }
        let v = dvv_intersection(term.key.genus(), term.key.psi_exponents())?;
        total += BigRational::from_integer(term.coeff) * v;
    }
    Ok(total)
}

/// String equation: `<tau0 prod tau_ki>_(g,n+1) = sum_j <tau_(kj-1) prod_(i != j) tau_ki>_(g,n)`.
pub fn string_check(g: u32, ks: &[u32]) -> Result<bool, OracleError> {
    // validates stability of the smaller space
    dvv_intersection(g, ks)?;
    let mut lhs_ks = ks.to_vec();
    lhs_ks.push(0);
    let lhs = dvv_intersection(g, &lhs_ks)?;
    let mut rhs = BigRational::zero();
    for j in 0..ks.len() {
        if ks[j] == 0 {
            continue;
        }
        let mut sub = ks.to_vec();
        sub[j] -= 1;
        rhs += dvv_intersection(g, &sub)?;
    }
    Ok(lhs == rhs)
}

/// Dilaton equation: `<tau1 prod tau_ki>_(g,n+1) = (2g - 2 + n) <prod tau_ki>_(g,n)`.
pub fn dilaton_check(g: u32, ks: &[u32]) -> Result<bool, OracleError> {
    let base = dvv_intersection(g, ks)?;
    let mut lhs_ks = ks.to_vec();
    lhs_ks.push(1);
    let lhs = dvv_intersection(g, &lhs_ks)?;
    let factor = BigInt::from(2 * i64::from(g) - 2 + ks.len() as i64);
    debug_assert!(factor.is_positive());
    Ok(lhs == BigRational::from_integer(factor) * base)
}
