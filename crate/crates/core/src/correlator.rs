//! Correlator keys `<kappa1^k0 tau_k1 ... tau_kn>_g` and their canonical form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyError {
    #[error("unstable moduli space: (g, n) = ({g}, {n}) has 2g - 2 + n <= 0")]
    Unstable { g: u32, n: usize },
    #[error("correlators without marked points are not supported")]
    NoMarkedPoints,
}

/// `2g - 2 + n > 0`.
pub fn is_stable(g: u32, n: usize) -> bool {
    2 * i64::from(g) - 2 + n as i64 > 0
}

/// Canonical identity of a mixed psi/kappa1 correlator.
///
/// Marked points are unlabeled: `ks` is kept sorted in descending order so
/// two keys compare equal exactly when they describe the same multiset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CorrelatorKey {
    g: u32,
    k0: u32,
    ks: Vec<u32>,
}

impl CorrelatorKey {
    pub fn new(g: u32, k0: u32, ks: impl Into<Vec<u32>>) -> Result<Self, KeyError> {
        let mut ks = ks.into();
        if ks.is_empty() {
            return Err(KeyError::NoMarkedPoints);
        }
        if !is_stable(g, ks.len()) {
            return Err(KeyError::Unstable { g, n: ks.len() });
        }
        ks.sort_unstable_by(|a, b| b.cmp(a));
        Ok(CorrelatorKey { g, k0, ks })
    }

    pub fn genus(&self) -> u32 {
        self.g
    }

    pub fn kappa_power(&self) -> u32 {
        self.k0
    }

    /// psi exponents, largest first.
    pub fn psi_exponents(&self) -> &[u32] {
        &self.ks
    }

    pub fn n(&self) -> usize {
        self.ks.len()
    }

    /// `3g - 3 + n`, the complex dimension of the moduli space.
    pub fn moduli_dimension(&self) -> i64 {
        3 * i64::from(self.g) - 3 + self.n() as i64
    }

    /// `(3g - 3 + n) - (k0 + sum ks)`; the correlator vanishes unless zero.
    pub fn dimension_gap(&self) -> i64 {
        self.moduli_dimension() - i64::from(self.k0) - self.ks.iter().map(|&k| i64::from(k)).sum::<i64>()
    }

    /// Exponent multiplicities, ascending by exponent.
    pub fn multiplicities(&self) -> BTreeMap<u32, u32> {
        let mut m = BTreeMap::new();
        for &k in &self.ks {
            *m.entry(k).or_insert(0) += 1;
        }
        m
    }
}

/// Free-function form of [`CorrelatorKey::new`].
pub fn canonicalize(g: u32, k0: u32, ks: &[u32]) -> Result<CorrelatorKey, KeyError> {
    CorrelatorKey::new(g, k0, ks.to_vec())
}

pub fn dimension_gap(key: &CorrelatorKey) -> i64 {
    key.dimension_gap()
}

impl Ord for CorrelatorKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.g, self.n(), self.k0, &self.ks).cmp(&(other.g, other.n(), other.k0, &other.ks))
    }
}

impl PartialOrd for CorrelatorKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical text form, e.g. `<kappa1^2 tau0 tau1^2>_1`.
impl fmt::Display for CorrelatorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.k0 {
            0 => {}
            1 => parts.push("kappa1".to_string()),
            k => parts.push(format!("kappa1^{k}")),
        }
        for (k, m) in self.multiplicities() {
            if m == 1 {
                parts.push(format!("tau{k}"));
            } else {
                parts.push(format!("tau{k}^{m}"));
            }
        }
        write!(f, "<{}>_{}", parts.join(" "), self.g)
    }
}

impl std::str::FromStr for CorrelatorKey {
    type Err = crate::cli::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::cli::parse_correlator(s)
    }
}

/// Oracle-side key carrying arbitrary `kappa_a` factors (`a >= 1`).
///
/// The point count may drop to zero only in intermediate states of a
/// reduction; construction checks stability of `(g, |ks|)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KappaPsiKey {
    pub g: u32,
    /// kappa indices, ascending
    pub kappas: Vec<u32>,
    /// psi exponents, descending
    pub ks: Vec<u32>,
}

impl KappaPsiKey {
    pub fn new(g: u32, kappas: impl Into<Vec<u32>>, ks: impl Into<Vec<u32>>) -> Result<Self, KeyError> {
        let mut kappas = kappas.into();
        let mut ks = ks.into();
        if !is_stable(g, ks.len()) {
            return Err(KeyError::Unstable { g, n: ks.len() });
        }
        assert!(kappas.iter().all(|&a| a >= 1), "kappa indices start at 1");
        kappas.sort_unstable();
        ks.sort_unstable_by(|a, b| b.cmp(a));
        Ok(KappaPsiKey { g, kappas, ks })
    }

    /// `kappa1^k0` only, as a public key.
    pub fn to_correlator_key(&self) -> Option<CorrelatorKey> {
        if self.kappas.iter().any(|&a| a != 1) {
            return None;
        }
        CorrelatorKey::new(self.g, self.kappas.len() as u32, self.ks.clone()).ok()
    }
}

impl From<&CorrelatorKey> for KappaPsiKey {
    fn from(key: &CorrelatorKey) -> Self {
        KappaPsiKey {
            g: key.g,
            kappas: vec![1; key.k0 as usize],
            ks: key.ks.clone(),
        }
    }
}
