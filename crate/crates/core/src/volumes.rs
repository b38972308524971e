//! Weil-Petersson volume polynomials and the mixed generating function.
//!
//! Expanding `(omega + 1/2 sum L_i^2 psi_i)^d / d!` with `omega = 2 pi^2 kappa1`
//! gives
//!
//! ```text
//! V_(g,n)(L) = sum_(k0 + |k| = d) (2 pi^2)^k0 / (k0! prod 2^ki ki!) <kappa1^k0 prod tau_ki>_g prod L_i^(2 ki)
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::coefficients::factorial;
use crate::correlator::{is_stable, CorrelatorKey, KeyError};
use crate::engine::{Engine, EngineError};

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("expected {expected} boundary lengths, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Polynomial in `L_1^2 .. L_n^2` whose coefficients are rationals times an
/// even power of pi.
///
/// Terms are keyed by `(k_1..k_n, p)` for the monomial `pi^p prod L_i^(2 k_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiGradedPoly {
    n: usize,
    terms: BTreeMap<(Vec<u32>, u32), BigRational>,
}

impl PiGradedPoly {
    pub fn new(n: usize) -> Self {
        PiGradedPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `coeff * pi^pi_power * prod L_i^(2 k_i)`.
    pub fn add_term(&mut self, exponents: Vec<u32>, pi_power: u32, coeff: BigRational) {
        assert_eq!(exponents.len(), self.n, "exponent vector length");
        assert!(pi_power.is_multiple_of(2), "pi powers are even");
        let slot = self
            .terms
            .entry((exponents.clone(), pi_power))
            .or_insert_with(BigRational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&(exponents, pi_power));
        }
    }

    pub fn coeff(&self, exponents: &[u32], pi_power: u32) -> BigRational {
        self.terms
            .get(&(exponents.to_vec(), pi_power))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], u32, &BigRational)> {
        self.terms.iter().map(|((e, p), c)| (e.as_slice(), *p, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &PiGradedPoly) -> PiGradedPoly {
        assert_eq!(self.n, other.n);
        let mut out = PiGradedPoly::new(self.n);
        for ((ea, pa), ca) in &self.terms {
            for ((eb, pb), cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, pa + pb, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> PiGradedPoly {
        let mut out = PiGradedPoly::new(self.n);
        for ((e, p), v) in &self.terms {
            out.add_term(e.clone(), *p, v * c);
        }
        out
    }

    /// Float evaluation at boundary lengths `ls`.
    pub fn evaluate(&self, ls: &[f64]) -> Result<f64, VolumeError> {
        if ls.len() != self.n {
            return Err(VolumeError::LengthMismatch {
                expected: self.n,
                got: ls.len(),
            });
        }
        let pi = std::f64::consts::PI;
        Ok(self
            .terms
            .iter()
            .map(|((e, p), c)| {
                let mono: f64 = e.iter().zip(ls).map(|(&k, &l)| l.powi(2 * k as i32)).product();
                c.to_f64().expect("finite") * pi.powi(*p as i32) * mono
            })
            .sum())
    }

    /// Terms ordered by descending pi power, then descending exponent vector.
    fn display_order(&self) -> Vec<(&Vec<u32>, u32, &BigRational)> {
        let mut v: Vec<_> = self.terms.iter().map(|((e, p), c)| (e, *p, c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| b.0.cmp(a.0)));
        v
    }

    pub fn to_json(&self, g: u32) -> serde_json::Value {
        #[derive(Serialize)]
        struct Term {
            l2_exponents: Vec<u32>,
            pi_power: u32,
            coeff: String,
        }
        #[derive(Serialize)]
        struct Poly {
            g: u32,
            n: usize,
            terms: Vec<Term>,
        }
        let terms = self
            .display_order()
            .into_iter()
            .map(|(e, p, c)| Term {
                l2_exponents: e.clone(),
                pi_power: p,
                coeff: format!("{}/{}", c.numer(), c.denom()),
            })
            .collect();
        serde_json::to_value(Poly { g, n: self.n, terms }).expect("serializable")
    }
}

/// Exact text such as `1/12*pi^2 + 1/48*L1^2`.
impl fmt::Display for PiGradedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, p, c)) in self.display_order().into_iter().enumerate() {
            let mut factors = Vec::new();
            if p > 0 {
                factors.push(format!("pi^{p}"));
            }
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    factors.push(format!("L{}^{}", i + 1, 2 * k));
                }
            }
            let mag = c.abs();
            if idx == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{mag}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Vectors in `N^n` with entries summing to at most `max_total`.
fn exponent_vectors(n: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn go(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            go(i + 1, left - v, cur, out);
        }
        cur[i] = 0;
    }
    go(0, max_total, &mut cur, &mut out);
    out
}

/// `V_(g,n)(L)` assembled from the engine's correlators.
pub fn volume_polynomial(engine: &Engine, g: u32, n: usize) -> Result<PiGradedPoly, VolumeError> {
    if n == 0 {
        return Err(KeyError::NoMarkedPoints.into());
    }
    if !is_stable(g, n) {
        return Err(KeyError::Unstable { g, n }.into());
    }
    let dim = (3 * g as usize + n - 3) as u32;
    let mut poly = PiGradedPoly::new(n);
    for ks in exponent_vectors(n, dim) {
        let psi_total: u32 = ks.iter().sum();
        let k0 = dim - psi_total;
        let key = CorrelatorKey::new(g, k0, ks.clone())?;
        let value = engine.intersection_number(&key);
        let mut den: BigInt = factorial(k0);
        for &k in &ks {
            den *= (BigInt::one() << k) * factorial(k);
        }
        let coeff = BigRational::new(BigInt::one() << k0, den) * value;
        poly.add_term(ks, 2 * k0, coeff);
    }
    Ok(poly)
}

pub fn volume_at(engine: &Engine, g: u32, n: usize, ls: &[f64]) -> Result<f64, VolumeError> {
    if ls.len() != n {
        return Err(VolumeError::LengthMismatch {
            expected: n,
            got: ls.len(),
        });
    }
    volume_polynomial(engine, g, n)?.evaluate(ls)
}

/// Coefficient of `s^k0 prod_a t_a^(m_a)` in the genus-`g` part of
/// `G = sum_g <exp(s kappa1 + sum_a t_a tau_a)>_g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GfCoeff {
    pub g: u32,
    pub s_power: u32,
    /// `(a, m_a)` pairs, ascending in `a`
    pub t_degree: Vec<(u32, u32)>,
    #[serde(serialize_with = "ser_rational")]
    pub coeff: BigRational,
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

impl fmt::Display for GfCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ts: Vec<String> = self.t_degree.iter().map(|(a, m)| format!("t{a}^{m}")).collect();
        write!(f, "g={} s^{} {} {}", self.g, self.s_power, ts.join(" "), self.coeff)
    }
}

/// All nonzero coefficients of `G` with genus `<= g_max` and
/// `3g - 3 + n <= dim_max`, in table order.
pub fn generating_function_coeffs(engine: &Engine, g_max: u32, dim_max: u32) -> Result<Vec<GfCoeff>, EngineError> {
    let table = engine.compute_table(dim_max, g_max, dim_max + 3)?;
    Ok(table
        .into_iter()
        .map(|(key, value)| {
            let mult = key.multiplicities();
            let mut den = factorial(key.kappa_power());
            for &m in mult.values() {
                den *= factorial(m);
            }
            GfCoeff {
                g: key.genus(),
                s_power: key.kappa_power(),
                t_degree: mult.into_iter().collect(),
                coeff: value / BigRational::from_integer(den),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// `a + b L1^2 + c L2^2` with `a` carrying `pi^pa`.
    fn linear(n: usize, a: BigRational, pa: u32, b: BigRational) -> PiGradedPoly {
        let mut p = PiGradedPoly::new(n);
        p.add_term(vec![0; n], pa, a);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, 0, b.clone());
        }
        p
    }

    #[test]
    fn v11() {
        let e = Engine::new();
        let v = volume_polynomial(&e, 1, 1).unwrap();
        assert_eq!(v.coeff(&[0], 2), q(1, 12));
        assert_eq!(v.coeff(&[1], 0), q(1, 48));
        assert_eq!(v.len(), 2);
        assert_eq!(v.to_string(), "1/12*pi^2 + 1/48*L1^2");
    }

    #[test]
    fn v04() {
        let e = Engine::new();
        let v = volume_polynomial(&e, 0, 4).unwrap();
        assert_eq!(v, linear(4, q(2, 1), 2, q(1, 2)));
        assert_eq!(v.to_string(), "2*pi^2 + 1/2*L1^2 + 1/2*L2^2 + 1/2*L3^2 + 1/2*L4^2");
    }

    #[test]
    fn v12_product_form() {
        let e = Engine::new();
        let v = volume_polynomial(&e, 1, 2).unwrap();
        let expected = linear(2, q(4, 1), 2, q(1, 1))
            .mul(&linear(2, q(12, 1), 2, q(1, 1)))
            .scale(&q(1, 192));
        assert_eq!(v, expected);
    }

    #[test]
    fn volume_at_examples() {
        let e = Engine::new();
        assert!((volume_at(&e, 1, 1, &[0.0]).unwrap() - PI * PI / 12.0).abs() < 1e-12);
        assert!((volume_at(&e, 0, 4, &[0.0; 4]).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
        assert!((volume_at(&e, 1, 1, &[2.0]).unwrap() - (PI * PI / 12.0 + 1.0 / 12.0)).abs() < 1e-12);
        assert!(matches!(
            volume_at(&e, 1, 1, &[1.0, 2.0]),
            Err(VolumeError::LengthMismatch { expected: 1, got: 2 })
        ));
        assert!(volume_polynomial(&e, 0, 2).is_err());
        assert!(volume_polynomial(&e, 2, 0).is_err());
    }

    #[test]
    fn volume_invariants() {
        let e = Engine::new();
        for (g, n) in [(0, 5), (1, 3), (2, 1), (2, 2), (0, 6)] {
            let v = volume_polynomial(&e, g, n).unwrap();
            let d = (3 * g as usize + n - 3) as u32;
            for (ex, p, c) in v.terms() {
                assert!(c.is_positive());
                assert_eq!(p / 2 + ex.iter().sum::<u32>(), d);
                let mut rev = ex.to_vec();
                rev.reverse();
                assert_eq!(&v.coeff(&rev, p), c);
                let mut rot = ex.to_vec();
                rot.rotate_left(1);
                assert_eq!(&v.coeff(&rot, p), c);
            }
            // constant term is (2 pi^2)^d <kappa1^d tau0^n> / d!
            let key = CorrelatorKey::new(g, d, vec![0; n]).unwrap();
            let expected = BigRational::new(BigInt::one() << d, factorial(d)) * e.intersection_number(&key);
            assert_eq!(v.coeff(&vec![0; n], 2 * d), expected);
        }
    }

    #[test]
    fn gf_examples() {
        let e = Engine::new();
        let c = generating_function_coeffs(&e, 0, 0).unwrap();
        assert_eq!(
            c,
            vec![GfCoeff {
                g: 0,
                s_power: 0,
                t_degree: vec![(0, 3)],
                coeff: q(1, 6)
            }]
        );
        let c = generating_function_coeffs(&e, 1, 1).unwrap();
        assert!(c.contains(&GfCoeff {
            g: 1,
            s_power: 1,
            t_degree: vec![(0, 1)],
            coeff: q(1, 24)
        }));
        assert!(c.contains(&GfCoeff {
            g: 1,
            s_power: 0,
            t_degree: vec![(1, 1)],
            coeff: q(1, 24)
        }));
        assert_eq!(c[0].to_string(), "g=0 s^0 t0^3 1/6");
    }
}
