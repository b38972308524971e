//! Exact coefficients used by the recursion: Bernoulli numbers, double
//! factorials, the weight sequence `beta_l`, the `A_k^(n)` coefficients of
//! powers of the operator `P f(x) = int_x^inf t f(t) dt` on exponentials,
//! and the closed-form values of `P_x^n P_y^m h^(2k)(x + y)` at the origin.
//!
//! Every table is memoized in a process-wide, lock-guarded vector that only
//! ever grows, so concurrent callers always observe the same values.

use std::sync::{LazyLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoeffError {
    #[error("double factorial undefined for {0} (must be >= -1)")]
    DoubleFactorialDomain(i64),
}

/// Grows `table` (under the write lock) until index `upto` exists, then
/// returns a clone of that entry.
fn memoized<T: Clone>(table: &RwLock<Vec<T>>, upto: usize, mut extend: impl FnMut(&[T]) -> T) -> T {
    {
        let read = table.read().expect("coefficient table poisoned");
        if let Some(v) = read.get(upto) {
            return v.clone();
        }
    }
    let mut write = table.write().expect("coefficient table poisoned");
    while write.len() <= upto {
        let next = extend(&write);
        write.push(next);
    }
    write[upto].clone()
}

static FACTORIALS: LazyLock<RwLock<Vec<BigInt>>> = LazyLock::new(|| RwLock::new(vec![BigInt::one()]));

/// `n!` as an exact integer.
pub fn factorial(n: u32) -> BigInt {
    memoized(&FACTORIALS, n as usize, |prev| {
        prev.last().unwrap() * BigInt::from(prev.len())
    })
}

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

static DOUBLE_FACTORIALS: LazyLock<RwLock<Vec<BigInt>>> =
    LazyLock::new(|| RwLock::new(vec![BigInt::one(), BigInt::one()]));

/// `k!!` with `(-1)!! = 0!! = 1`.
pub fn double_factorial(k: i64) -> Result<BigInt, CoeffError> {
    if k < -1 {
        return Err(CoeffError::DoubleFactorialDomain(k));
    }
    if k <= 0 {
        return Ok(BigInt::one());
    }
    Ok(memoized(&DOUBLE_FACTORIALS, k as usize, |prev| {
        let i = prev.len();
        &prev[i - 2] * BigInt::from(i)
    }))
}

/// `(2d - 1)!!` for `d >= 0`, the shape every formula in the recursion uses.
pub(crate) fn odd_double_factorial(d: u32) -> BigInt {
    double_factorial(2 * i64::from(d) - 1).expect("2d-1 >= -1")
}

static BERNOULLI: LazyLock<RwLock<Vec<BigRational>>> = LazyLock::new(|| RwLock::new(vec![BigRational::one()]));

/// Bernoulli number `B_m` with `B_1 = -1/2`.
pub fn bernoulli(m: u32) -> BigRational {
    memoized(&BERNOULLI, m as usize, |prev| {
        // sum_{j=0}^{m} C(m+1, j) B_j = 0
        let m = prev.len() as u32;
        let mut acc = BigRational::zero();
        for (j, b) in prev.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            acc += BigRational::from_integer(binomial(m + 1, j as u32)) * b;
        }
        -acc / BigRational::from_integer(BigInt::from(m + 1))
    })
}

fn pow2(e: u32) -> BigInt {
    BigInt::one() << e
}

/// An exact multiple of an even zeta value, `coeff * zeta(zeta_arg)`.
///
/// `zeta_arg == None` marks a pure rational (no zeta factor at all);
/// `Some(0)` means `zeta(0) = -1/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZetaValue {
    pub coeff: BigRational,
    pub zeta_arg: Option<u32>,
}

impl ZetaValue {
    pub fn rational(coeff: BigRational) -> Self {
        ZetaValue { coeff, zeta_arg: None }
    }

    /// Panics on an odd argument.
    pub fn new(coeff: BigRational, zeta_arg: u32) -> Self {
        assert!(zeta_arg.is_multiple_of(2), "only even zeta arguments are representable");
        ZetaValue {
            coeff,
            zeta_arg: Some(zeta_arg),
        }
    }

    /// Exact value as `(rational, pi_power)` meaning `rational * pi^pi_power`,
    /// using `zeta(2m) = (-1)^(m+1) B_2m (2 pi)^(2m) / (2 (2m)!)`.
    pub fn to_pi_rational(&self) -> (BigRational, u32) {
        match self.zeta_arg {
            None => (self.coeff.clone(), 0),
            Some(arg) => {
                let (r, p) = zeta_even_pi_rational(arg / 2);
                (&self.coeff * r, p)
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        let (r, p) = self.to_pi_rational();
        r.to_f64().expect("finite rational") * std::f64::consts::PI.powi(p as i32)
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }
}

/// `zeta(2m) = rational * pi^(2m)`; returns `(rational, 2m)`.
pub fn zeta_even_pi_rational(m: u32) -> (BigRational, u32) {
    let sign = if m % 2 == 1 { BigInt::one() } else { -BigInt::one() };
    let num = BigRational::from_integer(sign * pow2(2 * m)) * bernoulli(2 * m);
    let den = BigRational::from_integer(BigInt::from(2) * factorial(2 * m));
    (num / den, 2 * m)
}

static BETA: LazyLock<RwLock<Vec<BigRational>>> = LazyLock::new(|| RwLock::new(Vec::new()));

/// `beta_l = (-1)^(l-1) 2^l (2^(2l) - 2) B_2l / (2l)!`.
pub fn beta_coeff(l: u32) -> BigRational {
    memoized(&BETA, l as usize, |prev| beta_bernoulli_form(prev.len() as u32))
}

fn beta_bernoulli_form(l: u32) -> BigRational {
    let sign = if l % 2 == 1 { BigInt::one() } else { -BigInt::one() };
    let scale = sign * pow2(l) * (pow2(2 * l) - BigInt::from(2));
    BigRational::from_integer(scale) * bernoulli(2 * l) / BigRational::from_integer(factorial(2 * l))
}

/// `beta_l` through its zeta form `(2^(2l+1) - 4) zeta(2l) / (2 pi^2)^l`.
///
/// The pi powers cancel exactly; this is the second route that every stored
/// entry of [`beta_coeff`] is checked against.
pub fn beta_coeff_zeta_form(l: u32) -> BigRational {
    let coeff = BigRational::from_integer(pow2(2 * l + 1) - BigInt::from(4));
    let (r, p) = ZetaValue::new(coeff, 2 * l).to_pi_rational();
    debug_assert_eq!(p, 2 * l);
    r / BigRational::from_integer(pow2(l))
}

/// Memoized snapshot of `beta_0 .. beta_len-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaTable {
    pub values: Vec<BigRational>,
}

impl BetaTable {
    pub fn new(len: usize) -> Self {
        BetaTable {
            values: (0..len as u32).map(beta_coeff).collect(),
        }
    }

    pub fn get(&self, l: usize) -> Option<&BigRational> {
        self.values.get(l)
    }

    /// True when every entry matches the zeta-form evaluation.
    pub fn is_consistent(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(l, v)| *v == beta_coeff_zeta_form(l as u32))
            && self.values.first().is_none_or(|b0| b0.is_one())
    }
}

/// `A_k^(n) = (2n - k)! / (2^(n-k) k! (n-k)!)`, zero outside `0 <= k <= n`.
pub fn a_coeff(n: u32, k: i64) -> BigRational {
    if k < 0 || k > i64::from(n) {
        return BigRational::zero();
    }
    let k = k as u32;
    let num = factorial(2 * n - k);
    let den = pow2(n - k) * factorial(k) * factorial(n - k);
    BigRational::new(num, den)
}

/// Exact `P_x^n P_y^m h^(2k)(x + y)` at `x = y = 0` for `h(x) = 2 / (1 + e^(x/2))`.
pub fn f_kernel_value(n: u32, m: u32, k: u32) -> ZetaValue {
    let df = odd_double_factorial(n) * odd_double_factorial(m);
    let total = n + m;
    match k.cmp(&total) {
        std::cmp::Ordering::Less => {
            let s = total - k;
            let c = df * (pow2(2 * s + 1) - BigInt::from(4));
            ZetaValue::new(BigRational::from_integer(c), 2 * s)
        }
        std::cmp::Ordering::Equal => ZetaValue::rational(BigRational::from_integer(df)),
        std::cmp::Ordering::Greater => ZetaValue::rational(BigRational::zero()),
    }
}

/// `(2 pi^2)^(-(n+m-k)) * f_kernel_value(n, m, k)` for `k < n + m`, which
/// is the pure rational `(2n-1)!! (2m-1)!! beta_(n+m-k)`.
pub fn f_kernel_normalized(n: u32, m: u32, k: u32) -> Option<BigRational> {
    let s = (n + m).checked_sub(k).filter(|s| *s > 0)?;
    let (r, p) = f_kernel_value(n, m, k).to_pi_rational();
    debug_assert_eq!(p, 2 * s);
    Some(r / BigRational::from_integer(pow2(s)))
}

/// `n! / (n - l)!` as an integer.
pub(crate) fn falling_factorial(n: u32, l: u32) -> BigInt {
    debug_assert!(l <= n);
    factorial(n) / factorial(n - l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Akiyama-Tanigawa, independent of the recurrence used above. Yields
    /// `B_1 = +1/2`.
    fn bernoulli_akiyama_tanigawa(m: usize) -> BigRational {
        let mut a: Vec<BigRational> = (0..=m).map(|j| q(1, j as i64 + 1)).collect();
        for outer in 1..=m {
            for j in 0..=(m - outer) {
                a[j] = BigRational::from_integer(BigInt::from(j + 1)) * (&a[j] - &a[j + 1]);
            }
        }
        a[0].clone()
    }

    #[test]
    fn bernoulli_examples() {
        assert_eq!(bernoulli(0), q(1, 1));
        assert_eq!(bernoulli(1), q(-1, 2));
        assert_eq!(bernoulli(2), q(1, 6));
        assert_eq!(bernoulli(4), q(-1, 30));
        assert_eq!(bernoulli(3), q(0, 1));
    }

    #[test]
    fn bernoulli_matches_akiyama_tanigawa() {
        for m in 2..=40 {
            assert_eq!(bernoulli(m), bernoulli_akiyama_tanigawa(m as usize), "B_{m}");
        }
    }

    #[test]
    fn double_factorial_examples() {
        assert_eq!(double_factorial(-1).unwrap(), BigInt::from(1));
        assert_eq!(double_factorial(0).unwrap(), BigInt::from(1));
        assert_eq!(double_factorial(5).unwrap(), BigInt::from(15));
        let oracle: i64 = 8 * 6 * 4 * 2;
        assert_eq!(double_factorial(8).unwrap(), BigInt::from(oracle));
        assert_eq!(double_factorial(-2), Err(CoeffError::DoubleFactorialDomain(-2)));
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_coeff(0), q(1, 1));
        assert_eq!(beta_coeff(1), q(1, 3));
        assert_eq!(beta_coeff(2), q(7, 90));
        assert_eq!(beta_coeff_zeta_form(0), q(1, 1));
        assert_eq!(beta_coeff_zeta_form(1), q(1, 3));
        assert_eq!(beta_coeff_zeta_form(2), q(7, 90));
    }

    #[test]
    fn beta_table_consistent() {
        let t = BetaTable::new(31);
        assert!(t.is_consistent());
        assert_eq!(t, BetaTable::new(31));
    }

    #[test]
    fn a_coeff_examples() {
        assert_eq!(a_coeff(2, 0), q(3, 1));
        assert_eq!(a_coeff(2, 2), q(1, 1));
        // 5! / (2^2 1! 2!) = 120 / 8
        assert_eq!(a_coeff(3, 1), q(15, 1));
        assert_eq!(a_coeff(3, -1), q(0, 1));
        assert_eq!(a_coeff(3, 4), q(0, 1));
    }

    #[test]
    fn a_coeff_recurrence_and_double_factorial() {
        for n in 0..=30u32 {
            assert_eq!(
                a_coeff(n, 0),
                BigRational::from_integer(double_factorial(2 * i64::from(n) - 1).unwrap())
            );
            for k in 1..=i64::from(n) {
                let prev_n = if n == 0 {
                    BigRational::zero()
                } else {
                    a_coeff(n - 1, k - 2)
                };
                let rec = (a_coeff(n, k - 1) - prev_n) / BigRational::from_integer(k.into());
                assert_eq!(a_coeff(n, k), rec, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn kernel_value_examples() {
        assert_eq!(f_kernel_value(1, 0, 1), ZetaValue::rational(q(1, 1)));
        assert!(f_kernel_value(0, 0, 1).is_zero());
        let v = f_kernel_value(1, 1, 0);
        assert_eq!(v, ZetaValue::new(q(28, 1), 4));
        // 28 * pi^4 / 90
        assert!((v.to_f64() - 28.0 * std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_zero_is_minus_half() {
        let z = ZetaValue::new(q(3, 1), 0);
        assert_eq!(z.to_pi_rational(), (q(-3, 2), 0));
    }

    #[test]
    fn kernel_symmetry_and_beta_link() {
        for n in 0..=10 {
            for m in 0..=10 {
                for k in 0..=(n + m + 1) {
                    assert_eq!(f_kernel_value(n, m, k), f_kernel_value(m, n, k));
                    if k < n + m {
                        let df = BigRational::from_integer(odd_double_factorial(n) * odd_double_factorial(m));
                        assert_eq!(f_kernel_normalized(n, m, k).unwrap(), df * beta_coeff(n + m - k));
                    }
                }
            }
        }
    }

    #[test]
    fn concurrent_tables_agree() {
        let handles: Vec<_> = (0..8)
            .map(|i| std::thread::spawn(move || (0..40u32).map(|l| beta_coeff((l + i) % 40)).collect::<Vec<_>>()))
            .collect();
        let serial: Vec<_> = (0..40u32).map(beta_coeff).collect();
        for (i, h) in handles.into_iter().enumerate() {
            let mut got = h.join().unwrap();
            got.rotate_right(i);
            assert_eq!(got, serial);
        }
        assert!(BetaTable::new(40).is_consistent());
    }
}
