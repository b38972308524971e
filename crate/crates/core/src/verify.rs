//! Verification suites shared by the `verify` subcommand and the test targets.

use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::engine::{enumerate_keys, Engine};
use crate::kernels::{eval_d, eval_h, eval_r, verify_corollary, verify_p_exponential, KernelEvalConfig};
use crate::oracles::{dilaton_check, dvv_intersection, oracle_intersection, string_check};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            label: label.into(),
            passed,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} [{}] {} {}", self.name, c.label, c.detail)?;
        }
        write!(f, "{}: {}/{} passed", self.name, self.passed(), self.checks.len())
    }
}

/// Engine vs the independent DVV recursion for every `k0 = 0` key with
/// `3g - 3 + n <= max_dim`.
pub fn dvv_suite(engine: &Engine, max_dim: u32) -> SuiteReport {
    let mut report = SuiteReport {
        name: "dvv",
        checks: Vec::new(),
    };
    for key in enumerate_keys(max_dim, max_dim / 3 + 1, max_dim + 3) {
        if key.kappa_power() != 0 {
            continue;
        }
        let ours = engine.intersection_number(&key);
        match dvv_intersection(key.genus(), key.psi_exponents()) {
            Ok(theirs) => report.push(key.to_string(), ours == theirs, format!("{ours} vs {theirs}")),
            Err(e) => report.push(key.to_string(), false, e.to_string()),
        }
    }
    report
}

/// Engine vs kappa reduction + DVV for keys with `3g - 3 + n <= max_dim`
/// and `1 <= k0 <= max_k0`.
pub fn kappa_suite(engine: &Engine, max_dim: u32, max_k0: u32) -> SuiteReport {
    let mut report = SuiteReport {
        name: "kappa",
        checks: Vec::new(),
    };
    for key in enumerate_keys(max_dim, max_dim / 3 + 1, max_dim + 3) {
        if key.kappa_power() == 0 || key.kappa_power() > max_k0 {
            continue;
        }
        let ours = engine.intersection_number(&key);
        match oracle_intersection(&key) {
            Ok(theirs) => report.push(key.to_string(), ours == theirs, format!("{ours} vs {theirs}")),
            Err(e) => report.push(key.to_string(), false, e.to_string()),
        }
    }
    report
}

/// String and dilaton equations, via the DVV oracle: every dimension-matching
/// pure-psi key with `3g - 3 + n <= max_dim` that carries a `tau0` (string)
/// or `tau1` (dilaton) and stays stable once that point is removed.
pub fn string_dilaton_suite(max_dim: u32) -> SuiteReport {
    let mut report = SuiteReport {
        name: "string-dilaton",
        checks: Vec::new(),
    };
    for key in enumerate_keys(max_dim, max_dim / 3 + 1, max_dim + 3) {
        if key.kappa_power() != 0 {
            continue;
        }
        let (g, ks) = (key.genus(), key.psi_exponents());
        for (name, removed) in [("string", 0u32), ("dilaton", 1u32)] {
            let Some(pos) = ks.iter().position(|&k| k == removed) else {
                continue;
            };
            let mut rest = ks.to_vec();
            rest.remove(pos);
            if !crate::correlator::is_stable(g, rest.len()) {
                continue;
            }
            let result = if removed == 0 {
                string_check(g, &rest)
            } else {
                dilaton_check(g, &rest)
            };
            let label = format!("{name} {key}");
            match result {
                Ok(ok) => report.push(label, ok, ""),
                Err(e) => report.push(label, false, e.to_string()),
            }
        }
    }
    report
}

/// The engine's own values satisfy string and dilaton for pure-psi keys with
/// `3g - 3 + n <= max_dim` (the larger space).
pub fn engine_string_dilaton_suite(engine: &Engine, max_dim: u32) -> SuiteReport {
    use crate::correlator::CorrelatorKey;
    use num_rational::BigRational;
    use num_traits::Zero;

    let mut report = SuiteReport {
        name: "engine-string-dilaton",
        checks: Vec::new(),
    };
    for key in enumerate_keys(max_dim, max_dim / 3 + 1, max_dim + 3) {
        if key.kappa_power() != 0 {
            continue;
        }
        let ks = key.psi_exponents();
        let g = key.genus();
        let n = ks.len();
        let value = engine.intersection_number(&key);
        for (pos, &k) in ks.iter().enumerate() {
            if k > 1 || !crate::correlator::is_stable(g, n - 1) {
                continue;
            }
            // remove one point with exponent k (first occurrence is enough)
            if ks[..pos].contains(&k) {
                continue;
            }
            let mut rest = ks.to_vec();
            rest.remove(pos);
            let rhs = if k == 0 {
                let mut acc = BigRational::zero();
                for j in 0..rest.len() {
                    if rest[j] == 0 {
                        continue;
                    }
                    let mut sub = rest.clone();
                    sub[j] -= 1;
                    acc += engine.intersection_number(&CorrelatorKey::new(g, 0, sub).expect("stable"));
                }
                acc
            } else {
                let factor = BigRational::from_integer((2 * i64::from(g) - 2 + rest.len() as i64).into());
                factor * engine.intersection_number(&CorrelatorKey::new(g, 0, rest).expect("stable"))
            };
            let name = if k == 0 { "string" } else { "dilaton" };
            report.push(format!("{name} {key}"), value == rhs, format!("{value} vs {rhs}"));
        }
    }
    report
}

/// Numerical checks of the McShane kernels and the kernel coefficients.
/// `series_tol` applies to the series check, `p_tol` to the nested
/// quadrature check.
pub fn kernel_suite(series_tol: f64, p_tol: f64) -> SuiteReport {
    let mut report = SuiteReport {
        name: "kernel",
        checks: Vec::new(),
    };

    let cfg = KernelEvalConfig::with_tolerance(series_tol);
    for n in 0..=3u32 {
        for m in 0..=3u32 {
            for k in 0..=(n + m) {
                let label = format!("kernel series n={n} m={m} k={k}");
                match verify_corollary(n, m, k, &cfg) {
                    Ok((c, s)) => report.push(label, (c - s).abs() <= series_tol, format!("{c:.12e} vs {s:.12e}")),
                    Err(e) => report.push(label, false, e.to_string()),
                }
            }
        }
    }

    let cfg = KernelEvalConfig::with_tolerance(p_tol);
    for n in 0..=3u32 {
        for alpha in [0.5, 1.0, 2.0] {
            for x in [0.0, 1.0] {
                let label = format!("p-exponential n={n} alpha={alpha} x={x}");
                match verify_p_exponential(n, alpha, x, &cfg) {
                    Ok((c, v)) => report.push(label, (c - v).abs() <= p_tol, format!("{c:.12e} vs {v:.12e}")),
                    Err(e) => report.push(label, false, e.to_string()),
                }
            }
        }
    }

    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.random_range(-50.0..=50.0);
        worst = worst.max((eval_h(x) + eval_h(-x) - 2.0).abs());
    }
    report.push(
        "h(x) + h(-x) = 2 on 1000 points",
        worst <= 4.0 * f64::EPSILON,
        format!("max error {worst:e}"),
    );

    let cfg = KernelEvalConfig::default();
    let mut worst: f64 = 0.0;
    for i in 1..=10 {
        for j in 0..=10 {
            let (x, z) = (i as f64, j as f64);
            let r = eval_r(x, 0.0, z, &cfg).expect("x > 0");
            let d = eval_d(x, 0.0, z, &cfg).expect("x > 0");
            worst = worst.max((r - d).abs());
        }
    }
    report.push(
        "R(x,0,z) = D(x,0,z) on (0,10]x[0,10]",
        worst <= 1e-12,
        format!("max difference {worst:e}"),
    );
    report
}
